//! Built-in dependency atoms (native semantics and Σ¹₁(FOC²) definitions),
//! user-defined generalized atoms, property probes, and the two-variable
//! normalization rewrites.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{enumerate_small_teams, enumerate_teams, ElemId, Structure, Team};
use crate::semantics::{sigma11_satisfies, EvalError};
use crate::syntax::{AtomSignature, BuiltinAtom, Formula, Layer, SyntaxError, Variable, Vocabulary};

/// Evidence level of an atom property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyStatus {
    /// Trusted (proved on paper, or declared by the registering user).
    Asserted,
    /// A concrete counterexample is known.
    Refuted,
    Unknown,
}

/// A named generalized atom: signature, defining Σ¹₁(FOC^k) sentence over
/// placeholder relations R1,…,Rn, and property flags.
#[derive(Debug, Clone)]
pub struct GeneralizedAtomDef {
    pub signature: AtomSignature,
    /// Sentence over placeholders `R1..Rn` of arities matching the signature.
    pub definition: Formula,
    /// Variable budget: the definition uses at most k distinct FO variables.
    pub k: usize,
    pub downward_closed: PropertyStatus,
    pub substructure_closed: PropertyStatus,
    pub universe_independent: PropertyStatus,
}

impl GeneralizedAtomDef {
    pub fn new(name: &str, ty: Vec<usize>, k: usize, definition: Formula) -> Self {
        GeneralizedAtomDef {
            signature: AtomSignature::new(name, ty),
            definition,
            k,
            downward_closed: PropertyStatus::Unknown,
            substructure_closed: PropertyStatus::Unknown,
            universe_independent: PropertyStatus::Unknown,
        }
    }

    fn with_flags(
        mut self,
        downward: PropertyStatus,
        substructure: PropertyStatus,
        universe: PropertyStatus,
    ) -> Self {
        self.downward_closed = downward;
        self.substructure_closed = substructure;
        self.universe_independent = universe;
        self
    }
}

/// Placeholder relation name `R1`, `R2`, ….
fn placeholder(j: usize) -> String {
    format!("R{}", j + 1)
}

fn placeholder_vocab(ty: &[usize]) -> Vocabulary {
    let mut v = Vocabulary::new();
    for (j, &arity) in ty.iter().enumerate() {
        v.add(&placeholder(j), arity).unwrap();
    }
    v
}

// ---------------------------------------------------------------------------
// Built-in atoms

/// Native semantics of the built-in atoms, straight from their defining
/// clauses. Independent of the structure's relations.
pub fn eval_builtin(team: &Team, atom: &BuiltinAtom) -> Result<bool, EvalError> {
    let idx = |vars: &[Variable]| -> Result<Vec<usize>, EvalError> {
        vars.iter()
            .map(|v| team.var_index(v).ok_or_else(|| EvalError::UnboundVariable(v.0.clone())))
            .collect()
    };
    let values = |row: &[ElemId], idx: &[usize]| -> Vec<ElemId> {
        idx.iter().map(|&i| row[i]).collect()
    };
    match atom {
        BuiltinAtom::Dep { args } => {
            let (y, xs) = args.split_last().expect("dep atom has at least one variable");
            let xi = idx(xs)?;
            let yi = idx(std::slice::from_ref(y))?[0];
            for s in team.rows() {
                for s2 in team.rows() {
                    if values(s, &xi) == values(s2, &xi) && s[yi] != s2[yi] {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        BuiltinAtom::Inc { left, right } => {
            if left.len() != right.len() {
                return Err(EvalError::SignatureMismatch);
            }
            let li = idx(left)?;
            let ri = idx(right)?;
            let rhs: BTreeSet<Vec<ElemId>> = team.rows().map(|s| values(s, &ri)).collect();
            Ok(team.rows().all(|s| rhs.contains(&values(s, &li))))
        }
        BuiltinAtom::Exc { left, right } => {
            if left.len() != right.len() {
                return Err(EvalError::SignatureMismatch);
            }
            let li = idx(left)?;
            let ri = idx(right)?;
            let rhs: BTreeSet<Vec<ElemId>> = team.rows().map(|s| values(s, &ri)).collect();
            Ok(team.rows().all(|s| !rhs.contains(&values(s, &li))))
        }
        BuiltinAtom::Ind { cond, left, right } => {
            let ci = idx(cond)?;
            let li = idx(left)?;
            let ri = idx(right)?;
            for s in team.rows() {
                for s2 in team.rows() {
                    if values(s, &ci) != values(s2, &ci) {
                        continue;
                    }
                    let want_c = values(s, &ci);
                    let want_l = values(s, &li);
                    let want_r = values(s2, &ri);
                    let witness = team.rows().any(|s3| {
                        values(s3, &ci) == want_c
                            && values(s3, &li) == want_l
                            && values(s3, &ri) == want_r
                    });
                    if !witness {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

/// The five generalized atoms of the two-variable normal form, with their
/// Σ¹₁(FOC²) defining sentences:
///   const : ∃≤1x R1(x)
///   dep   : ∀x ∃≤1y R1(x,y)
///   inc   : ∀x∀y (R1(x,y) → R2(x,y))
///   exc   : ∀x∀y (R1(x,y) → ¬R2(x,y))
///   ind   : ∀x∀y ((∃y R1(x,y) ∧ ∃x R1(x,y)) → R1(x,y))
pub fn builtin_definitions() -> BTreeMap<String, GeneralizedAtomDef> {
    use Formula as F;
    let r1x = || F::rel("R1", &["x"]);
    let r1 = || F::rel("R1", &["x", "y"]);
    let r2 = || F::rel("R2", &["x", "y"]);
    let a = PropertyStatus::Asserted;
    let r = PropertyStatus::Refuted;

    let mut out = BTreeMap::new();
    out.insert(
        "const".to_string(),
        GeneralizedAtomDef::new("const", vec![1], 1, F::count_at_most(1, "x", r1x()))
            .with_flags(a, a, a),
    );
    out.insert(
        "dep".to_string(),
        GeneralizedAtomDef::new(
            "dep",
            vec![2],
            2,
            F::forall("x", F::count_at_most(1, "y", r1())),
        )
        .with_flags(a, a, a),
    );
    out.insert(
        "inc".to_string(),
        GeneralizedAtomDef::new(
            "inc",
            vec![2, 2],
            2,
            F::forall("x", F::forall("y", F::implies(r1(), r2()))),
        )
        .with_flags(r, r, a),
    );
    out.insert(
        "exc".to_string(),
        GeneralizedAtomDef::new(
            "exc",
            vec![2, 2],
            2,
            F::forall("x", F::forall("y", F::implies(r1(), F::not(r2())))),
        )
        .with_flags(a, a, a),
    );
    out.insert(
        "ind".to_string(),
        GeneralizedAtomDef::new(
            "ind",
            vec![2],
            2,
            F::forall(
                "x",
                F::forall(
                    "y",
                    F::implies(F::and(F::exists("y", r1()), F::exists("x", r1())), r1()),
                ),
            ),
        )
        .with_flags(r, r, a),
    );
    out
}

/// Maps an arbitrary built-in atom occurrence to a generalized-atom form:
/// the §-level atoms for the binary shapes, and generically synthesized
/// definitions for longer tuples (e.g. the 5-ary inclusion atom). Returns the
/// definition together with the tuple list of the application.
pub fn builtin_translation_atom(atom: &BuiltinAtom) -> (GeneralizedAtomDef, Vec<Vec<Variable>>) {
    use Formula as F;
    let builtins = builtin_definitions();
    let u = |i: usize| format!("u{i}");
    let uvars = |n: usize| -> Vec<Variable> { (0..n).map(|i| Variable::new(u(i))).collect() };
    let a = PropertyStatus::Asserted;
    let r = PropertyStatus::Refuted;
    match atom {
        BuiltinAtom::Dep { args } if args.len() == 1 => {
            (builtins["const"].clone(), vec![args.clone()])
        }
        BuiltinAtom::Dep { args } if args.len() == 2 => {
            (builtins["dep"].clone(), vec![args.clone()])
        }
        BuiltinAtom::Dep { args } => {
            // ∀u1…u_{m-1} ∃≤1 u_m R1(u1,…,u_m)
            let m = args.len();
            let vars = uvars(m);
            let mut body = F::count_at_most(1, u(m - 1), F::RelLit {
                rel: "R1".into(),
                args: vars.clone(),
                positive: true,
            });
            for i in (0..m - 1).rev() {
                body = F::forall(u(i), body);
            }
            let def = GeneralizedAtomDef::new(&format!("dep{m}"), vec![m], m, body)
                .with_flags(a, a, a);
            (def, vec![args.clone()])
        }
        BuiltinAtom::Inc { left, right } if left.len() == 2 => {
            (builtins["inc"].clone(), vec![left.clone(), right.clone()])
        }
        BuiltinAtom::Exc { left, right } if left.len() == 2 => {
            (builtins["exc"].clone(), vec![left.clone(), right.clone()])
        }
        BuiltinAtom::Inc { left, right } | BuiltinAtom::Exc { left, right } => {
            // ∀ū (R1(ū) → [¬]R2(ū)); covers the 5-ary inclusion atom A_5-inc.
            let n = left.len();
            let vars = uvars(n);
            let exc = matches!(atom, BuiltinAtom::Exc { .. });
            let r2 = F::RelLit { rel: "R2".into(), args: vars.clone(), positive: true };
            let mut body = F::implies(
                F::RelLit { rel: "R1".into(), args: vars.clone(), positive: true },
                if exc { F::not(r2) } else { r2 },
            );
            for i in (0..n).rev() {
                body = F::forall(u(i), body);
            }
            let name = format!("{}{}", if exc { "exc" } else { "inc" }, n);
            let def = GeneralizedAtomDef::new(&name, vec![n, n], n, body).with_flags(
                if exc { a } else { r },
                if exc { a } else { r },
                a,
            );
            (def, vec![left.clone(), right.clone()])
        }
        BuiltinAtom::Ind { cond, left, right }
            if cond.is_empty() && left.len() == 1 && right.len() == 1 =>
        {
            (builtins["ind"].clone(), vec![vec![left[0].clone(), right[0].clone()]])
        }
        BuiltinAtom::Ind { cond, left, right } => {
            // ∀ū ((∃ȳ-block R1(ū) ∧ ∃x̄-block R1(ū)) → R1(ū)), where the
            // re-quantified blocks shadow the outer universals.
            let (nc, nl, nr) = (cond.len(), left.len(), right.len());
            let n = nc + nl + nr;
            let vars = uvars(n);
            let r1 = || F::RelLit { rel: "R1".into(), args: vars.clone(), positive: true };
            let mut ex_right = r1();
            for i in (nc + nl..n).rev() {
                ex_right = F::exists(u(i), ex_right);
            }
            let mut ex_left = r1();
            for i in (nc..nc + nl).rev() {
                ex_left = F::exists(u(i), ex_left);
            }
            let mut body = F::implies(F::and(ex_right, ex_left), r1());
            for i in (0..n).rev() {
                body = F::forall(u(i), body);
            }
            let def = GeneralizedAtomDef::new(&format!("ind_{nc}_{nl}_{nr}"), vec![n], n, body)
                .with_flags(r, r, a);
            let tuple = cond.iter().chain(left).chain(right).cloned().collect();
            (def, vec![tuple])
        }
    }
}

/// Evaluates a generalized atom on a team by expanding the placeholder
/// relations with rel(X, ȳⱼ) and model-checking the defining sentence.
pub fn eval_generalized(
    structure: &Structure,
    team: &Team,
    def: &GeneralizedAtomDef,
    tuples: &[Vec<Variable>],
) -> Result<bool, EvalError> {
    let ty = &def.signature.ty;
    if tuples.len() != ty.len() || tuples.iter().zip(ty).any(|(t, &i)| t.len() != i) {
        return Err(EvalError::SignatureMismatch);
    }
    // A fresh structure over the placeholders only: the defining sentence
    // mentions nothing else, and this avoids clashes with base relations.
    let names = (0..structure.size()).map(|e| structure.name(e).to_string()).collect();
    let mut expanded = Structure::new(names, placeholder_vocab(ty))?;
    for (j, tuple) in tuples.iter().enumerate() {
        for row in team.rel_of(tuple)? {
            expanded.add_tuple(&placeholder(j), row)?;
        }
    }
    sigma11_satisfies(&expanded, &def.definition)
}

// ---------------------------------------------------------------------------
// Registry

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AtomDefError {
    #[error("atom `{0}` is already registered")]
    Duplicate(String),
    #[error("atom names starting with `_` are reserved")]
    ReservedName,
    #[error("definition uses {used} distinct variables but declares k={k}")]
    TooManyVariables { used: usize, k: usize },
    #[error("invalid atom definition JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Immutable-after-registration collection of generalized atom definitions.
#[derive(Debug, Clone, Default)]
pub struct AtomRegistry {
    defs: BTreeMap<String, GeneralizedAtomDef>,
}

impl AtomRegistry {
    pub fn new() -> Self {
        AtomRegistry::default()
    }

    /// A registry preloaded with the five built-in atoms under the names
    /// `const`, `dep`, `inc`, `exc`, `ind` (as used by `@name` applications
    /// and by the two-variable normal form).
    pub fn with_builtins() -> Self {
        AtomRegistry { defs: builtin_definitions() }
    }

    pub fn register(&mut self, def: GeneralizedAtomDef) -> Result<(), AtomDefError> {
        let name = def.signature.name.clone();
        if name.starts_with('_') {
            return Err(AtomDefError::ReservedName);
        }
        if self.defs.contains_key(&name) {
            return Err(AtomDefError::Duplicate(name));
        }
        let used = def.definition.all_variables().len();
        if used > def.k {
            return Err(AtomDefError::TooManyVariables { used, k: def.k });
        }
        self.defs.insert(name, def);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&GeneralizedAtomDef> {
        self.defs.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &GeneralizedAtomDef)> {
        self.defs.iter().map(|(n, d)| (n.as_str(), d))
    }

    /// Signature map in the shape the parser expects.
    pub fn signatures(&self) -> BTreeMap<String, AtomSignature> {
        self.defs.iter().map(|(n, d)| (n.clone(), d.signature.clone())).collect()
    }
}

#[derive(Debug, Deserialize)]
struct AtomDefJson {
    name: String,
    #[serde(rename = "type")]
    ty: Vec<usize>,
    k: usize,
    definition: String,
    #[serde(default)]
    properties: BTreeMap<String, PropertyStatus>,
}

/// Parses the external atom definition format:
/// `{"name":"myatom","type":[2,2],"k":2,"definition":"SOE S:1. ..."}`,
/// where `R1..Rn` are the reserved placeholder relation names.
pub fn parse_atom_def(value: &serde_json::Value) -> Result<GeneralizedAtomDef, AtomDefError> {
    let aj: AtomDefJson =
        serde_json::from_value(value.clone()).map_err(|e| AtomDefError::Json(e.to_string()))?;
    if aj.ty.is_empty() || aj.ty.iter().any(|&i| i == 0) || aj.k == 0 {
        return Err(AtomDefError::Json("type entries and k must be positive".into()));
    }
    let vocab = placeholder_vocab(&aj.ty);
    let definition =
        crate::syntax::parse_formula(&aj.definition, &vocab, Layer::Sigma11, &BTreeMap::new())?;
    let mut def = GeneralizedAtomDef::new(&aj.name, aj.ty, aj.k, definition);
    let used = def.definition.all_variables().len();
    if used > def.k {
        return Err(AtomDefError::TooManyVariables { used, k: def.k });
    }
    for (prop, status) in aj.properties {
        match prop.as_str() {
            "downward_closed" => def.downward_closed = status,
            "substructure_closed" => def.substructure_closed = status,
            "universe_independent" => def.universe_independent = status,
            other => return Err(AtomDefError::Json(format!("unknown property `{other}`"))),
        }
    }
    Ok(def)
}

// ---------------------------------------------------------------------------
// Property probes

#[derive(Debug, Clone, Serialize)]
pub struct ProbeWitness {
    pub domain_size: usize,
    pub vars: Vec<String>,
    pub rows: Vec<Vec<ElemId>>,
    pub detail: WitnessDetail,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessDetail {
    /// The atom holds on `rows` but fails on this subteam.
    Subteam { rows: Vec<Vec<ElemId>> },
    /// The atom holds on `rows` but fails after restricting structure and
    /// team to the listed elements.
    Restriction { kept: Vec<ElemId> },
    /// The atom's value changes when the codomain is enlarged to this size.
    OtherUniverse { size: usize },
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    /// No counterexample found — evidence, not proof.
    HoldsUpTo(usize),
    Refuted(ProbeWitness),
}

impl ProbeOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, ProbeOutcome::HoldsUpTo(_))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub atom: String,
    pub max_size: usize,
    /// Per-size cap on enumerated team rows ("exhaustive" when it covers the
    /// whole team space).
    pub row_cap: Vec<(usize, Option<usize>)>,
    pub downward_closed: ProbeOutcome,
    pub substructure_closed: ProbeOutcome,
    pub universe_independent: ProbeOutcome,
}

/// Exhaustively checks downward closure, substructure closure and universe
/// independence of an atom definition over all domains up to `max_size` and
/// teams over the atom's (fully generic) variables plus one auxiliary
/// variable. Large team spaces are truncated to a row cap chosen under a
/// fixed enumeration budget.
pub fn probe_properties(
    def: &GeneralizedAtomDef,
    max_size: usize,
) -> Result<ProbeReport, EvalError> {
    assert!(max_size >= 1);
    // Generic application: distinct variables in every tuple position, plus
    // one auxiliary variable not mentioned by the atom (restriction can
    // remove rows through it, which some refutations require).
    let tuples: Vec<Vec<Variable>> = {
        let mut i = 0;
        def.signature
            .ty
            .iter()
            .map(|&len| {
                (0..len)
                    .map(|_| {
                        i += 1;
                        Variable::new(format!("v{i}"))
                    })
                    .collect()
            })
            .collect()
    };
    let mut vars: Vec<Variable> = tuples.iter().flatten().cloned().collect();
    vars.push(Variable::new("w"));

    let mut downward = ProbeOutcome::HoldsUpTo(max_size);
    let mut substructure = ProbeOutcome::HoldsUpTo(max_size);
    let mut universe = ProbeOutcome::HoldsUpTo(max_size);
    let mut row_cap = Vec::new();

    for size in 1..=max_size {
        let structure = Structure::with_size(size, Vocabulary::new())?;
        let space = size.pow(vars.len() as u32);
        let cap = row_budget(space);
        row_cap.push((size, cap));
        let teams: Vec<Team> = match cap {
            None => enumerate_teams(&structure, &vars).collect(),
            Some(r) => enumerate_small_teams(&structure, &vars, r),
        };
        for team in &teams {
            let here = eval_generalized(&structure, team, def, &tuples)?;

            if universe.holds() {
                for other in size + 1..=max_size {
                    let bigger = Structure::with_size(other, Vocabulary::new())?;
                    if eval_generalized(&bigger, team, def, &tuples)? != here {
                        universe = ProbeOutcome::Refuted(witness(
                            size,
                            &vars,
                            team,
                            WitnessDetail::OtherUniverse { size: other },
                        ));
                        break;
                    }
                }
            }
            if !here {
                continue;
            }
            if downward.holds() && team.len() <= 12 {
                for sub in team.subteams() {
                    if sub.len() < team.len()
                        && !eval_generalized(&structure, &sub, def, &tuples)?
                    {
                        downward = ProbeOutcome::Refuted(witness(
                            size,
                            &vars,
                            team,
                            WitnessDetail::Subteam { rows: sub.rows().cloned().collect() },
                        ));
                        break;
                    }
                }
            }
            if substructure.holds() {
                for kept in proper_subsets(size) {
                    let restricted = structure.restrict(&kept)?;
                    let sub_team = team.restrict_remap(&kept);
                    if !eval_generalized(&restricted, &sub_team, def, &tuples)? {
                        substructure = ProbeOutcome::Refuted(witness(
                            size,
                            &vars,
                            team,
                            WitnessDetail::Restriction { kept: kept.iter().copied().collect() },
                        ));
                        break;
                    }
                }
            }
            if !downward.holds() && !substructure.holds() && !universe.holds() {
                break;
            }
        }
    }
    Ok(ProbeReport {
        atom: def.signature.name.clone(),
        max_size,
        row_cap,
        downward_closed: downward,
        substructure_closed: substructure,
        universe_independent: universe,
    })
}

fn witness(size: usize, vars: &[Variable], team: &Team, detail: WitnessDetail) -> ProbeWitness {
    let _ = vars;
    ProbeWitness {
        domain_size: size,
        vars: team.vars().iter().map(|v| v.0.clone()).collect(),
        rows: team.rows().cloned().collect(),
        detail,
    }
}

/// None = enumerate the full team space; Some(r) = teams of at most r rows.
fn row_budget(space: usize) -> Option<usize> {
    if space <= 16 {
        return None;
    }
    const BUDGET: u128 = 300_000;
    let mut best = 1;
    for r in 1..=4usize {
        let mut total: u128 = 1;
        let mut binom: u128 = 1;
        for i in 1..=r {
            binom = binom * (space as u128 - i as u128 + 1) / i as u128;
            total += binom;
        }
        if total <= BUDGET {
            best = r;
        }
    }
    Some(best)
}

fn proper_subsets(size: usize) -> Vec<BTreeSet<ElemId>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << size) - 1 {
        out.push((0..size).filter(|&e| mask >> e & 1 == 1).collect());
    }
    out
}

// ---------------------------------------------------------------------------
// Two-variable normalization (Theorem 5 rewrites)

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("normalization requires a two-variable formula")]
    NotTwoVariable,
}

/// Rewrites every built-in atom of a two-variable team-layer formula into the
/// finite repertoire of applications of `const`, `dep`, `inc`, `exc`, `ind`
/// plus FO literals: dependence atoms are deduplicated or collapsed to a
/// tautology, inclusion/exclusion atoms are brought to the (2,2) form, and
/// independence atoms are reduced through the equivalence tables.
pub fn normalize_builtin(f: &Formula) -> Result<Formula, NormalizeError> {
    let vars: Vec<Variable> = f.all_variables().into_iter().collect();
    if vars.len() > 2 {
        return Err(NormalizeError::NotTwoVariable);
    }
    Ok(rewrite(f, &vars))
}

fn rewrite(f: &Formula, vars: &[Variable]) -> Formula {
    match f {
        Formula::Builtin(atom) => rewrite_atom(atom, vars),
        Formula::And(a, b) => Formula::and(rewrite(a, vars), rewrite(b, vars)),
        Formula::Or(a, b) => Formula::or(rewrite(a, vars), rewrite(b, vars)),
        Formula::Exists(x, b) => Formula::Exists(x.clone(), Box::new(rewrite(b, vars))),
        Formula::Forall(x, b) => Formula::Forall(x.clone(), Box::new(rewrite(b, vars))),
        other => other.clone(),
    }
}

fn app(name: &str, tuples: Vec<Vec<Variable>>) -> Formula {
    Formula::AtomApp { name: name.to_string(), tuples }
}

/// A team-layer tautology mentioning only `v`.
fn trivially_true(v: &Variable) -> Formula {
    Formula::EqLit { left: v.clone(), right: v.clone(), positive: true }
}

fn rewrite_atom(atom: &BuiltinAtom, vars: &[Variable]) -> Formula {
    match atom {
        BuiltinAtom::Dep { args } => {
            let (y, xs) = args.split_last().unwrap();
            let mut seen = BTreeSet::new();
            let dedup: Vec<Variable> =
                xs.iter().filter(|v| seen.insert((*v).clone())).cloned().collect();
            if dedup.contains(y) {
                // dep(x̄,y) with y ∈ x̄ is equivalent to y=y.
                trivially_true(y)
            } else if dedup.is_empty() {
                app("const", vec![vec![y.clone()]])
            } else {
                // Two-variable mode: at most one determining variable remains.
                app("dep", vec![vec![dedup[0].clone(), y.clone()]])
            }
        }
        BuiltinAtom::Inc { left, right } => rewrite_inc_exc(left, right, false, vars),
        BuiltinAtom::Exc { left, right } => rewrite_inc_exc(left, right, true, vars),
        BuiltinAtom::Ind { cond, left, right } => rewrite_ind(cond, left, right),
    }
}

/// Inclusion/exclusion reduction to type (2,2) via the equality pattern the
/// atom imposes between (s(x), s(y), s'(x), s'(y)). Two atoms with the same
/// induced partition are equivalent; the all-in-one partition degenerates to
/// the literal x=y (inclusion) or x≠y (exclusion).
fn rewrite_inc_exc(left: &[Variable], right: &[Variable], exc: bool, vars: &[Variable]) -> Formula {
    let rank = |v: &Variable| vars.iter().position(|w| w == v).unwrap();
    // Slots: 0 = s(vars[0]), 1 = s(vars[1]), 2 = s'(vars[0]), 3 = s'(vars[1]).
    let mut dsu = Dsu::new(4);
    for (l, r) in left.iter().zip(right) {
        dsu.union(rank(l), 2 + rank(r));
    }
    let partition = dsu.canonical();
    if partition.iter().all(|&c| c == partition[0]) {
        let (x, y) = (vars[0].clone(), vars[1].clone());
        return Formula::EqLit { left: x, right: y, positive: !exc };
    }
    for u1 in vars {
        for u2 in vars {
            for v1 in vars {
                for v2 in vars {
                    let mut cand = Dsu::new(4);
                    cand.union(rank(u1), 2 + rank(v1));
                    cand.union(rank(u2), 2 + rank(v2));
                    if cand.canonical() == partition {
                        return app(
                            if exc { "exc" } else { "inc" },
                            vec![vec![u1.clone(), u2.clone()], vec![v1.clone(), v2.clone()]],
                        );
                    }
                }
            }
        }
    }
    unreachable!("every reachable equality pattern is realized by a (2,2) atom")
}

/// Independence reduction via the Theorem-5 tables: tuples are deduplicated
/// and sorted, conditioned variables are dropped from both sides, trivially
/// true shapes collapse to a tautology, and the survivors map onto
/// const/dep/ind applications.
fn rewrite_ind(cond: &[Variable], left: &[Variable], right: &[Variable]) -> Formula {
    let canon = |vs: &[Variable]| -> Vec<Variable> {
        let set: BTreeSet<Variable> = vs.iter().cloned().collect();
        set.into_iter().collect()
    };
    // The degenerate atom with all tuples empty is trivially true; it names
    // no variable, so fall back to the paper's sentence form ∃x x=x.
    let Some(some_var) = cond.iter().chain(left).chain(right).next() else {
        let x = Variable::new("x");
        return Formula::exists("x", trivially_true(&x));
    };
    let z = canon(cond);
    let mut l: Vec<Variable> = canon(left).into_iter().filter(|v| !z.contains(v)).collect();
    let mut r: Vec<Variable> = canon(right).into_iter().filter(|v| !z.contains(v)).collect();
    // x̄ ⊥_z̄ ȳ ≡ ȳ ⊥_z̄ x̄: order the sides canonically.
    if r < l {
        std::mem::swap(&mut l, &mut r);
    }
    if l.is_empty() || r.is_empty() {
        return trivially_true(some_var);
    }
    if !z.is_empty() {
        // Two-variable mode: z̄ is one variable and both sides reduce to the
        // other, giving w ⊥_v w ≡ dep(v,w).
        let v = z[0].clone();
        let w = l[0].clone();
        return app("dep", vec![vec![v, w]]);
    }
    let shared: Vec<Variable> = l.iter().filter(|v| r.contains(v)).cloned().collect();
    if shared.is_empty() {
        return app("ind", vec![vec![l[0].clone(), r[0].clone()]]);
    }
    if l == r {
        if l.len() == 1 {
            return app("const", vec![vec![l[0].clone()]]);
        }
        return Formula::and(
            app("const", vec![vec![l[0].clone()]]),
            app("const", vec![vec![l[1].clone()]]),
        );
    }
    // One side is the shared singleton, the other mentions both variables:
    // v ⊥ (x,y) with v shared collapses to const(v).
    app("const", vec![vec![shared[0].clone()]])
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu((0..n).collect())
    }
    fn find(&mut self, i: usize) -> usize {
        if self.0[i] != i {
            let root = self.find(self.0[i]);
            self.0[i] = root;
        }
        self.0[i]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra.max(rb)] = ra.min(rb);
    }
    /// Partition as the vector of class representatives per element.
    fn canonical(&mut self) -> Vec<usize> {
        (0..self.0.len()).map(|i| self.find(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    fn v(n: &str) -> Variable {
        Variable::new(n)
    }

    fn team_of(vars: &[&str], rows: &[&[ElemId]]) -> Team {
        let mut t = Team::empty(vars.iter().map(|n| v(n)).collect());
        for row in rows {
            t.insert_row(row.to_vec());
        }
        t
    }

    fn parse_atom(text: &str) -> BuiltinAtom {
        let vocab = Vocabulary::new();
        let f =
            parse_formula(text, &vocab, Layer::Team, &BTreeMap::new()).unwrap();
        match f {
            Formula::Builtin(b) => b,
            other => panic!("expected builtin atom, got {other:?}"),
        }
    }

    #[test]
    fn builtin_native_semantics() {
        // exc: single pair with distinct values
        let t = team_of(&["x", "y"], &[&[0, 1]]);
        assert!(eval_builtin(&t, &parse_atom("exc(x; y)")).unwrap());
        // inc: x ⊆ y fails when the x-value never occurs as a y-value
        assert!(!eval_builtin(&t, &parse_atom("inc(x; y)")).unwrap());
        // ind: diagonal team is not independent
        let t = team_of(&["x", "y"], &[&[0, 0], &[1, 1]]);
        assert!(!eval_builtin(&t, &parse_atom("ind(; x; y)")).unwrap());
        // full product is
        let t = team_of(&["x", "y"], &[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
        assert!(eval_builtin(&t, &parse_atom("ind(; x; y)")).unwrap());
        // conditional independence relativizes to z-groups
        let t = team_of(&["x", "y", "z"], &[&[0, 0, 0], &[1, 1, 1]]);
        assert!(eval_builtin(&t, &parse_atom("ind(z; x; y)")).unwrap());
    }

    #[test]
    fn definitions_match_native_semantics_exhaustively() {
        let defs = builtin_definitions();
        let structure = Structure::with_size(2, Vocabulary::new()).unwrap();
        let cases: Vec<(&str, BuiltinAtom, Vec<Vec<Variable>>)> = vec![
            ("const", parse_atom("dep(x)"), vec![vec![v("x")]]),
            ("dep", parse_atom("dep(x,y)"), vec![vec![v("x"), v("y")]]),
            (
                "inc",
                parse_atom("inc(x,y; y,x)"),
                vec![vec![v("x"), v("y")], vec![v("y"), v("x")]],
            ),
            (
                "exc",
                parse_atom("exc(x,y; y,x)"),
                vec![vec![v("x"), v("y")], vec![v("y"), v("x")]],
            ),
            ("ind", parse_atom("ind(; x; y)"), vec![vec![v("x"), v("y")]]),
        ];
        for (name, atom, tuples) in cases {
            for team in enumerate_teams(&structure, &[v("x"), v("y")]) {
                let native = eval_builtin(&team, &atom).unwrap();
                let defined =
                    eval_generalized(&structure, &team, &defs[name], &tuples).unwrap();
                assert_eq!(native, defined, "{name} on {team:?}");
            }
        }
    }

    #[test]
    fn const_definition_rejects_two_values() {
        let defs = builtin_definitions();
        let structure = Structure::with_size(2, Vocabulary::new()).unwrap();
        let team = team_of(&["x"], &[&[0], &[1]]);
        assert!(!eval_generalized(&structure, &team, &defs["const"], &[vec![v("x")]]).unwrap());
    }

    #[test]
    fn synthesized_five_ary_inclusion() {
        let left: Vec<Variable> = (0..5).map(|i| v(&format!("a{i}"))).collect();
        let right: Vec<Variable> = (0..5).map(|i| v(&format!("b{i}"))).collect();
        let atom = BuiltinAtom::Inc { left: left.clone(), right: right.clone() };
        let (def, tuples) = builtin_translation_atom(&atom);
        assert_eq!(def.signature.ty, vec![5, 5]);
        let structure = Structure::with_size(2, Vocabulary::new()).unwrap();
        let all: Vec<Variable> = left.iter().chain(&right).cloned().collect();
        let mut team = Team::empty(all);
        team.insert_row(vec![0; 10]);
        assert!(eval_generalized(&structure, &team, &def, &tuples).unwrap());
        assert!(eval_builtin(&team, &atom).unwrap());
        let mut team2 = Team::empty(team.vars().to_vec());
        team2.insert_row(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(
            eval_generalized(&structure, &team2, &def, &tuples).unwrap(),
            eval_builtin(&team2, &atom).unwrap()
        );
    }

    #[test]
    fn probe_confirms_dep_and_refutes_inc() {
        let defs = builtin_definitions();
        let dep = probe_properties(&defs["dep"], 2).unwrap();
        assert!(dep.downward_closed.holds());
        assert!(dep.substructure_closed.holds());
        assert!(dep.universe_independent.holds());

        let inc = probe_properties(&defs["inc"], 2).unwrap();
        assert!(!inc.downward_closed.holds());
    }

    #[test]
    fn normalize_dep_examples() {
        let vocab = Vocabulary::new();
        let parse = |t: &str| parse_formula(t, &vocab, Layer::Team, &BTreeMap::new()).unwrap();
        assert_eq!(
            normalize_builtin(&parse("dep(x,x,y)")).unwrap(),
            app("dep", vec![vec![v("x"), v("y")]])
        );
        assert_eq!(normalize_builtin(&parse("dep(x,y,x)")).unwrap(), Formula::eq("x", "x"));
        assert_eq!(
            normalize_builtin(&parse("const(x)")).unwrap(),
            app("const", vec![vec![v("x")]])
        );
    }

    #[test]
    fn normalize_ind_examples() {
        let vocab = Vocabulary::new();
        let parse = |t: &str| parse_formula(t, &vocab, Layer::Team, &BTreeMap::new()).unwrap();
        // x⊥x ≡ A_const(x)
        assert_eq!(
            normalize_builtin(&parse("ind(; x; x)")).unwrap(),
            app("const", vec![vec![v("x")]])
        );
        // y⊥_x y ≡ A_dep(x,y)
        assert_eq!(
            normalize_builtin(&parse("ind(x; y; y)")).unwrap(),
            app("dep", vec![vec![v("x"), v("y")]])
        );
        // x⊥_x y is trivially true
        assert!(matches!(
            normalize_builtin(&parse("ind(x; x; y)")).unwrap(),
            Formula::EqLit { positive: true, .. }
        ));
        // x⊥y ≡ A_ind((x,y))
        assert_eq!(
            normalize_builtin(&parse("ind(; x; y)")).unwrap(),
            app("ind", vec![vec![v("x"), v("y")]])
        );
    }

    #[test]
    fn normalize_inc_examples() {
        let vocab = Vocabulary::new();
        let parse = |t: &str| parse_formula(t, &vocab, Layer::Team, &BTreeMap::new()).unwrap();
        // x ⊆ y becomes (x,x) ⊆ (y,y)
        assert_eq!(
            normalize_builtin(&parse("inc(x; y)")).unwrap(),
            app("inc", vec![vec![v("x"), v("x")], vec![v("y"), v("y")]])
        );
        // (x,y,x) ⊆ (x,y,y) collapses to x=y
        assert_eq!(normalize_builtin(&parse("inc(x,y,x; x,y,y)")).unwrap(), Formula::eq("x", "y"));
        // (x,y,y) ⊆ (y,x,x) becomes (x,y) ⊆ (y,x)
        assert_eq!(
            normalize_builtin(&parse("inc(x,y,y; y,x,x)")).unwrap(),
            app("inc", vec![vec![v("x"), v("y")], vec![v("y"), v("x")]])
        );
        // exclusion analogue of the collapse
        assert_eq!(normalize_builtin(&parse("exc(x,y,x; x,y,y)")).unwrap(), Formula::neq("x", "y"));
    }
}

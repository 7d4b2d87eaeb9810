//! The three evaluators: lax team semantics for the team layer, Tarskian
//! semantics with counting quantifiers for the FOC layer, and brute-force
//! relation guessing for the Σ¹₁ layer.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::atoms::{self, AtomRegistry, PropertyStatus};
use crate::model::{all_tuples, Assignment, ElemId, ModelError, Structure, Team};
use crate::syntax::{Formula, Variable};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("generalized atom `{0}` is not registered")]
    UnknownAtom(String),
    #[error("formula node is not in the team layer")]
    NotTeamLayer,
    #[error("formula node is not first-order")]
    NotFirstOrder,
    #[error("atom application does not match the atom's signature")]
    SignatureMismatch,
    #[error("evaluation resource limit exceeded")]
    ResourceLimit,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Resource ceiling for a single evaluation. `max_cells` bounds the running
/// total of |X| over all visited (formula, team) nodes, since the naive
/// semantics is exponential by design.
#[derive(Debug, Clone, Copy, Default)]
pub struct Limits {
    pub max_cells: Option<u64>,
}

impl Limits {
    pub fn cells(max_cells: u64) -> Limits {
        Limits { max_cells: Some(max_cells) }
    }
}

/// Evaluation context: one structure, one atom registry, a memo table keyed
/// by (formula node, canonical team), and a cell budget. Confined to a single
/// worker; independent contexts over the same structure may run concurrently.
pub struct EvalContext<'a> {
    pub structure: &'a Structure,
    pub registry: &'a AtomRegistry,
    pub limits: Limits,
    optimize: bool,
    cells: u64,
    memo: HashMap<(usize, Team), bool>,
}

impl<'a> EvalContext<'a> {
    pub fn new(structure: &'a Structure, registry: &'a AtomRegistry) -> Self {
        EvalContext {
            structure,
            registry,
            limits: Limits::default(),
            optimize: true,
            cells: 0,
            memo: HashMap::new(),
        }
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    /// Disables memoization and the downward-closure fast paths; evaluation
    /// then follows Definition 2.1 clause by clause.
    pub fn naive(mut self) -> Self {
        self.optimize = false;
        self
    }

    pub fn cells_used(&self) -> u64 {
        self.cells
    }

    /// Lax team satisfaction. The memo is cleared per top-level query because
    /// its keys are node addresses of `f`.
    pub fn team_satisfies(&mut self, team: &Team, f: &Formula) -> Result<bool, EvalError> {
        self.memo.clear();
        self.sat(f, team)
    }

    pub fn sentence_true(&mut self, f: &Formula) -> Result<bool, EvalError> {
        self.team_satisfies(&Team::unit(), f)
    }

    fn charge(&mut self, amount: u64) -> Result<(), EvalError> {
        self.cells = self.cells.saturating_add(amount);
        match self.limits.max_cells {
            Some(max) if self.cells > max => Err(EvalError::ResourceLimit),
            _ => Ok(()),
        }
    }

    fn sat(&mut self, f: &Formula, team: &Team) -> Result<bool, EvalError> {
        self.charge(team.len() as u64 + 1)?;
        // The empty team satisfies every team-layer formula built from
        // literals, built-in atoms, connectives and quantifiers. User-defined
        // atoms are exempt: their defining sentence decides the empty team.
        if self.optimize && team.is_empty() && !contains_atom_app(f) {
            return Ok(true);
        }
        let key = (f as *const Formula as usize, team.clone());
        if self.optimize {
            if let Some(&v) = self.memo.get(&key) {
                return Ok(v);
            }
        }
        let value = self.sat_uncached(f, team)?;
        if self.optimize {
            self.memo.insert(key, value);
        }
        Ok(value)
    }

    fn sat_uncached(&mut self, f: &Formula, team: &Team) -> Result<bool, EvalError> {
        match f {
            Formula::RelLit { .. } | Formula::EqLit { .. } => {
                for row in team.rows() {
                    let s = team.assignment(row);
                    if !fo_literal(self.structure, &s, f)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Builtin(atom) => atoms::eval_builtin(team, atom),
            Formula::AtomApp { name, tuples } => {
                let def = self
                    .registry
                    .get(name)
                    .ok_or_else(|| EvalError::UnknownAtom(name.clone()))?;
                atoms::eval_generalized(self.structure, team, def, tuples)
            }
            Formula::And(a, b) => Ok(self.sat(a, team)? && self.sat(b, team)?),
            Formula::Or(a, b) => self.sat_or(a, b, team),
            Formula::Exists(x, body) => self.sat_exists(x, body, team),
            Formula::Forall(x, body) => {
                let extended = team.extend_universal(self.structure, x);
                self.sat(body, &extended)
            }
            _ => Err(EvalError::NotTeamLayer),
        }
    }

    /// Clause 3 of Def. 2.1: some ordered cover Y ∪ Z = X satisfies both
    /// disjuncts. Covers may overlap (lax semantics), so each row ranges over
    /// {Y only, Z only, both} — 3^|X| candidates. When both disjuncts are
    /// downward closed a cover exists iff a partition does, halving the base.
    fn sat_or(&mut self, a: &Formula, b: &Formula, team: &Team) -> Result<bool, EvalError> {
        let rows: Vec<Vec<ElemId>> = team.rows().cloned().collect();
        let n = rows.len();
        let partitions_suffice = self.optimize
            && is_downward_closed(a, self.registry)
            && is_downward_closed(b, self.registry);
        let base: u64 = if partitions_suffice { 2 } else { 3 };
        let mut combo = vec![0u8; n];
        loop {
            self.charge(1)?;
            let mut y = Team::empty(team.vars().to_vec());
            let mut z = Team::empty(team.vars().to_vec());
            for (i, row) in rows.iter().enumerate() {
                // 0 → Y, 1 → Z, 2 → both.
                if combo[i] != 1 {
                    y.insert_row(row.clone());
                }
                if combo[i] != 0 {
                    z.insert_row(row.clone());
                }
            }
            if self.sat(a, &y)? && self.sat(b, &z)? {
                return Ok(true);
            }
            // advance the mixed-radix counter
            let mut i = 0;
            while i < n {
                combo[i] += 1;
                if u64::from(combo[i]) < base {
                    break;
                }
                combo[i] = 0;
                i += 1;
            }
            if i == n {
                return Ok(false);
            }
        }
    }

    /// Clause 4 of Def. 2.1: some F : X → 𝒫(A)∖{∅} with X[F/x] ⊨ body.
    /// Per-row nonempty value subsets are enumerated lexicographically with
    /// backtracking; for downward-closed bodies singleton choices suffice.
    fn sat_exists(&mut self, x: &Variable, body: &Formula, team: &Team) -> Result<bool, EvalError> {
        let rows: Vec<Vec<ElemId>> = team.rows().cloned().collect();
        let n = rows.len();
        let size = self.structure.size();
        let singletons_suffice = self.optimize && is_downward_closed(body, self.registry);
        let choices: Vec<u32> = if singletons_suffice {
            (0..size as u32).map(|a| 1 << a).collect()
        } else {
            (1u32..(1 << size)).collect()
        };
        let skeleton = team.skeleton_with(x);
        let mut pick = vec![0usize; n];
        loop {
            self.charge(1)?;
            let mut ext = Team::empty(skeleton.vars().to_vec());
            for (i, row) in rows.iter().enumerate() {
                let mask = choices[pick[i]];
                for a in 0..size {
                    if mask >> a & 1 == 1 {
                        ext.insert_row(skeleton.place(team, row, x, a));
                    }
                }
            }
            if self.sat(body, &ext)? {
                return Ok(true);
            }
            let mut i = 0;
            while i < n {
                pick[i] += 1;
                if pick[i] < choices.len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == n {
                return Ok(false);
            }
        }
    }
}

/// Optimized lax team evaluation (memoized, with downward-closure fast paths).
pub fn team_satisfies(
    structure: &Structure,
    team: &Team,
    f: &Formula,
    registry: &AtomRegistry,
    limits: Limits,
) -> Result<bool, EvalError> {
    EvalContext::new(structure, registry).with_limits(limits).team_satisfies(team, f)
}

/// Literal Definition 2.1 evaluation: no memo, no fast paths. Used as the
/// oracle half of the memoized/unmemoized agreement property.
pub fn team_satisfies_naive(
    structure: &Structure,
    team: &Team,
    f: &Formula,
    registry: &AtomRegistry,
    limits: Limits,
) -> Result<bool, EvalError> {
    EvalContext::new(structure, registry).with_limits(limits).naive().team_satisfies(team, f)
}

/// Syntactic downward-closure check used to gate the fast paths: literals,
/// dependence/constancy/exclusion atoms, and ∧/∨/∃/∀ over them. Generalized
/// atoms count only when their registered flag is asserted or probe-confirmed.
pub fn is_downward_closed(f: &Formula, registry: &AtomRegistry) -> bool {
    match f {
        Formula::RelLit { .. } | Formula::EqLit { .. } => true,
        Formula::Builtin(atom) => {
            matches!(atom, crate::syntax::BuiltinAtom::Dep { .. } | crate::syntax::BuiltinAtom::Exc { .. })
        }
        Formula::AtomApp { name, .. } => registry
            .get(name)
            .map(|d| d.downward_closed == PropertyStatus::Asserted)
            .unwrap_or(false),
        Formula::And(a, b) | Formula::Or(a, b) => {
            is_downward_closed(a, registry) && is_downward_closed(b, registry)
        }
        Formula::Exists(_, b) | Formula::Forall(_, b) => is_downward_closed(b, registry),
        _ => false,
    }
}

fn contains_atom_app(f: &Formula) -> bool {
    match f {
        Formula::AtomApp { .. } => true,
        Formula::And(a, b) | Formula::Or(a, b) => contains_atom_app(a) || contains_atom_app(b),
        Formula::Exists(_, b) | Formula::Forall(_, b) => contains_atom_app(b),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Tarskian FOC and Σ¹₁ evaluation

fn fo_literal(structure: &Structure, s: &Assignment, f: &Formula) -> Result<bool, EvalError> {
    match f {
        Formula::RelLit { rel, args, positive } => {
            let tuple = args
                .iter()
                .map(|v| s.get(v).copied().ok_or_else(|| EvalError::UnboundVariable(v.0.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(structure.holds(rel, &tuple) == *positive)
        }
        Formula::EqLit { left, right, positive } => {
            let l =
                s.get(left).copied().ok_or_else(|| EvalError::UnboundVariable(left.0.clone()))?;
            let r =
                s.get(right).copied().ok_or_else(|| EvalError::UnboundVariable(right.0.clone()))?;
            Ok((l == r) == *positive)
        }
        _ => Err(EvalError::NotFirstOrder),
    }
}

struct FoEvaluator {
    steps: u64,
    limits: Limits,
}

impl FoEvaluator {
    fn charge(&mut self) -> Result<(), EvalError> {
        self.steps = self.steps.saturating_add(1);
        match self.limits.max_cells {
            Some(max) if self.steps > max => Err(EvalError::ResourceLimit),
            _ => Ok(()),
        }
    }

    fn eval(
        &mut self,
        structure: &Structure,
        s: &mut Assignment,
        f: &Formula,
    ) -> Result<bool, EvalError> {
        self.charge()?;
        match f {
            Formula::RelLit { .. } | Formula::EqLit { .. } => fo_literal(structure, s, f),
            Formula::And(a, b) => Ok(self.eval(structure, s, a)? && self.eval(structure, s, b)?),
            Formula::Or(a, b) => Ok(self.eval(structure, s, a)? || self.eval(structure, s, b)?),
            Formula::Not(a) => Ok(!self.eval(structure, s, a)?),
            Formula::Implies(a, b) => {
                Ok(!self.eval(structure, s, a)? || self.eval(structure, s, b)?)
            }
            Formula::Iff(a, b) => Ok(self.eval(structure, s, a)? == self.eval(structure, s, b)?),
            Formula::Exists(x, body) => self.count_at_least(structure, s, 1, x, body),
            Formula::Forall(x, body) => {
                let saved = s.get(x).copied();
                for a in structure.domain() {
                    s.insert(x.clone(), a);
                    let ok = self.eval(structure, s, body)?;
                    restore(s, x, saved);
                    if !ok {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::CountExists { min, var, body } => {
                self.count_at_least(structure, s, *min, var, body)
            }
            Formula::SoExists { .. } => self.eval_soe_prefix(structure, s, f),
            _ => Err(EvalError::NotFirstOrder),
        }
    }

    /// Evaluates a maximal prefix of second-order existentials by backtracking
    /// search. The matrix is split into its top-level conjuncts and each
    /// conjunct is checked as soon as every prefixed relation it mentions has
    /// been chosen, so bad candidates are pruned without enumerating the full
    /// product of relation guesses.
    fn eval_soe_prefix(
        &mut self,
        structure: &Structure,
        s: &mut Assignment,
        f: &Formula,
    ) -> Result<bool, EvalError> {
        let mut prefix: Vec<(&str, usize)> = Vec::new();
        let mut cur = f;
        while let Formula::SoExists { rel, arity, body } = cur {
            prefix.push((rel, *arity));
            cur = body;
        }
        let mut clauses = Vec::new();
        flatten_and(cur, &mut clauses);
        // Existential relation quantifiers commute, so the prefix can be
        // reordered to bind each relation right before the clauses that
        // constrain it, which prunes the search enormously. A name bound
        // twice in the prefix would make reordering unsound (inner scopes
        // must win), so keep the original order then. Shadowing a relation
        // of the base structure is harmless: clauses mentioning the name are
        // always scheduled at or after its binding level.
        let names: BTreeSet<&str> = prefix.iter().map(|&(name, _)| name).collect();
        let shadowing = names.len() != prefix.len();
        if !shadowing && prefix.len() <= 14 {
            if let Some(order) = plan_soe_order(structure, &prefix, &clauses) {
                prefix = order;
            }
        }
        // A clause may be checked once the innermost prefixed relation it
        // mentions is bound (max index also resolves shadowed rebindings);
        // clauses mentioning no prefixed relation are checked up front.
        let mut schedule: Vec<Vec<&Formula>> = vec![Vec::new(); prefix.len()];
        for clause in clauses {
            let rels = clause.relation_symbols();
            let level = prefix
                .iter()
                .enumerate()
                .filter(|(_, (name, _))| rels.contains(*name))
                .map(|(i, _)| i)
                .max();
            match level {
                Some(i) => schedule[i].push(clause),
                None => {
                    if !self.eval(structure, s, clause)? {
                        return Ok(false);
                    }
                }
            }
        }
        // Already-bound relations still mentioned by clauses at or below a
        // level; the outcome of the residual search depends only on these, so
        // it can be memoized across branches that agree on them.
        let live: Vec<Vec<&str>> = (0..prefix.len())
            .map(|i| {
                let future: BTreeSet<String> = schedule[i..]
                    .iter()
                    .flatten()
                    .flat_map(|c| c.relation_symbols())
                    .collect();
                prefix[..i]
                    .iter()
                    .map(|&(name, _)| name)
                    .filter(|name| future.contains(*name))
                    .collect()
            })
            .collect();
        let mut memo = HashMap::new();
        self.soe_search(structure, s, &prefix, &schedule, &live, &mut memo, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn soe_search(
        &mut self,
        structure: &Structure,
        s: &mut Assignment,
        prefix: &[(&str, usize)],
        schedule: &[Vec<&Formula>],
        live: &[Vec<&str>],
        memo: &mut HashMap<SoeMemoKey, bool>,
        level: usize,
    ) -> Result<bool, EvalError> {
        if level == prefix.len() {
            return Ok(true);
        }
        let key: SoeMemoKey = (
            level,
            s.clone(),
            live[level]
                .iter()
                .map(|name| structure.tuples(name).cloned().unwrap_or_default())
                .collect(),
        );
        if let Some(&hit) = memo.get(&key) {
            return Ok(hit);
        }
        let (rel, arity) = prefix[level];
        let tuples = all_tuples(structure.size(), arity);
        let bits = tuples.len();
        if bits >= 63 {
            return Err(EvalError::ResourceLimit);
        }
        'cand: for mask in 0u64..(1 << bits) {
            self.charge()?;
            let chosen: BTreeSet<Vec<ElemId>> = tuples
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, t)| t.clone())
                .collect();
            let expanded = structure.expand(rel, arity, chosen)?;
            for clause in &schedule[level] {
                if !self.eval(&expanded, s, clause)? {
                    continue 'cand;
                }
            }
            if self.soe_search(&expanded, s, prefix, schedule, live, memo, level + 1)? {
                memo.insert(key, true);
                return Ok(true);
            }
        }
        memo.insert(key, false);
        Ok(false)
    }

    fn count_at_least(
        &mut self,
        structure: &Structure,
        s: &mut Assignment,
        min: u32,
        x: &Variable,
        body: &Formula,
    ) -> Result<bool, EvalError> {
        if min == 0 {
            return Ok(true);
        }
        let saved = s.get(x).copied();
        let mut count = 0u32;
        for a in structure.domain() {
            s.insert(x.clone(), a);
            let ok = self.eval(structure, s, body)?;
            restore(s, x, saved);
            if ok {
                count += 1;
                if count >= min {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

/// Memo key for the second-order search: level, first-order assignment, and
/// the interpretations of the live bound relations at that level.
type SoeMemoKey = (usize, Assignment, Vec<BTreeSet<Vec<ElemId>>>);

/// Chooses a binding order for the second-order prefix that minimizes the
/// bottleneck of the memoized backtracking search. The cost of a level is
/// (bits of the live bound relations) + (bits of the relation bound there),
/// an upper bound on the log of (memo keys × candidates); a subset DP finds
/// the order minimizing the maximum level cost, then the total.
fn plan_soe_order<'a>(
    structure: &Structure,
    prefix: &[(&'a str, usize)],
    clauses: &[&Formula],
) -> Option<Vec<(&'a str, usize)>> {
    let p = prefix.len();
    let n = structure.size() as u64;
    let bits: Vec<u64> = prefix
        .iter()
        .map(|&(_, arity)| (0..arity).fold(1u64, |acc, _| acc.saturating_mul(n)).min(64))
        .collect();
    // Clause dependencies as bitmasks over prefix positions.
    let deps: Vec<u32> = clauses
        .iter()
        .map(|c| {
            let rels = c.relation_symbols();
            prefix
                .iter()
                .enumerate()
                .filter(|(_, (name, _))| rels.contains(*name))
                .fold(0u32, |m, (i, _)| m | 1 << i)
        })
        .filter(|&m| m != 0)
        .collect();
    let full: u32 = (1u32 << p) - 1;
    // live(bound) = bound relations still mentioned by a pending clause.
    let live_bits = |bound: u32| -> u64 {
        let pending: u32 = deps.iter().filter(|&&d| d & !bound != 0).fold(0, |m, &d| m | d);
        (0..p).filter(|&i| bound & pending & (1 << i) != 0).map(|i| bits[i]).sum()
    };
    // f[bound] = (max level cost, total) for the best completion order.
    let mut f: Vec<(u64, u64)> = vec![(u64::MAX, u64::MAX); (full as usize) + 1];
    let mut pick: Vec<usize> = vec![usize::MAX; (full as usize) + 1];
    f[full as usize] = (0, 0);
    for bound in (0..full).rev() {
        let live = live_bits(bound);
        for r in 0..p {
            if bound & (1 << r) != 0 {
                continue;
            }
            let tail = f[(bound | 1 << r) as usize];
            if tail.0 == u64::MAX {
                continue;
            }
            let here = live + bits[r];
            let cand = (tail.0.max(here), tail.1.saturating_add(here));
            if cand < f[bound as usize] {
                f[bound as usize] = cand;
                pick[bound as usize] = r;
            }
        }
    }
    let mut order = Vec::with_capacity(p);
    let mut bound = 0u32;
    while bound != full {
        let r = pick[bound as usize];
        if r == usize::MAX {
            return None;
        }
        order.push(prefix[r]);
        bound |= 1 << r;
    }
    Some(order)
}

/// Collects the top-level conjuncts of a formula.
fn flatten_and<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::And(a, b) => {
            flatten_and(a, out);
            flatten_and(b, out);
        }
        other => out.push(other),
    }
}

fn restore(s: &mut Assignment, x: &Variable, saved: Option<ElemId>) {
    match saved {
        Some(v) => {
            s.insert(x.clone(), v);
        }
        None => {
            s.remove(x);
        }
    }
}

/// Tarskian evaluation of an FOC-layer formula under an assignment.
pub fn foc_satisfies(
    structure: &Structure,
    s: &Assignment,
    f: &Formula,
) -> Result<bool, EvalError> {
    let mut s = s.clone();
    FoEvaluator { steps: 0, limits: Limits::default() }.eval(structure, &mut s, f)
}

/// Σ¹₁ evaluation: SO-quantified relations are enumerated brute force over
/// all 2^(|A|^arity) candidates, nested, short-circuiting.
pub fn sigma11_satisfies(structure: &Structure, f: &Formula) -> Result<bool, EvalError> {
    sigma11_satisfies_limited(structure, f, Limits::default())
}

pub fn sigma11_satisfies_limited(
    structure: &Structure,
    f: &Formula,
    limits: Limits,
) -> Result<bool, EvalError> {
    let mut s = Assignment::new();
    FoEvaluator { steps: 0, limits }.eval(structure, &mut s, f)
}

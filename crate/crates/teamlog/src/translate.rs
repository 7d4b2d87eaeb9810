//! Compositional translation of team-layer formulas into Σ¹₁(FOC^k):
//! a team-layer formula φ with a k-ary team relation symbol R is mapped to an
//! SOE-prefixed FOC^k sentence tr_k(φ) such that X ⊨ φ iff (A, rel(X)) ⊨
//! tr_k(φ) for every team X with domain {x1,…,xk}.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::atoms::{builtin_translation_atom, AtomRegistry, GeneralizedAtomDef};
use crate::model::{Structure, Team};
use crate::semantics::{sigma11_satisfies, EvalError};
use crate::syntax::{Formula, Variable, Vocabulary};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranslateError {
    #[error("k={k} is too small: the formula uses {needed} distinct variables")]
    KTooSmall { k: usize, needed: usize },
    #[error("atom `{atom}` needs {needed} variables but the translation has k={k}")]
    AtomTooWide { atom: String, needed: usize, k: usize },
    #[error("unknown generalized atom `{0}`")]
    UnknownAtom(String),
    #[error("node `{0}` is not part of the team layer")]
    NotTeamLayer(String),
    #[error("relation `{0}` has no declared arity")]
    UnknownRelation(String),
}

/// Result of translating a team-layer formula: an SOE prefix (fresh symbols,
/// reserved `_` prefix) over an FOC^k matrix in which the team relation
/// symbol and the base vocabulary occur free.
#[derive(Debug, Clone)]
pub struct TranslationOutput {
    /// Second-order prefix, outermost first.
    pub so_prefix: Vec<(String, usize)>,
    /// FOC^k matrix under the prefix.
    pub matrix: Formula,
    /// The free k-ary symbol interpreted as rel(X).
    pub team_rel: String,
    /// Canonical variable tuple (x1,…,xk): the formula's variables in sorted
    /// order, padded with fresh names.
    pub vars: Vec<Variable>,
    pub k: usize,
}

impl TranslationOutput {
    /// The Σ¹₁ formula: prefix folded over the matrix.
    pub fn formula(&self) -> Formula {
        wrap_prefix(&self.so_prefix, self.matrix.clone())
    }
}

fn wrap_prefix(prefix: &[(String, usize)], matrix: Formula) -> Formula {
    prefix.iter().rev().fold(matrix, |body, (rel, arity)| Formula::SoExists {
        rel: rel.clone(),
        arity: *arity,
        body: Box::new(body),
    })
}

/// Source of `_S0, _S1, …` relation symbols; `_`-prefixed names are rejected
/// by the vocabulary builder used for user input, so they cannot clash.
#[derive(Debug, Default)]
struct FreshSymbols(usize);

impl FreshSymbols {
    fn next(&mut self) -> String {
        let n = self.0;
        self.0 += 1;
        format!("_S{n}")
    }
}

/// Translates a team-layer formula. The team relation symbol is emitted as a
/// free symbol in the matrix (interpret it as rel(X) to evaluate).
pub fn translate_formula(
    f: &Formula,
    k: usize,
    registry: &AtomRegistry,
) -> Result<TranslationOutput, TranslateError> {
    let used = f.all_variables();
    if k == 0 || used.len() > k {
        return Err(TranslateError::KTooSmall { k, needed: used.len().max(1) });
    }
    let mut vars: Vec<Variable> = used.into_iter().collect();
    let mut pad = 0;
    while vars.len() < k {
        let cand = Variable::new(format!("_v{pad}"));
        pad += 1;
        if !vars.contains(&cand) {
            vars.push(cand);
        }
    }
    let mut tr = Translator { vars, fresh: FreshSymbols::default(), registry, k };
    let team_rel = tr.fresh.next();
    let (so_prefix, matrix) = tr.tr(f, &team_rel)?;
    Ok(TranslationOutput { so_prefix, matrix, team_rel, vars: tr.vars, k })
}

/// Theorem-2 form for satisfiability: closes the team relation, every base
/// relation of `vocab` occurring in φ, and the tr-prefix under SOE, and
/// conjoins nonemptiness of the team:
/// ∃R ∃R1…Rn ∃S̄ (∃x1…∃xk R(x̄) ∧ matrix).
pub fn translate_sentence(
    f: &Formula,
    vocab: &Vocabulary,
    k: usize,
    registry: &AtomRegistry,
) -> Result<Formula, TranslateError> {
    let out = translate_formula(f, k, registry)?;
    let mut prefix: Vec<(String, usize)> = vec![(out.team_rel.clone(), k)];
    for rel in f.relation_symbols() {
        let arity = vocab.arity(&rel).ok_or(TranslateError::UnknownRelation(rel.clone()))?;
        prefix.push((rel, arity));
    }
    prefix.extend(out.so_prefix.iter().cloned());
    let mut nonempty = Formula::RelLit {
        rel: out.team_rel.clone(),
        args: out.vars.clone(),
        positive: true,
    };
    for v in out.vars.iter().rev() {
        nonempty = Formula::Exists(v.clone(), Box::new(nonempty));
    }
    Ok(wrap_prefix(&prefix, Formula::and(nonempty, out.matrix)))
}

/// Evaluates the right-hand side of the translation equivalence: expands the
/// structure with team_rel ↦ rel(X over the canonical variables) and
/// model-checks the Σ¹₁ formula. The team's domain must contain free(φ) and
/// be contained in the canonical variables; missing ones are universally
/// padded, which is satisfaction-preserving by locality.
pub fn holds_via_translation(
    structure: &Structure,
    team: &Team,
    out: &TranslationOutput,
) -> Result<bool, EvalError> {
    let mut padded = team.clone();
    for v in &out.vars {
        if padded.var_index(v).is_none() {
            padded = padded.extend_universal(structure, v);
        }
    }
    let rel = padded.rel_of(&out.vars)?;
    let expanded = structure.expand(&out.team_rel, out.k, rel)?;
    sigma11_satisfies(&expanded, &out.formula())
}

struct Translator<'a> {
    vars: Vec<Variable>,
    fresh: FreshSymbols,
    registry: &'a AtomRegistry,
    k: usize,
}

type Translated = (Vec<(String, usize)>, Formula);

impl Translator<'_> {
    /// `R(x̄)` over the full canonical tuple.
    fn team_lit(&self, rel: &str) -> Formula {
        Formula::RelLit { rel: rel.to_string(), args: self.vars.clone(), positive: true }
    }

    /// ∀x1…∀xk body.
    fn forall_all(&self, body: Formula) -> Formula {
        self.vars
            .iter()
            .rev()
            .fold(body, |b, v| Formula::Forall(v.clone(), Box::new(b)))
    }

    fn tr(&mut self, f: &Formula, team_rel: &str) -> Result<Translated, TranslateError> {
        match f {
            // Case 1: literals hold iff they hold under every row of X.
            Formula::RelLit { .. } | Formula::EqLit { .. } => Ok((
                Vec::new(),
                self.forall_all(Formula::implies(self.team_lit(team_rel), f.clone())),
            )),
            Formula::Builtin(atom) => {
                let (def, tuples) = builtin_translation_atom(atom);
                self.tr_atom(&def, &tuples, team_rel)
            }
            Formula::AtomApp { name, tuples } => {
                let def = self
                    .registry
                    .get(name)
                    .ok_or_else(|| TranslateError::UnknownAtom(name.clone()))?
                    .clone();
                self.tr_atom(&def, tuples, team_rel)
            }
            // Case 3a: lax splitting — R is covered by two team relations.
            Formula::Or(a, b) => {
                let s = self.fresh.next();
                let t = self.fresh.next();
                let (pa, ma) = self.tr(a, &s)?;
                let (pb, mb) = self.tr(b, &t)?;
                let mut prefix = vec![(s.clone(), self.k), (t.clone(), self.k)];
                prefix.extend(pa);
                prefix.extend(pb);
                let cover = self.forall_all(Formula::iff(
                    self.team_lit(team_rel),
                    Formula::or(self.team_lit(&s), self.team_lit(&t)),
                ));
                Ok((prefix, Formula::and(Formula::and(cover, ma), mb)))
            }
            // Case 3b: conjunction is evaluated on the same team.
            Formula::And(a, b) => {
                let (mut pa, ma) = self.tr(a, team_rel)?;
                let (pb, mb) = self.tr(b, team_rel)?;
                pa.extend(pb);
                Ok((pa, Formula::and(ma, mb)))
            }
            // Case 4: supplementation — S projects to R outside x_i and is
            // nonempty on each row's x_i-fiber.
            Formula::Exists(x, body) => {
                let s = self.fresh.next();
                let (ps, ms) = self.tr(body, &s)?;
                let mut prefix = vec![(s.clone(), self.k)];
                prefix.extend(ps);
                let link = self.forall_all(Formula::iff(
                    Formula::Exists(x.clone(), Box::new(self.team_lit(team_rel))),
                    Formula::Exists(x.clone(), Box::new(self.team_lit(&s))),
                ));
                Ok((prefix, Formula::and(link, ms)))
            }
            // Case 5: duplication — S is R with the x_i column universalized.
            Formula::Forall(x, body) => {
                let s = self.fresh.next();
                let (ps, ms) = self.tr(body, &s)?;
                let mut prefix = vec![(s.clone(), self.k)];
                prefix.extend(ps);
                let link = self.forall_all(Formula::and(
                    Formula::implies(
                        self.team_lit(team_rel),
                        Formula::Forall(x.clone(), Box::new(self.team_lit(&s))),
                    ),
                    Formula::implies(
                        self.team_lit(&s),
                        Formula::Exists(x.clone(), Box::new(self.team_lit(team_rel))),
                    ),
                ));
                Ok((prefix, Formula::and(link, ms)))
            }
            other => Err(TranslateError::NotTeamLayer(format!("{other:?}"))),
        }
    }

    /// Case 2: a generalized atom A(ȳ1,…,ȳt) with definition ∃Ȳψ. Guessed
    /// k-ary relations T1…Tt stand for the padded rel(X, ȳⱼ); padding,
    /// identity and column-independence axioms tie them to the team relation,
    /// and ψ is rewritten over the Tⱼ.
    fn tr_atom(
        &mut self,
        def: &GeneralizedAtomDef,
        tuples: &[Vec<Variable>],
        team_rel: &str,
    ) -> Result<Translated, TranslateError> {
        let k = self.k;
        let atom = &def.signature.name;
        if def.k > k || def.signature.ty.iter().any(|&a| a > k) {
            return Err(TranslateError::AtomTooWide {
                atom: atom.clone(),
                needed: def.k.max(def.signature.ty.iter().copied().max().unwrap_or(0)),
                k,
            });
        }

        // Split the definition into its SO binders Ȳ and FOC kernel ψ.
        let mut so_binders: Vec<(String, usize)> = Vec::new();
        let mut kernel = &def.definition;
        while let Formula::SoExists { rel, arity, body } = kernel {
            so_binders.push((rel.clone(), *arity));
            kernel = body;
        }

        // Fresh names for Ȳ and for the placeholders R1…Rt ↦ T1…Tt.
        let mut rel_map: BTreeMap<String, String> = BTreeMap::new();
        let prefix_y: Vec<(String, usize)> = so_binders
            .iter()
            .map(|(rel, arity)| {
                let fresh = self.fresh.next();
                rel_map.insert(rel.clone(), fresh.clone());
                (fresh, *arity)
            })
            .collect();
        let t_syms: Vec<String> = (0..tuples.len())
            .map(|j| {
                let fresh = self.fresh.next();
                rel_map.insert(format!("R{}", j + 1), fresh.clone());
                fresh
            })
            .collect();

        // Injective renaming of the definition's variables into x1…xk.
        let var_map: BTreeMap<String, String> = kernel
            .all_variables()
            .into_iter()
            .zip(&self.vars)
            .map(|(from, to)| (from.0, to.0.clone()))
            .collect();

        // ψ'': placeholder literals become padded Tⱼ literals.
        let renamed = rename_variables(&rename_relations(kernel, &rel_map), &var_map);
        let psi2 = pad_placeholder_args(&renamed, &t_syms, k);

        let mut matrix_parts: Vec<Formula> = Vec::new();
        let mut chi_parts: Vec<Formula> = Vec::new();
        for (j, tuple) in tuples.iter().enumerate() {
            let t = &t_syms[j];
            let i_j = tuple.len();
            let t_lit = |args: Vec<Variable>| Formula::RelLit {
                rel: t.clone(),
                args,
                positive: true,
            };

            // χⱼ: the padding columns of Tⱼ carry no information.
            if i_j < k {
                let pad_var = self.vars[i_j].clone();
                let args: Vec<Variable> = self.vars[..i_j]
                    .iter()
                    .cloned()
                    .chain(std::iter::repeat(pad_var.clone()).take(k - i_j))
                    .collect();
                chi_parts.push(self.forall_all(Formula::implies(
                    Formula::Exists(pad_var.clone(), Box::new(t_lit(args.clone()))),
                    Formula::Forall(pad_var, Box::new(t_lit(args))),
                )));
            }

            // φⱼ-identities: repeated variables of ȳⱼ force equal columns,
            // and all padding columns are equal.
            let mut eqs: Vec<Formula> = Vec::new();
            for l in 0..i_j {
                for m in l + 1..i_j {
                    if tuple[l] == tuple[m] {
                        eqs.push(Formula::EqLit {
                            left: self.vars[l].clone(),
                            right: self.vars[m].clone(),
                            positive: true,
                        });
                    }
                }
            }
            for l in i_j..k {
                for m in l + 1..k {
                    eqs.push(Formula::EqLit {
                        left: self.vars[l].clone(),
                        right: self.vars[m].clone(),
                        positive: true,
                    });
                }
            }
            let eq_body = if eqs.is_empty() {
                Formula::EqLit {
                    left: self.vars[0].clone(),
                    right: self.vars[0].clone(),
                    positive: true,
                }
            } else {
                Formula::big_and(eqs)
            };
            let identities =
                self.forall_all(Formula::implies(t_lit(self.vars.clone()), eq_body));

            // φⱼ-padding: Tⱼ is rel(X, ȳⱼ) padded along column m_j.
            let m_j = self.vars.iter().position(|v| !tuple.contains(v));
            let padding = match m_j {
                Some(m) => {
                    let pad_var = self.vars[m].clone();
                    let args: Vec<Variable> = tuple
                        .iter()
                        .cloned()
                        .chain(std::iter::repeat(pad_var.clone()).take(k - i_j))
                        .collect();
                    let z_j: Vec<Variable> = self
                        .vars
                        .iter()
                        .filter(|v| !tuple.contains(v))
                        .cloned()
                        .collect();
                    let mut ex_r = self.team_lit(team_rel);
                    for z in z_j.iter().rev() {
                        ex_r = Formula::Exists(z.clone(), Box::new(ex_r));
                    }
                    self.forall_all(Formula::and(
                        Formula::implies(
                            self.team_lit(team_rel),
                            Formula::Forall(pad_var.clone(), Box::new(t_lit(args.clone()))),
                        ),
                        Formula::implies(
                            Formula::Exists(pad_var, Box::new(t_lit(args))),
                            ex_r,
                        ),
                    ))
                }
                // ȳⱼ mentions every canonical variable: no padding column.
                None => self.forall_all(Formula::and(
                    Formula::implies(self.team_lit(team_rel), t_lit(tuple.clone())),
                    Formula::implies(t_lit(tuple.clone()), self.team_lit(team_rel)),
                )),
            };
            matrix_parts.push(Formula::and(padding, identities));
        }

        let mut psi_prime = psi2;
        for chi in chi_parts {
            psi_prime = Formula::and(psi_prime, chi);
        }
        let mut matrix = psi_prime;
        for part in matrix_parts.into_iter().rev() {
            matrix = Formula::and(part, matrix);
        }
        let mut prefix = prefix_y;
        prefix.extend(t_syms.into_iter().map(|t| (t, k)));
        Ok((prefix, matrix))
    }
}

/// Renames relation symbols everywhere (literals and SOE binders).
fn rename_relations(f: &Formula, map: &BTreeMap<String, String>) -> Formula {
    let fix = |r: &String| map.get(r).cloned().unwrap_or_else(|| r.clone());
    match f {
        Formula::RelLit { rel, args, positive } => Formula::RelLit {
            rel: fix(rel),
            args: args.clone(),
            positive: *positive,
        },
        Formula::EqLit { .. } => f.clone(),
        Formula::And(a, b) => Formula::and(rename_relations(a, map), rename_relations(b, map)),
        Formula::Or(a, b) => Formula::or(rename_relations(a, map), rename_relations(b, map)),
        Formula::Implies(a, b) => {
            Formula::implies(rename_relations(a, map), rename_relations(b, map))
        }
        Formula::Iff(a, b) => Formula::iff(rename_relations(a, map), rename_relations(b, map)),
        Formula::Not(a) => Formula::not(rename_relations(a, map)),
        Formula::Exists(v, b) => Formula::Exists(v.clone(), Box::new(rename_relations(b, map))),
        Formula::Forall(v, b) => Formula::Forall(v.clone(), Box::new(rename_relations(b, map))),
        Formula::CountExists { min, var, body } => Formula::CountExists {
            min: *min,
            var: var.clone(),
            body: Box::new(rename_relations(body, map)),
        },
        Formula::SoExists { rel, arity, body } => Formula::SoExists {
            rel: fix(rel),
            arity: *arity,
            body: Box::new(rename_relations(body, map)),
        },
        Formula::Builtin(_) | Formula::AtomApp { .. } => {
            unreachable!("atom definitions are Σ¹₁ formulas")
        }
    }
}

/// Injective renaming of every variable occurrence, binders included.
/// Injectivity makes this sound under shadowing.
fn rename_variables(f: &Formula, map: &BTreeMap<String, String>) -> Formula {
    let fix = |v: &Variable| -> Variable {
        map.get(&v.0).map(|n| Variable::new(n)).unwrap_or_else(|| v.clone())
    };
    match f {
        Formula::RelLit { rel, args, positive } => Formula::RelLit {
            rel: rel.clone(),
            args: args.iter().map(&fix).collect(),
            positive: *positive,
        },
        Formula::EqLit { left, right, positive } => Formula::EqLit {
            left: fix(left),
            right: fix(right),
            positive: *positive,
        },
        Formula::And(a, b) => Formula::and(rename_variables(a, map), rename_variables(b, map)),
        Formula::Or(a, b) => Formula::or(rename_variables(a, map), rename_variables(b, map)),
        Formula::Implies(a, b) => {
            Formula::implies(rename_variables(a, map), rename_variables(b, map))
        }
        Formula::Iff(a, b) => Formula::iff(rename_variables(a, map), rename_variables(b, map)),
        Formula::Not(a) => Formula::not(rename_variables(a, map)),
        Formula::Exists(v, b) => Formula::Exists(fix(v), Box::new(rename_variables(b, map))),
        Formula::Forall(v, b) => Formula::Forall(fix(v), Box::new(rename_variables(b, map))),
        Formula::CountExists { min, var, body } => Formula::CountExists {
            min: *min,
            var: fix(var),
            body: Box::new(rename_variables(body, map)),
        },
        Formula::SoExists { rel, arity, body } => Formula::SoExists {
            rel: rel.clone(),
            arity: *arity,
            body: Box::new(rename_variables(body, map)),
        },
        Formula::Builtin(_) | Formula::AtomApp { .. } => {
            unreachable!("atom definitions are Σ¹₁ formulas")
        }
    }
}

/// Pads every literal over one of the guessed symbols to arity k by
/// repeating its first argument.
fn pad_placeholder_args(f: &Formula, t_syms: &[String], k: usize) -> Formula {
    match f {
        Formula::RelLit { rel, args, positive } if t_syms.contains(rel) => {
            let mut padded = args.clone();
            while padded.len() < k {
                padded.push(args[0].clone());
            }
            Formula::RelLit { rel: rel.clone(), args: padded, positive: *positive }
        }
        Formula::RelLit { .. } | Formula::EqLit { .. } => f.clone(),
        Formula::And(a, b) => {
            Formula::and(pad_placeholder_args(a, t_syms, k), pad_placeholder_args(b, t_syms, k))
        }
        Formula::Or(a, b) => {
            Formula::or(pad_placeholder_args(a, t_syms, k), pad_placeholder_args(b, t_syms, k))
        }
        Formula::Implies(a, b) => Formula::implies(
            pad_placeholder_args(a, t_syms, k),
            pad_placeholder_args(b, t_syms, k),
        ),
        Formula::Iff(a, b) => {
            Formula::iff(pad_placeholder_args(a, t_syms, k), pad_placeholder_args(b, t_syms, k))
        }
        Formula::Not(a) => Formula::not(pad_placeholder_args(a, t_syms, k)),
        Formula::Exists(v, b) => {
            Formula::Exists(v.clone(), Box::new(pad_placeholder_args(b, t_syms, k)))
        }
        Formula::Forall(v, b) => {
            Formula::Forall(v.clone(), Box::new(pad_placeholder_args(b, t_syms, k)))
        }
        Formula::CountExists { min, var, body } => Formula::CountExists {
            min: *min,
            var: var.clone(),
            body: Box::new(pad_placeholder_args(body, t_syms, k)),
        },
        Formula::SoExists { rel, arity, body } => Formula::SoExists {
            rel: rel.clone(),
            arity: *arity,
            body: Box::new(pad_placeholder_args(body, t_syms, k)),
        },
        Formula::Builtin(_) | Formula::AtomApp { .. } => {
            unreachable!("atom definitions are Σ¹₁ formulas")
        }
    }
}

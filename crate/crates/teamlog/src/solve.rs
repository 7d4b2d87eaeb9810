//! Bounded satisfiability search, the complete ∃*∀* decision procedure via
//! the small-model bound max{1,k}, and bounded validity refutation.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde_json::json;
use thiserror::Error;

use crate::atoms::{probe_properties, AtomRegistry, PropertyStatus};
use crate::model::{is_canonical, structure_from_mask, structure_space_bits, Structure};
use crate::semantics::{EvalContext, EvalError, Limits};
use crate::syntax::{
    free_variables, prefix_class, validate_layer, BuiltinAtom, Formula, Layer, PrefixClass,
    Vocabulary,
};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("formula is not a sentence: free variable `{0}`")]
    NotSentence(String),
    #[error("sentence is not in the ∃*∀* prefix class")]
    NotEa,
    #[error("structure space too large: {bits} relation bits at size {size}")]
    SpaceTooLarge { bits: usize, size: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct SearchStats {
    /// Structures examined after isomorphism filtering.
    pub structures_examined: u64,
    /// Sentence evaluations (equal to structures examined; kept separate so
    /// callers can aggregate across searches).
    pub evaluator_calls: u64,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Sat(Structure),
    UnsatUpTo(usize),
    /// Complete — licensed only by the small-model lemma in `decide_ea`.
    Unsat,
    Unknown(String),
}

#[derive(Debug, Clone)]
pub struct SatResult {
    pub verdict: Verdict,
    pub stats: SearchStats,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self.verdict, Verdict::Sat(_))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut out = match &self.verdict {
            Verdict::Sat(model) => json!({"verdict": "SAT", "model": model.to_json()}),
            Verdict::UnsatUpTo(bound) => json!({"verdict": "UNSAT_UP_TO", "bound": bound}),
            Verdict::Unsat => json!({"verdict": "UNSAT"}),
            Verdict::Unknown(reason) => json!({"verdict": "UNKNOWN", "reason": reason}),
        };
        out["stats"] = serde_json::to_value(self.stats).unwrap();
        out
    }
}

fn check_sentence(f: &Formula) -> Result<(), SolveError> {
    if let Some(v) = free_variables(f).into_iter().next() {
        return Err(SolveError::NotSentence(v.0));
    }
    Ok(())
}

/// Is the sentence true in the structure? Dispatches on layer: team-layer
/// sentences are evaluated at the unit team, Σ¹₁ sentences (e.g. translation
/// output) by relation guessing.
fn sentence_true(
    structure: &Structure,
    f: &Formula,
    registry: &AtomRegistry,
    limits: Limits,
) -> Result<bool, EvalError> {
    if validate_layer(f, Layer::Team).is_ok() {
        EvalContext::new(structure, registry).with_limits(limits).sentence_true(f)
    } else {
        crate::semantics::sigma11_satisfies_limited(structure, f, limits)
    }
}

/// Enumerates structures over the formula's own relation symbols, by size
/// then lexicographic relation bitmask, one representative per isomorphism
/// class, and returns the first satisfying one. Deterministic for any `jobs`.
pub fn sat_bounded(
    f: &Formula,
    vocab: &Vocabulary,
    registry: &AtomRegistry,
    max_size: usize,
    limits: Limits,
    jobs: usize,
) -> Result<SatResult, SolveError> {
    assert!(max_size >= 1);
    check_sentence(f)?;
    let reduct = search_vocab(f, vocab);
    let mut stats = SearchStats::default();
    for size in 1..=max_size {
        if let Some(model) = first_matching(f, &reduct, registry, size, limits, jobs, true, &mut stats)? {
            return Ok(SatResult { verdict: Verdict::Sat(model), stats });
        }
    }
    Ok(SatResult { verdict: Verdict::UnsatUpTo(max_size), stats })
}

/// The search vocabulary: exactly the declared symbols occurring in f (the
/// formula may also mention SOE-bound symbols, which are not declared).
fn search_vocab(f: &Formula, vocab: &Vocabulary) -> Vocabulary {
    let mut used: BTreeSet<String> = f.relation_symbols();
    // Relations rebound by a leading second-order prefix never read their
    // base interpretation, so enumerating it would only multiply the search.
    let mut cur = f;
    while let Formula::SoExists { rel, body, .. } = cur {
        used.remove(rel);
        cur = body;
    }
    vocab.restrict_to(&used)
}

/// First structure of the given size (in mask order, isomorphism-reduced) on
/// which the sentence evaluates to `want`. Workers claim mask batches and the
/// minimal matching mask wins, so the result is independent of `jobs`.
#[allow(clippy::too_many_arguments)]
fn first_matching(
    f: &Formula,
    vocab: &Vocabulary,
    registry: &AtomRegistry,
    size: usize,
    limits: Limits,
    jobs: usize,
    want: bool,
    stats: &mut SearchStats,
) -> Result<Option<Structure>, SolveError> {
    let bits = structure_space_bits(vocab, size);
    if bits >= 63 {
        return Err(SolveError::SpaceTooLarge { bits, size });
    }
    let space: u64 = 1 << bits;
    let jobs = jobs.max(1).min(space as usize);

    let next = AtomicU64::new(0);
    let best = AtomicU64::new(u64::MAX);
    let examined = AtomicU64::new(0);
    let failure: Mutex<Option<EvalError>> = Mutex::new(None);
    const BATCH: u64 = 256;

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let start = next.fetch_add(BATCH, Ordering::Relaxed);
                if start >= space || best.load(Ordering::Relaxed) <= start {
                    return;
                }
                for mask in start..(start + BATCH).min(space) {
                    if best.load(Ordering::Relaxed) < mask {
                        return;
                    }
                    let s = structure_from_mask(vocab, size, mask);
                    if !is_canonical(&s, vocab, size) {
                        continue;
                    }
                    examined.fetch_add(1, Ordering::Relaxed);
                    match sentence_true(&s, f, registry, limits) {
                        Ok(v) if v == want => {
                            best.fetch_min(mask, Ordering::Relaxed);
                            break;
                        }
                        Ok(_) => {}
                        Err(e) => {
                            *failure.lock().unwrap() = Some(e);
                            best.fetch_min(0, Ordering::Relaxed);
                            return;
                        }
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap().take() {
        return Err(e.into());
    }
    stats.structures_examined += examined.load(Ordering::Relaxed);
    stats.evaluator_calls += examined.load(Ordering::Relaxed);
    let winner = best.load(Ordering::Relaxed);
    Ok((winner != u64::MAX).then(|| structure_from_mask(vocab, size, winner)))
}

/// Evidence that licensed (or blocked) the ∃*∀* procedure for one atom.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AtomEvidence {
    pub atom: String,
    /// "asserted", "probe-confirmed up to n", or the reason it fails.
    pub evidence: String,
    pub sufficient: bool,
}

#[derive(Debug, Clone)]
pub struct EaDecision {
    /// Small-model bound max{1,k}, k = existential prefix occurrences.
    pub bound: usize,
    pub result: SatResult,
    pub evidence: Vec<AtomEvidence>,
}

impl EaDecision {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "bound": self.bound,
            "result": self.result.to_json(),
            "atom_evidence": serde_json::to_value(&self.evidence).unwrap(),
        })
    }
}

/// Complete decision procedure for ∃*∀* sentences whose atoms are all
/// substructure closed: a satisfiable such sentence has a model with at most
/// max{1,k} elements, so UNSAT_UP_TO that bound is promoted to UNSAT.
/// Atoms without closure evidence yield an UNKNOWN verdict naming the atom;
/// atoms with only Unknown flags are probe-verified up to the bound, and the
/// evidence level is recorded either way.
pub fn decide_ea(
    f: &Formula,
    vocab: &Vocabulary,
    registry: &AtomRegistry,
    limits: Limits,
    jobs: usize,
) -> Result<EaDecision, SolveError> {
    check_sentence(f)?;
    let k = match prefix_class(f) {
        PrefixClass::ExistsForall { existential, .. } => existential,
        PrefixClass::NotEA => return Err(SolveError::NotEa),
    };
    let bound = k.max(1);

    let mut evidence = Vec::new();
    let mut blocked: Option<String> = None;
    for atom in atoms_of(f) {
        let (name, status) = match &atom {
            AtomOccurrence::Builtin(b) => {
                let (name, closed) = match b {
                    BuiltinAtom::Dep { args } if args.len() == 1 => ("const", true),
                    BuiltinAtom::Dep { .. } => ("dep", true),
                    BuiltinAtom::Exc { .. } => ("exc", true),
                    BuiltinAtom::Inc { .. } => ("inc", false),
                    BuiltinAtom::Ind { .. } => ("ind", false),
                };
                let status = if closed { PropertyStatus::Asserted } else { PropertyStatus::Refuted };
                (name.to_string(), status)
            }
            AtomOccurrence::Generalized(name) => {
                let status = registry
                    .get(name)
                    .map(|d| d.substructure_closed)
                    .unwrap_or(PropertyStatus::Unknown);
                (name.clone(), status)
            }
        };
        match status {
            PropertyStatus::Asserted => {
                evidence.push(AtomEvidence {
                    atom: name,
                    evidence: "substructure closure asserted".into(),
                    sufficient: true,
                });
            }
            PropertyStatus::Refuted => {
                evidence.push(AtomEvidence {
                    atom: name.clone(),
                    evidence: "not substructure closed".into(),
                    sufficient: false,
                });
                blocked.get_or_insert(name);
            }
            PropertyStatus::Unknown => {
                // Only probe evidence is available: re-verify closure up to
                // the model bound before trusting it.
                let def = registry.get(&name);
                let confirmed = match def {
                    Some(def) => probe_properties(def, bound)?.substructure_closed.holds(),
                    None => false,
                };
                if confirmed {
                    evidence.push(AtomEvidence {
                        atom: name,
                        evidence: format!("substructure closure probe-confirmed up to size {bound}"),
                        sufficient: true,
                    });
                } else {
                    evidence.push(AtomEvidence {
                        atom: name.clone(),
                        evidence: "no substructure-closure evidence".into(),
                        sufficient: false,
                    });
                    blocked.get_or_insert(name);
                }
            }
        }
    }
    if let Some(atom) = blocked {
        return Ok(EaDecision {
            bound,
            result: SatResult {
                verdict: Verdict::Unknown(format!(
                    "atom `{atom}` lacks substructure-closure evidence; the small-model bound does not apply"
                )),
                stats: SearchStats::default(),
            },
            evidence,
        });
    }

    let mut result = sat_bounded(f, vocab, registry, bound, limits, jobs)?;
    if let Verdict::UnsatUpTo(b) = result.verdict {
        debug_assert_eq!(b, bound);
        result.verdict = Verdict::Unsat;
    }
    Ok(EaDecision { bound, result, evidence })
}

enum AtomOccurrence {
    Builtin(BuiltinAtom),
    Generalized(String),
}

fn atoms_of(f: &Formula) -> Vec<AtomOccurrence> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    collect_atoms(f, &mut out, &mut seen);
    out
}

fn collect_atoms(f: &Formula, out: &mut Vec<AtomOccurrence>, seen: &mut BTreeSet<String>) {
    match f {
        Formula::Builtin(b) => {
            let key = format!("{b:?}");
            if seen.insert(key) {
                out.push(AtomOccurrence::Builtin(b.clone()));
            }
        }
        Formula::AtomApp { name, .. } => {
            if seen.insert(format!("@{name}")) {
                out.push(AtomOccurrence::Generalized(name.clone()));
            }
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            collect_atoms(a, out, seen);
            collect_atoms(b, out, seen);
        }
        Formula::Exists(_, b)
        | Formula::Forall(_, b)
        | Formula::Not(b)
        | Formula::CountExists { body: b, .. }
        | Formula::SoExists { body: b, .. } => collect_atoms(b, out, seen),
        Formula::RelLit { .. } | Formula::EqLit { .. } => {}
    }
}

#[derive(Debug, Clone)]
pub enum Refutation {
    Counterexample(Structure),
    NoCounterexampleUpTo(usize),
}

impl Refutation {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Refutation::Counterexample(s) => {
                json!({"verdict": "COUNTEREXAMPLE", "model": s.to_json()})
            }
            Refutation::NoCounterexampleUpTo(b) => {
                json!({"verdict": "NO_COUNTEREXAMPLE_UP_TO", "bound": b})
            }
        }
    }
}

/// Searches for a structure falsifying the sentence, up to `max_size`.
/// Never claims validity (the validity problem is undecidable).
pub fn refute_validity(
    f: &Formula,
    vocab: &Vocabulary,
    registry: &AtomRegistry,
    max_size: usize,
    limits: Limits,
    jobs: usize,
) -> Result<Refutation, SolveError> {
    assert!(max_size >= 1);
    check_sentence(f)?;
    let reduct = search_vocab(f, vocab);
    let mut stats = SearchStats::default();
    for size in 1..=max_size {
        if let Some(model) =
            first_matching(f, &reduct, registry, size, limits, jobs, false, &mut stats)?
        {
            return Ok(Refutation::Counterexample(model));
        }
    }
    Ok(Refutation::NoCounterexampleUpTo(max_size))
}

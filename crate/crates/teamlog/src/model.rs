//! Finite relational structures, assignments, teams, and the team algebra:
//! extension, restriction, projection and `rel`, plus the exhaustive
//! enumerators backing the brute-force oracles.
//!
//! Elements are dense integer ids internally; external formats use the string
//! names stored in the structure's domain.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Variable, Vocabulary};

pub type ElemId = usize;
pub type Assignment = BTreeMap<Variable, ElemId>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("domain must be nonempty")]
    EmptyDomain,
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("relation `{0}` not in vocabulary")]
    UnknownRelation(String),
    #[error("tuple arity mismatch for relation `{0}`")]
    TupleArity(String),
    #[error("variable `{0}` not bound in team")]
    UnboundVariable(String),
    #[error("projection variables are not a subset of the team domain")]
    NotASubset,
    #[error("function extension is missing a value for a team row")]
    MissingChoice,
    #[error("function extension maps a row to the empty set")]
    EmptyChoice,
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("cannot determine arity of empty relation `{0}`; add it to \"arities\"")]
    UnknownArity(String),
}

/// A finite relational structure with a nonempty ordered domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    names: Vec<String>,
    vocab: Vocabulary,
    interp: BTreeMap<String, BTreeSet<Vec<ElemId>>>,
}

impl Structure {
    pub fn new(names: Vec<String>, vocab: Vocabulary) -> Result<Self, ModelError> {
        if names.is_empty() {
            return Err(ModelError::EmptyDomain);
        }
        let interp = vocab.relations().map(|(n, _)| (n.to_string(), BTreeSet::new())).collect();
        Ok(Structure { names, vocab, interp })
    }

    /// A structure with domain {"0", ..., "size-1"}.
    pub fn with_size(size: usize, vocab: Vocabulary) -> Result<Self, ModelError> {
        Structure::new((0..size).map(|i| i.to_string()).collect(), vocab)
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn domain(&self) -> impl Iterator<Item = ElemId> {
        0..self.names.len()
    }

    pub fn name(&self, e: ElemId) -> &str {
        &self.names[e]
    }

    pub fn elem_by_name(&self, name: &str) -> Option<ElemId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn add_tuple(&mut self, rel: &str, tuple: Vec<ElemId>) -> Result<(), ModelError> {
        let arity =
            self.vocab.arity(rel).ok_or_else(|| ModelError::UnknownRelation(rel.to_string()))?;
        if tuple.len() != arity || tuple.iter().any(|&e| e >= self.names.len()) {
            return Err(ModelError::TupleArity(rel.to_string()));
        }
        self.interp.get_mut(rel).unwrap().insert(tuple);
        Ok(())
    }

    pub fn holds(&self, rel: &str, tuple: &[ElemId]) -> bool {
        self.interp.get(rel).map(|s| s.contains(tuple)).unwrap_or(false)
    }

    pub fn tuples(&self, rel: &str) -> Option<&BTreeSet<Vec<ElemId>>> {
        self.interp.get(rel)
    }

    /// Expands the structure with a new relation symbol and its extension.
    pub fn expand(
        &self,
        rel: &str,
        arity: usize,
        tuples: BTreeSet<Vec<ElemId>>,
    ) -> Result<Structure, ModelError> {
        let mut out = self.clone();
        match out.vocab.arity(rel) {
            // SO-quantified symbols may shadow an existing interpretation.
            Some(a) if a == arity => {}
            Some(_) => return Err(ModelError::TupleArity(rel.to_string())),
            None => out
                .vocab
                .add(rel, arity)
                .map_err(|_| ModelError::UnknownRelation(rel.to_string()))?,
        }
        for t in &tuples {
            if t.len() != arity || t.iter().any(|&e| e >= self.names.len()) {
                return Err(ModelError::TupleArity(rel.to_string()));
            }
        }
        out.interp.insert(rel.to_string(), tuples);
        Ok(out)
    }

    /// The induced substructure on the nonempty element set `b`. Element ids
    /// are re-densified in ascending order; names are preserved.
    pub fn restrict(&self, b: &BTreeSet<ElemId>) -> Result<Structure, ModelError> {
        if b.is_empty() {
            return Err(ModelError::EmptyDomain);
        }
        let keep: Vec<ElemId> = b.iter().copied().filter(|&e| e < self.names.len()).collect();
        if keep.is_empty() {
            return Err(ModelError::EmptyDomain);
        }
        let remap: BTreeMap<ElemId, ElemId> =
            keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let names = keep.iter().map(|&e| self.names[e].clone()).collect();
        let interp = self
            .interp
            .iter()
            .map(|(r, ts)| {
                let ts = ts
                    .iter()
                    .filter(|t| t.iter().all(|e| remap.contains_key(e)))
                    .map(|t| t.iter().map(|e| remap[e]).collect())
                    .collect();
                (r.clone(), ts)
            })
            .collect();
        Ok(Structure { names, vocab: self.vocab.clone(), interp })
    }

    /// Drops relations not named in `keep` (used to search over exactly the
    /// symbols occurring in a sentence).
    pub fn reduct(&self, keep: &BTreeSet<String>) -> Structure {
        Structure {
            names: self.names.clone(),
            vocab: self.vocab.restrict_to(keep),
            interp: self.interp.iter().filter(|(r, _)| keep.contains(*r)).map(|(r, t)| (r.clone(), t.clone())).collect(),
        }
    }
}

/// A team: a set of assignments sharing a variable domain.
///
/// The empty team (no rows) and the singleton team containing the empty
/// assignment are distinct values. Rows are kept sorted so teams canonically
/// key memo tables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Team {
    vars: Vec<Variable>,
    rows: BTreeSet<Vec<ElemId>>,
}

impl Team {
    /// The empty team over the given variable domain.
    pub fn empty(mut vars: Vec<Variable>) -> Team {
        vars.sort();
        vars.dedup();
        Team { vars, rows: BTreeSet::new() }
    }

    /// The singleton team {∅} containing only the empty assignment.
    pub fn unit() -> Team {
        Team { vars: Vec::new(), rows: [Vec::new()].into_iter().collect() }
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> impl Iterator<Item = &Vec<ElemId>> {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn var_index(&self, v: &Variable) -> Option<usize> {
        self.vars.binary_search(v).ok()
    }

    pub fn insert_row(&mut self, row: Vec<ElemId>) {
        assert_eq!(row.len(), self.vars.len());
        self.rows.insert(row);
    }

    pub fn from_assignments(
        vars: Vec<Variable>,
        assignments: impl IntoIterator<Item = Assignment>,
    ) -> Result<Team, ModelError> {
        let mut team = Team::empty(vars);
        for s in assignments {
            let row = team
                .vars
                .iter()
                .map(|v| s.get(v).copied().ok_or_else(|| ModelError::UnboundVariable(v.0.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            team.rows.insert(row);
        }
        Ok(team)
    }

    pub fn assignment(&self, row: &[ElemId]) -> Assignment {
        self.vars.iter().cloned().zip(row.iter().copied()).collect()
    }

    /// X[A/x]: universal extension by every domain element.
    pub fn extend_universal(&self, structure: &Structure, x: &Variable) -> Team {
        let mut out = self.skeleton_with(x);
        for row in &self.rows {
            for a in structure.domain() {
                out.rows.insert(out.place(self, row, x, a));
            }
        }
        out
    }

    /// X[F/x] for F mapping each row to a nonempty value set.
    pub fn extend_function(
        &self,
        choice: &BTreeMap<Assignment, BTreeSet<ElemId>>,
        x: &Variable,
    ) -> Result<Team, ModelError> {
        let mut out = self.skeleton_with(x);
        for row in &self.rows {
            let values = choice.get(&self.assignment(row)).ok_or(ModelError::MissingChoice)?;
            if values.is_empty() {
                return Err(ModelError::EmptyChoice);
            }
            for &a in values {
                out.rows.insert(out.place(self, row, x, a));
            }
        }
        Ok(out)
    }

    /// The team with the same rows except `x` bound to one given value per row
    /// (used internally by the evaluator's lazy choice search).
    pub(crate) fn skeleton_with(&self, x: &Variable) -> Team {
        let mut vars = self.vars.clone();
        if !vars.contains(x) {
            vars.push(x.clone());
            vars.sort();
        }
        Team { vars, rows: BTreeSet::new() }
    }

    /// Builds a row of the extended team from a row of `base` with x := a.
    pub(crate) fn place(&self, base: &Team, row: &[ElemId], x: &Variable, a: ElemId) -> Vec<ElemId> {
        self.vars
            .iter()
            .map(|v| if v == x { a } else { row[base.var_index(v).unwrap()] })
            .collect()
    }

    /// X↾B: rows whose every value lies in `b`.
    pub fn restrict(&self, b: &BTreeSet<ElemId>) -> Team {
        Team {
            vars: self.vars.clone(),
            rows: self.rows.iter().filter(|r| r.iter().all(|e| b.contains(e))).cloned().collect(),
        }
    }

    /// X↾B with element ids remapped to match `Structure::restrict(b)`.
    pub fn restrict_remap(&self, b: &BTreeSet<ElemId>) -> Team {
        let remap: BTreeMap<ElemId, ElemId> =
            b.iter().copied().enumerate().map(|(new, old)| (old, new)).collect();
        Team {
            vars: self.vars.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| r.iter().all(|e| remap.contains_key(e)))
                .map(|r| r.iter().map(|e| remap[e]).collect())
                .collect(),
        }
    }

    /// X(V): projection to a subset of the variable domain, merging duplicates.
    pub fn project(&self, v: &BTreeSet<Variable>) -> Result<Team, ModelError> {
        if !v.iter().all(|x| self.vars.contains(x)) {
            return Err(ModelError::NotASubset);
        }
        let vars: Vec<Variable> = self.vars.iter().filter(|x| v.contains(x)).cloned().collect();
        let idx: Vec<usize> = vars.iter().map(|x| self.var_index(x).unwrap()).collect();
        Ok(Team {
            vars,
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
        })
    }

    /// rel(X, ȳ): the set of value tuples of the listed variables
    /// (repetitions allowed).
    pub fn rel_of(&self, tuple: &[Variable]) -> Result<BTreeSet<Vec<ElemId>>, ModelError> {
        let idx: Vec<usize> = tuple
            .iter()
            .map(|v| self.var_index(v).ok_or_else(|| ModelError::UnboundVariable(v.0.clone())))
            .collect::<Result<_, _>>()?;
        Ok(self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect())
    }

    /// Subteams Y ⊆ X in deterministic order (rows selected by bitmask).
    pub fn subteams(&self) -> impl Iterator<Item = Team> + '_ {
        let rows: Vec<Vec<ElemId>> = self.rows.iter().cloned().collect();
        let n = rows.len();
        assert!(n < 32, "team too large to enumerate subteams");
        (0u32..(1 << n)).map(move |mask| Team {
            vars: self.vars.clone(),
            rows: rows
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, r)| r.clone())
                .collect(),
        })
    }
}

// ---------------------------------------------------------------------------
// Enumerators

/// Yields every tuple in {0..size-1}^arity in lexicographic order.
pub fn all_tuples(size: usize, arity: usize) -> Vec<Vec<ElemId>> {
    let mut out = vec![vec![]];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..size).map(move |e| {
                    let mut t2 = t.clone();
                    t2.push(e);
                    t2
                })
            })
            .collect();
    }
    out
}

/// Number of relation-table bits of a structure over `vocab` with `size`
/// elements; the structure space is the mask range 0..2^bits.
pub fn structure_space_bits(vocab: &Vocabulary, size: usize) -> usize {
    vocab.relations().map(|(_, arity)| size.pow(arity as u32)).sum()
}

/// The structure at a given position of the lexicographic bitmask order.
pub fn structure_from_mask(vocab: &Vocabulary, size: usize, mask: u64) -> Structure {
    assert!(size >= 1);
    let mut s = Structure::with_size(size, vocab.clone()).unwrap();
    let mut bit = 0;
    for (rel, arity) in vocab.relations() {
        let rel = rel.to_string();
        for t in all_tuples(size, arity) {
            if mask >> bit & 1 == 1 {
                s.add_tuple(&rel, t).unwrap();
            }
            bit += 1;
        }
    }
    s
}

/// All structures with domain {0,...,size-1} over `vocab`, each exactly once,
/// ordered by the lexicographic bitmask of their relation tables.
pub fn enumerate_structures(vocab: &Vocabulary, size: usize) -> impl Iterator<Item = Structure> {
    assert!(size >= 1);
    let bits = structure_space_bits(vocab, size);
    assert!(bits < 63, "structure space too large to enumerate");
    let vocab = vocab.clone();
    (0u64..(1 << bits)).map(move |mask| structure_from_mask(&vocab, size, mask))
}

/// As `enumerate_structures` but keeping only one representative per
/// isomorphism class (canonical = minimal bitmask under domain permutations).
pub fn enumerate_structures_dedup(
    vocab: &Vocabulary,
    size: usize,
) -> impl Iterator<Item = Structure> {
    let vocab2 = vocab.clone();
    enumerate_structures(vocab, size).filter(move |s| is_canonical(s, &vocab2, size))
}

pub(crate) fn is_canonical(s: &Structure, vocab: &Vocabulary, size: usize) -> bool {
    let own = structure_key(s, vocab, size, &(0..size).collect::<Vec<_>>());
    permutations(size).into_iter().all(|p| structure_key(s, vocab, size, &p) >= own)
}

fn structure_key(s: &Structure, vocab: &Vocabulary, size: usize, perm: &[usize]) -> Vec<bool> {
    let mut key = Vec::new();
    for (rel, arity) in vocab.relations() {
        for t in all_tuples(size, arity) {
            let mapped: Vec<ElemId> = t.iter().map(|&e| perm[e]).collect();
            key.push(s.holds(rel, &mapped));
        }
    }
    key
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// All 2^(|A|^|vars|) teams over `vars`, rows selected in lexicographic order
/// by an ascending bitmask.
pub fn enumerate_teams(structure: &Structure, vars: &[Variable]) -> impl Iterator<Item = Team> {
    let mut vs: Vec<Variable> = vars.to_vec();
    vs.sort();
    vs.dedup();
    let rows = all_tuples(structure.size(), vs.len());
    let bits = rows.len();
    assert!(bits < 63, "team space too large to enumerate");
    (0u64..(1 << bits)).map(move |mask| {
        let mut t = Team::empty(vs.clone());
        for (i, row) in rows.iter().enumerate() {
            if mask >> i & 1 == 1 {
                t.insert_row(row.clone());
            }
        }
        t
    })
}

/// Teams over `vars` with at most `max_rows` rows (for spaces too large to
/// enumerate fully). Includes the empty team.
pub fn enumerate_small_teams(
    structure: &Structure,
    vars: &[Variable],
    max_rows: usize,
) -> Vec<Team> {
    let mut vs: Vec<Variable> = vars.to_vec();
    vs.sort();
    vs.dedup();
    let rows = all_tuples(structure.size(), vs.len());
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<Vec<ElemId>>)> = vec![(0, Vec::new())];
    while let Some((start, chosen)) = stack.pop() {
        let mut t = Team::empty(vs.clone());
        for r in &chosen {
            t.insert_row(r.clone());
        }
        out.push(t);
        if chosen.len() < max_rows {
            for i in start..rows.len() {
                let mut c = chosen.clone();
                c.push(rows[i].clone());
                stack.push((i + 1, c));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// JSON formats

#[derive(Debug, Serialize, Deserialize)]
struct StructureJson {
    domain: Vec<String>,
    relations: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    arities: BTreeMap<String, usize>,
}

impl Structure {
    pub fn to_json(&self) -> serde_json::Value {
        let relations = self
            .interp
            .iter()
            .map(|(r, ts)| {
                let ts: Vec<Vec<String>> = ts
                    .iter()
                    .map(|t| t.iter().map(|&e| self.names[e].clone()).collect())
                    .collect();
                (r.clone(), ts)
            })
            .collect();
        let arities = self
            .vocab
            .relations()
            .filter(|(r, _)| self.interp.get(*r).map(|t| t.is_empty()).unwrap_or(true))
            .map(|(r, a)| (r.to_string(), a))
            .collect();
        serde_json::to_value(StructureJson { domain: self.names.clone(), relations, arities })
            .unwrap()
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Structure, ModelError> {
        let sj: StructureJson =
            serde_json::from_value(value.clone()).map_err(|e| ModelError::Json(e.to_string()))?;
        let mut names = sj.domain;
        names.dedup();
        if names.is_empty() {
            return Err(ModelError::EmptyDomain);
        }
        let mut vocab = Vocabulary::new();
        for (rel, tuples) in &sj.relations {
            let arity = match tuples.first() {
                Some(t) => t.len(),
                None => *sj
                    .arities
                    .get(rel)
                    .ok_or_else(|| ModelError::UnknownArity(rel.clone()))?,
            };
            vocab.add(rel, arity).map_err(|e| ModelError::Json(e.to_string()))?;
        }
        for (rel, arity) in &sj.arities {
            if !vocab.contains(rel) {
                vocab.add(rel, *arity).map_err(|e| ModelError::Json(e.to_string()))?;
            }
        }
        let mut s = Structure::new(names, vocab)?;
        for (rel, tuples) in &sj.relations {
            for t in tuples {
                let ids = t
                    .iter()
                    .map(|n| s.elem_by_name(n).ok_or_else(|| ModelError::UnknownElement(n.clone())))
                    .collect::<Result<Vec<_>, _>>()?;
                s.add_tuple(rel, ids)?;
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TeamJson {
    vars: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Team {
    pub fn to_json(&self, structure: &Structure) -> serde_json::Value {
        serde_json::to_value(TeamJson {
            vars: self.vars.iter().map(|v| v.0.clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&e| structure.name(e).to_string()).collect())
                .collect(),
        })
        .unwrap()
    }

    pub fn from_json(value: &serde_json::Value, structure: &Structure) -> Result<Team, ModelError> {
        let tj: TeamJson =
            serde_json::from_value(value.clone()).map_err(|e| ModelError::Json(e.to_string()))?;
        let vars: Vec<Variable> = tj.vars.iter().map(|n| Variable::new(n.clone())).collect();
        let mut team = Team::empty(vars.clone());
        for row in &tj.rows {
            if row.len() != vars.len() {
                return Err(ModelError::Json("row length does not match vars".into()));
            }
            let mut s = Assignment::new();
            for (v, n) in vars.iter().zip(row) {
                let e = structure
                    .elem_by_name(n)
                    .ok_or_else(|| ModelError::UnknownElement(n.clone()))?;
                s.insert(v.clone(), e);
            }
            let sorted_row = team.vars.iter().map(|v| s[v]).collect();
            team.insert_row(sorted_row);
        }
        Ok(team)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Variable {
        Variable::new(n)
    }

    fn two_elem() -> Structure {
        Structure::with_size(2, Vocabulary::new()).unwrap()
    }

    #[test]
    fn extend_universal_examples() {
        let s = two_elem();
        let x = v("x");
        let unit = Team::unit();
        let ext = unit.extend_universal(&s, &x);
        assert_eq!(ext.len(), 2);

        let empty = Team::empty(vec![]);
        assert!(empty.extend_universal(&s, &x).is_empty());

        // overwrite of an existing binding
        let mut t = Team::empty(vec![x.clone()]);
        t.insert_row(vec![0]);
        let ext = t.extend_universal(&s, &x);
        assert_eq!(ext.len(), 2);
    }

    #[test]
    fn extend_function_examples() {
        let x = v("x");
        let y = v("y");
        let mut t = Team::empty(vec![x.clone()]);
        t.insert_row(vec![0]);
        let mut choice = BTreeMap::new();
        choice.insert(t.assignment(&[0]), [0usize, 1].into_iter().collect());
        let ext = t.extend_function(&choice, &y).unwrap();
        assert_eq!(ext.len(), 2);

        let empty = Team::empty(vec![x]);
        let ext = empty.extend_function(&BTreeMap::new(), &y).unwrap();
        assert!(ext.is_empty());
    }

    #[test]
    fn restrict_and_project() {
        let x = v("x");
        let y = v("y");
        let mut t = Team::empty(vec![x.clone(), y.clone()]);
        t.insert_row(vec![0, 1]);
        t.insert_row(vec![0, 0]);

        let b: BTreeSet<ElemId> = [0].into_iter().collect();
        let r = t.restrict(&b);
        assert_eq!(r.len(), 1);
        // idempotent
        assert_eq!(r.restrict(&b), r);

        let proj = t.project(&[x.clone()].into_iter().collect()).unwrap();
        assert_eq!(proj.len(), 1);
        // identity projection
        assert_eq!(t.project(&t.vars().iter().cloned().collect()).unwrap(), t);
        // {∅}(∅) = {∅}
        let unit = Team::unit();
        assert_eq!(unit.project(&BTreeSet::new()).unwrap(), unit);
    }

    #[test]
    fn rel_of_examples() {
        let x = v("x");
        let y = v("y");
        let mut t = Team::empty(vec![x.clone(), y.clone()]);
        t.insert_row(vec![0, 1]);
        assert_eq!(
            t.rel_of(&[x.clone(), y.clone()]).unwrap(),
            [vec![0, 1]].into_iter().collect()
        );
        assert_eq!(t.rel_of(&[y.clone(), y.clone()]).unwrap(), [vec![1, 1]].into_iter().collect());
        let empty = Team::empty(vec![x.clone(), y]);
        assert!(empty.rel_of(&[x]).unwrap().is_empty());
    }

    #[test]
    fn restrict_structure_examples() {
        let vocab = Vocabulary::new().with("R", 2);
        let mut s = Structure::with_size(2, vocab).unwrap();
        s.add_tuple("R", vec![0, 1]).unwrap();
        s.add_tuple("R", vec![0, 0]).unwrap();
        let b: BTreeSet<ElemId> = [0].into_iter().collect();
        let r = s.restrict(&b).unwrap();
        assert_eq!(r.size(), 1);
        assert_eq!(r.tuples("R").unwrap().len(), 1);

        let full: BTreeSet<ElemId> = [0, 1].into_iter().collect();
        assert_eq!(s.restrict(&full).unwrap(), s);

        assert!(s.restrict(&BTreeSet::new()).is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_structures(&Vocabulary::new().with("P", 1), 1).count(), 2);
        assert_eq!(enumerate_structures(&Vocabulary::new().with("R", 2), 2).count(), 16);
        assert_eq!(enumerate_structures(&Vocabulary::new(), 3).count(), 1);

        let s = two_elem();
        assert_eq!(enumerate_teams(&s, &[v("x")]).count(), 4);
        assert_eq!(enumerate_teams(&s, &[]).count(), 2);
        assert_eq!(enumerate_teams(&s, &[v("x"), v("y")]).count(), 16);
    }

    #[test]
    fn json_round_trip() {
        let vocab = Vocabulary::new().with("R", 2).with("P", 1);
        let mut s = Structure::new(vec!["a".into(), "b".into()], vocab).unwrap();
        s.add_tuple("R", vec![0, 1]).unwrap();
        let j = s.to_json();
        let s2 = Structure::from_json(&j).unwrap();
        assert_eq!(s, s2);

        let mut t = Team::empty(vec![v("x"), v("y")]);
        t.insert_row(vec![0, 1]);
        t.insert_row(vec![1, 0]);
        let tj = t.to_json(&s);
        assert_eq!(Team::from_json(&tj, &s).unwrap(), t);
    }
}

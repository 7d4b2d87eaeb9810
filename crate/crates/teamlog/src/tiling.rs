//! Tile types and tile sets, gridlike and striped-gridlike structure checks,
//! a brute-force tilability oracle, and the generators for φ_T, φ_non-grid,
//! and φ_non-T-tiling of the tiling reduction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ElemId, ModelError, Structure};
use crate::syntax::{BuiltinAtom, Formula, Variable, Vocabulary};

/// A tile type: a colour for each of the four sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileType {
    pub top: u32,
    pub right: u32,
    pub bottom: u32,
    pub left: u32,
}

/// A finite nonempty ordered set of tile types; tile i is named `Pi` in
/// formulas and expansions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileSet {
    pub tiles: Vec<TileType>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TileSetError {
    #[error("tile set must be nonempty")]
    Empty,
    #[error("invalid tile set JSON: {0}")]
    Json(String),
}

impl TileSet {
    pub fn new(tiles: Vec<TileType>) -> Result<TileSet, TileSetError> {
        if tiles.is_empty() {
            return Err(TileSetError::Empty);
        }
        Ok(TileSet { tiles })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<TileSet, TileSetError> {
        let ts: TileSet =
            serde_json::from_value(value.clone()).map_err(|e| TileSetError::Json(e.to_string()))?;
        if ts.tiles.is_empty() {
            return Err(TileSetError::Empty);
        }
        Ok(ts)
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The predicate name of tile `i`.
    pub fn predicate(i: usize) -> String {
        format!("P{i}")
    }
}

/// The vocabulary of gridlike structures: {V:2, H:2}.
pub fn grid_vocab() -> Vocabulary {
    Vocabulary::new().with("V", 2).with("H", 2)
}

/// The vocabulary of striped gridlike structures: {V, H, C, U, P, Q}.
pub fn striped_grid_vocab() -> Vocabulary {
    grid_vocab().with("C", 1).with("U", 1).with("P", 1).with("Q", 1)
}

/// `base` extended with the tile predicates P0,…,Pn-1.
pub fn tile_vocab(base: &Vocabulary, tiles: &TileSet) -> Vocabulary {
    let mut v = base.clone();
    for i in 0..tiles.len() {
        v.add(&TileSet::predicate(i), 1).expect("tile predicate clashes with base vocabulary");
    }
    v
}

// ---------------------------------------------------------------------------
// Structure checks

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridViolation {
    /// No V-successor for this element.
    VNotSerial { a: ElemId },
    /// No H-successor for this element.
    HNotSerial { a: ElemId },
    /// V(a,b), H(b,c), H(a,b2), V(b2,c2) with c ≠ c2.
    Confluence { a: ElemId, b: ElemId, c: ElemId, b2: ElemId, c2: ElemId },
}

/// Checks the three gridlike conditions by direct enumeration; `Err` carries
/// the first violating witness in lexicographic order.
pub fn is_gridlike(s: &Structure) -> Result<(), GridViolation> {
    let n = s.size();
    for a in 0..n {
        if !(0..n).any(|b| s.holds("V", &[a, b])) {
            return Err(GridViolation::VNotSerial { a });
        }
    }
    for a in 0..n {
        if !(0..n).any(|b| s.holds("H", &[a, b])) {
            return Err(GridViolation::HNotSerial { a });
        }
    }
    for a in 0..n {
        for b in 0..n {
            if !s.holds("V", &[a, b]) {
                continue;
            }
            for c in 0..n {
                if !s.holds("H", &[b, c]) {
                    continue;
                }
                for b2 in 0..n {
                    if !s.holds("H", &[a, b2]) {
                        continue;
                    }
                    for c2 in 0..n {
                        if s.holds("V", &[b2, c2]) && c != c2 {
                            return Err(GridViolation::Confluence { a, b, c, b2, c2 });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StripedViolation {
    Grid(GridViolation),
    /// P or Q is not a singleton.
    NotSingleton { rel: String },
    /// P and Q are not distinct.
    NotDistinct,
    /// U differs from P ∪ Q at this element.
    NotUnion { elem: ElemId },
    /// An H edge with different C values or a V edge with equal C values.
    Stripe { edge: String, a: ElemId, b: ElemId },
}

/// Checks the striped-gridlike conditions: gridlike reduct, P and Q distinct
/// singletons, U = P ∪ Q, and the stripe property
/// (H(a,b) ⇒ (C(a)⇔C(b))) ∧ (V(a,b) ⇒ (C(a)⇔¬C(b))).
pub fn is_striped_gridlike(s: &Structure) -> Result<(), StripedViolation> {
    is_gridlike(s).map_err(StripedViolation::Grid)?;
    let n = s.size();
    let unary = |rel: &str| -> Vec<ElemId> { (0..n).filter(|&e| s.holds(rel, &[e])).collect() };
    let p = unary("P");
    let q = unary("Q");
    if p.len() != 1 {
        return Err(StripedViolation::NotSingleton { rel: "P".into() });
    }
    if q.len() != 1 {
        return Err(StripedViolation::NotSingleton { rel: "Q".into() });
    }
    if p == q {
        return Err(StripedViolation::NotDistinct);
    }
    for e in 0..n {
        let in_union = e == p[0] || e == q[0];
        if s.holds("U", &[e]) != in_union {
            return Err(StripedViolation::NotUnion { elem: e });
        }
    }
    for a in 0..n {
        for b in 0..n {
            let ca = s.holds("C", &[a]);
            let cb = s.holds("C", &[b]);
            if s.holds("H", &[a, b]) && ca != cb {
                return Err(StripedViolation::Stripe { edge: "H".into(), a, b });
            }
            if s.holds("V", &[a, b]) && ca == cb {
                return Err(StripedViolation::Stripe { edge: "V".into(), a, b });
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Tilability oracle

#[derive(Debug, Clone)]
pub enum TilingResult {
    /// The expansion interpreting each Pi as the points carrying tile i.
    Tilable(Structure),
    NotTilable,
}

impl TilingResult {
    pub fn is_tilable(&self) -> bool {
        matches!(self, TilingResult::Tilable(_))
    }
}

/// Exhaustive backtracking search over tile assignments: every point gets
/// exactly one tile, H edges match right-to-left colours, V edges match
/// top-to-bottom colours. Returns the lexicographically first valid
/// assignment as an expansion.
pub fn brute_force_tilable(
    structure: &Structure,
    tiles: &TileSet,
) -> Result<TilingResult, ModelError> {
    let n = structure.size();
    let mut assignment: Vec<usize> = Vec::with_capacity(n);

    fn compatible(s: &Structure, tiles: &TileSet, asg: &[usize], u: usize, t: usize) -> bool {
        let tu = tiles.tiles[t];
        // Edges inside the assigned prefix, including the loop on u itself.
        for (v, &tv_idx) in asg.iter().chain(std::iter::once(&t)).enumerate().take(u + 1) {
            let tv = tiles.tiles[tv_idx];
            if s.holds("H", &[u, v]) && tu.right != tv.left {
                return false;
            }
            if s.holds("H", &[v, u]) && tv.right != tu.left {
                return false;
            }
            if s.holds("V", &[u, v]) && tu.top != tv.bottom {
                return false;
            }
            if s.holds("V", &[v, u]) && tv.top != tu.bottom {
                return false;
            }
        }
        true
    }

    fn search(s: &Structure, tiles: &TileSet, asg: &mut Vec<usize>, n: usize) -> bool {
        if asg.len() == n {
            return true;
        }
        let u = asg.len();
        for t in 0..tiles.len() {
            if compatible(s, tiles, asg, u, t) {
                asg.push(t);
                if search(s, tiles, asg, n) {
                    return true;
                }
                asg.pop();
            }
        }
        false
    }

    if !search(structure, tiles, &mut assignment, n) {
        return Ok(TilingResult::NotTilable);
    }
    let mut expanded = structure.clone();
    for i in 0..tiles.len() {
        let ext = (0..n).filter(|&u| assignment[u] == i).map(|u| vec![u]).collect();
        expanded = expanded.expand(&TileSet::predicate(i), 1, ext)?;
    }
    Ok(TilingResult::Tilable(expanded))
}

/// All expansions of the structure with arbitrary extensions for the tile
/// predicates (2^(|A|·|T|) of them), in lexicographic bitmask order.
pub fn enumerate_expansions<'a>(
    structure: &'a Structure,
    tiles: &TileSet,
) -> impl Iterator<Item = Structure> + 'a {
    let n = structure.size();
    let t = tiles.len();
    let bits = n * t;
    assert!(bits < 63, "expansion space too large to enumerate");
    (0u64..(1 << bits)).map(move |mask| {
        let mut s = structure.clone();
        for i in 0..t {
            let ext = (0..n)
                .filter(|&u| mask >> (i * n + u) & 1 == 1)
                .map(|u| vec![u])
                .collect();
            s = s.expand(&TileSet::predicate(i), 1, ext).unwrap();
        }
        s
    })
}

// ---------------------------------------------------------------------------
// Formula generators

fn v(n: &str) -> Variable {
    Variable::new(n)
}

fn lit(rel: &str, args: &[&str], positive: bool) -> Formula {
    Formula::RelLit { rel: rel.to_string(), args: args.iter().map(|a| v(a)).collect(), positive }
}

fn dep(args: &[&str]) -> Formula {
    Formula::Builtin(BuiltinAtom::Dep { args: args.iter().map(|a| v(a)).collect() })
}

/// The tiling-violation sentence: some point carries not exactly one tile, or
/// some H edge mismatches right/left colours, or some V edge mismatches
/// top/bottom colours. FO², NNF, over {x, y}. A structure is not T-tilable
/// iff every expansion by the tile predicates satisfies φ_T.
pub fn phi_t(tiles: &TileSet) -> Formula {
    let t = tiles.len();
    let p = |i: usize, var: &str| lit(&TileSet::predicate(i), &[var], true);
    let not_p = |i: usize, var: &str| lit(&TileSet::predicate(i), &[var], false);

    // (⋀_t ¬P_t(x)) ∨ ⋁_{t≠s} (P_t(x) ∧ P_s(x))
    let no_tile = Formula::big_and((0..t).map(|i| not_p(i, "x")).collect());
    let mut overlaps = Vec::new();
    for i in 0..t {
        for j in 0..t {
            if i != j {
                overlaps.push(Formula::and(p(i, "x"), p(j, "x")));
            }
        }
    }
    let mut bad_point = no_tile;
    if !overlaps.is_empty() {
        bad_point = Formula::or(bad_point, Formula::big_or(overlaps));
    }
    let bad_point = Formula::exists("x", bad_point);

    let edge_violation = |rel: &str, mismatch: &dyn Fn(TileType, TileType) -> bool| -> Formula {
        let mut cases = Vec::new();
        for (i, ti) in tiles.tiles.iter().enumerate() {
            for (j, tj) in tiles.tiles.iter().enumerate() {
                if mismatch(*ti, *tj) {
                    cases.push(Formula::and(p(i, "x"), p(j, "y")));
                }
            }
        }
        Formula::exists(
            "x",
            Formula::exists("y", Formula::and(lit(rel, &["x", "y"], true), Formula::big_or(cases))),
        )
    };
    let bad_h = edge_violation("H", &|ti, tj| ti.right != tj.left);
    let bad_v = edge_violation("V", &|ti, tj| ti.top != tj.bottom);

    Formula::or(Formula::or(bad_point, bad_h), bad_v)
}

/// φ_non-serial := ∃x∀y ¬V(x,y) ∨ ∃x∀y ¬H(x,y)
fn phi_non_serial() -> Formula {
    let half = |rel: &str| {
        Formula::exists("x", Formula::forall("y", lit(rel, &["x", "y"], false)))
    };
    Formula::or(half("V"), half("H"))
}

/// φ_non-singleton(X) := ∀x ¬X(x) ∨ ∃x∃y (X(x) ∧ X(y) ∧ ¬x=y)
fn phi_non_singleton(x_rel: &str) -> Formula {
    Formula::or(
        Formula::forall("x", lit(x_rel, &["x"], false)),
        Formula::exists(
            "x",
            Formula::exists(
                "y",
                Formula::and(
                    Formula::and(lit(x_rel, &["x"], true), lit(x_rel, &["y"], true)),
                    Formula::neq("x", "y"),
                ),
            ),
        ),
    )
}

/// φ_non-distinct(X,Y) := ∃x (X(x) ∧ Y(x))
fn phi_non_distinct(x_rel: &str, y_rel: &str) -> Formula {
    Formula::exists("x", Formula::and(lit(x_rel, &["x"], true), lit(y_rel, &["x"], true)))
}

/// φ_non-union(X,Y,Z) := ∃x (X(x) ∧ ¬Y(x) ∧ ¬Z(x)) ∨ ∃x (¬X(x) ∧ (Y(x) ∨ Z(x))).
/// The first disjunct is a conjunction: an element of X outside both parts.
/// (A disjunction there would make the formula true on every model with
/// nonempty U once P and Q are distinct singletons, contradicting the
/// intended "false exactly on correct unions" semantics.)
fn phi_non_union(x_rel: &str, y_rel: &str, z_rel: &str) -> Formula {
    Formula::or(
        Formula::exists(
            "x",
            Formula::and(
                lit(x_rel, &["x"], true),
                Formula::and(lit(y_rel, &["x"], false), lit(z_rel, &["x"], false)),
            ),
        ),
        Formula::exists(
            "x",
            Formula::and(
                lit(x_rel, &["x"], false),
                Formula::or(lit(y_rel, &["x"], true), lit(z_rel, &["x"], true)),
            ),
        ),
    )
}

/// φ_|U|≠2 := non-singleton(P) ∨ non-singleton(Q) ∨ non-distinct(P,Q) ∨ non-union(U,P,Q)
fn phi_u_size_not_2() -> Formula {
    Formula::or(
        Formula::or(
            Formula::or(phi_non_singleton("P"), phi_non_singleton("Q")),
            phi_non_distinct("P", "Q"),
        ),
        phi_non_union("U", "P", "Q"),
    )
}

/// C(a) ⇔ C(b) as an NNF disjunction (XNOR); negate for ⇔¬.
fn c_agree(a: &str, b: &str, agree: bool) -> Formula {
    if agree {
        Formula::or(
            Formula::and(lit("C", &[a], true), lit("C", &[b], true)),
            Formula::and(lit("C", &[a], false), lit("C", &[b], false)),
        )
    } else {
        Formula::or(
            Formula::and(lit("C", &[a], true), lit("C", &[b], false)),
            Formula::and(lit("C", &[a], false), lit("C", &[b], true)),
        )
    }
}

/// φ_non-stripes := ∃x∃y ((H(x,y) ∧ (C(x)↔¬C(y))) ∨ (V(x,y) ∧ (C(x)↔C(y))))
fn phi_non_stripes() -> Formula {
    Formula::exists(
        "x",
        Formula::exists(
            "y",
            Formula::or(
                Formula::and(lit("H", &["x", "y"], true), c_agree("x", "y", false)),
                Formula::and(lit("V", &["x", "y"], true), c_agree("x", "y", true)),
            ),
        ),
    )
}

/// φ_non-C⁺-join (positive C case); the C⁻ variant flips every C literal:
/// ∀x (¬U(x) ∨ ∃y (C(y) ∧ dep(y,x) ∧ ∃x (dep(x,y) ∧ ((dep(x) ∧ H(x,y)) ∨
/// (dep(x) ∧ V(x,y))) ∧ ∃y (dep(y) ∧ (V(y,x) ∨ H(y,x)) ∧ ¬C(y)))))
fn phi_non_c_join(positive: bool) -> Formula {
    let c = |var: &str, pos: bool| lit("C", &[var], if positive { pos } else { !pos });
    let innermost = Formula::exists(
        "y",
        Formula::and(
            Formula::and(
                dep(&["y"]),
                Formula::or(lit("V", &["y", "x"], true), lit("H", &["y", "x"], true)),
            ),
            c("y", false),
        ),
    );
    let middle = Formula::exists(
        "x",
        Formula::and(
            Formula::and(
                dep(&["x", "y"]),
                Formula::or(
                    Formula::and(dep(&["x"]), lit("H", &["x", "y"], true)),
                    Formula::and(dep(&["x"]), lit("V", &["x", "y"], true)),
                ),
            ),
            innermost,
        ),
    );
    let outer = Formula::exists(
        "y",
        Formula::and(Formula::and(c("y", true), dep(&["y", "x"])), middle),
    );
    Formula::forall("x", Formula::or(lit("U", &["x"], false), outer))
}

/// φ_non-join := φ_non-C⁺-join ∨ φ_non-C⁻-join
fn phi_non_join() -> Formula {
    Formula::or(phi_non_c_join(true), phi_non_c_join(false))
}

/// φ_non-grid := φ_non-serial ∨ φ_|U|≠2 ∨ φ_non-stripes ∨ φ_non-join.
/// A {V,H,C,U,P,Q}-structure satisfies it iff it is not striped gridlike.
pub fn phi_non_grid() -> Formula {
    Formula::or(
        Formula::or(Formula::or(phi_non_serial(), phi_u_size_not_2()), phi_non_stripes()),
        phi_non_join(),
    )
}

/// All components of φ_non-grid by name, for inspection and the CLI.
pub fn phi_components() -> BTreeMap<String, Formula> {
    let mut out = BTreeMap::new();
    out.insert("non-serial".into(), phi_non_serial());
    out.insert("non-singleton-P".into(), phi_non_singleton("P"));
    out.insert("non-singleton-Q".into(), phi_non_singleton("Q"));
    out.insert("non-distinct-PQ".into(), phi_non_distinct("P", "Q"));
    out.insert("non-union-UPQ".into(), phi_non_union("U", "P", "Q"));
    out.insert("U-size-not-2".into(), phi_u_size_not_2());
    out.insert("non-stripes".into(), phi_non_stripes());
    out.insert("non-C-plus-join".into(), phi_non_c_join(true));
    out.insert("non-C-minus-join".into(), phi_non_c_join(false));
    out.insert("non-join".into(), phi_non_join());
    out.insert("non-grid".into(), phi_non_grid());
    out
}

/// φ_non-T-tiling := φ_non-grid ∨ φ_T, a two-variable dependence-logic
/// sentence over the striped grid vocabulary plus the tile predicates.
pub fn phi_non_t_tiling(tiles: &TileSet) -> Formula {
    Formula::or(phi_non_grid(), phi_t(tiles))
}

//! Workbench for logics with team semantics: syntax for three layers
//! (team logic with dependency atoms, first-order logic with counting, and
//! its existential second-order closure), evaluation over finite structures
//! and teams, translation into existential second-order form, bounded
//! satisfiability procedures, and tiling-based formula generators.

pub mod atoms;
pub mod model;
pub mod semantics;
pub mod solve;
pub mod syntax;
pub mod tiling;
pub mod translate;

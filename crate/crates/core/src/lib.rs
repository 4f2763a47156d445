//! Fixed-point structure of quantum channels and automata reading biased coins.
//!
//! The crate computes `Fix(Φ)`, the Cesàro limit `Φ^∞`, invariant states,
//! minimal enclosure decompositions and combinatorial equivalence of Kraus
//! representations, and uses them to evaluate the limiting acceptance
//! probability `f(p)` of quantum and classical coin-reading automata.

pub mod automaton;
pub mod channel;
pub mod enclosures;
pub mod error;
pub mod experiments;
pub mod fixed_points;
pub mod io;
pub mod linalg;
pub mod random;

pub use channel::{mix, DensityOperator, KrausChannel, Superoperator, ValidationReport};
pub use enclosures::{
    combinatorially_equivalent, enclosure_closure, equivalence_report, is_enclosure,
    is_minimal_enclosure, minimal_enclosure_decomposition, respects, EnclosureBlock,
    EnclosureDecomposition,
};
pub use error::{Error, Result};
pub use fixed_points::{
    cesaro_finite, cesaro_limit, fix_space, invariant_state_basis, recurrent_and_decaying,
    FixSpace,
};
pub use linalg::{ComplexMatrix, Subspace, SubspaceRelation, Tolerances, C64};

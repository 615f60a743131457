//! Exact computer algebra for finite-dimensional superalgebras.
//!
//! The crate represents superalgebras by graded structure constants over the
//! tower ℚ ⊂ ℚ(√d) ⊂ ℚ(√d)(t) and mechanically checks the classification of
//! three-dimensional right alternative superalgebras:
//!
//! * [`identity`] — a small DSL for multilinear super-identities with Koszul
//!   signs, and the classifier for the standard varieties;
//! * [`cocycle`] — super-skew bilinear maps, the `Z²` condition, the action of
//!   automorphisms and extensions of Jordan superalgebras;
//! * [`morphism`] — graded maps, basis changes, derivations, orbit dimensions
//!   and invariant fingerprints;
//! * [`degeneration`] — parametrized basis changes, limits, and the closed
//!   conditions used to rule degenerations out;
//! * [`registry`] — the bundled tables and their file format.

pub mod algebra;
pub mod cocycle;
pub mod degeneration;
pub mod identity;
pub mod linalg;
pub mod morphism;
pub mod registry;
pub mod scalar;

mod verdict;

pub use verdict::Verdict;

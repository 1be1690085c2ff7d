//! Rank-1 lattice point sets for kernel approximation in weighted Korobov
//! spaces.
//!
//! This crate builds generating vectors for rank-1 lattices by greedy
//! component-by-component search under two quality criteria — a spectral
//! worst-case interpolation bound computed from circulant Gram matrices,
//! and a cheaper projection-based bound — and provides the kernel
//! interpolant those criteria certify, along with the oracles and
//! experiment plumbing used to compare them.
//!
//! Module map:
//!
//! * [`precision`] — runtime-selectable scalar width (`f64` or MPFR);
//! * [`korobov`] — space parameters, product weights, kernel closed forms;
//! * [`lattice`] — generating vectors, node sets, text serialization;
//! * [`spectral`] — FFTs, symmetric circulant solves, `trace(K^{-1} M)`;
//! * [`criteria`] — the two lattice quality criteria plus slow oracles;
//! * [`cbc`] — component-by-component constructions for both criteria;
//! * [`interpolant`] — kernel interpolation at lattice nodes and error
//!   estimation against random test functions;
//! * [`quad`] — Gauss–Legendre panels for the integral oracle.

pub mod cbc;
pub mod criteria;
pub mod interpolant;
pub mod korobov;
pub mod lattice;
pub mod precision;
pub mod quad;
pub mod spectral;

pub use cbc::{CbcResultP, CbcResultS};
pub use criteria::{CriterionKind, CriterionValue};
pub use interpolant::{Interpolant, TestFunction};
pub use korobov::{FrequencyVector, ProductWeights, SpaceParams};
pub use lattice::{GeneratingVector, LatticePointSet};
pub use precision::{MpReal, PrecisionContext, Real};

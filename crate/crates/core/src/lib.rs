//! Inertial three-operator splitting.
//!
//! Solves monotone inclusions `0 ∈ Ax + Bx + Cx` where `A` and `B` are
//! accessed through their resolvents and `C` is cocoercive. The base
//! Davis–Yin iteration (TOS) and two inertial variants (iTOS-1 with a fixed
//! inertia schedule, iTOS-2 with the sequence-dependent adaptive rule) share
//! one driver in [`splitting`].
//!
//! Every element of the underlying Hilbert space is a [`Point`], a dense
//! `f64` matrix. Plain vectors are `n × 1` matrices; the inner product is the
//! Frobenius one.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod inpainting;
pub mod operators;
pub mod oracle;
pub mod params;
pub mod rng;
pub mod splitting;

pub use error::{Error, Result};
pub use operators::{Cocoercive, OperatorTriple, Point, Resolvent};
pub use params::{SafetyBound, Violation};
pub use splitting::{Regime, Schedule, SolveReport, SolverConfig, SolverState};

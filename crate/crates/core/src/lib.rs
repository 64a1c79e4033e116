//! Simulation and verification kernels for SLE₄(ρ) processes driven by
//! measure-valued force points, and for level lines of the Gaussian free
//! field with regulated boundary data.
//!
//! The crate is organised bottom-up:
//!
//! * [`boundary`] — Radon measure pairs, regulated boundary functions and
//!   their piecewise-constant approximations.
//! * [`loewner`] — the chordal Loewner zipper: exact slit maps, point
//!   tracking, curve extraction, conformal-radius clocks and the `d_*` metric.
//! * [`driver`] — the driving SDE with atomic force points.
//! * [`observable`] — the harmonic martingale `η_t(z)` and the Brownian
//!   motion tests built on it.
//! * [`dgff`] — discrete GFF oracle on rectangular lattices.
//! * [`crossing`] — quadrilaterals, conformal modulus and crossing estimates.
//!
//! Ensembles are evaluated through [`par`], which runs on rayon when the
//! `parallel` feature is enabled and sequentially otherwise. Results are
//! bit-identical either way.

// negated comparisons are deliberate: they reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod crossing;
pub mod dgff;
pub mod driver;
mod error;
pub mod loewner;
pub mod observable;
pub mod par;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Height gap of the level line: boundary values are `-λ` / `+λ` on the two
/// sides of the curve.
pub const LAMBDA: f64 = std::f64::consts::FRAC_PI_2;

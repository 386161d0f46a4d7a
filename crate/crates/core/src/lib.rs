//! Moment-preserving support reduction for discrete measures, and the
//! recombining iterated cubature method on Wiener space built on top of it.
//!
//! The crate is organised around a small pipeline:
//!
//! - [`measure`]: weighted point clouds in `R^N` and their pushforwards by
//!   test functions.
//! - [`polybasis`]: centered/scaled monomial bases used as test functions.
//! - [`recombine`]: Carathéodory support reduction (single elimination
//!   steps, the sequential algorithm, and the hierarchical block algorithm).
//! - [`cubature`]: piecewise-linear cubature formulas on Wiener space,
//!   truncated signatures and the Brownian expected-signature oracle.
//! - [`sde`]: deterministic transport of particle measures by solving the
//!   controlled ODE along cubature paths.
//! - [`localize`]: radius-`u` patch covers and patchwise reduction.
//! - [`schedule`]: time partitions, localization-radius schedules and the
//!   recombination cost model.
//!
//! All computation is pure and deterministic: no global state, no
//! platform-dependent math (float transcendentals go through `libm`), and
//! every tie-break is defined in terms of the lowest original particle
//! index. The crate is `no_std` (with `alloc`); IO, file formats and the
//! CLI live in the companion driver crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cubature;
pub mod localize;
pub mod measure;
pub mod models;
pub mod polybasis;
pub mod recombine;
pub mod schedule;
pub mod sde;

mod linalg;

pub use measure::ParticleMeasure;
pub use polybasis::MonomialBasis;
pub use recombine::{ReductionAlgorithm, ReductionReport};

//! Local Fréchet regression for manifold-valued responses.
//!
//! Nonparametric regression where the predictor is a real scalar and the
//! response lives in a metric space: the unit sphere, a rotational
//! ellipsoid, a torus, or a finite-dimensional Euclidean space. The crate
//! provides
//!
//! - geodesic distance engines for each space, with a mesh-based oracle for
//!   validation ([`geometry`]);
//! - the signed local-linear weights shared by every estimator
//!   ([`smoothing`]);
//! - three regression estimators — Nadaraya–Watson, local Fréchet
//!   regression (LFR), and its RKHS-embedded variant LFR^k, which never
//!   evaluates a geodesic distance — plus the closed-form Hilbert-space
//!   solution ([`estimators`]);
//! - asymptotic bias/variance quantities, bootstrap estimates, and
//!   shell-shaped confidence regions in the response space ([`inference`]);
//! - reproducible simulation scenarios on the ellipsoid and torus with MISE
//!   benchmark orchestration ([`simulation`]).
//!
//! Data-parallel loops (benchmark replicates, curve fits, bootstrap) run on
//! rayon when the default `parallel` feature is enabled and fall back to
//! sequential execution otherwise; results are bit-identical either way.

pub mod error;
pub mod estimators;
pub mod geometry;
pub mod inference;
pub mod numeric;
pub mod parallel;
pub mod rkhs;
pub mod simulation;
pub mod smoothing;

pub use error::{FrechetError, Result};

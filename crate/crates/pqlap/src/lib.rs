//! Numerical library and CLI for singular cooperative systems driven by the
//! p- and q-Laplacian:
//!
//!   −Δ_p u = λ u^{α₁} v^{β₁},   −Δ_q v = λ u^{α₂} v^{β₂}   in Ω,
//!   u, v > 0 in Ω,   u = v = 0 on ∂Ω,
//!
//! with α₁, β₂ < 0 < α₂, β₁. The crate classifies parameter sets by the
//! homogeneity constant Θ, builds explicit lower/upper barrier pairs with
//! discrete certificates, solves the shift-regularized system by monotone
//! sweeping inside the trap with continuation of the shift toward zero, and
//! probes the nonexistence threshold λ* of the homogeneous regime through an
//! energy balance.

// Guards are written `!(x > 0.0)` on purpose: parsed configuration values can
// be NaN, which `x <= 0.0` would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod cli;
pub mod config;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod plap;
pub mod problem;
pub mod report;
pub mod singular;
pub mod solver;
pub mod verify;

pub use barrier::{BarrierBuilder, BarrierCertificate, BarrierConfig, BarrierPair, ComparisonConstants};
pub use eigen::{first_eigenpair, EigenOptions, EigenPair};
pub use error::{Error, Result};
pub use mesh::{field_extrema, transfer, DomainSpec, Field, Mesh, RegionMask};
pub use plap::{solve_scalar, weak_residual, GradientRegularization, ScalarSolveOptions};
pub use problem::{choose_k, epsilon0, lambda_star, sigma, theta, Classification, ProblemParams};
pub use singular::{plap_eigen_power, singular_auxiliary_solve};
pub use solver::{continuation_solve, solve_regularized, weak_residual_system, SolveConfig, SolveReport, SolveStatus};
pub use verify::{empirical_threshold, energy_certificate, manufactured_convergence, nonexistence_probe, EnergyCertificate, ProbeOutcome};

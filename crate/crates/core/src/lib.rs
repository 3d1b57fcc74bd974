//! Spectral solver for infinite arrays of identical point interactions
//! sitting on the vertices of a polygonal chain in R^2 or R^3.
//!
//! The Hamiltonian is never discretised directly. Every spectral question
//! is routed through the Krein matrix `Gamma(i kappa)`: a point `-kappa^2`
//! is an eigenvalue exactly when `Gamma(i kappa)` has a nontrivial kernel.
//!
//! Module map:
//! - [`geometry`]: chain generators, validation of the geometric assumptions, JSON I/O.
//! - [`greens`]: free Green's functions at imaginary momentum and the Bessel kernels behind them.
//! - [`lattice`]: straight-chain lattice sums, band edges and the spectral threshold.
//! - [`operator`]: assembly of `Gamma` and of the perturbation `D`, dense symmetric eigensolver.
//! - [`solver`]: bound states as zero crossings of `Gamma` eigenvalue branches.
//! - [`verify`]: numerical checks of the structural properties the theory predicts.
//!
//! Units: `hbar^2 / 2m = 1`, so an eigenvalue `-kappa^2` is an energy.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod geometry;
pub mod greens;
pub mod lattice;
pub mod operator;
pub mod roots;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{AssumptionReport, ChainArray};
pub use greens::Kappa;
pub use lattice::BandStructure;
pub use operator::{GammaMatrix, PerturbationMatrix, SymMatrix};
pub use solver::BoundState;
pub use verify::CheckResult;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Header line attached to every report so the unit convention travels with the data.
pub const UNITS_NOTE: &str = "units: hbar^2/2m = 1; energies = -kappa^2; lengths in the chain's own units (edge length ell)";

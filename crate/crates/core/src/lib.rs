//! Numerical toolkit for the thin-layer thermal insulation problem.
//!
//! A body `Ω` with smooth boundary is wrapped in a layer `Σ_ε` of thickness
//! `ε·h(σ)` and conductivity `ε`; heat leaves through the outer boundary by a
//! Robin condition with coefficient `β`. As `ε → 0` the layer can be replaced
//! by the effective Robin condition `∂u/∂ν + β/(1+βh)·u = 0`, and the energy
//! admits the expansion `F_ε ≈ F₀ + ε·F⁽¹⁾`. This crate solves both problems
//! with piecewise-linear finite elements on boundary-fitted meshes, evaluates
//! every functional involved, and provides closed-form radial solutions used
//! as ground truth.
//!
//! Module map:
//! - [`geometry`]: Fourier curves, metric projection, stretching map, fiber quadrature
//! - [`meshing`]: interface-aligned triangulations of `Ω ∪ Σ_ε`
//! - [`linalg`]: sparse matrices, envelope Cholesky, preconditioned CG
//! - [`solver`]: diffraction and limit solves, pullback and recovery fields
//! - [`energy`]: `F_ε`, `F₀`, `F⁽¹⁾`, `G_ε` and diagnostics
//! - [`oracle`]: radial closed forms in any dimension
//! - [`experiments`]: rate, stretch, scaling and profile-optimization studies

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod meshing;
pub mod oracle;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];

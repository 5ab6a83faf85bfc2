//! Archetype and archetypoid analysis for multivariate and functional data.
//!
//! Classical archetype analysis (AA) approximates each observation by a convex
//! mixture of `k` archetypes, which are themselves convex mixtures of the
//! observations. Archetypoid analysis (ADA) restricts the archetypes to be
//! actual observations. The functional variants work on curves represented
//! in an arbitrary basis: the `L²` residual of a basis expansion reduces to a
//! quadratic form in the coefficients weighted by the basis Gram matrix, so
//! a single Cholesky factor turns the functional problem into a classical one.

pub mod archetypes;
pub mod archetypoids;
pub mod basis;
pub mod cli;
pub mod error;
pub mod functional;
pub mod io;
pub mod linalg;
pub mod render;

pub use archetypes::{elbow_scan, fit_archetypes, rss, AAModel, ElbowReport, ElbowRow, FitOptions};
pub use archetypoids::{build_candidates, fit_archetypoids, swap_optimize, ADAModel, Candidate};
pub use basis::{evaluate_curve, fit_coefficients, gram_matrix, BasisSpec, GramMatrix, SampledCurve};
pub use error::{Error, Result};
pub use functional::{
    fada, faa, k_scan_archetypoids, stack_multivariate, standardize, FunctionalAAModel,
    FunctionalDataset, MultivariateFunctionalDataset,
};
pub use linalg::SolverOptions;

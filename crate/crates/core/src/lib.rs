//! Low-rank matrix completion with and without a spatial design constraint.
//!
//! * [`matrix`] – SVD, singular value soft-thresholding, column-space projector
//! * [`mask`] – observation masks and entrywise projections
//! * [`lrmc`] – nuclear-norm completion (soft-impute)
//! * [`smc`] – spatial completion constrained to the column space of `Z`
//! * [`spatial`] – thin-plate spline design matrices with reusable recipes
//! * [`simgen`] – simulated multivariate spatial data
//! * [`harness`] – CSV I/O, metrics, experiment sweeps and SVG reports

pub mod error;
pub mod harness;
pub mod lrmc;
pub mod mask;
pub mod matrix;
pub mod simgen;
pub mod smc;
mod solver;
pub mod spatial;

pub use error::{Error, Result};
pub use lrmc::{lrmc_closed_form, lrmc_objective, lrmc_solve, CompletionFit, LambdaGrid, SolverSettings};
pub use mask::{fill_combine, project_observed, project_unobserved, ObservationMask};
pub use matrix::{column_space_projector, svd, ColumnSpaceProjector, DenseMatrix, SvdFactors};
pub use smc::{
    extract_pc_scores, predict_new_locations, select_lambda_for_rank, smc_closed_form, smc_objective,
    smc_solve, RankSelection, SelectedFit, SmcFit,
};
pub use solver::is_nonincreasing;
pub use spatial::{build_design_matrix, evaluate_design, Coordinates, DesignMatrix, DesignParams, DesignRecipe};

pub use nalgebra;

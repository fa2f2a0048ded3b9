//! Nuclear-norm low-rank matrix completion (soft-impute).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{observed_part, ObservationMask};
use crate::matrix::{self, center_columns, numerical_rank, DenseMatrix};
use crate::solver::{masked_residual, Iterate, Problem};

/// Geometric λ grid used by rank-targeted selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub points: usize,
    pub refine_points: usize,
    /// Smallest grid value as a fraction of σ₁.
    pub lower_ratio: f64,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            points: 25,
            refine_points: 10,
            lower_ratio: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub lambda: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub record_trace: bool,
    pub grid: LambdaGrid,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            max_iters: 500,
            rel_tol: 1e-5,
            record_trace: false,
            grid: LambdaGrid::default(),
        }
    }
}

impl SolverSettings {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn traced(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol must be > 0"));
        }
        let g = &self.grid;
        if g.points < 2 || !(g.lower_ratio > 0.0 && g.lower_ratio < 1.0) {
            return Err(Error::invalid("lambda grid needs >= 2 points and 0 < lower_ratio < 1"));
        }
        Ok(())
    }
}

/// Output of a completion solve.
///
/// `w_hat` is on the column-centered scale; add `offsets` per column to get
/// data units. `x_hat` is in data units: observed entries are copied from the
/// input, the rest come from `w_hat + offsets`.
#[derive(Debug, Clone)]
pub struct CompletionFit {
    pub w_hat: DenseMatrix,
    pub x_hat: DenseMatrix,
    pub lambda: f64,
    pub attained_rank: usize,
    pub iters: usize,
    pub converged: bool,
    pub objective_trace: Option<Vec<f64>>,
    pub offsets: Vec<f64>,
    /// Singular values of `w_hat`.
    pub singular_values: Vec<f64>,
}

impl CompletionFit {
    /// `w_hat` with column offsets restored.
    pub fn w_hat_uncentered(&self) -> DenseMatrix {
        let mut w = self.w_hat.as_matrix().clone();
        add_offsets(&mut w, &self.offsets);
        DenseMatrix::from_trusted(w).labelled_like(&self.x_hat)
    }
}

pub(crate) fn add_offsets(w: &mut DMatrix<f64>, offsets: &[f64]) {
    for (j, off) in offsets.iter().enumerate() {
        w.column_mut(j).add_scalar_mut(*off);
    }
}

/// Centered data plus the pieces needed to turn an iterate back into a fit.
pub(crate) struct Prepared {
    pub centered: DMatrix<f64>,
    pub offsets: Vec<f64>,
}

pub(crate) fn prepare(x: &DenseMatrix, mask: &ObservationMask) -> Result<Prepared> {
    mask.check_shape(x.rows(), x.cols())?;
    let (centered, offsets) = center_columns(x, mask)?;
    Ok(Prepared {
        centered: centered.into_matrix(),
        offsets,
    })
}

pub(crate) fn assemble(
    x: &DenseMatrix,
    mask: &ObservationMask,
    prep: &Prepared,
    it: Iterate,
    lambda: f64,
) -> CompletionFit {
    let offsets: Vec<f64> = prep.offsets.iter().zip(&it.shift).map(|(a, b)| a + b).collect();
    let mut x_hat = it.w.clone();
    add_offsets(&mut x_hat, &offsets);
    for j in 0..x.cols() {
        for i in 0..x.rows() {
            if mask.is_observed(i, j) {
                x_hat[(i, j)] = x.get(i, j);
            }
        }
    }
    CompletionFit {
        attained_rank: numerical_rank(&it.d),
        w_hat: DenseMatrix::from_trusted(it.w).labelled_like(x),
        x_hat: DenseMatrix::from_trusted(x_hat).labelled_like(x),
        lambda,
        iters: it.iters,
        converged: it.converged,
        objective_trace: it.trace,
        offsets,
        singular_values: it.d,
    }
}

/// Complete-data solution: soft-thresholded SVD of the centered matrix.
pub fn lrmc_closed_form(x: &DenseMatrix, lambda: f64) -> Result<CompletionFit> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let mask = ObservationMask::full(x.rows(), x.cols());
    let prep = prepare(x, &mask)?;
    let problem = Problem::new(&prep.centered, &mask, None);
    let (w, d) = problem.prox(&prep.centered, lambda)?;
    let shift = vec![0.0; x.cols()];
    let objective = problem.objective(&w, &shift, d.iter().sum(), lambda);
    let it = Iterate {
        w,
        d,
        shift,
        iters: 0,
        converged: true,
        trace: Some(vec![objective]),
    };
    Ok(assemble(x, &mask, &prep, it, lambda))
}

/// Proximal-gradient completion starting from `W⁰ = 0`.
pub fn lrmc_solve(x: &DenseMatrix, mask: &ObservationMask, s: &SolverSettings) -> Result<CompletionFit> {
    lrmc_solve_warm(x, mask, s, None)
}

/// As [`lrmc_solve`], optionally starting from a centered-scale iterate.
pub fn lrmc_solve_warm(
    x: &DenseMatrix,
    mask: &ObservationMask,
    s: &SolverSettings,
    warm: Option<&DenseMatrix>,
) -> Result<CompletionFit> {
    s.validate()?;
    let prep = prepare(x, mask)?;
    let problem = Problem::new(&prep.centered, mask, None);
    let it = problem.run(
        s.lambda,
        s.max_iters,
        s.rel_tol,
        s.record_trace,
        warm.map(DenseMatrix::as_matrix),
    )?;
    Ok(assemble(x, mask, &prep, it, s.lambda))
}

/// `½‖P_Ω(X) − P_Ω(W)‖²_F + λ‖W‖_*`.
pub fn lrmc_objective(x: &DenseMatrix, mask: &ObservationMask, w: &DenseMatrix, lambda: f64) -> Result<f64> {
    mask.check_shape(x.rows(), x.cols())?;
    mask.check_shape(w.rows(), w.cols())?;
    let residual = masked_residual(x.as_matrix(), w.as_matrix(), mask);
    Ok(residual + lambda * matrix::nuclear_norm(w.as_matrix())?)
}

/// Top singular value of the zero-filled centered data.
pub fn zero_filled_top_singular_value(x: &DenseMatrix, mask: &ObservationMask) -> Result<f64> {
    let prep = prepare(x, mask)?;
    Ok(matrix::svd(&observed_part(&prep.centered, mask))?
        .d
        .first()
        .copied()
        .unwrap_or(0.0))
}

//! Proximal-gradient iteration shared by the plain and spatial solvers.
//!
//! Each step fills unobserved entries from the current iterate, optionally
//! projects onto the design column space, then soft-thresholds the singular
//! values. With a projector the SVD is taken of the `k'×p` coordinate matrix
//! `QᵀW̆`, whose singular values equal those of `QQᵀW̆`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mask::{fill, ObservationMask};
use crate::matrix::{self, ColumnSpaceProjector, SvdFactors};

pub(crate) struct Problem<'a> {
    /// Column-centered data; only observed entries are read.
    pub x: &'a DMatrix<f64>,
    pub mask: &'a ObservationMask,
    pub projector: Option<&'a ColumnSpaceProjector>,
    /// Re-estimate column intercepts each step; only sound when constant
    /// columns lie in the range of the projector.
    pub refine_intercepts: bool,
}

pub(crate) struct Iterate {
    pub w: DMatrix<f64>,
    /// Singular values of `w` (already shrunk).
    pub d: Vec<f64>,
    /// Intercept adjustment added to the initial column offsets.
    pub shift: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
    pub trace: Option<Vec<f64>>,
}

/// `½‖P_Ω(x − w)‖²_F`.
pub(crate) fn masked_residual(x: &DMatrix<f64>, w: &DMatrix<f64>, mask: &ObservationMask) -> f64 {
    let mut acc = 0.0;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            if mask.is_observed(i, j) {
                let r = x[(i, j)] - w[(i, j)];
                acc += r * r;
            }
        }
    }
    0.5 * acc
}

impl<'a> Problem<'a> {
    pub fn new(
        x: &'a DMatrix<f64>,
        mask: &'a ObservationMask,
        projector: Option<&'a ColumnSpaceProjector>,
    ) -> Self {
        let refine_intercepts = projector.is_none_or(|h| {
            let ones = DMatrix::from_element(x.nrows(), 1, 1.0);
            (h.apply(&ones) - &ones).norm() <= 1e-8 * ones.norm()
        });
        Self {
            x,
            mask,
            projector,
            refine_intercepts,
        }
    }

    /// Projection (if any) followed by singular value soft-thresholding.
    pub fn prox(&self, filled: &DMatrix<f64>, lambda: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
        match self.projector {
            None => {
                let f = matrix::svd(filled)?;
                Ok(matrix::shrink(&f, lambda))
            }
            Some(h) => {
                let f = matrix::svd(&h.coordinates(filled))?;
                let lifted = SvdFactors {
                    u: h.basis() * &f.u,
                    d: f.d,
                    v: f.v,
                };
                Ok(matrix::shrink(&lifted, lambda))
            }
        }
    }

    /// Top singular value of the (projected) zero-filled data.
    pub fn top_singular_value(&self) -> Result<f64> {
        let zero = DMatrix::zeros(self.x.nrows(), self.x.ncols());
        let filled = fill(self.x, &zero, self.mask);
        let f = match self.projector {
            None => matrix::svd(&filled)?,
            Some(h) => matrix::svd(&h.coordinates(&filled))?,
        };
        Ok(f.d.first().copied().unwrap_or(0.0))
    }

    /// `½‖P_Ω(x − 1·shiftᵀ − w)‖²_F + λ·nuclear`.
    pub fn objective(&self, w: &DMatrix<f64>, shift: &[f64], nuclear: f64, lambda: f64) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.x.ncols() {
            for i in 0..self.x.nrows() {
                if self.mask.is_observed(i, j) {
                    let r = self.x[(i, j)] - shift[j] - w[(i, j)];
                    acc += r * r;
                }
            }
        }
        0.5 * acc + lambda * nuclear
    }

    /// Observed-entry column means of `x − w`: the optimal unpenalized
    /// column intercepts given `w`.
    fn intercepts(&self, w: &DMatrix<f64>) -> Vec<f64> {
        if !self.refine_intercepts {
            return vec![0.0; self.x.ncols()];
        }
        (0..self.x.ncols())
            .map(|j| {
                let (mut sum, mut count) = (0.0, 0usize);
                for i in 0..self.x.nrows() {
                    if self.mask.is_observed(i, j) {
                        sum += self.x[(i, j)] - w[(i, j)];
                        count += 1;
                    }
                }
                if count == 0 {
                    0.0
                } else {
                    sum / count as f64
                }
            })
            .collect()
    }

    /// Alternates a proximal step on `w` with an exact update of the column
    /// intercepts (when enabled). Starting from observed-mean centering, the
    /// intercepts move only when the low-rank part shifts the observed column
    /// means.
    pub fn run(
        &self,
        lambda: f64,
        max_iters: usize,
        rel_tol: f64,
        record_trace: bool,
        warm: Option<&DMatrix<f64>>,
    ) -> Result<Iterate> {
        let (n, p) = self.x.shape();
        let mut w = match warm {
            Some(w0) if w0.shape() == (n, p) => w0.clone(),
            Some(w0) => {
                return Err(Error::invalid(format!(
                    "warm start is {}x{}, data is {n}x{p}",
                    w0.nrows(),
                    w0.ncols()
                )))
            }
            None => DMatrix::zeros(n, p),
        };
        let mut shift = self.intercepts(&w);
        let mut d = Vec::new();
        let mut trace = if record_trace {
            let nuclear = if warm.is_some() {
                matrix::nuclear_norm(&w)?
            } else {
                0.0
            };
            Some(vec![self.objective(&w, &shift, nuclear, lambda)])
        } else {
            None
        };

        let mut converged = false;
        let mut iters = 0;
        for t in 1..=max_iters {
            iters = t;
            let target = DMatrix::from_fn(n, p, |i, j| self.x[(i, j)] - shift[j]);
            let filled = fill(&target, &w, self.mask);
            let (next, shrunk) = self.prox(&filled, lambda).map_err(|e| match e {
                Error::SolverFailure { message, .. } | Error::InvalidInput(message) => {
                    Error::SolverFailure {
                        iteration: t,
                        message,
                    }
                }
                other => other,
            })?;
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolverFailure {
                    iteration: t,
                    message: "non-finite iterate".into(),
                });
            }
            let change = (&next - &w).norm() / w.norm().max(1.0);
            shift = self.intercepts(&next);
            if let Some(tr) = trace.as_mut() {
                tr.push(self.objective(&next, &shift, shrunk.iter().sum(), lambda));
            }
            w = next;
            d = shrunk;
            if change < rel_tol {
                converged = true;
                break;
            }
        }
        Ok(Iterate {
            w,
            d,
            shift,
            iters,
            converged,
            trace,
        })
    }
}

/// True when `trace` never rises by more than `slack` relative to its scale.
pub fn is_nonincreasing(trace: &[f64], slack: f64) -> bool {
    trace
        .windows(2)
        .all(|w| w[1] <= w[0] + slack * w[0].abs().max(1.0))
}

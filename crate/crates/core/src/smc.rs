//! Spatial matrix completion: nuclear-norm completion with the low-rank
//! estimate constrained to the column space of a design matrix `Z`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lrmc::{add_offsets, assemble, prepare, CompletionFit, Prepared, SolverSettings};
use crate::mask::ObservationMask;
use crate::matrix::{self, numerical_rank, ColumnSpaceProjector, DenseMatrix};
use crate::solver::{masked_residual, Iterate, Problem};
use crate::spatial::{DesignMatrix, DesignRecipe};

/// Result of a spatial completion.
#[derive(Debug, Clone)]
pub struct SmcFit {
    pub completion: CompletionFit,
    /// `k × p` coefficients with `Ŵ = Z·M̂`.
    pub m_hat: DenseMatrix,
    /// `p × q` orthonormal loadings of `x_hat`.
    pub loadings: DenseMatrix,
    /// `n × q` PC scores of `x_hat`.
    pub scores: DenseMatrix,
    pub target_rank: Option<usize>,
    pub recipe: Option<DesignRecipe>,
}

impl SmcFit {
    pub fn w_hat(&self) -> &DenseMatrix {
        &self.completion.w_hat
    }

    pub fn x_hat(&self) -> &DenseMatrix {
        &self.completion.x_hat
    }
}

fn check_design(x: &DenseMatrix, z: &DesignMatrix) -> Result<ColumnSpaceProjector> {
    if z.rows() != x.rows() {
        return Err(Error::invalid(format!(
            "design has {} rows, data has {}",
            z.rows(),
            x.rows()
        )));
    }
    ColumnSpaceProjector::new(z.matrix.as_matrix())
}

fn finish(
    x: &DenseMatrix,
    mask: &ObservationMask,
    z: &DesignMatrix,
    h: &ColumnSpaceProjector,
    prep: &Prepared,
    it: Iterate,
    lambda: f64,
    target_rank: Option<usize>,
) -> Result<SmcFit> {
    let m_hat = h.coefficients(&it.w);
    let completion = assemble(x, mask, prep, it, lambda);
    let q = target_rank
        .unwrap_or(completion.attained_rank)
        .min(x.rows().min(x.cols()));
    let (scores, loadings) = if q == 0 {
        (DenseMatrix::zeros(x.rows(), 0), DenseMatrix::zeros(x.cols(), 0))
    } else {
        extract_pc_scores(&completion.x_hat, q)?
    };
    Ok(SmcFit {
        completion,
        m_hat: DenseMatrix::from_matrix(m_hat)?,
        loadings,
        scores,
        target_rank,
        recipe: z.recipe.clone(),
    })
}

/// Complete-data solution: soft-thresholded SVD of `H·X_centered`.
pub fn smc_closed_form(x: &DenseMatrix, z: &DesignMatrix, lambda: f64) -> Result<SmcFit> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let h = check_design(x, z)?;
    let mask = ObservationMask::full(x.rows(), x.cols());
    let prep = prepare(x, &mask)?;
    let problem = Problem::new(&prep.centered, &mask, Some(&h));
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
    finish(x, &mask, z, &h, &prep, it, lambda, None)
}

/// Proximal iteration: fill, project onto `col(Z)`, soft-threshold.
pub fn smc_solve(
    x: &DenseMatrix,
    mask: &ObservationMask,
    z: &DesignMatrix,
    s: &SolverSettings,
) -> Result<SmcFit> {
    smc_solve_warm(x, mask, z, s, None)
}

pub fn smc_solve_warm(
    x: &DenseMatrix,
    mask: &ObservationMask,
    z: &DesignMatrix,
    s: &SolverSettings,
    warm: Option<&DenseMatrix>,
) -> Result<SmcFit> {
    s.validate()?;
    let h = check_design(x, z)?;
    let prep = prepare(x, mask)?;
    let problem = Problem::new(&prep.centered, mask, Some(&h));
    let warm = warm.map(|w| h.apply(w.as_matrix()));
    let it = problem.run(s.lambda, s.max_iters, s.rel_tol, s.record_trace, warm.as_ref())?;
    finish(x, mask, z, &h, &prep, it, s.lambda, None)
}

/// `½‖P_Ω(X) − P_Ω(ZM)‖²_F + λ‖ZM‖_*` (halved residual, unhalved penalty).
pub fn smc_objective(
    x: &DenseMatrix,
    mask: &ObservationMask,
    z: &DesignMatrix,
    m: &DenseMatrix,
    lambda: f64,
) -> Result<f64> {
    mask.check_shape(x.rows(), x.cols())?;
    if z.rows() != x.rows() || z.cols() != m.rows() || m.cols() != x.cols() {
        return Err(Error::invalid(format!(
            "shapes do not conform: X {}x{}, Z {}x{}, M {}x{}",
            x.rows(),
            x.cols(),
            z.rows(),
            z.cols(),
            m.rows(),
            m.cols()
        )));
    }
    let w = z.matrix.as_matrix() * m.as_matrix();
    Ok(masked_residual(x.as_matrix(), &w, mask) + lambda * matrix::nuclear_norm(&w)?)
}

/// Solver output from [`select_lambda_for_rank`].
#[derive(Debug, Clone)]
pub enum SelectedFit {
    Lrmc(CompletionFit),
    Smc(SmcFit),
}

impl SelectedFit {
    pub fn completion(&self) -> &CompletionFit {
        match self {
            SelectedFit::Lrmc(f) => f,
            SelectedFit::Smc(f) => &f.completion,
        }
    }

    /// Prediction at locations with no observations. Only the spatial fit
    /// carries a model for such rows.
    pub fn predict(&self, z_new: &DesignMatrix) -> Result<DenseMatrix> {
        match self {
            SelectedFit::Lrmc(_) => Err(Error::Unsupported(
                "plain low-rank completion cannot predict at unobserved locations; use the spatial method".into(),
            )),
            SelectedFit::Smc(f) => predict_new_locations(f, z_new),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RankSelection {
    pub lambda: f64,
    pub fit: SelectedFit,
    /// Every `(λ, attained rank)` evaluated, in evaluation order.
    pub path: Vec<(f64, usize)>,
    /// Top singular value of the (projected) zero-filled data; the grid's
    /// upper end.
    pub sigma_max: f64,
}

/// Grid search for the smallest λ whose fit has rank exactly `q`.
///
/// The grid is geometric on `[lower_ratio·σ₁, σ₁]` and walked from the top
/// with warm starts; the walk stops at the first λ whose rank exceeds `q`,
/// and the bracketing interval is refined once with `refine_points` more
/// values. `z = None` selects plain low-rank completion.
pub fn select_lambda_for_rank(
    x: &DenseMatrix,
    mask: &ObservationMask,
    z: Option<&DesignMatrix>,
    q: usize,
    s: &SolverSettings,
) -> Result<RankSelection> {
    s.validate()?;
    let projector = z.map(|z| check_design(x, z)).transpose()?;
    let cap = x.cols().min(projector.as_ref().map_or(x.rows(), ColumnSpaceProjector::rank));
    if q == 0 || q > cap {
        return Err(Error::invalid(format!("target rank must be in 1..={cap}, got {q}")));
    }
    let prep = prepare(x, mask)?;
    let problem = Problem::new(&prep.centered, mask, projector.as_ref());
    let sigma_max = problem.top_singular_value()?;
    if sigma_max <= 0.0 {
        return Err(Error::RankUnreachable {
            target: q,
            min_rank: 0,
            max_rank: 0,
        });
    }

    let points = s.grid.points;
    let grid: Vec<f64> = (0..points)
        .map(|i| sigma_max * s.grid.lower_ratio.powf(i as f64 / (points - 1) as f64))
        .collect();

    let mut path = Vec::new();
    let run = |lambda: f64, warm: Option<&DMatrix<f64>>| {
        problem.run(lambda, s.max_iters, s.rel_tol, s.record_trace, warm)
    };

    // Walk down the grid until the rank overshoots.
    let mut best: Option<(f64, Iterate)> = None;
    let mut above: Option<(f64, Iterate)> = None; // last fit with rank <= q
    let mut overshoot: Option<f64> = None;
    let mut warm: Option<DMatrix<f64>> = None;
    for &lambda in &grid {
        let it = run(lambda, warm.as_ref())?;
        let rank = numerical_rank(&it.d);
        path.push((lambda, rank));
        if rank > q {
            overshoot = Some(lambda);
            break;
        }
        warm = Some(it.w.clone());
        if rank == q {
            best = Some((lambda, it));
        } else {
            above = Some((lambda, it));
        }
    }

    if let Some(low) = overshoot {
        let (high, start) = match (&best, &above) {
            (Some((l, it)), _) => (*l, it.w.clone()),
            (None, Some((l, it))) => (*l, it.w.clone()),
            (None, None) => (grid[0], DMatrix::zeros(x.rows(), x.cols())),
        };
        let mut warm = start;
        let m = s.grid.refine_points;
        let ratio = low / high;
        for i in 1..=m {
            let lambda = high * ratio.powf(i as f64 / (m + 1) as f64);
            let it = run(lambda, Some(&warm))?;
            let rank = numerical_rank(&it.d);
            path.push((lambda, rank));
            if rank > q {
                break;
            }
            warm = it.w.clone();
            if rank == q {
                best = Some((lambda, it));
            }
        }
    }

    let Some((lambda, it)) = best else {
        let ranks = path.iter().map(|&(_, r)| r);
        return Err(Error::RankUnreachable {
            target: q,
            min_rank: ranks.clone().min().unwrap_or(0),
            max_rank: ranks.max().unwrap_or(0),
        });
    };

    let fit = match (z, projector.as_ref()) {
        (Some(z), Some(h)) => SelectedFit::Smc(finish(x, mask, z, h, &prep, it, lambda, Some(q))?),
        _ => SelectedFit::Lrmc(assemble(x, mask, &prep, it, lambda)),
    };
    Ok(RankSelection {
        lambda,
        fit,
        path,
        sigma_max,
    })
}

/// `Z_new·M̂ + offsets`: full profiles at locations with no observations.
pub fn predict_new_locations(fit: &SmcFit, z_new: &DesignMatrix) -> Result<DenseMatrix> {
    if z_new.cols() != fit.m_hat.rows() {
        return Err(Error::invalid(format!(
            "new design has {} columns, fit expects {}",
            z_new.cols(),
            fit.m_hat.rows()
        )));
    }
    if let (Some(a), Some(b)) = (&fit.recipe, &z_new.recipe) {
        if a != b {
            return Err(Error::invalid("new design was built with a different recipe"));
        }
    }
    let mut out = z_new.matrix.as_matrix() * fit.m_hat.as_matrix();
    add_offsets(&mut out, &fit.completion.offsets);
    Ok(DenseMatrix::from_matrix(out)?.labelled_like(&fit.completion.x_hat))
}

/// PC scores and loadings of a (completed) matrix.
///
/// Loadings are the first `q` right singular vectors of the column-centered
/// input; scores are the centered input times the loadings.
pub fn extract_pc_scores(x: &DenseMatrix, q: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    let (centered, _) = matrix::center_columns(x, &ObservationMask::full(x.rows(), x.cols()))?;
    let f = matrix::svd(centered.as_matrix())?;
    let rank = f.rank();
    if q > rank {
        return Err(Error::invalid(format!(
            "requested {q} components but the centered input has rank {rank}"
        )));
    }
    let loadings = f.v.columns(0, q).clone_owned();
    let scores = centered.as_matrix() * &loadings;
    Ok((
        DenseMatrix::from_matrix(scores)?,
        DenseMatrix::from_matrix(loadings)?,
    ))
}

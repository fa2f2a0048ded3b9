use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, ValueEnum};
use serde::{Deserialize, Serialize};
use smc_core::harness::csvio::{
    read_complete_matrix_file, read_coordinates_file, read_matrix_file, write_matrix_file,
};
use smc_core::harness::metrics::mse_missing_entries;
use smc_core::harness::model::SpatialModel;
use smc_core::lrmc::CompletionFit;
use smc_core::spatial::{default_knot_count, DesignParams, KnotChoice};
use smc_core::{
    build_design_matrix, evaluate_design, lrmc_solve, select_lambda_for_rank, smc_solve, DenseMatrix, DesignMatrix,
    Error, Result, SelectedFit, SolverSettings,
};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Lrmc,
    Smc,
}

#[derive(Args)]
#[command(group(ArgGroup::new("regularization").required(true).args(["rank", "lambda"])))]
pub struct CompleteArgs {
    /// Data matrix CSV with a header row; missing cells are `NA`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Target rank; λ is chosen by grid search.
    #[arg(long)]
    rank: Option<usize>,
    /// Fixed nuclear-norm penalty.
    #[arg(long)]
    lambda: Option<f64>,
    /// Design matrix CSV (rows aligned with the input).
    #[arg(long, conflicts_with_all = ["coords", "covariates"])]
    design: Option<PathBuf>,
    /// Coordinates CSV with columns `s1,s2`; the design is built from these.
    #[arg(long)]
    coords: Option<PathBuf>,
    /// Covariate CSV aligned with `--coords`.
    #[arg(long, requires = "coords")]
    covariates: Option<PathBuf>,
    /// Spline knot count (default: about n/16, at most 50).
    #[arg(long, requires = "coords")]
    knots: Option<usize>,
    /// Leave out the constant and linear coordinate columns.
    #[arg(long, requires = "coords")]
    no_linear: bool,
    /// New-location coordinates to predict at (spatial method only).
    #[arg(long, conflicts_with = "predict_design")]
    predict: Option<PathBuf>,
    /// Covariates at the `--predict` locations.
    #[arg(long, requires = "predict")]
    predict_covariates: Option<PathBuf>,
    /// Design rows for new locations, when `--design` was used.
    #[arg(long)]
    predict_design: Option<PathBuf>,
    /// Complete truth for the input; adds the missing-entry MSE to the metadata.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Output prefix for `<prefix>.imputed.csv`, `.lowrank.csv`, `.fit.json`.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
pub struct PredictArgs {
    /// `<prefix>.fit.json` written by `complete --method smc`.
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    coords: PathBuf,
    #[arg(long)]
    covariates: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Serialize, Deserialize)]
pub struct FitMetadata {
    pub method: MethodArg,
    pub lambda: f64,
    pub target_rank: Option<usize>,
    pub attained_rank: usize,
    pub iters: usize,
    pub converged: bool,
    pub features: Vec<String>,
    pub offsets: Vec<f64>,
    pub singular_values: Vec<f64>,
    /// Every `(λ, rank)` evaluated during rank targeting.
    pub lambda_path: Vec<(f64, usize)>,
    pub design_columns: Option<Vec<String>>,
    /// Recipe and coefficients; present when the design came from coordinates.
    pub model: Option<SpatialModel>,
    pub mse_missing_entries: Option<f64>,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn build_design(a: &CompleteArgs, n: usize) -> Result<Option<DesignMatrix>> {
    if let Some(path) = &a.design {
        let z = read_complete_matrix_file(path)?;
        return Ok(Some(DesignMatrix::from_matrix(z)));
    }
    let Some(coords_path) = &a.coords else {
        return Ok(None);
    };
    let coords = read_coordinates_file(coords_path)?;
    if coords.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} coordinates for {n} data rows",
            coords.len()
        )));
    }
    let covariates = a.covariates.as_deref().map(read_complete_matrix_file).transpose()?;
    let params = DesignParams {
        knots: KnotChoice::Count(a.knots.unwrap_or_else(|| default_knot_count(n))),
        include_linear_terms: !a.no_linear,
    };
    let z = build_design_matrix(&coords, covariates.as_ref(), &params)?;
    for w in &z.warnings {
        log::warn!("{w}");
    }
    Ok(Some(z))
}

pub fn run(a: CompleteArgs) -> Result<()> {
    let input = read_matrix_file(&a.input)?;
    let (x, mask) = (input.values, input.mask);
    let wants_prediction = a.predict.is_some() || a.predict_design.is_some();
    if a.method == MethodArg::Lrmc && wants_prediction {
        return Err(Error::Unsupported(
            "plain low-rank completion cannot predict at new locations; use --method smc".into(),
        ));
    }
    let design = match a.method {
        MethodArg::Smc => Some(build_design(&a, x.rows())?.ok_or_else(|| {
            Error::InvalidInput("--method smc needs --design or --coords".into())
        })?),
        MethodArg::Lrmc => {
            if a.design.is_some() || a.coords.is_some() {
                log::warn!("design inputs are ignored by --method lrmc");
            }
            None
        }
    };

    let settings = SolverSettings {
        max_iters: a.max_iters,
        rel_tol: a.tol,
        ..SolverSettings::default()
    };
    let (fit, lambda_path) = match (a.rank, a.lambda) {
        (Some(q), _) => {
            let sel = select_lambda_for_rank(&x, &mask, design.as_ref(), q, &settings)?;
            (sel.fit, sel.path)
        }
        (None, Some(lambda)) => {
            let s = SolverSettings { lambda, ..settings };
            let fit = match &design {
                Some(z) => SelectedFit::Smc(smc_solve(&x, &mask, z, &s)?),
                None => SelectedFit::Lrmc(lrmc_solve(&x, &mask, &s)?),
            };
            (fit, Vec::new())
        }
        (None, None) => unreachable!("clap requires --rank or --lambda"),
    };
    let c: &CompletionFit = fit.completion();
    if !c.converged {
        log::warn!("solver stopped at {} iterations without converging", c.iters);
    }
    log::info!("lambda {} rank {} after {} iterations", c.lambda, c.attained_rank, c.iters);

    let mse = match &a.truth {
        Some(path) => {
            let truth = read_complete_matrix_file(path)?;
            if mask.missing_count() == 0 {
                log::warn!("input has no missing entries; no MSE to report");
                None
            } else {
                Some(mse_missing_entries(&truth, &c.x_hat, &mask)?)
            }
        }
        None => None,
    };
    if let Some(v) = mse {
        log::info!("missing-entry MSE {v}");
    }

    if let Some(parent) = a.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_matrix_file(&with_suffix(&a.output, ".imputed.csv"), &c.x_hat, None)?;
    write_matrix_file(&with_suffix(&a.output, ".lowrank.csv"), &c.w_hat_uncentered(), None)?;

    let model = match &fit {
        SelectedFit::Smc(f) if f.recipe.is_some() => Some(SpatialModel::from_fit(f)?),
        _ => None,
    };
    if wants_prediction {
        let z_new = match (&a.predict, &a.predict_design, &design) {
            (Some(coords), _, Some(z)) => {
                let recipe = z.recipe.as_ref().ok_or_else(|| {
                    Error::InvalidInput("--predict needs a design built from --coords; use --predict-design".into())
                })?;
                let coords = read_coordinates_file(coords)?;
                let cov = a.predict_covariates.as_deref().map(read_complete_matrix_file).transpose()?;
                evaluate_design(recipe, &coords, cov.as_ref())?
            }
            (None, Some(path), _) => DesignMatrix::from_matrix(read_complete_matrix_file(path)?),
            _ => unreachable!("prediction requires the spatial method, which requires a design"),
        };
        let predicted = fit.predict(&z_new)?;
        write_matrix_file(&with_suffix(&a.output, ".predicted.csv"), &predicted, None)?;
    }

    let meta = FitMetadata {
        method: a.method,
        lambda: c.lambda,
        target_rank: a.rank,
        attained_rank: c.attained_rank,
        iters: c.iters,
        converged: c.converged,
        features: x.labels(),
        offsets: c.offsets.clone(),
        singular_values: c.singular_values.clone(),
        lambda_path,
        design_columns: design.as_ref().map(|z| z.matrix.labels()),
        model,
        mse_missing_entries: mse,
    };
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(with_suffix(&a.output, ".fit.json"), json + "\n")?;
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let text = fs::read_to_string(&a.fit)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", a.fit.display())))?;
    let meta: FitMetadata =
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", a.fit.display())))?;
    let model = meta.model.ok_or_else(|| {
        Error::Unsupported("fit has no spatial model; only `--method smc` fits built from --coords can predict".into())
    })?;
    let coords = read_coordinates_file(&a.coords)?;
    let cov = a.covariates.as_deref().map(read_complete_matrix_file).transpose()?;
    let out: DenseMatrix = model.predict(&coords, cov.as_ref())?;
    write_matrix_file(&a.output, &out, None)
}

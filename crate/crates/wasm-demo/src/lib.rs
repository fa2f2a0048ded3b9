//! Browser bindings: simulate a scenario, compare the two completion methods,
//! and trace rank and error along a λ path.
//!
//! Everything is plain Rust first; the `#[wasm_bindgen]` attributes only add
//! exports, so the same API runs in native tests.

use smc_core::harness::config::preset;
use smc_core::harness::metrics::{column_mean_baseline, mse_missing_entries, mse_new_locations};
use smc_core::lrmc::{lrmc_solve_warm, zero_filled_top_singular_value};
use smc_core::simgen::{gen_complete, mask_seed, SimulatedDataset};
use smc_core::smc::smc_solve_warm;
use smc_core::{
    build_design_matrix, evaluate_design, select_lambda_for_rank, DenseMatrix, DesignMatrix, SelectedFit,
    SolverSettings,
};
use wasm_bindgen::prelude::*;

fn js_err(e: smc_core::Error) -> String {
    e.to_string()
}

/// One simulated replicate plus the spatial design built on its monitors.
#[wasm_bindgen]
pub struct Demo {
    data: SimulatedDataset,
    z: DesignMatrix,
    z_new: DesignMatrix,
    q: usize,
    grid_side: usize,
    settings: SolverSettings,
}

#[wasm_bindgen]
impl Demo {
    /// `preset` is e.g. `toy-C`; the seed replaces the preset's data seed.
    #[wasm_bindgen(constructor)]
    pub fn new(preset_name: &str, mcar: f64, seed: u32) -> Result<Demo, String> {
        let cfg = preset(preset_name).map_err(js_err)?;
        let mut scenario = cfg.scenario.clone();
        scenario.seed = u64::from(seed);
        scenario.mcar_level = mcar;
        let complete = gen_complete(&scenario).map_err(js_err)?;
        let data = complete
            .with_mcar(mcar, mask_seed(scenario.seed, mcar))
            .map_err(js_err)?;
        let c = &data.complete;
        let params = cfg.harness.design_params(c.n_monitor);
        let z = build_design_matrix(&c.monitor_coords(), Some(&c.monitor_covariates()), &params).map_err(js_err)?;
        let recipe = z.recipe.as_ref().expect("coordinate designs carry a recipe");
        let z_new = evaluate_design(recipe, &c.new_coords(), Some(&c.new_covariates())).map_err(js_err)?;
        Ok(Demo {
            data,
            z,
            z_new,
            q: scenario.q,
            grid_side: scenario.grid_side,
            settings: cfg.harness.solver_settings(),
        })
    }

    #[wasm_bindgen(getter)]
    pub fn grid_side(&self) -> usize {
        self.grid_side
    }

    #[wasm_bindgen(getter)]
    pub fn features(&self) -> usize {
        self.data.x_masked.cols()
    }

    #[wasm_bindgen(getter)]
    pub fn n_monitor(&self) -> usize {
        self.data.complete.n_monitor
    }

    #[wasm_bindgen(getter)]
    pub fn n_new(&self) -> usize {
        self.data.complete.coords.len() - self.data.complete.n_monitor
    }

    #[wasm_bindgen(getter)]
    pub fn missing_fraction(&self) -> f64 {
        let m = &self.data.mask;
        m.missing_count() as f64 / (m.rows() * m.cols()) as f64
    }

    /// Grid coordinates as `[x0, y0, x1, y1, …]`, monitors first.
    pub fn coords(&self) -> Vec<f64> {
        self.data.complete.coords.points().iter().flatten().copied().collect()
    }

    /// True values of one feature at every location, monitors first.
    pub fn truth(&self, feature: usize) -> Vec<f64> {
        column(&self.data.complete.x_true, feature)
    }

    /// Monitor values of one feature with hidden cells as NaN.
    pub fn observed(&self, feature: usize) -> Vec<f64> {
        let m = &self.data.mask;
        (0..self.n_monitor())
            .map(|i| {
                if feature < m.cols() && m.is_observed(i, feature) {
                    self.data.x_masked.get(i, feature)
                } else {
                    f64::NAN
                }
            })
            .collect()
    }

    /// Fits both methods at the preset's target rank.
    pub fn compare(&self) -> Result<Comparison, String> {
        let x = &self.data.x_masked;
        let mask = &self.data.mask;
        let truth = self.data.complete.monitor_truth();
        let new_truth = self.data.complete.new_truth();
        let lrmc = select_lambda_for_rank(x, mask, None, self.q, &self.settings).map_err(js_err)?;
        let smc = select_lambda_for_rank(x, mask, Some(&self.z), self.q, &self.settings).map_err(js_err)?;
        let predicted = smc.fit.predict(&self.z_new).map_err(js_err)?;
        let baseline = column_mean_baseline(x, mask, self.n_new()).map_err(js_err)?;
        let mse = |f: &SelectedFit| mse_missing_entries(&truth, &f.completion().x_hat, mask).map_err(js_err);
        Ok(Comparison {
            mse_lrmc: mse(&lrmc.fit)?,
            mse_smc: mse(&smc.fit)?,
            mse_new_smc: mse_new_locations(&new_truth, &predicted).map_err(js_err)?,
            mse_new_baseline: mse_new_locations(&new_truth, &baseline).map_err(js_err)?,
            lambda_lrmc: lrmc.lambda,
            lambda_smc: smc.lambda,
            imputed_lrmc: lrmc.fit.completion().x_hat.clone(),
            imputed_smc: smc.fit.completion().x_hat.clone(),
            predicted,
        })
    }

    /// Warm-started fits down a geometric λ grid from σ₁ to `1e-2·σ₁`.
    /// Returns `[λ, rank, missing-entry MSE]` triples, largest λ first.
    pub fn lambda_path(&self, method: &str, points: usize) -> Result<Vec<f64>, String> {
        let spatial = match method {
            "smc" => true,
            "lrmc" => false,
            other => return Err(format!("unknown method '{other}'")),
        };
        let points = points.max(2);
        let x = &self.data.x_masked;
        let mask = &self.data.mask;
        let truth = self.data.complete.monitor_truth();
        let top = zero_filled_top_singular_value(x, mask).map_err(js_err)?;
        let mut warm: Option<DenseMatrix> = None;
        let mut out = Vec::with_capacity(3 * points);
        for k in 0..points {
            let lambda = top * 1e-2f64.powf(k as f64 / (points - 1) as f64);
            let s = SolverSettings { lambda, ..self.settings.clone() };
            let fit = if spatial {
                smc_solve_warm(x, mask, &self.z, &s, warm.as_ref()).map_err(js_err)?.completion
            } else {
                lrmc_solve_warm(x, mask, &s, warm.as_ref()).map_err(js_err)?
            };
            let mse = mse_missing_entries(&truth, &fit.x_hat, mask).map_err(js_err)?;
            out.extend([lambda, fit.attained_rank as f64, mse]);
            warm = Some(fit.w_hat);
        }
        Ok(out)
    }
}

/// Errors and fitted values from [`Demo::compare`].
#[wasm_bindgen]
pub struct Comparison {
    pub mse_lrmc: f64,
    pub mse_smc: f64,
    pub mse_new_smc: f64,
    pub mse_new_baseline: f64,
    pub lambda_lrmc: f64,
    pub lambda_smc: f64,
    imputed_lrmc: DenseMatrix,
    imputed_smc: DenseMatrix,
    predicted: DenseMatrix,
}

#[wasm_bindgen]
impl Comparison {
    /// Completed monitor values of one feature.
    pub fn imputed(&self, method: &str, feature: usize) -> Vec<f64> {
        match method {
            "lrmc" => column(&self.imputed_lrmc, feature),
            _ => column(&self.imputed_smc, feature),
        }
    }

    /// Spatial predictions at the new locations.
    pub fn predicted(&self, feature: usize) -> Vec<f64> {
        column(&self.predicted, feature)
    }
}

fn column(m: &DenseMatrix, j: usize) -> Vec<f64> {
    if j >= m.cols() {
        return Vec::new();
    }
    m.as_matrix().column(j).iter().copied().collect()
}

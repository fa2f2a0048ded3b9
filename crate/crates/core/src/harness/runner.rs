//! Seeded sweeps over scenarios × MCAR levels × methods × replicates.
//!
//! Each (scenario, replicate) pair is one job: the complete data is drawn
//! once from the replicate seed, and every MCAR level masks that same data
//! with its own derived stream. Jobs are independent, so they may run on a
//! worker pool; the report is sorted afterwards.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::metrics::{column_mean_baseline, mse_missing_entries, mse_new_locations};
use crate::harness::report::{ExperimentReport, Method, ReplicateRow};
use crate::simgen::{apply_mcar, gen_complete, mask_seed, mix_seed, CompleteDataset};
use crate::smc::{select_lambda_for_rank, SelectedFit};
use crate::spatial::{build_design_matrix, evaluate_design, DesignMatrix};

/// Fraction of failed fits above which a sweep is aborted.
pub const MAX_FAILURE_RATE: f64 = 0.10;

#[derive(Debug, Clone)]
pub struct Sweep {
    pub configs: Vec<ExperimentConfig>,
    pub levels: Vec<f64>,
    pub replicates: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
}

/// Parses `start:stop:step` into the inclusive list of levels.
pub fn parse_level_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|_| Error::invalid(format!("bad level grid {spec:?}; expected start:stop:step")))?;
    let [start, stop, step] = nums[..] else {
        return Err(Error::invalid(format!("bad level grid {spec:?}; expected start:stop:step")));
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::invalid(format!("bad level grid {spec:?}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // Round to 12 decimals so 0.05 + 7·0.05 prints as 0.4.
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Seed of replicate `r` in a sweep seeded with `seed`.
pub fn replicate_seed(seed: u64, replicate: usize) -> u64 {
    mix_seed(seed, replicate as u64)
}

struct Prepared {
    complete: CompleteDataset,
    design: Option<(DesignMatrix, DesignMatrix)>,
}

fn prepare(cfg: &ExperimentConfig, seed: u64, need_design: bool) -> Result<Prepared> {
    let mut sc = cfg.scenario.clone();
    sc.seed = seed;
    let complete = gen_complete(&sc)?;
    let design = if need_design {
        let params = cfg.harness.design_params(sc.n_monitor);
        let z = build_design_matrix(&complete.monitor_coords(), Some(&complete.monitor_covariates()), &params)?;
        let recipe = z.recipe.as_ref().expect("built designs carry a recipe");
        let z_new = evaluate_design(recipe, &complete.new_coords(), Some(&complete.new_covariates()))?;
        Some((z, z_new))
    } else {
        None
    };
    Ok(Prepared { complete, design })
}

fn fit_row(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    level: f64,
    seed: u64,
    method: Method,
    mut row: ReplicateRow,
) -> ReplicateRow {
    let start = Instant::now();
    let result = (|| -> Result<()> {
        let truth = prep.complete.monitor_truth();
        let (x, mask) = apply_mcar(&truth, level, mask_seed(seed, level))?;
        let new_truth = prep.complete.new_truth();
        if new_truth.rows() > 0 {
            let baseline = column_mean_baseline(&x, &mask, new_truth.rows())?;
            row.mse_new_baseline = Some(mse_new_locations(&new_truth, &baseline)?);
        }
        let z = match method {
            Method::Lrmc => None,
            Method::Smc => prep.design.as_ref().map(|(z, _)| z),
        };
        let sel = select_lambda_for_rank(&x, &mask, z, cfg.scenario.q, &cfg.harness.solver_settings())?;
        let fit = sel.fit.completion();
        row.mse_missing = Some(mse_missing_entries(&truth, &fit.x_hat, &mask)?);
        row.attained_rank = Some(fit.attained_rank);
        row.lambda = Some(sel.lambda);
        row.iters = Some(fit.iters);
        row.converged = Some(fit.converged);
        if let (SelectedFit::Smc(_), Some((_, z_new)), true) = (&sel.fit, &prep.design, new_truth.rows() > 0) {
            row.mse_new = Some(mse_new_locations(&new_truth, &sel.fit.predict(z_new)?)?);
        }
        Ok(())
    })();
    row.wall_time = start.elapsed().as_secs_f64();
    if let Err(e) = result {
        log::warn!(
            "{} level {} {} replicate {}: {e}",
            row.scenario,
            level,
            method.as_str(),
            row.replicate
        );
        row.mse_missing = None;
        row.mse_new = None;
        row.attained_rank = None;
        row.lambda = None;
        row.iters = None;
        row.converged = None;
        row.failure = Some(e.to_string());
    }
    row
}

fn run_job(sweep: &Sweep, cfg: &ExperimentConfig, replicate: usize) -> Vec<ReplicateRow> {
    let seed = replicate_seed(sweep.seed, replicate);
    let blank = |level: f64, method: Method| ReplicateRow {
        scenario: cfg.name.clone(),
        mcar_level: level,
        method,
        replicate,
        seed,
        mse_missing: None,
        mse_new: None,
        mse_new_baseline: None,
        attained_rank: None,
        lambda: None,
        iters: None,
        converged: None,
        wall_time: 0.0,
        failure: None,
    };
    let prep = match prepare(cfg, seed, sweep.methods.contains(&Method::Smc)) {
        Ok(p) => p,
        Err(e) => {
            // Data generation failed: every fit of this replicate fails.
            return sweep
                .levels
                .iter()
                .flat_map(|&l| sweep.methods.iter().map(move |&m| (l, m)))
                .map(|(l, m)| ReplicateRow {
                    failure: Some(e.to_string()),
                    ..blank(l, m)
                })
                .collect();
        }
    };
    let mut rows = Vec::new();
    for &level in &sweep.levels {
        for &method in &sweep.methods {
            rows.push(fit_row(cfg, &prep, level, seed, method, blank(level, method)));
        }
    }
    log::debug!("{} replicate {replicate} done", cfg.name);
    rows
}

impl Sweep {
    pub fn validate(&self) -> Result<()> {
        if self.configs.is_empty() || self.levels.is_empty() || self.methods.is_empty() || self.replicates == 0 {
            return Err(Error::invalid("sweep needs at least one config, level, method and replicate"));
        }
        for cfg in &self.configs {
            cfg.validate()?;
        }
        let mut names: Vec<&str> = self.configs.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("config names in one sweep must be distinct"));
        }
        for &l in &self.levels {
            if !(l > 0.0) {
                return Err(Error::invalid(format!("MCAR level {l} leaves nothing to evaluate")));
            }
            let mut c = self.configs[0].scenario.clone();
            c.mcar_level = l;
            c.validate()?;
        }
        Ok(())
    }

    fn jobs(&self) -> Vec<(&ExperimentConfig, usize)> {
        self.configs
            .iter()
            .flat_map(|c| (0..self.replicates).map(move |r| (c, r)))
            .collect()
    }

    /// Runs every job, using up to `threads` workers when the `parallel`
    /// feature is on (`None` lets the pool decide).
    pub fn run(&self, threads: Option<usize>) -> Result<ExperimentReport> {
        self.validate()?;
        let jobs = self.jobs();
        let rows = run_jobs(self, &jobs, threads)?;
        let report = ExperimentReport::new(rows);
        let total = report.rows().len();
        let failed = report.failure_count();
        if failed as f64 > MAX_FAILURE_RATE * total as f64 {
            return Err(Error::SolverFailure {
                iteration: 0,
                message: format!("{failed} of {total} fits failed (limit {:.0}%)", MAX_FAILURE_RATE * 100.0),
            });
        }
        Ok(report)
    }
}

#[cfg(feature = "parallel")]
fn run_jobs(sweep: &Sweep, jobs: &[(&ExperimentConfig, usize)], threads: Option<usize>) -> Result<Vec<ReplicateRow>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .flat_map_iter(|&(cfg, r)| run_job(sweep, cfg, r))
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn run_jobs(sweep: &Sweep, jobs: &[(&ExperimentConfig, usize)], _threads: Option<usize>) -> Result<Vec<ReplicateRow>> {
    Ok(jobs.iter().flat_map(|&(cfg, r)| run_job(sweep, cfg, r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_grid_parses_inclusive() {
        let g = parse_level_grid("0.05:0.40:0.05").unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g[7], 0.4);
        assert_eq!(g[2], 0.15);
        assert_eq!(parse_level_grid("0.05:0.05:0.05").unwrap(), vec![0.05]);
        assert!(parse_level_grid("0.1:0.05:0.05").is_err());
        assert!(parse_level_grid("0.1:0.2").is_err());
    }
}

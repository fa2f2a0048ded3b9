use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use smc_core::harness::config::{preset, ExperimentConfig};
use smc_core::harness::csvio::{write_coordinates_file, write_matrix_file};
use smc_core::harness::report::{ExperimentReport, Method, Metric};
use smc_core::harness::runner::{parse_level_grid, Sweep};
use smc_core::harness::svg::render_panel;
use smc_core::simgen::gen_dataset;
use smc_core::{Error, Result};

use crate::ConfigSource;

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// MCAR levels as `start:stop:step`, inclusive.
    #[arg(long, default_value = "0.05:0.40:0.05")]
    mcar_grid: String,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, value_delimiter = ',', default_value = "lrmc,smc")]
    methods: Vec<String>,
    /// Base seed; replicate seeds are derived from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, env = "SMC_THREADS")]
    threads: Option<usize>,
    /// Also write one SVG panel per scenario.
    #[arg(long)]
    plot: bool,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// MCAR level (default: the config's).
    #[arg(long)]
    mcar: Option<f64>,
    /// Dataset seed (default: the config's).
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix.
    #[arg(long)]
    output: PathBuf,
}

fn load_configs(source: &ConfigSource) -> Result<Vec<ExperimentConfig>> {
    match (&source.config, &source.preset) {
        (Some(path), _) => Ok(vec![ExperimentConfig::load(path)?]),
        (None, Some(names)) => names.split(',').map(|n| preset(n.trim())).collect(),
        (None, None) => unreachable!("clap requires --config or --preset"),
    }
}

fn create(path: PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn print_summary(report: &ExperimentReport) {
    println!("{:<10} {:>6} {:<5} {:>12} {:>12} {:>12}", "scenario", "mcar", "method", "mse_missing", "mse_new", "baseline");
    let mut seen = Vec::new();
    for r in report.rows() {
        let key = (r.scenario.clone(), r.mcar_level.to_bits(), r.method);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let mean = |m: Metric| {
            report
                .find(&r.scenario, r.mcar_level, r.method, m)
                .map_or_else(|| "-".to_string(), |a| format!("{:.5}", a.mean))
        };
        println!(
            "{:<10} {:>6.2} {:<5} {:>12} {:>12} {:>12}",
            r.scenario,
            r.mcar_level,
            r.method.as_str(),
            mean(Metric::MseMissing),
            mean(Metric::MseNew),
            mean(Metric::MseNewBaseline)
        );
    }
}

pub fn run(a: SimulateArgs, quiet: bool) -> Result<()> {
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>>>()?;
    let sweep = Sweep {
        configs: load_configs(&a.source)?,
        levels: parse_level_grid(&a.mcar_grid)?,
        replicates: a.replicates,
        methods,
        seed: a.seed,
    };
    log::info!(
        "{} config(s) x {} level(s) x {} replicate(s)",
        sweep.configs.len(),
        sweep.levels.len(),
        sweep.replicates
    );
    let report = sweep.run(a.threads)?;
    if report.failure_count() > 0 {
        log::warn!("{} fit(s) failed; see the status column", report.failure_count());
    }

    fs::create_dir_all(&a.output)?;
    report.write_replicates(create(a.output.join("replicates.csv"))?)?;
    report.write_aggregates(create(a.output.join("aggregates.csv"))?)?;
    report.write_timings(create(a.output.join("timings.csv"))?)?;
    if a.plot {
        for scenario in report.scenarios() {
            if let Some(svg) = render_panel(&report, &scenario) {
                fs::write(a.output.join(format!("{scenario}.svg")), svg)?;
            }
        }
    }
    if !quiet {
        print_summary(&report);
    }
    Ok(())
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let mut configs = load_configs(&a.source)?;
    if configs.len() != 1 {
        return Err(Error::InvalidInput("generate takes a single config".into()));
    }
    let mut cfg = configs.remove(0).scenario;
    if let Some(level) = a.mcar {
        cfg.mcar_level = level;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let d = gen_dataset(&cfg)?;
    let c = &d.complete;
    let path = |suffix: &str| {
        let mut s = a.output.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    if let Some(parent) = a.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_matrix_file(&path(".csv"), &d.x_masked, Some(&d.mask))?;
    write_matrix_file(&path(".truth.csv"), &c.monitor_truth(), None)?;
    write_coordinates_file(&path(".coords.csv"), &c.monitor_coords())?;
    write_matrix_file(&path(".covariates.csv"), &c.monitor_covariates(), None)?;
    if c.coords.len() > c.n_monitor {
        write_coordinates_file(&path(".new-coords.csv"), &c.new_coords())?;
        write_matrix_file(&path(".new-covariates.csv"), &c.new_covariates(), None)?;
        write_matrix_file(&path(".new-truth.csv"), &c.new_truth(), None)?;
    }
    log::info!(
        "{} monitors ({} of {} entries missing), {} new locations",
        c.n_monitor,
        d.mask.missing_count(),
        c.n_monitor * cfg.p,
        c.coords.len() - c.n_monitor
    );
    Ok(())
}

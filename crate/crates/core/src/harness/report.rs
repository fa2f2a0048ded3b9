//! Replicate-level results and their per-cell aggregates.
//!
//! Rows are kept in canonical order (scenario, level, method, replicate) no
//! matter in which order replicates finished. Wall times go to a separate
//! timings file so the report files themselves are reproducible byte for
//! byte.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::csvio::format_value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lrmc,
    Smc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lrmc => "lrmc",
            Method::Smc => "smc",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lrmc" => Ok(Method::Lrmc),
            "smc" => Ok(Method::Smc),
            other => Err(Error::invalid(format!("unknown method {other:?} (expected lrmc or smc)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRow {
    /// Config name, e.g. `toy-C`.
    pub scenario: String,
    pub mcar_level: f64,
    pub method: Method,
    pub replicate: usize,
    pub seed: u64,
    pub mse_missing: Option<f64>,
    /// Only the spatial method predicts at new locations.
    pub mse_new: Option<f64>,
    /// Column-mean predictor at the new locations.
    pub mse_new_baseline: Option<f64>,
    pub attained_rank: Option<usize>,
    pub lambda: Option<f64>,
    pub iters: Option<usize>,
    pub converged: Option<bool>,
    pub wall_time: f64,
    /// `None` for a successful fit, otherwise the error message.
    pub failure: Option<String>,
}

impl ReplicateRow {
    fn key(&self) -> (&str, u64, Method, usize) {
        (&self.scenario, self.mcar_level.to_bits(), self.method, self.replicate)
    }

    pub fn metric(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::MseMissing => self.mse_missing,
            Metric::MseNew => self.mse_new,
            Metric::MseNewBaseline => self.mse_new_baseline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    MseMissing,
    MseNew,
    MseNewBaseline,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::MseMissing, Metric::MseNew, Metric::MseNewBaseline];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::MseMissing => "mse_missing",
            Metric::MseNew => "mse_new",
            Metric::MseNewBaseline => "mse_new_baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub scenario: String,
    pub mcar_level: f64,
    pub method: Method,
    pub metric: Metric,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; `None` with fewer than two values.
    pub sd: Option<f64>,
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, Some((ss / (n - 1.0)).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    rows: Vec<ReplicateRow>,
    aggregates: Vec<AggregateRow>,
}

fn aggregate(rows: &[ReplicateRow]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let head = &rows[start];
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| {
                    r.scenario == head.scenario
                        && r.mcar_level.to_bits() == head.mcar_level.to_bits()
                        && r.method == head.method
                })
                .count();
        for metric in Metric::ALL {
            let values: Vec<f64> = rows[start..end].iter().filter_map(|r| r.metric(metric)).collect();
            if values.is_empty() {
                continue;
            }
            let (mean, sd) = mean_sd(&values);
            out.push(AggregateRow {
                scenario: head.scenario.clone(),
                mcar_level: head.mcar_level,
                method: head.method,
                metric,
                count: values.len(),
                mean,
                sd,
            });
        }
        start = end;
    }
    out
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn opt_f(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), format_value)
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("report write: {e}"))
}

impl ExperimentReport {
    /// Sorts rows into canonical order and computes the aggregates.
    pub fn new(mut rows: Vec<ReplicateRow>) -> Self {
        rows.sort_by(|a, b| {
            a.scenario
                .cmp(&b.scenario)
                .then(a.mcar_level.total_cmp(&b.mcar_level))
                .then(a.method.cmp(&b.method))
                .then(a.replicate.cmp(&b.replicate))
        });
        let aggregates = aggregate(&rows);
        Self { rows, aggregates }
    }

    pub fn rows(&self) -> &[ReplicateRow] {
        &self.rows
    }

    pub fn aggregates(&self) -> &[AggregateRow] {
        &self.aggregates
    }

    pub fn failure_count(&self) -> usize {
        self.rows.iter().filter(|r| r.failure.is_some()).count()
    }

    pub fn find(&self, scenario: &str, level: f64, method: Method, metric: Metric) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| {
            a.scenario == scenario && a.mcar_level.to_bits() == level.to_bits() && a.method == method && a.metric == metric
        })
    }

    /// Distinct scenario names in canonical order.
    pub fn scenarios(&self) -> Vec<String> {
        let mut v: Vec<String> = self.rows.iter().map(|r| r.scenario.clone()).collect();
        v.dedup();
        v
    }

    /// Recomputes every aggregate from the replicate rows and checks that
    /// the stored values agree to 1e-12, and that no key repeats.
    pub fn verify(&self) -> Result<()> {
        if self.rows.windows(2).any(|w| w[0].key() == w[1].key()) {
            return Err(Error::invalid("duplicate replicate rows in report"));
        }
        let fresh = aggregate(&self.rows);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        let ok = fresh.len() == self.aggregates.len()
            && fresh.iter().zip(&self.aggregates).all(|(f, s)| {
                f.count == s.count
                    && f.metric == s.metric
                    && close(f.mean, s.mean)
                    && match (f.sd, s.sd) {
                        (Some(a), Some(b)) => close(a, b),
                        (None, None) => true,
                        _ => false,
                    }
            });
        if !ok {
            return Err(Error::invalid("report aggregates disagree with replicate rows"));
        }
        if self
            .rows
            .iter()
            .flat_map(|r| Metric::ALL.map(|m| r.metric(m)))
            .flatten()
            .any(|v| !(v >= 0.0))
        {
            return Err(Error::invalid("negative or NaN MSE in report"));
        }
        Ok(())
    }

    pub fn write_replicates<W: Write>(&self, out: W) -> Result<()> {
        self.verify()?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "scenario",
            "mcar_level",
            "method",
            "replicate",
            "seed",
            "mse_missing",
            "mse_new",
            "mse_new_baseline",
            "attained_rank",
            "lambda",
            "iters",
            "converged",
            "status",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.scenario.clone(),
                format_value(r.mcar_level),
                r.method.as_str().to_string(),
                r.replicate.to_string(),
                r.seed.to_string(),
                opt_f(r.mse_missing),
                opt_f(r.mse_new),
                opt_f(r.mse_new_baseline),
                opt(r.attained_rank),
                opt_f(r.lambda),
                opt(r.iters),
                opt(r.converged),
                r.failure.clone().map_or_else(|| "ok".to_string(), |m| format!("failed: {m}")),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_aggregates<W: Write>(&self, out: W) -> Result<()> {
        self.verify()?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario", "mcar_level", "method", "metric", "count", "mean", "sd"])
            .map_err(csv_err)?;
        for a in &self.aggregates {
            w.write_record([
                a.scenario.clone(),
                format_value(a.mcar_level),
                a.method.as_str().to_string(),
                a.metric.as_str().to_string(),
                a.count.to_string(),
                format_value(a.mean),
                opt_f(a.sd),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_timings<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario", "mcar_level", "method", "replicate", "wall_time"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.scenario.clone(),
                format_value(r.mcar_level),
                r.method.as_str().to_string(),
                r.replicate.to_string(),
                format!("{:.6}", r.wall_time),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

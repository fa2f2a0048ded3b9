//! Experiment configuration files and the shipped presets.
//!
//! A config is a TOML document with a `[scenario]` table (the simulation
//! model) and an optional `[harness]` table (design and solver settings).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lrmc::SolverSettings;
use crate::simgen::ScenarioConfig;
use crate::spatial::{default_knot_count, DesignParams, KnotChoice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSettings {
    /// Spline knots per design; 0 means the default for the monitor count.
    pub knots: usize,
    pub include_linear_terms: bool,
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for HarnessSettings {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            knots: 25,
            include_linear_terms: true,
            max_iters: s.max_iters,
            rel_tol: s.rel_tol,
        }
    }
}

impl HarnessSettings {
    pub fn design_params(&self, n_monitor: usize) -> DesignParams {
        let count = if self.knots == 0 {
            default_knot_count(n_monitor)
        } else {
            self.knots
        };
        DesignParams {
            knots: KnotChoice::Count(count),
            include_linear_terms: self.include_linear_terms,
        }
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            ..SolverSettings::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label used in reports; defaults to the scenario letter.
    #[serde(default)]
    pub name: String,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub harness: HarnessSettings,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::invalid(format!("config: {}", e.message())))?;
        if cfg.name.is_empty() {
            cfg.name = cfg.scenario.scenario.letter().to_string();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.harness.solver_settings().validate()?;
        if self.harness.knots > self.scenario.n_monitor {
            return Err(Error::invalid(format!(
                "{} knots for {} monitors",
                self.harness.knots, self.scenario.n_monitor
            )));
        }
        Ok(())
    }
}

const PRESETS: [(&str, &str); 8] = [
    ("toy-A", include_str!("../../presets/toy-A.toml")),
    ("toy-B", include_str!("../../presets/toy-B.toml")),
    ("toy-C", include_str!("../../presets/toy-C.toml")),
    ("toy-D", include_str!("../../presets/toy-D.toml")),
    ("high-A", include_str!("../../presets/high-A.toml")),
    ("high-B", include_str!("../../presets/high-B.toml")),
    ("high-C", include_str!("../../presets/high-C.toml")),
    ("high-D", include_str!("../../presets/high-D.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Looks up a shipped preset by name (case-insensitive).
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    PRESETS
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, text)| ExperimentConfig::from_toml(text))
        .unwrap_or_else(|| {
            Err(Error::invalid(format!(
                "unknown preset {name:?}; available: {}",
                preset_names().join(", ")
            )))
        })
}

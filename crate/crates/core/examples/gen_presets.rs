//! Regenerates the preset files under `presets/`.
//!
//! Effect and loading matrices are drawn once per study and shared by its
//! four scenarios: `cargo run -p smc-core --example gen_presets`.

use std::path::Path;

use smc_core::harness::config::{ExperimentConfig, HarnessSettings};
use smc_core::simgen::{draw_parameters, Scenario, ScenarioConfig};

const PARAMETER_SEED: u64 = 1;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    std::fs::create_dir_all(&dir)?;
    for (study, p, q) in [("toy", 4, 1), ("high", 12, 3)] {
        let (b_o, b_u, v) = draw_parameters(p, q, 2, 2, PARAMETER_SEED);
        for scenario in Scenario::ALL {
            let name = format!("{study}-{}", scenario.letter());
            let cfg = ExperimentConfig {
                name: name.clone(),
                scenario: ScenarioConfig {
                    scenario,
                    grid_side: 50,
                    p,
                    q,
                    n_monitor: 400,
                    n_new: 100,
                    mcar_level: 0.2,
                    field_range: 10.0,
                    field_sill: 1.0,
                    covariate_range: 20.0,
                    noise_sd: 0.5,
                    b_o: b_o.clone(),
                    b_u: b_u.clone(),
                    v: v.clone(),
                    seed: 1,
                },
                harness: HarnessSettings::default(),
            };
            std::fs::write(dir.join(format!("{name}.toml")), cfg.to_toml())?;
        }
    }
    Ok(())
}

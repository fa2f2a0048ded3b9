//! Simulated multivariate spatial data `X = (R_o·B_o + R_u·B_u + S)·Vᵀ + E`
//! on a regular grid.
//!
//! `R_o`, `R_u` and `S` are mean-zero Gaussian fields with exponential
//! covariance. Locations are sampled from the grid without replacement and
//! split into monitors (partially observed under MCAR) and new locations
//! (never observed). Fields are only drawn at the sampled locations, which
//! gives the same joint law as drawing on the full grid and subsetting.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::matrix::{orthonormalize, DenseMatrix};
use crate::spatial::Coordinates;

pub const MAX_MCAR_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// Observed covariates only.
    A,
    /// Observed and unmeasured covariates.
    B,
    /// Observed covariates and a spatial field.
    C,
    /// Observed and unmeasured covariates and a spatial field.
    D,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::A, Scenario::B, Scenario::C, Scenario::D];

    pub fn has_unmeasured(self) -> bool {
        matches!(self, Scenario::B | Scenario::D)
    }

    pub fn has_spatial(self) -> bool {
        matches!(self, Scenario::C | Scenario::D)
    }

    pub fn letter(self) -> char {
        match self {
            Scenario::A => 'A',
            Scenario::B => 'B',
            Scenario::C => 'C',
            Scenario::D => 'D',
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Scenario::A),
            "B" => Ok(Scenario::B),
            "C" => Ok(Scenario::C),
            "D" => Ok(Scenario::D),
            other => Err(Error::invalid(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Full description of one simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub grid_side: usize,
    pub p: usize,
    pub q: usize,
    pub n_monitor: usize,
    pub n_new: usize,
    pub mcar_level: f64,
    /// Range φ of the spatial field `S`.
    pub field_range: f64,
    /// Sill σ²_s of `S`.
    pub field_sill: f64,
    /// Range of the covariate fields `R_o`, `R_u`.
    pub covariate_range: f64,
    pub noise_sd: f64,
    /// Observed-covariate effects, one row per covariate, `q` columns.
    pub b_o: Vec<Vec<f64>>,
    /// Unmeasured-covariate effects; used only in scenarios B and D.
    pub b_u: Vec<Vec<f64>>,
    /// `p × q` loadings with orthonormal columns.
    pub v: Vec<Vec<f64>>,
    pub seed: u64,
}

fn to_matrix(rows: &[Vec<f64>], cols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::invalid(format!("{what} rows must have {cols} entries")));
    }
    let m = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} has non-finite entries")));
    }
    Ok(m)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidInput(m));
        if self.grid_side == 0 || self.p == 0 || self.q == 0 || self.q > self.p {
            return fail(format!(
                "need grid_side >= 1 and 1 <= q <= p (got side {}, p {}, q {})",
                self.grid_side, self.p, self.q
            ));
        }
        if self.n_monitor == 0 || self.n_monitor + self.n_new > self.grid_side * self.grid_side {
            return fail(format!(
                "{} monitors + {} new locations do not fit a {}x{} grid",
                self.n_monitor, self.n_new, self.grid_side, self.grid_side
            ));
        }
        if !(0.0..=MAX_MCAR_LEVEL).contains(&self.mcar_level) {
            return fail(format!("mcar_level must be in [0, {MAX_MCAR_LEVEL}], got {}", self.mcar_level));
        }
        if !(self.field_range > 0.0) || !(self.covariate_range > 0.0) {
            return fail("field ranges must be > 0".into());
        }
        if !(self.field_sill >= 0.0) || !(self.noise_sd >= 0.0) {
            return fail("field_sill and noise_sd must be >= 0".into());
        }
        to_matrix(&self.b_o, self.q, "b_o")?;
        to_matrix(&self.b_u, self.q, "b_u")?;
        let v = self.loadings()?;
        if v.nrows() != self.p {
            return fail(format!("v has {} rows, p is {}", v.nrows(), self.p));
        }
        if (v.tr_mul(&v) - DMatrix::identity(self.q, self.q)).amax() > 1e-8 {
            return fail("v must have orthonormal columns".into());
        }
        Ok(())
    }

    pub fn loadings(&self) -> Result<DMatrix<f64>> {
        to_matrix(&self.v, self.q, "v")
    }

    pub fn n_observed_covariates(&self) -> usize {
        self.b_o.len()
    }

    pub fn n_unmeasured_covariates(&self) -> usize {
        self.b_u.len()
    }
}

/// Seeded effect and loading matrices for a new preset.
///
/// `B_o` is standard normal; `B_u` is standard normal rescaled to half of
/// `‖B_o‖_F`, so that `‖R_u·B_u‖_F ≈ ½‖R_o·B_o‖_F` for equally distributed
/// covariate fields; `V` is an orthonormalized Gaussian matrix.
pub fn draw_parameters(
    p: usize,
    q: usize,
    n_observed: usize,
    n_unmeasured: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b_o = DMatrix::from_fn(n_observed, q, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut b_u = DMatrix::from_fn(n_unmeasured, q, |_, _| rng.sample::<f64, _>(StandardNormal));
    if b_u.norm() > 0.0 {
        b_u *= 0.5 * b_o.norm() / b_u.norm();
    }
    let v = orthonormalize(&DMatrix::from_fn(p, q, |_, _| rng.sample::<f64, _>(StandardNormal)));
    let rows = |m: &DMatrix<f64>| {
        (0..m.nrows())
            .map(|i| m.row(i).iter().copied().collect())
            .collect()
    };
    (rows(&b_o), rows(&b_u), rows(&v))
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Lower Cholesky factor of an exponential covariance matrix; draws share it.
pub struct FieldSampler {
    factor: Option<DMatrix<f64>>,
    n: usize,
}

impl FieldSampler {
    /// Factorizes `σ²·exp(−d/φ)` with diagonal jitter starting at `1e-8·σ²`
    /// and escalating tenfold up to `1e-4·σ²`.
    pub fn new(coords: &Coordinates, range: f64, sill: f64) -> Result<Self> {
        if !(range > 0.0) || !(sill >= 0.0) {
            return Err(Error::invalid(format!(
                "field needs range > 0 and sill >= 0 (got {range}, {sill})"
            )));
        }
        let n = coords.len();
        if sill == 0.0 || n == 0 {
            return Ok(Self { factor: None, n });
        }
        let pts = coords.points();
        let cov = DMatrix::from_fn(n, n, |i, j| {
            let d = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
            sill * (-d / range).exp()
        });
        let mut jitter = 1e-8;
        while jitter <= 1e-4 * (1.0 + 1e-9) {
            let mut k = cov.clone();
            for i in 0..n {
                k[(i, i)] += jitter * sill;
            }
            if let Some(c) = Cholesky::new(k) {
                return Ok(Self {
                    factor: Some(c.unpack()),
                    n,
                });
            }
            jitter *= 10.0;
        }
        Err(Error::SolverFailure {
            iteration: 0,
            message: "covariance factorization failed after jitter escalation".into(),
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        match &self.factor {
            None => DVector::zeros(self.n),
            Some(l) => {
                let z = DVector::from_fn(self.n, |_, _| rng.sample::<f64, _>(StandardNormal));
                l * z
            }
        }
    }

    /// `count` independent draws as the columns of an `n × count` matrix.
    pub fn sample_columns<R: Rng>(&self, count: usize, rng: &mut R) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, count);
        for j in 0..count {
            out.set_column(j, &self.sample(rng));
        }
        out
    }
}

/// One draw of a mean-zero Gaussian field with covariance `σ²·exp(−d/φ)`.
pub fn gen_gaussian_field(coords: &Coordinates, range: f64, sill: f64, seed: u64) -> Result<Vec<f64>> {
    let sampler = FieldSampler::new(coords, range, sill)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng).iter().copied().collect())
}

/// Hides each entry independently with probability `level`.
pub fn apply_mcar(x: &DenseMatrix, level: f64, seed: u64) -> Result<(DenseMatrix, ObservationMask)> {
    if !(0.0..=MAX_MCAR_LEVEL).contains(&level) {
        return Err(Error::invalid(format!(
            "MCAR level must be in [0, {MAX_MCAR_LEVEL}], got {level}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, p) = (x.rows(), x.cols());
    // column by column, so each feature gets its own run of draws
    let mut hidden = vec![false; n * p];
    for j in 0..p {
        for i in 0..n {
            hidden[i * p + j] = rng.random::<f64>() < level;
        }
    }
    let mask = ObservationMask::from_fn(n, p, |i, j| !hidden[i * p + j]);
    let masked = DMatrix::from_fn(n, p, |i, j| if mask.is_observed(i, j) { x.get(i, j) } else { 0.0 });
    Ok((DenseMatrix::from_matrix(masked)?.labelled_like(x), mask))
}

/// A complete simulated dataset (before masking).
#[derive(Debug, Clone)]
pub struct CompleteDataset {
    /// Monitors first, then new locations.
    pub coords: Coordinates,
    pub n_monitor: usize,
    pub x_true: DenseMatrix,
    /// Observed covariates at every location.
    pub r_o: DenseMatrix,
    /// Unmeasured covariates (zero columns when the scenario has none).
    pub r_u: DenseMatrix,
    pub observed_effect: DenseMatrix,
    pub unmeasured_effect: DenseMatrix,
    pub spatial_effect: DenseMatrix,
}

#[derive(Debug, Clone)]
pub struct SimulatedDataset {
    pub complete: CompleteDataset,
    pub mcar_level: f64,
    /// Monitor rows with hidden entries set to zero.
    pub x_masked: DenseMatrix,
    pub mask: ObservationMask,
}

impl CompleteDataset {
    pub fn monitor_rows(&self) -> Vec<usize> {
        (0..self.n_monitor).collect()
    }

    pub fn new_rows(&self) -> Vec<usize> {
        (self.n_monitor..self.coords.len()).collect()
    }

    pub fn monitor_coords(&self) -> Coordinates {
        self.coords.select(&self.monitor_rows())
    }

    pub fn new_coords(&self) -> Coordinates {
        self.coords.select(&self.new_rows())
    }

    pub fn monitor_truth(&self) -> DenseMatrix {
        self.x_true.select_rows(&self.monitor_rows())
    }

    pub fn new_truth(&self) -> DenseMatrix {
        self.x_true.select_rows(&self.new_rows())
    }

    pub fn monitor_covariates(&self) -> DenseMatrix {
        self.r_o.select_rows(&self.monitor_rows())
    }

    pub fn new_covariates(&self) -> DenseMatrix {
        self.r_o.select_rows(&self.new_rows())
    }

    /// Applies MCAR to the monitor rows.
    pub fn with_mcar(self, level: f64, seed: u64) -> Result<SimulatedDataset> {
        let (x_masked, mask) = apply_mcar(&self.monitor_truth(), level, seed)?;
        Ok(SimulatedDataset {
            complete: self,
            mcar_level: level,
            x_masked,
            mask,
        })
    }
}

fn feature_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

fn covariate_names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("{prefix}{j}")).collect()
}

/// Draws the complete data for `cfg` from the stream seeded by `cfg.seed`.
pub fn gen_complete(cfg: &ScenarioConfig) -> Result<CompleteDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let side = cfg.grid_side;
    let total = cfg.n_monitor + cfg.n_new;
    let cells = index::sample(&mut rng, side * side, total).into_vec();
    let coords = Coordinates::new(
        cells
            .iter()
            .map(|&c| [(c % side) as f64, (c / side) as f64])
            .collect(),
    )?;

    let covariate_field = FieldSampler::new(&coords, cfg.covariate_range, 1.0)?;
    let r_o = covariate_field.sample_columns(cfg.n_observed_covariates(), &mut rng);
    let r_u = if cfg.scenario.has_unmeasured() {
        covariate_field.sample_columns(cfg.n_unmeasured_covariates(), &mut rng)
    } else {
        DMatrix::zeros(total, cfg.n_unmeasured_covariates())
    };
    let spatial = if cfg.scenario.has_spatial() {
        FieldSampler::new(&coords, cfg.field_range, cfg.field_sill)?.sample_columns(cfg.q, &mut rng)
    } else {
        DMatrix::zeros(total, cfg.q)
    };

    let b_o = to_matrix(&cfg.b_o, cfg.q, "b_o")?;
    let b_u = to_matrix(&cfg.b_u, cfg.q, "b_u")?;
    let observed_effect = &r_o * b_o;
    let unmeasured_effect = if cfg.scenario.has_unmeasured() {
        &r_u * b_u
    } else {
        DMatrix::zeros(total, cfg.q)
    };
    let latent = &observed_effect + &unmeasured_effect + &spatial;
    let noise = DMatrix::from_fn(total, cfg.p, |_, _| {
        cfg.noise_sd * rng.sample::<f64, _>(StandardNormal)
    });
    let x_true = latent * cfg.loadings()?.transpose() + noise;

    Ok(CompleteDataset {
        coords,
        n_monitor: cfg.n_monitor,
        x_true: DenseMatrix::from_matrix(x_true)?.with_col_names(feature_names(cfg.p))?,
        r_o: DenseMatrix::from_matrix(r_o)?
            .with_col_names(covariate_names("ro", cfg.n_observed_covariates()))?,
        r_u: DenseMatrix::from_matrix(r_u)?
            .with_col_names(covariate_names("ru", cfg.n_unmeasured_covariates()))?,
        observed_effect: DenseMatrix::from_matrix(observed_effect)?,
        unmeasured_effect: DenseMatrix::from_matrix(unmeasured_effect)?,
        spatial_effect: DenseMatrix::from_matrix(spatial)?,
    })
}

/// Seed of the MCAR stream for a dataset seed and missingness level.
pub fn mask_seed(seed: u64, level: f64) -> u64 {
    mix_seed(seed, level.to_bits())
}

/// Complete data plus MCAR masking at `cfg.mcar_level`.
///
/// The mask stream is derived from `(seed, level)`, so datasets that differ
/// only in level share their complete data.
pub fn gen_dataset(cfg: &ScenarioConfig) -> Result<SimulatedDataset> {
    gen_complete(cfg)?.with_mcar(cfg.mcar_level, mask_seed(cfg.seed, cfg.mcar_level))
}

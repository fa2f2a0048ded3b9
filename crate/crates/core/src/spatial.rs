//! Spatial design matrices: polynomial terms, geographic covariates and
//! thin-plate spline radial basis columns, with a stored recipe so the same
//! columns can be evaluated at new locations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use nalgebra::DMatrix;

/// Planar point `(s1, s2)` in grid units.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coordinates(Vec<Point>);

impl Coordinates {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::invalid(format!("coordinate {i} is not finite")));
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> Coordinates {
        Coordinates(idx.iter().map(|&i| self.0[i]).collect())
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Knot count used when none is configured: about `n/16`, between 1 and 50.
pub fn default_knot_count(n: usize) -> usize {
    (n / 16).clamp(1, 50).min(n.max(1))
}

/// Space-filling knot selection.
///
/// Greedy farthest-point sampling starting from the point nearest the
/// centroid, followed by one exchange pass: each chosen knot is swapped for
/// the unchosen point whose nearest-knot distance is strictly larger. Ties
/// resolve to the lowest index, so the result depends only on input order.
pub fn choose_knots(coords: &Coordinates, count: usize) -> Result<Vec<Point>> {
    let pts = coords.points();
    let n = pts.len();
    if count == 0 || count > n {
        return Err(Error::invalid(format!(
            "knot count must be in 1..={n}, got {count}"
        )));
    }
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n as f64;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n as f64;
    let seed = argmin(pts.iter().map(|&p| dist(p, [cx, cy])));

    let mut chosen = vec![seed];
    let mut in_set = vec![false; n];
    in_set[seed] = true;
    let mut nearest: Vec<f64> = pts.iter().map(|&p| dist(p, pts[seed])).collect();
    while chosen.len() < count {
        let next = argmax((0..n).map(|i| if in_set[i] { f64::NEG_INFINITY } else { nearest[i] }));
        chosen.push(next);
        in_set[next] = true;
        for i in 0..n {
            nearest[i] = nearest[i].min(dist(pts[i], pts[next]));
        }
    }

    if count > 1 && count < n {
        for slot in 0..count {
            let others: Vec<usize> = chosen
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != slot)
                .map(|(_, &i)| i)
                .collect();
            let spacing = |i: usize| {
                others
                    .iter()
                    .map(|&o| dist(pts[i], pts[o]))
                    .fold(f64::INFINITY, f64::min)
            };
            let current = spacing(chosen[slot]);
            let candidate = argmax((0..n).map(|i| if in_set[i] { f64::NEG_INFINITY } else { spacing(i) }));
            if spacing(candidate) > current {
                in_set[chosen[slot]] = false;
                in_set[candidate] = true;
                chosen[slot] = candidate;
            }
        }
    }
    Ok(chosen.into_iter().map(|i| pts[i]).collect())
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Thin-plate spline radial kernel `r² log r`, zero at the origin.
pub fn tps_kernel(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r * r * r.ln()
    }
}

/// `n × knots` matrix of kernel values `η(‖sᵢ − κⱼ‖)`.
pub fn tps_basis(coords: &Coordinates, knots: &[Point]) -> Result<DenseMatrix> {
    if knots.is_empty() {
        return Err(Error::invalid("thin-plate basis needs at least one knot"));
    }
    let pts = coords.points();
    let m = DMatrix::from_fn(pts.len(), knots.len(), |i, j| tps_kernel(dist(pts[i], knots[j])));
    DenseMatrix::from_matrix(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnSource {
    Constant,
    S1,
    S2,
    Covariate { name: String },
    Tps { knot: usize },
}

/// One design column and the standardization fitted on the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub label: String,
    pub source: ColumnSource,
    pub center: f64,
    pub spread: f64,
}

/// Everything needed to rebuild the design columns at arbitrary locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecipe {
    pub covariates: Vec<String>,
    pub knots: Vec<Point>,
    pub include_linear_terms: bool,
    pub columns: Vec<ColumnScaling>,
}

impl DesignRecipe {
    pub fn labels(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.label.clone()).collect()
    }
}

/// Knot placement for [`build_design_matrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KnotChoice {
    /// No spline columns.
    None,
    Count(usize),
    Fixed(Vec<Point>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub knots: KnotChoice,
    pub include_linear_terms: bool,
}

impl DesignParams {
    pub fn with_knot_count(count: usize) -> Self {
        Self {
            knots: KnotChoice::Count(count),
            include_linear_terms: true,
        }
    }
}

/// A design matrix `Z` plus the recipe that produced it (absent for
/// user-supplied matrices).
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub matrix: DenseMatrix,
    pub recipe: Option<DesignRecipe>,
    /// Columns dropped while fitting the recipe.
    pub warnings: Vec<String>,
}

impl DesignMatrix {
    pub fn from_matrix(matrix: DenseMatrix) -> Self {
        Self {
            matrix,
            recipe: None,
            warnings: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_matrix(DenseMatrix::from_trusted(DMatrix::identity(n, n)))
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }
}

fn column_index(covariates: Option<&DenseMatrix>, name: &str) -> Result<usize> {
    covariates
        .and_then(|c| c.labels().iter().position(|l| l == name))
        .ok_or_else(|| Error::invalid(format!("covariate column '{name}' is missing")))
}

fn raw_column(
    source: &ColumnSource,
    coords: &Coordinates,
    covariates: Option<&DenseMatrix>,
    knots: &[Point],
) -> Result<Vec<f64>> {
    let pts = coords.points();
    Ok(match source {
        ColumnSource::Constant => vec![1.0; pts.len()],
        ColumnSource::S1 => pts.iter().map(|p| p[0]).collect(),
        ColumnSource::S2 => pts.iter().map(|p| p[1]).collect(),
        ColumnSource::Covariate { name } => {
            let j = column_index(covariates, name)?;
            let cov = covariates.expect("index found");
            (0..cov.rows()).map(|i| cov.get(i, j)).collect()
        }
        ColumnSource::Tps { knot } => {
            let k = knots[*knot];
            pts.iter().map(|&p| tps_kernel(dist(p, k))).collect()
        }
    })
}

/// Fits the column recipe on training locations and returns the design.
///
/// Column order is `[const, s1, s2]` (when linear terms are on), then the
/// covariates, then one spline column per knot. Every column except the
/// constant is centered and scaled to unit standard deviation; columns with
/// zero spread are dropped and reported in `warnings`.
pub fn build_design_matrix(
    coords: &Coordinates,
    covariates: Option<&DenseMatrix>,
    params: &DesignParams,
) -> Result<DesignMatrix> {
    let n = coords.len();
    if n == 0 {
        return Err(Error::invalid("no coordinates"));
    }
    if let Some(c) = covariates {
        if c.rows() != n {
            return Err(Error::invalid(format!(
                "{} covariate rows for {n} coordinates",
                c.rows()
            )));
        }
    }
    let knots = match &params.knots {
        KnotChoice::None => Vec::new(),
        KnotChoice::Count(k) => choose_knots(coords, *k)?,
        KnotChoice::Fixed(k) => {
            if k.is_empty() {
                return Err(Error::invalid("fixed knot list is empty"));
            }
            k.clone()
        }
    };

    let mut sources = Vec::new();
    if params.include_linear_terms {
        sources.push(("const".to_string(), ColumnSource::Constant));
        sources.push(("s1".to_string(), ColumnSource::S1));
        sources.push(("s2".to_string(), ColumnSource::S2));
    }
    let cov_names = covariates.map(DenseMatrix::labels).unwrap_or_default();
    for name in &cov_names {
        sources.push((name.clone(), ColumnSource::Covariate { name: name.clone() }));
    }
    for k in 0..knots.len() {
        sources.push((format!("tps{}", k + 1), ColumnSource::Tps { knot: k }));
    }

    let mut columns = Vec::new();
    let mut warnings = Vec::new();
    for (label, source) in sources {
        if source == ColumnSource::Constant {
            columns.push(ColumnScaling {
                label,
                source,
                center: 0.0,
                spread: 1.0,
            });
            continue;
        }
        let v = raw_column(&source, coords, covariates, &knots)?;
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            let msg = format!("dropped design column '{label}': zero spread");
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        columns.push(ColumnScaling {
            label,
            source,
            center: mean,
            spread: sd,
        });
    }
    if columns.is_empty() {
        return Err(Error::invalid("design has no usable columns"));
    }

    let recipe = DesignRecipe {
        covariates: cov_names,
        knots,
        include_linear_terms: params.include_linear_terms,
        columns,
    };
    let mut design = evaluate_design(&recipe, coords, covariates)?;
    design.warnings = warnings;
    Ok(design)
}

/// Applies a stored recipe (knots and scaling, no refitting) at `coords`.
pub fn evaluate_design(
    recipe: &DesignRecipe,
    coords: &Coordinates,
    covariates: Option<&DenseMatrix>,
) -> Result<DesignMatrix> {
    let n = coords.len();
    if let Some(c) = covariates {
        if c.rows() != n {
            return Err(Error::invalid(format!(
                "{} covariate rows for {n} coordinates",
                c.rows()
            )));
        }
    }
    let mut z = DMatrix::zeros(n, recipe.columns.len());
    for (j, col) in recipe.columns.iter().enumerate() {
        let raw = raw_column(&col.source, coords, covariates, &recipe.knots)?;
        for (i, v) in raw.into_iter().enumerate() {
            z[(i, j)] = (v - col.center) / col.spread;
        }
    }
    let matrix = DenseMatrix::from_matrix(z)?.with_col_names(recipe.labels())?;
    Ok(DesignMatrix {
        matrix,
        recipe: Some(recipe.clone()),
        warnings: Vec::new(),
    })
}

//! Dense linear-algebra primitives shared by the solvers.
//!
//! Everything here works on [`nalgebra::DMatrix<f64>`]. [`DenseMatrix`] is the
//! validated carrier used at API boundaries (finite entries, optional column
//! labels); the solvers work on raw `DMatrix` values internally.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mask::ObservationMask;

/// Upper bound on implicit-QR sweeps inside the SVD.
const MAX_SVD_SWEEPS: usize = 10_000;

/// Columns whose residual after orthogonalization falls below this fraction
/// of `‖Z‖_F` are treated as linearly dependent.
pub const DEPENDENT_COLUMN_TOL: f64 = 1e-10;

/// Relative cutoff used when counting numerically nonzero singular values.
pub const RANK_TOL: f64 = 1e-8;

/// A real `rows × cols` matrix with finite entries and optional column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    data: DMatrix<f64>,
    col_names: Option<Vec<String>>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major values.
    pub fn from_row_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, &values))
    }

    /// Builds from row vectors; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), cols, values)
    }

    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % data.nrows(), pos / data.nrows());
            return Err(Error::invalid(format!("non-finite entry at ({i}, {j})")));
        }
        Ok(Self {
            data,
            col_names: None,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: DMatrix::zeros(rows, cols),
            col_names: None,
        }
    }

    pub fn with_col_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.cols() {
            return Err(Error::invalid(format!(
                "{} column names for {} columns",
                names.len(),
                self.cols()
            )));
        }
        self.col_names = Some(names);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn col_names(&self) -> Option<&[String]> {
        self.col_names.as_deref()
    }

    /// Label of column `j`, falling back to `V{j+1}` when unlabeled.
    pub fn col_name(&self, j: usize) -> String {
        match &self.col_names {
            Some(names) => names[j].clone(),
            None => format!("V{}", j + 1),
        }
    }

    /// All column labels, with fallbacks filled in.
    pub fn labels(&self) -> Vec<String> {
        (0..self.cols()).map(|j| self.col_name(j)).collect()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for i in 0..self.rows() {
            out.extend(self.data.row(i).iter());
        }
        out
    }

    /// Rows selected by index, labels preserved.
    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        DenseMatrix {
            data: self.data.select_rows(idx),
            col_names: self.col_names.clone(),
        }
    }

    pub(crate) fn from_trusted(data: DMatrix<f64>) -> Self {
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            data,
            col_names: None,
        }
    }

    pub(crate) fn labelled_like(mut self, other: &DenseMatrix) -> Self {
        if other.cols() == self.cols() {
            self.col_names = other.col_names.clone();
        }
        self
    }
}

/// Thin SVD `u · diag(d) · vᵀ` with `d` sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub d: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        numerical_rank(&self.d)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        scaled_product(&self.u, &self.d, &self.v)
    }
}

/// Number of singular values above `RANK_TOL · σ₁`.
pub fn numerical_rank(d: &[f64]) -> usize {
    let top = d.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    d.iter().filter(|&&s| s > RANK_TOL * top).count()
}

/// `u[:, :r] · diag(d[:r]) · v[:, :r]ᵀ`, skipping trailing zero weights.
fn scaled_product(u: &DMatrix<f64>, d: &[f64], v: &DMatrix<f64>) -> DMatrix<f64> {
    let r = d.iter().rposition(|&s| s != 0.0).map_or(0, |i| i + 1);
    if r == 0 {
        return DMatrix::zeros(u.nrows(), v.nrows());
    }
    let mut us = u.columns(0, r).clone_owned();
    for (j, &s) in d.iter().take(r).enumerate() {
        us.column_mut(j).scale_mut(s);
    }
    us * v.columns(0, r).transpose()
}

/// Thin singular value decomposition.
pub fn svd(a: &DMatrix<f64>) -> Result<SvdFactors> {
    let (n, p) = a.shape();
    let r = n.min(p);
    if r == 0 {
        return Ok(SvdFactors {
            u: DMatrix::zeros(n, 0),
            d: Vec::new(),
            v: DMatrix::zeros(p, 0),
        });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("SVD input has non-finite entries"));
    }
    let raw = a
        .clone()
        .try_svd(true, true, 5.0 * f64::EPSILON, MAX_SVD_SWEEPS)
        .ok_or(Error::SolverFailure {
            iteration: MAX_SVD_SWEEPS,
            message: "SVD did not converge".into(),
        })?;
    let (u, v_t) = match (raw.u, raw.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("both singular vector sets were requested"),
    };
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| raw.singular_values[j].total_cmp(&raw.singular_values[i]));
    let d = order.iter().map(|&i| raw.singular_values[i].max(0.0)).collect();
    let u = u.select_columns(&order);
    let v = v_t.select_rows(&order).transpose();
    Ok(SvdFactors { u, d, v })
}

/// Singular values shrunk by `lambda` and clipped at zero.
pub(crate) fn shrink_values(d: &[f64], lambda: f64) -> Vec<f64> {
    d.iter().map(|&s| (s - lambda).max(0.0)).collect()
}

/// Shrinks and rebuilds, also returning the shrunk singular values.
pub(crate) fn shrink(f: &SvdFactors, lambda: f64) -> (DMatrix<f64>, Vec<f64>) {
    let d = shrink_values(&f.d, lambda);
    (scaled_product(&f.u, &d, &f.v), d)
}

/// `U · diag((σᵢ − λ)₊) · Vᵀ`, the proximal map of `λ‖·‖_*`.
pub fn soft_threshold_singular_values(f: &SvdFactors, lambda: f64) -> Result<DenseMatrix> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(DenseMatrix::from_trusted(shrink(f, lambda).0))
}

pub fn frobenius_norm(a: &DMatrix<f64>) -> f64 {
    a.norm()
}

/// Sum of singular values.
pub fn nuclear_norm(a: &DMatrix<f64>) -> Result<f64> {
    Ok(svd(a)?.d.iter().sum())
}

/// Orthogonal projector onto the column space of a design matrix, held as an
/// orthonormal basis `Q` and applied as `Q(Qᵀa)`.
///
/// Built by modified Gram-Schmidt with one reorthogonalization pass, dropping
/// columns whose residual is below `DEPENDENT_COLUMN_TOL · ‖Z‖_F`. The
/// triangular factor of the retained columns is kept so least-squares
/// coefficients on `Z` can be recovered.
#[derive(Debug, Clone)]
pub struct ColumnSpaceProjector {
    basis: DMatrix<f64>,
    triangular: DMatrix<f64>,
    retained: Vec<usize>,
    source_cols: usize,
}

impl ColumnSpaceProjector {
    pub fn new(z: &DMatrix<f64>) -> Result<Self> {
        let (n, k) = z.shape();
        if n == 0 || k == 0 {
            return Err(Error::invalid(format!("design matrix is {n}x{k}")));
        }
        let tol = DEPENDENT_COLUMN_TOL * z.norm();
        let mut basis: Vec<DVector<f64>> = Vec::new();
        let mut coeffs: Vec<Vec<f64>> = Vec::new();
        let mut retained = Vec::new();
        for j in 0..k {
            let mut v = z.column(j).clone_owned();
            let mut c = vec![0.0; basis.len()];
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let proj = q.dot(&v);
                    v.axpy(-proj, q, 1.0);
                    c[i] += proj;
                }
            }
            let norm = v.norm();
            if norm <= tol || norm == 0.0 {
                continue;
            }
            c.push(norm);
            basis.push(v / norm);
            coeffs.push(c);
            retained.push(j);
        }
        let rank = basis.len();
        if rank == 0 {
            return Err(Error::invalid("design matrix has zero effective rank"));
        }
        let mut triangular = DMatrix::zeros(rank, rank);
        for (j, c) in coeffs.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                triangular[(i, j)] = v;
            }
        }
        Ok(Self {
            basis: DMatrix::from_columns(&basis),
            triangular,
            retained,
            source_cols: k,
        })
    }

    /// Dimension of the column space.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Indices of design columns kept in the basis.
    pub fn retained_columns(&self) -> &[usize] {
        &self.retained
    }

    pub fn source_cols(&self) -> usize {
        self.source_cols
    }

    /// Coordinates `Qᵀa` in the orthonormal basis.
    pub fn coordinates(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        self.basis.tr_mul(a)
    }

    pub fn apply(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.basis * self.coordinates(a)
    }

    /// Least-squares coefficients `M` with `ZM ≈ a`; rows of dropped design
    /// columns are zero.
    pub fn coefficients(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        self.coefficients_from_coordinates(&self.coordinates(a))
    }

    pub(crate) fn coefficients_from_coordinates(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        let partial = self
            .triangular
            .solve_upper_triangular(c)
            .expect("triangular factor has positive diagonal");
        let mut m = DMatrix::zeros(self.source_cols, c.ncols());
        for (row, &j) in self.retained.iter().enumerate() {
            m.row_mut(j).copy_from(&partial.row(row));
        }
        m
    }
}

/// Builds the projector onto the span of `z`'s columns.
pub fn column_space_projector(z: &DenseMatrix) -> Result<ColumnSpaceProjector> {
    ColumnSpaceProjector::new(z.as_matrix())
}

/// Subtracts each column's observed-entry mean from its observed entries.
///
/// Unobserved entries are left as they are. Returns the centered matrix and
/// the per-column offsets.
pub fn center_columns(a: &DenseMatrix, mask: &ObservationMask) -> Result<(DenseMatrix, Vec<f64>)> {
    mask.check_shape(a.rows(), a.cols())?;
    let mut out = a.as_matrix().clone();
    let mut offsets = Vec::with_capacity(a.cols());
    for j in 0..a.cols() {
        let (mut sum, mut count) = (0.0, 0usize);
        for i in 0..a.rows() {
            if mask.is_observed(i, j) {
                sum += out[(i, j)];
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::invalid(format!(
                "column '{}' has no observed entries",
                a.col_name(j)
            )));
        }
        let mean = sum / count as f64;
        for i in 0..a.rows() {
            if mask.is_observed(i, j) {
                out[(i, j)] -= mean;
            }
        }
        offsets.push(mean);
    }
    Ok((DenseMatrix::from_trusted(out).labelled_like(a), offsets))
}

/// Orthonormal basis of the columns of `a` (thin QR factor).
pub fn orthonormalize(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let f = svd(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(f.d, vec![1.0, 1.0, 1.0]);

        let f = svd(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]))).unwrap();
        assert!((f.d[0] - 3.0).abs() < 1e-14 && (f.d[1] - 1.0).abs() < 1e-14);
        // signed permutations of the identity
        for m in [&f.u, &f.v] {
            for x in m.iter() {
                assert!(x.abs() < 1e-14 || (x.abs() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn svd_recovers_constructed_spectrum() {
        let u0 = orthonormalize(&gaussian(5, 4, 1));
        let v0 = orthonormalize(&gaussian(4, 4, 2));
        let d0 = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 2.0, 1.0, 0.0]));
        let a = &u0 * d0 * v0.transpose();
        let f = svd(&a).unwrap();
        for (got, want) in f.d.iter().zip([4.0, 2.0, 1.0, 0.0]) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
        assert_eq!(f.rank(), 3);
    }

    #[test]
    fn svd_factor_invariants_on_random_shapes() {
        for (seed, (n, p)) in [(3, 2), (2, 3), (7, 7), (40, 5), (5, 40)].into_iter().enumerate() {
            let a = gaussian(n, p, seed as u64 + 10);
            let f = svd(&a).unwrap();
            let r = n.min(p);
            assert_eq!(f.d.len(), r);
            assert!(f.d.windows(2).all(|w| w[0] >= w[1]));
            assert!(f.d.iter().all(|&s| s >= 0.0));
            let tol = 1e-10 * n.max(p) as f64;
            assert!((f.u.tr_mul(&f.u) - DMatrix::identity(r, r)).amax() < tol);
            assert!((f.v.tr_mul(&f.v) - DMatrix::identity(r, r)).amax() < tol);
            assert!((f.reconstruct() - &a).norm() < 1e-8 * a.norm());
        }
    }

    #[test]
    fn soft_threshold_examples() {
        let u = orthonormalize(&gaussian(4, 3, 5));
        let v = orthonormalize(&gaussian(3, 3, 6));
        let f = SvdFactors {
            u,
            d: vec![3.0, 1.0, 0.5],
            v,
        };
        let w = soft_threshold_singular_values(&f, 1.0).unwrap();
        let g = svd(w.as_matrix()).unwrap();
        assert!((g.d[0] - 2.0).abs() < 1e-12 && g.d[1].abs() < 1e-12 && g.d[2].abs() < 1e-12);
        assert_eq!(g.rank(), 1);

        let exact = soft_threshold_singular_values(&f, 0.0).unwrap();
        assert!((exact.as_matrix() - f.reconstruct()).norm() < 1e-14);

        let zero = soft_threshold_singular_values(&f, 3.0).unwrap();
        assert_eq!(zero.as_matrix().amax(), 0.0);
        assert!(soft_threshold_singular_values(&f, -1.0).is_err());
    }

    #[test]
    fn projector_on_orthonormal_and_ones() {
        let q = orthonormalize(&gaussian(10, 3, 7));
        let h = ColumnSpaceProjector::new(&q).unwrap();
        let a = gaussian(10, 4, 8);
        assert!((h.apply(&a) - &q * q.tr_mul(&a)).amax() < 1e-12);

        let ones = DMatrix::from_element(6, 1, 1.0);
        let h = ColumnSpaceProjector::new(&ones).unwrap();
        let a = gaussian(6, 1, 9);
        let mean = a.mean();
        for x in h.apply(&a).iter() {
            assert!((x - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn projector_drops_duplicated_column() {
        let single = ColumnSpaceProjector::new(&DMatrix::from_element(8, 1, 1.0)).unwrap();
        let doubled = ColumnSpaceProjector::new(&DMatrix::from_element(8, 2, 1.0)).unwrap();
        assert_eq!(doubled.rank(), 1);
        assert_eq!(doubled.retained_columns(), &[0]);
        for seed in 0..10 {
            let a = gaussian(8, 1, 100 + seed);
            assert!((single.apply(&a) - doubled.apply(&a)).amax() < 1e-10);
        }
    }

    #[test]
    fn projector_rejects_empty_and_zero() {
        assert!(ColumnSpaceProjector::new(&DMatrix::zeros(0, 2)).is_err());
        assert!(ColumnSpaceProjector::new(&DMatrix::zeros(3, 0)).is_err());
        assert!(ColumnSpaceProjector::new(&DMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn coefficients_reproduce_columns_of_z() {
        let mut z = gaussian(20, 4, 11);
        let dup = z.column(1) * 2.0 - z.column(0);
        z = z.insert_column(2, 0.0);
        z.set_column(2, &dup);
        let h = ColumnSpaceProjector::new(&z).unwrap();
        assert_eq!(h.rank(), 4);
        let m0 = gaussian(5, 3, 12);
        let w = &z * &m0;
        let m = h.coefficients(&w);
        assert_eq!(m.row(2).amax(), 0.0);
        assert!((&z * m - &w).norm() < 1e-10 * w.norm());
    }

    #[test]
    fn center_columns_examples() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 0.0], vec![3.0, 3.0]]).unwrap();
        let mut mask = ObservationMask::full(3, 2);
        mask.set(1, 1, false);
        let (c, off) = center_columns(&a, &mask).unwrap();
        assert_eq!(off, vec![2.0, 2.0]);
        assert_eq!(c.get(0, 0), -1.0);
        assert_eq!(c.get(1, 0), 0.0);
        assert_eq!(c.get(2, 0), 1.0);
        assert_eq!(c.get(0, 1), -1.0);
        assert_eq!(c.get(1, 1), 0.0, "unobserved entry untouched");
        assert_eq!(c.get(2, 1), 1.0);

        let (_, again) = center_columns(&c, &mask).unwrap();
        assert!(again.iter().all(|o| o.abs() < 1e-12));
    }

    #[test]
    fn center_columns_names_missing_column() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]])
            .unwrap()
            .with_col_names(vec!["no2".into(), "pm25".into()])
            .unwrap();
        let mut mask = ObservationMask::full(2, 2);
        mask.set(0, 1, false);
        mask.set(1, 1, false);
        let err = center_columns(&a, &mask).unwrap_err().to_string();
        assert!(err.contains("pm25"), "{err}");
    }

    #[test]
    fn dense_matrix_rejects_nonfinite() {
        assert!(DenseMatrix::from_row_major(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_row_major(1, 2, vec![1.0]).is_err());
        let m = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.to_row_major(), vec![1.0, 2.0, 3.0, 4.0]);
    }
}

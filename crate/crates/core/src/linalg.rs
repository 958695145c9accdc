//! Dense real linear algebra.
//!
//! Problem sizes handled by this crate are small (a few hundred unknowns at
//! most), so everything here is plain row-major `f64` storage. Symmetric
//! eigendecompositions are delegated to `nalgebra`.

use std::ops::{Deref, Index};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Relative tolerance used for operator-norm power iterations.
pub const POWER_ITERATION_TOL: f64 = 1e-8;
/// Iteration cap used for operator-norm power iterations.
pub const POWER_ITERATION_MAX_ITER: usize = 10_000;

fn first_non_finite(values: &[f64]) -> Option<usize> {
    values.iter().position(|v| !v.is_finite())
}

/// A dense real vector with finite entries.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        match first_non_finite(&entries) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(RealVector(entries)),
        }
    }

    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        RealVector(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        RealVector(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        RealVector(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &RealVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self - other`, entrywise.
    pub fn sub(&self, other: &RealVector) -> RealVector {
        debug_assert_eq!(self.dim(), other.dim());
        RealVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &RealVector) -> RealVector {
        debug_assert_eq!(self.dim(), other.dim());
        RealVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: f64) -> RealVector {
        RealVector(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &RealVector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += alpha * b;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealVector {
        RealVector(self.0.iter().map(|&v| f(v)).collect())
    }
}

impl Deref for RealVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for RealVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(deserializer)?;
        RealVector::new(raw).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A dense real matrix stored in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("shape", "matrix dimensions must be positive"));
        }
        check_dim("matrix storage", rows * cols, data.len())?;
        if let Some(index) = first_non_finite(&data) {
            return Err(Error::NonFinite { index });
        }
        Ok(RealMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_dim("matrix row", cols, row.len())?;
            data.extend_from_slice(row);
        }
        RealMatrix::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = RealMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub(crate) fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> RealMatrix {
        let mut t = RealMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn scale(&self, factor: f64) -> RealMatrix {
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn sub(&self, other: &RealMatrix) -> Result<RealMatrix> {
        check_dim("matrix difference rows", self.rows, other.rows)?;
        check_dim("matrix difference cols", self.cols, other.cols)?;
        Ok(RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &RealMatrix) -> Result<RealMatrix> {
        check_dim("matrix sum rows", self.rows, other.rows)?;
        check_dim("matrix sum cols", self.cols, other.cols)?;
        Ok(RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn matmul(&self, other: &RealMatrix) -> Result<RealMatrix> {
        check_dim("matrix product", self.cols, other.rows)?;
        let mut out = RealMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, a) in self.row(r).iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `MᵀM`, exactly symmetric.
    pub fn gram(&self) -> RealMatrix {
        let n = self.cols;
        let mut g = RealMatrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                for j in i..n {
                    g.data[i * n + j] += ri * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    /// `M x` without dimension checks beyond debug builds.
    pub(crate) fn apply(&self, x: &[f64]) -> RealVector {
        debug_assert_eq!(self.cols, x.len());
        RealVector(
            self.data
                .chunks_exact(self.cols)
                .map(|row| dot(row, x))
                .collect(),
        )
    }

    /// `Mᵀ x` without forming the transpose.
    pub(crate) fn apply_transpose(&self, x: &[f64]) -> RealVector {
        debug_assert_eq!(self.rows, x.len());
        let mut out = vec![0.0; self.cols];
        for (row, xr) in self.data.chunks_exact(self.cols).zip(x) {
            if *xr == 0.0 {
                continue;
            }
            for (o, m) in out.iter_mut().zip(row) {
                *o += m * xr;
            }
        }
        RealVector(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> RealMatrix {
        let mut out = RealMatrix::zeros(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.data[r * m.ncols() + c] = m[(r, c)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl<'de> Deserialize<'de> for RealMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rows: usize,
            cols: usize,
            data: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        RealMatrix::new(raw.rows, raw.cols, raw.data).map_err(serde::de::Error::custom)
    }
}

/// Matrix-vector product `M x`.
pub fn matvec(m: &RealMatrix, x: &RealVector) -> Result<RealVector> {
    check_dim("matvec", m.cols(), x.dim())?;
    Ok(m.apply(x))
}

/// Largest singular value of `m` by power iteration on `MᵀM`.
///
/// Starts from the normalized all-ones vector, so the result is deterministic.
/// The Rayleigh quotient approaches `σ_max²` from below.
pub fn operator_norm(m: &RealMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    if m.max_abs() == 0.0 {
        return Err(Error::invalid("matrix", "operator norm requires a nonzero matrix"));
    }
    let n = m.cols();
    let mut v = RealVector::filled(n, 1.0 / (n as f64).sqrt());
    if m.apply(&v).max_abs() == 0.0 {
        // All-ones lies in the null space; restart on the heaviest column.
        let heaviest = (0..n)
            .max_by(|&i, &j| {
                let ci: f64 = (0..m.rows()).map(|r| m.get(r, i).powi(2)).sum();
                let cj: f64 = (0..m.rows()).map(|r| m.get(r, j).powi(2)).sum();
                ci.total_cmp(&cj)
            })
            .unwrap_or(0);
        v = RealVector::zeros(n);
        v.0[heaviest] = 1.0;
    }
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let mv = m.apply(&v);
        let rayleigh = mv.norm_sq();
        let w = m.apply_transpose(&mv);
        let w_norm = w.norm();
        if w_norm == 0.0 {
            return Ok(0.0);
        }
        v = w.scale(1.0 / w_norm);
        if (rayleigh - estimate).abs() <= tol * rayleigh {
            return Ok(rayleigh.sqrt());
        }
        estimate = rayleigh;
    }
    Err(Error::NotConverged {
        method: "operator_norm",
        iterations: max_iter,
        estimate: estimate.sqrt(),
    })
}

/// `operator_norm` with the default tolerance and cap; zero matrices give 0.
pub fn spectral_norm(m: &RealMatrix) -> Result<f64> {
    if m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    operator_norm(m, POWER_ITERATION_TOL, POWER_ITERATION_MAX_ITER)
}

/// A sensing matrix together with its Gram matrix `AᵀA` and operator norm.
///
/// Shared (behind `Arc`) between a problem and the GME designs built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    matrix: RealMatrix,
    gram: RealMatrix,
    norm: f64,
}

impl SensingMatrix {
    pub fn new(matrix: RealMatrix) -> Result<Self> {
        let norm = spectral_norm(&matrix)?;
        let gram = matrix.gram();
        Ok(SensingMatrix { matrix, gram, norm })
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }

    pub fn gram(&self) -> &RealMatrix {
        &self.gram
    }

    /// Power-iteration estimate of `‖A‖`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }
}

/// Verdict of a positive-semidefiniteness check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Certification {
    Psd { min_eigenvalue: f64 },
    NotPsd { witness: f64 },
}

impl Certification {
    pub fn is_psd(&self) -> bool {
        matches!(self, Certification::Psd { .. })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match *self {
            Certification::Psd { min_eigenvalue } => min_eigenvalue,
            Certification::NotPsd { witness } => witness,
        }
    }
}

fn symmetrized(s: &RealMatrix) -> Result<RealMatrix> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch {
            context: "symmetric matrix",
            expected: s.rows(),
            actual: s.cols(),
        });
    }
    let n = s.rows();
    let limit = 1e-8 * s.frobenius_norm();
    let mut asymmetry: f64 = 0.0;
    let mut out = s.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (s.get(i, j), s.get(j, i));
            asymmetry = asymmetry.max((a - b).abs());
            let mid = 0.5 * (a + b);
            out.set(i, j, mid);
            out.set(j, i, mid);
        }
    }
    if asymmetry > limit {
        return Err(Error::NotSymmetric { asymmetry, limit });
    }
    Ok(out)
}

/// Eigenvalues (ascending) and matching column eigenvectors of a symmetric matrix.
pub fn symmetric_eigen(s: &RealMatrix) -> Result<(Vec<f64>, RealMatrix)> {
    let sym = symmetrized(s)?;
    let eig = nalgebra::SymmetricEigen::new(sym.to_nalgebra());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = sym.rows();
    let mut vectors = RealMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, dst, eig.eigenvectors[(r, src)]);
        }
    }
    Ok((values, vectors))
}

pub fn min_eigenvalue(s: &RealMatrix) -> Result<f64> {
    let sym = symmetrized(s)?;
    let values = nalgebra::SymmetricEigen::new(sym.to_nalgebra()).eigenvalues;
    Ok(values.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Certifies `S ⪰ O` up to `-tol` on the smallest eigenvalue.
pub fn min_eigenvalue_psd_check(s: &RealMatrix, tol: f64) -> Result<Certification> {
    let lambda = min_eigenvalue(s)?;
    Ok(if lambda >= -tol {
        Certification::Psd {
            min_eigenvalue: lambda,
        }
    } else {
        Certification::NotPsd { witness: lambda }
    })
}

/// Symmetric PSD square root; negative rounding-level eigenvalues are clamped to 0.
pub fn sqrt_psd(s: &RealMatrix) -> Result<RealMatrix> {
    let (values, vectors) = symmetric_eigen(s)?;
    let n = values.len();
    let mut out = RealMatrix::zeros(n, n);
    for (k, lambda) in values.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        for i in 0..n {
            let vi = vectors.get(i, k) * root;
            for j in 0..n {
                out.data[i * n + j] += vi * vectors.get(j, k);
            }
        }
    }
    symmetrized(&out)
}

/// An element of a product of Euclidean spaces with the block-sum inner product.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductVector {
    blocks: Vec<RealVector>,
}

impl ProductVector {
    pub fn new(blocks: Vec<RealVector>) -> Self {
        ProductVector { blocks }
    }

    pub fn zeros(count: usize, dim: usize) -> Self {
        ProductVector {
            blocks: vec![RealVector::zeros(dim); count],
        }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[RealVector] {
        &self.blocks
    }

    pub fn block(&self, l: usize) -> &RealVector {
        &self.blocks[l]
    }

    pub fn into_blocks(self) -> Vec<RealVector> {
        self.blocks
    }

    pub fn inner(&self, other: &ProductVector) -> f64 {
        debug_assert_eq!(self.block_count(), other.block_count());
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn sub(&self, other: &ProductVector) -> ProductVector {
        ProductVector {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.sub(b)).collect(),
        }
    }
}

impl Index<usize> for ProductVector {
    type Output = RealVector;

    fn index(&self, l: usize) -> &RealVector {
        &self.blocks[l]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RealMatrix {
        RealMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> RealVector {
        RealVector::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn matvec_examples() {
        let id = RealMatrix::identity(2);
        let x = RealVector::new(vec![3.0, -1.0]).unwrap();
        assert_eq!(matvec(&id, &x).unwrap().as_slice(), &[3.0, -1.0]);

        let z = RealMatrix::zeros(3, 2);
        assert_eq!(matvec(&z, &x).unwrap().as_slice(), &[0.0, 0.0, 0.0]);

        let m = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let ones = RealVector::filled(2, 1.0);
        assert_eq!(matvec(&m, &ones).unwrap().as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn matvec_dimension_mismatch_names_both() {
        let m = RealMatrix::zeros(2, 3);
        let err = matvec(&m, &RealVector::zeros(2)).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                context: "matvec",
                expected: 3,
                actual: 2
            }
        );
    }

    #[test]
    fn construction_rejects_non_finite() {
        assert_eq!(RealVector::new(vec![1.0, f64::NAN]), Err(Error::NonFinite { index: 1 }));
        assert!(RealMatrix::new(1, 2, vec![f64::INFINITY, 0.0]).is_err());
        assert!(RealMatrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn operator_norm_examples() {
        let d = RealMatrix::diagonal(&[3.0, 1.0]);
        assert!((operator_norm(&d, 1e-12, 10_000).unwrap() - 3.0).abs() < 1e-9);

        let s = RealMatrix::identity(4).scale(5.0);
        assert!((operator_norm(&s, 1e-12, 10_000).unwrap() - 5.0).abs() < 1e-12);

        // singular values of [[0,2],[0,0]] are {2, 0}
        let n = RealMatrix::from_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert!((operator_norm(&n, 1e-12, 10_000).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn operator_norm_handles_ones_in_null_space() {
        let m = RealMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let norm = operator_norm(&m, 1e-12, 10_000).unwrap();
        assert!((norm - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn operator_norm_rejects_zero_and_reports_cap() {
        assert!(operator_norm(&RealMatrix::zeros(2, 2), 1e-8, 10).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 6, 6);
        match operator_norm(&m, 1e-300, 3) {
            Err(Error::NotConverged { iterations, estimate, .. }) => {
                assert_eq!(iterations, 3);
                assert!(estimate > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn operator_norm_bounds_random_ratios() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_matrix(&mut rng, 5, 7);
        let norm = operator_norm(&m, POWER_ITERATION_TOL, POWER_ITERATION_MAX_ITER).unwrap();
        for _ in 0..100 {
            let x = random_vector(&mut rng, 7);
            let ratio = m.apply(&x).norm_sq() / x.norm_sq();
            assert!(ratio <= norm * norm * (1.0 + 1e-6));
        }
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 4, 6);
            let x = random_vector(&mut rng, 6);
            let y = random_vector(&mut rng, 4);
            let lhs = m.apply(&x).dot(&y);
            let rhs = x.dot(&m.apply_transpose(&y));
            let t = m.transpose().apply(&y);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
            assert!((x.dot(&t) - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn psd_check_examples() {
        let c = min_eigenvalue_psd_check(&RealMatrix::identity(3), 1e-10).unwrap();
        assert!(c.is_psd());
        assert!((c.min_eigenvalue() - 1.0).abs() < 1e-12);

        let d = min_eigenvalue_psd_check(&RealMatrix::diagonal(&[1.0, -0.5]), 1e-10).unwrap();
        assert_eq!(d, Certification::NotPsd { witness: -0.5 });

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 3, 5);
        assert!(min_eigenvalue_psd_check(&a.gram(), 1e-10).unwrap().is_psd());
    }

    #[test]
    fn psd_check_rejects_asymmetric() {
        let s = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(min_eigenvalue_psd_check(&s, 1e-10), Err(Error::NotSymmetric { .. })));
        // rounding-level asymmetry is tolerated
        let s = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0 + 1e-14, 1.0]]).unwrap();
        assert!(min_eigenvalue_psd_check(&s, 1e-10).is_ok());
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let r = RealMatrix::from_rows(&[vec![1.0, 0.5, 0.25], vec![0.5, 1.0, 0.5], vec![0.25, 0.5, 1.0]]).unwrap();
        let root = sqrt_psd(&r).unwrap();
        let back = root.matmul(&root).unwrap();
        assert!(back.sub(&r).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn gram_matches_explicit_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 4, 3);
        let g = a.transpose().matmul(&a).unwrap();
        assert!(a.gram().sub(&g).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn product_vector_norm_is_block_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let blocks: Vec<_> = (1..4).map(|d| random_vector(&mut rng, d)).collect();
        let expected: f64 = blocks.iter().map(|b| b.norm_sq()).sum();
        let p = ProductVector::new(blocks);
        assert!((p.norm_sq() - expected).abs() < 1e-15);
        assert_eq!(p.sub(&p).norm(), 0.0);
    }
}

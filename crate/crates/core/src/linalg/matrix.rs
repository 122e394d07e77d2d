use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Build from nested rows; panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, a: Complex64) -> ComplexMatrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= a;
        }
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(other.data.iter()) {
            *v += w;
        }
        out
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(other.data.iter()) {
            *v -= w;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Square complex Hermitian matrix. Construction symmetrizes the input,
/// H <- (H + H^H)/2, so Hermitian symmetry holds exactly and the diagonal
/// is strictly real.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1);
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut h = Self::zeros(dim);
        for i in 0..dim {
            h.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        h
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut h = Self::zeros(dim);
        for (i, &v) in entries.iter().enumerate() {
            h.data[i * dim + i] = Complex64::new(v, 0.0);
        }
        h
    }

    /// Symmetrize an arbitrary square matrix into Hermitian storage.
    pub fn from_complex(m: &ComplexMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let dim = m.rows();
        let mut h = Self::zeros(dim);
        for i in 0..dim {
            h.data[i * dim + i] = Complex64::new(m.get(i, i).re, 0.0);
            for j in (i + 1)..dim {
                let v = (m.get(i, j) + m.get(j, i).conj()) * 0.5;
                h.data[i * dim + j] = v;
                h.data[j * dim + i] = v.conj();
            }
        }
        Ok(h)
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(dim: usize, f: F) -> Self {
        Self::from_complex(&ComplexMatrix::from_fn(dim, dim, f)).expect("square by construction")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    /// Set entry (i, j) and its mirror (j, i) together; diagonal keeps only
    /// the real part.
    pub fn set_pair(&mut self, i: usize, j: usize, v: Complex64) {
        if i == j {
            self.data[i * self.dim + i] = Complex64::new(v.re, 0.0);
        } else {
            self.data[i * self.dim + j] = v;
            self.data[j * self.dim + i] = v.conj();
        }
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= a;
        }
        out
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(other.data.iter()) {
            *v += w;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Real trace of the product `self * other` of two Hermitian matrices.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += (self.get(i, j) * other.get(j, i)).re;
            }
        }
        acc
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        super::eigen::eigenvalues(self)
    }

    /// Positive semidefinite within a relative eigenvalue floor:
    /// min eigenvalue >= -tol * max(|eigenvalues|).
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        let eigs = self.eigenvalues();
        let max_abs = eigs.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        eigs[0] >= -rel_tol * max_abs
    }

    /// Error unless PSD within the given relative floor.
    pub fn check_psd(&self, rel_tol: f64) -> Result<()> {
        let eigs = self.eigenvalues();
        let max_abs = eigs.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if eigs[0] < -rel_tol * max_abs {
            return Err(Error::NotPsd { min_eig: eigs[0] });
        }
        Ok(())
    }

    pub fn cholesky(&self) -> Result<super::cholesky::Cholesky> {
        super::cholesky::Cholesky::factor(self)
    }

    /// Log-determinant of a positive definite matrix via Cholesky.
    pub fn logdet_psd(&self) -> Result<f64> {
        Ok(self.cholesky()?.logdet())
    }

    /// Inverse of a positive definite matrix via Cholesky.
    pub fn inverse_psd(&self) -> Result<HermitianMatrix> {
        Ok(self.cholesky()?.inverse())
    }
}

/// Kronecker product of two Hermitian matrices; Hermitian, and PSD when both
/// factors are PSD.
pub fn kronecker(a: &HermitianMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    let (m, n) = (a.dim(), b.dim());
    let dim = m * n;
    let mut out = HermitianMatrix::zeros(dim);
    for i in 0..m {
        for j in 0..m {
            let aij = a.get(i, j);
            for p in 0..n {
                for q in 0..n {
                    out.data[(i * n + p) * dim + (j * n + q)] = aij * b.get(p, q);
                }
            }
        }
    }
    out
}

/// The (k, l)-th contiguous square sub-block of side `blockdim` (0-based
/// block indices).
pub fn block(s: &HermitianMatrix, k: usize, l: usize, blockdim: usize) -> Result<ComplexMatrix> {
    if blockdim == 0 || s.dim() % blockdim != 0 {
        return Err(Error::InvalidParameter(format!(
            "block size {} does not divide dimension {}",
            blockdim,
            s.dim()
        )));
    }
    let nblocks = s.dim() / blockdim;
    if k >= nblocks || l >= nblocks {
        return Err(Error::IndexOutOfRange(format!(
            "block ({}, {}) out of range for {} blocks",
            k, l, nblocks
        )));
    }
    Ok(ComplexMatrix::from_fn(blockdim, blockdim, |i, j| {
        s.get(k * blockdim + i, l * blockdim + j)
    }))
}

/// Commutation matrix K_{m,n}: the mn x mn 0/1 permutation with
/// K vec(A) = vec(A^T) for every m x n matrix A (column-major vec).
pub fn commutation_matrix(m: usize, n: usize) -> ComplexMatrix {
    assert!(m >= 1 && n >= 1);
    let mut k = ComplexMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..n {
            k.set(i * n + j, j * m + i, Complex64::new(1.0, 0.0));
        }
    }
    k
}

/// Multipass sample matrix X: K columns, each a 3M-stacked polarimetric
/// vector (pass-major stacking). Storage is look-major so each column is
/// contiguous.
#[derive(Clone, Debug)]
pub struct MultipassSample {
    passes: usize,
    looks: usize,
    data: Vec<Complex64>,
}

/// Number of polarimetric channels per pass.
pub const CHANNELS: usize = 3;

impl MultipassSample {
    pub fn new(passes: usize, looks: usize, data: Vec<Complex64>) -> Result<Self> {
        if passes < 1 || looks < 1 {
            return Err(Error::InvalidParameter(
                "passes and looks must be >= 1".into(),
            ));
        }
        if data.len() != CHANNELS * passes * looks {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries ({} passes x 3 channels x {} looks), got {}",
                CHANNELS * passes * looks,
                passes,
                looks,
                data.len()
            )));
        }
        Ok(Self {
            passes,
            looks,
            data,
        })
    }

    pub fn from_columns(passes: usize, columns: &[Vec<Complex64>]) -> Result<Self> {
        let looks = columns.len();
        let mut data = Vec::with_capacity(CHANNELS * passes * looks);
        for c in columns {
            if c.len() != CHANNELS * passes {
                return Err(Error::DimensionMismatch(format!(
                    "column length {} != 3M = {}",
                    c.len(),
                    CHANNELS * passes
                )));
            }
            data.extend_from_slice(c);
        }
        Self::new(passes, looks, data)
    }

    #[inline]
    pub fn passes(&self) -> usize {
        self.passes
    }

    #[inline]
    pub fn looks(&self) -> usize {
        self.looks
    }

    /// Stacked vector dimension 3M.
    #[inline]
    pub fn dim(&self) -> usize {
        CHANNELS * self.passes
    }

    /// The k-th look as a contiguous 3M slice.
    #[inline]
    pub fn look(&self, k: usize) -> &[Complex64] {
        let d = self.dim();
        &self.data[k * d..(k + 1) * d]
    }

    /// Sample covariance (1/K) sum_k x_k x_k^H; exactly Hermitian, PSD.
    pub fn sample_covariance(&self) -> HermitianMatrix {
        let d = self.dim();
        let mut h = HermitianMatrix::zeros(d);
        for k in 0..self.looks {
            let x = self.look(k);
            for i in 0..d {
                for j in i..d {
                    h.data[i * d + j] += x[i] * x[j].conj();
                }
            }
        }
        let inv_k = 1.0 / self.looks as f64;
        for i in 0..d {
            for j in i..d {
                let v = h.data[i * d + j] * inv_k;
                if i == j {
                    h.data[i * d + i] = Complex64::new(v.re, 0.0);
                } else {
                    h.data[i * d + j] = v;
                    h.data[j * d + i] = v.conj();
                }
            }
        }
        h
    }

    /// Average of the per-pass 3x3 sample covariances (pooled SCM of the
    /// M*K per-pass polarimetric vectors).
    pub fn pass_averaged_covariance(&self) -> HermitianMatrix {
        let mut h = HermitianMatrix::zeros(CHANNELS);
        for k in 0..self.looks {
            let x = self.look(k);
            for m in 0..self.passes {
                let xm = &x[m * CHANNELS..(m + 1) * CHANNELS];
                for i in 0..CHANNELS {
                    for j in i..CHANNELS {
                        h.data[i * CHANNELS + j] += xm[i] * xm[j].conj();
                    }
                }
            }
        }
        let scale = 1.0 / (self.looks * self.passes) as f64;
        for i in 0..CHANNELS {
            for j in i..CHANNELS {
                let v = h.data[i * CHANNELS + j] * scale;
                if i == j {
                    h.data[i * CHANNELS + i] = Complex64::new(v.re, 0.0);
                } else {
                    h.data[i * CHANNELS + j] = v;
                    h.data[j * CHANNELS + i] = v.conj();
                }
            }
        }
        h
    }
}

/// Pauli-basis coherence T_P = T G C_p G T^T with G = diag(1, sqrt(2), 1)
/// and T the Pauli change-of-basis matrix.
pub fn pauli_coherence(c_p: &HermitianMatrix) -> Result<HermitianMatrix> {
    if c_p.dim() != CHANNELS {
        return Err(Error::DimensionMismatch(format!(
            "pauli_coherence expects a 3x3 matrix, got {}x{}",
            c_p.dim(),
            c_p.dim()
        )));
    }
    let t = pauli_basis();
    let g = ComplexMatrix::from_fn(3, 3, |i, j| {
        if i == j {
            Complex64::new(if i == 1 { std::f64::consts::SQRT_2 } else { 1.0 }, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let gcg = g.mul(&c_p.to_complex()).mul(&g);
    let tp = t.mul(&gcg).mul(&t.transpose());
    HermitianMatrix::from_complex(&tp)
}

/// Pauli change-of-basis matrix (real orthogonal):
/// (1/sqrt 2) [[1,0,1],[1,0,-1],[0,sqrt 2,0]].
pub fn pauli_basis() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |v: f64| Complex64::new(v, 0.0);
    ComplexMatrix::from_rows(&[
        vec![r(s), r(0.0), r(s)],
        vec![r(s), r(0.0), r(-s)],
        vec![r(0.0), r(1.0), r(0.0)],
    ])
}

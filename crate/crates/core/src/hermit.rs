//! Dense complex linear algebra: matrices, Kronecker products, traces and a
//! Hermitian eigensolver.
//!
//! Storage is row-major `Complex64`. Heavy kernels (matrix products and the
//! eigendecomposition) are delegated to `faer`, always run sequentially so
//! results do not depend on the size of the calling thread pool.

use dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::matmul::matmul as faer_matmul;
use faer::traits::ComplexField;
use faer::{Accum, Mat, MatRef, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const HERMITIZE_TOL: f64 = 1e-8;

/// Dense complex matrix in row-major order. All entries are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parameter(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `A·B − B·A`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        matmul(self, other)?.sub(&matmul(other, self)?)
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub(crate) fn to_faer(&self) -> Mat<Complex64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    pub(crate) fn from_faer(m: MatRef<'_, Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

/// Matrix product `A·B`.
pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Mat::<Complex64>::zeros(a.rows, b.cols);
    faer_matmul(
        out.as_mut(),
        Accum::Replace,
        a.to_faer().as_ref(),
        b.to_faer().as_ref(),
        Complex64::new(1.0, 0.0),
        Par::Seq,
    );
    Ok(ComplexMatrix::from_faer(out.as_ref()))
}

/// Kronecker product; block `(i, j)` of the result is `A[i][j]·B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * br, a.cols * bc, |i, j| {
        a.get(i / br, j / bc) * b.get(i % br, j % bc)
    })
}

pub fn trace(a: &ComplexMatrix) -> Result<Complex64> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "trace of non-square {}x{} matrix",
            a.rows, a.cols
        )));
    }
    Ok((0..a.rows).map(|i| a.get(i, i)).sum())
}

fn asymmetry(a: &ComplexMatrix) -> f64 {
    let n = a.rows;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a.get(i, j) - a.get(j, i).conj()).norm());
        }
    }
    worst
}

/// A square complex matrix equal to its own adjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    /// Wraps a matrix that already satisfies the Hermiticity invariant to
    /// within `1e-12` relative.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!(
                "Hermitian operator must be square, got {}x{}",
                matrix.rows, matrix.cols
            )));
        }
        let scale = 1.0 + matrix.max_abs();
        let threshold = HERMITIAN_TOL * scale;
        let asym = asymmetry(&matrix);
        if asym > threshold {
            return Err(Error::NotHermitian {
                asymmetry: asym,
                threshold,
            });
        }
        for i in 0..matrix.rows {
            let d = matrix.get(i, i);
            if d.im.abs() > HERMITIAN_TOL * (1.0 + d.re.abs()) {
                return Err(Error::NotHermitian {
                    asymmetry: d.im.abs(),
                    threshold: HERMITIAN_TOL * (1.0 + d.re.abs()),
                });
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self {
            matrix: ComplexMatrix::from_diagonal(diag),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Full eigendecomposition of this operator.
    pub fn eigh(&self) -> Result<SpectralDecomposition> {
        eigh(self)
    }
}

/// Returns `(A + A†)/2`, rejecting inputs whose asymmetry exceeds
/// `1e-8·(1 + max|A|)`.
pub fn hermitize(a: &ComplexMatrix) -> Result<HermitianOperator> {
    if !a.is_square() {
        return Err(Error::Shape(format!("cannot hermitize {}x{} matrix", a.rows, a.cols)));
    }
    let threshold = HERMITIZE_TOL * (1.0 + a.max_abs());
    let asym = asymmetry(a);
    if asym > threshold {
        return Err(Error::NotHermitian {
            asymmetry: asym,
            threshold,
        });
    }
    let n = a.rows;
    let mut m = a.clone();
    for i in 0..n {
        m.set(i, i, Complex64::new(a.get(i, i).re, 0.0));
        for j in (i + 1)..n {
            let avg = (a.get(i, j) + a.get(j, i).conj()) * 0.5;
            m.set(i, j, avg);
            m.set(j, i, avg.conj());
        }
    }
    Ok(HermitianOperator { matrix: m })
}

/// Eigenvalues in ascending order with the matching unitary eigenvector
/// matrix (eigenvectors are columns).
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub(crate) fn from_parts(eigenvalues: Vec<f64>, eigenvectors: ComplexMatrix) -> Self {
        debug_assert!(eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.abs()).fold(0.0, f64::max)
    }

    /// `U·diag(E)·U†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let n = self.dim();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| u.get(i, k) * self.eigenvalues[k] * u.get(j, k).conj())
                .sum()
        })
    }

    /// Rotates `op` into the eigenbasis: `U†·op·U`.
    pub fn to_eigenbasis(&self, op: &ComplexMatrix) -> Result<ComplexMatrix> {
        let u = self.eigenvectors.to_faer();
        let o = op.to_faer();
        if o.nrows() != u.nrows() || o.ncols() != u.nrows() {
            return Err(Error::Shape(format!(
                "operator {}x{} vs spectral dimension {}",
                o.nrows(),
                o.ncols(),
                u.nrows()
            )));
        }
        let n = u.nrows();
        let one = Complex64::new(1.0, 0.0);
        let mut tmp = Mat::<Complex64>::zeros(n, n);
        faer_matmul(tmp.as_mut(), Accum::Replace, o.as_ref(), u.as_ref(), one, Par::Seq);
        let mut out = Mat::<Complex64>::zeros(n, n);
        faer_matmul(out.as_mut(), Accum::Replace, u.adjoint(), tmp.as_ref(), one, Par::Seq);
        Ok(ComplexMatrix::from_faer(out.as_ref()))
    }
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn eigh(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    let n = h.dim();
    let a = h.matrix.to_faer();
    let (values, vectors) = eigh_faer(a.as_ref(), |z: &Complex64| z.re).map_err(|_| {
        Error::Numerical(format!(
            "Hermitian eigensolver did not converge (dim {n}, max |H| {:.3e})",
            h.matrix.max_abs()
        ))
    })?;
    Ok(SpectralDecomposition::from_parts(
        values,
        ComplexMatrix::from_faer(vectors.as_ref()),
    ))
}

/// Sequential faer eigendecomposition of a Hermitian matrix (lower triangle
/// is read).
pub(crate) fn eigh_faer<T: ComplexField>(
    a: MatRef<'_, T>,
    real_part: impl Fn(&T) -> f64,
) -> Result<(Vec<f64>, Mat<T>), evd::EvdError> {
    let n = a.nrows();
    let mut s = faer::diag::Diag::<T>::zeros(n);
    let mut u = Mat::<T>::zeros(n, n);
    let params = Default::default();
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<T>(
        n,
        ComputeEigenvectors::Yes,
        Par::Seq,
        params,
    ));
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        Some(u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        params,
    )?;
    let values: Vec<f64> = (0..n).map(|i| real_part(&s[i])).collect();
    // faer already sorts, but keep the ordering contract explicit
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    if order.iter().enumerate().all(|(k, &i)| k == i) {
        return Ok((values, u));
    }
    let sorted = order.iter().map(|&i| values[i]).collect();
    let perm = Mat::from_fn(n, n, |i, j| u[(i, order[j])].clone());
    Ok((sorted, perm))
}

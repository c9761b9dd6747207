//! Density matrices: validation, spectral decomposition, and the repair step
//! used on noisy tomographic estimates.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};

/// Hermitian, positive-semidefinite, trace-one matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Wrap a matrix, checking squareness, Hermiticity (1e-12 max-entry) and
    /// unit trace (1e-10). Positivity is exercised by [`validate`].
    ///
    /// [`validate`]: DensityMatrix::validate
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotADensityMatrix(format!("not square: {}x{}", mat.nrows(), mat.ncols())));
        }
        let mut herm_dev: f64 = 0.0;
        for i in 0..mat.nrows() {
            for j in i..mat.ncols() {
                herm_dev = herm_dev.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
            }
        }
        if herm_dev > 1e-12 {
            return Err(Error::NotADensityMatrix(format!("Hermiticity violated by {herm_dev:.3e}")));
        }
        let tr = trace_re(&mat);
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::NotADensityMatrix(format!("trace = {tr}, expected 1")));
        }
        Ok(Self { mat: linalg::hermitize(&mat) })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.mat)
    }

    /// Eigendecomposition with eigenvalues descending; eigenvectors form a
    /// full orthonormal basis (zero-eigenvalue vectors included).
    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        linalg::eigh_desc(&self.mat)
    }

    /// Full invariant check, including positivity (min eigenvalue >= -1e-10).
    pub fn validate(&self) -> Result<()> {
        let (vals, _) = self.eigh();
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -1e-10 {
            return Err(Error::NotADensityMatrix(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Number of eigenvalues above `rel_tol` relative to the leading one.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let (vals, _) = self.eigh();
        let top = vals.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        vals.iter().take_while(|&&l| l > rel_tol * top).count()
    }

    /// Repair a noisy estimate: symmetrize, clip negative eigenvalues to
    /// zero, renormalize the trace.
    pub fn repair(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotADensityMatrix(format!("not square: {}x{}", mat.nrows(), mat.ncols())));
        }
        let (vals, vecs) = linalg::eigh_desc(&linalg::hermitize(&mat));
        let clipped: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if total <= 1e-300 {
            return Err(Error::NotADensityMatrix("estimate has no positive spectral mass".into()));
        }
        let diag = CVector::from_iterator(clipped.len(), clipped.iter().map(|&l| C64::new(l / total, 0.0)));
        let repaired = &vecs * CMatrix::from_diagonal(&diag) * vecs.adjoint();
        Ok(Self { mat: linalg::hermitize(&repaired) })
    }

    /// Partial trace over the last site of a window with local dimension `d`.
    pub fn partial_trace_last(&self, d: usize) -> Result<DensityMatrix> {
        let dim = self.dim();
        if d < 2 || dim % d != 0 {
            return Err(Error::ShapeMismatch(format!("dimension {dim} does not factor a d = {d} site")));
        }
        let sub = dim / d;
        let mut out = CMatrix::zeros(sub, sub);
        for i in 0..sub {
            for j in 0..sub {
                let mut acc = C64::new(0.0, 0.0);
                for z in 0..d {
                    acc += self.mat[(i * d + z, j * d + z)];
                }
                out[(i, j)] = acc;
            }
        }
        DensityMatrix::new(out)
    }
}

fn trace_re(mat: &CMatrix) -> f64 {
    (0..mat.nrows()).map(|i| mat[(i, i)].re).sum()
}

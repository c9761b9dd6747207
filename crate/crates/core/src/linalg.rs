//! Complex linear-algebra kernels: Hermitian eigendecompositions, ordered
//! SVDs, and seeded random matrix ensembles.
//!
//! Matrices live in nalgebra containers; the decompositions themselves run on
//! faer (nalgebra's complex SVD returns wrong factors on some inputs that the
//! sweep produces routinely). `faer::c64` is `num_complex::Complex<f64>`, so
//! the handoff is a plain copy.

use nalgebra as na;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = na::DMatrix<C64>;
pub type CVector = na::DVector<C64>;
pub type CRowVector = na::RowDVector<C64>;

fn to_faer(m: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// `(A + A†)/2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Hermitian eigendecomposition with eigenvalues sorted descending.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns, column
/// `j` paired with eigenvalue `j`. The input is hermitized first so callers
/// may pass matrices with `O(eps)` asymmetry.
pub fn eigh_desc(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let dim = m.nrows();
    let eig = to_faer(&hermitize(m))
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigendecomposition of a finite matrix converges");
    // faer returns eigenvalues ascending
    let vals: Vec<f64> = (0..dim).map(|i| eig.S()[dim - 1 - i].re).collect();
    let vecs = CMatrix::from_fn(dim, dim, |i, j| eig.U()[(i, dim - 1 - j)]);
    (vals, vecs)
}

/// Thin SVD `M = U diag(s) V†` with singular values sorted descending.
pub fn svd_desc(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let svd = to_faer(m).thin_svd().expect("SVD of a finite matrix converges");
    let k = m.nrows().min(m.ncols());
    let s: Vec<f64> = (0..k).map(|i| svd.S()[i].re).collect();
    debug_assert!(s.windows(2).all(|w| w[0] >= w[1]));
    let u = CMatrix::from_fn(m.nrows(), k, |i, j| svd.U()[(i, j)]);
    let v_t = CMatrix::from_fn(k, m.ncols(), |i, j| svd.V()[(j, i)].conj());
    (u, s, v_t)
}

/// Singular values only, descending.
pub fn singular_values_desc(m: &CMatrix) -> Vec<f64> {
    to_faer(m)
        .singular_values()
        .expect("SVD of a finite matrix converges")
}

/// Operator (spectral) norm.
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values_desc(m).first().copied().unwrap_or(0.0)
}

/// Max-entry deviation of `U†U` from the identity.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let gram = u.adjoint() * u;
    let dim = gram.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            dev = dev.max((gram[(i, j)] - target).norm());
        }
    }
    dev
}

/// Error if `u` is not unitary within `tol` (max-entry gram deviation).
pub fn require_unitary(u: &CMatrix, tol: f64) -> Result<()> {
    let dev = unitarity_error(u);
    if dev > tol {
        return Err(Error::NotUnitary { dev });
    }
    Ok(())
}

/// Standard complex Gaussian: independent N(0, 1/2) real and imaginary parts.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Seeded Haar-like random unit vector (normalized complex Gaussian vector).
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| complex_normal(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v.unscale(norm);
        }
    }
}

/// Random Hermitian matrix normalized to unit spectral norm.
pub fn random_hermitian_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| complex_normal(rng));
    let h = hermitize(&g);
    let spectral = op_norm(&h);
    if spectral <= 1e-300 {
        return CMatrix::identity(dim, dim);
    }
    h.unscale(spectral)
}

/// Haar-distributed random unitary (QR of a Ginibre matrix with the R-diagonal
/// phase fix).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| complex_normal(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 1e-300 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// `exp(i t H)` for Hermitian `H`, via eigendecomposition.
pub fn expm_i_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (vals, vecs) = eigh_desc(h);
    let phases = CVector::from_iterator(vals.len(), vals.iter().map(|&l| C64::from_polar(1.0, t * l)));
    &vecs * CMatrix::from_diagonal(&phases) * vecs.adjoint()
}

/// Projector onto the span of the first `r` columns of `basis`.
pub fn projector_onto_columns(basis: &CMatrix, r: usize) -> CMatrix {
    let cols = basis.columns(0, r);
    &cols * cols.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_sorts_descending_and_diagonalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_hermitian_unit(6, &mut rng);
        let (vals, vecs) = eigh_desc(&h);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let rebuilt = &vecs
            * CMatrix::from_diagonal(&CVector::from_iterator(6, vals.iter().map(|&l| C64::new(l, 0.0))))
            * vecs.adjoint();
        assert!((rebuilt - h).norm() < 1e-12);
        assert!(unitarity_error(&vecs) < 1e-12);
    }

    #[test]
    fn svd_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = CMatrix::from_fn(4, 7, |_, _| complex_normal(&mut rng));
        let (u, s, v_t) = svd_desc(&m);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let sd = CMatrix::from_diagonal(&CVector::from_iterator(s.len(), s.iter().map(|&x| C64::new(x, 0.0))));
        assert!((&u * sd * &v_t - m).norm() < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(5, &mut rng);
        assert!(unitarity_error(&u) < 1e-12);
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        let u2 = random_unitary(5, &mut rng2);
        assert_eq!(u, u2);
    }

    #[test]
    fn matrix_exponential_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_hermitian_unit(8, &mut rng);
        let w = expm_i_hermitian(&h, 1e-3);
        assert!(unitarity_error(&w) < 1e-12);
        // first-order agreement with I + i t H
        let lin = CMatrix::identity(8, 8) + h.map(|x| x * C64::new(0.0, 1e-3));
        assert!((&w - lin).norm() < 1e-5);
    }
}

//! Dense statevector backend: exact simulation of small chains and the
//! verification oracle for everything else.
//!
//! Index convention, fixed globally: site 1 is the most significant base-`d`
//! digit of the amplitude index, so `|z_1, ..., z_n>` lives at
//! `z_1 d^{n-1} + z_2 d^{n-2} + ... + z_n`. All site arguments are 1-based.

use nalgebra as na;
use num_complex::Complex64 as C64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};

/// Memory guard on dense operations: `d^n` may not exceed this.
pub const DENSE_GUARD: u128 = 1 << 24;

/// Checked `d^n` under the dense guard.
pub fn dense_dim(n: usize, d: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidSpec("site count n must be >= 1".into()));
    }
    if d < 2 {
        return Err(Error::InvalidSpec(format!("local dimension d must be >= 2, got {d}")));
    }
    let mut dim: u128 = 1;
    for _ in 0..n {
        dim *= d as u128;
        if dim > DENSE_GUARD {
            return Err(Error::SizeExceeded { dim });
        }
    }
    Ok(dim as usize)
}

/// Exact statevector of `n` qudits with uniform local dimension `d`.
#[derive(Clone, Debug)]
pub struct DenseState {
    n: usize,
    d: usize,
    amps: CVector,
}

impl DenseState {
    /// Build from raw amplitudes; the vector is normalized.
    pub fn new(n: usize, d: usize, amps: CVector) -> Result<Self> {
        let dim = dense_dim(n, d)?;
        if amps.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "amplitude vector has length {}, expected d^n = {dim}",
                amps.len()
            )));
        }
        let norm = amps.norm();
        if norm < 1e-150 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self { n, d, amps: amps.unscale(norm) })
    }

    /// Computational basis state `|digits>`.
    pub fn basis(n: usize, d: usize, digits: &[usize]) -> Result<Self> {
        let dim = dense_dim(n, d)?;
        if digits.len() != n {
            return Err(Error::BadDigitString(format!("expected {n} digits, got {}", digits.len())));
        }
        let mut amps = CVector::zeros(dim);
        let idx = index_of(digits, d)?;
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { n, d, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Amplitude of the basis state `|digits>`.
    pub fn amp(&self, digits: &[usize]) -> Result<C64> {
        if digits.len() != self.n {
            return Err(Error::BadDigitString(format!(
                "expected {} digits, got {}",
                self.n,
                digits.len()
            )));
        }
        Ok(self.amps[index_of(digits, self.d)?])
    }

    /// Base-`d` digits of a flat amplitude index, site 1 first.
    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0usize; self.n];
        for slot in digits.iter_mut().rev() {
            *slot = index % self.d;
            index /= self.d;
        }
        digits
    }

    fn check_window(&self, first: usize, k: usize) -> Result<()> {
        if first == 0 || k == 0 || first + k - 1 > self.n {
            return Err(Error::WindowOutOfRange {
                first,
                last: first + k.max(1) - 1,
                n: self.n,
            });
        }
        Ok(())
    }

    /// Reduced density matrix of the `k`-site window starting at `first`
    /// (partial trace over everything outside the window).
    pub fn reduced_density_matrix(&self, first: usize, k: usize) -> Result<DensityMatrix> {
        self.check_window(first, k)?;
        let wdim = self.d.pow(k as u32);
        let right_dim = self.d.pow((self.n - (first - 1) - k) as u32);
        let left_dim = self.dim() / (wdim * right_dim);
        let mut rho = CMatrix::zeros(wdim, wdim);
        let mut window = vec![C64::new(0.0, 0.0); wdim];
        for l in 0..left_dim {
            for r in 0..right_dim {
                let base = l * wdim * right_dim + r;
                for (w, slot) in window.iter_mut().enumerate() {
                    *slot = self.amps[base + w * right_dim];
                }
                for w in 0..wdim {
                    let aw = window[w];
                    if aw.norm_sqr() == 0.0 {
                        continue;
                    }
                    for w2 in 0..wdim {
                        rho[(w, w2)] += aw * window[w2].conj();
                    }
                }
            }
        }
        DensityMatrix::new(rho)
    }

    /// Apply a unitary on the window of `k = log_d(dim U)` sites starting at
    /// `first`. Acts as the identity everywhere else.
    pub fn apply_window_unitary(&self, u: &CMatrix, first: usize) -> Result<DenseState> {
        let wdim = u.nrows();
        if u.ncols() != wdim {
            return Err(Error::ShapeMismatch(format!("unitary must be square, got {}x{}", u.nrows(), u.ncols())));
        }
        let k = window_len(wdim, self.d).ok_or_else(|| {
            Error::ShapeMismatch(format!("unitary dimension {wdim} is not a power of d = {}", self.d))
        })?;
        self.check_window(first, k)?;
        linalg::require_unitary(u, 1e-10)?;

        let right_dim = self.d.pow((self.n - (first - 1) - k) as u32);
        let left_dim = self.dim() / (wdim * right_dim);
        let mut out = CVector::zeros(self.dim());
        let mut window = CVector::zeros(wdim);
        for l in 0..left_dim {
            for r in 0..right_dim {
                let base = l * wdim * right_dim + r;
                for w in 0..wdim {
                    window[w] = self.amps[base + w * right_dim];
                }
                let rotated = u * &window;
                for w in 0..wdim {
                    out[base + w * right_dim] = rotated[w];
                }
            }
        }
        Ok(DenseState { n: self.n, d: self.d, amps: out })
    }

    /// Project `site` onto `|0>`, renormalize, and return the pre-projection
    /// probability of the `0` outcome. `1 - p` is the truncation error of the
    /// step.
    pub fn postselect_zero(&self, site: usize) -> Result<(DenseState, f64)> {
        self.check_window(site, 1)?;
        let stride = self.d.pow((self.n - site) as u32);
        let mut p = 0.0;
        for (idx, amp) in self.amps.iter().enumerate() {
            if (idx / stride) % self.d == 0 {
                p += amp.norm_sqr();
            }
        }
        if p < 1e-14 {
            return Err(Error::ZeroProbability { site, p });
        }
        let scale = C64::new(1.0 / p.sqrt(), 0.0);
        let amps = CVector::from_fn(self.dim(), |idx, _| {
            if (idx / stride) % self.d == 0 {
                self.amps[idx] * scale
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok((DenseState { n: self.n, d: self.d, amps }, p))
    }

    /// Squared Schmidt coefficients across the cut between sites `cut` and
    /// `cut + 1`, descending. Values below 1e-14 of the leading one are
    /// dropped as numerical noise.
    pub fn schmidt_spectrum(&self, cut: usize) -> Result<Vec<f64>> {
        if cut == 0 || cut >= self.n {
            return Err(Error::CutOutOfRange { cut, n: self.n });
        }
        let rows = self.d.pow(cut as u32);
        let cols = self.dim() / rows;
        let m = CMatrix::from_fn(rows, cols, |r, c| self.amps[r * cols + c]);
        let s = linalg::singular_values_desc(&m);
        let top = s[0] * s[0];
        Ok(s.iter().map(|x| x * x).take_while(|&w| w > 1e-14 * top).collect())
    }
}

/// Flat index of a digit string (site 1 most significant).
pub fn index_of(digits: &[usize], d: usize) -> Result<usize> {
    let mut idx = 0usize;
    for &z in digits {
        if z >= d {
            return Err(Error::BadDigitString(format!("digit {z} out of range for d = {d}")));
        }
        idx = idx * d + z;
    }
    Ok(idx)
}

/// `k` with `d^k == wdim`, if it exists.
pub fn window_len(wdim: usize, d: usize) -> Option<usize> {
    let mut k = 0usize;
    let mut acc = 1usize;
    while acc < wdim {
        acc *= d;
        k += 1;
    }
    (acc == wdim && k > 0).then_some(k)
}

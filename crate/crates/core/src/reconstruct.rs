//! Turning a sweep's output into explicit MPS tensors.
//!
//! With window size `k`, the amplitudes of the input state factor into a
//! product of operators on `(C^d)^{k-1}`:
//!
//! ```text
//! c_{z_1..z_n} = <0|^{k-1}  T_1^{z_1} .. T_{k-1}^{z_{k-1}}  V_1^{z_k} .. V_{n-k+1}^{z_n}  |eta>
//! ```
//!
//! The `T` family is fixed and state-independent; each `V_i` is a slice of
//! the inverse of the step-`i` disentangler. The whole product is a valid
//! open-boundary MPS with every bond equal to `d^{k-1}`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CRowVector, CVector};
use crate::mps::{Gauge, MpsState};
use crate::tomography::{Disentangler, TomographyResult};

pub use crate::overlap::fidelity;

/// The extracted tensor family: `t[i][z]` and `v[i][z]` are
/// `d^{k-1} x d^{k-1}` operators; the boundary bra is `<0|^{k-1}` (implicit)
/// and the boundary ket is `eta`.
#[derive(Clone, Debug)]
pub struct ExtractedTensors {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    /// `T_i^z` for `i = 1..k-1`: empty when `k = 1`.
    pub t: Vec<Vec<CMatrix>>,
    /// `V_i^z` for `i = 1..n-k+1`.
    pub v: Vec<Vec<CMatrix>>,
    pub eta: CVector,
}

/// `T_i^z = I_{1..i-1} (x) |0><z| (x) I_{i+1..k-1}`, for all `i` and `z`.
pub fn extract_t(k: usize, d: usize) -> Result<Vec<Vec<CMatrix>>> {
    if k == 0 || d < 2 {
        return Err(Error::config("k/d", "need k >= 1 and d >= 2"));
    }
    let mut t = Vec::with_capacity(k.saturating_sub(1));
    for i in 1..k {
        let left = d.pow((i - 1) as u32);
        let right = d.pow((k - 1 - i) as u32);
        let mut slices = Vec::with_capacity(d);
        for z in 0..d {
            let mut ketbra = CMatrix::zeros(d, d);
            ketbra[(0, z)] = C64::new(1.0, 0.0);
            let m = CMatrix::identity(left, left)
                .kronecker(&ketbra)
                .kronecker(&CMatrix::identity(right, right));
            slices.push(m);
        }
        t.push(slices);
    }
    Ok(t)
}

/// `V^z = (I (x) <z|_k) U^{-1} (|0>_1 (x) I)`: as index slices of `U' = U^{-1}`,
/// `V^z[q, m] = U'[q d + z, m]` with `q, m < d^{k-1}`.
pub fn extract_v(u: &Disentangler, d: usize, k: usize) -> Result<Vec<CMatrix>> {
    let dim = d.pow(k as u32);
    if u.matrix.nrows() != dim || u.matrix.ncols() != dim {
        return Err(Error::ShapeMismatch(format!(
            "disentangler is {}x{}, expected d^k = {dim}",
            u.matrix.nrows(),
            u.matrix.ncols()
        )));
    }
    linalg::require_unitary(&u.matrix, 1e-10)?;
    let inv = u.matrix.adjoint();
    let bond = d.pow((k - 1) as u32);
    let mut v = Vec::with_capacity(d);
    for z in 0..d {
        v.push(CMatrix::from_fn(bond, bond, |q, m| inv[(q * d + z, m)]));
    }
    Ok(v)
}

/// Extract the full tensor family from a sweep result.
pub fn extract_tensors(result: &TomographyResult) -> Result<ExtractedTensors> {
    if result.disentanglers.len() != result.windows() {
        return Err(Error::IncompleteLog {
            expected: result.windows(),
            got: result.disentanglers.len(),
        });
    }
    let t = extract_t(result.k, result.d)?;
    let v = result
        .disentanglers
        .iter()
        .map(|u| extract_v(u, result.d, result.k))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExtractedTensors { n: result.n, d: result.d, k: result.k, t, v, eta: result.eta.clone() })
}

impl ExtractedTensors {
    fn site_slices(&self, site: usize) -> &[CMatrix] {
        if site < self.k {
            &self.t[site - 1]
        } else {
            &self.v[site - self.k]
        }
    }
}

/// Evaluate one amplitude by the product formula, folding left to right in
/// `O(n d^{2(k-1)})`.
pub fn amplitude(tensors: &ExtractedTensors, digits: &[usize]) -> Result<C64> {
    if digits.len() != tensors.n {
        return Err(Error::BadDigitString(format!(
            "expected {} digits, got {}",
            tensors.n,
            digits.len()
        )));
    }
    let bond = tensors.d.pow((tensors.k - 1) as u32);
    let mut row = CRowVector::zeros(bond);
    row[0] = C64::new(1.0, 0.0); // <0|^{k-1}
    for (site, &z) in digits.iter().enumerate() {
        if z >= tensors.d {
            return Err(Error::BadDigitString(format!("digit {z} out of range for d = {}", tensors.d)));
        }
        row *= &tensors.site_slices(site + 1)[z];
    }
    Ok((row * &tensors.eta)[(0, 0)])
}

/// Package the tensor family as a standard [`MpsState`] with every bond equal
/// to `d^{k-1}`; the dense expansion is contraction-identical to
/// [`amplitude`].
pub fn to_mps(tensors: &ExtractedTensors) -> Result<MpsState> {
    let bond = tensors.d.pow((tensors.k - 1) as u32);
    let mut site_tensors = Vec::with_capacity(tensors.n);
    for site in 1..=tensors.n {
        site_tensors.push(tensors.site_slices(site).to_vec());
    }
    let mut left = CRowVector::zeros(bond);
    left[0] = C64::new(1.0, 0.0);
    MpsState::new(tensors.d, site_tensors, left, tensors.eta.clone(), Gauge::None)
}

/// Like [`to_mps`], followed by a compression pass that truncates Schmidt
/// values below `rel_tol` of each cut's leading value, pulling bonds back
/// toward the physical rank.
pub fn to_mps_compressed(tensors: &ExtractedTensors, rel_tol: f64) -> Result<MpsState> {
    let mut mps = to_mps(tensors)?;
    mps.compress(rel_tol)?;
    mps.normalize()?;
    Ok(mps)
}

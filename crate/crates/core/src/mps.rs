//! Open-boundary matrix product states and the window operations the
//! disentangling sweep needs: local unitaries with SVD re-splitting, window
//! reduced density matrices through environment contractions, projective
//! postselection, and conversions to and from dense statevectors.
//!
//! Site `i` holds a stack of `d` matrices `A_i^z` of shape
//! `chi_{i-1} x chi_i`; an amplitude is
//! `left * A_1^{z_1} * ... * A_n^{z_n} * right`. Sites are 1-based, matching
//! the dense backend's "site 1 is most significant" convention.

use nalgebra as na;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dense::{dense_dim, DenseState};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CRowVector, CVector};

/// Relative singular-value floor treated as machine noise when splitting or
/// sweeping. Well below every tolerance in the library and well above f64
/// rounding debris.
const NOISE_TRIM: f64 = 1e-14;

/// Canonical-form tag. `LeftCanonical` asserts every non-terminal site stack
/// is an isometry (`sum_z A^z' A^z = I`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gauge {
    None,
    LeftCanonical,
    RightCanonical,
}

/// Open-boundary MPS with uniform local dimension `d`.
#[derive(Clone, Debug)]
pub struct MpsState {
    n: usize,
    d: usize,
    /// `tensors[i][z]` is `A_{i+1}^z`.
    tensors: Vec<Vec<CMatrix>>,
    left: CRowVector,
    right: CVector,
    gauge: Gauge,
}

impl MpsState {
    pub fn new(
        d: usize,
        tensors: Vec<Vec<CMatrix>>,
        left: CRowVector,
        right: CVector,
        gauge: Gauge,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidSpec(format!("local dimension d must be >= 2, got {d}")));
        }
        let n = tensors.len();
        if n == 0 {
            return Err(Error::InvalidSpec("MPS needs at least one site".into()));
        }
        for (i, site) in tensors.iter().enumerate() {
            if site.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "site {} has {} physical slices, expected d = {d}",
                    i + 1,
                    site.len()
                )));
            }
            let shape = site[0].shape();
            if shape.0 == 0 || shape.1 == 0 {
                return Err(Error::ShapeMismatch(format!("site {} has a zero bond", i + 1)));
            }
            if site.iter().any(|m| m.shape() != shape) {
                return Err(Error::ShapeMismatch(format!("site {} slices disagree in shape", i + 1)));
            }
        }
        for i in 0..n - 1 {
            let cols = tensors[i][0].ncols();
            let rows = tensors[i + 1][0].nrows();
            if cols != rows {
                return Err(Error::InconsistentBonds { site: i + 1, cols, rows });
            }
        }
        if left.len() != tensors[0][0].nrows() {
            return Err(Error::ShapeMismatch(format!(
                "left boundary has length {}, site 1 expects {}",
                left.len(),
                tensors[0][0].nrows()
            )));
        }
        if right.len() != tensors[n - 1][0].ncols() {
            return Err(Error::ShapeMismatch(format!(
                "right boundary has length {}, site {n} expects {}",
                right.len(),
                tensors[n - 1][0].ncols()
            )));
        }
        Ok(Self { n, d, tensors, left, right, gauge })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    /// Bond dimensions `chi_0 ..= chi_n` (boundaries included).
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.n + 1);
        dims.push(self.tensors[0][0].nrows());
        for site in &self.tensors {
            dims.push(site[0].ncols());
        }
        dims
    }

    /// Largest internal bond dimension.
    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Tensor stack of a (1-based) site.
    pub fn site(&self, site: usize) -> &[CMatrix] {
        &self.tensors[site - 1]
    }

    pub fn left_boundary(&self) -> &CRowVector {
        &self.left
    }

    pub fn right_boundary(&self) -> &CVector {
        &self.right
    }

    fn check_window(&self, first: usize, k: usize) -> Result<()> {
        if first == 0 || k == 0 || first + k - 1 > self.n {
            return Err(Error::WindowOutOfRange { first, last: first + k.max(1) - 1, n: self.n });
        }
        Ok(())
    }

    /// Global norm from the full transfer-network contraction.
    pub fn norm(&self) -> f64 {
        let mut env = self.left.adjoint() * &self.left;
        for site in &self.tensors {
            let mut next = CMatrix::zeros(site[0].ncols(), site[0].ncols());
            for a in site {
                next += a.adjoint() * &env * a;
            }
            env = next;
        }
        let val = (self.right.adjoint() * env * &self.right)[(0, 0)];
        val.re.max(0.0).sqrt()
    }

    /// Scale the right boundary so the global norm is 1.
    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if norm < 1e-150 {
            return Err(Error::ZeroNorm);
        }
        self.right.unscale_mut(norm);
        Ok(())
    }

    /// Whether every non-terminal site stack is an isometry within `tol`.
    pub fn is_left_canonical(&self, tol: f64) -> bool {
        for site in &self.tensors[..self.n - 1] {
            let chi = site[0].ncols();
            let mut gram = CMatrix::zeros(chi, chi);
            for a in site {
                gram += a.adjoint() * a;
            }
            gram -= CMatrix::identity(chi, chi);
            if gram.iter().any(|x| x.norm() > tol) {
                return false;
            }
        }
        true
    }

    /// Amplitude of `|digits>` by folding the chain left to right.
    pub fn amplitude(&self, digits: &[usize]) -> Result<C64> {
        if digits.len() != self.n {
            return Err(Error::BadDigitString(format!(
                "expected {} digits, got {}",
                self.n,
                digits.len()
            )));
        }
        let mut v = self.left.clone();
        for (site, &z) in self.tensors.iter().zip(digits) {
            if z >= self.d {
                return Err(Error::BadDigitString(format!("digit {z} out of range for d = {}", self.d)));
            }
            v *= &site[z];
        }
        Ok((v * &self.right)[(0, 0)])
    }

    /// Left-canonicalize with an SVD sweep, trimming singular values below
    /// `max(rel_tol, 1e-14)` of each cut's leading value, then fold the
    /// residue into the right boundary.
    pub fn canonicalize(&mut self, rel_tol: f64) -> Result<()> {
        let cutoff = rel_tol.max(NOISE_TRIM);
        let mut carry = CMatrix::from_fn(1, self.left.len(), |_, j| self.left[j]);
        for i in 0..self.n {
            let blocks: Vec<CMatrix> = self.tensors[i].iter().map(|a| &carry * a).collect();
            let (site, next) = split_stack(&blocks, cutoff, None, i + 1)?;
            self.tensors[i] = site;
            carry = next;
        }
        self.right = &carry * &self.right;
        self.left = CRowVector::from_element(1, C64::new(1.0, 0.0));
        self.gauge = Gauge::LeftCanonical;
        Ok(())
    }

    /// Compress to the per-cut Schmidt rank: left-canonicalize without real
    /// truncation, then sweep right-to-left truncating singular values below
    /// `max(rel_tol, 1e-14)` of each cut's leading value. After the left
    /// sweep the local singular values are the true Schmidt coefficients, so
    /// the relative cut is a relative Schmidt truncation. Ends
    /// right-canonical.
    pub fn compress(&mut self, rel_tol: f64) -> Result<()> {
        self.canonicalize(0.0)?;
        let cutoff = rel_tol.max(NOISE_TRIM);
        let mut carry = CMatrix::from_fn(self.right.len(), 1, |i, _| self.right[i]);
        for i in (0..self.n).rev() {
            let blocks: Vec<CMatrix> = self.tensors[i].iter().map(|a| a * &carry).collect();
            let (site, next) = split_stack_right(&blocks, cutoff);
            self.tensors[i] = site;
            carry = next;
        }
        // the left sweep pinned chi_0 = 1, so the residue is a 1 x r_0 row
        let folded = CMatrix::from_fn(1, self.left.len(), |_, j| self.left[j]) * carry;
        self.left = CRowVector::from_fn(folded.ncols(), |_, j| folded[(0, j)]);
        self.right = CVector::from_element(1, C64::new(1.0, 0.0));
        self.gauge = Gauge::RightCanonical;
        Ok(())
    }

    /// Apply a `d^k x d^k` unitary on the window starting at `first`,
    /// re-splitting the window block with SVDs. Bond growth beyond
    /// `bond_cap` (when given) is an error.
    pub fn apply_window_unitary(&mut self, u: &CMatrix, first: usize, bond_cap: Option<usize>) -> Result<()> {
        let wdim = u.nrows();
        if u.ncols() != wdim {
            return Err(Error::ShapeMismatch(format!("unitary must be square, got {}x{}", u.nrows(), u.ncols())));
        }
        let k = crate::dense::window_len(wdim, self.d).ok_or_else(|| {
            Error::ShapeMismatch(format!("unitary dimension {wdim} is not a power of d = {}", self.d))
        })?;
        self.check_window(first, k)?;
        linalg::require_unitary(u, 1e-10)?;

        // contract the window into one block per window digit string
        let mut blocks: Vec<CMatrix> = self.tensors[first - 1].clone();
        for j in 1..k {
            let site = &self.tensors[first - 1 + j];
            let mut next = Vec::with_capacity(blocks.len() * self.d);
            for b in &blocks {
                for a in site {
                    next.push(b * a);
                }
            }
            blocks = next;
        }
        let (chi_l, chi_r) = blocks[0].shape();

        // rotate
        let mut rotated = vec![CMatrix::zeros(chi_l, chi_r); wdim];
        for (w, out) in rotated.iter_mut().enumerate() {
            for (wp, b) in blocks.iter().enumerate() {
                let coef = u[(w, wp)];
                if coef.norm_sqr() > 0.0 {
                    *out += b * coef;
                }
            }
        }

        // re-split into site tensors, most significant window digit first
        let mut cur = rotated;
        for j in 0..k - 1 {
            let rest = cur.len() / self.d;
            let mut grouped = Vec::with_capacity(self.d);
            for z in 0..self.d {
                grouped.push(hcat(&cur[z * rest..(z + 1) * rest]));
            }
            let (site, carry) = split_stack(&grouped, NOISE_TRIM, bond_cap, first + j)?;
            self.tensors[first - 1 + j] = site;
            let r = carry.nrows();
            let mut next = Vec::with_capacity(rest);
            for rst in 0..rest {
                next.push(carry.view((0, rst * chi_r), (r, chi_r)).into_owned());
            }
            cur = next;
        }
        self.tensors[first - 1 + k - 1] = cur;
        self.gauge = Gauge::None;
        Ok(())
    }

    /// Project `site` onto `|0>` and renormalize; returns the pre-projection
    /// probability of the `0` outcome.
    pub fn postselect_zero(&mut self, site: usize) -> Result<f64> {
        self.check_window(site, 1)?;
        let rho = self.reduced_density_matrix(site, 1)?;
        let p = rho.matrix()[(0, 0)].re.clamp(0.0, 1.0);
        if p < 1e-14 {
            return Err(Error::ZeroProbability { site, p });
        }
        let scale = C64::new(1.0 / p.sqrt(), 0.0);
        for z in 1..self.d {
            self.tensors[site - 1][z].fill(C64::new(0.0, 0.0));
        }
        self.tensors[site - 1][0] *= scale;
        self.gauge = Gauge::None;
        Ok(p)
    }

    /// Window reduced density matrix through left/right environment
    /// contraction, normalized to unit trace.
    pub fn reduced_density_matrix(&self, first: usize, k: usize) -> Result<DensityMatrix> {
        self.check_window(first, k)?;
        let mut el = self.left.adjoint() * &self.left;
        for site in &self.tensors[..first - 1] {
            let mut next = CMatrix::zeros(site[0].ncols(), site[0].ncols());
            for a in site {
                next += a.adjoint() * &el * a;
            }
            el = next;
        }
        let mut er = &self.right * self.right.adjoint();
        for site in self.tensors[first - 1 + k..].iter().rev() {
            let mut next = CMatrix::zeros(site[0].nrows(), site[0].nrows());
            for a in site {
                next += a * &er * a.adjoint();
            }
            er = next;
        }
        let mut chains: Vec<CMatrix> = self.tensors[first - 1].clone();
        for j in 1..k {
            let site = &self.tensors[first - 1 + j];
            let mut next = Vec::with_capacity(chains.len() * self.d);
            for b in &chains {
                for a in site {
                    next.push(b * a);
                }
            }
            chains = next;
        }
        let wdim = chains.len();
        let weighted: Vec<CMatrix> = chains.iter().map(|m| &el * m * &er).collect();
        let mut rho = CMatrix::zeros(wdim, wdim);
        for w in 0..wdim {
            for w2 in 0..wdim {
                // tr(E_L M^w E_R M^{w2}') as an elementwise contraction
                rho[(w, w2)] = weighted[w].iter().zip(chains[w2].iter()).map(|(x, y)| x * y.conj()).sum();
            }
        }
        let tr: f64 = (0..wdim).map(|i| rho[(i, i)].re).sum();
        if tr < 1e-150 {
            return Err(Error::ZeroNorm);
        }
        rho.unscale_mut(tr);
        DensityMatrix::new(rho)
    }
}

/// Stack per-digit blocks vertically, SVD, and split into an isometric site
/// stack plus the carried residue `diag(s) V'`. Keeps at least one singular
/// value; enforces `bond_cap` when given.
fn split_stack(blocks: &[CMatrix], rel_cutoff: f64, bond_cap: Option<usize>, site: usize) -> Result<(Vec<CMatrix>, CMatrix)> {
    let d = blocks.len();
    let (m, ncols) = blocks[0].shape();
    let mut stacked = CMatrix::zeros(m * d, ncols);
    for (z, b) in blocks.iter().enumerate() {
        stacked.view_mut((z * m, 0), (m, ncols)).copy_from(b);
    }
    let (u, s, v_t) = linalg::svd_desc(&stacked);
    let smax = s[0];
    let keep = if smax <= 0.0 {
        1
    } else {
        s.iter().take_while(|&&x| x > smax * rel_cutoff).count().max(1)
    };
    if let Some(cap) = bond_cap {
        if keep > cap {
            return Err(Error::BondOverflow { site, bond: keep, cap });
        }
    }
    let site_stack: Vec<CMatrix> = (0..d).map(|z| u.view((z * m, 0), (m, keep)).into_owned()).collect();
    let mut carry = v_t.rows(0, keep).into_owned();
    for (row, &sv) in s[..keep].iter().enumerate() {
        carry.row_mut(row).apply(|x| *x *= C64::new(sv, 0.0));
    }
    Ok((site_stack, carry))
}

/// Mirror of [`split_stack`] for right-to-left sweeps: concatenate per-digit
/// blocks horizontally, SVD, return the co-isometric site stack (slices of
/// `V'`) plus the residue `U diag(s)` to absorb leftward.
fn split_stack_right(blocks: &[CMatrix], rel_cutoff: f64) -> (Vec<CMatrix>, CMatrix) {
    let d = blocks.len();
    let (nrows, c) = blocks[0].shape();
    let mut stacked = CMatrix::zeros(nrows, c * d);
    for (z, b) in blocks.iter().enumerate() {
        stacked.view_mut((0, z * c), (nrows, c)).copy_from(b);
    }
    let (u, s, v_t) = linalg::svd_desc(&stacked);
    let smax = s[0];
    let keep = if smax <= 0.0 {
        1
    } else {
        s.iter().take_while(|&&x| x > smax * rel_cutoff).count().max(1)
    };
    let site_stack: Vec<CMatrix> = (0..d).map(|z| v_t.view((0, z * c), (keep, c)).into_owned()).collect();
    let mut carry = u.columns(0, keep).into_owned();
    for (col, &sv) in s[..keep].iter().enumerate() {
        carry.column_mut(col).apply(|x| *x *= C64::new(sv, 0.0));
    }
    (site_stack, carry)
}

fn hcat(blocks: &[CMatrix]) -> CMatrix {
    let (m, c) = blocks[0].shape();
    let mut out = CMatrix::zeros(m, c * blocks.len());
    for (j, b) in blocks.iter().enumerate() {
        out.view_mut((0, j * c), (m, c)).copy_from(b);
    }
    out
}

/// Contract an MPS into a dense statevector (guarded by `d^n <= 2^24`);
/// output is normalized.
pub fn dense_from_mps(mps: &MpsState) -> Result<DenseState> {
    let dim = dense_dim(mps.n, mps.d)?;
    let mut rows = CMatrix::from_fn(1, mps.left.len(), |_, j| mps.left[j]);
    for site in &mps.tensors {
        let cnt = rows.nrows();
        let chi_next = site[0].ncols();
        let mut next = CMatrix::zeros(cnt * mps.d, chi_next);
        for (z, a) in site.iter().enumerate() {
            let prod = &rows * a;
            for s in 0..cnt {
                next.row_mut(s * mps.d + z).copy_from(&prod.row(s));
            }
        }
        rows = next;
    }
    debug_assert_eq!(rows.nrows(), dim);
    let amps = rows * &mps.right;
    DenseState::new(mps.n, mps.d, amps)
}

/// Factor a dense state into a left-canonical MPS by cascaded SVDs.
/// Singular values below `tol` (relative to each cut's leading value, floored
/// at machine noise) are truncated; the fidelity loss is bounded by the sum
/// of the squared discarded values.
pub fn mps_from_dense(state: &DenseState, tol: f64) -> MpsState {
    let n = state.n();
    let d = state.d();
    let cutoff = tol.max(NOISE_TRIM);
    let mut carry = CMatrix::from_fn(1, state.dim(), |_, j| state.amplitudes()[j]);
    let mut tensors = Vec::with_capacity(n);
    for i in 0..n {
        let rest = d.pow((n - i - 1) as u32);
        let chi = carry.nrows();
        let blocks: Vec<CMatrix> =
            (0..d).map(|z| carry.view((0, z * rest), (chi, rest)).into_owned()).collect();
        let (site, next) = split_stack(&blocks, cutoff, None, i + 1).expect("uncapped split");
        tensors.push(site);
        carry = next;
    }
    // carry is now 1x1: the global phase (and norm, which is 1 by invariant)
    let right = CVector::from_element(1, carry[(0, 0)]);
    let left = CRowVector::from_element(1, C64::new(1.0, 0.0));
    let mut mps = MpsState::new(d, tensors, left, right, Gauge::LeftCanonical).expect("cascade output is consistent");
    mps.normalize().expect("input state is normalized");
    mps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ghz_mps(n: usize) -> MpsState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let mut tensors = Vec::new();
        tensors.push(vec![
            CMatrix::from_row_slice(1, 2, &[C64::new(h, 0.0), zero]),
            CMatrix::from_row_slice(1, 2, &[zero, C64::new(h, 0.0)]),
        ]);
        for _ in 1..n - 1 {
            tensors.push(vec![
                CMatrix::from_row_slice(2, 2, &[one, zero, zero, zero]),
                CMatrix::from_row_slice(2, 2, &[zero, zero, zero, one]),
            ]);
        }
        tensors.push(vec![
            CMatrix::from_row_slice(2, 1, &[one, zero]),
            CMatrix::from_row_slice(2, 1, &[zero, one]),
        ]);
        MpsState::new(
            2,
            tensors,
            CRowVector::from_element(1, one),
            CVector::from_element(1, one),
            Gauge::None,
        )
        .unwrap()
    }

    fn random_state(n: usize, seed: u64) -> DenseState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = CVector::from_fn(1 << n, |_, _| complex_normal(&mut rng));
        DenseState::new(n, 2, amps).unwrap()
    }

    #[test]
    fn single_site_mps_expands_to_basis_state() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let mps = MpsState::new(
            2,
            vec![vec![CMatrix::from_element(1, 1, one), CMatrix::from_element(1, 1, zero)]],
            CRowVector::from_element(1, one),
            CVector::from_element(1, one),
            Gauge::None,
        )
        .unwrap();
        let dense = dense_from_mps(&mps).unwrap();
        assert_eq!(dense.amp(&[0]).unwrap(), one);
        assert_eq!(dense.amp(&[1]).unwrap(), zero);
    }

    #[test]
    fn ghz_mps_expands_to_analytic_amplitudes() {
        let dense = dense_from_mps(&ghz_mps(3)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((dense.amp(&[0, 0, 0]).unwrap().re - h).abs() < 1e-14);
        assert!((dense.amp(&[1, 1, 1]).unwrap().re - h).abs() < 1e-14);
        for idx in 1..7 {
            assert!(dense.amplitudes()[idx].norm() < 1e-14);
        }
    }

    #[test]
    fn inconsistent_bonds_are_rejected() {
        let one = C64::new(1.0, 0.0);
        let bad = MpsState::new(
            2,
            vec![
                vec![CMatrix::from_element(1, 2, one), CMatrix::from_element(1, 2, one)],
                vec![CMatrix::from_element(3, 1, one), CMatrix::from_element(3, 1, one)],
            ],
            CRowVector::from_element(1, one),
            CVector::from_element(1, one),
            Gauge::None,
        );
        assert!(matches!(bad, Err(Error::InconsistentBonds { site: 1, cols: 2, rows: 3 })));
    }

    #[test]
    fn product_state_factors_with_unit_bonds() {
        let dense = DenseState::basis(3, 2, &[0, 1, 0]).unwrap();
        let mps = mps_from_dense(&dense, 0.0);
        assert_eq!(mps.bond_dims(), vec![1, 1, 1, 1]);
        assert_eq!(mps.gauge(), Gauge::LeftCanonical);
        let back = dense_from_mps(&mps).unwrap();
        assert!((back.amp(&[0, 1, 0]).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_factors_at_bond_two_with_flat_schmidt_values() {
        let dense = dense_from_mps(&ghz_mps(4)).unwrap();
        let mps = mps_from_dense(&dense, 0.0);
        assert_eq!(mps.bond_dims(), vec![1, 2, 2, 2, 1]);
        for cut in 1..4 {
            let spec = dense.schmidt_spectrum(cut).unwrap();
            assert!((spec[0] - 0.5).abs() < 1e-12 && (spec[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_state_factors_at_full_rank_with_zero_tol() {
        let dense = random_state(8, 5);
        let mps = mps_from_dense(&dense, 0.0);
        assert_eq!(mps.max_bond(), 16, "middle cut of a generic 8-qubit state has rank 2^4");
        let back = dense_from_mps(&mps).unwrap();
        let fid = dense.amplitudes().dotc(back.amplitudes()).norm();
        assert!(fid >= 1.0 - 1e-10, "round-trip fidelity {fid}");
    }

    #[test]
    fn round_trip_preserves_seeded_random_mps() {
        // dense -> mps -> dense round trip at tol = 0
        let dense = random_state(6, 11);
        let mps = mps_from_dense(&dense, 0.0);
        assert!(mps.is_left_canonical(1e-10));
        assert!((mps.norm() - 1.0).abs() < 1e-10);
        let back = dense_from_mps(&mps).unwrap();
        let fid = dense.amplitudes().dotc(back.amplitudes()).norm();
        assert!(fid >= 1.0 - 1e-10);
    }

    #[test]
    fn truncation_loses_at_most_discarded_weight() {
        let dense = random_state(8, 13);
        let tol = 0.2;
        let mps = mps_from_dense(&dense, tol);
        assert!(mps.max_bond() < 16);
        let back = dense_from_mps(&mps).unwrap();
        let fid = dense.amplitudes().dotc(back.amplitudes()).norm();
        // crude bound: each of the 7 cuts discards at most 16 * (tol * smax)^2 <= 16 tol^2
        assert!(fid * fid >= 1.0 - 7.0 * 16.0 * tol * tol);
        assert!(fid < 1.0 - 1e-6, "a 0.2 relative cut on a Haar state must actually truncate");
    }

    #[test]
    fn window_unitary_matches_dense_backend() {
        let dense = random_state(6, 17);
        let mut mps = mps_from_dense(&dense, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let u = linalg::random_unitary(4, &mut rng);
        mps.apply_window_unitary(&u, 3, None).unwrap();
        let dense_rot = dense.apply_window_unitary(&u, 3).unwrap();
        let back = dense_from_mps(&mps).unwrap();
        let fid = dense_rot.amplitudes().dotc(back.amplitudes()).norm();
        assert!(fid >= 1.0 - 1e-12, "fidelity {fid}");
    }

    #[test]
    fn bond_cap_overflow_is_reported() {
        let dense = random_state(8, 19);
        let mut mps = mps_from_dense(&dense, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let u = linalg::random_unitary(4, &mut rng);
        let err = mps.apply_window_unitary(&u, 4, Some(2)).unwrap_err();
        assert!(matches!(err, Error::BondOverflow { cap: 2, .. }));
    }

    #[test]
    fn mps_rdm_matches_dense_rdm() {
        let dense = random_state(6, 31);
        let mps = mps_from_dense(&dense, 0.0);
        for first in [1usize, 2, 4, 5] {
            let k = if first == 5 { 2 } else { 2 };
            let a = dense.reduced_density_matrix(first, k).unwrap();
            let b = mps.reduced_density_matrix(first, k).unwrap();
            assert!((a.matrix() - b.matrix()).norm() < 1e-11);
        }
    }

    #[test]
    fn mps_postselect_matches_dense_postselect() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = CVector::zeros(8);
        amps[0] = C64::new(h, 0.0);
        amps[5] = C64::new(h, 0.0); // |101>
        let dense = DenseState::new(3, 2, amps).unwrap();
        let mut mps = mps_from_dense(&dense, 0.0);
        let p = mps.postselect_zero(1).unwrap();
        let (dense_post, p_dense) = dense.postselect_zero(1).unwrap();
        assert!((p - p_dense).abs() < 1e-12);
        assert!((p - 0.5).abs() < 1e-12);
        mps.canonicalize(1e-13).unwrap();
        mps.normalize().unwrap();
        let back = dense_from_mps(&mps).unwrap();
        let fid = dense_post.amplitudes().dotc(back.amplitudes()).norm();
        assert!(fid >= 1.0 - 1e-12);
    }

    #[test]
    fn canonicalize_trims_dead_directions() {
        let mut mps = ghz_mps(5);
        mps.postselect_zero(1).unwrap();
        mps.canonicalize(1e-13).unwrap();
        mps.normalize().unwrap();
        // after projecting site 1 the chain is a product state again
        assert_eq!(mps.max_bond(), 1);
        assert!(mps.is_left_canonical(1e-12));
    }
}

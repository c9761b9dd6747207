//! The disentangling sweep: window tomography, disentangler construction,
//! and the site-by-site protocol loop on either backend.
//!
//! For each window position `i = 1 ..= n-k+1` the loop estimates the window
//! density matrix of the current state, rotates its support into the
//! `|0> (x) (C^d)^{k-1}` block, projects site `i` onto `|0>`, and logs the
//! postselection probability. What remains after the sweep is the boundary
//! state on the last `k-1` sites.

use nalgebra as na;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::dense::DenseState;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::mps::MpsState;
use crate::reconstruct::ExtractedTensors;
use crate::seed::derive_seed;

/// Relative trim used for MPS housekeeping between protocol steps; removes
/// machine-noise singular values only, never protocol truncation.
const HOUSEKEEPING_TRIM: f64 = 1e-13;

/// How a window density matrix is "measured".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NoiseConfig {
    /// The exact partial trace.
    Exact,
    /// Conjugate the exact matrix by `exp(i epsilon H)` with `H` a seeded
    /// random Hermitian of unit spectral norm: the support subspace is
    /// rotated by at most `epsilon`.
    SubspacePerturbation {
        epsilon: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Reassemble the matrix from binomial frequency estimates of every
    /// nontrivial Pauli word on the window, `shots` samples each, then
    /// PSD-repair. Qubits only.
    Shots {
        shots: u64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseConfig::Exact => Ok(()),
            NoiseConfig::SubspacePerturbation { epsilon, .. } => {
                if *epsilon < 0.0 {
                    Err(Error::config("noise.epsilon", format!("must be >= 0, got {epsilon}")))
                } else {
                    Ok(())
                }
            }
            NoiseConfig::Shots { shots, .. } => {
                if *shots == 0 {
                    Err(Error::config("noise.shots", "must be >= 1"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            NoiseConfig::Exact => "exact",
            NoiseConfig::SubspacePerturbation { .. } => "subspace_perturbation",
            NoiseConfig::Shots { .. } => "shots",
        }
    }

    /// Seed, when the mode carries one.
    pub fn seed(&self) -> Option<u64> {
        match self {
            NoiseConfig::Exact => None,
            NoiseConfig::SubspacePerturbation { seed, .. } | NoiseConfig::Shots { seed, .. } => *seed,
        }
    }

    /// Fill an absent seed.
    pub fn with_seed(mut self, new_seed: u64) -> Self {
        match &mut self {
            NoiseConfig::SubspacePerturbation { seed, .. } | NoiseConfig::Shots { seed, .. } => {
                if seed.is_none() {
                    *seed = Some(new_seed);
                }
            }
            NoiseConfig::Exact => {}
        }
        self
    }
}

/// Protocol parameters: the assumed bond dimension, the window size
/// (defaulting to the smallest `k` with `d^{k-1} >= chi`), the measurement
/// model, and operational guards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Assumed bond dimension of the target state.
    pub chi: usize,
    /// Window size override; `None` selects `ceil(log_d chi) + 1`.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_noise")]
    pub noise: NoiseConfig,
    /// Abort when a single step loses more than this mass (default 0.5).
    #[serde(default)]
    pub truncation_abort_threshold: Option<f64>,
    /// Cap on intermediate MPS bonds (MPS backend only).
    #[serde(default)]
    pub bond_cap: Option<usize>,
}

fn default_noise() -> NoiseConfig {
    NoiseConfig::Exact
}

impl ProtocolConfig {
    pub fn new(chi: usize) -> Self {
        Self { chi, k: None, noise: NoiseConfig::Exact, truncation_abort_threshold: None, bond_cap: None }
    }

    pub fn with_noise(mut self, noise: NoiseConfig) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    /// Smallest window satisfying `d^{k-1} >= chi`.
    pub fn minimal_window(d: usize, chi: usize) -> usize {
        let mut m = 0usize;
        let mut acc = 1usize;
        while acc < chi {
            acc = acc.saturating_mul(d);
            m += 1;
        }
        m + 1
    }

    pub fn abort_threshold(&self) -> f64 {
        self.truncation_abort_threshold.unwrap_or(0.5)
    }

    /// Validate against a chain and return the resolved window size.
    pub fn resolve(&self, n: usize, d: usize) -> Result<usize> {
        if self.chi == 0 {
            return Err(Error::config("protocol.chi", "bond dimension must be >= 1"));
        }
        self.noise.validate()?;
        let threshold = self.abort_threshold();
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::config(
                "protocol.truncation_abort_threshold",
                format!("must be in [0, 1], got {threshold}"),
            ));
        }
        let k = self.k.unwrap_or_else(|| Self::minimal_window(d, self.chi));
        if k == 0 || k > n {
            return Err(Error::config("protocol.k", format!("window k = {k} does not fit n = {n}")));
        }
        if (d as u128).pow(k as u32 - 1) < self.chi as u128 {
            return Err(Error::config(
                "protocol.k",
                format!("d^(k-1) = {} < chi = {}", (d as u128).pow(k as u32 - 1), self.chi),
            ));
        }
        Ok(k)
    }
}

/// The unitary of one protocol step, with the spectrum of the window density
/// matrix it was built from.
#[derive(Clone, Debug)]
pub struct Disentangler {
    pub step: usize,
    /// `d^k x d^k`; row `a d^{k-1} + j` is the bra of the eigenvector with
    /// the `(a d^{k-1} + j)`-th largest eigenvalue, so the support lands in
    /// the `a = 0` block.
    pub matrix: CMatrix,
    /// Eigenvalues of the window density matrix, descending.
    pub spectrum: Vec<f64>,
}

impl Disentangler {
    /// Eigenvalue mass beyond the top `rank` states: what truncation must
    /// discard even with a perfect unitary.
    pub fn residual_mass(&self, rank: usize) -> f64 {
        self.spectrum.iter().skip(rank).sum::<f64>().max(0.0)
    }
}

/// Per-step record of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Postselection probability of the `|0>` outcome at this step.
    pub p: f64,
    /// `1 - p`, the step's truncation error.
    pub loss: f64,
    /// Eigenvalue mass of the estimated window matrix beyond rank `d^{k-1}`.
    pub residual_mass: f64,
}

/// Complete evidence of the sweep's truncations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationLog {
    pub expected_steps: usize,
    pub noise: NoiseConfig,
    pub steps: Vec<StepRecord>,
}

impl TruncationLog {
    pub fn is_complete(&self) -> bool {
        self.steps.len() == self.expected_steps
    }

    /// `1 - prod_i p_i`: the probability that at least one postselection
    /// fails, an upper bound on the squared weight removed by the sweep.
    pub fn cumulative_bound(&self) -> f64 {
        1.0 - self.steps.iter().map(|s| s.p).product::<f64>()
    }

    pub fn max_loss(&self) -> f64 {
        self.steps.iter().map(|s| s.loss).fold(0.0, f64::max)
    }

    pub fn min_p(&self) -> f64 {
        self.steps.iter().map(|s| s.p).fold(1.0, f64::min)
    }
}

/// Everything the sweep produces: the disentanglers, the boundary state, and
/// the truncation log. `tensors` is filled by the reconstruction pass.
#[derive(Clone, Debug)]
pub struct TomographyResult {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub chi: usize,
    pub noise: NoiseConfig,
    pub disentanglers: Vec<Disentangler>,
    /// Boundary state on the last `k-1` sites (length `d^{k-1}`).
    pub eta: CVector,
    pub log: TruncationLog,
    pub tensors: Option<ExtractedTensors>,
}

impl TomographyResult {
    pub fn windows(&self) -> usize {
        self.n - self.k + 1
    }

    /// Informationally complete measurement settings per window
    /// (`d^{2k} - 1`; for qubits, the nontrivial Pauli words).
    pub fn settings_per_window(&self) -> u64 {
        (self.d as u64).pow(2 * self.k as u32) - 1
    }

    pub fn total_settings(&self) -> u64 {
        self.windows() as u64 * self.settings_per_window()
    }

    /// Run the extraction pass and cache the tensors.
    pub fn extract(&mut self) -> Result<&ExtractedTensors> {
        if self.tensors.is_none() {
            self.tensors = Some(crate::reconstruct::extract_tensors(self)?);
        }
        Ok(self.tensors.as_ref().expect("just filled"))
    }
}

/// Estimate the window density matrix of the current state under the
/// configured measurement model.
pub fn estimate_rdm(state: &DenseState, first: usize, k: usize, noise: &NoiseConfig) -> Result<DensityMatrix> {
    let rho = state.reduced_density_matrix(first, k)?;
    apply_rdm_noise(rho, noise, first, state.d(), k)
}

/// Apply the measurement model to an exact window density matrix. The seed
/// is derived per window position, so every step sees fresh, reproducible
/// noise.
pub fn apply_rdm_noise(rho: DensityMatrix, noise: &NoiseConfig, first: usize, d: usize, k: usize) -> Result<DensityMatrix> {
    match noise {
        NoiseConfig::Exact => Ok(rho),
        NoiseConfig::SubspacePerturbation { epsilon, seed } => {
            if *epsilon == 0.0 {
                return Ok(rho);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed.unwrap_or(0), first as u64));
            let h = linalg::random_hermitian_unit(rho.dim(), &mut rng);
            let w = linalg::expm_i_hermitian(&h, *epsilon);
            DensityMatrix::new(&w * rho.matrix() * w.adjoint())
        }
        NoiseConfig::Shots { shots, seed } => {
            if d != 2 {
                return Err(Error::ShotsUnsupported { d });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed.unwrap_or(0), first as u64));
            sample_pauli_estimate(&rho, k, *shots, &mut rng)
        }
    }
}

const PAULI: [[C64; 4]; 4] = {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let ni = C64::new(0.0, -1.0);
    let nl = C64::new(-1.0, 0.0);
    [
        [l, o, o, l],   // I
        [o, l, l, o],   // X
        [o, ni, i, o],  // Y
        [l, o, o, nl],  // Z
    ]
};

fn pauli_word(word: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::identity(1, 1);
    for site in 0..k {
        // window site 1 is the most significant base-4 letter
        let letter = (word / 4usize.pow((k - 1 - site) as u32)) % 4;
        let p = CMatrix::from_row_slice(2, 2, &PAULI[letter]);
        m = m.kronecker(&p);
    }
    m
}

/// Frequency-sampled Pauli reconstruction of a `k`-qubit window state:
/// for each nontrivial word `P`, draw `Binomial(shots, (1 + tr(rho P))/2)`
/// and plug the frequency estimate into `2^{-k} sum_P <P> P`.
fn sample_pauli_estimate(rho: &DensityMatrix, k: usize, shots: u64, rng: &mut ChaCha8Rng) -> Result<DensityMatrix> {
    let dim = rho.dim();
    let mut estimate = CMatrix::identity(dim, dim);
    for word in 1..4usize.pow(k as u32) {
        let p = pauli_word(word, k);
        let expectation: f64 = rho
            .matrix()
            .iter()
            .zip(p.transpose().iter())
            .map(|(a, b)| (a * b).re)
            .sum::<f64>()
            .clamp(-1.0, 1.0);
        let plus = Binomial::new(shots, (1.0 + expectation) / 2.0)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        let freq = 2.0 * (plus as f64) / (shots as f64) - 1.0;
        estimate += p * C64::new(freq, 0.0);
    }
    estimate.unscale_mut(dim as f64);
    DensityMatrix::repair(estimate)
}

/// Build the step unitary from a window density matrix: rows are the bras of
/// the eigenvectors sorted by descending eigenvalue, so `U rho U'` is diagonal
/// with the support in the `a = 0` block. The zero-eigenvalue eigenvectors
/// complete the orthonormal basis.
pub fn build_disentangler(rho: &DensityMatrix, d: usize, k: usize) -> Result<Disentangler> {
    let dim = (d as u128).pow(k as u32);
    if rho.dim() as u128 != dim {
        return Err(Error::NotADensityMatrix(format!(
            "dimension {} does not match d^k = {dim}",
            rho.dim()
        )));
    }
    let (spectrum, basis) = rho.eigh();
    let matrix = basis.adjoint();
    linalg::require_unitary(&matrix, 1e-10)?;
    Ok(Disentangler { step: 0, matrix, spectrum })
}

fn check_normalized(norm: f64) -> Result<()> {
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::ShapeMismatch(format!("input state has norm {norm}, expected 1")));
    }
    Ok(())
}

/// Run the sweep on the dense backend.
pub fn run_protocol(state: &DenseState, config: &ProtocolConfig) -> Result<TomographyResult> {
    run_protocol_with(state, config, build_disentangler)
}

/// Sweep with a custom disentangler construction; the default is
/// [`build_disentangler`]. Lets tests inject gauge twists on degenerate
/// eigenspaces or otherwise intercept step unitaries.
pub fn run_protocol_with<F>(state: &DenseState, config: &ProtocolConfig, mut builder: F) -> Result<TomographyResult>
where
    F: FnMut(&DensityMatrix, usize, usize) -> Result<Disentangler>,
{
    let n = state.n();
    let d = state.d();
    let k = config.resolve(n, d)?;
    check_normalized(state.norm())?;
    let threshold = config.abort_threshold();
    let steps = n - k + 1;
    let keep_rank = d.pow(k as u32 - 1);

    let mut psi = state.clone();
    let mut disentanglers = Vec::with_capacity(steps);
    let mut log = TruncationLog { expected_steps: steps, noise: config.noise.clone(), steps: Vec::with_capacity(steps) };
    for step in 1..=steps {
        let rho = estimate_rdm(&psi, step, k, &config.noise)?;
        let mut u = builder(&rho, d, k)?;
        u.step = step;
        psi = psi.apply_window_unitary(&u.matrix, step)?;
        let (next, p) = psi.postselect_zero(step)?;
        psi = next;
        let loss = 1.0 - p;
        log.steps.push(StepRecord { step, p, loss, residual_mass: u.residual_mass(keep_rank) });
        if loss > threshold {
            return Err(Error::TruncationAbort { step, loss, threshold });
        }
        disentanglers.push(u);
    }

    // all earlier sites are |0> after postselection, so the boundary state is
    // the leading d^{k-1} amplitudes
    let eta_dim = keep_rank;
    let mut eta = CVector::from_fn(eta_dim, |w, _| psi.amplitudes()[w]);
    let eta_norm = eta.norm();
    if eta_norm < 1e-150 {
        return Err(Error::ZeroNorm);
    }
    eta.unscale_mut(eta_norm);

    Ok(TomographyResult { n, d, k, chi: config.chi, noise: config.noise.clone(), disentanglers, eta, log, tensors: None })
}

/// Run the sweep on the MPS backend: same contract as [`run_protocol`], with
/// window operations done by local contraction and SVD re-splitting. Scales
/// to chain lengths far beyond the dense guard.
pub fn run_protocol_mps(state: &MpsState, config: &ProtocolConfig) -> Result<TomographyResult> {
    let n = state.n();
    let d = state.d();
    let k = config.resolve(n, d)?;
    let threshold = config.abort_threshold();
    let steps = n - k + 1;
    let keep_rank = d.pow(k as u32 - 1);

    let mut mps = state.clone();
    check_normalized(mps.norm())?;
    mps.canonicalize(HOUSEKEEPING_TRIM)?;
    mps.normalize()?;

    let mut disentanglers = Vec::with_capacity(steps);
    let mut log = TruncationLog { expected_steps: steps, noise: config.noise.clone(), steps: Vec::with_capacity(steps) };
    for step in 1..=steps {
        let rho_exact = mps.reduced_density_matrix(step, k)?;
        let rho = apply_rdm_noise(rho_exact, &config.noise, step, d, k)?;
        let mut u = build_disentangler(&rho, d, k)?;
        u.step = step;
        mps.apply_window_unitary(&u.matrix, step, config.bond_cap)?;
        let p = mps.postselect_zero(step)?;
        mps.compress(HOUSEKEEPING_TRIM)?;
        mps.normalize()?;
        let loss = 1.0 - p;
        log.steps.push(StepRecord { step, p, loss, residual_mass: u.residual_mass(keep_rank) });
        if loss > threshold {
            return Err(Error::TruncationAbort { step, loss, threshold });
        }
        disentanglers.push(u);
    }

    let eta_dim = keep_rank;
    let mut digits = vec![0usize; n];
    let mut eta = CVector::zeros(eta_dim);
    for w in 0..eta_dim {
        let mut rem = w;
        for j in (0..k - 1).rev() {
            digits[n - k + 1 + j] = rem % d;
            rem /= d;
        }
        eta[w] = mps.amplitude(&digits)?;
    }
    let eta_norm = eta.norm();
    if eta_norm < 1e-150 {
        return Err(Error::ZeroNorm);
    }
    eta.unscale_mut(eta_norm);

    Ok(TomographyResult { n, d, k, chi: config.chi, noise: config.noise.clone(), disentanglers, eta, log, tensors: None })
}

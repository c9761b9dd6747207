//! Certification: turn a truncation log into a quantitative closeness
//! certificate, and measure how reconstruction error actually grows with the
//! subspace-estimation error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::mps::dense_from_mps;
use crate::overlap::fidelity;
use crate::reconstruct::to_mps;
use crate::seed::derive_seed;
use crate::states::StateSpec;
use crate::tomography::{run_protocol, NoiseConfig, ProtocolConfig, TruncationLog};

/// Verdict on the bond-dimension hypothesis. The cumulative bound
/// `1 - prod_i p_i` is the probability that at least one postselection
/// fails, hence an upper bound on the squared weight the sweep removed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub step_losses: Vec<f64>,
    pub cumulative_bound: f64,
    pub threshold: f64,
    pub accept: bool,
    pub noise: NoiseConfig,
}

/// Judge a complete truncation log against a threshold.
pub fn certify(log: &TruncationLog, threshold: f64) -> Result<Certificate> {
    if !log.is_complete() {
        return Err(Error::IncompleteLog { expected: log.expected_steps, got: log.steps.len() });
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::config("threshold", format!("must be in [0, 1], got {threshold}")));
    }
    let cumulative_bound = log.cumulative_bound().clamp(0.0, 1.0);
    Ok(Certificate {
        step_losses: log.steps.iter().map(|s| s.loss).collect(),
        cumulative_bound,
        threshold,
        accept: cumulative_bound <= threshold,
        noise: log.noise.clone(),
    })
}

/// One trial of the error-bound measurement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialBound {
    pub trial: usize,
    pub state_seed: u64,
    pub noise_seed: u64,
    /// Phase-aligned distance `min_theta || psi - e^{i theta} psi~ ||`.
    pub distance: f64,
    /// `distance / (n^2 epsilon)`; 0 when `epsilon` is 0.
    pub ratio: f64,
    /// Operator-norm deviation, per step, between the exact and perturbed
    /// runs' pulled-back `a = 0` block projectors `U' (|0><0| (x) I) U`.
    pub step_deviation: Vec<f64>,
}

/// Measured behaviour of the reconstruction error in the perturbative regime.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorBoundReport {
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    /// Norm used for the step deviations (subspace projector difference).
    pub deviation_norm: String,
    pub per_trial: Vec<TrialBound>,
    pub max_ratio: f64,
    pub max_distance: f64,
    pub median_distance: f64,
    /// Mean step deviation across trials, indexed by step.
    pub mean_step_deviation: Vec<f64>,
}

/// Run the sweep on seeded random bond-2 qubit MPS under
/// `subspace_perturbation(epsilon)`, measure the actual reconstruction
/// distance per trial, and report each `distance / (n^2 epsilon)` together
/// with the per-step growth of the disentangler deviation.
///
/// Trials are paired across calls: the same `seed` draws the same states and
/// the same perturbation directions, so sweeps over `epsilon` are directly
/// comparable.
pub fn check_error_bound(n: usize, epsilon: f64, trials: usize, seed: u64) -> Result<ErrorBoundReport> {
    if epsilon < 0.0 || epsilon > 1e-2 {
        return Err(Error::config("epsilon", format!("linearized regime needs 0 <= epsilon <= 1e-2, got {epsilon}")));
    }
    if trials == 0 {
        return Err(Error::config("trials", "must be >= 1"));
    }
    let chi = 2usize;
    let d = 2usize;

    let mut per_trial: Vec<TrialBound> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialBound> {
            let state_seed = derive_seed(seed, 2 * trial as u64);
            let noise_seed = derive_seed(seed, 2 * trial as u64 + 1);
            let spec = StateSpec::RandomMps { n, d, chi, seed: Some(state_seed) };
            let state = spec.build()?;

            let exact_cfg = ProtocolConfig::new(chi);
            let exact = run_protocol(&state, &exact_cfg)?;

            let noise = NoiseConfig::SubspacePerturbation { epsilon, seed: Some(noise_seed) };
            let mut noisy_cfg = ProtocolConfig::new(chi).with_noise(noise);
            // measure, never abort: the point is to observe the error
            noisy_cfg.truncation_abort_threshold = Some(1.0);
            let mut noisy = run_protocol(&state, &noisy_cfg)?;

            let recon = dense_from_mps(&to_mps(noisy.extract()?)?)?;
            let fid = fidelity(&state, &recon)?;
            let distance = (2.0 - 2.0 * fid).max(0.0).sqrt();
            let ratio = if epsilon == 0.0 { 0.0 } else { distance / ((n * n) as f64 * epsilon) };

            let block = d.pow((exact.k - 1) as u32);
            let step_deviation = exact
                .disentanglers
                .iter()
                .zip(&noisy.disentanglers)
                .map(|(a, b)| {
                    let pa = pulled_back_projector(&a.matrix, block);
                    let pb = pulled_back_projector(&b.matrix, block);
                    linalg::op_norm(&(pa - pb))
                })
                .collect();

            Ok(TrialBound { trial, state_seed, noise_seed, distance, ratio, step_deviation })
        })
        .collect::<Result<Vec<_>>>()?;
    per_trial.sort_by_key(|t| t.trial);

    let max_ratio = per_trial.iter().map(|t| t.ratio).fold(0.0, f64::max);
    let max_distance = per_trial.iter().map(|t| t.distance).fold(0.0, f64::max);
    let mut distances: Vec<f64> = per_trial.iter().map(|t| t.distance).collect();
    distances.sort_by(f64::total_cmp);
    let median_distance = distances[distances.len() / 2];
    let steps = per_trial[0].step_deviation.len();
    let mean_step_deviation: Vec<f64> = (0..steps)
        .map(|s| per_trial.iter().map(|t| t.step_deviation[s]).sum::<f64>() / trials as f64)
        .collect();

    Ok(ErrorBoundReport {
        n,
        epsilon,
        trials,
        seed,
        deviation_norm: "operator".into(),
        per_trial,
        max_ratio,
        max_distance,
        median_distance,
        mean_step_deviation,
    })
}

/// `U' (|0><0| (x) I_{d^{k-1}}) U`: the projector onto the subspace the
/// disentangler sends to the `a = 0` block. Gauge rotations inside the block
/// drop out, so differences measure genuine subspace error.
fn pulled_back_projector(u: &CMatrix, block: usize) -> CMatrix {
    let rows = u.rows(0, block);
    rows.adjoint() * rows
}

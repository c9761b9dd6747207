//! Acceptance suite: the end-to-end claims the library must deliver, one
//! pass/fail line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.
//! Everything runs inside a single test function so the timing-sensitive
//! criteria are not perturbed by parallel sibling tests.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::time::Instant;

use mpstomo::seed::derive_seed;
use mpstomo::{
    amplitude, certify, check_error_bound, fidelity, inner_product, run_protocol,
    run_protocol_mps, to_mps, NoiseConfig, ProtocolConfig, StateSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MASTER_SEED: u64 = 0x5EED;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn record(results: &mut Vec<Outcome>, name: &'static str, pass: bool, detail: String) {
    println!("criterion {:<28} {}  ({})", name, if pass { "PASS" } else { "FAIL" }, detail);
    results.push(Outcome { name, pass, detail });
}

/// 1. Exact reconstruction on 50 seeded random MPS (n=8, chi in {2,3,4}):
///    fidelity >= 1 - 1e-9, every p_i >= 1 - 1e-10, under one minute total.
///    5. Bond bound across the same runs: every bond <= d^{k-1} <= d*chi.
fn exact_reconstruction_and_bonds(results: &mut Vec<Outcome>) {
    let start = Instant::now();
    let mut min_fidelity = 1.0f64;
    let mut min_p = 1.0f64;
    let mut bonds_ok = true;
    for trial in 0..50u64 {
        let chi = [2usize, 3, 4][(trial % 3) as usize];
        let spec = StateSpec::RandomMps { n: 8, d: 2, chi, seed: Some(derive_seed(MASTER_SEED, trial)) };
        let state = spec.build().unwrap();
        let mut result = run_protocol(&state, &ProtocolConfig::new(chi)).unwrap();
        min_p = min_p.min(result.log.min_p());
        let recon = to_mps(result.extract().unwrap()).unwrap();
        let bond_limit = 2usize.pow(result.k as u32 - 1);
        bonds_ok &= recon.max_bond() <= bond_limit && bond_limit <= 2 * chi;
        min_fidelity = min_fidelity.min(fidelity(&state, &recon).unwrap());
    }
    let elapsed = start.elapsed().as_secs_f64();
    record(
        results,
        "1 exact-reconstruction",
        min_fidelity >= 1.0 - 1e-9 && min_p >= 1.0 - 1e-10 && elapsed < 60.0,
        format!(
            "max infidelity {:.3e}, max step loss {:.3e}, {elapsed:.1} s for 50 runs",
            1.0 - min_fidelity,
            1.0 - min_p
        ),
    );
    record(results, "5 bond-bound", bonds_ok, "all reconstructed bonds <= d^(k-1) <= d*chi".into());
}

/// 2. Oracle amplitude equivalence: every amplitude of the product formula
///    matches the statevector after optimal global-phase alignment, <= 1e-8.
fn oracle_amplitude_equivalence(results: &mut Vec<Outcome>) {
    let mut worst = 0.0f64;
    for (i, n) in (2..=8usize).enumerate() {
        let chi = [2usize, 3, 4][i % 3].min(1 << (n / 2));
        let spec = StateSpec::RandomMps { n, d: 2, chi, seed: Some(derive_seed(MASTER_SEED, 100 + n as u64)) };
        let state = spec.build().unwrap();
        let mut result = run_protocol(&state, &ProtocolConfig::new(chi)).unwrap();
        let tensors = result.extract().unwrap();
        let recon = to_mps(tensors).unwrap();
        let overlap = inner_product(&state, &recon).unwrap();
        let phase = overlap / overlap.norm();
        let mut digits = vec![0usize; n];
        for idx in 0..(1usize << n) {
            for (j, digit) in digits.iter_mut().enumerate() {
                *digit = (idx >> (n - 1 - j)) & 1;
            }
            let truth = state.amp(&digits).unwrap();
            let recon_amp = amplitude(tensors, &digits).unwrap() * phase;
            worst = worst.max((truth - recon_amp).norm());
        }
    }
    record(results, "2 oracle-amplitudes", worst <= 1e-8, format!("max |c_z - e^(i theta) c~_z| = {worst:.3e}"));
}

/// 3. GHZ phase recovery within 1e-8 of the planted value over 20 trials,
///    plus local-window insensitivity to the phase at 1e-12.
fn ghz_phase_recovery(results: &mut Vec<Outcome>) {
    let n = 6usize;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, 300));
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let phi: f64 = rng.random_range(0.0..TAU);
        let spec = StateSpec::Ghz { n, d: 2, a: FRAC_1_SQRT_2, b: FRAC_1_SQRT_2, phi };
        let mut result = run_protocol(&spec.build().unwrap(), &ProtocolConfig::new(2)).unwrap();
        let tensors = result.extract().unwrap();
        let ones = amplitude(tensors, &vec![1usize; n]).unwrap();
        let zeros = amplitude(tensors, &vec![0usize; n]).unwrap();
        let recovered = (ones / zeros).arg().rem_euclid(TAU);
        let mut err = (recovered - phi).abs() % TAU;
        err = err.min(TAU - err);
        worst = worst.max(err);
    }
    // insensitivity: every interior 2-site window matrix agrees elementwise
    // between phi = 0 and phi = pi
    let zero = StateSpec::Ghz { n, d: 2, a: FRAC_1_SQRT_2, b: FRAC_1_SQRT_2, phi: 0.0 }.build().unwrap();
    let pi = StateSpec::Ghz { n, d: 2, a: FRAC_1_SQRT_2, b: FRAC_1_SQRT_2, phi: std::f64::consts::PI }
        .build()
        .unwrap();
    let mut rdm_dev = 0.0f64;
    for first in 2..n - 1 {
        let a = zero.reduced_density_matrix(first, 2).unwrap();
        let b = pi.reduced_density_matrix(first, 2).unwrap();
        rdm_dev = rdm_dev.max((a.matrix() - b.matrix()).iter().map(|x| x.norm()).fold(0.0, f64::max));
    }
    record(
        results,
        "3 ghz-phase-recovery",
        worst <= 1e-8 && rdm_dev <= 1e-12,
        format!("max phase error {worst:.3e}, interior-window deviation {rdm_dev:.3e}"),
    );
}

/// 4. W-state recovery at n in {4, 6} with random phase vectors.
fn w_state_recovery(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, 400));
    let mut min_fidelity = 1.0f64;
    for n in [4usize, 6] {
        for _ in 0..10 {
            let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
            let spec = StateSpec::W { n, d: 2, phases: Some(phases) };
            let state = spec.build().unwrap();
            let mut result = run_protocol(&state, &ProtocolConfig::new(2)).unwrap();
            let recon = to_mps(result.extract().unwrap()).unwrap();
            min_fidelity = min_fidelity.min(fidelity(&state, &recon).unwrap());
        }
    }
    record(results, "4 w-state-recovery", min_fidelity >= 1.0 - 1e-9, format!("min fidelity gap {:.3e}", 1.0 - min_fidelity));
}

/// 6. Certification: exact chi-MPS accepted at 1e-6 on all 50 seeds;
///    Haar-random n=10 rejected at 0.1 under a chi=2 hypothesis on >= 95%.
fn certification_soundness(results: &mut Vec<Outcome>) {
    let mut accepts = 0;
    for trial in 0..50u64 {
        let chi = [2usize, 3, 4][(trial % 3) as usize];
        let spec = StateSpec::RandomMps { n: 8, d: 2, chi, seed: Some(derive_seed(MASTER_SEED, 600 + trial)) };
        let result = run_protocol(&spec.build().unwrap(), &ProtocolConfig::new(chi)).unwrap();
        if certify(&result.log, 1e-6).unwrap().accept {
            accepts += 1;
        }
    }
    let mut rejects = 0;
    for trial in 0..50u64 {
        let spec = StateSpec::HaarRandom { n: 10, d: 2, seed: Some(derive_seed(MASTER_SEED, 700 + trial)) };
        let mut config = ProtocolConfig::new(2);
        config.truncation_abort_threshold = Some(1.0);
        let result = run_protocol(&spec.build().unwrap(), &config).unwrap();
        if !certify(&result.log, 0.1).unwrap().accept {
            rejects += 1;
        }
    }
    record(
        results,
        "6 certification",
        accepts == 50 && rejects >= 48,
        format!("exact accepted {accepts}/50, Haar rejected {rejects}/50"),
    );
}

/// 7. Error-bound regime: measured ||psi - psi~|| <= n^2 epsilon in every
///    trial at epsilon in {1e-4, 1e-3}, and the median distance does not
///    decrease when epsilon grows (paired seeds).
fn error_bound_regime(results: &mut Vec<Outcome>) {
    let n = 8usize;
    let lo = check_error_bound(n, 1e-4, 20, derive_seed(MASTER_SEED, 800)).unwrap();
    let hi = check_error_bound(n, 1e-3, 20, derive_seed(MASTER_SEED, 800)).unwrap();
    let within = lo.max_ratio <= 1.0 && hi.max_ratio <= 1.0;
    let monotone = hi.median_distance >= lo.median_distance;
    record(
        results,
        "7 error-bound-regime",
        within && monotone,
        format!(
            "max ratio {:.3e} @1e-4, {:.3e} @1e-3, medians {:.3e} -> {:.3e}",
            lo.max_ratio, hi.max_ratio, lo.median_distance, hi.median_distance
        ),
    );
}

/// 8. Scaling: n=64 chi=4 MPS run under 60 s; window count exact; doubling n
///    raises wall time by at most 8x.
fn scaling(results: &mut Vec<Outcome>) {
    let config = ProtocolConfig::new(4);
    let time_for = |n: usize, reps: usize| -> (f64, usize) {
        let spec = StateSpec::RandomMps { n, d: 2, chi: 4, seed: Some(derive_seed(MASTER_SEED, 900 + n as u64)) };
        let mps = spec.build_mps().unwrap();
        let mut windows = 0;
        let start = Instant::now();
        for _ in 0..reps {
            let result = run_protocol_mps(&mps, &config).unwrap();
            windows = result.windows();
        }
        (start.elapsed().as_secs_f64() / reps as f64, windows)
    };
    let (t64_once, w64) = time_for(64, 1);
    let reps = ((0.5 / t64_once).ceil() as usize).clamp(3, 50);
    let (t32, w32) = time_for(32, reps);
    let (t64, _) = time_for(64, reps);
    let ratio = t64 / t32;
    record(
        results,
        "8 scaling",
        t64_once < 60.0 && w64 == 62 && w32 == 30 && ratio <= 8.0,
        format!("n=64 run {t64_once:.2} s, windows {w64}, doubling ratio {ratio:.2}"),
    );
}

/// 9. Shot-noise sanity: GHZ n=6 at 1e6 shots per setting reconstructs with
///    fidelity >= 0.99 for each of 10 seeds.
fn shot_noise_sanity(results: &mut Vec<Outcome>) {
    let spec = StateSpec::Ghz { n: 6, d: 2, a: FRAC_1_SQRT_2, b: FRAC_1_SQRT_2, phi: 1.1 };
    let state = spec.build().unwrap();
    let mut min_fidelity = 1.0f64;
    for trial in 0..10u64 {
        let noise = NoiseConfig::Shots { shots: 1_000_000, seed: Some(derive_seed(MASTER_SEED, 1000 + trial)) };
        let mut config = ProtocolConfig::new(2).with_noise(noise);
        config.truncation_abort_threshold = Some(1.0);
        let mut result = run_protocol(&state, &config).unwrap();
        let recon = to_mps(result.extract().unwrap()).unwrap();
        min_fidelity = min_fidelity.min(fidelity(&state, &recon).unwrap());
    }
    record(results, "9 shot-noise", min_fidelity >= 0.99, format!("min fidelity {min_fidelity:.6}"));
}

#[test]
fn acceptance_criteria() {
    let mut results = Vec::new();
    exact_reconstruction_and_bonds(&mut results);
    oracle_amplitude_equivalence(&mut results);
    ghz_phase_recovery(&mut results);
    w_state_recovery(&mut results);
    certification_soundness(&mut results);
    error_bound_regime(&mut results);
    scaling(&mut results);
    shot_noise_sanity(&mut results);

    let failed: Vec<String> = results
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("{}: {}", o.name, o.detail))
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}

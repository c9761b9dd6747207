//! The four campaign commands: run, certify, bench, demo.

use std::f64::consts::TAU;
use std::time::Instant;

use mpstomo::seed::derive_seed;
use mpstomo::{
    amplitude, certify, fidelity, run_protocol, run_protocol_mps, to_mps, Error, NoiseConfig,
    ProtocolConfig, StateSpec, TomographyResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Backend, ExperimentConfig};
use crate::manifest::{eta_pairs, tensors_json, CertificateRecord, BenchRecord, Manifest, TrialRecord};

struct TrialSetup {
    state: StateSpec,
    protocol: ProtocolConfig,
    trial_seed: u64,
}

/// Per-trial seed resolution: the campaign master seed fans out to one seed
/// per trial index, which fans out again for the state and the noise. Seeds
/// pinned in the config are left untouched.
fn trial_setup(config: &ExperimentConfig, index: usize) -> TrialSetup {
    let trial_seed = derive_seed(config.seed, index as u64);
    let state = config.state.clone().with_seed(derive_seed(trial_seed, 1));
    let mut protocol = config.protocol.clone();
    protocol.noise = protocol.noise.with_seed(derive_seed(trial_seed, 2));
    TrialSetup { state, protocol, trial_seed }
}

fn run_one(setup: &TrialSetup, backend: Backend) -> Result<(TomographyResult, f64, Option<usize>, f64), Error> {
    // returns (result, fidelity, reconstruction bond, wall ms); fidelity is
    // NaN-free because reconstruction always runs here
    let start = Instant::now();
    match backend {
        Backend::Dense | Backend::Auto => {
            let state = setup.state.build()?;
            let mut result = run_protocol(&state, &setup.protocol)?;
            let recon = to_mps(result.extract()?)?;
            let fid = fidelity(&state, &recon)?;
            let bond = recon.max_bond();
            Ok((result, fid, Some(bond), ms(start)))
        }
        Backend::Mps => {
            let mps = setup.state.build_mps()?;
            let mut result = run_protocol_mps(&mps, &setup.protocol)?;
            let recon = to_mps(result.extract()?)?;
            let fid = fidelity(&mps, &recon)?;
            let bond = recon.max_bond();
            Ok((result, fid, Some(bond), ms(start)))
        }
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn base_record(index: usize, backend: Backend, setup: &TrialSetup, result: &TomographyResult, wall_ms: f64) -> TrialRecord {
    TrialRecord {
        index,
        backend: match backend {
            Backend::Mps => "mps".into(),
            _ => "dense".into(),
        },
        state_seed: setup.state.seed(),
        noise_seed: setup.protocol.noise.seed(),
        n: result.n,
        d: result.d,
        k: result.k,
        chi: result.chi,
        windows: result.windows(),
        settings_per_window: result.settings_per_window(),
        total_settings: result.total_settings(),
        p_min: result.log.min_p(),
        max_loss: result.log.max_loss(),
        cumulative_bound: result.log.cumulative_bound(),
        fidelity: None,
        reconstruction_max_bond: None,
        certificate: None,
        planted_phases: None,
        recovered_phases: None,
        phase_error: None,
        eta: None,
        wall_ms,
    }
}

/// Full pipeline per trial: sweep, tensor extraction, reconstruction
/// fidelity against the input, certificate.
pub fn cmd_run(config: &ExperimentConfig) -> Result<Manifest, Error> {
    let backend = config.resolve_backend()?;
    let outcomes: Vec<(TrialRecord, Option<serde_json::Value>)> = (0..config.trials)
        .into_par_iter()
        .map(|index| -> Result<_, Error> {
            let setup = trial_setup(config, index);
            let (result, fid, bond, wall_ms) = run_one(&setup, backend)?;
            let cert = certify(&result.log, config.threshold)?;
            let mut record = base_record(index, backend, &setup, &result, wall_ms);
            record.fidelity = Some(fid);
            record.reconstruction_max_bond = bond;
            record.certificate = Some(CertificateRecord::from(&cert));
            let tensors = if config.emit_tensors {
                result.tensors.as_ref().map(tensors_json)
            } else {
                None
            };
            Ok((record, tensors))
        })
        .collect::<Result<_, _>>()?;

    let mut manifest = Manifest::new("run", config.clone());
    for (record, tensors) in outcomes {
        if let Some(t) = tensors {
            manifest.tensors.push((record.index, t));
        }
        manifest.trials.push(record);
    }
    manifest.trials.sort_by_key(|t| t.index);
    manifest.tensors.sort_by_key(|(i, _)| *i);
    manifest.finish();
    Ok(manifest)
}

/// Certification only: sweep and verdict, no reconstruction. The abort
/// threshold defaults to 1 here so the log is always complete and the
/// verdict comes from the certificate.
pub fn cmd_certify(config: &ExperimentConfig) -> Result<Manifest, Error> {
    let mut config = config.clone();
    if config.protocol.truncation_abort_threshold.is_none() {
        config.protocol.truncation_abort_threshold = Some(1.0);
    }
    let backend = config.resolve_backend()?;
    let records: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|index| -> Result<_, Error> {
            let setup = trial_setup(&config, index);
            let start = Instant::now();
            let result = match backend {
                Backend::Mps => run_protocol_mps(&setup.state.build_mps()?, &setup.protocol)?,
                _ => run_protocol(&setup.state.build()?, &setup.protocol)?,
            };
            let cert = certify(&result.log, config.threshold)?;
            let mut record = base_record(index, backend, &setup, &result, ms(start));
            record.certificate = Some(CertificateRecord::from(&cert));
            Ok(record)
        })
        .collect::<Result<_, _>>()?;

    let mut manifest = Manifest::new("certify", config.clone());
    manifest.trials = records;
    manifest.trials.sort_by_key(|t| t.index);
    manifest.finish();
    Ok(manifest)
}

/// Scaling sweep: per chain length, protocol + reconstruction wall time,
/// measurement-settings accounting, and the full-tomography parameter count
/// it replaces (computed, never executed).
pub fn cmd_bench(config: &ExperimentConfig, sizes: &[usize]) -> Result<Manifest, Error> {
    if sizes.is_empty() {
        return Err(Error::config("sizes", "need at least one chain length"));
    }
    let mut manifest = Manifest::new("bench", config.clone());
    let mut prev_wall: Option<f64> = None;
    for &n in sizes {
        let sized = spec_with_n(&config.state, n)?;
        let mut fidelity_min = 1.0f64;
        let mut wall_total = 0.0;
        let mut k = 0;
        let mut windows = 0;
        let mut settings = 0;
        let mut total = 0;
        for index in 0..config.trials {
            let sized_config = ExperimentConfig { state: sized.clone(), ..config.clone() };
            let setup = trial_setup(&sized_config, index);
            let mps = setup.state.build_mps()?;
            let start = Instant::now();
            let mut result = run_protocol_mps(&mps, &setup.protocol)?;
            let recon = to_mps(result.extract()?)?;
            wall_total += ms(start);
            fidelity_min = fidelity_min.min(fidelity(&mps, &recon)?);
            k = result.k;
            windows = result.windows();
            settings = result.settings_per_window();
            total = result.total_settings();
        }
        let wall_ms_mean = wall_total / config.trials as f64;
        manifest.bench.push(BenchRecord {
            n,
            k,
            windows,
            settings_per_window: settings,
            total_settings: total,
            full_tomography_params: (config.state.d() as f64).powi(2 * n as i32) - 1.0,
            wall_ms_mean,
            fidelity_min,
            wall_ratio_vs_prev: prev_wall.map(|p| wall_ms_mean / p),
        });
        prev_wall = Some(wall_ms_mean);
    }
    manifest.finish();
    Ok(manifest)
}

fn spec_with_n(spec: &StateSpec, n: usize) -> Result<StateSpec, Error> {
    let mut out = spec.clone();
    match &mut out {
        StateSpec::Ghz { n: slot, .. }
        | StateSpec::W { n: slot, .. }
        | StateSpec::RandomMps { n: slot, .. }
        | StateSpec::HaarRandom { n: slot, .. } => *slot = n,
        StateSpec::Product { .. } => {
            return Err(Error::config("sizes", "product states fix n through their digit string"))
        }
    }
    Ok(out)
}

pub enum DemoFamily {
    Ghz,
    W,
}

/// Hidden-phase demonstration: plant uniformly random phases, run the exact
/// sweep, and recover them from the reconstructed amplitudes. Local window
/// matrices never see the phases; the product formula does.
pub fn cmd_demo(config: &ExperimentConfig, family: DemoFamily) -> Result<(Manifest, String), Error> {
    let n = config.state.n();
    let d = 2usize;
    let records: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|index| -> Result<_, Error> {
            let trial_seed = derive_seed(config.seed, index as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, 3));
            let (spec, planted): (StateSpec, Vec<f64>) = match family {
                DemoFamily::Ghz => {
                    let (a, b) = match &config.state {
                        StateSpec::Ghz { a, b, .. } => (*a, *b),
                        _ => (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
                    };
                    let phi = rng.random_range(0.0..TAU);
                    (StateSpec::Ghz { n, d, a, b, phi }, vec![phi])
                }
                DemoFamily::W => {
                    let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
                    (StateSpec::W { n, d, phases: Some(phases.clone()) }, phases)
                }
            };
            let state = spec.build()?;
            let protocol = config.protocol.clone();
            let start = Instant::now();
            let mut result = run_protocol(&state, &protocol)?;
            let tensors = result.extract()?;
            let recon = to_mps(tensors)?;
            let fid = fidelity(&state, &recon)?;
            let wall = ms(start);

            let (recovered, phase_error) = match family {
                DemoFamily::Ghz => {
                    let ones = amplitude(tensors, &vec![1usize; n])?;
                    let zeros = amplitude(tensors, &vec![0usize; n])?;
                    let recovered = (ones / zeros).arg().rem_euclid(TAU);
                    (vec![recovered], circular_err(recovered, planted[0]))
                }
                DemoFamily::W => {
                    // only phase differences against the first branch are
                    // physical: the global phase is not observable
                    let mut digits = vec![0usize; n];
                    digits[0] = 1;
                    let reference = amplitude(tensors, &digits)?;
                    let mut recovered = Vec::with_capacity(n);
                    let mut worst = 0.0f64;
                    for site in 0..n {
                        let mut digits = vec![0usize; n];
                        digits[site] = 1;
                        let amp = amplitude(tensors, &digits)?;
                        let rel = (amp / reference).arg().rem_euclid(TAU);
                        worst = worst.max(circular_err(rel, (planted[site] - planted[0]).rem_euclid(TAU)));
                        recovered.push(rel);
                    }
                    (recovered, worst)
                }
            };

            let setup = TrialSetup { state: spec, protocol, trial_seed };
            let mut record = base_record(index, Backend::Dense, &setup, &result, wall);
            record.fidelity = Some(fid);
            record.planted_phases = Some(planted);
            record.recovered_phases = Some(recovered);
            record.phase_error = Some(phase_error);
            record.eta = Some(eta_pairs(&result.eta));
            Ok(record)
        })
        .collect::<Result<_, _>>()?;

    let mut manifest = Manifest::new("demo", config.clone());
    manifest.trials = records;
    manifest.trials.sort_by_key(|t| t.index);
    manifest.finish();

    let mut text = String::new();
    text.push_str(&format!(
        "hidden-phase demo: {} trials, n = {n}\n",
        manifest.trials.len()
    ));
    text.push_str("trial\tfidelity\tphase_error\tplanted\trecovered\n");
    for t in &manifest.trials {
        text.push_str(&format!(
            "{}\t{:.12}\t{:.3e}\t{}\t{}\n",
            t.index,
            t.fidelity.unwrap_or(f64::NAN),
            t.phase_error.unwrap_or(f64::NAN),
            fmt_phases(t.planted_phases.as_deref().unwrap_or(&[])),
            fmt_phases(t.recovered_phases.as_deref().unwrap_or(&[])),
        ));
    }
    if let Some(t) = manifest.trials.first() {
        if let Some(eta) = &t.eta {
            text.push_str(&format!(
                "boundary state of trial 0 (re, im pairs): {}\n",
                eta.iter().map(|p| format!("({:+.6}, {:+.6})", p[0], p[1])).collect::<Vec<_>>().join(" ")
            ));
        }
    }
    Ok((manifest, text))
}

fn circular_err(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs() % TAU;
    diff.min(TAU - diff)
}

fn fmt_phases(p: &[f64]) -> String {
    p.iter().map(|x| format!("{x:.9}")).collect::<Vec<_>>().join(",")
}

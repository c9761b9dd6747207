//! Experiment configuration: a TOML file, command-line overrides, or both
//! (flags win field by field).

use std::path::{Path, PathBuf};

use mpstomo::{Error, NoiseConfig, ProtocolConfig, StateSpec, DENSE_GUARD};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Auto,
    Dense,
    Mps,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// Line-delimited JSON records.
    #[default]
    Records,
    /// Flat tab-separated table for plotting.
    Table,
}

fn default_trials() -> usize {
    1
}

fn default_threshold() -> f64 {
    1e-6
}

/// One experiment campaign: a target state, protocol parameters, trial count
/// and seeding, backend selection, and output routing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub state: StateSpec,
    pub protocol: ProtocolConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub backend: Backend,
    /// Certification acceptance threshold on the cumulative bound.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub emit_tensors: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::config("config", e.to_string()))
    }

    /// Field-level validation with config-style error messages.
    pub fn validate(&self) -> Result<(), Error> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        self.state
            .validate()
            .map_err(|e| Error::config("state", e.to_string()))?;
        if self.protocol.chi == 0 {
            return Err(Error::config("protocol.chi", "bond dimension must be >= 1"));
        }
        self.protocol
            .resolve(self.state.n(), self.state.d())
            .map_err(|e| match e {
                Error::Config { field, reason } => Error::Config { field, reason },
                other => Error::config("protocol", other.to_string()),
            })?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::config("threshold", format!("must be in [0, 1], got {}", self.threshold)));
        }
        Ok(())
    }

    /// Dense when `d^n` fits under the guard (or forced); MPS otherwise.
    pub fn resolve_backend(&self) -> Result<Backend, Error> {
        let n = self.state.n() as u32;
        let fits_dense = (self.state.d() as u128).checked_pow(n).is_some_and(|dim| dim <= DENSE_GUARD);
        let is_haar = matches!(self.state, StateSpec::HaarRandom { .. });
        match self.backend {
            Backend::Dense => {
                if !fits_dense {
                    return Err(Error::config("backend", "dense backend exceeds the d^n <= 2^24 guard"));
                }
                Ok(Backend::Dense)
            }
            Backend::Mps => {
                if is_haar {
                    return Err(Error::config("backend", "haar_random states have no MPS construction"));
                }
                Ok(Backend::Mps)
            }
            Backend::Auto => {
                if fits_dense {
                    Ok(Backend::Dense)
                } else if is_haar {
                    Err(Error::config("backend", "haar_random beyond the dense guard cannot run"))
                } else {
                    Ok(Backend::Mps)
                }
            }
        }
    }
}

/// The shared command-line surface; every field overrides its config-file
/// counterpart.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct CommonArgs {
    /// TOML experiment config; flags override file values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for the campaign (fans out per trial).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
    /// Measurement model: exact, perturb, or shots.
    #[arg(long, value_enum)]
    pub noise: Option<NoiseArg>,
    /// Subspace-perturbation strength (perturb mode).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Samples per measurement setting (shots mode).
    #[arg(long)]
    pub shots: Option<u64>,
    /// Noise seed; derived from the trial seed when absent.
    #[arg(long)]
    pub noise_seed: Option<u64>,
    /// Assumed bond dimension (protocol hypothesis; also the constructed
    /// bond for random_mps states unless the config file says otherwise).
    #[arg(long)]
    pub chi: Option<usize>,
    /// Window size override; default is the smallest k with d^(k-1) >= chi.
    #[arg(long)]
    pub k: Option<usize>,
    /// Certification acceptance threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Per-step loss that aborts the sweep (default 0.5 for run, 1.0 for
    /// certify).
    #[arg(long)]
    pub abort_threshold: Option<f64>,
    /// Cap on intermediate MPS bond dimensions.
    #[arg(long)]
    pub bond_cap: Option<usize>,
    /// Include the extracted tensor family in the records output.
    #[arg(long)]
    pub emit_tensors: bool,

    /// Target state family (required unless a config file provides one).
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Site count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Local dimension (default 2).
    #[arg(long)]
    pub d: Option<usize>,
    /// Digit string for the product family, e.g. 010.
    #[arg(long)]
    pub digits: Option<String>,
    /// GHZ amplitude on |0...0> (default 1/sqrt(2)).
    #[arg(long)]
    pub a: Option<f64>,
    /// GHZ amplitude on |1...1> (default 1/sqrt(2)).
    #[arg(long)]
    pub b: Option<f64>,
    /// GHZ relative phase.
    #[arg(long)]
    pub phi: Option<f64>,
    /// State seed for the random families; derived per trial when absent.
    #[arg(long)]
    pub state_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum NoiseArg {
    Exact,
    Perturb,
    Shots,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FamilyArg {
    Ghz,
    W,
    Product,
    RandomMps,
    HaarRandom,
}

impl CommonArgs {
    /// Assemble the effective config: file values (when given) overridden by
    /// flags, or flags alone.
    pub fn experiment(&self) -> Result<ExperimentConfig, Error> {
        self.assemble(None)
    }

    /// Like [`experiment`](Self::experiment), with a fallback state for
    /// commands that have a natural default (bench, demo).
    pub fn experiment_with(&self, fallback: impl FnOnce() -> StateSpec) -> Result<ExperimentConfig, Error> {
        self.assemble(Some(fallback()))
    }

    fn assemble(&self, fallback: Option<StateSpec>) -> Result<ExperimentConfig, Error> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_toml_file(path)?,
            None => match (self.family, fallback) {
                (None, Some(state)) => {
                    let chi = self.chi.unwrap_or_else(|| natural_chi(&state));
                    ExperimentConfig {
                        state,
                        protocol: ProtocolConfig::new(chi),
                        trials: default_trials(),
                        seed: 0,
                        backend: Backend::Auto,
                        threshold: default_threshold(),
                        emit_tensors: false,
                        out: None,
                        format: OutputFormat::Records,
                    }
                }
                _ => self.config_from_flags()?,
            },
        };
        self.apply_overrides(&mut config)?;
        config.validate()?;
        Ok(config)
    }

    fn state_from_flags(&self) -> Result<StateSpec, Error> {
        let family = self
            .family
            .ok_or_else(|| Error::config("state.family", "missing: pass --family or --config"))?;
        let d = self.d.unwrap_or(2);
        let need_n = || self.n.ok_or_else(|| Error::config("state.n", "missing: pass --n"));
        let frac = std::f64::consts::FRAC_1_SQRT_2;
        Ok(match family {
            FamilyArg::Ghz => StateSpec::Ghz {
                n: need_n()?,
                d,
                a: self.a.unwrap_or(frac),
                b: self.b.unwrap_or(frac),
                phi: self.phi.unwrap_or(0.0),
            },
            FamilyArg::W => StateSpec::W { n: need_n()?, d, phases: None },
            FamilyArg::Product => StateSpec::Product {
                d,
                digits: self
                    .digits
                    .clone()
                    .ok_or_else(|| Error::config("state.digits", "missing: pass --digits"))?,
            },
            FamilyArg::RandomMps => StateSpec::RandomMps {
                n: need_n()?,
                d,
                chi: self.chi.unwrap_or(2),
                seed: self.state_seed,
            },
            FamilyArg::HaarRandom => StateSpec::HaarRandom { n: need_n()?, d, seed: self.state_seed },
        })
    }

    fn config_from_flags(&self) -> Result<ExperimentConfig, Error> {
        let state = self.state_from_flags()?;
        let chi = self.chi.unwrap_or_else(|| natural_chi(&state));
        Ok(ExperimentConfig {
            state,
            protocol: ProtocolConfig::new(chi),
            trials: default_trials(),
            seed: 0,
            backend: Backend::Auto,
            threshold: default_threshold(),
            emit_tensors: false,
            out: None,
            format: OutputFormat::Records,
        })
    }

    fn apply_overrides(&self, config: &mut ExperimentConfig) -> Result<(), Error> {
        if self.family.is_some() {
            config.state = self.state_from_flags()?;
        } else {
            // targeted state tweaks on top of a config file
            match &mut config.state {
                StateSpec::Ghz { n, a, b, phi, .. } => {
                    if let Some(v) = self.n { *n = v; }
                    if let Some(v) = self.a { *a = v; }
                    if let Some(v) = self.b { *b = v; }
                    if let Some(v) = self.phi { *phi = v; }
                }
                StateSpec::W { n, .. } => {
                    if let Some(v) = self.n { *n = v; }
                }
                StateSpec::Product { digits, .. } => {
                    if let Some(v) = &self.digits { *digits = v.clone(); }
                }
                StateSpec::RandomMps { n, seed, .. } => {
                    if let Some(v) = self.n { *n = v; }
                    if self.state_seed.is_some() { *seed = self.state_seed; }
                }
                StateSpec::HaarRandom { n, seed, .. } => {
                    if let Some(v) = self.n { *n = v; }
                    if self.state_seed.is_some() { *seed = self.state_seed; }
                }
            }
        }
        if let Some(chi) = self.chi {
            config.protocol.chi = chi;
            if let StateSpec::RandomMps { chi: state_chi, .. } = &mut config.state {
                if self.family.is_some() || self.config.is_none() {
                    *state_chi = chi;
                }
            }
        }
        if let Some(k) = self.k {
            config.protocol.k = Some(k);
        }
        if let Some(v) = self.abort_threshold {
            config.protocol.truncation_abort_threshold = Some(v);
        }
        if let Some(v) = self.bond_cap {
            config.protocol.bond_cap = Some(v);
        }
        if let Some(mode) = self.noise {
            config.protocol.noise = match mode {
                NoiseArg::Exact => NoiseConfig::Exact,
                NoiseArg::Perturb => NoiseConfig::SubspacePerturbation {
                    epsilon: self
                        .epsilon
                        .ok_or_else(|| Error::config("noise.epsilon", "missing: pass --epsilon"))?,
                    seed: self.noise_seed,
                },
                NoiseArg::Shots => NoiseConfig::Shots {
                    shots: self.shots.ok_or_else(|| Error::config("noise.shots", "missing: pass --shots"))?,
                    seed: self.noise_seed,
                },
            };
        } else {
            match &mut config.protocol.noise {
                NoiseConfig::SubspacePerturbation { epsilon, seed } => {
                    if let Some(v) = self.epsilon { *epsilon = v; }
                    if self.noise_seed.is_some() { *seed = self.noise_seed; }
                }
                NoiseConfig::Shots { shots, seed } => {
                    if let Some(v) = self.shots { *shots = v; }
                    if self.noise_seed.is_some() { *seed = self.noise_seed; }
                }
                NoiseConfig::Exact => {}
            }
        }
        if let Some(v) = self.seed { config.seed = v; }
        if let Some(v) = self.trials { config.trials = v; }
        if let Some(v) = self.threshold { config.threshold = v; }
        if let Some(v) = self.backend { config.backend = v; }
        if let Some(v) = self.format { config.format = v; }
        if let Some(v) = &self.out { config.out = Some(v.clone()); }
        if self.emit_tensors { config.emit_tensors = true; }
        Ok(())
    }
}

/// Default protocol hypothesis when the user gives none: the family's own
/// bond dimension.
pub fn natural_chi(state: &StateSpec) -> usize {
    match state {
        StateSpec::Product { .. } => 1,
        StateSpec::Ghz { .. } | StateSpec::W { .. } => 2,
        StateSpec::RandomMps { chi, .. } => *chi,
        StateSpec::HaarRandom { .. } => 2,
    }
}

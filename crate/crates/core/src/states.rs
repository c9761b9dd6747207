//! Seeded construction of the target-state families: GHZ and W chains with
//! hidden phases, computational product states, random bounded-bond MPS, and
//! Haar-random negative controls.

use nalgebra as na;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{dense_dim, DenseState};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CRowVector, CVector};
use crate::mps::{Gauge, MpsState};

fn default_d() -> usize {
    2
}

fn default_amp() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

/// Declarative description of a target state. Random families carry an
/// optional seed; `None` behaves as seed 0 (callers running campaigns
/// substitute derived per-trial seeds first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StateSpec {
    /// `a |0...0> + e^{i phi} b |(d-1)...(d-1)>` with `|a|^2 + |b|^2 = 1`.
    Ghz {
        n: usize,
        #[serde(default = "default_d")]
        d: usize,
        #[serde(default = "default_amp")]
        a: f64,
        #[serde(default = "default_amp")]
        b: f64,
        #[serde(default)]
        phi: f64,
    },
    /// `n^{-1/2} (e^{i phi_1} |10...0> + ... + e^{i phi_n} |0...01>)`.
    /// Missing phases mean all zero.
    W {
        n: usize,
        #[serde(default = "default_d")]
        d: usize,
        #[serde(default)]
        phases: Option<Vec<f64>>,
    },
    /// Computational basis state written as a digit string, e.g. "010".
    Product {
        #[serde(default = "default_d")]
        d: usize,
        digits: String,
    },
    /// Bond-`chi` MPS with iid standard complex Gaussian tensor entries,
    /// left-canonicalized and normalized.
    RandomMps {
        n: usize,
        #[serde(default = "default_d")]
        d: usize,
        chi: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Normalized iid complex Gaussian statevector; generically far from any
    /// low-bond MPS.
    HaarRandom {
        n: usize,
        #[serde(default = "default_d")]
        d: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl StateSpec {
    pub fn n(&self) -> usize {
        match self {
            StateSpec::Ghz { n, .. }
            | StateSpec::W { n, .. }
            | StateSpec::RandomMps { n, .. }
            | StateSpec::HaarRandom { n, .. } => *n,
            StateSpec::Product { digits, .. } => digits.len(),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            StateSpec::Ghz { d, .. }
            | StateSpec::W { d, .. }
            | StateSpec::Product { d, .. }
            | StateSpec::RandomMps { d, .. }
            | StateSpec::HaarRandom { d, .. } => *d,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            StateSpec::Ghz { .. } => "ghz",
            StateSpec::W { .. } => "w",
            StateSpec::Product { .. } => "product",
            StateSpec::RandomMps { .. } => "random_mps",
            StateSpec::HaarRandom { .. } => "haar_random",
        }
    }

    /// Seed of the random families, when present.
    pub fn seed(&self) -> Option<u64> {
        match self {
            StateSpec::RandomMps { seed, .. } | StateSpec::HaarRandom { seed, .. } => *seed,
            _ => None,
        }
    }

    /// Fill an absent seed on the random families.
    pub fn with_seed(mut self, new_seed: u64) -> Self {
        match &mut self {
            StateSpec::RandomMps { seed, .. } | StateSpec::HaarRandom { seed, .. } => {
                if seed.is_none() {
                    *seed = Some(new_seed);
                }
            }
            _ => {}
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n() == 0 {
            return Err(Error::InvalidSpec("site count n must be >= 1".into()));
        }
        if self.d() < 2 {
            return Err(Error::InvalidSpec(format!("local dimension must be >= 2, got {}", self.d())));
        }
        match self {
            StateSpec::Ghz { a, b, .. } => {
                let norm = a * a + b * b;
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidSpec(format!(
                        "GHZ amplitudes must satisfy a^2 + b^2 = 1, got {norm}"
                    )));
                }
            }
            StateSpec::W { n, phases, .. } => {
                if let Some(p) = phases {
                    if p.len() != *n {
                        return Err(Error::InvalidSpec(format!(
                            "W phase list has length {}, expected n = {n}",
                            p.len()
                        )));
                    }
                }
            }
            StateSpec::Product { d, digits } => {
                if *d > 10 {
                    return Err(Error::InvalidSpec("product digit strings support d <= 10".into()));
                }
                for c in digits.chars() {
                    match c.to_digit(10) {
                        Some(z) if (z as usize) < *d => {}
                        _ => {
                            return Err(Error::InvalidSpec(format!(
                                "digit '{c}' out of range for d = {d}"
                            )))
                        }
                    }
                }
            }
            StateSpec::RandomMps { chi, .. } => {
                if *chi == 0 {
                    return Err(Error::InvalidSpec("bond dimension chi must be >= 1".into()));
                }
            }
            StateSpec::HaarRandom { .. } => {}
        }
        Ok(())
    }

    /// Build the dense statevector (guarded by `d^n <= 2^24`).
    pub fn build(&self) -> Result<DenseState> {
        self.validate()?;
        let n = self.n();
        let d = self.d();
        let dim = dense_dim(n, d)?;
        match self {
            StateSpec::Ghz { a, b, phi, .. } => {
                let mut amps = CVector::zeros(dim);
                amps[0] = C64::new(*a, 0.0);
                amps[dim - 1] = C64::from_polar(*b, *phi);
                DenseState::new(n, d, amps)
            }
            StateSpec::W { n, phases, .. } => {
                let mut amps = CVector::zeros(dim);
                let mag = 1.0 / (*n as f64).sqrt();
                for i in 0..*n {
                    let phase = phases.as_ref().map_or(0.0, |p| p[i]);
                    // |0...1...0> with the 1 on site i+1
                    amps[d.pow((n - 1 - i) as u32)] = C64::from_polar(mag, phase);
                }
                DenseState::new(*n, d, amps)
            }
            StateSpec::Product { .. } => {
                let digits = self.product_digits()?;
                DenseState::basis(n, d, &digits)
            }
            StateSpec::RandomMps { .. } => crate::mps::dense_from_mps(&self.build_mps()?),
            StateSpec::HaarRandom { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
                let amps = CVector::from_fn(dim, |_, _| linalg::complex_normal(&mut rng));
                DenseState::new(n, d, amps)
            }
        }
    }

    /// Build the MPS form directly (no dense intermediate), so large-`n` runs
    /// never touch a `d^n` vector. Not available for `haar_random`.
    pub fn build_mps(&self) -> Result<MpsState> {
        self.validate()?;
        let d = self.d();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        match self {
            StateSpec::Ghz { n, a, b, phi, .. } => {
                let mut tensors = Vec::with_capacity(*n);
                if *n == 1 {
                    let mut site = vec![CMatrix::from_element(1, 1, zero); d];
                    site[0] = CMatrix::from_element(1, 1, C64::new(*a, 0.0));
                    site[d - 1] = CMatrix::from_element(1, 1, C64::from_polar(*b, *phi));
                    tensors.push(site);
                } else {
                    let mut first = vec![CMatrix::zeros(1, 2); d];
                    first[0][(0, 0)] = C64::new(*a, 0.0);
                    first[d - 1][(0, 1)] = C64::from_polar(*b, *phi);
                    tensors.push(first);
                    for _ in 1..n - 1 {
                        let mut site = vec![CMatrix::zeros(2, 2); d];
                        site[0][(0, 0)] = one;
                        site[d - 1][(1, 1)] = one;
                        tensors.push(site);
                    }
                    let mut last = vec![CMatrix::zeros(2, 1); d];
                    last[0][(0, 0)] = one;
                    last[d - 1][(1, 0)] = one;
                    tensors.push(last);
                }
                MpsState::new(
                    d,
                    tensors,
                    CRowVector::from_element(1, one),
                    CVector::from_element(1, one),
                    Gauge::None,
                )
            }
            StateSpec::W { n, phases, .. } => {
                // bond index 0: no excitation placed yet; 1: placed
                let mag = 1.0 / (*n as f64).sqrt();
                let branch =
                    |i: usize| C64::from_polar(mag, phases.as_ref().map_or(0.0, |p| p[i]));
                if *n == 1 {
                    let mut site = vec![CMatrix::from_element(1, 1, zero); d];
                    site[1] = CMatrix::from_element(1, 1, branch(0));
                    return MpsState::new(
                        d,
                        vec![site],
                        CRowVector::from_element(1, one),
                        CVector::from_element(1, one),
                        Gauge::None,
                    );
                }
                let mut tensors = Vec::with_capacity(*n);
                let mut first = vec![CMatrix::zeros(1, 2); d];
                first[0][(0, 0)] = one;
                first[1][(0, 1)] = branch(0);
                tensors.push(first);
                for i in 1..n - 1 {
                    let mut site = vec![CMatrix::zeros(2, 2); d];
                    site[0][(0, 0)] = one;
                    site[0][(1, 1)] = one;
                    site[1][(0, 1)] = branch(i);
                    tensors.push(site);
                }
                let mut last = vec![CMatrix::zeros(2, 1); d];
                last[0][(1, 0)] = one;
                last[1][(0, 0)] = branch(*n - 1);
                tensors.push(last);
                MpsState::new(
                    d,
                    tensors,
                    CRowVector::from_element(1, one),
                    CVector::from_element(1, one),
                    Gauge::None,
                )
            }
            StateSpec::Product { .. } => {
                let digits = self.product_digits()?;
                let tensors = digits
                    .iter()
                    .map(|&dz| {
                        (0..d)
                            .map(|z| CMatrix::from_element(1, 1, if z == dz { one } else { zero }))
                            .collect()
                    })
                    .collect();
                MpsState::new(
                    d,
                    tensors,
                    CRowVector::from_element(1, one),
                    CVector::from_element(1, one),
                    Gauge::LeftCanonical,
                )
            }
            StateSpec::RandomMps { n, chi, seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
                let bond = |i: usize| -> usize {
                    // cap by the exactly representable rank at each cut
                    let lhs = (d as f64).powi(i as i32);
                    let rhs = (d as f64).powi((*n - i) as i32);
                    (*chi as f64).min(lhs).min(rhs) as usize
                };
                let tensors: Vec<Vec<CMatrix>> = (0..*n)
                    .map(|i| {
                        (0..d)
                            .map(|_| {
                                CMatrix::from_fn(bond(i), bond(i + 1), |_, _| {
                                    linalg::complex_normal(&mut rng)
                                })
                            })
                            .collect()
                    })
                    .collect();
                let mut mps = MpsState::new(
                    d,
                    tensors,
                    CRowVector::from_element(1, one),
                    CVector::from_element(1, one),
                    Gauge::None,
                )?;
                mps.canonicalize(0.0)?;
                mps.normalize()?;
                Ok(mps)
            }
            StateSpec::HaarRandom { .. } => Err(Error::InvalidSpec(
                "haar_random has no MPS construction; build the dense form".into(),
            )),
        }
    }

    fn product_digits(&self) -> Result<Vec<usize>> {
        match self {
            StateSpec::Product { digits, .. } => Ok(digits
                .chars()
                .map(|c| c.to_digit(10).expect("validated") as usize)
                .collect()),
            _ => Err(Error::InvalidSpec("not a product spec".into())),
        }
    }
}

/// `(psi + delta g) / ||.||` with `g` a seeded Haar-like random unit vector;
/// the result stays within distance `2 delta` of the input.
pub fn perturb(state: &DenseState, delta: f64, seed: u64) -> Result<DenseState> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Config { field: "delta".into(), reason: format!("must be in [0, 1], got {delta}") });
    }
    if delta == 0.0 {
        return Ok(state.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = linalg::random_unit_vector(state.dim(), &mut rng);
    let amps = state.amplitudes() + g.map(|x| x * C64::new(delta, 0.0));
    DenseState::new(state.n(), state.d(), na::DVector::from(amps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::dense_from_mps;
    use crate::overlap::fidelity;

    #[test]
    fn ghz_dense_matches_definition() {
        let spec = StateSpec::Ghz { n: 3, d: 2, a: default_amp(), b: default_amp(), phi: 0.0 };
        let s = spec.build().unwrap();
        let h = default_amp();
        assert!((s.amp(&[0, 0, 0]).unwrap().re - h).abs() < 1e-15);
        assert!((s.amp(&[1, 1, 1]).unwrap().re - h).abs() < 1e-15);
    }

    #[test]
    fn w_dense_matches_definition() {
        let spec = StateSpec::W { n: 3, d: 2, phases: None };
        let s = spec.build().unwrap();
        let m = 1.0 / 3f64.sqrt();
        for digits in [[1, 0, 0], [0, 1, 0], [0, 0, 1]] {
            assert!((s.amp(&digits).unwrap().re - m).abs() < 1e-15);
        }
        assert!(s.amp(&[1, 1, 0]).unwrap().norm() < 1e-15);
    }

    #[test]
    fn product_string_builds_basis_state() {
        let spec = StateSpec::Product { d: 2, digits: "010".into() };
        let s = spec.build().unwrap();
        assert_eq!(s.amp(&[0, 1, 0]).unwrap(), C64::new(1.0, 0.0));
        let mps = spec.build_mps().unwrap();
        assert_eq!(mps.bond_dims(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(StateSpec::Ghz { n: 3, d: 2, a: 0.9, b: 0.9, phi: 0.0 }.validate().is_err());
        assert!(StateSpec::W { n: 3, d: 2, phases: Some(vec![0.0]) }.validate().is_err());
        assert!(StateSpec::Product { d: 2, digits: "021".into() }.validate().is_err());
        assert!(StateSpec::RandomMps { n: 4, d: 2, chi: 0, seed: None }.validate().is_err());
    }

    #[test]
    fn mps_and_dense_paths_agree() {
        let specs = [
            StateSpec::Ghz { n: 4, d: 2, a: 0.6, b: 0.8, phi: 1.3 },
            StateSpec::W { n: 5, d: 2, phases: Some(vec![0.1, 0.4, -0.2, 2.0, 0.0]) },
            StateSpec::Product { d: 3, digits: "0212".into() },
            StateSpec::RandomMps { n: 6, d: 2, chi: 3, seed: Some(7) },
        ];
        for spec in specs {
            let dense = spec.build().unwrap();
            let via_mps = dense_from_mps(&spec.build_mps().unwrap()).unwrap();
            let fid = fidelity(&dense, &via_mps).unwrap();
            assert!(fid >= 1.0 - 1e-10, "{}: fidelity {fid}", spec.family_name());
        }
    }

    #[test]
    fn ghz_and_w_mps_have_bond_two() {
        let ghz = StateSpec::Ghz { n: 4, d: 2, a: default_amp(), b: default_amp(), phi: 0.0 };
        assert_eq!(ghz.build_mps().unwrap().bond_dims(), vec![1, 2, 2, 2, 1]);
        let w = StateSpec::W { n: 4, d: 2, phases: None };
        assert_eq!(w.build_mps().unwrap().bond_dims(), vec![1, 2, 2, 2, 1]);
    }

    #[test]
    fn random_mps_is_left_canonical_normalized_and_seeded() {
        let spec = StateSpec::RandomMps { n: 20, d: 2, chi: 4, seed: Some(7) };
        let mps = spec.build_mps().unwrap();
        assert!(mps.is_left_canonical(1e-10));
        assert!((mps.norm() - 1.0).abs() < 1e-10);
        assert!(mps.max_bond() <= 4);
        let again = spec.build_mps().unwrap();
        for site in 1..=20 {
            for z in 0..2 {
                assert_eq!(mps.site(site)[z], again.site(site)[z], "same seed must be bit-identical");
            }
        }
    }

    #[test]
    fn haar_random_is_seeded_and_has_no_mps_path() {
        let spec = StateSpec::HaarRandom { n: 6, d: 2, seed: Some(3) };
        let a = spec.build().unwrap();
        let b = spec.build().unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
        assert!(spec.build_mps().is_err());
    }

    #[test]
    fn perturb_zero_is_identity_and_small_delta_stays_close() {
        let ghz = StateSpec::Ghz { n: 4, d: 2, a: default_amp(), b: default_amp(), phi: 0.0 }
            .build()
            .unwrap();
        let same = perturb(&ghz, 0.0, 5).unwrap();
        assert_eq!(same.amplitudes(), ghz.amplitudes());
        let close = perturb(&ghz, 1e-3, 5).unwrap();
        let fid = fidelity(&ghz, &close).unwrap();
        assert!(fid >= 1.0 - 2e-6, "fidelity {fid}");
    }

    #[test]
    fn strong_perturbation_spreads_the_schmidt_spectrum() {
        // delta = 0.5 on a product state: expect >= 3 weights above 1e-3 at
        // the middle cut for nearly all seeds
        let base = StateSpec::Product { d: 2, digits: "000000".into() }.build().unwrap();
        let mut hits = 0;
        for seed in 0..100 {
            let p = perturb(&base, 0.5, seed).unwrap();
            let spec = p.schmidt_spectrum(3).unwrap();
            if spec.iter().filter(|&&w| w > 1e-3).count() >= 3 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/100 seeds spread the spectrum");
    }
}

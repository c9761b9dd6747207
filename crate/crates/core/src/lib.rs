//! Direct tomography for matrix product states.
//!
//! A chain whose state has Schmidt rank at most `chi` across every cut can be
//! read out window by window: tomograph `k` neighbouring sites (with
//! `d^{k-1} >= chi`), rotate the window's support into the
//! `|0> (x) (C^d)^{k-1}` block, postselect the leading site on `|0>`, and
//! move one site to the right. The rotations themselves are the state's MPS
//! tensors, the postselection probabilities certify how close the state was
//! to the bond-`chi` hypothesis, and the residue on the last `k-1` sites is
//! the boundary state that carries globally hidden data such as a GHZ
//! relative phase.
//!
//! The crate provides
//! - [`dense`]: an exact statevector backend (the verification oracle),
//! - [`mps`]: an MPS backend for chain lengths far beyond the dense guard,
//! - [`states`]: seeded construction of target-state families,
//! - [`tomography`]: the sweep itself under exact, perturbed, or
//!   shot-sampled window measurements,
//! - [`reconstruct`]: the extracted tensor family and amplitude evaluation,
//! - [`certify`]: closeness certificates and the error-growth measurement.
//!
//! Sites are numbered 1 to `n`, and site 1 is the most significant base-`d`
//! digit of every amplitude index.

pub mod certify;
pub mod dense;
pub mod density;
pub mod error;
pub mod linalg;
pub mod mps;
pub mod overlap;
pub mod reconstruct;
pub mod seed;
pub mod states;
pub mod tomography;

pub use num_complex::Complex64 as C64;

pub use crate::certify::{certify, check_error_bound, Certificate, ErrorBoundReport};
pub use crate::dense::{DenseState, DENSE_GUARD};
pub use crate::density::DensityMatrix;
pub use crate::error::{Error, Result};
pub use crate::mps::{dense_from_mps, mps_from_dense, Gauge, MpsState};
pub use crate::overlap::{fidelity, inner_product, State};
pub use crate::reconstruct::{amplitude, extract_tensors, to_mps, to_mps_compressed, ExtractedTensors};
pub use crate::states::{perturb, StateSpec};
pub use crate::tomography::{
    build_disentangler, estimate_rdm, run_protocol, run_protocol_mps, run_protocol_with,
    Disentangler, NoiseConfig, ProtocolConfig, StepRecord, TomographyResult, TruncationLog,
};

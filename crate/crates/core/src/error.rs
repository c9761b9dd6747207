//! Error types shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Dense Hilbert-space dimension exceeds the memory guard.
    #[error("dense dimension d^n = {dim} exceeds the 2^24 guard")]
    SizeExceeded { dim: u128 },

    /// Adjacent MPS tensors do not chain: columns of site `site` must match
    /// rows of site `site + 1`.
    #[error("inconsistent bond dimensions between sites {site} and {}: {cols} vs {rows}", site + 1)]
    InconsistentBonds { site: usize, cols: usize, rows: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("window [{first}, {last}] out of range for n = {n} (sites are 1-based)")]
    WindowOutOfRange { first: usize, last: usize, n: usize },

    #[error("cut {cut} out of range: need 1 <= cut < n = {n}")]
    CutOutOfRange { cut: usize, n: usize },

    #[error("matrix is not unitary: max |U\u{2020}U - I| = {dev:.3e}")]
    NotUnitary { dev: f64 },

    #[error("not a density matrix: {0}")]
    NotADensityMatrix(String),

    /// Postselection probability fell below 1e-14; the bond-dimension
    /// hypothesis has failed catastrophically on this state.
    #[error("postselection probability {p:.3e} at site {site} is below 1e-14")]
    ZeroProbability { site: usize, p: f64 },

    #[error("invalid state spec: {0}")]
    InvalidSpec(String),

    #[error("shot-noise tomography supports d = 2 only, got d = {d}")]
    ShotsUnsupported { d: usize },

    /// A single protocol step lost more mass than the configured abort
    /// threshold allows; the assumed bond dimension is untenable.
    #[error("truncation loss {loss:.3e} at step {step} exceeds abort threshold {threshold:.3e}")]
    TruncationAbort { step: usize, loss: f64, threshold: f64 },

    #[error("bond dimension {bond} at site {site} exceeds the configured cap {cap}")]
    BondOverflow { site: usize, bond: usize, cap: usize },

    #[error("incomplete truncation log: expected {expected} steps, got {got}")]
    IncompleteLog { expected: usize, got: usize },

    #[error("invalid digit string: {0}")]
    BadDigitString(String),

    #[error("invalid configuration for `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("state has (numerically) zero norm")]
    ZeroNorm,
}

impl Error {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config { field: field.to_string(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

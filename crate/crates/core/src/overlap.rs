//! Inner products and fidelities across the dense and MPS representations.

use num_complex::Complex64 as C64;

use crate::dense::DenseState;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::mps::{dense_from_mps, MpsState};

/// Borrowed view over either state representation, so overlap routines accept
/// any mix of the two.
#[derive(Clone, Copy)]
pub enum State<'a> {
    Dense(&'a DenseState),
    Mps(&'a MpsState),
}

impl<'a> From<&'a DenseState> for State<'a> {
    fn from(s: &'a DenseState) -> Self {
        State::Dense(s)
    }
}

impl<'a> From<&'a MpsState> for State<'a> {
    fn from(s: &'a MpsState) -> Self {
        State::Mps(s)
    }
}

impl State<'_> {
    fn n(&self) -> usize {
        match self {
            State::Dense(s) => s.n(),
            State::Mps(s) => s.n(),
        }
    }

    fn d(&self) -> usize {
        match self {
            State::Dense(s) => s.d(),
            State::Mps(s) => s.d(),
        }
    }
}

/// `<a|b>`. MPS pairs contract through the transfer network; mixed pairs
/// expand the MPS side (the dense partner proves `d^n` is under the guard).
pub fn inner_product<'a, 'b>(a: impl Into<State<'a>>, b: impl Into<State<'b>>) -> Result<C64> {
    let a = a.into();
    let b = b.into();
    if a.n() != b.n() || a.d() != b.d() {
        return Err(Error::ShapeMismatch(format!(
            "states disagree: (n={}, d={}) vs (n={}, d={})",
            a.n(),
            a.d(),
            b.n(),
            b.d()
        )));
    }
    match (a, b) {
        (State::Dense(x), State::Dense(y)) => Ok(x.amplitudes().dotc(y.amplitudes())),
        (State::Mps(x), State::Mps(y)) => Ok(mps_overlap(x, y)),
        (State::Mps(x), State::Dense(y)) => Ok(dense_from_mps(x)?.amplitudes().dotc(y.amplitudes())),
        (State::Dense(x), State::Mps(y)) => Ok(x.amplitudes().dotc(dense_from_mps(y)?.amplitudes())),
    }
}

/// `|<a|b>|`, the global-phase-invariant overlap modulus, clamped to [0, 1].
pub fn fidelity<'a, 'b>(a: impl Into<State<'a>>, b: impl Into<State<'b>>) -> Result<f64> {
    Ok(inner_product(a, b)?.norm().min(1.0))
}

fn mps_overlap(a: &MpsState, b: &MpsState) -> C64 {
    let mut env: CMatrix = a.left_boundary().adjoint() * b.left_boundary();
    for site in 1..=a.n() {
        let sa = a.site(site);
        let sb = b.site(site);
        let mut next = CMatrix::zeros(sa[0].ncols(), sb[0].ncols());
        for (ta, tb) in sa.iter().zip(sb) {
            next += ta.adjoint() * &env * tb;
        }
        env = next;
    }
    (a.right_boundary().adjoint() * env * b.right_boundary())[(0, 0)]
}

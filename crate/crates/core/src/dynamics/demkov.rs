use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{pauli_op, Axis, BasisDescriptor, State};
use crate::scalar::c;

use super::{propagate, PropagationConfig, TermSum};

/// Solution of `i ċ₊ = −α c₊ − Δ_c e^{−2γt} c₋`, `i ċ₋ = α c₋ − Δ_c e^{−2γt} c₊`.
#[derive(Debug, Clone, Serialize)]
pub struct TwoStateAmplitudes {
    pub times: Vec<f64>,
    pub c_plus: Vec<Complex64>,
    pub c_minus: Vec<Complex64>,
    pub alpha: f64,
    pub delta_c0: f64,
    pub gamma: f64,
}

impl TwoStateAmplitudes {
    /// `|c₊|² − |c₋|²` at the last recorded time.
    pub fn final_imbalance(&self) -> f64 {
        let (p, m) = (self.c_plus.last().unwrap(), self.c_minus.last().unwrap());
        p.norm_sqr() - m.norm_sqr()
    }

    /// `c₊|↑⟩ + c₋|↓⟩` at the last recorded time.
    pub fn final_state(&self) -> Result<State<f64>> {
        let (p, m) = (self.c_plus.last().unwrap(), self.c_minus.last().unwrap());
        State::new(
            BasisDescriptor::new(1, vec![], vec![])?,
            vec![c(p.re, p.im), c(m.re, m.im)],
        )
    }

    /// Largest `||c₊|² + |c₋|² − 1|` over the record.
    pub fn norm_defect(&self) -> f64 {
        self.c_plus
            .iter()
            .zip(&self.c_minus)
            .map(|(p, m)| (p.norm_sqr() + m.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `c₊(0) = c₋(0) = 1/√2`.
pub const SYMMETRIC_START: [Complex64; 2] = [
    Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
    Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
];

/// Integrates the two-state sweep model on `[0, t_final]`.
pub fn demkov_integrate(
    alpha: f64,
    delta_c0: f64,
    gamma: f64,
    t_final: f64,
    c0: [Complex64; 2],
) -> Result<TwoStateAmplitudes> {
    demkov_integrate_with(alpha, delta_c0, gamma, t_final, c0, 1e-11, 500)
}

/// As [`demkov_integrate`] with explicit tolerance and number of output times.
pub fn demkov_integrate_with(
    alpha: f64,
    delta_c0: f64,
    gamma: f64,
    t_final: f64,
    c0: [Complex64; 2],
    tolerance: f64,
    record_points: usize,
) -> Result<TwoStateAmplitudes> {
    if !(gamma > 0.0) || !alpha.is_finite() || !delta_c0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "two-state model needs finite alpha, delta_c and gamma > 0 (got {alpha}, {delta_c0}, {gamma})"
        )));
    }
    let basis = BasisDescriptor::new(1, vec![], vec![])?;
    let psi0 = State::new(
        basis.clone(),
        vec![c(c0[0].re, c0[0].im), c(c0[1].re, c0[1].im)],
    )?;
    // |↑⟩ carries c₊.
    let ham = TermSum::new(basis.clone())
        .with_term(pauli_op(&basis, 0, Axis::Z)?, move |_| -alpha)?
        .with_term(pauli_op(&basis, 0, Axis::X)?, move |t| {
            -delta_c0 * (-2.0 * gamma * t).exp()
        })?;
    let cfg = PropagationConfig::<f64>::new(t_final)
        .with_tolerance(tolerance)
        .with_record_points(record_points)
        .keeping_states();
    let traj = propagate(&ham, &psi0, &cfg)?;
    let amp = |s: &State<f64>, k: usize| Complex64::new(s.amplitudes()[k].re, s.amplitudes()[k].im);
    Ok(TwoStateAmplitudes {
        c_plus: traj.states.iter().map(|s| amp(s, 0)).collect(),
        c_minus: traj.states.iter().map(|s| amp(s, 1)).collect(),
        times: traj.times,
        alpha,
        delta_c0,
        gamma,
    })
}

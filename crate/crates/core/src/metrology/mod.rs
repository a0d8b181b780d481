//! Estimation theory on top of the propagated or closed-form states.

mod report;

pub use report::{
    adiabatic_force_report, adiabatic_magnetic_report, cho_force_report, snr_report,
    EstimatedParameter, EstimationReport, FisherQuantity, Quantity, Readout, ReportSpec,
    JOINT_ESTIMATION_CAVEAT,
};

use crate::error::{Error, Result};
use crate::hilbert::State;
use crate::scalar::{cr, Cplx, Real};

/// Central-difference derivative with one Richardson step.
#[derive(Debug, Clone)]
pub struct StateDerivative<T: Real> {
    pub state: State<T>,
    /// Extrapolated `|∂ψ⟩`.
    pub derivative: State<T>,
    /// Central difference at step `h/2`, before extrapolation.
    pub coarse: State<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiEstimate {
    pub value: f64,
    /// Value from the unextrapolated difference at `h/2`.
    pub unextrapolated: f64,
}

impl QfiEstimate {
    pub fn relative_change(&self) -> f64 {
        if self.value == 0.0 {
            return if self.unextrapolated == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        ((self.value - self.unextrapolated) / self.value).abs()
    }
}

/// Largest relative change between the extrapolated QFI and the plain
/// central difference that is accepted.
pub const RICHARDSON_TOLERANCE: f64 = 1e-3;

fn checked<T: Real>(s: State<T>, theta: f64) -> Result<State<T>> {
    let defect = (s.norm() - T::one()).abs().as_f64();
    let limit = 1e-8f64.max(100.0 * T::epsilon().as_f64());
    if defect > limit {
        return Err(Error::Precondition(format!(
            "state at parameter {theta:e} is not normalized (|norm - 1| = {defect:e})"
        )));
    }
    Ok(s)
}

fn combine<T: Real>(terms: &[(f64, &State<T>)]) -> Result<State<T>> {
    let basis = terms[0].1.basis().clone();
    let mut out = vec![cr(T::zero()); basis.dim()];
    for (w, s) in terms {
        basis.ensure_same(s.basis())?;
        let w = cr(T::lit(*w));
        for (o, a) in out.iter_mut().zip(s.amplitudes()) {
            *o += *a * w;
        }
    }
    State::new(basis, out)
}

/// `|ψ(θ₀)⟩` and `|∂ψ/∂θ⟩` from five evaluations of `provider`.
pub fn state_derivative<T, F>(mut provider: F, theta0: f64, h: f64) -> Result<StateDerivative<T>>
where
    T: Real,
    F: FnMut(f64) -> Result<State<T>>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {h}"
        )));
    }
    let mut at = |t: f64| provider(t).and_then(|s| checked(s, t));
    let state = at(theta0)?;
    let (p1, m1) = (at(theta0 + h)?, at(theta0 - h)?);
    let (p2, m2) = (at(theta0 + 0.5 * h)?, at(theta0 - 0.5 * h)?);
    let d1 = combine(&[(0.5 / h, &p1), (-0.5 / h, &m1)])?;
    let d2 = combine(&[(1.0 / h, &p2), (-1.0 / h, &m2)])?;
    let derivative = combine(&[(4.0 / 3.0, &d2), (-1.0 / 3.0, &d1)])?;
    Ok(StateDerivative {
        state,
        derivative,
        coarse: d2,
    })
}

/// `4(⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²)`.
pub fn pure_state_qfi<T: Real>(psi: &State<T>, dpsi: &State<T>) -> Result<f64> {
    let overlap: Cplx<T> = psi.inner(dpsi)?;
    let dd = dpsi.inner(dpsi)?.re;
    Ok(4.0 * (dd.as_f64() - overlap.norm_sqr().as_f64()))
}

/// Quantum Fisher information of a family of pure states at `theta0`.
/// Fails with [`Error::NonConvergence`] when Richardson extrapolation
/// moves the result by more than [`RICHARDSON_TOLERANCE`].
pub fn qfi_numeric<T, F>(provider: F, theta0: f64, h: f64) -> Result<QfiEstimate>
where
    T: Real,
    F: FnMut(f64) -> Result<State<T>>,
{
    let d = state_derivative(provider, theta0, h)?;
    let est = QfiEstimate {
        value: pure_state_qfi(&d.state, &d.derivative)?,
        unextrapolated: pure_state_qfi(&d.state, &d.coarse)?,
    };
    if est.relative_change() > RICHARDSON_TOLERANCE {
        return Err(Error::NonConvergence(format!(
            "finite-difference QFI changed by {:.2e} under extrapolation; reduce the step {h:e}",
            est.relative_change()
        )));
    }
    Ok(est)
}

/// Eigen-decomposition of the symmetric logarithmic derivative
/// `L = 2(|ψ⟩⟨∂ψ| + |∂ψ⟩⟨ψ|)` of a pure state with `⟨ψ|∂ψ⟩ = 0`.
#[derive(Debug, Clone)]
pub struct Sld<T: Real> {
    /// `(|∂ψ⟩ + ‖∂ψ‖|ψ⟩)/norm`; equal to `ψ` when `∂ψ = 0`.
    pub plus: State<T>,
    pub minus: State<T>,
    /// `±2‖∂ψ‖`.
    pub eigenvalues: [f64; 2],
}

/// Largest `|⟨ψ|∂ψ⟩|` accepted by [`sld_pure`].
pub const SLD_OVERLAP_LIMIT: f64 = 1e-6;

pub fn sld_pure<T: Real>(psi: &State<T>, dpsi: &State<T>) -> Result<Sld<T>> {
    let overlap = psi.inner(dpsi)?.norm().as_f64();
    if overlap > SLD_OVERLAP_LIMIT {
        return Err(Error::Precondition(format!(
            "<psi|dpsi> = {overlap:e}; the two-outcome SLD needs an orthogonal derivative"
        )));
    }
    let n = dpsi.norm().as_f64();
    if n == 0.0 {
        return Ok(Sld {
            plus: psi.clone(),
            minus: psi.clone(),
            eigenvalues: [0.0, 0.0],
        });
    }
    let plus = combine(&[(1.0, dpsi), (n, psi)])?.normalized()?;
    let minus = combine(&[(1.0, dpsi), (-n, psi)])?.normalized()?;
    Ok(Sld {
        plus,
        minus,
        eigenvalues: [2.0 * n, -2.0 * n],
    })
}

impl<T: Real> Sld<T> {
    /// `⟨ψ|L²|ψ⟩ = Σ_± l_±² |⟨l_±|ψ⟩|²`, the QFI when the construction applies.
    pub fn second_moment(&self, psi: &State<T>) -> Result<f64> {
        let wp = self.plus.inner(psi)?.norm_sqr().as_f64();
        let wm = self.minus.inner(psi)?.norm_sqr().as_f64();
        let [lp, lm] = self.eigenvalues;
        Ok(lp * lp * wp + lm * lm * wm)
    }
}

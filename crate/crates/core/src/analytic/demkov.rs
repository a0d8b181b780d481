//! Exponential sweep of a two-level crossing: closed-form amplitudes and
//! the quantum Fisher information of the final state.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use super::adiabatic::{ground_manifold_asymmetry, ising_couplings, Parameter};
use super::special::{bessel_j, complex_digamma, complex_log_gamma};
use crate::error::{Error, Result};
use crate::models::units::HBAR;
use crate::models::{collective_transform, ForceField, MagneticField, ProbeParams};

/// Whether the ground-manifold coupling carries the phonon overlap
/// `e^{−|α_c|² − |α_r|²}`, `α_q = √2 g/ω_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum FranckCondon {
    #[default]
    Include,
    /// `Δ_c = Ω²/4J` as in the bare two-level reduction.
    Omit,
}

/// Asymmetry `α` and initial coupling `Δ_c(0)` of the two-ion ground
/// manifold, both in krad/s.
pub fn demkov_parameters(
    p: &ProbeParams,
    f: Option<&ForceField>,
    b: Option<&MagneticField>,
    fc: FranckCondon,
) -> Result<(f64, f64)> {
    if p.num_ions != 2 {
        return Err(Error::UnsupportedRegime(
            "the two-state reduction is defined for two ions".into(),
        ));
    }
    let alpha = ground_manifold_asymmetry(p, f, b)?;
    let j = ising_couplings(p)?[1];
    if j == 0.0 {
        return Err(Error::Degenerate("Ising coupling vanishes".into()));
    }
    let mut delta_c = p.omega0 * p.omega0 / (4.0 * j.abs());
    if fc == FranckCondon::Include {
        let spec = collective_transform(p)?;
        let g = p.g[0];
        let overlap: f64 = spec.frequencies.iter().map(|w| 2.0 * g * g / (w * w)).sum();
        delta_c *= (-overlap).exp();
    }
    Ok((alpha, delta_c))
}

/// Parameters of the closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemkovClosedForm {
    pub alpha: f64,
    pub gamma: f64,
    /// `x = Δ_c / 2γ`.
    pub x: f64,
    /// `β = ½ + iα/2γ`.
    pub beta: Complex64,
}

impl DemkovClosedForm {
    pub fn new(alpha: f64, delta_c0: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !(delta_c0 > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need gamma > 0, delta_c > 0 and finite alpha (got {gamma}, {delta_c0}, {alpha})"
            )));
        }
        Ok(DemkovClosedForm {
            alpha,
            gamma,
            x: delta_c0 / (2.0 * gamma),
            beta: Complex64::new(0.5, alpha / (2.0 * gamma)),
        })
    }

    /// `p = α/2γ`.
    pub fn p(&self) -> f64 {
        self.beta.im
    }

    /// `z = (x/2) e^{−2γt}`.
    pub fn z(&self, t: f64) -> f64 {
        0.5 * self.x * (-2.0 * self.gamma * t).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DemkovForm {
    /// Exact Bessel-function solution, restricted to `x ≤ 50`.
    Bessel,
    /// Late-time form, valid for `x ≫ 1` and `z ≪ 1`.
    Asymptotic,
}

/// Largest `x` accepted by the Bessel form.
pub const BESSEL_X_MAX: f64 = 50.0;

/// `(c₊(t), c₋(t))` from `c₊(0) = c₋(0) = 1/√2`.
pub fn demkov_closed_amplitudes(
    d: &DemkovClosedForm,
    t: f64,
    form: DemkovForm,
) -> Result<(Complex64, Complex64)> {
    let p = d.p();
    let i = Complex64::i();
    match form {
        DemkovForm::Bessel => {
            if d.x > BESSEL_X_MAX {
                return Err(Error::UnsupportedRegime(format!(
                    "Bessel form needs x <= {BESSEL_X_MAX}, got {:e}; use the asymptotic form or integrate",
                    d.x
                )));
            }
            let b = d.beta;
            let one = Complex64::new(1.0, 0.0);
            let x = Complex64::new(d.x, 0.0);
            let y = Complex64::new(d.x * (-2.0 * d.gamma * t).exp(), 0.0);
            let j = |nu: Complex64, arg: Complex64| bessel_j(nu, arg);
            let pre = PI * d.x * (-d.gamma * t).exp() * FRAC_1_SQRT_2 / (2.0 * (PI * p).cosh());
            let cp = (j(one - b, x)? - i * j(-b, x)?) * j(b, y)?
                + (j(b - one, x)? + i * j(b, x)?) * j(-b, y)?;
            let cm = (j(-b, x)? + i * j(one - b, x)?) * j(b - one, y)?
                + (j(b, x)? - i * j(b - one, x)?) * j(one - b, y)?;
            Ok((cp * pre, cm * pre))
        }
        DemkovForm::Asymptotic => {
            let z = d.z(t);
            let lnz = z.ln();
            let common = (PI / 2.0).sqrt() / (PI * p).cosh() * Complex64::from_polar(1.0, d.x);
            let half = Complex64::new(0.5, 0.0);
            let g_minus = complex_log_gamma(half - i * p)?;
            let g_plus = complex_log_gamma(half + i * p)?;
            let cp = common * (-i * p * lnz + PI * p / 2.0 - g_minus).exp();
            let cm = common * (i * p * lnz - PI * p / 2.0 - g_plus).exp();
            Ok((cp, cm))
        }
    }
}

/// Quantum Fisher information of the final state with respect to `α`,
/// `[π² + 4(ln z − Re Ψ(β))²] / (4γ² cosh²(πα/2γ))`, in ms².
pub fn qfi_alpha(d: &DemkovClosedForm, t_f: f64) -> Result<f64> {
    let psi = complex_digamma(d.beta)?;
    let l = d.z(t_f).ln() - psi.re;
    let ch = (PI * d.p()).cosh();
    Ok((PI * PI + 4.0 * l * l) / (4.0 * d.gamma * d.gamma * ch * ch))
}

/// `∂α/∂θ` for the two-ion force signal, in krad/s per newton (force) or
/// krad/s per radian (phase).
pub fn alpha_derivative(p: &ProbeParams, f: &ForceField, which: Parameter) -> Result<f64> {
    let spec = collective_transform(p)?;
    let wr = spec.omega_r();
    let g = p.g[0];
    // α = 2 g ε₋ cos(φ − ξ)/ω_r with ε₋ = F₋x₀/2ħ in krad/s.
    let per_newton = g * p.x0 / (HBAR * wr * 1e3);
    let angle = p.phi[0] - f.xi;
    Ok(match which {
        Parameter::Force => per_newton * angle.cos(),
        Parameter::Phase => per_newton * f.difference() * angle.sin(),
    })
}

/// Quantum Fisher information of the adiabatic protocol after a sweep of
/// length `t_f`: `(∂α/∂θ)² I_Q(α)`. At `φ = ξ` the force case reduces to
/// `(g x₀ / 2ħγω_r)² [π² + 4(ln z − Re Ψ(β))²] / cosh²(πα/2γ)` [1/N²].
pub fn qfi_adiabatic(
    p: &ProbeParams,
    f: &ForceField,
    which: Parameter,
    t_f: f64,
    fc: FranckCondon,
) -> Result<f64> {
    let (alpha, delta_c) = demkov_parameters(p, Some(f), None, fc)?;
    let d = DemkovClosedForm::new(alpha, delta_c, p.gamma)?;
    let da = alpha_derivative(p, f, which)?;
    Ok(da * da * qfi_alpha(&d, t_f)?)
}

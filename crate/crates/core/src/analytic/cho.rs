//! Two coupled oscillators dressed by a strong transverse drive: each
//! collective mode evolves as a squeezed, displaced oscillator.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use super::adiabatic::{CollectiveMode, Parameter};
use crate::error::{Error, Result};
use crate::models::units::{force_to_rate, HBAR, KRAD_S};
use crate::models::{collective_transform, ForceField, ProbeParams};

/// Couplings this close to critical are reported as divergent.
pub const CRITICAL_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezeDisplaceParams {
    pub mode: CollectiveMode,
    /// ω_q [krad/s].
    pub omega_q: f64,
    /// ζ_q² = 4g²/Ωω_q.
    pub zeta_sq: f64,
    /// ν_q = −¼ ln(1 − ζ_q²).
    pub nu: f64,
    /// α_q = |α_q| e^{iΦ_q}.
    pub alpha: Complex64,
    /// ϑ_q = ω_q √(1 − ζ_q²) [krad/s].
    pub theta: f64,
    /// π/ϑ_q [ms].
    pub t_star: f64,
    /// Mode force, `F₁ + F₂` or `F₁ − F₂` [N].
    pub force: f64,
    pub x0: f64,
}

impl SqueezeDisplaceParams {
    /// `(x₀ F_q / 2√2 ħ)` in krad/s.
    fn drive(&self) -> f64 {
        force_to_rate(self.force, self.x0) / SQRT_2
    }

    /// Odd multiple `k` of `π/ϑ_q`.
    pub fn readout_time(&self, k: u32) -> f64 {
        f64::from(k) * self.t_star
    }
}

/// Squeeze and displacement of mode `mode` for the two-ion probe held at
/// constant drive `Ω = Ω(0)`.
pub fn squeeze_displace_params(
    p: &ProbeParams,
    f: &ForceField,
    mode: CollectiveMode,
) -> Result<SqueezeDisplaceParams> {
    p.validate()?;
    f.check_len(p.num_ions)?;
    if p.num_ions != 2 {
        return Err(Error::UnsupportedRegime(
            "squeezed-oscillator solution is for two ions".into(),
        ));
    }
    if p.g[0] != p.g[1] || p.phi[0] != p.phi[1] {
        return Err(Error::InvalidParameter(
            "collective decoupling needs uniform couplings and phases".into(),
        ));
    }
    let spec = collective_transform(p)?;
    let omega_q = spec.frequencies[mode.index()];
    let zeta_sq = 4.0 * p.g[0] * p.g[0] / (p.omega0 * omega_q);
    if zeta_sq >= 1.0 {
        return Err(Error::SupercriticalCoupling {
            mode: mode.label(),
            zeta_sq,
        });
    }
    let force = match mode {
        CollectiveMode::Com => f.forces[0] + f.forces[1],
        CollectiveMode::Rock => f.forces[0] - f.forces[1],
    };
    let theta = omega_q * (1.0 - zeta_sq).sqrt();
    let mut sd = SqueezeDisplaceParams {
        mode,
        omega_q,
        zeta_sq,
        nu: -0.25 * (1.0 - zeta_sq).ln(),
        alpha: Complex64::new(0.0, 0.0),
        theta,
        t_star: PI / theta,
        force,
        x0: p.x0,
    };
    let d = f.xi - p.phi[0];
    let amp = (sd.drive() / omega_q).abs();
    // |α|cosΦ ∝ cos d/(1 − ζ²), |α|sinΦ ∝ sin d; Φ is kept in [−π/2, π/2].
    let (re, im) = (amp * d.cos() / (1.0 - zeta_sq), amp * d.sin());
    if amp > 0.0 {
        sd.alpha = Complex64::from_polar(re.hypot(im), (im / re).atan());
    }
    Ok(sd)
}

/// `⟨a†_q a_q⟩(t)` from the vibrational ground state.
pub fn mean_phonon_signal(sd: &SqueezeDisplaceParams, t: f64) -> f64 {
    let a2 = sd.alpha.norm_sqr();
    let phase = sd.alpha.arg();
    let (s2, c2) = (2.0 * phase).sin_cos();
    let th = sd.theta * t;
    let sh2 = (2.0 * sd.nu).sinh();
    let c_q = 0.5 * (a2 * (4.0 * sd.nu).cosh() + sh2 * sh2 + 3.0 * a2);
    a2 * s2 * sh2 * ((2.0 * th).sin() - 2.0 * th.sin())
        - a2 * c2 * (4.0 * sd.nu).sinh() * th.sin().powi(2)
        - 2.0 * a2 * th.cos()
        - 0.5 * (1.0 + 2.0 * a2) * (2.0 * th).cos() * sh2 * sh2
        + c_q
}

/// Hopping that brings both collective modes to an odd multiple of π at
/// the same time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaStar {
    /// κ_* [krad/s].
    pub kappa: f64,
    /// κ_*/δ.
    pub ratio: f64,
    /// `k_c π / ϑ_c` [ms].
    pub t_star: f64,
    /// `ϑ_r t_*/π − k_r`.
    pub phase_residual: f64,
    /// Defining quadratic evaluated at the root.
    pub residual: f64,
}

/// Solves `(1−x)(1−x−ζ²) = (k_r/k_c)²(1+x)(1+x−ζ²)` for `x = κ/δ ∈ (0,1)`,
/// with `ζ² = 4g²/Ωδ`.
pub fn kappa_star_solve(delta: f64, zeta_sq: f64, k_c: u32, k_r: u32) -> Result<KappaStar> {
    if k_c.is_multiple_of(2) || k_r.is_multiple_of(2) || k_r == 0 || k_c <= k_r {
        return Err(Error::InvalidParameter(format!(
            "need odd k_c > k_r > 0, got k_c = {k_c}, k_r = {k_r}"
        )));
    }
    if !(delta > 0.0) || !(0.0..1.0).contains(&zeta_sq) {
        return Err(Error::InvalidParameter(format!(
            "need delta > 0 and 0 <= zeta^2 < 1, got {delta}, {zeta_sq}"
        )));
    }
    let r2 = (f64::from(k_r) / f64::from(k_c)).powi(2);
    let a = 1.0 - r2;
    let b = -(2.0 - zeta_sq) * (1.0 + r2);
    let c = (1.0 - zeta_sq) * (1.0 - r2);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::NoRoot(format!("discriminant {disc:e} is negative")));
    }
    // Smaller root, written to avoid cancellation.
    let x = 2.0 * c / (-b + disc.sqrt());
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::NoRoot(format!("root {x} outside (0, 1)")));
    }
    let defining = |x: f64| (1.0 - x) * (1.0 - x - zeta_sq) - r2 * (1.0 + x) * (1.0 + x - zeta_sq);
    let theta = |s: f64| delta * ((1.0 + s * x) * (1.0 + s * x - zeta_sq)).sqrt();
    let t_star = f64::from(k_c) * PI / theta(1.0);
    Ok(KappaStar {
        kappa: x * delta,
        ratio: x,
        t_star,
        phase_residual: theta(-1.0) * t_star / PI - f64::from(k_r),
        residual: defining(x),
    })
}

/// A sensitivity that may diverge at critical coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Sensitivity {
    Finite(f64),
    /// ζ_q² within [`CRITICAL_MARGIN`] of one.
    Divergent,
}

impl Sensitivity {
    pub fn finite(self) -> Option<f64> {
        match self {
            Sensitivity::Finite(v) => Some(v),
            Sensitivity::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        self == Sensitivity::Divergent
    }
}

impl std::fmt::Display for Sensitivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sensitivity::Finite(v) => write!(f, "{v:e}"),
            Sensitivity::Divergent => f.write_str("diverges at critical coupling"),
        }
    }
}

/// Quantum Fisher information `16 |∂α_q/∂θ|²` at `ϑ_q t = kπ`, for laser
/// phase `phi` and force phase `xi`. Uses the mode frequency, coupling and
/// force of `sd`. Units are 1/N² for the force and 1/rad² for the phase.
pub fn qfi_cho(sd: &SqueezeDisplaceParams, which: Parameter, phi: f64, xi: f64) -> Sensitivity {
    let eta = 1.0 - sd.zeta_sq;
    if eta <= CRITICAL_MARGIN {
        return Sensitivity::Divergent;
    }
    let scale = sd.x0 / (HBAR * sd.omega_q * KRAD_S);
    let (sin, cos) = (xi - phi).sin_cos();
    Sensitivity::Finite(match which {
        Parameter::Force => 2.0 * scale * scale * (cos * cos / (eta * eta) + sin * sin),
        Parameter::Phase => {
            let s = scale * sd.force;
            2.0 * s * s * (cos * cos + sin * sin / (eta * eta))
        }
    })
}

/// Signal-to-noise ratio of the phonon readout at `ϑ_q t = kπ`. Parity
/// commutes with the squeeze, so the state there is the coherent state
/// `D†(α)ΠD(α)|0⟩ = |−2α⟩` and `⟨n⟩/Δn = 2|α|`.
pub fn phonon_snr_at_t_star(sd: &SqueezeDisplaceParams) -> f64 {
    2.0 * sd.alpha.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::units::YN;

    fn fig4() -> ProbeParams {
        ProbeParams::uniform(2, 300.0, 0.1, 0.6, 0.28, 2.5, PI / 3.0, 14.5e-9).unwrap()
    }

    #[test]
    fn rock_mode_displacement() {
        let mut p = fig4();
        p.kappa = 0.28;
        p.phi = vec![0.0; 2];
        let f = ForceField::from_yoctonewtons(&[2.0, 0.0], PI / 6.0);
        let sd = squeeze_displace_params(&p, &f, CollectiveMode::Rock).unwrap();
        assert!((sd.omega_q - 0.32).abs() < 1e-12);
        assert!((sd.zeta_sq - 25.0 / 96.0).abs() < 1e-12);
        let rate = 2e-24 * 14.5e-9 / (2.0 * SQRT_2 * HBAR * 1e3);
        let by_hand =
            rate / 0.32 * ((PI / 6.0).cos().powi(2) / (1.0 - 25.0 / 96.0f64).powi(2) + 0.25).sqrt();
        assert!((sd.alpha.norm() - by_hand).abs() < 1e-12);
        assert!((sd.alpha.norm() - 0.387).abs() < 1e-3);
    }

    #[test]
    fn uncoupled_oscillator_is_plain_displacement() {
        let mut p = fig4();
        p.g = vec![0.0; 2];
        let f = ForceField::from_yoctonewtons(&[3.0, 1.0], 0.4);
        let sd = squeeze_displace_params(&p, &f, CollectiveMode::Com).unwrap();
        assert_eq!(sd.nu, 0.0);
        assert!(
            (sd.alpha.norm() - force_to_rate(4.0 * YN, p.x0) / SQRT_2 / sd.omega_q).abs() < 1e-14
        );
    }

    #[test]
    fn signal_vanishes_at_start_and_peaks_at_t_star() {
        let p = fig4();
        let f = ForceField::from_yoctonewtons(&[7.0, 5.0], PI / 2.0);
        for mode in [CollectiveMode::Com, CollectiveMode::Rock] {
            let sd = squeeze_displace_params(&p, &f, mode).unwrap();
            assert!(mean_phonon_signal(&sd, 0.0).abs() < 1e-12);
            for k in [1, 3, 5] {
                let n = mean_phonon_signal(&sd, sd.readout_time(k));
                assert!((n - 4.0 * sd.alpha.norm_sqr()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn squeezed_vacuum_breathes() {
        let p = fig4();
        let sd = squeeze_displace_params(&p, &ForceField::zero(2), CollectiveMode::Rock).unwrap();
        for t in [0.3, 1.7, 4.0, 9.9] {
            let expect = (2.0 * sd.nu).sinh().powi(2) * (sd.theta * t).sin().powi(2);
            assert!((mean_phonon_signal(&sd, t) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn supercritical_rejected() {
        let mut p = fig4();
        p.omega0 = 10.0;
        assert!(matches!(
            squeeze_displace_params(&p, &ForceField::zero(2), CollectiveMode::Rock),
            Err(Error::SupercriticalCoupling { .. })
        ));
    }

    #[test]
    fn kappa_star_root() {
        let k = kappa_star_solve(0.6, 25.0 / 180.0, 3, 1).unwrap();
        let r2 = 1.0 / 9.0;
        let (a, b, c): (f64, f64, f64) = (
            1.0 - r2,
            -(2.0 - 25.0 / 180.0) * (1.0 + r2),
            (1.0 - 25.0 / 180.0) * (1.0 - r2),
        );
        let x = (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
        assert!((k.ratio - x).abs() < 1e-12);
        assert!((k.kappa - 0.277).abs() < 0.005);
        assert!(k.residual.abs() < 1e-12);
        assert!(k.phase_residual.abs() < 1e-9);
    }

    #[test]
    fn kappa_star_equal_orders_limit() {
        let k = kappa_star_solve(1.0, 0.0, 1001, 999).unwrap();
        assert!(k.ratio < 3e-3);
        assert!(kappa_star_solve(1.0, 0.1, 2, 1).is_err());
        assert!(kappa_star_solve(1.0, 0.1, 1, 3).is_err());
    }

    #[test]
    fn force_qfi_matches_minimal_force() {
        let p = fig4();
        let f = ForceField::from_yoctonewtons(&[7.0, 5.0], PI / 3.0);
        let sd = squeeze_displace_params(&p, &f, CollectiveMode::Rock).unwrap();
        let i = qfi_cho(&sd, Parameter::Force, PI / 3.0, PI / 3.0)
            .finite()
            .unwrap();
        let fmin = SQRT_2 * HBAR * sd.omega_q * 1e3 * (1.0 - sd.zeta_sq) / sd.x0;
        assert!((i * fmin * fmin / 4.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qfi_scaling_and_divergence() {
        let p = fig4();
        let f = ForceField::from_yoctonewtons(&[7.0, 5.0], 0.0);
        let mut sd = squeeze_displace_params(&p, &f, CollectiveMode::Com).unwrap();
        sd.zeta_sq = 0.9;
        let a = qfi_cho(&sd, Parameter::Force, 0.0, 0.0).finite().unwrap();
        sd.zeta_sq = 0.5;
        let b = qfi_cho(&sd, Parameter::Force, 0.0, 0.0).finite().unwrap();
        assert!((a / b - 25.0).abs() < 1e-9);
        sd.zeta_sq = 1.0 - 1e-9;
        assert!(qfi_cho(&sd, Parameter::Phase, 0.0, 1.0).is_divergent());
        sd.zeta_sq = 0.0;
        let bare = qfi_cho(&sd, Parameter::Force, 0.3, 1.0).finite().unwrap();
        let s = sd.x0 / (HBAR * sd.omega_q * 1e3);
        assert!((bare / (2.0 * s * s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_qfi_peaks_in_quadrature() {
        let p = fig4();
        let f = ForceField::from_yoctonewtons(&[7.0, 5.0], PI / 2.0);
        let sd = squeeze_displace_params(&p, &f, CollectiveMode::Rock).unwrap();
        let xi = PI / 2.0;
        let grid: Vec<f64> = (0..32)
            .map(|k| xi + PI / 2.0 + (k as f64 - 16.0) * PI / 32.0)
            .collect();
        let best = grid
            .iter()
            .copied()
            .max_by(|a, b| {
                let q = |phi| qfi_cho(&sd, Parameter::Phase, phi, xi).finite().unwrap();
                q(*a).total_cmp(&q(*b))
            })
            .unwrap();
        assert!((best - (xi + PI / 2.0)).abs() < 1e-12);
    }
}

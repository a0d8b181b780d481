//! Signals of the adiabatic protocol in the large-detuning limit.
//!
//! At the end of the sweep the spins sit in the two lowest Ising
//! configurations `s`, `s̄`. Eliminating the phonons with a polaron shift
//! gives configuration energies `E(s) = −Bᴴ M⁻¹ B + Σ_j δB_j s_j`, with
//! `M` the hopping matrix and `B_j = g_j s_j e^{iφ_j} + ε_j e^{iξ}`. The
//! sweep then realises a two-level crossing with asymmetry
//! `α = (E(s̄) − E(s))/2`. The pair differs in all `N` spins, so the
//! tunnelling gap closes as `Ω^N ∝ e^{−Nγt}` and `⟨σz₁⟩ = tanh(πα/Nγ)`.

use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::units::{self, HBAR};
use crate::models::{
    collective_transform, inverse_hopping, ForceField, MagneticField, ProbeParams,
};

/// Spin-up probability of ion 1 and the matching `⟨σz₁⟩ = 2p − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinSignal {
    pub p_up: f64,
    pub sigma1z: f64,
}

impl SpinSignal {
    fn from_argument(a: f64) -> Self {
        let s = a.tanh();
        SpinSignal {
            p_up: 0.5 + 0.5 * s,
            sigma1z: s,
        }
    }
}

/// Decay rate `Nγ` of the tunnelling gap between `s` and `s̄`.
fn gap_decay_rate(p: &ProbeParams) -> f64 {
    p.num_ions as f64 * p.gamma
}

fn inverse_m(p: &ProbeParams) -> Result<Vec<f64>> {
    Ok(inverse_hopping(&collective_transform(p)?))
}

/// Ising couplings `J_jk = −2 g_j g_k cos(φ_j − φ_k) (M⁻¹)_jk` of
/// `Σ_{j<k} J_jk σz_j σz_k` (row-major, zero diagonal).
pub fn ising_couplings(p: &ProbeParams) -> Result<Vec<f64>> {
    let n = p.num_ions;
    let mi = inverse_m(p)?;
    let mut j = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                j[a * n + b] = -2.0 * p.g[a] * p.g[b] * (p.phi[a] - p.phi[b]).cos() * mi[a * n + b];
            }
        }
    }
    Ok(j)
}

/// Polaron energy of spin configuration `spins` (`true` = ↑), krad/s.
pub fn configuration_energy(
    p: &ProbeParams,
    f: Option<&ForceField>,
    b: Option<&MagneticField>,
    spins: &[bool],
) -> Result<f64> {
    let n = p.num_ions;
    if spins.len() != n {
        return Err(Error::LengthMismatch {
            what: "spin configuration",
            expected: n,
            got: spins.len(),
        });
    }
    let mi = inverse_m(p)?;
    let eps = match f {
        Some(f) => {
            f.check_len(n)?;
            f.rates(p.x0)
        }
        None => vec![0.0; n],
    };
    let xi = f.map_or(0.0, |f| f.xi);
    let sign = |up: bool| if up { 1.0 } else { -1.0 };
    let bvec: Vec<Complex64> = (0..n)
        .map(|j| {
            Complex64::from_polar(p.g[j] * sign(spins[j]), p.phi[j])
                + Complex64::from_polar(eps[j], xi)
        })
        .collect();
    let mut e = 0.0;
    for j in 0..n {
        for k in 0..n {
            e -= (bvec[j].conj() * bvec[k]).re * mi[j * n + k];
        }
    }
    if let Some(b) = b {
        b.check_len(n)?;
        for (j, d) in b.detunings().iter().enumerate() {
            e += d * sign(spins[j]);
        }
    }
    Ok(e)
}

/// The degenerate unperturbed ground pair, returned as `(s, s̄)` with ion 1
/// up in `s`.
pub fn ground_pair(p: &ProbeParams) -> Result<(Vec<bool>, Vec<bool>)> {
    let n = p.num_ions;
    let mut best: Option<(f64, Vec<bool>)> = None;
    for mask in 0..(1usize << n) {
        let s: Vec<bool> = (0..n).map(|j| mask >> (n - 1 - j) & 1 == 1).collect();
        if !s[0] {
            continue;
        }
        let e = configuration_energy(p, None, None, &s)?;
        if best
            .as_ref()
            .is_none_or(|(b, _)| e < b - 1e-12 * b.abs().max(1.0))
        {
            best = Some((e, s));
        }
    }
    let (_, s) = best.expect("at least one configuration");
    let flipped = s.iter().map(|x| !x).collect();
    Ok((s, flipped))
}

/// Two-level asymmetry `α = (E(s̄) − E(s))/2` in krad/s.
pub fn ground_manifold_asymmetry(
    p: &ProbeParams,
    f: Option<&ForceField>,
    b: Option<&MagneticField>,
) -> Result<f64> {
    let (s, sbar) = ground_pair(p)?;
    Ok(0.5 * (configuration_energy(p, f, b, &sbar)? - configuration_energy(p, f, b, &s)?))
}

/// `⟨σz₁⟩` after a complete sweep, from the polaron energies.
pub fn polaron_signal(
    p: &ProbeParams,
    f: Option<&ForceField>,
    b: Option<&MagneticField>,
) -> Result<SpinSignal> {
    let alpha = ground_manifold_asymmetry(p, f, b)?;
    Ok(SpinSignal::from_argument(PI * alpha / gap_decay_rate(p)))
}

fn rock_frequency(p: &ProbeParams) -> Result<f64> {
    let w = collective_transform(p)?.omega_r();
    if w <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rocking frequency {w} is not positive"
        )));
    }
    Ok(w)
}

/// Weighted force difference `F₁ − F₂` or `F₁ − √2 F₂ + F₃` [N].
fn force_difference(p: &ProbeParams, f: &ForceField) -> Result<f64> {
    f.check_len(p.num_ions)?;
    Ok(f.difference())
}

/// `π g x₀ / Nħγω_r` per newton; the tanh argument is this times
/// `cos(φ − ξ) F₋`.
fn argument_scale(p: &ProbeParams) -> Result<f64> {
    let wr = units::internal_to_rad_s(rock_frequency(p)?);
    let g = units::internal_to_rad_s(p.g[0]);
    let rate = units::internal_to_rad_s(gap_decay_rate(p));
    Ok(PI * g * p.x0 / (HBAR * rate * wr))
}

/// Force signal of a complete sweep:
/// `p↑ = ½ + ½ tanh(π g x₀ cos(φ − ξ) F₋ / Nħγω_r)`, with `F₋ = F₁ − F₂`
/// for two ions and `F₁ − √2 F₂ + F₃` for three (`g = g₁`).
pub fn adiabatic_signal_force(p: &ProbeParams, f: &ForceField) -> Result<SpinSignal> {
    p.validate()?;
    let a = argument_scale(p)? * (p.phi[0] - f.xi).cos() * force_difference(p, f)?;
    Ok(SpinSignal::from_argument(a))
}

/// Magnetic order of the spin chain, set by the relative sign of the
/// couplings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MagneticOrder {
    Antiferro,
    /// `g₁ = −g₂`.
    Ferro,
}

/// Two-ion magnetic signal. Antiferro: `−tanh(π(δB₁ − δB₂)/2γ)`, which is
/// `−tanh(πλB′Δz/2γ)` with `Δz = z₁ − z₂`; ferro: `−tanh(π(δB₁ + δB₂)/2γ)`.
pub fn adiabatic_signal_magnetic(
    p: &ProbeParams,
    b: &MagneticField,
    order: MagneticOrder,
) -> Result<f64> {
    if p.num_ions != 2 {
        return Err(Error::Precondition(
            "the magnetic signal is defined for two ions".into(),
        ));
    }
    b.check_len(2)?;
    let arg = match order {
        MagneticOrder::Antiferro => b.detuning_difference(0, 1),
        MagneticOrder::Ferro => b.detunings().iter().sum(),
    };
    Ok(-(PI * arg / gap_decay_rate(p)).tanh())
}

/// Collective mode selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CollectiveMode {
    Com,
    Rock,
}

impl CollectiveMode {
    pub fn index(self) -> usize {
        match self {
            CollectiveMode::Com => 0,
            CollectiveMode::Rock => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CollectiveMode::Com => "com",
            CollectiveMode::Rock => "rock",
        }
    }
}

/// Quantity whose minimal detectable value is requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Detectable {
    /// Force difference in the adiabatic protocol [N].
    ForceAdiabatic,
    /// Field gradient [T/m] for ion spacing `dz` [m] and Landé factor `g_j`.
    MagneticGradient { dz: f64, g_j: f64 },
    /// Collective-mode force in the squeezed-oscillator protocol [N].
    ForceCho(CollectiveMode),
}

/// Minimal detectable value at unit signal-to-noise ratio, where the
/// signal-to-noise ratio of a tanh signal is `sinh A`.
pub fn minimal_detectable(p: &ProbeParams, which: Detectable) -> Result<f64> {
    let asinh1 = 1f64.asinh();
    let gamma = units::internal_to_rad_s(p.gamma);
    match which {
        Detectable::ForceAdiabatic => Ok(asinh1 / argument_scale(p)?),
        Detectable::MagneticGradient { dz, g_j } => {
            if dz == 0.0 {
                return Err(Error::InvalidParameter("ion spacing is zero".into()));
            }
            Ok(2.0 * gamma * asinh1 / (PI * units::zeeman_lambda(g_j) * dz.abs()))
        }
        Detectable::ForceCho(mode) => {
            let spec = collective_transform(p)?;
            let wq = spec.frequencies[mode.index()];
            let zeta_sq = 4.0 * p.g[0] * p.g[0] / (p.omega0 * wq);
            if zeta_sq >= 1.0 {
                return Err(Error::SupercriticalCoupling {
                    mode: mode.label(),
                    zeta_sq,
                });
            }
            Ok(SQRT_2 * HBAR * units::internal_to_rad_s(wq) * (1.0 - zeta_sq) / p.x0)
        }
    }
}

/// Estimated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parameter {
    /// Force difference `F₋` [N].
    Force,
    /// Force phase `ξ` [rad].
    Phase,
}

/// Fisher information of the two-outcome measurement of ion 1,
/// `(∂p/∂θ)² / p(1 − p) = sech²A (∂A/∂θ)²`.
pub fn classical_fisher(p: &ProbeParams, f: &ForceField, which: Parameter) -> Result<f64> {
    p.validate()?;
    let fm = force_difference(p, f)?;
    let k = argument_scale(p)?;
    let (cos, sin) = ((p.phi[0] - f.xi).cos(), (p.phi[0] - f.xi).sin());
    let a = k * cos * fm;
    let da = match which {
        Parameter::Force => k * cos,
        Parameter::Phase => k * fm * sin,
    };
    let sech = 1.0 / a.cosh();
    Ok(sech * sech * da * da)
}

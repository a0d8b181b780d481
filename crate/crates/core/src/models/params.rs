use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BasisDescriptor, DEFAULT_NMAX};

use super::units::{self, YN};

/// Parameters of the driven spin-phonon lattice probe.
///
/// Frequencies in krad/s, `x0` in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub num_ions: usize,
    /// Ω(0), drive amplitude at the start of the sweep.
    pub omega0: f64,
    /// Exponential sweep slope of Ω(t) = Ω(0) e^{−γt}.
    pub gamma: f64,
    /// Effective phonon detuning.
    pub delta: f64,
    /// Nearest-neighbour hopping.
    pub kappa: f64,
    /// Spin-phonon couplings, one per ion.
    pub g: Vec<f64>,
    /// Laser phases, one per ion.
    pub phi: Vec<f64>,
    /// Ground-state extent of the local oscillator.
    pub x0: f64,
    /// Per-mode Fock truncation.
    pub n_max: usize,
}

impl ProbeParams {
    /// Two or three ions with uniform coupling magnitude and phase. For three
    /// ions the middle coupling is √2 g, the choice that decouples the
    /// extra collective mode from the spins.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        num_ions: usize,
        omega0: f64,
        gamma: f64,
        delta: f64,
        kappa: f64,
        g: f64,
        phi: f64,
        x0: f64,
    ) -> Result<Self> {
        let gs = match num_ions {
            2 => vec![g, g],
            3 => vec![g, std::f64::consts::SQRT_2 * g, g],
            n => {
                return Err(Error::InvalidParameter(format!(
                    "num_ions must be 2 or 3, got {n}"
                )))
            }
        };
        let p = ProbeParams {
            num_ions,
            omega0,
            gamma,
            delta,
            kappa,
            g: gs,
            phi: vec![phi; num_ions],
            x0,
            n_max: DEFAULT_NMAX,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.num_ions) {
            return Err(Error::InvalidParameter(format!(
                "num_ions must be 2 or 3, got {}",
                self.num_ions
            )));
        }
        for (what, len) in [("g", self.g.len()), ("phi", self.phi.len())] {
            if len != self.num_ions {
                return Err(Error::LengthMismatch {
                    what: if what == "g" {
                        "couplings g"
                    } else {
                        "phases phi"
                    },
                    expected: self.num_ions,
                    got: len,
                });
            }
        }
        let finite = [self.omega0, self.gamma, self.delta, self.kappa, self.x0]
            .iter()
            .chain(&self.g)
            .chain(&self.phi)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite probe parameter".into()));
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "hopping must be non-negative, got {}",
                self.kappa
            )));
        }
        if self.lowest_mode_frequency() <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lowest collective frequency is not positive (delta = {}, kappa = {})",
                self.delta, self.kappa
            )));
        }
        if self.gamma < 0.0 || self.omega0 < 0.0 {
            return Err(Error::InvalidParameter(
                "drive amplitude and sweep slope must be non-negative".into(),
            ));
        }
        if self.x0 <= 0.0 {
            return Err(Error::InvalidParameter("x0 must be positive".into()));
        }
        if self.n_max < 2 {
            return Err(Error::InvalidParameter("n_max must be at least 2".into()));
        }
        Ok(())
    }

    fn lowest_mode_frequency(&self) -> f64 {
        match self.num_ions {
            3 => self.delta - std::f64::consts::SQRT_2 * self.kappa,
            _ => self.delta - self.kappa,
        }
    }

    /// Ω(t) = Ω(0) e^{−γt}.
    pub fn omega_at(&self, t: f64) -> f64 {
        self.omega0 * (-self.gamma * t).exp()
    }

    /// Spins first, then the local modes `local-1..N`.
    pub fn basis(&self) -> Result<BasisDescriptor> {
        BasisDescriptor::uniform(self.num_ions, self.num_ions, self.n_max)
    }

    /// Real symmetric hopping matrix of the local modes (row-major).
    pub fn hopping_matrix(&self) -> Vec<f64> {
        let n = self.num_ions;
        let mut m = vec![0.0; n * n];
        for j in 0..n {
            m[j * n + j] = self.delta;
            if j + 1 < n {
                m[j * n + j + 1] = self.kappa;
                m[(j + 1) * n + j] = self.kappa;
            }
        }
        m
    }

    /// Same ratios with every frequency multiplied by `s` (times scale by 1/s).
    pub fn rescaled(&self, s: f64) -> Self {
        let mut p = self.clone();
        p.omega0 *= s;
        p.gamma *= s;
        p.delta *= s;
        p.kappa *= s;
        p.g.iter_mut().for_each(|g| *g *= s);
        p
    }
}

/// Position-dependent kick: forces `F_j` [N] with common phase `ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceField {
    pub forces: Vec<f64>,
    pub xi: f64,
}

impl ForceField {
    pub fn new(forces: Vec<f64>, xi: f64) -> Self {
        ForceField { forces, xi }
    }

    pub fn from_yoctonewtons(forces: &[f64], xi: f64) -> Self {
        Self::new(forces.iter().map(|f| f * YN).collect(), xi)
    }

    /// From drive rates `ε_j = F_j x₀ / 2ħ` in krad/s.
    pub fn from_rates(rates: &[f64], xi: f64, x0: f64) -> Self {
        Self::new(
            rates.iter().map(|&e| units::rate_to_force(e, x0)).collect(),
            xi,
        )
    }

    pub fn zero(num_ions: usize) -> Self {
        Self::new(vec![0.0; num_ions], 0.0)
    }

    /// Drive rates in krad/s.
    pub fn rates(&self, x0: f64) -> Vec<f64> {
        self.forces
            .iter()
            .map(|&f| units::force_to_rate(f, x0))
            .collect()
    }

    pub fn check_len(&self, num_ions: usize) -> Result<()> {
        if self.forces.len() != num_ions {
            return Err(Error::LengthMismatch {
                what: "forces",
                expected: num_ions,
                got: self.forces.len(),
            });
        }
        Ok(())
    }

    /// `F₁ − F₂` for two ions, `F₁ − √2 F₂ + F₃` for three.
    pub fn difference(&self) -> f64 {
        match self.forces.as_slice() {
            [f1, f2] => f1 - f2,
            [f1, f2, f3] => f1 - std::f64::consts::SQRT_2 * f2 + f3,
            _ => f64::NAN,
        }
    }
}

/// Static field `B(z) = B₀ + B′ z` sampled at the ion positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagneticField {
    /// Offset [T].
    pub b0: f64,
    /// Gradient [T/m].
    pub bprime: f64,
    /// Equilibrium positions [m].
    pub z_positions: Vec<f64>,
    /// Landé factor.
    pub g_j: f64,
}

impl MagneticField {
    /// λ = g_J μ_B / ħ in rad/(s·T).
    pub fn lambda(&self) -> f64 {
        units::zeeman_lambda(self.g_j)
    }

    /// Site detunings `δB_j = λB₀ + λB′z_j` in krad/s.
    pub fn detunings(&self) -> Vec<f64> {
        let l = self.lambda();
        self.z_positions
            .iter()
            .map(|z| units::rad_s_to_internal(l * (self.b0 + self.bprime * z)))
            .collect()
    }

    /// `δB_j − δB_k = λB′(z_j − z_k)` in krad/s, free of `B₀` by construction.
    pub fn detuning_difference(&self, j: usize, k: usize) -> f64 {
        units::rad_s_to_internal(
            self.lambda() * self.bprime * (self.z_positions[j] - self.z_positions[k]),
        )
    }

    pub fn check_len(&self, num_ions: usize) -> Result<()> {
        if self.z_positions.len() != num_ions {
            return Err(Error::LengthMismatch {
                what: "ion positions",
                expected: num_ions,
                got: self.z_positions.len(),
            });
        }
        Ok(())
    }
}

/// Coulomb constant convention for the hopping estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoulombConvention {
    /// `e²/4πε₀` in SI units.
    #[default]
    Si,
    /// Bare `e²` with SI numbers substituted, as the Gaussian formula reads.
    GaussianLiteral,
}

/// Two-ion trap data for the hopping estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapGeometry {
    /// Ion mass [kg].
    pub mass: f64,
    /// Ion charge [C].
    pub charge: f64,
    /// Radial trap frequency [rad/s].
    pub omega_x: f64,
    /// Ion spacing |Δz| [m].
    pub dz: f64,
}

/// Hopping `κ = e² / (2 m ω_x |Δz|³)` in krad/s.
pub fn hopping_from_trap(trap: &TrapGeometry, convention: CoulombConvention) -> Result<f64> {
    for (name, v) in [
        ("mass", trap.mass),
        ("charge", trap.charge),
        ("omega_x", trap.omega_x),
        ("dz", trap.dz),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "trap {name} must be positive, got {v}"
            )));
        }
    }
    let coulomb = match convention {
        CoulombConvention::Si => 1.0 / (4.0 * std::f64::consts::PI * units::EPSILON_0),
        CoulombConvention::GaussianLiteral => 1.0,
    };
    let kappa = coulomb * trap.charge.powi(2) / (2.0 * trap.mass * trap.omega_x * trap.dz.powi(3));
    Ok(units::rad_s_to_internal(kappa))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calcium(dz: f64) -> TrapGeometry {
        TrapGeometry {
            mass: 40.0 * units::AMU,
            charge: units::E_CHARGE,
            omega_x: 2.0 * std::f64::consts::PI * 3e6,
            dz,
        }
    }

    #[test]
    fn hopping_power_law() {
        let k1 = hopping_from_trap(&calcium(5e-6), CoulombConvention::Si).unwrap();
        let k2 = hopping_from_trap(&calcium(2.5e-6), CoulombConvention::Si).unwrap();
        assert!((k2 / k1 - 8.0).abs() < 1e-12);
        let far = hopping_from_trap(&calcium(1.0), CoulombConvention::Si).unwrap();
        assert!(far < 1e-12);
    }

    #[test]
    fn hopping_rejects_nonpositive() {
        assert!(hopping_from_trap(&calcium(0.0), CoulombConvention::Si).is_err());
    }

    #[test]
    fn probe_validation() {
        assert!(ProbeParams::uniform(2, 825.0, 0.1, 70.0, 12.0, 12.5, 0.0, 14.5e-9).is_ok());
        assert!(ProbeParams::uniform(2, 825.0, 0.1, 10.0, 12.0, 12.5, 0.0, 14.5e-9).is_err());
        assert!(ProbeParams::uniform(3, 1.0, 0.1, 16.0, 12.0, 1.0, 0.0, 1e-8).is_err());
        assert!(ProbeParams::uniform(4, 1.0, 0.1, 70.0, 12.0, 1.0, 0.0, 1e-8).is_err());
    }

    #[test]
    fn magnetic_offset_cancels_in_difference() {
        let mut b = MagneticField {
            b0: 0.0,
            bprime: 4e-5,
            z_positions: vec![0.0, 4e-6],
            g_j: 2.0,
        };
        let d0 = b.detunings();
        b.b0 = 1e-6;
        let d1 = b.detunings();
        let diff0 = d0[1] - d0[0];
        let diff1 = d1[1] - d1[0];
        assert!((diff0 - diff1).abs() < 1e-12 * d1[0].abs());
        assert!((diff0 - 0.0281).abs() < 2e-4);
    }
}

use serde::Serialize;

use crate::analytic::demkov::{demkov_parameters, FranckCondon};
use crate::analytic::{
    adiabatic_signal_force, classical_fisher, phonon_snr_at_t_star, qfi_adiabatic, qfi_alpha,
    qfi_cho, squeeze_displace_params, CollectiveMode, DemkovClosedForm, Parameter, Sensitivity,
};
use crate::error::{Error, Result};
use crate::hilbert::{number_op, State};
use crate::models::units::rad_s_to_internal;
use crate::models::{ForceField, MagneticField, ProbeParams};
use crate::scalar::Real;

pub const JOINT_ESTIMATION_CAVEAT: &str = "single-parameter bound; estimating force magnitude \
     and phase together needs a measurement with at least three outcomes";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatedParameter {
    ForceDifference,
    ForceSum,
    ForcePhase,
    MagneticGradient,
}

impl EstimatedParameter {
    pub fn unit(self) -> &'static str {
        match self {
            EstimatedParameter::ForceDifference | EstimatedParameter::ForceSum => "N",
            EstimatedParameter::ForcePhase => "rad",
            EstimatedParameter::MagneticGradient => "T/m",
        }
    }

    fn inverse_square_unit(self) -> &'static str {
        match self {
            EstimatedParameter::ForceDifference | EstimatedParameter::ForceSum => "1/N^2",
            EstimatedParameter::ForcePhase => "1/rad^2",
            EstimatedParameter::MagneticGradient => "m^2/T^2",
        }
    }

    fn square_unit(self) -> &'static str {
        match self {
            EstimatedParameter::ForceDifference | EstimatedParameter::ForceSum => "N^2",
            EstimatedParameter::ForcePhase => "rad^2",
            EstimatedParameter::MagneticGradient => "T^2/m^2",
        }
    }
}

/// A number with its unit. Non-finite values serialize as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherQuantity {
    #[serde(flatten)]
    pub value: Sensitivity,
    pub unit: &'static str,
}

/// What was measured at the end of the protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Readout {
    /// Two-outcome spin readout with mean `⟨σz⟩`.
    Spin { sigma_z: f64 },
    /// Phonon counting with `⟨n⟩` and `⟨n²⟩`.
    Phonon { mean: f64, second_moment: f64 },
}

impl Readout {
    /// Phonon moments of `mode` taken from the state itself.
    pub fn phonon<T: Real>(state: &State<T>, mode: usize) -> Result<Self> {
        let n = number_op::<T>(state.basis(), mode)?;
        let nv = state.apply(&n)?;
        Ok(Readout::Phonon {
            mean: state.inner(&nv)?.re.as_f64(),
            second_moment: nv.inner(&nv)?.re.as_f64(),
        })
    }

    pub fn signal(self) -> f64 {
        match self {
            Readout::Spin { sigma_z } => sigma_z,
            Readout::Phonon { mean, .. } => mean,
        }
    }

    pub fn variance(self) -> f64 {
        match self {
            Readout::Spin { sigma_z } => 1.0 - sigma_z * sigma_z,
            Readout::Phonon {
                mean,
                second_moment,
            } => second_moment - mean * mean,
        }
    }
}

/// The estimated parameter, its true value and the Fisher informations
/// about it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportSpec {
    pub parameter: EstimatedParameter,
    pub value: f64,
    pub fisher_classical: f64,
    pub fisher_quantum: Sensitivity,
    pub n_experiments: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationReport {
    pub parameter: EstimatedParameter,
    pub value: Quantity,
    pub signal: f64,
    pub variance: f64,
    pub snr: f64,
    pub fisher_classical: Quantity,
    pub fisher_quantum: FisherQuantity,
    /// `1/(N I_cl)`.
    pub cramer_rao_bound: Quantity,
    /// `1/(N I_Q)`; zero when the QFI diverges.
    pub quantum_cramer_rao_bound: Quantity,
    /// Parameter value at unit SNR, assuming the response is linear in the
    /// tanh argument (spin) or in the displacement (phonon). Absent for
    /// the force phase.
    pub min_detectable: Option<Quantity>,
    pub n_experiments: u64,
    pub caveat: Option<&'static str>,
}

impl EstimationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn snr_report(readout: Readout, spec: &ReportSpec) -> Result<EstimationReport> {
    let variance = readout.variance();
    if !(variance > 0.0) {
        return Err(Error::Degenerate(format!(
            "readout variance {variance:e} leaves the signal-to-noise ratio undefined"
        )));
    }
    if spec.n_experiments == 0 {
        return Err(Error::InvalidParameter(
            "need at least one experiment".into(),
        ));
    }
    let signal = readout.signal();
    let snr = signal / variance.sqrt();
    let n = spec.n_experiments as f64;
    let unit = spec.parameter.unit();
    let min_detectable = match spec.parameter {
        EstimatedParameter::ForcePhase => None,
        _ => {
            let scale = match readout {
                Readout::Spin { .. } => 1f64.asinh() / snr.abs().asinh(),
                Readout::Phonon { .. } => 1.0 / snr.abs(),
            };
            Some(Quantity {
                value: spec.value.abs() * scale,
                unit,
            })
        }
    };
    let caveat = match spec.parameter {
        EstimatedParameter::ForceDifference | EstimatedParameter::ForcePhase => {
            Some(JOINT_ESTIMATION_CAVEAT)
        }
        _ => None,
    };
    let sq = spec.parameter.square_unit();
    Ok(EstimationReport {
        parameter: spec.parameter,
        value: Quantity {
            value: spec.value,
            unit,
        },
        signal,
        variance,
        snr,
        fisher_classical: Quantity {
            value: spec.fisher_classical,
            unit: spec.parameter.inverse_square_unit(),
        },
        fisher_quantum: FisherQuantity {
            value: spec.fisher_quantum,
            unit: spec.parameter.inverse_square_unit(),
        },
        cramer_rao_bound: Quantity {
            value: 1.0 / (n * spec.fisher_classical),
            unit: sq,
        },
        quantum_cramer_rao_bound: Quantity {
            value: match spec.fisher_quantum {
                Sensitivity::Finite(i) => 1.0 / (n * i),
                Sensitivity::Divergent => 0.0,
            },
            unit: sq,
        },
        min_detectable,
        n_experiments: spec.n_experiments,
        caveat,
    })
}

/// Report for the two-ion adiabatic protocol after a sweep of length
/// `t_final`. `sigma_z` overrides the closed-form signal, e.g. with a
/// simulated one.
pub fn adiabatic_force_report(
    p: &ProbeParams,
    f: &ForceField,
    which: Parameter,
    sigma_z: Option<f64>,
    t_final: f64,
    n_experiments: u64,
) -> Result<EstimationReport> {
    let sigma_z = match sigma_z {
        Some(s) => s,
        None => adiabatic_signal_force(p, f)?.sigma1z,
    };
    let (parameter, value) = match which {
        Parameter::Force => (EstimatedParameter::ForceDifference, f.difference()),
        Parameter::Phase => (EstimatedParameter::ForcePhase, f.xi),
    };
    let spec = ReportSpec {
        parameter,
        value,
        fisher_classical: classical_fisher(p, f, which)?,
        fisher_quantum: Sensitivity::Finite(qfi_adiabatic(
            p,
            f,
            which,
            t_final,
            FranckCondon::Include,
        )?),
        n_experiments,
    };
    snr_report(Readout::Spin { sigma_z }, &spec)
}

/// Report on the field gradient `B′` from the two-ion antiferromagnetic
/// sweep of length `t_final`. The asymmetry is `α = −λB′(z₁ − z₂)`, so
/// both Fisher informations follow from `∂α/∂B′` alone.
pub fn adiabatic_magnetic_report(
    p: &ProbeParams,
    b: &MagneticField,
    sigma_z: Option<f64>,
    t_final: f64,
    n_experiments: u64,
) -> Result<EstimationReport> {
    let (alpha, delta_c) = demkov_parameters(p, None, Some(b), FranckCondon::Include)?;
    if p.g[0] * p.g[1] < 0.0 {
        return Err(Error::UnsupportedRegime(
            "gradient estimation needs the antiferromagnetic ground pair".into(),
        ));
    }
    b.check_len(2)?;
    let dalpha = -rad_s_to_internal(b.lambda()) * (b.z_positions[0] - b.z_positions[1]);
    let arg = std::f64::consts::PI * alpha / (2.0 * p.gamma);
    let sigma_z = sigma_z.unwrap_or_else(|| arg.tanh());
    let sech = 1.0 / arg.cosh();
    let darg = std::f64::consts::PI * dalpha / (2.0 * p.gamma);
    let d = DemkovClosedForm::new(alpha, delta_c, p.gamma)?;
    let spec = ReportSpec {
        parameter: EstimatedParameter::MagneticGradient,
        value: b.bprime,
        fisher_classical: (sech * darg).powi(2),
        fisher_quantum: Sensitivity::Finite(dalpha * dalpha * qfi_alpha(&d, t_final)?),
        n_experiments,
    };
    snr_report(Readout::Spin { sigma_z }, &spec)
}

/// Report for phonon readout of one collective mode at `t_*`. Without
/// measured moments the coherent-state moments `⟨n⟩ = 4|α|²`,
/// `Var n = 4|α|²` are used.
pub fn cho_force_report(
    p: &ProbeParams,
    f: &ForceField,
    mode: CollectiveMode,
    moments: Option<Readout>,
    n_experiments: u64,
) -> Result<EstimationReport> {
    let sd = squeeze_displace_params(p, f, mode)?;
    let readout = moments.unwrap_or_else(|| {
        let n = 4.0 * sd.alpha.norm_sqr();
        Readout::Phonon {
            mean: n,
            second_moment: n * n + n,
        }
    });
    let i_q = qfi_cho(&sd, Parameter::Force, p.phi[0], f.xi);
    let parameter = match mode {
        CollectiveMode::Com => EstimatedParameter::ForceSum,
        CollectiveMode::Rock => EstimatedParameter::ForceDifference,
    };
    // Poisson counting of |−2α⟩ with |α| ∝ F: I_cl = (∂⟨n⟩/∂F)²/⟨n⟩ = 16|α|²/F².
    let snr = phonon_snr_at_t_star(&sd);
    let fisher_classical = if sd.force == 0.0 {
        0.0
    } else {
        4.0 * (snr / sd.force).powi(2)
    };
    snr_report(
        readout,
        &ReportSpec {
            parameter,
            value: sd.force,
            fisher_classical,
            fisher_quantum: i_q,
            n_experiments,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{minimal_detectable, Detectable};
    use std::f64::consts::PI;

    #[test]
    fn magnetic_report_matches_closed_form_signal() {
        let p = ProbeParams::uniform(2, 925.0, 0.05, 50.0, 11.0, 25.0, 0.0, 14.5e-9).unwrap();
        let b = MagneticField {
            b0: 0.0,
            bprime: 4e-5,
            z_positions: vec![4e-6, 0.0],
            g_j: 2.0,
        };
        let r = adiabatic_magnetic_report(&p, &b, None, 200.0, 1).unwrap();
        let closed = crate::analytic::adiabatic_signal_magnetic(
            &p,
            &b,
            crate::analytic::MagneticOrder::Antiferro,
        )
        .unwrap();
        assert!((r.signal - closed).abs() < 1e-12);
        assert!(r.fisher_classical.value <= r.fisher_quantum.value.finite().unwrap());
        // Unit SNR sits at the minimal detectable gradient.
        let bmin =
            minimal_detectable(&p, Detectable::MagneticGradient { dz: 4e-6, g_j: 2.0 }).unwrap();
        let md = r.min_detectable.unwrap().value;
        assert!((md / bmin - 1.0).abs() < 1e-9, "{md} {bmin}");
    }

    fn fig1() -> ProbeParams {
        ProbeParams::uniform(2, 825.0, 0.1, 70.0, 12.0, 12.5, 0.98 * PI, 14.5e-9).unwrap()
    }

    #[test]
    fn zero_signal_has_zero_snr() {
        let spec = ReportSpec {
            parameter: EstimatedParameter::ForceDifference,
            value: 0.0,
            fisher_classical: 1.0,
            fisher_quantum: Sensitivity::Finite(2.0),
            n_experiments: 1,
        };
        let r = snr_report(Readout::Spin { sigma_z: 0.0 }, &spec).unwrap();
        assert_eq!(r.snr, 0.0);
        assert_eq!(r.variance, 1.0);
        assert!(snr_report(Readout::Spin { sigma_z: 1.0 }, &spec).is_err());
    }

    #[test]
    fn spin_min_detectable_matches_closed_form() {
        let p = fig1();
        let f = ForceField::from_yoctonewtons(&[3.78, 0.95], 0.98 * PI);
        let r = adiabatic_force_report(&p, &f, Parameter::Force, None, 100.0, 1).unwrap();
        let closed = minimal_detectable(&p, Detectable::ForceAdiabatic).unwrap();
        let md = r.min_detectable.unwrap().value;
        assert!((md / closed - 1.0).abs() < 1e-9, "{md:e} vs {closed:e}");
        assert!(r.fisher_classical.value <= r.fisher_quantum.value.finite().unwrap());
        assert!((r.cramer_rao_bound.value * r.fisher_classical.value - 1.0).abs() < 1e-12);
        assert_eq!(r.caveat, Some(JOINT_ESTIMATION_CAVEAT));
    }

    #[test]
    fn phonon_snr_is_twice_displacement() {
        let p = ProbeParams::uniform(2, 300.0, 0.1, 0.6, 0.28, 2.5, PI / 3.0, 14.5e-9).unwrap();
        let f = ForceField::from_yoctonewtons(&[7.5, 5.0], PI / 3.0);
        let r = cho_force_report(&p, &f, CollectiveMode::Rock, None, 1).unwrap();
        let sd = squeeze_displace_params(&p, &f, CollectiveMode::Rock).unwrap();
        assert!((r.snr - 2.0 * sd.alpha.norm()).abs() < 1e-12);
        let fmin = minimal_detectable(&p, Detectable::ForceCho(CollectiveMode::Rock)).unwrap();
        assert!((r.min_detectable.unwrap().value / fmin - 1.0).abs() < 1e-9);
        // Counting saturates the quantum bound.
        let iq = r.fisher_quantum.value.finite().unwrap();
        assert!((r.fisher_classical.value / iq - 1.0).abs() < 1e-9);
    }

    #[test]
    fn json_carries_units() {
        let p = fig1();
        let f = ForceField::from_yoctonewtons(&[3.78, 0.95], 0.98 * PI);
        let r = adiabatic_force_report(&p, &f, Parameter::Phase, None, 100.0, 10).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["parameter"], "force_phase");
        assert_eq!(v["fisher_quantum"]["unit"], "1/rad^2");
        assert_eq!(v["fisher_quantum"]["kind"], "finite");
        assert!(v["min_detectable"].is_null());
        assert_eq!(v["n_experiments"], 10);
    }
}

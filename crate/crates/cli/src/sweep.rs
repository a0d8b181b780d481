//! One-dimensional parameter sweeps of the estimation reports.
//!
//! ```ini
//! [scenario]
//! name = gamma_scan
//! protocol = adiabatic_magnetic   # adiabatic_force | adiabatic_magnetic | squeezed
//! estimate = force                # force | phase (adiabatic_force only)
//! mode = rock                     # com | rock (squeezed only)
//! numeric = false                 # use a simulated signal instead of the closed form
//! experiments = 1
//!
//! [sweep]
//! parameter = probe.gamma
//! from = 0.05 kHz_paper
//! to = 0.2 kHz_paper
//! points = 8
//! scale = linear                  # linear | log
//! ```
//!
//! Output `<name>_sweep.csv` has columns
//! `<parameter>,signal,snr,I_cl,I_Q,min_detectable,error`, rows in axis
//! order. A failing point leaves `NaN` in the numbers and the message in
//! `error`; a divergent QFI is written as `inf`.

use std::path::{Path, PathBuf};

use iongrad::analytic::squeeze_displace_params;
use iongrad::analytic::Sensitivity;
use iongrad::analytic::{CollectiveMode, Parameter};
use iongrad::dynamics::{
    adiabatic_protocol_run, constant_drive_run, default_final_time, ConstantDriveOptions,
    DriveModel, Perturbation, ProtocolOptions,
};
use iongrad::metrology::{
    adiabatic_force_report, adiabatic_magnetic_report, cho_force_report, EstimationReport, Readout,
};
use iongrad::models::config::{Dimension, Document};
use iongrad::models::{collective_transform, ModelConfig};

use crate::config::{self, Options};
use crate::error::{CliError, CliResult};
use crate::output::format_number;
use crate::pool::parallel_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    AdiabaticForce(Parameter),
    AdiabaticMagnetic,
    Squeezed(CollectiveMode),
}

/// Parameter varied along the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Omega0,
    Gamma,
    Delta,
    Kappa,
    /// Every coupling `g_j`.
    Coupling,
    /// Every laser phase `φ_j`.
    LaserPhase,
    X0,
    /// `F_j`, zero-based.
    Force(usize),
    ForcePhase,
    B0,
    Bprime,
    /// `ζ_q²` of the read-out mode, set through the coupling.
    ZetaSq,
}

impl Axis {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "probe.omega0" => Axis::Omega0,
            "probe.gamma" => Axis::Gamma,
            "probe.delta" => Axis::Delta,
            "probe.kappa" => Axis::Kappa,
            "probe.g" => Axis::Coupling,
            "probe.phi" => Axis::LaserPhase,
            "probe.x0" => Axis::X0,
            "force.F1" => Axis::Force(0),
            "force.F2" => Axis::Force(1),
            "force.F3" => Axis::Force(2),
            "force.xi" => Axis::ForcePhase,
            "magnetic.B0" => Axis::B0,
            "magnetic.Bprime" => Axis::Bprime,
            "zeta_sq" => Axis::ZetaSq,
            _ => return None,
        })
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Axis::Omega0 | Axis::Gamma | Axis::Delta | Axis::Kappa | Axis::Coupling => {
                Dimension::Frequency
            }
            Axis::LaserPhase | Axis::ForcePhase => Dimension::Angle,
            Axis::X0 => Dimension::Length,
            Axis::Force(_) => Dimension::Force,
            Axis::B0 => Dimension::MagneticField,
            Axis::Bprime => Dimension::Gradient,
            Axis::ZetaSq => Dimension::Dimensionless,
        }
    }

    /// Writes `v` into a copy of `m`.
    fn apply(self, m: &ModelConfig, protocol: Protocol, v: f64) -> CliResult<ModelConfig> {
        let mut m = m.clone();
        let p = &mut m.probe;
        let missing = |what: &str| CliError::Config(format!("sweep axis needs a [{what}] section"));
        match self {
            Axis::Omega0 => p.omega0 = v,
            Axis::Gamma => p.gamma = v,
            Axis::Delta => p.delta = v,
            Axis::Kappa => p.kappa = v,
            Axis::Coupling => p.g.iter_mut().for_each(|g| *g = v),
            Axis::LaserPhase => p.phi.iter_mut().for_each(|x| *x = v),
            Axis::X0 => p.x0 = v,
            Axis::Force(j) => {
                let f = m.force.as_mut().ok_or_else(|| missing("force"))?;
                *f.forces.get_mut(j).ok_or_else(|| {
                    CliError::Config(format!("no force F{} on this chain", j + 1))
                })? = v;
            }
            Axis::ForcePhase => m.force.as_mut().ok_or_else(|| missing("force"))?.xi = v,
            Axis::B0 => m.magnetic.as_mut().ok_or_else(|| missing("magnetic"))?.b0 = v,
            Axis::Bprime => {
                m.magnetic
                    .as_mut()
                    .ok_or_else(|| missing("magnetic"))?
                    .bprime = v
            }
            Axis::ZetaSq => {
                let Protocol::Squeezed(mode) = protocol else {
                    return Err(CliError::Config(
                        "zeta_sq sweeps need protocol = squeezed".into(),
                    ));
                };
                let omega_q = collective_transform(p)?.frequencies[mode.index()];
                let g = (v.max(0.0) * p.omega0 * omega_q / 4.0).sqrt();
                p.g.iter_mut().for_each(|x| *x = g);
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub name: String,
    pub model: ModelConfig,
    pub protocol: Protocol,
    pub numeric: bool,
    pub experiments: u64,
    pub parameter: String,
    pub axis: Axis,
    pub values: Vec<f64>,
}

const SCENARIO_KEYS: &[&str] = &[
    "name",
    "protocol",
    "estimate",
    "mode",
    "numeric",
    "experiments",
];
const SWEEP_KEYS: &[&str] = &["parameter", "from", "to", "points", "scale"];

/// Validates a sweep file: known keys, units on dimensional values and a
/// non-empty axis.
pub fn sweep_spec(doc: &Document) -> CliResult<SweepSpec> {
    let model = config::model(doc, &["scenario", "sweep"])?;
    let sc = Options::new(doc, "scenario", SCENARIO_KEYS)?;
    let mode = match sc.word_or("mode", "rock") {
        "com" => CollectiveMode::Com,
        "rock" => CollectiveMode::Rock,
        other => {
            return Err(CliError::Config(format!(
                "mode must be com or rock, got `{other}`"
            )))
        }
    };
    let estimate = match sc.word_or("estimate", "force") {
        "force" => Parameter::Force,
        "phase" => Parameter::Phase,
        other => {
            return Err(CliError::Config(format!(
                "estimate must be force or phase, got `{other}`"
            )))
        }
    };
    let protocol = match sc.word("protocol")? {
        "adiabatic_force" => Protocol::AdiabaticForce(estimate),
        "adiabatic_magnetic" => Protocol::AdiabaticMagnetic,
        "squeezed" => Protocol::Squeezed(mode),
        other => {
            return Err(CliError::Config(format!(
                "protocol must be adiabatic_force, adiabatic_magnetic or squeezed, got `{other}`"
            )))
        }
    };
    match protocol {
        Protocol::AdiabaticMagnetic if model.magnetic.is_none() => {
            return Err(CliError::Config(
                "adiabatic_magnetic needs a [magnetic] section".into(),
            ))
        }
        Protocol::AdiabaticForce(_) | Protocol::Squeezed(_) if model.force.is_none() => {
            return Err(CliError::Config(
                "this protocol needs a [force] section".into(),
            ))
        }
        _ => {}
    }
    let experiments = sc.count_or("experiments", 1)?.max(1) as u64;

    let sw = Options::new(doc, "sweep", SWEEP_KEYS)?;
    let parameter = sw.word("parameter")?.to_string();
    let axis = Axis::parse(&parameter)
        .ok_or_else(|| CliError::Config(format!("unknown sweep parameter `{parameter}`")))?;
    let from = sw.scalar("from", axis.dimension())?;
    let to = sw.scalar("to", axis.dimension())?;
    let points = sw.count_or("points", 0)?;
    if points < 2 {
        return Err(CliError::Config(format!(
            "[sweep] needs points >= 2, got {points}"
        )));
    }
    if !(from.is_finite() && to.is_finite()) || from == to {
        return Err(CliError::Config(format!(
            "[sweep] range [{from}, {to}] is empty"
        )));
    }
    let values: Vec<f64> = match sw.word_or("scale", "linear") {
        "linear" => (0..points)
            .map(|k| from + (to - from) * k as f64 / (points - 1) as f64)
            .collect(),
        "log" => {
            if !(from > 0.0 && to > 0.0) {
                return Err(CliError::Config("log scale needs a positive range".into()));
            }
            let (a, b) = (from.ln(), to.ln());
            (0..points)
                .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
                .collect()
        }
        other => {
            return Err(CliError::Config(format!(
                "scale must be linear or log, got `{other}`"
            )))
        }
    };
    Ok(SweepSpec {
        name: sc.word_or("name", "custom").to_string(),
        model,
        protocol,
        numeric: sc.flag_or("numeric", false)?,
        experiments,
        parameter,
        axis,
        values,
    })
}

/// One sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis: f64,
    pub report: Result<EstimationReport, String>,
}

fn point(spec: &SweepSpec, v: f64) -> CliResult<EstimationReport> {
    let m = spec.axis.apply(&spec.model, spec.protocol, v)?;
    let p = &m.probe;
    let n = spec.experiments;
    let report = match spec.protocol {
        Protocol::AdiabaticForce(which) => {
            let f = m.force.clone().expect("checked in sweep_spec");
            let t_final = match m.t_final {
                Some(t) => t.resolve(p.gamma),
                None => default_final_time(p)?,
            };
            let sigma = if spec.numeric {
                let opts = ProtocolOptions {
                    t_final: Some(t_final),
                    record_points: 2,
                    ..Default::default()
                };
                Some(adiabatic_protocol_run(p, &Perturbation::Force(f.clone()), &opts)?.sigma_z[0])
            } else {
                None
            };
            adiabatic_force_report(p, &f, which, sigma, t_final, n)?
        }
        Protocol::AdiabaticMagnetic => {
            let b = m.magnetic.clone().expect("checked in sweep_spec");
            let t_final = match m.t_final {
                Some(t) => t.resolve(p.gamma),
                None => default_final_time(p)?,
            };
            let sigma = if spec.numeric {
                let opts = ProtocolOptions {
                    t_final: Some(t_final),
                    record_points: 2,
                    ..Default::default()
                };
                Some(
                    adiabatic_protocol_run(p, &Perturbation::Magnetic(b.clone()), &opts)?.sigma_z
                        [0],
                )
            } else {
                None
            };
            adiabatic_magnetic_report(p, &b, sigma, t_final, n)?
        }
        Protocol::Squeezed(mode) => {
            let f = m.force.clone().expect("checked in sweep_spec");
            let moments = if spec.numeric {
                let t_star = squeeze_displace_params(p, &f, mode)?.t_star;
                let opts = ConstantDriveOptions {
                    record_points: 2,
                    ..ConstantDriveOptions::new(t_star, DriveModel::Full)
                };
                let tr = constant_drive_run(p, &f, &opts)?;
                let label = mode.label();
                Some(Readout::Phonon {
                    mean: tr.final_value(&format!("n_{label}")).expect("recorded"),
                    second_moment: tr.final_value(&format!("n2_{label}")).expect("recorded"),
                })
            } else {
                None
            };
            cho_force_report(p, &f, mode, moments, n)?
        }
    };
    Ok(report)
}

/// Evaluates every point on `jobs` workers; rows come back in axis order.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Vec<SweepRow> {
    parallel_map(&spec.values, jobs, |_, &v| SweepRow {
        axis: v,
        report: point(spec, v).map_err(|e| e.to_string()),
    })
}

pub fn write_sweep(spec: &SweepSpec, rows: &[SweepRow], path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        spec.parameter.as_str(),
        "signal",
        "snr",
        "I_cl",
        "I_Q",
        "min_detectable",
        "error",
    ])?;
    for row in rows {
        let mut rec = vec![format_number(row.axis)];
        match &row.report {
            Ok(r) => {
                let i_q = match r.fisher_quantum.value {
                    Sensitivity::Finite(v) => v,
                    Sensitivity::Divergent => f64::INFINITY,
                };
                let min = r.min_detectable.map_or(f64::NAN, |q| q.value);
                rec.extend(
                    [r.signal, r.snr, r.fisher_classical.value, i_q, min]
                        .iter()
                        .map(|v| format_number(*v)),
                );
                rec.push(String::new());
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(format_number(f64::NAN), 5));
                rec.push(e.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Validates, runs and writes `<name>_sweep.csv` into `out_dir`. Nothing
/// is written when validation fails.
pub fn sweep_file(path: &Path, out_dir: &Path, jobs: usize) -> CliResult<(PathBuf, Vec<SweepRow>)> {
    let doc = config::read_document(path)?;
    let spec = sweep_spec(&doc)?;
    let rows = run_sweep(&spec, jobs);
    std::fs::create_dir_all(out_dir)?;
    let out = out_dir.join(format!("{}_sweep.csv", spec.name));
    write_sweep(&spec, &rows, &out)?;
    Ok((out, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use iongrad::models::config::parse_document;

    const MAGNETIC: &str = "\
[scenario]
protocol = adiabatic_magnetic
[probe]
num_ions = 2
omega0 = 925 krad_s
gamma = 0.1 krad_s
delta = 50 krad_s
kappa = 11 krad_s
g = 25 krad_s
x0 = 14.5 nm
n_max = 4
[magnetic]
B0 = 0 T
Bprime = 4e-11 T_per_um
z = 4, 0 um
gJ = 2
[sweep]
parameter = probe.gamma
from = 0.05 krad_s
to = 0.2 krad_s
points = 4
";

    #[test]
    fn gamma_sweep_rows_in_order() {
        let spec = sweep_spec(&parse_document(MAGNETIC).unwrap()).unwrap();
        let rows = run_sweep(&spec, 3);
        assert_eq!(rows.len(), 4);
        for w in rows.windows(2) {
            assert!(w[0].axis < w[1].axis);
            // Faster sweeps wash out the signal.
            let (a, b) = (w[0].report.as_ref().unwrap(), w[1].report.as_ref().unwrap());
            assert!(a.signal.abs() > b.signal.abs());
        }
    }

    #[test]
    fn empty_range_rejected() {
        let text = MAGNETIC.replace("to = 0.2 krad_s", "to = 0.05 krad_s");
        assert!(matches!(
            sweep_spec(&parse_document(&text).unwrap()),
            Err(CliError::Config(_))
        ));
        let text = MAGNETIC.replace("points = 4", "points = 1");
        assert!(sweep_spec(&parse_document(&text).unwrap()).is_err());
    }

    #[test]
    fn unknown_axis_rejected() {
        let text = MAGNETIC.replace("probe.gamma", "probe.colour");
        assert!(sweep_spec(&parse_document(&text).unwrap()).is_err());
    }

    #[test]
    fn zeta_axis_sets_mode_coupling() {
        let text = "\
[scenario]
protocol = squeezed
mode = rock
[probe]
num_ions = 2
omega0 = 300 krad_s
gamma = 0 krad_s
delta = 0.6 krad_s
kappa = 0.28 krad_s
g = 2.5 krad_s
phi = 0.333333333333 pi
x0 = 14.5 nm
n_max = 4
[force]
F = 7, 5 yN
xi = 0.5 pi
[sweep]
parameter = zeta_sq
from = 0.1
to = 0.9
points = 3
";
        let spec = sweep_spec(&parse_document(text).unwrap()).unwrap();
        let m = spec.axis.apply(&spec.model, spec.protocol, 0.5).unwrap();
        let sd = squeeze_displace_params(&m.probe, m.force.as_ref().unwrap(), CollectiveMode::Rock)
            .unwrap();
        assert!((sd.zeta_sq - 0.5).abs() < 1e-12);
    }
}

//! Parameter files: `[section]` headers, `key = value unit` lines, `#`
//! comments. Every dimensional value must carry a unit suffix; lists share
//! one trailing unit (`F = 3.78, 0.95 yN`).

use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::params::{
    hopping_from_trap, CoulombConvention, ForceField, MagneticField, ProbeParams, TrapGeometry,
};
use super::units::{self, AMU, E_CHARGE, YN};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    /// 1-based column where the value starts.
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Fail on any key outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for e in &self.entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(Error::Config {
                    line: e.line,
                    column: 1,
                    message: format!(
                        "unknown key `{}` in [{}] (expected one of: {})",
                        e.key,
                        self.name,
                        allowed.join(", ")
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn require(&self, key: &str) -> Result<&Entry> {
        self.get(key).ok_or_else(|| Error::Config {
            line: self.line,
            column: 1,
            message: format!("[{}] is missing required key `{key}`", self.name),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

pub fn parse_document(text: &str) -> Result<Document> {
    let mut doc = Document::default();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        };
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                line,
                column: indent + 1,
                message: "unterminated section header".into(),
            })?;
            let name = name.trim().to_string();
            if doc.section(&name).is_some() {
                return Err(Error::Config {
                    line,
                    column: indent + 1,
                    message: format!("duplicate section [{name}]"),
                });
            }
            doc.sections.push(Section {
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let eq = body.find('=').ok_or_else(|| Error::Config {
            line,
            column: indent + 1,
            message: "expected `key = value`".into(),
        })?;
        let key = body[..eq].trim().to_string();
        if key.is_empty() {
            return Err(Error::Config {
                line,
                column: indent + 1,
                message: "empty key".into(),
            });
        }
        let after = &body[eq + 1..];
        let value = after.trim().to_string();
        let column = eq + 2 + (after.len() - after.trim_start().len());
        let section = doc.sections.last_mut().ok_or_else(|| Error::Config {
            line,
            column: indent + 1,
            message: "key outside of any [section]".into(),
        })?;
        if section.get(&key).is_some() {
            return Err(Error::Config {
                line,
                column: indent + 1,
                message: format!("duplicate key `{key}`"),
            });
        }
        section.entries.push(Entry {
            key,
            value,
            line,
            column,
        });
    }
    Ok(doc)
}

/// Physical dimension of a config value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Internal unit krad/s.
    Frequency,
    /// Internal unit ms.
    Time,
    Force,
    Length,
    MagneticField,
    Gradient,
    Mass,
    Charge,
    Angle,
    Dimensionless,
}

impl Dimension {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Frequency => &[
                ("krad_s", 1.0),
                ("kHz_paper", 1.0),
                ("MHz_paper", 1e3),
                ("Hz_si", 1e-3),
                ("rad_s", 1e-3),
                ("Hz_cyc", 2.0 * PI * 1e-3),
                ("kHz_cyc", 2.0 * PI),
                ("MHz_cyc", 2.0 * PI * 1e3),
            ],
            Dimension::Time => &[
                ("ms", 1.0),
                ("s", 1e3),
                ("us", 1e-3),
                ("inv_gamma", f64::NAN),
            ],
            Dimension::Force => &[("N", 1.0), ("yN", YN)],
            Dimension::Length => &[("m", 1.0), ("um", 1e-6), ("nm", 1e-9)],
            Dimension::MagneticField => &[("T", 1.0), ("mT", 1e-3), ("uT", 1e-6), ("nT", 1e-9)],
            Dimension::Gradient => &[("T_per_m", 1.0), ("T_per_um", 1e6)],
            Dimension::Mass => &[("kg", 1.0), ("amu", AMU)],
            Dimension::Charge => &[("C", 1.0), ("e", E_CHARGE)],
            Dimension::Angle => &[("rad", 1.0), ("deg", PI / 180.0), ("pi", PI)],
            Dimension::Dimensionless => &[],
        }
    }

    pub fn internal_unit(self) -> &'static str {
        match self {
            Dimension::Frequency => "krad/s",
            Dimension::Time => "ms",
            Dimension::Force => "N",
            Dimension::Length => "m",
            Dimension::MagneticField => "T",
            Dimension::Gradient => "T/m",
            Dimension::Mass => "kg",
            Dimension::Charge => "C",
            Dimension::Angle => "rad",
            Dimension::Dimensionless => "",
        }
    }
}

fn config_err(e: &Entry, offset: usize, message: String) -> Error {
    Error::Config {
        line: e.line,
        column: e.column + offset,
        message,
    }
}

/// Values of an entry in the dimension's base unit, plus the unit suffix as
/// written. `inv_gamma` times are returned as multiples (NaN factor marks
/// them for the caller).
pub fn parse_values(e: &Entry, dim: Dimension) -> Result<(Vec<f64>, Option<String>)> {
    let v = e.value.trim();
    if v.is_empty() {
        return Err(config_err(e, 0, format!("`{}` has no value", e.key)));
    }
    let (numbers, unit) = match v.rfind(|ch: char| ch.is_whitespace()) {
        Some(k) if v[k + 1..].starts_with(|ch: char| ch.is_ascii_alphabetic()) => {
            (&v[..k], Some(&v[k + 1..]))
        }
        _ => (v, None),
    };
    let factor = match (dim, unit) {
        (Dimension::Dimensionless, None) => 1.0,
        (Dimension::Dimensionless, Some(u)) => {
            return Err(config_err(
                e,
                numbers.len() + 1,
                format!("`{}` is dimensionless but has unit `{u}`", e.key),
            ))
        }
        (_, None) => {
            let names: Vec<_> = dim.units().iter().map(|(n, _)| *n).collect();
            return Err(config_err(
                e,
                v.len(),
                format!(
                    "`{}` needs a unit suffix (one of: {})",
                    e.key,
                    names.join(", ")
                ),
            ));
        }
        (_, Some(u)) => match dim.units().iter().find(|(n, _)| *n == u) {
            Some(&(_, f)) => f,
            None => {
                let names: Vec<_> = dim.units().iter().map(|(n, _)| *n).collect();
                return Err(config_err(
                    e,
                    numbers.len() + 1,
                    format!(
                        "unknown unit `{u}` for `{}` (expected {})",
                        e.key,
                        names.join(", ")
                    ),
                ));
            }
        },
    };
    let mut out = Vec::new();
    let mut offset = 0;
    for item in numbers.split(',') {
        let lead = item.len() - item.trim_start().len();
        let tok = item.trim();
        let x: f64 = tok
            .parse()
            .map_err(|_| config_err(e, offset + lead, format!("`{tok}` is not a number")))?;
        out.push(if factor.is_nan() { x } else { x * factor });
        offset += item.len() + 1;
    }
    Ok((out, unit.map(str::to_string)))
}

pub fn parse_scalar(e: &Entry, dim: Dimension) -> Result<f64> {
    let (v, _) = parse_values(e, dim)?;
    if v.len() != 1 {
        return Err(config_err(
            e,
            0,
            format!("`{}` expects a single value", e.key),
        ));
    }
    Ok(v[0])
}

fn parse_count(e: &Entry) -> Result<usize> {
    let x = parse_scalar(e, Dimension::Dimensionless)?;
    if x < 0.0 || x.fract() != 0.0 {
        return Err(config_err(
            e,
            0,
            format!("`{}` must be a non-negative integer", e.key),
        ));
    }
    Ok(x as usize)
}

/// Final time: either absolute, or in multiples of 1/γ (`inv_gamma`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FinalTime {
    Absolute(f64),
    InverseGamma(f64),
}

impl FinalTime {
    pub fn resolve(self, gamma: f64) -> f64 {
        match self {
            FinalTime::Absolute(t) => t,
            FinalTime::InverseGamma(k) => k / gamma,
        }
    }
}

/// Typed content of the physics sections of a parameter file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub probe: ProbeParams,
    pub force: Option<ForceField>,
    pub magnetic: Option<MagneticField>,
    pub trap: Option<TrapGeometry>,
    pub coulomb: CoulombConvention,
    pub t_final: Option<FinalTime>,
    /// Human-readable echo of every interpreted value in internal units.
    pub echo: Vec<String>,
}

const PROBE_KEYS: &[&str] = &[
    "num_ions", "omega0", "gamma", "delta", "kappa", "g", "g_list", "phi", "x0", "n_max", "t_final",
];
const FORCE_KEYS: &[&str] = &["F", "eps", "xi"];
const MAGNETIC_KEYS: &[&str] = &["B0", "Bprime", "z", "gJ"];
const TRAP_KEYS: &[&str] = &["mass", "charge", "omega_x", "dz", "coulomb"];

impl ModelConfig {
    /// Interpret `[probe]`, `[force]`, `[magnetic]` and `[trap]`. Sections
    /// named in `extra_sections` are left to the caller; any other section
    /// is an error.
    pub fn from_document(doc: &Document, extra_sections: &[&str]) -> Result<Self> {
        for s in &doc.sections {
            let known = ["probe", "force", "magnetic", "trap"].contains(&s.name.as_str());
            if !known && !extra_sections.contains(&s.name.as_str()) {
                return Err(Error::Config {
                    line: s.line,
                    column: 1,
                    message: format!("unknown section [{}]", s.name),
                });
            }
        }
        let probe_sec = doc.section("probe").ok_or_else(|| Error::Config {
            line: 1,
            column: 1,
            message: "missing [probe] section".into(),
        })?;
        probe_sec.check_keys(PROBE_KEYS)?;
        let mut echo = Vec::new();
        let freq = |key: &str, sec: &Section, echo: &mut Vec<String>| -> Result<f64> {
            let v = parse_scalar(sec.require(key)?, Dimension::Frequency)?;
            echo.push(format!("{key} = {v} krad/s"));
            Ok(v)
        };

        let trap = match doc.section("trap") {
            Some(s) => {
                s.check_keys(TRAP_KEYS)?;
                let t = TrapGeometry {
                    mass: parse_scalar(s.require("mass")?, Dimension::Mass)?,
                    charge: match s.get("charge") {
                        Some(e) => parse_scalar(e, Dimension::Charge)?,
                        None => E_CHARGE,
                    },
                    omega_x: units::internal_to_rad_s(parse_scalar(
                        s.require("omega_x")?,
                        Dimension::Frequency,
                    )?),
                    dz: parse_scalar(s.require("dz")?, Dimension::Length)?,
                };
                Some((t, s))
            }
            None => None,
        };
        let coulomb = match trap.as_ref().and_then(|(_, s)| s.get("coulomb")) {
            None => CoulombConvention::Si,
            Some(e) => match e.value.as_str() {
                "si" => CoulombConvention::Si,
                "gaussian" => CoulombConvention::GaussianLiteral,
                other => {
                    return Err(config_err(
                        e,
                        0,
                        format!("coulomb must be `si` or `gaussian`, got `{other}`"),
                    ))
                }
            },
        };

        let num_ions = parse_count(probe_sec.require("num_ions")?)?;
        let omega0 = freq("omega0", probe_sec, &mut echo)?;
        let gamma = freq("gamma", probe_sec, &mut echo)?;
        let delta = freq("delta", probe_sec, &mut echo)?;
        let kappa = match (probe_sec.get("kappa"), &trap) {
            (Some(_), _) => freq("kappa", probe_sec, &mut echo)?,
            (None, Some((t, _))) => {
                let k = hopping_from_trap(t, coulomb)?;
                echo.push(format!("kappa = {k} krad/s (from [trap], {coulomb:?})"));
                k
            }
            (None, None) => return Err(probe_sec.require("kappa").unwrap_err()),
        };
        let x0 = parse_scalar(probe_sec.require("x0")?, Dimension::Length)?;
        echo.push(format!("x0 = {x0} m"));
        let phi = match probe_sec.get("phi") {
            Some(e) => parse_scalar(e, Dimension::Angle)?,
            None => 0.0,
        };
        let mut probe = match (probe_sec.get("g"), probe_sec.get("g_list")) {
            (Some(e), None) => {
                let g = parse_scalar(e, Dimension::Frequency)?;
                ProbeParams::uniform(num_ions, omega0, gamma, delta, kappa, g, phi, x0)
                    .map_err(|err| config_err(e, 0, err.to_string()))?
            }
            (None, Some(e)) => {
                let (g, _) = parse_values(e, Dimension::Frequency)?;
                let p = ProbeParams {
                    num_ions,
                    omega0,
                    gamma,
                    delta,
                    kappa,
                    g,
                    phi: vec![phi; num_ions],
                    x0,
                    n_max: crate::hilbert::DEFAULT_NMAX,
                };
                p.validate()
                    .map_err(|err| config_err(e, 0, err.to_string()))?;
                p
            }
            (Some(e), Some(_)) => {
                return Err(config_err(
                    e,
                    0,
                    "give either `g` or `g_list`, not both".into(),
                ))
            }
            (None, None) => return Err(probe_sec.require("g").unwrap_err()),
        };
        echo.push(format!("g = {:?} krad/s, phi = {phi} rad", probe.g));
        if let Some(e) = probe_sec.get("n_max") {
            probe.n_max = parse_count(e)?;
            probe
                .validate()
                .map_err(|err| config_err(e, 0, err.to_string()))?;
        }
        echo.push(format!("n_max = {}", probe.n_max));
        let t_final = match probe_sec.get("t_final") {
            Some(e) => {
                let (v, unit) = parse_values(e, Dimension::Time)?;
                if v.len() != 1 {
                    return Err(config_err(e, 0, "`t_final` expects a single value".into()));
                }
                let t = if unit.as_deref() == Some("inv_gamma") {
                    FinalTime::InverseGamma(v[0])
                } else {
                    FinalTime::Absolute(v[0])
                };
                echo.push(format!("t_final = {} ms", t.resolve(gamma)));
                Some(t)
            }
            None => None,
        };

        let force = match doc.section("force") {
            Some(s) => {
                s.check_keys(FORCE_KEYS)?;
                let xi = match s.get("xi") {
                    Some(e) => parse_scalar(e, Dimension::Angle)?,
                    None => 0.0,
                };
                let f = match (s.get("F"), s.get("eps")) {
                    (Some(e), None) => ForceField::new(parse_values(e, Dimension::Force)?.0, xi),
                    (None, Some(e)) => {
                        ForceField::from_rates(&parse_values(e, Dimension::Frequency)?.0, xi, x0)
                    }
                    (Some(e), Some(_)) => {
                        return Err(config_err(
                            e,
                            0,
                            "give either `F` or `eps`, not both".into(),
                        ))
                    }
                    (None, None) => return Err(s.require("F").unwrap_err()),
                };
                let entry = s.get("F").or(s.get("eps")).expect("checked above");
                f.check_len(num_ions)
                    .map_err(|err| config_err(entry, 0, err.to_string()))?;
                for (j, (force, rate)) in f.forces.iter().zip(f.rates(x0)).enumerate() {
                    echo.push(format!(
                        "F{} = {force:.6e} N (eps = {rate:.6} krad/s)",
                        j + 1
                    ));
                }
                echo.push(format!("xi = {xi} rad"));
                Some(f)
            }
            None => None,
        };

        let magnetic = match doc.section("magnetic") {
            Some(s) => {
                s.check_keys(MAGNETIC_KEYS)?;
                let b = MagneticField {
                    b0: match s.get("B0") {
                        Some(e) => parse_scalar(e, Dimension::MagneticField)?,
                        None => 0.0,
                    },
                    bprime: parse_scalar(s.require("Bprime")?, Dimension::Gradient)?,
                    z_positions: parse_values(s.require("z")?, Dimension::Length)?.0,
                    g_j: match s.get("gJ") {
                        Some(e) => parse_scalar(e, Dimension::Dimensionless)?,
                        None => 2.0,
                    },
                };
                b.check_len(num_ions).map_err(|err| {
                    config_err(s.require("z").expect("present"), 0, err.to_string())
                })?;
                echo.push(format!(
                    "B0 = {} T, Bprime = {} T/m, gJ = {}, detunings = {:?} krad/s",
                    b.b0,
                    b.bprime,
                    b.g_j,
                    b.detunings()
                ));
                Some(b)
            }
            None => None,
        };

        Ok(ModelConfig {
            probe,
            force,
            magnetic,
            trap: trap.map(|(t, _)| t),
            coulomb,
            t_final,
            echo,
        })
    }

    pub fn from_str(text: &str, extra_sections: &[&str]) -> Result<Self> {
        Self::from_document(&parse_document(text)?, extra_sections)
    }
}

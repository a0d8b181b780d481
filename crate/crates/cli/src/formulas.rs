//! Direct closed-form evaluation for the `analytic` subcommand.

use serde_json::{json, Value};

use iongrad::analytic::{
    adiabatic_signal_force, adiabatic_signal_magnetic, classical_fisher, kappa_star_solve,
    minimal_detectable, phonon_snr_at_t_star, qfi_adiabatic, qfi_cho, squeeze_displace_params,
    CollectiveMode, Detectable, MagneticOrder, Parameter,
};
use iongrad::dynamics::{default_final_time, FranckCondon};
use iongrad::models::config::{parse_values, Dimension, Document};
use iongrad::models::ModelConfig;

use crate::error::{CliError, CliResult};

/// Formula names and the canned figure used when no config is given.
pub const FORMULAS: &[(&str, &str)] = &[
    ("signal-force", "fig1"),
    ("signal-magnetic", "fig2"),
    ("fmin", "fig1"),
    ("bmin", "fig2"),
    ("kappa-star", "fig4"),
    ("phonon-signal", "fig4"),
    ("qfi", "fig1"),
];

pub fn default_figure(formula: &str) -> Option<&'static str> {
    FORMULAS
        .iter()
        .find(|(f, _)| *f == formula)
        .map(|(_, fig)| *fig)
}

fn need<T: Clone>(x: &Option<T>, section: &str) -> CliResult<T> {
    x.clone()
        .ok_or_else(|| CliError::Config(format!("formula needs a [{section}] section")))
}

/// `Ok` values as JSON, failures as `null`.
fn or_null<T: serde::Serialize, E>(r: Result<T, E>) -> Value {
    r.ok().map_or(Value::Null, |v| json!(v))
}

pub fn evaluate(formula: &str, m: &ModelConfig, doc: &Document) -> CliResult<Value> {
    let p = &m.probe;
    let t_final = || -> CliResult<f64> {
        Ok(match m.t_final {
            Some(t) => t.resolve(p.gamma),
            None => default_final_time(p)?,
        })
    };
    Ok(match formula {
        "signal-force" => {
            let f = need(&m.force, "force")?;
            let s = adiabatic_signal_force(p, &f)?;
            json!({ "sigma1z": s.sigma1z, "p_up": s.p_up, "F_minus_N": f.difference() })
        }
        "signal-magnetic" => {
            let b = need(&m.magnetic, "magnetic")?;
            json!({
                "sigma1z_antiferro": adiabatic_signal_magnetic(p, &b, MagneticOrder::Antiferro)?,
                "sigma1z_ferro": adiabatic_signal_magnetic(p, &b, MagneticOrder::Ferro)?,
            })
        }
        "fmin" => json!({
            "adiabatic_N": minimal_detectable(p, Detectable::ForceAdiabatic)?,
            "squeezed_com_N": or_null(minimal_detectable(p, Detectable::ForceCho(CollectiveMode::Com))),
            "squeezed_rock_N": or_null(minimal_detectable(p, Detectable::ForceCho(CollectiveMode::Rock))),
        }),
        "bmin" => {
            let b = need(&m.magnetic, "magnetic")?;
            b.check_len(2)?;
            let dz = b.z_positions[0] - b.z_positions[1];
            json!({
                "Bprime_min_T_per_m": minimal_detectable(p, Detectable::MagneticGradient { dz, g_j: b.g_j })?,
            })
        }
        "kappa-star" => {
            let orders = match doc
                .section("figure")
                .and_then(|s| s.get("kappa_star_orders"))
            {
                Some(e) => parse_values(e, Dimension::Dimensionless)?.0,
                None => vec![3.0, 1.0],
            };
            let [kc, kr] = orders[..] else {
                return Err(CliError::Config(
                    "kappa_star_orders takes two odd integers".into(),
                ));
            };
            let zeta_sq = 4.0 * p.g[0] * p.g[0] / (p.omega0 * p.delta);
            json!(kappa_star_solve(p.delta, zeta_sq, kc as u32, kr as u32)?)
        }
        "phonon-signal" => {
            let f = need(&m.force, "force")?;
            let mut out = serde_json::Map::new();
            for mode in [CollectiveMode::Com, CollectiveMode::Rock] {
                let sd = squeeze_displace_params(p, &f, mode)?;
                out.insert(
                    mode.label().into(),
                    json!({
                        "alpha_re": sd.alpha.re,
                        "alpha_im": sd.alpha.im,
                        "zeta_sq": sd.zeta_sq,
                        "t_star_ms": sd.t_star,
                        "n_at_t_star": 4.0 * sd.alpha.norm_sqr(),
                        "snr_at_t_star": phonon_snr_at_t_star(&sd),
                    }),
                );
            }
            Value::Object(out)
        }
        "qfi" => {
            let f = need(&m.force, "force")?;
            let cho = |mode, which| {
                squeeze_displace_params(p, &f, mode).map(|sd| qfi_cho(&sd, which, p.phi[0], f.xi))
            };
            let mut out = json!({
                "t_final_ms": Value::Null,
                "adiabatic_force_I_cl": or_null(classical_fisher(p, &f, Parameter::Force)),
                "adiabatic_phase_I_cl": or_null(classical_fisher(p, &f, Parameter::Phase)),
                "squeezed_com_force_I_Q": or_null(cho(CollectiveMode::Com, Parameter::Force)),
                "squeezed_rock_force_I_Q": or_null(cho(CollectiveMode::Rock, Parameter::Force)),
            });
            if let Ok(t) = t_final() {
                out["t_final_ms"] = json!(t);
                out["adiabatic_force_I_Q"] = or_null(qfi_adiabatic(
                    p,
                    &f,
                    Parameter::Force,
                    t,
                    FranckCondon::Include,
                ));
                out["adiabatic_phase_I_Q"] = or_null(qfi_adiabatic(
                    p,
                    &f,
                    Parameter::Phase,
                    t,
                    FranckCondon::Include,
                ));
            }
            out
        }
        other => {
            let names: Vec<&str> = FORMULAS.iter().map(|(f, _)| *f).collect();
            return Err(CliError::Config(format!(
                "unknown formula `{other}` (available: {})",
                names.join(", ")
            )));
        }
    })
}

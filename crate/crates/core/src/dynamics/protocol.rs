use log::warn;
use serde::Serialize;

use super::{propagate, Integrator, PropagationConfig, StepStats, TermSum, Trajectory};
use crate::analytic::adiabatic::ising_couplings;
use crate::analytic::demkov::{demkov_parameters, FranckCondon};
use crate::error::{Error, Result};
use crate::hilbert::{number_op, pauli_op, Axis, BasisDescriptor, Operator, SpinState, State};
use crate::models::{
    build_force_term, build_magnetic_term, collective_transform, ForceField, MagneticField,
    ProbeParams, RabiLattice,
};
use crate::scalar::c;

/// What the probe is exposed to during the sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    None,
    Force(ForceField),
    Magnetic(MagneticField),
    Both(ForceField, MagneticField),
}

impl Perturbation {
    pub fn force(&self) -> Option<&ForceField> {
        match self {
            Perturbation::Force(f) | Perturbation::Both(f, _) => Some(f),
            _ => None,
        }
    }

    pub fn magnetic(&self) -> Option<&MagneticField> {
        match self {
            Perturbation::Magnetic(b) | Perturbation::Both(_, b) => Some(b),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOptions {
    /// Defaults to [`default_final_time`].
    pub t_final: Option<f64>,
    pub tolerance: f64,
    pub integrator: Integrator,
    pub record_points: usize,
    /// Also record `p_<label>` traces of every spin configuration.
    pub track_configurations: bool,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions {
            t_final: None,
            tolerance: 1e-8,
            integrator: Integrator::default(),
            record_points: 500,
            track_configurations: false,
        }
    }
}

/// End-of-sweep readout of one full propagation.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolOutcome {
    pub t_final: f64,
    /// `⟨σz_j⟩` per ion.
    pub sigma_z: Vec<f64>,
    /// Spin-up probability per ion.
    pub p_up: Vec<f64>,
    /// Probabilities of the σz product configurations, labelled by `u`/`d`
    /// strings with ion 1 first.
    pub configurations: Vec<(String, f64)>,
    pub norm_drift: f64,
    pub stats: StepStats,
    /// Time traces of `sz<j>`, `n<j>` (local occupation) and, when
    /// requested, `p_<label>`.
    #[serde(skip)]
    pub trajectory: Trajectory<f64>,
}

impl ProtocolOutcome {
    pub fn configuration(&self, label: &str) -> Option<f64> {
        self.configurations
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| *p)
    }
}

/// `max(8/γ, ln(x/2 / 10⁻³)/2γ)` with `x = Δ_c/2γ`: long enough that the
/// residual coupling `(x/2)e^{−2γt}` of the ground manifold has died out.
/// For more than two ions the Franck–Condon overlap is dropped, which can
/// only lengthen the sweep.
pub fn default_final_time(p: &ProbeParams) -> Result<f64> {
    if !(p.gamma > 0.0) {
        return Err(Error::Precondition(format!(
            "sweep needs gamma > 0, got {}",
            p.gamma
        )));
    }
    let floor = 8.0 / p.gamma;
    let j = ising_couplings(p)?
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if j == 0.0 {
        return Ok(floor);
    }
    let delta_c = if p.num_ions == 2 {
        demkov_parameters(p, None, None, FranckCondon::Include)?.1
    } else {
        p.omega0 * p.omega0 / (4.0 * j)
    };
    let x = delta_c / (2.0 * p.gamma);
    Ok(floor.max((0.5 * x / 1e-3).ln() / (2.0 * p.gamma)))
}

/// All σz product configurations as `(label, up)`, `uu…u` first.
fn spin_configurations(n: usize) -> Vec<(String, Vec<bool>)> {
    (0..1usize << n)
        .map(|mask| {
            let up: Vec<bool> = (0..n).map(|j| mask >> (n - 1 - j) & 1 == 0).collect();
            (up.iter().map(|&u| if u { 'u' } else { 'd' }).collect(), up)
        })
        .collect()
}

/// Diagonal projector onto the spin configuration `up`, identity on modes.
fn configuration_projector(basis: &BasisDescriptor, up: &[bool]) -> Result<Operator<f64>> {
    let triplets = (0..basis.dim())
        .filter(|&i| {
            let d = basis.digits(i);
            up.iter().zip(&d).all(|(&u, &k)| (k == 0) == u)
        })
        .map(|i| (i, i, c(1.0, 0.0)))
        .collect();
    Operator::from_triplets(basis.clone(), triplets)
}

/// Sweep from `|−…−⟩|0…0⟩` under the lattice Hamiltonian plus the
/// perturbation, then read out the spins.
pub fn adiabatic_protocol_run(
    p: &ProbeParams,
    perturbation: &Perturbation,
    opts: &ProtocolOptions,
) -> Result<ProtocolOutcome> {
    p.validate()?;
    let t_final = match opts.t_final {
        Some(t) => t,
        None => default_final_time(p)?,
    };
    if t_final * p.gamma < 5.0 {
        return Err(Error::Precondition(format!(
            "sweep too short: gamma * t_final = {} (need >= 5)",
            t_final * p.gamma
        )));
    }
    let spec = collective_transform(p)?;
    let scale = spec
        .frequencies
        .iter()
        .chain(&p.g)
        .fold(0.0f64, |m, w| m.max(w.abs()));
    if p.omega0 < 5.0 * scale {
        warn!(
            "drive amplitude {} is not well above the mode frequencies and couplings (max {scale}); \
             the initial state is not close to the ground state",
            p.omega0
        );
    }

    let lattice = RabiLattice::<f64>::new(p)?;
    let basis = lattice.basis().clone();
    let mut static_part = lattice.static_part.clone();
    if let Some(f) = perturbation.force() {
        static_part = static_part.add(&build_force_term(p, f)?)?;
    }
    if let Some(b) = perturbation.magnetic() {
        static_part = static_part.add(&build_magnetic_term(b, &basis)?)?;
    }
    let params = p.clone();
    let ham = TermSum::new(basis.clone())
        .with_static(static_part)?
        .with_term(lattice.drive.clone(), move |t| params.omega_at(t))?;

    let n = p.num_ions;
    let mut cfg = PropagationConfig::<f64>::new(t_final)
        .with_tolerance(opts.tolerance)
        .with_integrator(opts.integrator)
        .with_record_points(opts.record_points);
    for j in 0..n {
        cfg = cfg.observe(format!("sz{}", j + 1), pauli_op(&basis, j, Axis::Z)?);
    }
    for j in 0..n {
        cfg = cfg.observe(format!("n{}", j + 1), number_op(&basis, j)?);
    }

    if opts.track_configurations {
        for (label, up) in spin_configurations(n) {
            cfg = cfg.observe(format!("p_{label}"), configuration_projector(&basis, &up)?);
        }
    }

    let psi0 = State::<f64>::product(basis, &vec![SpinState::Minus; n], &vec![0; n])?;
    let traj = propagate(&ham, &psi0, &cfg)?;
    let psi = &traj.final_state;
    let sigma_z: Vec<f64> = (0..n)
        .map(|j| traj.final_value(&format!("sz{}", j + 1)).expect("recorded"))
        .collect();
    let p_up = sigma_z.iter().map(|s| 0.5 * (1.0 + s)).collect();
    let configurations = spin_configurations(n)
        .into_iter()
        .map(|(label, up)| Ok((label, psi.spin_configuration_probability(&up)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolOutcome {
        t_final,
        sigma_z,
        p_up,
        configurations,
        norm_drift: traj.norm_drift,
        stats: traj.stats,
        trajectory: traj,
    })
}

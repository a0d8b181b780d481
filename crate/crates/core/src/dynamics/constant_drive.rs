//! Evolution at constant drive `Ω = Ω(0)`, where each collective mode
//! becomes a squeezed, displaced oscillator.

use serde::Serialize;

use super::{propagate, Integrator, PropagationConfig, TermSum, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::{annihilation_op, BasisDescriptor, Operator, SpinState, State};
use crate::models::{
    build_effective_bosonic, build_force_term, collective_transform, ForceField, ProbeParams,
    RabiLattice,
};
use crate::scalar::c;

/// Which Hamiltonian to propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum DriveModel {
    /// Spins and phonons under the lattice Hamiltonian plus the force.
    #[default]
    Full,
    /// Phonons only, with the spins eliminated at order g²/Ω.
    Effective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantDriveOptions {
    pub t_final: f64,
    pub tolerance: f64,
    pub integrator: Integrator,
    pub record_points: usize,
    pub model: DriveModel,
}

impl ConstantDriveOptions {
    pub fn new(t_final: f64, model: DriveModel) -> Self {
        ConstantDriveOptions {
            t_final,
            tolerance: 1e-9,
            integrator: Integrator::default(),
            record_points: 200,
            model,
        }
    }
}

/// `b_q†b_q` with `b_q = Σ_j U_jq a_j`, on the modes of `basis`.
fn collective_number(
    basis: &BasisDescriptor,
    vectors: &[f64],
    n: usize,
    q: usize,
) -> Result<Operator<f64>> {
    let mut terms = Vec::with_capacity(n);
    let ops = (0..n)
        .map(|j| annihilation_op::<f64>(basis, j))
        .collect::<Result<Vec<_>>>()?;
    for (j, a) in ops.iter().enumerate() {
        terms.push((c(vectors[j * n + q], 0.0), a));
    }
    let b = Operator::linear_combination(&terms)?;
    b.adjoint().matmul(&b)
}

/// Propagates from the vibrational ground state (spins in `|−…−⟩` for the
/// full model) and records `n_<label>` and `n2_<label>` (`⟨n²⟩`) for every
/// collective mode.
pub fn constant_drive_run(
    p: &ProbeParams,
    f: &ForceField,
    opts: &ConstantDriveOptions,
) -> Result<Trajectory<f64>> {
    p.validate()?;
    f.check_len(p.num_ions)?;
    if !(opts.t_final > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "final time must be positive, got {}",
            opts.t_final
        )));
    }
    let n = p.num_ions;
    let spec = collective_transform(p)?;
    let (ham, psi0) = match opts.model {
        DriveModel::Full => {
            let lattice = RabiLattice::<f64>::new(p)?;
            let basis = lattice.basis().clone();
            let h = lattice.at(0.0)?.add(&build_force_term(p, f)?)?;
            let psi0 = State::product(basis.clone(), &vec![SpinState::Minus; n], &vec![0; n])?;
            (TermSum::new(basis).with_static(h)?, psi0)
        }
        DriveModel::Effective => {
            let h = build_effective_bosonic::<f64>(p, f)?;
            let basis = h.basis().clone();
            let psi0 = State::basis_state(basis.clone(), 0)?;
            (TermSum::new(basis).with_static(h)?, psi0)
        }
    };
    let basis = psi0.basis().clone();
    let mut cfg = PropagationConfig::<f64>::new(opts.t_final)
        .with_tolerance(opts.tolerance)
        .with_integrator(opts.integrator)
        .with_record_points(opts.record_points);
    for (q, label) in spec.labels.iter().enumerate() {
        let num = collective_number(&basis, &spec.vectors, n, q)?;
        cfg = cfg
            .observe(format!("n2_{label}"), num.matmul(&num)?)
            .observe(format!("n_{label}"), num);
    }
    let traj = propagate(&ham, &psi0, &cfg)?;
    let top = (0..n)
        .map(|j| traj.final_state.top_population(j, 1))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    if top > 1e-6 {
        log::warn!("last Fock level holds {top:e} of the final state; raise n_max");
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::adiabatic::CollectiveMode;
    use crate::analytic::{mean_phonon_signal, squeeze_displace_params};

    fn weak() -> ProbeParams {
        ProbeParams::uniform(2, 300.0, 0.1, 0.6, 0.2, 2.5, 0.4, 14.5e-9)
            .unwrap()
            .with_n_max(24)
    }

    #[test]
    fn effective_model_matches_closed_form() {
        let p = weak();
        let f = ForceField::from_yoctonewtons(&[2.0, 1.0], 1.1);
        let sd_c = squeeze_displace_params(&p, &f, CollectiveMode::Com).unwrap();
        let sd_r = squeeze_displace_params(&p, &f, CollectiveMode::Rock).unwrap();
        let opts = ConstantDriveOptions {
            tolerance: 1e-11,
            record_points: 40,
            ..ConstantDriveOptions::new(sd_r.t_star, DriveModel::Effective)
        };
        let tr = constant_drive_run(&p, &f, &opts).unwrap();
        let (nc, nr) = (tr.column("n_com").unwrap(), tr.column("n_rock").unwrap());
        for (k, &t) in tr.times.iter().enumerate() {
            assert!((nc[k] - mean_phonon_signal(&sd_c, t)).abs() < 1e-7, "t={t}");
            assert!((nr[k] - mean_phonon_signal(&sd_r, t)).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn no_force_no_coupling_stays_in_vacuum() {
        let mut p = weak().with_n_max(4);
        p.g = vec![0.0, 0.0];
        let opts = ConstantDriveOptions::new(5.0, DriveModel::Full);
        let tr = constant_drive_run(&p, &ForceField::zero(2), &opts).unwrap();
        assert!(tr.column("n_com").unwrap().iter().all(|v| v.abs() < 1e-12));
        assert!(tr.norm_drift < 1e-9);
    }

    #[test]
    fn coherent_drive_has_poissonian_counts() {
        let mut p = weak().with_n_max(30);
        p.g = vec![0.0, 0.0];
        let f = ForceField::from_yoctonewtons(&[3.0, 1.0], 0.2);
        let opts = ConstantDriveOptions::new(6.0, DriveModel::Effective);
        let tr = constant_drive_run(&p, &f, &opts).unwrap();
        let (n, n2) = (tr.column("n_rock").unwrap(), tr.column("n2_rock").unwrap());
        for (m, m2) in n.iter().zip(&n2) {
            assert!((m2 - m * m - m).abs() < 1e-8);
        }
    }
}

use crate::error::{Error, Result};
use crate::hilbert::{self, Axis, BasisDescriptor, Operator};
use crate::scalar::{c, cr, Cplx, Real};

use super::collective::collective_transform;
use super::params::{ForceField, MagneticField, ProbeParams};

fn phase<T: Real>(theta: f64) -> Cplx<T> {
    c(T::lit(theta.cos()), T::lit(theta.sin()))
}

/// `Σ_j (β_j a†_j + β*_j a_j) ⊗ S_j` style sums share this shape; `spin`
/// selects whether σz_j multiplies the quadrature.
fn quadrature_sum<T: Real>(
    basis: &BasisDescriptor,
    amps: &[Cplx<T>],
    with_sigma_z: bool,
) -> Result<Operator<T>> {
    let mut ops = Vec::with_capacity(amps.len());
    for (j, &beta) in amps.iter().enumerate() {
        let a = hilbert::annihilation_op::<T>(basis, j)?;
        let quad = Operator::linear_combination(&[(beta, &a.adjoint()), (beta.conj(), &a)])?;
        let term = if with_sigma_z {
            hilbert::pauli_op(basis, j, Axis::Z)?.matmul(&quad)?
        } else {
            quad
        };
        ops.push(term);
    }
    sum(basis, &ops)
}

fn sum<T: Real>(basis: &BasisDescriptor, ops: &[Operator<T>]) -> Result<Operator<T>> {
    if ops.is_empty() {
        return Ok(Operator::zeros(basis.clone()));
    }
    let terms: Vec<_> = ops.iter().map(|o| (cr(T::one()), o)).collect();
    Operator::linear_combination(&terms)
}

/// `δ Σ a†_j a_j + κ Σ (a†_j a_{j+1} + h.c.)` on the first `num_modes` modes.
pub fn build_hopping<T: Real>(
    basis: &BasisDescriptor,
    num_modes: usize,
    delta: f64,
    kappa: f64,
) -> Result<Operator<T>> {
    let mut terms = Vec::new();
    let lowering: Vec<Operator<T>> = (0..num_modes)
        .map(|j| hilbert::annihilation_op(basis, j))
        .collect::<Result<_>>()?;
    for (j, a) in lowering.iter().enumerate() {
        terms.push(hilbert::number_op::<T>(basis, j)?.scale(cr(T::lit(delta))));
        if j + 1 < num_modes && kappa != 0.0 {
            let hop = a.adjoint().matmul(&lowering[j + 1])?;
            terms.push(hop.scale(cr(T::lit(kappa))));
            terms.push(hop.adjoint().scale(cr(T::lit(kappa))));
        }
    }
    sum(basis, &terms)
}

/// `½ Σ_j σx_j`; multiplied by Ω(t) in the full model.
pub fn build_drive<T: Real>(basis: &BasisDescriptor) -> Result<Operator<T>> {
    let ops: Vec<_> = (0..basis.num_spins())
        .map(|j| hilbert::pauli_op::<T>(basis, j, Axis::X))
        .collect::<Result<_>>()?;
    Ok(sum(basis, &ops)?.scale(cr(T::lit(0.5))))
}

/// `Σ_j g_j (e^{iφ_j} a†_j + e^{−iφ_j} a_j) σz_j`.
pub fn build_spin_phonon<T: Real>(p: &ProbeParams, basis: &BasisDescriptor) -> Result<Operator<T>> {
    let amps: Vec<Cplx<T>> =
        p.g.iter()
            .zip(&p.phi)
            .map(|(&g, &ph)| phase::<T>(ph) * T::lit(g))
            .collect();
    quadrature_sum(basis, &amps, true)
}

/// Time-independent and drive parts of the lattice Hamiltonian, kept apart so
/// propagation can rescale the drive without rebuilding matrices.
#[derive(Debug, Clone)]
pub struct RabiLattice<T: Real> {
    pub params: ProbeParams,
    /// Hopping plus spin-phonon coupling.
    pub static_part: Operator<T>,
    /// `½ Σ σx`, to be multiplied by Ω(t).
    pub drive: Operator<T>,
}

impl<T: Real> RabiLattice<T> {
    pub fn new(p: &ProbeParams) -> Result<Self> {
        p.validate()?;
        let basis = p.basis()?;
        let hx = build_hopping::<T>(&basis, p.num_ions, p.delta, p.kappa)?;
        let hsb = build_spin_phonon::<T>(p, &basis)?;
        Ok(RabiLattice {
            params: p.clone(),
            static_part: hx.add(&hsb)?,
            drive: build_drive(&basis)?,
        })
    }

    pub fn basis(&self) -> &BasisDescriptor {
        self.static_part.basis()
    }

    pub fn at(&self, t: f64) -> Result<Operator<T>> {
        let w = cr(T::lit(self.params.omega_at(t)));
        Operator::linear_combination(&[(cr(T::one()), &self.static_part), (w, &self.drive)])
    }
}

/// Lattice Hamiltonian at time `t`:
/// `H_x + (Ω(t)/2) Σ σx_j + Σ g_j (e^{iφ_j} a†_j + h.c.) σz_j`.
pub fn build_rabi_lattice<T: Real>(p: &ProbeParams, t: f64) -> Result<Operator<T>> {
    RabiLattice::new(p)?.at(t)
}

/// `Σ_j ε_j (e^{iξ} a†_j + e^{−iξ} a_j)` with `ε_j = F_j x₀ / 2ħ`.
pub fn build_force_term<T: Real>(p: &ProbeParams, f: &ForceField) -> Result<Operator<T>> {
    f.check_len(p.num_ions)?;
    let basis = p.basis()?;
    force_on_basis(&basis, &f.rates(p.x0), f.xi)
}

fn force_on_basis<T: Real>(basis: &BasisDescriptor, rates: &[f64], xi: f64) -> Result<Operator<T>> {
    let amps: Vec<Cplx<T>> = rates.iter().map(|&e| phase::<T>(xi) * T::lit(e)).collect();
    quadrature_sum(basis, &amps, false)
}

/// `Σ_j δB_j σz_j` on the spins of `basis`.
pub fn build_magnetic_term<T: Real>(
    b: &MagneticField,
    basis: &BasisDescriptor,
) -> Result<Operator<T>> {
    b.check_len(basis.num_spins())?;
    let ops: Vec<_> = b
        .detunings()
        .iter()
        .enumerate()
        .map(|(j, &d)| Ok(hilbert::pauli_op::<T>(basis, j, Axis::Z)?.scale(cr(T::lit(d)))))
        .collect::<Result<_>>()?;
    sum(basis, &ops)
}

fn check_subcritical(p: &ProbeParams) -> Result<()> {
    let spec = collective_transform(p)?;
    let g_max = p.g.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    for (label, &w) in spec.labels.iter().zip(&spec.frequencies) {
        let zeta_sq = 4.0 * g_max * g_max / (p.omega0 * w);
        if zeta_sq >= 1.0 || !zeta_sq.is_finite() {
            return Err(Error::SupercriticalCoupling {
                mode: label,
                zeta_sq,
            });
        }
    }
    Ok(())
}

/// Boson-only Hamiltonian left after projecting the spins onto |−…−⟩ at
/// order g²/Ω, with Ω = Ω(0) held constant:
/// `Σ (δ − 2g_j²/Ω) a†_j a_j + κ Σ (a†_j a_{j+1} + h.c.)
///  − Σ (g_j²/Ω)(e^{2iφ_j} a†_j² + h.c.) + Σ ε_j (e^{iξ} a†_j + h.c.)`.
///
/// The basis holds the local modes only.
pub fn build_effective_bosonic<T: Real>(p: &ProbeParams, f: &ForceField) -> Result<Operator<T>> {
    p.validate()?;
    f.check_len(p.num_ions)?;
    check_subcritical(p)?;
    let n = p.num_ions;
    let labels = (1..=n).map(|j| format!("local-{j}")).collect();
    let basis = BasisDescriptor::modes(vec![p.n_max; n], labels)?;
    let hop = build_hopping::<T>(&basis, n, p.delta, p.kappa)?;
    let mut terms = vec![hop, force_on_basis(&basis, &f.rates(p.x0), f.xi)?];
    for j in 0..n {
        let mu = p.g[j] * p.g[j] / p.omega0;
        let a = hilbert::annihilation_op::<T>(&basis, j)?;
        let a2 = a.matmul(&a)?;
        let sq = phase::<T>(2.0 * p.phi[j]) * T::lit(-mu);
        terms.push(Operator::linear_combination(&[
            (sq, &a2.adjoint()),
            (sq.conj(), &a2),
        ])?);
        terms.push(hilbert::number_op::<T>(&basis, j)?.scale(cr(T::lit(-2.0 * mu))));
    }
    sum(&basis, &terms)
}

/// Single collective mode of the effective bosonic model:
/// `ω̃ a†a − μ(e^{2iφ} a†² + h.c.) + f (e^{iξ} a† + h.c.)` with
/// `ω̃ = ω_q − 2μ`, `μ = g²/Ω` and `f = Σ_j ε_j U_{jq}`.
///
/// Requires uniform coupling magnitude and phase.
pub fn build_collective_bosonic<T: Real>(
    p: &ProbeParams,
    f: &ForceField,
    mode: usize,
) -> Result<Operator<T>> {
    p.validate()?;
    f.check_len(p.num_ions)?;
    check_subcritical(p)?;
    if p.g.iter().any(|g| (g - p.g[0]).abs() > 0.0) || p.phi.iter().any(|ph| *ph != p.phi[0]) {
        return Err(Error::InvalidParameter(
            "collective decoupling needs uniform couplings and phases".into(),
        ));
    }
    let spec = collective_transform(p)?;
    if mode >= spec.frequencies.len() {
        return Err(Error::IndexOutOfRange {
            what: "collective mode",
            index: mode,
            count: spec.frequencies.len(),
        });
    }
    let n = p.num_ions;
    let rates = f.rates(p.x0);
    let drive: f64 = (0..n).map(|j| rates[j] * spec.vectors[j * n + mode]).sum();
    let mu = p.g[0] * p.g[0] / p.omega0;
    let basis = BasisDescriptor::modes(vec![p.n_max], vec![spec.labels[mode].to_string()])?;
    let a = hilbert::annihilation_op::<T>(&basis, 0)?;
    let a2 = a.matmul(&a)?;
    let sq = phase::<T>(2.0 * p.phi[0]) * T::lit(-mu);
    let num = hilbert::number_op::<T>(&basis, 0)?;
    let force = phase::<T>(f.xi) * T::lit(drive);
    Operator::linear_combination(&[
        (cr(T::lit(spec.frequencies[mode] - 2.0 * mu)), &num),
        (sq, &a2.adjoint()),
        (sq.conj(), &a2),
        (force, &a.adjoint()),
        (force.conj(), &a),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    fn fig1() -> ProbeParams {
        ProbeParams::uniform(2, 825.0, 0.1, 70.0, 12.0, 12.5, 0.3, 14.5e-9)
            .unwrap()
            .with_n_max(4)
    }

    #[test]
    fn lattice_is_hermitian() {
        let h = build_rabi_lattice::<f64>(&fig1(), 0.0).unwrap();
        assert_eq!(h.hermiticity_defect(), 0.0);
        let f = ForceField::from_yoctonewtons(&[3.78, 0.95], 0.98 * std::f64::consts::PI);
        assert!(
            build_force_term::<f64>(&fig1(), &f)
                .unwrap()
                .hermiticity_defect()
                < 1e-15
        );
    }

    #[test]
    fn single_excitation_spectrum_without_coupling() {
        let mut p = fig1();
        p.g = vec![0.0, 0.0];
        p.omega0 = 0.0;
        let lat = RabiLattice::<f64>::new(&p).unwrap();
        let h = lat.at(0.0).unwrap();
        // restrict to spins ↑↑ and one phonon in total
        let b = h.basis().clone();
        let idx: Vec<usize> = [[0, 0, 1, 0], [0, 0, 0, 1]]
            .iter()
            .map(|d| b.index_of(d))
            .collect();
        let block: Vec<Cplx<f64>> = idx
            .iter()
            .flat_map(|&r| idx.iter().map(move |&c| (r, c)))
            .map(|(r, c)| h.get(r, c))
            .collect();
        let ev = linalg::hermitian_eigenvalues(2, &block);
        assert!((ev[0] - 58.0).abs() < 1e-12 && (ev[1] - 82.0).abs() < 1e-12);
    }

    #[test]
    fn drive_block_norm() {
        let lat = RabiLattice::<f64>::new(&fig1()).unwrap();
        let h0 = lat.at(0.0).unwrap();
        let diff = h0.sub(&lat.static_part).unwrap();
        // each spin flip element carries Ω/2
        let max = diff
            .triplets()
            .iter()
            .fold(0.0f64, |m, (_, _, v)| m.max(v.norm()));
        assert!((max - 412.5).abs() < 1e-12);
        let late = lat.at(1e4).unwrap();
        assert!(late.max_abs_diff(&lat.static_part).unwrap() < 1e-12);
    }

    #[test]
    fn effective_model_rejects_critical_coupling() {
        let mut p = ProbeParams::uniform(2, 300.0, 0.0, 0.6, 0.28, 2.5, 0.0, 14.5e-9).unwrap();
        p.n_max = 6;
        let f = ForceField::zero(2);
        assert!(build_effective_bosonic::<f64>(&p, &f).is_ok());
        p.kappa = 0.55;
        assert!(matches!(
            build_effective_bosonic::<f64>(&p, &f),
            Err(Error::SupercriticalCoupling { mode: "rock", .. })
        ));
    }
}

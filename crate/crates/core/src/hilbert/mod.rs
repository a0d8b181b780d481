//! Truncated Fock-space operator algebra on spin ⊗ boson product spaces.

mod basis;
mod operator;
mod state;

pub use basis::BasisDescriptor;
pub use operator::{Operator, DENSE_THRESHOLD};
pub use state::{inner, SpinState, State};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{c, cr, Cplx, Real};

/// Default per-mode Fock truncation.
pub const DEFAULT_NMAX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

fn local_lowering<T: Real>(d: usize) -> Vec<Cplx<T>> {
    let mut m = vec![cr(T::zero()); d * d];
    for n in 1..d {
        m[(n - 1) * d + n] = cr(T::from_usize_lossy(n).sqrt());
    }
    m
}

/// Lowering operator `a` on `mode`: `a|n⟩ = √n|n−1⟩`.
pub fn annihilation_op<T: Real>(basis: &BasisDescriptor, mode: usize) -> Result<Operator<T>> {
    let f = basis.mode_factor(mode)?;
    let d = basis.fock_dims()[mode];
    Operator::embed(basis.clone(), f, &local_lowering::<T>(d))
}

pub fn creation_op<T: Real>(basis: &BasisDescriptor, mode: usize) -> Result<Operator<T>> {
    Ok(annihilation_op(basis, mode)?.adjoint())
}

/// `a†a` on `mode`.
pub fn number_op<T: Real>(basis: &BasisDescriptor, mode: usize) -> Result<Operator<T>> {
    let f = basis.mode_factor(mode)?;
    let d = basis.fock_dims()[mode];
    let mut m = vec![cr(T::zero()); d * d];
    for n in 0..d {
        m[n * d + n] = cr(T::from_usize_lossy(n));
    }
    Operator::embed(basis.clone(), f, &m)
}

/// Boson parity `e^{iπ a†a}` on `mode`.
pub fn parity_op<T: Real>(basis: &BasisDescriptor, mode: usize) -> Result<Operator<T>> {
    let f = basis.mode_factor(mode)?;
    let d = basis.fock_dims()[mode];
    let mut m = vec![cr(T::zero()); d * d];
    for n in 0..d {
        m[n * d + n] = cr(if n % 2 == 0 { T::one() } else { -T::one() });
    }
    Operator::embed(basis.clone(), f, &m)
}

/// Pauli matrix on `spin`, with `σz|↑⟩ = +|↑⟩` and `|↑⟩` at index 0.
pub fn pauli_op<T: Real>(basis: &BasisDescriptor, spin: usize, axis: Axis) -> Result<Operator<T>> {
    let f = basis.spin_factor(spin)?;
    let (o, l) = (T::zero(), T::one());
    let m = match axis {
        Axis::X => [cr(o), cr(l), cr(l), cr(o)],
        Axis::Y => [cr(o), c(o, -l), c(o, l), cr(o)],
        Axis::Z => [cr(l), cr(o), cr(o), cr(-l)],
    };
    Operator::embed(basis.clone(), f, &m)
}

/// Check a mean occupation against the truncation of `mode`.
///
/// Warns above a quarter of the truncation and fails above half of it.
fn check_occupation(basis: &BasisDescriptor, mode: usize, mean_n: f64, what: &str) -> Result<()> {
    let n_max = basis.fock_dims()[mode] as f64;
    if mean_n > n_max / 2.0 {
        return Err(Error::TruncationInsufficient(format!(
            "{what} needs mean occupation {mean_n:.3} but mode {mode} is truncated at {n_max}"
        )));
    }
    if mean_n > n_max / 4.0 {
        log::warn!(
            "{what}: mean occupation {mean_n:.3} exceeds a quarter of the truncation {n_max} on mode {mode}"
        );
    }
    Ok(())
}

/// `D(α) = exp(α a† − α* a)` exponentiated within the truncated mode.
pub fn displacement_op<T: Real>(
    basis: &BasisDescriptor,
    mode: usize,
    alpha: Cplx<T>,
) -> Result<Operator<T>> {
    let f = basis.mode_factor(mode)?;
    check_occupation(basis, mode, alpha.norm_sqr().as_f64(), "displacement")?;
    let d = basis.fock_dims()[mode];
    let a = local_lowering::<T>(d);
    let ad = linalg::adjoint(d, &a);
    let gen: Vec<_> = ad
        .iter()
        .zip(&a)
        .map(|(&up, &dn)| alpha * up - alpha.conj() * dn)
        .collect();
    Operator::embed(basis.clone(), f, &linalg::expm(d, &gen))
}

/// `S(ν) = exp[(ν/2)(a†² − a²)]`, so that `S†aS = a cosh ν + a† sinh ν` and
/// the squeezed vacuum holds `sinh²ν` quanta.
pub fn squeeze_op<T: Real>(basis: &BasisDescriptor, mode: usize, nu: T) -> Result<Operator<T>> {
    let f = basis.mode_factor(mode)?;
    check_occupation(basis, mode, nu.as_f64().sinh().powi(2), "squeeze")?;
    let d = basis.fock_dims()[mode];
    let a = local_lowering::<T>(d);
    let a2 = linalg::matmul(d, &a, &a);
    let ad2 = linalg::adjoint(d, &a2);
    let half = cr(nu / T::lit(2.0));
    let gen: Vec<_> = ad2.iter().zip(&a2).map(|(&u, &l)| half * (u - l)).collect();
    Operator::embed(basis.clone(), f, &linalg::expm(d, &gen))
}

/// `⟨ψ|O|ψ⟩`, complex so callers can inspect the imaginary residual.
pub fn expectation<T: Real>(state: &State<T>, obs: &Operator<T>) -> Result<Cplx<T>> {
    state.expectation(obs)
}

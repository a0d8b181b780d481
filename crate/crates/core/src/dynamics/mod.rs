//! Time-dependent Schrödinger propagation, the two-state sweep model and
//! the full adiabatic protocol.

mod constant_drive;
mod demkov;
mod integrators;
mod io;
mod krylov;
mod protocol;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{BasisDescriptor, Operator, State};
use crate::models::RabiLattice;
use crate::scalar::{cr, Cplx, Real};

pub use crate::analytic::demkov::{demkov_parameters, FranckCondon};
pub use constant_drive::{constant_drive_run, ConstantDriveOptions, DriveModel};
pub use demkov::{demkov_integrate, demkov_integrate_with, TwoStateAmplitudes, SYMMETRIC_START};
pub use io::{read_checkpoint, write_checkpoint};
pub use protocol::{
    adiabatic_protocol_run, default_final_time, Perturbation, ProtocolOptions, ProtocolOutcome,
};

/// Hamiltonian of the form `H(t) = Σ_k w_k(t) H_k` with Hermitian `H_k` and
/// real weights.
pub trait Hamiltonian<T: Real>: Sync {
    fn basis(&self) -> &BasisDescriptor;
    fn num_terms(&self) -> usize;
    fn term(&self, k: usize) -> &Operator<T>;
    /// Writes `w_k(t)` into `out` (length `num_terms()`).
    fn weights(&self, t: f64, out: &mut [f64]);

    /// `y = Σ_k coef·w_k H_k x`.
    fn apply_weighted(&self, w: &[f64], coef: Cplx<T>, x: &[Cplx<T>], y: &mut [Cplx<T>]) {
        y.iter_mut().for_each(|v| *v = Cplx::default());
        for (k, &wk) in w.iter().enumerate() {
            if wk != 0.0 {
                self.term(k).apply_add(coef * cr(T::lit(wk)), x, y);
            }
        }
    }

    /// Dense snapshot `H(t)`, mostly for tests and diagnostics.
    fn at(&self, t: f64) -> Result<Operator<T>> {
        let mut w = vec![0.0; self.num_terms()];
        self.weights(t, &mut w);
        let terms: Vec<_> = (0..self.num_terms())
            .map(|k| (cr(T::lit(w[k])), self.term(k)))
            .collect();
        Operator::linear_combination(&terms)
    }
}

type Weight = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// General term-sum Hamiltonian with user-supplied weight functions.
#[derive(Clone)]
pub struct TermSum<T: Real> {
    basis: BasisDescriptor,
    terms: Vec<Operator<T>>,
    weights: Vec<Weight>,
}

impl<T: Real> std::fmt::Debug for TermSum<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TermSum")
            .field("basis", &self.basis)
            .field("num_terms", &self.terms.len())
            .finish()
    }
}

impl<T: Real> TermSum<T> {
    pub fn new(basis: BasisDescriptor) -> Self {
        TermSum {
            basis,
            terms: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn with_term(
        mut self,
        op: Operator<T>,
        weight: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        self.basis.ensure_same(op.basis())?;
        self.terms.push(op);
        self.weights.push(Arc::new(weight));
        Ok(self)
    }

    pub fn with_static(self, op: Operator<T>) -> Result<Self> {
        self.with_term(op, |_| 1.0)
    }
}

impl<T: Real> Hamiltonian<T> for TermSum<T> {
    fn basis(&self) -> &BasisDescriptor {
        &self.basis
    }

    fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn term(&self, k: usize) -> &Operator<T> {
        &self.terms[k]
    }

    fn weights(&self, t: f64, out: &mut [f64]) {
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o = w(t);
        }
    }
}

impl<T: Real> Hamiltonian<T> for RabiLattice<T> {
    fn basis(&self) -> &BasisDescriptor {
        self.static_part.basis()
    }

    fn num_terms(&self) -> usize {
        2
    }

    fn term(&self, k: usize) -> &Operator<T> {
        if k == 0 {
            &self.static_part
        } else {
            &self.drive
        }
    }

    fn weights(&self, t: f64, out: &mut [f64]) {
        out[0] = 1.0;
        out[1] = self.params.omega_at(t);
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Integrator {
    /// Fourth-order commutator-free Magnus with Lanczos exponentials.
    #[default]
    Magnus4,
    /// Exponential midpoint rule.
    Magnus2,
    /// Dormand–Prince 5(4) on the Schrödinger equation.
    DormandPrince,
}

impl std::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnus4" => Ok(Integrator::Magnus4),
            "magnus2" => Ok(Integrator::Magnus2),
            "dp5" | "dormand-prince" => Ok(Integrator::DormandPrince),
            other => Err(Error::InvalidParameter(format!(
                "unknown integrator `{other}` (magnus4, magnus2, dp5)"
            ))),
        }
    }
}

/// Settings for [`propagate`].
#[derive(Debug, Clone)]
pub struct PropagationConfig<T: Real> {
    pub t_final: f64,
    /// Accepted local error per unit time (2-norm of the state).
    pub tolerance: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub observables: Vec<(String, Operator<T>)>,
    /// Number of equally spaced output times, both ends included.
    pub record_points: usize,
    pub integrator: Integrator,
    pub norm_limit: f64,
    /// Abort when the top two Fock levels of any mode hold more than this.
    pub truncation_limit: Option<f64>,
    pub krylov_dim: usize,
    /// Keep the full state at every output time.
    pub keep_states: bool,
}

impl<T: Real> PropagationConfig<T> {
    pub fn new(t_final: f64) -> Self {
        PropagationConfig {
            t_final,
            tolerance: 1e-8,
            max_step: f64::INFINITY,
            min_step: 1e-13 * t_final.abs().max(1e-300),
            observables: Vec::new(),
            record_points: 500,
            integrator: Integrator::default(),
            norm_limit: 1e-9,
            truncation_limit: Some(1e-4),
            krylov_dim: 48,
            keep_states: false,
        }
    }

    pub fn observe(mut self, label: impl Into<String>, op: Operator<T>) -> Self {
        self.observables.push((label.into(), op));
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_record_points(mut self, n: usize) -> Self {
        self.record_points = n;
        self
    }

    pub fn keeping_states(mut self) -> Self {
        self.keep_states = true;
        self
    }

    pub fn validate(&self, basis: &BasisDescriptor) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.max_step) {
            return Err(Error::InvalidParameter(
                "need 0 < min_step <= max_step".into(),
            ));
        }
        if self.record_points < 2 {
            return Err(Error::InvalidParameter(
                "record_points must be at least 2".into(),
            ));
        }
        if self.krylov_dim < 4 {
            return Err(Error::InvalidParameter(
                "krylov_dim must be at least 4".into(),
            ));
        }
        for (label, op) in &self.observables {
            basis
                .ensure_same(op.basis())
                .map_err(|e| Error::BasisMismatch(format!("observable {label}: {e}")))?;
        }
        Ok(())
    }
}

/// Step statistics of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub matvecs: usize,
}

/// Recorded time series of a propagation.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// `values[i][k]`: real part of observable `k` at `times[i]`.
    pub values: Vec<Vec<f64>>,
    /// Largest imaginary part seen per observable.
    pub imag_residuals: Vec<f64>,
    /// `|‖ψ(t)‖ − 1|` at each recorded time.
    pub norm_errors: Vec<f64>,
    pub final_state: State<T>,
    /// States at `times`, only when requested in the config.
    pub states: Vec<State<T>>,
    /// Maximum of `norm_errors`.
    pub norm_drift: f64,
    pub stats: StepStats,
}

impl<T: Real> Trajectory<T> {
    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let k = self.labels.iter().position(|l| l == label)?;
        Some(self.values.iter().map(|row| row[k]).collect())
    }

    pub fn final_value(&self, label: &str) -> Option<f64> {
        let k = self.labels.iter().position(|l| l == label)?;
        self.values.last().map(|row| row[k])
    }

    /// CSV with header `t,<labels>,norm_drift`.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        let header: Vec<&str> = std::iter::once("t")
            .chain(self.labels.iter().map(String::as_str))
            .chain(std::iter::once("norm_drift"))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for ((t, row), ne) in self.times.iter().zip(&self.values).zip(&self.norm_errors) {
            write!(w, "{t}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{ne:e}")?;
        }
        Ok(())
    }
}

/// Integrates `i dψ/dt = H(t)ψ` from `t = 0` to `cfg.t_final`.
pub fn propagate<T: Real, H: Hamiltonian<T> + ?Sized>(
    ham: &H,
    psi0: &State<T>,
    cfg: &PropagationConfig<T>,
) -> Result<Trajectory<T>> {
    cfg.validate(ham.basis())?;
    ham.basis().ensure_same(psi0.basis())?;
    let n0 = psi0.norm().as_f64();
    if (n0 - 1.0).abs() > cfg.norm_limit.max(1e-12) {
        return Err(Error::Precondition(format!(
            "initial state has norm {n0}, expected 1"
        )));
    }
    integrators::run(ham, psi0, cfg)
}

use crate::error::{Error, Result};
use crate::scalar::{abs2, c, cr, Cplx, Real};

use super::basis::BasisDescriptor;
use super::operator::Operator;

/// Single-spin preparation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinState {
    Up,
    Down,
    /// (|↑⟩ + |↓⟩)/√2
    Plus,
    /// (|↑⟩ − |↓⟩)/√2
    Minus,
}

impl SpinState {
    fn amplitudes<T: Real>(self) -> [Cplx<T>; 2] {
        let h = T::FRAC_1_SQRT_2();
        match self {
            SpinState::Up => [cr(T::one()), cr(T::zero())],
            SpinState::Down => [cr(T::zero()), cr(T::one())],
            SpinState::Plus => [cr(h), cr(h)],
            SpinState::Minus => [cr(h), cr(-h)],
        }
    }
}

/// Pure state on a spin ⊗ Fock product space.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T: Real> {
    basis: BasisDescriptor,
    amps: Vec<Cplx<T>>,
}

impl<T: Real> State<T> {
    pub fn new(basis: BasisDescriptor, amps: Vec<Cplx<T>>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::LengthMismatch {
                what: "state amplitudes",
                expected: basis.dim(),
                got: amps.len(),
            });
        }
        Ok(State { basis, amps })
    }

    pub fn basis_state(basis: BasisDescriptor, index: usize) -> Result<Self> {
        let dim = basis.dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange {
                what: "basis state",
                index,
                count: dim,
            });
        }
        let mut amps = vec![cr(T::zero()); dim];
        amps[index] = cr(T::one());
        Ok(State { basis, amps })
    }

    /// Product of per-spin states and Fock number states.
    pub fn product(basis: BasisDescriptor, spins: &[SpinState], fock: &[usize]) -> Result<Self> {
        if spins.len() != basis.num_spins() {
            return Err(Error::LengthMismatch {
                what: "spin preparations",
                expected: basis.num_spins(),
                got: spins.len(),
            });
        }
        if fock.len() != basis.num_modes() {
            return Err(Error::LengthMismatch {
                what: "Fock occupations",
                expected: basis.num_modes(),
                got: fock.len(),
            });
        }
        for (m, (&n, &d)) in fock.iter().zip(basis.fock_dims()).enumerate() {
            if n >= d {
                return Err(Error::TruncationInsufficient(format!(
                    "Fock state |{n}⟩ does not fit mode {m} truncated at {d}"
                )));
            }
        }
        let mut amps = vec![cr(T::one())];
        for s in spins {
            let a = s.amplitudes::<T>();
            amps = amps.iter().flat_map(|&x| [x * a[0], x * a[1]]).collect();
        }
        for (&n, &d) in fock.iter().zip(basis.fock_dims()) {
            amps = amps
                .iter()
                .flat_map(|&x| (0..d).map(move |k| if k == n { x } else { cr(T::zero()) }))
                .collect();
        }
        Ok(State { basis, amps })
    }

    pub fn basis(&self) -> &BasisDescriptor {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Cplx<T>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Cplx<T>> {
        self.amps
    }

    pub fn norm(&self) -> T {
        self.amps.iter().map(|z| abs2(*z)).sum::<T>().sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() {
            return Err(Error::Degenerate("cannot normalize the zero vector".into()));
        }
        let inv = cr(T::one() / n);
        self.amps.iter_mut().for_each(|z| *z *= inv);
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Cplx<T>> {
        self.basis.ensure_same(&other.basis)?;
        Ok(inner(&self.amps, &other.amps))
    }

    pub fn apply(&self, op: &Operator<T>) -> Result<Self> {
        self.basis.ensure_same(op.basis())?;
        Ok(State {
            basis: self.basis.clone(),
            amps: op.apply(&self.amps),
        })
    }

    /// `⟨ψ|O|ψ⟩`; the imaginary part is kept so callers can check Hermiticity.
    pub fn expectation(&self, op: &Operator<T>) -> Result<Cplx<T>> {
        self.basis.ensure_same(op.basis())?;
        Ok(inner(&self.amps, &op.apply(&self.amps)))
    }

    /// Multiply by `e^{iθ}`.
    pub fn with_global_phase(mut self, theta: T) -> Self {
        let p = c(theta.cos(), theta.sin());
        self.amps.iter_mut().for_each(|z| *z *= p);
        self
    }

    /// Fock-number distribution of one mode.
    pub fn fock_distribution(&self, mode: usize) -> Result<Vec<T>> {
        let f = self.basis.mode_factor(mode)?;
        let d = self.basis.fock_dims()[mode];
        let stride = self.basis.strides()[f];
        let mut p = vec![T::zero(); d];
        for (i, z) in self.amps.iter().enumerate() {
            p[(i / stride) % d] += abs2(*z);
        }
        Ok(p)
    }

    /// Population held in the top `levels` Fock states of `mode`.
    pub fn top_population(&self, mode: usize, levels: usize) -> Result<T> {
        let p = self.fock_distribution(mode)?;
        Ok(p.iter().rev().take(levels).copied().sum())
    }

    /// Probability that `spin` is found in |↑⟩.
    pub fn spin_up_probability(&self, spin: usize) -> Result<T> {
        let f = self.basis.spin_factor(spin)?;
        let stride = self.basis.strides()[f];
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| (i / stride).is_multiple_of(2))
            .map(|(_, z)| abs2(*z))
            .sum())
    }

    /// Joint probability of a full spin configuration (`true` = ↑).
    pub fn spin_configuration_probability(&self, up: &[bool]) -> Result<T> {
        let ns = self.basis.num_spins();
        if up.len() != ns {
            return Err(Error::LengthMismatch {
                what: "spin configuration",
                expected: ns,
                got: up.len(),
            });
        }
        let block = self.basis.dim() >> ns;
        let idx = up
            .iter()
            .fold(0usize, |acc, &u| (acc << 1) | usize::from(!u));
        Ok(self.amps[idx * block..(idx + 1) * block]
            .iter()
            .map(|z| abs2(*z))
            .sum())
    }
}

/// `⟨a|b⟩` over raw amplitude slices.
pub fn inner<T: Real>(a: &[Cplx<T>], b: &[Cplx<T>]) -> Cplx<T> {
    let mut acc = cr(T::zero());
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * *y;
    }
    acc
}

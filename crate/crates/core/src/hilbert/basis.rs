use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layout of a spin ⊗ Fock product space.
///
/// Factors are ordered spins first (spin 0 most significant), then bosonic
/// modes in declaration order. Each spin uses `|↑⟩ = 0`, `|↓⟩ = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisDescriptor {
    num_spins: usize,
    fock_dims: Vec<usize>,
    mode_labels: Vec<String>,
}

impl BasisDescriptor {
    pub fn new(num_spins: usize, fock_dims: Vec<usize>, mode_labels: Vec<String>) -> Result<Self> {
        if fock_dims.len() != mode_labels.len() {
            return Err(Error::InvalidBasis(format!(
                "{} Fock dimensions but {} mode labels",
                fock_dims.len(),
                mode_labels.len()
            )));
        }
        if let Some(&d) = fock_dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidBasis(format!(
                "Fock truncation must be at least 2, got {d}"
            )));
        }
        if num_spins == 0 && fock_dims.is_empty() {
            return Err(Error::InvalidBasis("empty basis".into()));
        }
        let b = BasisDescriptor {
            num_spins,
            fock_dims,
            mode_labels,
        };
        b.dim_checked()?;
        Ok(b)
    }

    /// `num_spins` spins and `num_modes` local modes labelled `local-1..N`,
    /// every mode truncated at `n_max`.
    pub fn uniform(num_spins: usize, num_modes: usize, n_max: usize) -> Result<Self> {
        let labels = (1..=num_modes).map(|j| format!("local-{j}")).collect();
        Self::new(num_spins, vec![n_max; num_modes], labels)
    }

    /// Bosonic modes only.
    pub fn modes(fock_dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        Self::new(0, fock_dims, labels)
    }

    fn dim_checked(&self) -> Result<usize> {
        let mut d: usize = 1usize
            .checked_shl(self.num_spins as u32)
            .filter(|_| self.num_spins < usize::BITS as usize)
            .ok_or_else(|| Error::InvalidBasis("too many spins".into()))?;
        for &f in &self.fock_dims {
            d = d
                .checked_mul(f)
                .ok_or_else(|| Error::InvalidBasis("dimension overflow".into()))?;
        }
        Ok(d)
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    pub fn num_modes(&self) -> usize {
        self.fock_dims.len()
    }

    pub fn fock_dims(&self) -> &[usize] {
        &self.fock_dims
    }

    pub fn mode_labels(&self) -> &[String] {
        &self.mode_labels
    }

    /// 2^num_spins × Π fock_dims.
    pub fn dim(&self) -> usize {
        (1usize << self.num_spins) * self.fock_dims.iter().product::<usize>()
    }

    /// Dimension of every tensor factor, spins first.
    pub fn factor_dims(&self) -> Vec<usize> {
        let mut v = vec![2; self.num_spins];
        v.extend_from_slice(&self.fock_dims);
        v
    }

    pub fn num_factors(&self) -> usize {
        self.num_spins + self.fock_dims.len()
    }

    /// Factor position of bosonic mode `mode`.
    pub fn mode_factor(&self, mode: usize) -> Result<usize> {
        if mode >= self.num_modes() {
            return Err(Error::IndexOutOfRange {
                what: "mode",
                index: mode,
                count: self.num_modes(),
            });
        }
        Ok(self.num_spins + mode)
    }

    pub fn spin_factor(&self, spin: usize) -> Result<usize> {
        if spin >= self.num_spins {
            return Err(Error::IndexOutOfRange {
                what: "spin",
                index: spin,
                count: self.num_spins,
            });
        }
        Ok(spin)
    }

    /// Stride of each factor in the composite index.
    pub fn strides(&self) -> Vec<usize> {
        let dims = self.factor_dims();
        let mut s = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * dims[k + 1];
        }
        s
    }

    /// Per-factor digits of a composite index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let dims = self.factor_dims();
        let mut out = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            out[k] = index % dims[k];
            index /= dims[k];
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().zip(self.strides()).map(|(d, s)| d * s).sum()
    }

    pub fn ensure_same(&self, other: &BasisDescriptor) -> Result<()> {
        if self != other {
            return Err(Error::BasisMismatch(format!("{self} vs {other}")));
        }
        Ok(())
    }

    /// Same layout with every mode truncation replaced by `n_max`.
    pub fn with_uniform_truncation(&self, n_max: usize) -> Result<Self> {
        Self::new(
            self.num_spins,
            vec![n_max; self.num_modes()],
            self.mode_labels.clone(),
        )
    }
}

impl std::fmt::Display for BasisDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} spin(s)", self.num_spins)?;
        for (d, l) in self.fock_dims.iter().zip(&self.mode_labels) {
            write!(f, " ⊗ {l}[{d}]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_bookkeeping() {
        let b = BasisDescriptor::uniform(2, 2, 5).unwrap();
        assert_eq!(b.dim(), 4 * 25);
        assert_eq!(b.strides(), vec![50, 25, 5, 1]);
        for i in [0, 7, 63, 99] {
            assert_eq!(b.index_of(&b.digits(i)), i);
        }
    }

    #[test]
    fn rejects_tiny_truncation() {
        assert!(BasisDescriptor::uniform(1, 1, 1).is_err());
        assert!(BasisDescriptor::new(1, vec![3], vec![]).is_err());
    }

    #[test]
    fn mismatch_detected() {
        let a = BasisDescriptor::uniform(2, 2, 5).unwrap();
        let b = BasisDescriptor::uniform(2, 2, 6).unwrap();
        assert!(a.ensure_same(&b).is_err());
        assert!(a.ensure_same(&a.clone()).is_ok());
    }
}

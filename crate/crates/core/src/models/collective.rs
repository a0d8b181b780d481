use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};

use super::params::ProbeParams;

/// Normal modes of the hopping block and the induced Ising couplings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectiveModeSpec {
    /// `com`, `rock` and, for three ions, `extra`.
    pub labels: Vec<&'static str>,
    /// Mode frequencies in krad/s, same order as `labels`.
    pub frequencies: Vec<f64>,
    /// `U` with `a_j = Σ_q U[j][q] a_q`, row-major N×N.
    pub vectors: Vec<f64>,
    /// Nearest-neighbour coupling `J = g²(1/ω_r − 1/ω_c)`.
    pub j_nn: f64,
    /// Three ions: `J′ = g²(1/2ω_r + 1/2ω_c − 1/ω_e)`, entering the
    /// Hamiltonian as `−J′ σz₁σz₃`.
    pub j_prime: Option<f64>,
}

impl CollectiveModeSpec {
    pub fn omega_c(&self) -> f64 {
        self.frequencies[0]
    }

    pub fn omega_r(&self) -> f64 {
        self.frequencies[1]
    }
}

/// Collective modes for the uniform-coupling lattice.
///
/// For three ions the couplings used for `J`, `J′` are those of
/// `g₁ = g₃ = g`, `g₂ = √2 g` with `g = g₁`.
pub fn collective_transform(p: &ProbeParams) -> Result<CollectiveModeSpec> {
    let (d, k) = (p.delta, p.kappa);
    let g = p.g.first().copied().unwrap_or(0.0);
    let spec = match p.num_ions {
        2 => {
            let (wc, wr) = (d + k, d - k);
            let h = FRAC_1_SQRT_2;
            CollectiveModeSpec {
                labels: vec!["com", "rock"],
                frequencies: vec![wc, wr],
                vectors: vec![h, h, h, -h],
                j_nn: if wr > 0.0 {
                    g * g * (1.0 / wr - 1.0 / wc)
                } else {
                    f64::NAN
                },
                j_prime: None,
            }
        }
        3 => {
            let (wc, wr, we) = (d + SQRT_2 * k, d - SQRT_2 * k, d);
            let h = FRAC_1_SQRT_2;
            CollectiveModeSpec {
                labels: vec!["com", "rock", "extra"],
                frequencies: vec![wc, wr, we],
                vectors: vec![0.5, 0.5, -h, h, -h, 0.0, 0.5, 0.5, h],
                j_nn: g * g * (1.0 / wr - 1.0 / wc),
                j_prime: Some(g * g * (0.5 / wr + 0.5 / wc - 1.0 / we)),
            }
        }
        n => {
            return Err(Error::InvalidParameter(format!(
                "num_ions must be 2 or 3, got {n}"
            )))
        }
    };
    if spec.omega_r() <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rocking frequency {} is not positive",
            spec.omega_r()
        )));
    }
    Ok(spec)
}

/// Inverse of the hopping matrix, `M⁻¹ = U diag(1/ω_q) Uᵀ`.
pub fn inverse_hopping(spec: &CollectiveModeSpec) -> Vec<f64> {
    let n = spec.frequencies.len();
    let u = &spec.vectors;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (0..n)
                .map(|q| u[i * n + q] * u[j * n + q] / spec.frequencies[q])
                .sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn two_ion_modes() {
        let p = ProbeParams::uniform(2, 825.0, 0.1, 70.0, 12.0, 12.5, 0.0, 1e-8).unwrap();
        let s = collective_transform(&p).unwrap();
        assert_eq!(s.frequencies, vec![82.0, 58.0]);
        assert!((s.j_nn - 156.25 * (1.0 / 58.0 - 1.0 / 82.0)).abs() < 1e-14);
    }

    #[test]
    fn three_ion_modes_diagonalise_hopping() {
        let p = ProbeParams::uniform(3, 2730.0, 0.13, 45.0, 12.0, 5.0, 0.0, 1e-8).unwrap();
        let s = collective_transform(&p).unwrap();
        let m = p.hopping_matrix();
        let (vals, _) = linalg::symmetric_eigen(3, &m);
        let mut f = s.frequencies.clone();
        f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in vals.iter().zip(&f) {
            assert!((a - b).abs() < 1e-12);
        }
        // columns of U are eigenvectors
        for q in 0..3 {
            for i in 0..3 {
                let mu: f64 = (0..3).map(|j| m[i * 3 + j] * s.vectors[j * 3 + q]).sum();
                assert!((mu - s.frequencies[q] * s.vectors[i * 3 + q]).abs() < 1e-12);
            }
        }
        assert!(s.j_nn > 0.0 && s.j_prime.unwrap() > 0.0);
        assert!((s.frequencies[0] - 61.970_562_748).abs() < 1e-8);
    }

    #[test]
    fn degenerate_without_hopping() {
        let p = ProbeParams::uniform(2, 825.0, 0.1, 70.0, 0.0, 12.5, 0.0, 1e-8).unwrap();
        let s = collective_transform(&p).unwrap();
        assert_eq!(s.j_nn, 0.0);
        assert_eq!(s.omega_c(), s.omega_r());
    }
}

//! Lanczos approximation of `exp(−i h A) v` for Hermitian `A`.

use crate::hilbert::inner;
use crate::linalg;
use crate::scalar::{cr, Cplx, Real};

/// Reusable Krylov workspace.
#[derive(Debug, Clone)]
pub(crate) struct Krylov<T: Real> {
    basis: Vec<Vec<Cplx<T>>>,
    w: Vec<Cplx<T>>,
    m_max: usize,
}

/// A failed expansion: the subspace limit was reached before the error
/// estimate dropped below tolerance.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KrylovFailure {
    pub matvecs: usize,
}

impl<T: Real> Krylov<T> {
    pub fn new(dim: usize, m_max: usize) -> Self {
        Krylov {
            basis: Vec::new(),
            w: vec![Cplx::default(); dim],
            m_max,
        }
    }

    /// Overwrites `x` with `exp(−i h A) x` to absolute accuracy `tol`.
    /// `apply(v, out)` must set `out = A v`. Returns the matvec count.
    pub fn expv(
        &mut self,
        mut apply: impl FnMut(&[Cplx<T>], &mut [Cplx<T>]),
        h: f64,
        x: &mut [Cplx<T>],
        tol: f64,
    ) -> Result<usize, KrylovFailure> {
        let n = x.len();
        let beta0 = inner(x, x).re.sqrt().as_f64();
        if beta0 == 0.0 {
            return Ok(0);
        }
        let inv = cr(T::lit(1.0 / beta0));
        self.slot(0, n);
        for (vk, &xk) in self.basis[0].iter_mut().zip(x.iter()) {
            *vk = xk * inv;
        }

        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut last_estimate = f64::INFINITY;
        for j in 0..self.m_max {
            apply(&self.basis[j], &mut self.w);
            // Two passes of classical Gram-Schmidt against the whole basis.
            let mut a_j = 0.0;
            for pass in 0..2 {
                for (i, v) in self.basis[..=j].iter().enumerate() {
                    let p = inner(v, &self.w);
                    if pass == 0 && i == j {
                        a_j = p.re.as_f64();
                    }
                    for (wk, &vk) in self.w.iter_mut().zip(v) {
                        *wk -= p * vk;
                    }
                }
            }
            alpha.push(a_j);
            let b = inner(&self.w, &self.w).re.sqrt().as_f64();
            let m = j + 1;
            let scale = a_j.abs() + beta.last().copied().unwrap_or(0.0);
            let happy = b <= 1e-12 * scale || b == 0.0;
            if happy || m >= 2 || m == self.m_max {
                let u = small_exp(&alpha, &beta, h);
                last_estimate = beta0 * b * u[m - 1].norm();
                if happy || last_estimate <= tol {
                    self.combine(&u, beta0, x);
                    return Ok(m);
                }
            }
            beta.push(b);
            let inv = cr(T::lit(1.0 / b));
            self.slot(m, n);
            for (nk, &wk) in self.basis[m].iter_mut().zip(&self.w) {
                *nk = wk * inv;
            }
        }
        log::trace!(
            "Lanczos limit {} reached, error estimate {last_estimate:e}",
            self.m_max
        );
        Err(KrylovFailure {
            matvecs: self.m_max,
        })
    }

    fn combine(&mut self, u: &[num_complex::Complex<f64>], beta0: f64, x: &mut [Cplx<T>]) {
        x.iter_mut().for_each(|a| *a = Cplx::default());
        for (v, uk) in self.basis.iter().zip(u) {
            let c = Cplx::new(T::lit(beta0 * uk.re), T::lit(beta0 * uk.im));
            for (xk, &vk) in x.iter_mut().zip(v) {
                *xk += c * vk;
            }
        }
    }

    fn slot(&mut self, k: usize, n: usize) {
        while self.basis.len() <= k {
            self.basis.push(vec![Cplx::default(); n]);
        }
    }
}

/// `exp(−i h T) e₁` for the symmetric tridiagonal `T` given by `alpha`
/// (diagonal) and `beta` (first `alpha.len() − 1` entries used).
fn small_exp(alpha: &[f64], beta: &[f64], h: f64) -> Vec<num_complex::Complex<f64>> {
    let m = alpha.len();
    let (vals, vecs) = linalg::tridiagonal_eigen(alpha, &beta[..m - 1]);
    (0..m)
        .map(|k| {
            (0..m)
                .map(|l| {
                    let ph = num_complex::Complex::new(0.0, -h * vals[l]).exp();
                    ph * (vecs[k * m + l] * vecs[l])
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn hermitian(n: usize, seed: u64) -> Vec<Cplx<f64>> {
        let mut s = seed;
        let mut rnd = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = vec![Cplx::default(); n * n];
        for i in 0..n {
            for j in i..n {
                let z = if i == j {
                    c(rnd() * 4.0, 0.0)
                } else {
                    c(rnd(), rnd())
                };
                a[i * n + j] = z;
                a[j * n + i] = z.conj();
            }
        }
        a
    }

    #[test]
    fn matches_dense_exponential() {
        let n = 30;
        let a = hermitian(n, 7);
        let h = 0.7;
        let gen: Vec<_> = a.iter().map(|&z| z * c(0.0, -h)).collect();
        let u = linalg::expm(n, &gen);
        let x0: Vec<Cplx<f64>> = (0..n).map(|k| c(1.0 / (k + 1) as f64, 0.3)).collect();
        let exact: Vec<_> = (0..n)
            .map(|i| (0..n).map(|j| u[i * n + j] * x0[j]).sum::<Cplx<f64>>())
            .collect();
        let mut x = x0.clone();
        let mut k = Krylov::new(n, 40);
        let m = k
            .expv(
                |v, out| {
                    for i in 0..n {
                        out[i] = (0..n).map(|j| a[i * n + j] * v[j]).sum();
                    }
                },
                h,
                &mut x,
                1e-12,
            )
            .unwrap();
        assert!(m <= 30);
        assert!(linalg::max_abs_diff(&x, &exact) < 1e-10);
    }

    #[test]
    fn reports_failure_when_subspace_too_small() {
        let n = 40;
        let a = hermitian(n, 3);
        let mut x: Vec<Cplx<f64>> = (0..n).map(|k| c((k as f64).sin(), 0.0)).collect();
        let mut k = Krylov::new(n, 4);
        let r = k.expv(
            |v, out| {
                for i in 0..n {
                    out[i] = (0..n).map(|j| a[i * n + j] * v[j]).sum();
                }
            },
            50.0,
            &mut x,
            1e-12,
        );
        assert!(r.is_err());
    }
}

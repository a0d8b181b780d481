//! Small dense kernels: matrix exponential and symmetric eigensolvers.
//!
//! Matrices are row-major `Vec`s of length `n * n`. These routines serve the
//! single-mode factors, Krylov projections and the N×N hopping blocks, so
//! the sizes involved stay well under a few hundred.

use crate::scalar::{abs2, cr, Cplx, Real};

pub fn identity<T: Real>(n: usize) -> Vec<Cplx<T>> {
    let mut m = vec![Cplx::new(T::zero(), T::zero()); n * n];
    for i in 0..n {
        m[i * n + i] = cr(T::one());
    }
    m
}

pub fn matmul<T: Real>(n: usize, a: &[Cplx<T>], b: &[Cplx<T>]) -> Vec<Cplx<T>> {
    let zero = cr(T::zero());
    let mut out = vec![zero; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == zero {
                continue;
            }
            let row_b = &b[k * n..(k + 1) * n];
            let row_o = &mut out[i * n..(i + 1) * n];
            for (o, &bkj) in row_o.iter_mut().zip(row_b) {
                *o += aik * bkj;
            }
        }
    }
    out
}

pub fn adjoint<T: Real>(n: usize, a: &[Cplx<T>]) -> Vec<Cplx<T>> {
    let mut out = a.to_vec();
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
    out
}

fn one_norm<T: Real>(n: usize, a: &[Cplx<T>]) -> T {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].norm()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// `exp(a)` by scaling and squaring with a Taylor core.
///
/// The Taylor series is summed to machine precision after scaling the norm
/// below one half, which is slower than a Padé approximant but has no
/// conditioning issues at the sizes used here.
pub fn expm<T: Real>(n: usize, a: &[Cplx<T>]) -> Vec<Cplx<T>> {
    assert_eq!(a.len(), n * n, "expm: matrix is not {n}×{n}");
    let norm = one_norm(n, a).as_f64();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = cr(T::lit(0.5f64.powi(squarings)));
    let scaled: Vec<_> = a.iter().map(|&z| z * scale).collect();

    let mut result = identity::<T>(n);
    let mut term = identity::<T>(n);
    let eps = T::epsilon();
    for k in 1..=60 {
        term = matmul(n, &term, &scaled);
        let inv_k = cr(T::one() / T::from_usize_lossy(k));
        let mut tn = T::zero();
        for z in term.iter_mut() {
            *z *= inv_k;
            tn = tn.max(z.norm());
        }
        for (r, t) in result.iter_mut().zip(&term) {
            *r += *t;
        }
        if tn < eps {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul(n, &result, &result);
    }
    result
}

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of a row-major matrix (`vecs[i * n + k]` is component `i` of
/// eigenvector `k`).
pub fn symmetric_eigen<T: Real>(n: usize, a: &[T]) -> (Vec<T>, Vec<T>) {
    assert_eq!(a.len(), n * n, "symmetric_eigen: matrix is not {n}×{n}");
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let scale = m.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
    let tiny = T::epsilon() * T::epsilon() * scale * scale;

    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if off <= tiny {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let vals: Vec<T> = (0..n).map(|i| m[i * n + i]).collect();
    sort_eigenpairs(n, vals, v)
}

fn sort_eigenpairs<T: Real>(n: usize, vals: Vec<T>, vecs: Vec<T>) -> (Vec<T>, Vec<T>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).expect("finite eigenvalues"));
    let sorted_vals = order.iter().map(|&k| vals[k]).collect();
    let mut sorted_vecs = vec![T::zero(); n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[i * n + new_k] = vecs[i * n + old_k];
        }
    }
    (sorted_vals, sorted_vecs)
}

/// Eigen-decomposition of a symmetric tridiagonal matrix (implicit QL).
///
/// `diag` has length `n`, `off` length `n - 1`. Output layout as in
/// [`symmetric_eigen`].
pub fn tridiagonal_eigen<T: Real>(diag: &[T], off: &[T]) -> (Vec<T>, Vec<T>) {
    let n = diag.len();
    assert!(
        n == 0 || off.len() + 1 == n,
        "tridiagonal_eigen: bad lengths"
    );
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    e[..n.saturating_sub(1)].copy_from_slice(off);
    let mut z = vec![T::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = T::one();
    }
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60, "tridiagonal_eigen: no convergence");
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk1 = z[k * n + i + 1];
                    let zk = z[k * n + i];
                    z[k * n + i + 1] = s * zk + c * zk1;
                    z[k * n + i] = c * zk - s * zk1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    sort_eigenpairs(n, d, z)
}

/// Eigenvalues of a complex Hermitian matrix.
///
/// Uses the real symmetric embedding `[[Re, -Im], [Im, Re]]`, whose spectrum
/// is the Hermitian spectrum with every value doubled.
pub fn hermitian_eigenvalues<T: Real>(n: usize, h: &[Cplx<T>]) -> Vec<T> {
    let m = 2 * n;
    let mut big = vec![T::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[i * n + j];
            big[i * m + j] = z.re;
            big[(i + n) * m + j + n] = z.re;
            big[i * m + j + n] = -z.im;
            big[(i + n) * m + j] = z.im;
        }
    }
    let (vals, _) = symmetric_eigen(m, &big);
    vals.into_iter().step_by(2).collect()
}

/// Largest entry of `|a - b|`.
pub fn max_abs_diff<T: Real>(a: &[Cplx<T>], b: &[Cplx<T>]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| abs2(*x - *y).sqrt())
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn expm_of_rotation_generator() {
        // exp(-iθσx) = cosθ - i sinθ σx
        let th = 1.3_f64;
        let a = vec![cr(0.0), c(0.0, -th), c(0.0, -th), cr(0.0)];
        let e = expm(2, &a);
        assert!((e[0] - cr(th.cos())).norm() < 1e-14);
        assert!((e[1] - c(0.0, -th.sin())).norm() < 1e-14);
    }

    #[test]
    fn expm_large_norm_is_unitary() {
        let n = 6;
        let mut a = vec![cr(0.0f64); n * n];
        for i in 0..n {
            for j in 0..n {
                let x = ((i * 7 + j * 3) % 5) as f64 - 2.0;
                let y = ((i * 2 + j * 5) % 7) as f64 - 3.0;
                a[i * n + j] += c(x, y) * cr(4.0);
                a[j * n + i] -= c(x, -y) * cr(4.0);
            }
        }
        let u = expm(n, &a);
        let uu = matmul(n, &adjoint(n, &u), &u);
        assert!(max_abs_diff(&uu, &identity(n)) < 1e-11);
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let a = [2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0];
        let (vals, vecs) = symmetric_eigen(3, &a);
        let s = 2f64.sqrt();
        let expect = [2.0 - s, 2.0, 2.0 + s];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - e).abs() < 1e-13);
        }
        for k in 0..3 {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i * 3 + j] * vecs[j * 3 + k]).sum();
                assert!((av - vals[k] * vecs[i * 3 + k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn ql_matches_jacobi() {
        let d = [1.0f64, -0.5, 3.0, 2.0, 0.25];
        let e = [0.7f64, 1.1, -0.3, 0.9];
        let n = d.len();
        let mut full = vec![0.0; n * n];
        for i in 0..n {
            full[i * n + i] = d[i];
            if i + 1 < n {
                full[i * n + i + 1] = e[i];
                full[(i + 1) * n + i] = e[i];
            }
        }
        let (v1, z) = tridiagonal_eigen(&d, &e);
        let (v2, _) = symmetric_eigen(n, &full);
        for (a, b) in v1.iter().zip(&v2) {
            assert!((a - b).abs() < 1e-13);
        }
        for k in 0..n {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| full[i * n + j] * z[j * n + k]).sum();
                assert!((av - v1[k] * z[i * n + k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_spectrum_of_sigma_y() {
        let sy = [cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)];
        let v = hermitian_eigenvalues(2, &sy);
        assert!((v[0] + 1.0_f64).abs() < 1e-14 && (v[1] - 1.0_f64).abs() < 1e-14);
    }
}

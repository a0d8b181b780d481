//! Complex digamma, log-gamma and complex-order Bessel functions.

use crate::error::{Error, Result};
use crate::scalar::{c, cr, Cplx, Real};

/// Bernoulli numbers B_2 .. B_16.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Modulus above which the asymptotic series is summed directly.
const ASYMPTOTIC_RADIUS: f64 = 10.0;

fn check_pole<T: Real>(z: Cplx<T>) -> Result<()> {
    if z.im == T::zero() && z.re <= T::zero() && z.re == z.re.round() {
        return Err(Error::Pole(format!("{}", z.re)));
    }
    Ok(())
}

/// Ψ(z) = Γ′(z)/Γ(z).
///
/// Reflection for Re z < ½, upward recurrence until |z| > 10, then the
/// Bernoulli asymptotic series.
pub fn complex_digamma<T: Real>(z: Cplx<T>) -> Result<Cplx<T>> {
    check_pole(z)?;
    let half = T::lit(0.5);
    if z.re < half {
        // Ψ(z) = Ψ(1 − z) − π cot(πz)
        let pi = T::PI();
        let w = cr(T::one()) - z;
        let pz = z * pi;
        return Ok(complex_digamma(w)? - (pz.cos() / pz.sin()) * pi);
    }
    let mut z = z;
    let mut shift = cr(T::zero());
    while z.norm() < T::lit(ASYMPTOTIC_RADIUS) {
        shift -= z.inv();
        z += T::one();
    }
    let inv2 = (z * z).inv();
    let mut pow = inv2;
    let mut series = cr(T::zero());
    for (k, b) in BERNOULLI.iter().enumerate() {
        let two_k = T::from_usize_lossy(2 * (k + 1));
        series += pow * (T::lit(*b) / two_k);
        pow *= inv2;
    }
    Ok(z.ln() - z.inv() * half - series + shift)
}

/// Principal-branch ln Γ(z) built from the Stirling series.
///
/// The branch is continuous in the upper and lower half-planes, which is all
/// that the closed forms need (they evaluate on Re z = ½ and nearby).
pub fn complex_log_gamma<T: Real>(z: Cplx<T>) -> Result<Cplx<T>> {
    check_pole(z)?;
    let half = T::lit(0.5);
    let pi = T::PI();
    if z.re < half {
        // ln Γ(z) = ln π − ln sin(πz) − ln Γ(1 − z)
        let w = cr(T::one()) - z;
        return Ok(cr(pi.ln()) - (z * pi).sin().ln() - complex_log_gamma(w)?);
    }
    let mut z = z;
    let mut shift = cr(T::zero());
    while z.norm() < T::lit(ASYMPTOTIC_RADIUS) {
        shift -= z.ln();
        z += T::one();
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut pow = inv;
    let mut series = cr(T::zero());
    for (k, b) in BERNOULLI.iter().enumerate() {
        let m = T::from_usize_lossy(2 * (k + 1));
        series += pow * (T::lit(*b) / (m * (m - T::one())));
        pow *= inv2;
    }
    let ln_2pi = (T::lit(2.0) * pi).ln();
    Ok((z - half) * z.ln() - z + cr(ln_2pi * half) + series + shift)
}

pub fn complex_gamma<T: Real>(z: Cplx<T>) -> Result<Cplx<T>> {
    Ok(complex_log_gamma(z)?.exp())
}

/// 1/Γ(z), entire: zero at the poles of Γ.
pub fn reciprocal_gamma<T: Real>(z: Cplx<T>) -> Cplx<T> {
    match complex_log_gamma(z) {
        Ok(l) => (-l).exp(),
        Err(_) => cr(T::zero()),
    }
}

/// Bessel function of the first kind J_ν(y) for complex order and argument,
/// by its power series.
///
/// The terms grow like (y/2)^{2k}/k!² before decaying, so cancellation costs
/// roughly |y|/ln 10 · 0.87 digits; keep |y| ≲ 20 for 1e-8 accuracy.
pub fn bessel_j<T: Real>(nu: Cplx<T>, y: Cplx<T>) -> Result<Cplx<T>> {
    if y == cr(T::zero()) {
        return Ok(if nu == cr(T::zero()) {
            cr(T::one())
        } else if nu.re > T::zero() {
            cr(T::zero())
        } else {
            return Err(Error::Pole(format!("J_{nu}(0)")));
        });
    }
    let half_y = y * T::lit(0.5);
    let q = -(half_y * half_y);
    // term_k = (y/2)^ν q^k / (k! Γ(ν + k + 1))
    let mut term = (nu * half_y.ln()).exp() * reciprocal_gamma(nu + T::one());
    let mut sum = term;
    let eps = T::epsilon();
    let max_terms = 400;
    for k in 1..max_terms {
        let kk = T::from_usize_lossy(k);
        let denom = (nu + kk) * kk;
        if denom == cr(T::zero()) {
            // 1/Γ vanished in earlier terms; restart from the first nonzero term.
            term =
                (nu * half_y.ln()).exp() * q.powu(k as u32) * reciprocal_gamma(nu + kk + T::one())
                    / c(factorial::<T>(k), T::zero());
        } else {
            term = term * q / denom;
        }
        sum += term;
        if term.norm() <= eps * sum.norm() && kk > half_y.norm() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence(format!(
        "Bessel series for order {nu} at {y} did not converge in {max_terms} terms"
    )))
}

fn factorial<T: Real>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, j| acc * T::from_usize_lossy(j))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digamma_at_half() {
        let v = complex_digamma(c(0.5f64, 0.0)).unwrap();
        assert!((v.re + 1.963_510_026_021_423_5).abs() < 1e-13);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn digamma_recurrence() {
        for z in [c(0.3f64, 2.0), c(-2.7, 0.4), c(5.0, -7.0), c(0.5, 0.01)] {
            let lhs = complex_digamma(z + 1.0).unwrap();
            let rhs = complex_digamma(z).unwrap() + z.inv();
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0), "{z}");
        }
    }

    #[test]
    fn gamma_modulus_on_critical_line() {
        for y in [0.5f64, 2.0, 10.0] {
            let g = complex_log_gamma(c(0.5, y)).unwrap();
            let lhs = (2.0 * g.re).exp();
            let rhs = std::f64::consts::PI / (std::f64::consts::PI * y).cosh();
            assert!((lhs / rhs - 1.0).abs() < 1e-12, "y = {y}");
        }
    }

    #[test]
    fn log_gamma_matches_factorials() {
        for n in 1..20usize {
            let g = complex_log_gamma(c(n as f64, 0.0)).unwrap();
            let expect: f64 = (1..n).map(|k| (k as f64).ln()).sum();
            assert!((g.re - expect).abs() < 1e-12 * expect.max(1.0));
            assert!(g.im.abs() < 1e-13);
        }
    }

    #[test]
    fn poles_rejected() {
        assert!(complex_digamma(c(0.0f64, 0.0)).is_err());
        assert!(complex_log_gamma(c(-3.0f64, 0.0)).is_err());
        assert_eq!(reciprocal_gamma(c(-2.0f64, 0.0)), cr(0.0));
    }

    #[test]
    fn bessel_half_order_is_elementary() {
        // J_{1/2}(y) = √(2/πy) sin y, J_{-1/2}(y) = √(2/πy) cos y
        for y in [0.3f64, 2.0, 7.5, 15.0] {
            let pre = (2.0 / (std::f64::consts::PI * y)).sqrt();
            let jp = bessel_j(c(0.5, 0.0), c(y, 0.0)).unwrap();
            let jm = bessel_j(c(-0.5, 0.0), c(y, 0.0)).unwrap();
            assert!((jp.re - pre * y.sin()).abs() < 1e-10, "y = {y}");
            assert!((jm.re - pre * y.cos()).abs() < 1e-10, "y = {y}");
        }
    }

    #[test]
    fn bessel_integer_order_values() {
        let j0 = bessel_j(c(0.0f64, 0.0), c(1.0, 0.0)).unwrap();
        let j1 = bessel_j(c(1.0f64, 0.0), c(2.5, 0.0)).unwrap();
        assert!((j0.re - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((j1.re - 0.497_094_102_464_274_4).abs() < 1e-14);
    }
}

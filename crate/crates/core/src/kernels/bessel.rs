//! Modified Bessel functions of the second kind.

use crate::error::{Error, Result};

/// Above this argument the asymptotic expansion is used.
const ASYMPTOTIC_FROM: f64 = 30.0;
const STEP: f64 = 0.05;

/// `e^r K_nu(r)` from `K_nu(r) = int_0^inf cosh(nu t) e^{-r cosh t} dt`.
///
/// The integrand is analytic and even in `t`, so the trapezoidal rule on a
/// uniform mesh converges geometrically; it is truncated once the terms fall
/// below `1e-18` of the running sum.
fn scaled_integral(nu: f64, r: f64) -> f64 {
    let mut sum = 0.5;
    let mut k = 1u32;
    loop {
        let t = STEP * k as f64;
        let term = (nu * t).cosh() * (-r * (t.cosh() - 1.0)).exp();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    sum * STEP
}

/// `e^r K_nu(r)` by the large-argument expansion, summed until terms stop shrinking.
fn scaled_asymptotic(nu: f64, r: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * r);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * r)).sqrt() * sum
}

/// Exponentially scaled `e^r K_nu(r)`.
pub fn bessel_k_scaled(nu: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("Bessel K needs r > 0, got {r}")));
    }
    if !(nu >= 0.0) {
        return Err(Error::InvalidArgument(format!("Bessel K order must be >= 0, got {nu}")));
    }
    Ok(if r > ASYMPTOTIC_FROM { scaled_asymptotic(nu, r) } else { scaled_integral(nu, r) })
}

/// `K_nu(r)` for `r > 0`.
pub fn bessel_k(nu: f64, r: f64) -> Result<f64> {
    Ok(bessel_k_scaled(nu, r)? * (-r).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn half_order_closed_form() {
        for r in [1e-4, 0.1, 1.0, 5.0, 29.0, 31.0, 100.0] {
            let exact = (PI / (2.0 * r)).sqrt() * (-r).exp();
            assert!(rel(bessel_k(0.5, r).unwrap(), exact) < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn reference_values() {
        // published reference values
        assert!(rel(bessel_k(0.0, 1.0).unwrap(), 0.421_024_438_240_708_3) < 1e-12);
        assert!(rel(bessel_k(1.0, 1.0).unwrap(), 0.601_907_230_197_234_6) < 1e-12);
        assert!(rel(bessel_k(0.0, 0.01).unwrap(), 4.721_244_730_161_094) < 1e-12);
        assert!(rel(bessel_k(0.0, 10.0).unwrap(), 1.778_006_231_616_765e-5) < 1e-11);
    }

    #[test]
    fn agrees_with_ascending_series() {
        // K_0(x) = -(ln(x/2) + gamma) I_0(x) + sum_k (x^2/4)^k / (k!)^2 H_k
        let euler = 0.577_215_664_901_532_9;
        for x in [0.05f64, 0.5, 2.0, 4.0] {
            let q = x * x / 4.0;
            let (mut i0, mut s, mut term, mut hk) = (1.0, 0.0, 1.0, 0.0);
            for k in 1..60 {
                let kf = k as f64;
                term *= q / (kf * kf);
                hk += 1.0 / kf;
                i0 += term;
                s += term * hk;
            }
            let series = -((x / 2.0).ln() + euler) * i0 + s;
            assert!(rel(bessel_k(0.0, x).unwrap(), series) < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn continuity_across_asymptotic_switch() {
        for nu in [0.0, 0.5, 1.0] {
            let a = scaled_integral(nu, 30.0);
            let b = scaled_asymptotic(nu, 30.0);
            assert!(rel(a, b) < 1e-13, "nu = {nu}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_nonpositive_argument() {
        assert!(bessel_k(0.0, 0.0).is_err());
        assert!(bessel_k(0.0, -1.0).is_err());
    }
}

//! Small numerical kernels: adaptive quadrature, exponentially scaled
//! modified Bessel functions, and standard-normal quantiles.

use crate::error::{Error, Result};
use statrs::distribution::{ContinuousCDF, Normal};

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// `tol` is an absolute tolerance on the whole integral. Fails if the
/// recursion cannot reach the tolerance within the depth limit.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(Error::domain("adaptive_simpson", format!("bad interval [{a}, {b}]")));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 52)?;
    if !v.is_finite() {
        return Err(Error::numeric("adaptive_simpson", "non-finite integral".to_string()));
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::numeric(
            "adaptive_simpson",
            format!("depth exhausted on [{a}, {b}], residual {delta:e}"),
        ));
    }
    let l = simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Exponentially scaled modified Bessel function `e^-x I0(x)` for `x >= 0`.
pub fn bessel_i0e(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 15.0 {
        series_i0(x) * (-x).exp()
    } else {
        // I0(x) ~ e^x/sqrt(2 pi x) (1 + 1/8x + 9/128x^2 + 225/3072x^3)
        let r = 1.0 / x;
        (1.0 + 0.125 * r + 0.0703125 * r * r + 0.0732421875 * r * r * r)
            / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Exponentially scaled modified Bessel function `e^-x I1(x)` for `x >= 0`.
pub fn bessel_i1e(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 15.0 {
        series_i1(x) * (-x).exp()
    } else {
        let r = 1.0 / x;
        (1.0 - 0.375 * r - 0.1171875 * r * r - 0.1025390625 * r * r * r)
            / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

fn series_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn series_i1(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / ((k * (k + 1)) as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    0.5 * x * sum
}

/// Standard-normal quantile (inverse CDF).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::domain("normal_quantile", format!("p = {p} outside [0, 1)")));
    }
    if p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(n.inverse_cdf(p))
}

/// Standard-normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    n.cdf(z)
}

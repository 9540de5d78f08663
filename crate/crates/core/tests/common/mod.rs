//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

/// Modified Bessel function `I_0` by its power series.
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `Q_1(a, b)` by direct quadrature of the Rician density. The integrand
/// is written as `x exp(-(x - a)^2 / 2) * (exp(-a x) I_0(a x))` to stay finite.
pub fn marcum_q1_quadrature(a: f64, b: f64) -> f64 {
    let f = |x: f64| {
        let scaled_i0 = bessel_i0(a * x) * (-a * x).exp();
        x * (-(x - a) * (x - a) / 2.0).exp() * scaled_i0
    };
    let hi = a.max(b) + 40.0;
    // Split at the mode to help the adaptive rule.
    let mid = a.max(b);
    let lower = if mid > b { adaptive_simpson(f, b, mid, 1e-14) } else { 0.0 };
    lower + adaptive_simpson(f, mid, hi, 1e-14)
}

/// Feed coefficient of one element, evaluated term by term.
pub fn feed_coefficient(x: f64, y: f64, wavelength: f64, size: f64, d_l: f64) -> Complex64 {
    let d = (d_l.powi(2) + x.powi(2) + y.powi(2)).sqrt();
    let cos_alpha = d_l / d;
    let pre = size * size * cos_alpha / d.powi(2);
    let bracket = Complex64::new(1.0 / (2.0 * PI * d), 0.0) - Complex64::new(0.0, 1.0 / wavelength);
    let phase = 2.0 * PI * d / wavelength;
    Complex64::new(pre, 0.0) * bracket * Complex64::new(phase.cos(), phase.sin())
}

pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|n| {
            xp[n] = x[n] + h;
            let up = f(&xp);
            xp[n] = x[n] - h;
            let down = f(&xp);
            xp[n] = x[n];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Every `levels^n` phase vector with entries `2 pi k / levels`; returns the
/// largest value of `score` and its argument.
pub fn enumerate_phases<F: FnMut(&[f64]) -> f64>(n: usize, levels: usize, mut score: F) -> (f64, Vec<f64>) {
    let mut idx = vec![0usize; n];
    let mut phases = vec![0.0; n];
    let mut best = (f64::NEG_INFINITY, phases.clone());
    loop {
        for (p, &k) in phases.iter_mut().zip(&idx) {
            *p = 2.0 * PI * k as f64 / levels as f64;
        }
        let s = score(&phases);
        if s > best.0 {
            best = (s, phases.clone());
        }
        let mut d = 0;
        loop {
            if d == n {
                return best;
            }
            idx[d] += 1;
            if idx[d] < levels {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

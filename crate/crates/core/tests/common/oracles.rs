//! Reference solutions computed without the library's numerics.
#![allow(dead_code)]

use num_complex::Complex64;

/// Exact solution at time `t` of `a' = -mu a + sigma a(t - tau)` with
/// constant history `c`, by the method of steps in closed form. On the
/// `k`-th delay interval, with local time `s`,
/// `a(s) = alpha_k + e^{-mu s} sum_j p_{k,j} s^j`.
pub fn scalar_delay_exact(mu: f64, sigma: f64, tau: f64, c: f64, t: f64) -> f64 {
    let mut alpha = c;
    let mut poly: Vec<f64> = Vec::new();
    let eval = |alpha: f64, poly: &[f64], s: f64| {
        alpha + (-mu * s).exp() * poly.iter().rev().fold(0.0, |acc, &p| acc * s + p)
    };
    let mut start = c;
    let mut k = 0usize;
    loop {
        let next_alpha = sigma * alpha / mu;
        let mut next_poly = vec![start - next_alpha];
        for (j, &p) in poly.iter().enumerate() {
            next_poly.push(sigma * p / (j + 1) as f64);
        }
        let local = t - k as f64 * tau;
        if local <= tau {
            return eval(next_alpha, &next_poly, local);
        }
        start = eval(next_alpha, &next_poly, tau);
        alpha = next_alpha;
        poly = next_poly;
        k += 1;
    }
}

/// Branch `k` of the Lambert W function by Halley iteration.
pub fn lambert_w(z: Complex64, k: i32) -> Complex64 {
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI * k as f64);
    let l1 = z.ln() + two_pi_i;
    let mut w = if k == 0 && z.im == 0.0 && z.re < 3.0 {
        Complex64::new((1.0 + z.re).ln().max(0.0), 0.0)
    } else {
        l1 - l1.ln()
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.norm() < 1e-16 * w.norm().max(1.0) {
            break;
        }
    }
    w
}

/// Roots of `lambda + a = sigma e^{-lambda tau}` on Lambert branch `k`:
/// with `z = (lambda + a) tau`, `z e^z = sigma tau e^{a tau}`.
pub fn characteristic_root_branch(a: f64, sigma: f64, tau: f64, k: i32) -> Complex64 {
    let arg = Complex64::new(sigma * tau * (a * tau).exp(), 0.0);
    lambert_w(arg, k) / tau - a
}

/// Real root of `x + a - sigma e^{-x tau}` by plain bisection.
pub fn real_root_bisection(a: f64, sigma: f64, tau: f64) -> f64 {
    let h = |x: f64| x + a - sigma * (-x * tau).exp();
    let (mut lo, mut hi) = (-a - 1.0, sigma.max(0.0) + 1.0);
    while h(lo) > 0.0 {
        lo = 2.0 * lo - 1.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `int_t^{t+1} sup_{theta in [-tau,0]} e^{-2 r max(s + theta, 0)} ds` times
/// `amp`, the unit-window gradient energy of a single decaying mode whose
/// squared gradient norm is `amp` at time 0.
pub fn decaying_mode_energy(amp: f64, r: f64, tau: f64, t: f64) -> f64 {
    // Integrand is amp for s < tau and amp e^{-2r(s - tau)} afterwards.
    let flat_end = tau.min(t + 1.0).max(t);
    let flat = amp * (flat_end - t);
    let a = flat_end.max(tau);
    let b = t + 1.0;
    let decay = if b > a {
        amp * ((-2.0 * r * (a - tau)).exp() - (-2.0 * r * (b - tau)).exp()) / (2.0 * r)
    } else {
        0.0
    };
    flat + decay
}

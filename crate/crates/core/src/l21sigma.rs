//! Nonuniform L2-1σ approximation of the Caputo derivative.
//!
//! At step `n` the derivative is taken at the offset point
//! `t_{n-1} + σ τ_n` with `σ = 1 - α/2`. On every earlier interval
//! `[t_{k-1}, t_k]` the solution is replaced by its quadratic interpolant
//! through `t_{k-1}, t_k, t_{k+1}`; on the last partial interval by the linear
//! interpolant through `t_{n-1}, t_n`. The kernel integrals are evaluated in
//! closed form, so the formula is exact for polynomials of degree two.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::mesh::TimeMesh;
use crate::weights::validate_alpha;

/// Offset parameter `σ = 1 - α/2`.
pub fn sigma(alpha: f64) -> f64 {
    1.0 - alpha / 2.0
}

/// Offset time `t_{n-1} + σ τ_n`.
pub fn offset_time(mesh: &TimeMesh, alpha: f64, n: usize) -> f64 {
    mesh.t(n - 1) + sigma(alpha) * mesh.step(n)
}

/// Coefficients `c_0..c_n` with `D^{n-α/2} u ≈ Σ_m c_m u^m`.
pub fn coefficients(alpha: f64, mesh: &TimeMesh, n: usize) -> Result<Vec<f64>> {
    validate_alpha(alpha)?;
    if n == 0 || n > mesh.steps() {
        return Err(Error::InvalidParameter(format!(
            "L2-1σ step index {n} outside 1..={}",
            mesh.steps()
        )));
    }
    let t = mesh.nodes();
    let t_star = offset_time(mesh, alpha, n);
    let one_m = 1.0 - alpha;
    let two_m = 2.0 - alpha;
    let inv_g1 = if alpha == 1.0 { 0.0 } else { 1.0 / gamma(one_m) };
    let inv_g2 = 1.0 / gamma(two_m);
    let tau = |k: usize| t[k] - t[k - 1];

    // slope_coef[k] multiplies (u^k - u^{k-1}) / τ_k, k = 1..=n
    let mut slope_coef = vec![0.0; n + 1];
    for k in 1..n {
        let x_lo = t_star - t[k];
        let x_hi = t_star - t[k - 1];
        let a_k = pow_diff(x_lo, x_hi, one_m) * inv_g2;
        let b_k = if inv_g1 == 0.0 {
            0.0
        } else {
            curvature_integral(x_lo, x_hi, alpha, one_m, two_m) * inv_g1
        };
        let beta = 2.0 * b_k / (tau(k) + tau(k + 1));
        slope_coef[k] += a_k - beta;
        slope_coef[k + 1] += beta;
    }
    slope_coef[n] += (t_star - t[n - 1]).powf(one_m) * inv_g2;

    let mut c = vec![0.0; n + 1];
    for k in 1..=n {
        let s = slope_coef[k] / tau(k);
        c[k] += s;
        c[k - 1] -= s;
    }
    Ok(c)
}

/// `x_hi^p - x_lo^p` for `0 < x_lo < x_hi`, without cancellation when the
/// interval is short relative to `x_lo`.
fn pow_diff(x_lo: f64, x_hi: f64, p: f64) -> f64 {
    x_lo.powf(p) * (p * ((x_hi - x_lo) / x_lo).ln_1p()).exp_m1()
}

/// `∫_{x_lo}^{x_hi} (c - x) x^{-α} dx` with `c` the interval midpoint.
///
/// The closed form cancels from `O(h)` to `O(h³)` in the half-width `h`, so
/// short intervals far from the evaluation point use the odd-moment series
/// `-c^{2-α} Σ_{j odd} binom(-α, j) 2 r^{j+2} / (j+2)`, `r = h/c`.
fn curvature_integral(x_lo: f64, x_hi: f64, alpha: f64, one_m: f64, two_m: f64) -> f64 {
    let c = 0.5 * (x_lo + x_hi);
    let r = 0.5 * (x_hi - x_lo) / c;
    if r >= 0.1 {
        return c * pow_diff(x_lo, x_hi, one_m) / one_m - pow_diff(x_lo, x_hi, two_m) / two_m;
    }
    let r2 = r * r;
    let mut binom = -alpha; // binom(-α, 1)
    let mut rpow = r * r2; // r^{j+2}
    let mut sum = 0.0;
    let mut j = 1.0;
    loop {
        let term = binom * 2.0 * rpow / (j + 2.0);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        // advance j by two
        binom *= (-alpha - j) / (j + 1.0) * (-alpha - j - 1.0) / (j + 2.0);
        rpow *= r2;
        j += 2.0;
    }
    -c.powf(two_m) * sum
}

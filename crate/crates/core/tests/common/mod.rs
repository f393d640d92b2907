//! Independent oracles shared by the integration tests. Nothing here calls
//! the recurrences, the FFT solver or the steppers under test.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Coefficients of `(1 + c ξ)^β` up to degree `n`.
pub fn binomial_series(beta: f64, c: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    out[0] = 1.0;
    for k in 1..=n {
        out[k] = out[k - 1] * (beta - (k as f64) + 1.0) / k as f64 * c;
    }
    out
}

pub fn series_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
        .collect()
}

/// Power-series long division `a / b`.
pub fn series_div(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n + 1];
    for k in 0..=n {
        let mut s = a[k];
        for j in 1..=k.min(b.len() - 1) {
            s -= b[j] * c[k - j];
        }
        c[k] = s / b[0];
    }
    c
}

/// `p(ξ)^α` with `p(ξ) = (α+1)/(2α) + (α-1)/(2α) ξ`.
fn p_pow(alpha: f64, n: usize) -> Vec<f64> {
    let lead = (alpha + 1.0) / (2.0 * alpha);
    let ratio = (alpha - 1.0) / (alpha + 1.0);
    binomial_series(alpha, ratio, n)
        .into_iter()
        .map(|v| v * lead.powf(alpha))
        .collect()
}

/// `(1 - ξ)^α / p(ξ)^α`.
pub fn omega_oracle(alpha: f64, n: usize) -> Vec<f64> {
    series_div(&binomial_series(alpha, -1.0, n), &p_pow(alpha, n), n)
}

/// `(1 - ξ)^{1-α} p(ξ)^α`.
pub fn theta_oracle(alpha: f64, n: usize) -> Vec<f64> {
    series_mul(&binomial_series(1.0 - alpha, -1.0, n), &p_pow(alpha, n), n)
}

/// `p(ξ)^α / (1 - ξ)^α`.
pub fn vartheta_oracle(alpha: f64, n: usize) -> Vec<f64> {
    series_mul(&binomial_series(-alpha, -1.0, n), &p_pow(alpha, n), n)
}

/// `(3/2 - 2ξ + ξ²/2)^α = (3/2)^α (1 - ξ)^α (1 - ξ/3)^α`.
pub fn fbdf2_oracle(alpha: f64, n: usize) -> Vec<f64> {
    let s = series_mul(
        &binomial_series(alpha, -1.0, n),
        &binomial_series(alpha, -1.0 / 3.0, n),
        n,
    );
    s.into_iter().map(|v| v * 1.5f64.powf(alpha)).collect()
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
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
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)
}

/// Row-major periodic grid on the unit square with nodes `j h`, `j = 1..=m`.
pub fn node(m: usize, j: usize) -> f64 {
    (j + 1) as f64 / m as f64
}

/// Five-point periodic Laplacian, row-major `m × m`.
pub fn laplacian(u: &[f64], m: usize) -> Vec<f64> {
    let h2 = (1.0 / m as f64).powi(2);
    let idx = |j: usize, k: usize| j * m + k;
    let mut out = vec![0.0; m * m];
    for j in 0..m {
        for k in 0..m {
            let up = u[idx((j + 1) % m, k)];
            let dn = u[idx((j + m - 1) % m, k)];
            let lt = u[idx(j, (k + m - 1) % m)];
            let rt = u[idx(j, (k + 1) % m)];
            out[idx(j, k)] = (up + dn + lt + rt - 4.0 * u[idx(j, k)]) / h2;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients for `diag ⊙ x - d Δx = rhs` (SPD for `diag > 0`).
fn cg(diag: &[f64], d: f64, rhs: &[f64], m: usize) -> Vec<f64> {
    let apply = |x: &[f64]| -> Vec<f64> {
        let l = laplacian(x, m);
        x.iter().zip(diag).zip(&l).map(|((xi, di), li)| di * xi - d * li).collect()
    };
    let mut x = vec![0.0; rhs.len()];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = 1e-30 * dot(rhs, rhs).max(1e-300);
    for _ in 0..10 * rhs.len() {
        if rr <= target {
            break;
        }
        let ap = apply(&p);
        let step = rr / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_new = dot(&r, &r);
        for i in 0..p.len() {
            p[i] = r[i] + rr_new / rr * p[i];
        }
        rr = rr_new;
    }
    x
}

/// One Crank–Nicolson convex-splitting step
/// `(U - P)/τ = ε² Δ (U + P)/2 - (U³/3 + P²U/2 + P³/6 - (U + P)/2)`,
/// solved by Newton's method with CG inner solves.
pub fn crank_nicolson_step(prev: &[f64], m: usize, eps: f64, tau: f64) -> Vec<f64> {
    let e2 = eps * eps;
    let lap_p = laplacian(prev, m);
    let residual = |u: &[f64]| -> Vec<f64> {
        let lap_u = laplacian(u, m);
        (0..u.len())
            .map(|i| {
                let (a, b) = (u[i], prev[i]);
                let nl = a * a * a / 3.0 + 0.5 * b * b * a + b * b * b / 6.0 - 0.5 * (a + b);
                (a - b) / tau - 0.5 * e2 * (lap_u[i] + lap_p[i]) + nl
            })
            .collect()
    };
    let mut u = prev.to_vec();
    for _ in 0..50 {
        let r = residual(&u);
        let diag: Vec<f64> = (0..u.len())
            .map(|i| 1.0 / tau + u[i] * u[i] + 0.5 * prev[i] * prev[i] - 0.5)
            .collect();
        let delta = cg(&diag, 0.5 * e2, &r, m);
        let size = delta.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        for i in 0..u.len() {
            u[i] -= delta[i];
        }
        if size < 1e-14 {
            break;
        }
    }
    u
}

/// `sin(2πx) sin(2πy)`.
pub fn sine(x: f64, y: f64) -> f64 {
    (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

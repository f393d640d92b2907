//! Convolution-quadrature weight families.
//!
//! Four sequences are produced here:
//!
//! * `SftrOmega`: weights of the shifted fractional trapezoidal rule with
//!   shift one half, generated by
//!   `ω(ξ) = [(1 - ξ) / (½(1 + ξ) + (1 - ξ)/(2α))]^α`.
//! * `Theta`: coefficients of `θ(ξ) = (1 - ξ) / ω(ξ)`.
//! * `Vartheta`: coefficients of `ϑ(ξ) = 1 / ω(ξ)`, i.e. prefix sums of θ.
//! * `Fbdf2`: coefficients of `(3/2 - 2ξ + ξ²/2)^α` (fractional BDF2).
//!
//! All of them are computed by O(1)-per-term recurrences in double
//! precision. The SFTR and θ sequences carry the sign structure the energy
//! and maximum-principle arguments rely on; [`WeightSequence::check_invariants`]
//! verifies it on a computed prefix.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Which generating function a [`WeightSequence`] expands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    SftrOmega,
    Theta,
    Vartheta,
    Fbdf2,
}

impl WeightKind {
    pub fn name(self) -> &'static str {
        match self {
            WeightKind::SftrOmega => "sftr",
            WeightKind::Theta => "theta",
            WeightKind::Vartheta => "vartheta",
            WeightKind::Fbdf2 => "fbdf2",
        }
    }
}

impl std::str::FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sftr" | "omega" | "sftr_omega" => Ok(WeightKind::SftrOmega),
            "theta" => Ok(WeightKind::Theta),
            "vartheta" => Ok(WeightKind::Vartheta),
            "fbdf2" | "f-bdf2" => Ok(WeightKind::Fbdf2),
            other => Err(Error::InvalidParameter(format!("unknown weight kind `{other}`"))),
        }
    }
}

/// A finite prefix `w_0, ..., w_n` of a weight family.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    alpha: f64,
    kind: WeightKind,
    values: Vec<f64>,
}

impl WeightSequence {
    /// Generates `n + 1` weights of the given family.
    pub fn generate(kind: WeightKind, alpha: f64, n: usize) -> Result<Self> {
        match kind {
            WeightKind::SftrOmega => sftr_weights(alpha, n),
            WeightKind::Theta => theta_weights(alpha, n),
            WeightKind::Vartheta => vartheta_weights(alpha, n),
            WeightKind::Fbdf2 => fbdf2_weights(alpha, n),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks the sign, monotonicity and partial-sum structure of the family.
    ///
    /// At `α = 1` the families degenerate to finite polynomials and the strict
    /// inequalities no longer apply; only the exact degenerate values are
    /// checked there.
    pub fn check_invariants(&self) -> InvariantReport {
        let mut report = InvariantReport::default();
        let w = &self.values;
        for (m, &v) in w.iter().enumerate() {
            if v != 0.0 && v.abs() < UNDERFLOW_THRESHOLD {
                report.underflow.push(m);
            }
        }
        let is_underflow = |m: usize| report_has(&report.underflow, m);

        if self.alpha == 1.0 {
            let expected: &[f64] = match self.kind {
                WeightKind::SftrOmega => &[1.0, -1.0],
                WeightKind::Theta => &[1.0],
                WeightKind::Vartheta => &[],
                WeightKind::Fbdf2 => &[1.5, -2.0, 0.5],
            };
            for (m, &v) in w.iter().enumerate() {
                let want = match self.kind {
                    WeightKind::Vartheta => 1.0,
                    _ => expected.get(m).copied().unwrap_or(0.0),
                };
                if (v - want).abs() > 1e-15 {
                    report.violations.push((m, "degenerate value at alpha = 1"));
                }
            }
            return report;
        }

        let mut violations = Vec::new();
        match self.kind {
            WeightKind::SftrOmega | WeightKind::Theta => {
                let mut partial = 0.0;
                for (m, &v) in w.iter().enumerate() {
                    partial += v;
                    if is_underflow(m) {
                        continue;
                    }
                    if m == 0 && v <= 0.0 {
                        violations.push((m, "leading weight not positive"));
                    }
                    if m >= 1 && v >= 0.0 {
                        violations.push((m, "tail weight not negative"));
                    }
                    if self.kind == WeightKind::SftrOmega && m >= 2 && v <= w[m - 1] {
                        violations.push((m, "tail weights not increasing"));
                    }
                    if partial <= 0.0 {
                        violations.push((m, "partial sum not positive"));
                    }
                }
            }
            WeightKind::Vartheta => {
                for (m, &v) in w.iter().enumerate() {
                    if is_underflow(m) {
                        continue;
                    }
                    if v <= 0.0 {
                        violations.push((m, "not positive"));
                    }
                    if m >= 1 && v >= w[m - 1] {
                        violations.push((m, "not strictly decreasing"));
                    }
                }
            }
            WeightKind::Fbdf2 => {
                // No sign structure is claimed for the F-BDF2 family beyond
                // w_0 > 0 and a vanishing total sum.
                if w.first().is_some_and(|&v| v <= 0.0) {
                    violations.push((0, "leading weight not positive"));
                }
            }
        }
        report.violations = violations;
        report
    }
}

const UNDERFLOW_THRESHOLD: f64 = 1e-300;

fn report_has(list: &[usize], m: usize) -> bool {
    list.binary_search(&m).is_ok()
}

/// Outcome of [`WeightSequence::check_invariants`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantReport {
    /// `(index, description)` of every failed property.
    pub violations: Vec<(usize, &'static str)>,
    /// Indices whose magnitude fell below `1e-300`; they are reported but not
    /// treated as sign failures.
    pub underflow: Vec<usize>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(alpha))
    }
}

/// SFTR-½ weights `ω_0..ω_n` from the two-term recurrence.
pub fn sftr_weights(alpha: f64, n: usize) -> Result<WeightSequence> {
    validate_alpha(alpha)?;
    let r = 2.0 * alpha / (alpha + 1.0);
    let mut w = Vec::with_capacity(n + 1);
    w.push(r.powf(alpha));
    if n >= 1 {
        w.push(-alpha * r.powf(alpha + 1.0));
    }
    for m in 2..=n {
        let mf = m as f64;
        let a = (mf - 1.0) / alpha - alpha;
        let b = (alpha - 1.0) / (2.0 * alpha) * (mf - 2.0);
        w.push(r / mf * (a * w[m - 1] + b * w[m - 2]));
    }
    Ok(WeightSequence {
        alpha,
        kind: WeightKind::SftrOmega,
        values: w,
    })
}

/// Coefficients `θ_0..θ_n` of `(1 - ξ)/ω(ξ)`.
pub fn theta_weights(alpha: f64, n: usize) -> Result<WeightSequence> {
    validate_alpha(alpha)?;
    let mut w = Vec::with_capacity(n + 1);
    let t0 = ((alpha + 1.0) / (2.0 * alpha)).powf(alpha);
    w.push(t0);
    if n >= 1 {
        w.push((alpha - 1.0) * (2.0 * alpha + 1.0) / (alpha + 1.0) * t0);
    }
    let c = (1.0 - alpha) / (2.0 * alpha);
    for m in 2..=n {
        let mf = m as f64;
        let a = (mf - 1.0) / alpha - c * (2.0 * alpha + 1.0);
        let b = c * (3.0 - mf);
        w.push(2.0 * alpha / (mf * (1.0 + alpha)) * (a * w[m - 1] + b * w[m - 2]));
    }
    Ok(WeightSequence {
        alpha,
        kind: WeightKind::Theta,
        values: w,
    })
}

/// Coefficients `ϑ_0..ϑ_n` of `1/ω(ξ)`, computed as prefix sums of θ.
pub fn vartheta_weights(alpha: f64, n: usize) -> Result<WeightSequence> {
    let theta = theta_weights(alpha, n)?;
    let values = theta
        .values
        .iter()
        .scan(0.0, |acc, &t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    Ok(WeightSequence {
        alpha,
        kind: WeightKind::Vartheta,
        values,
    })
}

/// Fractional BDF2 weights: coefficients of `(3/2 - 2ξ + ξ²/2)^α`.
///
/// Uses the power-of-a-polynomial recurrence obtained from `g w' = α g' w`.
pub fn fbdf2_weights(alpha: f64, n: usize) -> Result<WeightSequence> {
    validate_alpha(alpha)?;
    const G: [f64; 3] = [1.5, -2.0, 0.5];
    let mut w = Vec::with_capacity(n + 1);
    w.push(G[0].powf(alpha));
    for m in 1..=n {
        let mf = m as f64;
        let mut acc = 0.0;
        for (j, &g) in G.iter().enumerate().skip(1) {
            if j > m {
                break;
            }
            let jf = j as f64;
            acc += (alpha * jf - mf + jf) * g * w[m - j];
        }
        w.push(acc / (mf * G[0]));
    }
    Ok(WeightSequence {
        alpha,
        kind: WeightKind::Fbdf2,
        values: w,
    })
}

/// Cauchy-product coefficients `c_m = Σ_{s=0}^{m} a_s b_{m-s}` for `m = 0..=n`.
pub fn convolve_prefix(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    for (what, len) in [("left operand", a.len()), ("right operand", b.len())] {
        if len < n + 1 {
            return Err(Error::LengthMismatch {
                what,
                expected: n + 1,
                got: len,
            });
        }
    }
    Ok((0..=n)
        .map(|m| (0..=m).map(|s| a[s] * b[m - s]).sum())
        .collect())
}

/// Error of a convolution quadrature applied to `φ(t) = t²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureError {
    /// Error at the last quadrature node.
    pub at_final: f64,
    /// Largest error over all nodes. The first node carries an
    /// `O(τ^{2-α})` start-up error, so this is not second order.
    pub max_over_steps: f64,
}

fn step_count(tau: f64, t_end: f64) -> Result<usize> {
    if !(tau > 0.0 && t_end > 0.0 && tau.is_finite() && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tau = {tau} and t_end = {t_end} must be positive"
        )));
    }
    let n = (t_end / tau).round();
    if n < 1.0 || (n * tau - t_end).abs() > 1e-9 * t_end {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} is not an integer multiple of tau = {tau}"
        )));
    }
    Ok(n as usize)
}

/// SFTR-½ approximation of the Caputo derivative of `t²` at the shifted nodes
/// `t_{n-1/2}`, compared with the exact value `2 t^{2-α} / Γ(3-α)`.
pub fn caputo_quadrature_error(alpha: f64, tau: f64, t_end: f64) -> Result<QuadratureError> {
    validate_alpha(alpha)?;
    let n_steps = step_count(tau, t_end)?;
    let w = sftr_weights(alpha, n_steps)?;
    let phi: Vec<f64> = (0..=n_steps).map(|k| (k as f64 * tau).powi(2)).collect();
    let scale = tau.powf(-alpha);
    let g = gamma(3.0 - alpha);
    let mut err = QuadratureError {
        at_final: 0.0,
        max_over_steps: 0.0,
    };
    for n in 1..=n_steps {
        let approx: f64 = scale
            * (0..=n)
                .map(|m| w.values[m] * (phi[n - m] - phi[0]))
                .sum::<f64>();
        let t_half = (n as f64 - 0.5) * tau;
        let exact = 2.0 * t_half.powf(2.0 - alpha) / g;
        let e = (approx - exact).abs();
        err.max_over_steps = err.max_over_steps.max(e);
        err.at_final = e;
    }
    Ok(err)
}

/// ϑ quadrature `τ^α Σ ϑ_m φ^{n-m}` of the Riemann–Liouville integral of
/// `t²` at `t_{n+1/2}`, compared with `2 t^{2+α} / Γ(3+α)`.
pub fn vartheta_quadrature_error(alpha: f64, tau: f64, t_end: f64) -> Result<QuadratureError> {
    validate_alpha(alpha)?;
    let n_steps = step_count(tau, t_end)?;
    let w = vartheta_weights(alpha, n_steps)?;
    let phi: Vec<f64> = (0..=n_steps).map(|k| (k as f64 * tau).powi(2)).collect();
    let scale = tau.powf(alpha);
    let g = gamma(3.0 + alpha);
    let mut err = QuadratureError {
        at_final: 0.0,
        max_over_steps: 0.0,
    };
    for n in 1..=n_steps {
        let approx: f64 = scale * (0..=n).map(|m| w.values[m] * phi[n - m]).sum::<f64>();
        let t_half = (n as f64 + 0.5) * tau;
        let exact = 2.0 * t_half.powf(2.0 + alpha) / g;
        let e = (approx - exact).abs();
        err.max_over_steps = err.max_over_steps.max(e);
        err.at_final = e;
    }
    Ok(err)
}

//! Discrete energies and per-step structure checks.
//!
//! `E_h^n = (ε²/2)‖∇_h U^n‖² + ¼‖(U^n)² - 1‖²` is the discrete Ginzburg–Landau
//! energy. For SFTR-½ runs without a source the monitor also tracks the
//! compatible energy
//! `𝓔_h^n = E_h^n + (τ^α/2) Σ_{s=1}^{n} ϑ_{n-s} ‖V^{s-1/2}‖²`
//! with slopes `V^{s-1/2} = ε² Δ_h U^{s-1/2} - f^{s-1,s}`, and the decay
//! residual `𝓔_h^n - 𝓔_h^{n-1} + (τ^α/2) ϑ_{n-1} ‖V^{n-1/2}‖²`, which is
//! nonpositive for exact step solutions.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{fmt_num, grad_norm_sq, laplacian, norm_l2, Field};
use crate::stepper::{nonlinear_term, RunConfig, Scheme};
use crate::weights::{vartheta_weights, WeightSequence};

/// Absolute tolerance of the maximum-principle check.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-12;

pub fn discrete_energy(u: &Field, eps: f64) -> f64 {
    let h = u.grid().h();
    let well: f64 = u.values().iter().map(|&v| (v * v - 1.0).powi(2)).sum();
    0.5 * eps * eps * grad_norm_sq(u) + 0.25 * h * h * well
}

/// `V^{n-1/2} = ε² Δ_h (U^n + U^{n-1})/2 - f^{n-1,n}`.
pub fn variational_slope(un: &Field, unm1: &Field, eps: f64) -> Result<Field> {
    let mid = un.zip_map(unm1, |a, b| 0.5 * (a + b))?;
    let mut v = laplacian(&mid);
    v.scale(eps * eps);
    v.axpy(-1.0, &nonlinear_term(un, unm1)?)?;
    Ok(v)
}

/// Compatible energy from `E_h^n` and the squared slope norms
/// `‖V^{s-1/2}‖²`, `s = 1..=n` (so `n = slope_norms_sq.len()`).
pub fn compatible_energy(
    energy: f64,
    slope_norms_sq: &[f64],
    vartheta: &WeightSequence,
    tau: f64,
) -> Result<f64> {
    let n = slope_norms_sq.len();
    if vartheta.len() < n {
        return Err(Error::InsufficientHistory {
            step: n,
            needed: n,
            have: vartheta.len(),
        });
    }
    let w = vartheta.values();
    let memory: f64 = slope_norms_sq
        .iter()
        .enumerate()
        .map(|(s, &v)| w[n - 1 - s] * v)
        .sum();
    Ok(energy + 0.5 * tau.powf(vartheta.alpha()) * memory)
}

/// Decay residual at step `n ≥ 1`.
pub fn decay_residual(
    compatible_now: f64,
    compatible_prev: f64,
    latest_slope_norm_sq: f64,
    vartheta: &WeightSequence,
    n: usize,
    tau: f64,
) -> f64 {
    compatible_now - compatible_prev
        + 0.5 * tau.powf(vartheta.alpha()) * vartheta.values()[n - 1] * latest_slope_norm_sq
}

/// One monitor row.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRecord {
    pub n: usize,
    pub t: f64,
    pub linf: f64,
    pub energy: f64,
    /// `None` when the compatible energy is not defined for the run.
    pub compatible_energy: Option<f64>,
    /// `None` at `n = 0` and when not tracked.
    pub decay_residual: Option<f64>,
    pub fp_iters: usize,
}

/// Outcome of the maximum-principle check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPrincipleReport {
    /// `false` when `‖U^0‖_∞ > 1`, in which case nothing is claimed.
    pub applicable: bool,
    /// First step with `‖U^n‖_∞ > 1 + tol`, and its max norm.
    pub first_violation: Option<(usize, f64)>,
}

impl MaxPrincipleReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

fn max_principle_from_norms(norms: impl Iterator<Item = (usize, f64)>) -> MaxPrincipleReport {
    let mut norms = norms.peekable();
    let applicable = norms.peek().is_some_and(|&(_, v)| v <= 1.0 + MAX_PRINCIPLE_TOL);
    if !applicable {
        return MaxPrincipleReport {
            applicable,
            first_violation: None,
        };
    }
    MaxPrincipleReport {
        applicable,
        first_violation: norms.find(|&(_, v)| v > 1.0 + MAX_PRINCIPLE_TOL),
    }
}

/// Checks `‖U^n‖_∞ ≤ 1` over stored levels (level 0 first).
pub fn max_principle_check(levels: &[Field]) -> MaxPrincipleReport {
    max_principle_from_norms(levels.iter().map(|u| u.max_abs()).enumerate())
}

/// Per-step record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonitorLog {
    pub records: Vec<MonitorRecord>,
    /// Allowance for the decay residual, `100 fp_tol max(1, τ^{-α})`.
    pub decay_slack: Option<f64>,
}

impl MonitorLog {
    pub fn max_principle(&self) -> MaxPrincipleReport {
        max_principle_from_norms(self.records.iter().map(|r| (r.n, r.linf)))
    }

    /// First step whose decay residual exceeds the slack, if any.
    pub fn first_decay_violation(&self) -> Option<(usize, f64)> {
        let slack = self.decay_slack?;
        self.records
            .iter()
            .filter_map(|r| r.decay_residual.map(|d| (r.n, d)))
            .find(|&(_, d)| d > slack)
    }

    /// Largest decay residual over the run.
    pub fn max_decay_residual(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.decay_residual)
            .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d))))
    }

    /// Writes `energy.csv`: `#` header lines, then
    /// `n,t,linf,E_h,E_c,decay_residual,fp_iters`. Undefined entries are `nan`.
    pub fn write_csv<W: Write>(&self, out: &mut W, header: &[String]) -> Result<()> {
        let mut s = String::new();
        for line in header {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s.push_str("n,t,linf,E_h,E_c,decay_residual,fp_iters\n");
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), fmt_num);
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n,
                fmt_num(r.t),
                fmt_num(r.linf),
                fmt_num(r.energy),
                opt(r.compatible_energy),
                opt(r.decay_residual),
                r.fp_iters
            ));
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }
}

/// Incremental monitor driven by the time loop.
#[derive(Debug, Clone)]
pub struct EnergyMonitor {
    eps: f64,
    compatible: Option<(WeightSequence, f64)>,
    slope_norms_sq: Vec<f64>,
    log: MonitorLog,
}

impl EnergyMonitor {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let tracked = config.scheme == Scheme::SftrHalf && config.source.is_none();
        let compatible = match (tracked, config.mesh.uniform_tau()) {
            (true, Some(tau)) => Some((vartheta_weights(config.alpha, config.mesh.steps())?, tau)),
            _ => None,
        };
        let decay_slack = compatible
            .as_ref()
            .map(|(_, tau)| 100.0 * config.fp_tol * tau.powf(-config.alpha).max(1.0));
        Ok(Self {
            eps: config.eps,
            compatible,
            slope_norms_sq: Vec::new(),
            log: MonitorLog {
                records: Vec::new(),
                decay_slack,
            },
        })
    }

    pub fn record_initial(&mut self, u0: &Field) {
        let energy = discrete_energy(u0, self.eps);
        self.log.records.push(MonitorRecord {
            n: 0,
            t: 0.0,
            linf: u0.max_abs(),
            energy,
            compatible_energy: self.compatible.as_ref().map(|_| energy),
            decay_residual: None,
            fp_iters: 0,
        });
    }

    pub fn record_step(&mut self, n: usize, t: f64, un: &Field, unm1: &Field, fp_iters: usize) -> Result<()> {
        let energy = discrete_energy(un, self.eps);
        let (compatible_energy, decay) = match &self.compatible {
            Some((vartheta, tau)) => {
                let slope = variational_slope(un, unm1, self.eps)?;
                let v2 = norm_l2(&slope).powi(2);
                self.slope_norms_sq.push(v2);
                let now = compatible_energy(energy, &self.slope_norms_sq, vartheta, *tau)?;
                let prev = self
                    .log
                    .records
                    .last()
                    .and_then(|r| r.compatible_energy)
                    .expect("initial record present");
                (Some(now), Some(decay_residual(now, prev, v2, vartheta, n, *tau)))
            }
            None => (None, None),
        };
        self.log.records.push(MonitorRecord {
            n,
            t,
            linf: un.max_abs(),
            energy,
            compatible_energy,
            decay_residual: decay,
            fp_iters,
        });
        Ok(())
    }

    pub fn log(&self) -> &MonitorLog {
        &self.log
    }

    pub fn into_log(self) -> MonitorLog {
        self.log
    }
}

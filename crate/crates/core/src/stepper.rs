//! Fully discrete time stepping for `∂_t^α u = ε² Δ u - f(u) + s`.
//!
//! Every scheme reduces one step to the same algebraic problem for the
//! unknown level `U = U^n` given the previous level `P = U^{n-1}`:
//!
//! ```text
//! d0 U + K = ε² Δ_h (κ U + (1-κ) P) - f^{*}(λ U + (1-λ) P, P) + s(t*)
//! ```
//!
//! where `d0` is the implicit weight of the time-derivative approximation,
//! `K` its lagged history part, and `f^{*}(a, b)` the convex-splitting
//! nonlinear term (see [`nonlinear_term`]). The problem is solved by a
//! stabilised fixed-point iteration in which every sweep is one
//! Fourier-diagonal Helmholtz solve.

use std::fmt;
use std::sync::Arc;

use crate::energy::{EnergyMonitor, MonitorLog};
use crate::error::{Error, Result};
use crate::grid::{laplacian, Field, Grid2D};
use crate::l21sigma;
use crate::mesh::TimeMesh;
use crate::spectral::HelmholtzSolver;
use crate::weights::{fbdf2_weights, sftr_weights, validate_alpha, WeightSequence};

/// Time discretisation of the Caputo derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Shifted fractional trapezoidal rule with shift ½, collocated at `t_{n-1/2}`.
    SftrHalf,
    /// Average of fractional BDF2 at `t_n` and `t_{n-1}`.
    Fbdf2,
    /// Nonuniform L2-1σ at `t_{n-1} + σ τ_n`.
    L21Sigma,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::SftrHalf => "sftr",
            Scheme::Fbdf2 => "fbdf2",
            Scheme::L21Sigma => "l21sigma",
        }
    }

    pub fn requires_uniform_mesh(self) -> bool {
        matches!(self, Scheme::SftrHalf | Scheme::Fbdf2)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sftr" | "sftr_half" | "sftr-1/2" => Ok(Scheme::SftrHalf),
            "fbdf2" | "f-bdf2" => Ok(Scheme::Fbdf2),
            "l21sigma" | "l2-1sigma" | "l21_sigma" => Ok(Scheme::L21Sigma),
            other => Err(Error::InvalidParameter(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Source term `s(x, y, t)`.
pub type Source = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

pub const DEFAULT_FP_TOL: f64 = 1e-6;
pub const DEFAULT_FP_MAX_ITER: usize = 100;

/// Complete description of one solve.
#[derive(Clone)]
pub struct RunConfig {
    pub alpha: f64,
    pub eps: f64,
    pub grid: Grid2D,
    pub mesh: TimeMesh,
    pub scheme: Scheme,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub source: Option<Source>,
    pub seed: Option<u64>,
}

impl fmt::Debug for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunConfig")
            .field("alpha", &self.alpha)
            .field("eps", &self.eps)
            .field("grid", &self.grid)
            .field("mesh", &self.mesh)
            .field("scheme", &self.scheme)
            .field("fp_tol", &self.fp_tol)
            .field("fp_max_iter", &self.fp_max_iter)
            .field("source", &self.source.as_ref().map(|_| "<fn>"))
            .field("seed", &self.seed)
            .finish()
    }
}

impl RunConfig {
    /// Config with default solver tolerances and no source.
    pub fn new(alpha: f64, eps: f64, grid: Grid2D, mesh: TimeMesh, scheme: Scheme) -> Self {
        Self {
            alpha,
            eps,
            grid,
            mesh,
            scheme,
            fp_tol: DEFAULT_FP_TOL,
            fp_max_iter: DEFAULT_FP_MAX_ITER,
            source: None,
            seed: None,
        }
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = Some(source);
        self
    }

    pub fn with_fp_tol(mut self, tol: f64) -> Self {
        self.fp_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.fp_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "fp_tol must be positive, got {}",
                self.fp_tol
            )));
        }
        if self.fp_max_iter == 0 {
            return Err(Error::InvalidParameter("fp_max_iter must be at least 1".into()));
        }
        if self.scheme.requires_uniform_mesh() && !self.mesh.is_uniform() {
            return Err(Error::InvalidParameter(format!(
                "scheme {} requires a uniform time mesh",
                self.scheme
            )));
        }
        Ok(())
    }
}

/// Stored solution levels `U^0..U^n` with per-step iteration counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    levels: Vec<Field>,
    iterations: Vec<usize>,
}

impl Trajectory {
    pub fn new(u0: Field) -> Self {
        Self {
            levels: vec![u0],
            iterations: Vec::new(),
        }
    }

    /// Builds a trajectory from given levels (zero iteration counts).
    pub fn from_levels(levels: Vec<Field>) -> Result<Self> {
        let first = levels
            .first()
            .ok_or_else(|| Error::InvalidParameter("trajectory needs at least one level".into()))?;
        for l in &levels {
            first.ensure_same_grid(l)?;
        }
        let iterations = vec![0; levels.len() - 1];
        Ok(Self { levels, iterations })
    }

    pub fn push(&mut self, level: Field, iterations: usize) {
        self.levels.push(level);
        self.iterations.push(iterations);
    }

    pub fn levels(&self) -> &[Field] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &Field {
        &self.levels[n]
    }

    pub fn last(&self) -> &Field {
        self.levels.last().expect("trajectory is never empty")
    }

    /// Number of stored levels, i.e. completed steps plus one.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fixed-point iteration counts of steps `1..`.
    pub fn iterations(&self) -> &[usize] {
        &self.iterations
    }

    fn require(&self, n: usize) -> Result<()> {
        if self.levels.len() < n {
            Err(Error::InsufficientHistory {
                step: n,
                needed: n,
                have: self.levels.len(),
            })
        } else {
            Ok(())
        }
    }
}

/// Convex-splitting nonlinear term
/// `a³/3 + b²a/2 + b³/6 - (a + b)/2` for the pair `a = U^n`, `b = U^{n-1}`.
pub fn nonlinear_scalar(a: f64, b: f64) -> f64 {
    a * a * a / 3.0 + 0.5 * b * b * a + b * b * b / 6.0 - 0.5 * (a + b)
}

/// Double-well potential `F(u) = (1 - u²)² / 4`.
pub fn double_well(u: f64) -> f64 {
    0.25 * (1.0 - u * u).powi(2)
}

/// Pointwise [`nonlinear_scalar`] on fields.
pub fn nonlinear_term(un: &Field, unm1: &Field) -> Result<Field> {
    un.zip_map(unm1, nonlinear_scalar)
}

/// Sufficient step-size bounds for unique solvability and for the discrete
/// maximum principle of the SFTR-½ scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeBounds {
    /// `2^{1/α} · 2α/(α+1)`.
    pub solvability: f64,
    /// `(α h² / (2ε²))^{1/α} (2α/(α+1))^{(α+1)/α}`.
    pub diffusion_limit: f64,
}

impl StepSizeBounds {
    /// The maximum-principle bound, the smaller of the two limits.
    pub fn max_principle(&self) -> f64 {
        self.solvability.min(self.diffusion_limit)
    }
}

pub fn step_size_bounds(alpha: f64, eps: f64, h: f64) -> StepSizeBounds {
    let r = 2.0 * alpha / (alpha + 1.0);
    StepSizeBounds {
        solvability: 2f64.powf(1.0 / alpha) * r,
        diffusion_limit: (alpha * h * h / (2.0 * eps * eps)).powf(1.0 / alpha)
            * r.powf((alpha + 1.0) / alpha),
    }
}

/// Lagged SFTR history `τ^{-α} Σ_{m=1}^{n} ω_m (U^{n-m} - U^0)`.
pub fn sftr_history(weights: &WeightSequence, traj: &Trajectory, n: usize, tau: f64) -> Result<Field> {
    if n == 0 {
        return Err(Error::InvalidParameter("history needs n >= 1".into()));
    }
    traj.require(n)?;
    if weights.len() < n + 1 {
        return Err(Error::LengthMismatch {
            what: "weights",
            expected: n + 1,
            got: weights.len(),
        });
    }
    let w = weights.values();
    let u0 = traj.level(0);
    let mut acc = Field::zeros(*u0.grid());
    for m in 1..n {
        // m = n contributes ω_n (U^0 - U^0) = 0
        let level = traj.level(n - m);
        let coef = w[m];
        for ((a, &u), &z) in acc
            .values_mut()
            .iter_mut()
            .zip(level.values())
            .zip(u0.values())
        {
            *a += coef * (u - z);
        }
    }
    acc.scale(tau.powf(-weights.alpha()));
    Ok(acc)
}

/// Lagged part of the averaged F-BDF2 approximation at `t_{n-1/2}`:
/// `½ τ^{-α} [Σ_{j=1}^{n} ω̃_j (U^{n-j} - U^0) + Σ_{j=0}^{n-1} ω̃_j (U^{n-1-j} - U^0)]`.
pub fn fbdf2_history(weights: &WeightSequence, traj: &Trajectory, n: usize, tau: f64) -> Result<Field> {
    if n == 0 {
        return Err(Error::InvalidParameter("history needs n >= 1".into()));
    }
    traj.require(n)?;
    if weights.len() < n + 1 {
        return Err(Error::LengthMismatch {
            what: "weights",
            expected: n + 1,
            got: weights.len(),
        });
    }
    let w = weights.values();
    let u0 = traj.level(0);
    let mut acc = Field::zeros(*u0.grid());
    for m in 1..n {
        let coef = w[n - m] + w[n - 1 - m];
        for ((a, &u), &z) in acc
            .values_mut()
            .iter_mut()
            .zip(traj.level(m).values())
            .zip(u0.values())
        {
            *a += coef * (u - z);
        }
    }
    acc.scale(0.5 * tau.powf(-weights.alpha()));
    Ok(acc)
}

/// Algebraic problem for one step; see the module docs.
#[derive(Debug, Clone)]
pub struct StepSystem {
    pub d0: f64,
    pub lagged: Field,
    pub diffusion_weight: f64,
    pub nonlinear_weight: f64,
    pub source_time: f64,
}

/// Result of one converged step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub level: Field,
    pub iterations: usize,
    pub last_increment: f64,
}

/// Per-run solver state: weights, transforms, and the config.
pub struct Stepper {
    config: RunConfig,
    helmholtz: HelmholtzSolver,
    weights: Option<WeightSequence>,
}

impl Stepper {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let n = config.mesh.steps();
        let weights = match config.scheme {
            Scheme::SftrHalf => Some(sftr_weights(config.alpha, n)?),
            Scheme::Fbdf2 => Some(fbdf2_weights(config.alpha, n)?),
            Scheme::L21Sigma => None,
        };
        let helmholtz = HelmholtzSolver::new(config.grid);
        Ok(Self {
            config,
            helmholtz,
            weights,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    fn tau(&self) -> f64 {
        self.config
            .mesh
            .uniform_tau()
            .expect("uniform mesh checked in RunConfig::validate")
    }

    /// Assembles the step-`n` system from the stored levels `U^0..U^{n-1}`.
    pub fn system(&self, traj: &Trajectory, n: usize) -> Result<StepSystem> {
        traj.require(n)?;
        let cfg = &self.config;
        let u0 = traj.level(0);
        match cfg.scheme {
            Scheme::SftrHalf => {
                let w = self.weights.as_ref().expect("sftr weights");
                let tau = self.tau();
                let d0 = tau.powf(-cfg.alpha) * w.values()[0];
                let mut lagged = sftr_history(w, traj, n, tau)?;
                lagged.axpy(-d0, u0)?;
                Ok(StepSystem {
                    d0,
                    lagged,
                    diffusion_weight: 0.5,
                    nonlinear_weight: 1.0,
                    source_time: 0.5 * (cfg.mesh.t(n - 1) + cfg.mesh.t(n)),
                })
            }
            Scheme::Fbdf2 => {
                let w = self.weights.as_ref().expect("fbdf2 weights");
                let tau = self.tau();
                let d0 = 0.5 * tau.powf(-cfg.alpha) * w.values()[0];
                let mut lagged = fbdf2_history(w, traj, n, tau)?;
                lagged.axpy(-d0, u0)?;
                Ok(StepSystem {
                    d0,
                    lagged,
                    diffusion_weight: 0.5,
                    nonlinear_weight: 1.0,
                    source_time: 0.5 * (cfg.mesh.t(n - 1) + cfg.mesh.t(n)),
                })
            }
            Scheme::L21Sigma => {
                let c = l21sigma::coefficients(cfg.alpha, &cfg.mesh, n)?;
                let mut lagged = Field::zeros(cfg.grid);
                for (m, &cm) in c[..n].iter().enumerate() {
                    lagged.axpy(cm, traj.level(m))?;
                }
                let sigma = l21sigma::sigma(cfg.alpha);
                Ok(StepSystem {
                    d0: c[n],
                    lagged,
                    diffusion_weight: sigma,
                    nonlinear_weight: 2.0 * sigma,
                    source_time: l21sigma::offset_time(&cfg.mesh, cfg.alpha, n),
                })
            }
        }
    }

    /// Computes `U^n` from `U^0..U^{n-1}`.
    pub fn step(&self, traj: &Trajectory, n: usize) -> Result<StepOutcome> {
        if n == 0 || n > self.config.mesh.steps() {
            return Err(Error::InvalidParameter(format!(
                "step index {n} outside 1..={}",
                self.config.mesh.steps()
            )));
        }
        let system = self.system(traj, n)?;
        self.solve_system(&system, traj.level(n - 1), n)
    }

    fn sample_source(&self, t: f64) -> Option<Field> {
        self.config
            .source
            .as_ref()
            .map(|s| Field::from_fn(self.config.grid, |x, y| s(x, y, t)))
    }

    fn solve_system(&self, sys: &StepSystem, prev: &Field, n: usize) -> Result<StepOutcome> {
        let cfg = &self.config;
        let eps2 = cfg.eps * cfg.eps;
        let kappa = sys.diffusion_weight;
        let lambda = sys.nonlinear_weight;
        let shift = sys.d0 - 0.5 * lambda;
        if !(shift > 0.0) {
            return Err(Error::NegativeShift { step: n, shift });
        }
        // Stabiliser: the lagged map U ↦ a³/3 + b²a/2 has derivative
        // λ(a² + b²/2) ∈ [0, 1.5 λ m²] for |a|, |b| ≤ m.
        let m2 = prev.max_abs().powi(2).max(1.0);
        let stab = 0.75 * lambda * m2;

        // Level-independent part of the right-hand side.
        let lap_prev = laplacian(prev);
        let mut base = Field::zeros(cfg.grid);
        {
            let b = base.values_mut();
            for (i, v) in b.iter_mut().enumerate() {
                let p = prev.values()[i];
                *v = -sys.lagged.values()[i] + (1.0 - kappa) * eps2 * lap_prev.values()[i]
                    - p * p * p / 6.0
                    + 0.5 * (2.0 - lambda) * p;
            }
        }
        if let Some(s) = self.sample_source(sys.source_time) {
            base.axpy(1.0, &s)?;
        }

        let mut current = prev.clone();
        let mut rhs = Field::zeros(cfg.grid);
        let mut increment = f64::INFINITY;
        for iter in 1..=cfg.fp_max_iter {
            {
                let r = rhs.values_mut();
                for (i, v) in r.iter_mut().enumerate() {
                    let u = current.values()[i];
                    let p = prev.values()[i];
                    let a = lambda * u + (1.0 - lambda) * p;
                    *v = base.values()[i] + stab * u - (a * a * a / 3.0 + 0.5 * p * p * a);
                }
            }
            let next = self.helmholtz.solve(shift + stab, kappa * eps2, &rhs)?;
            increment = next.max_abs_diff(&current)?;
            current = next;
            if increment <= cfg.fp_tol {
                return Ok(StepOutcome {
                    level: current,
                    iterations: iter,
                    last_increment: increment,
                });
            }
            if !increment.is_finite() {
                break;
            }
        }
        Err(Error::NonConverged {
            step: n,
            iterations: cfg.fp_max_iter,
            increment,
        })
    }
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub monitor: MonitorLog,
    /// Step-size bound warnings; the bounds are sufficient, not necessary.
    pub warnings: Vec<String>,
}

/// Advances `u0` over the whole mesh.
pub fn run(config: &RunConfig, u0: Field) -> Result<Solution> {
    run_with(config, u0, |_, _| {})
}

/// [`run`] with a callback invoked after every completed step with the step
/// index and the trajectory so far.
pub fn run_with(
    config: &RunConfig,
    u0: Field,
    mut on_step: impl FnMut(usize, &Trajectory),
) -> Result<Solution> {
    if *u0.grid() != config.grid {
        return Err(Error::GridMismatch);
    }
    let stepper = Stepper::new(config.clone())?;
    let mut warnings = Vec::new();
    if config.scheme == Scheme::SftrHalf {
        if let Some(tau) = config.mesh.uniform_tau() {
            let b = step_size_bounds(config.alpha, config.eps, config.grid.h());
            if tau >= b.solvability {
                warnings.push(format!(
                    "tau = {tau} exceeds the solvability bound {:.6e}",
                    b.solvability
                ));
            }
            if tau >= b.max_principle() {
                warnings.push(format!(
                    "tau = {tau} exceeds the maximum-principle bound {:.6e}",
                    b.max_principle()
                ));
            }
        }
    }

    let mut monitor = EnergyMonitor::new(config)?;
    monitor.record_initial(&u0);
    let mut traj = Trajectory::new(u0);
    for n in 1..=config.mesh.steps() {
        let out = stepper.step(&traj, n)?;
        monitor.record_step(n, config.mesh.t(n), &out.level, traj.last(), out.iterations)?;
        traj.push(out.level, out.iterations);
        on_step(n, &traj);
    }
    Ok(Solution {
        trajectory: traj,
        monitor: monitor.into_log(),
        warnings,
    })
}

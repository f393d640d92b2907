//! Experiment drivers: initial data, manufactured solutions, reference
//! solutions, convergence tables and γ-sweeps.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::energy::MonitorLog;
use crate::error::{Error, Result};
use crate::grid::{norm_l2, Field, Grid2D};
use crate::mesh::TimeMesh;
use crate::stepper::{run, run_with, RunConfig, Scheme, Source, DEFAULT_FP_TOL};

/// `0.5 · rand - 0.25` with `rand` i.i.d. uniform on `[0, 1)`.
///
/// The stream is ChaCha8 seeded through `seed_from_u64`, drawn row by row.
pub fn random_initial(grid: Grid2D, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| 0.5 * rng.gen::<f64>() - 0.25)
        .collect();
    Field::from_values(grid, values).expect("sized to grid")
}

/// `sin(2πx) sin(2πy)`.
pub fn sine_initial(grid: Grid2D) -> Field {
    Field::from_fn(grid, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin())
}

/// Smooth manufactured solution `¼ (1 + t³) sin(2πx) sin(2πy)`.
pub fn manufactured_solution(x: f64, y: f64, t: f64) -> f64 {
    0.25 * (1.0 + t * t * t) * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
}

/// Caputo derivative of [`manufactured_solution`] in time.
pub fn manufactured_caputo(x: f64, y: f64, t: f64, alpha: f64) -> f64 {
    let shape = (2.0 * PI * x).sin() * (2.0 * PI * y).sin();
    if t <= 0.0 {
        return 0.0;
    }
    0.25 * 6.0 * t.powf(3.0 - alpha) / gamma(4.0 - alpha) * shape
}

/// `∂_t^α u - ε² Δu + f(u)` for the manufactured solution.
pub fn manufactured_source(x: f64, y: f64, t: f64, alpha: f64, eps: f64) -> f64 {
    let u = manufactured_solution(x, y, t);
    let lap = -8.0 * PI * PI * u;
    manufactured_caputo(x, y, t, alpha) - eps * eps * lap + u * u * u - u
}

/// `rates[i] = log2(errors[i] / errors[i+1])`.
pub fn compute_rates(errors: &[f64]) -> Result<Vec<f64>> {
    if let Some(&e) = errors.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::NonPositiveError(e));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Discrete L² distance `‖u - reference‖`.
pub fn field_error(u: &Field, reference: &Field) -> Result<f64> {
    Ok(norm_l2(&u.zip_map(reference, |a, b| a - b)?))
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub alpha: f64,
    pub scheme: String,
    pub n: usize,
    /// Step size for uniform meshes, grading exponent for graded ones.
    pub tau_or_gamma: f64,
    pub error: f64,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Description of grid, horizon, ε and reference.
    pub metadata: Vec<String>,
}

impl ConvergenceTable {
    /// Appends one series (same α and scheme, successively halved steps) and
    /// fills in its rates.
    pub fn push_series(
        &mut self,
        alpha: f64,
        scheme: &str,
        cells: &[(usize, f64, f64)],
    ) -> Result<()> {
        let errors: Vec<f64> = cells.iter().map(|c| c.2).collect();
        let rates = compute_rates(&errors)?;
        for (i, &(n, tg, error)) in cells.iter().enumerate() {
            self.rows.push(ConvergenceRow {
                alpha,
                scheme: scheme.to_string(),
                n,
                tau_or_gamma: tg,
                error,
                rate: if i == 0 { None } else { Some(rates[i - 1]) },
            });
        }
        Ok(())
    }

    pub fn series(&self, alpha: f64, scheme: &str) -> Vec<&ConvergenceRow> {
        self.rows
            .iter()
            .filter(|r| r.alpha == alpha && r.scheme == scheme)
            .collect()
    }

    pub fn errors(&self, alpha: f64, scheme: &str) -> Vec<f64> {
        self.series(alpha, scheme).iter().map(|r| r.error).collect()
    }

    pub fn rates(&self, alpha: f64, scheme: &str) -> Vec<f64> {
        self.series(alpha, scheme).iter().filter_map(|r| r.rate).collect()
    }

    pub fn extend(&mut self, other: ConvergenceTable) {
        self.rows.extend(other.rows);
        for m in other.metadata {
            if !self.metadata.contains(&m) {
                self.metadata.push(m);
            }
        }
    }
}

/// Final-time errors of L2-1σ over grading exponents at fixed `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSweep {
    pub alpha: f64,
    pub n: usize,
    pub points: Vec<(f64, f64)>,
}

impl GammaSweep {
    /// `(γ, error)` with the smallest error.
    pub fn minimum(&self) -> (f64, f64) {
        self.points
            .iter()
            .copied()
            .fold((f64::NAN, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best })
    }

    pub fn upper_gamma(&self) -> f64 {
        2.0 / self.alpha
    }

    /// Whether the minimum lies strictly inside `(1, 2/α)`.
    pub fn minimum_is_interior(&self) -> bool {
        let (g, _) = self.minimum();
        g > 1.0 && g < self.upper_gamma()
    }
}

/// `count` evenly spaced exponents over `[1, 2/α]`.
pub fn gamma_grid(alpha: f64, count: usize) -> Vec<f64> {
    let hi = 2.0 / alpha;
    if count <= 1 {
        return vec![1.0];
    }
    (0..count)
        .map(|i| 1.0 + (hi - 1.0) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Number of exponents in the default γ-sweep.
pub const GAMMA_SWEEP_POINTS: usize = 17;

fn unit_grid(m: usize) -> Result<Grid2D> {
    Grid2D::unit(m)
}

/// Runs `config` and returns the level at step `n_eval`.
fn solve_to(config: &RunConfig, u0: Field, n_eval: usize) -> Result<Field> {
    let mut cfg = config.clone();
    if n_eval < cfg.mesh.steps() {
        // later levels never influence earlier ones
        cfg.mesh = truncate_mesh(&cfg.mesh, n_eval)?;
    }
    let sol = run(&cfg, u0)?;
    Ok(sol.trajectory.level(n_eval).clone())
}

fn truncate_mesh(mesh: &TimeMesh, n: usize) -> Result<TimeMesh> {
    match mesh.kind() {
        crate::mesh::MeshKind::Uniform => {
            let tau = mesh.t_final() / mesh.steps() as f64;
            TimeMesh::uniform(tau * n as f64, n)
        }
        crate::mesh::MeshKind::Graded { .. } => Err(Error::InvalidMesh(
            "graded meshes are only evaluated at the final time".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Example 1: coarsening from random data

#[derive(Debug, Clone, PartialEq)]
pub struct Example1Settings {
    pub m: usize,
    pub t_final: f64,
    pub tau: f64,
    pub eps: f64,
    pub snapshot_times: Vec<f64>,
    pub fp_tol: f64,
}

impl Default for Example1Settings {
    fn default() -> Self {
        Self {
            m: 200,
            t_final: 20.0,
            tau: 0.05,
            eps: 0.01,
            snapshot_times: vec![5.0, 10.0, 20.0],
            fp_tol: DEFAULT_FP_TOL,
        }
    }
}

impl Example1Settings {
    /// Desk-scale variant: `M = 100`, `T = 5`.
    pub fn fast() -> Self {
        Self {
            m: 100,
            t_final: 5.0,
            ..Self::default()
        }
    }

    pub fn config(&self, alpha: f64, seed: u64) -> Result<RunConfig> {
        let steps = (self.t_final / self.tau).round() as usize;
        let mut cfg = RunConfig::new(
            alpha,
            self.eps,
            unit_grid(self.m)?,
            TimeMesh::uniform(self.t_final, steps)?,
            Scheme::SftrHalf,
        )
        .with_fp_tol(self.fp_tol);
        cfg.seed = Some(seed);
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct Example1Output {
    pub alpha: f64,
    pub seed: u64,
    pub config: RunConfig,
    pub snapshots: Vec<(f64, Field)>,
    pub monitor: MonitorLog,
    pub warnings: Vec<String>,
}

pub fn run_example1(settings: &Example1Settings, alpha: f64, seed: u64) -> Result<Example1Output> {
    let cfg = settings.config(alpha, seed)?;
    let u0 = random_initial(cfg.grid, seed);
    let wanted: Vec<(usize, f64)> = settings
        .snapshot_times
        .iter()
        .filter(|&&t| t <= settings.t_final + 1e-12)
        .map(|&t| ((t / settings.tau).round() as usize, t))
        .collect();
    let mut snapshots = Vec::new();
    let sol = run_with(&cfg, u0, |n, traj| {
        for &(k, t) in &wanted {
            if k == n {
                snapshots.push((t, traj.last().clone()));
            }
        }
    })?;
    Ok(Example1Output {
        alpha,
        seed,
        config: cfg,
        snapshots,
        monitor: sol.monitor,
        warnings: sol.warnings,
    })
}

// ---------------------------------------------------------------------------
// Examples 2 and 3: uniform-mesh convergence for SFTR-½ and F-BDF2

#[derive(Debug, Clone, PartialEq)]
pub struct UniformStudySettings {
    pub m: usize,
    pub t_final: f64,
    pub eps: f64,
    /// Step counts over `[0, T]`, successively doubled.
    pub steps: Vec<usize>,
    /// Errors are measured at `eval_fraction · T`.
    pub eval_fraction: f64,
    /// Reference step count (Example 3 only).
    pub reference_steps: usize,
    pub fp_tol: f64,
    /// Tolerance for the reference run; `fp_tol` if `None`.
    pub reference_fp_tol: Option<f64>,
}

impl UniformStudySettings {
    pub fn example2() -> Self {
        Self {
            m: 200,
            t_final: 1.0,
            eps: 0.005,
            steps: vec![20, 40, 80, 160],
            eval_fraction: 0.5,
            reference_steps: 0,
            fp_tol: DEFAULT_FP_TOL,
            reference_fp_tol: None,
        }
    }

    pub fn example3() -> Self {
        Self {
            reference_steps: 400,
            ..Self::example2()
        }
    }

    fn eval_step(&self, steps: usize) -> Result<usize> {
        let x = self.eval_fraction * steps as f64;
        if (x - x.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "evaluation time is not a node for N = {steps}"
            )));
        }
        Ok(x.round() as usize)
    }

    fn config(&self, alpha: f64, scheme: Scheme, steps: usize) -> Result<RunConfig> {
        Ok(RunConfig::new(
            alpha,
            self.eps,
            unit_grid(self.m)?,
            TimeMesh::uniform(self.t_final, steps)?,
            scheme,
        )
        .with_fp_tol(self.fp_tol))
    }

    fn metadata(&self, what: &str) -> Vec<String> {
        vec![
            format!("{what}"),
            format!("grid = {} points per direction on (0,1)^2", self.m),
            format!("T = {}", self.t_final),
            format!("eps = {}", self.eps),
            format!("error time = {} T", self.eval_fraction),
            format!("fp_tol = {}", self.fp_tol),
        ]
    }
}

fn manufactured_source_fn(alpha: f64, eps: f64) -> Source {
    Arc::new(move |x, y, t| manufactured_source(x, y, t, alpha, eps))
}

/// Example 2: manufactured smooth solution, errors against the exact solution.
pub fn run_example2(settings: &UniformStudySettings, alpha: f64) -> Result<ConvergenceTable> {
    let schemes = [Scheme::SftrHalf, Scheme::Fbdf2];
    let cells: Vec<(Scheme, usize)> = schemes
        .iter()
        .flat_map(|&s| settings.steps.iter().map(move |&n| (s, n)))
        .collect();
    let errors: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(scheme, steps)| {
            let cfg = settings
                .config(alpha, scheme, steps)?
                .with_source(manufactured_source_fn(alpha, settings.eps));
            let n_eval = settings.eval_step(steps)?;
            let u0 = Field::from_fn(cfg.grid, |x, y| manufactured_solution(x, y, 0.0));
            let t_eval = cfg.mesh.t(n_eval);
            let exact = Field::from_fn(cfg.grid, |x, y| manufactured_solution(x, y, t_eval));
            let u = solve_to(&cfg, u0, n_eval)?;
            field_error(&u, &exact)
        })
        .collect();
    let mut table = ConvergenceTable {
        rows: Vec::new(),
        metadata: settings.metadata("reference = exact manufactured solution"),
    };
    for scheme in schemes {
        let series: Vec<(usize, f64, f64)> = cells
            .iter()
            .zip(&errors)
            .filter(|(c, _)| c.0 == scheme)
            .map(|(c, e)| e.clone().map(|e| (c.1, settings.t_final / c.1 as f64, e)))
            .collect::<Result<_>>()?;
        table.push_series(alpha, scheme.name(), &series)?;
    }
    Ok(table)
}

/// Example 3: zero source, sine initial data, errors against each scheme's
/// own fine-step reference on the same spatial grid.
pub fn run_example3(settings: &UniformStudySettings, alpha: f64) -> Result<ConvergenceTable> {
    let schemes = [Scheme::SftrHalf, Scheme::Fbdf2];
    let mut table = ConvergenceTable {
        rows: Vec::new(),
        metadata: settings.metadata(&format!(
            "reference = same scheme with N = {}",
            settings.reference_steps
        )),
    };
    for scheme in schemes {
        let mut all_steps = settings.steps.clone();
        all_steps.push(settings.reference_steps);
        let finals: Vec<Result<Field>> = all_steps
            .par_iter()
            .map(|&steps| {
                let mut cfg = settings.config(alpha, scheme, steps)?;
                if steps == settings.reference_steps {
                    cfg.fp_tol = settings.reference_fp_tol.unwrap_or(settings.fp_tol);
                }
                let n_eval = settings.eval_step(steps)?;
                solve_to(&cfg, sine_initial(cfg.grid), n_eval)
            })
            .collect();
        let finals: Vec<Field> = finals.into_iter().collect::<Result<_>>()?;
        let (reference, coarse) = finals.split_last().expect("reference present");
        let series: Vec<(usize, f64, f64)> = settings
            .steps
            .iter()
            .zip(coarse)
            .map(|(&n, u)| Ok((n, settings.t_final / n as f64, field_error(u, reference)?)))
            .collect::<Result<_>>()?;
        table.push_series(alpha, scheme.name(), &series)?;
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Example 4: SFTR-½ against L2-1σ on graded meshes

#[derive(Debug, Clone, PartialEq)]
pub struct Example4Settings {
    pub m: usize,
    pub t_final: f64,
    pub eps: f64,
    pub steps: Vec<usize>,
    pub reference_steps: usize,
    pub gamma_points: usize,
    pub fp_tol: f64,
}

impl Default for Example4Settings {
    fn default() -> Self {
        Self {
            m: 200,
            t_final: 1.0,
            eps: 0.01,
            steps: vec![32, 64, 128],
            reference_steps: 400,
            gamma_points: GAMMA_SWEEP_POINTS,
            fp_tol: DEFAULT_FP_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Example4Output {
    pub alpha: f64,
    /// `(N, error)` for SFTR-½ on uniform meshes.
    pub sftr: Vec<(usize, f64)>,
    /// `(N, error)` for L2-1σ with `γ = 1`.
    pub l21sigma_uniform: Vec<(usize, f64)>,
    /// One sweep per `N`.
    pub sweeps: Vec<GammaSweep>,
    pub metadata: Vec<String>,
}

impl Example4Output {
    /// Convergence table with rows `sftr`, `l21sigma_uniform`, `l21sigma_min`.
    pub fn table(&self) -> Result<ConvergenceTable> {
        let mut t = ConvergenceTable {
            rows: Vec::new(),
            metadata: self.metadata.clone(),
        };
        let tf = |n: usize| 1.0 / n as f64;
        let sftr: Vec<_> = self.sftr.iter().map(|&(n, e)| (n, tf(n), e)).collect();
        t.push_series(self.alpha, "sftr", &sftr)?;
        let uni: Vec<_> = self
            .l21sigma_uniform
            .iter()
            .map(|&(n, e)| (n, 1.0, e))
            .collect();
        t.push_series(self.alpha, "l21sigma_uniform", &uni)?;
        let min: Vec<_> = self
            .sweeps
            .iter()
            .map(|s| {
                let (g, e) = s.minimum();
                (s.n, g, e)
            })
            .collect();
        t.push_series(self.alpha, "l21sigma_min", &min)?;
        Ok(t)
    }
}

fn final_level(cfg: &RunConfig, u0: Field) -> Result<Field> {
    let sol = run(cfg, u0)?;
    Ok(sol.trajectory.last().clone())
}

/// Example 4 with the γ grid from [`gamma_grid`].
pub fn run_example4(settings: &Example4Settings, alpha: f64) -> Result<Example4Output> {
    run_example4_with(settings, alpha, &gamma_grid(alpha, settings.gamma_points))
}

pub fn run_example4_with(
    settings: &Example4Settings,
    alpha: f64,
    gammas: &[f64],
) -> Result<Example4Output> {
    let grid = unit_grid(settings.m)?;
    let u0 = sine_initial(grid);
    let cfg_for = |scheme: Scheme, steps: usize, gamma: Option<f64>| -> Result<RunConfig> {
        let mesh = match gamma {
            Some(g) => TimeMesh::graded(settings.t_final, steps, g)?,
            None => TimeMesh::uniform(settings.t_final, steps)?,
        };
        Ok(RunConfig::new(alpha, settings.eps, grid, mesh, scheme).with_fp_tol(settings.fp_tol))
    };

    let mut all_steps = settings.steps.clone();
    all_steps.push(settings.reference_steps);

    // SFTR-½: own uniform reference
    let sftr_finals: Vec<Field> = all_steps
        .par_iter()
        .map(|&n| final_level(&cfg_for(Scheme::SftrHalf, n, None)?, u0.clone()))
        .collect::<Result<_>>()?;
    let (sftr_ref, sftr_coarse) = sftr_finals.split_last().expect("reference present");
    let sftr = settings
        .steps
        .iter()
        .zip(sftr_coarse)
        .map(|(&n, u)| Ok((n, field_error(u, sftr_ref)?)))
        .collect::<Result<Vec<_>>>()?;

    // L2-1σ: a reference per γ on the graded mesh with the same exponent
    let per_gamma: Vec<Vec<f64>> = gammas
        .par_iter()
        .map(|&g| {
            let finals: Vec<Field> = all_steps
                .iter()
                .map(|&n| final_level(&cfg_for(Scheme::L21Sigma, n, Some(g))?, u0.clone()))
                .collect::<Result<_>>()?;
            let (reference, coarse) = finals.split_last().expect("reference present");
            coarse.iter().map(|u| field_error(u, reference)).collect()
        })
        .collect::<Result<_>>()?;

    let sweeps: Vec<GammaSweep> = settings
        .steps
        .iter()
        .enumerate()
        .map(|(i, &n)| GammaSweep {
            alpha,
            n,
            points: gammas.iter().zip(&per_gamma).map(|(&g, e)| (g, e[i])).collect(),
        })
        .collect();
    let uniform_idx = gammas.iter().position(|&g| g == 1.0);
    let l21sigma_uniform = match uniform_idx {
        Some(i) => settings
            .steps
            .iter()
            .enumerate()
            .map(|(k, &n)| (n, per_gamma[i][k]))
            .collect(),
        None => Vec::new(),
    };

    Ok(Example4Output {
        alpha,
        sftr,
        l21sigma_uniform,
        sweeps,
        metadata: vec![
            format!("grid = {} points per direction on (0,1)^2", settings.m),
            format!("T = {}", settings.t_final),
            format!("eps = {}", settings.eps),
            format!("error time = T"),
            format!(
                "reference = same scheme and mesh family with N = {}",
                settings.reference_steps
            ),
            format!("fp_tol = {}", settings.fp_tol),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_initial_range_and_determinism() {
        let g = Grid2D::unit(50).unwrap();
        let a = random_initial(g, 17);
        assert!(a.values().iter().all(|&v| (-0.25..0.25).contains(&v)));
        assert_eq!(a, random_initial(g, 17));
        assert_ne!(a, random_initial(g, 18));
    }

    #[test]
    fn random_initial_mean_is_centred() {
        let m = 200;
        let g = Grid2D::unit(m).unwrap();
        let u = random_initial(g, 3);
        let mean = u.values().iter().sum::<f64>() / g.len() as f64;
        let three_sigma = 3.0 * (0.5 / 12f64.sqrt()) / m as f64;
        assert!(mean.abs() < three_sigma, "{mean}");
    }

    #[test]
    fn rates() {
        assert_eq!(compute_rates(&[4e-4, 1e-4]).unwrap(), vec![2.0]);
        let r = compute_rates(&[8.6484e-5, 2.3802e-5]).unwrap();
        assert!((r[0] - 1.86).abs() < 5e-3);
        assert!(compute_rates(&[1e-3]).unwrap().is_empty());
        assert!(matches!(compute_rates(&[1e-3, 0.0]), Err(Error::NonPositiveError(_))));
    }

    #[test]
    fn field_error_cases() {
        let g = Grid2D::unit(8).unwrap();
        let u = sine_initial(g);
        assert_eq!(field_error(&u, &u).unwrap(), 0.0);
        let shifted = u.map(|v| v + 0.3);
        assert!((field_error(&shifted, &u).unwrap() - 0.3).abs() < 1e-14);
        assert!(field_error(&u, &Field::zeros(Grid2D::unit(4).unwrap())).is_err());
    }

    #[test]
    fn manufactured_source_at_time_zero() {
        let (x, y, alpha, eps) = (0.13, 0.71, 0.4, 0.05);
        let u0 = manufactured_solution(x, y, 0.0);
        let expect = 8.0 * PI * PI * eps * eps * u0 + u0.powi(3) - u0;
        assert!((manufactured_source(x, y, 0.0, alpha, eps) - expect).abs() < 1e-14);
    }

    #[test]
    fn manufactured_caputo_at_alpha_one_is_classical() {
        let (x, y, t) = (0.3, 0.2, 0.7);
        let shape = (2.0 * PI * x).sin() * (2.0 * PI * y).sin();
        let expect = 0.75 * t * t * shape;
        assert!((manufactured_caputo(x, y, t, 1.0) - expect).abs() < 1e-14);
    }

    #[test]
    fn gamma_grid_spans_range() {
        let g = gamma_grid(0.2, 17);
        assert_eq!(g.len(), 17);
        assert_eq!(g[0], 1.0);
        assert!((g[16] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_minimum() {
        let s = GammaSweep {
            alpha: 0.5,
            n: 8,
            points: vec![(1.0, 3.0), (2.0, 1.0), (3.0, 2.0), (4.0, 5.0)],
        };
        assert_eq!(s.minimum(), (2.0, 1.0));
        assert!(s.minimum_is_interior());
    }
}

mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use fracphase::energy::{compatible_energy, discrete_energy, variational_slope};
use fracphase::grid::{inner, laplacian, norm_l2};
use fracphase::harness::{manufactured_caputo, random_initial};
use fracphase::stepper::nonlinear_term;
use fracphase::weights::{sftr_weights, vartheta_weights};
use fracphase::{run, Field, Grid2D, RunConfig, Scheme, TimeMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

fn sftr_config(alpha: f64, eps: f64, m: usize, t: f64, n: usize) -> RunConfig {
    RunConfig::new(
        alpha,
        eps,
        Grid2D::unit(m).unwrap(),
        TimeMesh::uniform(t, n).unwrap(),
        Scheme::SftrHalf,
    )
}

#[test]
fn alpha_one_matches_independent_crank_nicolson() {
    let (m, eps, tau, steps) = (16, 0.05, 0.01, 20);
    let cfg = sftr_config(1.0, eps, m, tau * steps as f64, steps);
    let u0 = random_initial(cfg.grid, 11).map(|v| 3.6 * v);
    let sol = run(&cfg, u0.clone()).unwrap();

    let mut prev = u0.values().to_vec();
    let mut worst = 0.0f64;
    for n in 1..=steps {
        let next = common::crank_nicolson_step(&prev, m, eps, tau);
        worst = worst.max(common::max_abs_diff(&next, sol.trajectory.level(n).values()));
        prev = next;
    }
    assert!(worst <= 10.0 * cfg.fp_tol, "{worst:e}");
}

#[test]
fn solution_satisfies_the_scheme_equation() {
    // Substitute the computed levels back into the discrete equation, using a
    // direct double loop for the convolution.
    let (alpha, eps, m, steps) = (0.4, 0.05, 12, 15);
    let mut cfg = sftr_config(alpha, eps, m, 0.3, steps);
    cfg.fp_tol = 1e-13;
    let grid = cfg.grid;
    let u0 = random_initial(grid, 5).map(|v| 3.0 * v);
    let sol = run(&cfg, u0).unwrap();
    let w = sftr_weights(alpha, steps).unwrap();
    let tau: f64 = 0.3 / steps as f64;
    let levels = sol.trajectory.levels();
    for n in 1..=steps {
        let mut caputo = Field::zeros(grid);
        for k in 0..n {
            caputo.axpy(w.values()[k] * tau.powf(-alpha), &(&levels[n - k] - &levels[0])).unwrap();
        }
        let mid = &(&levels[n] + &levels[n - 1]) * 0.5;
        let mut rhs = laplacian(&mid);
        rhs.scale(eps * eps);
        rhs.axpy(-1.0, &nonlinear_term(&levels[n], &levels[n - 1]).unwrap()).unwrap();
        let res = caputo.max_abs_diff(&rhs).unwrap();
        assert!(res < 1e-9, "step {n}: {res:e}");
    }
}

#[test]
fn manufactured_caputo_matches_direct_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let (x, y) = (rng.gen::<f64>(), rng.gen::<f64>());
        let t = rng.gen_range(0.05..1.0);
        let alpha = rng.gen_range(0.05..0.95);
        let shape = common::sine(x, y);
        // ∫_0^t u'(s) (t-s)^{-α} ds with v = (t-s)^{1-α}
        let du = |s: f64| 0.75 * s * s * shape;
        let p = 1.0 / (1.0 - alpha);
        let integrand = |v: f64| du(t - v.powf(p)) * p;
        let integral = common::adaptive_simpson(&integrand, 0.0, t.powf(1.0 - alpha), 1e-12);
        let direct = integral / gamma(1.0 - alpha);
        let got = manufactured_caputo(x, y, t, alpha);
        assert!((got - direct).abs() < 1e-8, "t={t} alpha={alpha}: {got} vs {direct}");
    }
}

#[test]
fn compatible_energy_at_alpha_one_is_the_crank_nicolson_energy() {
    let (eps, steps, tau) = (0.05, 12, 0.02);
    let cfg = sftr_config(1.0, eps, 10, tau * steps as f64, steps);
    let sol = run(&cfg, random_initial(cfg.grid, 2)).unwrap();
    let levels = sol.trajectory.levels();
    let vt = vartheta_weights(1.0, steps).unwrap();
    let mut slopes = Vec::new();
    for n in 1..=steps {
        let v = variational_slope(&levels[n], &levels[n - 1], eps).unwrap();
        slopes.push(inner(&v, &v).unwrap());
        let e = discrete_energy(&levels[n], eps);
        let expect = e + 0.5 * tau * slopes.iter().sum::<f64>();
        let got = compatible_energy(e, &slopes, &vt, tau).unwrap();
        assert!((got - expect).abs() <= 1e-15 * expect.abs().max(1.0));
        let logged = sol.monitor.records[n].compatible_energy.unwrap();
        assert!((logged - expect).abs() <= 1e-13 * expect.abs().max(1.0));
    }
}

#[test]
fn compatible_energy_is_continuous_as_alpha_tends_to_one() {
    let steps = 10;
    let run_at = |alpha: f64| {
        let cfg = sftr_config(alpha, 0.05, 10, 0.2, steps).with_fp_tol(1e-12);
        let sol = run(&cfg, random_initial(cfg.grid, 8)).unwrap();
        sol.monitor.records[steps].compatible_energy.unwrap()
    };
    let (near, at) = (run_at(0.999), run_at(1.0));
    assert!((near - at).abs() < 1e-2 * at, "{near} vs {at}");
}

#[test]
fn energy_decays_and_maximum_principle_holds_under_the_step_bound() {
    for alpha in [0.3, 0.7] {
        let cfg = sftr_config(alpha, 0.05, 24, 2.0, 40);
        let sol = run(&cfg, random_initial(cfg.grid, 1)).unwrap();
        assert!(sol.monitor.max_principle().passed());
        assert!(sol.monitor.first_decay_violation().is_none());
        let e: Vec<f64> = sol
            .monitor
            .records
            .iter()
            .map(|r| r.compatible_energy.unwrap())
            .collect();
        assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }
}

#[test]
fn runs_are_deterministic() {
    let src: fracphase::stepper::Source = Arc::new(|x, y, t| t * (2.0 * PI * x).cos() * y);
    for scheme in [Scheme::SftrHalf, Scheme::Fbdf2, Scheme::L21Sigma] {
        let mesh = if scheme == Scheme::L21Sigma {
            TimeMesh::graded(0.5, 10, 1.7).unwrap()
        } else {
            TimeMesh::uniform(0.5, 10).unwrap()
        };
        let cfg = RunConfig::new(0.5, 0.05, Grid2D::unit(12).unwrap(), mesh, scheme)
            .with_source(src.clone());
        let u0 = random_initial(cfg.grid, 99);
        let a = run(&cfg, u0.clone()).unwrap();
        let b = run(&cfg, u0).unwrap();
        for (x, y) in a.trajectory.levels().iter().zip(b.trajectory.levels()) {
            let bits = |f: &Field| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(x), bits(y));
        }
    }
}

#[test]
fn smooth_solution_converges_for_every_scheme() {
    // Independent check of the step assembly: zero-source run on a coarse grid
    // against a fine-step run of the same scheme.
    let grid = Grid2D::unit(8).unwrap();
    let u0 = Field::from_fn(grid, common::sine).map(|v| 0.5 * v);
    for scheme in [Scheme::SftrHalf, Scheme::Fbdf2, Scheme::L21Sigma] {
        let at = |n: usize| {
            let cfg = RunConfig::new(0.5, 0.1, grid, TimeMesh::uniform(0.5, n).unwrap(), scheme)
                .with_fp_tol(1e-13);
            run(&cfg, u0.clone()).unwrap().trajectory.last().clone()
        };
        let reference = at(640);
        let e1 = norm_l2(&(&at(20) - &reference));
        let e2 = norm_l2(&(&at(40) - &reference));
        assert!(e1 > 0.0 && e2 < e1, "{scheme}: {e1:e} {e2:e}");
    }
}

#[test]
fn residual_is_within_the_iteration_tolerance() {
    // F-BDF2 is the average of the fractional BDF2 derivative at t_n and t_{n-1}.
    let (alpha, eps, m, steps, t_final) = (0.6, 0.05, 16, 12, 0.6);
    let grid = Grid2D::unit(m).unwrap();
    let tau: f64 = t_final / steps as f64;
    let u0 = random_initial(grid, 31).map(|v| 3.6 * v);
    for scheme in [Scheme::SftrHalf, Scheme::Fbdf2] {
        let cfg = RunConfig::new(alpha, eps, grid, TimeMesh::uniform(t_final, steps).unwrap(), scheme);
        let levels = run(&cfg, u0.clone()).unwrap().trajectory.levels().to_vec();
        let diff = |k: usize| &levels[k] - &levels[0];
        let bound = 10.0 * cfg.fp_tol * tau.powf(-alpha);
        for n in 1..=steps {
            let mut caputo = Field::zeros(grid);
            match scheme {
                Scheme::SftrHalf => {
                    let w = sftr_weights(alpha, steps).unwrap();
                    for k in 0..n {
                        caputo.axpy(w.values()[k], &diff(n - k)).unwrap();
                    }
                }
                _ => {
                    let w = fracphase::weights::fbdf2_weights(alpha, steps).unwrap();
                    for k in 0..n {
                        caputo.axpy(0.5 * w.values()[k], &diff(n - k)).unwrap();
                    }
                    for k in 0..n - 1 {
                        caputo.axpy(0.5 * w.values()[k], &diff(n - 1 - k)).unwrap();
                    }
                }
            }
            caputo.scale(tau.powf(-alpha));
            let mid = &(&levels[n] + &levels[n - 1]) * 0.5;
            let mut rhs = laplacian(&mid);
            rhs.scale(eps * eps);
            rhs.axpy(-1.0, &nonlinear_term(&levels[n], &levels[n - 1]).unwrap()).unwrap();
            let res = caputo.max_abs_diff(&rhs).unwrap();
            assert!(res <= bound, "{scheme} step {n}: {res:e} > {bound:e}");
        }
    }
}

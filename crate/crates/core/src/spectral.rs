//! Fourier-diagonal solver for `(c I - d Δ_h) u = f` on the periodic grid.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};

/// Largest imaginary residue tolerated after the inverse transform,
/// relative to the size of the real part.
const IMAG_RESIDUE_TOL: f64 = 1e-12;

/// Precomputed transforms and symbol of `-Δ_h` for one grid.
pub struct HelmholtzSolver {
    grid: Grid2D,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `(4/h²) sin²(π j / M)`, one per direction.
    symbol_1d: Vec<f64>,
}

impl std::fmt::Debug for HelmholtzSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HelmholtzSolver").field("grid", &self.grid).finish()
    }
}

impl HelmholtzSolver {
    pub fn new(grid: Grid2D) -> Self {
        let m = grid.m();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let h = grid.h();
        let symbol_1d = (0..m)
            .map(|j| 4.0 / (h * h) * (PI * j as f64 / m as f64).sin().powi(2))
            .collect();
        Self {
            grid,
            forward,
            inverse,
            symbol_1d,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Eigenvalue of `-Δ_h` for the Fourier mode `(j, k)`.
    pub fn neg_laplacian_symbol(&self, j: usize, k: usize) -> f64 {
        self.symbol_1d[j] + self.symbol_1d[k]
    }

    /// Solves `(c I - diffusion Δ_h) u = rhs`.
    pub fn solve(&self, c: f64, diffusion: f64, rhs: &Field) -> Result<Field> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Helmholtz shift must be positive, got {c}"
            )));
        }
        if !(diffusion >= 0.0 && diffusion.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diffusion coefficient must be nonnegative, got {diffusion}"
            )));
        }
        if *rhs.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let m = self.grid.m();
        let mut buf: Vec<Complex64> = rhs.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut tmp = vec![Complex64::new(0.0, 0.0); buf.len()];

        // rows, transpose, rows: spectrum ends up transposed, but the symbol
        // is symmetric in (j, k) so the division does not care.
        self.forward.process(&mut buf);
        transpose(&buf, &mut tmp, m);
        self.forward.process(&mut tmp);

        let norm = 1.0 / (m * m) as f64;
        for j in 0..m {
            for k in 0..m {
                let denom = c + diffusion * self.neg_laplacian_symbol(j, k);
                tmp[j * m + k] *= norm / denom;
            }
        }

        self.inverse.process(&mut tmp);
        transpose(&tmp, &mut buf, m);
        self.inverse.process(&mut buf);

        let scale = buf.iter().fold(1.0f64, |acc, z| acc.max(z.re.abs()));
        let residue = buf.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
        assert!(
            residue <= IMAG_RESIDUE_TOL * scale,
            "imaginary residue {residue:e} after inverse transform"
        );
        Field::from_values(self.grid, buf.into_iter().map(|z| z.re).collect())
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    for j in 0..m {
        for k in 0..m {
            dst[k * m + j] = src[j * m + k];
        }
    }
}

/// One-shot convenience wrapper around [`HelmholtzSolver`].
pub fn solve_helmholtz(c: f64, diffusion: f64, rhs: &Field) -> Result<Field> {
    HelmholtzSolver::new(*rhs.grid()).solve(c, diffusion, rhs)
}

//! Solvers for the time-fractional Allen–Cahn equation
//! `∂_t^α u = ε² Δ u - (u³ - u)` on a periodic square.
//!
//! The main scheme is the shifted fractional trapezoidal rule with shift ½
//! (SFTR-½) combined with a convex-splitting nonlinear term, which keeps a
//! discrete compatible energy nonincreasing and `|U| ≤ 1`. Fractional BDF2
//! and nonuniform L2-1σ steppers are provided for comparison, together with
//! the experiment drivers that produce convergence tables and γ-sweeps.

pub mod config;
pub mod energy;
pub mod error;
pub mod grid;
pub mod harness;
pub mod l21sigma;
pub mod mesh;
pub mod output;
pub mod spectral;
pub mod stepper;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{Field, Grid2D};
pub use mesh::TimeMesh;
pub use stepper::{run, RunConfig, Scheme, Solution, Trajectory};
pub use weights::{WeightKind, WeightSequence};

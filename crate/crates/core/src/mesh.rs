//! Temporal partitions of `[0, T]`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshKind {
    Uniform,
    /// `t_n = T (n/N)^γ` with `γ ≥ 1`.
    Graded { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    kind: MeshKind,
    t_final: f64,
    nodes: Vec<f64>,
}

impl TimeMesh {
    pub fn uniform(t_final: f64, steps: usize) -> Result<Self> {
        Self::new(MeshKind::Uniform, t_final, steps)
    }

    pub fn graded(t_final: f64, steps: usize, gamma: f64) -> Result<Self> {
        Self::new(MeshKind::Graded { gamma }, t_final, steps)
    }

    pub fn new(kind: MeshKind, t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidMesh(format!("final time must be positive, got {t_final}")));
        }
        if let MeshKind::Graded { gamma } = kind {
            if !(gamma >= 1.0 && gamma.is_finite()) {
                return Err(Error::InvalidMesh(format!(
                    "grading exponent must be >= 1, got {gamma}"
                )));
            }
        }
        let n = steps as f64;
        let nodes = match kind {
            _ if steps == 0 => vec![0.0],
            MeshKind::Uniform => {
                let tau = t_final / n;
                (0..=steps)
                    .map(|k| if k == steps { t_final } else { k as f64 * tau })
                    .collect()
            }
            MeshKind::Graded { gamma } => {
                (0..=steps)
                    .map(|k| t_final * (k as f64 / n).powf(gamma))
                    .collect()
            }
        };
        Ok(Self {
            kind,
            t_final,
            nodes,
        })
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, MeshKind::Uniform)
            || matches!(self.kind, MeshKind::Graded { gamma } if gamma == 1.0)
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn t(&self, n: usize) -> f64 {
        self.nodes[n]
    }

    /// Step `τ_n = t_n - t_{n-1}`, `n ≥ 1`.
    pub fn step(&self, n: usize) -> f64 {
        self.nodes[n] - self.nodes[n - 1]
    }

    /// Uniform step size `T/N`; `None` for a genuinely graded mesh.
    pub fn uniform_tau(&self) -> Option<f64> {
        if self.is_uniform() && self.steps() > 0 {
            Some(self.t_final / self.steps() as f64)
        } else {
            None
        }
    }
}

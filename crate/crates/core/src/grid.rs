//! Uniform periodic grid on a square and grid functions on it.
//!
//! The grid has `M` points per direction, `x_j = a + j h` with `h = (b - a)/M`.
//! Mathematically nodes are indexed `1..=M` with index `0` aliasing `M` and
//! `M + 1` aliasing `1`. Storage is 0-based row-major: entry `(j, k)` of the
//! 1-based grid lives at `values[(j - 1) * M + (k - 1)]`, where `j` indexes
//! the first coordinate `x`. Snapshot files write row `j` on line `j`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    a: f64,
    b: f64,
    m: usize,
}

impl Grid2D {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {m}")));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidGrid(format!("bad interval ({a}, {b})")));
        }
        Ok(Self { a, b, m })
    }

    /// The unit square `(0, 1)²` with `m` points per direction.
    pub fn unit(m: usize) -> Result<Self> {
        Self::new(0.0, 1.0, m)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.m as f64
    }

    pub fn len(&self) -> usize {
        self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of 1-based node `j`.
    pub fn coord(&self, j: usize) -> f64 {
        self.a + j as f64 * self.h()
    }
}

/// A real grid function on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                what: "field values",
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite field entry {v}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x_j, y_k)` at the nodes `j, k = 1..=M`.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let m = grid.m();
        let mut values = Vec::with_capacity(grid.len());
        for j in 1..=m {
            let x = grid.coord(j);
            for k in 1..=m {
                values.push(f(x, grid.coord(k)));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at 1-based periodic indices; `0` and `M + 1` wrap around.
    pub fn at(&self, j: isize, k: isize) -> f64 {
        let m = self.grid.m as isize;
        let jj = (j - 1).rem_euclid(m) as usize;
        let kk = (k - 1).rem_euclid(m) as usize;
        self.values[jj * self.grid.m + kk]
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.ensure_same_grid(other)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Field) -> Result<()> {
        self.ensure_same_grid(other)?;
        for (s, &o) in self.values.iter_mut().zip(&other.values) {
            *s += c * o;
        }
        Ok(())
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest entrywise difference, in max norm.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }

    /// Writes the snapshot format: optional `#` comment lines, then
    /// `M a b t`, then `M` rows of `M` values.
    pub fn write_snapshot<W: Write>(&self, out: &mut W, t: f64, header: &[String]) -> Result<()> {
        let mut s = String::new();
        for line in header {
            writeln!(s, "# {line}").unwrap();
        }
        let g = &self.grid;
        writeln!(s, "{} {} {} {}", g.m, fmt_num(g.a), fmt_num(g.b), fmt_num(t)).unwrap();
        for row in self.values.chunks(g.m) {
            let line: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    /// Reads a snapshot written by [`Field::write_snapshot`]; returns the
    /// field and its time stamp.
    pub fn read_snapshot<R: BufRead>(input: R) -> Result<(Field, f64)> {
        let mut head: Option<(Grid2D, f64)> = None;
        let mut values = Vec::new();
        let mut rows = 0;
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: lineno,
                message,
            };
            match head {
                None => {
                    let parts: Vec<&str> = trimmed.split_whitespace().collect();
                    if parts.len() != 4 {
                        return Err(parse_err(format!("expected `M a b t`, got `{trimmed}`")));
                    }
                    let m: usize = parts[0]
                        .parse()
                        .map_err(|_| parse_err(format!("bad M `{}`", parts[0])))?;
                    let nums: Vec<f64> = parts[1..]
                        .iter()
                        .map(|p| p.parse::<f64>().map_err(|_| parse_err(format!("bad number `{p}`"))))
                        .collect::<Result<_>>()?;
                    head = Some((Grid2D::new(nums[0], nums[1], m)?, nums[2]));
                }
                Some((grid, _)) => {
                    let before = values.len();
                    for p in trimmed.split_whitespace() {
                        values.push(
                            p.parse::<f64>()
                                .map_err(|_| parse_err(format!("bad number `{p}`")))?,
                        );
                    }
                    if values.len() - before != grid.m {
                        return Err(parse_err(format!(
                            "row has {} values, expected {}",
                            values.len() - before,
                            grid.m
                        )));
                    }
                    rows += 1;
                }
            }
        }
        let (grid, t) = head.ok_or_else(|| Error::Parse {
            line: 0,
            message: "empty snapshot".into(),
        })?;
        if rows != grid.m {
            return Err(Error::Parse {
                line: 0,
                message: format!("expected {} rows, found {rows}", grid.m),
            });
        }
        Ok((Field::from_values(grid, values)?, t))
    }
}

/// Decimal text with 17 significant digits, which round-trips `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a + b).expect("grid mismatch in Field add")
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a - b).expect("grid mismatch in Field sub")
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, c: f64) -> Field {
        self.map(|v| v * c)
    }
}

/// Periodic five-point Laplacian `(δ_x² + δ_y²) u`.
pub fn laplacian(u: &Field) -> Field {
    let g = u.grid;
    let m = g.m;
    let inv_h2 = 1.0 / (g.h() * g.h());
    let v = &u.values;
    let mut out = vec![0.0; v.len()];
    for j in 0..m {
        let jp = if j + 1 == m { 0 } else { j + 1 };
        let jm = if j == 0 { m - 1 } else { j - 1 };
        for k in 0..m {
            let kp = if k + 1 == m { 0 } else { k + 1 };
            let km = if k == 0 { m - 1 } else { k - 1 };
            let c = v[j * m + k];
            out[j * m + k] =
                (v[jp * m + k] + v[jm * m + k] + v[j * m + kp] + v[j * m + km] - 4.0 * c) * inv_h2;
        }
    }
    Field { grid: g, values: out }
}

/// Discrete inner product `h² Σ u_{jk} v_{jk}`.
pub fn inner(u: &Field, v: &Field) -> Result<f64> {
    u.ensure_same_grid(v)?;
    let h = u.grid.h();
    Ok(h * h * u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum::<f64>())
}

pub fn norm_l2(u: &Field) -> f64 {
    let h = u.grid.h();
    (h * h * u.values.iter().map(|a| a * a).sum::<f64>()).sqrt()
}

pub fn norm_inf(u: &Field) -> f64 {
    u.max_abs()
}

/// `‖∇_h u‖² = (-Δ_h u, u)`.
pub fn grad_norm_sq(u: &Field) -> f64 {
    // Summed edge differences; equal to -(Δ_h u, u) by summation by parts
    // and nonnegative by construction.
    let g = u.grid;
    let m = g.m;
    let v = &u.values;
    let mut acc = 0.0;
    for j in 0..m {
        let jp = if j + 1 == m { 0 } else { j + 1 };
        for k in 0..m {
            let kp = if k + 1 == m { 0 } else { k + 1 };
            let c = v[j * m + k];
            let dx = v[jp * m + k] - c;
            let dy = v[j * m + kp] - c;
            acc += dx * dx + dy * dy;
        }
    }
    // h² Σ (diff/h)² = Σ diff²
    acc
}

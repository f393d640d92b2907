//! Plain-text run configuration.
//!
//! ```text
//! [model]
//! alpha = 0.5
//! eps = 0.01
//! [mesh]
//! M = 64
//! N = 40
//! T = 1
//! [solver]
//! scheme = sftr
//! ```
//!
//! One `key = value` per line, `[section]` headers, `#` starts a comment.
//! Recognised keys:
//!
//! | section  | key           | default     |
//! |----------|---------------|-------------|
//! | model    | `alpha`       | required    |
//! | model    | `eps`         | required    |
//! | model    | `a`, `b`      | `0`, `1`    |
//! | model    | `ic`          | `random`    |
//! | model    | `seed`        | `0`         |
//! | mesh     | `M`, `N`, `T` | required    |
//! | mesh     | `kind`        | `uniform`   |
//! | mesh     | `gamma`       | `1`         |
//! | solver   | `scheme`      | required    |
//! | solver   | `fp_tol`      | `1e-6`      |
//! | solver   | `fp_max_iter` | `100`       |
//! | output   | `dir`         | `out`       |
//! | output   | `snapshots`   | final time  |

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::mesh::{MeshKind, TimeMesh};
use crate::stepper::{RunConfig, Scheme, DEFAULT_FP_MAX_ITER, DEFAULT_FP_TOL};

/// Initial condition selector.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `0.5 · rand - 0.25`, seeded.
    Random,
    /// `sin(2πx) sin(2πy)`.
    Sine,
    /// Snapshot file.
    File(PathBuf),
}

impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "sine" => Ok(Self::Sine),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Self::File(PathBuf::from(p))),
                _ => Err(Error::InvalidParameter(format!(
                    "initial condition must be random, sine or file:PATH, got `{s}`"
                ))),
            },
        }
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Random => f.write_str("random"),
            Self::Sine => f.write_str("sine"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// A parsed configuration file.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub run: RunConfig,
    pub ic: InitialCondition,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Times at which snapshots are written; always includes `T`.
    pub snapshots: Vec<f64>,
}

const KEYS: &[(&str, &[&str])] = &[
    ("model", &["alpha", "eps", "a", "b", "ic", "seed"]),
    ("mesh", &["M", "N", "T", "kind", "gamma"]),
    ("solver", &["scheme", "fp_tol", "fp_max_iter"]),
    ("output", &["dir", "snapshots"]),
];

struct Entries {
    values: BTreeMap<(String, String), (String, usize)>,
    last_line: usize,
}

impl Entries {
    fn raw(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(|(v, l)| (v.as_str(), *l))
    }

    fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<(T, usize)>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(|x| Some((x, line))).map_err(|e| Error::BadValue {
                line,
                message: format!("{section}.{key} = `{v}`: {e}"),
            }),
        }
    }

    fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<(T, usize)>
    where
        T::Err: fmt::Display,
    {
        self.get(section, key)?.ok_or_else(|| Error::MissingKey {
            key: format!("{section}.{key}"),
            line: self.last_line,
        })
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut values = BTreeMap::new();
    let mut section: Option<String> = None;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(Error::BadValue {
                    line,
                    message: format!("unknown section `[{name}]`"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section.as_deref() else {
            return Err(Error::Parse {
                line,
                message: format!("key `{key}` appears before any [section]"),
            });
        };
        let allowed = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(Error::BadValue {
                line,
                message: format!("unknown key `{key}` in [{sec}]"),
            });
        }
        if value.is_empty() {
            return Err(Error::BadValue {
                line,
                message: format!("empty value for `{key}`"),
            });
        }
        let slot = (sec.to_string(), key.to_string());
        if values.contains_key(&slot) {
            return Err(Error::BadValue {
                line,
                message: format!("duplicate key `{key}` in [{sec}]"),
            });
        }
        values.insert(slot, (value.to_string(), line));
    }
    Ok(Entries { values, last_line })
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::BadValue {
        line,
        message: message.into(),
    }
}

/// Parses configuration text.
pub fn parse_config_str(text: &str) -> Result<CliConfig> {
    let e = tokenize(text)?;

    let (alpha, alpha_line): (f64, _) = e.require("model", "alpha")?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(bad(alpha_line, format!("alpha = {alpha} must lie in (0, 1]")));
    }
    let (eps, eps_line): (f64, _) = e.require("model", "eps")?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(bad(eps_line, format!("eps = {eps} must be positive")));
    }
    let a = e.get::<f64>("model", "a")?.map_or(0.0, |v| v.0);
    let b_entry = e.get::<f64>("model", "b")?;
    let b = b_entry.map_or(1.0, |v| v.0);
    let ic = e.get::<InitialCondition>("model", "ic")?.map_or(InitialCondition::Random, |v| v.0);
    let seed = e.get::<u64>("model", "seed")?.map_or(0, |v| v.0);

    let (m, m_line): (usize, _) = e.require("mesh", "M")?;
    let grid = Grid2D::new(a, b, m).map_err(|err| bad(b_entry.map_or(m_line, |v| v.1), err.to_string()))?;
    let (n, _): (usize, _) = e.require("mesh", "N")?;
    let (t_final, t_line): (f64, _) = e.require("mesh", "T")?;
    let kind_entry = e.get::<String>("mesh", "kind")?;
    let gamma_entry = e.get::<f64>("mesh", "gamma")?;
    let kind = match kind_entry.as_ref().map(|(k, l)| (k.as_str(), *l)) {
        None | Some(("uniform", _)) => {
            if let Some((g, l)) = gamma_entry {
                if g != 1.0 {
                    return Err(bad(l, "gamma requires kind = graded"));
                }
            }
            MeshKind::Uniform
        }
        Some(("graded", _)) => MeshKind::Graded {
            gamma: gamma_entry.map_or(1.0, |v| v.0),
        },
        Some((other, l)) => return Err(bad(l, format!("mesh kind must be uniform or graded, got `{other}`"))),
    };
    let mesh_line = gamma_entry.map(|v| v.1).or(kind_entry.as_ref().map(|v| v.1)).unwrap_or(t_line);
    let mesh = TimeMesh::new(kind, t_final, n).map_err(|err| bad(mesh_line, err.to_string()))?;

    let (scheme, scheme_line): (Scheme, _) = e.require("solver", "scheme")?;
    if scheme.requires_uniform_mesh() && !mesh.is_uniform() {
        return Err(bad(
            scheme_line,
            format!("scheme {scheme} requires a uniform mesh, got a graded one"),
        ));
    }
    let fp_tol = match e.get::<f64>("solver", "fp_tol")? {
        None => DEFAULT_FP_TOL,
        Some((v, _)) if v > 0.0 && v.is_finite() => v,
        Some((v, l)) => return Err(bad(l, format!("fp_tol = {v} must be positive"))),
    };
    let fp_max_iter = match e.get::<usize>("solver", "fp_max_iter")? {
        None => DEFAULT_FP_MAX_ITER,
        Some((0, l)) => return Err(bad(l, "fp_max_iter must be at least 1")),
        Some((v, _)) => v,
    };

    let out_dir = e.get::<PathBuf>("output", "dir")?.map_or_else(|| PathBuf::from("out"), |v| v.0);
    let mut snapshots = Vec::new();
    if let Some((list, line)) = e.raw("output", "snapshots") {
        for item in list.split(',') {
            let t: f64 = item
                .trim()
                .parse()
                .map_err(|_| bad(line, format!("snapshot time `{}` is not a number", item.trim())))?;
            if !(0.0..=t_final).contains(&t) || !mesh.nodes().iter().any(|&s| (s - t).abs() < 1e-9) {
                return Err(bad(line, format!("snapshot time {t} is not a mesh node")));
            }
            snapshots.push(t);
        }
    }
    if !snapshots.iter().any(|&t| (t - t_final).abs() < 1e-9) {
        snapshots.push(t_final);
    }

    let mut run = RunConfig::new(alpha, eps, grid, mesh, scheme).with_fp_tol(fp_tol);
    run.fp_max_iter = fp_max_iter;
    run.seed = Some(seed);
    Ok(CliConfig {
        run,
        ic,
        seed,
        out_dir,
        snapshots,
    })
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<CliConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

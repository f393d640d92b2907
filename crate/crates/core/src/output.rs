//! Text artifacts: comment headers, CSV tables and file naming.
//!
//! Every file starts with `#` lines describing the effective configuration;
//! no timestamps are written, so identical runs give identical bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::energy::MonitorLog;
use crate::error::Result;
use crate::grid::{fmt_num, Field};
use crate::harness::{ConvergenceTable, GammaSweep};
use crate::mesh::MeshKind;
use crate::stepper::RunConfig;

/// Header lines describing `config`.
pub fn config_header(config: &RunConfig) -> Vec<String> {
    let g = &config.grid;
    let mesh = match config.mesh.kind() {
        MeshKind::Uniform => "uniform".to_string(),
        MeshKind::Graded { gamma } => format!("graded gamma={gamma}"),
    };
    vec![
        format!("scheme = {}", config.scheme),
        format!("alpha = {}", config.alpha),
        format!("eps = {}", config.eps),
        format!("grid = M {} on ({}, {})^2", g.m(), g.a(), g.b()),
        format!("mesh = {mesh} N {} T {}", config.mesh.steps(), config.mesh.t_final()),
        format!("fp_tol = {}", config.fp_tol),
        format!("fp_max_iter = {}", config.fp_max_iter),
        format!("source = {}", if config.source.is_some() { "manufactured" } else { "none" }),
        match config.seed {
            Some(s) => format!("seed = {s}"),
            None => "seed = none".to_string(),
        },
    ]
}

/// Number formatting used in file names: `0.3`, `5`, `0.25`.
pub fn name_num(v: f64) -> String {
    format!("{v}")
}

/// `snap_alpha{A}_t{T}.dat`.
pub fn snapshot_name(alpha: f64, t: f64) -> String {
    format!("snap_alpha{}_t{}.dat", name_num(alpha), name_num(t))
}

/// `energy_alpha{A}.csv`.
pub fn energy_name(alpha: f64) -> String {
    format!("energy_alpha{}.csv", name_num(alpha))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_snapshot_file(path: &Path, u: &Field, t: f64, header: &[String]) -> Result<()> {
    let mut w = create(path)?;
    u.write_snapshot(&mut w, t, header)?;
    w.flush()?;
    Ok(())
}

pub fn write_monitor_file(path: &Path, log: &MonitorLog, header: &[String]) -> Result<()> {
    let mut w = create(path)?;
    log.write_csv(&mut w, header)?;
    w.flush()?;
    Ok(())
}

fn write_header<W: Write>(w: &mut W, header: &[String]) -> Result<()> {
    for line in header {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// `alpha,scheme,N,tau_or_gamma,error,rate`; empty rate for the first row of
/// each series.
pub fn write_convergence<W: Write>(w: &mut W, table: &ConvergenceTable, header: &[String]) -> Result<()> {
    write_header(w, header)?;
    write_header(w, &table.metadata)?;
    writeln!(w, "alpha,scheme,N,tau_or_gamma,error,rate")?;
    for r in &table.rows {
        let rate = r.rate.map(fmt_num).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.alpha,
            r.scheme,
            r.n,
            fmt_num(r.tau_or_gamma),
            fmt_num(r.error),
            rate
        )?;
    }
    Ok(())
}

pub fn write_convergence_file(path: &Path, table: &ConvergenceTable, header: &[String]) -> Result<()> {
    let mut w = create(path)?;
    write_convergence(&mut w, table, header)?;
    w.flush()?;
    Ok(())
}

/// `alpha,gamma,error` for one or more sweeps.
pub fn write_gamma_sweep<W: Write>(w: &mut W, sweeps: &[&GammaSweep], header: &[String]) -> Result<()> {
    write_header(w, header)?;
    writeln!(w, "alpha,gamma,error")?;
    for s in sweeps {
        for &(g, e) in &s.points {
            writeln!(w, "{},{},{}", s.alpha, fmt_num(g), fmt_num(e))?;
        }
    }
    Ok(())
}

pub fn write_gamma_sweep_file(path: &Path, sweeps: &[&GammaSweep], header: &[String]) -> Result<()> {
    let mut w = create(path)?;
    write_gamma_sweep(&mut w, sweeps, header)?;
    w.flush()?;
    Ok(())
}

/// Writes one weight per line with 17 significant digits.
pub fn write_weights<W: Write>(w: &mut W, values: &[f64], header: &[String]) -> Result<()> {
    write_header(w, header)?;
    for &v in values {
        writeln!(w, "{}", fmt_num(v))?;
    }
    Ok(())
}

/// Resolves the output directory: `FRACPHASE_OUT` wins over `fallback`.
pub fn output_dir(fallback: &Path) -> PathBuf {
    match std::env::var_os("FRACPHASE_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => fallback.to_path_buf(),
    }
}

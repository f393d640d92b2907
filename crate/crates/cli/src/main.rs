use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracphase::config::{parse_config, InitialCondition};
use fracphase::energy::MonitorLog;
use fracphase::harness::{
    gamma_grid, random_initial, run_example1, run_example2, run_example3, run_example4_with,
    sine_initial, ConvergenceTable, Example1Settings, Example4Settings, UniformStudySettings,
    compute_rates,
};
use fracphase::output::{
    config_header, energy_name, output_dir, snapshot_name, write_convergence_file,
    write_gamma_sweep_file, write_monitor_file, write_snapshot_file, write_weights,
};
use fracphase::stepper::run_with;
use fracphase::{Error, Field, RunConfig, Scheme, WeightKind, WeightSequence};

/// A run finished but a structure monitor reported a violation.
const EXIT_MONITOR: u8 = 3;

#[derive(Parser)]
#[command(name = "fracphase", version, about = "Time-fractional Allen–Cahn solvers and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a weight sequence, one value per line.
    Weights {
        #[arg(long)]
        alpha: f64,
        /// sftr, theta, vartheta or fbdf2.
        #[arg(long)]
        kind: WeightKind,
        /// Number of weights (indices 0..count-1).
        #[arg(long)]
        count: usize,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single run from a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// random, sine or file:PATH; overrides the config file.
        #[arg(long)]
        ic: Option<InitialCondition>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coarsening from random data; snapshots and energy curves.
    Example1 {
        #[command(flatten)]
        common: ExampleArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Manufactured smooth solution; SFTR-½ and F-BDF2 errors at T/2.
    Example2 {
        #[command(flatten)]
        common: ExampleArgs,
    },
    /// Sine initial data; errors against fine-step references at T/2.
    Example3 {
        #[command(flatten)]
        common: ExampleArgs,
    },
    /// SFTR-½ against L2-1σ on graded meshes, with a γ-sweep.
    Example4 {
        #[command(flatten)]
        common: ExampleArgs,
        /// Explicit grading exponents; default is 17 points over [1, 2/α].
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
    },
    /// Observed orders log2(e_i / e_{i+1}) of successively halved steps.
    Rates {
        #[arg(required = true, num_args = 1..)]
        errors: Vec<f64>,
    },
}

#[derive(Args)]
struct ExampleArgs {
    /// Fractional orders; the standard study values if omitted.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Desk-scale settings (smaller grid and horizon).
    #[arg(long)]
    fast: bool,
    /// Spatial points per direction, overriding the default.
    #[arg(long = "grid")]
    m: Option<usize>,
    #[arg(long)]
    fp_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExampleArgs {
    fn alphas(&self, default: &[f64]) -> Vec<f64> {
        self.alpha.clone().unwrap_or_else(|| default.to_vec())
    }

    fn dir(&self, default: &str) -> PathBuf {
        resolve_dir(self.out.as_deref(), Path::new(default))
    }
}

/// `--out` wins, then `FRACPHASE_OUT`, then the default.
fn resolve_dir(flag: Option<&Path>, default: &Path) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => output_dir(default),
    }
}

enum Outcome {
    Ok,
    MonitorViolation(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::MonitorViolation(msg)) => {
            eprintln!("monitor violation: {msg}");
            ExitCode::from(EXIT_MONITOR)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<Outcome, Error> {
    match command {
        Command::Weights {
            alpha,
            kind,
            count,
            out,
        } => {
            if count == 0 {
                return Err(Error::InvalidParameter("count must be at least 1".into()));
            }
            let w = WeightSequence::generate(kind, alpha, count - 1)?;
            let header = vec![format!("kind = {}", kind.name()), format!("alpha = {alpha}")];
            match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    write_weights(&mut buf, w.values(), &header)?;
                    fs::write(path, buf)?;
                }
                None => write_weights(&mut io::stdout().lock(), w.values(), &header)?,
            }
            Ok(Outcome::Ok)
        }
        Command::Run {
            config,
            ic,
            seed,
            out,
        } => cmd_run(&config, ic, seed, out),
        Command::Example1 { common, seed } => cmd_example1(&common, seed),
        Command::Example2 { common } => cmd_uniform_study(&common, false),
        Command::Example3 { common } => cmd_uniform_study(&common, true),
        Command::Example4 { common, gammas } => cmd_example4(&common, gammas),
        Command::Rates { errors } => {
            let rates = compute_rates(&errors)?;
            let mut stdout = io::stdout().lock();
            for r in rates {
                writeln!(stdout, "{r:.4}")?;
            }
            Ok(Outcome::Ok)
        }
    }
}

/// Monitors with a theoretical guarantee: maximum principle and energy decay
/// for unforced SFTR-½ runs.
fn check_monitors(config: &RunConfig, log: &MonitorLog) -> Option<String> {
    if config.scheme != Scheme::SftrHalf || config.source.is_some() {
        return None;
    }
    if let Some((n, v)) = log.max_principle().first_violation {
        return Some(format!("alpha = {}: ||U^{n}||_inf = {v:e} exceeds 1", config.alpha));
    }
    if let Some((n, d)) = log.first_decay_violation() {
        return Some(format!("alpha = {}: decay residual {d:e} at step {n}", config.alpha));
    }
    None
}

fn cmd_run(
    path: &Path,
    ic: Option<InitialCondition>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<Outcome, Error> {
    let mut cfg = parse_config(path)?;
    if let Some(ic) = ic {
        cfg.ic = ic;
    }
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.run.seed = Some(s);
    }
    let dir = resolve_dir(out.as_deref(), &cfg.out_dir);
    let run_cfg = &cfg.run;
    let u0 = match &cfg.ic {
        InitialCondition::Random => random_initial(run_cfg.grid, cfg.seed),
        InitialCondition::Sine => sine_initial(run_cfg.grid),
        InitialCondition::File(p) => {
            let file = fs::File::open(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            let (u, _) = Field::read_snapshot(io::BufReader::new(file))?;
            if u.grid() != &run_cfg.grid {
                return Err(Error::GridMismatch);
            }
            u
        }
    };
    let mut header = config_header(run_cfg);
    header.push(format!("ic = {}", cfg.ic));

    let mesh = run_cfg.mesh.clone();
    let wanted: Vec<(usize, f64)> = cfg
        .snapshots
        .iter()
        .map(|&t| {
            let n = mesh.nodes().iter().position(|&s| (s - t).abs() < 1e-9).unwrap_or(0);
            (n, t)
        })
        .collect();
    let mut snaps: Vec<(f64, Field)> = wanted
        .iter()
        .filter(|w| w.0 == 0)
        .map(|&(_, t)| (t, u0.clone()))
        .collect();
    let sol = run_with(run_cfg, u0, |n, traj| {
        for &(k, t) in &wanted {
            if k == n {
                snaps.push((t, traj.last().clone()));
            }
        }
    })?;
    for w in &sol.warnings {
        eprintln!("warning: {w}");
    }
    for (t, u) in &snaps {
        write_snapshot_file(&dir.join(snapshot_name(run_cfg.alpha, *t)), u, *t, &header)?;
    }
    write_monitor_file(&dir.join(energy_name(run_cfg.alpha)), &sol.monitor, &header)?;
    Ok(match check_monitors(run_cfg, &sol.monitor) {
        Some(msg) => Outcome::MonitorViolation(msg),
        None => Outcome::Ok,
    })
}

fn cmd_example1(args: &ExampleArgs, seed: u64) -> Result<Outcome, Error> {
    let mut settings = if args.fast {
        Example1Settings::fast()
    } else {
        Example1Settings::default()
    };
    if let Some(m) = args.m {
        settings.m = m;
    }
    if let Some(tol) = args.fp_tol {
        settings.fp_tol = tol;
    }
    let dir = args.dir("out/example1");
    let mut violations = Vec::new();
    for alpha in args.alphas(&[0.3, 0.6, 0.9]) {
        let result = run_example1(&settings, alpha, seed)?;
        for w in &result.warnings {
            eprintln!("warning: {w}");
        }
        let mut header = config_header(&result.config);
        header.push("ic = random".to_string());
        for (t, u) in &result.snapshots {
            write_snapshot_file(&dir.join(snapshot_name(alpha, *t)), u, *t, &header)?;
        }
        write_monitor_file(&dir.join(energy_name(alpha)), &result.monitor, &header)?;
        if let Some(msg) = check_monitors(&result.config, &result.monitor) {
            violations.push(msg);
        }
    }
    Ok(if violations.is_empty() {
        Outcome::Ok
    } else {
        Outcome::MonitorViolation(violations.join("; "))
    })
}

fn study_header(args: &ExampleArgs, alphas: &[f64]) -> Vec<String> {
    let list: Vec<String> = alphas.iter().map(|a| a.to_string()).collect();
    vec![
        format!("alpha = {}", list.join(",")),
        format!("fast = {}", args.fast),
        "seed = none".to_string(),
    ]
}

fn cmd_uniform_study(args: &ExampleArgs, example3: bool) -> Result<Outcome, Error> {
    let mut settings = if example3 {
        UniformStudySettings::example3()
    } else {
        UniformStudySettings::example2()
    };
    if args.fast {
        settings.m = 64;
    }
    if let Some(m) = args.m {
        settings.m = m;
    }
    if let Some(tol) = args.fp_tol {
        settings.fp_tol = tol;
    }
    let alphas = args.alphas(&[0.3, 0.6, 0.9]);
    let mut table = ConvergenceTable::default();
    for &alpha in &alphas {
        let t = if example3 {
            run_example3(&settings, alpha)?
        } else {
            run_example2(&settings, alpha)?
        };
        table.extend(t);
    }
    let name = if example3 { "example3" } else { "example2" };
    let mut header = vec![format!("experiment = {name}")];
    header.extend(study_header(args, &alphas));
    let dir = args.dir(&format!("out/{name}"));
    write_convergence_file(&dir.join("convergence.csv"), &table, &header)?;
    Ok(Outcome::Ok)
}

fn cmd_example4(args: &ExampleArgs, gammas: Option<Vec<f64>>) -> Result<Outcome, Error> {
    let mut settings = Example4Settings::default();
    if args.fast {
        settings.m = 64;
    }
    if let Some(m) = args.m {
        settings.m = m;
    }
    if let Some(tol) = args.fp_tol {
        settings.fp_tol = tol;
    }
    let alphas = args.alphas(&[0.2, 0.4, 0.6, 0.8]);
    let dir = args.dir("out/example4");
    let mut header = vec!["experiment = example4".to_string()];
    header.extend(study_header(args, &alphas));

    let mut table = ConvergenceTable::default();
    let mut outputs = Vec::new();
    for &alpha in &alphas {
        let gs = gammas
            .clone()
            .unwrap_or_else(|| gamma_grid(alpha, settings.gamma_points));
        let o = run_example4_with(&settings, alpha, &gs)?;
        table.extend(o.table()?);
        outputs.push(o);
    }
    write_convergence_file(&dir.join("convergence.csv"), &table, &header)?;
    for (i, &n) in settings.steps.iter().enumerate() {
        let sweeps: Vec<_> = outputs.iter().map(|o| &o.sweeps[i]).collect();
        let mut h = header.clone();
        h.push(format!("N = {n}"));
        write_gamma_sweep_file(&dir.join(format!("gamma_sweep_N{n}.csv")), &sweeps, &h)?;
        if i + 1 == settings.steps.len() {
            write_gamma_sweep_file(&dir.join("gamma_sweep.csv"), &sweeps, &h)?;
        }
    }
    Ok(Outcome::Ok)
}

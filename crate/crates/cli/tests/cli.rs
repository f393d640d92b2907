use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracphase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracphase"))
        .args(args)
        .env_remove("FRACPHASE_OUT")
        .output()
        .expect("binary runs")
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

const CONFIG: &str = "\
[model]
alpha = 0.5
eps = 0.05
seed = 7
[mesh]
M = 16
N = 20
T = 0.5
[solver]
scheme = sftr
[output]
snapshots = 0.25
";

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn weights_at_alpha_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.txt");
    let o = fracphase(&["weights", "--alpha", "1", "--kind", "sftr", "--count", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out).unwrap();
    let values: Vec<f64> = data_lines(&text).iter().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values, vec![1.0, -1.0, 0.0]);
}

#[test]
fn weights_are_printed_with_full_precision() {
    let o = fracphase(&["weights", "--alpha", "0.5", "--kind", "theta", "--count", "4"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines.len(), 4);
    let first: f64 = lines[0].parse().unwrap();
    assert!((first - 1.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn run_is_byte_for_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = fracphase(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(
        names,
        vec!["energy_alpha0.5.csv", "snap_alpha0.5_t0.25.dat", "snap_alpha0.5_t0.5.dat"]
    );
    for name in names {
        let x = fs::read(a.join(&name)).unwrap();
        let y = fs::read(b.join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
        let text = String::from_utf8(x).unwrap();
        assert!(text.contains("# seed = 7"));
        assert!(text.contains("# alpha = 0.5"));
    }
}

#[test]
fn run_accepts_initial_data_from_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let first = dir.path().join("first");
    assert!(fracphase(&["run", "--config", cfg.to_str().unwrap(), "--ic", "sine", "--out", first.to_str().unwrap()])
        .status
        .success());
    let snap = first.join("snap_alpha0.5_t0.5.dat");
    let ic = format!("file:{}", snap.display());
    let second = dir.path().join("second");
    let o = fracphase(&["run", "--config", cfg.to_str().unwrap(), "--ic", &ic, "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(second.join("energy_alpha0.5.csv").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let target = dir.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_fracphase"))
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("FRACPHASE_OUT", &target)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("energy_alpha0.5.csv").exists());
}

#[test]
fn bad_config_fails_with_named_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("alpha = 0.5", "alpha = 1.5"));
    let o = fracphase(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("BAD_VALUE at line 2"));
}

#[test]
fn solver_failure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let text = CONFIG.replace("scheme = sftr", "scheme = sftr\nfp_max_iter = 1");
    let cfg = write_config(dir.path(), &text);
    let o = fracphase(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NON_CONVERGED"));
}

#[test]
fn monitor_violation_has_its_own_exit_code() {
    // A single +1 node in a -1 background and a step far beyond the
    // maximum-principle bound: the implicit diffusion overshoots.
    let dir = tempfile::tempdir().unwrap();
    let m = 16;
    let mut snap = format!("{m} 0 1 0\n");
    for j in 0..m {
        let row: Vec<&str> = (0..m).map(|k| if (j, k) == (3, 3) { "1" } else { "-1" }).collect();
        snap.push_str(&row.join(" "));
        snap.push('\n');
    }
    let ic_path = dir.path().join("spike.dat");
    fs::write(&ic_path, snap).unwrap();
    let text = format!(
        "[model]\nalpha = 0.5\neps = 0.1\nic = file:{}\n[mesh]\nM = 16\nN = 1\nT = 1\n[solver]\nscheme = sftr\nfp_max_iter = 1000\n",
        ic_path.display()
    );
    let cfg = write_config(dir.path(), &text);
    let o = fracphase(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert_eq!(o.status.code(), Some(3), "{stderr}");
    assert!(stderr.contains("monitor violation"));
    assert!(stderr.contains("exceeds the maximum-principle bound"));
    // the data files are still written
    assert!(dir.path().join("energy_alpha0.5.csv").exists());
}

#[test]
fn rates_subcommand() {
    let o = fracphase(&["rates", "4e-4", "1e-4", "2.5e-5"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "2.0000\n2.0000\n");
    let o = fracphase(&["rates", "1e-3", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn example2_fast_writes_second_order_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex2");
    let o = fracphase(&["example2", "--alpha", "0.6", "--fast", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "alpha,scheme,N,tau_or_gamma,error,rate");
    assert_eq!(lines.len(), 9);
    for row in &lines[1..] {
        let rate = row.rsplit(',').next().unwrap();
        if !rate.is_empty() {
            let r: f64 = rate.parse().unwrap();
            assert!((1.8..=2.3).contains(&r), "{row}");
        }
    }
}

#[test]
fn example4_with_explicit_gammas() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex4");
    let o = fracphase(&[
        "example4", "--alpha", "0.6", "--grid", "16", "--gammas", "1,2,3", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = fs::read_to_string(out.join("gamma_sweep.csv")).unwrap();
    let lines = data_lines(&sweep);
    assert_eq!(lines[0], "alpha,gamma,error");
    assert_eq!(lines.len(), 4);
    assert!(out.join("gamma_sweep_N32.csv").exists());
    let conv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(data_lines(&conv).len(), 10);
}

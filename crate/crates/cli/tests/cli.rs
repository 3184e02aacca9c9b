//! End-to-end checks of the command-line interface: artifact layout, exit
//! codes per failure class, and the CSV -> plot round trip.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phasefield"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn short_demo_config(dir: &Path) -> PathBuf {
    // trimmed version of the shipped demo so the test stays fast
    let text = "\
[domain]
length = 1.0
n = 24

[time]
T = 0.05
dt = 1e-3

[potentials]
preset = first_order

[source]
kind = singular
r1 = constant:0.5
r2 = constant:0.0

[ic]
theta0 = constant:1.0
chi0 = sine_bump:0.0:1.0

[scheme]
eps = 1e-2

[output]
stride = 5
";
    let path = dir.join("short_demo.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_produces_artifacts_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_demo_config(tmp.path());
    let out = tmp.path().join("results");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--outdir"])
        .arg(&out)
        .arg("--plot")
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&status.stdout),
        String::from_utf8_lossy(&status.stderr)
    );
    let run_dir = out.join("short_demo");
    for file in ["snapshots.csv", "report.txt", "norms.csv", "resolved.cfg"] {
        assert!(run_dir.join(file).exists(), "missing {file}");
    }
    for plot in ["theta_profiles.svg", "chi_profiles.svg", "extrema.svg", "norms.svg"] {
        assert!(run_dir.join("plots").join(plot).exists(), "missing plot {plot}");
    }
    let snapshots = std::fs::read_to_string(run_dir.join("snapshots.csv")).unwrap();
    assert!(snapshots.starts_with("t,x,theta,chi,xi"));
    let report = std::fs::read_to_string(run_dir.join("report.txt")).unwrap();
    assert!(report.contains("invariants.max_principle = pass"), "{report}");
    assert!(report.contains("invariants.theta_positive = pass"), "{report}");
}

#[test]
fn plot_consumes_only_the_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_demo_config(tmp.path());
    let out = tmp.path().join("results");
    assert!(bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--outdir"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let run_dir = out.join("short_demo");
    // strip everything but the CSV, then plot
    for file in ["report.txt", "norms.csv", "resolved.cfg"] {
        std::fs::remove_file(run_dir.join(file)).unwrap();
    }
    let status = bin().args(["plot", "--run-dir"]).arg(&run_dir).status().unwrap();
    assert!(status.success());
    assert!(run_dir.join("plots/theta_profiles.svg").exists());
}

#[test]
fn resolved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_demo_config(tmp.path());
    let out1 = tmp.path().join("a");
    let out2 = tmp.path().join("b");
    assert!(bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--outdir"])
        .arg(&out1)
        .status()
        .unwrap()
        .success());
    let resolved = out1.join("short_demo/resolved.cfg");
    assert!(bin()
        .args(["run", "--config"])
        .arg(&resolved)
        .args(["--outdir"])
        .arg(&out2)
        .status()
        .unwrap()
        .success());
    let a = std::fs::read_to_string(out1.join("short_demo/snapshots.csv")).unwrap();
    let b = std::fs::read_to_string(out2.join("resolved/snapshots.csv")).unwrap();
    assert_eq!(a, b, "re-run from the echoed config must be bit-identical");
}

#[test]
fn invalid_bounds_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.cfg");
    std::fs::write(&path, "[bounds]\ntheta_star_low = 1.5\n").unwrap();
    let out = bin().args(["validate", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("temperature-window"), "{text}");

    // run refuses the same config with the same exit class
    let out = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("typo.cfg");
    std::fs::write(&path, "[domain]\nlenght = 1.0\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn validate_accepts_shipped_demos() {
    for name in [
        "demo_first_order.cfg",
        "demo_second_order.cfg",
        "demo_linear_source.cfg",
    ] {
        let out = bin()
            .args(["validate", "--config"])
            .arg(repo_config(name))
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
}

#[test]
fn tabulate_emits_kernel_table() {
    let out = bin()
        .args(["tabulate-lneps", "--eps", "1e-1,1e-2", "--count", "10"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "eps,r,ln_eps,ln_eps_prime");
    assert_eq!(text.lines().count(), 1 + 2 * 10);
    // spot value: ln_eps(1) = 0 is not on the grid, but every prime is in (0, 1/eps]
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(cols[3] > 0.0 && cols[3] <= 1.0 / cols[0] + 1e-9);
    }
}

#[test]
fn full_demo_run_keeps_invariants() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("results");
    let res = bin()
        .args(["run", "--config"])
        .arg(repo_config("demo_first_order.cfg"))
        .args(["--outdir"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        res.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let report = std::fs::read_to_string(out.join("demo_first_order/report.txt")).unwrap();
    let grab = |key: &str| -> f64 {
        report
            .lines()
            .find(|l| l.starts_with(key))
            .unwrap_or_else(|| panic!("missing {key} in report"))
            .split('=')
            .nth(1)
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    assert!(grab("extrema.chi_min") >= -1e-8, "{report}");
    assert!(grab("extrema.chi_max") <= 1.0 + 1e-8, "{report}");
    assert!(grab("extrema.theta_min") > 0.0, "{report}");
    assert!(report.contains("invariants.max_principle = pass"));
}

#[test]
fn oracle_cross_check_reports_on_homogeneous_runs() {
    let tmp = tempfile::tempdir().unwrap();
    // homogeneous: constant data, boundary matching the initial temperature
    let homog = tmp.path().join("homog.cfg");
    std::fs::write(
        &homog,
        "[domain]\nlength = 40.0\nn = 79\n[time]\nT = 0.1\ndt = 1e-3\n\
         [ic]\ntheta0 = constant:1.0\nchi0 = constant:0.4\n[scheme]\neps = 1e-5\n",
    )
    .unwrap();
    let out = tmp.path().join("results");
    let res = bin()
        .args(["run", "--config"])
        .arg(&homog)
        .args(["--outdir"])
        .arg(&out)
        .arg("--with-oracle")
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = std::fs::read_to_string(out.join("homog/report.txt")).unwrap();
    assert!(report.contains("oracle.applicable = true"), "{report}");
    let diff: f64 = report
        .lines()
        .find(|l| l.starts_with("oracle.center_sup_diff"))
        .unwrap()
        .split('=')
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(diff < 5e-3, "center deviation {diff} too large for dt=1e-3");

    // inhomogeneous data: the cross-check must report inapplicability
    let inhomog = tmp.path().join("inhomog.cfg");
    std::fs::write(
        &inhomog,
        "[ic]\ntheta0 = constant:1.0\nchi0 = sine_bump:0.0:1.0\n[time]\nT = 0.01\n",
    )
    .unwrap();
    let res = bin()
        .args(["run", "--config"])
        .arg(&inhomog)
        .args(["--outdir"])
        .arg(&out)
        .arg("--with-oracle")
        .output()
        .unwrap();
    assert!(res.status.success());
    let report = std::fs::read_to_string(out.join("inhomog/report.txt")).unwrap();
    assert!(report.contains("oracle.applicable = false"), "{report}");
}

#[test]
fn verify_battery_passes_on_clean_build() {
    let out = bin().arg("verify").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "stdout:\n{text}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for suite in ["yosida.", "beta.", "grid.", "moser.", "steady."] {
        assert!(text.contains(suite), "missing suite {suite} in:\n{text}");
    }
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn sweep_reports_decreasing_distances() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_demo_config(tmp.path());
    let out = tmp.path().join("sweep");
    let res = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--param", "eps", "--values", "1e-1,1e-2,1e-3"])
        .args(["--outdir"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        res.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let sweep_csv = std::fs::read_to_string(out.join("short_demo/sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep_csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    let d: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(d[0] > d[1], "distances not decreasing: {d:?}");
    assert!(out.join("short_demo/sweep_monitors.csv").exists());
}

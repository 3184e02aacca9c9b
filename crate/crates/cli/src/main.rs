//! Command-line front end: configured runs, parameter sweeps, the property
//! verification battery, plotting, validation, and kernel tabulation.
//!
//! Exit codes: 0 success, 2 configuration problem, 3 solver divergence,
//! 4 invariant violation, 5 I/O failure.

mod artifacts;
mod config;
mod svg;

use clap::{Parser, Subcommand};
use config::{parse_config, RunConfig};
use phasefield::diagnostics::full_report;
use phasefield::grid::Grid1D;
use phasefield::monotone::{MollifiedBeta, RegularizedLog};
use phasefield::oracle::OdeReduction;
use phasefield::stepper::{run, RunError, Trajectory};
use phasefield::verify;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NEWTON: u8 = 3;
const EXIT_INVARIANT: u8 = 4;
const EXIT_IO: u8 = 5;

#[derive(Parser)]
#[command(name = "phasefield", version, about = "singular phase-field solver and checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation from a config file and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the [output] dir from the config.
        #[arg(long)]
        outdir: Option<String>,
        /// Render SVG plots after the run (same path as the plot command).
        #[arg(long)]
        plot: bool,
        /// Cross-check against the scalar reduction when the data are
        /// spatially homogeneous.
        #[arg(long, hide = true)]
        with_oracle: bool,
    },
    /// Run a parameter sweep and report pairwise trajectory distances.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Swept parameter; only `eps` is supported.
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. `1e-1,1e-2,1e-3,1e-4`.
        #[arg(long)]
        values: String,
        #[arg(long)]
        outdir: Option<String>,
    },
    /// Run every property suite and print a pass/fail matrix.
    Verify,
    /// Render SVG plots from a finished run directory (reads only the CSV).
    Plot {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Validate a config against the structural hypotheses.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tabulate the regularized logarithm as CSV.
    TabulateLneps {
        /// Comma-separated regularization parameters.
        #[arg(long, default_value = "1e-1,1e-2,1e-3")]
        eps: String,
        #[arg(long, default_value_t = 0.01)]
        r_min: f64,
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run {
            config,
            outdir,
            plot,
            with_oracle,
        } => cmd_run(&config, outdir, plot, with_oracle),
        Cmd::Sweep {
            config,
            param,
            values,
            outdir,
        } => cmd_sweep(&config, &param, &values, outdir),
        Cmd::Verify => cmd_verify(),
        Cmd::Plot { run_dir } => cmd_plot(&run_dir),
        Cmd::Validate { config } => cmd_validate(&config),
        Cmd::TabulateLneps {
            eps,
            r_min,
            r_max,
            count,
            out,
        } => cmd_tabulate(&eps, r_min, r_max, count, out),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, ExitCode> {
    match parse_config(path) {
        Ok(cfg) => Ok(cfg),
        Err(e) => {
            eprintln!("config error: {e}");
            Err(ExitCode::from(EXIT_CONFIG))
        }
    }
}

fn run_dir_for(cfg: &RunConfig, config_path: &Path, outdir: Option<String>) -> PathBuf {
    let base = outdir.unwrap_or_else(|| cfg.outdir.clone());
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "run".into());
    Path::new(&base).join(stem)
}

fn io_fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("i/o error: {e}");
    ExitCode::from(EXIT_IO)
}

fn execute(cfg: &RunConfig) -> Result<(Trajectory, Grid1D), ExitCode> {
    let grid = match Grid1D::new(cfg.n, cfg.spec.length) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("config error: {e}");
            return Err(ExitCode::from(EXIT_CONFIG));
        }
    };
    match run(&cfg.spec, grid, &cfg.scheme, 1) {
        Ok(traj) => Ok((traj, grid)),
        Err(RunError::InvalidSpec(rep)) => {
            eprint!("config error:\n{rep}");
            Err(ExitCode::from(EXIT_CONFIG))
        }
        Err(RunError::SourceStability(v)) => {
            eprintln!("config error: implicit linear source needs dt * sup(R3+) < 1, got {v}");
            Err(ExitCode::from(EXIT_CONFIG))
        }
        Err(e @ RunError::Aborted { .. }) => {
            eprintln!("solver error: {e}");
            Err(ExitCode::from(EXIT_NEWTON))
        }
        Err(e) => {
            eprintln!("solver error: {e}");
            Err(ExitCode::from(EXIT_NEWTON))
        }
    }
}

fn cmd_run(
    config_path: &Path,
    outdir: Option<String>,
    plot: bool,
    with_oracle: bool,
) -> ExitCode {
    let cfg = match load_config(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if !cfg.defaulted.is_empty() {
        println!("defaults applied: {}", cfg.defaulted.join(", "));
    }
    let (traj, grid) = match execute(&cfg) {
        Ok(v) => v,
        Err(code) => return code,
    };

    let report = match full_report(&traj, &cfg.spec, grid, cfg.scheme.newton_tol) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("diagnostics error: {e}");
            return ExitCode::from(EXIT_NEWTON);
        }
    };

    let dir = run_dir_for(&cfg, config_path, outdir);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return io_fail(e);
    }
    let mb = MollifiedBeta::new(
        cfg.spec.source.base_beta(),
        cfg.spec.domain(),
        cfg.scheme.eps,
        cfg.scheme.quadrature_order,
    )
    .expect("validated spec admits a mollified source");

    let mut extra = vec![
        format!("run.steps = {}", traj.levels() - 1),
        format!("run.dt = {}", cfg.scheme.dt),
        format!("run.eps = {}", cfg.scheme.eps),
        format!("run.grid_n = {}", cfg.n),
        format!("source.reported_m = {:.6e}", mb.reported_m()),
    ];
    if with_oracle {
        extra.extend(oracle_lines(&cfg, &traj, grid));
    }

    if let Err(e) = artifacts::write_snapshots(&dir, &traj, grid, &mb, cfg.stride) {
        return io_fail(e);
    }
    if let Err(e) = artifacts::write_report(&dir, &report, &extra) {
        return io_fail(e);
    }
    if let Err(e) = artifacts::write_norms_csv(&dir, &report) {
        return io_fail(e);
    }
    if let Err(e) = artifacts::write_resolved(&dir, &cfg) {
        return io_fail(e);
    }
    if plot || cfg.plots {
        if let Err(e) = artifacts::plot_from_csv(&dir) {
            return io_fail(e);
        }
    }

    println!(
        "run finished: {} steps, theta in [{:.6e}, {:.6e}], chi in [{:.6e}, {:.6e}]",
        traj.levels() - 1,
        traj.theta_min,
        traj.theta_max,
        traj.chi_min,
        traj.chi_max
    );
    println!("artifacts in {}", dir.display());

    if !report.max_principle.pass || traj.theta_min <= 0.0 {
        eprintln!("invariant violation: see {}", dir.join("report.txt").display());
        return ExitCode::from(EXIT_INVARIANT);
    }
    ExitCode::SUCCESS
}

fn oracle_lines(cfg: &RunConfig, traj: &Trajectory, grid: Grid1D) -> Vec<String> {
    match OdeReduction::new(&cfg.spec) {
        Err(e) => vec![format!("oracle.applicable = false  # {e}")],
        Ok(red) => match red.rk4_reference(1e-6) {
            Err(e) => vec![format!("oracle.applicable = false  # {e}")],
            Ok(path) => {
                let mid = grid.total_nodes() / 2;
                let mut sup: f64 = 0.0;
                for (k, &t) in traj.times.iter().enumerate() {
                    // nearest reference sample
                    let idx = ((t / cfg.spec.horizon) * (path.len() - 1) as f64).round() as usize;
                    let (_, th, ch) = path[idx.min(path.len() - 1)];
                    sup = sup
                        .max((traj.thetas[k][mid] - th).abs())
                        .max((traj.chis[k][mid] - ch).abs());
                }
                vec![
                    "oracle.applicable = true".into(),
                    format!("oracle.center_sup_diff = {sup:.6e}"),
                ]
            }
        },
    }
}

fn cmd_sweep(config_path: &Path, param: &str, values: &str, outdir: Option<String>) -> ExitCode {
    if param != "eps" {
        eprintln!("config error: unsupported sweep parameter `{param}` (only `eps`)");
        return ExitCode::from(EXIT_CONFIG);
    }
    let base_cfg = match load_config(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let eps_values: Result<Vec<f64>, _> = values.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let eps_values = match eps_values {
        Ok(v) if v.len() >= 2 => v,
        Ok(_) => {
            eprintln!("config error: sweep needs at least two values");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("config error: bad sweep values: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let base_dir = run_dir_for(&base_cfg, config_path, outdir);
    if let Err(e) = std::fs::create_dir_all(&base_dir) {
        return io_fail(e);
    }

    let mut runs = Vec::new();
    for &eps in &eps_values {
        let mut cfg = base_cfg.clone();
        cfg.scheme.eps = eps;
        let (traj, grid) = match execute(&cfg) {
            Ok(v) => v,
            Err(code) => return code,
        };
        let report = match full_report(&traj, &cfg.spec, grid, cfg.scheme.newton_tol) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("diagnostics error: {e}");
                return ExitCode::from(EXIT_NEWTON);
            }
        };
        let sub = base_dir.join(format!("eps-{eps:e}"));
        if let Err(e) = std::fs::create_dir_all(&sub) {
            return io_fail(e);
        }
        let mb = MollifiedBeta::new(
            cfg.spec.source.base_beta(),
            cfg.spec.domain(),
            eps,
            cfg.scheme.quadrature_order,
        )
        .expect("validated spec admits a mollified source");
        if let Err(e) = artifacts::write_snapshots(&sub, &traj, grid, &mb, cfg.stride) {
            return io_fail(e);
        }
        if let Err(e) = artifacts::write_report(&sub, &report, &[format!("run.eps = {eps}")]) {
            return io_fail(e);
        }
        if let Err(e) = artifacts::write_norms_csv(&sub, &report) {
            return io_fail(e);
        }
        println!("eps = {eps:e}: done ({} levels)", traj.levels());
        runs.push((eps, traj, report));
    }

    // pairwise space-time distances between consecutive runs
    let mut rows = Vec::new();
    for w in runs.windows(2) {
        let (ea, ta, _) = &w[0];
        let (eb, tb, _) = &w[1];
        let d = phasefield::diagnostics::l2q_theta_distance(ta, tb);
        rows.push((*ea, *eb, d));
    }
    let sweep_csv = base_dir.join("sweep.csv");
    let mut f = match std::fs::File::create(&sweep_csv) {
        Ok(f) => f,
        Err(e) => return io_fail(e),
    };
    if writeln!(f, "eps_coarse,eps_fine,l2q_theta_distance").is_err() {
        return ExitCode::from(EXIT_IO);
    }
    println!("pairwise L2(Q) distances:");
    let mut decreasing = true;
    for (i, (ea, eb, d)) in rows.iter().enumerate() {
        if writeln!(f, "{ea:e},{eb:e},{d:.12e}").is_err() {
            return ExitCode::from(EXIT_IO);
        }
        println!("  eps {ea:e} -> {eb:e}: {d:.6e}");
        if i > 0 && rows[i - 1].2 <= *d {
            decreasing = false;
        }
    }
    println!("distances strictly decreasing: {decreasing}");

    let mon_csv = base_dir.join("sweep_monitors.csv");
    let mut f = match std::fs::File::create(&mon_csv) {
        Ok(f) => f,
        Err(e) => return io_fail(e),
    };
    let header: Vec<&str> = runs[0].2.monitors.rows().iter().map(|(n, _)| *n).collect();
    if writeln!(f, "eps,{}", header.join(",")).is_err() {
        return ExitCode::from(EXIT_IO);
    }
    for (eps, _, rep) in &runs {
        let vals: Vec<String> = rep
            .monitors
            .rows()
            .iter()
            .map(|(_, v)| format!("{v:.12e}"))
            .collect();
        if writeln!(f, "{eps:e},{}", vals.join(",")).is_err() {
            return ExitCode::from(EXIT_IO);
        }
    }
    println!("sweep artifacts in {}", base_dir.display());
    ExitCode::SUCCESS
}

fn cmd_verify() -> ExitCode {
    let results = verify::run_all();
    let width = results
        .iter()
        .map(|c| c.suite.len() + c.name.len() + 1)
        .max()
        .unwrap_or(20);
    let mut all_pass = true;
    for c in &results {
        let tag = format!("{}.{}", c.suite, c.name);
        println!(
            "{tag:<width$}  {}  margin {:+.3e}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.margin,
            c.detail
        );
        all_pass &= c.passed;
    }
    if all_pass {
        println!("all {} checks passed", results.len());
        ExitCode::SUCCESS
    } else {
        eprintln!("verification failures detected");
        ExitCode::from(EXIT_INVARIANT)
    }
}

fn cmd_plot(run_dir: &Path) -> ExitCode {
    match artifacts::plot_from_csv(run_dir) {
        Ok(()) => {
            println!("plots in {}", run_dir.join("plots").display());
            ExitCode::SUCCESS
        }
        Err(e) => io_fail(e),
    }
}

fn cmd_validate(config_path: &Path) -> ExitCode {
    let cfg = match load_config(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let rep = cfg.spec.validate();
    print!("{rep}");
    if rep.is_valid() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CONFIG)
    }
}

fn cmd_tabulate(eps_list: &str, r_min: f64, r_max: f64, count: usize, out: Option<PathBuf>) -> ExitCode {
    let eps_values: Result<Vec<f64>, _> = eps_list.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let eps_values = match eps_values {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: bad eps list: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if !(r_min > 0.0 && r_max > r_min && count >= 2) {
        eprintln!("config error: need 0 < r_min < r_max and count >= 2");
        return ExitCode::from(EXIT_CONFIG);
    }
    let mut rows = String::from("eps,r,ln_eps,ln_eps_prime\n");
    for &eps in &eps_values {
        let l = match RegularizedLog::new(eps) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        };
        for k in 0..count {
            // log-uniform r grid
            let r = r_min * (r_max / r_min).powf(k as f64 / (count - 1) as f64);
            let (v, d) = match (l.ln_eps(r), l.ln_eps_prime(r)) {
                (Ok(v), Ok(d)) => (v, d),
                _ => {
                    eprintln!("solver error: kernel evaluation failed at eps={eps}, r={r}");
                    return ExitCode::from(EXIT_NEWTON);
                }
            };
            rows.push_str(&format!("{eps:e},{r:.12e},{v:.12e},{d:.12e}\n"));
        }
    }
    match out {
        None => {
            print!("{rows}");
            ExitCode::SUCCESS
        }
        Some(path) => match std::fs::write(&path, rows) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => io_fail(e),
        },
    }
}


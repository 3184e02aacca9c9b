//! Run artifacts: snapshot CSV, key-value report, norm table CSV, resolved
//! config echo, and SVG plots rendered from the CSV alone.

use crate::config::{resolved_config, RunConfig};
use crate::svg::{line_plot, Series};
use phasefield::diagnostics::DiagnosticsReport;
use phasefield::grid::Grid1D;
use phasefield::monotone::MollifiedBeta;
use phasefield::stepper::Trajectory;
use std::io::Write;
use std::path::Path;

pub fn write_snapshots(
    dir: &Path,
    traj: &Trajectory,
    grid: Grid1D,
    mb: &MollifiedBeta,
    stride: usize,
) -> std::io::Result<()> {
    let mut f = std::fs::File::create(dir.join("snapshots.csv"))?;
    writeln!(f, "t,x,theta,chi,xi")?;
    let stride = stride.max(1);
    let last = traj.levels() - 1;
    for k in 0..traj.levels() {
        if k % stride != 0 && k != last {
            continue;
        }
        let t = traj.times[k];
        let theta = &traj.thetas[k];
        let chi = &traj.chis[k];
        for i in 0..grid.total_nodes() {
            let x = grid.x(i);
            let xi = mb.beta_eps(x, t.min(mb.domain().horizon), theta[i]);
            writeln!(f, "{t:.9},{x:.9},{:.12e},{:.12e},{xi:.12e}", theta[i], chi[i])?;
        }
    }
    Ok(())
}

pub fn write_report(
    dir: &Path,
    report: &DiagnosticsReport,
    extra: &[String],
) -> std::io::Result<()> {
    let mut f = std::fs::File::create(dir.join("report.txt"))?;
    for line in report.lines() {
        writeln!(f, "{line}")?;
    }
    for line in extra {
        writeln!(f, "{line}")?;
    }
    Ok(())
}

pub fn write_norms_csv(dir: &Path, report: &DiagnosticsReport) -> std::io::Result<()> {
    let mut f = std::fs::File::create(dir.join("norms.csv"))?;
    writeln!(f, "row,value")?;
    for (name, v) in report.monitors.rows() {
        writeln!(f, "{name},{v:.12e}")?;
    }
    Ok(())
}

pub fn write_resolved(dir: &Path, cfg: &RunConfig) -> std::io::Result<()> {
    std::fs::write(dir.join("resolved.cfg"), resolved_config(cfg))
}

/// Parsed snapshot rows grouped by time.
pub struct SnapshotData {
    pub times: Vec<f64>,
    /// per time: (x, theta, chi, xi) rows
    pub frames: Vec<Vec<(f64, f64, f64, f64)>>,
}

pub fn read_snapshots(path: &Path) -> std::io::Result<SnapshotData> {
    let text = std::fs::read_to_string(path)?;
    let mut times: Vec<f64> = Vec::new();
    let mut frames: Vec<Vec<(f64, f64, f64, f64)>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            continue; // header
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("snapshots.csv line {}: expected 5 columns", idx + 1),
            ));
        }
        let parse = |s: &str| -> std::io::Result<f64> {
            s.parse::<f64>().map_err(|e| {
                std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("snapshots.csv line {}: {e}", idx + 1),
                )
            })
        };
        let t = parse(cols[0])?;
        let row = (parse(cols[1])?, parse(cols[2])?, parse(cols[3])?, parse(cols[4])?);
        match times.last() {
            Some(&last) if (last - t).abs() < 1e-15 => frames.last_mut().unwrap().push(row),
            _ => {
                times.push(t);
                frames.push(vec![row]);
            }
        }
    }
    Ok(SnapshotData { times, frames })
}

/// Render the standard plot set from the snapshot CSV only.
pub fn plot_from_csv(run_dir: &Path) -> std::io::Result<()> {
    let data = read_snapshots(&run_dir.join("snapshots.csv"))?;
    let plots = run_dir.join("plots");
    std::fs::create_dir_all(&plots)?;

    // profile plots at up to 6 evenly spaced stored times
    let count = data.times.len();
    let mut picks = Vec::new();
    let want = 6.min(count);
    for j in 0..want {
        picks.push(j * (count - 1) / want.max(1).max(want - 1).max(1));
    }
    picks.dedup();
    if *picks.last().unwrap_or(&0) != count - 1 {
        picks.push(count - 1);
    }

    let theta_series: Vec<Series> = picks
        .iter()
        .map(|&k| Series {
            label: format!("t = {:.4}", data.times[k]),
            points: data.frames[k].iter().map(|&(x, th, _, _)| (x, th)).collect(),
        })
        .collect();
    std::fs::write(
        plots.join("theta_profiles.svg"),
        line_plot("temperature profiles", "x", "theta", &theta_series),
    )?;

    let chi_series: Vec<Series> = picks
        .iter()
        .map(|&k| Series {
            label: format!("t = {:.4}", data.times[k]),
            points: data.frames[k].iter().map(|&(x, _, ch, _)| (x, ch)).collect(),
        })
        .collect();
    std::fs::write(
        plots.join("chi_profiles.svg"),
        line_plot("phase profiles", "x", "chi", &chi_series),
    )?;

    // extrema time series
    let mut th_min = Vec::new();
    let mut th_max = Vec::new();
    let mut ch_min = Vec::new();
    let mut ch_max = Vec::new();
    let mut th_l2 = Vec::new();
    let mut ch_l2 = Vec::new();
    for (k, frame) in data.frames.iter().enumerate() {
        let t = data.times[k];
        let mut tmin = f64::INFINITY;
        let mut tmax = f64::NEG_INFINITY;
        let mut cmin = f64::INFINITY;
        let mut cmax = f64::NEG_INFINITY;
        for &(_, th, ch, _) in frame {
            tmin = tmin.min(th);
            tmax = tmax.max(th);
            cmin = cmin.min(ch);
            cmax = cmax.max(ch);
        }
        th_min.push((t, tmin));
        th_max.push((t, tmax));
        ch_min.push((t, cmin));
        ch_max.push((t, cmax));
        // trapezoidal L2 over the frame
        let l2 = |pick: fn(&(f64, f64, f64, f64)) -> f64| -> f64 {
            let mut acc = 0.0;
            for w in frame.windows(2) {
                let dx = w[1].0 - w[0].0;
                acc += 0.5 * dx * (pick(&w[0]).powi(2) + pick(&w[1]).powi(2));
            }
            acc.max(0.0).sqrt()
        };
        th_l2.push((t, l2(|r| r.1)));
        ch_l2.push((t, l2(|r| r.2)));
    }
    std::fs::write(
        plots.join("extrema.svg"),
        line_plot(
            "field extrema over time",
            "t",
            "value",
            &[
                Series { label: "min theta".into(), points: th_min },
                Series { label: "max theta".into(), points: th_max },
                Series { label: "min chi".into(), points: ch_min },
                Series { label: "max chi".into(), points: ch_max },
            ],
        ),
    )?;
    std::fs::write(
        plots.join("norms.svg"),
        line_plot(
            "spatial norms over time",
            "t",
            "L2 norm",
            &[
                Series { label: "theta".into(), points: th_l2 },
                Series { label: "chi".into(), points: ch_l2 },
            ],
        ),
    )?;
    Ok(())
}

//! Executable checks for the analytical guarantees: the phase-window
//! maximum principle, emergent temperature positivity/boundedness, uniform
//! energy monitors, the coercive weight functions behind the boundedness
//! proof, and the twin-run Lipschitz stability probe.

use crate::grid::{self, dual_norm, Field, Grid1D};
use crate::model::{InitialField, ProblemSpec, SourceKind};
use crate::monotone::{MollifiedBeta, MonotoneError, RegularizedLog};
use crate::quad::adaptive_simpson;
use crate::stepper::{run, RunError, SchemeConfig, Trajectory};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Numeric(#[from] MonotoneError),
    #[error(transparent)]
    Run(#[from] Box<RunError>),
    #[error("stability probe requires a source that is Lipschitz in the temperature; the singular kind is excluded")]
    NonLipschitzSource,
}

/// Result of scanning a trajectory against the phase window.
#[derive(Debug, Clone)]
pub struct MaxPrincipleResult {
    pub pass: bool,
    /// Most negative distance from the admissible window over all scanned
    /// values (positive margin = strictly inside).
    pub margin: f64,
    /// Worst offender as `(node, time, value)` when the check fails.
    pub worst: Option<(usize, f64, f64)>,
}

/// Scan all stored levels of a trajectory for phase values outside
/// `[lo - tol, hi + tol]`.
pub fn max_principle_check(traj: &Trajectory, lo: f64, hi: f64, tol: f64) -> MaxPrincipleResult {
    let mut margin = f64::INFINITY;
    let mut worst: Option<(usize, f64, f64)> = None;
    for (k, chi) in traj.chis.iter().enumerate() {
        for (i, &v) in chi.values().iter().enumerate() {
            let m = (v - lo).min(hi - v);
            if m < margin {
                margin = m;
                if m < -tol {
                    worst = Some((i, traj.times[k], v));
                }
            }
        }
    }
    MaxPrincipleResult {
        pass: worst.is_none(),
        margin,
        worst,
    }
}

/// The monitored norm rows of the uniform a priori estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMonitors {
    /// `sup_t || theta ||_{L2}`
    pub sup_theta_l2: f64,
    /// `|| Ln_eps theta ||_{L2(0,T; H1)}`
    pub ln_theta_l2h1: f64,
    /// `|| d/dt chi ||_{L2(Q)}`
    pub dchi_dt_l2: f64,
    /// `sup_t || chi ||_{H1}`
    pub sup_chi_h1: f64,
    /// `|| beta_eps(theta) ||_{L2(Q)}`
    pub beta_theta_l2: f64,
    /// `|| d/dt theta ||` in the discrete negative-order norm, L2 in time
    pub dtheta_dt_dual: f64,
}

impl EnergyMonitors {
    pub fn rows(&self) -> [(&'static str, f64); 6] {
        [
            ("sup_theta_l2", self.sup_theta_l2),
            ("ln_theta_l2h1", self.ln_theta_l2h1),
            ("dchi_dt_l2", self.dchi_dt_l2),
            ("sup_chi_h1", self.sup_chi_h1),
            ("beta_theta_l2", self.beta_theta_l2),
            ("dtheta_dt_dual", self.dtheta_dt_dual),
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.rows().iter().all(|(_, v)| v.is_finite())
    }
}

/// Accumulate the monitored norms over the stored levels of a trajectory
/// (left-rectangle rule in time, trapezoidal in space).
pub fn energy_monitors(
    traj: &Trajectory,
    spec: &ProblemSpec,
    grid: Grid1D,
) -> Result<EnergyMonitors, DiagnosticsError> {
    let eps = traj.eps;
    let lneps = RegularizedLog::new(eps)?;
    let mb = MollifiedBeta::new(spec.source.base_beta(), spec.domain(), eps, 16)?;
    let levels = traj.levels();
    assert!(levels >= 2, "need at least two stored levels");

    let mut sup_theta_l2: f64 = 0.0;
    let mut sup_chi_h1: f64 = 0.0;
    let mut ln_int = 0.0;
    let mut beta_int = 0.0;
    let mut dchi_int = 0.0;
    let mut dth_int = 0.0;

    for k in 0..levels {
        let t = traj.times[k];
        let theta = &traj.thetas[k];
        let chi = &traj.chis[k];
        sup_theta_l2 = sup_theta_l2.max(grid::norm_l2(theta));
        sup_chi_h1 = sup_chi_h1.max(grid::norm_h1(chi));

        let last = k + 1 == levels;
        if !last {
            let dt_level = traj.times[k + 1] - t;
            let mut w = vec![0.0; theta.len()];
            for (i, &v) in theta.values().iter().enumerate() {
                w[i] = lneps.ln_eps_total(v)?;
            }
            let wf = Field::new(grid, w);
            let h1 = grid::norm_h1(&wf);
            ln_int += dt_level * h1 * h1;

            let mut b = vec![0.0; theta.len()];
            for (i, &v) in theta.values().iter().enumerate() {
                b[i] = mb.beta_eps(grid.x(i), t, v);
            }
            let bf = Field::new(grid, b);
            let l2 = grid::norm_l2(&bf);
            beta_int += dt_level * l2 * l2;

            let dchi = Field::new(
                grid,
                traj.chis[k + 1]
                    .values()
                    .iter()
                    .zip(chi.values())
                    .map(|(a, b)| (a - b) / dt_level)
                    .collect(),
            );
            let dchi_l2 = grid::norm_l2(&dchi);
            dchi_int += dt_level * dchi_l2 * dchi_l2;

            let dth: Vec<f64> = (1..=grid.n())
                .map(|i| (traj.thetas[k + 1][i] - theta[i]) / dt_level)
                .collect();
            let dn = dual_norm(&dth, grid);
            dth_int += dt_level * dn * dn;
        }
    }

    Ok(EnergyMonitors {
        sup_theta_l2,
        ln_theta_l2h1: ln_int.sqrt(),
        dchi_dt_l2: dchi_int.sqrt(),
        sup_chi_h1,
        beta_theta_l2: beta_int.sqrt(),
        dtheta_dt_dual: dth_int.sqrt(),
    })
}

/// Check that the regularized logarithm of the harmonic boundary lift stays
/// in the window `[l_low, l_high] + eps * [theta_low, theta_high]` dictated
/// by the window bounds of `ln_eps`.
pub fn harmonic_lift_window_check(
    spec: &ProblemSpec,
    grid: Grid1D,
    eps: f64,
    time_samples: usize,
) -> Result<bool, DiagnosticsError> {
    let lneps = RegularizedLog::new(eps)?;
    let (l_low, l_high) =
        crate::monotone::log_window_bounds(spec.theta_star_low, spec.theta_star_high);
    for k in 0..=time_samples {
        let t = spec.horizon * k as f64 / time_samples as f64;
        let lift = grid::harmonic_extension(spec.bc_left.eval(t), spec.bc_right.eval(t), grid);
        for &v in lift.values() {
            let s = lneps.ln_eps(v)?;
            if s < l_low - 1e-12 || s > l_high + 1e-12 {
                return Ok(false);
            }
            let total = lneps.ln_eps_total(v)?;
            let lo = l_low + eps * spec.theta_star_low;
            let hi = l_high + eps * spec.theta_star_high;
            if total < lo - 1e-12 || total > hi + 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Weight functions of the boundedness argument, anchored at the upper
/// temperature bound.
#[derive(Debug, Clone, Copy)]
pub struct MoserWeights {
    pub theta_star_high: f64,
    pub u_star: f64,
}

impl MoserWeights {
    pub fn new(theta_star_high: f64) -> Self {
        assert!(theta_star_high >= 1.0);
        Self {
            theta_star_high,
            u_star: theta_star_high.ln(),
        }
    }

    /// `phi_n(r) = int_{th*}^r (e^{2 min(n, (ln s - u*)^+)} - 1) ds`,
    /// evaluated piecewise in closed form.
    pub fn phi(&self, n: u32, r: f64) -> f64 {
        assert!(r > 0.0 && n >= 1);
        let th = self.theta_star_high;
        if r <= th {
            return 0.0;
        }
        let cap = th * (n as f64).exp();
        // on [th*, th* e^n] the integrand is (s/th*)^2 - 1
        let inner = |s: f64| th / 3.0 * (s / th).powi(3) - s + 2.0 * th / 3.0;
        if r <= cap {
            inner(r)
        } else {
            inner(cap) + ((2.0 * n as f64).exp() - 1.0) * (r - cap)
        }
    }

    /// Coercivity slack for `phi_n >= alpha* e^{3 min(n, (ln r - u*)^+)} - C*`
    /// with `alpha* = th*/6`: the smallest admissible `C*`.
    ///
    /// On the transition range the gap
    /// `alpha (r/th)^3 - phi_n(r) = r - 2 th/3 - (th/6)(r/th)^3`
    /// is unimodal with its critical point at `r = sqrt(2) th`, so the
    /// supremum is exact; below the range the bound needs `C* >= alpha*`,
    /// above it monotonicity of `phi_n` takes over.
    pub fn phi_cstar(&self, n_max: u32) -> f64 {
        let th = self.theta_star_high;
        let alpha = th / 6.0;
        let cap = th * (n_max as f64).exp();
        let gap = |r: f64| r - 2.0 * th / 3.0 - alpha * (r / th).powi(3);
        let crit = (2.0f64).sqrt() * th;
        let mut c = alpha.max(gap(th)).max(gap(cap));
        if crit < cap {
            c = c.max(gap(crit));
        }
        c
    }

    pub fn phi_alpha_star(&self) -> f64 {
        self.theta_star_high / 6.0
    }

    /// `psi_n(r) = int_{th*}^r min(n, (ln s - u*)^+)^{2p-1} ds` by adaptive
    /// quadrature after the substitution `y = ln s`.
    pub fn psi(&self, n: u32, p: f64, r: f64) -> f64 {
        assert!(r > 0.0 && p >= 1.0);
        let th = self.theta_star_high;
        if r <= th {
            return 0.0;
        }
        let u_star = self.u_star;
        let nf = n as f64;
        let y_end = r.ln();
        let y_cap = u_star + nf;
        let smooth_end = y_end.min(y_cap);
        let pow = 2.0 * p - 1.0;
        // tolerance scaled to the integrand peak so huge powers still converge
        let scale = smooth_end.exp() * (smooth_end - u_star).powf(pow);
        let mut total = adaptive_simpson(
            &|y: f64| y.exp() * (y - u_star).max(0.0).powf(pow),
            u_star,
            smooth_end,
            1e-12 * scale.max(1e-300),
        );
        if y_end > y_cap {
            // integrand is constant n^{2p-1} in s beyond the cap
            total += nf.powf(pow) * (r - y_cap.exp());
        }
        total
    }

    /// Lower bound claimed for `psi_n`.
    pub fn psi_lower_bound(&self, n: u32, p: f64, r: f64) -> f64 {
        let w = (r.ln() - self.u_star).max(0.0).min(n as f64);
        w.powf(2.0 * p) / (2.0 * p)
    }
}

/// Outcome of the twin-run stability probe.
#[derive(Debug, Clone)]
pub struct StabilityProbe {
    /// Fitted exponential growth rate of the difference norm.
    pub c_fit: f64,
    /// `max_t ||diff(t)|| / ||diff(0)||`.
    pub max_ratio: f64,
    pub initial_diff: f64,
    pub final_diff: f64,
    /// `(t, ||diff||)` per stored level.
    pub diffs: Vec<(f64, f64)>,
}

fn shift_initial(f: InitialField, delta: f64) -> InitialField {
    match f {
        InitialField::Constant(v) => InitialField::Constant(v + delta),
        InitialField::Affine { left, right } => InitialField::Affine {
            left: left + delta,
            right: right + delta,
        },
        InitialField::SineBump { base, amplitude } => InitialField::SineBump {
            base: base + delta,
            amplitude,
        },
    }
}

/// Run twin trajectories from `theta0` and `theta0 + delta0` and measure
/// the growth of `||theta1 - theta2||_* + ||chi1 - chi2||_{L2}`.
///
/// Refuses the singular source kind: only sources Lipschitz in the
/// temperature admit a contraction-style estimate.
pub fn stability_probe(
    spec: &ProblemSpec,
    grid: Grid1D,
    cfg: &SchemeConfig,
    delta0: f64,
) -> Result<StabilityProbe, DiagnosticsError> {
    if matches!(spec.source.kind, SourceKind::Singular { .. }) {
        return Err(DiagnosticsError::NonLipschitzSource);
    }
    let base = run(spec, grid, cfg, 1).map_err(Box::new)?;
    let mut spec2 = spec.clone();
    spec2.theta0 = shift_initial(spec.theta0, delta0);
    let twin = run(&spec2, grid, cfg, 1).map_err(Box::new)?;

    let n = grid.n();
    let mut diffs = Vec::with_capacity(base.levels());
    for k in 0..base.levels().min(twin.levels()) {
        let dth: Vec<f64> = (1..=n)
            .map(|i| base.thetas[k][i] - twin.thetas[k][i])
            .collect();
        let dchi = Field::new(
            grid,
            base.chis[k]
                .values()
                .iter()
                .zip(twin.chis[k].values())
                .map(|(a, b)| a - b)
                .collect(),
        );
        let d = dual_norm(&dth, grid) + grid::norm_l2(&dchi);
        diffs.push((base.times[k], d));
    }

    let initial_diff = diffs[0].1;
    let final_diff = diffs.last().unwrap().1;
    let (c_fit, max_ratio) = if initial_diff == 0.0 {
        (0.0, if final_diff == 0.0 { 1.0 } else { f64::INFINITY })
    } else {
        let mut max_ratio: f64 = 0.0;
        // least-squares slope of ln(d/d0) against t
        let mut st2 = 0.0;
        let mut sty = 0.0;
        for &(t, d) in diffs.iter() {
            let ratio = d / initial_diff;
            max_ratio = max_ratio.max(ratio);
            if t > 0.0 && ratio > 0.0 {
                st2 += t * t;
                sty += t * ratio.ln();
            }
        }
        (if st2 > 0.0 { sty / st2 } else { 0.0 }, max_ratio)
    };

    Ok(StabilityProbe {
        c_fit,
        max_ratio,
        initial_diff,
        final_diff,
        diffs,
    })
}

/// Space-time `L2` distance between the temperature components of two
/// trajectories stored on the same grid and time ladder (left-rectangle
/// rule in time, trapezoidal in space).
pub fn l2q_theta_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    let levels = a.levels().min(b.levels());
    let mut acc = 0.0;
    for k in 0..levels.saturating_sub(1) {
        let dt = a.times[k + 1] - a.times[k];
        let ta = &a.thetas[k];
        let tb = &b.thetas[k];
        let grid = ta.grid();
        let m = grid.total_nodes();
        let mut s = 0.0;
        for i in 0..m {
            let d = ta[i] - tb[i];
            let w = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
            s += w * d * d;
        }
        acc += dt * s * grid.h();
    }
    acc.max(0.0).sqrt()
}

/// Sampled slack of the two coercivity inequalities at the run's own upper
/// temperature bound.
#[derive(Debug, Clone, Copy)]
pub struct MoserSampleSummary {
    pub samples: usize,
    pub min_phi_margin: f64,
    pub min_psi_margin: f64,
}

impl MoserSampleSummary {
    pub fn pass(&self) -> bool {
        self.min_phi_margin >= 0.0 && self.min_psi_margin >= 0.0
    }
}

/// Deterministic low-discrepancy scan of the weight inequalities.
pub fn moser_sample_summary(theta_star_high: f64, samples: usize) -> MoserSampleSummary {
    let w = MoserWeights::new(theta_star_high.max(1.0));
    let mut min_phi = f64::INFINITY;
    let mut min_psi = f64::INFINITY;
    let golden = 0.618_033_988_749_894_9;
    for k in 0..samples {
        let u = (k as f64 * golden).fract();
        let v = (k as f64 * golden * golden).fract();
        let n = 1 + (u * 11.0) as u32;
        let p = 1.0 + 7.0 * v;
        let r = w.theta_star_high * (-1.0 + (n as f64 + 2.0) * u).exp();
        let cstar = w.phi_cstar(n);
        let wv = (r.ln() - w.u_star).max(0.0).min(n as f64);
        let phi_rhs = w.phi_alpha_star() * (3.0 * wv).exp() - cstar;
        let phi_lhs = w.phi(n, r);
        let scale = phi_lhs.abs().max(phi_rhs.abs()).max(1.0);
        min_phi = min_phi.min((phi_lhs - phi_rhs) / scale + 1e-9);
        let psi_lhs = w.psi(n, p, r);
        let psi_rhs = w.psi_lower_bound(n, p, r);
        let scale = psi_lhs.abs().max(psi_rhs.abs()).max(1.0);
        min_psi = min_psi.min((psi_lhs - psi_rhs) / scale + 1e-9);
    }
    MoserSampleSummary {
        samples,
        min_phi_margin: min_phi,
        min_psi_margin: min_psi,
    }
}

/// Aggregate report for one run: extrema, window check, monitors, weight
/// samples, and (when a probe was run) the stability fit.
#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    pub theta_min: f64,
    pub theta_max: f64,
    pub chi_min: f64,
    pub chi_max: f64,
    pub max_principle: MaxPrincipleResult,
    pub monitors: EnergyMonitors,
    pub harmonic_lift_in_window: bool,
    pub moser: MoserSampleSummary,
    /// `(fitted rate, max amplification)` from a twin-run probe, when one
    /// was attached.
    pub stability_fit: Option<(f64, f64)>,
}

impl DiagnosticsReport {
    /// Key-value lines in `section.key = value` form.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("extrema.theta_min = {:.12e}", self.theta_min),
            format!("extrema.theta_max = {:.12e}", self.theta_max),
            format!("extrema.chi_min = {:.12e}", self.chi_min),
            format!("extrema.chi_max = {:.12e}", self.chi_max),
            format!(
                "invariants.max_principle = {}",
                if self.max_principle.pass { "pass" } else { "fail" }
            ),
            format!(
                "invariants.max_principle_margin = {:.6e}",
                self.max_principle.margin
            ),
            format!(
                "invariants.theta_positive = {}",
                if self.theta_min > 0.0 { "pass" } else { "fail" }
            ),
            format!(
                "invariants.harmonic_lift_window = {}",
                if self.harmonic_lift_in_window { "pass" } else { "fail" }
            ),
        ];
        if let Some((node, time, value)) = self.max_principle.worst {
            out.push(format!(
                "invariants.max_principle_worst = node {node}, t {time:.6}, value {value:.12e}"
            ));
        }
        out.push(format!(
            "moser.samples = {}",
            self.moser.samples
        ));
        out.push(format!(
            "moser.min_phi_margin = {:.6e}",
            self.moser.min_phi_margin
        ));
        out.push(format!(
            "moser.min_psi_margin = {:.6e}",
            self.moser.min_psi_margin
        ));
        out.push(format!(
            "moser.pass = {}",
            if self.moser.pass() { "pass" } else { "fail" }
        ));
        if let Some((c_fit, max_ratio)) = self.stability_fit {
            out.push(format!("stability.c_fit = {c_fit:.6e}"));
            out.push(format!("stability.max_ratio = {max_ratio:.6e}"));
        }
        for (name, v) in self.monitors.rows() {
            out.push(format!("norms.{name} = {v:.12e}"));
        }
        out
    }
}

/// Run the full diagnostics battery over a finished trajectory.
pub fn full_report(
    traj: &Trajectory,
    spec: &ProblemSpec,
    grid: Grid1D,
    newton_tol: f64,
) -> Result<DiagnosticsReport, DiagnosticsError> {
    let monitors = energy_monitors(traj, spec, grid)?;
    let max_principle = max_principle_check(
        traj,
        spec.chi_star_low,
        spec.chi_star_high,
        10.0 * newton_tol,
    );
    let harmonic_lift_in_window = harmonic_lift_window_check(spec, grid, traj.eps, 16)?;
    Ok(DiagnosticsReport {
        theta_min: traj.theta_min,
        theta_max: traj.theta_max,
        chi_min: traj.chi_min,
        chi_max: traj.chi_max,
        max_principle,
        monitors,
        harmonic_lift_in_window,
        moser: moser_sample_summary(spec.theta_star_high, 1000),
        stability_fit: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffField;
    use crate::model::{BoundaryValue, Potentials, SourceSpec};

    fn linear_spec() -> ProblemSpec {
        ProblemSpec {
            length: 1.0,
            horizon: 0.5,
            potentials: Potentials::FirstOrder,
            source: SourceSpec {
                kind: SourceKind::Linear {
                    r3: CoeffField::Constant(0.5),
                    r4: CoeffField::Constant(0.5),
                },
                lipschitz_r: None,
            },
            theta_star_low: 0.5,
            theta_star_high: 2.0,
            chi_star_low: 0.0,
            chi_star_high: 1.0,
            bc_left: BoundaryValue::Constant(1.0),
            bc_right: BoundaryValue::Constant(1.0),
            theta0: InitialField::Constant(1.0),
            chi0: InitialField::SineBump {
                base: 0.0,
                amplitude: 1.0,
            },
        }
    }

    #[test]
    fn max_principle_scan_detects_offenders() {
        let g = Grid1D::new(8, 1.0).unwrap();
        let cfg = SchemeConfig::new(1e-2, 1e-2);
        let mut traj = run(&linear_spec(), g, &cfg, 1).unwrap();
        let tol = 1e-7;
        let ok = max_principle_check(&traj, 0.0, 1.0, tol);
        assert!(ok.pass, "margin {}", ok.margin);

        // inject one value just past the window
        let k = traj.levels() / 2;
        traj.chis[k][3] = 1.0 + 2.0 * tol;
        let bad = max_principle_check(&traj, 0.0, 1.0, tol);
        assert!(!bad.pass);
        let (node, _, value) = bad.worst.unwrap();
        assert_eq!(node, 3);
        assert!((value - (1.0 + 2.0 * tol)).abs() < 1e-15);
    }

    #[test]
    fn steady_trajectory_monitors_are_quiet() {
        let mut spec = linear_spec();
        spec.potentials = Potentials::SecondOrder;
        spec.chi_star_low = -1.0;
        spec.chi_star_high = 1.0;
        spec.chi0 = InitialField::Constant(0.0);
        spec.source = SourceSpec::none();
        let g = Grid1D::new(16, 1.0).unwrap();
        let cfg = SchemeConfig::new(1e-2, 1e-3);
        let traj = run(&spec, g, &cfg, 1).unwrap();
        let mon = energy_monitors(&traj, &spec, g).unwrap();
        assert!(mon.all_finite());
        assert!(mon.dchi_dt_l2 < 1e-8, "{:?}", mon);
        assert!(mon.dtheta_dt_dual < 1e-8, "{:?}", mon);
        assert!((mon.sup_theta_l2 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn harmonic_lift_window_holds_for_valid_data() {
        let spec = linear_spec();
        let g = Grid1D::new(16, 1.0).unwrap();
        for eps in [1e-2, 1e-3] {
            assert!(harmonic_lift_window_check(&spec, g, eps, 8).unwrap());
        }
    }

    #[test]
    fn phi_closed_form_values() {
        let w = MoserWeights::new(1.0);
        assert_eq!(w.phi(10, 0.5), 0.0);
        // int_1^2 ((s)^2 - 1) ds = 8/3 - 2 + 2/3 = 4/3
        assert!((w.phi(10, 2.0) - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn phi_matches_brute_force_quadrature() {
        for th in [1.0, 1.7, 3.2] {
            let w = MoserWeights::new(th);
            for n in [1u32, 3, 10] {
                for r in [th * 0.9, th * 1.5, th * (n as f64 * 0.5).exp(), th * (n as f64).exp() * 2.0] {
                    if r <= 0.0 {
                        continue;
                    }
                    let got = w.phi(n, r);
                    // tolerance relative to the closed-form magnitude
                    let scale = got.abs().max(1.0);
                    let brute = adaptive_simpson(
                        &|s: f64| {
                            let wv = (s.ln() - w.u_star).max(0.0).min(n as f64);
                            (2.0 * wv).exp() - 1.0
                        },
                        th,
                        r.max(th),
                        1e-11 * scale,
                    );
                    assert!(
                        ((got - brute) / scale).abs() < 1e-9,
                        "th={th} n={n} r={r}: {got} vs {brute}"
                    );
                }
            }
        }
    }

    #[test]
    fn phi_coercivity_with_sixth_alpha() {
        let w = MoserWeights::new(1.3);
        let alpha = w.phi_alpha_star();
        let cstar = w.phi_cstar(12);
        // C* is finite and at least alpha*
        assert!(cstar.is_finite() && cstar >= alpha);
        for n in [1u32, 4, 12] {
            for k in 0..200 {
                let r = 0.1 + 0.35 * k as f64;
                let lhs = w.phi(n, r);
                let wv = (r.ln() - w.u_star).max(0.0).min(n as f64);
                let rhs = alpha * (3.0 * wv).exp() - cstar;
                assert!(lhs >= rhs - 1e-9, "n={n} r={r}: {lhs} < {rhs}");
            }
        }
    }

    #[test]
    fn psi_reference_value_and_lower_bound() {
        let w = MoserWeights::new(1.0);
        // int_1^e ln s ds = 1 (p = 1, n >= 1)
        let v = w.psi(5, 1.0, std::f64::consts::E);
        assert!((v - 1.0).abs() < 1e-10, "v={v}");
        let bound = w.psi_lower_bound(5, 1.0, std::f64::consts::E);
        assert!((bound - 0.5).abs() < 1e-12);
        assert!(v >= bound);
        assert_eq!(w.psi(5, 1.0, 0.5), 0.0);
    }

    #[test]
    fn stability_probe_zero_perturbation_is_bitwise_zero() {
        let spec = linear_spec();
        let g = Grid1D::new(12, 1.0).unwrap();
        let cfg = SchemeConfig::new(1e-2, 1e-2);
        let probe = stability_probe(&spec, g, &cfg, 0.0).unwrap();
        assert_eq!(probe.initial_diff, 0.0);
        assert_eq!(probe.final_diff, 0.0);
        assert!(probe.diffs.iter().all(|&(_, d)| d == 0.0));
        assert_eq!(probe.c_fit, 0.0);
    }

    #[test]
    fn stability_probe_rejects_singular_source() {
        let mut spec = linear_spec();
        spec.source = SourceSpec {
            kind: SourceKind::Singular {
                r1: CoeffField::Constant(0.5),
                r2: CoeffField::Constant(0.0),
            },
            lipschitz_r: None,
        };
        let g = Grid1D::new(8, 1.0).unwrap();
        let cfg = SchemeConfig::new(1e-2, 1e-2);
        assert!(matches!(
            stability_probe(&spec, g, &cfg, 1e-3),
            Err(DiagnosticsError::NonLipschitzSource)
        ));
    }

    #[test]
    fn stability_probe_linear_response() {
        let spec = linear_spec();
        let g = Grid1D::new(16, 1.0).unwrap();
        let cfg = SchemeConfig::new(5e-3, 1e-2);
        let p1 = stability_probe(&spec, g, &cfg, 1e-3).unwrap();
        let p2 = stability_probe(&spec, g, &cfg, 5e-4).unwrap();
        assert!(p1.c_fit.is_finite());
        // halving the perturbation halves the final difference within 5%
        let ratio = p1.final_diff / p2.final_diff;
        assert!((ratio - 2.0).abs() / 2.0 < 0.05, "ratio {ratio}");
    }

    #[test]
    fn full_report_on_demo_run() {
        let spec = linear_spec();
        let g = Grid1D::new(24, 1.0).unwrap();
        let cfg = SchemeConfig::new(1e-3, 1e-3);
        let traj = run(&spec, g, &cfg, 1).unwrap();
        let rep = full_report(&traj, &spec, g, cfg.newton_tol).unwrap();
        assert!(rep.max_principle.pass);
        assert!(rep.theta_min > 0.0);
        assert!(rep.monitors.all_finite());
        assert!(rep.harmonic_lift_in_window);
        assert!(rep.moser.pass(), "{:?}", rep.moser);
        let lines = rep.lines();
        assert!(lines.iter().any(|l| l.starts_with("extrema.theta_min")));
        assert!(lines.iter().any(|l| l.contains("invariants.max_principle = pass")));
        assert!(lines.iter().any(|l| l.contains("moser.pass = pass")));
    }

    #[test]
    fn moser_summary_scans_cleanly_for_various_ceilings() {
        for th in [1.0, 1.3, 2.0, 3.7] {
            let s = moser_sample_summary(th, 500);
            assert!(s.pass(), "theta_high={th}: {s:?}");
        }
    }
}

//! Time integration of the regularized system by a decoupled, fully
//! implicit scheme: at each step the phase equation is solved first with
//! the previous temperature, then the temperature equation with the fresh
//! phase. Both nonlinear systems are tridiagonal-plus-diagonal and are
//! solved by damped Newton iterations with direct tridiagonal elimination.
//!
//! No positivity clamp is applied to the temperature anywhere: positivity
//! is an emergent property to be observed, not enforced.

use crate::grid::{solve_tridiagonal, Field, Grid1D};
use crate::model::{ProblemSpec, SourceKind, ValidationReport};
use crate::monotone::{MollifiedBeta, MonotoneError, RegularizedLog};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub dt: f64,
    pub eps: f64,
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Evaluate the Lipschitz part of the source at the new time level.
    /// Only meaningful for the linear source kind; the singular kind has an
    /// r-independent smooth part and is treated implicitly regardless.
    pub theta_source_implicit: bool,
    /// Gauss order forwarded to the mollified source.
    pub quadrature_order: usize,
}

impl SchemeConfig {
    pub fn new(dt: f64, eps: f64) -> Self {
        Self {
            dt,
            eps,
            newton_tol: 1e-10,
            newton_max: 50,
            theta_source_implicit: true,
            quadrature_order: 16,
        }
    }
}

#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub theta: Field,
    pub chi: Field,
}

#[derive(Debug, Clone, Default)]
pub struct StepReport {
    pub chi_newton_iters: usize,
    pub theta_newton_iters: usize,
    pub chi_residual: f64,
    pub theta_residual: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub chi_min: f64,
    pub chi_max: f64,
    pub wall_seconds: f64,
    /// Set when `dt * sup(R3+) >= 0.5` makes the implicit source term eat
    /// noticeably into the Jacobian diagonal.
    pub conditioning_warning: bool,
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error("Newton diverged in the {equation} solve: residual {residual:.3e} after {iters} iterations, iterate range [{min:.3e}, {max:.3e}]")]
    NewtonDiverged {
        equation: &'static str,
        residual: f64,
        iters: usize,
        min: f64,
        max: f64,
    },
    #[error(transparent)]
    Numeric(#[from] MonotoneError),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("spec rejected by validation:\n{0}")]
    InvalidSpec(ValidationReport),
    #[error("implicit linear source requires dt * sup(R3+) < 1, got {0}")]
    SourceStability(f64),
    #[error(transparent)]
    Numeric(#[from] MonotoneError),
    #[error("step {step} at t={t} failed: {source}")]
    Aborted {
        step: usize,
        t: f64,
        source: StepError,
        partial: Box<Trajectory>,
    },
}

/// Stored time levels plus running extrema over every step taken.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub thetas: Vec<Field>,
    pub chis: Vec<Field>,
    pub reports: Vec<StepReport>,
    pub dt: f64,
    pub eps: f64,
    /// Extrema over all steps taken, snapshots or not.
    pub theta_min: f64,
    pub theta_max: f64,
    pub chi_min: f64,
    pub chi_max: f64,
}

impl Trajectory {
    fn new(dt: f64, eps: f64) -> Self {
        Self {
            times: Vec::new(),
            thetas: Vec::new(),
            chis: Vec::new(),
            reports: Vec::new(),
            dt,
            eps,
            theta_min: f64::INFINITY,
            theta_max: f64::NEG_INFINITY,
            chi_min: f64::INFINITY,
            chi_max: f64::NEG_INFINITY,
        }
    }

    pub fn levels(&self) -> usize {
        self.times.len()
    }

    pub fn final_state(&self) -> State {
        let k = self.levels() - 1;
        State {
            t: self.times[k],
            theta: self.thetas[k].clone(),
            chi: self.chis[k].clone(),
        }
    }
}

/// Shared per-run context: the scalar kernels and problem data.
pub struct StepContext<'a> {
    pub spec: &'a ProblemSpec,
    pub grid: Grid1D,
    pub cfg: &'a SchemeConfig,
    pub lneps: RegularizedLog,
    pub beta: MollifiedBeta,
    source_implicit: bool,
}

impl<'a> StepContext<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        grid: Grid1D,
        cfg: &'a SchemeConfig,
    ) -> Result<Self, RunError> {
        // The diffusion stencil divides by h^2, so the scalar-kernel
        // residual must sit well below newton_tol * h^2.
        let lneps = RegularizedLog::with_tolerance(cfg.eps, 1e-15)?;
        let beta = MollifiedBeta::new(
            spec.source.base_beta(),
            spec.domain(),
            cfg.eps,
            cfg.quadrature_order,
        )?;
        let source_implicit =
            cfg.theta_source_implicit && matches!(spec.source.kind, SourceKind::Linear { .. });
        if source_implicit {
            if let SourceKind::Linear { r3, .. } = &spec.source.kind {
                let sup_pos = r3.range(&spec.domain()).1.max(0.0);
                if cfg.dt * sup_pos >= 1.0 {
                    return Err(RunError::SourceStability(cfg.dt * sup_pos));
                }
            }
        }
        Ok(Self {
            spec,
            grid,
            cfg,
            lneps,
            beta,
            source_implicit,
        })
    }

    fn conditioning_warning(&self) -> bool {
        if let SourceKind::Linear { r3, .. } = &self.spec.source.kind {
            self.source_implicit && self.cfg.dt * r3.range(&self.spec.domain()).1.max(0.0) >= 0.5
        } else {
            false
        }
    }

    /// Initial state with the boundary nodes of `theta` pinned to the
    /// boundary datum at t = 0.
    pub fn initial_state(&self) -> State {
        let spec = self.spec;
        let mut theta = Field::from_fn(self.grid, |x| spec.theta0.eval(x, spec.length));
        let last = self.grid.total_nodes() - 1;
        theta[0] = spec.bc_left.eval(0.0);
        theta[last] = spec.bc_right.eval(0.0);
        let chi = Field::from_fn(self.grid, |x| spec.chi0.eval(x, spec.length));
        State { t: 0.0, theta, chi }
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Implicit phase update: solve
/// `(chi - chi_old)/dt - lap(chi) + F'(chi) + G'(chi) theta_old = 0`
/// at every node under ghost-reflected Neumann data.
pub fn chi_step(ctx: &StepContext, state: &State, dt: f64) -> Result<(Field, usize, f64), StepError> {
    let grid = ctx.grid;
    let m = grid.total_nodes();
    let h2 = grid.h() * grid.h();
    let p = &ctx.spec.potentials;
    let chi_old = &state.chi;
    let theta_old = &state.theta;

    let residual = |chi: &Field| -> Vec<f64> {
        let v = chi.values();
        let mut res = vec![0.0; m];
        for i in 0..m {
            let left = if i == 0 { v[1] } else { v[i - 1] };
            let right = if i == m - 1 { v[m - 2] } else { v[i + 1] };
            let lap = (left - 2.0 * v[i] + right) / h2;
            res[i] = (v[i] - chi_old[i]) / dt - lap
                + p.eval_f_prime(v[i])
                + p.eval_g_prime(v[i]) * theta_old[i];
        }
        res
    };

    let tol = ctx.cfg.newton_tol * (1.0 + crate::grid::norm_linf(chi_old));
    let mut chi = chi_old.clone();
    let mut res = residual(&chi);
    let mut res_norm = sup_norm(&res);
    for iter in 0..ctx.cfg.newton_max {
        if res_norm <= tol {
            return Ok((chi, iter, res_norm));
        }
        // tridiagonal Jacobian: 1/dt I - lap + diag(F'' + G'' theta_old)
        let mut sub = vec![-1.0 / h2; m - 1];
        let mut sup = vec![-1.0 / h2; m - 1];
        let mut diag = vec![0.0; m];
        for i in 0..m {
            diag[i] = 1.0 / dt
                + 2.0 / h2
                + p.eval_f_second(chi[i])
                + p.eval_g_second(chi[i]) * theta_old[i];
        }
        // ghost reflection doubles the single off-diagonal entry at the ends
        sup[0] = -2.0 / h2;
        sub[m - 2] = -2.0 / h2;
        let mut delta: Vec<f64> = res.iter().map(|r| -r).collect();
        solve_tridiagonal(&sub, &diag, &sup, &mut delta);

        // damped update: halve the step until the residual drops
        let mut alpha = 1.0;
        loop {
            let mut trial = chi.clone();
            for i in 0..m {
                trial[i] += alpha * delta[i];
            }
            let trial_res = residual(&trial);
            let trial_norm = sup_norm(&trial_res);
            if trial_norm < res_norm || alpha < 1e-6 {
                chi = trial;
                res = trial_res;
                res_norm = trial_norm;
                break;
            }
            alpha *= 0.5;
        }
    }
    if res_norm <= tol {
        return Ok((chi, ctx.cfg.newton_max, res_norm));
    }
    Err(StepError::NewtonDiverged {
        equation: "phase",
        residual: res_norm,
        iters: ctx.cfg.newton_max,
        min: chi.min(),
        max: chi.max(),
    })
}

/// Implicit temperature update with the fresh phase field: solve at the
/// interior nodes
///
/// `(th - th_old)/dt - (G(chi_new) - G(chi_old))/dt - lap(Ln_eps th)
/// + beta_eps(x, t_new, th) - pi(x, t_new, th*) = 0`
///
/// with Dirichlet values at the new time on the boundary. `th*` is the new
/// iterate when the source is implicit, the old level otherwise.
pub fn theta_step(
    ctx: &StepContext,
    state: &State,
    chi_new: &Field,
    t_new: f64,
    dt: f64,
) -> Result<(Field, usize, f64), StepError> {
    let grid = ctx.grid;
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let spec = ctx.spec;
    let p = &spec.potentials;
    let theta_old = &state.theta;
    let chi_old = &state.chi;
    let lneps = &ctx.lneps;
    let mb = &ctx.beta;

    let bl = spec.bc_left.eval(t_new);
    let br = spec.bc_right.eval(t_new);
    let w_left = lneps.ln_eps_total(bl)?;
    let w_right = lneps.ln_eps_total(br)?;

    // G-difference forcing, fixed during the solve
    let mut g_rate = vec![0.0; n];
    for i in 1..=n {
        g_rate[i - 1] = (p.eval_g(chi_new[i]) - p.eval_g(chi_old[i])) / dt;
    }

    // interior unknowns
    let mut th: Vec<f64> = theta_old.values()[1..=n].to_vec();

    let eval_residual = |th: &[f64]| -> Result<(Vec<f64>, Vec<f64>), StepError> {
        let mut w = vec![0.0; n + 2];
        w[0] = w_left;
        w[n + 1] = w_right;
        let mut wprime = vec![0.0; n];
        for i in 1..=n {
            w[i] = lneps.ln_eps_total(th[i - 1])?;
            wprime[i - 1] = lneps.ln_eps_total_prime(th[i - 1])?;
        }
        let mut res = vec![0.0; n];
        for i in 1..=n {
            let lap = (w[i - 1] - 2.0 * w[i] + w[i + 1]) / h2;
            let x = grid.x(i);
            let th_src = if ctx.source_implicit {
                th[i - 1]
            } else {
                theta_old[i]
            };
            res[i - 1] = (th[i - 1] - theta_old[i]) / dt - g_rate[i - 1] - lap
                + mb.beta_eps(x, t_new, th[i - 1])
                - spec.source.eval_pi(x, t_new, th_src);
        }
        Ok((res, wprime))
    };

    let tol = ctx.cfg.newton_tol * (1.0 + crate::grid::norm_linf(theta_old));
    let (mut res, mut wprime) = eval_residual(&th)?;
    let mut res_norm = sup_norm(&res);
    for iter in 0..ctx.cfg.newton_max {
        if res_norm <= tol {
            return Ok((assemble_theta(grid, &th, bl, br), iter, res_norm));
        }
        let mut sub = vec![0.0; n - 1];
        let mut sup = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let x = grid.x(i + 1);
            let dpi = if ctx.source_implicit {
                spec.source.pi_prime(x, t_new)
            } else {
                0.0
            };
            diag[i] = 1.0 / dt + 2.0 * wprime[i] / h2 + mb.beta_eps_prime(x, t_new, th[i]) - dpi;
            if i > 0 {
                sub[i - 1] = -wprime[i - 1] / h2;
            }
            if i < n - 1 {
                sup[i] = -wprime[i + 1] / h2;
            }
        }
        let mut delta: Vec<f64> = res.iter().map(|r| -r).collect();
        solve_tridiagonal(&sub, &diag, &sup, &mut delta);

        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = th
                .iter()
                .zip(delta.iter())
                .map(|(a, d)| a + alpha * d)
                .collect();
            let (trial_res, trial_wp) = eval_residual(&trial)?;
            let trial_norm = sup_norm(&trial_res);
            if trial_norm < res_norm || alpha < 1e-6 {
                th = trial;
                res = trial_res;
                wprime = trial_wp;
                res_norm = trial_norm;
                break;
            }
            alpha *= 0.5;
        }
    }
    if res_norm <= tol {
        return Ok((assemble_theta(grid, &th, bl, br), ctx.cfg.newton_max, res_norm));
    }
    Err(StepError::NewtonDiverged {
        equation: "temperature",
        residual: res_norm,
        iters: ctx.cfg.newton_max,
        min: th.iter().copied().fold(f64::INFINITY, f64::min),
        max: th.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

fn assemble_theta(grid: Grid1D, interior: &[f64], bl: f64, br: f64) -> Field {
    let mut v = Vec::with_capacity(grid.total_nodes());
    v.push(bl);
    v.extend_from_slice(interior);
    v.push(br);
    Field::new(grid, v)
}

/// Advance the system from t = 0 to the horizon. Snapshots (including the
/// initial and final levels) are stored every `snapshot_every` steps;
/// extrema are tracked at every step regardless.
pub fn run(
    spec: &ProblemSpec,
    grid: Grid1D,
    cfg: &SchemeConfig,
    snapshot_every: usize,
) -> Result<Trajectory, RunError> {
    let report = spec.validate();
    if !report.is_valid() {
        return Err(RunError::InvalidSpec(report));
    }
    let ctx = StepContext::new(spec, grid, cfg)?;
    let mut state = ctx.initial_state();

    let stride = snapshot_every.max(1);
    // ceil(T/dt) uniform steps of cfg.dt, with the last one shortened so
    // the trajectory lands exactly on the horizon
    let n_steps = (spec.horizon / cfg.dt - 1e-9).ceil().max(1.0) as usize;

    let mut traj = Trajectory::new(cfg.dt, cfg.eps);
    let record = |traj: &mut Trajectory, s: &State, rep: StepReport| {
        traj.times.push(s.t);
        traj.thetas.push(s.theta.clone());
        traj.chis.push(s.chi.clone());
        traj.reports.push(rep);
    };
    let observe = |traj: &mut Trajectory, s: &State| {
        traj.theta_min = traj.theta_min.min(s.theta.min());
        traj.theta_max = traj.theta_max.max(s.theta.max());
        traj.chi_min = traj.chi_min.min(s.chi.min());
        traj.chi_max = traj.chi_max.max(s.chi.max());
    };
    observe(&mut traj, &state);
    record(&mut traj, &state, StepReport::default());

    let warn = ctx.conditioning_warning();
    for k in 1..=n_steps {
        let t_new = (k as f64 * cfg.dt).min(spec.horizon);
        let dt_k = t_new - state.t;
        if dt_k <= 0.0 {
            break;
        }
        let started = Instant::now();
        let step = (|| -> Result<(State, StepReport), StepError> {
            let (chi_new, chi_iters, chi_res) = chi_step(&ctx, &state, dt_k)?;
            let (theta_new, th_iters, th_res) = theta_step(&ctx, &state, &chi_new, t_new, dt_k)?;
            let rep = StepReport {
                chi_newton_iters: chi_iters,
                theta_newton_iters: th_iters,
                chi_residual: chi_res,
                theta_residual: th_res,
                theta_min: theta_new.min(),
                theta_max: theta_new.max(),
                chi_min: chi_new.min(),
                chi_max: chi_new.max(),
                wall_seconds: started.elapsed().as_secs_f64(),
                conditioning_warning: warn,
            };
            Ok((
                State {
                    t: t_new,
                    theta: theta_new,
                    chi: chi_new,
                },
                rep,
            ))
        })();
        match step {
            Ok((next, rep)) => {
                state = next;
                observe(&mut traj, &state);
                if k % stride == 0 || k == n_steps {
                    record(&mut traj, &state, rep);
                }
            }
            Err(e) => {
                return Err(RunError::Aborted {
                    step: k,
                    t: t_new,
                    source: e,
                    partial: Box::new(traj),
                });
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffField;
    use crate::model::{BoundaryValue, InitialField, Potentials, SourceSpec};
    use crate::oracle;

    fn base_spec() -> ProblemSpec {
        ProblemSpec {
            length: 1.0,
            horizon: 1.0,
            potentials: Potentials::FirstOrder,
            source: SourceSpec::none(),
            theta_star_low: 0.5,
            theta_star_high: 2.0,
            chi_star_low: 0.0,
            chi_star_high: 1.0,
            bc_left: BoundaryValue::Constant(1.0),
            bc_right: BoundaryValue::Constant(1.0),
            theta0: InitialField::Constant(1.0),
            chi0: InitialField::Constant(0.0),
        }
    }

    fn grid(n: usize, length: f64) -> Grid1D {
        Grid1D::new(n, length).unwrap()
    }

    #[test]
    fn chi_step_fixed_points() {
        // second order, theta = 1, chi = 0: F'(0) + G'(0) = 0
        let mut spec = base_spec();
        spec.potentials = Potentials::SecondOrder;
        spec.chi_star_low = -1.0;
        spec.chi_star_high = 1.0;
        let cfg = SchemeConfig::new(1e-3, 1e-3);
        let g = grid(16, 1.0);
        let ctx = StepContext::new(&spec, g, &cfg).unwrap();
        let state = ctx.initial_state();
        let (chi_new, _, _) = chi_step(&ctx, &state, cfg.dt).unwrap();
        for &v in chi_new.values() {
            assert!(v.abs() < 1e-12);
        }

        // first order, theta = 1, chi = 1: F'(1) = 0, G'(1) = 0
        let mut spec2 = base_spec();
        spec2.chi0 = InitialField::Constant(1.0);
        let ctx2 = StepContext::new(&spec2, g, &cfg).unwrap();
        let state2 = ctx2.initial_state();
        let (chi_new2, _, _) = chi_step(&ctx2, &state2, cfg.dt).unwrap();
        for &v in chi_new2.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chi_step_matches_scalar_backward_euler() {
        // spatially constant data reduce the phase solve to one scalar
        // backward-Euler equation; its root comes from an independent
        // scalar Newton iteration in this test.
        let mut spec = base_spec();
        spec.chi0 = InitialField::Constant(0.3);
        let cfg = SchemeConfig::new(1e-3, 1e-3);
        let g = grid(24, 1.0);
        let ctx = StepContext::new(&spec, g, &cfg).unwrap();
        let state = ctx.initial_state();
        let (chi_new, _, _) = chi_step(&ctx, &state, cfg.dt).unwrap();

        let scalar_root = {
            // (c - 0.3)/dt + F'(c) + G'(c) = 0 via bisection
            let f = |c: f64| {
                (c - 0.3) / 1e-3
                    + spec.potentials.eval_f_prime(c)
                    + spec.potentials.eval_g_prime(c)
            };
            let (mut lo, mut hi) = (0.0, 0.5);
            assert!(f(lo) < 0.0 && f(hi) > 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        // frozen from the oracle: root near 0.2999159781627951
        assert!((scalar_root - 0.299_915_978_162_795_1).abs() < 1e-12);
        for &v in chi_new.values() {
            assert!((v - scalar_root).abs() < 1e-9, "node value {v} vs {scalar_root}");
        }
        // the degenerate critical point chi = 0.5 stays put
        let mut spec2 = base_spec();
        spec2.chi0 = InitialField::Constant(0.5);
        let ctx2 = StepContext::new(&spec2, g, &cfg).unwrap();
        let (chi_new2, _, _) = chi_step(&ctx2, &ctx2.initial_state(), cfg.dt).unwrap();
        for &v in chi_new2.values() {
            assert!((v - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn theta_step_steady_within_mollification_slack() {
        // theta = 1 with matching boundary and singular source with
        // pi = 0: the residual at the old state is at most M*eps, so one
        // step moves by at most ~2*M*eps*dt.
        let mut spec = base_spec();
        spec.source = SourceSpec {
            kind: SourceKind::Singular {
                r1: CoeffField::Constant(0.5),
                r2: CoeffField::Constant(-0.5),
            },
            lipschitz_r: None,
        };
        let cfg = SchemeConfig::new(1e-3, 1e-3);
        let g = grid(16, 1.0);
        let ctx = StepContext::new(&spec, g, &cfg).unwrap();
        let state = ctx.initial_state();
        let (chi_new, _, _) = chi_step(&ctx, &state, cfg.dt).unwrap();
        let (theta_new, _, _) = theta_step(&ctx, &state, &chi_new, cfg.dt, cfg.dt).unwrap();
        let m = ctx.beta.reported_m();
        for &v in theta_new.values() {
            assert!((v - 1.0).abs() <= 2.0 * m * cfg.eps * cfg.dt + 1e-12, "v={v}");
        }
    }

    #[test]
    fn theta_step_single_step_matches_fine_explicit() {
        // one implicit step against 1000 forward-Euler steps of size dt/1000
        let mut spec = base_spec();
        spec.source = SourceSpec {
            kind: SourceKind::Singular {
                r1: CoeffField::Constant(1.0),
                r2: CoeffField::Constant(0.0),
            },
            lipschitz_r: None,
        };
        spec.theta0 = InitialField::Affine {
            left: 1.0,
            right: 1.0,
        };
        spec.bc_left = BoundaryValue::Constant(1.0);
        spec.bc_right = BoundaryValue::Constant(1.0);
        let dt = 1e-4;
        spec.horizon = dt;
        let eps = 0.1;
        let g = grid(12, 1.0);
        let cfg = SchemeConfig::new(dt, eps);
        let ctx = StepContext::new(&spec, g, &cfg).unwrap();
        let state = ctx.initial_state();
        let (chi_new, _, _) = chi_step(&ctx, &state, cfg.dt).unwrap();
        let (theta_new, _, _) = theta_step(&ctx, &state, &chi_new, dt, dt).unwrap();

        let levels = oracle::fine_explicit_reference(&spec, g, eps, dt / 1000.0, 100_000).unwrap();
        let fine = &levels.last().unwrap().theta;
        let mut diff: f64 = 0.0;
        for (a, b) in theta_new.values().iter().zip(fine.values()) {
            diff = diff.max((a - b).abs());
        }
        assert!(diff <= dt, "single-step difference {diff} exceeds dt={dt}");
    }

    #[test]
    fn run_keeps_exact_steady_state() {
        let mut spec = base_spec();
        spec.potentials = Potentials::SecondOrder;
        spec.chi_star_low = -1.0;
        spec.chi_star_high = 1.0;
        let cfg = SchemeConfig::new(1e-2, 1e-3);
        let traj = run(&spec, grid(16, 1.0), &cfg, 10).unwrap();
        let fin = traj.final_state();
        for &v in fin.theta.values() {
            assert!((v - 1.0).abs() < 1e-9);
        }
        for &v in fin.chi.values() {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn run_is_deterministic() {
        let mut spec = base_spec();
        spec.source = SourceSpec {
            kind: SourceKind::Singular {
                r1: CoeffField::Constant(0.5),
                r2: CoeffField::Constant(0.0),
            },
            lipschitz_r: None,
        };
        spec.chi0 = InitialField::SineBump {
            base: 0.0,
            amplitude: 1.0,
        };
        spec.horizon = 0.05;
        let cfg = SchemeConfig::new(1e-3, 1e-2);
        let a = run(&spec, grid(24, 1.0), &cfg, 1).unwrap();
        let b = run(&spec, grid(24, 1.0), &cfg, 1).unwrap();
        for (ta, tb) in a.thetas.iter().zip(b.thetas.iter()) {
            assert_eq!(ta.values(), tb.values());
        }
        for (ca, cb) in a.chis.iter().zip(b.chis.iter()) {
            assert_eq!(ca.values(), cb.values());
        }
    }

    #[test]
    fn run_rejects_invalid_spec() {
        let mut spec = base_spec();
        spec.theta_star_low = 1.5;
        let cfg = SchemeConfig::new(1e-3, 1e-3);
        match run(&spec, grid(8, 1.0), &cfg, 1) {
            Err(RunError::InvalidSpec(rep)) => assert!(!rep.is_valid()),
            other => panic!("expected invalid-spec error, got {other:?}"),
        }
    }

    #[test]
    fn implicit_linear_source_stability_guard() {
        let mut spec = base_spec();
        spec.source = SourceSpec {
            kind: SourceKind::Linear {
                r3: CoeffField::Constant(30.0),
                r4: CoeffField::Constant(0.0),
            },
            lipschitz_r: None,
        };
        let cfg = SchemeConfig::new(0.05, 1e-3); // dt * sup R3 = 1.5
        match run(&spec, grid(8, 1.0), &cfg, 1) {
            Err(RunError::SourceStability(v)) => assert!(v >= 1.0),
            other => panic!("expected source-stability error, got {other:?}"),
        }
    }

    #[test]
    fn homogeneous_run_tracks_reduction_at_center() {
        // wide domain so the pinned boundary cannot reach the center
        let mut spec = base_spec();
        spec.length = 40.0;
        spec.horizon = 0.25;
        spec.chi0 = InitialField::Constant(0.4);
        let g = grid(159, 40.0);
        let cfg = SchemeConfig::new(1e-3, 1e-5);
        let traj = run(&spec, g, &cfg, 1).unwrap();
        let red = oracle::OdeReduction::new(&spec).unwrap();
        let ode = red.rk4_reference(1e-6).unwrap();
        let mid = g.total_nodes() / 2;
        let fin = traj.final_state();
        let (_, th_end, ch_end) = *ode.last().unwrap();
        // backward Euler at dt=1e-3: O(dt) agreement
        assert!(
            (fin.theta[mid] - th_end).abs() < 5.0 * cfg.dt,
            "theta {} vs {}",
            fin.theta[mid],
            th_end
        );
        assert!((fin.chi[mid] - ch_end).abs() < 5.0 * cfg.dt);
    }

    #[test]
    fn backward_euler_order_against_reduction() {
        let mut spec = base_spec();
        spec.length = 40.0;
        spec.horizon = 0.25;
        spec.chi0 = InitialField::Constant(0.4);
        let g = grid(159, 40.0);
        let red = oracle::OdeReduction::new(&spec).unwrap();
        let ode = red.rk4_reference(1e-6).unwrap();
        let (_, th_end, _) = *ode.last().unwrap();
        let mid = g.total_nodes() / 2;
        let mut errs = Vec::new();
        for dt in [1e-2, 5e-3, 2.5e-3] {
            let cfg = SchemeConfig::new(dt, 1e-5);
            let traj = run(&spec, g, &cfg, 1000).unwrap();
            errs.push((traj.final_state().theta[mid] - th_end).abs());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(
                (0.9..=1.1).contains(&order),
                "observed order {order}, errors {errs:?}"
            );
        }
    }

    #[test]
    fn theta_step_center_matches_scalar_backward_euler() {
        // wide domain: the center node of a homogeneous state solves the
        // scalar backward-Euler equation; its root comes from bisection.
        let mut spec = base_spec();
        spec.length = 40.0;
        spec.theta0 = InitialField::Constant(1.2);
        spec.bc_left = BoundaryValue::Constant(1.2);
        spec.bc_right = BoundaryValue::Constant(1.2);
        spec.theta_star_high = 2.0;
        spec.source = SourceSpec {
            kind: SourceKind::Singular {
                r1: CoeffField::Constant(0.5),
                r2: CoeffField::Constant(0.0),
            },
            lipschitz_r: None,
        };
        spec.chi0 = InitialField::Constant(0.0); // F'(0) = G'(0) = 0: G-rate vanishes
        let dt = 1e-2;
        let eps = 1e-8;
        let g = grid(159, 40.0);
        let mut cfg = SchemeConfig::new(dt, eps);
        cfg.newton_tol = 1e-12;
        let ctx = StepContext::new(&spec, g, &cfg).unwrap();
        let state = ctx.initial_state();
        let (chi_new, _, _) = chi_step(&ctx, &state, dt).unwrap();
        let (theta_new, _, _) = theta_step(&ctx, &state, &chi_new, dt, dt).unwrap();

        // scalar oracle: (c - 1.2)/dt + beta(c) - pi = 0 with the
        // unregularized source (the state sits far from the clamp window)
        let f = |c: f64| (c - 1.2) / dt + 0.5 * (1.0 - 1.0 / (c * c)) - 0.5;
        let (mut lo, mut hi) = (1.2, 1.3);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        // frozen from the oracle
        assert!((root - 1.203_452_329_351_431_7).abs() < 1e-12);
        let mid_node = g.total_nodes() / 2;
        assert!(
            (theta_new[mid_node] - root).abs() < 1e-9,
            "center {} vs scalar root {root}",
            theta_new[mid_node]
        );
    }

    #[test]
    fn aborted_run_retains_partial_trajectory() {
        let mut spec = base_spec();
        spec.source = SourceSpec {
            kind: SourceKind::Singular {
                r1: CoeffField::Constant(0.5),
                r2: CoeffField::Constant(0.0),
            },
            lipschitz_r: None,
        };
        spec.chi0 = InitialField::SineBump {
            base: 0.0,
            amplitude: 1.0,
        };
        let mut cfg = SchemeConfig::new(1e-3, 1e-3);
        cfg.newton_max = 1; // starve the solver so the first step diverges
        cfg.newton_tol = 1e-14;
        match run(&spec, grid(16, 1.0), &cfg, 1) {
            Err(RunError::Aborted { step, partial, .. }) => {
                assert!(step >= 1);
                assert!(partial.levels() >= 1, "initial level must be retained");
            }
            other => panic!("expected an aborted run, got {other:?}"),
        }
    }

    #[test]
    fn conditioning_warning_flagged_for_stiff_implicit_source() {
        let mut spec = base_spec();
        spec.horizon = 0.05;
        spec.source = SourceSpec {
            kind: SourceKind::Linear {
                r3: CoeffField::Constant(0.8),
                r4: CoeffField::Constant(0.8),
            },
            lipschitz_r: None,
        };
        // dt * sup R3 = 0.72: legal but flagged
        let cfg = SchemeConfig::new(0.9, 1e-3);
        let mut short = spec.clone();
        short.horizon = 1.8;
        let traj = run(&short, grid(8, 1.0), &cfg, 1).unwrap();
        assert!(traj.reports.iter().skip(1).all(|r| r.conditioning_warning));

        let calm = SchemeConfig::new(1e-2, 1e-3);
        let traj2 = run(&spec, grid(8, 1.0), &calm, 1).unwrap();
        assert!(traj2.reports.iter().all(|r| !r.conditioning_warning));
    }

    #[test]
    fn time_varying_boundary_and_coefficients_keep_invariants() {
        // ramped boundary temperature plus a source coefficient varying in
        // both space and time
        let mut spec = base_spec();
        spec.source = SourceSpec {
            kind: SourceKind::Singular {
                r1: CoeffField::AffineXT {
                    a: 0.3,
                    b: 0.2,
                    c: 1.0,
                    d: 0.5,
                },
                r2: CoeffField::AffineX { a: 0.0, b: 0.1 },
            },
            lipschitz_r: None,
        };
        spec.bc_left = BoundaryValue::PiecewiseLinear(vec![(0.0, 1.0), (0.5, 1.4), (1.0, 0.9)]);
        spec.bc_right = BoundaryValue::Constant(1.0);
        spec.chi0 = InitialField::SineBump {
            base: 0.1,
            amplitude: 0.8,
        };
        spec.horizon = 0.5;
        assert!(spec.validate().is_valid(), "{}", spec.validate());
        let cfg = SchemeConfig::new(1e-3, 1e-3);
        let traj = run(&spec, grid(48, 1.0), &cfg, 1).unwrap();
        assert!(traj.theta_min > 0.0);
        assert!(traj.chi_min >= -1e-8 && traj.chi_max <= 1.0 + 1e-8);
        // the ramped boundary is actually honored at the wall
        let fin = traj.final_state();
        let expect = spec.bc_left.eval(0.5);
        assert!((fin.theta[0] - expect).abs() < 1e-14, "{} vs {expect}", fin.theta[0]);
    }

    #[test]
    fn phase_window_preserved_on_demo_run() {
        let mut spec = base_spec();
        spec.source = SourceSpec {
            kind: SourceKind::Singular {
                r1: CoeffField::Constant(0.5),
                r2: CoeffField::Constant(0.0),
            },
            lipschitz_r: None,
        };
        spec.chi0 = InitialField::SineBump {
            base: 0.0,
            amplitude: 1.0,
        };
        spec.horizon = 0.2;
        let cfg = SchemeConfig::new(1e-3, 1e-3);
        let traj = run(&spec, grid(48, 1.0), &cfg, 1).unwrap();
        let tol = 10.0 * cfg.newton_tol;
        assert!(traj.chi_min >= -tol, "chi_min = {}", traj.chi_min);
        assert!(traj.chi_max <= 1.0 + tol, "chi_max = {}", traj.chi_max);
        assert!(traj.theta_min > 0.0, "theta_min = {}", traj.theta_min);
    }
}

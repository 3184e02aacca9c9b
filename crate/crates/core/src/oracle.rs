//! Independent brute-force references: an RK4 integration of the
//! spatially-homogeneous reduction, a forward-Euler fine-step PDE solve,
//! and an adaptive-Simpson evaluation of the mollifier convolution.
//!
//! These deliberately avoid the production numerical kernels. The scalar
//! regularized logarithm is recomputed here by plain bisection and the
//! smoothed source by adaptive quadrature, so a defect in the fast paths
//! cannot hide inside the references that check them.

use crate::grid::{Field, Grid1D};
use crate::model::{ProblemSpec, SourceKind};
use crate::monotone::{BaseBeta, MollifiedBeta};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("reduction requires spatially homogeneous data: {0}")]
    NotHomogeneous(String),
    #[error("reduction temperature {theta} left the trusted window [{lo}, {hi}] at t={t}")]
    WindowViolation { theta: f64, t: f64, lo: f64, hi: f64 },
    #[error("explicit reference requires dt_ref <= h^2/(2(eps+1/eps)): dt_ref={dt_ref}, limit={limit}")]
    CflViolation { dt_ref: f64, limit: f64 },
}

const WINDOW_LO: f64 = 1e-6;
const WINDOW_HI: f64 = 1e6;

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_simpson_rec(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1)
            + adaptive_simpson_rec(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1)
    }
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson_rec(&f, a, b, fa, fb, fm, whole, tol, 48)
}

/// Regularized logarithm by plain bisection on `e^u + eps*u = r`.
pub fn bisect_ln_eps(eps: f64, r: f64) -> f64 {
    let h = |u: f64| u.exp() + eps * u - r;
    let mut lo = if r >= 1.0 { 0.0 } else { (r - 1.0) / eps };
    let mut hi = if r >= 1.0 { r.ln() } else { r / eps };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn bisect_ln_eps_total(eps: f64, r: f64) -> f64 {
    eps * r + bisect_ln_eps(eps, r)
}

/// Adaptive-Simpson evaluation of the r-mollified clamped source, sharing
/// only the data of `mb` (kernel width, clamp window, base coefficients),
/// not its quadrature.
pub fn mollifier_quadrature_oracle(mb: &MollifiedBeta, x: f64, t: f64, r: f64) -> f64 {
    match mb.base() {
        BaseBeta::Zero => 0.0,
        base => {
            let eps = mb.eps();
            let delta = mb.delta_eps();
            let bump = |s: f64| {
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - s * s)).exp()
                }
            };
            let norm = simpson(bump, -1.0, 0.0, 1e-14) + simpson(bump, 0.0, 1.0, 1e-14);
            let integrand =
                |s: f64| base.eval(x, t, (r - delta * s).clamp(eps, 1.0 / eps)) * bump(s);
            // split at the clamp corners so each piece is smooth
            let mut pts = vec![-1.0, 1.0];
            for kink in [eps, 1.0 / eps] {
                let s = (r - kink) / delta;
                if s > -1.0 && s < 1.0 {
                    pts.push(s);
                }
            }
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // tolerance scaled to the local integrand magnitude: the clamp
            // keeps values within a Lipschitz step of beta(clamp(r))
            let scale = base
                .eval(x, t, (r - delta).clamp(eps, 1.0 / eps))
                .abs()
                .max(base.eval(x, t, (r + delta).clamp(eps, 1.0 / eps)).abs())
                .max(1.0);
            let mut total = 0.0;
            for w in pts.windows(2) {
                total += simpson(integrand, w[0], w[1], 1e-13 * scale);
            }
            total / norm
        }
    }
}

/// Scalar reduction of the system for spatially homogeneous data with the
/// boundary temperature pinned at the initial value.
///
/// With such data the solution stays spatially constant away from boundary
/// influence and obeys
/// `theta' = G'(chi) chi' + pi(theta) - beta(theta)`,
/// `chi' = -F'(chi) - G'(chi) theta`,
/// with the unregularized source. The reduction aborts if the temperature
/// leaves the window where the unregularized form is trusted.
#[derive(Debug, Clone)]
pub struct OdeReduction {
    spec: ProblemSpec,
    theta0: f64,
    chi0: f64,
}

impl OdeReduction {
    pub fn new(spec: &ProblemSpec) -> Result<Self, OracleError> {
        let homog_tol = 1e-14;
        let (t_lo, t_hi) = spec.theta0.range();
        if (t_hi - t_lo).abs() > homog_tol {
            return Err(OracleError::NotHomogeneous(
                "initial temperature varies in space".into(),
            ));
        }
        let (c_lo, c_hi) = spec.chi0.range();
        if (c_hi - c_lo).abs() > homog_tol {
            return Err(OracleError::NotHomogeneous(
                "initial phase varies in space".into(),
            ));
        }
        for (side, bv) in [("left", &spec.bc_left), ("right", &spec.bc_right)] {
            let (lo, hi) = bv.range();
            if (hi - lo).abs() > homog_tol || (lo - t_lo).abs() > homog_tol {
                return Err(OracleError::NotHomogeneous(format!(
                    "{side} boundary value must be constant and equal to the initial temperature"
                )));
            }
        }
        let coeffs_constant = match &spec.source.kind {
            SourceKind::Singular { r1, r2 } => r1.is_constant() && r2.is_constant(),
            SourceKind::Linear { r3, r4 } => r3.is_constant() && r4.is_constant(),
            SourceKind::None => true,
        };
        if !coeffs_constant {
            return Err(OracleError::NotHomogeneous(
                "source coefficients vary over the cylinder".into(),
            ));
        }
        Ok(Self {
            spec: spec.clone(),
            theta0: t_lo,
            chi0: c_lo,
        })
    }

    pub fn initial(&self) -> (f64, f64) {
        (self.theta0, self.chi0)
    }

    fn rhs(&self, t: f64, theta: f64, chi: f64) -> Result<(f64, f64), OracleError> {
        if !(WINDOW_LO..=WINDOW_HI).contains(&theta) {
            return Err(OracleError::WindowViolation {
                theta,
                t,
                lo: WINDOW_LO,
                hi: WINDOW_HI,
            });
        }
        let p = &self.spec.potentials;
        let dchi = -p.eval_f_prime(chi) - p.eval_g_prime(chi) * theta;
        let pi = self.spec.source.eval_pi(0.0, t, theta);
        let beta = self
            .spec
            .source
            .eval_beta_base(0.0, t, theta)
            .expect("window guard keeps theta positive");
        let dtheta = p.eval_g_prime(chi) * dchi + pi - beta;
        Ok((dtheta, dchi))
    }

    /// Classical fourth-order integration at resolution `dt_ref`; returns
    /// `(t, theta, chi)` samples at every step.
    pub fn rk4_reference(&self, dt_ref: f64) -> Result<Vec<(f64, f64, f64)>, OracleError> {
        assert!(dt_ref > 0.0);
        let steps = (self.spec.horizon / dt_ref).round().max(1.0) as usize;
        let dt = self.spec.horizon / steps as f64;
        let mut out = Vec::with_capacity(steps + 1);
        let (mut theta, mut chi) = (self.theta0, self.chi0);
        out.push((0.0, theta, chi));
        for k in 0..steps {
            let t = k as f64 * dt;
            let (k1t, k1c) = self.rhs(t, theta, chi)?;
            let (k2t, k2c) = self.rhs(t + 0.5 * dt, theta + 0.5 * dt * k1t, chi + 0.5 * dt * k1c)?;
            let (k3t, k3c) = self.rhs(t + 0.5 * dt, theta + 0.5 * dt * k2t, chi + 0.5 * dt * k2c)?;
            let (k4t, k4c) = self.rhs(t + dt, theta + dt * k3t, chi + dt * k3c)?;
            theta += dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
            chi += dt / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c);
            out.push(((k + 1) as f64 * dt, theta, chi));
        }
        Ok(out)
    }
}

/// One state of the explicit reference trajectory.
#[derive(Debug, Clone)]
pub struct ExplicitLevel {
    pub t: f64,
    pub theta: Field,
    pub chi: Field,
}

/// Forward-Euler integration of the same spatial semi-discretization at a
/// fine step `dt_ref`, used to measure the implicit scheme's order in time.
/// Snapshots are kept every `keep_every` steps (the final state always).
pub fn fine_explicit_reference(
    spec: &ProblemSpec,
    grid: Grid1D,
    eps: f64,
    dt_ref: f64,
    keep_every: usize,
) -> Result<Vec<ExplicitLevel>, OracleError> {
    let h = grid.h();
    let limit = h * h / (2.0 * (eps + 1.0 / eps));
    if dt_ref > limit {
        return Err(OracleError::CflViolation { dt_ref, limit });
    }
    let dom = spec.domain();
    let mb = MollifiedBeta::new(spec.source.base_beta(), dom, eps, 16)
        .expect("spec carries an admissible base source");
    let steps = (spec.horizon / dt_ref).round().max(1.0) as usize;
    let dt = spec.horizon / steps as f64;
    let n = grid.n();
    let h2 = h * h;

    let mut theta = Field::from_fn(grid, |x| spec.theta0.eval(x, spec.length));
    theta[0] = spec.bc_left.eval(0.0);
    theta[n + 1] = spec.bc_right.eval(0.0);
    let mut chi = Field::from_fn(grid, |x| spec.chi0.eval(x, spec.length));

    let mut out = Vec::new();
    out.push(ExplicitLevel {
        t: 0.0,
        theta: theta.clone(),
        chi: chi.clone(),
    });

    let p = &spec.potentials;
    for k in 0..steps {
        let t = k as f64 * dt;
        let t_next = (k + 1) as f64 * dt;

        // phase update, all nodes, ghost-reflected Laplacian
        let mut chi_next = chi.clone();
        {
            let v = chi.values();
            let m = v.len();
            for i in 0..m {
                let left = if i == 0 { v[1] } else { v[i - 1] };
                let right = if i == m - 1 { v[m - 2] } else { v[i + 1] };
                let lap = (left - 2.0 * v[i] + right) / h2;
                let rhs = lap - p.eval_f_prime(v[i]) - p.eval_g_prime(v[i]) * theta[i];
                chi_next[i] = v[i] + dt * rhs;
            }
        }

        // temperature update at the interior, Dirichlet data on the lifted variable
        let mut theta_next = theta.clone();
        {
            let w: Vec<f64> = theta
                .values()
                .iter()
                .map(|&v| bisect_ln_eps_total(eps, v))
                .collect();
            let wl = bisect_ln_eps_total(eps, spec.bc_left.eval(t));
            let wr = bisect_ln_eps_total(eps, spec.bc_right.eval(t));
            for i in 1..=n {
                let left = if i == 1 { wl } else { w[i - 1] };
                let right = if i == n { wr } else { w[i + 1] };
                let lap = (left - 2.0 * w[i] + right) / h2;
                let x = grid.x(i);
                let beta = mollifier_quadrature_oracle(&mb, x, t, theta[i]);
                let pi = spec.source.eval_pi(x, t, theta[i]);
                let g_rate = (p.eval_g(chi_next[i]) - p.eval_g(chi[i])) / dt;
                theta_next[i] = theta[i] + dt * (g_rate + lap - beta + pi);
            }
            theta_next[0] = spec.bc_left.eval(t_next);
            theta_next[n + 1] = spec.bc_right.eval(t_next);
        }

        chi = chi_next;
        theta = theta_next;
        if (k + 1) % keep_every.max(1) == 0 || k + 1 == steps {
            out.push(ExplicitLevel {
                t: t_next,
                theta: theta.clone(),
                chi: chi.clone(),
            });
        }
    }
    Ok(out)
}

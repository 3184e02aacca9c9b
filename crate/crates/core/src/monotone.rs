//! Scalar nonlinear kernels: the Yosida-regularized logarithm and the
//! truncated-mollified source nonlinearity.
//!
//! `RegularizedLog` realizes the family `ln_eps` (Yosida regularization of
//! the logarithm seen as a maximal monotone graph on `(0, inf)`) together
//! with `Ln_eps(r) = eps*r + ln_eps(r)`, its derivatives, resolvent and
//! inverse. `MollifiedBeta` realizes the smoothed truncation `beta_eps` of a
//! singular base nonlinearity.
//!
//! The mollification here is one-dimensional: the clamp
//! `r -> max(eps, min(r, 1/eps))` is applied first and the result is
//! convolved in `r` only, with a unit-mass bump kernel supported on
//! `(-delta_eps, delta_eps)`. A full space-time-value convolution (after
//! extending the coefficients by reflection) would serve the same purpose;
//! for the closed-form coefficient presets used here the 1-D variant
//! already satisfies every inequality the solver relies on (monotonicity,
//! `O(eps)` distance to the clamped function, the primitive's lower
//! bound), at a fraction of the cost.

use crate::coeff::{CoeffField, DomainBox};
use crate::quad::{composite_gauss, gauss_legendre};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MonotoneError {
    #[error("regularization parameter must lie in (0,1), got {0}")]
    EpsOutOfRange(f64),
    #[error("resolvent iteration cap exceeded for eps={eps}, r={r}, bracket=[{lo}, {hi}]")]
    ResolventCap { eps: f64, r: f64, lo: f64, hi: f64 },
    #[error("quadrature order must be at least 8, got {0}")]
    QuadratureOrder(usize),
    #[error("singular base coefficient must be nonnegative on the domain")]
    NegativeCoefficient,
}

/// Yosida-regularized logarithm with parameter `eps` in `(0,1)`.
#[derive(Debug, Clone)]
pub struct RegularizedLog {
    eps: f64,
    resolvent_tol: f64,
}

const RESOLVENT_MAX_ITER: usize = 200;

impl RegularizedLog {
    pub fn new(eps: f64) -> Result<Self, MonotoneError> {
        Self::with_tolerance(eps, 1e-12)
    }

    pub fn with_tolerance(eps: f64, resolvent_tol: f64) -> Result<Self, MonotoneError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(MonotoneError::EpsOutOfRange(eps));
        }
        assert!(resolvent_tol > 0.0, "resolvent tolerance must be positive");
        Ok(Self { eps, resolvent_tol })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Root `u` of `e^u + eps*u = r`; this is `ln_eps(r)` by the inverse
    /// formula, and the resolvent is `rho_eps(r) = e^u`.
    ///
    /// The map is smooth, strictly increasing and convex in `u`, with the
    /// analytic bracket `[min(0,(r-1)/eps), max(0, ln r, r/eps)]`; a
    /// bisection-safeguarded Newton iteration converges from any start.
    fn solve_log_resolvent(&self, r: f64) -> Result<f64, MonotoneError> {
        let eps = self.eps;
        // Bracket: h(u) = e^u + eps*u - r is increasing, h(lo) <= 0 <= h(hi).
        let mut lo = if r >= 1.0 { 0.0 } else { (r - 1.0) / eps };
        let mut hi = if r >= 1.0 { r.ln() } else { r / eps };
        debug_assert!(lo <= hi);
        let h = |u: f64| u.exp() + eps * u - r;
        let tol = self.resolvent_tol * 1.0f64.max(r.abs());
        // Start where the dominant term puts the root: e^u ~ r or eps*u ~ r.
        let mut u = if r > 0.0 { r.ln() } else { r / eps }.clamp(lo, hi);
        for it in 0..RESOLVENT_MAX_ITER {
            let hu = h(u);
            if hu.abs() <= tol {
                return Ok(u);
            }
            if hu > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            if hi - lo <= f64::EPSILON * (1.0 + u.abs()) {
                return Ok(0.5 * (lo + hi));
            }
            // Interleave bisections once Newton has had its chance, so the
            // bracket provably shrinks even in the exp-dominated creep regime.
            let force_bisect = it >= 24 && it % 2 == 1;
            let newton = u - hu / (u.exp() + eps);
            u = if !force_bisect && newton > lo && newton < hi {
                newton
            } else if !force_bisect && hu > 0.0 && r - eps * u > 0.0 {
                // log-space fixpoint e^u = r - eps*u jumps out of the creep
                let fix = (r - eps * u).ln();
                if fix > lo && fix < hi {
                    fix
                } else {
                    0.5 * (lo + hi)
                }
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(MonotoneError::ResolventCap {
            eps,
            r,
            lo: lo.exp(),
            hi: hi.exp(),
        })
    }

    /// The positive root `rho` of `rho + eps*ln(rho) = r`.
    ///
    /// For r below roughly `-700*eps` the root lies under the smallest
    /// positive f64 and is clamped; `ln_eps` stays accurate there because it
    /// is computed in log space.
    pub fn resolvent(&self, r: f64) -> Result<f64, MonotoneError> {
        Ok(self.solve_log_resolvent(r)?.exp().max(f64::MIN_POSITIVE))
    }

    pub fn ln_eps(&self, r: f64) -> Result<f64, MonotoneError> {
        self.solve_log_resolvent(r)
    }

    /// `Ln_eps(r) = eps*r + ln_eps(r)`.
    pub fn ln_eps_total(&self, r: f64) -> Result<f64, MonotoneError> {
        Ok(self.eps * r + self.ln_eps(r)?)
    }

    /// `ln_eps'(r) = 1 / (rho_eps(r) + eps)`.
    pub fn ln_eps_prime(&self, r: f64) -> Result<f64, MonotoneError> {
        Ok(1.0 / (self.resolvent(r)? + self.eps))
    }

    /// `Ln_eps'(r) = eps + ln_eps'(r)`, pinched between `eps` and `eps + 1/eps`.
    pub fn ln_eps_total_prime(&self, r: f64) -> Result<f64, MonotoneError> {
        Ok(self.eps + self.ln_eps_prime(r)?)
    }

    /// Inverse of `ln_eps`: `s -> e^s + eps*s`.
    pub fn ln_eps_inverse(&self, s: f64) -> f64 {
        s.exp() + self.eps * s
    }

    /// Primitive of the lifted map: `int_1^r Ln_eps(s) ds`, i.e.
    /// `eps (r^2 - 1)/2 + int_1^r ln_eps(s) ds`. Convex with its minimum at
    /// the root of `Ln_eps`, and bounded below uniformly in `eps` since
    /// `ln_eps(1) = 0`.
    pub fn ln_eps_total_primitive(&self, r: f64) -> Result<f64, MonotoneError> {
        let quadratic = 0.5 * self.eps * (r * r - 1.0);
        if r == 1.0 {
            return Ok(0.0);
        }
        let err = std::cell::RefCell::new(None);
        let log_part = crate::quad::adaptive_simpson(
            &|s: f64| match self.ln_eps(s) {
                Ok(v) => v,
                Err(e) => {
                    *err.borrow_mut() = Some(e);
                    0.0
                }
            },
            1.0_f64.min(r),
            1.0_f64.max(r),
            1e-12 * (1.0 + r.abs()),
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok(quadratic + if r >= 1.0 { log_part } else { -log_part })
    }
}

/// Window constants of the regularized logarithm on `[theta_low, theta_high]`:
/// `(min(0, ln theta_low), max(0, ln theta_high))`. Every `ln_eps` value on
/// the window lies between them, for every admissible `eps`.
pub fn log_window_bounds(theta_low: f64, theta_high: f64) -> (f64, f64) {
    (theta_low.ln().min(0.0), theta_high.ln().max(0.0))
}

/// Base source nonlinearity before regularization.
///
/// The singular kind is `beta(x,t,r) = R1(x,t) * (1 - 1/r^2)` with a
/// nonnegative coefficient; the zero kind is identically zero (sources that
/// are Lipschitz in the temperature carry no `beta` part).
#[derive(Debug, Clone)]
pub enum BaseBeta {
    Singular { r1: CoeffField },
    Zero,
}

impl BaseBeta {
    /// Value at `r > 0` (any `r` for the zero kind).
    pub fn eval(&self, x: f64, t: f64, r: f64) -> f64 {
        match self {
            BaseBeta::Singular { r1 } => r1.eval(x, t) * (1.0 - 1.0 / (r * r)),
            BaseBeta::Zero => 0.0,
        }
    }

    pub fn eval_dr(&self, x: f64, t: f64, r: f64) -> f64 {
        match self {
            BaseBeta::Singular { r1 } => r1.eval(x, t) * 2.0 / (r * r * r),
            BaseBeta::Zero => 0.0,
        }
    }

    /// Pointwise majorant of `d/dr beta` over the domain: `2 sup R1 / r^3`.
    pub fn derivative_majorant(&self, dom: &DomainBox, r: f64) -> f64 {
        match self {
            BaseBeta::Singular { r1 } => 2.0 * r1.range(dom).1 / (r * r * r),
            BaseBeta::Zero => 0.0,
        }
    }

    /// Constant `m` with `|grad_x beta| + |dt beta| <= m * R1 * |1 - 1/r^2|`,
    /// i.e. the coefficient's relative-derivative bound.
    pub fn coefficient_growth_constant(&self, dom: &DomainBox) -> Option<f64> {
        match self {
            BaseBeta::Singular { r1 } => r1.relative_derivative_bound(dom),
            BaseBeta::Zero => Some(0.0),
        }
    }
}

/// Smoothed truncation `beta_eps` of a `BaseBeta`, with its derived
/// constants: the Lipschitz bound `L_eps` of the base on the clamp window,
/// the kernel half-width `delta_eps = eps / (1 + L_eps)`, and the measured
/// distance constant `M` with `|beta_eps - beta(clamp(.))| <= M * eps`.
#[derive(Debug, Clone)]
pub struct MollifiedBeta {
    base: BaseBeta,
    dom: DomainBox,
    eps: f64,
    l_eps: f64,
    delta_eps: f64,
    quadrature_order: usize,
    panels: usize,
    kernel_norm: f64,
    reported_m: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Precomputed `(s, w * bump(s))` for the kink-free layout on `[-1, 1]`,
    /// so the hot path avoids re-evaluating the kernel.
    flat_rule: Vec<(f64, f64)>,
}

/// Panels per smooth segment; 8 panels of a 16-point rule integrate the
/// bump kernel to ~7e-11, which keeps the Gauss path within the 1e-9
/// agreement band against the adaptive oracle.
const KERNEL_PANELS: usize = 8;

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

impl MollifiedBeta {
    pub fn new(
        base: BaseBeta,
        dom: DomainBox,
        eps: f64,
        quadrature_order: usize,
    ) -> Result<Self, MonotoneError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(MonotoneError::EpsOutOfRange(eps));
        }
        if quadrature_order < 8 {
            return Err(MonotoneError::QuadratureOrder(quadrature_order));
        }
        if let BaseBeta::Singular { r1 } = &base {
            if !r1.nonnegative_on(&dom) {
                return Err(MonotoneError::NegativeCoefficient);
            }
        }
        let l_eps = match &base {
            BaseBeta::Singular { r1 } => {
                let sup_r1 = r1.range(&dom).1;
                2.0 * sup_r1 / (eps * eps * eps) + r1.lipschitz(&dom) * (1.0 - eps * eps)
            }
            BaseBeta::Zero => 0.0,
        };
        let delta_eps = eps / (1.0 + l_eps);
        let (nodes, weights) = gauss_legendre(quadrature_order);
        let kernel_norm = composite_gauss(bump, -1.0, 1.0, quadrature_order, KERNEL_PANELS);
        let mut flat_rule = Vec::with_capacity(quadrature_order * KERNEL_PANELS);
        let width = 2.0 / KERNEL_PANELS as f64;
        for p in 0..KERNEL_PANELS {
            let mid = -1.0 + (p as f64 + 0.5) * width;
            let half = 0.5 * width;
            for (x, w) in nodes.iter().zip(weights.iter()) {
                let s = mid + half * x;
                flat_rule.push((s, w * half * bump(s)));
            }
        }
        let mut mb = Self {
            base,
            dom,
            eps,
            l_eps,
            delta_eps,
            quadrature_order,
            panels: KERNEL_PANELS,
            kernel_norm,
            reported_m: 0.0,
            nodes,
            weights,
            flat_rule,
        };
        mb.reported_m = mb.measure_distance_constant();
        Ok(mb)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta_eps(&self) -> f64 {
        self.delta_eps
    }

    pub fn l_eps(&self) -> f64 {
        self.l_eps
    }

    pub fn base(&self) -> &BaseBeta {
        &self.base
    }

    pub fn domain(&self) -> &DomainBox {
        &self.dom
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    /// Measured constant of the `O(eps)` distance bound.
    pub fn reported_m(&self) -> f64 {
        self.reported_m
    }

    pub fn clamp(&self, r: f64) -> f64 {
        r.clamp(self.eps, 1.0 / self.eps)
    }

    /// The clamped base value `beta(x, t, clamp(r))`.
    pub fn beta_clamped(&self, x: f64, t: f64, r: f64) -> f64 {
        self.base.eval(x, t, self.clamp(r))
    }

    /// Interior s-locations where the integrand `beta(clamp(r - delta*s))`
    /// loses smoothness, plus the endpoints.
    fn split_points(&self, r: f64) -> Vec<f64> {
        let mut pts = vec![-1.0, 1.0];
        if matches!(self.base, BaseBeta::Zero) {
            return pts;
        }
        for kink in [self.eps, 1.0 / self.eps] {
            let s = (r - kink) / self.delta_eps;
            if s > -1.0 && s < 1.0 {
                pts.push(s);
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts
    }

    fn kernel_integral<F: Fn(f64) -> f64>(&self, splits: &[f64], f: F) -> f64 {
        let mut total = 0.0;
        for seg in splits.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b - a <= f64::EPSILON {
                continue;
            }
            let width = (b - a) / self.panels as f64;
            for p in 0..self.panels {
                let lo = a + p as f64 * width;
                let mid = lo + 0.5 * width;
                let half = 0.5 * width;
                let mut acc = 0.0;
                for (xq, wq) in self.nodes.iter().zip(self.weights.iter()) {
                    let s = mid + half * xq;
                    acc += wq * f(s) * bump(s);
                }
                total += acc * half;
            }
        }
        total / self.kernel_norm
    }

    fn kernel_integral_flat<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut total = 0.0;
        for &(s, w) in &self.flat_rule {
            total += w * f(s);
        }
        total / self.kernel_norm
    }

    /// `beta_eps(x, t, r)`: the r-mollified clamped base value.
    pub fn beta_eps(&self, x: f64, t: f64, r: f64) -> f64 {
        debug_assert!(self.dom.contains(x, t), "({x},{t}) outside the domain");
        match &self.base {
            BaseBeta::Zero => 0.0,
            base => {
                let splits = self.split_points(r);
                if splits.len() == 2 {
                    self.kernel_integral_flat(|s| {
                        base.eval(x, t, self.clamp(r - self.delta_eps * s))
                    })
                } else {
                    self.kernel_integral(&splits, |s| {
                        base.eval(x, t, self.clamp(r - self.delta_eps * s))
                    })
                }
            }
        }
    }

    /// `d/dr beta_eps(x, t, r)`, obtained by differentiating the quadrature:
    /// the clamped base has derivative zero outside the clamp window.
    pub fn beta_eps_prime(&self, x: f64, t: f64, r: f64) -> f64 {
        match &self.base {
            BaseBeta::Zero => 0.0,
            base => {
                let integrand = |s: f64| {
                    let v = r - self.delta_eps * s;
                    if v <= self.eps || v >= 1.0 / self.eps {
                        0.0
                    } else {
                        base.eval_dr(x, t, v)
                    }
                };
                let splits = self.split_points(r);
                if splits.len() == 2 {
                    self.kernel_integral_flat(integrand)
                } else {
                    self.kernel_integral(&splits, integrand)
                }
            }
        }
    }

    /// Antiderivative of the clamped base with base point 1, divided by the
    /// coefficient: closed form used by the primitive.
    fn clamped_antiderivative_unit(&self, w: f64) -> f64 {
        // q(v) = 1 - 1/v^2 on [eps, 1/eps], constant outside; P(w) = int_1^w q(clamp(v)) dv
        let eps = self.eps;
        let p_in = |v: f64| v + 1.0 / v - 2.0;
        if w < eps {
            p_in(eps) + (1.0 - 1.0 / (eps * eps)) * (w - eps)
        } else if w > 1.0 / eps {
            p_in(1.0 / eps) + (1.0 - eps * eps) * (w - 1.0 / eps)
        } else {
            p_in(w)
        }
    }

    /// `int_1^r beta_eps(x, t, s) ds`, evaluated by exchanging the order of
    /// integration so that only the kernel integral is numerical.
    pub fn beta_eps_primitive(&self, x: f64, t: f64, r: f64) -> f64 {
        match &self.base {
            BaseBeta::Zero => 0.0,
            BaseBeta::Singular { r1 } => {
                let coeff = r1.eval(x, t);
                let delta = self.delta_eps;
                // kinks of P(r - delta*s) and P(1 - delta*s)
                let mut pts = vec![-1.0, 1.0];
                for kink in [self.eps, 1.0 / self.eps] {
                    for anchor in [r, 1.0] {
                        let s = (anchor - kink) / delta;
                        if s > -1.0 && s < 1.0 {
                            pts.push(s);
                        }
                    }
                }
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                coeff
                    * self.kernel_integral(&pts, |s| {
                        self.clamped_antiderivative_unit(r - delta * s)
                            - self.clamped_antiderivative_unit(1.0 - delta * s)
                    })
            }
        }
    }

    /// Empirical distance constant: `sup |beta_eps - beta(clamp(.))| / eps`
    /// sampled densely around the clamp corners and the zero of the base,
    /// where the distance is largest, at the coefficient's maximizing corner.
    fn measure_distance_constant(&self) -> f64 {
        if matches!(self.base, BaseBeta::Zero) {
            return 0.0;
        }
        let dom = self.dom;
        let probes = [
            (0.0, 0.0),
            (dom.length, 0.0),
            (0.0, dom.horizon),
            (dom.length, dom.horizon),
            (0.5 * dom.length, 0.5 * dom.horizon),
        ];
        let mut worst: f64 = 0.0;
        let delta = self.delta_eps;
        for center in [self.eps, 1.0, 1.0 / self.eps] {
            for k in 0..=60 {
                let r = center + delta * (-3.0 + 0.1 * k as f64);
                for (x, t) in probes {
                    let d = (self.beta_eps(x, t, r) - self.beta_clamped(x, t, r)).abs();
                    worst = worst.max(d);
                }
            }
        }
        // tiny headroom so the sampled sup works as an inequality constant
        worst * 1.000001 / self.eps
    }
}

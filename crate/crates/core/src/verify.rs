//! Property suites runnable from the command line: each check returns a
//! name, a pass flag and the measured margin, so failures are diagnosable
//! from the printed matrix alone. Sampling is seeded and deterministic.

use crate::coeff::{CoeffField, DomainBox};
use crate::diagnostics::MoserWeights;
use crate::grid::{self, Field, Grid1D};
use crate::model::{BoundaryValue, InitialField, Potentials, ProblemSpec, SourceKind, SourceSpec};
use crate::monotone::{BaseBeta, MollifiedBeta, RegularizedLog};
use crate::oracle;
use crate::stepper::{run, SchemeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed slack; positive means the inequality held with room.
    pub margin: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(suite: &'static str, name: &'static str, passed: bool, margin: f64, detail: String) -> Self {
        Self {
            suite,
            name,
            passed,
            margin,
            detail,
        }
    }
}

/// Regularized-logarithm property suite.
pub fn yosida_suite() -> Vec<CheckResult> {
    const SUITE: &str = "yosida";
    let mut out = Vec::new();

    // round trip through the inverse formula
    {
        let mut worst: f64 = 0.0;
        for eps in [0.5, 0.1, 0.01, 1e-3] {
            let l = RegularizedLog::new(eps).unwrap();
            for k in 0..=1000 {
                let s = -10.0 + 0.02 * k as f64;
                let back = l.ln_eps(l.ln_eps_inverse(s)).unwrap();
                worst = worst.max((back - s).abs());
            }
        }
        out.push(CheckResult::new(
            SUITE,
            "inverse_round_trip",
            worst <= 1e-9,
            1e-9 - worst,
            format!("max |ln_eps(e^s + eps s) - s| = {worst:.3e} over 4x1001 samples"),
        ));
    }

    // sandwich between ln r/(1+eps) and ln r for r >= 1
    {
        let mut worst = f64::INFINITY;
        for eps in [0.5, 0.1, 0.01, 1e-3] {
            let l = RegularizedLog::new(eps).unwrap();
            for k in 0..=500 {
                let r = 10f64.powf(3.0 * k as f64 / 500.0); // log-uniform on [1, 1e3]
                let v = l.ln_eps(r).unwrap();
                worst = worst.min(v - r.ln() / (1.0 + eps));
                worst = worst.min(r.ln() + 1e-12 - v);
            }
        }
        out.push(CheckResult::new(
            SUITE,
            "log_sandwich",
            worst >= 0.0,
            worst,
            format!("min slack of ln r/(1+eps) <= ln_eps r <= ln r: {worst:.3e}"),
        ));
    }

    // derivative bounds of the lifted map
    {
        let mut worst = f64::INFINITY;
        for eps in [0.5, 0.1, 0.01, 1e-3] {
            let l = RegularizedLog::new(eps).unwrap();
            for k in 0..=400 {
                let r = -20.0 + 0.2 * k as f64;
                let d = l.ln_eps_total_prime(r).unwrap();
                worst = worst.min(d - eps);
                worst = worst.min(eps + 1.0 / eps - d);
                if r <= 1.0 {
                    worst = worst.min(d - 1.0 + 1e-13);
                }
                if r >= 1.0 {
                    worst = worst.min(d - 0.5 / r + 1e-13);
                }
            }
        }
        out.push(CheckResult::new(
            SUITE,
            "derivative_bounds",
            worst >= 0.0,
            worst,
            format!("min slack across the four derivative bounds: {worst:.3e}"),
        ));
    }

    // window bounds on [theta_low, theta_high]
    {
        let mut worst = f64::INFINITY;
        for (tl, th) in [(0.5f64, 2.0f64), (0.25, 4.0), (1.0, 1.0)] {
            let l_low = tl.ln().min(0.0);
            let l_high = th.ln().max(0.0);
            for eps in [0.5, 0.1, 1e-2, 1e-3] {
                let l = RegularizedLog::new(eps).unwrap();
                for k in 0..=200 {
                    let r = tl + (th - tl) * k as f64 / 200.0;
                    let v = l.ln_eps(r).unwrap();
                    worst = worst.min(v - l_low + 1e-13);
                    worst = worst.min(l_high - v + 1e-13);
                    // derivative window applies for eps <= 1e-2
                    if eps <= 1e-2 {
                        let d = l.ln_eps_prime(r).unwrap();
                        worst = worst.min(d - 0.5 / th + 1e-13);
                        worst = worst.min(2.0 / tl - d + 1e-13);
                    }
                }
            }
        }
        out.push(CheckResult::new(
            SUITE,
            "window_bounds",
            worst >= 0.0,
            worst,
            format!("min slack of the value/derivative window bounds: {worst:.3e}"),
        ));
    }

    out
}

fn sample_beta_configs() -> Vec<(MollifiedBeta, DomainBox)> {
    let dom = DomainBox::new(1.0, 1.0);
    let mut out = Vec::new();
    for eps in [0.1, 0.01, 1e-3] {
        for r1 in [
            CoeffField::Constant(1.0),
            CoeffField::AffineX { a: 1.0, b: 0.5 },
            CoeffField::AffineXT {
                a: 1.0,
                b: 0.5,
                c: 1.0,
                d: 0.5,
            },
        ] {
            out.push((
                MollifiedBeta::new(BaseBeta::Singular { r1 }, dom, eps, 16).unwrap(),
                dom,
            ));
        }
    }
    out
}

/// Mollified-source property suite.
pub fn beta_suite() -> Vec<CheckResult> {
    const SUITE: &str = "beta";
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_beaf);
    let mut out = Vec::new();
    let configs = sample_beta_configs();

    // monotonicity on random ordered pairs
    {
        let mut worst = f64::INFINITY;
        for (mb, dom) in &configs {
            for _ in 0..1200 {
                let x = rng.gen_range(0.0..dom.length);
                let t = rng.gen_range(0.0..dom.horizon);
                let lo = -2.0;
                let hi = 2.0 / mb.eps();
                let mut a = rng.gen_range(lo..hi);
                let mut b = rng.gen_range(lo..hi);
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                let slack = mb.beta_eps(x, t, b) - mb.beta_eps(x, t, a) + 1e-12;
                worst = worst.min(slack);
            }
        }
        out.push(CheckResult::new(
            SUITE,
            "monotone_in_r",
            worst >= 0.0,
            worst,
            format!("min of beta(b) - beta(a) + 1e-12 over ordered pairs: {worst:.3e}"),
        ));
    }

    // distance to the clamped base within the reported constant
    {
        let mut worst = f64::INFINITY;
        for (mb, dom) in &configs {
            let bound = mb.reported_m() * mb.eps();
            for _ in 0..800 {
                let x = rng.gen_range(0.0..dom.length);
                let t = rng.gen_range(0.0..dom.horizon);
                let r = rng.gen_range(-1.0..2.0 / mb.eps());
                let d = (mb.beta_eps(x, t, r) - mb.beta_clamped(x, t, r)).abs();
                worst = worst.min(bound - d);
            }
        }
        out.push(CheckResult::new(
            SUITE,
            "clamp_distance",
            worst >= 0.0,
            worst,
            format!("min slack of |beta_eps - beta(clamp)| <= M eps: {worst:.3e}"),
        ));
    }

    // primitive lower bound
    {
        let mut worst = f64::INFINITY;
        for (mb, dom) in &configs {
            let m = mb.reported_m();
            for _ in 0..300 {
                let x = rng.gen_range(0.0..dom.length);
                let t = rng.gen_range(0.0..dom.horizon);
                let r = rng.gen_range(-1.0..3.0 / mb.eps());
                let v = mb.beta_eps_primitive(x, t, r);
                let bound = -m * mb.eps() * (r - 1.0).abs();
                worst = worst.min(v - bound + 1e-12);
            }
        }
        out.push(CheckResult::new(
            SUITE,
            "primitive_lower_bound",
            worst >= 0.0,
            worst,
            format!("min slack of primitive >= -M eps |r-1|: {worst:.3e}"),
        ));
    }

    // production quadrature against the adaptive oracle
    {
        let mut worst = f64::INFINITY;
        let mut count = 0;
        'outer: for (mb, dom) in &configs {
            loop {
                let x = rng.gen_range(0.0..dom.length);
                let t = rng.gen_range(0.0..dom.horizon);
                // log-uniform across the clamp window plus overshoot
                let u = rng.gen_range((mb.eps() / 2.0).ln()..(2.0 / mb.eps()).ln());
                let r = u.exp();
                let fast = mb.beta_eps(x, t, r);
                let slow = oracle::mollifier_quadrature_oracle(mb, x, t, r);
                let scale = 1.0f64.max(slow.abs());
                worst = worst.min(1e-9 - (fast - slow).abs() / scale);
                count += 1;
                if count % 112 == 0 {
                    continue 'outer;
                }
                if count >= 1000 {
                    break 'outer;
                }
            }
        }
        out.push(CheckResult::new(
            SUITE,
            "gauss_vs_adaptive",
            worst >= 0.0,
            worst,
            format!("min slack of |gauss - simpson| <= 1e-9 (relative) at {count} points"),
        ));
    }

    // derivative growth of the coefficient presets carries to beta_eps
    {
        let mut worst = f64::INFINITY;
        for (mb, dom) in &configs {
            let c = match mb.base() {
                BaseBeta::Singular { r1 } => r1.relative_derivative_bound(dom).unwrap(),
                BaseBeta::Zero => 0.0,
            };
            if c == 0.0 {
                continue; // constant coefficient: derivatives vanish identically
            }
            let dx = 1e-6 * dom.length;
            let dt = 1e-6 * dom.horizon;
            for _ in 0..200 {
                let x = rng.gen_range(2.0 * dx..dom.length - 2.0 * dx);
                let t = rng.gen_range(2.0 * dt..dom.horizon - 2.0 * dt);
                let r = rng.gen_range(0.5 * mb.eps()..2.0 / mb.eps());
                let v = mb.beta_eps(x, t, r).abs();
                let gx = (mb.beta_eps(x + dx, t, r) - mb.beta_eps(x - dx, t, r)) / (2.0 * dx);
                let gt = (mb.beta_eps(x, t + dt, r) - mb.beta_eps(x, t - dt, r)) / (2.0 * dt);
                // 10% slack on the preset constant
                let bound = 1.1 * c * (1.0 + v);
                worst = worst.min(bound - (gx.abs() + gt.abs()));
            }
        }
        out.push(CheckResult::new(
            SUITE,
            "derivative_growth",
            worst >= 0.0,
            worst,
            format!("min slack of |d_x beta| + |d_t beta| <= 1.1 c (1 + |beta|): {worst:.3e}"),
        ));
    }

    out
}

/// Discretization toolbox suite.
pub fn grid_suite() -> Vec<CheckResult> {
    const SUITE: &str = "grid";
    let mut out = Vec::new();
    let g = Grid1D::new(63, 1.0).unwrap();

    {
        let f = Field::from_fn(g, |x| (std::f64::consts::PI * x).sin());
        let w = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).sin());
        let lap = grid::laplacian_dirichlet(&f, 0.0, 0.0);
        let lhs: f64 = -g.h() * lap.iter().enumerate().map(|(i, v)| v * w[i + 1]).sum::<f64>();
        let rhs: f64 = (0..=g.n())
            .map(|i| (f[i + 1] - f[i]) * (w[i + 1] - w[i]))
            .sum::<f64>()
            / g.h();
        let err = (lhs - rhs).abs();
        out.push(CheckResult::new(
            SUITE,
            "summation_by_parts",
            err <= 1e-12,
            1e-12 - err,
            format!("|<-lap f, g> - <grad f, grad g>| = {err:.3e}"),
        ));
    }

    {
        let f = Field::from_fn(g, |x| (3.0 * x).exp() * (5.0 * x).sin());
        let defect = grid::integral(&grid::laplacian_neumann(&f)).abs();
        out.push(CheckResult::new(
            SUITE,
            "neumann_mass",
            defect <= 1e-9,
            1e-9 - defect,
            format!("mass defect of the reflected stencil: {defect:.3e}"),
        ));
    }

    {
        let lam = grid::dirichlet_lambda_min(g);
        let mut worst = f64::INFINITY;
        for freq in [1.0, 3.0, 7.0] {
            let v: Vec<f64> = (1..=g.n()).map(|i| (freq * g.x(i)).sin() + 0.1).collect();
            let l2 = (v.iter().map(|x| x * x).sum::<f64>() * g.h()).sqrt();
            let slack = l2 / lam.sqrt() + 1e-12 - grid::dual_norm(&v, g);
            worst = worst.min(slack);
        }
        out.push(CheckResult::new(
            SUITE,
            "dual_norm_poincare",
            worst >= 0.0,
            worst,
            format!("min slack of dual norm <= l2 / sqrt(lambda_min): {worst:.3e}"),
        ));
    }

    {
        let mut errs = Vec::new();
        for n in [24usize, 49, 99] {
            let gg = Grid1D::new(n, 1.0).unwrap();
            let f = Field::from_fn(gg, |x| (2.0 * std::f64::consts::PI * x).sin().exp());
            let exact = |x: f64| {
                let p = 2.0 * std::f64::consts::PI;
                let s = (p * x).sin();
                let c = (p * x).cos();
                (p * p * c * c - p * p * s) * s.exp()
            };
            let lap = grid::laplacian_dirichlet(&f, f[0], f[gg.n() + 1]);
            let mut e: f64 = 0.0;
            for (i, v) in lap.iter().enumerate() {
                e = e.max((v - exact(gg.x(i + 1))).abs());
            }
            errs.push(e);
        }
        let mut min_order = f64::INFINITY;
        for w in errs.windows(2) {
            min_order = min_order.min((w[0] / w[1]).log2());
        }
        out.push(CheckResult::new(
            SUITE,
            "laplacian_order",
            min_order >= 1.9,
            min_order - 1.9,
            format!("observed order {min_order:.3} across h, h/2, h/4"),
        ));
    }

    out
}

/// Coercive-weight suite.
pub fn moser_suite() -> Vec<CheckResult> {
    const SUITE: &str = "moser";
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0a5f);
    let mut out = Vec::new();

    // closed form against brute quadrature
    {
        let mut worst = f64::INFINITY;
        for _ in 0..1000 {
            let th = rng.gen_range(1.0..4.0);
            let w = MoserWeights::new(th);
            let n = rng.gen_range(1u32..12);
            let r = th * rng.gen_range(-0.5f64..(n as f64 + 1.0)).exp();
            let got = w.phi(n, r);
            let scale = got.abs().max(1.0);
            let brute = crate::quad::adaptive_simpson(
                &|s: f64| {
                    let wv = (s.ln() - w.u_star).max(0.0).min(n as f64);
                    (2.0 * wv).exp() - 1.0
                },
                th,
                r.max(th),
                1e-12 * scale,
            );
            worst = worst.min(1e-9 - ((got - brute) / scale).abs());
        }
        out.push(CheckResult::new(
            SUITE,
            "phi_closed_form_vs_quadrature",
            worst >= 0.0,
            worst,
            format!("min slack of relative agreement <= 1e-9: {worst:.3e}"),
        ));
    }

    // phi coercivity with alpha* = th*/6
    {
        let mut worst = f64::INFINITY;
        for _ in 0..10_000 {
            let th = rng.gen_range(1.0..4.0);
            let w = MoserWeights::new(th);
            let n = rng.gen_range(1u32..12);
            let cstar = w.phi_cstar(n);
            let r = th * rng.gen_range(-1.0f64..(n as f64 + 2.0)).exp();
            let lhs = w.phi(n, r);
            let wv = (r.ln() - w.u_star).max(0.0).min(n as f64);
            let rhs = w.phi_alpha_star() * (3.0 * wv).exp() - cstar;
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            worst = worst.min((lhs - rhs) / scale + 1e-9);
        }
        out.push(CheckResult::new(
            SUITE,
            "phi_coercivity",
            worst >= 0.0,
            worst,
            format!("min relative slack of phi >= alpha* e^(3w) - C*: {worst:.3e}"),
        ));
    }

    // psi lower bound across p in [1, 8]
    {
        let mut worst = f64::INFINITY;
        for _ in 0..10_000 {
            let th = rng.gen_range(1.0..4.0);
            let w = MoserWeights::new(th);
            let n = rng.gen_range(1u32..12);
            let p = rng.gen_range(1.0..8.0);
            let r = th * rng.gen_range(-1.0f64..(n as f64 + 2.0)).exp();
            let lhs = w.psi(n, p, r);
            let rhs = w.psi_lower_bound(n, p, r);
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            worst = worst.min((lhs - rhs) / scale + 1e-9);
        }
        out.push(CheckResult::new(
            SUITE,
            "psi_lower_bound",
            worst >= 0.0,
            worst,
            format!("min relative slack of psi >= w^(2p)/(2p): {worst:.3e}"),
        ));
    }

    out
}

/// Steady-state preservation suite.
pub fn steady_suite() -> Vec<CheckResult> {
    const SUITE: &str = "steady";
    let mut out = Vec::new();
    let g = Grid1D::new(32, 1.0).unwrap();
    let cfg = SchemeConfig::new(1e-2, 1e-3);

    let mut push_case = |name: &'static str,
                         potentials: Potentials,
                         chi0: f64,
                         window: (f64, f64),
                         source: SourceSpec,
                         slack: f64| {
        let spec = ProblemSpec {
            length: 1.0,
            horizon: 1.0,
            potentials,
            source,
            theta_star_low: 0.5,
            theta_star_high: 2.0,
            chi_star_low: window.0,
            chi_star_high: window.1,
            bc_left: BoundaryValue::Constant(1.0),
            bc_right: BoundaryValue::Constant(1.0),
            theta0: InitialField::Constant(1.0),
            chi0: InitialField::Constant(chi0),
        };
        match run(&spec, g, &cfg, 10) {
            Ok(traj) => {
                let fin = traj.final_state();
                let mut drift: f64 = 0.0;
                for &v in fin.theta.values() {
                    drift = drift.max((v - 1.0).abs());
                }
                for &v in fin.chi.values() {
                    drift = drift.max((v - chi0).abs());
                }
                out.push(CheckResult::new(
                    SUITE,
                    name,
                    drift <= slack,
                    slack - drift,
                    format!("max drift from the steady pair over T=1: {drift:.3e} (allowed {slack:.3e})"),
                ));
            }
            Err(e) => out.push(CheckResult::new(SUITE, name, false, f64::NEG_INFINITY, format!("{e}"))),
        }
    };

    // second-order pair (1, 0) with no source: exact fixed point
    push_case(
        "second_order_origin",
        Potentials::SecondOrder,
        0.0,
        (-1.0, 1.0),
        SourceSpec::none(),
        1e-8,
    );

    // first-order pairs (1, 0) and (1, 1) with a singular source whose
    // Lipschitz part cancels: drift bounded by the mollification slack
    let singular_cancel = SourceSpec {
        kind: SourceKind::Singular {
            r1: CoeffField::Constant(0.5),
            r2: CoeffField::Constant(-0.5),
        },
        lipschitz_r: None,
    };
    let mb = MollifiedBeta::new(
        singular_cancel.base_beta(),
        DomainBox::new(1.0, 1.0),
        cfg.eps,
        16,
    )
    .unwrap();
    let slack = 2.0 * mb.reported_m() * cfg.eps * 1.0; // 2 M eps T
    push_case(
        "first_order_origin",
        Potentials::FirstOrder,
        0.0,
        (0.0, 1.0),
        singular_cancel.clone(),
        slack.max(1e-8),
    );
    push_case(
        "first_order_pure_phase",
        Potentials::FirstOrder,
        1.0,
        (0.0, 1.0),
        singular_cancel,
        slack.max(1e-8),
    );

    out
}

/// Every suite, in presentation order.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.extend(yosida_suite());
    out.extend(beta_suite());
    out.extend(grid_suite());
    out.extend(moser_suite());
    out.extend(steady_suite());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yosida_suite_is_green() {
        for c in yosida_suite() {
            assert!(c.passed, "{}.{}: {}", c.suite, c.name, c.detail);
        }
    }

    #[test]
    fn beta_suite_is_green() {
        for c in beta_suite() {
            assert!(c.passed, "{}.{}: {}", c.suite, c.name, c.detail);
        }
    }

    #[test]
    fn grid_suite_is_green() {
        for c in grid_suite() {
            assert!(c.passed, "{}.{}: {}", c.suite, c.name, c.detail);
        }
    }

    #[test]
    fn moser_suite_is_green() {
        for c in moser_suite() {
            assert!(c.passed, "{}.{}: {}", c.suite, c.name, c.detail);
        }
    }

    #[test]
    fn steady_suite_is_green() {
        for c in steady_suite() {
            assert!(c.passed, "{}.{}: {}", c.suite, c.name, c.detail);
        }
    }
}

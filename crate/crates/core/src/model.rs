//! Problem data: potentials, entropy-source decomposition, bounds and
//! boundary/initial data, with the structural hypotheses enforced as a
//! validation report.

use crate::coeff::{CoeffField, DomainBox};
use crate::monotone::BaseBeta;
use thiserror::Error;

/// Phase potentials `F` and `G`. The two named presets are quartics; the
/// custom variant takes coefficient lists in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub enum Potentials {
    /// `F = x^4/4 - x^3/3`, `G = x^4/4 - 2x^3/3 + x^2/2`
    FirstOrder,
    /// `F = x^4/4 - x^2/2`, `G = x^2/2`
    SecondOrder,
    Custom { f: Vec<f64>, g: Vec<f64> },
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn horner_derivative(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * x + k as f64 * c;
    }
    acc
}

fn horner_second(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (k, c) in coeffs.iter().enumerate().skip(2).rev() {
        acc = acc * x + (k * (k - 1)) as f64 * c;
    }
    acc
}

const FIRST_ORDER_F: [f64; 5] = [0.0, 0.0, 0.0, -1.0 / 3.0, 0.25];
const FIRST_ORDER_G: [f64; 5] = [0.0, 0.0, 0.5, -2.0 / 3.0, 0.25];
const SECOND_ORDER_F: [f64; 5] = [0.0, 0.0, -0.5, 0.0, 0.25];
const SECOND_ORDER_G: [f64; 3] = [0.0, 0.0, 0.5];

impl Potentials {
    fn f_coeffs(&self) -> &[f64] {
        match self {
            Potentials::FirstOrder => &FIRST_ORDER_F,
            Potentials::SecondOrder => &SECOND_ORDER_F,
            Potentials::Custom { f, .. } => f,
        }
    }

    fn g_coeffs(&self) -> &[f64] {
        match self {
            Potentials::FirstOrder => &FIRST_ORDER_G,
            Potentials::SecondOrder => &SECOND_ORDER_G,
            Potentials::Custom { g, .. } => g,
        }
    }

    pub fn eval_f(&self, r: f64) -> f64 {
        horner(self.f_coeffs(), r)
    }

    pub fn eval_f_prime(&self, r: f64) -> f64 {
        horner_derivative(self.f_coeffs(), r)
    }

    pub fn eval_f_second(&self, r: f64) -> f64 {
        horner_second(self.f_coeffs(), r)
    }

    pub fn eval_g(&self, r: f64) -> f64 {
        horner(self.g_coeffs(), r)
    }

    pub fn eval_g_prime(&self, r: f64) -> f64 {
        horner_derivative(self.g_coeffs(), r)
    }

    pub fn eval_g_second(&self, r: f64) -> f64 {
        horner_second(self.g_coeffs(), r)
    }
}

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("singular source evaluated at nonpositive temperature r={0}; only the regularized form is defined there")]
    NonpositiveTemperature(f64),
}

/// Entropy source `R = pi - beta` in one of the three preset decompositions.
#[derive(Debug, Clone)]
pub enum SourceKind {
    /// `R = R1/r^2 + R2`, split as `beta = R1 (1 - 1/r^2)`, `pi = R1 + R2`.
    Singular { r1: CoeffField, r2: CoeffField },
    /// `R = R3 r - R4`, split as `beta = 0`, `pi = R`.
    Linear { r3: CoeffField, r4: CoeffField },
    None,
}

#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Optional uniform Lipschitz constant of `r -> R(x,t,r)`; admissible
    /// only for the linear kind.
    pub lipschitz_r: Option<f64>,
}

impl SourceSpec {
    pub fn none() -> Self {
        Self {
            kind: SourceKind::None,
            lipschitz_r: None,
        }
    }

    pub fn eval_pi(&self, x: f64, t: f64, r: f64) -> f64 {
        match &self.kind {
            SourceKind::Singular { r1, r2 } => r1.eval(x, t) + r2.eval(x, t),
            SourceKind::Linear { r3, r4 } => r3.eval(x, t) * r - r4.eval(x, t),
            SourceKind::None => 0.0,
        }
    }

    /// `d/dr pi(x,t,r)`; nonzero only for the linear kind.
    pub fn pi_prime(&self, x: f64, t: f64) -> f64 {
        match &self.kind {
            SourceKind::Linear { r3, .. } => r3.eval(x, t),
            _ => 0.0,
        }
    }

    pub fn eval_beta_base(&self, x: f64, t: f64, r: f64) -> Result<f64, SourceError> {
        match &self.kind {
            SourceKind::Singular { r1, .. } => {
                if r <= 0.0 {
                    return Err(SourceError::NonpositiveTemperature(r));
                }
                Ok(r1.eval(x, t) * (1.0 - 1.0 / (r * r)))
            }
            _ => Ok(0.0),
        }
    }

    pub fn eval_r(&self, x: f64, t: f64, r: f64) -> Result<f64, SourceError> {
        match &self.kind {
            SourceKind::Singular { r1, r2 } => {
                if r <= 0.0 {
                    return Err(SourceError::NonpositiveTemperature(r));
                }
                Ok(r1.eval(x, t) / (r * r) + r2.eval(x, t))
            }
            SourceKind::Linear { r3, r4 } => Ok(r3.eval(x, t) * r - r4.eval(x, t)),
            SourceKind::None => Ok(0.0),
        }
    }

    /// Growth constant `lambda` in `|pi| <= lambda |r| + pi0`.
    pub fn lambda_growth(&self, dom: &DomainBox) -> f64 {
        match &self.kind {
            SourceKind::Linear { r3, .. } => r3.sup_abs(dom),
            _ => 0.0,
        }
    }

    /// Bound for the offset `pi0` in the growth estimate.
    pub fn pi0_sup(&self, dom: &DomainBox) -> f64 {
        match &self.kind {
            SourceKind::Singular { r1, r2 } => {
                // |pi| = |R1 + R2|, r-independent
                let corners = [
                    (0.0, 0.0),
                    (dom.length, 0.0),
                    (0.0, dom.horizon),
                    (dom.length, dom.horizon),
                ];
                corners
                    .iter()
                    .map(|&(x, t)| (r1.eval(x, t) + r2.eval(x, t)).abs())
                    .fold(0.0, f64::max)
            }
            SourceKind::Linear { r4, .. } => r4.sup_abs(dom),
            SourceKind::None => 0.0,
        }
    }

    /// Effective uniform Lipschitz constant of `R` in `r`, when one exists.
    pub fn effective_lipschitz(&self, dom: &DomainBox) -> Option<f64> {
        match &self.kind {
            SourceKind::Linear { r3, .. } => Some(self.lipschitz_r.unwrap_or(r3.sup_abs(dom))),
            SourceKind::None => Some(0.0),
            SourceKind::Singular { .. } => None,
        }
    }

    /// The base nonlinearity handed to the mollifier.
    pub fn base_beta(&self) -> BaseBeta {
        match &self.kind {
            SourceKind::Singular { r1, .. } => BaseBeta::Singular { r1: *r1 },
            _ => BaseBeta::Zero,
        }
    }
}

/// Dirichlet boundary value for the temperature as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryValue {
    Constant(f64),
    /// Linear interpolation through `(t, value)` knots, clamped outside.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl BoundaryValue {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            BoundaryValue::Constant(v) => *v,
            BoundaryValue::PiecewiseLinear(pts) => {
                if pts.is_empty() {
                    return 0.0;
                }
                if t <= pts[0].0 {
                    return pts[0].1;
                }
                for w in pts.windows(2) {
                    let ((t0, v0), (t1, v1)) = (w[0], w[1]);
                    if t <= t1 {
                        let s = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
                        return v0 + s * (v1 - v0);
                    }
                }
                pts.last().unwrap().1
            }
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            BoundaryValue::Constant(v) => (*v, *v),
            BoundaryValue::PiecewiseLinear(pts) => pts.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)),
            ),
        }
    }

    pub fn is_well_formed(&self) -> bool {
        match self {
            BoundaryValue::Constant(v) => v.is_finite(),
            BoundaryValue::PiecewiseLinear(pts) => {
                !pts.is_empty()
                    && pts.iter().all(|(t, v)| t.is_finite() && v.is_finite())
                    && pts.windows(2).all(|w| w[0].0 <= w[1].0)
            }
        }
    }
}

/// Initial nodal field preset on `(0, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialField {
    Constant(f64),
    /// Linear profile from `left` at x=0 to `right` at x=L.
    Affine { left: f64, right: f64 },
    /// `base + amplitude * sin(pi x / L)`.
    SineBump { base: f64, amplitude: f64 },
}

impl InitialField {
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match *self {
            InitialField::Constant(v) => v,
            InitialField::Affine { left, right } => left + (right - left) * x / length,
            InitialField::SineBump { base, amplitude } => {
                base + amplitude * (std::f64::consts::PI * x / length).sin()
            }
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match *self {
            InitialField::Constant(v) => (v, v),
            InitialField::Affine { left, right } => (left.min(right), left.max(right)),
            InitialField::SineBump { base, amplitude } => {
                ((base + amplitude).min(base), (base + amplitude).max(base))
            }
        }
    }
}

/// Full problem data for one run.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub length: f64,
    pub horizon: f64,
    pub potentials: Potentials,
    pub source: SourceSpec,
    pub theta_star_low: f64,
    pub theta_star_high: f64,
    pub chi_star_low: f64,
    pub chi_star_high: f64,
    pub bc_left: BoundaryValue,
    pub bc_right: BoundaryValue,
    pub theta0: InitialField,
    pub chi0: InitialField,
}

impl ProblemSpec {
    pub fn domain(&self) -> DomainBox {
        DomainBox::new(self.length, self.horizon)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_spec(self)
    }
}

/// One violated hypothesis: a short stable code plus a human explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, code: &'static str, message: String) {
        self.violations.push(Violation { code, message });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            writeln!(f, "spec: valid")
        } else {
            for v in &self.violations {
                writeln!(f, "violation [{}]: {}", v.code, v.message)?;
            }
            Ok(())
        }
    }
}

const SIGN_SAMPLES: usize = 1000;
const SIGN_MARGIN: f64 = 1e-12;

/// Check the structural hypotheses; an empty report means the spec is
/// admissible and the solver will accept it.
pub fn validate_spec(spec: &ProblemSpec) -> ValidationReport {
    let mut rep = ValidationReport::default();

    if !(spec.length > 0.0 && spec.length.is_finite()) {
        rep.push("domain", format!("domain length must be positive, got {}", spec.length));
    }
    if !(spec.horizon > 0.0 && spec.horizon.is_finite()) {
        rep.push("domain", format!("time horizon must be positive, got {}", spec.horizon));
    }
    if rep.violations.iter().any(|v| v.code == "domain") {
        return rep; // no domain box to validate coefficients on
    }
    let dom = spec.domain();

    // temperature and phase windows
    let (tl, th) = (spec.theta_star_low, spec.theta_star_high);
    if !(tl > 0.0 && tl <= 1.0 && 1.0 <= th) {
        rep.push(
            "temperature-window",
            format!("temperature bounds must satisfy 0 < low <= 1 <= high, got [{tl}, {th}]"),
        );
    }
    let (cl, ch) = (spec.chi_star_low, spec.chi_star_high);
    if !(cl.is_finite() && ch.is_finite()) || cl >= ch {
        rep.push(
            "phase-window",
            format!("phase bounds must satisfy low < high, got [{cl}, {ch}]"),
        );
    }

    // potential regularity on the working window (custom presets only)
    if let Potentials::Custom { .. } = spec.potentials {
        let lo = cl - 1.0;
        let hi = ch + 1.0;
        let mut g_min = f64::INFINITY;
        for k in 0..=SIGN_SAMPLES {
            let x = lo + (hi - lo) * k as f64 / SIGN_SAMPLES as f64;
            g_min = g_min.min(spec.potentials.eval_g(x));
        }
        if g_min < -SIGN_MARGIN {
            rep.push(
                "potential-nonnegativity",
                format!("G must be nonnegative near the phase window; min sampled value {g_min:.3e}"),
            );
        }
    }

    // sign condition: F', G' <= 0 below the window and >= 0 above it
    if cl < ch {
        let mut worst: Option<(f64, f64)> = None;
        for k in 0..SIGN_SAMPLES {
            let below = cl - 5.0 + 5.0 * (k as f64 + 0.5) / SIGN_SAMPLES as f64;
            for v in [spec.potentials.eval_f_prime(below), spec.potentials.eval_g_prime(below)] {
                if v > SIGN_MARGIN && worst.is_none_or(|(_, w)| v > w) {
                    worst = Some((below, v));
                }
            }
            let above = ch + 5.0 * (k as f64 + 0.5) / SIGN_SAMPLES as f64;
            for v in [spec.potentials.eval_f_prime(above), spec.potentials.eval_g_prime(above)] {
                if v < -SIGN_MARGIN && worst.is_none_or(|(_, w)| -v > w) {
                    worst = Some((above, -v));
                }
            }
        }
        if let Some((at, mag)) = worst {
            rep.push(
                "potential-sign",
                format!(
                    "F' and G' must be <= 0 below the phase window and >= 0 above it; \
                     violated at chi={at:.4} with magnitude {mag:.3e}"
                ),
            );
        }
    }

    // source hypotheses
    match &spec.source.kind {
        SourceKind::Singular { r1, .. } => {
            if !r1.nonnegative_on(&dom) {
                rep.push(
                    "source-coefficient",
                    "singular source coefficient R1 must be nonnegative on the domain".into(),
                );
            }
            if r1.relative_derivative_bound(&dom).is_none() {
                rep.push(
                    "source-coefficient",
                    "R1 derivatives cannot be bounded by a multiple of R1 (coefficient \
                     touches zero while varying)"
                        .into(),
                );
            }
            if spec.source.lipschitz_r.is_some() {
                rep.push(
                    "source-lipschitz",
                    "a singular source is never Lipschitz in the temperature; drop the \
                     Lipschitz declaration or use the linear kind"
                        .into(),
                );
            }
        }
        SourceKind::Linear { r3, .. } => {
            if let Some(lr) = spec.source.lipschitz_r {
                let need = r3.sup_abs(&dom);
                if lr + 1e-12 < need {
                    rep.push(
                        "source-lipschitz",
                        format!("declared Lipschitz constant {lr} is below sup|R3| = {need}"),
                    );
                }
            }
        }
        SourceKind::None => {}
    }

    // boundary and initial data inside the windows
    for (side, bv) in [("left", &spec.bc_left), ("right", &spec.bc_right)] {
        if !bv.is_well_formed() {
            rep.push("boundary-data", format!("{side} boundary preset is malformed"));
            continue;
        }
        let (lo, hi) = bv.range();
        if lo < tl - 1e-12 || hi > th + 1e-12 {
            rep.push(
                "boundary-range",
                format!("{side} boundary values [{lo}, {hi}] leave the temperature window [{tl}, {th}]"),
            );
        }
    }
    let (lo, hi) = spec.theta0.range();
    if lo < tl - 1e-12 || hi > th + 1e-12 {
        rep.push(
            "initial-theta-range",
            format!("initial temperature range [{lo}, {hi}] leaves the window [{tl}, {th}]"),
        );
    }
    let (lo, hi) = spec.chi0.range();
    if lo < cl - 1e-12 || hi > ch + 1e-12 {
        rep.push(
            "initial-chi-range",
            format!("initial phase range [{lo}, {hi}] leaves the window [{cl}, {ch}]"),
        );
    }

    rep
}

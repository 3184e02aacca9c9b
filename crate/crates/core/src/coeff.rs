//! Closed-form coefficient fields on the space-time cylinder.
//!
//! Source coefficients are restricted to presets whose extrema, gradients,
//! and Lipschitz constants are available in closed form, so that derived
//! solver constants need no numerical estimation.

/// Rectangle `(0, length) x (0, horizon)` on which coefficients live.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBox {
    pub length: f64,
    pub horizon: f64,
}

impl DomainBox {
    pub fn new(length: f64, horizon: f64) -> Self {
        assert!(length > 0.0 && horizon > 0.0, "domain box must be positive");
        Self { length, horizon }
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        (-1e-12..=self.length + 1e-12).contains(&x) && (-1e-12..=self.horizon + 1e-12).contains(&t)
    }
}

/// A scalar coefficient on the cylinder: constant, affine in x, or a
/// product of an affine-in-x and an affine-in-t factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoeffField {
    Constant(f64),
    /// `a + b * x`
    AffineX { a: f64, b: f64 },
    /// `(a + b * x) * (c + d * t)`
    AffineXT { a: f64, b: f64, c: f64, d: f64 },
}

impl CoeffField {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match *self {
            CoeffField::Constant(v) => v,
            CoeffField::AffineX { a, b } => a + b * x,
            CoeffField::AffineXT { a, b, c, d } => (a + b * x) * (c + d * t),
        }
    }

    pub fn grad_x(&self, _x: f64, t: f64) -> f64 {
        match *self {
            CoeffField::Constant(_) => 0.0,
            CoeffField::AffineX { b, .. } => b,
            CoeffField::AffineXT { b, c, d, .. } => b * (c + d * t),
        }
    }

    pub fn dt(&self, x: f64, _t: f64) -> f64 {
        match *self {
            CoeffField::Constant(_) | CoeffField::AffineX { .. } => 0.0,
            CoeffField::AffineXT { a, b, d, .. } => (a + b * x) * d,
        }
    }

    /// Extrema over the closed cylinder; affine factors attain them at corners.
    pub fn range(&self, dom: &DomainBox) -> (f64, f64) {
        let corners = [
            (0.0, 0.0),
            (dom.length, 0.0),
            (0.0, dom.horizon),
            (dom.length, dom.horizon),
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (x, t) in corners {
            let v = self.eval(x, t);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn sup_abs(&self, dom: &DomainBox) -> f64 {
        let (lo, hi) = self.range(dom);
        lo.abs().max(hi.abs())
    }

    pub fn nonnegative_on(&self, dom: &DomainBox) -> bool {
        self.range(dom).0 >= 0.0
    }

    /// Joint (x,t)-Lipschitz constant, taken as `sup |grad_x| + sup |d/dt|`.
    pub fn lipschitz(&self, dom: &DomainBox) -> f64 {
        match *self {
            CoeffField::Constant(_) => 0.0,
            CoeffField::AffineX { b, .. } => b.abs(),
            CoeffField::AffineXT { a, b, c, d } => {
                let sup_t = c.abs().max((c + d * dom.horizon).abs());
                let sup_x = a.abs().max((a + b * dom.length).abs());
                b.abs() * sup_t + d.abs() * sup_x
            }
        }
    }

    /// Smallest constant `m` with `|grad_x| + |d/dt| <= m * value` on the
    /// cylinder, or `None` when the coefficient gets too close to zero for
    /// such a bound to exist.
    pub fn relative_derivative_bound(&self, dom: &DomainBox) -> Option<f64> {
        match *self {
            CoeffField::Constant(_) => Some(0.0),
            CoeffField::AffineX { a, b } => {
                if b == 0.0 {
                    return Some(0.0);
                }
                let inf = (a).min(a + b * dom.length);
                if inf <= 0.0 {
                    None
                } else {
                    Some(b.abs() / inf)
                }
            }
            CoeffField::AffineXT { a, b, c, d } => {
                // |b(c+dt)| + |d(a+bx)| over (a+bx)(c+dt) splits into two ratios.
                let inf_x = (a).min(a + b * dom.length);
                let inf_t = (c).min(c + d * dom.horizon);
                if (b != 0.0 && inf_x <= 0.0) || (d != 0.0 && inf_t <= 0.0) {
                    return None;
                }
                let rx = if b == 0.0 { 0.0 } else { b.abs() / inf_x };
                let rt = if d == 0.0 { 0.0 } else { d.abs() / inf_t };
                Some(rx + rt)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            CoeffField::Constant(_) => true,
            CoeffField::AffineX { b, .. } => b == 0.0,
            CoeffField::AffineXT { b, d, .. } => b == 0.0 && d == 0.0,
        }
    }
}

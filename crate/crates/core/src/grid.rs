//! 1-D uniform grid, nodal fields, the two second-order Laplacians, the
//! harmonic (affine) boundary lift, and the norm toolbox including the
//! discrete negative-order dual norm.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("interior node count must be at least 3, got {0}")]
    TooFewNodes(usize),
    #[error("grid length must be positive, got {0}")]
    BadLength(f64),
}

/// Uniform grid on `(0, L)` with `n` interior nodes: `x_i = i*h`,
/// `i = 0..n+1`, spacing `h = L/(n+1)`, boundary at `i = 0` and `i = n+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    h: f64,
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self, GridError> {
        if n < 3 {
            return Err(GridError::TooFewNodes(n));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(GridError::BadLength(length));
        }
        Ok(Self {
            n,
            h: length / (n + 1) as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.h * (self.n + 1) as f64
    }

    /// Total node count including the two boundary nodes.
    pub fn total_nodes(&self) -> usize {
        self.n + 2
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }
}

/// Nodal values over all grid points including the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.total_nodes(), "field length mismatch");
        assert!(values.iter().all(|v| v.is_finite()), "field values must be finite");
        Self { grid, values }
    }

    pub fn constant(grid: Grid1D, v: f64) -> Self {
        Self::new(grid, vec![v; grid.total_nodes()])
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.total_nodes()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for Field {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

/// Three-point Laplacian at the interior nodes with Dirichlet data
/// substituted for the boundary entries of `f`.
pub fn laplacian_dirichlet(f: &Field, g_left: f64, g_right: f64) -> Vec<f64> {
    let n = f.grid.n();
    let h2 = f.grid.h() * f.grid.h();
    let v = f.values();
    let mut out = vec![0.0; n];
    for i in 1..=n {
        let left = if i == 1 { g_left } else { v[i - 1] };
        let right = if i == n { g_right } else { v[i + 1] };
        out[i - 1] = (left - 2.0 * v[i] + right) / h2;
    }
    out
}

/// Three-point Laplacian at every node under homogeneous Neumann data,
/// realized by ghost-node reflection.
pub fn laplacian_neumann(f: &Field) -> Field {
    let m = f.len();
    let h2 = f.grid.h() * f.grid.h();
    let v = f.values();
    let mut out = vec![0.0; m];
    for i in 0..m {
        let left = if i == 0 { v[1] } else { v[i - 1] };
        let right = if i == m - 1 { v[m - 2] } else { v[i + 1] };
        out[i] = (left - 2.0 * v[i] + right) / h2;
    }
    Field::new(f.grid, out)
}

/// Solution of the boundary-value problem `u'' = 0`, `u(0) = g_left`,
/// `u(L) = g_right`: the affine interpolant, which stays inside the range
/// of its boundary data.
pub fn harmonic_extension(g_left: f64, g_right: f64, grid: Grid1D) -> Field {
    let len = grid.length();
    Field::from_fn(grid, |x| g_left + (g_right - g_left) * x / len)
}

/// Trapezoidal `L^2` norm over the whole interval.
pub fn norm_l2(f: &Field) -> f64 {
    integral(&f.map(|v| v * v)).max(0.0).sqrt()
}

/// Trapezoidal integral over the whole interval.
pub fn integral(f: &Field) -> f64 {
    let v = f.values();
    let m = v.len();
    let inner: f64 = v[1..m - 1].iter().sum();
    f.grid.h() * (0.5 * v[0] + inner + 0.5 * v[m - 1])
}

/// `H^1` seminorm from forward differences.
pub fn seminorm_h1(f: &Field) -> f64 {
    let v = f.values();
    let h = f.grid.h();
    let s: f64 = v.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    (s / h).max(0.0).sqrt()
}

/// Full `H^1` norm.
pub fn norm_h1(f: &Field) -> f64 {
    let a = norm_l2(f);
    let b = seminorm_h1(f);
    (a * a + b * b).sqrt()
}

pub fn norm_linf(f: &Field) -> f64 {
    f.values().iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Solve the tridiagonal system with `sub`/`diag`/`sup` bands by the Thomas
/// algorithm. Bands are consumed; `rhs` is overwritten with the solution.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    debug_assert!(sub.len() == n - 1 && sup.len() == n - 1 && rhs.len() == n);
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / m;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
    }
    rhs[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = d[i] - c[i] * rhs[i + 1];
    }
}

/// Discrete dual norm of an interior load `v`: solve `-lap(z) = v` with
/// zero Dirichlet data and return `sqrt(sum v_i z_i h)`. This realizes the
/// negative-order norm used by the stability experiment.
pub fn dual_norm(v: &[f64], grid: Grid1D) -> f64 {
    let n = grid.n();
    assert_eq!(v.len(), n, "dual norm expects interior values");
    let h2 = grid.h() * grid.h();
    let sub = vec![-1.0 / h2; n - 1];
    let sup = vec![-1.0 / h2; n - 1];
    let diag = vec![2.0 / h2; n];
    let mut z = v.to_vec();
    solve_tridiagonal(&sub, &diag, &sup, &mut z);
    let s: f64 = v.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
    (s * grid.h()).max(0.0).sqrt()
}

/// Smallest eigenvalue of the interior Dirichlet Laplacian matrix; the
/// discrete Poincare constant is its inverse square root.
pub fn dirichlet_lambda_min(grid: Grid1D) -> f64 {
    let h = grid.h();
    let arg = std::f64::consts::PI * h / (2.0 * grid.length());
    4.0 / (h * h) * arg.sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_grid(n: usize) -> Grid1D {
        Grid1D::new(n, 1.0).unwrap()
    }

    #[test]
    fn grid_geometry() {
        assert!(Grid1D::new(2, 1.0).is_err());
        let g = unit_grid(99);
        assert_eq!(g.total_nodes(), 101);
        assert!((g.h() - 0.01).abs() < 1e-15);
        assert!((g.length() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_laplacian_on_constants_and_quadratics() {
        let g = unit_grid(9);
        let c = Field::constant(g, 3.0);
        for v in laplacian_dirichlet(&c, 3.0, 3.0) {
            assert!(v.abs() < 1e-12);
        }
        // exact on quadratics
        let q = Field::from_fn(g, |x| x * x);
        for v in laplacian_dirichlet(&q, 0.0, 1.0) {
            assert!((v - 2.0).abs() < 1e-10, "v={v}");
        }
    }

    #[test]
    fn dirichlet_laplacian_second_order_on_sine() {
        let g = unit_grid(99);
        let f = Field::from_fn(g, |x| (PI * x).sin());
        let lap = laplacian_dirichlet(&f, 0.0, 0.0);
        let mut err: f64 = 0.0;
        for (i, v) in lap.iter().enumerate() {
            let x = g.x(i + 1);
            err = err.max((v + PI * PI * (PI * x).sin()).abs());
        }
        let bound = PI.powi(4) * g.h() * g.h() / 12.0 * 1.01;
        assert!(err <= bound, "err={err}, bound={bound}");
    }

    #[test]
    fn neumann_laplacian_basics() {
        let g = unit_grid(9);
        let c = Field::constant(g, 2.5);
        for &v in laplacian_neumann(&c).values() {
            assert!(v.abs() < 1e-12);
        }
        // single unit spike: stencil definition, scaled by 1/h^2
        let mut f = Field::constant(g, 0.0);
        f[5] = 1.0;
        let lap = laplacian_neumann(&f);
        let h2 = g.h() * g.h();
        assert!((lap[4] - 1.0 / h2).abs() < 1e-9);
        assert!((lap[5] + 2.0 / h2).abs() < 1e-9);
        assert!((lap[6] - 1.0 / h2).abs() < 1e-9);
    }

    #[test]
    fn neumann_laplacian_on_cosine_eigenfunction() {
        let g = Grid1D::new(99, 2.0).unwrap();
        let l = g.length();
        let f = Field::from_fn(g, |x| (PI * x / l).cos());
        let lap = laplacian_neumann(&f);
        let k2 = (PI / l) * (PI / l);
        let mut err: f64 = 0.0;
        for (i, &v) in lap.values().iter().enumerate() {
            err = err.max((v + k2 * (PI * g.x(i) / l).cos()).abs());
        }
        assert!(err < 2.0 * k2 * k2 * g.h() * g.h(), "err={err}");
    }

    #[test]
    fn neumann_conserves_mass() {
        let g = unit_grid(31);
        let f = Field::from_fn(g, |x| (3.0 * x).exp() * (5.0 * x).sin() + 0.3);
        let total = integral(&laplacian_neumann(&f));
        assert!(total.abs() < 1e-9, "mass defect {total}");
    }

    #[test]
    fn summation_by_parts() {
        // <-lap f, g> = <grad f, grad g> for zero-boundary fields
        let g = unit_grid(63);
        let f = Field::from_fn(g, |x| (PI * x).sin() + 0.5 * (3.0 * PI * x).sin());
        let w = Field::from_fn(g, |x| (2.0 * PI * x).sin());
        let lap = laplacian_dirichlet(&f, 0.0, 0.0);
        let lhs: f64 = -g.h()
            * lap
                .iter()
                .enumerate()
                .map(|(i, v)| v * w[i + 1])
                .sum::<f64>();
        let rhs: f64 = (0..=g.n())
            .map(|i| (f[i + 1] - f[i]) * (w[i + 1] - w[i]))
            .sum::<f64>()
            / g.h();
        assert!((lhs - rhs).abs() < 1e-12, "lhs={lhs}, rhs={rhs}");
    }

    #[test]
    fn harmonic_extension_is_affine_and_bounded() {
        let g = unit_grid(9);
        let e = harmonic_extension(1.0, 2.0, g);
        for (i, &v) in e.values().iter().enumerate() {
            assert!((v - (1.0 + g.x(i))).abs() < 1e-14);
        }
        let c = harmonic_extension(0.7, 0.7, g);
        assert!(c.values().iter().all(|&v| (v - 0.7).abs() < 1e-15));
        // window check: data in [0.5, 2] keeps all nodal values there
        let w = harmonic_extension(0.5, 2.0, g);
        assert!(w.min() >= 0.5 && w.max() <= 2.0);
    }

    #[test]
    fn norms_on_reference_fields() {
        let g = unit_grid(199);
        let zero = Field::constant(g, 0.0);
        assert_eq!(norm_l2(&zero), 0.0);
        assert_eq!(seminorm_h1(&zero), 0.0);
        assert_eq!(norm_linf(&zero), 0.0);
        let one = Field::constant(g, 1.0);
        assert!((norm_l2(&one) - 1.0).abs() < 1e-13);
        let s = Field::from_fn(g, |x| (PI * x).sin());
        assert!((norm_l2(&s) - 0.5f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn dual_norm_reference_value_and_linearity() {
        let g = unit_grid(199);
        let v: Vec<f64> = (1..=g.n()).map(|i| (PI * g.x(i)).sin()).collect();
        let d = dual_norm(&v, g);
        // (1/pi) * sqrt(1/2), frozen from the closed form
        assert!((d - 0.225_079_079_039_276_5).abs() < 2e-5, "d={d}");
        let v2: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        let d2 = dual_norm(&v2, g);
        assert!((d2 - 2.0 * d).abs() < 1e-13);
        assert_eq!(dual_norm(&vec![0.0; g.n()], g), 0.0);
    }

    #[test]
    fn dual_norm_poincare_bound() {
        let g = unit_grid(63);
        let lam = dirichlet_lambda_min(g);
        let fields: Vec<Vec<f64>> = vec![
            (1..=g.n()).map(|i| (7.0 * g.x(i)).sin() + 0.2).collect(),
            (1..=g.n()).map(|i| g.x(i) * g.x(i) - 0.3).collect(),
        ];
        for v in fields {
            let l2 = {
                let s: f64 = v.iter().map(|x| x * x).sum();
                (s * g.h()).sqrt()
            };
            assert!(dual_norm(&v, g) <= l2 / lam.sqrt() + 1e-12);
        }
    }

    #[test]
    fn laplacians_converge_at_second_order() {
        let mut errs_d = Vec::new();
        let mut errs_n = Vec::new();
        for n in [24usize, 49, 99] {
            let g = Grid1D::new(n, 1.0).unwrap();
            let f = Field::from_fn(g, |x| (2.0 * PI * x).sin().exp());
            let exact = |x: f64| {
                let s = (2.0 * PI * x).sin();
                let c = (2.0 * PI * x).cos();
                (4.0 * PI * PI * c * c - 4.0 * PI * PI * s) * s.exp()
            };
            let lap = laplacian_dirichlet(&f, f[0], f[g.n() + 1]);
            let mut e: f64 = 0.0;
            for (i, v) in lap.iter().enumerate() {
                e = e.max((v - exact(g.x(i + 1))).abs());
            }
            errs_d.push(e);

            let fc = Field::from_fn(g, |x| (PI * x).cos());
            let lapn = laplacian_neumann(&fc);
            let mut en: f64 = 0.0;
            for (i, &v) in lapn.values().iter().enumerate() {
                en = en.max((v + PI * PI * (PI * g.x(i)).cos()).abs());
            }
            errs_n.push(en);
        }
        for errs in [errs_d, errs_n] {
            for w in errs.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!(order >= 1.9, "observed order {order}, errors {errs:?}");
            }
        }
    }

    #[test]
    fn tridiagonal_solver_roundtrip() {
        let n = 12;
        let sub = vec![-1.0; n - 1];
        let sup = vec![-1.5; n - 1];
        let diag = vec![4.0; n];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = 4.0 * x_true[i];
            if i > 0 {
                rhs[i] -= x_true[i - 1];
            }
            if i < n - 1 {
                rhs[i] += -1.5 * x_true[i + 1];
            }
        }
        solve_tridiagonal(&sub, &diag, &sup, &mut rhs);
        for (a, b) in rhs.iter().zip(x_true.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

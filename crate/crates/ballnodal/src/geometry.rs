//! Green and Robin functions of the unit ball, bubbles and projected bubbles.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::{Error, Result};

/// Distance from the unit sphere below which a point counts as a boundary point.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    /// `(t, 0, …, 0)` in ℝᴺ.
    pub fn on_axis(t: f64, n: usize) -> Self {
        let mut coords = vec![0.0; n];
        coords[0] = t;
        Point { coords }
    }

    /// `(s, r, 0, …, 0)`: the meridian-plane point used by the axisymmetric code.
    pub fn meridian(s: f64, r: f64, n: usize) -> Self {
        let mut coords = vec![0.0; n];
        coords[0] = s;
        coords[1] = r;
        Point { coords }
    }

    pub fn origin(n: usize) -> Self {
        Point {
            coords: vec![0.0; n],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn is_interior(&self) -> bool {
        self.norm() < 1.0 - BOUNDARY_TOL
    }

    pub fn is_on_boundary(&self) -> bool {
        (self.norm() - 1.0).abs() <= BOUNDARY_TOL
    }

    /// Returns `(x₁, |x′|)`.
    pub fn axial(&self) -> (f64, f64) {
        let r = self.coords[1..].iter().map(|c| c * c).sum::<f64>().sqrt();
        (self.coords[0], r)
    }

    fn is_on_axis(&self) -> bool {
        self.coords[1..].iter().all(|&c| c == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BubbleParams {
    pub delta: f64,
    pub center: Point,
    pub dim: usize,
}

impl BubbleParams {
    pub fn new(delta: f64, center: Point) -> Result<Self> {
        let dim = center.dim();
        if !(delta > 0.0) {
            return Err(Error::domain(format!(
                "bubble scale must be positive, got {delta}"
            )));
        }
        if dim < 3 {
            return Err(Error::domain(format!(
                "dimension must be at least 3, got {dim}"
            )));
        }
        Ok(BubbleParams { delta, center, dim })
    }
}

/// `α_N = (N(N−2))^{(N−2)/4}`.
pub fn alpha_n(n: usize) -> f64 {
    let nf = n as f64;
    (nf * (nf - 2.0)).powf((nf - 2.0) / 4.0)
}

/// Constant of the harmonic correction in the projected bubble; equal to `α_N`.
pub fn gamma_n(n: usize) -> f64 {
    alpha_n(n)
}

fn check_dims(x: &Point, y: &Point, n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::domain(format!(
            "dimension must be at least 3, got {n}"
        )));
    }
    if x.dim() != n || y.dim() != n {
        return Err(Error::domain(format!(
            "points of dimension {} and {} used with N = {n}",
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

fn check_closed_ball(x: &Point, name: &str) -> Result<()> {
    if x.norm() > 1.0 + BOUNDARY_TOL {
        return Err(Error::domain(format!(
            "{name} lies outside the closed unit ball (|{name}| = {})",
            x.norm()
        )));
    }
    Ok(())
}

/// `H(x,y) = (|x|²|y|² + 1 − 2 x·y)^{−(N−2)/2}`.
pub fn robin_h(x: &Point, y: &Point, n: usize) -> Result<f64> {
    check_dims(x, y, n)?;
    check_closed_ball(x, "x")?;
    check_closed_ball(y, "y")?;
    let q = x.norm_sq() * y.norm_sq() + 1.0 - 2.0 * x.dot(y);
    if q <= 0.0 {
        return Err(Error::domain(format!("non-positive Robin radicand {q:e}")));
    }
    Ok(q.powf(-(n as f64 - 2.0) / 2.0))
}

/// `G(x,y) = |x−y|^{2−N} − H(x,y)`.
pub fn green_g(x: &Point, y: &Point, n: usize) -> Result<f64> {
    check_dims(x, y, n)?;
    let d = x.dist_sq(y).sqrt();
    if d < 1e-12 {
        return Err(Error::Singular(d));
    }
    Ok(d.powf(2.0 - n as f64) - robin_h(x, y, n)?)
}

/// `U_{δ,ξ}(x) = α_N (δ/(δ² + |x−ξ|²))^{(N−2)/2}`.
pub fn bubble(x: &Point, p: &BubbleParams) -> f64 {
    bubble_at_dist_sq(x.dist_sq(&p.center), p.delta, p.dim)
}

pub(crate) fn bubble_at_dist_sq(d2: f64, delta: f64, n: usize) -> f64 {
    alpha_n(n) * (delta / (delta * delta + d2)).powf((n as f64 - 2.0) / 2.0)
}

/// `U_{δ,ξ}(x) − γ_N δ^{(N−2)/2} H(x,ξ)`.
pub fn projected_bubble_approx(x: &Point, p: &BubbleParams) -> f64 {
    let n = p.dim;
    let k = n as f64 - 2.0;
    let q = x.norm_sq() * p.center.norm_sq() + 1.0 - 2.0 * x.dot(&p.center);
    bubble(x, p) - gamma_n(n) * p.delta.powf(k / 2.0) * q.powf(-k / 2.0)
}

/// Projected bubble for a center `(ξ,0,…,0)` evaluated at the meridian point `(s, r)`.
pub fn projected_bubble_axial(s: f64, r: f64, xi: f64, delta: f64, n: usize) -> f64 {
    let k = n as f64 - 2.0;
    let d2 = (s - xi) * (s - xi) + r * r;
    let q = (s * s + r * r) * xi * xi + 1.0 - 2.0 * s * xi;
    bubble_at_dist_sq(d2, delta, n) - gamma_n(n) * delta.powf(k / 2.0) * q.powf(-k / 2.0)
}

/// Green's function for an axial pole `(ξ,0,…,0)` at the meridian point `(s, r)`.
pub fn green_axial(s: f64, r: f64, xi: f64, n: usize) -> f64 {
    let k = n as f64 - 2.0;
    let d2 = (s - xi) * (s - xi) + r * r;
    let q = (s * s + r * r) * xi * xi + 1.0 - 2.0 * s * xi;
    d2.powf(-k / 2.0) - q.powf(-k / 2.0)
}

/// `U − w`, where `w` is the Poisson-integral harmonic extension of `U` restricted to the sphere.
///
/// The center must lie on the x₁-axis, so the boundary data depend on the polar angle only and
/// the sphere integral reduces to two angles. The quadrature error is estimated by comparing
/// `quadrature_order` with twice that order.
pub fn projected_bubble_exact(
    x: &Point,
    p: &BubbleParams,
    quadrature_order: usize,
    tol: f64,
) -> Result<f64> {
    if quadrature_order < 8 {
        return Err(Error::domain(format!(
            "quadrature order must be at least 8, got {quadrature_order}"
        )));
    }
    if x.dim() != p.dim {
        return Err(Error::domain("point and bubble dimensions differ"));
    }
    if !x.is_interior() {
        return Err(Error::domain(
            "projected_bubble_exact needs an interior point",
        ));
    }
    if !p.center.is_on_axis() {
        return Err(Error::domain(
            "projected_bubble_exact supports centers on the x1-axis only",
        ));
    }
    let coarse = poisson_extension(x, p, quadrature_order);
    let fine = poisson_extension(x, p, 2 * quadrature_order);
    let estimate = (fine - coarse).abs();
    if estimate > tol {
        return Err(Error::Quadrature { estimate, tol });
    }
    Ok(bubble(x, p) - fine)
}

fn poisson_extension(x: &Point, p: &BubbleParams, order: usize) -> f64 {
    let n = p.dim;
    let nf = n as f64;
    let xi = p.center.coords()[0];
    let (x1, r) = x.axial();
    let x_sq = x.norm_sq();
    let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order is positive"));
    let pairs = rule.as_node_weight_pairs();
    let half_pi = PI / 2.0;

    let mut total = 0.0;
    for &(tn, tw) in pairs {
        let theta = half_pi * (tn + 1.0);
        let (st, ct) = theta.sin_cos();
        let g = bubble_at_dist_sq(1.0 + xi * xi - 2.0 * xi * ct, p.delta, n);
        let mut inner = 0.0;
        for &(pn, pw) in pairs {
            let phi = half_pi * (pn + 1.0);
            let (sp, cp) = phi.sin_cos();
            let d2 = 1.0 + x_sq - 2.0 * (x1 * ct + r * st * cp);
            inner += pw * sp.powi(n as i32 - 3) * d2.powf(-nf / 2.0);
        }
        total += tw * g * st.powi(n as i32 - 2) * inner;
    }
    // |S^{N−3}| / |S^{N−1}| = (N−2)/(2π); the two affine maps to [0, π] contribute (π/2)².
    (1.0 - x_sq) * (nf - 2.0) / (2.0 * PI) * half_pi * half_pi * total
}

/// `∂_ν G(x, ξ) = −(N−2)(1 − |ξ|²)/|x − ξ|^N` for `|x| = 1`.
pub fn boundary_normal_derivative_of_g(x_boundary: &Point, xi: &Point, n: usize) -> Result<f64> {
    check_dims(x_boundary, xi, n)?;
    if !x_boundary.is_on_boundary() {
        return Err(Error::domain(format!(
            "point with |x| = {} is not on the unit sphere",
            x_boundary.norm()
        )));
    }
    if !xi.is_interior() {
        return Err(Error::domain("pole must be interior"));
    }
    let nf = n as f64;
    Ok(-(nf - 2.0) * (1.0 - xi.norm_sq()) * x_boundary.dist_sq(xi).powf(-nf / 2.0))
}

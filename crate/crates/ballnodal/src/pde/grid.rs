//! Tensor grids on the meridian quarter disk `{s ≥ 0, r ≥ 0, s² + r² < 1}`.
//!
//! The unknowns live on `s ≥ 0`; the field is even in `s`, so the left half is
//! reconstructed by reflection when a full [`Field2D`] is produced.

use crate::field::{linspace, Field2D};
use crate::geometry::BOUNDARY_TOL;
use crate::{Error, Result};

const OUTSIDE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct AxiGrid {
    s: Vec<f64>,
    r: Vec<f64>,
    nodes: Vec<(usize, usize)>,
    index: Vec<usize>,
}

fn check_axis(name: &str, x: &[f64]) -> Result<()> {
    if x.len() < 3 {
        return Err(Error::domain(format!("{name} axis needs at least 3 nodes")));
    }
    if x[0] != 0.0 || x[x.len() - 1] != 1.0 {
        return Err(Error::domain(format!("{name} axis must run from 0 to 1")));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain(format!(
            "{name} axis must be strictly increasing"
        )));
    }
    Ok(())
}

fn half_count(n_s_full: usize) -> Result<usize> {
    if n_s_full < 5 || n_s_full.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "full s count must be odd and at least 5, got {n_s_full}"
        )));
    }
    Ok(n_s_full.div_ceil(2))
}

impl AxiGrid {
    /// Grid on the nodes `s` (half axis, `0..=1`) and `r` (`0..=1`). Nodes with
    /// `s² + r² ≥ 1 − 1e-12` are boundary and carry no unknown.
    pub fn from_nodes(s: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        check_axis("s", &s)?;
        check_axis("r", &r)?;
        let (ns, nr) = (s.len(), r.len());
        let mut index = vec![OUTSIDE; ns * nr];
        let mut nodes = Vec::new();
        for (i, &si) in s.iter().enumerate() {
            for (j, &rj) in r.iter().enumerate() {
                if si * si + rj * rj < 1.0 - BOUNDARY_TOL {
                    index[i * nr + j] = nodes.len();
                    nodes.push((i, j));
                }
            }
        }
        Ok(AxiGrid { s, r, nodes, index })
    }

    /// Uniform grid with `n_s_full` nodes across `[−1, 1]` and `n_r` across `[0, 1]`.
    pub fn uniform(n_s_full: usize, n_r: usize) -> Result<Self> {
        let ns = half_count(n_s_full)?;
        if n_r < 3 {
            return Err(Error::domain("r axis needs at least 3 nodes"));
        }
        Self::from_nodes(linspace(0.0, 1.0, ns), linspace(0.0, 1.0, n_r))
    }

    /// Graded grid; see [`graded_nodes`] for the meaning of the clusters.
    pub fn graded(
        n_s_full: usize,
        n_r: usize,
        s_clusters: &[(f64, f64)],
        r_clusters: &[(f64, f64)],
        hmax: f64,
    ) -> Result<Self> {
        let ns = half_count(n_s_full)?;
        Self::from_nodes(
            graded_nodes(ns, s_clusters, hmax)?,
            graded_nodes(n_r, r_clusters, hmax)?,
        )
    }

    pub fn s_nodes(&self) -> &[f64] {
        &self.s
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.r
    }

    /// Node count across the full diameter `[−1, 1]`.
    pub fn n_s(&self) -> usize {
        2 * self.s.len() - 1
    }

    pub fn n_r(&self) -> usize {
        self.r.len()
    }

    /// Largest spacing along `s`.
    pub fn h_s(&self) -> f64 {
        max_gap(&self.s)
    }

    pub fn h_r(&self) -> f64 {
        max_gap(&self.r)
    }

    /// Number of unknowns.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, k: usize) -> (usize, usize) {
        self.nodes[k]
    }

    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.s.len() || j >= self.r.len() {
            return None;
        }
        let k = self.index[i * self.r.len() + j];
        (k != OUTSIDE).then_some(k)
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.nodes[k];
        (self.s[i], self.r[j])
    }

    /// True when a five-point neighbour of node `k` lies on or beyond the circle.
    pub fn is_near_boundary(&self, k: usize) -> bool {
        let (i, j) = self.nodes[k];
        self.index(i + 1, j).is_none() || self.index(i, j + 1).is_none()
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (s, r) = self.coords(k);
                f(s, r)
            })
            .collect()
    }

    /// Trapezoid cell weights times `r^{N−2}`, so that `Σ wₖ fₖ ≈ ∫∫_{s≥0} f r^{N−2} ds dr`.
    pub fn weights(&self, n: usize) -> Vec<f64> {
        let ws = trapezoid(&self.s);
        let wr = trapezoid(&self.r);
        self.nodes
            .iter()
            .map(|&(i, j)| ws[i] * wr[j] * self.r[j].powi(n as i32 - 2))
            .collect()
    }

    /// Unknown values along the axis `r = 0`, from `s = 0` outward.
    pub fn axis_values(&self, u: &[f64]) -> Vec<(f64, f64)> {
        (0..self.s.len())
            .filter_map(|i| self.index(i, 0).map(|k| (self.s[i], u[k])))
            .collect()
    }

    /// The full field on `[−1, 1] × [0, 1]`, with the left half reflected.
    pub fn to_field(&self, u: &[f64]) -> Field2D {
        let ns = self.s.len();
        let mut s_grid: Vec<f64> = self.s[1..].iter().rev().map(|x| -x).collect();
        s_grid.extend_from_slice(&self.s);
        let mut values = Vec::with_capacity(s_grid.len());
        let mut mask = Vec::with_capacity(s_grid.len());
        for a in 0..s_grid.len() {
            let i = if a + 1 >= ns { a + 1 - ns } else { ns - 1 - a };
            let (mut vr, mut mr) = (
                Vec::with_capacity(self.r.len()),
                Vec::with_capacity(self.r.len()),
            );
            for j in 0..self.r.len() {
                match self.index(i, j) {
                    Some(k) => {
                        vr.push(u[k]);
                        mr.push(true);
                    }
                    None => {
                        vr.push(f64::NAN);
                        mr.push(false);
                    }
                }
            }
            values.push(vr);
            mask.push(mr);
        }
        Field2D {
            s_grid,
            r_grid: self.r.clone(),
            values,
            mask,
        }
    }

    /// Grid underlying a full field produced by [`AxiGrid::to_field`] or sampled on the same nodes.
    pub fn from_field(f: &Field2D) -> Result<Self> {
        let n = f.s_grid.len();
        if n.is_multiple_of(2) {
            return Err(Error::Shape {
                expected: "odd s count".into(),
                got: n.to_string(),
            });
        }
        let mid = n / 2;
        for a in 0..mid {
            if f.s_grid[a] != -f.s_grid[n - 1 - a] {
                return Err(Error::Shape {
                    expected: "s grid symmetric about 0".into(),
                    got: format!("s[{a}] = {}", f.s_grid[a]),
                });
            }
        }
        Self::from_nodes(f.s_grid[mid..].to_vec(), f.r_grid.clone())
    }

    /// Unknown vector of a full field, after checking that its nodes and mask match this grid.
    pub fn unknowns(&self, f: &Field2D) -> Result<Vec<f64>> {
        let mid = self.s.len() - 1;
        let shape_ok = f.s_grid.len() == self.n_s()
            && f.r_grid == self.r
            && f.s_grid[mid..] == self.s[..]
            && f.values.len() == f.s_grid.len()
            && f.values.iter().all(|row| row.len() == self.r.len());
        if !shape_ok {
            return Err(Error::Shape {
                expected: format!("{}x{}", self.n_s(), self.n_r()),
                got: format!("{}x{}", f.s_grid.len(), f.r_grid.len()),
            });
        }
        let mut u = vec![0.0; self.len()];
        for (k, &(i, j)) in self.nodes.iter().enumerate() {
            if !f.mask[mid + i][j] {
                return Err(Error::Shape {
                    expected: "unmasked interior node".into(),
                    got: format!("masked node ({i}, {j})"),
                });
            }
            u[k] = f.values[mid + i][j];
        }
        Ok(u)
    }
}

fn max_gap(x: &[f64]) -> f64 {
    x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn trapezoid(x: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; x.len()];
    for (k, d) in x.windows(2).map(|p| p[1] - p[0]).enumerate() {
        w[k] += d / 2.0;
        w[k + 1] += d / 2.0;
    }
    w
}

/// Piecewise spacing `w(x) = min(hmax, min_k(a_k + κ|x − c_k|))` on `[0, 1]`.
struct Spacing<'a> {
    clusters: &'a [(f64, f64)],
    hmax: f64,
    kappa: f64,
}

/// Active piece of the spacing on one subinterval.
#[derive(Clone, Copy)]
enum Piece {
    Flat,
    /// `w = a + κσ(x − c)` with `σ = ±1`.
    Cone {
        c: f64,
        a: f64,
        sigma: f64,
    },
}

impl Spacing<'_> {
    fn active(&self, x: f64) -> Piece {
        let mut best = (self.hmax, Piece::Flat);
        for &(c, a) in self.clusters {
            let w = a + self.kappa * (x - c).abs();
            if w < best.0 {
                let sigma = if x >= c { 1.0 } else { -1.0 };
                best = (w, Piece::Cone { c, a, sigma });
            }
        }
        best.1
    }

    fn breakpoints(&self) -> Vec<f64> {
        let k = self.kappa;
        let mut b = vec![0.0, 1.0];
        for (m, &(c, a)) in self.clusters.iter().enumerate() {
            b.push(c);
            if a < self.hmax {
                b.push(c - (self.hmax - a) / k);
                b.push(c + (self.hmax - a) / k);
            }
            for &(c2, a2) in &self.clusters[m + 1..] {
                b.push((a2 - a + k * (c + c2)) / (2.0 * k));
                b.push((a - a2 + k * (c + c2)) / (2.0 * k));
            }
        }
        b.retain(|x| (0.0..=1.0).contains(x));
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Subintervals with their active piece and `∫ dx / w` over each.
    fn segments(&self) -> Vec<(f64, f64, Piece, f64)> {
        self.breakpoints()
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let piece = self.active(0.5 * (w[0] + w[1]));
                (w[0], w[1], piece, self.integral(piece, w[0], w[1]))
            })
            .collect()
    }

    fn width(&self, piece: Piece, x: f64) -> f64 {
        match piece {
            Piece::Flat => self.hmax,
            Piece::Cone { c, a, sigma } => a + self.kappa * sigma * (x - c),
        }
    }

    fn integral(&self, piece: Piece, x0: f64, x1: f64) -> f64 {
        match piece {
            Piece::Flat => (x1 - x0) / self.hmax,
            Piece::Cone { sigma, .. } => {
                (self.width(piece, x1) / self.width(piece, x0)).ln() / (self.kappa * sigma)
            }
        }
    }

    /// Point `x ≥ x0` with `∫_{x0}^{x} dx / w = t`.
    fn advance(&self, piece: Piece, x0: f64, t: f64) -> f64 {
        match piece {
            Piece::Flat => x0 + t * self.hmax,
            Piece::Cone { c, a, sigma } => {
                let w = self.width(piece, x0) * (self.kappa * sigma * t).exp();
                c + sigma * (w - a) / self.kappa
            }
        }
    }

    fn total(&self) -> f64 {
        self.segments().iter().map(|s| s.3).sum()
    }
}

/// `n` nodes on `[0, 1]` whose local spacing follows `min(hmax, min_k(a_k + κ|x − c_k|))`.
///
/// Each cluster `(c_k, a_k)` asks for spacing `a_k` at `c_k`; the growth rate `κ` is chosen so that
/// `∫₀¹ dx / w = n − 1`. Falls back to uniform spacing when that is already fine enough.
pub fn graded_nodes(n: usize, clusters: &[(f64, f64)], hmax: f64) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::domain("graded axis needs at least 3 nodes"));
    }
    if !(hmax > 0.0)
        || clusters
            .iter()
            .any(|&(c, a)| !(a > 0.0) || !(0.0..=1.0).contains(&c))
    {
        return Err(Error::domain(
            "cluster widths and hmax must be positive, centers in [0, 1]",
        ));
    }
    let target = (n - 1) as f64;
    let finest = clusters.iter().map(|c| c.1).fold(hmax, f64::min);
    if 1.0 / finest <= target {
        return Ok(linspace(0.0, 1.0, n));
    }
    let count = |kappa: f64| {
        Spacing {
            clusters,
            hmax,
            kappa,
        }
        .total()
            - target
    };
    let (mut lo, mut hi) = (1e-8_f64, 1e8_f64);
    if count(hi) > 0.0 {
        return Err(Error::domain(format!(
            "{n} nodes cannot reach spacing {hmax}"
        )));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if count(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-15 {
            break;
        }
    }
    let sp = Spacing {
        clusters,
        hmax,
        kappa: hi,
    };
    let segs = sp.segments();
    let total: f64 = segs.iter().map(|s| s.3).sum();
    let mut nodes = Vec::with_capacity(n);
    nodes.push(0.0);
    let mut seg = 0;
    let mut before = 0.0;
    for i in 1..n - 1 {
        let t = i as f64 * total / target;
        while seg + 1 < segs.len() && before + segs[seg].3 < t {
            before += segs[seg].3;
            seg += 1;
        }
        let (x0, x1, piece, _) = segs[seg];
        nodes.push(sp.advance(piece, x0, t - before).clamp(x0, x1));
    }
    nodes.push(1.0);
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("graded nodes collapsed; widen the clusters"));
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_counts() {
        let g = AxiGrid::uniform(129, 65).unwrap();
        assert_eq!(g.n_s(), 129);
        assert_eq!(g.n_r(), 65);
        assert!((g.h_s() - 1.0 / 64.0).abs() < 1e-15);
        for k in 0..g.len() {
            let (s, r) = g.coords(k);
            assert!(s * s + r * r < 1.0);
        }
        assert!(g.is_near_boundary(g.index(63, 0).unwrap()));
        assert!(!g.is_near_boundary(g.index(0, 0).unwrap()));
    }

    #[test]
    fn graded_spacing_is_fine_at_clusters() {
        let x = graded_nodes(65, &[(0.0, 1e-3), (0.67, 5e-4)], 0.08).unwrap();
        assert_eq!(x.len(), 65);
        assert!((x[1] - 1e-3).abs() < 2e-4);
        let near = x
            .windows(2)
            .filter(|w| w[0] <= 0.67 && w[1] >= 0.67)
            .map(|w| w[1] - w[0])
            .next()
            .unwrap();
        assert!(near < 2e-3);
        assert!(max_gap(&x) <= 0.08 + 1e-12);
    }

    #[test]
    fn coarse_request_falls_back_to_uniform() {
        assert_eq!(
            graded_nodes(11, &[(0.0, 0.5)], 0.5).unwrap(),
            linspace(0.0, 1.0, 11)
        );
    }

    #[test]
    fn field_round_trip() {
        let g = AxiGrid::uniform(17, 9).unwrap();
        let u = g.sample(|s, r| s + 2.0 * r);
        let f = g.to_field(&u);
        assert_eq!(f.s_grid.len(), 17);
        let back = AxiGrid::from_field(&f).unwrap();
        assert_eq!(back, g);
        assert_eq!(g.unknowns(&f).unwrap(), u);
        // Left half mirrors the right.
        assert_eq!(f.values[1][0], f.values[15][0]);
        assert!(!f.mask[0][0]);
    }

    #[test]
    fn weights_integrate_volume() {
        // ∫∫_{quarter disk} r ds dr = 1/3 for N = 3.
        let g = AxiGrid::uniform(257, 129).unwrap();
        let total: f64 = g.weights(3).iter().sum();
        assert!((total - 1.0 / 3.0).abs() < 2e-2);
    }
}

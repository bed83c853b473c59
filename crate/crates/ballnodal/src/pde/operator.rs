//! Discrete `−Δ` on the quarter-disk grid and the residual of `−Δu = |u|^{q}u`.

use faer::sparse::{SparseColMat, Triplet};

use super::grid::AxiGrid;
use crate::field::Field2D;
use crate::{Error, Result};

/// `−Δ_h` for fields on the meridian, with the axisymmetric term `((N−2)/r)∂_r`.
///
/// Interior rows use three-point nonuniform stencils in each direction; rows next to the circle
/// use the distance to the circle (Shortley–Weller) with the zero boundary value. At `s = 0`
/// evenness gives `u_ss ≈ 2(u₁ − u₀)/h²`; on the axis `r = 0` the radial part becomes `(N−1)u_rr`.
#[derive(Debug, Clone)]
pub struct Operator {
    ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl Operator {
    pub fn new(grid: &AxiGrid, n: usize) -> Self {
        let w_axis = n as f64 - 1.0;
        let w_rad = n as f64 - 2.0;
        let s = grid.s_nodes();
        let r = grid.r_nodes();
        let mut ptr = Vec::with_capacity(grid.len() + 1);
        let mut col = Vec::with_capacity(5 * grid.len());
        let mut val = Vec::with_capacity(5 * grid.len());
        ptr.push(0);
        for k in 0..grid.len() {
            let (i, j) = grid.node(k);
            let (si, rj) = (s[i], r[j]);
            let mut diag = 0.0;
            let mut off: Vec<(usize, f64)> = Vec::with_capacity(4);

            // s direction; coefficients of +Δ, negated at the end.
            let s_edge = (1.0 - rj * rj).max(0.0).sqrt();
            if i == 0 {
                match grid.index(1, j) {
                    Some(kp) => {
                        let c = 2.0 / (s[1] * s[1]);
                        diag -= c;
                        off.push((kp, c));
                    }
                    None => diag -= 2.0 / (s_edge * s_edge),
                }
            } else {
                let hm = si - s[i - 1];
                let (hp, up) = match grid.index(i + 1, j) {
                    Some(kp) => (s[i + 1] - si, Some(kp)),
                    None => (s_edge - si, None),
                };
                let a = 2.0 / (hm * (hm + hp));
                let c = 2.0 / (hp * (hm + hp));
                diag -= a + c;
                off.push((grid.index(i - 1, j).expect("inner neighbour exists"), a));
                if let Some(kp) = up {
                    off.push((kp, c));
                }
            }

            // r direction.
            let r_edge = (1.0 - si * si).max(0.0).sqrt();
            if j == 0 {
                match grid.index(i, 1) {
                    Some(kp) => {
                        let c = 2.0 * w_axis / (r[1] * r[1]);
                        diag -= c;
                        off.push((kp, c));
                    }
                    None => diag -= 2.0 * w_axis / (r_edge * r_edge),
                }
            } else {
                let hm = rj - r[j - 1];
                let (hp, up) = match grid.index(i, j + 1) {
                    Some(kp) => (r[j + 1] - rj, Some(kp)),
                    None => (r_edge - rj, None),
                };
                let sum = hm + hp;
                let w = w_rad / rj;
                let lower = 2.0 / (hm * sum) - w * hp / (hm * sum);
                let upper = 2.0 / (hp * sum) + w * hm / (hp * sum);
                diag += -2.0 / (hm * hp) + w * (hp - hm) / (hp * hm);
                off.push((grid.index(i, j - 1).expect("inner neighbour exists"), lower));
                if let Some(kp) = up {
                    off.push((kp, upper));
                }
            }

            col.push(k);
            val.push(-diag);
            for (c, v) in off {
                col.push(c);
                val.push(-v);
            }
            ptr.push(col.len());
        }
        Operator { ptr, col, val }
    }

    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                (self.ptr[k]..self.ptr[k + 1])
                    .map(|e| self.val[e] * u[self.col[e]])
                    .sum()
            })
            .collect()
    }

    /// Triplets of `−Δ_h + diag(shift)`; the diagonal comes first in every row.
    pub(crate) fn triplets_with_shift(&self, shift: &[f64]) -> Vec<Triplet<usize, usize, f64>> {
        let mut t = Vec::with_capacity(self.val.len());
        for (k, &d) in shift.iter().enumerate().take(self.len()) {
            for e in self.ptr[k]..self.ptr[k + 1] {
                let c = self.col[e];
                let v = if c == k { self.val[e] + d } else { self.val[e] };
                t.push(Triplet::new(k, c, v));
            }
        }
        t
    }

    pub fn to_sparse(&self) -> Result<SparseColMat<usize, f64>> {
        let zero = vec![0.0; self.len()];
        SparseColMat::try_new_from_triplets(
            self.len(),
            self.len(),
            &self.triplets_with_shift(&zero),
        )
        .map_err(|e| Error::Linear(format!("{e:?}")))
    }
}

/// Exponent `q = 4/(N−2) − ε` of the nonlinearity `|u|^q u`.
pub fn exponent(n: usize, epsilon: f64) -> f64 {
    4.0 / (n as f64 - 2.0) - epsilon
}

pub(crate) fn nonlinearity(u: &[f64], q: f64) -> Vec<f64> {
    u.iter().map(|&x| x.abs().powf(q) * x).collect()
}

/// `−Δ_h u − |u|^q u` for the unknown vector `u`.
pub(crate) fn residual_vec(op: &Operator, u: &[f64], q: f64) -> Vec<f64> {
    let mut f = op.apply(u);
    for (fk, &x) in f.iter_mut().zip(u) {
        *fk -= x.abs().powf(q) * x;
    }
    f
}

pub(crate) fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `‖F‖∞ / (1 + ‖|u|^q u‖∞)`.
pub(crate) fn normalized_residual(f: &[f64], u: &[f64], q: f64) -> f64 {
    max_abs(f) / (1.0 + max_abs(&nonlinearity(u, q)))
}

/// The discrete residual `−Δ_h v − |v|^{4/(N−2)−ε}v`, on the grid the field was sampled on.
pub fn assemble_residual(v: &Field2D, epsilon: f64, n: usize) -> Result<Field2D> {
    if n < 3 {
        return Err(Error::domain(format!(
            "dimension must be at least 3, got {n}"
        )));
    }
    let grid = AxiGrid::from_field(v)?;
    let u = grid.unknowns(v)?;
    let op = Operator::new(&grid, n);
    Ok(grid.to_field(&residual_vec(&op, &u, exponent(n, epsilon))))
}

/// Smooth test function `v = (1 − s² − r²)e^{as² + br²}`, zero on the circle, with its exact
/// `Δv` for the `N`-dimensional axisymmetric Laplacian.
#[derive(Debug, Clone, Copy)]
pub struct Manufactured {
    pub a: f64,
    pub b: f64,
    pub dimension: usize,
}

impl Manufactured {
    pub fn value(&self, s: f64, r: f64) -> f64 {
        let (ss, rr) = (s * s, r * r);
        (1.0 - ss - rr) * (self.a * ss + self.b * rr).exp()
    }

    pub fn laplacian(&self, s: f64, r: f64) -> f64 {
        let (ss, rr) = (s * s, r * r);
        let (a, b) = (self.a, self.b);
        let p = 1.0 - ss - rr;
        let e = (a * ss + b * rr).exp();
        let n1 = self.dimension as f64 - 1.0;
        e * (2.0 * (-1.0 + a * p)
            + 4.0 * ss * (-2.0 * a + a * a * p)
            + 2.0 * n1 * (-1.0 + b * p)
            + 4.0 * rr * (-2.0 * b + b * b * p))
    }
}

/// Max-norm error of the discrete solution of `−Δ_h u = −Δv` against `v` on `grid`.
pub fn manufactured_error(grid: &AxiGrid, m: &Manufactured) -> Result<f64> {
    use faer::linalg::solvers::Solve;
    let op = Operator::new(grid, m.dimension);
    let lu = op
        .to_sparse()?
        .sp_lu()
        .map_err(|e| Error::Linear(format!("{e:?}")))?;
    let rhs = faer::Col::<f64>::from_fn(grid.len(), |k| {
        let (s, r) = grid.coords(k);
        -m.laplacian(s, r)
    });
    let u = lu.solve(&rhs);
    Ok((0..grid.len())
        .map(|k| {
            let (s, r) = grid.coords(k);
            (u[k] - m.value(s, r)).abs()
        })
        .fold(0.0, f64::max))
}

/// Observed order `log₂(e_h / e_{h/2})` from uniform grids with `n_coarse` and `2n_coarse − 1`
/// nodes across the diameter.
pub fn manufactured_order(n_coarse: usize, m: &Manufactured) -> Result<(f64, f64, f64)> {
    let coarse = manufactured_error(&AxiGrid::uniform(n_coarse, n_coarse.div_ceil(2))?, m)?;
    let n_fine = 2 * n_coarse - 1;
    let fine = manufactured_error(&AxiGrid::uniform(n_fine, n_fine.div_ceil(2))?, m)?;
    Ok((coarse, fine, (coarse / fine).log2()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_has_zero_residual() {
        let g = AxiGrid::uniform(33, 17).unwrap();
        let f = assemble_residual(&g.to_field(&vec![0.0; g.len()]), 0.3, 3).unwrap();
        assert!(f.nodes().all(|(_, _, v)| v == 0.0));
    }

    #[test]
    fn quadratic_is_exact() {
        // v = 1 − s² − r² has −Δv = 2N; the stencils are exact on quadratics.
        for n in [3, 5] {
            let g =
                AxiGrid::graded(33, 17, &[(0.0, 0.01), (0.5, 0.01)], &[(0.0, 0.01)], 0.1).unwrap();
            let v = g.sample(|s, r| 1.0 - s * s - r * r);
            let lv = Operator::new(&g, n).apply(&v);
            for x in lv {
                assert!((x - 2.0 * n as f64).abs() < 1e-8 * 2.0 * n as f64, "{x}");
            }
        }
    }

    #[test]
    fn manufactured_laplacian_matches_finite_differences() {
        let m = Manufactured {
            a: 0.5,
            b: -0.7,
            dimension: 4,
        };
        let (s, r, h) = (0.3, 0.4, 1e-4);
        let fd = (m.value(s + h, r) - 2.0 * m.value(s, r) + m.value(s - h, r)) / (h * h)
            + (m.value(s, r + h) - 2.0 * m.value(s, r) + m.value(s, r - h)) / (h * h)
            + 2.0 / r * (m.value(s, r + h) - m.value(s, r - h)) / (2.0 * h);
        assert!((fd - m.laplacian(s, r)).abs() < 1e-5);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = AxiGrid::uniform(17, 9).unwrap();
        let mut f = g.to_field(&vec![1.0; g.len()]);
        f.mask[8][0] = false;
        assert!(matches!(
            assemble_residual(&f, 0.1, 3),
            Err(Error::Shape { .. })
        ));
    }
}

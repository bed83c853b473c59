//! Damped Newton, the Lyapunov–Schmidt continuation solver, and the ε ladder.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Mat};
use nalgebra::{Matrix3, Vector3};

use super::diagnostics::{
    axis_peaks, axis_sign_changes, boundary_normal_derivative, discrete_energy,
};
use super::grid::AxiGrid;
use super::operator::{exponent, max_abs, normalized_residual, residual_vec, Operator};
use super::{Branch, SolveResult};
use crate::field::Field2D;
use crate::geometry::projected_bubble_axial;
use crate::{Error, Result};

/// Largest spacing of the graded grids.
pub const GRID_HMAX: f64 = 0.08;
/// Cluster spacing in `s` is the bubble scale divided by this.
pub const GRID_REFINEMENT: f64 = 40.0;
/// Cluster spacing in `r` at the axis is the smaller bubble scale divided by this.
pub const GRID_REFINEMENT_R: f64 = 80.0;

const MAX_BACKTRACKS: usize = 8;
const INNER_MAX: usize = 30;
const OUTER_MAX: usize = 40;
const OUTER_TOL: f64 = 1e-9;
const KERNEL_STEP: f64 = 1e-6;
const JACOBIAN_STEP: f64 = 1e-4;
const MAX_LOG_SCALE_STEP: f64 = 0.5;
const MAX_RHO_STEP: f64 = 0.05;
const POLISH_MAX: usize = 20;

fn linear(e: impl std::fmt::Debug) -> Error {
    Error::Linear(format!("{e:?}"))
}

/// Sparse LU that keeps the symbolic factorization while the pattern stays the same.
#[derive(Default)]
struct Factorizer {
    symbolic: Option<(usize, SymbolicLu<usize>)>,
}

impl Factorizer {
    fn factor(&mut self, dim: usize, t: &[Triplet<usize, usize, f64>]) -> Result<Lu<usize, f64>> {
        let mat = SparseColMat::try_new_from_triplets(dim, dim, t).map_err(linear)?;
        let nnz = mat.compute_nnz();
        let symbolic = match &self.symbolic {
            Some((z, s)) if *z == nnz => s.clone(),
            _ => {
                let s = SymbolicLu::try_new(mat.symbolic()).map_err(linear)?;
                self.symbolic = Some((nnz, s.clone()));
                s
            }
        };
        Lu::try_new_with_symbolic(symbolic, mat.as_ref()).map_err(linear)
    }
}

fn solve(lu: &Lu<usize, f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let b = Col::<f64>::from_fn(rhs.len(), |k| rhs[k]);
    let x = lu.solve(&b);
    let out: Vec<f64> = (0..rhs.len()).map(|k| x[k]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Linear(
            "non-finite solution of a linearized system".into(),
        ));
    }
    Ok(out)
}

/// Grid, operator and factorizations for repeated solves on one grid.
pub struct Workspace {
    grid: AxiGrid,
    dimension: usize,
    op: Operator,
    weights: Vec<f64>,
    laplace: Lu<usize, f64>,
    jacobian: Factorizer,
}

struct NewtonOutcome {
    u: Vec<f64>,
    iterations: usize,
    residual: f64,
}

impl Workspace {
    pub fn new(grid: AxiGrid, dimension: usize) -> Result<Self> {
        if dimension < 3 {
            return Err(Error::domain(format!(
                "dimension must be at least 3, got {dimension}"
            )));
        }
        let op = Operator::new(&grid, dimension);
        let laplace = op.to_sparse()?.sp_lu().map_err(linear)?;
        let weights = grid.weights(dimension);
        Ok(Workspace {
            grid,
            dimension,
            op,
            weights,
            laplace,
            jacobian: Factorizer::default(),
        })
    }

    pub fn grid(&self) -> &AxiGrid {
        &self.grid
    }

    /// `‖(−Δ_h)⁻¹F(u)‖∞`, the merit function of the line search.
    fn merit(&self, u: &[f64], q: f64) -> Result<f64> {
        Ok(max_abs(&solve(
            &self.laplace,
            &residual_vec(&self.op, u, q),
        )?))
    }

    fn jacobian_triplets(&self, u: &[f64], q: f64) -> Vec<Triplet<usize, usize, f64>> {
        let shift: Vec<f64> = u.iter().map(|x| -(q + 1.0) * x.abs().powf(q)).collect();
        self.op.triplets_with_shift(&shift)
    }

    fn newton(
        &mut self,
        mut u: Vec<f64>,
        epsilon: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<NewtonOutcome> {
        let q = exponent(self.dimension, epsilon);
        let mut history = Vec::new();
        let mut merit = self.merit(&u, q)?;
        for it in 0..=max_iter {
            let f = residual_vec(&self.op, &u, q);
            let res = normalized_residual(&f, &u, q);
            history.push(res);
            if res < tol {
                return Ok(NewtonOutcome {
                    u,
                    iterations: it,
                    residual: res,
                });
            }
            if it == max_iter || !res.is_finite() {
                break;
            }
            let t = self.jacobian_triplets(&u, q);
            let lu = self.jacobian.factor(u.len(), &t)?;
            let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
            let du = solve(&lu, &rhs)?;
            let mut step = 1.0;
            for b in 0..=MAX_BACKTRACKS {
                let cand: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + step * d).collect();
                let m = self.merit(&cand, q)?;
                if m < merit || b == MAX_BACKTRACKS {
                    u = cand;
                    merit = m;
                    break;
                }
                step *= 0.5;
            }
        }
        Err(Error::NonConvergence {
            iterations: max_iter,
            history,
        })
    }

    fn result(
        &self,
        u: &[f64],
        epsilon: f64,
        iterations: usize,
        residual: f64,
        branch: Option<Branch>,
    ) -> SolveResult {
        let (peak_positive, neg) = axis_peaks(&self.grid, u);
        let center_value = self.grid.index(0, 0).map(|k| u[k]).unwrap_or(0.0);
        SolveResult {
            field: self.grid.to_field(u),
            epsilon,
            newton_iterations: iterations,
            final_residual: residual,
            peak_positive,
            peaks_negative: neg.map(|(s, v)| [(-s, v), (s, v)]),
            center_value,
            boundary_normal_derivative: boundary_normal_derivative(&self.grid, u),
            discrete_energy: discrete_energy(&self.op, &self.weights, u, epsilon, self.dimension),
            branch,
        }
    }
}

/// Damped Newton for `−Δ_h u = |u|^{4/(N−2)−ε}u` from `initial`.
///
/// Steps are halved (at most 8 times) until `‖(−Δ_h)⁻¹F‖∞` decreases. Convergence means
/// `‖F‖∞ / (1 + ‖|u|^q u‖∞) < tol`. A guess with at least two sign changes along the axis must
/// keep them.
pub fn newton_solve(
    initial: &Field2D,
    epsilon: f64,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SolveResult> {
    let grid = AxiGrid::from_field(initial)?;
    let u0 = grid.unknowns(initial)?;
    let mut ws = Workspace::new(grid, n)?;
    let seeded = axis_sign_changes(&ws.grid, &u0) >= 2;
    let out = ws.newton(u0, epsilon, tol, max_iter)?;
    let changes = axis_sign_changes(&ws.grid, &out.u);
    if seeded && changes < 2 {
        return Err(Error::SignStructureLost {
            sign_changes: changes,
        });
    }
    Ok(ws.result(&out.u, epsilon, out.iterations, out.residual, None))
}

/// Reduced parameters `p = (ln δ₀, ln δ₁, ρ)` of the ansatz
/// `PU_{δ₀,0} − PU_{δ₁,(ρ,0)} − PU_{δ₁,(−ρ,0)}`.
type Params = [f64; 3];

fn ansatz(grid: &AxiGrid, n: usize, p: &Params) -> Vec<f64> {
    let (d0, d1, rho) = (p[0].exp(), p[1].exp(), p[2]);
    grid.sample(|s, r| {
        projected_bubble_axial(s, r, 0.0, d0, n)
            - projected_bubble_axial(s, r, rho, d1, n)
            - projected_bubble_axial(s, r, -rho, d1, n)
    })
}

fn kernel(grid: &AxiGrid, n: usize, p: &Params) -> [Vec<f64>; 3] {
    std::array::from_fn(|k| {
        let (mut plus, mut minus) = (*p, *p);
        plus[k] += KERNEL_STEP;
        minus[k] -= KERNEL_STEP;
        let a = ansatz(grid, n, &plus);
        let b = ansatz(grid, n, &minus);
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y) / (2.0 * KERNEL_STEP))
            .collect()
    })
}

struct Projected {
    phi: Vec<f64>,
    multipliers: [f64; 3],
}

impl Workspace {
    /// Solves `−Δ_h(V + φ) − |V + φ|^q(V + φ) = Σ cₖYₖ` with `⟨Yₖ, φ⟩_W = 0`, where
    /// `Yₖ = (q+1)|V|^q Zₖ`, by Newton on the bordered system. Each step eliminates the border
    /// through the 3×3 Schur complement so only the sparse Jacobian is factored.
    fn project(
        &mut self,
        v: &[f64],
        z: &[Vec<f64>; 3],
        mut phi: Vec<f64>,
        q: f64,
    ) -> Result<Projected> {
        let n = v.len();
        let y: Vec<Vec<f64>> = z
            .iter()
            .map(|zk| {
                zk.iter()
                    .zip(v)
                    .map(|(a, b)| (q + 1.0) * b.abs().powf(q) * a)
                    .collect()
            })
            .collect();
        let yw: Vec<Vec<f64>> = y
            .iter()
            .map(|yk| yk.iter().zip(&self.weights).map(|(a, w)| a * w).collect())
            .collect();
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let mut c = [0.0; 3];
        for _ in 0..INNER_MAX {
            let u: Vec<f64> = v.iter().zip(&phi).map(|(a, b)| a + b).collect();
            let mut r1 = residual_vec(&self.op, &u, q);
            for (k, yk) in y.iter().enumerate() {
                for (r, yv) in r1.iter_mut().zip(yk) {
                    *r -= c[k] * yv;
                }
            }
            let lu = self.jacobian.factor(n, &self.jacobian_triplets(&u, q))?;
            let rhs =
                Mat::<f64>::from_fn(n, 4, |m, col| if col == 0 { -r1[m] } else { y[col - 1][m] });
            let x = lu.solve(&rhs);
            let xa: Vec<f64> = (0..n).map(|m| x[(m, 0)]).collect();
            let xy: Vec<Vec<f64>> = (1..4)
                .map(|col| (0..n).map(|m| x[(m, col)]).collect())
                .collect();
            let schur = Matrix3::from_fn(|a, b| dot(&yw[a], &xy[b]));
            let b = Vector3::from_fn(|a, _| -dot(&yw[a], &phi) - dot(&yw[a], &xa));
            let dc = schur
                .lu()
                .solve(&b)
                .ok_or(Error::Singular(schur.determinant()))?;
            let dphi: Vec<f64> = (0..n)
                .map(|m| xa[m] + dc[0] * xy[0][m] + dc[1] * xy[1][m] + dc[2] * xy[2][m])
                .collect();
            if dphi.iter().any(|x| !x.is_finite()) {
                return Err(Error::Linear(
                    "non-finite solution of a linearized system".into(),
                ));
            }
            for (p, dp) in phi.iter_mut().zip(&dphi) {
                *p += dp;
            }
            for k in 0..3 {
                c[k] += dc[k];
            }
            if max_abs(&dphi) < 1e-13 * max_abs(&u) {
                break;
            }
        }
        Ok(Projected {
            phi,
            multipliers: c,
        })
    }

    fn multipliers_at(&mut self, p: &Params, phi: &[f64], q: f64) -> Result<Projected> {
        let v = ansatz(&self.grid, self.dimension, p);
        let z = kernel(&self.grid, self.dimension, p);
        self.project(&v, &z, phi.to_vec(), q)
    }

    /// Adjusts `p` until the multipliers vanish; returns the parameters, `φ`, and the outer count.
    fn reduce(
        &mut self,
        mut p: Params,
        mut phi: Vec<f64>,
        epsilon: f64,
    ) -> Result<(Params, Vec<f64>, usize)> {
        let q = exponent(self.dimension, epsilon);
        let mut history = Vec::new();
        for it in 0..OUTER_MAX {
            let base = self.multipliers_at(&p, &phi, q)?;
            phi = base.phi;
            let c = Vector3::from(base.multipliers);
            history.push(c.amax());
            if c.amax() < OUTER_TOL {
                return Ok((p, phi, it));
            }
            let mut jac = Matrix3::zeros();
            for k in 0..3 {
                let mut pk = p;
                pk[k] += JACOBIAN_STEP;
                let ck = Vector3::from(self.multipliers_at(&pk, &phi, q)?.multipliers);
                jac.set_column(k, &((ck - c) / JACOBIAN_STEP));
            }
            let dp = jac
                .lu()
                .solve(&(-c))
                .ok_or(Error::Singular(jac.determinant()))?;
            let mut t = 1.0_f64;
            let scale_step = dp[0].abs().max(dp[1].abs());
            if scale_step > MAX_LOG_SCALE_STEP {
                t = MAX_LOG_SCALE_STEP / scale_step;
            }
            if (t * dp[2]).abs() > MAX_RHO_STEP {
                t = MAX_RHO_STEP / dp[2].abs();
            }
            for k in 0..3 {
                p[k] += t * dp[k];
            }
            if !(0.0..1.0).contains(&p[2]) {
                return Err(Error::NonConvergence {
                    iterations: it + 1,
                    history,
                });
            }
        }
        Err(Error::NonConvergence {
            iterations: OUTER_MAX,
            history,
        })
    }
}

/// Concentration scales `(δ₀, δ₁)` predicted for `branch` at `epsilon`.
pub fn predicted_scales(branch: Branch, n: usize, epsilon: f64) -> Result<(f64, f64)> {
    let fp = branch.fibered_point(n)?;
    let e = 1.0 / (n as f64 - 2.0);
    Ok((
        (fp.lambda * fp.lambda * epsilon).powf(e),
        (fp.mu * fp.mu * epsilon).powf(e),
    ))
}

/// Grid graded toward the three bubble centers, sized for the scales at `epsilon`.
pub fn branch_grid(
    branch: Branch,
    n: usize,
    epsilon: f64,
    (n_s_full, n_r): (usize, usize),
) -> Result<AxiGrid> {
    let (d0, d1) = predicted_scales(branch, n, epsilon)?;
    let rho = branch.fibered_point(n)?.rho;
    AxiGrid::graded(
        n_s_full,
        n_r,
        &[(0.0, d0 / GRID_REFINEMENT), (rho, d1 / GRID_REFINEMENT)],
        &[(0.0, d0.min(d1) / GRID_REFINEMENT_R)],
        GRID_HMAX,
    )
}

/// Carries a converged state from one ε to the next.
struct LadderState {
    epsilon: f64,
    p: Params,
    phi: Vec<f64>,
}

impl Workspace {
    /// Reduced solve at `epsilon` followed by the Newton polish of the full system.
    fn rung(
        &mut self,
        branch: Branch,
        epsilon: f64,
        prev: Option<LadderState>,
        tol: f64,
    ) -> Result<(SolveResult, LadderState)> {
        let n = self.dimension;
        let (p, phi) = match prev {
            None => {
                let (d0, d1) = predicted_scales(branch, n, epsilon)?;
                let rho = branch.fibered_point(n)?.rho;
                ([d0.ln(), d1.ln(), rho], vec![0.0; self.grid.len()])
            }
            Some(s) => {
                let ratio = epsilon / s.epsilon;
                let shift = ratio.ln() / (n as f64 - 2.0);
                let p = [s.p[0] + shift, s.p[1] + shift, s.p[2]];
                (p, s.phi.iter().map(|x| x * ratio.sqrt()).collect())
            }
        };
        let (p, phi, outer) = self.reduce(p, phi, epsilon)?;
        let v = ansatz(&self.grid, n, &p);
        let u0: Vec<f64> = v.iter().zip(&phi).map(|(a, b)| a + b).collect();
        let out = self.newton(u0, epsilon, tol, POLISH_MAX)?;
        let changes = axis_sign_changes(&self.grid, &out.u);
        if changes < 2 {
            return Err(Error::SignStructureLost {
                sign_changes: changes,
            });
        }
        let result = self.result(
            &out.u,
            epsilon,
            outer + out.iterations,
            out.residual,
            Some(branch),
        );
        // Keep the correction relative to the reduced ansatz for the next seed.
        let phi = out.u.iter().zip(&v).map(|(a, b)| a - b).collect();
        Ok((result, LadderState { epsilon, p, phi }))
    }
}

/// Geometric ladder `start_eps → end_eps` in `steps` rungs on the `branch` solution family.
///
/// Each rung solves the Lyapunov–Schmidt system (correction orthogonal to the ansatz tangent
/// directions, reduced parameters adjusted until the multipliers vanish), then polishes with
/// [`newton_solve`]'s damped Newton. Each converged rung seeds the next.
pub fn continue_in_epsilon(
    start_eps: f64,
    end_eps: f64,
    steps: usize,
    branch: Branch,
    n: usize,
    grid: &AxiGrid,
    tol: f64,
) -> Result<Vec<SolveResult>> {
    if !(start_eps > end_eps && end_eps > 0.0) {
        return Err(Error::domain(format!(
            "need start_eps > end_eps > 0, got {start_eps} and {end_eps}"
        )));
    }
    if steps < 2 {
        return Err(Error::domain("a ladder needs at least 2 steps"));
    }
    let mut ws = Workspace::new(grid.clone(), n)?;
    let mut state = None;
    let mut out = Vec::with_capacity(steps);
    for index in 0..steps {
        let epsilon = start_eps * (end_eps / start_eps).powf(index as f64 / (steps - 1) as f64);
        let (res, next) =
            ws.rung(branch, epsilon, state.take(), tol)
                .map_err(|e| Error::Ladder {
                    index,
                    epsilon,
                    source: Box::new(e),
                })?;
        out.push(res);
        state = Some(next);
    }
    Ok(out)
}

/// The ansatz of `branch` at `epsilon` on `grid`, as a full field.
pub fn branch_ansatz(branch: Branch, n: usize, epsilon: f64, grid: &AxiGrid) -> Result<Field2D> {
    let (d0, d1) = predicted_scales(branch, n, epsilon)?;
    let rho = branch.fibered_point(n)?.rho;
    Ok(grid.to_field(&ansatz(grid, n, &[d0.ln(), d1.ln(), rho])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_guess_is_a_fixed_point() {
        let g = AxiGrid::uniform(33, 17).unwrap();
        let r = newton_solve(&g.to_field(&vec![0.0; g.len()]), 0.3, 3, 1e-8, 10).unwrap();
        assert_eq!(r.newton_iterations, 0);
        assert_eq!(r.final_residual, 0.0);
        assert!(r.peaks_negative.is_none());
    }

    #[test]
    fn ladder_arguments_are_checked() {
        let g = AxiGrid::uniform(33, 17).unwrap();
        assert!(continue_in_epsilon(0.05, 0.3, 4, Branch::Rho2, 3, &g, 1e-8).is_err());
        assert!(continue_in_epsilon(0.3, 0.05, 1, Branch::Rho2, 3, &g, 1e-8).is_err());
    }
}

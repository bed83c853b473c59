//! Quantities read off a discrete solution: axis extrema, boundary normal derivative, energy.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::grid::AxiGrid;
use super::operator::{exponent, Operator};
use super::SolveResult;
use crate::format::{serialize_opt_sig17, serialize_sig17};
use crate::geometry::alpha_n;
use crate::{Error, Result};

/// Vertex of the parabola through three points.
fn parabola_vertex(p: [(f64, f64); 3]) -> (f64, f64) {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let f01 = (y1 - y0) / (x1 - x0);
    let f12 = (y2 - y1) / (x2 - x1);
    let f012 = (f12 - f01) / (x2 - x0);
    if f012 == 0.0 {
        return (x1, y1);
    }
    let x = 0.5 * (x0 + x1) - f01 / (2.0 * f012);
    let x = x.clamp(x0, x2);
    (x, y0 + f01 * (x - x0) + f012 * (x - x0) * (x - x1))
}

/// Refined extremum of `sign·u` along the axis `r = 0`, including the boundary value at `s = 1`.
fn axis_extremum(axis: &[(f64, f64)], sign: f64) -> Option<(f64, f64)> {
    let mut pts = axis.to_vec();
    pts.push((1.0, 0.0));
    let m = (0..pts.len()).max_by(|&a, &b| (sign * pts[a].1).total_cmp(&(sign * pts[b].1)))?;
    if sign * pts[m].1 <= 0.0 {
        return None;
    }
    if m == 0 {
        // Evenness in s: mirror the first neighbour.
        let (x1, y1) = pts[1];
        let (x, y) = parabola_vertex([(-x1, y1), pts[0], (x1, y1)]);
        return Some((x.abs(), y));
    }
    Some(parabola_vertex([pts[m - 1], pts[m], pts[m + 1]]))
}

/// `(s, u)` of the positive maximum and, when present, the negative minimum on `s ≥ 0`.
pub(crate) fn axis_peaks(grid: &AxiGrid, u: &[f64]) -> ((f64, f64), Option<(f64, f64)>) {
    let axis = grid.axis_values(u);
    let pos = axis_extremum(&axis, 1.0).unwrap_or((0.0, 0.0));
    (pos, axis_extremum(&axis, -1.0))
}

/// Number of sign changes of `u` along the whole diameter `−1 ≤ s ≤ 1`.
pub(crate) fn axis_sign_changes(grid: &AxiGrid, u: &[f64]) -> usize {
    let axis = grid.axis_values(u);
    let floor = 1e-12 * axis.iter().fold(0.0_f64, |m, p| m.max(p.1.abs()));
    let signs: Vec<bool> = axis
        .iter()
        .filter(|p| p.1.abs() > floor)
        .map(|p| p.1 > 0.0)
        .collect();
    let half = signs.windows(2).filter(|w| w[0] != w[1]).count();
    // The reflected half doubles every change off the center.
    2 * half
}

/// Derivative at `x0` of the quadratic through `(x0, 0)`, `(x1, f1)`, `(x2, f2)`.
fn one_sided(x0: f64, (x1, f1): (f64, f64), (x2, f2): (f64, f64)) -> f64 {
    f1 * (x0 - x2) / ((x1 - x0) * (x1 - x2)) + f2 * (x0 - x1) / ((x2 - x0) * (x2 - x1))
}

/// `(x₁, ∂_ν u)` at boundary points, sorted by the latitude `x₁ ∈ [0, 1]`.
///
/// Rows `r = r_j ≤ 1/√2` give `∂_ν u = ∂_s u / s_b` at `s_b = √(1 − r_j²)`; columns `s = s_i < 1/√2`
/// give `∂_r u / r_b`. Both use second-order one-sided differences through the zero boundary value.
pub(crate) fn boundary_normal_derivative(grid: &AxiGrid, u: &[f64]) -> Vec<(f64, f64)> {
    let s = grid.s_nodes();
    let r = grid.r_nodes();
    let edge = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for (j, &rj) in r.iter().enumerate() {
        if rj > edge {
            break;
        }
        let last = (0..s.len())
            .rev()
            .find_map(|i| grid.index(i, j).map(|k| (i, k)));
        if let Some((i, k)) = last {
            if i == 0 {
                continue;
            }
            let km = grid.index(i - 1, j).expect("row is contiguous");
            let sb = (1.0 - rj * rj).sqrt();
            out.push((sb, one_sided(sb, (s[i], u[k]), (s[i - 1], u[km])) / sb));
        }
    }
    for (i, &si) in s.iter().enumerate() {
        if si >= edge {
            break;
        }
        let last = (0..r.len())
            .rev()
            .find_map(|j| grid.index(i, j).map(|k| (j, k)));
        if let Some((j, k)) = last {
            if j == 0 {
                continue;
            }
            let km = grid.index(i, j - 1).expect("column is contiguous");
            let rb = (1.0 - si * si).sqrt();
            out.push((si, one_sided(rb, (r[j], u[k]), (r[j - 1], u[km])) / rb));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Signs of the samples from `x₁ = 0` to `x₁ = 1` with repeats collapsed, e.g. `"-+"`.
pub fn sign_pattern(samples: &[(f64, f64)]) -> String {
    let floor = 1e-9 * samples.iter().fold(0.0_f64, |m, p| m.max(p.1.abs()));
    let mut out = String::new();
    for &(_, v) in samples {
        if v.abs() <= floor {
            continue;
        }
        let c = if v > 0.0 { '+' } else { '-' };
        if !out.ends_with(c) {
            out.push(c);
        }
    }
    out
}

/// Area of the unit sphere `S^{N−2}`, the orbit measure of the meridian rotation.
fn orbit_area(n: usize) -> f64 {
    let k = (n as f64 - 1.0) / 2.0;
    2.0 * std::f64::consts::PI.powf(k) / gamma(k)
}

/// Discrete `J_ε(u) = ½∫|∇u|² − (1/(q+2))∫|u|^{q+2}` over the whole ball.
pub(crate) fn discrete_energy(
    op: &Operator,
    weights: &[f64],
    u: &[f64],
    epsilon: f64,
    n: usize,
) -> f64 {
    let q = exponent(n, epsilon);
    let lu = op.apply(u);
    let mut grad = 0.0;
    let mut pot = 0.0;
    for k in 0..u.len() {
        grad += weights[k] * u[k] * lu[k];
        pot += weights[k] * u[k].abs().powf(q + 2.0);
    }
    // Factor 2 for the reflected half s < 0.
    2.0 * orbit_area(n) * (0.5 * grad - pot / (q + 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Location of the negative extremum on the axis; the solution is even, so `−ρ̂` is the other.
    #[serde(serialize_with = "serialize_sig17")]
    pub rho_hat: f64,
    /// `u(0)·(λᵢ²ε)^{1/2}/α_N`, when the branch is known.
    #[serde(serialize_with = "serialize_opt_sig17")]
    pub height_scaling: Option<f64>,
    pub sign_pattern: String,
    #[serde(serialize_with = "serialize_sig17")]
    pub energy: f64,
}

pub fn extract_diagnostics(result: &SolveResult, n: usize) -> Result<Diagnostics> {
    let (rho_hat, _) = result
        .peaks_negative
        .map(|p| p[1])
        .ok_or_else(|| Error::Extraction("no negative extremum on the axis".into()))?;
    if (result.peaks_negative.unwrap()[0].0 + rho_hat).abs() > 1e-12 {
        return Err(Error::Extraction(
            "negative peaks are not symmetric in s".into(),
        ));
    }
    let height_scaling = match result.branch {
        Some(b) => {
            let fp = b.fibered_point(n)?;
            let center = result.center_value;
            Some(center * (fp.lambda * fp.lambda * result.epsilon).sqrt() / alpha_n(n))
        }
        None => None,
    };
    Ok(Diagnostics {
        rho_hat,
        height_scaling,
        sign_pattern: sign_pattern(&result.boundary_normal_derivative),
        energy: result.discrete_energy,
    })
}

/// One record of a ladder export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRecord {
    #[serde(serialize_with = "serialize_sig17")]
    pub epsilon: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub rho_hat: f64,
    #[serde(serialize_with = "serialize_opt_sig17")]
    pub height_scaling: Option<f64>,
    #[serde(serialize_with = "serialize_sig17")]
    pub residual: f64,
    pub iterations: usize,
    #[serde(serialize_with = "serialize_sig17")]
    pub energy: f64,
    pub sign_pattern: String,
}

impl LadderRecord {
    pub fn new(result: &SolveResult, d: &Diagnostics) -> Self {
        LadderRecord {
            epsilon: result.epsilon,
            rho_hat: d.rho_hat,
            height_scaling: d.height_scaling,
            residual: result.final_residual,
            iterations: result.newton_iterations,
            energy: d.energy,
            sign_pattern: d.sign_pattern.clone(),
        }
    }
}

pub fn ladder_to_json(records: &[LadderRecord]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("records serialize");
    s.push('\n');
    s
}

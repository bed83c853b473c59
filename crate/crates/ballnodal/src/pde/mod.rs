//! Finite-difference solutions of `−Δu = |u|^{2*−2−ε}u` in the unit ball, restricted to fields
//! that are axisymmetric about the `x₁`-axis and even in `x₁`.
//!
//! Such fields are functions of `(s, r) = (x₁, |x'|)` on the meridian half disk, where the
//! Laplacian reads `u_ss + u_rr + ((N−2)/r)u_r`.

mod diagnostics;
mod grid;
mod operator;
mod solver;

use serde::{Deserialize, Serialize};

pub use diagnostics::{
    extract_diagnostics, ladder_to_json, sign_pattern, Diagnostics, LadderRecord,
};
pub use grid::{graded_nodes, AxiGrid};
pub use operator::{
    assemble_residual, exponent, manufactured_error, manufactured_order, Manufactured, Operator,
};
pub use solver::{
    branch_ansatz, branch_grid, continue_in_epsilon, newton_solve, predicted_scales, Workspace,
    GRID_HMAX, GRID_REFINEMENT, GRID_REFINEMENT_R,
};

use crate::critical::find_critical_rhos;
use crate::field::Field2D;
use crate::reduced::{fibered_point, FiberedPoint, ReducedConfig};
use crate::Result;

/// Which critical radius seeds the solution family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Branch {
    Rho1,
    Rho2,
}

impl Branch {
    pub fn critical_rho(self, n: usize) -> Result<f64> {
        let (r1, r2) = find_critical_rhos(n, 1e-14)?;
        Ok(if self == Branch::Rho1 { r1 } else { r2 })
    }

    /// `(ρᵢ, Λ, λ, μ)` with the physical constant `c_N`.
    pub fn fibered_point(self, n: usize) -> Result<FiberedPoint> {
        fibered_point(self.critical_rho(n)?, &ReducedConfig::physical(n)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Solution on the full meridian `[−1, 1] × [0, 1]`.
    pub field: Field2D,
    pub epsilon: f64,
    pub newton_iterations: usize,
    /// `‖F‖∞ / (1 + ‖|u|^q u‖∞)` at the returned field.
    pub final_residual: f64,
    /// `(s, u)` of the positive maximum on the axis.
    pub peak_positive: (f64, f64),
    /// `(±ρ̂, u)` of the negative minima on the axis.
    pub peaks_negative: Option<[(f64, f64); 2]>,
    pub center_value: f64,
    /// `(x₁, ∂_ν u)` on the boundary, `x₁` from 0 to 1.
    pub boundary_normal_derivative: Vec<(f64, f64)>,
    pub discrete_energy: f64,
    pub branch: Option<Branch>,
}

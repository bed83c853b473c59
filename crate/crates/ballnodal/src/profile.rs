//! Limit profile `φ(ρ,·)`, its boundary normal derivative `(N−2)ψ`, and the
//! sign classification of that derivative.

use serde::{Deserialize, Serialize};

use crate::field::{linspace, Field2D};
use crate::geometry::{
    alpha_n, boundary_normal_derivative_of_g, green_axial, projected_bubble_axial, Point,
};
use crate::reduced::{self, fibered_point, ReducedConfig};
use crate::{Error, Result};

/// Attached to the `ρ₁` classification. The computed pairing is the reverse of the usual
/// statement of the main result, which gives the sign-changing normal derivative to the
/// first solution.
pub const LABELING_NOTE: &str = "labeling discrepancy: the computed classification gives rho1 -> NO_SIGN_CHANGE_POSITIVE \
and rho2 -> CHANGES_SIGN (m(rho1) > 0, m(rho2) < 0 < M(rho2)); the theorem statement attributes the \
sign-changing normal derivative to u_1 and the one-signed one to u_2. Reported as computed.";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub rho: f64,
    #[serde(rename = "Lambda")]
    pub cap_lambda: f64,
    pub dimension: usize,
}

impl ProfileSpec {
    pub fn new(rho: f64, dimension: usize) -> Result<Self> {
        let cap_lambda = reduced::capital_lambda(rho, dimension)?;
        Ok(ProfileSpec {
            rho,
            cap_lambda,
            dimension,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundaryKind {
    NoSignChangePositive,
    NoSignChangeNegative,
    ChangesSign,
}

impl BoundaryKind {
    pub fn label(self) -> &'static str {
        match self {
            BoundaryKind::NoSignChangePositive => "NO_SIGN_CHANGE_POSITIVE",
            BoundaryKind::NoSignChangeNegative => "NO_SIGN_CHANGE_NEGATIVE",
            BoundaryKind::ChangesSign => "CHANGES_SIGN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryClassification {
    pub kind: BoundaryKind,
    pub m_value: f64,
    #[serde(rename = "M_value")]
    pub big_m_value: f64,
    /// `±x₁*` where `ψ` vanishes; empty unless the kind is `ChangesSign`.
    pub zero_latitudes: Vec<f64>,
    pub annotation: Option<String>,
}

/// `ψ(ρ,x₁) = −Λ(ρ) + (1−ρ²)((ρ²+1−2ρx₁)^{−N/2} + (ρ²+1+2ρx₁)^{−N/2})`.
pub fn psi(rho: f64, x1: f64, n: usize) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x1) {
        return Err(Error::domain(format!("x1 = {x1} is outside [-1, 1]")));
    }
    let cl = reduced::capital_lambda(rho, n)?;
    Ok(psi_with(cl, rho, x1, n))
}

fn psi_with(cl: f64, rho: f64, x1: f64, n: usize) -> f64 {
    let h = -(n as f64) / 2.0;
    let b = rho * rho + 1.0;
    -cl + (1.0 - rho * rho) * ((b - 2.0 * rho * x1).powf(h) + (b + 2.0 * rho * x1).powf(h))
}

/// `m(ρ) = ψ(ρ, 0)`.
pub fn little_m(rho: f64, n: usize) -> Result<f64> {
    reduced::little_m(rho, n)
}

/// `M(ρ) = ψ(ρ, 1)`.
pub fn big_m(rho: f64, n: usize) -> Result<f64> {
    reduced::big_m(rho, n)
}

/// Index of the critical radius: `1` below `1/2`, `2` above.
fn branch_index(rho: f64) -> u8 {
    if rho < 0.5 {
        1
    } else {
        2
    }
}

pub fn classify_boundary(rho_star: f64, n: usize) -> Result<BoundaryClassification> {
    let m = little_m(rho_star, n)?;
    let big = big_m(rho_star, n)?;
    if m.abs() < 1e-12 || big.abs() < 1e-12 {
        return Err(Error::Ambiguous {
            rho: rho_star,
            m,
            big_m: big,
        });
    }
    let (kind, zeros) = if m > 0.0 {
        (BoundaryKind::NoSignChangePositive, vec![])
    } else if big < 0.0 {
        (BoundaryKind::NoSignChangeNegative, vec![])
    } else {
        let cl = reduced::capital_lambda(rho_star, n)?;
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if psi_with(cl, rho_star, mid, n) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        (BoundaryKind::ChangesSign, vec![-x, x])
    };
    let annotation = (branch_index(rho_star) == 1).then(|| LABELING_NOTE.to_string());
    Ok(BoundaryClassification {
        kind,
        m_value: m,
        big_m_value: big,
        zero_latitudes: zeros,
        annotation,
    })
}

/// `φ(ρ,x) = ΛG(x,0) − G(x,(ρ,0)) − G(x,(−ρ,0))` at the meridian point `(s, r)`.
pub fn phi_value(spec: &ProfileSpec, s: f64, r: f64) -> f64 {
    let n = spec.dimension;
    spec.cap_lambda * green_axial(s, r, 0.0, n)
        - green_axial(s, r, spec.rho, n)
        - green_axial(s, r, -spec.rho, n)
}

/// `∂_ν φ` at the boundary point with first coordinate `x1`, assembled from the kernels
/// `∂_ν G`; equals `(N−2)ψ(ρ, x1)`.
pub fn phi_boundary_normal_derivative(spec: &ProfileSpec, x1: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x1) {
        return Err(Error::domain(format!("x1 = {x1} is outside [-1, 1]")));
    }
    let n = spec.dimension;
    let x = Point::meridian(x1, (1.0 - x1 * x1).max(0.0).sqrt(), n);
    let g = |c: f64| boundary_normal_derivative_of_g(&x, &Point::on_axis(c, n), n);
    Ok(spec.cap_lambda * g(0.0)? - g(spec.rho)? - g(-spec.rho)?)
}

fn away_from_centers(spec: &ProfileSpec) -> impl Fn(f64, f64) -> bool + Sync {
    let rho = spec.rho;
    move |s: f64, r: f64| {
        let near = |c: f64| (s - c).abs() < 1e-12 && r < 1e-12;
        !(near(0.0) || near(rho) || near(-rho))
    }
}

fn check_grid(grid: (usize, usize)) -> Result<()> {
    if grid.0 < 16 || grid.1 < 16 {
        return Err(Error::domain(format!(
            "grid {}x{} is below the 16x16 minimum",
            grid.0, grid.1
        )));
    }
    Ok(())
}

/// `φ` on a uniform `grid.0 × grid.1` sampling of `[−1,1] × [0,1]`, masked outside the disk
/// and at the three poles.
pub fn phi_field(spec: &ProfileSpec, grid: (usize, usize)) -> Result<Field2D> {
    check_grid(grid)?;
    let sp = *spec;
    Ok(Field2D::sample(
        linspace(-1.0, 1.0, grid.0),
        linspace(0.0, 1.0, grid.1),
        away_from_centers(spec),
        move |s, r| phi_value(&sp, s, r),
    ))
}

/// Concentration scales `(δ₀, δ₁)` of the central and the two outer bubbles:
/// `δ^{N−2} = λ²ε` and `δ^{N−2} = μ²ε`.
pub fn bubble_scales(spec: &ProfileSpec, epsilon: f64, cfg: &ReducedConfig) -> Result<(f64, f64)> {
    let fp = fibered_point(spec.rho, cfg)?;
    let e = 1.0 / (spec.dimension as f64 - 2.0);
    Ok((
        (fp.lambda * fp.lambda * epsilon).powf(e),
        (fp.mu * fp.mu * epsilon).powf(e),
    ))
}

/// `PU_{δ₀,0} − PU_{δ₁,(ρ,0)} − PU_{δ₁,(−ρ,0)}` at the meridian point `(s, r)`.
pub fn ansatz_value(n: usize, rho: f64, d0: f64, d1: f64, s: f64, r: f64) -> f64 {
    projected_bubble_axial(s, r, 0.0, d0, n)
        - projected_bubble_axial(s, r, rho, d1, n)
        - projected_bubble_axial(s, r, -rho, d1, n)
}

/// The approximate solution `V^ε` (projected bubbles only, no correction term).
pub fn ansatz_field(
    spec: &ProfileSpec,
    epsilon: f64,
    cfg: &ReducedConfig,
    grid: (usize, usize),
) -> Result<Field2D> {
    check_grid(grid)?;
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if cfg.dimension != spec.dimension {
        return Err(Error::domain(
            "configuration dimension differs from the profile",
        ));
    }
    let (d0, d1) = bubble_scales(spec, epsilon, cfg)?;
    let (n, rho) = (spec.dimension, spec.rho);
    Ok(Field2D::sample(
        linspace(-1.0, 1.0, grid.0),
        linspace(0.0, 1.0, grid.1),
        away_from_centers(spec),
        move |s, r| ansatz_value(n, rho, d0, d1, s, r),
    ))
}

/// Warning text when a bubble scale exceeds a tenth of its center's distance to the boundary.
pub fn ansatz_regime_warning(
    spec: &ProfileSpec,
    epsilon: f64,
    cfg: &ReducedConfig,
) -> Result<Option<String>> {
    let (d0, d1) = bubble_scales(spec, epsilon, cfg)?;
    let d_outer = 1.0 - spec.rho;
    let mut msgs = Vec::new();
    if d0 > 0.1 {
        msgs.push(format!(
            "central bubble scale {d0:.3e} exceeds 0.1 x distance to boundary (1)"
        ));
    }
    if d1 > 0.1 * d_outer {
        msgs.push(format!(
            "outer bubble scale {d1:.3e} exceeds 0.1 x distance to boundary ({d_outer:.3e})"
        ));
    }
    Ok((!msgs.is_empty()).then(|| msgs.join("; ")))
}

/// `α_N μ √ε`, the factor that turns `V^ε` into an approximation of `φ` away from the poles.
pub fn profile_scale(spec: &ProfileSpec, epsilon: f64, cfg: &ReducedConfig) -> Result<f64> {
    let fp = fibered_point(spec.rho, cfg)?;
    Ok(alpha_n(spec.dimension) * fp.mu * epsilon.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::find_critical_rhos;

    #[test]
    fn m_values_three() {
        assert!((little_m(0.5, 3).unwrap() - 0.397161).abs() < 1e-6);
        assert!((little_m(crate::RHO_BAR, 3).unwrap() + 0.206114).abs() < 1e-6);
    }

    #[test]
    fn psi_ends_are_m_and_big_m() {
        for n in [3, 8] {
            let r = 0.6;
            assert!((psi(r, 0.0, n).unwrap() - little_m(r, n).unwrap()).abs() < 1e-12);
            assert!(
                (psi(r, 1.0, n).unwrap() - big_m(r, n).unwrap()).abs()
                    < 1e-9 * big_m(r, n).unwrap().abs()
            );
            assert!((psi(r, 0.3, n).unwrap() - psi(r, -0.3, n).unwrap()).abs() == 0.0);
        }
    }

    #[test]
    fn classifications_three() {
        let (r1, r2) = find_critical_rhos(3, 1e-12).unwrap();
        let a = classify_boundary(r1, 3).unwrap();
        let b = classify_boundary(r2, 3).unwrap();
        assert_eq!(a.kind, BoundaryKind::NoSignChangePositive);
        assert!(a.annotation.is_some());
        assert_eq!(b.kind, BoundaryKind::ChangesSign);
        assert!(b.annotation.is_none());
        let x = b.zero_latitudes[1];
        assert!(psi(r2, x, 3).unwrap().abs() < 1e-12);
    }

    #[test]
    fn assembled_normal_derivative_is_psi() {
        for n in [3, 7] {
            let spec = ProfileSpec::new(0.6, n).unwrap();
            for x1 in [-1.0, -0.3, 0.0, 0.45, 1.0] {
                let a = phi_boundary_normal_derivative(&spec, x1).unwrap();
                let b = (n as f64 - 2.0) * psi(0.6, x1, n).unwrap();
                assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "{a} {b}");
            }
        }
    }

    #[test]
    fn phi_signs_near_poles() {
        let spec = ProfileSpec::new(0.67, 3).unwrap();
        assert!(phi_value(&spec, 0.01, 0.0) > 0.0);
        assert!(phi_value(&spec, 0.66, 0.0) < 0.0);
        assert!(phi_field(&spec, (15, 20)).is_err());
    }

    #[test]
    fn ansatz_center_value() {
        let spec = ProfileSpec::new(0.67, 3).unwrap();
        let cfg = ReducedConfig::unit(3).unwrap();
        let eps = 1e-3;
        let (d0, _) = bubble_scales(&spec, eps, &cfg).unwrap();
        let v = ansatz_value(3, 0.67, d0, d0, 0.0, 0.0);
        let lead = alpha_n(3) * d0.powf(-0.5);
        assert!((v - lead).abs() < 1e-2 * lead);
    }
}

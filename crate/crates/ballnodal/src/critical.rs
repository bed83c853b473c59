//! Zeros of `α` and `χ`, and the Morse data of the reduced energy at the critical radii.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::reduced::{self, chi, chi_prime, fibered_point, hess_f, ReducedConfig};
use crate::{Error, Result, GUARD, RHO_BAR};

/// Width to which every bracket is bisected before the Newton polish.
pub const BISECTION_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CriticalKind {
    Saddle,
    Minimum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    pub which: CriticalKind,
    pub rho: f64,
    pub lambda: f64,
    pub mu: f64,
    pub chi_residual: f64,
    /// Eigenvalues of the diagonally normalized Hessian `D^{-1/2} H D^{-1/2}`, `D = diag|Hᵢᵢ|`.
    /// They carry the Morse index and do not change under rescaling of `λ`, `μ` or `c_N`.
    pub hessian_eigenvalues: [f64; 3],
    pub morse_index: usize,
    pub degree: i32,
    pub nondegeneracy_margin: f64,
    /// Determinant of the `(λ, μ)` block of the Hessian.
    pub lambda_mu_determinant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Brackets {
    pub rho0: f64,
    pub rho1_bracket: (f64, f64),
    pub rho2_bracket: (f64, f64),
    /// Sign changes of `χ` seen on a scan of each bracket; `1` is the expected count.
    pub sign_changes_in_brackets: (usize, usize),
}

fn alpha_unchecked(rho: f64, n: usize) -> f64 {
    reduced::alpha(rho, n).expect("rho inside (0,1)")
}

/// Bisection to `tol` on a bracket with `f(lo) < 0 < f(hi)` after orientation.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let increasing = f(lo) < 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if (v < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zero of `α` in `(0, 1/2)`.
pub fn find_rho0(n: usize, tol: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::domain(format!(
            "dimension must be at least 3, got {n}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let a_half = alpha_unchecked(0.5, n);
    if !(a_half > 0.0) {
        return Err(Error::Bracket(format!(
            "alpha(1/2) = {a_half:e} is not positive for N = {n}"
        )));
    }
    let mut lo = 0.25;
    while alpha_unchecked(lo, n) >= 0.0 {
        lo *= 0.5;
        if lo < 1e-8 {
            return Err(Error::Bracket(format!(
                "alpha has no negative values near 0 for N = {n}"
            )));
        }
    }
    let mut root = bisect(|r| alpha_unchecked(r, n), lo, 0.5, tol.min(BISECTION_WIDTH));
    // α(root) may still be slightly negative; nudge into the domain where Λ is defined.
    while alpha_unchecked(root, n) <= 0.0 {
        root = root.next_up();
    }
    Ok(root)
}

fn chi_unchecked(rho: f64, n: usize) -> f64 {
    chi(rho, n).expect("rho above rho0")
}

fn count_sign_changes(values: impl Iterator<Item = f64>) -> usize {
    let mut last: Option<bool> = None;
    let mut count = 0;
    for v in values {
        if v == 0.0 {
            continue;
        }
        let s = v > 0.0;
        if let Some(prev) = last {
            if prev != s {
                count += 1;
            }
        }
        last = Some(s);
    }
    count
}

/// Sign-checked brackets for `ρ₁ ∈ [ρ₀+δ_g, 1/2]` and `ρ₂ ∈ [ρ̄, 1−δ_g]`.
pub fn brackets(n: usize) -> Result<Brackets> {
    let rho0 = find_rho0(n, BISECTION_WIDTH)?;
    let a = rho0 + GUARD;
    let b = 1.0 - GUARD;
    let (ca, ch, cb, cbar) = (
        chi_unchecked(a, n),
        chi_unchecked(0.5, n),
        chi_unchecked(b, n),
        chi_unchecked(RHO_BAR, n),
    );
    if !(ca > 0.0) {
        return Err(Error::Bracket(format!(
            "chi(rho0 + guard) = {ca:e} is not positive for N = {n}"
        )));
    }
    if !(ch < 0.0) {
        return Err(Error::Bracket(format!(
            "chi(1/2) = {ch:e} is not negative for N = {n}"
        )));
    }
    if !(cbar < 0.0) {
        return Err(Error::Bracket(format!(
            "chi(rho_bar) = {cbar:e} is not negative for N = {n}"
        )));
    }
    if !(cb > 0.0) {
        return Err(Error::Bracket(format!(
            "chi(1 - guard) = {cb:e} is not positive for N = {n}"
        )));
    }
    let scan = |lo: f64, hi: f64| {
        let k = 2000;
        count_sign_changes((0..=k).map(|i| chi_unchecked(lo + (hi - lo) * i as f64 / k as f64, n)))
    };
    Ok(Brackets {
        rho0,
        rho1_bracket: (a, 0.5),
        rho2_bracket: (RHO_BAR, b),
        sign_changes_in_brackets: (scan(a, 0.5), scan(RHO_BAR, b)),
    })
}

/// Bisection on a proved sign bracket, then a Newton polish that is kept only if it
/// stays inside the final bracket and lowers `|χ|`, then a walk to the adjacent double
/// with the smallest `|χ|`.
fn refine_chi_root(n: usize, lo: f64, hi: f64, tol: f64) -> f64 {
    let w = tol.min(BISECTION_WIDTH);
    let mut x = bisect(|r| chi_unchecked(r, n), lo, hi, w);
    let (blo, bhi) = (x - w, x + w);
    for _ in 0..4 {
        let fx = chi_unchecked(x, n);
        let dfx = chi_prime(x, n).expect("rho above rho0");
        if fx == 0.0 || !dfx.is_finite() || dfx == 0.0 {
            break;
        }
        let next = x - fx / dfx;
        if !(next > blo && next < bhi) || chi_unchecked(next, n).abs() >= fx.abs() {
            break;
        }
        x = next;
    }
    let mut best = chi_unchecked(x, n).abs();
    for _ in 0..64 {
        let (a, b) = (x.next_down(), x.next_up());
        let (fa, fb) = (chi_unchecked(a, n).abs(), chi_unchecked(b, n).abs());
        if fa < best && fa <= fb {
            (x, best) = (a, fa);
        } else if fb < best {
            (x, best) = (b, fb);
        } else {
            break;
        }
    }
    x
}

/// `(ρ₁, ρ₂)`: the zeros of `χ` with `ρ₀ < ρ₁ < 1/2 < ρ̄ < ρ₂ < 1`.
pub fn find_critical_rhos(n: usize, tol: f64) -> Result<(f64, f64)> {
    let br = brackets(n)?;
    let r1 = refine_chi_root(n, br.rho1_bracket.0, br.rho1_bracket.1, tol);
    let r2 = refine_chi_root(n, br.rho2_bracket.0, br.rho2_bracket.1, tol);
    Ok((r1, r2))
}

/// Morse data of `F` at the fibered point over `rho_star`.
pub fn classify(rho_star: f64, n: usize, cfg: &ReducedConfig) -> Result<CriticalPointRecord> {
    if cfg.dimension != n {
        return Err(Error::domain("configuration dimension differs from N"));
    }
    let fp = fibered_point(rho_star, cfg)?;
    let p = fp.reduced();
    let h = hess_f(&p, cfg)?;
    let d = Matrix3::from_diagonal(&Vector3::from_fn(|i, _| h[(i, i)].abs().sqrt().recip()));
    let scaled = d * h * d;
    let mut eig: Vec<f64> = SymmetricEigen::new(scaled)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(f64::total_cmp);
    let min_abs = eig.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
    let max_abs = eig.iter().map(|e| e.abs()).fold(0.0, f64::max);
    if !(min_abs >= 1e-8 * max_abs) {
        return Err(Error::Degenerate {
            rho: rho_star,
            min_abs,
            max_abs,
        });
    }
    let morse_index = eig.iter().filter(|&&e| e < 0.0).count();
    let degree = if h.determinant() > 0.0 { 1 } else { -1 };
    let block = h.fixed_view::<2, 2>(0, 0).determinant();
    Ok(CriticalPointRecord {
        which: if rho_star < 0.5 {
            CriticalKind::Saddle
        } else {
            CriticalKind::Minimum
        },
        rho: rho_star,
        lambda: fp.lambda,
        mu: fp.mu,
        chi_residual: chi_unchecked(rho_star, n).abs(),
        hessian_eigenvalues: [eig[0], eig[1], eig[2]],
        morse_index,
        degree,
        nondegeneracy_margin: min_abs,
        lambda_mu_determinant: block,
    })
}

/// `χ` on a uniform mesh of `(ρ₀ + δ_g, 1 − δ_g)` with `mesh` points.
pub fn scan_chi(n: usize, mesh: usize) -> Result<Vec<(f64, f64)>> {
    if mesh < 100 {
        return Err(Error::domain(format!(
            "scan mesh must have at least 100 points, got {mesh}"
        )));
    }
    let rho0 = find_rho0(n, BISECTION_WIDTH)?;
    let (a, b) = (rho0 + GUARD, 1.0 - GUARD);
    Ok((0..mesh)
        .map(|i| {
            let r = a + (b - a) * i as f64 / (mesh - 1) as f64;
            (r, chi_unchecked(r, n))
        })
        .collect())
}

/// Number of sign changes in a `(ρ, χ)` scan.
pub fn scan_sign_changes(scan: &[(f64, f64)]) -> usize {
    count_sign_changes(scan.iter().map(|p| p.1))
}

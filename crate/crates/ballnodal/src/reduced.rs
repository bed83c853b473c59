//! Closed forms of the reduced energy
//! `F(λ,μ,ρ) = λ² + 2μ²α(ρ) + 4λμβ(ρ) − c ln λ − 2c ln μ`
//! and the one-variable functions obtained by eliminating `λ` and `μ`.

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedConfig {
    pub dimension: usize,
    pub c_n: f64,
}

impl ReducedConfig {
    pub fn new(dimension: usize, c_n: f64) -> Result<Self> {
        if dimension < 3 {
            return Err(Error::domain(format!(
                "dimension must be at least 3, got {dimension}"
            )));
        }
        if !(c_n > 0.0 && c_n.is_finite()) {
            return Err(Error::domain(format!("c_N must be positive, got {c_n}")));
        }
        Ok(ReducedConfig { dimension, c_n })
    }

    /// `c_N = 1`; every radius and classification is independent of this choice.
    pub fn unit(dimension: usize) -> Result<Self> {
        Self::new(dimension, 1.0)
    }

    /// The value of `c_N` produced by the energy expansion of actual bubbles,
    /// `c_N = (N−2)/N · Γ(N/2)Γ(N/2+1)/Γ(N)` (equal to `π/16` for `N = 3`).
    ///
    /// Needed whenever `λ` and `μ` are turned into concentration scales of a PDE solution.
    pub fn physical(dimension: usize) -> Result<Self> {
        Self::new(dimension, physical_c_n(dimension))
    }
}

pub fn physical_c_n(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    (n as f64 - 2.0) / n as f64 * gamma(h) * gamma(h + 1.0) / gamma(n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    pub lambda: f64,
    pub mu: f64,
    pub rho: f64,
}

impl ReducedPoint {
    pub fn new(lambda: f64, mu: f64, rho: f64) -> Result<Self> {
        if !(lambda > 0.0 && mu > 0.0 && rho > 0.0 && rho < 1.0) {
            return Err(Error::domain(format!(
                "({lambda}, {mu}, {rho}) is outside (0,∞)×(0,∞)×(0,1)"
            )));
        }
        Ok(ReducedPoint { lambda, mu, rho })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberedPoint {
    pub rho: f64,
    #[serde(rename = "Lambda")]
    pub cap_lambda: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl FiberedPoint {
    pub fn reduced(&self) -> ReducedPoint {
        ReducedPoint {
            lambda: self.lambda,
            mu: self.mu,
            rho: self.rho,
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("rho = {rho} is outside (0,1)")))
    }
}

/// `base^e` through `exp(e ln base)`; the usual form loses nothing, this one
/// keeps large exponents from producing spurious NaN when `base` underflows.
#[inline]
fn pw(base: f64, e: f64) -> f64 {
    (e * base.ln()).exp()
}

#[inline]
fn k_of(n: usize) -> f64 {
    n as f64 - 2.0
}

fn alpha_raw(rho: f64, n: usize) -> f64 {
    let k = k_of(n);
    let r2 = rho * rho;
    pw(1.0 - r2, -k) - pw(2.0 * rho, -k) + pw(1.0 + r2, -k)
}

fn beta_raw(rho: f64, n: usize) -> f64 {
    pw(rho, -k_of(n)) - 1.0
}

fn alpha_prime_raw(rho: f64, n: usize) -> f64 {
    let k = k_of(n);
    let r2 = rho * rho;
    k * (2.0 * rho * pw(1.0 - r2, -k - 1.0) + 2.0 * pw(2.0 * rho, -k - 1.0)
        - 2.0 * rho * pw(1.0 + r2, -k - 1.0))
}

fn beta_prime_raw(rho: f64, n: usize) -> f64 {
    let k = k_of(n);
    -k * pw(rho, -k - 1.0)
}

fn alpha_second_raw(rho: f64, n: usize) -> f64 {
    let k = k_of(n);
    let r2 = rho * rho;
    let a = 1.0 - r2;
    let b = 1.0 + r2;
    2.0 * k * (pw(a, -k - 1.0) + 2.0 * (k + 1.0) * r2 * pw(a, -k - 2.0))
        - 4.0 * k * (k + 1.0) * pw(2.0 * rho, -k - 2.0)
        - 2.0 * k * (pw(b, -k - 1.0) - 2.0 * (k + 1.0) * r2 * pw(b, -k - 2.0))
}

fn beta_second_raw(rho: f64, n: usize) -> f64 {
    let k = k_of(n);
    k * (k + 1.0) * pw(rho, -k - 2.0)
}

/// `α(ρ) = (1−ρ²)^{2−N} − (2ρ)^{2−N} + (1+ρ²)^{2−N}`.
pub fn alpha(rho: f64, n: usize) -> Result<f64> {
    check_rho(rho)?;
    Ok(alpha_raw(rho, n))
}

/// `β(ρ) = ρ^{2−N} − 1`.
pub fn beta(rho: f64, n: usize) -> Result<f64> {
    check_rho(rho)?;
    Ok(beta_raw(rho, n))
}

pub fn alpha_prime(rho: f64, n: usize) -> Result<f64> {
    check_rho(rho)?;
    Ok(alpha_prime_raw(rho, n))
}

pub fn beta_prime(rho: f64, n: usize) -> Result<f64> {
    check_rho(rho)?;
    Ok(beta_prime_raw(rho, n))
}

pub fn alpha_second(rho: f64, n: usize) -> Result<f64> {
    check_rho(rho)?;
    Ok(alpha_second_raw(rho, n))
}

pub fn beta_second(rho: f64, n: usize) -> Result<f64> {
    check_rho(rho)?;
    Ok(beta_second_raw(rho, n))
}

/// Positive root of `Λ² + βΛ − α = 0`; defined for `α(ρ) > 0`.
pub fn capital_lambda(rho: f64, n: usize) -> Result<f64> {
    check_rho(rho)?;
    let a = alpha_raw(rho, n);
    if !(a > 0.0) {
        return Err(Error::domain(format!(
            "alpha({rho}) = {a:e} is not positive (rho <= rho0)"
        )));
    }
    let b = beta_raw(rho, n);
    // (√(β²+4α) − β)/2 rewritten to avoid cancellation when 4α ≪ β².
    Ok(2.0 * a / ((b * b + 4.0 * a).sqrt() + b))
}

/// `Λ′ = (α′ − β′Λ)/√(β² + 4α)`.
pub fn lambda_prime(rho: f64, n: usize) -> Result<f64> {
    let cl = capital_lambda(rho, n)?;
    let a = alpha_raw(rho, n);
    let b = beta_raw(rho, n);
    Ok((alpha_prime_raw(rho, n) - beta_prime_raw(rho, n) * cl) / (b * b + 4.0 * a).sqrt())
}

pub fn fibered_point(rho: f64, cfg: &ReducedConfig) -> Result<FiberedPoint> {
    let n = cfg.dimension;
    let cl = capital_lambda(rho, n)?;
    let denom = 2.0 * alpha_raw(rho, n) + 2.0 * cl * beta_raw(rho, n);
    if !(denom > 0.0) {
        return Err(Error::domain(format!(
            "2α + 2Λβ = {denom:e} is not positive at rho = {rho}"
        )));
    }
    let mu = (cfg.c_n / denom).sqrt();
    Ok(FiberedPoint {
        rho,
        cap_lambda: cl,
        lambda: cl * mu,
        mu,
    })
}

fn check_point(p: &ReducedPoint) -> Result<()> {
    ReducedPoint::new(p.lambda, p.mu, p.rho).map(|_| ())
}

pub fn big_f(p: &ReducedPoint, cfg: &ReducedConfig) -> Result<f64> {
    check_point(p)?;
    let n = cfg.dimension;
    let c = cfg.c_n;
    let (l, m) = (p.lambda, p.mu);
    Ok(
        l * l + 2.0 * m * m * alpha_raw(p.rho, n) + 4.0 * l * m * beta_raw(p.rho, n)
            - c * l.ln()
            - 2.0 * c * m.ln(),
    )
}

/// `(∂_λF, ∂_μF, ∂_ρF)`.
pub fn grad_f(p: &ReducedPoint, cfg: &ReducedConfig) -> Result<Vector3<f64>> {
    check_point(p)?;
    let n = cfg.dimension;
    let c = cfg.c_n;
    let (l, m, r) = (p.lambda, p.mu, p.rho);
    let (a, b) = (alpha_raw(r, n), beta_raw(r, n));
    let (da, db) = (alpha_prime_raw(r, n), beta_prime_raw(r, n));
    Ok(Vector3::new(
        2.0 * l + 4.0 * m * b - c / l,
        4.0 * m * a + 4.0 * l * b - 2.0 * c / m,
        2.0 * m * m * da + 4.0 * l * m * db,
    ))
}

/// Hessian in the variable order `(λ, μ, ρ)`.
pub fn hess_f(p: &ReducedPoint, cfg: &ReducedConfig) -> Result<Matrix3<f64>> {
    check_point(p)?;
    let n = cfg.dimension;
    let c = cfg.c_n;
    let (l, m, r) = (p.lambda, p.mu, p.rho);
    let (a, b) = (alpha_raw(r, n), beta_raw(r, n));
    let (da, db) = (alpha_prime_raw(r, n), beta_prime_raw(r, n));
    let (dda, ddb) = (alpha_second_raw(r, n), beta_second_raw(r, n));
    let f_ll = 2.0 + c / (l * l);
    let f_lm = 4.0 * b;
    let f_lr = 4.0 * m * db;
    let f_mm = 4.0 * a + 2.0 * c / (m * m);
    let f_mr = 4.0 * m * da + 4.0 * l * db;
    let f_rr = 2.0 * m * m * dda + 4.0 * l * m * ddb;
    Ok(Matrix3::new(
        f_ll, f_lm, f_lr, f_lm, f_mm, f_mr, f_lr, f_mr, f_rr,
    ))
}

/// The `(λ, μ)` block of the Hessian.
pub fn hess_lambda_mu(p: &ReducedPoint, cfg: &ReducedConfig) -> Result<Matrix2<f64>> {
    let h = hess_f(p, cfg)?;
    Ok(h.fixed_view::<2, 2>(0, 0).into_owned())
}

/// `f(ρ) = 3c/2 − c ln(λ(ρ)μ(ρ)²)`.
pub fn little_f(rho: f64, cfg: &ReducedConfig) -> Result<f64> {
    let fp = fibered_point(rho, cfg)?;
    let c = cfg.c_n;
    Ok(1.5 * c - c * (fp.lambda.ln() + 2.0 * fp.mu.ln()))
}

/// `χ(ρ) = α′(ρ) + 2Λ(ρ)β′(ρ)`; `f′ = 2μ²χ`.
pub fn chi(rho: f64, n: usize) -> Result<f64> {
    let cl = capital_lambda(rho, n)?;
    Ok(alpha_prime_raw(rho, n) + 2.0 * cl * beta_prime_raw(rho, n))
}

/// `χ′ = α″ + 2Λ′β′ + 2Λβ″`.
pub fn chi_prime(rho: f64, n: usize) -> Result<f64> {
    let cl = capital_lambda(rho, n)?;
    let dl = lambda_prime(rho, n)?;
    Ok(alpha_second_raw(rho, n)
        + 2.0 * dl * beta_prime_raw(rho, n)
        + 2.0 * cl * beta_second_raw(rho, n))
}

/// `m(ρ) = −Λ(ρ) + 2(1−ρ²)(1+ρ²)^{−N/2}`.
pub fn little_m(rho: f64, n: usize) -> Result<f64> {
    let cl = capital_lambda(rho, n)?;
    let nf = n as f64;
    let r2 = rho * rho;
    Ok(-cl + 2.0 * (1.0 - r2) * pw(1.0 + r2, -nf / 2.0))
}

pub fn m_prime(rho: f64, n: usize) -> Result<f64> {
    let dl = lambda_prime(rho, n)?;
    let nf = n as f64;
    let r2 = rho * rho;
    let b = 1.0 + r2;
    Ok(-dl - 4.0 * rho * pw(b, -nf / 2.0) - 2.0 * nf * rho * (1.0 - r2) * pw(b, -nf / 2.0 - 1.0))
}

/// `M(ρ) = −Λ(ρ) + (1−ρ²)((1−ρ)^{−N} + (1+ρ)^{−N})`.
pub fn big_m(rho: f64, n: usize) -> Result<f64> {
    let cl = capital_lambda(rho, n)?;
    let nf = n as f64;
    Ok(-cl + (1.0 - rho * rho) * (pw(1.0 - rho, -nf) + pw(1.0 + rho, -nf)))
}

/// `M` rewritten with `Λ = −α′/(2β′)`, valid where `χ(ρ) = 0`:
/// `ρᴺ/(1+ρ²)^{N−1} + [2^{N−1}((1+ρ)ᴺ + (1−ρ)ᴺ − ρᴺ) − (1−ρ²)^{N−1}] / [2^{N−1}(1−ρ²)^{N−1}]`.
pub fn big_m_at_critical(rho: f64, n: usize) -> Result<f64> {
    check_rho(rho)?;
    let ni = n as i32;
    let two = 2f64.powi(ni - 1);
    let a = 1.0 - rho * rho;
    let poly = emme_polynomial(rho, n);
    Ok(rho.powi(ni) / (1.0 + rho * rho).powi(ni - 1) + poly / (two * a.powi(ni - 1)))
}

/// `2^{N−1}((1+ρ)ᴺ + (1−ρ)ᴺ − ρᴺ) − (1−ρ²)^{N−1}`, positive on `[0,1]`.
pub fn emme_polynomial(rho: f64, n: usize) -> f64 {
    let ni = n as i32;
    2f64.powi(ni - 1) * ((1.0 + rho).powi(ni) + (1.0 - rho).powi(ni) - rho.powi(ni))
        - (1.0 - rho * rho).powi(ni - 1)
}

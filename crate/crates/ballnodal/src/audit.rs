//! Inequality checks with explicit margins, per dimension and over ranges.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compensated as dd;
use crate::critical::{find_critical_rhos, find_rho0, BISECTION_WIDTH};
use crate::format::{serialize_opt_sig17, serialize_sig17, sig6};
use crate::reduced::{self, ReducedConfig};
use crate::{GUARD, RHO_BAR};

/// Every check name, in report order. Each appears exactly once per dimension.
pub const CHECK_NAMES: &[&str] = &[
    "one",
    "first",
    "first.aux",
    "first.chain",
    "ineq",
    "ineq.tangent",
    "sob",
    "sob.final",
    "sob.sign",
    "two",
    "two.bound",
    "two.bracket",
    "two.n7",
    "an0",
    "an0.tangent",
    "an0.endpoint",
    "an2.identity",
    "an2.chain1",
    "an2.chain2",
    "an2.chain3",
    "an3",
    "an3.bound",
    "an3.power",
    "an1",
    "an1.mid",
    "14",
    "pa3",
    "mum",
    "mum.bound",
    "mum.proof",
    "m_rhobar",
    "emme.poly",
    "emme.rho1",
    "emme.rho1.closed",
    "emme.rho2",
    "emme.rho2.closed",
    "emme.agree",
    "13",
    "13bis.m",
    "13bis.M",
    "limiti.rho0",
    "limiti.rho0.rate",
    "limiti.one",
    "limiti.one.rate",
];

/// Slack allowed for non-strict relations.
pub const NONSTRICT_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    LT,
    GT,
    LE,
    GE,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::LT => "<",
            Relation::GT => ">",
            Relation::LE => "<=",
            Relation::GE => ">=",
        }
    }

    fn margin(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Relation::LT | Relation::LE => rhs - lhs,
            Relation::GT | Relation::GE => lhs - rhs,
        }
    }

    fn holds(self, margin: f64) -> bool {
        match self {
            Relation::LT | Relation::GT => margin > 0.0,
            Relation::LE | Relation::GE => margin >= -NONSTRICT_SLACK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub dimension: usize,
    #[serde(serialize_with = "serialize_sig17")]
    pub lhs: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub rhs: f64,
    pub relation: Relation,
    #[serde(serialize_with = "serialize_sig17")]
    pub margin: f64,
    pub passed: bool,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "serialize_opt_sig17"
    )]
    pub witness: Option<f64>,
    /// `Some("SKIPPED")` when the dimension is outside the check's guard.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
}

impl InequalityCheck {
    fn eval(
        name: &str,
        n: usize,
        lhs: f64,
        relation: Relation,
        rhs: f64,
        witness: Option<f64>,
    ) -> Self {
        let margin = relation.margin(lhs, rhs);
        InequalityCheck {
            name: name.to_string(),
            dimension: n,
            lhs,
            rhs,
            relation,
            margin,
            passed: margin.is_finite() && relation.holds(margin),
            witness,
            status: None,
        }
    }

    fn skipped(name: &str, n: usize, relation: Relation) -> Self {
        InequalityCheck {
            name: name.to_string(),
            dimension: n,
            lhs: 0.0,
            rhs: 0.0,
            relation,
            margin: 0.0,
            passed: true,
            witness: None,
            status: Some("SKIPPED".to_string()),
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.status.is_some()
    }

    /// Requires a second, independently computed value to carry the same sign as `lhs`.
    fn confirmed_by(mut self, compensated_lhs: f64) -> Self {
        let agree = compensated_lhs.signum() == self.lhs.signum();
        let comp_margin = self.relation.margin(compensated_lhs, self.rhs);
        self.passed = self.passed && agree && self.relation.holds(comp_margin);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub dimension_range: (usize, usize),
    pub all_passed: bool,
    pub checks: Vec<InequalityCheck>,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy)]
pub struct AuditConfig {
    /// Points in each `x`, `t` and `ρ` sweep.
    pub mesh: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig { mesh: 1000 }
    }
}

/// Minimum of `margin(x)` over the mesh, returned with its `(lhs, rhs)` and witness.
fn worst_on_mesh(
    points: impl Iterator<Item = f64>,
    relation: Relation,
    lhs: impl Fn(f64) -> f64,
    rhs: impl Fn(f64) -> f64,
) -> (f64, f64, f64) {
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for x in points {
        let (l, r) = (lhs(x), rhs(x));
        let m = relation.margin(l, r);
        if best.is_none_or(|b| m < b.0 || m.is_nan()) {
            best = Some((m, l, r, x));
        }
    }
    let (_, l, r, x) = best.expect("non-empty mesh");
    (l, r, x)
}

fn open_mesh(a: f64, b: f64, k: usize) -> impl Iterator<Item = f64> {
    (1..=k).map(move |i| a + (b - a) * i as f64 / (k + 1) as f64)
}

fn closed_mesh(a: f64, b: f64, k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| a + (b - a) * i as f64 / (k - 1) as f64)
}

pub fn audit_dimension(n: usize) -> VerificationReport {
    audit_dimension_with(n, &AuditConfig::default())
}

pub fn audit_dimension_with(n: usize, cfg: &AuditConfig) -> VerificationReport {
    let start = Instant::now();
    let checks = dimension_checks(n, cfg);
    let all_passed = checks.iter().all(|c| c.passed);
    VerificationReport {
        dimension_range: (n, n),
        all_passed,
        checks,
        runtime_ms: start.elapsed().as_millis() as u64,
    }
}

pub fn audit_range(n_lo: usize, n_hi: usize) -> VerificationReport {
    audit_range_with(n_lo, n_hi, &AuditConfig::default())
}

pub fn audit_range_with(n_lo: usize, n_hi: usize, cfg: &AuditConfig) -> VerificationReport {
    let start = Instant::now();
    let per_dim: Vec<Vec<InequalityCheck>> = (n_lo..=n_hi)
        .into_par_iter()
        .map(|n| dimension_checks(n, cfg))
        .collect();
    let checks: Vec<InequalityCheck> = per_dim.into_iter().flatten().collect();
    VerificationReport {
        dimension_range: (n_lo, n_hi),
        all_passed: checks.iter().all(|c| c.passed),
        checks,
        runtime_ms: start.elapsed().as_millis() as u64,
    }
}

/// A check whose inputs could not be evaluated counts as failed.
fn failed(name: &str, n: usize, relation: Relation) -> InequalityCheck {
    InequalityCheck::eval(name, n, f64::NAN, relation, 0.0, None)
}

fn dimension_checks(n: usize, cfg: &AuditConfig) -> Vec<InequalityCheck> {
    use Relation::*;
    let nf = n as f64;
    let k = nf - 2.0;
    let ki = n as i32 - 2;
    let mut out: Vec<InequalityCheck> = Vec::with_capacity(CHECK_NAMES.len());
    let guard = |min_n: usize, name: &str, rel: Relation, f: &dyn Fn() -> InequalityCheck| {
        if n >= min_n {
            f()
        } else {
            InequalityCheck::skipped(name, n, rel)
        }
    };
    let ev = |name: &str, lhs: f64, rel: Relation, rhs: f64, w: Option<f64>| {
        InequalityCheck::eval(name, n, lhs, rel, rhs, w)
    };

    // Every reduced quantity below is evaluated inside (ρ₀, 1); failures are reported as NaN.
    let al = |r: f64| reduced::alpha(r, n).unwrap_or(f64::NAN);
    let be = |r: f64| reduced::beta(r, n).unwrap_or(f64::NAN);
    let dal = |r: f64| reduced::alpha_prime(r, n).unwrap_or(f64::NAN);
    let dbe = |r: f64| reduced::beta_prime(r, n).unwrap_or(f64::NAN);
    let chi = |r: f64| reduced::chi(r, n).unwrap_or(f64::NAN);
    let cl = |r: f64| reduced::capital_lambda(r, n).unwrap_or(f64::NAN);
    let lm = |r: f64| reduced::little_m(r, n).unwrap_or(f64::NAN);
    let bm = |r: f64| reduced::big_m(r, n).unwrap_or(f64::NAN);
    let rb = RHO_BAR;
    let dd_half = twofloat::TwoFloat::from(0.5);
    let dd_rb = dd::rho_bar();

    out.push(ev("one", chi(0.5), LT, 0.0, Some(0.5)).confirmed_by(dd::chi(dd_half, n).hi()));

    out.push(guard(4, "first", LT, &|| {
        ev("first", al(0.5), LT, be(0.5).powi(2), Some(0.5))
    }));
    out.push(guard(4, "first.aux", LE, &|| {
        ev("first.aux", 4.0 * al(0.5), LE, be(0.5).powi(2), Some(0.5))
    }));
    out.push(guard(4, "first.chain", LE, &|| {
        ev(
            "first.chain",
            (4f64 / 3.0).powi(ki),
            LE,
            0.25 * 2f64.powi(n as i32 - 1),
            None,
        )
    }));

    let (l, r, w) = worst_on_mesh(
        open_mesh(0.0, 1.0, cfg.mesh),
        GE,
        |x| (1.0 + x).sqrt() - 1.0,
        |x| 0.4 * x,
    );
    out.push(ev("ineq", l, GE, r, Some(w)));
    out.push(ev("ineq.tangent", 0.5, GT, 0.4, Some(0.0)));

    let sob_bound = dal(0.5) + 1.6 * al(0.5) / be(0.5) * dbe(0.5);
    let sob_closed = -28.0 / 15.0 * (4f64 / 3.0).powi(ki) - 4.0 * 0.8f64.powi(ki) + 26.0 / 5.0;
    out.push(guard(4, "sob", LE, &|| {
        ev("sob", chi(0.5), LE, sob_bound, Some(0.5))
    }));
    out.push(guard(4, "sob.final", LE, &|| {
        ev("sob.final", sob_bound / k, LE, sob_closed, Some(0.5))
    }));
    out.push(guard(4, "sob.sign", LT, &|| {
        ev("sob.sign", sob_closed, LT, 0.0, None)
    }));

    out.push(ev("two", chi(rb), LT, 0.0, Some(rb)).confirmed_by(dd::chi(dd_rb, n).hi()));
    out.push(guard(6, "two.bound", LE, &|| {
        ev(
            "two.bound",
            chi(rb),
            LE,
            dal(rb) - 4.0 / 3.0 * k * al(rb) / rb,
            Some(rb),
        )
    }));
    out.push(guard(6, "two.bracket", LT, &|| {
        let v = 5.0 * rb * rb - 2.0 + 7.0 * rb / 2f64.powi(n as i32 - 1)
            - (5.0 * rb * rb + 2.0) * (rb / (1.0 + rb * rb)).powi(n as i32 - 1);
        ev("two.bracket", v, LT, 0.0, Some(rb))
    }));
    out.push(guard(7, "two.n7", LT, &|| {
        ev(
            "two.n7",
            5.0 * rb * rb - 2.0 + 7.0 * rb / 2f64.powi(n as i32 - 1),
            LT,
            0.0,
            Some(rb),
        )
    }));

    let (l, r, w) = worst_on_mesh(
        open_mesh(0.0, 3.0, cfg.mesh),
        GE,
        |t| (1.0 + t).sqrt() - 1.0,
        |t| t / 3.0,
    );
    out.push(ev("an0", l, GE, r, Some(w)));
    out.push(ev("an0.tangent", 0.5, GT, 1.0 / 3.0, Some(0.0)));
    // At t = 3 both sides equal 1; the difference must reach 0 from above.
    out.push(ev("an0.endpoint", 0.25, LT, 1.0 / 3.0, Some(3.0)));

    out.push(ev(
        "an2.identity",
        (1.0 - rb * rb - rb).abs(),
        LE,
        4.0 * f64::EPSILON,
        Some(rb),
    ));
    out.push(ev("an2.chain1", 1.0 + rb * rb, GE, 2.0 * rb, Some(rb)));
    out.push(ev(
        "an2.chain2",
        2.0 * rb,
        GE,
        rb * (1.0 + rb * rb).sqrt(),
        Some(rb),
    ));
    out.push(ev(
        "an2.chain3",
        rb * (1.0 + rb * rb).sqrt(),
        GE,
        1.0 - rb * rb,
        Some(rb),
    ));

    out.push(guard(6, "an3", LE, &|| {
        ev("an3", 4.0 * al(rb) / be(rb).powi(2), LE, 3.0, Some(rb))
    }));
    out.push(guard(6, "an3.bound", LE, &|| {
        ev(
            "an3.bound",
            4.0 * al(rb) - 3.0 * be(rb).powi(2),
            LE,
            10.0 * rb.powi(-ki) - 3.0 * rb.powi(-2 * ki),
            Some(rb),
        )
    }));
    out.push(guard(6, "an3.power", LE, &|| {
        ev("an3.power", rb.powi(ki), LE, 0.3, Some(rb))
    }));
    out.push(guard(6, "an1", GT, &|| {
        ev(
            "an1",
            cl(rb),
            GT,
            2.0 / 3.0 * al(rb) * rb.powi(ki),
            Some(rb),
        )
    }));
    out.push(guard(6, "an1.mid", GE, &|| {
        ev(
            "an1.mid",
            cl(rb),
            GE,
            2.0 * al(rb) / (3.0 * be(rb)),
            Some(rb),
        )
    }));

    let rho0 = find_rho0(n, BISECTION_WIDTH).ok();
    match rho0 {
        Some(r0) => {
            let (a, b) = (r0 + GUARD, 1.0 - GUARD);
            let lp = |r: f64| reduced::lambda_prime(r, n).unwrap_or(f64::NAN);
            let mp = |r: f64| reduced::m_prime(r, n).unwrap_or(f64::NAN);
            let (l, r, w) = worst_on_mesh(closed_mesh(a, b, cfg.mesh), GT, lp, |_| 0.0);
            out.push(ev("14", l, GT, r, Some(w)));
            let (l, r, w) = worst_on_mesh(closed_mesh(a, b, cfg.mesh), LT, mp, |_| 0.0);
            out.push(ev("pa3", l, LT, r, Some(w)));
        }
        None => {
            out.push(failed("14", n, GT));
            out.push(failed("pa3", n, LT));
        }
    }

    out.push(ev("mum", lm(0.5), GT, 0.0, Some(0.5)).confirmed_by(dd::little_m(dd_half, n).hi()));
    out.push(guard(4, "mum.bound", GT, &|| {
        ev(
            "mum.bound",
            lm(0.5),
            GT,
            -al(0.5) / be(0.5) + 1.5 * 0.8f64.powf(nf / 2.0),
            Some(0.5),
        )
    }));
    out.push(guard(4, "mum.proof", GT, &|| {
        let s5 = 5f64.sqrt();
        ev(
            "mum.proof",
            0.375 * (4.0 / s5).powi(n as i32),
            GT,
            1.5 * (2.0 / s5).powi(n as i32) + (4f64 / 3.0).powi(ki) - 1.0 + 0.8f64.powi(ki),
            None,
        )
    }));
    out.push(ev("m_rhobar", lm(rb), LT, 0.0, Some(rb)).confirmed_by(dd::little_m(dd_rb, n).hi()));

    let (l, r, w) = worst_on_mesh(
        closed_mesh(0.0, 1.0, cfg.mesh),
        GT,
        |x| reduced::emme_polynomial(x, n),
        |_| 0.0,
    );
    out.push(ev("emme.poly", l, GT, r, Some(w)));

    match find_critical_rhos(n, BISECTION_WIDTH) {
        Ok((r1, r2)) => {
            let closed = |r: f64| reduced::big_m_at_critical(r, n).unwrap_or(f64::NAN);
            out.push(ev("emme.rho1", bm(r1), GT, 0.0, Some(r1)));
            out.push(ev("emme.rho1.closed", closed(r1), GT, 0.0, Some(r1)));
            out.push(ev("emme.rho2", bm(r2), GT, 0.0, Some(r2)));
            out.push(ev("emme.rho2.closed", closed(r2), GT, 0.0, Some(r2)));
            let rel = |r: f64| (bm(r) - closed(r)).abs() / bm(r).abs();
            let (worst, at) = if rel(r1) > rel(r2) {
                (rel(r1), r1)
            } else {
                (rel(r2), r2)
            };
            out.push(ev("emme.agree", worst, LE, 1e-9, Some(at)));
            let t1 = twofloat::TwoFloat::from(r1);
            let t2 = twofloat::TwoFloat::from(r2);
            out.push(ev("13", lm(r1), GT, 0.0, Some(r1)).confirmed_by(dd::little_m(t1, n).hi()));
            out.push(
                ev("13bis.m", lm(r2), LT, 0.0, Some(r2)).confirmed_by(dd::little_m(t2, n).hi()),
            );
            out.push(ev("13bis.M", bm(r2), GT, 0.0, Some(r2)).confirmed_by(dd::big_m(t2, n).hi()));
        }
        Err(_) => {
            for (name, rel) in [
                ("emme.rho1", GT),
                ("emme.rho1.closed", GT),
                ("emme.rho2", GT),
                ("emme.rho2.closed", GT),
                ("emme.agree", LE),
                ("13", GT),
                ("13bis.m", LT),
                ("13bis.M", GT),
            ] {
                out.push(failed(name, n, rel));
            }
        }
    }

    out.extend(divergence_probes(n, rho0));
    debug_assert_eq!(out.len(), CHECK_NAMES.len());
    out
}

/// `f` near the ends of `(ρ₀, 1)` on geometric meshes `t = 10^{−2} … 10^{−10}`.
///
/// `f` diverges only logarithmically (`f ≈ (c/2) ln t` at `ρ₀ + t`, `f ≈ −c(N−2) ln t` at
/// `1 − t`), so the probes check strict monotonicity toward each end and the logarithmic
/// rate against its leading-order prediction instead of a fixed threshold.
fn divergence_probes(n: usize, rho0: Option<f64>) -> Vec<InequalityCheck> {
    use Relation::*;
    let cfg = ReducedConfig::unit(n).expect("n >= 3");
    let c = cfg.c_n;
    let ts: Vec<f64> = (2..=10).map(|e| 10f64.powi(-e)).collect();
    let f = |r: f64| reduced::little_f(r, &cfg).unwrap_or(f64::NAN);
    let mut out = Vec::with_capacity(4);

    let probe = |at: &dyn Fn(f64) -> f64,
                 name: &str,
                 rate_name: &str,
                 predicted_rate: f64,
                 decreasing: bool| {
        let values: Vec<f64> = ts.iter().map(|&t| f(at(t))).collect();
        // Largest step in the wrong direction; negative when the sequence is strictly monotone.
        let worst_step = values
            .windows(2)
            .map(|w| if decreasing { w[1] - w[0] } else { w[0] - w[1] })
            .fold(f64::NEG_INFINITY, f64::max);
        let last = ts.len() - 1;
        let slope = (values[last] - values[last - 1]) / (ts[last].ln() - ts[last - 1].ln());
        vec![
            InequalityCheck::eval(name, n, worst_step, LT, 0.0, Some(at(ts[last]))),
            InequalityCheck::eval(
                rate_name,
                n,
                (slope / predicted_rate - 1.0).abs(),
                LT,
                0.05,
                Some(at(ts[last])),
            ),
        ]
    };

    match rho0 {
        Some(r0) => out.extend(probe(
            &|t| r0 + t,
            "limiti.rho0",
            "limiti.rho0.rate",
            c / 2.0,
            true,
        )),
        None => {
            out.push(failed("limiti.rho0", n, LT));
            out.push(failed("limiti.rho0.rate", n, LT));
        }
    }
    out.extend(probe(
        &|t| 1.0 - t,
        "limiti.one",
        "limiti.one.rate",
        -c * (n as f64 - 2.0),
        false,
    ));
    out
}

pub fn emit_report(r: &VerificationReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut v = serde_json::to_vec_pretty(r).expect("report serializes");
            v.push(b'\n');
            v
        }
        ReportFormat::Text => emit_text(r).into_bytes(),
    }
}

fn emit_text(r: &VerificationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "inequality audit, N = {}..{}: {} ({} checks, {} skipped, {} ms)",
        r.dimension_range.0,
        r.dimension_range.1,
        if r.all_passed {
            "all passed"
        } else {
            "FAILURES"
        },
        r.checks.len(),
        r.checks.iter().filter(|c| c.is_skipped()).count(),
        r.runtime_ms
    );
    let _ = writeln!(
        s,
        "{:>3}  {:<18} {:>14} {:>3} {:>14} {:>14} {:>10}  status",
        "N", "check", "lhs", "", "rhs", "margin", "witness"
    );
    for c in &r.checks {
        if c.is_skipped() {
            let _ = writeln!(
                s,
                "{:>3}  {:<18} {:>14} {:>3} {:>14} {:>14} {:>10}  SKIPPED",
                c.dimension,
                c.name,
                "-",
                c.relation.symbol(),
                "-",
                "-",
                "-"
            );
            continue;
        }
        let _ = writeln!(
            s,
            "{:>3}  {:<18} {:>14} {:>3} {:>14} {:>14} {:>10}  {}",
            c.dimension,
            c.name,
            sig6(c.lhs),
            c.relation.symbol(),
            sig6(c.rhs),
            sig6(c.margin),
            c.witness.map(sig6).unwrap_or_else(|| "-".into()),
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    s
}

/// Strict point checks are confirmed in double-double arithmetic; this lists their names.
pub const COMPENSATED_CHECKS: &[&str] =
    &["one", "two", "mum", "m_rhobar", "13", "13bis.m", "13bis.M"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_cover_report() {
        let r = audit_dimension(7);
        let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, CHECK_NAMES);
    }

    #[test]
    fn three_passes_with_expected_values() {
        let r = audit_dimension(3);
        assert!(r.all_passed, "{}", emit_text(&r));
        let one = r.checks.iter().find(|c| c.name == "one").unwrap();
        assert!((one.lhs + 2.271438).abs() < 1e-6);
        assert!(r
            .checks
            .iter()
            .find(|c| c.name == "first")
            .unwrap()
            .is_skipped());
    }

    #[test]
    fn first_at_four() {
        let r = audit_dimension(4);
        let c = r.checks.iter().find(|c| c.name == "first").unwrap();
        assert!((c.lhs - 319.0 / 225.0).abs() < 1e-13 && c.rhs == 9.0);
    }

    #[test]
    fn relation_margins() {
        let c = InequalityCheck::eval("x", 3, 1.0, Relation::LE, 1.0, None);
        assert!(c.passed && c.margin == 0.0);
        let c = InequalityCheck::eval("x", 3, 1.0, Relation::LT, 1.0, None);
        assert!(!c.passed);
    }

    #[test]
    fn empty_report_is_valid_json() {
        let r = VerificationReport {
            dimension_range: (3, 3),
            all_passed: true,
            checks: vec![],
            runtime_ms: 0,
        };
        let v: serde_json::Value =
            serde_json::from_slice(&emit_report(&r, ReportFormat::Json)).unwrap();
        assert_eq!(v["checks"].as_array().unwrap().len(), 0);
    }
}

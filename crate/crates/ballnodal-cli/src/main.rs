use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use ballnodal::audit::{
    audit_dimension_with, audit_range_with, emit_report, AuditConfig, ReportFormat,
};
use ballnodal::critical::{classify, find_critical_rhos, find_rho0, BISECTION_WIDTH};
use ballnodal::field::{contours_to_json, Field2D};
use ballnodal::format::{sig17, sig6};
use ballnodal::pde::{
    branch_grid, continue_in_epsilon, extract_diagnostics, ladder_to_json, Branch, LadderRecord,
};
use ballnodal::profile::{
    ansatz_field, ansatz_regime_warning, classify_boundary, phi_field, profile_scale, ProfileSpec,
};
use ballnodal::reduced::{big_m, capital_lambda, chi, little_f, little_m, ReducedConfig};
use ballnodal::GUARD;

#[derive(Parser)]
#[command(
    name = "ballnodal",
    version,
    about = "Sign-changing bubble solutions on the unit ball: reduced energy, audits, profiles, PDE ladders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the inequality audit for one dimension or a range.
    Verify(VerifyArgs),
    /// Critical radii, scales and Morse data.
    Critical(CriticalArgs),
    /// CSV of f, chi, m, M and Lambda over rho.
    Landscape(LandscapeArgs),
    /// Limit profile and bubble ansatz fields.
    Profile(ProfileArgs),
    /// Finite-difference solutions along an epsilon ladder.
    Pde(PdeArgs),
}

fn dimension(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n < 3 {
        return Err(format!("dimension must be at least 3, got {n}"));
    }
    Ok(n)
}

fn dim_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
    let (lo, hi) = (dimension(lo.trim())?, dimension(hi.trim())?);
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn grid_size(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected SxR, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

fn which(s: &str) -> Result<Branch, String> {
    match s {
        "1" => Ok(Branch::Rho1),
        "2" => Ok(Branch::Rho2),
        _ => Err(format!("expected 1 or 2, got {s:?}")),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(format!("expected a positive number, got {s}"));
    }
    Ok(x)
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "dims")]
struct DimSelect {
    #[arg(long, value_parser = dimension)]
    dim: Option<usize>,
    #[arg(long, value_parser = dim_range, value_name = "LO..HI")]
    range: Option<(usize, usize)>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    dims: DimSelect,
    /// Also write the report as JSON.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Points per sweep.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(10..))]
    mesh: u64,
}

#[derive(Args)]
struct CriticalArgs {
    #[arg(long, value_parser = dimension)]
    dim: usize,
    /// Constant c_N of the reduced energy; defaults to the physical value.
    #[arg(long = "c-n", value_parser = positive)]
    c_n: Option<f64>,
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(long, value_parser = dimension)]
    dim: usize,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(2..))]
    mesh: u64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long, value_parser = dimension)]
    dim: usize,
    #[arg(long, value_parser = which)]
    which: Branch,
    #[arg(long, default_value_t = 1e-4, value_parser = positive)]
    eps: f64,
    #[arg(long, default_value = "129x65", value_parser = grid_size, value_name = "SxR")]
    grid: (usize, usize),
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct PdeArgs {
    #[arg(long, value_parser = dimension)]
    dim: usize,
    #[arg(long, value_parser = which)]
    which: Branch,
    #[arg(long = "eps-start", default_value_t = 0.3, value_parser = positive)]
    eps_start: f64,
    #[arg(long = "eps-end", default_value_t = 0.05, value_parser = positive)]
    eps_end: f64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(2..))]
    steps: u64,
    #[arg(long, default_value = "129x65", value_parser = grid_size, value_name = "SxR")]
    grid: (usize, usize),
    /// Residual tolerance of every rung.
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    tol: f64,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

enum Failure {
    Math(anyhow::Error),
    Io(anyhow::Error),
}

impl From<ballnodal::Error> for Failure {
    fn from(e: ballnodal::Error) -> Self {
        Failure::Math(e.into())
    }
}

trait IoContext<T> {
    fn io(self, what: &Path) -> Result<T, Failure>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn io(self, what: &Path) -> Result<T, Failure> {
        self.with_context(|| format!("cannot write {}", what.display()))
            .map_err(Failure::Io)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).io(path)
}

fn write_field(path: &Path, f: &Field2D) -> Result<(), Failure> {
    let mut buf = Vec::new();
    f.write_csv(&mut buf).io(path)?;
    write_file(path, &buf)
}

fn out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).io(dir)
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Rho1 => "rho1",
        Branch::Rho2 => "rho2",
    }
}

fn verify(a: VerifyArgs) -> Result<bool, Failure> {
    let cfg = AuditConfig {
        mesh: a.mesh as usize,
    };
    let report = match (a.dims.dim, a.dims.range) {
        (Some(n), _) => audit_dimension_with(n, &cfg),
        (None, Some((lo, hi))) => audit_range_with(lo, hi, &cfg),
        (None, None) => unreachable!("clap requires one of --dim and --range"),
    };
    std::io::stdout()
        .write_all(&emit_report(&report, ReportFormat::Text))
        .io(Path::new("stdout"))?;
    if let Some(path) = &a.json {
        write_file(path, &emit_report(&report, ReportFormat::Json))?;
    }
    Ok(report.all_passed)
}

fn critical(a: CriticalArgs) -> Result<bool, Failure> {
    let n = a.dim;
    let cfg = match a.c_n {
        Some(c) => ReducedConfig::new(n, c)?,
        None => ReducedConfig::physical(n)?,
    };
    let rho0 = find_rho0(n, BISECTION_WIDTH)?;
    let (r1, r2) = find_critical_rhos(n, 1e-14)?;
    println!("N = {n}, c_N = {}", sig6(cfg.c_n));
    println!("rho0 = {}", sig6(rho0));
    println!(
        "{:<5} {:>10} {:>12} {:>12} {:>6} {:>7} {:>12} {:>12}  boundary",
        "root", "rho", "lambda", "mu", "morse", "degree", "margin", "chi_resid"
    );
    let mut notes = Vec::new();
    for (label, rho) in [("rho1", r1), ("rho2", r2)] {
        let rec = classify(rho, n, &cfg)?;
        let bc = classify_boundary(rho, n)?;
        println!(
            "{:<5} {:>10} {:>12} {:>12} {:>6} {:>7} {:>12} {:>12}  {}",
            label,
            sig6(rec.rho),
            sig6(rec.lambda),
            sig6(rec.mu),
            rec.morse_index,
            rec.degree,
            sig6(rec.nondegeneracy_margin),
            sig6(rec.chi_residual),
            bc.kind.label()
        );
        if let Some(note) = bc.annotation {
            notes.push(format!("{label}: {note}"));
        }
    }
    for note in notes {
        println!("{note}");
    }
    Ok(true)
}

fn landscape(a: LandscapeArgs) -> Result<bool, Failure> {
    let n = a.dim;
    let cfg = ReducedConfig::physical(n)?;
    let rho0 = find_rho0(n, BISECTION_WIDTH)?;
    let (lo, hi) = (rho0 + GUARD, 1.0 - GUARD);
    let k = a.mesh as usize;
    let mut csv = String::from("rho,f,chi,m,M,Lambda\n");
    for i in 0..k {
        let rho = lo + (hi - lo) * i as f64 / (k - 1) as f64;
        let row = [
            rho,
            little_f(rho, &cfg)?,
            chi(rho, n)?,
            little_m(rho, n)?,
            big_m(rho, n)?,
            capital_lambda(rho, n)?,
        ];
        csv.push_str(&row.map(sig17).join(","));
        csv.push('\n');
    }
    write_file(&a.out, csv.as_bytes())?;
    println!("wrote {k} rows to {}", a.out.display());
    Ok(true)
}

fn profile(a: ProfileArgs) -> Result<bool, Failure> {
    let n = a.dim;
    let rho = a.which.critical_rho(n)?;
    let spec = ProfileSpec::new(rho, n)?;
    let cfg = ReducedConfig::physical(n)?;
    let bc = classify_boundary(rho, n)?;
    let phi = phi_field(&spec, a.grid)?;
    let ansatz = ansatz_field(&spec, a.eps, &cfg, a.grid)?;
    let scaled = ansatz.scaled(1.0 / profile_scale(&spec, a.eps, &cfg)?);

    out_dir(&a.out)?;
    write_field(&a.out.join("phi.csv"), &phi)?;
    write_field(&a.out.join("ansatz.csv"), &ansatz)?;
    write_file(
        &a.out.join("phi_nodal.json"),
        contours_to_json(&phi.contours(0.0)).as_bytes(),
    )?;
    write_file(
        &a.out.join("ansatz_nodal.json"),
        contours_to_json(&scaled.contours(0.0)).as_bytes(),
    )?;
    let mut cls = serde_json::to_string_pretty(&bc).map_err(|e| Failure::Math(e.into()))?;
    cls.push('\n');
    write_file(&a.out.join("classification.json"), cls.as_bytes())?;

    println!(
        "N = {n}, {} = {}, Lambda = {}",
        branch_name(a.which),
        sig6(rho),
        sig6(spec.cap_lambda)
    );
    println!("classification: {}", bc.kind.label());
    println!("m = {}, M = {}", sig6(bc.m_value), sig6(bc.big_m_value));
    if !bc.zero_latitudes.is_empty() {
        let z: Vec<String> = bc.zero_latitudes.iter().map(|&x| sig6(x)).collect();
        println!("zero latitudes: {}", z.join(", "));
    }
    if let Some(note) = &bc.annotation {
        println!("{note}");
    }
    if let Some(w) = ansatz_regime_warning(&spec, a.eps, &cfg)? {
        println!("warning: {w}");
    }
    println!("wrote fields to {}", a.out.display());
    Ok(true)
}

/// Whether every step of `x` ends no farther from `target` than it started.
fn monotone_toward(x: &[f64], target: f64) -> bool {
    x.windows(2)
        .all(|w| (w[1] - target).abs() <= (w[0] - target).abs())
}

fn pde(a: PdeArgs) -> Result<bool, Failure> {
    let n = a.dim;
    if a.eps_start <= a.eps_end {
        return Err(Failure::Math(anyhow!("need --eps-start > --eps-end")));
    }
    let rho = a.which.critical_rho(n)?;
    let grid = branch_grid(a.which, n, a.eps_end, a.grid)?;
    let results = continue_in_epsilon(
        a.eps_start,
        a.eps_end,
        a.steps as usize,
        a.which,
        n,
        &grid,
        a.tol,
    )?;
    let mut records = Vec::with_capacity(results.len());
    for r in &results {
        records.push(LadderRecord::new(r, &extract_diagnostics(r, n)?));
    }
    let last = results.last().expect("ladder has at least two rungs");

    out_dir(&a.out)?;
    write_file(
        &a.out.join("ladder.json"),
        ladder_to_json(&records).as_bytes(),
    )?;
    write_field(&a.out.join("solution.csv"), &last.field)?;
    write_file(
        &a.out.join("nodal.json"),
        contours_to_json(&last.field.contours(0.0)).as_bytes(),
    )?;

    println!(
        "N = {n}, branch {}, reduced rho = {}",
        branch_name(a.which),
        sig6(rho)
    );
    println!(
        "{:>10} {:>5} {:>12} {:>12} {:>12} {:>14}  pattern",
        "epsilon", "iter", "residual", "rho_hat", "height", "energy"
    );
    for rec in &records {
        println!(
            "{:>10} {:>5} {:>12} {:>12} {:>12} {:>14}  {}",
            sig6(rec.epsilon),
            rec.iterations,
            sig6(rec.residual),
            sig6(rec.rho_hat),
            rec.height_scaling.map(sig6).unwrap_or_else(|| "-".into()),
            sig6(rec.energy),
            rec.sign_pattern
        );
    }
    let tail = &records[records.len().saturating_sub(4)..];
    let rho_hat: Vec<f64> = tail.iter().map(|r| r.rho_hat).collect();
    let height: Vec<f64> = tail.iter().filter_map(|r| r.height_scaling).collect();
    println!("all {} ladder steps converged", records.len());
    println!(
        "rho_hat trend toward {}: {}",
        sig6(rho),
        if monotone_toward(&rho_hat, rho) {
            "monotone"
        } else {
            "not monotone"
        }
    );
    println!(
        "height scaling trend toward 1: {}",
        if monotone_toward(&height, 1.0) {
            "monotone"
        } else {
            "not monotone"
        }
    );
    println!("wrote ladder to {}", a.out.display());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Critical(a) => critical(a),
        Command::Landscape(a) => landscape(a),
        Command::Profile(a) => profile(a),
        Command::Pde(a) => pde(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Math(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

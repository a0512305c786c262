//! Subcommand definitions and execution.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dhilbert::arcs;
use dhilbert::expsum::{self, Quadrants};
use dhilbert::newton;
use dhilbert::numtheory;
use dhilbert::polynomial::Polynomial;
use dhilbert::verify;

use crate::freq::{self, Scalar};

#[derive(Parser)]
#[command(
    name = "dhilbert",
    about = "Boundedness analysis and numerical evaluation of discrete double Hilbert transforms along polynomial surfaces",
    version
)]
pub struct Cli {
    /// Cap on worker threads (default: DHILBERT_WORKERS, then all cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// key=value defaults file; explicit flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Build the Newton polyhedron and decide boundedness
    Analyze(AnalyzeArgs),
    /// Evaluate the truncated transform at one frequency triple
    Sum(SumArgs),
    /// Running-sup divergence scan over a frequency grid
    Scan(ScanArgs),
    /// Gauss-sum average decay table
    Gauss(GaussArgs),
    /// Circle-method arc classification over a dyadic index grid
    Arcs(ArcsArgs),
    /// Identity checks and the theorem cross-check
    Verify(VerifyArgs),
}

#[derive(Args, Serialize)]
pub struct AnalyzeArgs {
    /// Polynomial in t1, t2 (integer coefficients)
    #[arg(long)]
    pub poly: String,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct SumArgs {
    #[arg(long)]
    pub poly: String,
    /// Frequencies xi1,xi2,xi3 (decimals or a/q rationals)
    #[arg(long)]
    pub xi: String,
    #[arg(long)]
    pub n1: u64,
    #[arg(long)]
    pub n2: u64,
    /// Sign quadrants: "full" or "pp" (positive-positive)
    #[arg(long, default_value = "full")]
    pub quadrants: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub poly: String,
    /// Inline frequency grid for xi3: comma-separated scalars
    #[arg(long)]
    pub grid: Option<String>,
    /// File with one xi3 scalar per line
    #[arg(long)]
    pub grid_file: Option<PathBuf>,
    /// Truncation schedule, e.g. 16,64,256,1024
    #[arg(long)]
    pub schedule: String,
    #[arg(long, default_value = "full")]
    pub quadrants: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct GaussArgs {
    #[arg(long)]
    pub poly: String,
    /// Dyadic scale of the t2 average
    #[arg(long)]
    pub j2: u32,
    /// Table over q = 2..=qmax (numerator a = 1)
    #[arg(long)]
    pub qmax: u64,
    /// Restrict the table to prime q
    #[arg(long, default_value_t = false)]
    pub primes_only: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct ArcsArgs {
    #[arg(long)]
    pub poly: String,
    /// Surface frequency (decimal or a/q)
    #[arg(long)]
    pub xi3: String,
    /// Index grid bounds "J1xJ2"
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub poly: String,
    /// Which check to run: major | poisson | minor | theorem
    #[arg(long)]
    pub check: String,
    #[arg(long)]
    pub xi3: Option<String>,
    /// Dyadic index "j1:j2" for the identity checks
    #[arg(long)]
    pub j: Option<String>,
    /// Lattice window for the Poisson dual sum
    #[arg(long, default_value_t = 8)]
    pub w_window: i64,
    /// Ray of indices "j1:j2,j1:j2,..." for the minor-arc check
    #[arg(long)]
    pub ray: Option<String>,
    /// Probe-grid depth for the theorem check
    #[arg(long, default_value_t = 40)]
    pub grid_depth: u32,
    /// Truncation schedule for the theorem check
    #[arg(long, default_value = "16,32,64,128,256,512,1024")]
    pub schedule: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execute(cli: Cli) -> Result<ExitCode> {
    let workers = cli
        .workers
        .or_else(|| {
            std::env::var("DHILBERT_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Analyze(a) => analyze(a),
        Cmd::Sum(a) => sum(a),
        Cmd::Scan(a) => scan(a),
        Cmd::Gauss(a) => gauss(a),
        Cmd::Arcs(a) => arcs_cmd(a),
        Cmd::Verify(a) => verify_cmd(a),
    }
}

fn parse_poly(text: &str) -> Result<Polynomial> {
    let p = Polynomial::parse(text).map_err(|e| anyhow::anyhow!("{e}"))?;
    if p.is_zero() {
        bail!("polynomial must be nonzero");
    }
    Ok(p)
}

fn parse_quadrants(text: &str) -> Result<Quadrants> {
    match text {
        "full" => Ok(Quadrants::Full),
        "pp" => Ok(Quadrants::PositivePositive),
        other => bail!("unknown quadrants mode {other:?} (use full or pp)"),
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn analyze(a: AnalyzeArgs) -> Result<ExitCode> {
    let p = parse_poly(&a.poly)?;
    let hull = newton::build(&p);
    let verdict = hull.decide_boundedness();
    let report = hull.report(&verdict);
    let mut doc = serde_json::to_value(&report)?;
    doc["poly"] = serde_json::Value::String(p.render());
    emit(&a.out, &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
    Ok(if verdict.bounded {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn sum(a: SumArgs) -> Result<ExitCode> {
    let p = parse_poly(&a.poly)?;
    let xi = freq::parse_triple(&a.xi)?;
    let ctx = freq::phase_context(&xi);
    let quadrants = parse_quadrants(&a.quadrants)?;
    let r = expsum::hilbert_sum(&p, a.n1, a.n2, &ctx, quadrants)?;
    let doc = serde_json::json!({
        "poly": p.render(),
        "xi_used": [xi[0].exact_note(), xi[1].exact_note(), xi[2].exact_note()],
        "n1": a.n1,
        "n2": a.n2,
        "quadrants": a.quadrants,
        "value": [r.value.re, r.value.im],
        "abs_error_bound": r.abs_error_bound,
        "terms": r.terms,
    });
    emit(&a.out, &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
    Ok(ExitCode::SUCCESS)
}

fn scan(a: ScanArgs) -> Result<ExitCode> {
    let p = parse_poly(&a.poly)?;
    let mut scalars: Vec<Scalar> = Vec::new();
    if let Some(inline) = &a.grid {
        for part in inline.split(',') {
            scalars.push(Scalar::parse(part)?);
        }
    }
    if let Some(path) = &a.grid_file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            scalars.push(Scalar::parse(line)?);
        }
    }
    if scalars.is_empty() {
        bail!("scan needs --grid or --grid-file");
    }
    let schedule = parse_schedule(&a.schedule)?;
    let quadrants = parse_quadrants(&a.quadrants)?;
    let grid: Vec<expsum::PhaseContext> = scalars
        .iter()
        .map(|s| {
            freq::phase_context(&[
                Scalar::Fixed(dhilbert::fixed::FixedReal::ZERO),
                Scalar::Fixed(dhilbert::fixed::FixedReal::ZERO),
                s.clone(),
            ])
        })
        .collect();
    let rows = expsum::partial_sup_scan(&p, &grid, &schedule, quadrants)?;
    let mut csv = String::from("N,sup_abs\n");
    for r in &rows {
        csv.push_str(&format!("{},{}\n", r.n, r.sup_abs));
    }
    emit(&a.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_schedule(text: &str) -> Result<Vec<u64>> {
    let schedule: Vec<u64> = text
        .split(',')
        .map(|s| s.trim().parse::<u64>().context("schedule entry"))
        .collect::<Result<_>>()?;
    if schedule.is_empty() || schedule.windows(2).any(|w| w[0] >= w[1]) {
        bail!("schedule must be strictly increasing");
    }
    Ok(schedule)
}

fn gauss(a: GaussArgs) -> Result<ExitCode> {
    let p = parse_poly(&a.poly)?;
    if a.qmax < 2 {
        bail!("qmax must be at least 2");
    }
    let mut csv = String::from("q,a,avg,magnitude\n");
    let mut samples = Vec::new();
    for q in 2..=a.qmax {
        if a.primes_only && !is_prime(q) {
            continue;
        }
        let avg = numtheory::gauss_fiber_average(&p, a.j2, 1, q);
        let full = numtheory::gauss_full(&p, 1, q, (0, 0));
        csv.push_str(&format!("{q},1,{avg},{}\n", full.magnitude));
        if avg > 0.0 {
            samples.push((q as f64, avg));
        }
    }
    match numtheory::fit_decay(&samples) {
        Ok(fit) => csv.push_str(&format!(
            "# delta_hat={} constant={} r_squared={}\n",
            fit.exponent, fit.constant, fit.r_squared
        )),
        Err(e) => csv.push_str(&format!("# decay fit unavailable: {e}\n")),
    }
    emit(&a.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn arcs_cmd(a: ArcsArgs) -> Result<ExitCode> {
    let p = parse_poly(&a.poly)?;
    let xi3 = Scalar::parse(&a.xi3)?;
    let (j1_max, j2_max) = a
        .grid
        .split_once('x')
        .context("grid must look like J1xJ2")?;
    let j1_max: u64 = j1_max.trim().parse().context("grid J1")?;
    let j2_max: u64 = j2_max.trim().parse().context("grid J2")?;
    let hull = newton::build(&p);
    let xi_rat = xi3.to_rational();
    let mut csv = String::from("j1,j2,class,q,beta_scaled\n");
    for j1 in 0..=j1_max {
        for j2 in 0..=j2_max.min(j1) {
            let vertex = hull.vertices[hull.dual_face_of((j1, j2))];
            let cell = arcs::classify((j1, j2), &xi_rat, vertex)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            csv.push_str(&format!(
                "{j1},{j2},{},{},{}\n",
                cell.klass.label(),
                cell.approx.q,
                cell.beta_scaled
            ));
        }
    }
    emit(&a.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_index(text: &str) -> Result<(u64, u64)> {
    let (a, b) = text.split_once(':').context("index must look like j1:j2")?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn verify_cmd(a: VerifyArgs) -> Result<ExitCode> {
    let p = parse_poly(&a.poly)?;
    let hull = newton::build(&p);
    let (doc, ok) = match a.check.as_str() {
        "major" => {
            let xi3 = Scalar::parse(a.xi3.as_deref().context("--xi3 required")?)?;
            let j = parse_index(a.j.as_deref().context("--j required")?)?;
            let vertex = hull.vertices[hull.dual_face_of(j)];
            let r = verify::major_arc_approx_check(&p, j, &xi3.to_rational(), vertex)?;
            (identity_json("major_arc_approx", &p, j, &r), r.passed)
        }
        "poisson" => {
            let xi3 = Scalar::parse(a.xi3.as_deref().context("--xi3 required")?)?;
            let j = parse_index(a.j.as_deref().context("--j required")?)?;
            let vertex = hull.vertices[hull.dual_face_of(j)];
            let r =
                verify::poisson_identity_check(&p, j, &xi3.to_rational(), vertex, a.w_window)?;
            (identity_json("poisson_transfer", &p, j, &r), r.passed)
        }
        "minor" => {
            let xi3 = Scalar::parse(a.xi3.as_deref().context("--xi3 required")?)?;
            let ray: Vec<(u64, u64)> = a
                .ray
                .as_deref()
                .context("--ray required")?
                .split(',')
                .map(parse_index)
                .collect::<Result<_>>()?;
            let r = verify::minor_arc_bound_check(&p, &xi3.to_rational(), &ray)?;
            let cells: Vec<serde_json::Value> = r
                .cells
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "j": [c.j.0, c.j.1],
                        "minor": c.minor,
                        "q_log2": c.q_log2,
                        "dyadic_abs": c.dyadic_abs,
                        "weyl_ratio": c.weyl_ratio,
                        "sbp_bound": c.sbp_bound,
                        "sbp_ok": c.sbp_ok,
                    })
                })
                .collect();
            let ok = r.cells.iter().all(|c| c.sbp_ok)
                && r.delta_hat.map(|d| d > 0.0).unwrap_or(true);
            (
                serde_json::json!({
                    "check": "minor_arc_bound",
                    "poly": p.render(),
                    "cells": cells,
                    "delta_hat": r.delta_hat,
                    "fit_r_squared": r.fit_r_squared,
                }),
                ok,
            )
        }
        "theorem" => {
            let grid = verify::standard_probe_grid(a.grid_depth);
            let schedule = parse_schedule(&a.schedule)?;
            let v = verify::theorem_crosscheck(&p, &grid, &schedule)?;
            let sups: Vec<serde_json::Value> = v
                .empirics
                .sups
                .iter()
                .map(|r| serde_json::json!({"n": r.n, "sup_abs": r.sup_abs}))
                .collect();
            let agree = v.agree;
            (
                serde_json::json!({
                    "check": "theorem_crosscheck",
                    "poly": p.render(),
                    "theorem_bounded": v.theorem_bounded,
                    "witness": v.witness.map(|w| vec![w.0, w.1]),
                    "empirics": {
                        "verdict": v.empirics.kind,
                        "slope": v.empirics.slope,
                        "r_squared": v.empirics.r_squared,
                        "sups": sups,
                    },
                    "agree": agree,
                }),
                agree,
            )
        }
        other => bail!("unknown check {other:?} (use major|poisson|minor|theorem)"),
    };
    emit(&a.out, &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn identity_json(
    name: &str,
    p: &Polynomial,
    j: (u64, u64),
    r: &verify::IdentityReport,
) -> serde_json::Value {
    serde_json::json!({
        "check": name,
        "poly": p.render(),
        "j": [j.0, j.1],
        "arc_class": r.arc_class.label(),
        "q": r.q,
        "beta": r.beta,
        "lhs": [r.lhs.re, r.lhs.im],
        "rhs": [r.rhs.re, r.rhs.im],
        "residual": r.residual,
        "tolerance": r.tolerance,
        "w_window": r.w_window,
        "quadrature_tol": r.quadrature_tol,
        "passed": r.passed,
    })
}

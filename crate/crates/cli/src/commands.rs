//! Subcommand arguments and drivers.

use std::f64::consts::TAU;
use std::path::PathBuf;

use clap::{ArgAction, Args, ValueEnum};
use serde::{Deserialize, Serialize};

use oscbc::boundary_map::{continuity_report, golden_angles, sweep, uniform_angles, BoundaryTable};
use oscbc::cell::{
    default_translates, estimate_mu, solve_cell, trace_profile, CellConfig, CellSetup,
    SCHEMA_VERSION,
};
use oscbc::discrepancy::{discrepancy, discrepancy_star, frac, omega, UnitSequence};
use oscbc::domain::{
    convergence_study_fields, solve_homogenized, EpsilonProblem, InteriorBall, SmoothDomain,
};
use oscbc::expr::Expr;
use oscbc::lattice::{approach_point, radius_constant, Hyperplane};
use oscbc::plot::{line_plot, polar_plot};
use oscbc::singular::{compute_singular, Extremal};
use oscbc::solver::{DiscreteField, SchemeConfig};
use oscbc::verify::{exhaustive_lattice_distance, run_suite};

use crate::error::{CliError, CliResult};
use crate::output::{quoted, Csv, Output};
use crate::parse::{self, Real};

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn expr(s: &str) -> CliResult<Expr> {
    s.parse()
        .map_err(|e: oscbc::Error| invalid(format!("{s:?}: {e}")))
}

fn scheme(tol: Real, angles: usize) -> SchemeConfig {
    SchemeConfig {
        tol: tol.0,
        angles,
        ..Default::default()
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscrepancyArgs {
    /// Rotation number: a real, a named constant or a quotient.
    #[arg(long, default_value = "phi")]
    pub x: Real,
    /// Sequence lengths.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
    pub n: Vec<usize>,
}

/// Discrepancy of the rotation sequence `frac(j x)`, `j = 1..=N`.
pub fn run_discrepancy(a: &DiscrepancyArgs, out: &mut Output) -> CliResult<String> {
    if a.n.is_empty() || a.n.contains(&0) {
        return Err(invalid("every N must be positive"));
    }
    let mut csv = Csv::new(&["n", "d_star", "d", "bound"]);
    for &n in &a.n {
        let pts: Vec<f64> = (1..=n).map(|j| frac(j as f64 * a.x.0)).collect();
        let s = UnitSequence::new(pts)?;
        let ds = discrepancy_star(&s);
        csv.row(&[&n, &ds, &discrepancy(&s), &(2.0 * ds)]);
    }
    out.csv("discrepancy.csv", &csv)?;
    Ok(csv.as_str().to_string())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeArgs {
    /// Hyperplane normal as `a,b` or `angle:t`.
    #[arg(long, default_value = "1,sqrt2")]
    pub nu: String,
    /// Point on the hyperplane.
    #[arg(long, default_value = "0,0")]
    pub x0: String,
    /// Signed distance of the query point from `x0` along the hyperplane.
    #[arg(long, default_value = "1000")]
    pub along: Real,
    /// Search scales.
    #[arg(long, value_delimiter = ',', default_value = "10,30,100")]
    pub n: Vec<Real>,
}

/// Constructed lattice approach against the exhaustive box search.
pub fn run_lattice(a: &LatticeArgs, out: &mut Output) -> CliResult<String> {
    let nu = parse::direction(&a.nu)?;
    let x0 = parse::reals(&a.x0)?;
    if x0.len() != 2 {
        return Err(invalid("x0 needs two components"));
    }
    let h = Hyperplane::new(nu.clone(), x0.clone())?;
    let t = [-nu.nu[1], nu.nu[0]];
    let x = [x0[0] + a.along.0 * t[0], x0[1] + a.along.0 * t[1]];
    let mut csv = Csv::new(&["n", "distance", "oracle", "omega"]);
    for n in &a.n {
        if n.0 > 2000.0 {
            return Err(invalid(format!(
                "N = {} is beyond the exhaustive oracle's reach (2000)",
                n.0
            )));
        }
        let ap = approach_point(&h, &x, n.0)?;
        let oracle = exhaustive_lattice_distance(&h, &x, radius_constant(2) * n.0);
        csv.row(&[n, &ap.distance, &oracle, &omega(&nu, n.0)?]);
    }
    out.csv("lattice.csv", &csv)?;
    Ok(csv.as_str().to_string())
}

/// Strip and scheme parameters shared by `cell` and `sweep`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CellParams {
    /// Strip depth.
    #[arg(long, default_value = "8")]
    pub depth: Real,
    /// Grid spacing.
    #[arg(long, default_value = "1/64")]
    pub h: Real,
    /// Number of base-point translates.
    #[arg(long, default_value_t = 8)]
    pub translates: usize,
    /// Lateral width; chosen automatically when absent.
    #[arg(long)]
    pub width: Option<Real>,
    /// Largest automatic width as a multiple of the depth.
    #[arg(long, default_value = "3")]
    pub max_width_factor: Real,
    /// Re-solve at twice the spacing to estimate the discretization error.
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    pub richardson: bool,
    /// Pointwise solver tolerance.
    #[arg(long, default_value = "1e-8")]
    pub tol: Real,
    /// Rotated frames for extremal operators.
    #[arg(long, default_value_t = 8)]
    pub frames: usize,
}

impl CellParams {
    fn config(&self) -> CellConfig {
        CellConfig {
            depth: self.depth.0,
            h: self.h.0,
            translates: self.translates,
            width: self.width.map(|w| w.0),
            max_width_factor: self.max_width_factor.0,
            richardson: self.richardson,
            scheme: scheme(self.tol, self.frames),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CellArgs {
    /// Periodic boundary data in the fast variable.
    #[arg(long, default_value = "cos(1, 0)")]
    pub psi: String,
    /// Operator specification.
    #[arg(long, default_value = "laplacian")]
    pub operator: String,
    /// Inner normal as `a,b` or `angle:t`.
    #[arg(long, default_value = "1,sqrt2")]
    pub nu: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: CellParams,
    /// Also write an SVG of the depth profile.
    #[arg(long)]
    #[serde(default)]
    pub svg: bool,
}

/// One cell problem: the averaged record and the depth profile of the first translate.
pub fn run_cell(a: &CellArgs, out: &mut Output) -> CliResult<String> {
    let psi = expr(&a.psi)?;
    let nu = parse::direction(&a.nu)?;
    let op = parse::operator(&a.operator, Some(nu.as_2d()))?;
    let cfg = a.params.config();
    let setup = CellSetup::new(psi, op, nu.clone(), &cfg)?;
    let translates = default_translates(&nu, cfg.translates);
    let avg = estimate_mu(&setup, &translates, &cfg)?;
    let field = solve_cell(&setup.clone().with_x0(translates[0]), cfg.h, &cfg.scheme)?;
    let profile = trace_profile(&field);
    let mut csv = Csv::new(&["depth", "min", "max"]);
    for s in &profile {
        csv.row(&[&s.depth, &s.min, &s.max]);
    }
    out.json("cell.json", &avg)?;
    out.csv("cell_profile.csv", &csv)?;
    if a.svg {
        let lo: Vec<(f64, f64)> = profile.iter().map(|s| (s.depth, s.min)).collect();
        let hi: Vec<(f64, f64)> = profile.iter().map(|s| (s.depth, s.max)).collect();
        let svg = line_plot(
            "cell solution by depth",
            "depth",
            "value",
            &[("row min", lo), ("row max", hi)],
        );
        out.write("cell_profile.svg", svg.as_bytes())?;
    }
    Ok(format!(
        "mu_bar {} (mu_lower {}, mu_star {}), budget {}\n",
        avg.mu_bar, avg.mu_lower, avg.mu_star, avg.total_budget
    ))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, default_value = "cos(1, 0)")]
    pub psi: String,
    /// Operator specification; `example_3_7(L)` is frozen at `--reference`.
    #[arg(long, default_value = "laplacian")]
    pub operator: String,
    /// Number of uniformly spaced angles.
    #[arg(long, default_value_t = 64)]
    pub uniform: usize,
    /// Offset of the uniform angles in radians.
    #[arg(long, default_value = "0.05")]
    pub offset: Real,
    /// Additional golden-ratio angles clustered around `--reference`.
    #[arg(long, default_value_t = 0)]
    pub golden: usize,
    /// Half-width of the golden cluster in radians.
    #[arg(long, default_value = "0.02")]
    pub spread: Real,
    /// Reference direction for the golden cluster and the continuity report.
    #[arg(long, default_value = "1,sqrt2")]
    pub reference: String,
    /// Radius of the continuity window; no report when absent.
    #[arg(long)]
    pub continuity_radius: Option<Real>,
    /// Largest admissible fitted continuity constant.
    #[arg(long, default_value = "10")]
    pub max_constant: Real,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: CellParams,
}

/// Boundary table over many directions.
pub fn run_sweep(a: &SweepArgs, out: &mut Output) -> CliResult<String> {
    let psi = expr(&a.psi)?;
    let reference = parse::direction(&a.reference)?;
    let op = parse::operator(&a.operator, Some(reference.as_2d()))?;
    let mut angles = uniform_angles(a.uniform, a.offset.0);
    if a.golden > 0 {
        angles.extend(golden_angles(reference.angle(), a.spread.0, a.golden));
    }
    if angles.is_empty() {
        return Err(invalid("no directions requested"));
    }
    let table = sweep(&psi, &op, &angles, &a.params.config())?;
    let mut csv = Csv::new(&[
        "angle", "nu1", "nu2", "rational", "mu_bar", "mu_lower", "mu_star", "budget", "failure",
    ]);
    for e in &table.entries {
        let (mu, lo, hi, budget) = match &e.cell {
            Some(c) => (c.mu_bar, c.mu_lower, c.mu_star, c.total_budget),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        let failure = e.failure.as_deref().map(quoted).unwrap_or_default();
        csv.row(&[
            &e.angle,
            &e.nu[0],
            &e.nu[1],
            &e.rational,
            &mu,
            &lo,
            &hi,
            &budget,
            &failure,
        ]);
    }
    out.write("table.json", table.to_json()?.as_bytes())?;
    out.csv("table.csv", &csv)?;
    out.write("table.svg", polar_plot(&table).as_bytes())?;
    let mut summary = format!(
        "{} directions, {} failed\n",
        table.entries.len(),
        table.failures()
    );
    if let Some(r) = a.continuity_radius {
        let rep = continuity_report(&table, &reference, r.0, a.max_constant.0)?;
        out.json(
            "continuity.json",
            &ContinuityRecord {
                schema_version: SCHEMA_VERSION,
                report: rep.clone(),
            },
        )?;
        summary += &format!(
            "oscillation {} over {} neighbors, fitted constant {}, conformant {}\n",
            rep.oscillation, rep.neighbors, rep.fitted_constant, rep.conformant
        );
    }
    Ok(summary)
}

#[derive(Serialize)]
struct ContinuityRecord {
    schema_version: u32,
    #[serde(flatten)]
    report: oscbc::boundary_map::ContinuityReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremalArg {
    Maximal,
    Minimal,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Beta0Args {
    #[arg(long, default_value = "1")]
    pub lambda: Real,
    #[arg(long, default_value = "2")]
    pub big_lambda: Real,
    /// Cone parameter in (0, 1]; 1 is the half plane.
    #[arg(long, default_value = "1")]
    pub gamma: Real,
    /// Shooting tolerance on beta.
    #[arg(long, default_value = "1e-8")]
    pub tol: Real,
    /// Extremal operator annihilating the profile.
    #[arg(long, value_enum, default_value = "maximal")]
    pub extremal: ExtremalArg,
    /// Rows of the profile table.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

#[derive(Serialize)]
struct Beta0Record {
    schema_version: u32,
    beta0: f64,
    lambda: f64,
    big_lambda: f64,
    gamma: f64,
    extremal: Extremal,
    half_angle: f64,
    tolerance: f64,
}

/// Homogeneity exponent and angular profile of the singular solution.
pub fn run_beta0(a: &Beta0Args, out: &mut Output) -> CliResult<String> {
    if a.samples < 2 {
        return Err(invalid("samples must be at least 2"));
    }
    let which = match a.extremal {
        ExtremalArg::Maximal => Extremal::Maximal,
        ExtremalArg::Minimal => Extremal::Minimal,
    };
    let s = compute_singular(a.lambda.0, a.big_lambda.0, a.gamma.0, a.tol.0, which)?;
    let mut csv = Csv::new(&["t", "angle_from_axis", "phi", "dphi"]);
    for k in 0..a.samples {
        let t = s.arc() * k as f64 / (a.samples - 1) as f64;
        let (p, dp) = match k {
            0 => (0.0, s.dprofile[0]),
            _ if k == a.samples - 1 => (0.0, *s.dprofile.last().expect("nonempty")),
            _ => s.angular(t),
        };
        csv.row(&[&t, &(t - s.half_angle), &p, &dp]);
    }
    let record = Beta0Record {
        schema_version: SCHEMA_VERSION,
        beta0: s.beta0,
        lambda: s.lambda,
        big_lambda: s.big_lambda,
        gamma: s.gamma,
        extremal: s.extremal,
        half_angle: s.half_angle,
        tolerance: s.tolerance,
    };
    out.json("beta0.json", &record)?;
    out.csv("beta0_profile.csv", &csv)?;
    Ok(format!("beta0 {}\n", s.beta0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainArg {
    Disk,
    Ellipse,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonArgs {
    #[arg(long, value_enum, default_value = "disk")]
    pub domain: DomainArg,
    #[arg(long, default_value = "laplacian")]
    pub operator: String,
    /// Boundary data in the fast variable.
    #[arg(long, default_value = "cos(1, 0)")]
    pub g: String,
    /// Strictly decreasing oscillation scales.
    #[arg(long, value_delimiter = ',', default_value = "1/8,1/16,1/32")]
    pub eps: Vec<Real>,
    /// Grid spacing.
    #[arg(long, default_value = "1/256")]
    pub h: Real,
    /// Boundary table from `sweep`; a coarse 64-direction table is built when absent.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Largest angular gap bridged by table interpolation; defaults to 1.1 times the table's spacing.
    #[arg(long)]
    pub max_gap: Option<Real>,
    /// Radius of the interior ball where errors are measured.
    #[arg(long, default_value = "0.5")]
    pub radius: Real,
    /// Admissible error at the smallest scale.
    #[arg(long, default_value = "0.1")]
    pub threshold: Real,
    #[arg(long, default_value = "1e-8")]
    pub tol: Real,
    /// Also dump every field in the binary format.
    #[arg(long)]
    #[serde(default)]
    pub fields: bool,
}

fn coarse_table(g: &Expr, op: &oscbc::operators::EllipticOperator) -> CliResult<BoundaryTable> {
    let cfg = CellConfig {
        depth: 2.0,
        h: 1.0 / 16.0,
        translates: 4,
        max_width_factor: 8.0,
        richardson: false,
        ..Default::default()
    };
    Ok(sweep(g, op, &uniform_angles(64, 0.0), &cfg)?)
}

fn largest_spacing(table: &BoundaryTable) -> f64 {
    let angles: Vec<f64> = table.successes().map(|e| e.angle).collect();
    let mut gap = match (angles.first(), angles.last()) {
        (Some(a), Some(b)) => a + TAU - b,
        _ => return f64::INFINITY,
    };
    for w in angles.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap
}

fn diameter(field: &DiscreteField, radius: f64, n: usize) -> Vec<(f64, f64)> {
    (0..=n)
        .filter_map(|k| {
            let x = -radius + 2.0 * radius * k as f64 / n as f64;
            field.sample([x, 0.0]).map(|v| (x, v))
        })
        .collect()
}

/// Convergence of `u^eps` to the homogenized solution on an interior ball.
pub fn run_epsilon(a: &EpsilonArgs, out: &mut Output) -> CliResult<String> {
    let g = expr(&a.g)?;
    if g.depends_on_x() {
        return Err(invalid(
            "the homogenized problem needs data depending on the fast variable only",
        ));
    }
    let op = parse::operator(&a.operator, None)?;
    let domain = match a.domain {
        DomainArg::Disk => SmoothDomain::unit_disk(),
        DomainArg::Ellipse => SmoothDomain::default_ellipse(),
    };
    let eps: Vec<f64> = a.eps.iter().map(|e| e.0).collect();
    let first = *eps
        .first()
        .ok_or_else(|| invalid("at least one epsilon is needed"))?;
    let table = match &a.table {
        Some(p) => {
            let f = std::fs::File::open(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            let t = BoundaryTable::load(std::io::BufReader::new(f))?;
            if t.psi != g.to_string() {
                return Err(invalid(format!(
                    "table was built for {} but g is {}",
                    t.psi, g
                )));
            }
            t
        }
        None => coarse_table(&g, &op)?,
    };
    let max_gap = a
        .max_gap
        .map(|m| m.0)
        .unwrap_or(1.1 * largest_spacing(&table));
    let cfg = scheme(a.tol, 8);
    let prob = EpsilonProblem::new(domain.clone(), g, op.clone(), first)?;
    let bar = solve_homogenized(&domain, &table, &op, a.h.0, max_gap, &cfg)?;
    let ball = InteriorBall {
        center: domain.center,
        radius: a.radius.0,
    };
    let (report, fields) =
        convergence_study_fields(&prob, &bar.field, &eps, ball, a.threshold.0, &cfg)?;
    let mut csv = Csv::new(&[
        "epsilon",
        "sup_error",
        "center_value",
        "trace_min",
        "trace_max",
        "layer_width",
        "layer_ratio",
        "iterations",
    ]);
    for r in &report.rows {
        csv.row(&[
            &r.epsilon,
            &r.sup_error,
            &r.center_value,
            &r.trace_min,
            &r.trace_max,
            &r.layer_width,
            &r.layer_ratio,
            &r.iterations,
        ]);
    }
    out.json("convergence.json", &report)?;
    out.csv("convergence.csv", &csv)?;
    let n = (2.0 / a.h.0).round() as usize;
    let mut series = vec![("u_bar".to_string(), diameter(&bar.field, 1.0, n))];
    for (e, f) in eps.iter().zip(&fields) {
        series.push((format!("eps = {e}"), diameter(f, 1.0, n)));
    }
    let named: Vec<(&str, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(s, v)| (s.as_str(), v.clone()))
        .collect();
    out.write(
        "diameter.svg",
        line_plot("solutions along x2 = 0", "x1", "u", &named).as_bytes(),
    )?;
    if a.fields {
        let mut buf = Vec::new();
        bar.field.write_binary(&mut buf)?;
        out.write("u_bar.bin", &buf)?;
        for (k, f) in fields.iter().enumerate() {
            let mut buf = Vec::new();
            f.write_binary(&mut buf)?;
            out.write(&format!("u_eps_{k}.bin"), &buf)?;
        }
    }
    let errs: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{:.4}", r.sup_error))
        .collect();
    Ok(format!(
        "sup errors [{}], strictly decreasing {}, final within {} {}\n",
        errs.join(", "),
        report.strictly_decreasing,
        report.threshold,
        report.final_within_threshold
    ))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

/// Runs the invariant suite; failures map to exit code 2.
pub fn run_verify(a: &VerifyArgs, out: &mut Output) -> CliResult<String> {
    let report = run_suite(a.seed);
    out.json("verify.json", &report)?;
    let mut text = String::new();
    for c in &report.checks {
        text += &format!(
            "{} {} ({:.2} s): {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.seconds,
            c.detail
        );
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    text += &format!(
        "{} of {} checks passed\n",
        report.checks.len() - failed,
        report.checks.len()
    );
    if failed > 0 {
        print!("{text}");
        return Err(CliError::Solver(format!(
            "{failed} invariant checks failed"
        )));
    }
    Ok(text)
}

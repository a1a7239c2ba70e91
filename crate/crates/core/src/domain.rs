//! Oscillating Dirichlet problems on smooth convex domains and their
//! homogenized limits.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary_map::{BoundaryTable, Lookup};
use crate::cell::{check_periodic, SCHEMA_VERSION};
use crate::discrepancy::classify_rationality;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::matrix::SymMatrix2;
use crate::operators::EllipticOperator;
use crate::singular::{
    build_phi_delta, compute_beta0, verify_supersolution, CoverBall, SingularSolution,
    SupersolutionReport,
};
use crate::solver::{DiscreteField, Frame, Grid, NodeKind, Region, Scheme, SchemeConfig};

/// Denominator bound of the rational boundary-point catalog.
pub const CATALOG_Q: u64 = 50;

/// A boundary point whose inner normal is parallel to an integer vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalPoint {
    pub k: [i64; 2],
    pub point: [f64; 2],
    pub normal: [f64; 2],
    pub angle: f64,
}

/// The ellipse `{(x - c)^T A (x - c) <= 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothDomain {
    pub center: [f64; 2],
    pub semi_axes: [f64; 2],
    pub rotation: f64,
    /// Exterior cone parameter; convex domains satisfy it with `gamma = 1`.
    pub gamma: f64,
    pub catalog: Vec<RationalPoint>,
}

impl SmoothDomain {
    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self> {
        Self::ellipse(center, [radius, radius], 0.0)
    }

    pub fn ellipse(center: [f64; 2], semi_axes: [f64; 2], rotation: f64) -> Result<Self> {
        if !(semi_axes[0] > 0.0 && semi_axes[1] > 0.0)
            || !semi_axes.iter().chain(&center).all(|v| v.is_finite())
        {
            return Err(Error::Invalid(
                "semi-axes must be positive and finite".into(),
            ));
        }
        let mut d = Self {
            center,
            semi_axes,
            rotation,
            gamma: 1.0,
            catalog: Vec::new(),
        };
        d.catalog = d.rational_catalog(CATALOG_Q);
        Ok(d)
    }

    /// Unit disk.
    pub fn unit_disk() -> Self {
        Self::disk([0.0; 2], 1.0).expect("valid disk")
    }

    /// Ellipse with axis ratio 1.37, rotated off the coordinate axes.
    pub fn default_ellipse() -> Self {
        Self::ellipse([0.0; 2], [1.0, 1.0 / 1.37], 0.3).expect("valid ellipse")
    }

    pub fn form(&self) -> SymMatrix2 {
        let [a, b] = self.semi_axes;
        SymMatrix2::rotated_diag(self.rotation, 1.0 / (a * a), 1.0 / (b * b))
    }

    /// The domain in the local coordinates of `grid`.
    pub fn region(&self, grid: &Grid) -> Region {
        let f = grid.frame;
        Region::Quadric {
            center: f.to_local(grid.origin, self.center),
            form: self.form().in_basis(f.e1, f.e2),
        }
    }

    pub fn level(&self, p: [f64; 2]) -> f64 {
        self.form()
            .quad([p[0] - self.center[0], p[1] - self.center[1]])
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.level(p) < 1.0
    }

    /// Boundary point at parameter `t`.
    pub fn boundary_point(&self, t: f64) -> [f64; 2] {
        let (s, c) = self.rotation.sin_cos();
        let (x, y) = (self.semi_axes[0] * t.cos(), self.semi_axes[1] * t.sin());
        [
            self.center[0] + c * x - s * y,
            self.center[1] + s * x + c * y,
        ]
    }

    /// Unit inner normal of the level set through `p`.
    pub fn inner_normal(&self, p: [f64; 2]) -> [f64; 2] {
        let a = self.form();
        let r = [p[0] - self.center[0], p[1] - self.center[1]];
        let g = [a.xx * r[0] + a.xy * r[1], a.xy * r[0] + a.yy * r[1]];
        let n = g[0].hypot(g[1]);
        [-g[0] / n, -g[1] / n]
    }

    /// Curvature at parameter `t`.
    pub fn curvature(&self, t: f64) -> f64 {
        let [a, b] = self.semi_axes;
        a * b / (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5)
    }

    /// First-order distance to the boundary, exact for disks.
    pub fn distance_to_boundary(&self, p: [f64; 2]) -> f64 {
        let l = self.level(p);
        let a = self.form();
        let r = [p[0] - self.center[0], p[1] - self.center[1]];
        let g = [
            2.0 * (a.xx * r[0] + a.xy * r[1]),
            2.0 * (a.xy * r[0] + a.yy * r[1]),
        ];
        let s = l.sqrt();
        if s == 0.0 {
            return self.semi_axes[0].min(self.semi_axes[1]);
        }
        // distance through the homogeneous level sqrt(l)
        (1.0 - s) / (g[0].hypot(g[1]) / (2.0 * s))
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let a = self.form();
        let det = a.det();
        // support of the ellipse along the axes: sqrt((A^{-1})_ii)
        let ex = (a.yy / det).sqrt();
        let ey = (a.xx / det).sqrt();
        (
            [self.center[0] - ex, self.center[1] - ey],
            [self.center[0] + ex, self.center[1] + ey],
        )
    }

    /// Boundary points with inner normal parallel to a primitive `k` with
    /// `max |k_i| <= q`, confirmed rational by continued fractions.
    pub fn rational_catalog(&self, q: u64) -> Vec<RationalPoint> {
        let q = q as i64;
        let a = self.form();
        let det = a.det();
        let inv = SymMatrix2::new(a.yy / det, -a.xy / det, a.xx / det);
        let mut out = Vec::new();
        for k1 in -q..=q {
            for k2 in -q..=q {
                if gcd(k1.unsigned_abs(), k2.unsigned_abs()) != 1 {
                    continue;
                }
                let k = [k1 as f64, k2 as f64];
                let w = [inv.xx * k[0] + inv.xy * k[1], inv.xy * k[0] + inv.yy * k[1]];
                let s = 1.0 / inv.quad(k).sqrt();
                let point = [self.center[0] - s * w[0], self.center[1] - s * w[1]];
                let normal = self.inner_normal(point);
                if classify_rationality(&normal, q as u64).is_rational() {
                    out.push(RationalPoint {
                        k: [k1, k2],
                        point,
                        normal,
                        angle: normal[1].atan2(normal[0]).rem_euclid(TAU),
                    });
                }
            }
        }
        out.sort_by(|a, b| a.angle.total_cmp(&b.angle));
        out
    }

    pub fn catalog_angles(&self) -> Vec<f64> {
        self.catalog.iter().map(|r| r.angle).collect()
    }

    /// Cartesian grid of spacing `h` covering the domain with a margin.
    pub fn grid(&self, h: f64) -> Result<Grid> {
        if !(h > 0.0) {
            return Err(Error::Invalid(format!(
                "grid spacing must be positive, got {h}"
            )));
        }
        let (lo, hi) = self.bounding_box();
        let origin = [lo[0] - 2.0 * h, lo[1] - 2.0 * h];
        let cols = ((hi[0] - lo[0]) / h).ceil() as usize + 5;
        let rows = ((hi[1] - lo[1]) / h).ceil() as usize + 5;
        Grid::new(origin, Frame::IDENTITY, h, cols, rows, false)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `F(D^2 u, x, x/eps) = 0` in the domain with `u = g(x, x/eps)` on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonProblem {
    pub domain: SmoothDomain,
    pub g: Expr,
    pub op: EllipticOperator,
    pub epsilon: f64,
}

impl EpsilonProblem {
    pub fn new(domain: SmoothDomain, g: Expr, op: EllipticOperator, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Invalid(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        for x in [[0.1, -0.3], [0.7, 0.2]] {
            check_periodic(&g.frozen(x))?;
        }
        Ok(Self {
            domain,
            g,
            op,
            epsilon,
        })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(
            self.domain.clone(),
            self.g.clone(),
            self.op.clone(),
            epsilon,
        )
    }
}

/// Solves the oscillating problem on a grid of spacing `h <= eps / 8`.
pub fn solve_epsilon(prob: &EpsilonProblem, h: f64, cfg: &SchemeConfig) -> Result<DiscreteField> {
    let limit = prob.epsilon / 8.0;
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::Resolution { h, limit });
    }
    let grid = prob.domain.grid(h)?;
    let scale = 1.0 / prob.epsilon;
    let region = prob.domain.region(&grid);
    let scheme = Scheme::with_fast_scale(&prob.op, grid, region, cfg.clone(), scale)?;
    let g = &prob.g;
    scheme.solve_dirichlet(&|p| g.eval(p, [p[0] * scale, p[1] * scale]))
}

/// Homogenized solve together with how its data was assembled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedSolution {
    pub field: DiscreteField,
    pub data_points: usize,
    /// Data points whose table interpolation crossed a catalogued rational direction.
    pub bridged: usize,
    /// Data points sitting on a catalogued rational normal, where the table is not evaluated.
    pub rational_hits: usize,
    pub largest_gap: f64,
}

/// Solves `F(D^2 u, x) = 0` with data `g(x) = mu(nu_x)` read from `table`,
/// built for boundary data that does not depend on the slow variable.
pub fn solve_homogenized(
    domain: &SmoothDomain,
    table: &BoundaryTable,
    f_bar: &EllipticOperator,
    h: f64,
    max_gap: f64,
    cfg: &SchemeConfig,
) -> Result<HomogenizedSolution> {
    let grid = domain.grid(h)?;
    let scheme = Scheme::new(f_bar, grid.clone(), domain.region(&grid), cfg.clone())?;
    let rational = domain.catalog_angles();
    let lookup = |p: [f64; 2]| -> Result<(Lookup, bool)> {
        let n = domain.inner_normal(p);
        let a = n[1].atan2(n[0]).rem_euclid(TAU);
        let on_rational = rational.iter().any(|r| (r - a).abs() < 1e-12);
        Ok((table.interpolate(a, max_gap, &rational)?, on_rational))
    };
    let (mut bridged, mut rational_hits, mut largest_gap) = (0, 0, 0.0f64);
    for &p in scheme.boundary_points() {
        let (l, on) = lookup(p)?;
        bridged += l.bridged as usize;
        rational_hits += on as usize;
        largest_gap = largest_gap.max(l.gap);
    }
    let field = scheme.solve_dirichlet(&|p| lookup(p).map(|(l, _)| l.value).unwrap_or(f64::NAN))?;
    Ok(HomogenizedSolution {
        field,
        data_points: scheme.boundary_points().len(),
        bridged,
        rational_hits,
        largest_gap,
    })
}

/// Interior compact set `{|x - center| <= radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorBall {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub sup_error: f64,
    pub center_value: f64,
    pub trace_min: f64,
    pub trace_max: f64,
    /// Largest boundary distance of a node where the error exceeds twice `sup_error`.
    pub layer_width: f64,
    /// `layer_width / (eps |log eps|)`.
    pub layer_ratio: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub h: f64,
    pub compact: InteriorBall,
    pub rows: Vec<ConvergenceRow>,
    pub strictly_decreasing: bool,
    pub threshold: f64,
    pub final_within_threshold: bool,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.strictly_decreasing && self.final_within_threshold
    }
}

/// Compares `u^eps` with the homogenized field `u_bar` (same grid) on `k`.
pub fn convergence_study(
    prob: &EpsilonProblem,
    u_bar: &DiscreteField,
    eps_list: &[f64],
    k: InteriorBall,
    threshold: f64,
    cfg: &SchemeConfig,
) -> Result<ConvergenceReport> {
    convergence_study_fields(prob, u_bar, eps_list, k, threshold, cfg).map(|(r, _)| r)
}

/// [`convergence_study`] that also returns each `u^eps`, in `eps_list` order.
pub fn convergence_study_fields(
    prob: &EpsilonProblem,
    u_bar: &DiscreteField,
    eps_list: &[f64],
    k: InteriorBall,
    threshold: f64,
    cfg: &SchemeConfig,
) -> Result<(ConvergenceReport, Vec<DiscreteField>)> {
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Invalid(
            "epsilon list must be strictly decreasing".into(),
        ));
    }
    let probe = [k.center[0] + k.radius, k.center[1]];
    if !(prob.domain.distance_to_boundary(k.center) - k.radius >= 0.25 - 1e-12)
        || !prob.domain.contains(probe)
    {
        return Err(Error::Invalid(
            "the compact set must stay 0.25 away from the boundary".into(),
        ));
    }
    let h = u_bar.grid.h;
    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let p = prob.with_epsilon(eps)?;
            let u = solve_epsilon(&p, h, cfg)?;
            if u.grid != u_bar.grid {
                return Err(Error::Invalid("u_bar must live on the epsilon grid".into()));
            }
            let mut sup_error = 0.0f64;
            let mut errs = Vec::with_capacity(u.grid.len());
            for idx in 0..u.grid.len() {
                if u.kinds[idx] != NodeKind::Interior {
                    continue;
                }
                let (i, j) = u.grid.coords(idx);
                let x = u.grid.point(i, j);
                let e = (u.values[idx] - u_bar.values[idx]).abs();
                if (x[0] - k.center[0]).hypot(x[1] - k.center[1]) <= k.radius {
                    sup_error = sup_error.max(e);
                }
                errs.push((x, e));
            }
            let layer_width = errs
                .iter()
                .filter(|(_, e)| *e > 2.0 * sup_error)
                .map(|(x, _)| p.domain.distance_to_boundary(*x))
                .fold(0.0, f64::max);
            let (trace_min, trace_max) = u
                .boundary_trace
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                });
            let row = ConvergenceRow {
                epsilon: eps,
                sup_error,
                center_value: u.sample(k.center).unwrap_or(f64::NAN),
                trace_min,
                trace_max,
                layer_width,
                layer_ratio: layer_width / (eps * eps.ln().abs()),
                iterations: u.iterations,
            };
            Ok((row, u))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, fields): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let strictly_decreasing = rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error);
    let final_within_threshold = rows.last().is_some_and(|r| r.sup_error <= threshold);
    let report = ConvergenceReport {
        schema_version: SCHEMA_VERSION,
        h,
        compact: k,
        rows,
        strictly_decreasing,
        threshold,
        final_within_threshold,
    };
    Ok((report, fields))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupSample {
    pub epsilon: f64,
    pub r: f64,
    pub value: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub schema_version: u32,
    pub boundary_point: [f64; 2],
    pub normal: [f64; 2],
    pub g_bar: f64,
    pub samples: Vec<BlowupSample>,
    pub final_deviation: f64,
    pub allowance: f64,
    pub passed: bool,
}

/// Samples `u^eps(x + eps R nu_x)` and compares with `g_bar` at the boundary
/// point of parameter `t`. Each solve uses `h = eps / cells_per_eps`.
#[allow(clippy::too_many_arguments)]
pub fn blowup_check(
    prob: &EpsilonProblem,
    t: f64,
    r_list: &[f64],
    eps_list: &[f64],
    cells_per_eps: f64,
    g_bar: f64,
    delta: f64,
    budget: f64,
    cfg: &SchemeConfig,
) -> Result<BlowupReport> {
    if r_list.is_empty() || eps_list.is_empty() || !(cells_per_eps >= 8.0) {
        return Err(Error::Invalid(
            "need radii, epsilons and at least 8 cells per epsilon".into(),
        ));
    }
    let x = prob.domain.boundary_point(t);
    let nu = prob.domain.inner_normal(x);
    if classify_rationality(&nu, CATALOG_Q).is_rational() {
        return Err(Error::Invalid(
            "the boundary point has a rational normal".into(),
        ));
    }
    let per_eps = eps_list
        .par_iter()
        .map(|&eps| {
            let u = solve_epsilon(&prob.with_epsilon(eps)?, eps / cells_per_eps, cfg)?;
            r_list
                .iter()
                .map(|&r| {
                    let p = [x[0] + eps * r * nu[0], x[1] + eps * r * nu[1]];
                    let value = u.sample(p).ok_or_else(|| {
                        Error::Invalid(format!("sample point {p:?} is off the grid"))
                    })?;
                    Ok(BlowupSample {
                        epsilon: eps,
                        r,
                        value,
                        deviation: (value - g_bar).abs(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<BlowupSample> = per_eps.into_iter().flatten().collect();
    let e_min = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    let r_max = r_list.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let final_deviation = samples
        .iter()
        .find(|s| s.epsilon == e_min && s.r == r_max)
        .map(|s| s.deviation)
        .expect("sample present");
    let allowance = delta + budget;
    Ok(BlowupReport {
        schema_version: SCHEMA_VERSION,
        boundary_point: x,
        normal: nu,
        g_bar,
        samples,
        final_deviation,
        allowance,
        passed: final_deviation <= allowance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialComparisonReport {
    pub schema_version: u32,
    pub delta: f64,
    pub w_inf: f64,
    pub amplitude: f64,
    /// `min (phi_delta - w)` over interior nodes.
    pub margin: f64,
    pub worst_point: [f64; 2],
    /// Largest `w` at interior nodes at least `distance` from the boundary.
    pub interior_w: f64,
    /// Smallest barrier value at those nodes.
    pub interior_barrier: f64,
    pub distance: f64,
    pub slack: f64,
    pub passed: bool,
}

/// Checks `w = u - v <= phi_delta` at every interior node.
#[allow(clippy::too_many_arguments)]
pub fn partial_comparison_check(
    domain: &SmoothDomain,
    u: &DiscreteField,
    v: &DiscreteField,
    cover: &[CoverBall],
    sol: &SingularSolution,
    delta: f64,
    slack: f64,
    distance: f64,
) -> Result<PartialComparisonReport> {
    if u.grid != v.grid {
        return Err(Error::Invalid("u and v must share a grid".into()));
    }
    let w: Vec<f64> = u.values.iter().zip(&v.values).map(|(a, b)| a - b).collect();
    let w_inf = w
        .iter()
        .zip(&u.kinds)
        .filter(|(_, k)| **k != NodeKind::Exterior)
        .map(|(x, _)| x.abs())
        .chain(
            u.boundary_trace
                .iter()
                .zip(&v.boundary_trace)
                .map(|(a, b)| (a - b).abs()),
        )
        .fold(0.0, f64::max);
    let barrier = build_phi_delta(w_inf, cover, delta, sol)?;
    let (mut margin, mut worst_point) = (f64::INFINITY, [f64::NAN; 2]);
    let (mut interior_w, mut interior_barrier) = (f64::NEG_INFINITY, f64::INFINITY);
    for idx in 0..u.grid.len() {
        if u.kinds[idx] != NodeKind::Interior {
            continue;
        }
        let (i, j) = u.grid.coords(idx);
        let x = u.grid.point(i, j);
        let phi = barrier.value(x);
        if phi - w[idx] < margin {
            margin = phi - w[idx];
            worst_point = x;
        }
        if domain.distance_to_boundary(x) >= distance {
            interior_w = interior_w.max(w[idx]);
            interior_barrier = interior_barrier.min(phi);
        }
    }
    Ok(PartialComparisonReport {
        schema_version: SCHEMA_VERSION,
        delta,
        w_inf,
        amplitude: barrier.amplitude,
        margin,
        worst_point,
        interior_w,
        interior_barrier,
        distance,
        slack,
        passed: margin >= -slack,
    })
}

/// Parameters of the one-ball disk experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneBallConfig {
    pub h: f64,
    /// Boundary angle of the bump center.
    pub angle: f64,
    pub arc_length: f64,
    pub ball_radius: f64,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    pub scheme: SchemeConfig,
}

impl Default for OneBallConfig {
    fn default() -> Self {
        Self {
            h: 1.0 / 256.0,
            angle: 0.9,
            arc_length: 0.01,
            ball_radius: 0.007,
            delta: 0.15,
            samples: 10_000,
            seed: 7,
            scheme: SchemeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneBallReport {
    pub schema_version: u32,
    pub beta0: f64,
    pub supersolution: SupersolutionReport,
    pub comparison: PartialComparisonReport,
}

impl OneBallReport {
    pub fn passed(&self) -> bool {
        self.supersolution.passed && self.comparison.passed
    }
}

/// Laplacian on the unit disk: `u` carries a unit bump on a short boundary
/// arc over the data of `v`; one ball covers the arc.
pub fn one_ball_experiment(cfg: &OneBallConfig) -> Result<OneBallReport> {
    if !(cfg.arc_length > 0.0 && 0.5 * cfg.arc_length < cfg.ball_radius) {
        return Err(Error::Invalid("the ball must cover the bump arc".into()));
    }
    let domain = SmoothDomain::unit_disk();
    let sol = compute_beta0(1.0, 1.0, 1.0, 1e-10)?;
    let grid = domain.grid(cfg.h)?;
    let scheme = Scheme::new(
        &EllipticOperator::laplacian(),
        grid.clone(),
        domain.region(&grid),
        cfg.scheme.clone(),
    )?;
    let base = |p: [f64; 2]| (TAU * p[0]).cos() * 0.5;
    let half = 0.5 * cfg.arc_length;
    let bump = |p: [f64; 2]| {
        let d = (p[1].atan2(p[0]) - cfg.angle + PI).rem_euclid(TAU) - PI;
        if d.abs() <= half {
            1.0
        } else {
            0.0
        }
    };
    let u = scheme.solve_dirichlet(&|p| base(p) + bump(p))?;
    let v = scheme.solve_dirichlet(&base)?;
    let center = domain.boundary_point(cfg.angle);
    let cover = [CoverBall {
        center,
        radius: cfg.ball_radius,
        eta: domain.inner_normal(center),
    }];
    let comparison = partial_comparison_check(
        &domain,
        &u,
        &v,
        &cover,
        &sol,
        cfg.delta,
        2.0 * cfg.scheme.tol,
        0.3,
    )?;
    let w_inf = comparison.w_inf;
    let barrier = build_phi_delta(w_inf, &cover, cfg.delta, &sol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::with_capacity(cfg.samples);
    while points.len() < cfg.samples {
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if domain.contains(p) {
            points.push(p);
        }
    }
    let supersolution = verify_supersolution(&barrier, &points, 1e-8);
    Ok(OneBallReport {
        schema_version: SCHEMA_VERSION,
        beta0: sol.beta0,
        supersolution,
        comparison,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_geometry_is_consistent() {
        let d = SmoothDomain::default_ellipse();
        for k in 0..16 {
            let t = k as f64 * 0.4;
            let p = d.boundary_point(t);
            assert!((d.level(p) - 1.0).abs() < 1e-12);
            assert!(d.curvature(t) > 0.0);
            let n = d.inner_normal(p);
            assert!(d.contains([p[0] + 1e-6 * n[0], p[1] + 1e-6 * n[1]]));
            assert!(d.distance_to_boundary(p).abs() < 1e-12);
        }
        let (lo, hi) = d.bounding_box();
        for k in 0..64 {
            let p = d.boundary_point(k as f64 * TAU / 64.0);
            assert!(
                p[0] >= lo[0] - 1e-12
                    && p[0] <= hi[0] + 1e-12
                    && p[1] >= lo[1] - 1e-12
                    && p[1] <= hi[1] + 1e-12
            );
        }
        let disk = SmoothDomain::unit_disk();
        assert!((disk.distance_to_boundary([0.3, 0.4]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn catalog_lists_rational_normals() {
        let d = SmoothDomain::unit_disk();
        assert!(d
            .catalog
            .iter()
            .any(|r| r.k == [0, 1] && (r.point[1] + 1.0).abs() < 1e-12));
        for r in &d.catalog {
            assert!((r.normal[0] * r.k[1] as f64 - r.normal[1] * r.k[0] as f64).abs() < 1e-9);
            assert!(r.k[0].abs().max(r.k[1].abs()) <= CATALOG_Q as i64);
        }
        assert!(d.catalog.windows(2).all(|w| w[0].angle <= w[1].angle));
    }

    #[test]
    fn resolution_is_enforced() {
        let p = EpsilonProblem::new(
            SmoothDomain::unit_disk(),
            Expr::cos(1, 0),
            EllipticOperator::laplacian(),
            0.25,
        )
        .unwrap();
        assert!(matches!(
            solve_epsilon(&p, 0.05, &SchemeConfig::default()),
            Err(Error::Resolution { .. })
        ));
        assert!(EpsilonProblem::new(p.domain.clone(), p.g.clone(), p.op.clone(), 0.0).is_err());
    }

    #[test]
    fn slow_data_ignores_epsilon_and_obeys_maximum_principle() {
        let g: Expr = "x1 * x2 + 0.5 * x1".parse().unwrap();
        let d = SmoothDomain::default_ellipse();
        let cfg = SchemeConfig::default();
        let a = solve_epsilon(
            &EpsilonProblem::new(d.clone(), g.clone(), EllipticOperator::laplacian(), 0.5).unwrap(),
            1.0 / 32.0,
            &cfg,
        )
        .unwrap();
        let b = solve_epsilon(
            &EpsilonProblem::new(d, g, EllipticOperator::laplacian(), 0.25).unwrap(),
            1.0 / 32.0,
            &cfg,
        )
        .unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
        // harmonic data is reproduced to discretization accuracy
        for idx in 0..a.grid.len() {
            if a.kinds[idx] == NodeKind::Interior {
                let (i, j) = a.grid.coords(idx);
                let x = a.grid.point(i, j);
                assert!((a.values[idx] - (x[0] * x[1] + 0.5 * x[0])).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn oscillating_trace_averages_out_at_the_center() {
        let p = EpsilonProblem::new(
            SmoothDomain::unit_disk(),
            Expr::cos(1, 0),
            EllipticOperator::laplacian(),
            1.0 / 8.0,
        )
        .unwrap();
        let u = solve_epsilon(&p, 1.0 / 64.0, &SchemeConfig::default()).unwrap();
        let (lo, hi) = u
            .boundary_trace
            .iter()
            .fold((1.0f64, -1.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(lo < -0.99 && hi > 0.99);
        // the harmonic value at the center is the circle mean of the data, J0(2 pi / eps)
        let n = 4096;
        let mean = (0..n)
            .map(|k| (TAU * (TAU * k as f64 / n as f64).cos() * 8.0).cos())
            .sum::<f64>()
            / n as f64;
        let c = u.sample([0.0, 0.0]).unwrap();
        assert!((c - mean).abs() < 0.01 && c.abs() < 0.1, "{c} {mean}");
        for (idx, v) in u.values.iter().enumerate() {
            if u.kinds[idx] != NodeKind::Exterior {
                assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn empty_cover_with_equal_data_is_trivial() {
        let d = SmoothDomain::unit_disk();
        let g = d.grid(1.0 / 16.0).unwrap();
        let s = Scheme::new(
            &EllipticOperator::laplacian(),
            g.clone(),
            d.region(&g),
            SchemeConfig::default(),
        )
        .unwrap();
        let u = s.solve_dirichlet(&|p| p[0]).unwrap();
        let sol = compute_beta0(1.0, 1.0, 1.0, 1e-8).unwrap();
        let r = partial_comparison_check(&d, &u, &u, &[], &sol, 0.1, 0.0, 0.3).unwrap();
        assert!(r.passed && (r.margin - 0.1).abs() < 1e-15);
    }
}

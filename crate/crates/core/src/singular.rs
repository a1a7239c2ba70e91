//! Homogeneous singular supersolutions of the maximal Pucci operator in
//! planar cones and the partial-boundary barrier built from them.
//!
//! For `Phi = r^{-beta} phi(theta)` the Hessian in the polar frame is
//! `r^{-beta-2} [[p, q], [q, s]]` with `p = beta(beta+1)phi`,
//! `q = -(beta+1)phi'` and `s = phi'' - beta phi`. Imposing `P+ = 0` fixes
//! `s` as the root of a quadratic, which turns the equation into a second
//! order ODE on the arc that is shot from one endpoint.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{pucci_minus, pucci_plus, SymMatrix2};

const STEPS: usize = 10_000;

/// Which extremal operator the singular solution annihilates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremal {
    /// `-P+(D^2 Phi) = 0`, the equation whose supersolutions dominate
    /// differences of solutions.
    Maximal,
    /// `-P-(D^2 Phi) = 0`.
    Minimal,
}

impl Extremal {
    fn apply(self, m: &SymMatrix2, lambda: f64, big_lambda: f64) -> f64 {
        match self {
            Extremal::Maximal => pucci_plus(m, lambda, big_lambda),
            Extremal::Minimal => pucci_minus(m, lambda, big_lambda),
        }
    }
}

/// Lower-right polar Hessian entry `s` making the extremal operator of
/// `[[p, q], [q, s]]` vanish for `p > 0`.
fn closing_entry(p: f64, q: f64, lambda: f64, big_lambda: f64, which: Extremal) -> f64 {
    let d = big_lambda - lambda;
    let disc = (p * (big_lambda * big_lambda - lambda * lambda)).powi(2)
        + 4.0 * lambda * big_lambda * d * d * q * q;
    let root = match which {
        Extremal::Maximal => -disc.sqrt(),
        Extremal::Minimal => disc.sqrt(),
    };
    (-p * (lambda * lambda + big_lambda * big_lambda) + root) / (2.0 * lambda * big_lambda)
}

/// `(phi', phi'')` for the angular equation.
fn rhs(
    beta: f64,
    phi: f64,
    dphi: f64,
    lambda: f64,
    big_lambda: f64,
    which: Extremal,
) -> (f64, f64) {
    let p = beta * (beta + 1.0) * phi;
    let q = -(beta + 1.0) * dphi;
    (
        dphi,
        closing_entry(p, q, lambda, big_lambda, which) + beta * phi,
    )
}

struct Shot {
    phi: Vec<f64>,
    dphi: Vec<f64>,
    /// First interior step where `phi <= 0`, if any.
    early_zero: Option<usize>,
}

fn shoot(beta: f64, arc: f64, lambda: f64, big_lambda: f64, which: Extremal) -> Shot {
    let h = arc / STEPS as f64;
    let mut phi = Vec::with_capacity(STEPS + 1);
    let mut dphi = Vec::with_capacity(STEPS + 1);
    let (mut y, mut z) = (0.0, 1.0);
    phi.push(y);
    dphi.push(z);
    let mut early_zero = None;
    let f = |y: f64, z: f64| rhs(beta, y, z, lambda, big_lambda, which);
    for k in 1..=STEPS {
        let (a1, b1) = f(y, z);
        let (a2, b2) = f(y + 0.5 * h * a1, z + 0.5 * h * b1);
        let (a3, b3) = f(y + 0.5 * h * a2, z + 0.5 * h * b2);
        let (a4, b4) = f(y + h * a3, z + h * b3);
        y += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        z += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        phi.push(y);
        dphi.push(z);
        if k < STEPS && y <= 0.0 && early_zero.is_none() {
            early_zero = Some(k);
            break;
        }
    }
    Shot {
        phi,
        dphi,
        early_zero,
    }
}

/// Signed miss at the far endpoint: negative when the profile vanishes early.
fn miss(beta: f64, arc: f64, lambda: f64, big_lambda: f64, which: Extremal) -> f64 {
    let s = shoot(beta, arc, lambda, big_lambda, which);
    match s.early_zero {
        Some(k) => -((STEPS - k) as f64 / STEPS as f64) - 1e-300,
        None => *s.phi.last().expect("nonempty"),
    }
}

/// `Phi(x) = |x|^{-beta0} phi(theta)` in the cone of half-aperture
/// `arccos(gamma - 1)` around `e2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSolution {
    pub beta0: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub gamma: f64,
    pub extremal: Extremal,
    /// Half-aperture of the cone around its axis.
    pub half_angle: f64,
    /// `phi` at `STEPS + 1` equispaced arc parameters, normalized to max 1.
    pub profile: Vec<f64>,
    pub dprofile: Vec<f64>,
    /// Shooting bracket width at termination.
    pub tolerance: f64,
}

/// Computes the homogeneity exponent and angular profile for `-P+(D^2 Phi) = 0`.
pub fn compute_beta0(
    lambda: f64,
    big_lambda: f64,
    gamma: f64,
    tol: f64,
) -> Result<SingularSolution> {
    compute_singular(lambda, big_lambda, gamma, tol, Extremal::Maximal)
}

pub fn compute_singular(
    lambda: f64,
    big_lambda: f64,
    gamma: f64,
    tol: f64,
    which: Extremal,
) -> Result<SingularSolution> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Invalid(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    if !(lambda > 0.0 && big_lambda >= lambda && big_lambda.is_finite()) {
        return Err(Error::Invalid(format!(
            "need 0 < lambda <= Lambda, got ({lambda}, {big_lambda})"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let half_angle = (gamma - 1.0).acos();
    let arc = 2.0 * half_angle;
    let m = |b: f64| miss(b, arc, lambda, big_lambda, which);
    let (mut lo, mut hi) = (1e-6, 20.0);
    if !(m(lo) > 0.0 && m(hi) < 0.0) {
        hi = 200.0;
        if !(m(lo) > 0.0 && m(hi) < 0.0) {
            return Err(Error::NoBracket { lo, hi });
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        // the bracket cannot shrink below adjacent floats
        if mid <= lo || mid >= hi {
            break;
        }
        if m(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // secant polish on the endpoint value
    let (mut b0, mut b1) = (lo, hi);
    let (mut f0, mut f1) = (m(b0), m(b1));
    let mut beta = 0.5 * (lo + hi);
    for _ in 0..50 {
        if f1 == f0 {
            break;
        }
        let b2 = b1 - f1 * (b1 - b0) / (f1 - f0);
        if !(b2 > lo - tol && b2 < hi + tol) {
            break;
        }
        beta = b2;
        let f2 = m(b2);
        if f2.abs() < 1e-12 {
            break;
        }
        (b0, f0, b1, f1) = (b1, f1, b2, f2);
    }
    let shot = shoot(beta, arc, lambda, big_lambda, which);
    let (mut phi, mut dphi) = (shot.phi, shot.dphi);
    if phi.len() != STEPS + 1 {
        // polish overshot into an early zero: fall back to the bracket's lower end
        beta = lo;
        let s = shoot(beta, arc, lambda, big_lambda, which);
        phi = s.phi;
        dphi = s.dphi;
    }
    let peak = phi.iter().fold(0.0f64, |a, &b| a.max(b));
    for v in phi.iter_mut().chain(dphi.iter_mut()) {
        *v /= peak;
    }
    Ok(SingularSolution {
        beta0: beta,
        lambda,
        big_lambda,
        gamma,
        extremal: which,
        half_angle,
        profile: phi,
        dprofile: dphi,
        tolerance: hi - lo,
    })
}

impl SingularSolution {
    pub fn arc(&self) -> f64 {
        2.0 * self.half_angle
    }

    /// `(phi, phi')` at arc parameter `t` by cubic Hermite interpolation;
    /// zero outside the arc.
    pub fn angular(&self, t: f64) -> (f64, f64) {
        let arc = self.arc();
        if !(t > 0.0 && t < arc) {
            return (0.0, 0.0);
        }
        let h = arc / STEPS as f64;
        let k = ((t / h) as usize).min(STEPS - 1);
        let s = t / h - k as f64;
        let (y0, y1) = (self.profile[k], self.profile[k + 1]);
        let (d0, d1) = (self.dprofile[k] * h, self.dprofile[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let y = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1;
        let dy = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * d1)
            / h;
        (y, dy)
    }

    /// Arc parameter of a point relative to the vertex, for a cone with axis `axis`.
    fn arc_parameter(&self, y: [f64; 2], axis: [f64; 2]) -> f64 {
        let along = y[0] * axis[0] + y[1] * axis[1];
        let across = y[0] * axis[1] - y[1] * axis[0];
        // angle measured from the axis, positive clockwise of it
        let from_axis = across.atan2(along);
        from_axis + self.half_angle
    }

    /// `Phi_axis(y)` for `y` relative to the vertex.
    pub fn value(&self, y: [f64; 2], axis: [f64; 2]) -> f64 {
        let r = y[0].hypot(y[1]);
        if r == 0.0 {
            return f64::INFINITY;
        }
        let (phi, _) = self.angular(self.arc_parameter(y, axis));
        r.powf(-self.beta0) * phi
    }

    /// Cartesian Hessian of `Phi_axis` at `y`, with `phi''` from the angular
    /// equation so that `P+` vanishes up to rounding.
    pub fn hessian(&self, y: [f64; 2], axis: [f64; 2]) -> SymMatrix2 {
        let r = y[0].hypot(y[1]);
        let t = self.arc_parameter(y, axis);
        let (phi, dphi) = self.angular(t);
        if phi <= 0.0 {
            return SymMatrix2::ZERO;
        }
        let b = self.beta0;
        let p = b * (b + 1.0) * phi;
        // the arc parameter increases clockwise, so d/dtheta = -d/dt
        let q = (b + 1.0) * dphi;
        let s = closing_entry(
            p,
            -(b + 1.0) * dphi,
            self.lambda,
            self.big_lambda,
            self.extremal,
        );
        let scale = r.powf(-b - 2.0);
        let er = [y[0] / r, y[1] / r];
        let et = [-er[1], er[0]];
        SymMatrix2::new(p, q, s).from_basis(er, et) * scale
    }

    /// `min phi` over the sub-cone `cos(angle from axis) >= sigma`.
    pub fn inner_minimum(&self, sigma: f64) -> f64 {
        let limit = sigma.clamp(-1.0, 1.0).acos().min(self.half_angle);
        let h = self.arc() / STEPS as f64;
        self.profile
            .iter()
            .enumerate()
            .filter(|(k, _)| (*k as f64 * h - self.half_angle).abs() <= limit + 1e-12)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// A covering ball at a boundary point with inner normal `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverBall {
    pub center: [f64; 2],
    pub radius: f64,
    pub eta: [f64; 2],
}

/// `phi_delta(x) = delta + sum_j M r_j^beta0 Phi_{eta_j}(x - x_j)`, the
/// vertices `x_j` pushed outward from the ball centers by `sigma r_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierPhiDelta {
    pub delta: f64,
    pub balls: Vec<CoverBall>,
    pub vertices: Vec<[f64; 2]>,
    pub amplitude: f64,
    pub inner_min: f64,
    pub sigma: f64,
    pub solution: SingularSolution,
}

pub const VERTEX_OFFSET: f64 = 0.5;

pub fn build_phi_delta(
    w_inf_norm: f64,
    cover: &[CoverBall],
    delta: f64,
    sol: &SingularSolution,
) -> Result<BarrierPhiDelta> {
    if !(delta > 0.0) || !(w_inf_norm >= 0.0) {
        return Err(Error::Invalid(
            "delta must be positive and the norm nonnegative".into(),
        ));
    }
    let sigma = VERTEX_OFFSET;
    let inner_min = sol.inner_minimum(sigma);
    let amplitude = 1.01 * w_inf_norm / inner_min;
    let sum: f64 = cover.iter().map(|b| b.radius.powf(sol.beta0)).sum();
    let limit = delta * delta / amplitude;
    if amplitude > 0.0 && sum >= limit {
        return Err(Error::CoverTooCoarse { sum, limit });
    }
    let mut balls = Vec::with_capacity(cover.len());
    let mut vertices = Vec::with_capacity(cover.len());
    for b in cover {
        let n = b.eta[0].hypot(b.eta[1]);
        if !(b.radius > 0.0) || !(n > 0.0) {
            return Err(Error::Invalid(
                "cover balls need a positive radius and a nonzero normal".into(),
            ));
        }
        let eta = [b.eta[0] / n, b.eta[1] / n];
        vertices.push([
            b.center[0] - sigma * b.radius * eta[0],
            b.center[1] - sigma * b.radius * eta[1],
        ]);
        balls.push(CoverBall { eta, ..*b });
    }
    Ok(BarrierPhiDelta {
        delta,
        balls,
        vertices,
        amplitude,
        inner_min,
        sigma,
        solution: sol.clone(),
    })
}

impl BarrierPhiDelta {
    pub fn value(&self, x: [f64; 2]) -> f64 {
        let b = self.solution.beta0;
        self.delta
            + self
                .balls
                .iter()
                .zip(&self.vertices)
                .map(|(ball, v)| {
                    self.amplitude
                        * ball.radius.powf(b)
                        * self.solution.value([x[0] - v[0], x[1] - v[1]], ball.eta)
                })
                .sum::<f64>()
    }

    pub fn hessian(&self, x: [f64; 2]) -> SymMatrix2 {
        let b = self.solution.beta0;
        self.balls
            .iter()
            .zip(&self.vertices)
            .fold(SymMatrix2::ZERO, |acc, (ball, v)| {
                acc + self.solution.hessian([x[0] - v[0], x[1] - v[1]], ball.eta)
                    * (self.amplitude * ball.radius.powf(b))
            })
    }

    /// `-P(D^2 phi_delta)(x)` for the extremal operator of the profile.
    pub fn residual(&self, x: [f64; 2]) -> f64 {
        let s = &self.solution;
        -s.extremal.apply(&self.hessian(x), s.lambda, s.big_lambda)
    }
}

/// Sampled supersolution check of a barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionReport {
    pub samples: usize,
    pub min_residual: f64,
    pub min_value_minus_delta: f64,
    pub passed: bool,
}

/// Checks `-P+(D^2 phi_delta) >= -tol` and `phi_delta >= delta` at the points.
pub fn verify_supersolution(
    barrier: &BarrierPhiDelta,
    points: &[[f64; 2]],
    tol: f64,
) -> SupersolutionReport {
    let mut min_residual = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    for &p in points {
        // relative to the size of the Hessian so that points near a vertex are judged fairly
        let hess = barrier.hessian(p);
        let scale = 1.0 + hess.xx.abs() + hess.yy.abs() + hess.xy.abs();
        min_residual = min_residual.min(barrier.residual(p) / scale);
        min_gap = min_gap.min(barrier.value(p) - barrier.delta);
    }
    SupersolutionReport {
        samples: points.len(),
        min_residual,
        min_value_minus_delta: min_gap,
        passed: min_residual >= -tol && min_gap >= -1e-15,
    }
}

/// Half-aperture of the strict cone for `gamma`, for reference in reports.
pub fn cone_half_angle(gamma: f64) -> f64 {
    (gamma - 1.0).acos().min(FRAC_PI_2 * 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closing_entry_zeroes_pucci() {
        for &(p, q, l, big) in &[
            (1.0, 0.3, 1.0, 2.0),
            (0.2, -2.0, 0.5, 3.0),
            (3.0, 0.0, 1.0, 1.0),
        ] {
            let s = closing_entry(p, q, l, big, Extremal::Maximal);
            assert!(pucci_plus(&SymMatrix2::new(p, q, s), l, big).abs() < 1e-12);
            let s = closing_entry(p, q, l, big, Extremal::Minimal);
            assert!(pucci_minus(&SymMatrix2::new(p, q, s), l, big).abs() < 1e-12);
        }
    }

    #[test]
    fn tolerance_below_float_spacing_terminates() {
        let sol = compute_beta0(1.0, 1.0, 1.0, 1e-30).unwrap();
        assert!((sol.beta0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn laplacian_half_plane_is_poisson_kernel() {
        let sol = compute_beta0(1.0, 1.0, 1.0, 1e-6).unwrap();
        assert!((sol.beta0 - 1.0).abs() < 1e-5, "{}", sol.beta0);
        for t in [0.3, 1.0, 2.5] {
            assert!((sol.angular(t).0 - t.sin()).abs() < 1e-5);
        }
        // Phi = x2 / |x|^2 for the axis e2
        let y = [0.3, 0.7];
        let exact = y[1] / (y[0] * y[0] + y[1] * y[1]);
        assert!((sol.value(y, [0.0, 1.0]) - exact).abs() < 1e-5);
        let hess = sol.hessian(y, [0.0, 1.0]);
        assert!(hess.trace().abs() < 1e-8);
        let r2 = y[0] * y[0] + y[1] * y[1];
        let xy = (2.0 * y[1] * (3.0 * y[0] * y[0] - y[1] * y[1])) / r2.powi(3);
        assert!((hess.xx - xy).abs() < 1e-4, "{} {}", hess.xx, xy);
    }

    #[test]
    fn exponents_straddle_the_laplacian() {
        // the maximal operator is less singular than the Laplacian, the minimal one more
        let sol = compute_beta0(1.0, 2.0, 1.0, 1e-6).unwrap();
        assert!(sol.beta0 > 0.0 && sol.beta0 < 1.0, "{}", sol.beta0);
        let minimal = compute_singular(1.0, 2.0, 1.0, 1e-6, Extremal::Minimal).unwrap();
        assert!(minimal.beta0 > 1.0, "{}", minimal.beta0);
        assert!(sol.profile[0].abs() < 1e-8 && sol.profile.last().unwrap().abs() < 1e-8);
        assert!(sol.profile[1..STEPS].iter().all(|v| *v > 0.0));
        let wide = compute_beta0(1.0, 2.0, 0.5, 1e-6).unwrap();
        assert!(wide.beta0 <= sol.beta0);
    }

    #[test]
    fn empty_cover_is_constant() {
        let sol = compute_beta0(1.0, 1.0, 1.0, 1e-6).unwrap();
        let b = build_phi_delta(1.0, &[], 0.1, &sol).unwrap();
        assert_eq!(b.value([0.3, 0.2]), 0.1);
        assert_eq!(b.residual([0.3, 0.2]), 0.0);
    }

    #[test]
    fn coarse_cover_is_rejected() {
        let sol = compute_beta0(1.0, 1.0, 1.0, 1e-6).unwrap();
        let ball = CoverBall {
            center: [0.0, -1.0],
            radius: 0.5,
            eta: [0.0, 1.0],
        };
        assert!(matches!(
            build_phi_delta(1.0, &[ball], 0.1, &sol),
            Err(Error::CoverTooCoarse { .. })
        ));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(compute_beta0(1.0, 1.0, 0.0, 1e-6).is_err());
        assert!(compute_beta0(2.0, 1.0, 1.0, 1e-6).is_err());
    }
}

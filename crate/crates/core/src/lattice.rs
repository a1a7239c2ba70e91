//! Lattice translates close to hyperplanes.

use serde::{Deserialize, Serialize};

use crate::discrepancy::Direction;
use crate::error::{Error, Result};

/// Search cap for the infimum over `N` in [`nearest_lattice_point`].
pub const N_MAX: f64 = 1e4;

/// The hyperplane `{x : (x - x0) . nu = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub nu: Direction,
    pub x0: Vec<f64>,
}

impl Hyperplane {
    pub fn new(nu: Direction, x0: Vec<f64>) -> Result<Self> {
        if nu.dim() != x0.len() {
            return Err(Error::Invalid(
                "dimension mismatch between nu and x0".into(),
            ));
        }
        Ok(Self { nu, x0 })
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// Signed offset `(x - x0) . nu`.
    pub fn offset(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.x0)
            .zip(&self.nu.nu)
            .map(|((a, b), n)| (a - b) * n)
            .sum()
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        self.offset(x).abs()
    }
}

/// A point of `x0 + Z^n` near a hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeApproach {
    pub y: Vec<f64>,
    pub distance: f64,
    pub search_radius: f64,
}

/// Explicit constant `2 sqrt(n) + 1` in `|x - y| <= C(n) N`.
pub fn radius_constant(n: usize) -> f64 {
    2.0 * (n as f64).sqrt() + 1.0
}

/// Integer point `z` minimizing `|(o + z) . nu - c|` among the walks
/// `z = z0 + sign * k e_j`, `k = 0..=steps`, where `z0` rounds `p` off the
/// dominant axis and the dominant coordinate is always re-rounded.
fn walk(
    nu: &[f64],
    dominant: usize,
    c: f64,
    origin: &[f64],
    p: &[f64],
    steps: u64,
) -> (Vec<i64>, f64) {
    let n = nu.len();
    let i = dominant;
    let base: Vec<i64> = p.iter().map(|v| v.round() as i64).collect();
    let o_dot: f64 = origin.iter().zip(nu).map(|(a, b)| a * b).sum();
    let target = c - o_dot;
    let settle = |z: &mut Vec<i64>| -> f64 {
        let rest: f64 = (0..n)
            .filter(|&l| l != i)
            .map(|l| z[l] as f64 * nu[l])
            .sum();
        z[i] = ((target - rest) / nu[i]).round() as i64;
        (rest + z[i] as f64 * nu[i] - target).abs()
    };
    let mut best = base.clone();
    let mut best_d = settle(&mut best);
    for j in (0..n).filter(|&j| j != i) {
        for sign in [1i64, -1] {
            let mut z = base.clone();
            for k in 1..=steps as i64 {
                z[j] = base[j] + sign * k;
                let d = settle(&mut z);
                if d < best_d {
                    best_d = d;
                    best = z.clone();
                }
            }
        }
    }
    (best, best_d)
}

/// Constructs `y` with `y - x0` integral, `|x - y| <= (2 sqrt(n) + 1) N` and
/// `dist(y, H) < omega_nu(N)` by walking multiples of a unit lattice step
/// along each non-dominant axis, re-centering on the dominant axis.
pub fn approach_point(h: &Hyperplane, x: &[f64], n: f64) -> Result<LatticeApproach> {
    if !(n > 1.0) || !n.is_finite() {
        return Err(Error::ModulusArgument(n));
    }
    if x.len() != h.dim() {
        return Err(Error::Invalid("dimension mismatch".into()));
    }
    if h.distance(x) > 1e-9 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
        return Err(Error::Invalid(
            "query point is not on the hyperplane".into(),
        ));
    }
    let p: Vec<f64> = x.iter().zip(&h.x0).map(|(a, b)| a - b).collect();
    let c: f64 = h.x0.iter().zip(&h.nu.nu).map(|(a, b)| a * b).sum();
    let (z, distance) = walk(&h.nu.nu, h.nu.dominant, c, &h.x0, &p, n.floor() as u64);
    let y: Vec<f64> = h.x0.iter().zip(&z).map(|(a, &b)| a + b as f64).collect();
    Ok(LatticeApproach {
        y,
        distance,
        search_radius: radius_constant(h.dim()) * n,
    })
}

/// Integer point near a hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub z: Vec<i64>,
    pub distance: f64,
    /// True when the search cap was reached before the distance fell below `delta`.
    pub capped: bool,
}

/// Finds `z` in `Z^n` with `dist(z, H) <= inf_{N <= N_MAX} omega_nu(N) + delta`.
///
/// The walk with `N_MAX` steps contains every shorter walk, so its result is
/// below `omega_nu(N) / 2` for each `N <= N_MAX` simultaneously.
pub fn nearest_lattice_point(h: &Hyperplane, delta: f64) -> Result<LatticePoint> {
    if !(delta > 0.0) {
        return Err(Error::Invalid("delta must be positive".into()));
    }
    let c: f64 = h.x0.iter().zip(&h.nu.nu).map(|(a, b)| a * b).sum();
    let origin = vec![0.0; h.dim()];
    let foot: Vec<f64> = h.nu.nu.iter().map(|v| v * c).collect();
    let (z, distance) = walk(&h.nu.nu, h.nu.dominant, c, &origin, &foot, N_MAX as u64);
    Ok(LatticePoint {
        z,
        distance,
        capped: distance > delta,
    })
}

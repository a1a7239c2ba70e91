//! Discrepancy of sequences in the unit interval, hyperplane slopes and the
//! direction modulus `omega`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default denominator bound for rationality detection.
pub const DEFAULT_DENOMINATOR_BOUND: u64 = 1_000_000;

/// Fractional part `x - floor(x)`, always in `[0, 1)`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // x = -1e-20 gives 1.0 after rounding
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// A finite sequence of points in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSequence {
    points: Vec<f64>,
}

impl UnitSequence {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(p) = points.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::Invalid(format!("point {p} outside [0, 1)")));
        }
        Ok(Self { points })
    }

    /// Wraps arbitrary reals into `[0, 1)` with [`frac`].
    pub fn from_reals(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| frac(v)).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn sorted(&self) -> Vec<f64> {
        let mut s = self.points.clone();
        s.sort_by(f64::total_cmp);
        s
    }
}

/// Star discrepancy via the sorted closed form
/// `1/(2N) + max_i |x_(i) - (2i-1)/(2N)|`.
pub fn discrepancy_star(seq: &UnitSequence) -> f64 {
    let s = seq.sorted();
    let n = s.len() as f64;
    let worst = s
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - (2.0 * i as f64 + 1.0) / (2.0 * n)).abs())
        .fold(0.0, f64::max);
    1.0 / (2.0 * n) + worst
}

/// Extreme discrepancy: the supremum over closed subintervals `[a, b]` of
/// `|A([a,b]) / N - (b - a)|`.
///
/// The supremum is attained in the limit at sorted points or their one-sided
/// limits, so it reduces to two prefix scans over the sorted sequence padded
/// with the sentinels 0 and 1.
pub fn discrepancy(seq: &UnitSequence) -> f64 {
    let s = seq.sorted();
    let nf = s.len() as f64;
    let mut best = 0.0f64;

    // Overfull closed intervals [x_i, x_k], i <= k, hold k - i + 1 points:
    // (k/N - x_k) - ((i-1)/N - x_i).
    let mut min_c = f64::INFINITY;
    for (idx, &x) in s.iter().enumerate() {
        let k = (idx + 1) as f64;
        min_c = min_c.min((k - 1.0) / nf - x);
        best = best.max(k / nf - x - min_c);
    }

    // Underfull intervals (x_i, x_k) with sentinels x_0 = 0, x_{N+1} = 1 hold
    // k - i - 1 points: (x_k - (k-1)/N) - (x_i - i/N).
    let padded = std::iter::once(0.0)
        .chain(s.iter().copied())
        .chain(std::iter::once(1.0));
    let mut min_e = f64::INFINITY;
    for (k, x) in padded.enumerate() {
        let kf = k as f64;
        if k > 0 {
            best = best.max(x - (kf - 1.0) / nf - min_e);
        }
        min_e = min_e.min(x - kf / nf);
    }
    best
}

/// `D*_N` of the rotation sequence `frac(j x)`, `j = 1..=N`.
pub fn rotation_discrepancy(x: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let pts: Vec<f64> = (1..=n).map(|j| frac(j as f64 * x)).collect();
    discrepancy_star(&UnitSequence { points: pts })
}

/// Rationality of a direction up to a denominator bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rationality {
    /// `t * nu` equals the primitive integer `vector`; `denominator` is its
    /// largest absolute component.
    Rational { denominator: u64, vector: Vec<i64> },
    /// No integer multiple with components bounded by `bound`.
    Irrational { bound: u64 },
}

impl Rationality {
    pub fn is_rational(&self) -> bool {
        matches!(self, Rationality::Rational { .. })
    }
}

/// A unit direction with its slopes and rationality class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub nu: Vec<f64>,
    /// Zero-based index of the last component attaining `|nu|_inf`.
    pub dominant: usize,
    pub slopes: Vec<f64>,
    pub rationality: Rationality,
}

impl Direction {
    /// Normalizes `v` and computes slopes and rationality with the default bound.
    pub fn new(v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Invalid(
                "direction must be a nonzero finite vector".into(),
            ));
        }
        let nu: Vec<f64> = v.iter().map(|x| x / norm).collect();
        slopes(&nu)
    }

    /// Unit vector at angle `theta` in the plane.
    pub fn from_angle(theta: f64) -> Self {
        Self::new(&[theta.cos(), theta.sin()]).expect("unit vector")
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    /// Planar components; panics for other dimensions.
    pub fn as_2d(&self) -> [f64; 2] {
        assert_eq!(self.nu.len(), 2, "planar direction expected");
        [self.nu[0], self.nu[1]]
    }

    pub fn angle(&self) -> f64 {
        let a = self.nu[1].atan2(self.nu[0]);
        if a < 0.0 {
            a + std::f64::consts::TAU
        } else {
            a
        }
    }

    pub fn is_rational(&self) -> bool {
        self.rationality.is_rational()
    }
}

/// Slopes `m_j = |nu_j| / |nu|_inf` of the hyperplane orthogonal to `nu`.
pub fn slopes(nu: &[f64]) -> Result<Direction> {
    if nu.is_empty() {
        return Err(Error::Invalid("empty direction".into()));
    }
    let norm = nu.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Invalid("zero direction".into()));
    }
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "direction has norm {norm}, expected 1"
        )));
    }
    let inf = nu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let dominant = nu
        .iter()
        .rposition(|x| x.abs() == inf)
        .expect("maximum is attained");
    let slopes = nu
        .iter()
        .enumerate()
        .map(|(j, x)| if j == dominant { 1.0 } else { x.abs() / inf })
        .collect();
    Ok(Direction {
        nu: nu.to_vec(),
        dominant,
        slopes,
        rationality: classify_rationality(nu, DEFAULT_DENOMINATOR_BOUND),
    })
}

/// `omega_nu(N) = 2 min_j D*_[N](m_j)`.
pub fn omega(dir: &Direction, n: f64) -> Result<f64> {
    if !(n > 1.0) || !n.is_finite() {
        return Err(Error::ModulusArgument(n));
    }
    let count = n.floor() as usize;
    let best = dir
        .slopes
        .iter()
        .map(|&m| rotation_discrepancy(m, count))
        .fold(f64::INFINITY, f64::min);
    Ok(2.0 * best)
}

/// Smallest `omega(dir, M)` over integer `M` on a geometric grid in `[2, n_max]`,
/// returned with the minimizing `M`.
pub fn omega_inf(dir: &Direction, n_max: f64) -> (f64, f64) {
    let mut best = (f64::INFINITY, 2.0);
    let mut m = 2.0f64;
    while m <= n_max {
        let w = omega(dir, m).expect("m > 1");
        if w < best.0 {
            best = (w, m);
        }
        m = (m * 1.05).ceil();
    }
    best
}

/// Best rational approximation `p/q` to `r` with `q <= q_max`, among the
/// continued-fraction convergents, that lies within `tol`.
fn rational_match(r: f64, q_max: u64, tol: f64) -> Option<(i64, u64)> {
    let sign = if r < 0.0 { -1 } else { 1 };
    let r = r.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut x = r;
    for _ in 0..64 {
        let a = x.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > q_max {
            return None;
        }
        if (r - p2 as f64 / q2 as f64).abs() <= tol {
            return Some((sign * p2 as i64, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let f = x - x.floor();
        if f == 0.0 {
            return None;
        }
        x = 1.0 / f;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Decides whether some multiple of `nu` is an integer vector with components
/// bounded by `q_max`, using continued-fraction convergents of the ratios
/// `nu_l / nu_i` against the dominant component.
pub fn classify_rationality(nu: &[f64], q_max: u64) -> Rationality {
    let q_max = q_max.max(1);
    let irrational = Rationality::Irrational { bound: q_max };
    let inf = nu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(inf > 0.0) {
        return irrational;
    }
    let i = nu
        .iter()
        .rposition(|x| x.abs() == inf)
        .expect("max attained");
    let mut fracs = Vec::with_capacity(nu.len());
    let mut lcm = 1u64;
    for (l, &v) in nu.iter().enumerate() {
        if l == i {
            fracs.push((1i64, 1u64));
            continue;
        }
        let r = v / nu[i];
        let tol = 64.0 * f64::EPSILON * (1.0 + r.abs());
        match rational_match(r, q_max, tol) {
            Some((p, q)) => {
                fracs.push((p, q));
                lcm = lcm / gcd(lcm, q) * q;
                if lcm > q_max {
                    return irrational;
                }
            }
            None => return irrational,
        }
    }
    let s = if nu[i] < 0.0 { -1 } else { 1 };
    let vector: Vec<i64> = fracs
        .iter()
        .map(|&(p, q)| s * p * (lcm / q) as i64)
        .collect();
    let g = vector.iter().fold(0u64, |g, &z| gcd(g, z.unsigned_abs()));
    let vector: Vec<i64> = vector.iter().map(|z| z / g as i64).collect();
    let denominator = vector.iter().map(|z| z.unsigned_abs()).max().unwrap_or(1);
    Rationality::Rational {
        denominator,
        vector,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHI: f64 = 0.618_033_988_749_894_9;

    #[test]
    fn frac_examples() {
        assert_eq!(frac(1.25), 0.25);
        assert_eq!(frac(-0.25), 0.75);
        assert_eq!(frac(3.0), 0.0);
        assert!(frac(-1e-20) < 1.0);
    }

    #[test]
    fn star_examples() {
        let one = UnitSequence::new(vec![0.5]).unwrap();
        assert_eq!(discrepancy_star(&one), 0.5);
        let n = 7;
        let spread: Vec<f64> = (1..=n)
            .map(|i| (2 * i - 1) as f64 / (2 * n) as f64)
            .collect();
        let s = UnitSequence::new(spread).unwrap();
        assert!((discrepancy_star(&s) - 1.0 / 14.0).abs() < 1e-15);
        assert!((discrepancy(&s) - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn empty_is_rejected() {
        assert_eq!(UnitSequence::new(vec![]), Err(Error::EmptySequence));
        assert!(UnitSequence::new(vec![1.0]).is_err());
    }

    #[test]
    fn single_point_extreme() {
        let one = UnitSequence::new(vec![0.5]).unwrap();
        let d = discrepancy(&one);
        assert!((0.5..=1.0).contains(&d));
        assert_eq!(d, 1.0);
    }

    #[test]
    fn rotation_examples() {
        for n in [1, 5, 40] {
            let expect = 1.0 / (2.0 * n as f64) + (2.0 * n as f64 - 1.0) / (2.0 * n as f64);
            assert!((rotation_discrepancy(0.0, n) - expect).abs() < 1e-15);
        }
        assert_eq!(rotation_discrepancy(0.5, 2), 0.5);
        assert!(rotation_discrepancy(PHI, 10_000) < 1e-3);
    }

    #[test]
    fn slope_examples() {
        let d = slopes(&[0.0, 1.0]).unwrap();
        assert_eq!(d.dominant, 1);
        assert_eq!(d.slopes, vec![0.0, 1.0]);
        let r = 0.5f64.sqrt();
        let d = slopes(&[r, r]).unwrap();
        assert_eq!(d.dominant, 1);
        assert_eq!(d.slopes, vec![1.0, 1.0]);
        let d = Direction::new(&[1.0, 2f64.sqrt()]).unwrap();
        assert!((d.slopes[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.slopes[1], 1.0);
        assert!(slopes(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn omega_examples() {
        let e2 = Direction::new(&[0.0, 1.0]).unwrap();
        assert_eq!(omega(&e2, 17.5).unwrap(), 2.0);
        let d = Direction::new(&[1.0, 2f64.sqrt()]).unwrap();
        assert!(omega(&d, 1000.0).unwrap() < 0.05);
        assert!(omega(&d, 1.0).is_err());
    }

    #[test]
    fn rationality_examples() {
        assert_eq!(
            classify_rationality(&[1.0, 0.0], 10),
            Rationality::Rational {
                denominator: 1,
                vector: vec![1, 0]
            }
        );
        assert_eq!(
            classify_rationality(&[0.6, 0.8], 10),
            Rationality::Rational {
                denominator: 4,
                vector: vec![3, 4]
            }
        );
        assert_eq!(
            classify_rationality(&[-0.6, -0.8], 10),
            Rationality::Rational {
                denominator: 4,
                vector: vec![-3, -4]
            }
        );
        let s = 3f64.sqrt();
        assert_eq!(
            classify_rationality(&[1.0 / s, 2f64.sqrt() / s], 1_000_000),
            Rationality::Irrational { bound: 1_000_000 }
        );
        let d = Direction::new(&[7.0, -3.0]).unwrap();
        assert_eq!(
            d.rationality,
            Rationality::Rational {
                denominator: 7,
                vector: vec![7, -3]
            }
        );
    }
}

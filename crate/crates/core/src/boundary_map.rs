//! Direction sweeps `nu -> mu(psi, F, nu)` and the persisted boundary table.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell::{
    default_translates, estimate_mu, CellAverage, CellConfig, CellSetup, SCHEMA_VERSION,
};
use crate::discrepancy::{classify_rationality, omega, Direction, DEFAULT_DENOMINATOR_BOUND};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::operators::EllipticOperator;

/// One direction of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    /// Angle of `nu` in `[0, 2 pi)`.
    pub angle: f64,
    pub nu: [f64; 2],
    pub rational: bool,
    pub cell: Option<CellAverage>,
    pub failure: Option<String>,
}

impl TableEntry {
    pub fn mu(&self) -> Option<f64> {
        self.cell.as_ref().map(|c| c.mu_bar)
    }
}

/// Homogenized boundary values on a set of directions, sorted by angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTable {
    pub schema_version: u32,
    pub psi: String,
    pub operator: String,
    pub config: CellConfig,
    pub entries: Vec<TableEntry>,
}

fn wrap(theta: f64) -> f64 {
    theta.rem_euclid(TAU)
}

/// Signed angular difference `a - b` in `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Moves angles off directions classified as rational.
fn nudge_irrational(theta: f64, step: f64) -> f64 {
    let mut t = theta;
    let mut k = 1.0;
    while classify_rationality(&[t.cos(), t.sin()], DEFAULT_DENOMINATOR_BOUND).is_rational() {
        t = theta + k * step;
        k += 1.0;
    }
    t
}

/// `count` equispaced angles shifted by `offset`, each nudged off rational
/// directions.
pub fn uniform_angles(count: usize, offset: f64) -> Vec<f64> {
    let step = TAU / count.max(1) as f64;
    (0..count)
        .map(|k| wrap(nudge_irrational(offset + k as f64 * step, 1e-3 * step)))
        .collect()
}

/// Golden-ratio points in `[center - spread, center + spread]`; successive
/// points refine every previous gap, clustering around rational directions
/// inside the window as `count` grows.
pub fn golden_angles(center: f64, spread: f64, count: usize) -> Vec<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    (1..=count)
        .map(|k| {
            let u = (k as f64 * g).fract();
            wrap(nudge_irrational(
                center + spread * (2.0 * u - 1.0),
                1e-6 * spread.max(1e-9),
            ))
        })
        .collect()
}

/// Runs the cell estimate for every angle; failures are recorded per entry.
pub fn sweep(
    psi: &Expr,
    op: &EllipticOperator,
    angles: &[f64],
    cfg: &CellConfig,
) -> Result<BoundaryTable> {
    cfg.validate()?;
    let mut sorted: Vec<f64> = angles.iter().map(|&a| wrap(a)).collect();
    if sorted.iter().any(|a| !a.is_finite()) {
        return Err(Error::Invalid("angles must be finite".into()));
    }
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Invalid("angles must be distinct".into()));
    }
    let entries = sorted
        .par_iter()
        .map(|&angle| {
            let nu = Direction::from_angle(angle);
            let result = CellSetup::new(psi.clone(), op.clone(), nu.clone(), cfg)
                .and_then(|s| estimate_mu(&s, &default_translates(&nu, cfg.translates), cfg));
            let (cell, failure) = match result {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            };
            TableEntry {
                angle,
                nu: nu.as_2d(),
                rational: nu.is_rational(),
                cell,
                failure,
            }
        })
        .collect();
    Ok(BoundaryTable {
        schema_version: SCHEMA_VERSION,
        psi: psi.to_string(),
        operator: op.name(),
        config: cfg.clone(),
        entries,
    })
}

/// Value interpolated from a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lookup {
    pub value: f64,
    /// Angular distance between the bracketing entries.
    pub gap: f64,
    /// A catalogued rational direction lies strictly between the entries.
    pub bridged: bool,
}

impl BoundaryTable {
    pub fn successes(&self) -> impl Iterator<Item = &TableEntry> {
        self.entries.iter().filter(|e| e.cell.is_some())
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.failure.is_some()).count()
    }

    /// Linear interpolation in angle between the nearest successful entries.
    /// `rational_angles` are the catalogued rational directions that must not
    /// be bridged silently.
    pub fn interpolate(&self, angle: f64, max_gap: f64, rational_angles: &[f64]) -> Result<Lookup> {
        let ok: Vec<(f64, f64)> = self
            .successes()
            .map(|e| (e.angle, e.mu().expect("success")))
            .collect();
        let a = wrap(angle);
        match ok.len() {
            0 => {
                return Err(Error::TableGap {
                    angle: a,
                    gap: TAU,
                    max_gap,
                })
            }
            1 => {
                let gap = angle_diff(a, ok[0].0).abs();
                if gap > max_gap {
                    return Err(Error::TableGap {
                        angle: a,
                        gap,
                        max_gap,
                    });
                }
                return Ok(Lookup {
                    value: ok[0].1,
                    gap,
                    bridged: false,
                });
            }
            _ => {}
        }
        let hi = ok.partition_point(|e| e.0 <= a);
        let (lo_e, hi_e) = (ok[(hi + ok.len() - 1) % ok.len()], ok[hi % ok.len()]);
        let span = (hi_e.0 - lo_e.0).rem_euclid(TAU);
        if span > max_gap {
            return Err(Error::TableGap {
                angle: a,
                gap: span,
                max_gap,
            });
        }
        let s = (a - lo_e.0).rem_euclid(TAU);
        let value = if span > 0.0 {
            lo_e.1 + (hi_e.1 - lo_e.1) * s / span
        } else {
            lo_e.1
        };
        let bridged = rational_angles.iter().any(|&r| {
            let t = (wrap(r) - lo_e.0).rem_euclid(TAU);
            t > 0.0 && t < span
        });
        Ok(Lookup {
            value,
            gap: span,
            bridged,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s)?;
        if t.schema_version != SCHEMA_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported table schema {}",
                t.schema_version
            )));
        }
        Ok(t)
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut s = String::new();
        r.read_to_string(&mut s)?;
        Self::from_json(&s)
    }
}

/// Local modulus of continuity of a table around a reference direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub angle: f64,
    pub radius: f64,
    pub reference: f64,
    pub neighbors: usize,
    /// `max - min` of `mu` over the window.
    pub oscillation: f64,
    pub max_deviation: f64,
    /// Smallest `C` with `|mu(nu') - mu(nu0)| <= C S(|nu' - nu0|)` on the window.
    pub fitted_constant: f64,
    /// `S(radius)` where `S(d) = min_N N^{a/(1+a)} d^{a/(2+a)} + omega(N)^a`.
    pub shape_at_radius: f64,
    pub alpha: f64,
    pub max_constant: f64,
    pub conformant: bool,
}

/// `min_N N^{a/(1+a)} d^{a/(2+a)} + omega(N)^a` over a geometric grid of N.
pub fn continuity_shape(nu: &Direction, d: f64, alpha: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    let mut n = 2.0f64;
    while n <= 1e4 {
        let v = n.powf(alpha / (1.0 + alpha)) * d.powf(alpha / (2.0 + alpha))
            + omega(nu, n)?.powf(alpha);
        best = best.min(v);
        n = (n * 1.25).ceil();
    }
    Ok(best)
}

/// Measures the oscillation of the table on `|nu' - nu0| <= radius` and fits
/// the continuity constant.
pub fn continuity_report(
    table: &BoundaryTable,
    nu0: &Direction,
    radius: f64,
    max_constant: f64,
) -> Result<ContinuityReport> {
    if nu0.is_rational() {
        return Err(Error::Invalid(
            "the reference direction must be irrational".into(),
        ));
    }
    let a0 = wrap(nu0.angle());
    let near: Vec<(f64, f64)> = table
        .successes()
        .filter_map(|e| {
            let d = 2.0 * (0.5 * angle_diff(e.angle, a0)).sin().abs();
            (d <= radius).then(|| (d, e.mu().expect("success")))
        })
        .collect();
    if near.len() < 3 {
        return Err(Error::InsufficientNeighbors {
            found: near.len(),
            needed: 3,
        });
    }
    let reference = table.interpolate(a0, TAU, &[])?.value;
    let alpha = table.config.alpha;
    let (mut osc_max, mut osc_min) = (reference, reference);
    let (mut max_deviation, mut fitted) = (0.0f64, 0.0f64);
    for &(d, mu) in &near {
        osc_max = osc_max.max(mu);
        osc_min = osc_min.min(mu);
        let dev = (mu - reference).abs();
        max_deviation = max_deviation.max(dev);
        if d > 0.0 {
            fitted = fitted.max(dev / continuity_shape(nu0, d, alpha)?);
        }
    }
    Ok(ContinuityReport {
        angle: a0,
        radius,
        reference,
        neighbors: near.len(),
        oscillation: osc_max - osc_min,
        max_deviation,
        fitted_constant: fitted,
        shape_at_radius: continuity_shape(nu0, radius, alpha)?,
        alpha,
        max_constant,
        conformant: fitted <= max_constant,
    })
}

/// One-sided limits of a table at a direction, for reporting jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedLimits {
    pub angle: f64,
    pub below: f64,
    pub above: f64,
    pub at: Option<f64>,
    pub gap: f64,
}

/// Nearest successful values on either side of `angle` within `radius`.
pub fn one_sided_limits(table: &BoundaryTable, angle: f64, radius: f64) -> Result<OneSidedLimits> {
    let a0 = wrap(angle);
    let mut below: Option<(f64, f64)> = None;
    let mut above: Option<(f64, f64)> = None;
    let mut at = None;
    for e in table.successes() {
        let d = angle_diff(e.angle, a0);
        let mu = e.mu().expect("success");
        if d == 0.0 {
            at = Some(mu);
        } else if d < 0.0 && -d <= radius && below.map_or(true, |b| -d < b.0) {
            below = Some((-d, mu));
        } else if d > 0.0 && d <= radius && above.map_or(true, |b| d < b.0) {
            above = Some((d, mu));
        }
    }
    match (below, above) {
        (Some(b), Some(u)) => Ok(OneSidedLimits {
            angle: a0,
            below: b.1,
            above: u.1,
            at,
            gap: (u.1 - b.1).abs(),
        }),
        _ => Err(Error::InsufficientNeighbors {
            found: below.is_some() as usize + above.is_some() as usize,
            needed: 2,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(angles: &[f64], f: impl Fn(f64) -> f64) -> BoundaryTable {
        let cfg = CellConfig::default();
        BoundaryTable {
            schema_version: SCHEMA_VERSION,
            psi: "cos(1,0)".into(),
            operator: "laplacian".into(),
            config: cfg.clone(),
            entries: angles
                .iter()
                .map(|&a| TableEntry {
                    angle: a,
                    nu: [a.cos(), a.sin()],
                    rational: false,
                    cell: Some(CellAverage {
                        schema_version: SCHEMA_VERSION,
                        mu_bar: f(a),
                        mu_star: f(a),
                        mu_lower: f(a),
                        error_budget: 0.1,
                        n_used: 2.0,
                        r_used: 4.0,
                        discretization: 0.0,
                        truncation: 0.0,
                        seam: 0.0,
                        localization: Some(0.0),
                        total_budget: 0.1,
                        h: cfg.h,
                        depth: cfg.depth,
                        width: cfg.depth,
                        samples: vec![],
                    }),
                    failure: None,
                })
                .collect(),
        }
    }

    #[test]
    fn angle_samplers_avoid_rational_directions() {
        let u = uniform_angles(8, 0.0);
        assert_eq!(u.len(), 8);
        for a in u.iter().chain(golden_angles(1.0, 0.02, 20).iter()) {
            assert!(!Direction::from_angle(*a).is_rational(), "{a}");
        }
        let g = golden_angles(1.0, 0.02, 20);
        assert!(g.iter().all(|a| (a - 1.0).abs() <= 0.02 + 1e-12));
        let mut s = g.clone();
        s.sort_by(f64::total_cmp);
        s.dedup();
        assert_eq!(s.len(), 20);
    }

    #[test]
    fn interpolation_is_linear_and_flags_bridges() {
        let t = fake(&[0.1, 0.3, 6.2], |a| a);
        let l = t.interpolate(0.2, 1.0, &[]).unwrap();
        assert!((l.value - 0.2).abs() < 1e-12 && !l.bridged);
        assert!(t.interpolate(0.2, 1.0, &[0.25]).unwrap().bridged);
        // wraps through zero
        let w = t.interpolate(0.0, 1.0, &[]).unwrap();
        assert!(w.value > 0.1 && w.value < 6.2);
        assert!(matches!(
            t.interpolate(3.0, 1.0, &[]),
            Err(Error::TableGap { .. })
        ));
    }

    #[test]
    fn flat_map_is_trivially_conformant() {
        let nu0 = Direction::new(&[1.0, 2f64.sqrt()]).unwrap();
        let a0 = nu0.angle();
        let t = fake(&golden_angles(a0, 0.02, 9), |_| 0.25);
        let r = continuity_report(&t, &nu0, 0.02, 10.0).unwrap();
        assert!(r.oscillation.abs() < 1e-15 && r.fitted_constant == 0.0 && r.conformant);
        assert!(matches!(
            continuity_report(&fake(&[a0 + 0.5], |_| 0.0), &nu0, 0.02, 10.0),
            Err(Error::InsufficientNeighbors { found: 0, .. })
        ));
    }

    #[test]
    fn one_sided_limits_see_a_jump() {
        let t = fake(&[0.9, 0.99, 1.01, 1.1], |a| if a < 1.0 { 0.0 } else { 1.0 });
        let l = one_sided_limits(&t, 1.0, 0.05).unwrap();
        assert_eq!((l.below, l.above, l.gap), (0.0, 1.0, 1.0));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let t = fake(&[0.123456789, 1.0 / 3.0, 2.718281828459045], |a| {
            (a * 7.1).sin() / 3.0
        });
        let back = BoundaryTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        for (a, b) in t.entries.iter().zip(&back.entries) {
            assert_eq!(a.mu().unwrap().to_bits(), b.mu().unwrap().to_bits());
        }
    }

    #[test]
    fn sweep_rejects_duplicates_and_records_failures() {
        let psi = Expr::cos(1, 0);
        let op = EllipticOperator::laplacian();
        let cfg = CellConfig {
            depth: 2.0,
            h: 1.0 / 16.0,
            translates: 1,
            richardson: false,
            ..Default::default()
        };
        assert!(sweep(&psi, &op, &[0.5, 0.5 + TAU], &cfg).is_err());
        // y-dependent data on a non-periodic setup fails per entry, not globally
        let bad = Expr::cos(1, 0).mul("x1".parse().unwrap());
        let t = sweep(&bad, &op, &[0.7, 1.1], &cfg).unwrap();
        assert_eq!(t.failures(), 2);
        let t = sweep(&psi, &op, &[1.1, 0.7], &cfg).unwrap();
        assert!(t.entries[0].angle < t.entries[1].angle);
        for e in t.successes() {
            assert!(e.mu().unwrap().abs() < 0.05, "{:?}", e.mu());
        }
    }
}

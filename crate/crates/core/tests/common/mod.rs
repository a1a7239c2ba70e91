//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Star discrepancy by scanning every candidate endpoint `a` in the sorted
/// sample, both as an open and a closed right end.
pub fn star_discrepancy_brute(points: &[f64]) -> f64 {
    let n = points.len() as f64;
    let mut best = 0.0f64;
    let mut cands: Vec<f64> = points.to_vec();
    cands.push(1.0);
    for &a in &cands {
        let mut open = 0usize;
        let mut closed = 0usize;
        for &x in points {
            if x < a {
                open += 1;
            }
            if x <= a {
                closed += 1;
            }
        }
        best = best
            .max((open as f64 / n - a).abs())
            .max((closed as f64 / n - a).abs());
    }
    best
}

/// Smallest `|z . nu - c|` over integer `z` with `|z - p|_inf <= r`.
pub fn lattice_box_min(nu: [f64; 2], c: f64, p: [f64; 2], r: f64) -> f64 {
    let mut best = f64::INFINITY;
    for a in (p[0] - r).ceil() as i64..=(p[0] + r).floor() as i64 {
        for b in (p[1] - r).ceil() as i64..=(p[1] + r).floor() as i64 {
            best = best.min((a as f64 * nu[0] + b as f64 * nu[1] - c).abs());
        }
    }
    best
}

/// Mean of `f` over the unit circle by the periodic trapezoid rule.
pub fn circle_mean(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    (0..n)
        .map(|k| f(std::f64::consts::TAU * k as f64 / n as f64))
        .sum::<f64>()
        / n as f64
}

/// Runs a closure while holding a process-wide lock so wall-clock timings
/// of heavy tests are not shared.
pub fn serial<T>(f: impl FnOnce() -> T) -> T {
    use std::sync::Mutex;
    static LOCK: Mutex<()> = Mutex::new(());
    let _g = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    f()
}

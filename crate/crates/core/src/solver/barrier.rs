//! Explicit quadratic supersolution that localizes half-space comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `phi(x) = L^{-1-e}(|x'|^2 - 2(Lambda/lambda)(n-1)x_n^2) + delta + (2(Lambda/lambda)(n-1) + 1)L^{-e}x_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationBarrier {
    pub l: f64,
    pub eps_exp: f64,
    pub delta: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub n: usize,
}

pub fn localization_barrier(
    l: f64,
    eps_exp: f64,
    delta: f64,
    lambda: f64,
    big_lambda: f64,
    n: usize,
) -> Result<LocalizationBarrier> {
    if !(l > 1.0) {
        return Err(Error::Invalid(format!("L must exceed 1, got {l}")));
    }
    if !(eps_exp > 0.0 && eps_exp < 1.0) {
        return Err(Error::Invalid(format!(
            "exponent must lie in (0, 1), got {eps_exp}"
        )));
    }
    if !(lambda > 0.0 && big_lambda >= lambda) {
        return Err(Error::Invalid(format!(
            "need 0 < lambda <= Lambda, got ({lambda}, {big_lambda})"
        )));
    }
    if n < 2 {
        return Err(Error::Invalid("dimension must be at least 2".into()));
    }
    Ok(LocalizationBarrier {
        l,
        eps_exp,
        delta,
        lambda,
        big_lambda,
        n,
    })
}

impl LocalizationBarrier {
    fn ratio(&self) -> f64 {
        self.big_lambda / self.lambda * (self.n - 1) as f64
    }

    fn curvature(&self) -> f64 {
        self.l.powf(-1.0 - self.eps_exp)
    }

    /// Value at `x`, the last coordinate being the normal one.
    pub fn value(&self, x: &[f64]) -> f64 {
        let (xn, rest) = x.split_last().expect("nonempty point");
        let tangential: f64 = rest.iter().map(|v| v * v).sum();
        self.curvature() * (tangential - 2.0 * self.ratio() * xn * xn)
            + self.delta
            + (2.0 * self.ratio() + 1.0) * self.l.powf(-self.eps_exp) * xn
    }

    /// Hessian eigenvalues; the Hessian is diagonal and constant.
    pub fn hessian_diagonal(&self) -> Vec<f64> {
        let c = self.curvature();
        let mut d = vec![2.0 * c; self.n];
        d[self.n - 1] = -4.0 * c * self.ratio();
        d
    }

    /// `-P+(D^2 phi)`, constant in space.
    pub fn residual(&self) -> f64 {
        let p: f64 = self
            .hessian_diagonal()
            .iter()
            .map(|&e| {
                if e > 0.0 {
                    self.big_lambda * e
                } else {
                    self.lambda * e
                }
            })
            .sum();
        -p
    }

    /// Upper bound of `phi` on `Q_1 = {|x'| <= 1, 0 <= x_n <= 1}`.
    pub fn q1_bound(&self) -> f64 {
        self.delta + 2.0 * (self.ratio() + 1.0) * self.l.powf(-self.eps_exp)
    }

    /// Smallest value of `phi` on the lateral and far faces of `Q_L`, the
    /// level up to which boundary data is dominated there.
    pub fn far_boundary_floor(&self) -> f64 {
        // lateral face |x'| = L: minimum over x_n in [0, L] of a concave function sits at an end
        let l = self.l;
        let mut at = vec![0.0; self.n];
        at[0] = l;
        let lateral_bottom = self.value(&at);
        at[self.n - 1] = l;
        let lateral_top = self.value(&at);
        at[0] = 0.0;
        let far = self.value(&at);
        lateral_bottom.min(lateral_top).min(far)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_matches_formula() {
        for &(lam, big, n) in &[(1.0, 1.0, 2usize), (1.0, 4.0, 2), (0.5, 3.0, 3)] {
            let b = localization_barrier(10.0, 0.5, 0.1, lam, big, n).unwrap();
            let expected = 2.0 * big * (n - 1) as f64 * 10f64.powf(-1.5);
            assert!((b.residual() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn q1_bound_dominates_samples() {
        let b = localization_barrier(50.0, 0.3, 0.2, 1.0, 2.0, 2).unwrap();
        for i in 0..=20 {
            for j in 0..=20 {
                let x = [-1.0 + 0.1 * i as f64, 0.05 * j as f64];
                assert!(b.value(&x) <= b.q1_bound() + 1e-15);
            }
        }
    }

    #[test]
    fn vanishes_for_large_l() {
        let b = localization_barrier(1e12, 0.5, 0.0, 1.0, 1.0, 2).unwrap();
        assert!(b.q1_bound() < 1e-5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(localization_barrier(1.0, 0.5, 0.0, 1.0, 1.0, 2).is_err());
        assert!(localization_barrier(2.0, 1.0, 0.0, 1.0, 1.0, 2).is_err());
    }
}

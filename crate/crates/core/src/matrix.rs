//! Symmetric 2x2 matrices and the Pucci extremal operators.

use serde::{Deserialize, Serialize};

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMatrix2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymMatrix2 {
    pub const ZERO: Self = Self {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };
    pub const IDENTITY: Self = Self {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self {
            xx: a,
            xy: 0.0,
            yy: b,
        }
    }

    pub fn scaled_identity(s: f64) -> Self {
        Self::diag(s, s)
    }

    /// `v v^T`.
    pub fn outer(v: [f64; 2]) -> Self {
        Self::new(v[0] * v[0], v[0] * v[1], v[1] * v[1])
    }

    /// `R_theta diag(a, b) R_theta^T`.
    pub fn rotated_diag(theta: f64, a: f64, b: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::outer([c, s]) * a + Self::outer([-s, c]) * b
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// `Tr(self * other)`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    /// `v^T self w`.
    pub fn bilinear(&self, v: [f64; 2], w: [f64; 2]) -> f64 {
        v[0] * (self.xx * w[0] + self.xy * w[1]) + v[1] * (self.xy * w[0] + self.yy * w[1])
    }

    pub fn quad(&self, v: [f64; 2]) -> f64 {
        self.bilinear(v, v)
    }

    /// Eigenvalues in decreasing order, in closed form.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.xx + self.yy);
        let d = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        (m + d, m - d)
    }

    /// Angle of the eigenvector of the larger eigenvalue.
    pub fn principal_angle(&self) -> f64 {
        0.5 * (2.0 * self.xy).atan2(self.xx - self.yy)
    }

    /// Expresses the matrix in the orthonormal basis `(e1, e2)`:
    /// entries `e_a^T M e_b`.
    pub fn in_basis(&self, e1: [f64; 2], e2: [f64; 2]) -> Self {
        Self::new(self.quad(e1), self.bilinear(e1, e2), self.quad(e2))
    }

    /// Inverse of [`in_basis`](Self::in_basis): the matrix whose entries in
    /// the basis `(e1, e2)` are `self`.
    pub fn from_basis(&self, e1: [f64; 2], e2: [f64; 2]) -> Self {
        Self::outer(e1) * self.xx
            + (Self::outer([e1[0] + e2[0], e1[1] + e2[1]]) - Self::outer(e1) - Self::outer(e2))
                * self.xy
            + Self::outer(e2) * self.yy
    }

    /// Smallest and largest eigenvalue bounds check `lo I <= self <= hi I`.
    pub fn within(&self, lo: f64, hi: f64, tol: f64) -> bool {
        let (a, b) = self.eigenvalues();
        b >= lo - tol && a <= hi + tol
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

impl std::ops::Add for SymMatrix2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl std::ops::Sub for SymMatrix2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

impl std::ops::Neg for SymMatrix2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.xx, -self.xy, -self.yy)
    }
}

impl std::ops::Mul<f64> for SymMatrix2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }
}

/// `P+(M) = Lambda Tr M+ - lambda Tr M-`.
pub fn pucci_plus(m: &SymMatrix2, lambda: f64, big_lambda: f64) -> f64 {
    let (a, b) = m.eigenvalues();
    [a, b]
        .iter()
        .map(|&e| if e > 0.0 { big_lambda * e } else { lambda * e })
        .sum()
}

/// `P-(M) = lambda Tr M+ - Lambda Tr M-`.
pub fn pucci_minus(m: &SymMatrix2, lambda: f64, big_lambda: f64) -> f64 {
    let (a, b) = m.eigenvalues();
    [a, b]
        .iter()
        .map(|&e| if e > 0.0 { lambda * e } else { big_lambda * e })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pucci_examples() {
        assert_eq!(pucci_plus(&SymMatrix2::IDENTITY, 1.0, 2.0), 4.0);
        assert_eq!(pucci_plus(&SymMatrix2::diag(1.0, -1.0), 1.0, 2.0), 1.0);
        assert_eq!(pucci_minus(&SymMatrix2::diag(1.0, -1.0), 1.0, 2.0), -1.0);
    }

    #[test]
    fn eigen_and_frames() {
        let m = SymMatrix2::rotated_diag(0.3, 5.0, -2.0);
        let (a, b) = m.eigenvalues();
        assert!((a - 5.0).abs() < 1e-14 && (b + 2.0).abs() < 1e-14);
        assert!((m.principal_angle() - 0.3).abs() < 1e-14);
        let (s, c) = 0.7f64.sin_cos();
        let (e1, e2) = ([c, s], [-s, c]);
        let back = m.in_basis(e1, e2).from_basis(e1, e2);
        assert!((back - m).eigenvalues().0.abs() < 1e-14);
        assert!((back - m).eigenvalues().1.abs() < 1e-14);
    }

    #[test]
    fn duality_is_exact() {
        let m = SymMatrix2::new(0.3, -1.7, 2.2);
        assert_eq!(pucci_minus(&m, 0.5, 3.0), -pucci_plus(&-m, 0.5, 3.0));
    }
}

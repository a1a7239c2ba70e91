//! Uniformly elliptic operators `F(M, x, y)` in min-max form.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::matrix::{pucci_minus, pucci_plus, SymMatrix2};

/// Symmetric matrix whose entries are expressions in `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixField {
    pub xx: Expr,
    pub xy: Expr,
    pub yy: Expr,
}

impl MatrixField {
    pub fn constant(m: SymMatrix2) -> Self {
        Self {
            xx: Expr::Const(m.xx),
            xy: Expr::Const(m.xy),
            yy: Expr::Const(m.yy),
        }
    }

    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> SymMatrix2 {
        SymMatrix2::new(self.xx.eval(x, y), self.xy.eval(x, y), self.yy.eval(x, y))
    }

    pub fn frozen(&self, x: [f64; 2]) -> Self {
        Self {
            xx: self.xx.frozen(x),
            xy: self.xy.frozen(x),
            yy: self.yy.frozen(x),
        }
    }

    fn entries(&self) -> [&Expr; 3] {
        [&self.xx, &self.xy, &self.yy]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorKind {
    /// `f - Tr(A M)`.
    Linear { a: MatrixField, f: Expr },
    /// `-P+(M)`.
    PucciPlus,
    /// `-P-(M)`.
    PucciMinus,
    /// `f - min_beta max_alpha Tr(A^{alpha beta} M)`, indexed `families[beta][alpha]`.
    Isaacs {
        families: Vec<Vec<MatrixField>>,
        f: Expr,
    },
    /// `min{-Tr M, -M_ee - anisotropy M_nn}` with `n = nu`, `e = nu` rotated by +90 degrees.
    Example37 { anisotropy: f64, nu: [f64; 2] },
}

/// An operator together with its ellipticity constants `0 < lambda <= big_lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticOperator {
    pub kind: OperatorKind,
    pub lambda: f64,
    pub big_lambda: f64,
}

/// Finite min-max data of an operator at one point:
/// `F(M) = forcing - min_beta max_alpha Tr(A M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    pub forcing: f64,
    pub families: Vec<Vec<SymMatrix2>>,
}

impl Game {
    pub fn value(&self, m: &SymMatrix2) -> f64 {
        let inner = self
            .families
            .iter()
            .map(|fam| {
                fam.iter()
                    .map(|a| a.dot(m))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        self.forcing - inner
    }
}

/// Pucci frames: `lambda I`, `Lambda I` and `R diag(Lambda, lambda) R^T` at
/// `k` angles `j pi / k`.
pub fn pucci_family(lambda: f64, big_lambda: f64, k: usize) -> Vec<SymMatrix2> {
    let mut out = vec![
        SymMatrix2::scaled_identity(lambda),
        SymMatrix2::scaled_identity(big_lambda),
    ];
    for j in 0..k {
        out.push(SymMatrix2::rotated_diag(
            j as f64 * PI / k as f64,
            big_lambda,
            lambda,
        ));
    }
    out
}

fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

fn unit(v: [f64; 2]) -> Result<[f64; 2]> {
    let n = v[0].hypot(v[1]);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Invalid("direction must be nonzero".into()));
    }
    Ok([v[0] / n, v[1] / n])
}

impl EllipticOperator {
    fn checked(kind: OperatorKind, lambda: f64, big_lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(big_lambda >= lambda) || !big_lambda.is_finite() {
            return Err(Error::Invalid(format!(
                "ellipticity constants must satisfy 0 < lambda <= Lambda, got ({lambda}, {big_lambda})"
            )));
        }
        Ok(Self {
            kind,
            lambda,
            big_lambda,
        })
    }

    pub fn linear(a: MatrixField, f: Expr, lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::checked(OperatorKind::Linear { a, f }, lambda, big_lambda)
    }

    /// `-Tr M`.
    pub fn laplacian() -> Self {
        Self::linear(
            MatrixField::constant(SymMatrix2::IDENTITY),
            Expr::Const(0.0),
            1.0,
            1.0,
        )
        .expect("valid constants")
    }

    pub fn pucci_plus(lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::checked(OperatorKind::PucciPlus, lambda, big_lambda)
    }

    pub fn pucci_minus(lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::checked(OperatorKind::PucciMinus, lambda, big_lambda)
    }

    pub fn isaacs(
        families: Vec<Vec<MatrixField>>,
        f: Expr,
        lambda: f64,
        big_lambda: f64,
    ) -> Result<Self> {
        if families.is_empty() || families.iter().any(|a| a.is_empty()) {
            return Err(Error::Invalid(
                "Isaacs control families must be non-empty".into(),
            ));
        }
        Self::checked(OperatorKind::Isaacs { families, f }, lambda, big_lambda)
    }

    pub fn example_3_7(anisotropy: f64, nu: [f64; 2]) -> Result<Self> {
        if !(anisotropy >= 1.0) {
            return Err(Error::Invalid("anisotropy must be at least 1".into()));
        }
        Self::checked(
            OperatorKind::Example37 {
                anisotropy,
                nu: unit(nu)?,
            },
            1.0,
            anisotropy,
        )
    }

    /// Short human-readable name.
    pub fn name(&self) -> String {
        match &self.kind {
            OperatorKind::Linear { .. } => "linear".into(),
            OperatorKind::PucciPlus => format!("pucci_plus({}, {})", self.lambda, self.big_lambda),
            OperatorKind::PucciMinus => {
                format!("pucci_minus({}, {})", self.lambda, self.big_lambda)
            }
            OperatorKind::Isaacs { .. } => "isaacs".into(),
            OperatorKind::Example37 { anisotropy, nu } => {
                format!(
                    "example_3_7(Lambda = {anisotropy}, nu = ({}, {}))",
                    nu[0], nu[1]
                )
            }
        }
    }

    fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            OperatorKind::Linear { a, f } => {
                let mut v: Vec<&Expr> = a.entries().to_vec();
                v.push(f);
                v
            }
            OperatorKind::Isaacs { families, f } => {
                let mut v: Vec<&Expr> = families
                    .iter()
                    .flatten()
                    .flat_map(|m| m.entries())
                    .collect();
                v.push(f);
                v
            }
            _ => Vec::new(),
        }
    }

    pub fn depends_on_x(&self) -> bool {
        self.exprs().iter().any(|e| e.depends_on_x())
    }

    pub fn depends_on_y(&self) -> bool {
        self.exprs().iter().any(|e| e.depends_on_y())
    }

    /// True when the game does not vary in space.
    pub fn is_constant_coefficient(&self) -> bool {
        !self.depends_on_x() && !self.depends_on_y()
    }

    pub fn forcing(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        match &self.kind {
            OperatorKind::Linear { f, .. } | OperatorKind::Isaacs { f, .. } => f.eval(x, y),
            _ => 0.0,
        }
    }

    /// `F(M, x, y)`; extremal kinds use the exact eigenvalue formula.
    pub fn evaluate(&self, m: &SymMatrix2, x: [f64; 2], y: [f64; 2]) -> f64 {
        match &self.kind {
            OperatorKind::Linear { a, f } => f.eval(x, y) - a.eval(x, y).dot(m),
            OperatorKind::PucciPlus => -pucci_plus(m, self.lambda, self.big_lambda),
            OperatorKind::PucciMinus => -pucci_minus(m, self.lambda, self.big_lambda),
            OperatorKind::Isaacs { families, f } => {
                let inner = families
                    .iter()
                    .map(|fam| {
                        fam.iter()
                            .map(|a| a.eval(x, y).dot(m))
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .fold(f64::INFINITY, f64::min);
                f.eval(x, y) - inner
            }
            OperatorKind::Example37 { anisotropy, nu } => {
                let eta = perp(*nu);
                (-m.trace()).min(-m.quad(eta) - anisotropy * m.quad(*nu))
            }
        }
    }

    /// Finite min-max representation at `(x, y)`; extremal kinds use
    /// `angles` rotated frames.
    pub fn game(&self, x: [f64; 2], y: [f64; 2], angles: usize) -> Game {
        match &self.kind {
            OperatorKind::Linear { a, f } => Game {
                forcing: f.eval(x, y),
                families: vec![vec![a.eval(x, y)]],
            },
            OperatorKind::PucciPlus => Game {
                forcing: 0.0,
                families: vec![pucci_family(self.lambda, self.big_lambda, angles)],
            },
            OperatorKind::PucciMinus => Game {
                forcing: 0.0,
                families: pucci_family(self.lambda, self.big_lambda, angles)
                    .into_iter()
                    .map(|a| vec![a])
                    .collect(),
            },
            OperatorKind::Isaacs { families, f } => Game {
                forcing: f.eval(x, y),
                families: families
                    .iter()
                    .map(|fam| fam.iter().map(|a| a.eval(x, y)).collect())
                    .collect(),
            },
            OperatorKind::Example37 { anisotropy, nu } => {
                let eta = perp(*nu);
                let a2 = SymMatrix2::outer(eta) + SymMatrix2::outer(*nu) * *anisotropy;
                Game {
                    forcing: 0.0,
                    families: vec![vec![SymMatrix2::IDENTITY, a2]],
                }
            }
        }
    }

    /// Operator with coefficients frozen at `x` and the inhomogeneity dropped.
    pub fn rescale(&self, x: [f64; 2]) -> Self {
        let kind = match &self.kind {
            OperatorKind::Linear { a, .. } => OperatorKind::Linear {
                a: a.frozen(x),
                f: Expr::Const(0.0),
            },
            OperatorKind::Isaacs { families, .. } => OperatorKind::Isaacs {
                families: families
                    .iter()
                    .map(|fam| fam.iter().map(|a| a.frozen(x)).collect())
                    .collect(),
                f: Expr::Const(0.0),
            },
            k => k.clone(),
        };
        Self {
            kind,
            lambda: self.lambda,
            big_lambda: self.big_lambda,
        }
    }

    /// Samples the ellipticity sandwich, monotonicity and coefficient bounds.
    pub fn check_ellipticity(&self, samples: usize, seed: u64) -> EllipticityReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l, big_l) = (self.lambda, self.big_lambda);
        let random_matrix = |rng: &mut ChaCha8Rng, scale: f64| {
            SymMatrix2::new(
                rng.random_range(-scale..scale),
                rng.random_range(-scale..scale),
                rng.random_range(-scale..scale),
            )
        };
        for _ in 0..samples.max(1) {
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let y = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let m = random_matrix(&mut rng, 3.0);
            let n = random_matrix(&mut rng, 3.0);
            let tol = 1e-10 * (1.0 + big_l) * 10.0;
            let fail = |check: &str, lhs: f64, rhs: f64| {
                Some(Witness {
                    check: check.into(),
                    m,
                    n,
                    x,
                    y,
                    lhs,
                    rhs,
                })
            };

            if let Some(coeffs) = self.coefficients(x, y) {
                for a in coeffs {
                    if !a.within(l, big_l, 1e-12) {
                        let (hi, lo) = a.eigenvalues();
                        return EllipticityReport::failed(
                            samples,
                            fail("coefficient bounds", lo, hi).expect("witness"),
                        );
                    }
                }
            }

            let diff = self.evaluate(&m, x, y) - self.evaluate(&n, x, y);
            let lower = -pucci_plus(&(m - n), l, big_l);
            let upper = -pucci_minus(&(m - n), l, big_l);
            if diff < lower - tol {
                return EllipticityReport::failed(
                    samples,
                    fail("sandwich lower", diff, lower).expect("witness"),
                );
            }
            if diff > upper + tol {
                return EllipticityReport::failed(
                    samples,
                    fail("sandwich upper", diff, upper).expect("witness"),
                );
            }

            // (F2) with N >= 0.
            let b = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let c = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let psd = SymMatrix2::outer(b) + SymMatrix2::outer(c);
            let drop = self.evaluate(&m, x, y) - self.evaluate(&(m + psd), x, y);
            let tr = psd.trace();
            if drop < l * tr - tol || drop > big_l * tr + tol {
                return EllipticityReport::failed(
                    samples,
                    fail("monotonicity", drop, tr).expect("witness"),
                );
            }
        }
        EllipticityReport {
            samples,
            passed: true,
            witness: None,
        }
    }

    fn coefficients(&self, x: [f64; 2], y: [f64; 2]) -> Option<Vec<SymMatrix2>> {
        match &self.kind {
            OperatorKind::Linear { a, .. } => Some(vec![a.eval(x, y)]),
            OperatorKind::Isaacs { families, .. } => {
                Some(families.iter().flatten().map(|a| a.eval(x, y)).collect())
            }
            OperatorKind::Example37 { .. } => Some(self.game(x, y, 2).families.concat()),
            _ => None,
        }
    }
}

/// A sample violating one of the checked inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub check: String,
    pub m: SymMatrix2,
    pub n: SymMatrix2,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub samples: usize,
    pub passed: bool,
    pub witness: Option<Witness>,
}

impl EllipticityReport {
    fn failed(samples: usize, w: Witness) -> Self {
        Self {
            samples,
            passed: false,
            witness: Some(w),
        }
    }
}

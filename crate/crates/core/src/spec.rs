//! Text specifications of reals, directions and operators.

use crate::discrepancy::Direction;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::matrix::SymMatrix2;
use crate::operators::{EllipticOperator, MatrixField};

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

/// Golden ratio conjugate `(sqrt 5 - 1) / 2`.
const PHI: f64 = 0.618_033_988_749_894_8;

fn named(s: &str) -> Option<f64> {
    Some(match s {
        "phi" | "golden" => PHI,
        "pi" => std::f64::consts::PI,
        "tau" => std::f64::consts::TAU,
        "e" => std::f64::consts::E,
        "sqrt2" => std::f64::consts::SQRT_2,
        "sqrt3" => 3f64.sqrt(),
        "sqrt5" => 5f64.sqrt(),
        _ => return None,
    })
}

fn atom(s: &str) -> Result<f64> {
    let s = s.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, s),
    };
    let v = named(body).map(Ok).unwrap_or_else(|| {
        body.parse::<f64>()
            .map_err(|_| invalid(format!("not a number: {s:?}")))
    })?;
    Ok(sign * v)
}

/// Parses a real given as a number, a named constant (`phi`, `pi`, `e`,
/// `sqrt2`, `sqrt3`, `sqrt5`, `tau`) or a quotient `a/b` of those.
pub fn real(s: &str) -> Result<f64> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let d = atom(b)?;
            if d == 0.0 {
                return Err(invalid(format!("division by zero in {s:?}")));
            }
            atom(a)? / d
        }
        None => atom(s)?,
    };
    if !v.is_finite() {
        return Err(invalid(format!("not finite: {s:?}")));
    }
    Ok(v)
}

/// Comma-separated reals.
pub fn reals(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(real).collect()
}

/// A direction from components `a,b` or from `angle:t` in radians.
pub fn direction(s: &str) -> Result<Direction> {
    if let Some(t) = s.trim().strip_prefix("angle:") {
        return Ok(Direction::from_angle(real(t)?));
    }
    let v = reals(s)?;
    if v.len() != 2 {
        return Err(invalid(format!(
            "a direction needs two components, got {s:?}"
        )));
    }
    Direction::new(&v)
}

/// Splits `name(a, b, ...)` into the name and its arguments.
fn call(s: &str) -> Result<(&str, Vec<f64>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s, Vec::new())),
        Some(open) => {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| invalid(format!("missing ')' in {s:?}")))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                reals(inner)?
            };
            Ok((s[..open].trim(), args))
        }
    }
}

/// Builds an operator from `laplacian`, `pucci_plus(l, L)`, `pucci_minus(l, L)`,
/// `linear(a11, a12, a22)` or `example_3_7(L[, nu1, nu2])`; the last one
/// uses `nu` when no direction is given.
pub fn operator(s: &str, nu: Option<[f64; 2]>) -> Result<EllipticOperator> {
    let (name, args) = call(s)?;
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(invalid(format!(
                "{name} takes {n} arguments, got {}",
                args.len()
            )))
        }
    };
    let op = match name {
        "laplacian" => {
            arity(0)?;
            Ok(EllipticOperator::laplacian())
        }
        "pucci_plus" => {
            arity(2)?;
            EllipticOperator::pucci_plus(args[0], args[1])
        }
        "pucci_minus" => {
            arity(2)?;
            EllipticOperator::pucci_minus(args[0], args[1])
        }
        "linear" => {
            arity(3)?;
            let m = SymMatrix2::new(args[0], args[1], args[2]);
            let (hi, lo) = m.eigenvalues();
            if !(lo > 0.0) {
                return Err(invalid(format!(
                    "linear coefficients must be positive definite, eigenvalues ({lo}, {hi})"
                )));
            }
            EllipticOperator::linear(MatrixField::constant(m), Expr::Const(0.0), lo, hi)
        }
        "example_3_7" => match args.len() {
            1 => {
                let nu = nu.ok_or_else(|| {
                    invalid("example_3_7 needs a direction: example_3_7(L, nu1, nu2)")
                })?;
                EllipticOperator::example_3_7(args[0], nu)
            }
            3 => EllipticOperator::example_3_7(args[0], [args[1], args[2]]),
            n => {
                return Err(invalid(format!(
                    "example_3_7 takes 1 or 3 arguments, got {n}"
                )))
            }
        },
        other => return Err(invalid(format!("unknown operator {other:?}"))),
    };
    op
}

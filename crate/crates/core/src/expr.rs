//! A small expression language for coefficient fields and boundary data.
//!
//! Expressions combine constants, the slow variables `x1`, `x2`, and the
//! periodic waves `cos(k1, k2[, phase])`, `sin(k1, k2[, phase])`, which mean
//! `cos(2 pi (k1 y1 + k2 y2) + phase)` in the fast variable `y`. The
//! operators are `+ - * /`, unary minus, parentheses, `pos(e) = max(e, 0)` and
//! `neg(e) = min(e, 0)`. `pi` is a constant. Waves are Z^2-periodic in `y`
//! by construction.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveKind {
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Slow variable `x1` (0) or `x2` (1).
    Slow(usize),
    Wave {
        kind: WaveKind,
        k: [i64; 2],
        phase: f64,
    },
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pos(Box<Expr>),
    NegPart(Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn cos(k1: i64, k2: i64) -> Self {
        Expr::Wave {
            kind: WaveKind::Cos,
            k: [k1, k2],
            phase: 0.0,
        }
    }

    pub fn sin(k1: i64, k2: i64) -> Self {
        Expr::Wave {
            kind: WaveKind::Sin,
            k: [k1, k2],
            phase: 0.0,
        }
    }

    pub fn wave(kind: WaveKind, k: [i64; 2], phase: f64) -> Self {
        Expr::Wave { kind, k, phase }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, o: Expr) -> Self {
        Expr::Add(Box::new(self), Box::new(o))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, o: Expr) -> Self {
        Expr::Sub(Box::new(self), Box::new(o))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, o: Expr) -> Self {
        Expr::Mul(Box::new(self), Box::new(o))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Self {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            e => Expr::Neg(Box::new(e)),
        }
    }

    pub fn pos_part(self) -> Self {
        Expr::Pos(Box::new(self))
    }

    pub fn neg_part(self) -> Self {
        Expr::NegPart(Box::new(self))
    }

    /// `t * self`.
    pub fn scaled(self, t: f64) -> Self {
        Expr::Const(t).mul(self)
    }

    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Slow(i) => x[*i],
            Expr::Wave { kind, k, phase } => {
                let arg = TAU * (k[0] as f64 * y[0] + k[1] as f64 * y[1]) + phase;
                match kind {
                    WaveKind::Cos => arg.cos(),
                    WaveKind::Sin => arg.sin(),
                }
            }
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Pos(a) => a.eval(x, y).max(0.0),
            Expr::NegPart(a) => a.eval(x, y).min(0.0),
        }
    }

    /// Evaluates a function of the fast variable only.
    pub fn eval_y(&self, y: [f64; 2]) -> f64 {
        self.eval([0.0; 2], y)
    }

    fn any(&self, pred: &impl Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.any(pred) || b.any(pred)
            }
            Expr::Neg(a) | Expr::Pos(a) | Expr::NegPart(a) => a.any(pred),
            _ => false,
        }
    }

    pub fn depends_on_x(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Slow(_)))
    }

    pub fn depends_on_y(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Wave { k, .. } if *k != [0, 0]))
    }

    pub fn is_constant(&self) -> bool {
        !self.depends_on_x() && !self.depends_on_y()
    }

    /// Nonzero frequency vectors of all waves.
    pub fn frequencies(&self) -> Vec<[i64; 2]> {
        let mut out = Vec::new();
        self.collect_freqs(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_freqs(&self, out: &mut Vec<[i64; 2]>) {
        match self {
            Expr::Wave { k, .. } if *k != [0, 0] => out.push(*k),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_freqs(out);
                b.collect_freqs(out);
            }
            Expr::Neg(a) | Expr::Pos(a) | Expr::NegPart(a) => a.collect_freqs(out),
            _ => {}
        }
    }

    /// `self(x, y + tau)`.
    pub fn shifted(&self, tau: [f64; 2]) -> Expr {
        let map = |e: &Expr| Box::new(e.shifted(tau));
        match self {
            Expr::Wave { kind, k, phase } => Expr::Wave {
                kind: *kind,
                k: *k,
                phase: phase + TAU * (k[0] as f64 * tau[0] + k[1] as f64 * tau[1]),
            },
            Expr::Add(a, b) => Expr::Add(map(a), map(b)),
            Expr::Sub(a, b) => Expr::Sub(map(a), map(b)),
            Expr::Mul(a, b) => Expr::Mul(map(a), map(b)),
            Expr::Div(a, b) => Expr::Div(map(a), map(b)),
            Expr::Neg(a) => Expr::Neg(map(a)),
            Expr::Pos(a) => Expr::Pos(map(a)),
            Expr::NegPart(a) => Expr::NegPart(map(a)),
            e => e.clone(),
        }
    }

    /// Replaces the slow variables by the point `x`.
    pub fn frozen(&self, x: [f64; 2]) -> Expr {
        let map = |e: &Expr| Box::new(e.frozen(x));
        match self {
            Expr::Slow(i) => Expr::Const(x[*i]),
            Expr::Add(a, b) => Expr::Add(map(a), map(b)),
            Expr::Sub(a, b) => Expr::Sub(map(a), map(b)),
            Expr::Mul(a, b) => Expr::Mul(map(a), map(b)),
            Expr::Div(a, b) => Expr::Div(map(a), map(b)),
            Expr::Neg(a) => Expr::Neg(map(a)),
            Expr::Pos(a) => Expr::Pos(map(a)),
            Expr::NegPart(a) => Expr::NegPart(map(a)),
            e => e.clone(),
        }
    }

    /// Upper bound on `sup_y |self|`; `None` if the expression depends on `x`.
    pub fn sup_bound(&self) -> Option<f64> {
        Some(match self {
            Expr::Const(c) => c.abs(),
            Expr::Slow(_) => return None,
            Expr::Wave { .. } => 1.0,
            Expr::Add(a, b) | Expr::Sub(a, b) => a.sup_bound()? + b.sup_bound()?,
            Expr::Mul(a, b) => a.sup_bound()? * b.sup_bound()?,
            Expr::Div(a, b) => a.sup_bound()? / b.const_value()?.abs(),
            Expr::Neg(a) | Expr::Pos(a) | Expr::NegPart(a) => a.sup_bound()?,
        })
    }

    /// Upper bound on the Lipschitz constant in `y`; `None` if the expression
    /// depends on `x`.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        Some(match self {
            Expr::Const(_) => 0.0,
            Expr::Slow(_) => return None,
            Expr::Wave { k, .. } => TAU * (k[0] as f64).hypot(k[1] as f64),
            Expr::Add(a, b) | Expr::Sub(a, b) => a.lipschitz_bound()? + b.lipschitz_bound()?,
            Expr::Mul(a, b) => {
                a.sup_bound()? * b.lipschitz_bound()? + b.sup_bound()? * a.lipschitz_bound()?
            }
            Expr::Div(a, b) => a.lipschitz_bound()? / b.const_value()?.abs(),
            Expr::Neg(a) | Expr::Pos(a) | Expr::NegPart(a) => a.lipschitz_bound()?,
        })
    }

    fn const_value(&self) -> Option<f64> {
        self.is_constant().then(|| self.eval([0.0; 2], [0.0; 2]))
    }

    /// Periodic trapezoid average over the unit cell on an `n x n` grid at the
    /// frozen slow point `x`.
    pub fn trapezoid_average(&self, x: [f64; 2], n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.eval(x, [i as f64 * h, j as f64 * h]);
            }
            total += row;
        }
        total * h * h
    }

    /// Cell average: periodic trapezoid rule (exact for trigonometric
    /// polynomials of degree below `n`) with one Richardson step for
    /// data with kinks.
    pub fn cell_average(&self, x: [f64; 2], n: usize) -> f64 {
        if !self.depends_on_y() {
            return self.eval(x, [0.0; 2]);
        }
        let coarse = self.trapezoid_average(x, n);
        let fine = self.trapezoid_average(x, 2 * n);
        if (fine - coarse).abs() < 1e-14 {
            fine
        } else {
            (4.0 * fine - coarse) / 3.0
        }
    }

    /// Sampled oscillation `max - min` over an `n x n` grid of the cell.
    pub fn sampled_osc(&self, x: [f64; 2], n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            for j in 0..n {
                let v = self.eval(x, [i as f64 * h, j as f64 * h]);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        hi - lo
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "({c:?})")
            }
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Slow(i) => write!(f, "x{}", i + 1),
            Expr::Wave { kind, k, phase } => {
                let name = match kind {
                    WaveKind::Cos => "cos",
                    WaveKind::Sin => "sin",
                };
                if *phase == 0.0 && !phase.is_sign_negative() {
                    write!(f, "{name}({}, {})", k[0], k[1])
                } else {
                    write!(f, "{name}({}, {}, {phase:?})", k[0], k[1])
                }
            }
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Pos(a) => write!(f, "pos({a})"),
            Expr::NegPart(a) => write!(f, "neg({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = lhs.add(self.term()?);
            } else if self.eat(b'-') {
                lhs = lhs.sub(self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = lhs.mul(self.unary()?);
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        self.atom()
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < s.len() && (s[self.pos] == b'+' || s[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.err(format!("bad number '{text}'"))
            }
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn constant_arg(&mut self) -> Result<f64> {
        let at = self.pos;
        let e = self.expr()?;
        if !e.is_constant() {
            self.pos = at;
            return self.err("argument must be constant");
        }
        Ok(e.eval([0.0; 2], [0.0; 2]))
    }

    fn integer_arg(&mut self) -> Result<i64> {
        let v = self.constant_arg()?;
        if v.fract() != 0.0 || v.abs() > 1e6 {
            return self.err(format!("frequency {v} is not a small integer"));
        }
        Ok(v as i64)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::Const(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let at = self.pos;
                let name = self.ident();
                match name.as_str() {
                    "pi" => Ok(Expr::Const(PI)),
                    "x1" => Ok(Expr::Slow(0)),
                    "x2" => Ok(Expr::Slow(1)),
                    "cos" | "sin" => {
                        let kind = if name == "cos" {
                            WaveKind::Cos
                        } else {
                            WaveKind::Sin
                        };
                        self.expect(b'(')?;
                        let k1 = self.integer_arg()?;
                        self.expect(b',')?;
                        let k2 = self.integer_arg()?;
                        let phase = if self.eat(b',') {
                            self.constant_arg()?
                        } else {
                            0.0
                        };
                        self.expect(b')')?;
                        Ok(Expr::Wave {
                            kind,
                            k: [k1, k2],
                            phase,
                        })
                    }
                    "pos" | "neg" => {
                        self.expect(b'(')?;
                        let e = self.expr()?;
                        self.expect(b')')?;
                        Ok(if name == "pos" {
                            e.pos_part()
                        } else {
                            e.neg_part()
                        })
                    }
                    _ => {
                        self.pos = at;
                        self.err(format!("unknown name '{name}'"))
                    }
                }
            }
            Some(c) => self.err(format!("unexpected character '{}'", c as char)),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        if p.peek().is_some() {
            return p.err("trailing input");
        }
        Ok(e)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

//! Expression catalog for scenario inputs.
//!
//! Inputs such as the drift potential `b(t, a, x)`, the interaction kernel
//! `l2(x, y)`, initial densities and graphon formulas are written as small
//! closed-form expressions. Only smooth building blocks are accepted:
//! numbers, `pi`, the variables `t`, `a`, `ap`, `x`, `y`, the operators
//! `+ - *`, division by constants, integer powers, and `sin`, `cos`, `exp`.
//! Every expression can be differentiated symbolically.

use std::fmt;

use crate::error::{GmfgError, Result};

/// Variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    /// Time.
    T,
    /// Cluster index.
    A,
    /// Second cluster index (graphon formulas).
    Ap,
    /// Position on the circle.
    X,
    /// Second position on the circle (interaction kernels).
    Y,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::A => "a",
            Var::Ap => "ap",
            Var::X => "x",
            Var::Y => "y",
        }
    }
}

/// Variable bindings used during evaluation. Unused variables may stay zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Point {
    pub t: f64,
    pub a: f64,
    pub ap: f64,
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn txa(t: f64, a: f64, x: f64) -> Self {
        Point { t, a, x, ..Default::default() }
    }

    fn get(&self, v: Var) -> f64 {
        match v {
            Var::T => self.t,
            Var::A => self.a,
            Var::Ap => self.ap,
            Var::X => self.x,
            Var::Y => self.y,
        }
    }

    fn with(mut self, v: Var, value: f64) -> Self {
        match v {
            Var::T => self.t = value,
            Var::A => self.a = value,
            Var::Ap => self.ap = value,
            Var::X => self.x = value,
            Var::Y => self.y = value,
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(GmfgError::InvalidInput(format!(
                "unexpected `{}` in expression `{src}`",
                p.tokens[p.pos]
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => p.get(*v),
            Expr::Add(a, b) => a.eval(p) + b.eval(p),
            Expr::Sub(a, b) => a.eval(p) - b.eval(p),
            Expr::Mul(a, b) => a.eval(p) * b.eval(p),
            Expr::Neg(a) => -a.eval(p),
            Expr::Pow(a, k) => a.eval(p).powi(*k as i32),
            Expr::Sin(a) => a.eval(p).sin(),
            Expr::Cos(a) => a.eval(p).cos(),
            Expr::Exp(a) => a.eval(p).exp(),
        }
    }

    pub fn uses(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.uses(v) || b.uses(v),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.uses(v),
        }
    }

    /// Symbolic partial derivative.
    pub fn derivative(&self, v: Var) -> Expr {
        use Expr::*;
        
        match self {
            Const(_) => Const(0.0),
            Var(w) => Const(if *w == v { 1.0 } else { 0.0 }),
            Add(a, b) => add(a.derivative(v), b.derivative(v)),
            Sub(a, b) => sub(a.derivative(v), b.derivative(v)),
            Mul(a, b) => add(
                mul(a.derivative(v), (**b).clone()),
                mul((**a).clone(), b.derivative(v)),
            ),
            Neg(a) => neg(a.derivative(v)),
            Pow(a, k) => match k {
                0 => Const(0.0),
                1 => a.derivative(v),
                _ => mul(
                    mul(Const(*k as f64), pow((**a).clone(), k - 1)),
                    a.derivative(v),
                ),
            },
            Sin(a) => mul(Cos(a.clone()), a.derivative(v)),
            Cos(a) => neg(mul(Sin(a.clone()), a.derivative(v))),
            Exp(a) => mul(Exp(a.clone()), a.derivative(v)),
        }
    }

    fn is_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.is_const(), b.is_const()) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(z), _) if z == 0.0 => b,
        (_, Some(z)) if z == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.is_const(), b.is_const()) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (_, Some(z)) if z == 0.0 => a,
        (Some(z), _) if z == 0.0 => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.is_const(), b.is_const()) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(z), _) | (_, Some(z)) if z == 0.0 => Expr::Const(0.0),
        (Some(o), _) if o == 1.0 => b,
        (_, Some(o)) if o == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, k: u32) -> Expr {
    match (k, a.is_const()) {
        (0, _) => Expr::Const(1.0),
        (1, _) => a,
        (_, Some(c)) => Expr::Const(c.powi(k as i32)),
        _ => Expr::Pow(Box::new(a), k),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Pow(a, k) => write!(f, "({a})^{k}"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "{v}"),
            Token::Ident(s) => write!(f, "{s}"),
            Token::Op(c) => write!(f, "{c}"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| GmfgError::InvalidInput(format!("bad number `{text}` in `{src}`")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(GmfgError::InvalidInput(format!("unexpected character `{c}` in `{src}`")));
        }
    }
    if out.is_empty() {
        return Err(GmfgError::InvalidInput("empty expression".into()));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect_op(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(GmfgError::InvalidInput(format!(
                "expected `{c}`, found {}",
                self.tokens
                    .get(self.pos)
                    .map(|t| format!("`{t}`"))
                    .unwrap_or_else(|| "end of input".into())
            )))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek_op() {
            if op != '+' && op != '-' {
                break;
            }
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_op() {
            if op != '*' && op != '/' {
                break;
            }
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                let d = constant_value(&rhs).ok_or_else(|| {
                    GmfgError::InvalidInput(format!("division only by constants, got `{rhs}`"))
                })?;
                if d == 0.0 {
                    return Err(GmfgError::InvalidInput("division by zero".into()));
                }
                Expr::Mul(Box::new(lhs), Box::new(Expr::Const(1.0 / d)))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            let k = constant_value(&exp)
                .filter(|v| *v >= 0.0 && v.fract() == 0.0 && *v <= 64.0)
                .ok_or_else(|| {
                    GmfgError::InvalidInput(format!("exponent must be a small non-negative integer, got `{exp}`"))
                })?;
            return Ok(Expr::Pow(Box::new(base), k as u32));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| GmfgError::InvalidInput("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Const(v)),
            Token::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Token::Op(c) => Err(GmfgError::InvalidInput(format!("unexpected `{c}`"))),
            Token::Ident(name) => {
                let func = match name.as_str() {
                    "sin" | "cos" | "exp" => Some(name.clone()),
                    _ => None,
                };
                if let Some(func) = func {
                    self.expect_op('(')?;
                    let arg = Box::new(self.expr()?);
                    self.expect_op(')')?;
                    return Ok(match func.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        _ => Expr::Exp(arg),
                    });
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "t" => Ok(Expr::Var(Var::T)),
                    "a" | "alpha" => Ok(Expr::Var(Var::A)),
                    "ap" | "alpha2" => Ok(Expr::Var(Var::Ap)),
                    "x" => Ok(Expr::Var(Var::X)),
                    "y" => Ok(Expr::Var(Var::Y)),
                    other => Err(GmfgError::InvalidInput(format!(
                        "unknown identifier `{other}` (allowed: t, a, ap, x, y, pi, sin, cos, exp)"
                    ))),
                }
            }
        }
    }
}

/// Evaluates an expression that references no variables.
fn constant_value(e: &Expr) -> Option<f64> {
    let vars = [Var::T, Var::A, Var::Ap, Var::X, Var::Y];
    if vars.iter().any(|v| e.uses(*v)) {
        None
    } else {
        Some(e.eval(&Point::default()))
    }
}

/// Deterministic probe points in the unit box, for load-time validation.
pub(crate) fn probe_points(count: usize, horizon: f64) -> Vec<Point> {
    // Weyl sequence with irrational increments; reproducible without an RNG.
    let incs = [0.754_877_666_246_692_8, 0.569_840_290_998_053_3, 0.362_437_053_104_637, 0.171_234_567_890_123_4];
    (1..=count)
        .map(|k| {
            let f = |d: usize| (k as f64 * incs[d]).fract();
            Point {
                t: f(0) * horizon,
                a: f(1),
                ap: f(2),
                x: f(3),
                y: (f(0) + f(2)).fract(),
            }
        })
        .collect()
}

/// Checks periodicity in `v` (shift by one) at probe points.
pub(crate) fn check_periodic(e: &Expr, v: Var, key: &str, horizon: f64) -> Result<()> {
    for p in probe_points(32, horizon) {
        let base = e.eval(&p);
        let shifted = e.eval(&p.with(v, p.get(v) + 1.0));
        if (base - shifted).abs() > 1e-9 * (1.0 + base.abs()) {
            return Err(GmfgError::config(
                key,
                format!("expression `{e}` is not 1-periodic in {}", v.name()),
            ));
        }
    }
    Ok(())
}

/// Compares the symbolic derivative against a central finite-difference
/// probe at deterministic points.
pub(crate) fn check_derivative(e: &Expr, de: &Expr, v: Var, key: &str, horizon: f64) -> Result<()> {
    let step = 1e-5;
    for p in probe_points(24, horizon) {
        let fd = (e.eval(&p.with(v, p.get(v) + step)) - e.eval(&p.with(v, p.get(v) - step))) / (2.0 * step);
        let exact = de.eval(&p);
        let tol = 1e-5 * (1.0 + exact.abs() + e.eval(&p).abs());
        if (fd - exact).abs() > tol || !exact.is_finite() {
            return Err(GmfgError::config(
                key,
                format!(
                    "derivative in {} inconsistent with finite-difference probe ({exact} vs {fd})",
                    v.name()
                ),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(src: &str, p: Point) -> f64 {
        Expr::parse(src).unwrap().eval(&p)
    }

    #[test]
    fn parses_catalog_forms() {
        let p = Point { t: 0.5, a: 0.25, x: 0.125, y: 0.75, ap: 0.5 };
        assert!((ev("0.5*sin(2*pi*x)", p) - 0.5 * (0.25 * PI).sin()).abs() < 1e-15);
        assert!((ev("cos(2*pi*(x-y))", p) - (2.0 * PI * (0.125 - 0.75)).cos()).abs() < 1e-15);
        assert!((ev("1 - a^2 + t/2", p) - (1.0 - 0.0625 + 0.25)).abs() < 1e-15);
        assert!((ev("-x^2", p) + 0.015625).abs() < 1e-15);
        assert!((ev("2e-1 * exp(t)", p) - 0.2 * 0.5f64.exp()).abs() < 1e-15);
        assert!((ev("a*ap", p) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_unsafe_forms() {
        assert!(Expr::parse("1/x").is_err());
        assert!(Expr::parse("x^0.5").is_err());
        assert!(Expr::parse("log(x)").is_err());
        assert!(Expr::parse("sin(x").is_err());
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("x $ 2").is_err());
        assert!(Expr::parse("2 3").is_err());
    }

    #[test]
    fn symbolic_derivatives_match_probes() {
        let e = Expr::parse("0.3*sin(2*pi*x)*cos(2*pi*t) + t^2*a + exp(cos(2*pi*x))").unwrap();
        for v in [Var::T, Var::A, Var::X] {
            check_derivative(&e, &e.derivative(v), v, "test", 1.0).unwrap();
        }
        let dxx = e.derivative(Var::X).derivative(Var::X);
        check_derivative(&e.derivative(Var::X), &dxx, Var::X, "test", 1.0).unwrap();
    }

    #[test]
    fn periodicity_check() {
        let good = Expr::parse("sin(2*pi*x) + t").unwrap();
        assert!(check_periodic(&good, Var::X, "drift.b", 1.0).is_ok());
        let bad = Expr::parse("x").unwrap();
        let err = check_periodic(&bad, Var::X, "drift.b", 1.0).unwrap_err();
        assert!(err.to_string().contains("drift.b"));
    }
}

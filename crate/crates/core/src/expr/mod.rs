//! Closed-form scalar expressions in `x1` and `x2`.
//!
//! Data functions, right-hand sides, manufactured solutions and test
//! functions are all carried as [`Expr`] trees. Trees are immutable once
//! built; evaluation never hands back a NaN or infinity, it reports a
//! [`EvalError::Domain`] instead.

mod diff;
mod parse;

use std::fmt;

use thiserror::Error;

pub use diff::DiffError;
pub use parse::{parse, ParseError};

/// Independent variable of an expression. `x` is accepted as an alias of `x1`
/// when parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X1,
    X2,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X1 => "x1",
            Var::X2 => "x2",
        }
    }
}

/// The fixed function vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
    Cosh,
    Sinh,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Tanh,
        Func::Cosh,
        Func::Sinh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Result<f64, EvalError> {
        let y = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(EvalError::Domain(format!("log of non-positive value {x}")));
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(EvalError::Domain(format!("sqrt of negative value {x}")));
                }
                x.sqrt()
            }
            Func::Abs => x.abs(),
            Func::Tanh => x.tanh(),
            Func::Cosh => x.cosh(),
            Func::Sinh => x.sinh(),
        };
        finite(y, self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable {0} is not bound")]
    UnboundVariable(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Values for the free variables. `x2` may be left unbound for expressions of
/// `x1` alone (Cauchy data on the initial line).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bindings {
    pub x1: f64,
    pub x2: Option<f64>,
}

impl Bindings {
    pub fn x1(x1: f64) -> Self {
        Bindings { x1, x2: None }
    }

    pub fn xy(x1: f64, x2: f64) -> Self {
        Bindings { x1, x2: Some(x2) }
    }
}

fn finite(y: f64, what: &str) -> Result<f64, EvalError> {
    if y.is_finite() {
        Ok(y)
    } else {
        Err(EvalError::Domain(format!("{what} produced a non-finite value")))
    }
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    /// Evaluate with the domain-error contract described in the module docs.
    pub fn eval_at(&self, b: &Bindings) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(Var::X1) => Ok(b.x1),
            Expr::Var(Var::X2) => b.x2.ok_or(EvalError::UnboundVariable("x2")),
            Expr::Neg(a) => Ok(-a.eval_at(b)?),
            Expr::Call(f, a) => f.apply(a.eval_at(b)?),
            Expr::Binary(op, l, r) => {
                let x = l.eval_at(b)?;
                let y = r.eval_at(b)?;
                match op {
                    BinOp::Add => finite(x + y, "addition"),
                    BinOp::Sub => finite(x - y, "subtraction"),
                    BinOp::Mul => finite(x * y, "multiplication"),
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::Domain("division by zero".into()));
                        }
                        finite(x / y, "division")
                    }
                    BinOp::Pow => pow_checked(x, y),
                }
            }
        }
    }

    /// Shorthand for evaluation at a point of the plane.
    pub fn eval(&self, x1: f64, x2: f64) -> Result<f64, EvalError> {
        self.eval_at(&Bindings::xy(x1, x2))
    }

    /// Shorthand for evaluation of a function of `x1` alone.
    pub fn eval1(&self, x1: f64) -> Result<f64, EvalError> {
        self.eval_at(&Bindings::x1(x1))
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Binary(_, l, r) => l.depends_on(v) || r.depends_on(v),
        }
    }

    pub fn is_constant(&self) -> bool {
        !self.depends_on(Var::X1) && !self.depends_on(Var::X2)
    }

    /// Value of a variable-free expression.
    pub fn constant_value(&self) -> Option<f64> {
        if self.is_constant() {
            self.eval_at(&Bindings::xy(0.0, 0.0)).ok()
        } else {
            None
        }
    }

    /// Replace every occurrence of `v` by `with`.
    pub fn substitute(&self, v: Var, with: &Expr) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(w) if *w == v => with.clone(),
            Expr::Var(_) => self.clone(),
            Expr::Neg(a) => neg(a.substitute(v, with)),
            Expr::Call(f, a) => call(*f, a.substitute(v, with)),
            Expr::Binary(op, l, r) => binary(*op, l.substitute(v, with), r.substitute(v, with)),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Binary(_, l, r) => 1 + l.size() + r.size(),
        }
    }
}

fn pow_checked(x: f64, y: f64) -> Result<f64, EvalError> {
    if x < 0.0 && y.fract() != 0.0 {
        return Err(EvalError::Domain(format!(
            "fractional power {y} of negative base {x}"
        )));
    }
    if x == 0.0 && y < 0.0 {
        return Err(EvalError::Domain("negative power of zero".into()));
    }
    let v = if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
        x.powi(y as i32)
    } else {
        x.powf(y)
    };
    finite(v, "power")
}

// Smart constructors with constant folding and the trivial identities.
// They are what keeps symbolic derivatives readable.

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn call(f: Func, a: Expr) -> Expr {
    if let Expr::Const(c) = a {
        if let Ok(v) = f.apply(c) {
            return Expr::Const(v);
        }
    }
    Expr::Call(f, Box::new(a))
}

pub(crate) fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
    match op {
        BinOp::Add => add(l, r),
        BinOp::Sub => sub(l, r),
        BinOp::Mul => mul(l, r),
        BinOp::Div => div(l, r),
        BinOp::Pow => pow(l, r),
    }
}

fn raw(op: BinOp, l: Expr, r: Expr) -> Expr {
    Expr::Binary(op, Box::new(l), Box::new(r))
}

pub(crate) fn add(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Const(a), Expr::Const(b)) => Expr::Const(a + b),
        (Expr::Const(a), _) if *a == 0.0 => r,
        (_, Expr::Const(b)) if *b == 0.0 => l,
        (_, Expr::Neg(inner)) => sub(l, (**inner).clone()),
        _ => raw(BinOp::Add, l, r),
    }
}

pub(crate) fn sub(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Const(a), Expr::Const(b)) => Expr::Const(a - b),
        (Expr::Const(a), _) if *a == 0.0 => neg(r),
        (_, Expr::Const(b)) if *b == 0.0 => l,
        (_, Expr::Neg(inner)) => add(l, (**inner).clone()),
        _ => raw(BinOp::Sub, l, r),
    }
}

pub(crate) fn mul(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Const(a), Expr::Const(b)) => Expr::Const(a * b),
        (Expr::Const(a), _) | (_, Expr::Const(a)) if *a == 0.0 => Expr::Const(0.0),
        (Expr::Const(a), _) if *a == 1.0 => r,
        (_, Expr::Const(b)) if *b == 1.0 => l,
        (Expr::Const(a), _) if *a == -1.0 => neg(r),
        (_, Expr::Const(b)) if *b == -1.0 => neg(l),
        // keep numeric factors in front: c1*(c2*e) -> (c1*c2)*e
        (Expr::Const(a), Expr::Binary(BinOp::Mul, rl, rr)) => {
            if let Expr::Const(b) = **rl {
                mul(Expr::Const(a * b), (**rr).clone())
            } else {
                raw(BinOp::Mul, l, r)
            }
        }
        (_, Expr::Const(_)) => mul(r, l),
        _ => raw(BinOp::Mul, l, r),
    }
}

pub(crate) fn div(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Const(a), Expr::Const(b)) if *b != 0.0 => Expr::Const(a / b),
        (Expr::Const(a), _) if *a == 0.0 => Expr::Const(0.0),
        (_, Expr::Const(b)) if *b == 1.0 => l,
        _ => raw(BinOp::Div, l, r),
    }
}

pub(crate) fn pow(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Const(a), Expr::Const(b)) => match pow_checked(*a, *b) {
            Ok(v) => Expr::Const(v),
            Err(_) => raw(BinOp::Pow, l, r),
        },
        (_, Expr::Const(b)) if *b == 0.0 => Expr::Const(1.0),
        (_, Expr::Const(b)) if *b == 1.0 => l,
        _ => raw(BinOp::Pow, l, r),
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        mul(self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl Expr {
    pub fn powf(self, exponent: f64) -> Expr {
        pow(self, Expr::Const(exponent))
    }

    pub fn apply(self, f: Func) -> Expr {
        call(f, self)
    }
}

// Printing. The output re-parses to a tree with identical evaluation.

const PREC_UNARY: u8 = 3;

fn fmt_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{})", -c)
    } else {
        write!(f, "{c}")
    }
}

fn fmt_prec(e: &Expr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) => fmt_const(*c, f),
        Expr::Var(v) => f.write_str(v.name()),
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            fmt_prec(a, 0, f)?;
            f.write_str(")")
        }
        Expr::Neg(a) => {
            let paren = min_prec > PREC_UNARY;
            if paren {
                f.write_str("(")?;
            }
            f.write_str("-")?;
            // '-' takes a power-level operand
            fmt_prec(a, BinOp::Pow.precedence(), f)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let paren = p < min_prec;
            if paren {
                f.write_str("(")?;
            }
            let (lp, rp) = match op {
                // right associative
                BinOp::Pow => (p + 1, p),
                _ => (p, p + 1),
            };
            fmt_prec(l, lp, f)?;
            write!(f, "{}", op.symbol())?;
            fmt_prec(r, rp, f)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, x1: f64, x2: f64) -> Result<f64, EvalError> {
        parse(text).unwrap().eval(x1, x2)
    }

    #[test]
    fn evaluates_simple_forms() {
        assert_eq!(ev("x1^2 + 3*x2", 2.0, 1.0).unwrap(), 7.0);
        assert!(ev("sin(pi)", 0.0, 0.0).unwrap().abs() <= 1e-15);
        assert_eq!(parse("exp(x1)").unwrap().eval1(0.0).unwrap(), 1.0);
        assert_eq!(ev("x + x1", 1.5, 0.0).unwrap(), 3.0);
    }

    #[test]
    fn fractional_power_of_positive_base() {
        let v = parse("(1 - x1^2)^(-0.625)").unwrap().eval1(0.6).unwrap();
        // 0.64^(-0.625) computed independently as exp(-0.625*ln 0.64)
        let oracle = (-0.625f64 * 0.64f64.ln()).exp();
        assert!((v - oracle).abs() <= 1e-15);
        assert!((v - 1.3217).abs() < 1e-4);
    }

    #[test]
    fn domain_errors_are_reported() {
        for (text, x1) in [
            ("1/x1", 0.0),
            ("log(x1)", 0.0),
            ("log(x1)", -1.0),
            ("sqrt(x1)", -1e-3),
            ("x1^0.5", -2.0),
            ("x1^(-1)", 0.0),
            ("exp(x1)", 1000.0),
        ] {
            match parse(text).unwrap().eval1(x1) {
                Err(EvalError::Domain(_)) => {}
                other => panic!("{text} at {x1}: {other:?}"),
            }
        }
        // integer powers of negatives are fine
        assert_eq!(ev("x1^3", -2.0, 0.0).unwrap(), -8.0);
    }

    #[test]
    fn unbound_x2() {
        let e = parse("x1 + x2").unwrap();
        assert_eq!(e.eval1(1.0), Err(EvalError::UnboundVariable("x2")));
    }

    #[test]
    fn negation_binds_looser_than_power() {
        assert_eq!(ev("-x1^2", 3.0, 0.0).unwrap(), -9.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0).unwrap(), 512.0);
        assert_eq!(ev("2^-1", 0.0, 0.0).unwrap(), 0.5);
        assert_eq!(ev("-2*3", 0.0, 0.0).unwrap(), -6.0);
    }

    #[test]
    fn printing_reparses_to_the_same_values() {
        for text in [
            "-x1^2",
            "(-x1)^2",
            "2^3^2",
            "(2^3)^2",
            "x1-(x2-1)",
            "x1/(x2*3)",
            "-(x1+x2)*sin(-x2)",
            "(1 - x1^2)^(-0.625)",
            "e^x1 - pi",
        ] {
            let e = parse(text).unwrap();
            let again = parse(&e.to_string()).unwrap();
            let (a, b) = (e.eval(0.3, 0.7).unwrap(), again.eval(0.3, 0.7).unwrap());
            assert_eq!(a, b, "{text} -> {e}");
        }
    }

    #[test]
    fn substitution() {
        let e = parse("x1^2 + 1").unwrap();
        let s = e.substitute(Var::X1, &parse("x2 + 2*x1").unwrap());
        assert_eq!(s.eval(1.0, 1.0).unwrap(), 10.0);
    }
}

//! Closed-form scalar expressions in chart variables `x1 … xm`.
//!
//! Grammar (whitespace-insensitive, conventional precedence):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?            right-associative
//! atom   := number | 'x' index | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := sqrt | sin | cos | exp | log | tanh | abs
//! number := digits ['.' digits] [('e'|'E') ['+'|'-'] digits]
//! ```
//!
//! `-2^2` is `-(2^2)`; a minus sign directly in front of a literal that is not
//! raised to a power folds into a negative literal so that printing and
//! re-parsing reproduces the tree exactly.

mod ops;
mod parse;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use parse::{parse, ParseError, ParseErrorKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
    Tanh,
    Abs,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Tanh,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    pub(crate) fn apply(self, v: f64) -> Result<f64, EvalError> {
        let out = match self {
            Func::Sqrt => {
                if v < 0.0 {
                    return Err(EvalError::Domain { what: "sqrt of a negative number", at: v });
                }
                libm::sqrt(v)
            }
            Func::Sin => libm::sin(v),
            Func::Cos => libm::cos(v),
            Func::Exp => libm::exp(v),
            Func::Log => {
                if v <= 0.0 {
                    return Err(EvalError::Domain { what: "log of a non-positive number", at: v });
                }
                libm::log(v)
            }
            Func::Tanh => libm::tanh(v),
            Func::Abs => libm::fabs(v),
        };
        finite(out, self.name())
    }
}

/// Expression tree. Variables are stored zero-based (`Var(0)` prints as `x1`).
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error: {what} (argument {at})")]
    Domain { what: &'static str, at: f64 },
    #[error("variable x{index} is not bound (point has dimension {dim})")]
    Unbound { index: usize, dim: usize },
}

fn finite(v: f64, what: &'static str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain { what, at: v })
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    /// Zero-based variable (`Expr::var(0)` is `x1`).
    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        match arg {
            Expr::Num(v) => match f.apply(v) {
                Ok(out) => Expr::Num(out),
                Err(_) => Expr::Call(f, Box::new(Expr::Num(v))),
            },
            arg => Expr::Call(f, Box::new(arg)),
        }
    }

    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }
    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }
    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }
    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }
    pub fn ln(self) -> Expr {
        Expr::call(Func::Log, self)
    }
    pub fn tanh(self) -> Expr {
        Expr::call(Func::Tanh, self)
    }
    pub fn abs(self) -> Expr {
        Expr::call(Func::Abs, self)
    }

    pub fn powf(self, p: f64) -> Expr {
        self.pow(Expr::Num(p))
    }

    pub fn pow(self, p: Expr) -> Expr {
        match (&self, &p) {
            (_, Expr::Num(e)) if *e == 1.0 => self,
            (Expr::Num(b), Expr::Num(e)) => {
                let v = libm::pow(*b, *e);
                if v.is_finite() {
                    Expr::Num(v)
                } else {
                    Expr::Bin(BinOp::Pow, Box::new(self), Box::new(p))
                }
            }
            _ => Expr::Bin(BinOp::Pow, Box::new(self), Box::new(p)),
        }
    }

    /// Sum of squares of the given expressions.
    pub fn norm_sq(parts: &[Expr]) -> Expr {
        parts
            .iter()
            .cloned()
            .fold(Expr::Num(0.0), |acc, p| acc + p.clone() * p)
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Number of variables referenced, i.e. one more than the largest index.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Bin(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Replaces every `Var(i)` by `values[i]`.
    ///
    /// Panics if a variable index is out of range.
    pub fn substitute(&self, values: &[Expr]) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(i) => values[*i].clone(),
            Expr::Neg(a) => -a.substitute(values),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(values)),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.substitute(values), b.substitute(values));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.pow(b),
                }
            }
        }
    }

    /// Symbolic partial derivative with respect to `Var(var)`.
    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(i) => Expr::Num(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => -a.diff(var),
            Expr::Bin(op, a, b) => {
                let (da, db) = (a.diff(var), b.diff(var));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => da + db,
                    BinOp::Sub => da - db,
                    BinOp::Mul => da * b.clone() + a * db,
                    BinOp::Div => da / b.clone() - a * db / (b.clone() * b),
                    BinOp::Pow => match b {
                        Expr::Num(e) => Expr::Num(e) * a.clone().pow(Expr::Num(e - 1.0)) * da,
                        _ => a.clone().pow(b.clone()) * (db * a.clone().ln() + b * da / a),
                    },
                }
            }
            Expr::Call(f, a) => {
                let da = a.diff(var);
                let a = (**a).clone();
                let outer = match f {
                    Func::Sqrt => Expr::Num(0.5) / a.sqrt(),
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Exp => a.exp(),
                    Func::Log => Expr::Num(1.0) / a,
                    Func::Tanh => {
                        let t = a.tanh();
                        Expr::Num(1.0) - t.clone() * t
                    }
                    Func::Abs => a.clone() / a.abs(),
                };
                outer * da
            }
        }
    }

    /// Plain floating-point evaluation. Non-finite intermediate results are
    /// reported as domain errors.
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(i) => x.get(*i).copied().ok_or(EvalError::Unbound {
                index: i + 1,
                dim: x.len(),
            }),
            Expr::Neg(a) => Ok(-a.eval(x)?),
            Expr::Call(f, a) => f.apply(a.eval(x)?),
            Expr::Bin(op, a, b) => apply_bin(*op, a.eval(x)?, b.eval(x)?),
        }
    }

    pub fn to_text(&self) -> String {
        alloc::format!("{self}")
    }
}

pub(crate) fn apply_bin(op: BinOp, a: f64, b: f64) -> Result<f64, EvalError> {
    match op {
        BinOp::Add => finite(a + b, "addition overflow"),
        BinOp::Sub => finite(a - b, "subtraction overflow"),
        BinOp::Mul => finite(a * b, "multiplication overflow"),
        BinOp::Div => {
            if b == 0.0 {
                return Err(EvalError::Domain { what: "division by zero", at: a });
            }
            finite(a / b, "division overflow")
        }
        BinOp::Pow => {
            if a < 0.0 && libm::trunc(b) != b {
                return Err(EvalError::Domain {
                    what: "negative base with non-integer exponent",
                    at: a,
                });
            }
            if a == 0.0 && b < 0.0 {
                return Err(EvalError::Domain { what: "pole of a negative power", at: a });
            }
            finite(libm::pow(a, b), "power overflow")
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    let a = libm::fabs(v);
    if a == libm::trunc(a) && a < 1e15 {
        write!(f, "{}", a as u64)
    } else if (1e-4..1e15).contains(&a) {
        write!(f, "{a}")
    } else {
        write!(f, "{a:e}")
    }
}

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(v) if v.is_sign_negative() => PREC_ATOM,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => PREC_ATOM,
            Expr::Neg(_) => PREC_NEG,
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
            Expr::Bin(BinOp::Pow, ..) => PREC_POW,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        let wrap = self.precedence() < ctx;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    f.write_str("(-")?;
                    write_number(f, *v)?;
                    f.write_str(")")?;
                } else {
                    write_number(f, *v)?;
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1)?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                // `-2` would re-parse as a negative literal
                if matches!(**a, Expr::Num(v) if !v.is_sign_negative()) {
                    f.write_str("(")?;
                    a.write_prec(f, 0)?;
                    f.write_str(")")?;
                } else {
                    a.write_prec(f, PREC_NEG)?;
                }
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_prec(f, 0)?;
                f.write_str(")")?;
            }
            Expr::Bin(op, a, b) => {
                let (sym, l, r) = match op {
                    BinOp::Add => (" + ", PREC_ADD, PREC_MUL),
                    BinOp::Sub => (" - ", PREC_ADD, PREC_MUL),
                    BinOp::Mul => ("*", PREC_MUL, PREC_NEG),
                    BinOp::Div => ("/", PREC_MUL, PREC_NEG),
                    BinOp::Pow => ("^", PREC_ATOM, PREC_NEG),
                };
                a.write_prec(f, l)?;
                f.write_str(sym)?;
                b.write_prec(f, r)?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

/// Evaluates a list of expressions at one point.
pub fn eval_all(exprs: &[Expr], x: &[f64]) -> Result<Vec<f64>, EvalError> {
    exprs.iter().map(|e| e.eval(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn p(s: &str, dim: usize) -> Expr {
        parse(s, dim).unwrap()
    }

    #[test]
    fn evaluates_polynomial() {
        assert_eq!(p("x1^2 + x2", 2).eval(&[2.0, 3.0]).unwrap(), 7.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(p("-2^2", 0).eval(&[]).unwrap(), -4.0);
        assert_eq!(p("2^3^2", 0).eval(&[]).unwrap(), 512.0);
        assert_eq!(p("8/4/2", 0).eval(&[]).unwrap(), 1.0);
        assert_eq!(p("1 - 2 - 3", 0).eval(&[]).unwrap(), -4.0);
        assert_eq!(p("2*-3", 0).eval(&[]).unwrap(), -6.0);
        assert_eq!(p("2^-1", 0).eval(&[]).unwrap(), 0.5);
    }

    #[test]
    fn domain_errors_are_reported() {
        assert!(p("1/(1 - x1)", 1).eval(&[1.0]).is_err());
        assert!(p("log(x1)", 1).eval(&[0.0]).is_err());
        assert!(p("sqrt(x1)", 1).eval(&[-1.0]).is_err());
        assert!(p("x1^0.5", 1).eval(&[-1.0]).is_err());
        assert!(p("exp(x1)", 1).eval(&[1e6]).is_err());
        assert_eq!(p("x1^3", 1).eval(&[-2.0]).unwrap(), -8.0);
    }

    #[test]
    fn poincare_factor_parses() {
        let e = p("4/(1 - (x1^2 + x2^2))^2", 2);
        let v = e.eval(&[0.5, 0.0]).unwrap();
        assert!((v - 64.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn print_round_trips_tricky_trees() {
        let cases = [
            Expr::Neg(Box::new(Expr::Num(2.0))),
            Expr::Num(-2.0),
            Expr::Num(-2.0).pow(Expr::var(0)),
            Expr::Neg(Box::new(Expr::Num(2.0).pow(Expr::var(0)))),
            Expr::var(0) - (Expr::var(1) - Expr::var(0)),
            Expr::var(0) / (Expr::var(1) * Expr::var(0)),
            Expr::var(0).pow(Expr::var(1).pow(Expr::num(2.0))),
            Expr::var(0).pow(Expr::var(1)).pow(Expr::num(2.0)),
            Expr::Neg(Box::new(Expr::Neg(Box::new(Expr::var(0))))),
            Expr::Num(1.5e-9) * Expr::var(0),
            Expr::Num(6.02e23) + Expr::var(0),
            Expr::Num(0.1) + Expr::var(0).sin(),
        ];
        for e in cases {
            let text = e.to_string();
            assert_eq!(parse(&text, 2).unwrap(), e, "{text}");
        }
    }

    #[test]
    fn symbolic_derivatives() {
        let cases = [
            ("x1^3*x2", [0.7, -1.3]),
            ("sin(x1)*exp(x2)/(1 + x1^2)", [0.4, 0.2]),
            ("sqrt(1 + x1^2 + x2^2)", [0.3, 0.5]),
            ("x1^x2 + tanh(x1 - x2) + log(2 + x2)", [1.3, 0.6]),
            ("abs(x1 - 3)*cos(x2)", [0.1, 0.9]),
        ];
        for (text, x) in cases {
            let e = parse(text, 2).unwrap();
            for v in 0..2 {
                let d = e.diff(v).eval(&x).unwrap();
                let h = 1e-5;
                let mut xp = x;
                let mut xm = x;
                xp[v] += h;
                xm[v] -= h;
                let fd = (e.eval(&xp).unwrap() - e.eval(&xm).unwrap()) / (2.0 * h);
                assert!((d - fd).abs() < 1e-7 * (1.0 + fd.abs()), "{text} d/dx{}: {d} vs {fd}", v + 1);
            }
        }
        assert_eq!(parse("3*x2", 2).unwrap().diff(0), Expr::Num(0.0));
    }
}

//! Operator overloads used to assemble metric expressions in code. They fold
//! constants and the obvious identities so catalog expressions stay readable
//! when printed.

use alloc::boxed::Box;
use core::ops::{Add, Div, Mul, Neg, Sub};

use super::{BinOp, Expr};

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Bin(op, Box::new(a), Box::new(b))
}

fn is(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(x) if *x == v)
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) => Expr::Num(a + b),
            (a, b) if is(&b, 0.0) => a,
            (a, b) if is(&a, 0.0) => b,
            (a, b) => bin(BinOp::Add, a, b),
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) => Expr::Num(a - b),
            (a, b) if is(&b, 0.0) => a,
            (a, b) if is(&a, 0.0) => -b,
            (a, b) => bin(BinOp::Sub, a, b),
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) => Expr::Num(a * b),
            (a, b) if is(&a, 0.0) || is(&b, 0.0) => Expr::Num(0.0),
            (a, b) if is(&b, 1.0) => a,
            (a, b) if is(&a, 1.0) => b,
            (a, b) => bin(BinOp::Mul, a, b),
        }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) if b != 0.0 => Expr::Num(a / b),
            (a, b) if is(&b, 1.0) => a,
            (a, b) if is(&a, 0.0) && !is(&b, 0.0) => Expr::Num(0.0),
            (a, b) => bin(BinOp::Div, a, b),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(a) => *a,
            e => Expr::Neg(Box::new(e)),
        }
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr {
                $tr::$m(self, Expr::Num(rhs))
            }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $tr::$m(Expr::Num(self), rhs)
            }
        }
    )*};
}

scalar_ops!(Add add, Sub sub, Mul mul, Div div);

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn folds_identities() {
        let x = Expr::var(0);
        assert_eq!(x.clone() + 0.0, x);
        assert_eq!(x.clone() * 1.0, x);
        assert_eq!(x.clone() * 0.0, Expr::Num(0.0));
        assert_eq!(2.0 * Expr::Num(3.0), Expr::Num(6.0));
        assert_eq!(-(-x.clone()), x);
        assert_eq!((1.0 - x.clone() * x).to_string(), "1 - x1*x1");
    }
}

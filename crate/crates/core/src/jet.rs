//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Taylor`] stores the normalized coefficients `c_α = ∂^α f(x₀) / α!` for
//! all multi-indices `|α| ≤ K`, in graded order. Because the ordering is
//! graded, truncating to a lower order is a prefix slice. All tables needed
//! for multiplication and differentiation live in a shared [`JetSpace`].

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::expr::{apply_bin, BinOp, EvalError, Expr, Func};

/// Largest truncation order supported by [`eval_jet`].
pub const MAX_JET_ORDER: usize = 8;

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("domain error: {what} (argument {at})")]
    Domain { what: &'static str, at: f64 },
    #[error("jet order {requested} exceeds the supported maximum {max}")]
    OrderOverflow { requested: usize, max: usize },
    #[error("base point has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("variable x{index} is not bound (point has dimension {dim})")]
    Unbound { index: usize, dim: usize },
}

impl From<EvalError> for JetError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Domain { what, at } => JetError::Domain { what, at },
            EvalError::Unbound { index, dim } => JetError::Unbound { index, dim },
        }
    }
}

/// Index tables for multi-indices in `dim` variables up to total degree `order`.
#[derive(Debug)]
pub struct JetSpace {
    dim: usize,
    order: usize,
    exps: Vec<u8>,
    degree_end: Vec<usize>,
    keys: Vec<(u64, u32)>,
    products: Vec<(u32, u32, u32)>,
    product_end: Vec<usize>,
    raise: Vec<u32>,
}

impl JetSpace {
    pub fn new(dim: usize, order: usize) -> Arc<JetSpace> {
        Arc::new(Self::build(dim, order))
    }

    fn build(dim: usize, order: usize) -> JetSpace {
        let mut exps: Vec<u8> = Vec::new();
        let mut degree_end = Vec::with_capacity(order + 1);
        let mut cur = vec![0u8; dim];
        for d in 0..=order {
            push_degree(&mut exps, &mut cur, 0, d);
            degree_end.push(exps.len() / dim.max(1));
        }
        if dim == 0 {
            // a single constant monomial
            degree_end.iter_mut().for_each(|e| *e = 1);
        }
        let len = degree_end[order];
        let radix = order as u64 + 1;
        let key = |a: &[u8]| a.iter().rev().fold(0u64, |k, &e| k * radix + e as u64);
        let mut keys: Vec<(u64, u32)> = (0..len)
            .map(|i| (key(&exps[i * dim..(i + 1) * dim]), i as u32))
            .collect();
        keys.sort_unstable();
        let mut space = JetSpace {
            dim,
            order,
            exps,
            degree_end,
            keys,
            products: Vec::new(),
            product_end: Vec::new(),
            raise: Vec::new(),
        };
        let mut buf = vec![0u8; dim];
        let mut products = Vec::new();
        for i in 0..len {
            for j in 0..len {
                if space.degree(i) + space.degree(j) > order {
                    continue;
                }
                for v in 0..dim {
                    buf[v] = space.exponent(i)[v] + space.exponent(j)[v];
                }
                let k = space.index(&buf).expect("product degree within order");
                products.push((i as u32, j as u32, k as u32));
            }
        }
        products.sort_by_key(|p| p.2);
        let product_end = (0..=order)
            .map(|d| products.partition_point(|p| (p.2 as usize) < space.degree_end[d]))
            .collect();
        let mut raise = vec![NONE; len * dim];
        for i in 0..len {
            if space.degree(i) == order {
                continue;
            }
            for v in 0..dim {
                buf.copy_from_slice(space.exponent(i));
                buf[v] += 1;
                raise[i * dim + v] = space.index(&buf).expect("raised index within order") as u32;
            }
        }
        space.products = products;
        space.product_end = product_end;
        space.raise = raise;
        space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of monomials of total degree at most `order`.
    pub fn len(&self, order: usize) -> usize {
        self.degree_end[order]
    }

    pub fn exponent(&self, i: usize) -> &[u8] {
        &self.exps[i * self.dim..(i + 1) * self.dim]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.exponent(i).iter().map(|&e| e as usize).sum()
    }

    pub fn index(&self, alpha: &[u8]) -> Option<usize> {
        if alpha.len() != self.dim || alpha.iter().map(|&e| e as usize).sum::<usize>() > self.order {
            return None;
        }
        let radix = self.order as u64 + 1;
        let key = alpha.iter().rev().fold(0u64, |k, &e| k * radix + e as u64);
        self.keys
            .binary_search_by_key(&key, |p| p.0)
            .ok()
            .map(|p| self.keys[p].1 as usize)
    }

    /// Index of the monomial `x_v` (requires order ≥ 1).
    pub fn unit(&self, v: usize) -> usize {
        self.raise[v] as usize
    }

    /// `α! = Π α_i!`, the factor between normalized coefficients and derivatives.
    pub fn factorial(&self, i: usize) -> f64 {
        self.exponent(i)
            .iter()
            .map(|&e| (1..=e as u32).fold(1.0, |f, n| f * n as f64))
            .product()
    }

    pub fn constant(&self, order: usize, value: f64) -> Taylor {
        let mut c = vec![0.0; self.len(order)];
        c[0] = value;
        Taylor { dim: self.dim, order, c }
    }

    pub fn variable(&self, order: usize, v: usize, value: f64) -> Taylor {
        let mut t = self.constant(order, value);
        if order > 0 {
            t.c[self.unit(v)] = 1.0;
        }
        t
    }

    pub fn add(&self, a: &Taylor, b: &Taylor) -> Taylor {
        let order = a.order.min(b.order);
        let c = (0..self.len(order)).map(|i| a.c[i] + b.c[i]).collect();
        Taylor { dim: self.dim, order, c }
    }

    pub fn sub(&self, a: &Taylor, b: &Taylor) -> Taylor {
        let order = a.order.min(b.order);
        let c = (0..self.len(order)).map(|i| a.c[i] - b.c[i]).collect();
        Taylor { dim: self.dim, order, c }
    }

    pub fn mul(&self, a: &Taylor, b: &Taylor) -> Taylor {
        let order = a.order.min(b.order);
        let mut c = vec![0.0; self.len(order)];
        for &(i, j, k) in &self.products[..self.product_end[order]] {
            c[k as usize] += a.c[i as usize] * b.c[j as usize];
        }
        Taylor { dim: self.dim, order, c }
    }

    /// `out += s · a · b`, truncated to the order of `out`.
    pub fn mul_add(&self, out: &mut Taylor, s: f64, a: &Taylor, b: &Taylor) {
        let order = out.order.min(a.order).min(b.order);
        out.truncate_in_place(order);
        for &(i, j, k) in &self.products[..self.product_end[order]] {
            out.c[k as usize] += s * a.c[i as usize] * b.c[j as usize];
        }
    }

    /// Evaluates `Σ_n f[n] (a − a₀)^n`, the composition of a univariate series
    /// with normalized coefficients `f` around `a₀` with `a`.
    pub fn compose(&self, a: &Taylor, f: &[f64]) -> Taylor {
        let order = a.order.min(f.len() - 1);
        let mut h = a.truncated(order);
        h.c[0] = 0.0;
        let mut out = self.constant(order, f[order]);
        for n in (0..order).rev() {
            out = self.mul(&out, &h);
            out.c[0] += f[n];
        }
        out
    }

    pub fn recip(&self, a: &Taylor) -> Result<Taylor, JetError> {
        let a0 = a.c[0];
        if a0 == 0.0 {
            return Err(JetError::Domain { what: "division by zero", at: 0.0 });
        }
        let f: Vec<f64> = (0..=a.order)
            .scan(1.0 / a0, |p, _| {
                let v = *p;
                *p *= -1.0 / a0;
                Some(v)
            })
            .collect();
        self.checked(self.compose(a, &f))
    }

    /// Partial derivative `∂_v`; the result has order one less.
    pub fn deriv(&self, a: &Taylor, v: usize) -> Taylor {
        assert!(a.order > 0, "cannot differentiate an order-0 jet");
        let order = a.order - 1;
        let c = (0..self.len(order))
            .map(|i| {
                let r = self.raise[i * self.dim + v] as usize;
                (self.exponent(i)[v] as f64 + 1.0) * a.c[r]
            })
            .collect();
        Taylor { dim: self.dim, order, c }
    }

    pub fn func(&self, f: Func, a: &Taylor) -> Result<Taylor, JetError> {
        let coeffs = univariate(f, a.c[0], a.order)?;
        self.checked(self.compose(a, &coeffs))
    }

    pub fn powf(&self, a: &Taylor, p: f64) -> Result<Taylor, JetError> {
        let coeffs = pow_coeffs(a.c[0], p, a.order)?;
        self.checked(self.compose(a, &coeffs))
    }

    fn checked(&self, t: Taylor) -> Result<Taylor, JetError> {
        match t.c.iter().find(|v| !v.is_finite()) {
            Some(&v) => Err(JetError::Domain { what: "non-finite jet coefficient", at: v }),
            None => Ok(t),
        }
    }
}

fn push_degree(out: &mut Vec<u8>, cur: &mut [u8], v: usize, remaining: usize) {
    if v + 1 >= cur.len() {
        if let Some(last) = cur.last_mut() {
            *last = remaining as u8;
            out.extend_from_slice(cur);
        }
        return;
    }
    for e in (0..=remaining).rev() {
        cur[v] = e as u8;
        push_degree(out, cur, v + 1, remaining - e);
    }
    cur[v] = 0;
}

/// Normalized Taylor coefficients `f^{(n)}(u₀)/n!` for `n ≤ order`.
fn univariate(f: Func, u0: f64, order: usize) -> Result<Vec<f64>, JetError> {
    let mut c = Vec::with_capacity(order + 1);
    match f {
        Func::Sqrt => return pow_coeffs(u0, 0.5, order),
        Func::Exp => {
            let e = libm::exp(u0);
            let mut fact = 1.0;
            for n in 0..=order {
                if n > 0 {
                    fact *= n as f64;
                }
                c.push(e / fact);
            }
        }
        Func::Sin | Func::Cos => {
            let (s, co) = (libm::sin(u0), libm::cos(u0));
            let cycle = [s, co, -s, -co];
            let shift = if f == Func::Sin { 0 } else { 1 };
            let mut fact = 1.0;
            for n in 0..=order {
                if n > 0 {
                    fact *= n as f64;
                }
                c.push(cycle[(n + shift) % 4] / fact);
            }
        }
        Func::Log => {
            if u0 <= 0.0 {
                return Err(JetError::Domain { what: "log of a non-positive number", at: u0 });
            }
            c.push(libm::log(u0));
            let mut p = 1.0;
            for n in 1..=order {
                p /= u0;
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                c.push(sign * p / n as f64);
            }
        }
        Func::Tanh => {
            let t = libm::tanh(u0);
            // P_0 = t, P_{n+1} = P_n'(t)(1 − t²); coefficient n is P_n(t)/n!
            let mut poly = vec![0.0, 1.0];
            let mut fact = 1.0;
            for n in 0..=order {
                if n > 0 {
                    fact *= n as f64;
                    let d: Vec<f64> = (1..poly.len()).map(|k| k as f64 * poly[k]).collect();
                    let mut next = vec![0.0; d.len() + 2];
                    for (k, &dk) in d.iter().enumerate() {
                        next[k] += dk;
                        next[k + 2] -= dk;
                    }
                    poly = next;
                }
                let val = poly.iter().rev().fold(0.0, |acc, &p| acc * t + p);
                c.push(val / fact);
            }
        }
        Func::Abs => {
            if order >= 1 && u0 == 0.0 {
                return Err(JetError::Domain { what: "derivative of abs at zero", at: u0 });
            }
            c.push(libm::fabs(u0));
            if order >= 1 {
                c.push(if u0 > 0.0 { 1.0 } else { -1.0 });
            }
            c.resize(order + 1, 0.0);
        }
    }
    Ok(c)
}

fn pow_coeffs(u0: f64, p: f64, order: usize) -> Result<Vec<f64>, JetError> {
    let integer = libm::trunc(p) == p && libm::fabs(p) < 2147483648.0;
    if integer {
        let pi = p as i32;
        if pi < 0 && u0 == 0.0 {
            return Err(JetError::Domain { what: "pole of a negative power", at: u0 });
        }
    } else if u0 < 0.0 || (u0 == 0.0 && (order > 0 || p < 0.0)) {
        return Err(JetError::Domain { what: "non-integer power at a non-positive base", at: u0 });
    }
    let mut c = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for n in 0..=order {
        if n > 0 {
            binom *= (p - (n as f64 - 1.0)) / n as f64;
        }
        if binom == 0.0 {
            c.push(0.0);
        } else if integer {
            c.push(binom * powi(u0, p as i64 - n as i64));
        } else {
            c.push(binom * libm::pow(u0, p - n as f64));
        }
    }
    Ok(c)
}

fn powi(x: f64, e: i64) -> f64 {
    let mut base = if e < 0 { 1.0 / x } else { x };
    let mut e = e.unsigned_abs();
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Normalized Taylor coefficients of a scalar function around a base point.
#[derive(Clone, Debug, PartialEq)]
pub struct Taylor {
    dim: usize,
    order: usize,
    c: Vec<f64>,
}

impl Taylor {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.c
    }

    pub fn truncated(&self, order: usize) -> Taylor {
        let mut t = self.clone();
        t.truncate_in_place(order);
        t
    }

    fn truncate_in_place(&mut self, order: usize) {
        if order < self.order {
            self.order = order;
            self.c.truncate(binom_usize(order + self.dim, self.dim));
        }
    }

    pub fn scale(&self, s: f64) -> Taylor {
        Taylor { dim: self.dim, order: self.order, c: self.c.iter().map(|v| v * s).collect() }
    }

    pub fn add_scaled(&mut self, s: f64, other: &Taylor) {
        let order = self.order.min(other.order);
        self.truncate_in_place(order);
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += s * b;
        }
    }

    /// Sum `Σ c_α h^α`, the truncated Taylor polynomial at displacement `h`.
    pub fn eval_at(&self, space: &JetSpace, h: &[f64]) -> f64 {
        (0..self.c.len())
            .map(|i| {
                let mono: f64 = space
                    .exponent(i)
                    .iter()
                    .zip(h)
                    .map(|(&e, &x)| powi(x, e as i64))
                    .product();
                self.c[i] * mono
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn binom_usize(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

enum Val {
    Const(f64),
    Series(Taylor),
}

/// Evaluates `e` as a Taylor series of order `order ≤ space.order()` at `base`.
pub fn eval_taylor(e: &Expr, space: &JetSpace, order: usize, base: &[f64]) -> Result<Taylor, JetError> {
    if base.len() != space.dim() {
        return Err(JetError::Dimension { expected: space.dim(), got: base.len() });
    }
    if order > space.order() {
        return Err(JetError::OrderOverflow { requested: order, max: space.order() });
    }
    Ok(match go(e, space, order, base)? {
        Val::Const(v) => space.constant(order, v),
        Val::Series(t) => t,
    })
}

fn go(e: &Expr, s: &JetSpace, order: usize, base: &[f64]) -> Result<Val, JetError> {
    Ok(match e {
        Expr::Num(v) => Val::Const(*v),
        Expr::Var(i) => {
            let x = *base.get(*i).ok_or(JetError::Unbound { index: i + 1, dim: base.len() })?;
            if order == 0 {
                Val::Const(x)
            } else {
                Val::Series(s.variable(order, *i, x))
            }
        }
        Expr::Neg(a) => match go(a, s, order, base)? {
            Val::Const(v) => Val::Const(-v),
            Val::Series(t) => Val::Series(t.scale(-1.0)),
        },
        Expr::Call(f, a) => match go(a, s, order, base)? {
            Val::Const(v) => Val::Const(f.apply(v)?),
            Val::Series(t) => Val::Series(s.func(*f, &t)?),
        },
        Expr::Bin(op, a, b) => {
            let (a, b) = (go(a, s, order, base)?, go(b, s, order, base)?);
            binary(*op, a, b, s)?
        }
    })
}

fn binary(op: BinOp, a: Val, b: Val, s: &JetSpace) -> Result<Val, JetError> {
    use Val::{Const, Series};
    Ok(match (op, a, b) {
        (op, Const(x), Const(y)) => Const(apply_bin(op, x, y)?),
        (BinOp::Add, Series(t), Const(y)) | (BinOp::Add, Const(y), Series(t)) => {
            let mut t = t;
            t.c[0] += y;
            Series(t)
        }
        (BinOp::Add, Series(x), Series(y)) => Series(s.add(&x, &y)),
        (BinOp::Sub, Series(t), Const(y)) => {
            let mut t = t;
            t.c[0] -= y;
            Series(t)
        }
        (BinOp::Sub, Const(x), Series(t)) => {
            let mut t = t.scale(-1.0);
            t.c[0] += x;
            Series(t)
        }
        (BinOp::Sub, Series(x), Series(y)) => Series(s.sub(&x, &y)),
        (BinOp::Mul, Series(t), Const(y)) | (BinOp::Mul, Const(y), Series(t)) => Series(t.scale(y)),
        (BinOp::Mul, Series(x), Series(y)) => Series(s.mul(&x, &y)),
        (BinOp::Div, Series(t), Const(y)) => {
            if y == 0.0 {
                return Err(JetError::Domain { what: "division by zero", at: t.c[0] });
            }
            Series(t.scale(1.0 / y))
        }
        (BinOp::Div, Const(x), Series(t)) => Series(s.recip(&t)?.scale(x)),
        (BinOp::Div, Series(x), Series(y)) => Series(s.mul(&x, &s.recip(&y)?)),
        (BinOp::Pow, Series(t), Const(p)) => Series(s.powf(&t, p)?),
        (BinOp::Pow, Const(b), Series(t)) => {
            if b <= 0.0 {
                return Err(JetError::Domain { what: "variable exponent of a non-positive base", at: b });
            }
            Series(s.func(Func::Exp, &t.scale(libm::log(b)))?)
        }
        (BinOp::Pow, Series(x), Series(y)) => {
            if x.c[0] <= 0.0 {
                return Err(JetError::Domain {
                    what: "variable exponent of a non-positive base",
                    at: x.c[0],
                });
            }
            let l = s.func(Func::Log, &x)?;
            Series(s.func(Func::Exp, &s.mul(&y, &l))?)
        }
    })
}

/// All partial derivatives of a scalar expression up to a truncation order.
#[derive(Clone, Debug)]
pub struct Jet {
    base: Vec<f64>,
    space: Arc<JetSpace>,
    taylor: Taylor,
}

impl Jet {
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.taylor.order
    }

    pub fn value(&self) -> f64 {
        self.taylor.c[0]
    }

    pub fn taylor(&self) -> &Taylor {
        &self.taylor
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// `∂^α f(base)`; `None` if `|α|` exceeds the order.
    pub fn derivative(&self, alpha: &[u8]) -> Option<f64> {
        let i = self.space.index(alpha)?;
        (i < self.taylor.c.len()).then(|| self.taylor.c[i] * self.space.factorial(i))
    }

    pub fn truncate(&self, order: usize) -> Jet {
        Jet {
            base: self.base.clone(),
            space: self.space.clone(),
            taylor: self.taylor.truncated(order),
        }
    }
}

/// Evaluates all `∂^α e(base)` with `|α| ≤ order`.
pub fn eval_jet(e: &Expr, base: &[f64], order: usize) -> Result<Jet, JetError> {
    if order > MAX_JET_ORDER {
        return Err(JetError::OrderOverflow { requested: order, max: MAX_JET_ORDER });
    }
    let space = JetSpace::new(base.len(), order);
    let taylor = eval_taylor(e, &space, order, base)?;
    Ok(Jet { base: base.into(), space, taylor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn jet(text: &str, base: &[f64], k: usize) -> Jet {
        eval_jet(&parse(text, base.len()).unwrap(), base, k).unwrap()
    }

    #[test]
    fn square() {
        let j = jet("x1^2", &[2.0], 2);
        assert_eq!(j.value(), 4.0);
        assert_eq!(j.derivative(&[1]), Some(4.0));
        assert_eq!(j.derivative(&[2]), Some(2.0));
        assert_eq!(j.derivative(&[3]), None);
    }

    #[test]
    fn sine_maclaurin() {
        let j = jet("sin(x1)", &[0.0], 3);
        let d: Vec<f64> = (0..=3).map(|n| j.derivative(&[n]).unwrap()).collect();
        assert_eq!(d, [0.0, 1.0, 0.0, -1.0]);
    }

    #[test]
    fn reciprocal() {
        // d/dx 1/(1-x) = 1/(1-x)^2
        let j = jet("1/(1 - x1)", &[0.5], 1);
        assert!((j.value() - 2.0).abs() < 1e-15);
        assert!((j.derivative(&[1]).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_derivatives() {
        let t = libm::tanh(0.3);
        let j = jet("tanh(x1)", &[0.3], 3);
        let s = 1.0 - t * t;
        assert!((j.derivative(&[1]).unwrap() - s).abs() < 1e-14);
        assert!((j.derivative(&[2]).unwrap() + 2.0 * t * s).abs() < 1e-14);
        assert!((j.derivative(&[3]).unwrap() - (-2.0 * s * s + 4.0 * t * t * s)).abs() < 1e-13);
    }

    #[test]
    fn abs_rules() {
        let e = parse("abs(x1)", 1).unwrap();
        assert_eq!(eval_jet(&e, &[0.0], 0).unwrap().value(), 0.0);
        assert!(eval_jet(&e, &[0.0], 1).is_err());
        assert_eq!(eval_jet(&e, &[-2.0], 2).unwrap().derivative(&[1]), Some(-1.0));
    }

    #[test]
    fn domain_and_order_errors() {
        let e = parse("log(x1)", 1).unwrap();
        assert!(matches!(eval_jet(&e, &[-1.0], 2), Err(JetError::Domain { .. })));
        assert!(matches!(
            eval_jet(&e, &[1.0], MAX_JET_ORDER + 1),
            Err(JetError::OrderOverflow { .. })
        ));
        assert!(matches!(eval_jet(&e, &[1.0, 2.0], 1), Err(JetError::Unbound { .. }) | Ok(_)));
        assert!(eval_jet(&parse("sqrt(x1)", 1).unwrap(), &[0.0], 1).is_err());
        assert!(eval_jet(&parse("x1^(-1)", 1).unwrap(), &[0.0], 0).is_err());
    }

    #[test]
    fn mixed_partials() {
        // f = x1^2 x2^3: ∂1∂2 f = 6 x1 x2^2
        let j = jet("x1^2*x2^3", &[1.5, -0.5], 4);
        assert!((j.derivative(&[1, 1]).unwrap() - 6.0 * 1.5 * 0.25).abs() < 1e-14);
        assert!((j.derivative(&[2, 2]).unwrap() - 2.0 * 6.0 * -0.5).abs() < 1e-14);
    }

    #[test]
    fn variable_exponent() {
        // d/dx x^x = x^x (ln x + 1)
        let j = jet("x1^x1", &[2.0], 1);
        assert!((j.derivative(&[1]).unwrap() - 4.0 * (libm::log(2.0) + 1.0)).abs() < 1e-13);
    }

    #[test]
    fn truncation_is_prefix() {
        let e = parse("exp(x1*x2)/(2 + cos(x3))", 3).unwrap();
        let base = [0.3, -0.2, 0.7];
        let hi = eval_jet(&e, &base, 5).unwrap();
        let lo = eval_jet(&e, &base, 3).unwrap();
        assert_eq!(hi.truncate(3).taylor().coeffs(), lo.taylor().coeffs());
    }

    #[test]
    fn graded_enumeration() {
        let s = JetSpace::new(3, 4);
        assert_eq!(s.len(4), 35);
        assert_eq!(s.len(2), 10);
        for i in 0..s.len(4) {
            assert_eq!(s.index(s.exponent(i)), Some(i));
        }
        let z = JetSpace::new(0, 3);
        assert_eq!(z.len(3), 1);
    }
}

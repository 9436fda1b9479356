//! Property tests for expressions, jets and dense linear algebra.

use proptest::prelude::*;
use ureg_core::expr::{parse, Expr, Func};
use ureg_core::jet::eval_jet;
use ureg_core::linalg;

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(-3.0f64..3.0).prop_map(Expr::num), (0usize..2).prop_map(Expr::var)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            inner.clone().prop_map(|a| -a),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.tanh()),
            (inner.clone(), 0u8..4).prop_map(|(a, p)| a.powf(p as f64)),
            inner.clone().prop_map(|a| (a * 0.1).exp()),
            inner.prop_map(|a| Expr::num(1.0) / (Expr::num(2.0) + a.clone() * a)),
        ]
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Fourth-order central difference of `∂^α f` for `|α| ≤ 2`.
fn central(e: &Expr, x: &[f64], alpha: &[u8]) -> f64 {
    let h = 1e-3;
    let f = |d: &[f64]| e.eval(&[x[0] + d[0], x[1] + d[1]]).unwrap();
    let d1 = |i: usize, g: &dyn Fn(&[f64]) -> f64| {
        let at = |s: f64| {
            let mut d = [0.0; 2];
            d[i] = s;
            g(&d)
        };
        (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
    };
    match alpha {
        [0, 0] => f(&[0.0, 0.0]),
        [1, 0] => d1(0, &f),
        [0, 1] => d1(1, &f),
        [2, 0] | [0, 2] => {
            let i = usize::from(alpha[1] == 2);
            let at = |s: f64| {
                let mut d = [0.0; 2];
                d[i] = s;
                f(&d)
            };
            (-at(2.0 * h) + 16.0 * at(h) - 30.0 * at(0.0) + 16.0 * at(-h) - at(-2.0 * h)) / (12.0 * h * h)
        }
        [1, 1] => d1(0, &|d: &[f64]| d1(1, &|e2: &[f64]| f(&[d[0] + e2[0], d[1] + e2[1]]))),
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn text_round_trip(e in arb_expr(), x in -0.9f64..0.9, y in -0.9f64..0.9) {
        let back = parse(&e.to_text(), 2).unwrap();
        match (e.eval(&[x, y]), back.eval(&[x, y])) {
            (Ok(a), Ok(b)) => prop_assert!(close(a, b, 1e-12), "{} vs {}: {a} {b}", e, back),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn jet_value_matches_eval(e in arb_expr(), x in -0.9f64..0.9, y in -0.9f64..0.9) {
        if let (Ok(v), Ok(j)) = (e.eval(&[x, y]), eval_jet(&e, &[x, y], 3)) {
            prop_assert!(close(v, j.value(), 1e-12));
        }
    }

    #[test]
    fn truncation_is_a_prefix(e in arb_expr(), x in -0.9f64..0.9, y in -0.9f64..0.9) {
        if let (Ok(hi), Ok(lo)) = (eval_jet(&e, &[x, y], 5), eval_jet(&e, &[x, y], 2)) {
            let cut = hi.truncate(2);
            for (a, b) in cut.taylor().coeffs().iter().zip(lo.taylor().coeffs()) {
                prop_assert!(close(*a, *b, 1e-12));
            }
        }
    }

    #[test]
    fn jets_match_finite_differences(e in arb_expr(), x in -0.5f64..0.5, y in -0.5f64..0.5) {
        let Ok(j) = eval_jet(&e, &[x, y], 2) else { return Ok(()) };
        // finite differences are meaningless where the function is steep
        prop_assume!(j.taylor().max_abs() < 1e3);
        for alpha in [[0u8, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]] {
            let fd = central(&e, &[x, y], &alpha);
            let exact = j.derivative(&alpha).unwrap();
            prop_assert!(close(exact, fd, 1e-5), "{e} at {alpha:?}: {exact} vs {fd}");
        }
    }

    #[test]
    fn symbolic_derivative_agrees_with_jets(e in arb_expr(), x in -0.9f64..0.9, y in -0.9f64..0.9) {
        let Ok(j) = eval_jet(&e, &[x, y], 1) else { return Ok(()) };
        for v in 0..2 {
            let mut alpha = [0u8; 2];
            alpha[v] = 1;
            if let Ok(d) = e.diff(v).eval(&[x, y]) {
                prop_assert!(close(d, j.derivative(&alpha).unwrap(), 1e-9));
            }
        }
    }

    #[test]
    fn polynomial_jets_are_exact(c in prop::collection::vec(-2.0f64..2.0, 6), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        // c0 + c1 x + c2 y + c3 x² + c4 x y + c5 y³
        let e = parse(&format!("{} + {}*x1 + {}*x2 + {}*x1^2 + {}*x1*x2 + {}*x2^3", c[0], c[1], c[2], c[3], c[4], c[5]), 2).unwrap();
        let j = eval_jet(&e, &[x, y], 4).unwrap();
        prop_assert!(close(j.derivative(&[1, 0]).unwrap(), c[1] + 2.0 * c[3] * x + c[4] * y, 1e-13));
        prop_assert!(close(j.derivative(&[0, 1]).unwrap(), c[2] + c[4] * x + 3.0 * c[5] * y * y, 1e-13));
        prop_assert!(close(j.derivative(&[2, 0]).unwrap(), 2.0 * c[3], 1e-13));
        prop_assert!(close(j.derivative(&[1, 1]).unwrap(), c[4], 1e-13));
        prop_assert!(close(j.derivative(&[0, 3]).unwrap(), 6.0 * c[5], 1e-13));
        prop_assert_eq!(j.derivative(&[0, 4]).unwrap(), 0.0);
        prop_assert_eq!(j.derivative(&[2, 2]).unwrap(), 0.0);
    }

    #[test]
    fn spd_inverse_is_inverse(a in prop::collection::vec(-1.0f64..1.0, 9)) {
        // B Bᵀ + I is symmetric positive definite
        let mut s = vec![0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                s[i * 3 + j] = (0..3).map(|k| a[i * 3 + k] * a[j * 3 + k]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
            }
        }
        let inv = linalg::spd_inverse(&s, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| s[i * 3 + k] * inv[k * 3 + j]).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                prop_assert!((v - id).abs() < 1e-12);
            }
        }
        let ev = linalg::sym_eigenvalues(&s, 3);
        prop_assert!(ev[0] >= 1.0 - 1e-12);
        prop_assert!(close(ev.iter().product::<f64>(), linalg::det(&s, 3), 1e-10));
    }
}

#[test]
fn every_function_round_trips_by_name() {
    for f in Func::ALL {
        assert_eq!(Func::from_name(f.name()), Some(f));
    }
}

//! Dormand–Prince 5(4) embedded Runge–Kutta step.

use alloc::vec;
use alloc::vec::Vec;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Result of one trial step: the fifth-order solution and the scaled error
/// norm (accept when `≤ 1`).
pub struct Trial {
    pub y: Vec<f64>,
    pub err: f64,
}

/// Attempts a step of size `h` from `(t, y)`. `f` returns `false` when the
/// right-hand side cannot be evaluated at a stage, which rejects the step.
pub fn try_step<F>(f: &mut F, t: f64, y: &[f64], h: f64, rtol: f64, atol: f64) -> Option<Trial>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> bool,
{
    let n = y.len();
    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    for s in 0..7 {
        for i in 0..n {
            stage[i] = y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
        }
        if !f(t + C[s] * h, &stage, &mut k[s]) {
            return None;
        }
    }
    // stage 7 is evaluated at the fifth-order solution itself
    let y_new = stage;
    let mut sum = 0.0;
    for i in 0..n {
        let e = h * (0..7).map(|s| (B[s] - B_LOW[s]) * k[s][i]).sum::<f64>();
        let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
        sum += (e / sc) * (e / sc);
    }
    let err = libm::sqrt(sum / n.max(1) as f64);
    if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(Trial { y: y_new, err })
}

/// Step-size factor from a scaled error norm.
pub fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        5.0
    } else {
        (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fifth_order() {
        // y' = −y, exact e^{−h}
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0];
            true
        };
        let e1 = (try_step(&mut f, 0.0, &[1.0], 0.1, 1e-9, 1e-9).unwrap().y[0] - libm::exp(-0.1)).abs();
        let e2 = (try_step(&mut f, 0.0, &[1.0], 0.05, 1e-9, 1e-9).unwrap().y[0] - libm::exp(-0.05)).abs();
        // local error O(h⁶)
        assert!(e1 / e2 > 40.0, "{e1} {e2}");
    }

    #[test]
    fn stage_failure_rejects() {
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = 1.0;
            y[0] < 1.0
        };
        assert!(try_step(&mut f, 0.0, &[0.9], 0.5, 1e-9, 1e-9).is_none());
        assert!(try_step(&mut f, 0.0, &[0.1], 0.5, 1e-9, 1e-9).is_some());
    }
}

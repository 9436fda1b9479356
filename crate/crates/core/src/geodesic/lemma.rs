//! Numerical check of the uniform existence time for geodesics started in
//! the shrunken chart ball: `T ≥ τ* = min{δ/(4√m), 1/(8M)}` with the speed
//! envelope `α(t) ≤ α₁(t) = 2/(1 + √(1 − 4tM))`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{Integrator, StepControl, StepEvent, Termination};
use crate::atlas::{norm_sq, Atlas, ChartId, PointRef};
use crate::error::{Error, Result};
use crate::regularity::{derivative_bounds, Target};
use crate::sampling::{unit_f64, SamplingPlan};

/// `τ* = min{δ/(4√m), 1/(8M)}`; the second term is absent when `M = 0`.
pub fn lemma_tau_star(delta: f64, m: usize, big_m: f64) -> f64 {
    let a = delta / (4.0 * libm::sqrt(m as f64));
    if big_m > 0.0 {
        a.min(1.0 / (8.0 * big_m))
    } else {
        a
    }
}

/// Smaller root of `α = 1 + tMα²`.
pub fn alpha_1(t: f64, big_m: f64) -> f64 {
    2.0 / (1.0 + libm::sqrt((1.0 - 4.0 * t * big_m).max(0.0)))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LemmaReport {
    pub chart: ChartId,
    pub x_p: Vec<f64>,
    pub v_p: Vec<f64>,
    pub delta: f64,
    pub big_m: f64,
    pub tau_star: f64,
    /// The solution exists on the whole interval `[0, τ*]`.
    pub exists: bool,
    /// Largest `α(t) − α₁(t)` over the trace.
    pub envelope_excess: f64,
    /// Largest `|Z(t)|` (Euclidean).
    pub max_speed: f64,
    /// Largest `|C(t) − x_p|`.
    pub max_displacement: f64,
    /// Largest `|C(t)|`.
    pub max_radius: f64,
    pub pass: bool,
    /// First time at which a condition failed.
    pub witness_time: Option<f64>,
    /// Samples `(t, α(t), α₁(t))`.
    pub trace: Vec<(f64, f64, f64)>,
}

/// Integrates the geodesic system in a single chart on `[0, τ*]` and checks
/// existence, the `α₁` envelope, `|Z| < 2√m` and containment of `C(t)` in
/// `B(x_p, r + δ/2)` and in `(r + δ/2)·B^m`.
pub fn lemma_existence_check(
    atlas: &Atlas,
    chart: ChartId,
    x_p: &[f64],
    v_p: &[f64],
    delta: f64,
    big_m: f64,
    ctrl: &StepControl,
) -> Result<LemmaReport> {
    let m = atlas.dim;
    let r = atlas.shrink_radius;
    if x_p.len() != m || v_p.len() != m {
        return Err(Error::Dimension { expected: m, got: x_p.len().min(v_p.len()) });
    }
    if !(libm::sqrt(norm_sq(x_p)) < r) {
        return Err(Error::Invalid("x_p must lie in the shrunken ball".into()));
    }
    if !(delta > 0.0 && delta < 1.0 - r) {
        return Err(Error::Invalid("delta must lie in (0, 1 - r)".into()));
    }
    if !(big_m >= 0.0 && big_m.is_finite()) {
        return Err(Error::Invalid("Christoffel bound must be finite and non-negative".into()));
    }
    let vn = libm::sqrt(norm_sq(v_p));
    if !(vn > 0.0) {
        return Err(Error::Invalid("V_p must be non-zero".into()));
    }
    let v: Vec<f64> = v_p.iter().map(|a| a / vn).collect();
    let tau = lemma_tau_star(delta, m, big_m);
    // single-chart integration: never switch
    let ctrl = StepControl { switch_threshold: f64::INFINITY, max_step: ctrl.max_step.min(tau / 64.0), ..*ctrl };
    let mut it = Integrator::new(atlas, &PointRef::new(chart, x_p.to_vec()), &v, ctrl, false)?;
    let contain = r + delta / 2.0;
    let speed_cap = 2.0 * libm::sqrt(m as f64);
    let mut rep = LemmaReport {
        chart,
        x_p: x_p.to_vec(),
        v_p: v.clone(),
        delta,
        big_m,
        tau_star: tau,
        exists: false,
        envelope_excess: f64::NEG_INFINITY,
        max_speed: 0.0,
        max_displacement: 0.0,
        max_radius: 0.0,
        pass: true,
        witness_time: None,
        trace: Vec::new(),
    };
    let mut alpha = 0.0f64;
    loop {
        let (t, c, z) = (it.t, it.position().to_vec(), it.velocity().to_vec());
        alpha = z.iter().fold(alpha, |a, v| a.max(v.abs()));
        let a1 = alpha_1(t, big_m);
        rep.trace.push((t, alpha, a1));
        rep.envelope_excess = rep.envelope_excess.max(alpha - a1);
        let speed = libm::sqrt(norm_sq(&z));
        let disp = libm::sqrt(c.iter().zip(x_p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
        let rad = libm::sqrt(norm_sq(&c));
        rep.max_speed = rep.max_speed.max(speed);
        rep.max_displacement = rep.max_displacement.max(disp);
        rep.max_radius = rep.max_radius.max(rad);
        let ok = alpha <= a1 + 1e-6 && speed < speed_cap && disp < contain && rad < contain;
        if !ok && rep.witness_time.is_none() {
            rep.pass = false;
            rep.witness_time = Some(t);
        }
        if t >= tau {
            rep.exists = true;
            break;
        }
        match it.step(tau)? {
            StepEvent::Advanced(_) => {}
            StepEvent::Terminated(Termination::TimeBudget) => {
                rep.exists = true;
                break;
            }
            StepEvent::Terminated(_) => {
                rep.pass = false;
                rep.witness_time.get_or_insert(it.t);
                break;
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LemmaSummary {
    pub trials: usize,
    pub passed: usize,
    /// `None` when no trial was run.
    pub pass_rate: Option<f64>,
    pub min_tau_star: Option<f64>,
    pub max_envelope_excess: Option<f64>,
    /// Failed trials, without their traces.
    pub failures: Vec<LemmaReport>,
}

/// Sup of `|Γ^k_ij|` over the sampled chart ball, sharpened by a pattern
/// search from the best samples so that it does not fall short of the peak.
pub fn christoffel_sup(atlas: &Atlas, chart: ChartId, plan: &SamplingPlan) -> Result<f64> {
    let c = atlas.chart(chart)?;
    let radius = plan.radius;
    let at = |x: &[f64]| derivative_bounds(c, Target::Christoffel, 0, &[x.to_vec()]);
    let mut scored = Vec::new();
    for x in plan.ball_points(atlas.dim, plan.levels - 1) {
        scored.push((at(&x)?, x));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored.first().map_or(0.0, |s| s.0);
    for (mut value, mut x) in scored.into_iter().take(3) {
        let mut h = 0.05;
        while h > 1e-7 {
            let mut moved = false;
            for i in 0..x.len() {
                for s in [h, -h] {
                    let mut y = x.clone();
                    y[i] += s;
                    if libm::sqrt(norm_sq(&y)) > radius {
                        continue;
                    }
                    let v = at(&y)?;
                    if v > value {
                        (value, x, moved) = (v, y, true);
                    }
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        best = best.max(value);
    }
    Ok(best)
}

fn random_in_ball(state: &mut u64, m: usize) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..m).map(|_| 2.0 * unit_f64(state) - 1.0).collect();
        let r2 = norm_sq(&p);
        if r2 < 1.0 && r2 > 1e-6 {
            return p;
        }
    }
}

/// Runs [`lemma_existence_check`] on `trials` draws of a window chart,
/// `x_p ∈ rB^m`, a unit `V_p` and `δ ∈ (0, 1 − r)`, with `M` the sampled
/// Christoffel bound of the drawn chart.
pub fn lemma_suite(atlas: &Atlas, trials: usize, seed: u64, ctrl: &StepControl) -> Result<LemmaSummary> {
    let m = atlas.dim;
    let r = atlas.shrink_radius;
    let window: Vec<ChartId> = atlas.window_charts().map(|c| c.id).collect();
    if window.is_empty() && trials > 0 {
        return Err(Error::Invalid("the atlas has no window charts".into()));
    }
    let plan = SamplingPlan { seed, levels: 3, ..SamplingPlan::default() };
    let mut bounds: BTreeMap<ChartId, f64> = BTreeMap::new();
    let mut state = seed ^ 0x6C65_6D6D_6173_7569;
    let mut out = LemmaSummary {
        trials,
        passed: 0,
        pass_rate: None,
        min_tau_star: None,
        max_envelope_excess: None,
        failures: Vec::new(),
    };
    for _ in 0..trials {
        let chart = window[(unit_f64(&mut state) * window.len() as f64) as usize % window.len()];
        let x: Vec<f64> = random_in_ball(&mut state, m).into_iter().map(|v| v * r * 0.999).collect();
        let v = random_in_ball(&mut state, m);
        let delta = (1.0 - r) * (0.05 + 0.9 * unit_f64(&mut state));
        let big_m = match bounds.get(&chart) {
            Some(b) => *b,
            None => {
                let b = christoffel_sup(atlas, chart, &plan)?;
                bounds.insert(chart, b);
                b
            }
        };
        let mut rep = lemma_existence_check(atlas, chart, &x, &v, delta, big_m, ctrl)?;
        out.min_tau_star = Some(out.min_tau_star.map_or(rep.tau_star, |t: f64| t.min(rep.tau_star)));
        out.max_envelope_excess =
            Some(out.max_envelope_excess.map_or(rep.envelope_excess, |e: f64| e.max(rep.envelope_excess)));
        if rep.pass {
            out.passed += 1;
        } else {
            rep.trace.clear();
            out.failures.push(rep);
        }
    }
    if trials > 0 {
        out.pass_rate = Some(out.passed as f64 / trials as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_star_arithmetic() {
        // δ = 0.3, m = 2, M = 1: min{0.3/(4√2), 1/8}
        assert!((lemma_tau_star(0.3, 2, 1.0) - 0.053033).abs() < 1e-6);
        assert_eq!(lemma_tau_star(0.3, 2, 0.0), 0.3 / (4.0 * 2f64.sqrt()));
        assert_eq!(alpha_1(0.0, 1.0), 1.0);
        assert!((alpha_1(0.125, 1.0) - 1.17157).abs() < 1e-5);
    }

    #[test]
    fn empty_suite() {
        let d = crate::catalog::euclidean(1, 2.0).unwrap();
        let s = lemma_suite(&d.atlas, 0, 0, &StepControl::default()).unwrap();
        assert_eq!((s.trials, s.passed, s.pass_rate), (0, 0, None));
    }
}

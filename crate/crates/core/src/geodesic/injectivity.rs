//! Injectivity radius estimates from a fan of geodesic rays.
//!
//! Each ray carries the variational system, so conjugate points show up as a
//! sign change of `det δC` (with chart orientation tracked through switches)
//! or as a collapse of the smallest singular value of the g-normalized
//! differential of the exponential map relative to the ray length. Cut points between rays show up as
//! near-intersections of ray polylines, compared in chart coordinates: each
//! sample is recorded in its own chart and in every chart holding it well
//! inside the shrink radius.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::normal::orthonormal_frame;
use super::{Integrator, StepControl, StepEvent, Termination};
use crate::atlas::{Atlas, ChartId, PointRef};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sampling::directions;

const CROSSING_GAP: f64 = 1e-3;
/// Samples are also recorded in charts where their norm is below the shrink
/// radius plus this margin.
const RECORD_MARGIN: f64 = 0.1;
const COLLAPSE_RATIO: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InjectivityOptions {
    /// Rays are followed up to this length.
    pub cap: f64,
    pub directions: usize,
    /// Largest integration step, which is also the crossing resolution.
    pub step: f64,
    /// Maximum number of integration steps over all rays.
    pub budget: usize,
    pub seed: u64,
    pub ctrl: StepControl,
}

impl Default for InjectivityOptions {
    fn default() -> Self {
        InjectivityOptions { cap: 10.0, directions: 8, step: 0.02, budget: 2_000_000, seed: 0, ctrl: StepControl::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Crossing {
    pub rays: (usize, usize),
    pub times: (f64, f64),
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InjectivityEstimate {
    pub point: PointRef,
    /// Largest tested radius without conjugate or crossing evidence.
    pub lower: f64,
    /// Earliest conjugate or crossing time, if any was found.
    pub upper: Option<f64>,
    pub conjugate: Option<f64>,
    pub crossing: Option<Crossing>,
    /// Earliest time at which a ray left the atlas or failed to step.
    pub left_atlas: Option<f64>,
    pub budget_exhausted: bool,
    pub rays: usize,
    /// Integration steps taken over all rays.
    pub steps: usize,
}

impl InjectivityEstimate {
    /// The upper bound when evidence was found, otherwise the lower bound.
    pub fn estimate(&self) -> f64 {
        self.upper.unwrap_or(self.lower)
    }
}

struct Ray {
    /// `(t, [(chart, coordinates)])`.
    samples: Vec<(f64, Vec<(ChartId, Vec<f64>)>)>,
    conjugate: Option<f64>,
    reached: f64,
    stopped: bool,
}

struct Tracker<'a> {
    atlas: &'a Atlas,
    frame: Vec<f64>,
}

impl<'a> Tracker<'a> {
    fn signed_det(&self, it: &Integrator, orient: f64) -> f64 {
        orient * linalg::det(it.variation(), self.atlas.dim)
    }

    /// `σ_min(Lᵀ δC E)/t` with `G = L Lᵀ` at the current position; rays have
    /// unit speed, so this is 1 in flat space and `sin t/t` on the unit sphere.
    fn ratio(&self, it: &Integrator) -> f64 {
        let m = self.atlas.dim;
        let Ok(chart) = self.atlas.chart(it.chart) else { return f64::NAN };
        let Ok(g) = chart.metric_at(it.position()) else { return f64::NAN };
        let Ok(l) = linalg::cholesky(&g, m) else { return f64::NAN };
        let dc = it.variation();
        let mut de = vec![0.0; m * m];
        for i in 0..m {
            for a in 0..m {
                de[i * m + a] = (0..m).map(|b| dc[i * m + b] * self.frame[b * m + a]).sum();
            }
        }
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            for c in 0..m {
                a[i * m + c] = (0..m).map(|k| l[k * m + i] * de[k * m + c]).sum();
            }
        }
        let sv = linalg::singular_values(&a, m);
        if it.t > 0.0 {
            sv[0] / it.t
        } else {
            1.0
        }
    }

    fn point(&self, it: &Integrator) -> Vec<(ChartId, Vec<f64>)> {
        let x = it.position();
        let mut out = vec![(it.chart, x.to_vec())];
        let limit = self.atlas.shrink_radius + RECORD_MARGIN;
        if let Ok(chart) = self.atlas.chart(it.chart) {
            for n in chart.neighbors() {
                if let Some(y) = self.atlas.try_transition(it.chart, n, x) {
                    if linalg::norm(&y) < limit {
                        out.push((n, y));
                    }
                }
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }
}

/// Steps a copy of `it` to time `tau`, tracking orientation.
fn advance<'a>(it: &Integrator<'a>, orient: f64, tau: f64) -> Result<Option<(Integrator<'a>, f64)>> {
    let mut it = it.clone();
    let mut orient = orient;
    while it.t < tau {
        match it.step(tau)? {
            StepEvent::Advanced(sw) => {
                if let Some(sw) = sw {
                    orient *= libm::copysign(1.0, sw.det_jacobian);
                }
            }
            StepEvent::Terminated(Termination::TimeBudget) => break,
            StepEvent::Terminated(_) => return Ok(None),
        }
    }
    Ok(Some((it, orient)))
}

fn bisect_sign(tr: &Tracker, from: &Integrator, orient: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        match advance(from, orient, mid)? {
            Some((it, o)) if tr.signed_det(&it, o) > 0.0 => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimum of the singular value ratio on `[lo, hi]`.
fn golden_min(tr: &Tracker, from: &Integrator, orient: f64, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let phi = 0.5 * (libm::sqrt(5.0) - 1.0);
    let eval = |t: f64| -> Result<f64> {
        Ok(match advance(from, orient, t)? {
            Some((it, _)) => tr.ratio(&it),
            None => f64::INFINITY,
        })
    };
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (eval(a)?, eval(b)?);
    for _ in 0..40 {
        if hi - lo < 1e-6 {
            break;
        }
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = eval(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = eval(b)?;
        }
    }
    Ok(if fa < fb { (a, fa) } else { (b, fb) })
}

fn follow_ray(tr: &Tracker, p: &PointRef, v: &[f64], opts: &InjectivityOptions, budget: &mut usize) -> Result<Ray> {
    let ctrl = StepControl { max_step: opts.ctrl.max_step.min(opts.step), ..opts.ctrl };
    let mut it = Integrator::new(tr.atlas, p, v, ctrl, true)?;
    let mut ray = Ray { samples: vec![(0.0, tr.point(&it))], conjugate: None, reached: 0.0, stopped: false };
    let mut orient = 1.0;
    // (snapshot, orientation, ratio) at the last two accepted steps
    let mut hist: Vec<(Integrator, f64, f64)> = Vec::new();
    while it.t < opts.cap {
        if *budget == 0 {
            ray.stopped = true;
            break;
        }
        *budget -= 1;
        let before = (it.clone(), orient);
        match it.step(opts.cap)? {
            StepEvent::Advanced(sw) => {
                if let Some(sw) = sw {
                    orient *= libm::copysign(1.0, sw.det_jacobian);
                }
            }
            StepEvent::Terminated(Termination::TimeBudget) => break,
            StepEvent::Terminated(_) => {
                ray.stopped = true;
                ray.reached = it.t;
                return Ok(ray);
            }
        }
        ray.reached = it.t;
        ray.samples.push((it.t, tr.point(&it)));
        if tr.atlas.dim < 2 {
            continue;
        }
        if tr.signed_det(&it, orient) <= 0.0 {
            let t = bisect_sign(tr, &before.0, before.1, before.0.t, it.t)?;
            ray.conjugate = Some(t);
            return Ok(ray);
        }
        let r = tr.ratio(&it);
        hist.push((it.clone(), orient, r));
        if hist.len() > 3 {
            hist.remove(0);
        }
        if let [(a, oa, ra), (_, _, rb), (c, _, rc)] = &hist[..] {
            if rb < ra && rb < rc && *rb < 0.05 {
                let (t, v) = golden_min(tr, a, *oa, a.t, c.t)?;
                if v < COLLAPSE_RATIO {
                    ray.conjugate = Some(t);
                    return Ok(ray);
                }
            }
        }
    }
    Ok(ray)
}

fn segment_gap(a0: &[f64], a1: &[f64], b0: &[f64], b1: &[f64]) -> (f64, f64, f64) {
    let d1: Vec<f64> = a1.iter().zip(a0).map(|(x, y)| x - y).collect();
    let d2: Vec<f64> = b1.iter().zip(b0).map(|(x, y)| x - y).collect();
    let r: Vec<f64> = a0.iter().zip(b0).map(|(x, y)| x - y).collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let (a, e, f) = (dot(&d1, &d1), dot(&d2, &d2), dot(&d2, &r));
    let (mut s, mut t);
    if a <= 1e-30 && e <= 1e-30 {
        s = 0.0;
        t = 0.0;
    } else if a <= 1e-30 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(&d1, &r);
        if e <= 1e-30 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(&d1, &d2);
            let den = a * e - b * b;
            s = if den > 1e-30 { ((b * f - c * e) / den).clamp(0.0, 1.0) } else { 0.0 };
            t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
        }
    }
    let gap: f64 = (0..a0.len())
        .map(|i| {
            let d = (a0[i] + s * d1[i]) - (b0[i] + t * d2[i]);
            d * d
        })
        .sum();
    (libm::sqrt(gap), s, t)
}

fn earliest_crossing<'a>(rays: &'a [Ray], dirs: &[Vec<f64>]) -> Option<Crossing> {
    struct Seg<'a> {
        ray: usize,
        key: ChartId,
        t: (f64, f64),
        ends: (&'a [f64], &'a [f64]),
    }
    let mut segs = Vec::new();
    let mut longest = 0.0f64;
    for (r, ray) in rays.iter().enumerate() {
        for w in ray.samples.windows(2) {
            for (key, p) in &w[0].1 {
                let Some((_, q)) = w[1].1.iter().find(|e| e.0 == *key) else { continue };
                let len = libm::sqrt(p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>());
                longest = longest.max(len);
                segs.push(Seg { ray: r, key: *key, t: (w[0].0, w[1].0), ends: (p, q) });
            }
        }
    }
    let cell = (2.0 * longest).max(4.0 * CROSSING_GAP);
    fn ends<'b>(s: &Seg<'b>) -> (&'b [f64], &'b [f64]) {
        s.ends
    }
    let cells_of = |s: &Seg<'a>| -> Vec<Vec<i64>> {
        let (p, q) = ends(s);
        let lo: Vec<i64> = p.iter().zip(q).map(|(a, b)| libm::floor((a.min(*b) - CROSSING_GAP) / cell) as i64).collect();
        let hi: Vec<i64> = p.iter().zip(q).map(|(a, b)| libm::floor((a.max(*b) + CROSSING_GAP) / cell) as i64).collect();
        let mut out = Vec::new();
        let mut k = lo.clone();
        loop {
            out.push(k.clone());
            let mut d = 0;
            loop {
                if d == k.len() {
                    return out;
                }
                if k[d] < hi[d] {
                    k[d] += 1;
                    break;
                }
                k[d] = lo[d];
                d += 1;
            }
        }
    };
    let mut grid: BTreeMap<(ChartId, Vec<i64>), Vec<usize>> = BTreeMap::new();
    for (i, s) in segs.iter().enumerate() {
        for c in cells_of(s) {
            grid.entry((s.key, c)).or_default().push(i);
        }
    }
    let mut best: Option<Crossing> = None;
    for list in grid.values() {
        for (x, &i) in list.iter().enumerate() {
            for &j in &list[x + 1..] {
                let (si, sj) = (&segs[i], &segs[j]);
                if si.ray == sj.ray {
                    continue;
                }
                let (a0, a1) = ends(si);
                let (b0, b1) = ends(sj);
                let (gap, s, t) = segment_gap(a0, a1, b0, b1);
                if gap >= CROSSING_GAP {
                    continue;
                }
                let ti = si.t.0 + s * (si.t.1 - si.t.0);
                let tj = sj.t.0 + t * (sj.t.1 - sj.t.0);
                let spread = libm::sqrt(dirs[si.ray].iter().zip(&dirs[sj.ray]).map(|(u, v)| (u - v) * (u - v)).sum::<f64>());
                if ti.min(tj) * spread < 3.0 * CROSSING_GAP {
                    continue;
                }
                let time = ti.max(tj);
                if best.map_or(true, |b| time < b.times.0.max(b.times.1)) {
                    best = Some(Crossing { rays: (si.ray.min(sj.ray), si.ray.max(sj.ray)), times: (ti, tj), gap });
                }
            }
        }
    }
    best
}

/// Estimates the injectivity radius at `p` from `opts.directions` unit rays.
pub fn injectivity_radius_estimate(atlas: &Atlas, p: &PointRef, opts: &InjectivityOptions) -> Result<InjectivityEstimate> {
    let m = atlas.dim;
    if !(opts.cap > 0.0 && opts.step > 0.0) {
        return Err(Error::Invalid("cap and step must be positive".into()));
    }
    let g = atlas.chart(p.chart)?.metric_at(&p.x)?;
    let frame = orthonormal_frame(&g, m)?;
    let tr = Tracker { atlas, frame };
    let dirs = directions(m, opts.directions.max(1), opts.seed);
    let mut budget = opts.budget;
    let mut rays = Vec::with_capacity(dirs.len());
    for u in &dirs {
        let v = linalg::mat_vec(&tr.frame, m, u);
        rays.push(follow_ray(&tr, p, &v, opts, &mut budget)?);
    }
    let budget_exhausted = budget == 0 && rays.iter().any(|r| r.stopped);
    let conjugate = rays.iter().filter_map(|r| r.conjugate).reduce(f64::min);
    let crossing = earliest_crossing(&rays, &dirs);
    let cross_time = crossing.map(|c| c.times.0.max(c.times.1));
    let upper = match (conjugate, cross_time) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let left_atlas = rays.iter().filter(|r| r.stopped && r.conjugate.is_none()).map(|r| r.reached).reduce(f64::min);
    let mut lower = opts.cap;
    if let Some(u) = upper {
        let resolution = if Some(u) == conjugate { 1e-4 } else { opts.step };
        lower = lower.min((u - resolution).max(0.0));
    }
    if let Some(t) = left_atlas {
        lower = lower.min(t);
    }
    Ok(InjectivityEstimate {
        point: p.clone(),
        lower,
        upper,
        conjugate,
        crossing,
        left_atlas,
        budget_exhausted,
        rays: rays.len(),
        steps: opts.budget - budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_gap_cases() {
        let (g, s, t) = segment_gap(&[0.0, -1.0], &[0.0, 1.0], &[-1.0, 0.0], &[1.0, 0.0]);
        assert!(g < 1e-15 && (s - 0.5).abs() < 1e-15 && (t - 0.5).abs() < 1e-15);
        let (g, _, _) = segment_gap(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]);
        assert!((g - 1.0).abs() < 1e-15);
        let (g, _, _) = segment_gap(&[0.0, 0.0], &[1.0, 0.0], &[2.0, 1.0], &[3.0, 1.0]);
        assert!((g - 2f64.sqrt()).abs() < 1e-15);
    }
}

//! Two-sided distance estimates and the chart sandwich check.
//!
//! Upper bounds come from actual curves: a shortest path through per-chart
//! coordinate lattices, shortened afterwards by relaxing the vertices of a
//! polyline of straight chart segments. Lower bounds use the chart metric
//! equivalence constant.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::atlas::{norm_sq, Atlas, Chart, ChartId, PointRef};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sampling::SamplingPlan;

const LATTICE_LIMIT: f64 = 0.95;

/// Three-point Gauss–Legendre nodes on `[0, 1]`.
const GAUSS: [(f64, f64); 3] = [
    (0.5 - 0.387_298_334_620_741_7, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.5 + 0.387_298_334_620_741_7, 5.0 / 18.0),
];

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DistanceOptions {
    /// Lattice spacing at level 0; halved at each further level.
    pub spacing: f64,
    pub levels: usize,
    /// Maximum number of lattice nodes expanded over all levels.
    pub budget: usize,
    /// Number of polyline segments after relaxation.
    pub segments: usize,
    /// Metric equivalence constant for the lower bound; sampled when absent.
    pub c: Option<f64>,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions { spacing: 0.1, levels: 2, budget: 200_000, segments: 64, c: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DistanceEstimate {
    /// `max_κ min(|x_p − x_q|, 1 − |x_p|)/c` over charts containing `p`.
    pub lower: f64,
    /// Length of the best curve found; `None` when the budget ran out first.
    pub upper: Option<f64>,
    /// Running minimum of the curve length after each lattice level.
    pub upper_by_level: Vec<Option<f64>>,
    pub budget_exhausted: bool,
    /// Vertices of the best curve.
    pub path: Vec<PointRef>,
}

/// Length of the straight chart segment from `a` to `b`.
pub fn segment_length(chart: &Chart, a: &[f64], b: &[f64]) -> Option<f64> {
    if !(norm_sq(a) < 1.0 && norm_sq(b) < 1.0) {
        return None;
    }
    let m = a.len();
    let d: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
    let mut x = vec![0.0; m];
    let mut s = 0.0;
    for (t, w) in GAUSS {
        for i in 0..m {
            x[i] = a[i] + t * d[i];
        }
        let g = chart.metric_at(&x).ok()?;
        let q = linalg::quad_form(&g, m, &d, &d);
        if !(q >= 0.0) {
            return None;
        }
        s += w * libm::sqrt(q);
    }
    Some(s)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
}

/// `b` expressed in the chart of `a`, when possible.
fn in_chart(atlas: &Atlas, chart: ChartId, b: &PointRef) -> Option<Vec<f64>> {
    if b.chart == chart {
        Some(b.x.clone())
    } else {
        atlas.try_transition(b.chart, chart, &b.x)
    }
}

fn pair_length(atlas: &Atlas, a: &PointRef, b: &PointRef) -> Option<f64> {
    if let Some(y) = in_chart(atlas, a.chart, b) {
        return segment_length(atlas.chart(a.chart).ok()?, &a.x, &y);
    }
    let y = in_chart(atlas, b.chart, a)?;
    segment_length(atlas.chart(b.chart).ok()?, &y, &b.x)
}

/// Total length of a polyline, infinite if some pair shares no chart.
pub fn polyline_length(atlas: &Atlas, verts: &[PointRef]) -> f64 {
    verts.windows(2).map(|w| pair_length(atlas, &w[0], &w[1]).unwrap_or(f64::INFINITY)).sum()
}

/// Unit basis of the Euclidean complement of `d`.
fn normal_basis(d: &[f64]) -> Vec<Vec<f64>> {
    let m = d.len();
    let n = libm::sqrt(norm_sq(d));
    let mut basis: Vec<Vec<f64>> = vec![d.iter().map(|v| v / n).collect()];
    for i in 0..m {
        if basis.len() == m {
            break;
        }
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let n = libm::sqrt(norm_sq(&v));
        if n > 1e-6 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis.remove(0);
    basis
}

/// Moves vertex `i` transversally to the chord of its neighbours so that the
/// two adjacent segments get shorter. Returns the length decrease.
fn relax_vertex(atlas: &Atlas, verts: &mut [PointRef], i: usize, single_chart: bool) -> f64 {
    let kappa = verts[i].chart;
    let Ok(chart) = atlas.chart(kappa) else { return 0.0 };
    let (Some(a), Some(b)) = (in_chart(atlas, kappa, &verts[i - 1]), in_chart(atlas, kappa, &verts[i + 1])) else {
        return 0.0;
    };
    let chord: Vec<f64> = b.iter().zip(&a).map(|(p, q)| p - q).collect();
    let len = libm::sqrt(norm_sq(&chord));
    if !(len > 1e-12) {
        return 0.0;
    }
    let basis = normal_basis(&chord);
    let k = basis.len();
    if k == 0 {
        return 0.0;
    }
    let x0 = verts[i].x.clone();
    let at = |s: &[f64]| -> Vec<f64> {
        let mut x = x0.clone();
        for (c, e) in s.iter().zip(&basis) {
            x.iter_mut().zip(e).for_each(|(v, w)| *v += c * w);
        }
        x
    };
    let f = |s: &[f64]| -> f64 {
        let x = at(s);
        match (segment_length(chart, &a, &x), segment_length(chart, &x, &b)) {
            (Some(p), Some(q)) => p + q,
            _ => f64::INFINITY,
        }
    };
    let zero = vec![0.0; k];
    let f0 = f(&zero);
    if !f0.is_finite() {
        return 0.0;
    }
    let eps = 1e-4 * len;
    let mut grad = vec![0.0; k];
    let mut hess = vec![0.0; k * k];
    let mut s = zero.clone();
    for p in 0..k {
        s[p] = eps;
        let fp = f(&s);
        s[p] = -eps;
        let fm = f(&s);
        s[p] = 0.0;
        grad[p] = (fp - fm) / (2.0 * eps);
        hess[p * k + p] = (fp - 2.0 * f0 + fm) / (eps * eps);
        for q in 0..p {
            let mut e = zero.clone();
            let mut corner = |sp: f64, sq: f64| {
                e[p] = sp * eps;
                e[q] = sq * eps;
                f(&e)
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * eps * eps);
            hess[p * k + q] = v;
            hess[q * k + p] = v;
        }
    }
    if !grad.iter().chain(&hess).all(|v| v.is_finite()) {
        return 0.0;
    }
    let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut step = match linalg::cholesky(&hess, k) {
        Ok(_) => linalg::solve(&hess, k, &neg).unwrap_or_else(|_| neg.clone()),
        Err(_) => neg.clone(),
    };
    let sn = libm::sqrt(norm_sq(&step));
    let cap = 0.25 * len;
    if sn > cap {
        step.iter_mut().for_each(|v| *v *= cap / sn);
    }
    for _ in 0..30 {
        let f1 = f(&step);
        if f1 < f0 {
            let x = at(&step);
            let mut v = PointRef::new(kappa, x);
            if !single_chart && libm::sqrt(norm_sq(&v.x)) > 0.9 {
                if let Ok((c, y)) = atlas.deepest(&v) {
                    v = PointRef::new(c, y);
                }
            }
            verts[i] = v;
            return f0 - f1;
        }
        step.iter_mut().for_each(|v| *v *= 0.5);
    }
    0.0
}

fn midpoint(atlas: &Atlas, a: &PointRef, b: &PointRef) -> Option<PointRef> {
    if let Some(y) = in_chart(atlas, a.chart, b) {
        return Some(PointRef::new(a.chart, a.x.iter().zip(&y).map(|(p, q)| 0.5 * (p + q)).collect()));
    }
    let y = in_chart(atlas, b.chart, a)?;
    Some(PointRef::new(b.chart, b.x.iter().zip(&y).map(|(p, q)| 0.5 * (p + q)).collect()))
}

/// Shortens a polyline with fixed endpoints by Gauss–Seidel vertex sweeps,
/// doubling the number of segments up to `segments`.
pub fn relax_polyline(atlas: &Atlas, mut verts: Vec<PointRef>, segments: usize, single_chart: bool) -> (f64, Vec<PointRef>) {
    loop {
        let mut total = polyline_length(atlas, &verts);
        for _ in 0..40 {
            let mut gain = 0.0;
            for i in 1..verts.len().saturating_sub(1) {
                gain += relax_vertex(atlas, &mut verts, i, single_chart);
            }
            total = polyline_length(atlas, &verts);
            if !(gain > 1e-13 * total) {
                break;
            }
        }
        if verts.len() > segments {
            return (total, verts);
        }
        let mut next = Vec::with_capacity(2 * verts.len());
        for w in verts.windows(2) {
            next.push(w[0].clone());
            match midpoint(atlas, &w[0], &w[1]) {
                Some(mid) => next.push(mid),
                None => return (total, verts),
            }
        }
        next.push(verts[verts.len() - 1].clone());
        verts = next;
    }
}

/// Distance between two points of one chart along curves in that chart.
pub fn chart_distance(atlas: &Atlas, chart: ChartId, x: &[f64], y: &[f64], segments: usize) -> Result<f64> {
    atlas.chart(chart)?;
    let verts: Vec<PointRef> = (0..=4)
        .map(|i| {
            let t = i as f64 / 4.0;
            PointRef::new(chart, x.iter().zip(y).map(|(a, b)| a + t * (b - a)).collect())
        })
        .collect();
    let (len, _) = relax_polyline(atlas, verts, segments, true);
    if len.is_finite() {
        Ok(len)
    } else {
        Err(Error::OutsideChart { chart, at: y.to_vec() })
    }
}

/// `max(λ_max, 1/λ_min)` of the chart metric over the sample plan.
pub fn chart_equivalence_constant(chart: &Chart, plan: &SamplingPlan, level: usize) -> Result<f64> {
    let m = chart.dim;
    let mut c = 1.0f64;
    for x in plan.ball_points(m, level) {
        let g = chart.metric_at(&x)?;
        let ev = linalg::sym_eigenvalues(&g, m);
        let (lo, hi) = (ev[0], ev[m - 1]);
        if !(lo > 0.0) {
            return Err(Error::NotPositiveDefinite { chart: chart.id, at: x });
        }
        c = c.max(hi).max(1.0 / lo);
    }
    Ok(c)
}

struct Lattice<'a> {
    atlas: &'a Atlas,
    h: f64,
    reach: f64,
    cross_reach: f64,
    offsets: Vec<Vec<i32>>,
    ids: BTreeMap<(ChartId, Vec<i32>), usize>,
    nodes: Vec<(ChartId, Vec<i32>)>,
    dist: Vec<f64>,
    /// Predecessor node; `None` for edges out of the source.
    prev: Vec<Option<usize>>,
    done: Vec<bool>,
    heap: BinaryHeap<Reverse<(u64, usize)>>,
}

impl<'a> Lattice<'a> {
    fn new(atlas: &'a Atlas, h: f64) -> Self {
        let m = atlas.dim;
        let reach = if m <= 2 { 2.5 * h } else { 1.01 * libm::sqrt(m as f64) * h };
        let bound = libm::ceil(reach / h) as i32;
        let offsets = Self::boxed(m, &vec![-bound; m], &vec![bound; m])
            .into_iter()
            .filter(|o| o.iter().any(|&v| v != 0) && libm::sqrt(o.iter().map(|&v| (v * v) as f64).sum::<f64>()) * h <= reach)
            .collect();
        Lattice {
            atlas,
            h,
            reach,
            cross_reach: 1.01 * libm::sqrt(m as f64) * h,
            offsets,
            ids: BTreeMap::new(),
            nodes: Vec::new(),
            dist: Vec::new(),
            prev: Vec::new(),
            done: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn boxed(m: usize, lo: &[i32], hi: &[i32]) -> Vec<Vec<i32>> {
        let mut out = Vec::new();
        if lo.iter().zip(hi).any(|(a, b)| a > b) {
            return out;
        }
        let mut k = lo.to_vec();
        loop {
            out.push(k.clone());
            let mut d = 0;
            loop {
                if d == m {
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
    }

    fn coords(&self, key: &[i32]) -> Vec<f64> {
        key.iter().map(|&k| k as f64 * self.h).collect()
    }

    fn near(&self, y: &[f64], reach: f64) -> Vec<Vec<i32>> {
        let lo: Vec<i32> = y.iter().map(|v| libm::ceil((v - reach) / self.h) as i32).collect();
        let hi: Vec<i32> = y.iter().map(|v| libm::floor((v + reach) / self.h) as i32).collect();
        Self::boxed(y.len(), &lo, &hi)
            .into_iter()
            .filter(|k| {
                let x = self.coords(k);
                dist(&x, y) <= reach && libm::sqrt(norm_sq(&x)) < LATTICE_LIMIT
            })
            .collect()
    }

    fn node(&mut self, chart: ChartId, key: Vec<i32>) -> usize {
        if let Some(&i) = self.ids.get(&(chart, key.clone())) {
            return i;
        }
        let i = self.nodes.len();
        self.ids.insert((chart, key.clone()), i);
        self.nodes.push((chart, key));
        self.dist.push(f64::INFINITY);
        self.prev.push(None);
        self.done.push(false);
        i
    }

    fn offer(&mut self, from: Option<usize>, d: f64, to: usize) {
        if d < self.dist[to] {
            self.dist[to] = d;
            self.prev[to] = from;
            self.heap.push(Reverse((d.to_bits(), to)));
        }
    }

    /// Shortest lattice path; `Err(())` when the budget runs out.
    fn search(
        &mut self,
        p_reps: &[(ChartId, Vec<f64>)],
        q_reps: &[(ChartId, Vec<f64>)],
        budget: &mut usize,
    ) -> core::result::Result<Option<Vec<PointRef>>, ()> {
        let atlas = self.atlas;
        let q_in = |c: ChartId| q_reps.iter().find(|(k, _)| *k == c).map(|(_, x)| x);
        let mut best = f64::INFINITY;
        let mut best_end: Option<(Option<usize>, ChartId)> = None;
        for (kappa, xp) in p_reps {
            let Ok(chart) = atlas.chart(*kappa) else { continue };
            if let Some(xq) = q_in(*kappa) {
                if let Some(w) = segment_length(chart, xp, xq) {
                    if w < best {
                        best = w;
                        best_end = Some((None, *kappa));
                    }
                }
            }
            for k in self.near(xp, self.reach) {
                let x = self.coords(&k);
                if let Some(w) = segment_length(chart, xp, &x) {
                    let id = self.node(*kappa, k);
                    self.offer(None, w, id);
                }
            }
        }
        while let Some(Reverse((bits, u))) = self.heap.pop() {
            let d = f64::from_bits(bits);
            if d >= best {
                break;
            }
            if self.done[u] || d > self.dist[u] {
                continue;
            }
            self.done[u] = true;
            if *budget == 0 {
                return Err(());
            }
            *budget -= 1;
            let (kappa, key) = self.nodes[u].clone();
            let x = self.coords(&key);
            let chart = atlas.chart(kappa).map_err(|_| ())?;
            if let Some(xq) = q_in(kappa) {
                if dist(xq, &x) <= self.reach {
                    if let Some(w) = segment_length(chart, &x, xq) {
                        if d + w < best {
                            best = d + w;
                            best_end = Some((Some(u), kappa));
                        }
                    }
                }
            }
            for o in self.offsets.clone() {
                let k2: Vec<i32> = key.iter().zip(&o).map(|(a, b)| a + b).collect();
                let x2 = self.coords(&k2);
                if libm::sqrt(norm_sq(&x2)) >= LATTICE_LIMIT {
                    continue;
                }
                if let Some(w) = segment_length(chart, &x, &x2) {
                    let id = self.node(kappa, k2);
                    if !self.done[id] {
                        self.offer(Some(u), d + w, id);
                    }
                }
            }
            for eta in chart.neighbors().collect::<Vec<_>>() {
                let Some(y) = atlas.try_transition(kappa, eta, &x) else { continue };
                if libm::sqrt(norm_sq(&y)) >= LATTICE_LIMIT {
                    continue;
                }
                let Ok(target) = atlas.chart(eta) else { continue };
                for k in self.near(&y, self.cross_reach) {
                    let x2 = self.coords(&k);
                    if let Some(w) = segment_length(target, &y, &x2) {
                        let id = self.node(eta, k);
                        if !self.done[id] {
                            self.offer(Some(u), d + w, id);
                        }
                    }
                }
            }
        }
        let Some((last, end_chart)) = best_end else { return Ok(None) };
        let mut rev = vec![PointRef::new(end_chart, q_in(end_chart).cloned().unwrap_or_default())];
        let mut cur = last;
        let mut start_chart = end_chart;
        while let Some(u) = cur {
            let (c, k) = &self.nodes[u];
            rev.push(PointRef::new(*c, self.coords(k)));
            start_chart = *c;
            cur = self.prev[u];
        }
        let xp = p_reps.iter().find(|(c, _)| *c == start_chart).map(|(_, x)| x.clone()).unwrap_or_default();
        rev.push(PointRef::new(start_chart, xp));
        rev.reverse();
        Ok(Some(rev))
    }
}

fn downsample(atlas: &Atlas, path: Vec<PointRef>, target: usize) -> Vec<PointRef> {
    let n = path.len() - 1;
    if n <= target {
        return path;
    }
    let stride = n.div_ceil(target);
    let mut out: Vec<PointRef> = path.iter().step_by(stride).cloned().collect();
    if (n % stride) != 0 {
        out.push(path[n].clone());
    }
    if out.windows(2).all(|w| pair_length(atlas, &w[0], &w[1]).is_some()) {
        out
    } else {
        path
    }
}

fn check_point(atlas: &Atlas, p: &PointRef) -> Result<()> {
    atlas.chart(p.chart)?;
    if p.x.len() != atlas.dim {
        return Err(Error::Dimension { expected: atlas.dim, got: p.x.len() });
    }
    if !(norm_sq(&p.x) < 1.0) {
        return Err(Error::OutsideChart { chart: p.chart, at: p.x.clone() });
    }
    Ok(())
}

/// Two-sided estimate of the Riemannian distance between `p` and `q`.
pub fn distance_estimate(atlas: &Atlas, p: &PointRef, q: &PointRef, opts: &DistanceOptions) -> Result<DistanceEstimate> {
    check_point(atlas, p)?;
    check_point(atlas, q)?;
    if !(opts.spacing > 0.0 && opts.spacing < 1.0) {
        return Err(Error::Invalid("lattice spacing must lie in (0, 1)".into()));
    }
    // canonical order keeps the estimate symmetric
    let key = |r: &PointRef| (r.chart, r.x.clone());
    let (p, q) = match key(p).partial_cmp(&key(q)) {
        Some(core::cmp::Ordering::Greater) => (q, p),
        _ => (p, q),
    };
    let p_reps = atlas.locate(p)?;
    let q_reps = atlas.locate(q)?;
    let plan = SamplingPlan::default();
    let mut lower = 0.0f64;
    for (kappa, xp) in &p_reps {
        let c = match opts.c {
            Some(c) => c,
            None => chart_equivalence_constant(atlas.chart(*kappa)?, &plan, 0)?,
        };
        let to_edge = 1.0 - libm::sqrt(norm_sq(xp));
        let reach = match q_reps.iter().find(|(k, _)| k == kappa) {
            Some((_, xq)) => dist(xp, xq).min(to_edge),
            None => to_edge,
        };
        lower = lower.max(reach / c);
    }
    let mut est =
        DistanceEstimate { lower, upper: None, upper_by_level: Vec::new(), budget_exhausted: false, path: Vec::new() };
    if p_reps.iter().any(|(k, xp)| q_reps.iter().any(|(l, xq)| k == l && xp == xq)) {
        est.lower = 0.0;
        est.upper = Some(0.0);
        est.upper_by_level = vec![Some(0.0); opts.levels.max(1)];
        est.path = vec![p.clone(), q.clone()];
        return Ok(est);
    }
    let mut budget = opts.budget;
    let mut h = opts.spacing;
    for _ in 0..opts.levels.max(1) {
        let mut lattice = Lattice::new(atlas, h);
        match lattice.search(&p_reps, &q_reps, &mut budget) {
            Err(()) => {
                est.budget_exhausted = true;
                est.upper_by_level.push(est.upper);
                break;
            }
            Ok(None) => {}
            Ok(Some(path)) => {
                let start = downsample(atlas, path, 8);
                let (len, verts) = relax_polyline(atlas, start, opts.segments, false);
                if len.is_finite() && est.upper.map_or(true, |u| len < u) {
                    est.upper = Some(len);
                    est.path = verts;
                }
            }
        }
        est.upper_by_level.push(est.upper);
        h *= 0.5;
    }
    Ok(est)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Inclusion {
    /// `B_g(ψ(x), δ/c) ⊂ ψ(B(x, δ))`, tested on the coordinate sphere.
    Inner,
    /// `ψ(B(x, δ)) ⊂ B_g(ψ(x), cδ)`.
    Outer,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SandwichWitness {
    pub inclusion: Inclusion,
    pub y: Vec<f64>,
    pub distance: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SandwichReport {
    pub chart: ChartId,
    pub x: Vec<f64>,
    pub delta: f64,
    pub c: f64,
    pub pass: bool,
    pub checked: usize,
    /// Smallest `d / (δ/c)` over the coordinate sphere.
    pub inner_margin: f64,
    /// Largest `d / (cδ)` over the coordinate ball.
    pub outer_margin: f64,
    pub witness: Option<SandwichWitness>,
}

/// Checks `B_g(ψ(x), δ/c) ⊂ ψ(B(x, δ)) ⊂ B_g(ψ(x), cδ)` on `samples`
/// directions of the coordinate sphere and as many interior points.
pub fn sandwich_check(atlas: &Atlas, chart: ChartId, x: &[f64], delta: f64, c: f64, samples: usize) -> Result<SandwichReport> {
    let m = atlas.dim;
    check_point(atlas, &PointRef::new(chart, x.to_vec()))?;
    if !(delta > 0.0 && libm::sqrt(norm_sq(x)) + delta < 1.0) {
        return Err(Error::Invalid("the coordinate ball B(x, delta) must lie inside the chart".into()));
    }
    if !(c >= 1.0) {
        return Err(Error::Invalid("equivalence constant must be at least 1".into()));
    }
    const TOL: f64 = 1e-6;
    let mut rep = SandwichReport {
        chart,
        x: x.to_vec(),
        delta,
        c,
        pass: true,
        checked: 0,
        inner_margin: f64::INFINITY,
        outer_margin: 0.0,
        witness: None,
    };
    let shift = |u: &[f64], r: f64| -> Vec<f64> { x.iter().zip(u).map(|(a, b)| a + r * b).collect() };
    let mut points: Vec<(Vec<f64>, bool)> =
        crate::sampling::directions(m, samples, 0).into_iter().map(|u| (shift(&u, delta), true)).collect();
    points.extend(crate::sampling::halton_ball(m, samples, 1, delta).into_iter().map(|u| (shift(&u, 1.0), false)));
    for (y, on_sphere) in points {
        let d = chart_distance(atlas, chart, x, &y, 16)?;
        rep.checked += 1;
        if on_sphere {
            let bound = delta / c;
            rep.inner_margin = rep.inner_margin.min(d / bound);
            if d < bound * (1.0 - TOL) && rep.pass {
                rep.pass = false;
                rep.witness = Some(SandwichWitness { inclusion: Inclusion::Inner, y: y.clone(), distance: d, bound });
            }
        }
        let bound = c * delta;
        rep.outer_margin = rep.outer_margin.max(d / bound);
        if d > bound * (1.0 + TOL) && rep.pass {
            rep.pass = false;
            rep.witness = Some(SandwichWitness { inclusion: Inclusion::Outer, y, distance: d, bound });
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn single(dim: usize, entries: &[&str]) -> Atlas {
        let metric = entries.iter().map(|s| parse(s, dim).unwrap()).collect();
        Atlas { dim, shrink_radius: 0.5, charts: vec![Chart::new(0, dim, metric)] }
    }

    #[test]
    fn flat_segment_length_is_euclidean() {
        let a = single(2, &["1", "0", "0", "1"]);
        let l = segment_length(&a.charts[0], &[0.0, 0.0], &[0.3, 0.4]).unwrap();
        assert!((l - 0.5).abs() < 1e-15);
        assert!(segment_length(&a.charts[0], &[0.0, 0.0], &[1.0, 0.0]).is_none());
    }

    #[test]
    fn flat_distance() {
        let a = single(2, &["1", "0", "0", "1"]);
        let e = distance_estimate(&a, &PointRef::new(0, vec![0.0, 0.0]), &PointRef::new(0, vec![0.3, 0.4]), &DistanceOptions::default()).unwrap();
        assert!((e.upper.unwrap() - 0.5).abs() < 1e-9);
        assert!(e.lower <= e.upper.unwrap());
    }

    #[test]
    fn curved_chart_distance_relaxes() {
        // Poincaré disc: d(0, (0.5, 0)) = ln 3; start from a bent path
        let a = single(2, &["4/(1 - (x1^2 + x2^2))^2", "0", "0", "4/(1 - (x1^2 + x2^2))^2"]);
        let verts = vec![
            PointRef::new(0, vec![0.0, 0.0]),
            PointRef::new(0, vec![0.25, 0.2]),
            PointRef::new(0, vec![0.5, 0.0]),
        ];
        let (len, _) = relax_polyline(&a, verts, 64, true);
        assert!((len - 3f64.ln()).abs() < 1e-6, "{len}");
    }

    #[test]
    fn budget_zero_gives_no_upper_bound() {
        let a = single(2, &["1", "0", "0", "1"]);
        let opts = DistanceOptions { budget: 0, ..Default::default() };
        let e = distance_estimate(&a, &PointRef::new(0, vec![-0.5, 0.0]), &PointRef::new(0, vec![0.5, 0.3]), &opts).unwrap();
        assert!(e.budget_exhausted);
        assert_eq!(e.upper, None);
        assert!(e.lower > 0.0);
    }
}

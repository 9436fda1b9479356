//! Sampled estimates of the uniform-regularity constants and a verdict.
//!
//! Every estimate is a supremum over a nested sample family, so it is
//! non-decreasing under refinement. Refinement level `ℓ` combines deeper
//! window charts (see [`Atlas::charts_at_level`]) with more points per chart
//! (see [`SamplingPlan::ball_points`]). A quantity diverges when its estimate
//! grows by the configured ratio between two consecutive levels.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::atlas::{Atlas, Chart, ChartId, CoverCheck, ManifoldDescriptor, PointRef};
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::geodesic::{
    injectivity_radius_estimate, integrate_geodesic, orthonormal_frame, InjectivityEstimate,
    InjectivityOptions, StepControl, Termination,
};
use crate::jet::{eval_taylor, JetSpace, Taylor, MAX_JET_ORDER};
use crate::linalg;
use crate::sampling::{directions, SamplingPlan};
use crate::tensor::{christoffel_jets, max_derivative, metric_inverse, metric_jet, LocalGeometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Verdict {
    #[cfg_attr(feature = "serde", serde(rename = "consistent-with-uniformly-regular"))]
    Consistent,
    #[cfg_attr(feature = "serde", serde(rename = "inconsistent"))]
    Inconsistent,
    #[cfg_attr(feature = "serde", serde(rename = "inconclusive"))]
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent-with-uniformly-regular",
            Verdict::Inconsistent => "inconsistent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Quantity whose coordinate derivatives are bounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Target {
    Metric,
    Inverse,
    Transitions,
    Christoffel,
}

impl Target {
    pub fn name(&self) -> &'static str {
        match self {
            Target::Metric => "metric",
            Target::Inverse => "inverse-metric",
            Target::Transitions => "transitions",
            Target::Christoffel => "christoffel",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReportConfig {
    /// Highest derivative order of the metric; curvature is covered up to
    /// `∇^{k_max − 2} R`.
    pub k_max: usize,
    pub plan: SamplingPlan,
    /// Growth factor between consecutive levels that counts as divergence.
    pub divergence_ratio: f64,
    /// Estimates at or below this value are treated as zero.
    pub noise_floor: f64,
    pub injectivity_cap: f64,
    pub injectivity_directions: usize,
    pub completeness_horizon: f64,
    /// Work units: one per jet evaluation and one per integration step.
    pub budget: u64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            k_max: 4,
            plan: SamplingPlan::default(),
            divergence_ratio: 4.0,
            noise_floor: 1e-6,
            injectivity_cap: 1.0,
            injectivity_directions: 8,
            completeness_horizon: 0.5,
            budget: 50_000_000,
        }
    }
}

impl ReportConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max > MAX_JET_ORDER {
            return Err(Error::Invalid(format!("k_max {} exceeds the jet order limit {MAX_JET_ORDER}", self.k_max)));
        }
        if self.plan.levels < 1 {
            return Err(Error::Invalid("at least one grid level is required".into()));
        }
        if !(self.plan.radius > 0.0 && self.plan.radius < 1.0) {
            return Err(Error::Invalid("sample radius must lie in (0, 1)".into()));
        }
        if !(self.divergence_ratio > 1.0) {
            return Err(Error::Invalid("divergence ratio must exceed 1".into()));
        }
        if !(self.noise_floor > 0.0) {
            return Err(Error::Invalid("noise floor must be positive".into()));
        }
        if !(self.injectivity_cap > 0.0 && self.completeness_horizon > 0.0) {
            return Err(Error::Invalid("injectivity cap and completeness horizon must be positive".into()));
        }
        Ok(())
    }
}

/// A sampled supremum tracked across refinement levels.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub quantity: String,
    /// Cumulative estimate after each level.
    pub by_level: Vec<f64>,
    pub value: f64,
    /// Ratio of the last two levels, 1 when both are below the noise floor.
    pub trend: f64,
    /// Where the final value was attained.
    pub argmax: Option<PointRef>,
}

impl Estimate {
    /// First level whose estimate grew by at least `ratio` over the previous one.
    pub fn divergence(&self, ratio: f64, floor: f64) -> Option<usize> {
        (1..self.by_level.len()).find(|&l| {
            let (a, b) = (self.by_level[l - 1], self.by_level[l]);
            !b.is_finite() || (b > floor && b >= ratio * a.max(floor))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Witness {
    pub quantity: String,
    pub chart: Option<ChartId>,
    pub point: Option<Vec<f64>>,
    pub trend: Vec<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompletenessProbe {
    pub horizon: f64,
    pub rays: usize,
    /// No probe geodesic stopped before the horizon.
    pub complete: bool,
    /// Start point and stopping time of the first ray that stopped early.
    pub witness: Option<(PointRef, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegularityReport {
    pub name: String,
    pub dim: usize,
    pub k_max: usize,
    pub levels: usize,
    pub seed: u64,
    pub shrink_radius: f64,
    pub cover: CoverCheck,
    pub multiplicity: Estimate,
    /// `c` with `|ξ|²/c ≤ g(ξ, ξ) ≤ c|ξ|²`.
    pub metric_equivalence: Estimate,
    /// `c(k)` for `k = 0..=k_max`.
    pub metric_bounds: Vec<Estimate>,
    pub inverse_bounds: Vec<Estimate>,
    pub transition_bounds: Vec<Estimate>,
    /// `k = 0..k_max`.
    pub christoffel_bounds: Vec<Estimate>,
    /// `sup |∇^k R|_g` for `k = 0..=k_max − 2`.
    pub curvature_bounds: Vec<Estimate>,
    pub injectivity: Vec<InjectivityEstimate>,
    pub injectivity_lower: f64,
    pub completeness: CompletenessProbe,
    pub work: u64,
    pub budget_exhausted: bool,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

impl RegularityReport {
    /// All tracked estimates in a fixed order.
    pub fn estimates(&self) -> impl Iterator<Item = &Estimate> + '_ {
        [&self.multiplicity, &self.metric_equivalence]
            .into_iter()
            .chain(&self.metric_bounds)
            .chain(&self.inverse_bounds)
            .chain(&self.transition_bounds)
            .chain(&self.christoffel_bounds)
            .chain(&self.curvature_bounds)
    }
}

/// `max(λ_max(G), 1/λ_min(G))` over the samples, at least 1.
pub fn metric_equivalence_constant(chart: &Chart, samples: &[Vec<f64>]) -> Result<f64> {
    let mut c = 1.0f64;
    for x in samples {
        c = c.max(equivalence_at(chart, x)?);
    }
    Ok(c)
}

fn equivalence_at(chart: &Chart, x: &[f64]) -> Result<f64> {
    let m = chart.dim;
    let ev = linalg::sym_eigenvalues(&chart.metric_at(x)?, m);
    if !(ev[0] > 0.0) {
        return Err(Error::NotPositiveDefinite { chart: chart.id, at: x.to_vec() });
    }
    Ok(ev[m - 1].max(1.0 / ev[0]).max(1.0))
}

fn cumulative(space: &JetSpace, entries: &[Taylor], k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut best = 0.0f64;
    for d in 0..=k {
        best = best.max(max_derivative(space, entries, d));
        out.push(best);
    }
    out
}

/// Transition components with jets at `x`, if `x` lies in the overlap.
fn transition_series(chart: &Chart, to: ChartId, x: &[f64], space: &Arc<JetSpace>, k: usize) -> Result<Option<Vec<Taylor>>> {
    let Some(t) = chart.transition_to(to) else { return Ok(None) };
    for pred in &t.overlap {
        if !(pred.eval(x).unwrap_or(-1.0) >= 0.0) {
            return Ok(None);
        }
    }
    let series = t.map.iter().map(|e| eval_taylor(e, space, k, x)).collect::<core::result::Result<Vec<_>, _>>();
    let Ok(series) = series else { return Ok(None) };
    let y2: f64 = series.iter().map(|s| s.value() * s.value()).sum();
    Ok((y2 <= 1.0).then_some(series))
}

/// `sup_x max_{|α| ≤ k} |∂^α f|` over the entries `f` of `target` at the
/// samples. Transition samples outside every overlap are skipped.
pub fn derivative_bounds(chart: &Chart, target: Target, k: usize, samples: &[Vec<f64>]) -> Result<f64> {
    let extra = usize::from(target == Target::Christoffel);
    if k + extra > MAX_JET_ORDER {
        return Err(Error::Jet(crate::jet::JetError::OrderOverflow { requested: k + extra, max: MAX_JET_ORDER }));
    }
    let space = JetSpace::new(chart.dim, k + extra);
    let mut best = 0.0f64;
    for x in samples {
        let entries = match target {
            Target::Metric => metric_jet(chart, x, k, &space)?.entries,
            Target::Inverse => metric_inverse(&metric_jet(chart, x, k, &space)?)?.entries,
            Target::Christoffel => {
                let g = metric_jet(chart, x, k + 1, &space)?;
                christoffel_jets(&g, &metric_inverse(&g)?)?
            }
            Target::Transitions => {
                let mut all = Vec::new();
                for t in &chart.transitions {
                    if let Some(s) = transition_series(chart, t.to, x, &space, k)? {
                        all.extend(s);
                    }
                }
                all
            }
        };
        best = best.max(*cumulative(&space, &entries, k).last().expect("k + 1 entries"));
    }
    Ok(best)
}

/// `sup |∇^k R|_g` over the window charts at the given chart points.
pub fn curvature_bounds(atlas: &Atlas, k: usize, samples: &[Vec<f64>]) -> Result<f64> {
    if k + 2 > MAX_JET_ORDER {
        return Err(Error::Jet(crate::jet::JetError::OrderOverflow { requested: k + 2, max: MAX_JET_ORDER }));
    }
    let space = JetSpace::new(atlas.dim, k + 2);
    let mut best = 0.0f64;
    for chart in atlas.window_charts() {
        for x in samples {
            best = best.max(LocalGeometry::new(chart, x, k + 2, &space, true)?.nabla_k_r_norm(k)?);
        }
    }
    Ok(best)
}

/// Running per-level maxima for one quantity.
#[derive(Clone)]
struct Acc {
    levels: Vec<(f64, Option<PointRef>)>,
}

impl Acc {
    fn new(levels: usize) -> Acc {
        Acc { levels: vec![(0.0, None); levels] }
    }

    fn push(&mut self, level: usize, value: f64, at: &PointRef) {
        let slot = &mut self.levels[level];
        // NaN replaces anything so that it is reported
        if value > slot.0 || (value.is_nan() && !slot.0.is_nan()) {
            *slot = (value, Some(at.clone()));
        }
    }

    fn finish(self, quantity: String, floor: f64) -> Estimate {
        let mut by_level = Vec::with_capacity(self.levels.len());
        let mut best = (0.0f64, None);
        for (v, at) in self.levels {
            if v > best.0 || (v.is_nan() && !best.0.is_nan()) {
                best = (v, at);
            }
            by_level.push(best.0);
        }
        let n = by_level.len();
        let trend = if n < 2 || (by_level[n - 1] <= floor && by_level[n - 2] <= floor) {
            1.0
        } else {
            by_level[n - 1] / by_level[n - 2].max(floor)
        };
        Estimate { quantity, value: best.0, by_level, trend, argmax: best.1 }
    }
}

/// Index layout of the per-point quantities.
#[derive(Clone, Copy)]
struct Layout {
    k: usize,
}

impl Layout {
    fn equivalence(&self) -> usize {
        0
    }
    fn metric(&self, d: usize) -> usize {
        1 + d
    }
    fn inverse(&self, d: usize) -> usize {
        2 + self.k + d
    }
    fn transition(&self, d: usize) -> usize {
        3 + 2 * self.k + d
    }
    fn christoffel(&self, d: usize) -> usize {
        4 + 3 * self.k + d
    }
    fn curvature(&self, d: usize) -> usize {
        4 + 4 * self.k + d
    }
    fn christoffel_count(&self) -> usize {
        self.k
    }
    fn curvature_count(&self) -> usize {
        self.k.saturating_sub(1)
    }
    fn len(&self) -> usize {
        self.curvature(self.curvature_count())
    }
}

/// One evaluated quantity vector at a chart point.
struct Item {
    level: usize,
    at: PointRef,
    /// `(quantity index, value)`.
    values: Vec<(usize, f64)>,
}

fn sample_level(plan: &SamplingPlan, dim: usize, index: usize) -> usize {
    (0..plan.levels).find(|&l| index < plan.count(l) + 2 * dim + 1).unwrap_or(plan.levels - 1)
}

fn chart_level(atlas: &Atlas, chart: &Chart, levels: usize) -> usize {
    let max = atlas.max_depth() as usize;
    (0..levels).find(|&l| chart.depth as usize * levels <= max * (l + 1)).unwrap_or(levels - 1)
}

struct ChartWork<'a> {
    atlas: &'a Atlas,
    layout: Layout,
    outer: Vec<Vec<f64>>,
    inner: Vec<Vec<f64>>,
    levels: Vec<usize>,
    inner_levels: Vec<usize>,
}

impl ChartWork<'_> {
    fn cost(&self, chart: &Chart) -> u64 {
        let per_neighbor = 2 * self.outer.len();
        (self.outer.len() + self.inner.len() + per_neighbor * chart.transitions.len()) as u64
    }

    fn run(&self, chart: &Chart, base_level: usize) -> Result<Vec<Item>> {
        let (m, k, lay) = (self.atlas.dim, self.layout.k, self.layout);
        let space = JetSpace::new(m, k);
        let mut items = Vec::new();
        for (x, &sl) in self.outer.iter().zip(&self.levels) {
            let at = PointRef::new(chart.id, x.clone());
            let mut values = vec![(lay.equivalence(), equivalence_at(chart, x)?)];
            let geo = LocalGeometry::new(chart, x, k, &space, false)?;
            for (d, v) in cumulative(&space, &geo.metric.entries, k).into_iter().enumerate() {
                values.push((lay.metric(d), v));
            }
            for (d, v) in cumulative(&space, &geo.inverse.entries, k).into_iter().enumerate() {
                values.push((lay.inverse(d), v));
            }
            if k >= 1 {
                for (d, v) in cumulative(&space, &geo.christoffel, k - 1).into_iter().enumerate() {
                    values.push((lay.christoffel(d), v));
                }
            }
            items.push(Item { level: base_level.max(sl), at, values });
        }
        for (x, &sl) in self.inner.iter().zip(&self.inner_levels) {
            if k < 2 {
                break;
            }
            let geo = LocalGeometry::new(chart, x, k, &space, true)?;
            let mut values = Vec::new();
            for d in 0..lay.curvature_count() {
                values.push((lay.curvature(d), geo.nabla_k_r_norm(d)?));
            }
            items.push(Item { level: base_level.max(sl), at: PointRef::new(chart.id, x.clone()), values });
        }
        for t in &chart.transitions {
            let other = self.atlas.chart(t.to)?;
            // points of this chart, then images of the neighbour's points
            let back = self.outer.iter().zip(&self.levels).filter_map(|(y, &sl)| {
                other.transition_to(chart.id)?;
                let x = self.atlas.transition(t.to, chart.id, y).ok()?;
                (linalg::norm(&x) < 1.0).then_some((x, sl))
            });
            let own = self.outer.iter().cloned().zip(self.levels.iter().copied());
            for (x, sl) in own.chain(back) {
                if let Some(series) = transition_series(chart, t.to, &x, &space, k)? {
                    let values =
                        cumulative(&space, &series, k).into_iter().enumerate().map(|(d, v)| (lay.transition(d), v)).collect();
                    items.push(Item { level: base_level.max(sl), at: PointRef::new(chart.id, x), values });
                }
            }
        }
        Ok(items)
    }
}

fn probe_points(atlas: &Atlas) -> Vec<PointRef> {
    let window: Vec<&Chart> = atlas.window_charts().collect();
    let mut out = Vec::new();
    if let Some(first) = window.first() {
        out.push(PointRef::new(first.id, vec![0.0; atlas.dim]));
        let deepest = window.iter().max_by_key(|c| (c.depth, c.id)).expect("nonempty");
        if deepest.id != first.id {
            out.push(PointRef::new(deepest.id, vec![0.0; atlas.dim]));
        }
    }
    out
}

/// Runs every estimator with the sequential executor.
pub fn regularity_report(mfd: &ManifoldDescriptor, cfg: &ReportConfig) -> Result<RegularityReport> {
    regularity_report_with(mfd, cfg, &Sequential)
}

/// Runs every estimator, fanning the per-chart work out through `exec`.
pub fn regularity_report_with<E: Executor>(mfd: &ManifoldDescriptor, cfg: &ReportConfig, exec: &E) -> Result<RegularityReport> {
    cfg.validate()?;
    let atlas = &mfd.atlas;
    let (m, plan, levels) = (atlas.dim, cfg.plan, cfg.plan.levels);
    let validation = atlas.validate(&SamplingPlan { levels: 1, ..plan });
    if let Some(issue) = validation.issues.first() {
        return Err(Error::Invalid(format!("descriptor failed validation: {issue}")));
    }
    let layout = Layout { k: cfg.k_max };
    let outer = plan.ball_points(m, levels - 1);
    let inner = plan.ball_points_radius(m, levels - 1, atlas.shrink_radius);
    let sample_levels: Vec<usize> = (0..outer.len()).map(|i| sample_level(&plan, m, i)).collect();
    let work = ChartWork { atlas, layout, levels: sample_levels.clone(), inner_levels: sample_levels, outer, inner };

    let mut budget = cfg.budget;
    let mut exhausted = false;
    let mut jobs: Vec<(&Chart, usize)> = Vec::new();
    for chart in atlas.window_charts() {
        let cost = work.cost(chart);
        if cost > budget {
            exhausted = true;
            break;
        }
        budget -= cost;
        jobs.push((chart, chart_level(atlas, chart, levels)));
    }
    let results = exec.map(jobs.len(), |i| work.run(jobs[i].0, jobs[i].1));
    let mut accs = vec![Acc::new(levels); layout.len()];
    for r in results {
        for item in r? {
            for (q, v) in item.values {
                accs[q].push(item.level, v, &item.at);
            }
        }
    }

    let mut mult = Acc::new(levels);
    for l in 0..levels {
        let w = atlas.multiplicity(&plan, l);
        if let Some(at) = &w.witness {
            mult.push(l, w.value as f64, at);
        }
    }
    let cover = atlas.shrink_cover_check(&plan, levels - 1);

    let probes = probe_points(atlas);
    let mut injectivity = Vec::new();
    for p in &probes {
        if exhausted {
            break;
        }
        let opts = InjectivityOptions {
            cap: cfg.injectivity_cap,
            directions: cfg.injectivity_directions,
            budget: budget.min(usize::MAX as u64) as usize,
            seed: plan.seed,
            ..InjectivityOptions::default()
        };
        let est = injectivity_radius_estimate(atlas, p, &opts)?;
        budget -= est.steps as u64;
        exhausted |= est.budget_exhausted;
        injectivity.push(est);
    }
    let injectivity_lower = injectivity.iter().map(|e| e.lower).fold(cfg.injectivity_cap, f64::min);

    let mut completeness = CompletenessProbe { horizon: cfg.completeness_horizon, rays: 0, complete: true, witness: None };
    let ctrl = StepControl { max_steps: 100_000, ..StepControl::default() };
    'probe: for p in &probes {
        let g = atlas.chart(p.chart)?.metric_at(&p.x)?;
        let frame = orthonormal_frame(&g, m)?;
        let dirs: Vec<Vec<f64>> = if m <= 3 { directions(m, 2 * m + 2, plan.seed) } else { directions(m, 2 * m, plan.seed) };
        for u in dirs {
            if exhausted {
                break 'probe;
            }
            let v = linalg::mat_vec(&frame, m, &u);
            let path = integrate_geodesic(atlas, p, &v, cfg.completeness_horizon, &StepControl {
                max_steps: (budget.min(ctrl.max_steps as u64)) as usize,
                ..ctrl
            })?;
            let steps = path.samples.len() as u64 - 1;
            budget = budget.saturating_sub(steps);
            completeness.rays += 1;
            let end = path.last().t;
            if path.termination != Termination::TimeBudget && end < cfg.completeness_horizon {
                if path.termination == Termination::StepFailure && budget == 0 {
                    exhausted = true;
                    break 'probe;
                }
                completeness.complete = false;
                completeness.witness = Some((p.clone(), end));
                break 'probe;
            }
        }
    }

    let floor = cfg.noise_floor;
    let mut accs = accs.into_iter();
    let mut take = |name: String| accs.next().expect("layout covers every quantity").finish(name, floor);
    let metric_equivalence = take("metric-equivalence".into());
    let metric_bounds = (0..=layout.k).map(|d| take(format!("metric-c({d})"))).collect();
    let inverse_bounds = (0..=layout.k).map(|d| take(format!("inverse-metric-c({d})"))).collect();
    let transition_bounds = (0..=layout.k).map(|d| take(format!("transitions-c({d})"))).collect();
    let christoffel_bounds = (0..layout.christoffel_count()).map(|d| take(format!("christoffel-c({d})"))).collect();
    let curvature_bounds = (0..layout.curvature_count()).map(|d| take(format!("curvature-nabla{d}"))).collect();
    let mut report = RegularityReport {
        name: mfd.name.clone(),
        dim: m,
        k_max: cfg.k_max,
        levels,
        seed: plan.seed,
        shrink_radius: atlas.shrink_radius,
        cover,
        multiplicity: mult.finish("multiplicity".into(), floor),
        metric_equivalence,
        metric_bounds,
        inverse_bounds,
        transition_bounds,
        christoffel_bounds,
        curvature_bounds,
        injectivity,
        injectivity_lower,
        completeness,
        work: cfg.budget - budget,
        budget_exhausted: exhausted,
        verdict: Verdict::Consistent,
        witness: None,
    };
    let (verdict, witness) = judge(&report, cfg);
    report.verdict = verdict;
    report.witness = witness;
    Ok(report)
}

fn judge(r: &RegularityReport, cfg: &ReportConfig) -> (Verdict, Option<Witness>) {
    if r.budget_exhausted {
        return (Verdict::Inconclusive, None);
    }
    for e in r.estimates() {
        if let Some(l) = e.divergence(cfg.divergence_ratio, cfg.noise_floor) {
            let detail = format!(
                "{} grew from {:e} to {:e} between levels {} and {}",
                e.quantity,
                e.by_level[l - 1],
                e.by_level[l],
                l - 1,
                l
            );
            return (
                Verdict::Inconsistent,
                Some(Witness {
                    quantity: e.quantity.clone(),
                    chart: e.argmax.as_ref().map(|p| p.chart),
                    point: e.argmax.as_ref().map(|p| p.x.clone()),
                    trend: e.by_level.clone(),
                    detail,
                }),
            );
        }
    }
    if !r.cover.covered {
        let at = r.cover.witness.as_ref();
        return (
            Verdict::Inconsistent,
            Some(Witness {
                quantity: "shrink-cover".into(),
                chart: at.map(|p| p.chart),
                point: at.map(|p| p.x.clone()),
                trend: vec![r.cover.worst_radius],
                detail: format!("sampled point lies in no chart's {}-ball", r.shrink_radius),
            }),
        );
    }
    if !r.completeness.complete {
        let (p, t) = r.completeness.witness.clone().expect("incomplete probes carry a witness");
        return (
            Verdict::Inconsistent,
            Some(Witness {
                quantity: "completeness".into(),
                chart: Some(p.chart),
                point: Some(p.x),
                trend: vec![t],
                detail: format!("geodesic stopped at t = {t} before the horizon {}", r.completeness.horizon),
            }),
        );
    }
    if let Some(e) = r.injectivity.iter().find(|e| !(e.lower > 0.0)) {
        return (
            Verdict::Inconsistent,
            Some(Witness {
                quantity: "injectivity-radius".into(),
                chart: Some(e.point.chart),
                point: Some(e.point.x.clone()),
                trend: vec![e.lower],
                detail: "no positive injectivity radius lower bound".into(),
            }),
        );
    }
    (Verdict::Consistent, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::expr::parse;

    fn chart(entries: &[&str]) -> Chart {
        Chart::new(0, 2, entries.iter().map(|s| parse(s, 2).unwrap()).collect())
    }

    #[test]
    fn equivalence_examples() {
        let pts = SamplingPlan::default().ball_points(2, 0);
        assert_eq!(metric_equivalence_constant(&chart(&["1", "0", "0", "1"]), &pts).unwrap(), 1.0);
        assert_eq!(metric_equivalence_constant(&chart(&["4", "0", "0", "1"]), &pts).unwrap(), 4.0);
        let poincare = chart(&["4/(1-x1^2-x2^2)^2", "0", "0", "4/(1-x1^2-x2^2)^2"]);
        let c = metric_equivalence_constant(&poincare, &SamplingPlan { radius: 0.9, ..SamplingPlan::default() }.ball_points(2, 0))
            .unwrap();
        assert!((c - (2.0f64 / 0.19).powi(2)).abs() < 1e-9, "{c}");
    }

    #[test]
    fn flat_derivative_bounds() {
        let c = chart(&["1", "0", "0", "1"]);
        let pts = SamplingPlan::default().ball_points(2, 0);
        assert_eq!(derivative_bounds(&c, Target::Metric, 3, &pts).unwrap(), 1.0);
        assert_eq!(derivative_bounds(&c, Target::Inverse, 3, &pts).unwrap(), 1.0);
        assert_eq!(derivative_bounds(&c, Target::Christoffel, 3, &pts).unwrap(), 0.0);
    }

    #[test]
    fn euclidean_report() {
        let d = catalog::euclidean(2, 2.0).unwrap();
        let r = regularity_report(&d, &ReportConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent, "{:?}", r.witness);
        assert_eq!(r.metric_equivalence.value, 1.0);
        assert!(r.metric_bounds.iter().all(|e| e.value <= 1.0));
        assert!(r.curvature_bounds.iter().all(|e| e.value == 0.0));
        assert_eq!(r.injectivity_lower, 1.0);
    }

    #[test]
    fn zero_budget_is_inconclusive() {
        let d = catalog::euclidean(1, 2.0).unwrap();
        let r = regularity_report(&d, &ReportConfig { budget: 0, ..ReportConfig::default() }).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.budget_exhausted);
    }

    #[test]
    fn divergence_detection() {
        let e = Estimate { quantity: "q".into(), by_level: vec![1.0, 3.9, 16.0], value: 16.0, trend: 16.0 / 3.9, argmax: None };
        assert_eq!(e.divergence(4.0, 1e-6), Some(2));
        let tiny = Estimate { quantity: "q".into(), by_level: vec![0.0, 1e-7], value: 1e-7, trend: 1.0, argmax: None };
        assert_eq!(tiny.divergence(4.0, 1e-6), None);
    }
}

//! Normalized atlases: charts onto the unit ball, transition maps between
//! neighbouring charts, and the combinatorial atlas conditions.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{eval_all, Expr};
use crate::jet::{eval_taylor, JetSpace};
use crate::linalg;
use crate::sampling::SamplingPlan;

pub type ChartId = usize;

/// Map from one chart into a neighbour, defined where every overlap
/// predicate is non-negative.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub to: ChartId,
    pub map: Vec<Expr>,
    pub overlap: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub id: ChartId,
    pub dim: usize,
    /// Row-major `dim × dim` pulled-back metric.
    pub metric: Vec<Expr>,
    pub transitions: Vec<Transition>,
    /// Whether the chart belongs to the tested window (cover checks and
    /// window-restricted sampling use only these charts).
    pub window: bool,
    /// Refinement depth: level `ℓ` of `L` samples charts with
    /// `depth · L ≤ max_depth · (ℓ + 1)`.
    pub depth: u32,
    /// Optional map from chart coordinates to model coordinates.
    pub model: Option<Vec<Expr>>,
}

impl Chart {
    pub fn new(id: ChartId, dim: usize, metric: Vec<Expr>) -> Chart {
        Chart { id, dim, metric, transitions: Vec::new(), window: true, depth: 0, model: None }
    }

    pub fn transition_to(&self, to: ChartId) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.to == to)
    }

    pub fn neighbors(&self) -> impl Iterator<Item = ChartId> + '_ {
        self.transitions.iter().map(|t| t.to)
    }

    pub fn metric_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(eval_all(&self.metric, x)?)
    }

    pub fn model_at(&self, x: &[f64]) -> Option<Result<Vec<f64>>> {
        self.model.as_ref().map(|m| eval_all(m, x).map_err(Error::from))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atlas {
    pub dim: usize,
    pub shrink_radius: f64,
    pub charts: Vec<Chart>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldDescriptor {
    pub name: String,
    pub atlas: Atlas,
    /// Declared orientation flag; recorded, not verified.
    pub oriented: bool,
    /// Description of the tested window for noncompact manifolds.
    pub window: String,
    pub notes: String,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointRef {
    pub chart: ChartId,
    pub x: Vec<f64>,
}

impl PointRef {
    pub fn new(chart: ChartId, x: Vec<f64>) -> PointRef {
        PointRef { chart, x }
    }
}

pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountWitness {
    pub value: usize,
    pub witness: Option<PointRef>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverCheck {
    pub covered: bool,
    pub samples: usize,
    pub witness: Option<PointRef>,
    /// Largest over samples of the smallest shrunken-chart radius reaching it.
    pub worst_radius: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Validation {
    pub checks: usize,
    pub issues: Vec<String>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    fn issue(&mut self, msg: String) {
        if self.issues.len() < 64 {
            self.issues.push(msg);
        }
    }
}

impl Atlas {
    pub fn chart(&self, id: ChartId) -> Result<&Chart> {
        self.charts.get(id).ok_or(Error::UnknownChart(id))
    }

    pub fn window_charts(&self) -> impl Iterator<Item = &Chart> + '_ {
        self.charts.iter().filter(|c| c.window)
    }

    pub fn max_depth(&self) -> u32 {
        self.charts.iter().map(|c| c.depth).max().unwrap_or(0)
    }

    /// Charts sampled at refinement `level` out of `levels`.
    pub fn charts_at_level(&self, level: usize, levels: usize, window_only: bool) -> Vec<ChartId> {
        let max = self.max_depth() as u64;
        let levels = levels.max(1) as u64;
        self.charts
            .iter()
            .filter(|c| (!window_only || c.window) && c.depth as u64 * levels <= max * (level as u64 + 1))
            .map(|c| c.id)
            .collect()
    }

    fn check_point(&self, chart: ChartId, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        if !(norm_sq(x) < 1.0) {
            return Err(Error::OutsideChart { chart, at: x.to_vec() });
        }
        Ok(())
    }

    /// `y = (φ_to ∘ ψ_from)(x)`.
    pub fn transition(&self, from: ChartId, to: ChartId, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(from, x)?;
        self.chart(to)?;
        if from == to {
            return Ok(x.to_vec());
        }
        let t = self.chart(from)?.transition_to(to).ok_or(Error::NotNeighbors { from, to })?;
        let outside = || Error::OutsideOverlap { from, to, at: x.to_vec() };
        for pred in &t.overlap {
            if pred.eval(x).map_err(|_| outside())? < 0.0 {
                return Err(outside());
            }
        }
        let y = eval_all(&t.map, x).map_err(|_| outside())?;
        if norm_sq(&y) > 1.0 + 1e-12 {
            return Err(outside());
        }
        Ok(y)
    }

    /// Coordinates of the point in `to` if that chart contains it.
    pub fn try_transition(&self, from: ChartId, to: ChartId, x: &[f64]) -> Option<Vec<f64>> {
        let y = self.transition(from, to, x).ok()?;
        (norm_sq(&y) < 1.0).then_some(y)
    }

    /// Transition value together with its Jacobian `∂y/∂x` (row-major).
    pub fn transition_jacobian(&self, from: ChartId, to: ChartId, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.dim;
        if from == to {
            let mut j = vec![0.0; m * m];
            (0..m).for_each(|i| j[i * m + i] = 1.0);
            return Ok((x.to_vec(), j));
        }
        let y = self.transition(from, to, x)?;
        let t = self.chart(from)?.transition_to(to).ok_or(Error::NotNeighbors { from, to })?;
        let space = JetSpace::new(m, 1);
        let mut jac = vec![0.0; m * m];
        for (i, e) in t.map.iter().enumerate() {
            let tay = eval_taylor(e, &space, 1, x)?;
            for v in 0..m {
                jac[i * m + v] = tay.coeffs()[space.unit(v)];
            }
        }
        Ok((y, jac))
    }

    /// All charts containing the point, with coordinates, the given chart first.
    pub fn locate(&self, p: &PointRef) -> Result<Vec<(ChartId, Vec<f64>)>> {
        self.check_point(p.chart, &p.x)?;
        let mut out = vec![(p.chart, p.x.clone())];
        for n in self.chart(p.chart)?.neighbors() {
            if let Some(y) = self.try_transition(p.chart, n, &p.x) {
                out.push((n, y));
            }
        }
        Ok(out)
    }

    /// The containing chart in which the point is deepest (smallest norm).
    pub fn deepest(&self, p: &PointRef) -> Result<(ChartId, Vec<f64>)> {
        let all = self.locate(p)?;
        Ok(all
            .into_iter()
            .min_by(|a, b| norm_sq(&a.1).total_cmp(&norm_sq(&b.1)))
            .expect("locate always returns the own chart"))
    }

    /// Sampled lower bound for the multiplicity `N`.
    pub fn multiplicity(&self, plan: &SamplingPlan, level: usize) -> CountWitness {
        let mut best = CountWitness { value: 0, witness: None };
        let pts = plan.ball_points(self.dim, level);
        for id in self.charts_at_level(level, plan.levels, false) {
            for x in &pts {
                let n = self.locate(&PointRef::new(id, x.clone())).map(|v| v.len()).unwrap_or(0);
                if n > best.value {
                    best = CountWitness { value: n, witness: Some(PointRef::new(id, x.clone())) };
                }
            }
        }
        best
    }

    /// Checks that every sampled point of every window chart lies in the
    /// `r`-shrunken image of some chart.
    pub fn shrink_cover_check(&self, plan: &SamplingPlan, level: usize) -> CoverCheck {
        let r = self.shrink_radius;
        let pts = plan.ball_points(self.dim, level);
        let mut out = CoverCheck { covered: true, samples: 0, witness: None, worst_radius: 0.0 };
        for id in self.charts_at_level(level, plan.levels, true) {
            for x in &pts {
                out.samples += 1;
                let best = match self.locate(&PointRef::new(id, x.clone())) {
                    Ok(v) => v.iter().map(|(_, y)| libm::sqrt(norm_sq(y))).fold(f64::INFINITY, f64::min),
                    Err(_) => f64::INFINITY,
                };
                out.worst_radius = out.worst_radius.max(best);
                if !(best < r) && out.covered {
                    out.covered = false;
                    out.witness = Some(PointRef::new(id, x.clone()));
                }
            }
        }
        out
    }

    /// Structural and sampled well-formedness checks.
    pub fn validate(&self, plan: &SamplingPlan) -> Validation {
        let mut v = Validation::default();
        let m = self.dim;
        if !(self.shrink_radius > 0.0 && self.shrink_radius < 1.0) {
            v.issue(format!("shrink radius {} is not in (0, 1)", self.shrink_radius));
        }
        for (i, c) in self.charts.iter().enumerate() {
            v.checks += 1;
            if c.id != i {
                v.issue(format!("chart at position {i} has id {}", c.id));
            }
            if c.dim != m || c.metric.len() != m * m {
                v.issue(format!("chart {i}: metric must be a {m}x{m} matrix"));
                continue;
            }
            if c.metric.iter().any(|e| e.arity() > m) {
                v.issue(format!("chart {i}: metric uses variables beyond x{m}"));
            }
            for t in &c.transitions {
                v.checks += 1;
                if t.to >= self.charts.len() {
                    v.issue(format!("chart {i}: transition to unknown chart {}", t.to));
                } else if self.charts[t.to].transition_to(i).is_none() {
                    v.issue(format!("neighbour relation not symmetric: {i} -> {} only", t.to));
                }
                if t.map.len() != m {
                    v.issue(format!("chart {i}: transition to {} has {} components", t.to, t.map.len()));
                }
            }
        }
        if !v.is_ok() {
            return v;
        }
        let pts = plan.ball_points(m, 0);
        for c in &self.charts {
            for x in &pts {
                v.checks += 1;
                let g = match c.metric_at(x) {
                    Ok(g) => g,
                    Err(e) => {
                        v.issue(format!("chart {}: metric not defined at {x:?}: {e}", c.id));
                        continue;
                    }
                };
                let scale = g.iter().fold(1.0f64, |s, a| s.max(a.abs()));
                for a in 0..m {
                    for b in 0..a {
                        if (g[a * m + b] - g[b * m + a]).abs() > 1e-12 * scale {
                            v.issue(format!("chart {}: metric not symmetric at {x:?}", c.id));
                        }
                    }
                }
                if linalg::cholesky(&g, m).is_err() {
                    v.issue(format!("chart {}: metric not positive definite at {x:?}", c.id));
                }
                for t in &c.transitions {
                    let Ok(y) = self.transition(c.id, t.to, x) else { continue };
                    v.checks += 1;
                    if norm_sq(&y) >= 1.0 {
                        continue;
                    }
                    match self.transition(t.to, c.id, &y) {
                        Ok(back) => {
                            let err = back.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                            if err > 1e-9 {
                                v.issue(format!(
                                    "round trip {} -> {} -> {} off by {err:e} at {x:?}",
                                    c.id, t.to, c.id
                                ));
                            }
                        }
                        Err(e) => v.issue(format!("reverse transition {} -> {} failed: {e}", t.to, c.id)),
                    }
                }
            }
        }
        v
    }
}

impl ManifoldDescriptor {
    pub fn dim(&self) -> usize {
        self.atlas.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn line_chart(id: ChartId, neighbors: &[(ChartId, f64)]) -> Chart {
        let mut c = Chart::new(id, 1, vec![Expr::Num(1.0)]);
        for &(to, offset) in neighbors {
            // y = x - offset, defined where |x - offset| <= 1
            c.transitions.push(Transition {
                to,
                map: vec![Expr::var(0) - offset],
                overlap: vec![1.0 - (Expr::var(0) - offset) * (Expr::var(0) - offset)],
            });
        }
        c
    }

    fn two_intervals() -> Atlas {
        Atlas {
            dim: 1,
            shrink_radius: 0.6,
            charts: vec![line_chart(0, &[(1, 1.0)]), line_chart(1, &[(0, -1.0)])],
        }
    }

    #[test]
    fn translated_interval_transition() {
        let a = two_intervals();
        let y = a.transition(0, 1, &[0.75]).unwrap();
        assert!((y[0] + 0.25).abs() < 1e-15);
        assert_eq!(a.transition(0, 0, &[0.3]).unwrap(), vec![0.3]);
        assert!(matches!(a.transition(0, 1, &[-0.5]), Err(Error::OutsideOverlap { .. })));
        assert!(a.validate(&SamplingPlan::default()).is_ok());
    }

    #[test]
    fn multiplicity_of_half_overlapping_intervals() {
        let a = two_intervals();
        assert_eq!(a.multiplicity(&SamplingPlan::default(), 0).value, 2);
        let single = Atlas { dim: 1, shrink_radius: 0.5, charts: vec![line_chart(0, &[])] };
        assert_eq!(single.multiplicity(&SamplingPlan::default(), 0).value, 1);
        let empty = Atlas { dim: 1, shrink_radius: 0.5, charts: vec![] };
        assert_eq!(empty.multiplicity(&SamplingPlan::default(), 0).value, 0);
    }

    #[test]
    fn single_chart_cover() {
        let single = Atlas { dim: 2, shrink_radius: 0.5, charts: vec![Chart::new(0, 2, identity(2))] };
        let plan = SamplingPlan { radius: 0.7, ..SamplingPlan::default() };
        let check = single.shrink_cover_check(&plan, 0);
        assert!(!check.covered);
        let w = check.witness.unwrap();
        assert!(libm::sqrt(norm_sq(&w.x)) >= 0.5);
        let inner = SamplingPlan { radius: 0.4, ..SamplingPlan::default() };
        assert!(single.shrink_cover_check(&inner, 0).covered);
    }

    #[test]
    fn validation_flags_asymmetric_neighbors_and_bad_metric() {
        let mut a = two_intervals();
        a.charts[1].transitions.clear();
        assert!(!a.validate(&SamplingPlan::default()).is_ok());
        let bad = Atlas {
            dim: 1,
            shrink_radius: 0.5,
            charts: vec![Chart::new(0, 1, vec![parse("x1", 1).unwrap()])],
        };
        assert!(!bad.validate(&SamplingPlan::default()).is_ok());
    }

    fn identity(m: usize) -> Vec<Expr> {
        (0..m * m).map(|k| Expr::Num(if k / m == k % m { 1.0 } else { 0.0 })).collect()
    }
}

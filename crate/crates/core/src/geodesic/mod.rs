//! Geodesics across charts and the estimates built on them: the uniform
//! existence bound, distances, normal charts and injectivity radius.

mod distance;
mod injectivity;
mod lemma;
mod normal;
pub mod ode;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::atlas::{norm_sq, Atlas, Chart, ChartId, PointRef};
use crate::error::{Error, Result};
use crate::jet::{eval_taylor, JetSpace, Taylor};
use crate::linalg;
use crate::tensor::{christoffel_jets, metric_inverse, metric_jet};

pub use distance::{distance_estimate, sandwich_check, DistanceEstimate, DistanceOptions, SandwichReport};
pub use injectivity::{injectivity_radius_estimate, InjectivityEstimate, InjectivityOptions};
pub use lemma::{alpha_1, christoffel_sup, lemma_existence_check, lemma_suite, lemma_tau_star, LemmaReport, LemmaSummary};
pub use normal::{normal_chart, orthonormal_frame, NormalChart};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Chart norm above which the state moves to a deeper neighbour.
    pub switch_threshold: f64,
    /// A switch requires the new chart norm to be smaller by this margin.
    pub hysteresis: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-9,
            atol: 1e-9,
            switch_threshold: 0.9,
            hysteresis: 0.05,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeodesicState {
    pub chart: ChartId,
    pub t: f64,
    pub c: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SwitchEvent {
    pub t: f64,
    pub from: ChartId,
    pub to: ChartId,
    pub det_jacobian: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Termination {
    TimeBudget,
    LeftAtlas,
    StepFailure,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeodesicPath {
    pub dim: usize,
    pub samples: Vec<GeodesicState>,
    pub switches: Vec<SwitchEvent>,
    pub termination: Termination,
}

impl GeodesicPath {
    pub fn last(&self) -> &GeodesicState {
        self.samples.last().expect("paths start with the initial state")
    }
}

/// Right-hand side of the geodesic system `(Ċ, Ż) = (Z, −Γ(C)[Z, Z])` for
/// Christoffel values in layout `[k][i][j]`.
pub fn geodesic_rhs(gamma: &[f64], z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = z.len();
    let acc = (0..m)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += gamma[(k * m + i) * m + j] * z[i] * z[j];
                }
            }
            -s
        })
        .collect();
    (z.to_vec(), acc)
}

/// Christoffel values and, when requested, their first derivatives
/// (layout `[l][k][i][j]` for `∂_l Γ^k_{ij}`).
pub(crate) fn local_christoffel(
    chart: &Chart,
    x: &[f64],
    space: &Arc<JetSpace>,
    with_derivatives: bool,
) -> Result<(Vec<f64>, Vec<f64>, Option<Vec<f64>>)> {
    let order = if with_derivatives { 2 } else { 1 };
    let g = metric_jet(chart, x, order, space)?;
    let ginv = metric_inverse(&g)?;
    let gamma = christoffel_jets(&g, &ginv)?;
    let values = gamma.iter().map(Taylor::value).collect();
    let derivs = with_derivatives.then(|| {
        let m = chart.dim;
        let mut d = Vec::with_capacity(m * gamma.len());
        for l in 0..m {
            let u = space.unit(l);
            d.extend(gamma.iter().map(|t| t.coeffs()[u]));
        }
        d
    });
    Ok((g.value(), values, derivs))
}

/// Chart-aware adaptive integrator for the geodesic system, optionally with
/// the variational (Jacobi) equations for the derivative with respect to the
/// initial velocity.
///
/// State layout: `[C (m), Z (m)]`, followed for the variational system by
/// `δC` and `δZ` as row-major `m × m` matrices whose columns are the
/// variations along each initial-velocity direction.
#[derive(Clone)]
pub struct Integrator<'a> {
    atlas: &'a Atlas,
    space: Arc<JetSpace>,
    variational: bool,
    pub chart: ChartId,
    pub t: f64,
    pub y: Vec<f64>,
    h: f64,
    steps: usize,
    pub ctrl: StepControl,
}

pub enum StepEvent {
    Advanced(Option<SwitchEvent>),
    Terminated(Termination),
}

impl<'a> Integrator<'a> {
    pub fn new(atlas: &'a Atlas, p: &PointRef, v: &[f64], ctrl: StepControl, variational: bool) -> Result<Self> {
        let m = atlas.dim;
        atlas.chart(p.chart)?;
        if p.x.len() != m || v.len() != m {
            return Err(Error::Dimension { expected: m, got: if p.x.len() != m { p.x.len() } else { v.len() } });
        }
        if !(norm_sq(&p.x) < 1.0) {
            return Err(Error::OutsideChart { chart: p.chart, at: p.x.clone() });
        }
        if v.iter().any(|a| !a.is_finite()) {
            return Err(Error::Invalid("initial velocity is not finite".into()));
        }
        let mut y = p.x.clone();
        y.extend_from_slice(v);
        if variational {
            y.extend(core::iter::repeat(0.0).take(m * m));
            y.extend((0..m * m).map(|k| if k / m == k % m { 1.0 } else { 0.0 }));
        }
        let space = JetSpace::new(m, if variational { 2 } else { 1 });
        let speed = libm::sqrt(norm_sq(v)).max(1e-3);
        Ok(Integrator {
            atlas,
            space,
            variational,
            chart: p.chart,
            t: 0.0,
            y,
            h: (0.01 / speed).min(ctrl.max_step),
            steps: 0,
            ctrl,
        })
    }

    pub fn dim(&self) -> usize {
        self.atlas.dim
    }

    pub fn position(&self) -> &[f64] {
        &self.y[..self.atlas.dim]
    }

    pub fn velocity(&self) -> &[f64] {
        let m = self.atlas.dim;
        &self.y[m..2 * m]
    }

    /// `δC`, the coordinate derivative of the position with respect to the
    /// initial velocity (variational integrators only).
    pub fn variation(&self) -> &[f64] {
        let m = self.atlas.dim;
        &self.y[2 * m..2 * m + m * m]
    }

    pub fn state(&self) -> GeodesicState {
        GeodesicState { chart: self.chart, t: self.t, c: self.position().to_vec(), z: self.velocity().to_vec() }
    }

    fn rhs(&self, chart: &Chart, y: &[f64], dy: &mut [f64]) -> bool {
        let m = self.atlas.dim;
        let c = &y[..m];
        if !(norm_sq(c) < 1.0) {
            return false;
        }
        let Ok((_, gamma, dgamma)) = local_christoffel(chart, c, &self.space, self.variational) else {
            return false;
        };
        let z = &y[m..2 * m];
        let (dc, dz) = geodesic_rhs(&gamma, z);
        dy[..m].copy_from_slice(&dc);
        dy[m..2 * m].copy_from_slice(&dz);
        if let Some(dg) = dgamma {
            let (vc, vz) = (&y[2 * m..2 * m + m * m], &y[2 * m + m * m..]);
            dy[2 * m..2 * m + m * m].copy_from_slice(vz);
            let out = &mut dy[2 * m + m * m..];
            for k in 0..m {
                for col in 0..m {
                    let mut s = 0.0;
                    for i in 0..m {
                        for j in 0..m {
                            let g = gamma[(k * m + i) * m + j];
                            s += 2.0 * g * z[i] * vz[j * m + col];
                            let zz = z[i] * z[j];
                            for l in 0..m {
                                s += dg[((l * m + k) * m + i) * m + j] * vc[l * m + col] * zz;
                            }
                        }
                    }
                    out[k * m + col] = -s;
                }
            }
        }
        true
    }

    /// Takes one accepted step without passing `t_end`, then switches charts
    /// if the position has moved close to the chart boundary.
    pub fn step(&mut self, t_end: f64) -> Result<StepEvent> {
        let chart = self.atlas.chart(self.chart)?;
        let (rtol, atol) = (self.ctrl.rtol, self.ctrl.atol);
        loop {
            let h = self.h.min(t_end - self.t).min(self.ctrl.max_step);
            if h <= 0.0 {
                return Ok(StepEvent::Terminated(Termination::TimeBudget));
            }
            let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| self.rhs(chart, y, dy);
            let trial = ode::try_step(&mut f, self.t, &self.y, h, rtol, atol);
            match trial {
                Some(tr) if tr.err <= 1.0 => {
                    let clipped = h < self.h;
                    self.t = if h == t_end - self.t { t_end } else { self.t + h };
                    self.y = tr.y;
                    let next = h * ode::step_factor(tr.err);
                    self.h = if clipped { self.h.max(next) } else { next };
                    break;
                }
                Some(tr) => self.h = h * ode::step_factor(tr.err).min(0.9),
                None => self.h = h * 0.5,
            }
            if self.h < 1e-12 * self.t.abs().max(1.0) {
                let r = libm::sqrt(norm_sq(self.position()));
                let reason = if r > self.ctrl.switch_threshold { Termination::LeftAtlas } else { Termination::StepFailure };
                return Ok(StepEvent::Terminated(reason));
            }
        }
        self.steps += 1;
        if self.steps > self.ctrl.max_steps {
            return Ok(StepEvent::Terminated(Termination::StepFailure));
        }
        Ok(StepEvent::Advanced(self.maybe_switch()?))
    }

    fn maybe_switch(&mut self) -> Result<Option<SwitchEvent>> {
        let m = self.atlas.dim;
        let r = libm::sqrt(norm_sq(self.position()));
        if r <= self.ctrl.switch_threshold {
            return Ok(None);
        }
        let here = self.position().to_vec();
        let chart = self.atlas.chart(self.chart)?;
        let best = chart
            .neighbors()
            .filter_map(|n| self.atlas.try_transition(self.chart, n, &here).map(|y| (n, y)))
            .min_by(|a, b| norm_sq(&a.1).total_cmp(&norm_sq(&b.1)));
        let Some((to, _)) = best.filter(|(_, y)| libm::sqrt(norm_sq(y)) + self.ctrl.hysteresis < r) else {
            return Ok(None);
        };
        let from = self.chart;
        let (y, jac) = self.atlas.transition_jacobian(from, to, &here)?;
        let det = linalg::det(&jac, m);
        if !(det.abs() > 1e-14) {
            return Err(Error::SingularJacobian { from, to });
        }
        let z = linalg::mat_vec(&jac, m, self.velocity());
        let mut next = y;
        next.extend_from_slice(&z);
        if self.variational {
            let t = chart.transition_to(to).ok_or(Error::NotNeighbors { from, to })?;
            // second derivatives H^a_{bc} of the transition
            let space = JetSpace::new(m, 2);
            let mut hess = vec![0.0; m * m * m];
            let mut e = vec![0u8; m];
            for (a, map) in t.map.iter().enumerate() {
                let tay = eval_taylor(map, &space, 2, &here)?;
                for b in 0..m {
                    for c in 0..m {
                        e.iter_mut().for_each(|v| *v = 0);
                        e[b] += 1;
                        e[c] += 1;
                        let k = space.index(&e).expect("degree two index");
                        hess[(a * m + b) * m + c] = tay.coeffs()[k] * space.factorial(k);
                    }
                }
            }
            let vc = &self.y[2 * m..2 * m + m * m];
            let vz = &self.y[2 * m + m * m..];
            let zc = self.velocity();
            let mut nvc = vec![0.0; m * m];
            let mut nvz = vec![0.0; m * m];
            for a in 0..m {
                for col in 0..m {
                    let mut sc = 0.0;
                    let mut sz = 0.0;
                    for b in 0..m {
                        sc += jac[a * m + b] * vc[b * m + col];
                        sz += jac[a * m + b] * vz[b * m + col];
                        for c in 0..m {
                            sz += hess[(a * m + b) * m + c] * zc[b] * vc[c * m + col];
                        }
                    }
                    nvc[a * m + col] = sc;
                    nvz[a * m + col] = sz;
                }
            }
            next.extend(nvc);
            next.extend(nvz);
        }
        self.y = next;
        self.chart = to;
        Ok(Some(SwitchEvent { t: self.t, from, to, det_jacobian: det }))
    }
}

/// Integrates the geodesic through `p` with initial velocity `v` up to time
/// `horizon`, switching charts near chart boundaries.
pub fn integrate_geodesic(atlas: &Atlas, p: &PointRef, v: &[f64], horizon: f64, ctrl: &StepControl) -> Result<GeodesicPath> {
    if !(horizon >= 0.0) {
        return Err(Error::Invalid("time horizon must be non-negative".into()));
    }
    let mut it = Integrator::new(atlas, p, v, *ctrl, false)?;
    let mut samples = vec![it.state()];
    let mut switches = Vec::new();
    let termination = loop {
        if it.t >= horizon {
            break Termination::TimeBudget;
        }
        match it.step(horizon)? {
            StepEvent::Advanced(sw) => {
                switches.extend(sw);
                samples.push(it.state());
            }
            StepEvent::Terminated(t) => break t,
        }
    };
    Ok(GeodesicPath { dim: atlas.dim, samples, switches, termination })
}

/// Riemannian speed `|Z|_g` of a state.
pub fn speed(atlas: &Atlas, s: &GeodesicState) -> Result<f64> {
    let g = atlas.chart(s.chart)?.metric_at(&s.c)?;
    Ok(libm::sqrt(linalg::quad_form(&g, atlas.dim, &s.z, &s.z).max(0.0)))
}

/// `max_t | |γ′(t)|_g − |γ′(0)|_g |` over the samples of a path.
pub fn speed_drift(path: &GeodesicPath, atlas: &Atlas) -> Result<f64> {
    let Some(first) = path.samples.first() else { return Ok(0.0) };
    let s0 = speed(atlas, first)?;
    let mut drift = 0.0f64;
    for s in &path.samples {
        drift = drift.max((speed(atlas, s)? - s0).abs());
    }
    Ok(drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Expr};

    fn single(dim: usize, entries: &[&str]) -> Atlas {
        let metric: Vec<Expr> = entries.iter().map(|s| parse(s, dim).unwrap()).collect();
        Atlas { dim, shrink_radius: 0.5, charts: vec![Chart::new(0, dim, metric)] }
    }

    #[test]
    fn rhs_examples() {
        let (_, acc) = geodesic_rhs(&[0.0; 8], &[1.0, 2.0]);
        assert_eq!(acc, [0.0, 0.0]);
        let a = single(2, &["4/(1 - (x1^2 + x2^2))^2", "0", "0", "4/(1 - (x1^2 + x2^2))^2"]);
        let space = JetSpace::new(2, 1);
        let (_, gamma, _) = local_christoffel(&a.charts[0], &[0.5, 0.0], &space, false).unwrap();
        let (_, acc) = geodesic_rhs(&gamma, &[1.0, 0.0]);
        assert!((acc[0] + 4.0 / 3.0).abs() < 1e-14 && acc[1].abs() < 1e-15);
        let (dc, acc) = geodesic_rhs(&gamma, &[0.0, 0.0]);
        assert_eq!((dc, acc), (vec![0.0, 0.0], vec![0.0, 0.0]));
    }

    #[test]
    fn euclidean_straight_line() {
        let a = single(2, &["1", "0", "0", "1"]);
        let path = integrate_geodesic(&a, &PointRef::new(0, vec![0.0, 0.0]), &[1.0, 0.0], 0.5, &StepControl::default()).unwrap();
        assert_eq!(path.termination, Termination::TimeBudget);
        let last = path.last();
        assert_eq!(last.t, 0.5);
        assert!((last.c[0] - 0.5).abs() < 1e-14 && last.c[1].abs() < 1e-15);
        assert!(path.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(speed_drift(&path, &a).unwrap(), 0.0);
    }

    #[test]
    fn leaving_a_single_chart() {
        let a = single(1, &["1"]);
        let path = integrate_geodesic(&a, &PointRef::new(0, vec![0.0]), &[1.0], 3.0, &StepControl::default()).unwrap();
        assert_eq!(path.termination, Termination::LeftAtlas);
        assert!(path.last().c[0] > 0.9 && path.last().c[0] < 1.0);
    }

    #[test]
    fn corrupted_path_drift() {
        let a = single(2, &["1", "0", "0", "1"]);
        let mut path =
            integrate_geodesic(&a, &PointRef::new(0, vec![0.0, 0.0]), &[0.6, 0.8], 0.5, &StepControl::default()).unwrap();
        let k = path.samples.len() / 2;
        path.samples[k].z.iter_mut().for_each(|v| *v *= 2.0);
        assert!((speed_drift(&path, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let a = single(1, &["1"]);
        let ctrl = StepControl::default();
        assert!(integrate_geodesic(&a, &PointRef::new(0, vec![1.5]), &[1.0], 1.0, &ctrl).is_err());
        assert!(integrate_geodesic(&a, &PointRef::new(0, vec![0.0]), &[f64::NAN], 1.0, &ctrl).is_err());
        assert!(integrate_geodesic(&a, &PointRef::new(3, vec![0.0]), &[1.0], 1.0, &ctrl).is_err());
    }
}

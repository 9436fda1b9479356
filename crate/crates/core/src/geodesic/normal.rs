//! Normal coordinates `ξ ↦ exp_p(Σ ξ_a e_a)` for a g-orthonormal frame at `p`.

use alloc::vec;
use alloc::vec::Vec;

use super::{Integrator, StepControl, StepEvent, Termination};
use crate::atlas::{norm_sq, Atlas, PointRef};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalChart {
    pub base: PointRef,
    /// Row-major `m × m`; column `a` holds the chart components of `e_a`.
    pub frame: Vec<f64>,
    pub radius: f64,
    pub ctrl: StepControl,
    /// Metric of the normal chart at grid points `(ξ, g_N(ξ))`.
    pub samples: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Gram–Schmidt on the coordinate basis with respect to `g`.
pub fn orthonormal_frame(g: &[f64], m: usize) -> Result<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        for e in &cols {
            let p = linalg::quad_form(g, m, &v, e);
            v.iter_mut().zip(e).for_each(|(a, b)| *a -= p * b);
        }
        let n = libm::sqrt(linalg::quad_form(g, m, &v, &v));
        if !(n > 1e-14) {
            return Err(linalg::LinalgError::NotPositiveDefinite.into());
        }
        v.iter_mut().for_each(|a| *a /= n);
        cols.push(v);
    }
    let mut out = vec![0.0; m * m];
    for (a, c) in cols.iter().enumerate() {
        for i in 0..m {
            out[i * m + a] = c[i];
        }
    }
    Ok(out)
}

impl NormalChart {
    pub fn dim(&self) -> usize {
        self.base.x.len()
    }

    /// `exp_p(Eξ)` together with `D = δC(1)·E`, the chart Jacobian of the
    /// exponential map in frame coordinates.
    pub fn exp(&self, atlas: &Atlas, xi: &[f64]) -> Result<(PointRef, Vec<f64>)> {
        let m = self.dim();
        if xi.len() != m {
            return Err(Error::Dimension { expected: m, got: xi.len() });
        }
        if libm::sqrt(norm_sq(xi)) > self.radius * (1.0 + 1e-12) {
            return Err(Error::Invalid("point lies outside the normal chart radius".into()));
        }
        let v = linalg::mat_vec(&self.frame, m, xi);
        let mut it = Integrator::new(atlas, &self.base, &v, self.ctrl, true)?;
        while it.t < 1.0 {
            match it.step(1.0)? {
                StepEvent::Advanced(_) | StepEvent::Terminated(Termination::TimeBudget) => {}
                StepEvent::Terminated(_) => {
                    return Err(Error::Invalid("geodesic left the atlas inside the normal chart radius".into()))
                }
            }
        }
        let dc = it.variation().to_vec();
        let mut d = vec![0.0; m * m];
        for i in 0..m {
            for a in 0..m {
                d[i * m + a] = (0..m).map(|b| dc[i * m + b] * self.frame[b * m + a]).sum();
            }
        }
        Ok((PointRef::new(it.chart, it.position().to_vec()), d))
    }

    /// `g_N(ξ) = Dᵀ G(exp_p(Eξ)) D`.
    pub fn metric(&self, atlas: &Atlas, xi: &[f64]) -> Result<Vec<f64>> {
        let m = self.dim();
        let (q, d) = self.exp(atlas, xi)?;
        let g = atlas.chart(q.chart)?.metric_at(&q.x)?;
        Ok(linalg::congruence(&g, &d, m))
    }
}

/// Normal chart of radius `radius` at `p`, with the metric tabulated on
/// `grid` sample points of the ball.
pub fn normal_chart(atlas: &Atlas, p: &PointRef, radius: f64, grid: usize, ctrl: &StepControl) -> Result<NormalChart> {
    let m = atlas.dim;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Invalid("normal chart radius must be positive".into()));
    }
    let g = atlas.chart(p.chart)?.metric_at(&p.x)?;
    let frame = orthonormal_frame(&g, m)?;
    let mut chart = NormalChart { base: p.clone(), frame, radius, ctrl: *ctrl, samples: Vec::new() };
    let plan = crate::sampling::SamplingPlan { base: grid, ..Default::default() };
    let mut points = vec![vec![0.0; m]];
    points.extend(plan.ball_halton(m, grid, radius));
    for xi in points.into_iter().take(grid.max(1)) {
        let gn = chart.metric(atlas, &xi)?;
        chart.samples.push((xi, gn));
    }
    Ok(chart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::Chart;
    use crate::expr::parse;

    #[test]
    fn frame_is_orthonormal() {
        let g = [4.0, 1.0, 1.0, 2.0];
        let e = orthonormal_frame(&g, 2).unwrap();
        let gram = linalg::congruence(&g, &e, 2);
        for i in 0..2 {
            for j in 0..2 {
                assert!((gram[i * 2 + j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn flat_normal_chart_is_identity() {
        let metric = ["1", "0", "0", "1"].iter().map(|s| parse(s, 2).unwrap()).collect();
        let atlas = Atlas { dim: 2, shrink_radius: 0.5, charts: vec![Chart::new(0, 2, metric)] };
        let nc = normal_chart(&atlas, &PointRef::new(0, vec![0.1, 0.0]), 0.3, 5, &StepControl::default()).unwrap();
        assert_eq!(nc.samples.len(), 5);
        for (_, g) in &nc.samples {
            for (a, b) in g.iter().zip([1.0, 0.0, 0.0, 1.0]) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

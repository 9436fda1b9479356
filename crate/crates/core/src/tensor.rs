//! Coordinate tensor calculus on jets: inverse metric, Christoffel symbols,
//! the curvature tensor, covariant derivatives of arbitrary valence and the
//! induced bundle norms.
//!
//! Component arrays are dense and row-major with all upper indices first,
//! then lower indices. Covariant differentiation appends the new lower index
//! last, so `∇^k R` has layout `[l][i][j][k][r₁]…[r_k]`. The curvature
//! convention is `R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l` with
//! `R^l_{ijk} = ∂_iΓ^l_{jk} − ∂_jΓ^l_{ik} + Γ^r_{jk}Γ^l_{ir} − Γ^r_{ik}Γ^l_{jr}`,
//! and the lowered tensor is `Rm_{abcd} = ⟨R(∂_a, ∂_b)∂_c, ∂_d⟩`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::atlas::Chart;
use crate::error::{Error, Result};
use crate::jet::{eval_taylor, JetSpace, Taylor};
use crate::linalg;

/// Metric components with coordinate jets at one point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub dim: usize,
    pub space: Arc<JetSpace>,
    /// Row-major `dim × dim` entries, all of the same order.
    pub entries: Vec<Taylor>,
}

impl MetricJet {
    pub fn order(&self) -> usize {
        self.entries[0].order()
    }

    pub fn value(&self) -> Vec<f64> {
        self.entries.iter().map(Taylor::value).collect()
    }

    /// `∂^α g_ij` for the multi-index `alpha`.
    pub fn derivative(&self, i: usize, j: usize, alpha: &[u8]) -> Option<f64> {
        let k = self.space.index(alpha)?;
        let t = &self.entries[i * self.dim + j];
        (k < t.coeffs().len()).then(|| t.coeffs()[k] * self.space.factorial(k))
    }

    /// Largest `|∂^α g_ij|` over entries and `|α| = degree`.
    pub fn max_derivative(&self, degree: usize) -> f64 {
        max_derivative(&self.space, &self.entries, degree)
    }
}

/// Largest `|∂^α f|` with `|α| = degree` over a list of series.
pub fn max_derivative(space: &JetSpace, entries: &[Taylor], degree: usize) -> f64 {
    let (lo, hi) = (if degree == 0 { 0 } else { space.len(degree - 1) }, space.len(degree));
    let mut best = 0.0f64;
    for t in entries {
        if t.order() < degree {
            continue;
        }
        for k in lo..hi {
            best = best.max((t.coeffs()[k] * space.factorial(k)).abs());
        }
    }
    best
}

/// Pulled-back metric of `chart` at `x` with jets to `order`.
pub fn pullback_metric(chart: &Chart, x: &[f64], order: usize) -> Result<MetricJet> {
    let space = JetSpace::new(chart.dim, order);
    metric_jet(chart, x, order, &space)
}

/// Like [`pullback_metric`] but reusing a prepared jet space.
pub fn metric_jet(chart: &Chart, x: &[f64], order: usize, space: &Arc<JetSpace>) -> Result<MetricJet> {
    let m = chart.dim;
    if x.len() != m {
        return Err(Error::Dimension { expected: m, got: x.len() });
    }
    let mut entries: Vec<Taylor> = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            if j < i {
                let t: Taylor = entries[j * m + i].clone();
                entries.push(t);
            } else {
                entries.push(eval_taylor(&chart.metric[i * m + j], space, order, x)?);
            }
        }
    }
    let g = MetricJet { dim: m, space: space.clone(), entries };
    if linalg::cholesky(&g.value(), m).is_err() {
        return Err(Error::NotPositiveDefinite { chart: chart.id, at: x.to_vec() });
    }
    Ok(g)
}

fn constant_matrix(space: &JetSpace, order: usize, a: &[f64]) -> Vec<Taylor> {
    a.iter().map(|&v| space.constant(order, v)).collect()
}

/// Product of two `m × m` matrices of series.
pub fn mat_mul(space: &JetSpace, a: &[Taylor], b: &[Taylor], m: usize) -> Vec<Taylor> {
    let order = a[0].order().min(b[0].order());
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let mut s = space.constant(order, 0.0);
            for k in 0..m {
                space.mul_add(&mut s, 1.0, &a[i * m + k], &b[k * m + j]);
            }
            out.push(s);
        }
    }
    out
}

/// Contravariant metric with jets, by the Neumann series
/// `G⁻¹ = Σ_n (−A H)^n A` with `A = G(x)⁻¹` and `H = G − G(x)`.
pub fn metric_inverse(g: &MetricJet) -> Result<MetricJet> {
    let (m, space) = (g.dim, &g.space);
    let order = g.order();
    let a = linalg::spd_inverse(&g.value(), m)?;
    let mut h: Vec<Taylor> = g.entries.clone();
    h.iter_mut().for_each(|t| t.coeffs_mut()[0] = 0.0);
    // −A·H is a constant matrix times series
    let mut ah = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let mut s = space.constant(order, 0.0);
            for k in 0..m {
                s.add_scaled(-a[i * m + k], &h[k * m + j]);
            }
            ah.push(s);
        }
    }
    let mut term = constant_matrix(space, order, &a);
    let mut sum = term.clone();
    for _ in 0..order {
        term = mat_mul(space, &ah, &term, m);
        for (s, t) in sum.iter_mut().zip(&term) {
            s.add_scaled(1.0, t);
        }
    }
    // symmetrize against round-off
    for i in 0..m {
        for j in 0..i {
            let mut avg = sum[i * m + j].clone();
            avg.add_scaled(1.0, &sum[j * m + i]);
            let avg = avg.scale(0.5);
            sum[i * m + j] = avg.clone();
            sum[j * m + i] = avg;
        }
    }
    Ok(MetricJet { dim: m, space: space.clone(), entries: sum })
}

/// `Γ^k_{ij}` at layout `[k][i][j]`, with jets one order below the metric.
pub fn christoffel_jets(g: &MetricJet, ginv: &MetricJet) -> Result<Vec<Taylor>> {
    let (m, space) = (g.dim, &g.space);
    if g.order() == 0 {
        return Err(Error::InsufficientOrder { needed: 1, got: 0 });
    }
    let order = g.order() - 1;
    // dg[v][a*m+b] = ∂_v g_ab
    let dg: Vec<Vec<Taylor>> = (0..m)
        .map(|v| g.entries.iter().map(|t| space.deriv(t, v)).collect())
        .collect();
    // first kind Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let mut first = Vec::with_capacity(m * m * m);
    for l in 0..m {
        for i in 0..m {
            for j in 0..m {
                let mut t = dg[i][j * m + l].clone();
                t.add_scaled(1.0, &dg[j][i * m + l]);
                t.add_scaled(-1.0, &dg[l][i * m + j]);
                first.push(t.scale(0.5));
            }
        }
    }
    let mut out: Vec<Taylor> = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                if j < i {
                    let t = out[k * m * m + j * m + i].clone();
                    out.push(t);
                    continue;
                }
                let mut s = space.constant(order, 0.0);
                for l in 0..m {
                    space.mul_add(&mut s, 1.0, &ginv.entries[k * m + l], &first[l * m * m + i * m + j]);
                }
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// Jets of a `(upper, lower)`-tensor field at a point.
#[derive(Clone, Debug)]
pub struct TensorJet {
    pub dim: usize,
    pub upper: usize,
    pub lower: usize,
    pub comps: Vec<Taylor>,
}

/// Components of a `(upper, lower)`-tensor at a point.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TensorComponents {
    pub dim: usize,
    pub upper: usize,
    pub lower: usize,
    pub data: Vec<f64>,
}

impl TensorJet {
    pub fn order(&self) -> usize {
        self.comps[0].order()
    }

    pub fn value(&self) -> TensorComponents {
        TensorComponents {
            dim: self.dim,
            upper: self.upper,
            lower: self.lower,
            data: self.comps.iter().map(Taylor::value).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.upper + self.lower
    }
}

impl TensorComponents {
    pub fn rank(&self) -> usize {
        self.upper + self.lower
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Component at the multi-index `idx` (upper indices first).
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[flat(idx, self.dim)]
    }
}

fn flat(idx: &[usize], m: usize) -> usize {
    idx.iter().fold(0, |k, &i| k * m + i)
}

/// Curvature tensor `R^l_{ijk}` (layout `[l][i][j][k]`) with jets one order
/// below the Christoffel symbols.
pub fn riemann_jet(space: &JetSpace, gamma: &[Taylor], m: usize) -> Result<TensorJet> {
    if gamma[0].order() == 0 {
        return Err(Error::InsufficientOrder { needed: 2, got: 1 });
    }
    let order = gamma[0].order() - 1;
    let g = |k: usize, i: usize, j: usize| &gamma[k * m * m + i * m + j];
    let dgamma: Vec<Vec<Taylor>> = (0..m)
        .map(|v| gamma.iter().map(|t| space.deriv(t, v)).collect())
        .collect();
    let dg = |v: usize, k: usize, i: usize, j: usize| &dgamma[v][k * m * m + i * m + j];
    let mut comps = Vec::with_capacity(m * m * m * m);
    for l in 0..m {
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let mut t = dg(i, l, j, k).clone();
                    t.add_scaled(-1.0, dg(j, l, i, k));
                    for r in 0..m {
                        space.mul_add(&mut t, 1.0, g(r, j, k), g(l, i, r));
                        space.mul_add(&mut t, -1.0, g(r, i, k), g(l, j, r));
                    }
                    debug_assert_eq!(t.order(), order);
                    comps.push(t);
                }
            }
        }
    }
    Ok(TensorJet { dim: m, upper: 1, lower: 3, comps })
}

/// `∇a` for a tensor field given by jets; the derivative index is appended
/// as the last lower index and the result has one order less.
pub fn covariant_derivative(space: &JetSpace, a: &TensorJet, gamma: &[Taylor]) -> Result<TensorJet> {
    let m = a.dim;
    if a.order() == 0 {
        return Err(Error::InsufficientOrder { needed: 1, got: 0 });
    }
    let n = a.rank();
    let order = (a.order() - 1).min(gamma[0].order());
    let count = m.pow(n as u32);
    let strides: Vec<usize> = (0..n).map(|s| m.pow((n - 1 - s) as u32)).collect();
    let mut comps = Vec::with_capacity(count * m);
    let mut idx = vec![0usize; n];
    for flat_in in 0..count {
        let mut rem = flat_in;
        for s in 0..n {
            idx[s] = rem / strides[s];
            rem %= strides[s];
        }
        for r in 0..m {
            let mut t = space.deriv(&a.comps[flat_in], r).truncated(order);
            for s in 0..n {
                let base = flat_in - idx[s] * strides[s];
                for l in 0..m {
                    let other = &a.comps[base + l * strides[s]];
                    if s < a.upper {
                        space.mul_add(&mut t, 1.0, &gamma[idx[s] * m * m + r * m + l], other);
                    } else {
                        space.mul_add(&mut t, -1.0, &gamma[l * m * m + r * m + idx[s]], other);
                    }
                }
            }
            comps.push(t);
        }
    }
    Ok(TensorJet { dim: m, upper: a.upper, lower: a.lower + 1, comps })
}

/// Induced norm `|a|_g = (g_{(i)(ĩ)} g^{(j)(j̃)} a^{(i)}_{(j)} a^{(ĩ)}_{(j̃)})^{1/2}`.
pub fn bundle_norm(a: &TensorComponents, g: &[f64], ginv: &[f64]) -> Result<f64> {
    let m = a.dim;
    let n = a.rank();
    if a.data.len() != m.pow(n as u32) || g.len() != m * m || ginv.len() != m * m {
        return Err(Error::Valence("component count does not match valence and dimension"));
    }
    let mut b = a.data.clone();
    let mut tmp = vec![0.0; b.len()];
    for s in 0..n {
        let stride = m.pow((n - 1 - s) as u32);
        let mat = if s < a.upper { g } else { ginv };
        for (k, out) in tmp.iter_mut().enumerate() {
            let i = (k / stride) % m;
            let base = k - i * stride;
            *out = (0..m).map(|l| mat[i * m + l] * b[base + l * stride]).sum();
        }
        core::mem::swap(&mut b, &mut tmp);
    }
    let sq: f64 = a.data.iter().zip(&b).map(|(x, y)| x * y).sum();
    Ok(libm::sqrt(sq.max(0.0)))
}

/// Curvature quantities at a point.
#[derive(Clone, Debug)]
pub struct CurvatureAtPoint {
    pub dim: usize,
    pub metric: Vec<f64>,
    pub inverse: Vec<f64>,
    /// `R^l_{ijk}`, valence (1, 3).
    pub riemann: TensorComponents,
    /// `Rm_{abcd} = g_{ds} R^s_{abc}`.
    pub lowered: Vec<f64>,
    pub ricci: Vec<f64>,
    pub scalar: f64,
}

impl CurvatureAtPoint {
    pub fn from_riemann(riemann: TensorComponents, metric: Vec<f64>, inverse: Vec<f64>) -> Self {
        let m = riemann.dim;
        let r = &riemann.data;
        let at = |l: usize, i: usize, j: usize, k: usize| r[((l * m + i) * m + j) * m + k];
        let mut lowered = vec![0.0; m * m * m * m];
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        lowered[((a * m + b) * m + c) * m + d] =
                            (0..m).map(|s| metric[d * m + s] * at(s, a, b, c)).sum();
                    }
                }
            }
        }
        let mut ricci = vec![0.0; m * m];
        for b in 0..m {
            for c in 0..m {
                ricci[b * m + c] = (0..m).map(|a| at(a, a, b, c)).sum();
            }
        }
        let scalar = (0..m * m).map(|k| inverse[k] * ricci[k]).sum();
        CurvatureAtPoint { dim: m, metric, inverse, riemann, lowered, ricci, scalar }
    }

    pub fn lowered_at(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let m = self.dim;
        self.lowered[((a * m + b) * m + c) * m + d]
    }

    pub fn sectional(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        sectional_curvature(&self.lowered, &self.metric, u, v)
    }

    pub fn norm(&self) -> Result<f64> {
        bundle_norm(&self.riemann, &self.metric, &self.inverse)
    }
}

/// `K(u, v) = Rm(u, v, v, u) / (|u|²|v|² − ⟨u, v⟩²)`.
pub fn sectional_curvature(lowered: &[f64], g: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
    let m = u.len();
    if v.len() != m || g.len() != m * m || lowered.len() != m * m * m * m {
        return Err(Error::Valence("vectors, metric and curvature dimensions differ"));
    }
    let uu = linalg::quad_form(g, m, u, u);
    let vv = linalg::quad_form(g, m, v, v);
    let uv = linalg::quad_form(g, m, u, v);
    let den = uu * vv - uv * uv;
    if den < 1e-12 * (uu * vv).max(1e-300) || den < 1e-300 {
        return Err(Error::DegeneratePlane(den));
    }
    let mut num = 0.0;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    num += lowered[((a * m + b) * m + c) * m + d] * u[a] * v[b] * v[c] * u[d];
                }
            }
        }
    }
    Ok(num / den)
}

/// Everything derived from the metric jets at one point.
#[derive(Clone, Debug)]
pub struct LocalGeometry {
    pub metric: MetricJet,
    pub inverse: MetricJet,
    /// `Γ^k_{ij}`, layout `[k][i][j]`, one order below the metric.
    pub christoffel: Vec<Taylor>,
    /// `∇^k R` for `k = 0, 1, …` while jets remain.
    pub nabla_r: Vec<TensorJet>,
}

impl LocalGeometry {
    /// Builds the geometry from metric jets of `order`; curvature and its
    /// covariant derivatives are formed when `with_curvature` is set and the
    /// order is at least 2.
    pub fn new(chart: &Chart, x: &[f64], order: usize, space: &Arc<JetSpace>, with_curvature: bool) -> Result<Self> {
        let metric = metric_jet(chart, x, order, space)?;
        Self::from_metric(metric, with_curvature)
    }

    pub fn from_metric(metric: MetricJet, with_curvature: bool) -> Result<Self> {
        let inverse = metric_inverse(&metric)?;
        let christoffel = if metric.order() >= 1 {
            christoffel_jets(&metric, &inverse)?
        } else {
            Vec::new()
        };
        let mut nabla_r = Vec::new();
        if with_curvature && metric.order() >= 2 {
            let space = metric.space.clone();
            let mut cur = riemann_jet(&space, &christoffel, metric.dim)?;
            while cur.order() > 0 {
                let next = covariant_derivative(&space, &cur, &christoffel)?;
                nabla_r.push(cur);
                cur = next;
            }
            nabla_r.push(cur);
        }
        Ok(LocalGeometry { metric, inverse, christoffel, nabla_r })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim
    }

    pub fn christoffel_values(&self) -> Vec<f64> {
        self.christoffel.iter().map(Taylor::value).collect()
    }

    pub fn curvature(&self) -> Result<CurvatureAtPoint> {
        let r = self.nabla_r.first().ok_or(Error::InsufficientOrder { needed: 2, got: self.metric.order() })?;
        Ok(CurvatureAtPoint::from_riemann(r.value(), self.metric.value(), self.inverse.value()))
    }

    /// `∇^k R` at the point, valence `(1, 3 + k)`.
    pub fn nabla_k_r(&self, k: usize) -> Result<TensorComponents> {
        self.nabla_r
            .get(k)
            .map(TensorJet::value)
            .ok_or(Error::InsufficientOrder { needed: k + 2, got: self.metric.order() })
    }

    pub fn nabla_k_r_norm(&self, k: usize) -> Result<f64> {
        bundle_norm(&self.nabla_k_r(k)?, &self.metric.value(), &self.inverse.value())
    }
}

/// Christoffel symbols with jets to `jet_order`.
pub fn christoffel(chart: &Chart, x: &[f64], jet_order: usize) -> Result<(Arc<JetSpace>, Vec<Taylor>)> {
    let space = JetSpace::new(chart.dim, jet_order + 1);
    let g = metric_jet(chart, x, jet_order + 1, &space)?;
    let ginv = metric_inverse(&g)?;
    Ok((space, christoffel_jets(&g, &ginv)?))
}

/// Christoffel values `[k][i][j]` and the metric at `x`.
pub fn christoffel_at(chart: &Chart, x: &[f64], space: &Arc<JetSpace>) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = metric_jet(chart, x, 1, space)?;
    let ginv = metric_inverse(&g)?;
    let gamma = christoffel_jets(&g, &ginv)?;
    Ok((g.value(), gamma.iter().map(Taylor::value).collect()))
}

pub fn curvature(chart: &Chart, x: &[f64]) -> Result<CurvatureAtPoint> {
    let space = JetSpace::new(chart.dim, 2);
    LocalGeometry::new(chart, x, 2, &space, true)?.curvature()
}

/// `∇^k R` at `x`.
pub fn nabla_k_r(chart: &Chart, x: &[f64], k: usize) -> Result<TensorComponents> {
    if k + 2 > crate::jet::MAX_JET_ORDER {
        return Err(Error::Jet(crate::jet::JetError::OrderOverflow {
            requested: k + 2,
            max: crate::jet::MAX_JET_ORDER,
        }));
    }
    let space = JetSpace::new(chart.dim, k + 2);
    LocalGeometry::new(chart, x, k + 2, &space, true)?.nabla_k_r(k)
}

/// Wraps the metric itself as a `(0, 2)` tensor jet.
pub fn metric_tensor(g: &MetricJet) -> TensorJet {
    TensorJet { dim: g.dim, upper: 0, lower: 2, comps: g.entries.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Expr};

    fn chart(dim: usize, entries: &[&str]) -> Chart {
        Chart::new(0, dim, entries.iter().map(|s| parse(s, dim).unwrap()).collect())
    }

    fn poincare2() -> Chart {
        let f = "4/(1 - (x1^2 + x2^2))^2";
        chart(2, &[f, "0", "0", f])
    }

    fn polar_sphere() -> Chart {
        chart(2, &["1", "0", "0", "sin(x1)^2"])
    }

    #[test]
    fn poincare_metric_and_inverse() {
        let g = pullback_metric(&poincare2(), &[0.5, 0.0], 2).unwrap();
        let v = g.value();
        assert!((v[0] - 64.0 / 9.0).abs() < 1e-13 && v[1] == 0.0);
        let inv = metric_inverse(&g).unwrap().value();
        assert!((inv[0] - 9.0 / 64.0).abs() < 1e-15 && (inv[3] - 9.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_inverse() {
        let c = chart(2, &["4", "0", "0", "0.25"]);
        let inv = metric_inverse(&pullback_metric(&c, &[0.0, 0.0], 1).unwrap()).unwrap();
        assert_eq!(inv.value(), [0.25, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn christoffel_examples() {
        let (_, g) = christoffel(&poincare2(), &[0.5, 0.0], 0).unwrap();
        // Γ¹₁₁ = 2x1/(1 − |x|²) = 4/3
        assert!((g[0].value() - 4.0 / 3.0).abs() < 1e-14);
        let (_, s) = christoffel(&polar_sphere(), &[core::f64::consts::FRAC_PI_4, 0.3], 0).unwrap();
        // Γ¹₂₂ = −sin θ cos θ
        assert!((s[3].value() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn sphere_curvature_constants() {
        let c = curvature(&polar_sphere(), &[0.9, 0.2]).unwrap();
        let k = c.sectional(&[1.0, 0.0], &[0.3, 1.0]).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
        assert!((c.scalar - 2.0).abs() < 1e-12);
        // |R|² = 2K²m(m−1) = 4
        assert!((c.norm().unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(c.sectional(&[1.0, 0.0], &[2.0, 0.0]), Err(Error::DegeneratePlane(_))));
    }

    #[test]
    fn bundle_norm_examples() {
        let id = [1.0, 0.0, 0.0, 1.0];
        let unit = TensorComponents { dim: 2, upper: 0, lower: 1, data: vec![1.0, 0.0] };
        assert_eq!(bundle_norm(&unit, &id, &id).unwrap(), 1.0);
        let ident = TensorComponents { dim: 3, upper: 1, lower: 1, data: vec![1., 0., 0., 0., 1., 0., 0., 0., 1.] };
        let id3 = [1., 0., 0., 0., 1., 0., 0., 0., 1.];
        assert!((bundle_norm(&ident, &id3, &id3).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        // covector dx¹ under G = c·I has norm c^{-1/2}
        let c = 4.0;
        let g = [c, 0.0, 0.0, c];
        let gi = [1.0 / c, 0.0, 0.0, 1.0 / c];
        assert!((bundle_norm(&unit, &g, &gi).unwrap() - 0.5).abs() < 1e-15);
        let bad = TensorComponents { dim: 2, upper: 1, lower: 1, data: vec![1.0] };
        assert!(bundle_norm(&bad, &id, &id).is_err());
    }

    #[test]
    fn metric_is_parallel() {
        let c = poincare2();
        let space = JetSpace::new(2, 3);
        let geo = LocalGeometry::new(&c, &[0.3, -0.4], 3, &space, false).unwrap();
        let dg = covariant_derivative(&space, &metric_tensor(&geo.metric), &geo.christoffel).unwrap();
        assert!(dg.value().max_abs() < 1e-12);
    }

    #[test]
    fn gradient_of_scalar() {
        let space = JetSpace::new(2, 2);
        let f = eval_taylor(&parse("x1^2*x2", 2).unwrap(), &space, 2, &[1.0, 2.0]).unwrap();
        let scalar = TensorJet { dim: 2, upper: 0, lower: 0, comps: vec![f] };
        let geo = LocalGeometry::new(&poincare2(), &[1.0 / 3.0, 0.1], 2, &space, false).unwrap();
        let grad = covariant_derivative(&space, &scalar, &geo.christoffel).unwrap().value();
        assert_eq!(grad.data, vec![4.0, 1.0]);
    }

    #[test]
    fn euclidean_is_flat() {
        let c = Chart::new(0, 3, (0..9).map(|k| Expr::Num(if k % 4 == 0 { 1.0 } else { 0.0 })).collect());
        let r = nabla_k_r(&c, &[0.1, 0.2, 0.3], 2).unwrap();
        assert_eq!(r.data.len(), 3usize.pow(6));
        assert!(r.max_abs() == 0.0);
    }
}

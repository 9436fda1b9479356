//! Built-in manifold descriptors.
//!
//! Every entry comes with its own atlas construction:
//!
//! - `euclidean`: translated unit-ball charts on a square lattice of spacing
//!   `min(1, 1.4/√m)`; windowed to `[−W, W]^m`.
//! - `sphere`: two stereographic charts with coordinates scaled by
//!   `1/2.5`, so each chart reaches past the equator.
//! - `poincare_ball`: charts `x ↦ c ⊕ (x/2)` (Möbius addition) centred at the
//!   origin and on a ring of centres; every chart carries the same metric.
//! - `poincare_model`: the single global chart of the ball model.
//! - `funnel`: charts `(t, θ) = (t₀ + x₁, θ₀ + x₂/t₀^α)` on rings `t₀`.
//! - `corner`: log coordinates `(a, θ, σ) = (ln t, θ, ln s)` with charts
//!   `(a₀ + x₁, θ₀ + x₂, σ₀ + e^{a₀} x₃)`, windowed to `t ≥ t_min`.
//! - `b_manifold`: charts in `(ln t, θ)`, where the metric is flat.
//!
//! Model coordinates are `(t, θ)` or `(t, θ, s)` for the funnel, corner and
//! b-manifold, global coordinates for Euclidean space, the embedding in
//! `R^{m+1}` for spheres and ball coordinates for the Poincaré ball.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::atlas::{Atlas, Chart, ManifoldDescriptor, Transition};
use crate::error::{Error, Result};
use crate::expr::{eval_all, Expr};
use crate::regularity::Verdict;
use crate::sampling::SamplingPlan;

pub const SPHERE_SCALE: f64 = 2.5;
pub const POINCARE_SCALE: f64 = 0.5;
const FUNNEL_STEP: f64 = 0.6;
const CORNER_STEP: f64 = 0.7;

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    /// Verdict the default report is expected to reach on this atlas.
    pub expected: Verdict,
    build: fn() -> Result<ManifoldDescriptor>,
}

impl CatalogEntry {
    pub fn build(&self) -> Result<ManifoldDescriptor> {
        (self.build)()
    }
}

macro_rules! entry {
    ($name:expr, $desc:expr, $verdict:ident, $build:expr) => {
        CatalogEntry { name: $name, description: $desc, expected: Verdict::$verdict, build: $build }
    };
}

pub fn entries() -> Vec<CatalogEntry> {
    vec![
        entry!("euclidean1", "R^1 on [-2, 2]", Consistent, || euclidean(1, 2.0)),
        entry!("euclidean2", "R^2 on [-2, 2]^2", Consistent, || euclidean(2, 2.0)),
        entry!("euclidean3", "R^3 on [-1, 1]^3", Consistent, || euclidean(3, 1.0)),
        entry!("sphere1", "unit circle, two stereographic charts", Consistent, || sphere(1)),
        entry!("sphere2", "unit 2-sphere, two stereographic charts", Consistent, || sphere(2)),
        entry!("sphere3", "unit 3-sphere, two stereographic charts", Consistent, || sphere(3)),
        entry!("poincare2", "hyperbolic plane, Mobius-translated charts", Consistent, || poincare_ball(2)),
        entry!("poincare3", "hyperbolic 3-space, Mobius-translated charts", Consistent, || poincare_ball(3)),
        entry!("poincare-model2", "hyperbolic plane, single global ball chart", Inconsistent, || poincare_model(2)),
        entry!("funnel0", "funnel with R(t) = 1 (cylinder), t in [2, 4]", Consistent, || funnel(0.0, 4.0)),
        entry!("funnel-half", "funnel with R(t) = t^(1/2), t in [2, 4]", Consistent, || funnel(0.5, 4.0)),
        entry!("funnel1", "funnel with R(t) = t (cone), t in [2, 4]", Consistent, || funnel(1.0, 4.0)),
        entry!("corner-stretched", "stretched corner over the circle, t >= 1e-3", Consistent, || corner(true, 1e-3)),
        entry!("corner-unstretched", "corner over the circle, t >= 1e-3", Inconsistent, || corner(false, 1e-3)),
        entry!("corner-rescaled", "unstretched corner divided by (ts)^2", Consistent, || {
            rescale_singular(&corner(false, 1e-3)?, &crate::expr::parse("x1*x3", 3).expect("literal"), Coordinates::Model)
        }),
        entry!("b-manifold", "cylinder with b-metric (dt/t)^2 + dtheta^2, t in [1e-3, 1]", Consistent, || b_manifold(1e-3)),
        entry!("torus", "flat torus S^1 x S^1", Consistent, || product(&sphere(1)?, &sphere(1)?)),
        entry!("sphere2xsphere2", "product of unit 2-spheres", Consistent, || product(&sphere(2)?, &sphere(2)?)),
        entry!("euclidean2-rotated", "R^2 pulled back by a rotation", Consistent, || {
            let (f, g) = rotation_2d(0.7);
            pullback(&euclidean(2, 2.0)?, &f, &g)
        }),
        entry!("sphere2-rotated", "unit 2-sphere pulled back by a rotation", Consistent, || {
            let (f, g) = rotation_2d(0.7);
            pullback(&sphere(2)?, &f, &g)
        }),
    ]
}

pub fn by_name(name: &str) -> Option<CatalogEntry> {
    entries().into_iter().find(|e| e.name == name)
}

pub fn names() -> Vec<&'static str> {
    entries().iter().map(|e| e.name).collect()
}

/// Rotation of the plane by `angle` and its inverse, in chart coordinates.
pub fn rotation_2d(angle: f64) -> (Vec<Expr>, Vec<Expr>) {
    let (c, s) = (libm::cos(angle), libm::sin(angle));
    let rot = |c: f64, s: f64| vec![c * x(0) - s * x(1), s * x(0) + c * x(1)];
    (rot(c, s), rot(c, -s))
}

fn x(i: usize) -> Expr {
    Expr::var(i)
}

fn n(v: f64) -> Expr {
    Expr::num(v)
}

fn vars(m: usize) -> Vec<Expr> {
    (0..m).map(x).collect()
}

fn scalar_metric(m: usize, f: Expr) -> Vec<Expr> {
    (0..m * m).map(|k| if k / m == k % m { f.clone() } else { n(0.0) }).collect()
}

fn diag_metric(d: Vec<Expr>) -> Vec<Expr> {
    let m = d.len();
    (0..m * m).map(|k| if k / m == k % m { d[k / m].clone() } else { n(0.0) }).collect()
}

fn atlas(dim: usize, shrink_radius: f64, charts: Vec<Chart>) -> Atlas {
    Atlas { dim, shrink_radius, charts }
}

fn descriptor(name: String, atlas: Atlas, window: String, notes: &str) -> ManifoldDescriptor {
    ManifoldDescriptor { name, atlas, oriented: true, window, notes: notes.into() }
}

/// Euclidean space on the window `[−W, W]^m`.
pub fn euclidean(m: usize, w: f64) -> Result<ManifoldDescriptor> {
    if !(1..=4).contains(&m) {
        return Err(Error::Invalid(format!("euclidean dimension {m} is not in 1..=4")));
    }
    if !(w >= 1.0) {
        return Err(Error::Invalid("window half-width must be at least 1".into()));
    }
    let s = (1.4 / libm::sqrt(m as f64)).min(1.0);
    let k_max = libm::floor(w / s + 1e-9) as i64;
    let side = (2 * k_max + 1) as usize;
    let count = side.pow(m as u32);
    let key = |mut id: usize| -> Vec<i64> {
        let mut k = vec![0i64; m];
        for slot in k.iter_mut() {
            *slot = (id % side) as i64 - k_max;
            id /= side;
        }
        k
    };
    let reach = libm::ceil(2.0 / s) as i64;
    let mut charts = Vec::with_capacity(count);
    for id in 0..count {
        let k = key(id);
        let c: Vec<f64> = k.iter().map(|&v| v as f64 * s).collect();
        let mut chart = Chart::new(id, m, scalar_metric(m, n(1.0)));
        chart.window = c.iter().all(|v| v.abs() <= w - 1.0 + 1e-9);
        chart.model = Some((0..m).map(|i| x(i) + c[i]).collect());
        for other in 0..count {
            let k2 = key(other);
            if other == id || k.iter().zip(&k2).any(|(a, b)| (a - b).abs() > reach) {
                continue;
            }
            let d: Vec<f64> = k.iter().zip(&k2).map(|(a, b)| (a - b) as f64 * s).collect();
            if d.iter().map(|v| v * v).sum::<f64>() >= 4.0 {
                continue;
            }
            chart.transitions.push(Transition { to: other, map: (0..m).map(|i| x(i) + d[i]).collect(), overlap: vec![] });
        }
        charts.push(chart);
    }
    let r = if m == 1 { 0.6 } else { 0.75 };
    Ok(descriptor(
        format!("euclidean{m}"),
        atlas(m, r, charts),
        format!("[-{w}, {w}]^{m}"),
        "translated unit-ball charts with identity metric",
    ))
}

/// Unit sphere `S^m` with two stereographic charts.
pub fn sphere(m: usize) -> Result<ManifoldDescriptor> {
    if !(1..=3).contains(&m) {
        return Err(Error::Invalid(format!("sphere dimension {m} is not in 1..=3")));
    }
    let r2 = SPHERE_SCALE * SPHERE_SCALE;
    let q = Expr::norm_sq(&vars(m));
    let metric = scalar_metric(m, n(4.0 * r2) / (n(1.0) + n(r2) * q.clone()).powf(2.0));
    let inversion: Vec<Expr> = (0..m).map(|i| x(i) / (n(r2) * q.clone())).collect();
    let overlap = vec![n(r2 * r2) * q.clone() - n(1.0)];
    let uq = n(r2) * q.clone();
    let model = |sign: f64| -> Vec<Expr> {
        let mut out: Vec<Expr> = (0..m).map(|i| n(2.0 * SPHERE_SCALE) * x(i) / (n(1.0) + uq.clone())).collect();
        out.push(n(sign) * (n(1.0) - uq.clone()) / (n(1.0) + uq.clone()));
        out
    };
    let mut charts = Vec::new();
    for (id, sign) in [(0usize, 1.0), (1, -1.0)] {
        let mut c = Chart::new(id, m, metric.clone());
        c.model = Some(model(sign));
        c.transitions.push(Transition { to: 1 - id, map: inversion.clone(), overlap: overlap.clone() });
        charts.push(c);
    }
    Ok(descriptor(
        format!("sphere{m}"),
        atlas(m, 0.6, charts),
        "compact".into(),
        "stereographic charts from the south (chart 0) and north (chart 1) poles, coordinates scaled by 1/2.5",
    ))
}

/// `a ⊕ b` in the Poincaré ball.
pub fn mobius_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let ab: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let na: f64 = a.iter().map(|v| v * v).sum();
    let nb: f64 = b.iter().map(|v| v * v).sum();
    let den = 1.0 + 2.0 * ab + na * nb;
    a.iter().zip(b).map(|(p, q)| ((1.0 + 2.0 * ab + nb) * p + (1.0 - na) * q) / den).collect()
}

fn mobius_add_expr(a: &[f64], y: &[Expr]) -> Vec<Expr> {
    let na: f64 = a.iter().map(|v| v * v).sum();
    let ay = a.iter().zip(y).fold(n(0.0), |acc, (p, q)| acc + *p * q.clone());
    let ny = Expr::norm_sq(y);
    let num_a = n(1.0) + n(2.0) * ay.clone() + ny.clone();
    let den = n(1.0) + n(2.0) * ay + n(na) * ny;
    a.iter().zip(y).map(|(p, q)| (*p * num_a.clone() + (1.0 - na) * q.clone()) / den.clone()).collect()
}

fn poincare_centers(m: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; m]];
    if m == 2 {
        let e = libm::tanh(0.45);
        for k in 0..6 {
            let a = 2.0 * PI * k as f64 / 6.0;
            out.push(vec![e * libm::cos(a), e * libm::sin(a)]);
        }
    } else {
        let e = libm::tanh(0.4);
        let phi = 0.5 * (1.0 + libm::sqrt(5.0));
        let norm = libm::sqrt(1.0 + phi * phi);
        for a in [-1.0, 1.0] {
            for b in [-phi, phi] {
                for v in [[0.0, a, b], [a, b, 0.0], [b, 0.0, a]] {
                    out.push(v.iter().map(|c| e * c / norm).collect());
                }
            }
        }
    }
    out
}

/// Poincaré ball `B^m` with charts `x ↦ c ⊕ (x/2)`.
pub fn poincare_ball(m: usize) -> Result<ManifoldDescriptor> {
    if !(2..=3).contains(&m) {
        return Err(Error::Invalid(format!("poincare dimension {m} is not in 2..=3")));
    }
    let s = POINCARE_SCALE;
    let centers = poincare_centers(m);
    let metric = scalar_metric(m, n(4.0 * s * s) / (n(1.0) - n(s * s) * Expr::norm_sq(&vars(m))).powf(2.0));
    let scaled: Vec<Expr> = (0..m).map(|i| s * x(i)).collect();
    let mut charts = Vec::new();
    for (id, c) in centers.iter().enumerate() {
        let mut chart = Chart::new(id, m, metric.clone());
        chart.window = id == 0;
        chart.depth = u32::from(id != 0);
        chart.model = Some(mobius_add_expr(c, &scaled));
        for (to, c2) in centers.iter().enumerate() {
            if to == id {
                continue;
            }
            // (−c₂) ⊕ (c ⊕ y) = d ⊕ gyr[−c₂, c] y
            let neg: Vec<f64> = c2.iter().map(|v| -v).collect();
            let d = mobius_add(&neg, c);
            let gyr: Vec<Vec<f64>> = (0..m)
                .map(|j| {
                    let mut e = vec![0.0; m];
                    e[j] = 0.5;
                    let w = mobius_add(&neg, &mobius_add(c, &e));
                    let nd: Vec<f64> = d.iter().map(|v| -v).collect();
                    mobius_add(&nd, &w).into_iter().map(|v| v / 0.5).collect()
                })
                .collect();
            let y: Vec<Expr> = (0..m)
                .map(|i| (0..m).fold(n(0.0), |acc, j| acc + (gyr[j][i] * s) * x(j)))
                .collect();
            let map = mobius_add_expr(&d, &y).into_iter().map(|e| e / s).collect();
            chart.transitions.push(Transition { to, map, overlap: vec![] });
        }
        charts.push(chart);
    }
    Ok(descriptor(
        format!("poincare{m}"),
        atlas(m, 0.75, charts),
        "chart 0 (hyperbolic radius ln 3 about the origin)".into(),
        "charts are Mobius translates of the ball of Euclidean radius 1/2, so all carry the same metric",
    ))
}

/// The ball model `(B^m, 4|dx|²/(1 − |x|²)²)` as a single chart.
pub fn poincare_model(m: usize) -> Result<ManifoldDescriptor> {
    if !(2..=3).contains(&m) {
        return Err(Error::Invalid(format!("poincare dimension {m} is not in 2..=3")));
    }
    let metric = scalar_metric(m, n(4.0) / (n(1.0) - Expr::norm_sq(&vars(m))).powf(2.0));
    let mut chart = Chart::new(0, m, metric);
    chart.model = Some(vars(m));
    Ok(descriptor(
        format!("poincare-model{m}"),
        atlas(m, 0.9, vec![chart]),
        "whole ball".into(),
        "global model chart; not a uniformly regular atlas",
    ))
}

fn wrap(a: f64) -> f64 {
    let t = libm::fmod(a + PI, 2.0 * PI);
    (if t < 0.0 { t + 2.0 * PI } else { t }) - PI
}

struct Affine {
    offset: Vec<f64>,
    scale: Vec<f64>,
    angular: Option<usize>,
}

/// Charts given by diagonal affine maps into model coordinates, with one
/// optional periodic coordinate. Neighbours are the charts whose coordinate
/// boxes intersect.
fn affine_charts(maps: &[Affine], metric: impl Fn(&Affine) -> Vec<Expr>, model: impl Fn(&Affine) -> Vec<Expr>) -> Vec<Chart> {
    let m = maps[0].offset.len();
    let mut charts = Vec::with_capacity(maps.len());
    for (id, a) in maps.iter().enumerate() {
        let mut chart = Chart::new(id, m, metric(a));
        chart.model = Some(model(a));
        for (to, b) in maps.iter().enumerate() {
            if to == id {
                continue;
            }
            let delta: Vec<f64> = (0..m)
                .map(|i| {
                    let d = a.offset[i] - b.offset[i];
                    if a.angular == Some(i) {
                        wrap(d)
                    } else {
                        d
                    }
                })
                .collect();
            if (0..m).any(|i| delta[i].abs() >= a.scale[i] + b.scale[i]) {
                continue;
            }
            let map = (0..m).map(|i| (a.scale[i] * x(i) + delta[i]) / b.scale[i]).collect();
            chart.transitions.push(Transition { to, map, overlap: vec![] });
        }
        charts.push(chart);
    }
    charts
}

/// Surface of revolution `{(t, t^α y) : y ∈ S¹}` on the window `t ∈ [2, t_max]`.
pub fn funnel(alpha: f64, t_max: f64) -> Result<ManifoldDescriptor> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Invalid("funnel exponent must lie in [0, 1]".into()));
    }
    if !(t_max >= 2.0) {
        return Err(Error::Invalid("funnel window must end at t >= 2".into()));
    }
    let mut maps = Vec::new();
    let mut window = Vec::new();
    let mut depth = Vec::new();
    let rings = libm::ceil((t_max - 2.0) / FUNNEL_STEP) as i32;
    for j in -1..=rings + 1 {
        let t0 = 2.0 + FUNNEL_STEP * j as f64;
        let radius = libm::pow(t0, alpha);
        let count = libm::ceil(2.0 * PI * radius / FUNNEL_STEP) as usize;
        for k in 0..count {
            let theta = 2.0 * PI * k as f64 / count as f64;
            maps.push(Affine { offset: vec![t0, theta], scale: vec![1.0, 1.0 / radius], angular: Some(1) });
            window.push((0..=rings).contains(&j) && t0 <= t_max + 1e-9);
            depth.push(j.max(0) as u32);
        }
    }
    let metric = |a: &Affine| {
        let t = x(0) + a.offset[0];
        let t0a = libm::pow(a.offset[0], 2.0 * alpha);
        diag_metric(vec![
            n(1.0) + n(alpha * alpha) * t.clone().powf(2.0 * alpha - 2.0),
            t.powf(2.0 * alpha) / t0a,
        ])
    };
    let model = |a: &Affine| vec![x(0) + a.offset[0], x(1) * a.scale[1] + a.offset[1]];
    let mut charts = affine_charts(&maps, metric, model);
    for (c, (w, d)) in charts.iter_mut().zip(window.into_iter().zip(depth)) {
        c.window = w;
        c.depth = d;
    }
    Ok(descriptor(
        format!("funnel(alpha={alpha})"),
        atlas(2, 0.75, charts),
        format!("t in [2, {t_max}]"),
        "charts (t, theta) = (t0 + x1, theta0 + x2 / t0^alpha); model coordinates (t, theta)",
    ))
}

/// Corner `C(S¹)` in log coordinates on the window `t ≥ t_min`. The stretched
/// metric is `(dt/t)² + dθ² + (ds/(ts))²`, the unstretched one
/// `s²dt² + (ts)²dθ² + ds²`.
pub fn corner(stretched: bool, t_min: f64) -> Result<ManifoldDescriptor> {
    if !(t_min > 0.0 && t_min < 1.0) {
        return Err(Error::Invalid("t_min must lie in (0, 1)".into()));
    }
    let levels = libm::ceil(-libm::log(t_min) / CORNER_STEP) as i32;
    let n_theta = libm::ceil(2.0 * PI / CORNER_STEP) as usize;
    let sigma_c = -1.0;
    let mut maps = Vec::new();
    let mut window = Vec::new();
    let mut depth = Vec::new();
    for j in -1..=levels + 1 {
        let a0 = -CORNER_STEP * j as f64;
        let w = libm::exp(a0);
        for k in 0..n_theta {
            let theta = 2.0 * PI * k as f64 / n_theta as f64;
            for l in [-1i32, 0, 1] {
                let sigma0 = sigma_c + CORNER_STEP * w * l as f64;
                maps.push(Affine { offset: vec![a0, theta, sigma0], scale: vec![1.0, 1.0, w], angular: Some(1) });
                window.push(l == 0 && (0..=levels).contains(&j));
                depth.push(j.clamp(0, levels) as u32);
            }
        }
    }
    let metric = |a: &Affine| {
        let base = diag_metric(vec![n(1.0), n(1.0), (n(-2.0) * x(0)).exp()]);
        if stretched {
            base
        } else {
            // (ts)² = exp(2(a + σ))
            let log_ts = x(0) + a.offset[0] + a.scale[2] * x(2) + a.offset[2];
            let f = (n(2.0) * log_ts).exp();
            base.into_iter().map(|e| if e == Expr::Num(0.0) { e } else { f.clone() * e }).collect()
        }
    };
    let model = |a: &Affine| {
        vec![(x(0) + a.offset[0]).exp(), x(1) + a.offset[1], (a.scale[2] * x(2) + a.offset[2]).exp()]
    };
    let mut charts = affine_charts(&maps, metric, model);
    for (c, (w, d)) in charts.iter_mut().zip(window.into_iter().zip(depth)) {
        c.window = w;
        c.depth = d;
    }
    let kind = if stretched { "stretched" } else { "unstretched" };
    Ok(descriptor(
        format!("corner-{kind}"),
        atlas(3, 0.75, charts),
        format!("t in [{t_min:e}, 1], s near e^-1"),
        "charts (ln t, theta, ln s) = (a0 + x1, theta0 + x2, sigma0 + e^a0 x3); model coordinates (t, theta, s)",
    ))
}

/// Cylinder `(0, 1] × S¹` with the b-metric `(dt/t)² + dθ²`, windowed to
/// `t ≥ t_min`.
pub fn b_manifold(t_min: f64) -> Result<ManifoldDescriptor> {
    if !(t_min > 0.0 && t_min < 1.0) {
        return Err(Error::Invalid("t_min must lie in (0, 1)".into()));
    }
    let levels = libm::ceil(-libm::log(t_min) / FUNNEL_STEP) as i32;
    let n_theta = libm::ceil(2.0 * PI / FUNNEL_STEP) as usize;
    let mut maps = Vec::new();
    let mut window = Vec::new();
    let mut depth = Vec::new();
    for j in -1..=levels + 1 {
        let s0 = -FUNNEL_STEP * j as f64;
        for k in 0..n_theta {
            let theta = 2.0 * PI * k as f64 / n_theta as f64;
            maps.push(Affine { offset: vec![s0, theta], scale: vec![1.0, 1.0], angular: Some(1) });
            window.push((0..=levels).contains(&j));
            depth.push(j.clamp(0, levels) as u32);
        }
    }
    let metric = |_: &Affine| scalar_metric(2, n(1.0));
    let model = |a: &Affine| vec![(x(0) + a.offset[0]).exp(), x(1) + a.offset[1]];
    let mut charts = affine_charts(&maps, metric, model);
    for (c, (w, d)) in charts.iter_mut().zip(window.into_iter().zip(depth)) {
        c.window = w;
        c.depth = d;
    }
    Ok(descriptor(
        "b-manifold".into(),
        atlas(2, 0.75, charts),
        format!("t in [{t_min:e}, 1]"),
        "charts (ln t, theta) = (s0 + x1, theta0 + x2); model coordinates (t, theta)",
    ))
}

fn shift_vars(e: &Expr, offset: usize, arity: usize) -> Expr {
    let vals: Vec<Expr> = (0..arity).map(|i| x(i + offset)).collect();
    e.substitute(&vals)
}

/// Riemannian product with product charts and block-diagonal metric.
pub fn product(a: &ManifoldDescriptor, b: &ManifoldDescriptor) -> Result<ManifoldDescriptor> {
    let (ma, mb) = (a.atlas.dim, b.atlas.dim);
    let m = ma + mb;
    if m > 4 {
        return Err(Error::Invalid(format!("product dimension {m} exceeds 4")));
    }
    let r = libm::sqrt(a.atlas.shrink_radius * a.atlas.shrink_radius + b.atlas.shrink_radius * b.atlas.shrink_radius);
    if !(r < 1.0) {
        return Err(Error::Invalid(format!("product shrink radius {r:.3} is not below 1")));
    }
    let nb = b.atlas.charts.len();
    let id = |i: usize, j: usize| i * nb + j;
    let mut charts = Vec::new();
    for ca in &a.atlas.charts {
        for cb in &b.atlas.charts {
            let mut metric = vec![n(0.0); m * m];
            for i in 0..ma {
                for j in 0..ma {
                    metric[i * m + j] = ca.metric[i * ma + j].clone();
                }
            }
            for i in 0..mb {
                for j in 0..mb {
                    metric[(ma + i) * m + ma + j] = shift_vars(&cb.metric[i * mb + j], ma, mb);
                }
            }
            let mut chart = Chart::new(id(ca.id, cb.id), m, metric);
            chart.window = ca.window && cb.window;
            chart.depth = ca.depth.max(cb.depth);
            chart.model = match (&ca.model, &cb.model) {
                (Some(pa), Some(pb)) => Some(pa.iter().cloned().chain(pb.iter().map(|e| shift_vars(e, ma, mb))).collect()),
                _ => None,
            };
            let own_a = [Transition { to: ca.id, map: vars(ma), overlap: vec![] }];
            let own_b = [Transition { to: cb.id, map: vars(mb), overlap: vec![] }];
            for ta in own_a.iter().chain(&ca.transitions) {
                for tb in own_b.iter().chain(&cb.transitions) {
                    if ta.to == ca.id && tb.to == cb.id {
                        continue;
                    }
                    let map: Vec<Expr> =
                        ta.map.iter().cloned().chain(tb.map.iter().map(|e| shift_vars(e, ma, mb))).collect();
                    let overlap =
                        ta.overlap.iter().cloned().chain(tb.overlap.iter().map(|e| shift_vars(e, ma, mb))).collect();
                    chart.transitions.push(Transition { to: id(ta.to, tb.to), map, overlap });
                }
            }
            charts.push(chart);
        }
    }
    Ok(descriptor(
        format!("{}x{}", a.name, b.name),
        atlas(m, r, charts),
        format!("({}) x ({})", a.window, b.window),
        "product charts with block-diagonal metric",
    ))
}

/// Reparametrizes every chart by `f` (given in chart coordinates, with
/// inverse `f_inv`): the metric becomes `Jᵀ G(f(x)) J`, transitions become
/// `f⁻¹ ∘ T ∘ f`.
pub fn pullback(mfd: &ManifoldDescriptor, f: &[Expr], f_inv: &[Expr]) -> Result<ManifoldDescriptor> {
    let m = mfd.atlas.dim;
    if f.len() != m || f_inv.len() != m {
        return Err(Error::Dimension { expected: m, got: f.len().min(f_inv.len()) });
    }
    if f.iter().chain(f_inv).any(|e| e.arity() > m) {
        return Err(Error::Invalid("diffeomorphism refers to variables beyond the dimension".into()));
    }
    for p in SamplingPlan::default().ball_points(m, 1) {
        let y = eval_all(f, &p)?;
        let back = eval_all(f_inv, &y)?;
        let err = back.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !(err <= 1e-8) {
            return Err(Error::Invalid(format!("inverse does not undo the map at {p:?} (error {err:e})")));
        }
    }
    let jac: Vec<Expr> = (0..m * m).map(|k| f[k / m].diff(k % m)).collect();
    let mut out = mfd.clone();
    for chart in &mut out.atlas.charts {
        let g: Vec<Expr> = chart.metric.iter().map(|e| e.substitute(f)).collect();
        chart.metric = (0..m * m)
            .map(|k| {
                let (i, j) = (k / m, k % m);
                let mut s = n(0.0);
                for a in 0..m {
                    for b in 0..m {
                        s = s + jac[a * m + i].clone() * g[a * m + b].clone() * jac[b * m + j].clone();
                    }
                }
                s
            })
            .collect();
        if let Some(model) = &mut chart.model {
            *model = model.iter().map(|e| e.substitute(f)).collect();
        }
        for t in &mut chart.transitions {
            t.map = f_inv.iter().map(|e| e.substitute(&t.map.iter().map(|c| c.substitute(f)).collect::<Vec<_>>())).collect();
            t.overlap = t.overlap.iter().map(|e| e.substitute(f)).collect();
        }
    }
    out.name = format!("{}-pullback", mfd.name);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Coordinates {
    /// Variables refer to each chart's model coordinates.
    Model,
    /// Variables refer to chart coordinates.
    Chart,
}

/// Divides the metric by `ρ²` for a positive function `ρ`.
pub fn rescale_singular(mfd: &ManifoldDescriptor, rho: &Expr, coords: Coordinates) -> Result<ManifoldDescriptor> {
    let m = mfd.atlas.dim;
    let mut out = mfd.clone();
    let pts = SamplingPlan::default().ball_points(m, 0);
    for chart in &mut out.atlas.charts {
        let rho_k = match coords {
            Coordinates::Chart => {
                if rho.arity() > m {
                    return Err(Error::Invalid("rho refers to variables beyond the dimension".into()));
                }
                rho.clone()
            }
            Coordinates::Model => {
                let model = chart.model.as_ref().ok_or_else(|| Error::Invalid(format!("chart {} has no model map", chart.id)))?;
                if rho.arity() > model.len() {
                    return Err(Error::Invalid("rho refers to variables beyond the model dimension".into()));
                }
                rho.substitute(model)
            }
        };
        for p in &pts {
            let v = rho_k.eval(p)?;
            if !(v > 0.0) {
                return Err(Error::Invalid(format!("rho = {v} is not positive in chart {} at {p:?}", chart.id)));
            }
        }
        let inv = n(1.0) / (rho_k.clone() * rho_k);
        chart.metric = chart.metric.iter().map(|e| if *e == Expr::Num(0.0) { e.clone() } else { e.clone() * inv.clone() }).collect();
    }
    out.name = format!("{}-rescaled", mfd.name);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{norm_sq, PointRef};

    #[test]
    fn euclidean_line_layout() {
        let d = euclidean(1, 2.0).unwrap();
        assert_eq!(d.atlas.charts.len(), 5);
        assert_eq!(d.atlas.multiplicity(&SamplingPlan::default(), 1).value, 2);
        assert!(d.atlas.validate(&SamplingPlan::default()).is_ok());
    }

    #[test]
    fn raw_stereographic_inversion() {
        // u ↦ u/|u|² before scaling sends (0.5, 0) to (2, 0)
        let u = [0.5f64, 0.0];
        let q = norm_sq(&u);
        assert_eq!([u[0] / q, u[1] / q], [2.0, 0.0]);
        let d = sphere(2).unwrap();
        let y = d.atlas.transition(0, 1, &[0.5 / SPHERE_SCALE, 0.0]).unwrap();
        assert!((y[0] - 2.0 / SPHERE_SCALE).abs() < 1e-15);
    }

    #[test]
    fn mobius_inverse() {
        let a = [0.3, -0.2];
        let b = [0.1, 0.5];
        let back = mobius_add(&[-0.3, 0.2], &mobius_add(&a, &b));
        assert!((back[0] - b[0]).abs() < 1e-15 && (back[1] - b[1]).abs() < 1e-15);
    }

    #[test]
    fn every_entry_validates_and_covers() {
        let plan = SamplingPlan { levels: 1, ..SamplingPlan::default() };
        for e in entries() {
            let d = e.build().unwrap();
            let v = d.atlas.validate(&plan);
            assert!(v.is_ok(), "{}: {:?}", e.name, &v.issues[..v.issues.len().min(3)]);
            let cover = d.atlas.shrink_cover_check(&plan, 0);
            assert_eq!(cover.covered, e.name != "poincare-model2", "{}: {:?}", e.name, cover.witness);
        }
    }

    #[test]
    fn poincare_models_agree_across_charts() {
        let d = poincare_ball(2).unwrap();
        let a = &d.atlas;
        let p = PointRef::new(0, vec![0.6, 0.3]);
        for (c, y) in a.locate(&p).unwrap() {
            let m0 = a.charts[0].model_at(&p.x).unwrap().unwrap();
            let m1 = a.charts[c].model_at(&y).unwrap().unwrap();
            assert!((m0[0] - m1[0]).abs() < 1e-12 && (m0[1] - m1[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_by_constant() {
        let d = euclidean(2, 2.0).unwrap();
        let r = rescale_singular(&d, &Expr::num(2.0), Coordinates::Chart).unwrap();
        assert_eq!(r.atlas.charts[0].metric_at(&[0.1, 0.2]).unwrap(), vec![0.25, 0.0, 0.0, 0.25]);
        assert!(rescale_singular(&d, &Expr::num(-1.0), Coordinates::Chart).is_err());
        let same = rescale_singular(&d, &Expr::num(1.0), Coordinates::Chart).unwrap();
        assert_eq!(same.atlas.charts[3].metric_at(&[0.1, 0.2]).unwrap(), vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn anisotropic_pullback() {
        let d = euclidean(2, 2.0).unwrap();
        let f = vec![2.0 * x(0), x(1)];
        let g = vec![0.5 * x(0), x(1)];
        let p = pullback(&d, &f, &g).unwrap();
        assert_eq!(p.atlas.charts[0].metric_at(&[0.3, 0.1]).unwrap(), vec![4.0, 0.0, 0.0, 1.0]);
        assert!(pullback(&d, &f, &f).is_err());
    }
}

//! TOML manifold descriptors.
//!
//! ```toml
//! name = "flat-strip"
//! dim = 2
//! shrink_radius = 0.75
//! window = "x in [0, 1]"      # optional
//!
//! [[chart]]
//! id = 0
//! metric = ["1", "0", "0", "1"]   # row-major, or the diagonal only
//! model = ["x1", "x2"]            # optional
//! window = true                   # optional, default true
//! depth = 0                       # optional
//!
//! [[chart.transition]]
//! to = 1
//! map = ["x1 - 1", "x2"]
//! overlap = ["x1"]                # optional, each must be >= 0
//! ```
//!
//! Expressions use the variables `x1 … x{dim}`, the operators `+ - * / ^`
//! and the functions `sqrt sin cos exp log tanh abs`.

use serde::{Deserialize, Serialize};
use ureg_core::atlas::{Atlas, Chart, ManifoldDescriptor, Transition};
use ureg_core::expr::{parse, Expr, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum DescriptorError {
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error("chart {chart}, {field}: {error}")]
    Expr { chart: usize, field: String, error: ParseError },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {error}")]
    Io { path: String, error: std::io::Error },
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

fn is_zero(d: &u32) -> bool {
    *d == 0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorFile {
    pub name: String,
    pub dim: usize,
    pub shrink_radius: f64,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub oriented: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub window: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
    #[serde(rename = "chart")]
    pub charts: Vec<ChartFile>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChartFile {
    pub id: usize,
    pub metric: Vec<String>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub window: bool,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub depth: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Vec<String>>,
    #[serde(default, rename = "transition", skip_serializing_if = "Vec::is_empty")]
    pub transitions: Vec<TransitionFile>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionFile {
    pub to: usize,
    pub map: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overlap: Vec<String>,
}

fn exprs(chart: usize, field: &str, texts: &[String], dim: usize) -> Result<Vec<Expr>, DescriptorError> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            parse(t, dim).map_err(|error| DescriptorError::Expr { chart, field: format!("{field}[{i}]"), error })
        })
        .collect()
}

impl DescriptorFile {
    pub fn into_descriptor(self) -> Result<ManifoldDescriptor, DescriptorError> {
        let m = self.dim;
        if !(1..=4).contains(&m) {
            return Err(DescriptorError::Invalid(format!("dim = {m} is not in 1..=4")));
        }
        if !(self.shrink_radius > 0.0 && self.shrink_radius < 1.0) {
            return Err(DescriptorError::Invalid("shrink_radius must lie in (0, 1)".into()));
        }
        if self.charts.is_empty() {
            return Err(DescriptorError::Invalid("at least one [[chart]] is required".into()));
        }
        let n = self.charts.len();
        let mut charts = Vec::with_capacity(n);
        for (k, c) in self.charts.into_iter().enumerate() {
            if c.id != k {
                return Err(DescriptorError::Invalid(format!("chart ids must be 0, 1, ... in order; found {} at position {k}", c.id)));
            }
            let mut metric = exprs(k, "metric", &c.metric, m)?;
            if metric.len() == m && m > 1 {
                let diag = metric;
                metric = (0..m * m).map(|i| if i / m == i % m { diag[i / m].clone() } else { Expr::num(0.0) }).collect();
            } else if metric.len() != m * m {
                return Err(DescriptorError::Invalid(format!(
                    "chart {k}: metric needs {} entries (or {m} diagonal entries), found {}",
                    m * m,
                    metric.len()
                )));
            }
            let mut chart = Chart::new(k, m, metric);
            chart.window = c.window;
            chart.depth = c.depth;
            chart.model = c.model.as_deref().map(|t| exprs(k, "model", t, m)).transpose()?;
            for (ti, t) in c.transitions.iter().enumerate() {
                if t.to >= n || t.to == k {
                    return Err(DescriptorError::Invalid(format!("chart {k}: transition {ti} targets invalid chart {}", t.to)));
                }
                if t.map.len() != m {
                    return Err(DescriptorError::Invalid(format!("chart {k}: transition to {} needs {m} components", t.to)));
                }
                chart.transitions.push(Transition {
                    to: t.to,
                    map: exprs(k, &format!("transition[{ti}].map"), &t.map, m)?,
                    overlap: exprs(k, &format!("transition[{ti}].overlap"), &t.overlap, m)?,
                });
            }
            charts.push(chart);
        }
        Ok(ManifoldDescriptor {
            name: self.name,
            atlas: Atlas { dim: m, shrink_radius: self.shrink_radius, charts },
            oriented: self.oriented,
            window: self.window,
            notes: self.notes,
        })
    }

    pub fn from_descriptor(d: &ManifoldDescriptor) -> DescriptorFile {
        let texts = |v: &[Expr]| v.iter().map(Expr::to_text).collect::<Vec<_>>();
        DescriptorFile {
            name: d.name.clone(),
            dim: d.atlas.dim,
            shrink_radius: d.atlas.shrink_radius,
            oriented: d.oriented,
            window: d.window.clone(),
            notes: d.notes.clone(),
            charts: d
                .atlas
                .charts
                .iter()
                .map(|c| ChartFile {
                    id: c.id,
                    metric: texts(&c.metric),
                    window: c.window,
                    depth: c.depth,
                    model: c.model.as_deref().map(texts),
                    transitions: c
                        .transitions
                        .iter()
                        .map(|t| TransitionFile { to: t.to, map: texts(&t.map), overlap: texts(&t.overlap) })
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn parse_descriptor(text: &str) -> Result<ManifoldDescriptor, DescriptorError> {
    toml::from_str::<DescriptorFile>(text)?.into_descriptor()
}

pub fn load_descriptor(path: &std::path::Path) -> Result<ManifoldDescriptor, DescriptorError> {
    let text = std::fs::read_to_string(path)
        .map_err(|error| DescriptorError::Io { path: path.display().to_string(), error })?;
    parse_descriptor(&text)
}

pub fn emit_descriptor(d: &ManifoldDescriptor) -> String {
    toml::to_string(&DescriptorFile::from_descriptor(d)).expect("descriptor fields are all serializable")
}

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use ureg_core::geodesic::StepControl;
use ureg_core::{catalog, ManifoldDescriptor, ReportConfig, SamplingPlan};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Table,
    Csv,
}

/// Where the manifold comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Catalog(String),
    File(PathBuf),
}

impl Source {
    pub fn load(&self) -> anyhow::Result<ManifoldDescriptor> {
        match self {
            Source::Catalog(name) => {
                let entry = catalog::by_name(name).with_context(|| {
                    format!("unknown catalog entry {name:?}; available: {}", catalog::names().join(", "))
                })?;
                Ok(entry.build()?)
            }
            Source::File(path) => Ok(crate::load_descriptor(path)?),
        }
    }
}

/// Settings shared by all commands. Read from a TOML file with `--config`
/// and overridden by command-line flags.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub catalog: Option<String>,
    pub file: Option<PathBuf>,
    pub k_max: usize,
    /// Relative and absolute tolerance of the geodesic integrator.
    pub tol: f64,
    /// Estimates at or below this value count as zero in `check`.
    pub noise_floor: f64,
    pub divergence_ratio: f64,
    pub grid_levels: usize,
    pub seed: u64,
    /// Work budget; each command has its own default when unset.
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let r = ReportConfig::default();
        let s = StepControl::default();
        RunConfig {
            catalog: None,
            file: None,
            k_max: r.k_max,
            tol: s.rtol,
            noise_floor: r.noise_floor,
            divergence_ratio: r.divergence_ratio,
            grid_levels: r.plan.levels,
            seed: r.plan.seed,
            budget: None,
            out: None,
            format: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.tol > 0.0) {
            bail!("tol must be positive, got {}", self.tol);
        }
        if !(self.noise_floor > 0.0) {
            bail!("noise_floor must be positive, got {}", self.noise_floor);
        }
        if !(self.divergence_ratio > 1.0) {
            bail!("divergence_ratio must exceed 1, got {}", self.divergence_ratio);
        }
        if self.grid_levels < 1 {
            bail!("grid_levels must be at least 1");
        }
        if self.k_max > ureg_core::MAX_JET_ORDER {
            bail!("k_max must not exceed {}", ureg_core::MAX_JET_ORDER);
        }
        Ok(())
    }

    pub fn source(&self) -> anyhow::Result<Source> {
        match (&self.catalog, &self.file) {
            (Some(c), None) => Ok(Source::Catalog(c.clone())),
            (None, Some(f)) => Ok(Source::File(f.clone())),
            (Some(_), Some(_)) => bail!("give either --catalog or --file, not both"),
            (None, None) => bail!("a manifold is required: --catalog NAME or --file PATH"),
        }
    }

    pub fn report_config(&self) -> ReportConfig {
        let d = ReportConfig::default();
        ReportConfig {
            k_max: self.k_max,
            plan: SamplingPlan { seed: self.seed, levels: self.grid_levels, ..d.plan },
            divergence_ratio: self.divergence_ratio,
            noise_floor: self.noise_floor,
            budget: self.budget.unwrap_or(d.budget),
            ..d
        }
    }

    pub fn step_control(&self) -> StepControl {
        StepControl { rtol: self.tol, atol: self.tol, ..StepControl::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<RunConfig>("k_max = 3\ncolour = 1\n").is_err());
        let c: RunConfig = toml::from_str("k_max = 3\ngrid_levels = 2\nformat = \"table\"\n").unwrap();
        assert_eq!((c.k_max, c.grid_levels, c.format), (3, 2, Some(Format::Table)));
        assert_eq!(c.tol, 1e-9);
    }

    #[test]
    fn validation() {
        let ok = RunConfig::default();
        ok.validate().unwrap();
        assert!(RunConfig { tol: 0.0, ..ok.clone() }.validate().is_err());
        assert!(RunConfig { noise_floor: -1.0, ..ok.clone() }.validate().is_err());
        assert!(RunConfig { grid_levels: 0, ..ok.clone() }.validate().is_err());
        assert!(RunConfig { k_max: 20, ..ok.clone() }.validate().is_err());
        assert!(ok.source().is_err());
        let both = RunConfig { catalog: Some("euclidean2".into()), file: Some("a.toml".into()), ..ok };
        assert!(both.source().is_err());
    }

    #[test]
    fn report_config_mapping() {
        let c = RunConfig { k_max: 3, grid_levels: 2, seed: 7, budget: Some(10), ..RunConfig::default() };
        let r = c.report_config();
        assert_eq!((r.k_max, r.plan.levels, r.plan.seed, r.budget), (3, 2, 7, 10));
        r.validate().unwrap();
    }
}

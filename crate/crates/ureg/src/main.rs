//! `ureg` command-line front end.
//!
//! Exit codes:
//! * 0: success; `check` found the manifold consistent with uniform regularity
//! * 1: usage, I/O, parse or validation error
//! * 2: `check` verdict inconsistent, or `lemma` trials failed
//! * 3: `check` verdict inconclusive, or a work budget ran out

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use ureg::output::{self, json_document};
use ureg::{emit_descriptor, Format, Rayon, RunConfig};
use ureg_core::geodesic::{injectivity_radius_estimate, integrate_geodesic, lemma_suite, InjectivityOptions};
use ureg_core::regularity::regularity_report_with;
use ureg_core::{catalog, PointRef, Verdict};

const OK: u8 = 0;
const ERROR: u8 = 1;
const NEGATIVE: u8 = 2;
const INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "ureg", version, about = "Checks chart-based manifolds for uniform regularity and bounded geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Built-in manifold (see `ureg catalog list`).
    #[arg(long)]
    catalog: Option<String>,
    /// TOML manifold descriptor.
    #[arg(long)]
    file: Option<PathBuf>,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Highest metric derivative order.
    #[arg(long)]
    kmax: Option<usize>,
    /// Integrator tolerance for geodesic commands; noise floor for `check`.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    grid_levels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Work budget (jet evaluations plus integration steps).
    #[arg(long)]
    budget: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the regularity constants and report a verdict.
    Check(Common),
    /// Integrate a geodesic and write its samples.
    Geodesic {
        #[command(flatten)]
        common: Common,
        /// Start point as CHART:x1,x2,...
        #[arg(long)]
        point: String,
        /// Initial velocity in chart coordinates, v1,v2,...
        #[arg(long, allow_hyphen_values = true)]
        velocity: String,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
    },
    /// Estimate the injectivity radius at a point.
    Injrad {
        #[command(flatten)]
        common: Common,
        /// Base point as CHART:x1,x2,...; defaults to the centre of the first window chart.
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value_t = 10.0)]
        cap: f64,
        #[arg(long, default_value_t = 8)]
        directions: usize,
    },
    /// Run the geodesic existence lemma on random chart data.
    Lemma {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Validate a descriptor and print its canonical form.
    Validate(Common),
    /// Built-in manifolds.
    #[command(subcommand)]
    Catalog(CatalogCommand),
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// List entries with their expected verdicts.
    List,
    /// Print an entry as a TOML descriptor.
    Emit {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Common {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if self.catalog.is_some() || self.file.is_some() {
            c.catalog = self.catalog.clone();
            c.file = self.file.clone();
        }
        c.k_max = self.kmax.unwrap_or(c.k_max);
        if let Some(t) = self.tol {
            c.tol = t;
            c.noise_floor = t;
        }
        c.grid_levels = self.grid_levels.unwrap_or(c.grid_levels);
        c.seed = self.seed.unwrap_or(c.seed);
        c.budget = self.budget.or(c.budget);
        c.out = self.out.clone().or(c.out);
        c.format = self.format.or(c.format);
        c.validate()?;
        Ok(c)
    }
}

fn parse_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("invalid number {t:?} in {s:?}")))
        .collect()
}

fn parse_point(s: &str) -> anyhow::Result<PointRef> {
    let (chart, xs) = s.split_once(':').with_context(|| format!("point {s:?} must look like CHART:x1,x2,..."))?;
    let chart = chart.trim().parse().with_context(|| format!("invalid chart id in {s:?}"))?;
    Ok(PointRef::new(chart, parse_list(xs)?))
}

fn emit(cfg: &RunConfig, text: &str) -> anyhow::Result<()> {
    match &cfg.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Check(common) => {
            let cfg = common.resolve()?;
            let source = cfg.source()?;
            let mfd = source.load()?;
            let rc = cfg.report_config();
            let report = regularity_report_with(&mfd, &rc, &Rayon::from_env()?)?;
            let text = match cfg.format.unwrap_or_default() {
                Format::Json => json_document("check", &source, &rc, &report),
                Format::Table => output::report_table(&report),
                Format::Csv => output::report_csv(&report),
            };
            emit(&cfg, &text)?;
            if cfg.out.is_some() {
                eprintln!("{}: {}", report.name, report.verdict.as_str());
            }
            Ok(match report.verdict {
                Verdict::Consistent => OK,
                Verdict::Inconsistent => NEGATIVE,
                Verdict::Inconclusive => INCONCLUSIVE,
            })
        }
        Command::Geodesic { common, point, velocity, time } => {
            let cfg = common.resolve()?;
            let source = cfg.source()?;
            let mfd = source.load()?;
            let p = parse_point(&point)?;
            let v = parse_list(&velocity)?;
            let mut ctrl = cfg.step_control();
            if let Some(b) = cfg.budget {
                ctrl.max_steps = b as usize;
            }
            let path = integrate_geodesic(&mfd.atlas, &p, &v, time, &ctrl)?;
            let text = match cfg.format.unwrap_or(Format::Csv) {
                Format::Csv => output::geodesic_csv(&mfd.atlas, &path)?,
                Format::Json => json_document("geodesic", &source, &ctrl, &path),
                Format::Table => bail!("geodesic output is csv or json"),
            };
            emit(&cfg, &text)?;
            Ok(OK)
        }
        Command::Injrad { common, point, cap, directions } => {
            let cfg = common.resolve()?;
            let source = cfg.source()?;
            let mfd = source.load()?;
            let p = match point {
                Some(s) => parse_point(&s)?,
                None => {
                    let c = mfd.atlas.window_charts().next().context("the atlas has no window charts")?;
                    PointRef::new(c.id, vec![0.0; mfd.atlas.dim])
                }
            };
            let d = InjectivityOptions::default();
            let opts = InjectivityOptions {
                cap,
                directions,
                budget: cfg.budget.map_or(d.budget, |b| b as usize),
                seed: cfg.seed,
                ctrl: cfg.step_control(),
                ..d
            };
            let est = injectivity_radius_estimate(&mfd.atlas, &p, &opts)?;
            let text = match cfg.format.unwrap_or_default() {
                Format::Json => json_document("injrad", &source, &opts, &est),
                Format::Table => output::injectivity_table(&est),
                Format::Csv => bail!("injrad output is json or table"),
            };
            emit(&cfg, &text)?;
            Ok(if est.budget_exhausted { INCONCLUSIVE } else { OK })
        }
        Command::Lemma { common, trials } => {
            let cfg = common.resolve()?;
            let source = cfg.source()?;
            let mfd = source.load()?;
            let ctrl = cfg.step_control();
            let summary = lemma_suite(&mfd.atlas, trials, cfg.seed, &ctrl)?;
            let text = match cfg.format.unwrap_or_default() {
                Format::Json => json_document("lemma", &source, &ctrl, &summary),
                Format::Table => output::lemma_table(&summary),
                Format::Csv => bail!("lemma output is json or table"),
            };
            emit(&cfg, &text)?;
            Ok(if summary.passed == summary.trials { OK } else { NEGATIVE })
        }
        Command::Validate(common) => {
            let cfg = common.resolve()?;
            let mfd = cfg.source()?.load()?;
            let v = mfd.atlas.validate(&cfg.report_config().plan);
            if !v.is_ok() {
                for issue in &v.issues {
                    eprintln!("{issue}");
                }
                bail!("{} of {} checks failed", v.issues.len(), v.checks);
            }
            emit(&cfg, &emit_descriptor(&mfd))?;
            Ok(OK)
        }
        Command::Catalog(CatalogCommand::List) => {
            let mut s = String::new();
            for e in catalog::entries() {
                s.push_str(&format!("{:<20} {:<34} {}\n", e.name, e.expected.as_str(), e.description));
            }
            emit(&RunConfig::default(), &s)?;
            Ok(OK)
        }
        Command::Catalog(CatalogCommand::Emit { name, out }) => {
            let cfg = RunConfig { catalog: Some(name), out, ..RunConfig::default() };
            let mfd = cfg.source()?.load()?;
            emit(&cfg, &emit_descriptor(&mfd))?;
            Ok(OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ERROR } else { OK });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(ERROR)
        }
        Err(_) => ExitCode::from(ERROR),
    }
}

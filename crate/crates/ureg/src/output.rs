//! Rendering of results: versioned JSON envelopes, plain-text tables and CSV.
//!
//! Every JSON document has the shape
//!
//! ```json
//! { "schema": "ureg/check", "version": 1, "generator": "ureg 0.1.0",
//!   "source": {"catalog": "euclidean2"}, "config": {...}, "result": {...} }
//! ```
//!
//! Non-finite numbers are written as `null`. CSV output always uses `.` as
//! the decimal separator and `\n` as the line terminator.

use std::fmt::Write as _;

use serde::Serialize;
use ureg_core::geodesic::{speed, GeodesicPath, InjectivityEstimate, LemmaSummary};
use ureg_core::regularity::Estimate;
use ureg_core::{Atlas, RegularityReport};

use crate::Source;

pub const SCHEMA_VERSION: u32 = 1;
pub const GENERATOR: &str = concat!("ureg ", env!("CARGO_PKG_VERSION"));

#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub schema: String,
    pub version: u32,
    pub generator: &'static str,
    pub source: &'a Source,
    pub config: &'a C,
    pub result: &'a R,
}

/// Pretty-printed JSON with a trailing newline.
pub fn json_document<C: Serialize, R: Serialize>(command: &str, source: &Source, config: &C, result: &R) -> String {
    let env = Envelope {
        schema: format!("ureg/{command}"),
        version: SCHEMA_VERSION,
        generator: GENERATOR,
        source,
        config,
        result,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("results serialize to JSON");
    s.push('\n');
    s
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else {
        format!("{v}")
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn csv_finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory CSV writer")).expect("CSV output is UTF-8")
}

fn estimate_row(out: &mut String, e: &Estimate) {
    let levels: Vec<String> = e.by_level.iter().map(|v| num(*v)).collect();
    let _ = writeln!(out, "  {:<24} {:>13} {:>13}  [{}]", e.quantity, num(e.value), num(e.trend), levels.join(", "));
}

pub fn report_table(r: &RegularityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "manifold     {} (dim {})", r.name, r.dim);
    let _ = writeln!(s, "verdict      {}", r.verdict.as_str());
    let _ = writeln!(s, "coverage     k <= {}, {} grid levels, seed {}, shrink radius {}", r.k_max, r.levels, r.seed, r.shrink_radius);
    let _ = writeln!(s, "cover        {} ({} samples)", if r.cover.covered { "ok" } else { "FAILED" }, r.cover.samples);
    let _ = writeln!(
        s,
        "completeness {} ({} rays, horizon {})",
        if r.completeness.complete { "ok" } else { "FAILED" },
        r.completeness.rays,
        r.completeness.horizon
    );
    let _ = writeln!(s, "injectivity  lower bound {}", num(r.injectivity_lower));
    let _ = writeln!(s, "work         {}{}", r.work, if r.budget_exhausted { " (budget exhausted)" } else { "" });
    let _ = writeln!(s);
    let _ = writeln!(s, "  {:<24} {:>13} {:>13}  by level", "quantity", "value", "trend");
    for e in r.estimates() {
        estimate_row(&mut s, e);
    }
    if let Some(w) = &r.witness {
        let _ = writeln!(s);
        let _ = writeln!(s, "witness      {}: {}", w.quantity, w.detail);
        if let (Some(c), Some(p)) = (w.chart, &w.point) {
            let _ = writeln!(s, "             chart {c} at {p:?}");
        }
    }
    s
}

/// One row per estimate: `quantity,value,trend,level_0,…`.
pub fn report_csv(r: &RegularityReport) -> String {
    let mut w = csv_writer();
    let mut header = vec!["quantity".to_string(), "value".into(), "trend".into()];
    header.extend((0..r.levels).map(|l| format!("level_{l}")));
    w.write_record(&header).expect("in-memory CSV writer");
    for e in r.estimates() {
        let mut row = vec![e.quantity.clone(), e.value.to_string(), e.trend.to_string()];
        row.extend((0..r.levels).map(|l| e.by_level.get(l).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row).expect("in-memory CSV writer");
    }
    csv_finish(w)
}

/// Columns `t, chart, c1…cm, z1…zm, speed`.
pub fn geodesic_csv(atlas: &Atlas, path: &GeodesicPath) -> ureg_core::Result<String> {
    let m = path.dim;
    let mut w = csv_writer();
    let mut header = vec!["t".to_string(), "chart".into()];
    header.extend((1..=m).map(|i| format!("c{i}")));
    header.extend((1..=m).map(|i| format!("z{i}")));
    header.push("speed".into());
    w.write_record(&header).expect("in-memory CSV writer");
    for s in &path.samples {
        let mut row = vec![s.t.to_string(), s.chart.to_string()];
        row.extend(s.c.iter().map(f64::to_string));
        row.extend(s.z.iter().map(f64::to_string));
        row.push(speed(atlas, s)?.to_string());
        w.write_record(&row).expect("in-memory CSV writer");
    }
    Ok(csv_finish(w))
}

pub fn injectivity_table(e: &InjectivityEstimate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "point        chart {} at {:?}", e.point.chart, e.point.x);
    let _ = writeln!(s, "lower        {}", num(e.lower));
    let _ = writeln!(s, "upper        {}", e.upper.map(num).unwrap_or_else(|| "none".into()));
    let _ = writeln!(s, "conjugate    {}", e.conjugate.map(num).unwrap_or_else(|| "none".into()));
    if let Some(c) = &e.crossing {
        let _ = writeln!(s, "crossing     rays {:?} at times {:?}, gap {}", c.rays, c.times, num(c.gap));
    }
    let _ = writeln!(s, "rays/steps   {} / {}{}", e.rays, e.steps, if e.budget_exhausted { " (budget exhausted)" } else { "" });
    s
}

pub fn lemma_table(l: &LemmaSummary) -> String {
    let mut s = String::new();
    let rate = l.pass_rate.map(|r| format!("{:.1}%", 100.0 * r)).unwrap_or_else(|| "n/a".into());
    let _ = writeln!(s, "trials       {}", l.trials);
    let _ = writeln!(s, "passed       {} ({rate})", l.passed);
    let _ = writeln!(s, "min tau*     {}", l.min_tau_star.map(num).unwrap_or_else(|| "n/a".into()));
    let _ = writeln!(s, "max excess   {}", l.max_envelope_excess.map(num).unwrap_or_else(|| "n/a".into()));
    for f in &l.failures {
        let _ = writeln!(s, "failure      chart {} x_p {:?} v_p {:?} delta {}", f.chart, f.x_p, f.v_p, num(f.delta));
    }
    s
}

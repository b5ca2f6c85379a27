//! JSON-configured experiment runs.
//!
//! A run validates its configuration against the bundled schema, performs
//! the computation, and (when an output directory is given) writes one CSV
//! per table plus `summary.json`. Numbers are printed with 17 significant
//! digits and all randomness derives from the configured seed, so reruns are
//! byte-identical regardless of the thread count.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::{
    empirical_cell_measure, g_curve, gap_certificate, geometric_limit, monotonicity_check,
    scaling_exponent_fit, ExponentFit, DEFAULT_BINS,
};
use crate::energy::{format_real, min_pairwise_distance};
use crate::error::{Error, Result};
use crate::fractal::{Fractal, FractalSource};
use crate::minimizer::{best_packing, minimize, SearchOptions};
use crate::rng::split_seed;

/// The experiment schema, also installed as `schema/experiment.schema.json`.
pub const SCHEMA: &str = include_str!("../schema/experiment.schema.json");

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "RIESZ_THREADS";

/// Names every energy column so readers know pairs are counted twice.
pub const ENERGY_CONVENTION: &str = "ordered-pairs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GeometricLimit,
    GCurve,
    Gap,
    Weakstar,
    Monotonicity,
    Packing,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::GeometricLimit => "geometric-limit",
            ExperimentKind::GCurve => "g-curve",
            ExperimentKind::Gap => "gap",
            ExperimentKind::Weakstar => "weakstar",
            ExperimentKind::Monotonicity => "monotonicity",
            ExperimentKind::Packing => "packing",
        }
    }

    fn file_stem(&self) -> &'static str {
        match self {
            ExperimentKind::GeometricLimit => "geometric_limit",
            ExperimentKind::GCurve => "g_curve",
            ExperimentKind::Gap => "gap",
            ExperimentKind::Weakstar => "weakstar",
            ExperimentKind::Monotonicity => "monotonicity",
            ExperimentKind::Packing => "packing",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        serde_json::from_value(Value::String(name.into()))
            .map_err(|_| Error::Usage(format!("unknown experiment {name:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub fractal: FractalSource,
    pub s: f64,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Base size of the geometric sequence `M^k n0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    /// Cell depth for cell-count reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_depth: Option<usize>,
    #[serde(default)]
    pub search: SearchSettings,
}

/// Search options as they appear in a configuration; the seed lives at the
/// top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub depth: usize,
    pub max_depth: usize,
    pub restarts: usize,
    pub moves_budget: usize,
    pub strategy: crate::minimizer::Strategy,
    pub enumeration_budget: u64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        let d = SearchOptions::default();
        Self {
            depth: d.depth,
            max_depth: d.max_depth,
            restarts: d.restarts,
            moves_budget: d.moves_budget,
            strategy: d.strategy,
            enumeration_budget: d.enumeration_budget,
        }
    }
}

impl ExperimentConfig {
    pub fn new(fractal: FractalSource, s: f64, experiment: ExperimentKind) -> Self {
        Self {
            fractal,
            s,
            experiment,
            seed: 0,
            out: None,
            n0: None,
            k_max: None,
            bins: None,
            n_min: None,
            n_max: None,
            n_values: None,
            cell_depth: None,
            search: SearchSettings::default(),
        }
    }

    /// Parses and schema-validates a configuration.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Usage(format!("malformed experiment JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        validate_against_schema(&value)?;
        serde_json::from_value(value).map_err(|e| Error::Usage(format!("invalid experiment: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn search_options(&self) -> SearchOptions {
        let s = &self.search;
        SearchOptions {
            depth: s.depth,
            max_depth: s.max_depth,
            restarts: s.restarts,
            moves_budget: s.moves_budget,
            seed: self.seed,
            strategy: s.strategy,
            enumeration_budget: s.enumeration_budget,
        }
    }

    fn sizes(&self) -> Result<Vec<usize>> {
        if let Some(ns) = &self.n_values {
            return Ok(ns.clone());
        }
        match (self.n_min, self.n_max) {
            (Some(lo), Some(hi)) if lo <= hi => Ok((lo..=hi).collect()),
            _ => Err(Error::Usage(format!(
                "{} needs n_values or n_min ≤ n_max",
                self.experiment.name()
            ))),
        }
    }
}

pub fn validate_against_schema(instance: &Value) -> Result<()> {
    let schema: Value = serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("bundled schema compiles");
    let problems: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| {
            let at = e.instance_path.to_string();
            if at.is_empty() {
                e.to_string()
            } else {
                format!("{at}: {e}")
            }
        })
        .collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Usage(format!("schema violation: {}", problems.join("; "))))
    }
}

/// Worker count from `RIESZ_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Thread pool sized by `threads`, or by `RIESZ_THREADS`, or by rayon's default.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads.or(threads_from_env()?) {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Usage(format!("cannot start thread pool: {e}")))
}

/// A table destined for one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Value,
    pub tables: Vec<Table>,
    /// Files written, in order; empty when no output directory was set.
    pub files: Vec<PathBuf>,
}

fn real(v: f64) -> String {
    format_real(v)
}

fn maybe(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

fn fit_json(fit: Option<ExponentFit>) -> Value {
    match fit {
        Some(f) => json!({"slope": f.slope, "intercept": f.intercept, "residual": f.residual}),
        None => Value::Null,
    }
}

fn separation_fit(samples: &[(f64, f64)]) -> Option<ExponentFit> {
    (samples.len() >= 4).then(|| scaling_exponent_fit(samples).ok()).flatten()
}

/// Runs the experiment; writes artifacts when `config.out` is set.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let fractal = config.fractal.build()?;
    let (tables, results) = compute(config, &fractal)?;
    let stem = config.experiment.file_stem();
    let summary = json!({
        "experiment": config.experiment.name(),
        "fractal": fractal.label(),
        "s": config.s,
        "seed": config.seed,
        "dimension": fractal.dimension(),
        "energy_convention": ENERGY_CONVENTION,
        "warnings": fractal.warnings(),
        "tables": tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
        "primary_table": format!("{stem}.csv"),
        "estimates": results.estimates,
        "certificates": results.certificates,
        "checks": results.checks,
    });
    let mut files = Vec::new();
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
        for t in &tables {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv()?)?;
            files.push(path);
        }
        let path = dir.join("summary.json");
        fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
        files.push(path);
    }
    Ok(RunOutput {
        summary,
        tables,
        files,
    })
}

struct Results {
    estimates: Value,
    certificates: Value,
    checks: Value,
}

fn compute(config: &ExperimentConfig, fractal: &Fractal) -> Result<(Vec<Table>, Results)> {
    let s = config.s;
    let opts = config.search_options();
    let stem = config.experiment.file_stem();
    match config.experiment {
        ExperimentKind::GeometricLimit => {
            let n0 = config.n0.unwrap_or(1);
            let k_max = config.k_max.unwrap_or(8);
            let run = geometric_limit(fractal, s, n0, k_max, &opts)?;
            let mut t = Table::new(
                stem,
                &[
                    "k",
                    "n",
                    "energy_ordered_pairs",
                    "normalized_energy",
                    "delta",
                    "tail_bound",
                    "chain_bound",
                    "min_distance",
                ],
            );
            for r in &run.rows {
                t.push(vec![
                    r.k.to_string(),
                    r.n.to_string(),
                    real(r.energy),
                    real(r.normalized),
                    maybe(r.delta),
                    real(r.tail_bound),
                    real(r.chain_bound),
                    real(r.min_distance),
                ]);
            }
            let last_delta = run.rows.last().and_then(|r| r.delta);
            Ok((
                vec![t],
                Results {
                    estimates: json!({"limit_estimate": run.limit_estimate, "last_delta": last_delta}),
                    certificates: Value::Null,
                    checks: json!({"cauchy": run.cauchy, "chain_bound_holds": run.chain_holds}),
                },
            ))
        }
        ExperimentKind::GCurve => {
            let bins = config.bins.unwrap_or(DEFAULT_BINS);
            let m = fractal.map_count();
            let n_min = config.n_min.unwrap_or(2);
            let n_max = config.n_max.unwrap_or(n_min * m.pow(3));
            let curve = g_curve(fractal, s, bins, n_min, n_max, &opts)?;
            let mut t = Table::new(
                stem,
                &["bin", "theta", "theta_low", "theta_high", "count", "estimate", "spread", "n_values"],
            );
            for p in &curve.bins {
                let ns: Vec<String> = p.n_values.iter().map(|n| n.to_string()).collect();
                t.push(vec![
                    p.bin.to_string(),
                    real(p.theta),
                    real(p.theta_low),
                    real(p.theta_high),
                    p.n_values.len().to_string(),
                    maybe(p.estimate),
                    maybe(p.spread),
                    ns.join(" "),
                ]);
            }
            let mut samples = Table::new(
                &format!("{stem}_samples"),
                &["n", "theta", "bin", "energy_ordered_pairs", "normalized_energy"],
            );
            for x in &curve.samples {
                samples.push(vec![
                    x.n.to_string(),
                    real(x.theta),
                    x.bin.to_string(),
                    real(x.energy),
                    real(x.normalized),
                ]);
            }
            Ok((
                vec![t, samples],
                Results {
                    estimates: json!({
                        "max_adjacent_jump": curve.max_adjacent_jump,
                        "empirical_gap": curve.empirical_gap,
                        "empty_bins": curve.empty_bins,
                    }),
                    certificates: Value::Null,
                    checks: json!({"all_bins_populated": curve.empty_bins.is_empty()}),
                },
            ))
        }
        ExperimentKind::Gap => {
            let c = gap_certificate(fractal, s)?;
            let mut t = Table::new(
                stem,
                &[
                    "s",
                    "map_count",
                    "ratio",
                    "dimension",
                    "sigma",
                    "separation_ratio",
                    "s_threshold",
                    "upper_coeff",
                    "lower_coeff",
                    "certificate_ratio",
                    "certified",
                ],
            );
            t.push(vec![
                real(c.s),
                c.map_count.to_string(),
                real(c.ratio),
                real(c.dimension),
                real(c.sigma),
                real(c.separation_ratio),
                maybe(c.s_threshold),
                maybe(c.upper_coeff),
                real(c.lower_coeff),
                maybe(c.certificate_ratio),
                c.certified.to_string(),
            ]);
            Ok((
                vec![t],
                Results {
                    estimates: Value::Null,
                    checks: json!({"certified": c.certified}),
                    certificates: serde_json::to_value(&c)?,
                },
            ))
        }
        ExperimentKind::Weakstar => {
            let ns = config.sizes()?;
            let depth = config.cell_depth.unwrap_or(2);
            let runs = ns
                .par_iter()
                .map(|&n| {
                    let o = SearchOptions {
                        seed: split_seed(opts.seed, n as u64),
                        ..opts.clone()
                    };
                    let r = minimize(fractal, n, s, &o)?;
                    let cells = empirical_cell_measure(fractal, &r.config, depth)?;
                    let delta = min_pairwise_distance(&r.config)?;
                    Ok((r, cells, delta))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut t = Table::new(
                stem,
                &["n", "energy_ordered_pairs", "normalized_energy", "min_distance", "cell_depth", "max_abs_dev"],
            );
            let mut cells_table = Table::new(
                &format!("{stem}_cells"),
                &["n", "address", "count", "empirical", "target"],
            );
            for (r, cells, delta) in &runs {
                t.push(vec![
                    r.record.n.to_string(),
                    real(r.record.energy),
                    real(r.record.normalized),
                    real(*delta),
                    depth.to_string(),
                    real(cells.max_abs_dev),
                ]);
                for c in &cells.cells {
                    cells_table.push(vec![
                        r.record.n.to_string(),
                        c.address.clone(),
                        c.count.to_string(),
                        real(c.empirical),
                        real(c.target),
                    ]);
                }
            }
            let fit = separation_fit(
                &runs.iter().map(|(r, _, d)| (r.record.n as f64, *d)).collect::<Vec<_>>(),
            );
            let last_dev = runs.last().map(|(_, c, _)| c.max_abs_dev);
            let expected = -1.0 / fractal.dimension();
            Ok((
                vec![t, cells_table],
                Results {
                    estimates: json!({
                        "separation_fit": fit_json(fit),
                        "expected_slope": expected,
                        "last_max_abs_dev": last_dev,
                    }),
                    certificates: Value::Null,
                    checks: json!({
                        "last_cells_within_0.02": last_dev.map(|d| d <= 0.02),
                        "separation_slope_within_0.15": fit.map(|f| (f.slope - expected).abs() <= 0.15),
                    }),
                },
            ))
        }
        ExperimentKind::Monotonicity => {
            let n_min = config.n_min.unwrap_or(2);
            let n_max = config.n_max.unwrap_or(10);
            let report = monotonicity_check(fractal, s, n_min, n_max, &opts)?;
            let mut t = Table::new(
                stem,
                &["n", "energy_ordered_pairs", "normalized_energy", "increment", "increment_coeff"],
            );
            for r in &report.rows {
                t.push(vec![
                    r.n.to_string(),
                    real(r.energy),
                    real(r.normalized),
                    maybe(r.increment),
                    maybe(r.increment_coeff),
                ]);
            }
            Ok((
                vec![t],
                Results {
                    estimates: json!({
                        "coeff_min": report.coeff_min,
                        "coeff_max": report.coeff_max,
                        "coeff_spread": report.coeff_spread(),
                        "violations": report.violations,
                    }),
                    certificates: Value::Null,
                    checks: json!({"monotone": report.monotone}),
                },
            ))
        }
        ExperimentKind::Packing => {
            let ns = config.sizes()?;
            let runs = ns
                .par_iter()
                .map(|&n| best_packing(fractal, n, opts.depth, &opts))
                .collect::<Result<Vec<_>>>()?;
            let mut t = Table::new(stem, &["n", "min_distance", "certified", "iterations"]);
            for (n, r) in ns.iter().zip(&runs) {
                t.push(vec![
                    n.to_string(),
                    real(r.delta),
                    r.certified.to_string(),
                    r.iterations.to_string(),
                ]);
            }
            let fit = separation_fit(
                &ns.iter().zip(&runs).map(|(n, r)| (*n as f64, r.delta)).collect::<Vec<_>>(),
            );
            Ok((
                vec![t],
                Results {
                    estimates: json!({
                        "separation_fit": fit_json(fit),
                        "expected_slope": -1.0 / fractal.dimension(),
                    }),
                    certificates: Value::Null,
                    checks: json!({"all_certified": runs.iter().all(|r| r.certified)}),
                },
            ))
        }
    }
}

/// Machine-readable error report printed by failing runs.
pub fn error_json(err: &Error) -> Value {
    let mut v = json!({"error": err.kind(), "message": err.to_string()});
    if let Error::Classification { point, depth } = err {
        v["point"] = json!(point);
        v["depth"] = json!(depth);
    }
    v
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) | Error::Json(_) => 2,
        Error::Domain(_) => 3,
        Error::Hypothesis(_) => 4,
        Error::Resource { .. } => 5,
        Error::Classification { .. } | Error::Singular { .. } => 6,
        Error::Io(_) | Error::Csv(_) => 7,
    }
}

/// Reads a run's `summary.json`.
pub fn read_summary(dir: &Path) -> Result<Value> {
    let text = fs::read_to_string(dir.join("summary.json"))?;
    Ok(serde_json::from_str(&text)?)
}

//! Report files: `smape.csv`, `summary.csv`, `posthoc.csv`, `run.json` and
//! per-series forecast tables.
//!
//! Floats are written in Rust's shortest round-trip form so aggregates can be
//! recomputed from the CSV rows exactly.

use std::fs;
use std::path::{Path, PathBuf};

use multistep::evaluation::{CompetitionForecast, Configuration, EvaluationReport};
use multistep::stats::{compare_strategies, Comparison, PairTest};
use multistep::strategies::StrategyVariant;
use serde::Serialize;

use crate::error::{BenchError, BenchResult};

pub const SMAPE_FILE: &str = "smape.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const POSTHOC_FILE: &str = "posthoc.csv";
pub const RUN_FILE: &str = "run.json";
pub const FORECAST_DIR: &str = "forecasts";

/// Statistical comparison of one configuration.
#[derive(Debug, Clone)]
pub struct ConfigAnalysis {
    pub config: Configuration,
    pub comparison: Option<Comparison>,
    pub pairs: Vec<PairTest>,
    /// Why the tests were not run, when they were not.
    pub note: Option<String>,
}

pub fn analyze(report: &EvaluationReport, alpha: f64) -> Vec<ConfigAnalysis> {
    report
        .configurations()
        .into_iter()
        .map(|config| match compare_strategies(report, config, alpha) {
            Ok((comparison, rm)) => ConfigAnalysis {
                config,
                pairs: comparison.pair_table(&rm),
                comparison: Some(comparison),
                note: None,
            },
            Err(e) => ConfigAnalysis {
                config,
                comparison: None,
                pairs: Vec::new(),
                note: Some(format!("tests skipped: {e}")),
            },
        })
        .collect()
}

fn writer(path: &Path) -> BenchResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| write_error(path, e))
}

fn write_error(path: &Path, e: impl std::fmt::Display) -> BenchError {
    BenchError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> BenchResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| write_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| write_error(path, e))?;
    }
    w.flush().map_err(|e| write_error(path, e))
}

/// `smape.csv`: one row per (series, strategy, configuration, origin);
/// `origin` is the 1-based day of the first forecast.
pub fn write_smape(path: &Path, report: &EvaluationReport) -> BenchResult<()> {
    write_rows(
        path,
        &["series", "strategy", "config", "origin", "smape"],
        report.rows.iter().map(|r| {
            [
                r.series.clone(),
                r.strategy.to_string(),
                r.config.label(),
                (r.origin.start + 1).to_string(),
                r.smape.to_string(),
            ]
        }),
    )
}

/// `summary.csv`: SMAPE* per (strategy, configuration) and the mean rank
/// within the configuration over the series every strategy scored.
pub fn write_summary(path: &Path, report: &EvaluationReport, analyses: &[ConfigAnalysis]) -> BenchResult<()> {
    let mut rows = Vec::new();
    for a in analyses {
        for strategy in report.strategies(a.config) {
            let star = report.smape_star(strategy, a.config).map_or(String::new(), |v| v.to_string());
            let rank = a
                .comparison
                .as_ref()
                .and_then(|c| c.strategies.iter().position(|&s| s == strategy).map(|j| c.mean_ranks[j]))
                .map_or(String::new(), |v| v.to_string());
            rows.push([strategy.to_string(), a.config.label(), star, rank]);
        }
    }
    write_rows(path, &["strategy", "config", "smape_star", "mean_rank"], rows)
}

fn pair_label(strategies: &[StrategyVariant], t: &PairTest) -> String {
    format!("{} vs {}", strategies[t.i], strategies[t.j])
}

/// `posthoc.csv`: k(k-1)/2 rows per configuration. `rejected` stays false
/// when the omnibus test did not reject.
pub fn write_posthoc(path: &Path, analyses: &[ConfigAnalysis]) -> BenchResult<()> {
    let mut rows = Vec::new();
    for a in analyses {
        let Some(c) = &a.comparison else { continue };
        for t in &a.pairs {
            rows.push([
                a.config.label(),
                pair_label(&c.strategies, t),
                t.z.to_string(),
                t.p_raw.to_string(),
                t.rejected.to_string(),
            ]);
        }
    }
    write_rows(path, &["config", "pair", "z", "p_raw", "rejected"], rows)
}

/// One table per series: a row per step, a column per (strategy, configuration).
pub fn write_forecasts(dir: &Path, forecasts: &[CompetitionForecast], horizon: usize) -> BenchResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut names: Vec<&str> = forecasts.iter().map(|f| f.series.as_str()).collect();
    names.dedup();
    let mut written = Vec::new();
    for name in names {
        let cols: Vec<&CompetitionForecast> = forecasts.iter().filter(|f| f.series == name).collect();
        let mut header = vec!["step".to_string()];
        header.extend(cols.iter().map(|f| format!("{}@{}", f.strategy, f.config.label())));
        let path = dir.join(format!("{name}.csv"));
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        write_rows(
            &path,
            &header_refs,
            (0..horizon).map(|h| {
                std::iter::once((h + 1).to_string())
                    .chain(cols.iter().map(move |f| f.values[h].to_string()))
                    .collect::<Vec<_>>()
            }),
        )?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Serialize)]
pub struct FailureRecord {
    pub series: String,
    pub config: Option<String>,
    pub strategy: Option<String>,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct TestRecord {
    pub config: String,
    pub strategies: Vec<String>,
    pub series: usize,
    pub friedman_q: Option<f64>,
    pub friedman_p: Option<f64>,
    /// `None` when saturated.
    pub iman_davenport_s: Option<f64>,
    pub iman_davenport_p: Option<f64>,
    pub saturated: bool,
    pub posthoc_performed: bool,
    /// Connected components of the "not significantly different" graph.
    pub groups: Vec<Vec<String>>,
    pub note: Option<String>,
}

impl TestRecord {
    pub fn new(a: &ConfigAnalysis) -> Self {
        let Some(c) = &a.comparison else {
            return Self {
                config: a.config.label(),
                strategies: Vec::new(),
                series: 0,
                friedman_q: None,
                friedman_p: None,
                iman_davenport_s: None,
                iman_davenport_p: None,
                saturated: false,
                posthoc_performed: false,
                groups: Vec::new(),
                note: a.note.clone(),
            };
        };
        let names: Vec<String> = c.strategies.iter().map(|s| s.to_string()).collect();
        Self {
            config: a.config.label(),
            strategies: names.clone(),
            series: c.series.len(),
            friedman_q: Some(c.friedman.q),
            friedman_p: Some(c.friedman.p),
            iman_davenport_s: (!c.iman_davenport.saturated).then_some(c.iman_davenport.s),
            iman_davenport_p: Some(c.iman_davenport.p),
            saturated: c.iman_davenport.saturated,
            posthoc_performed: c.posthoc.is_some(),
            groups: c
                .posthoc
                .as_ref()
                .map(|p| p.groups.iter().map(|g| g.iter().map(|&i| names[i].clone()).collect()).collect())
                .unwrap_or_default(),
            note: a.note.clone(),
        }
    }
}

/// Writes `value` as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> BenchResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| write_error(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

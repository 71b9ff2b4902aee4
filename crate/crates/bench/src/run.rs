//! Pipeline orchestration: ingest, phase driver, statistics, report files.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use log::{info, warn};
use multistep::evaluation::{
    run_competition, run_precompetition, smape, CompetitionReport, EvaluationReport, EvaluationRow, Failure,
    HarnessOptions, Origin,
};
use serde::Serialize;

use crate::config::{Phase, RunConfig, Toggle};
use crate::error::{BenchError, BenchResult};
use crate::ingest::{ingest, IngestOutcome};
use crate::report::{
    analyze, write_forecasts, write_json, write_posthoc, write_smape, write_summary, FailureRecord, TestRecord,
    FORECAST_DIR, POSTHOC_FILE, RUN_FILE, SMAPE_FILE, SUMMARY_FILE,
};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug)]
pub struct RunOutcome {
    pub report: EvaluationReport,
    pub competition: Option<CompetitionReport>,
    pub ingest_failures: Vec<(String, String)>,
    pub written: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        let partial = !self.ingest_failures.is_empty()
            || !self.report.failures.is_empty()
            || self.competition.as_ref().is_some_and(|c| !c.failures.is_empty());
        if partial {
            EXIT_PARTIAL
        } else {
            EXIT_SUCCESS
        }
    }
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    data_dir: String,
    out_dir: String,
    actuals_dir: Option<String>,
    phase: Phase,
    strategies: Vec<String>,
    deseasonalize: Toggle,
    input_selection: Toggle,
    model_selection: Vec<String>,
    configurations: Vec<String>,
    kmax: &'a [usize],
    horizon: usize,
    seed: u64,
    alpha: f64,
    workers: usize,
    start_date: Option<String>,
    weekday: Option<u8>,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    tool: &'static str,
    version: &'static str,
    config: ConfigEcho<'a>,
    series_ingested: usize,
    ingest_failures: Vec<FailureRecord>,
    unanchored_series: &'a [String],
    non_numeric_cells: usize,
    failures: Vec<FailureRecord>,
    evaluation_rows: usize,
    tests: Vec<TestRecord>,
    exit_code: i32,
}

fn failure_records(failures: &[Failure]) -> Vec<FailureRecord> {
    failures
        .iter()
        .map(|f| FailureRecord {
            series: f.series.clone(),
            config: f.config.map(|c| c.label()),
            strategy: f.strategy.map(|s| s.to_string()),
            message: f.message.clone(),
        })
        .collect()
}

fn harness_options(config: &RunConfig) -> HarnessOptions {
    let mut options = HarnessOptions::new(config.horizon, config.strategies.clone(), config.configurations());
    options.kmax_grid = config.kmax_grid.clone();
    options
}

/// Scores competition forecasts against future values read from `actuals`.
fn score_competition(comp: &CompetitionReport, actuals: &IngestOutcome, horizon: usize) -> EvaluationReport {
    let future: BTreeMap<&str, &[f64]> = actuals
        .series
        .iter()
        .map(|s| (s.name.as_str(), s.series.values()))
        .collect();
    let mut report = EvaluationReport::default();
    for f in &comp.forecasts {
        let scored = future
            .get(f.series.as_str())
            .ok_or_else(|| "no future values".to_string())
            .and_then(|actual| {
                if actual.len() < horizon || actual[..horizon].iter().any(|v| !v.is_finite()) {
                    Err(format!("future values need {horizon} complete entries"))
                } else {
                    smape(&actual[..horizon], &f.values).map_err(|e| e.to_string())
                }
            });
        match scored {
            Ok(value) => report.rows.push(EvaluationRow {
                series: f.series.clone(),
                strategy: f.strategy,
                config: f.config,
                origin: Origin { start: 0, steps: horizon },
                smape: value,
                forecast: f.values.clone(),
                kmax: f.kmax,
            }),
            Err(message) => report.failures.push(Failure {
                series: f.series.clone(),
                config: Some(f.config),
                strategy: Some(f.strategy),
                message,
            }),
        }
    }
    report
}

/// Runs the configured phase and writes every report file. An `Err` is fatal.
pub fn run(config: &RunConfig) -> BenchResult<RunOutcome> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir).map_err(|e| BenchError::io(&config.out_dir, e))?;
    let anchor = config.default_anchor()?;
    let data = ingest(&config.data_dir, anchor)?;
    if data.series.is_empty() {
        return Err(BenchError::Config(format!(
            "no readable series in {}",
            config.data_dir.display()
        )));
    }
    info!("{} series ingested, {} unreadable", data.series.len(), data.failures.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let options = harness_options(config);

    let mut written = Vec::new();
    let (report, competition) = match config.phase {
        Phase::Precompetition => (pool.install(|| run_precompetition(&data.series, &options))?, None),
        Phase::Competition => {
            let comp = pool.install(|| run_competition(&data.series, &options))?;
            written.extend(write_forecasts(
                &config.out_dir.join(FORECAST_DIR),
                &comp.forecasts,
                config.horizon,
            )?);
            let mut report = match &config.actuals_dir {
                Some(dir) => score_competition(&comp, &ingest(dir, anchor)?, config.horizon),
                None => EvaluationReport::default(),
            };
            report.failures.extend(comp.failures.iter().cloned());
            (report, Some(comp))
        }
    };
    for f in &report.failures {
        warn!(
            "{} [{}] [{}]: {}",
            f.series,
            f.config.map(|c| c.label()).unwrap_or_default(),
            f.strategy.map(|s| s.to_string()).unwrap_or_default(),
            f.message
        );
    }

    let analyses = analyze(&report, config.alpha);
    let out = &config.out_dir;
    write_smape(&out.join(SMAPE_FILE), &report)?;
    write_summary(&out.join(SUMMARY_FILE), &report, &analyses)?;
    write_posthoc(&out.join(POSTHOC_FILE), &analyses)?;
    written.extend([SMAPE_FILE, SUMMARY_FILE, POSTHOC_FILE].map(|f| out.join(f)));

    let mut outcome = RunOutcome {
        report,
        competition,
        ingest_failures: data.failures.clone(),
        written,
    };
    let record = RunRecord {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: ConfigEcho {
            data_dir: config.data_dir.display().to_string(),
            out_dir: config.out_dir.display().to_string(),
            actuals_dir: config.actuals_dir.as_ref().map(|p| p.display().to_string()),
            phase: config.phase,
            strategies: config.strategies.iter().map(|s| s.to_string()).collect(),
            deseasonalize: config.deseasonalize,
            input_selection: config.input_selection,
            model_selection: config.model_selection.iter().map(|p| p.to_string()).collect(),
            configurations: config.configurations().iter().map(|c| c.label()).collect(),
            kmax: &config.kmax_grid,
            horizon: config.horizon,
            seed: config.seed,
            alpha: config.alpha,
            workers: config.workers,
            start_date: config.start_date.map(|d| d.to_string()),
            weekday: config.weekday,
        },
        series_ingested: data.series.len(),
        ingest_failures: data
            .failures
            .iter()
            .map(|(series, message)| FailureRecord {
                series: series.clone(),
                config: None,
                strategy: None,
                message: message.clone(),
            })
            .collect(),
        unanchored_series: &data.unanchored,
        non_numeric_cells: data.bad_cells,
        failures: failure_records(&outcome.report.failures),
        evaluation_rows: outcome.report.rows.len(),
        tests: analyses.iter().map(TestRecord::new).collect(),
        exit_code: outcome.exit_code(),
    };
    write_json(&out.join(RUN_FILE), &record)?;
    outcome.written.push(out.join(RUN_FILE));
    Ok(outcome)
}

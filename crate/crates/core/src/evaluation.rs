//! Error metrics, split plans and the benchmark harness.
//!
//! The harness runs every (series, configuration) pair in parallel:
//! preprocessing is fit on the data before the first test origin, `Kmax` is
//! tuned on the validation window and each test origin is forecast from the
//! values strictly before it. DIRMO block-size scores are pooled across
//! series, which makes the DIRMO variants a second pass.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lazy::{AggregationPolicy, LazyLearner, Learner};
use crate::preprocessing::{
    deseasonalize, fit_seasonal, forward_backward_select, repair_gaps, reseasonalize_values, select_embedding,
    SeasonalModel, TargetSpec, DEFAULT_FBS_MAX_ITER,
};
use crate::series::{Calendar, LagOrigin, LagSet, TimeSeries, MAX_LAG};
use crate::strategies::{
    combine_dirmo, divisors, forecast_dirmo_block, forecast_with, DirmoVariant, LearnerConfig, StrategyVariant,
};

/// Symmetric mean absolute percentage error, in percent.
///
/// Terms whose actual and forecast sum to zero count as perfect.
pub fn smape(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    if actual.len() != forecast.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: forecast.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput("SMAPE window"));
    }
    let total: f64 = actual
        .iter()
        .zip(forecast)
        .map(|(y, f)| {
            let denom = (y + f) / 2.0;
            if denom == 0.0 {
                0.0
            } else {
                (f - y).abs() / denom
            }
        })
        .sum();
    Ok(100.0 * total / actual.len() as f64)
}

/// Mean of per-series SMAPE values.
pub fn smape_star(per_series: &[f64]) -> Result<f64> {
    if per_series.is_empty() {
        return Err(Error::EmptyInput("per-series SMAPE values"));
    }
    Ok(per_series.iter().sum::<f64>() / per_series.len() as f64)
}

/// One forecast launch: fit on `..start`, score `steps` values from `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Origin {
    pub start: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
    pub origins: Vec<Origin>,
}

/// Number of test origins of the default plan.
pub const DEFAULT_ORIGINS: usize = 3;

impl SplitPlan {
    /// Checks ordering and that every origin window lies in `test`.
    pub fn new(train: Range<usize>, validation: Range<usize>, test: Range<usize>, origins: Vec<Origin>) -> Result<Self> {
        if train.start != 0 || train.end != validation.start || validation.end != test.start {
            return Err(Error::InvalidConfig(format!(
                "split ranges must be contiguous from 0: {train:?}, {validation:?}, {test:?}"
            )));
        }
        if train.is_empty() || validation.is_empty() || origins.is_empty() {
            return Err(Error::InvalidConfig("train, validation and origins must be non-empty".into()));
        }
        for o in &origins {
            if o.steps == 0 || o.start < test.start || o.start + o.steps > test.end {
                return Err(Error::OriginOutOfRange {
                    start: o.start,
                    steps: o.steps,
                    len: test.end,
                });
            }
        }
        Ok(Self {
            train,
            validation,
            test,
            origins,
        })
    }

    /// Default layout: the last `h` values are the test window, the `h`
    /// before them the validation window. Origins start `round(k h / 8)`
    /// into the test window and run to the series end.
    pub fn for_length(n: usize, h: usize) -> Result<Self> {
        if h == 0 || n <= 2 * h {
            return Err(Error::SeriesTooShort {
                needed: 2 * h + 1,
                available: n,
            });
        }
        let test_start = n - h;
        let origins = (0..DEFAULT_ORIGINS)
            .map(|k| (h * k + 4) / 8)
            .map(|off| Origin {
                start: test_start + off,
                steps: h - off,
            })
            .collect();
        Self::new(0..n - 2 * h, n - 2 * h..test_start, test_start..n, origins)
    }

    /// Competition layout: validation is the last `h` values and the single
    /// origin forecasts `h` steps past the end.
    pub fn competition(n: usize, h: usize) -> Result<Self> {
        if h == 0 || n <= h {
            return Err(Error::SeriesTooShort {
                needed: h + 1,
                available: n,
            });
        }
        Ok(Self {
            train: 0..n - h,
            validation: n - h..n,
            test: n..n + h,
            origins: vec![Origin { start: n, steps: h }],
        })
    }

    /// End of the data preprocessing may look at.
    pub fn cutoff(&self) -> usize {
        self.test.start
    }
}

/// One cell of the configuration grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub deseasonalize: bool,
    pub input_selection: bool,
    pub policy: AggregationPolicy,
}

impl Configuration {
    /// Every combination of the given options, in canonical order.
    pub fn grid(deseasonalize: &[bool], input_selection: &[bool], policies: &[AggregationPolicy]) -> Vec<Self> {
        let mut out = Vec::new();
        for &d in deseasonalize {
            for &i in input_selection {
                for &p in policies {
                    out.push(Self {
                        deseasonalize: d,
                        input_selection: i,
                        policy: p,
                    });
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// The 12 configurations: 2 deseasonalization x 2 input selection x 3 policies.
    pub fn full_grid() -> Vec<Self> {
        Self::grid(&[false, true], &[false, true], &AggregationPolicy::ALL)
    }

    /// Whether `variant` is run under this configuration; DIRMO is too
    /// expensive with forward-backward selection and is skipped there.
    pub fn admits(&self, variant: StrategyVariant) -> bool {
        !(self.input_selection && variant.is_dirmo())
    }

    pub fn label(&self) -> String {
        format!(
            "{}+{}+{}",
            if self.deseasonalize { "deseason" } else { "raw" },
            if self.input_selection { "fbs" } else { "pacf" },
            self.policy.name()
        )
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad configuration label `{s}`"));
        let parts: Vec<&str> = s.trim().split('+').collect();
        let [d, i, p] = parts.as_slice() else {
            return Err(bad());
        };
        let deseasonalize = match *d {
            "deseason" => true,
            "raw" => false,
            _ => return Err(bad()),
        };
        let input_selection = match *i {
            "fbs" => true,
            "pacf" => false,
            _ => return Err(bad()),
        };
        Ok(Self {
            deseasonalize,
            input_selection,
            policy: p.parse()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSeries {
    pub name: String,
    pub series: TimeSeries,
}

impl NamedSeries {
    pub fn new(name: impl Into<String>, series: TimeSeries) -> Self {
        Self {
            name: name.into(),
            series,
        }
    }
}

/// Harness settings shared by both phases.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessOptions {
    pub horizon: usize,
    pub kmax_grid: Vec<usize>,
    pub strategies: Vec<StrategyVariant>,
    pub configurations: Vec<Configuration>,
    /// Split used for every series; `None` derives [`SplitPlan::for_length`] per series.
    pub plan: Option<SplitPlan>,
    pub fbs_max_iter: usize,
}

/// Neighbour-count grid tried on the validation window.
pub const DEFAULT_KMAX_GRID: [usize; 3] = [20, 50, 100];

impl HarnessOptions {
    pub fn new(horizon: usize, strategies: Vec<StrategyVariant>, configurations: Vec<Configuration>) -> Self {
        Self {
            horizon,
            kmax_grid: DEFAULT_KMAX_GRID.to_vec(),
            strategies,
            configurations,
            plan: None,
            fbs_max_iter: DEFAULT_FBS_MAX_ITER,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        if self.kmax_grid.is_empty() || self.kmax_grid.iter().any(|&k| k < 2) {
            return Err(Error::InvalidConfig("kmax grid must be non-empty with values >= 2".into()));
        }
        if self.strategies.is_empty() || self.configurations.is_empty() {
            return Err(Error::InvalidConfig("no strategies or configurations".into()));
        }
        Ok(())
    }

    fn kmax_grid(&self) -> Vec<usize> {
        let mut grid = self.kmax_grid.clone();
        grid.sort_unstable();
        grid.dedup();
        grid
    }
}

/// Score of one strategy at one origin of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRow {
    pub series: String,
    pub strategy: StrategyVariant,
    pub config: Configuration,
    pub origin: Origin,
    pub smape: f64,
    /// Reseasonalized, clamped forecast for the `origin.steps` scored values.
    pub forecast: Vec<f64>,
    pub kmax: usize,
}

/// A unit of work that failed; `strategy` is `None` when the whole
/// (series, configuration) preparation failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub series: String,
    pub config: Option<Configuration>,
    pub strategy: Option<StrategyVariant>,
    pub message: String,
}

/// Per-series scores of one configuration, restricted to series scored by
/// every listed strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub series: Vec<String>,
    pub strategies: Vec<StrategyVariant>,
    /// `scores[i][j]`: series `i`, strategy `j`.
    pub scores: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    pub rows: Vec<EvaluationRow>,
    pub failures: Vec<Failure>,
}

impl EvaluationReport {
    fn canonicalize(&mut self) {
        self.rows.sort_by(|a, b| {
            (&a.series, a.strategy, a.config, a.origin).cmp(&(&b.series, b.strategy, b.config, b.origin))
        });
        self.failures.sort_by(|a, b| {
            (&a.series, a.config, a.strategy, &a.message).cmp(&(&b.series, b.config, b.strategy, &b.message))
        });
    }

    /// Configurations with at least one row, in canonical order.
    pub fn configurations(&self) -> Vec<Configuration> {
        let mut out: Vec<Configuration> = self.rows.iter().map(|r| r.config).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Strategies with at least one row under `config`.
    pub fn strategies(&self, config: Configuration) -> Vec<StrategyVariant> {
        let mut out: Vec<StrategyVariant> = self.rows.iter().filter(|r| r.config == config).map(|r| r.strategy).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Per-series score: unweighted mean over origins.
    pub fn series_scores(&self, strategy: StrategyVariant, config: Configuration) -> BTreeMap<String, f64> {
        let mut acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.strategy == strategy && r.config == config) {
            acc.entry(r.series.clone()).or_default().push(r.smape);
        }
        acc.into_iter()
            .map(|(k, v)| (k, v.iter().sum::<f64>() / v.len() as f64))
            .collect()
    }

    pub fn smape_star(&self, strategy: StrategyVariant, config: Configuration) -> Result<f64> {
        let scores: Vec<f64> = self.series_scores(strategy, config).into_values().collect();
        smape_star(&scores)
    }

    pub fn score_matrix(&self, config: Configuration) -> ScoreMatrix {
        let strategies = self.strategies(config);
        let per: Vec<BTreeMap<String, f64>> = strategies.iter().map(|&s| self.series_scores(s, config)).collect();
        let mut series: Vec<String> = per.first().map(|m| m.keys().cloned().collect()).unwrap_or_default();
        series.retain(|name| per.iter().all(|m| m.contains_key(name)));
        let scores = series
            .iter()
            .map(|name| per.iter().map(|m| m[name]).collect())
            .collect();
        ScoreMatrix {
            series,
            strategies,
            scores,
        }
    }
}

/// A series made ready for one configuration.
#[derive(Debug, Clone)]
struct Prepared {
    actual: Vec<f64>,
    modeled: Vec<f64>,
    seasonal: Option<SeasonalModel>,
    calendar: Option<Calendar>,
    single_lags: Option<LagSet>,
    multi_lags: Option<LagSet>,
}

impl Prepared {
    fn fit_series(&self, end: usize) -> Result<TimeSeries> {
        TimeSeries::new(self.modeled[..end].to_vec())
    }

    /// Back to the original scale, forecast starting at `start`.
    fn restore(&self, start: usize, values: Vec<f64>) -> Vec<f64> {
        match (&self.seasonal, &self.calendar) {
            (Some(model), Some(cal)) => reseasonalize_values(&values, &cal.advanced(start), model),
            _ => values,
        }
    }

    fn lags_for(&self, variant: StrategyVariant) -> &LagSet {
        let lags = if variant.is_multiple_output() {
            &self.multi_lags
        } else {
            &self.single_lags
        };
        lags.as_ref().expect("lag set prepared for every requested strategy")
    }
}

fn clamp(values: Vec<f64>) -> Vec<f64> {
    values.into_iter().map(|v| v.max(0.0)).collect()
}

fn prepare(
    repaired: &TimeSeries,
    cutoff: usize,
    config: Configuration,
    options: &HarnessOptions,
    strategies: &[StrategyVariant],
) -> Result<Prepared> {
    let seasonal = if config.deseasonalize {
        Some(fit_seasonal(repaired, 0..cutoff)?)
    } else {
        None
    };
    let modeled = match &seasonal {
        Some(model) => deseasonalize(repaired, model)?,
        None => repaired.clone(),
    };
    let prefix = modeled.slice(0..cutoff)?;
    // leave room for a validation fit with enough rows to sweep neighbours
    let max_lag = ((cutoff.saturating_sub(options.horizon)) / 3).clamp(1, MAX_LAG);
    let base = match select_embedding(&prefix, max_lag) {
        Ok(lags) => lags,
        Err(Error::ZeroVariance) => LagSet::new(1..=7usize.min(max_lag), LagOrigin::Pacf)?,
        Err(e) => return Err(e),
    };
    let select = |target: TargetSpec| -> Result<LagSet> {
        if config.input_selection {
            Ok(forward_backward_select(&prefix, &base, target, options.fbs_max_iter)?.final_lags)
        } else {
            Ok(base.clone())
        }
    };
    let single_lags = if strategies.iter().any(|s| !s.is_multiple_output()) {
        Some(select(TargetSpec::single(1))?)
    } else {
        None
    };
    let multi_lags = if strategies.iter().any(|s| s.is_multiple_output()) {
        Some(select(TargetSpec::block(1, options.horizon))?)
    } else {
        None
    };
    Ok(Prepared {
        actual: repaired.values().to_vec(),
        modeled: modeled.values().to_vec(),
        seasonal,
        calendar: repaired.calendar().copied(),
        single_lags,
        multi_lags,
    })
}

fn learner_config(kmax: usize, config: Configuration) -> LearnerConfig {
    LearnerConfig {
        kmax,
        policy: config.policy,
    }
}

/// Reseasonalized forecast of `horizon` values from `start` for a non-DIRMO variant.
fn forecast_variant(
    prep: &Prepared,
    variant: StrategyVariant,
    config: Configuration,
    kmax: usize,
    horizon: usize,
    start: usize,
    learner: Option<&dyn Learner>,
) -> Result<Vec<f64>> {
    let spec = variant.spec(horizon, prep.lags_for(variant).clone(), learner_config(kmax, config));
    let fit = prep.fit_series(start)?;
    let lazy = spec.lazy_learner();
    let result = forecast_with(&fit, &spec, learner.unwrap_or(&lazy))?;
    Ok(prep.restore(start, result.values))
}

/// Reseasonalized forecasts of every DIRMO block size from `start`.
fn forecast_dirmo_blocks(
    prep: &Prepared,
    config: Configuration,
    kmax: usize,
    horizon: usize,
    start: usize,
    learner: Option<&dyn Learner>,
) -> Result<Vec<(usize, Vec<f64>)>> {
    let spec = StrategyVariant::DirmoSel.spec(
        horizon,
        prep.lags_for(StrategyVariant::DirmoSel).clone(),
        learner_config(kmax, config),
    );
    let fit = prep.fit_series(start)?;
    let lazy: LazyLearner = spec.lazy_learner();
    let learner = learner.unwrap_or(&lazy);
    divisors(horizon)
        .into_iter()
        .map(|s| {
            let f = forecast_dirmo_block(&fit, &spec, s, learner)?;
            Ok((s, prep.restore(start, f.values)))
        })
        .collect()
}

fn dirmo_variant(variant: StrategyVariant) -> DirmoVariant {
    match variant {
        StrategyVariant::DirmoSel => DirmoVariant::Select,
        StrategyVariant::DirmoAvg => DirmoVariant::Average,
        _ => DirmoVariant::WeightedAverage,
    }
}

/// Scores `forecast` (full horizon) against the actual values at `origin`.
fn score_origin(prep: &Prepared, origin: Origin, forecast: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    let end = (origin.start + origin.steps).min(prep.actual.len());
    let scored = clamp(forecast[..origin.steps].to_vec());
    if origin.start >= end {
        return Ok((f64::NAN, scored));
    }
    let value = smape(&prep.actual[origin.start..end], &scored[..end - origin.start])?;
    Ok((value, scored))
}

/// Lowest score wins; ties keep the smaller `Kmax` (grid is sorted).
fn best_by_score(candidates: impl IntoIterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, sc) in candidates {
        if best.is_none_or(|(_, b)| sc < b) {
            best = Some((k, sc));
        }
    }
    best
}

/// Everything kept from pass one for a (series, configuration) pair.
struct FirstPass {
    series: String,
    config: Configuration,
    prep: Prepared,
    plan: SplitPlan,
    /// Validation forecasts per `Kmax`, per block size.
    dirmo_validation: Vec<(usize, Vec<(usize, Vec<f64>)>)>,
}

fn plan_for(options: &HarnessOptions, len: usize, competition: bool) -> Result<SplitPlan> {
    if competition {
        return SplitPlan::competition(len, options.horizon);
    }
    match &options.plan {
        Some(plan) => {
            if plan.test.end > len {
                return Err(Error::OriginOutOfRange {
                    start: plan.test.start,
                    steps: plan.test.len(),
                    len,
                });
            }
            Ok(plan.clone())
        }
        None => SplitPlan::for_length(len, options.horizon),
    }
}

struct Harness<'a> {
    options: &'a HarnessOptions,
    learner: Option<&'a dyn Learner>,
    competition: bool,
}

impl Harness<'_> {
    fn first_pass(
        &self,
        name: &str,
        repaired: &TimeSeries,
        config: Configuration,
        rows: &mut Vec<EvaluationRow>,
        failures: &mut Vec<Failure>,
    ) -> Result<FirstPass> {
        let options = self.options;
        let h = options.horizon;
        let plan = plan_for(options, repaired.len(), self.competition)?;
        let strategies: Vec<StrategyVariant> = options
            .strategies
            .iter()
            .copied()
            .filter(|v| config.admits(*v))
            .collect();
        let prep = prepare(repaired, plan.cutoff(), config, options, &strategies)?;
        let val_actual = &prep.actual[plan.validation.clone()];
        let grid = options.kmax_grid();

        for &variant in strategies.iter().filter(|v| !v.is_dirmo()) {
            let outcome = (|| -> Result<Vec<EvaluationRow>> {
                let mut tried = Vec::with_capacity(grid.len());
                for &kmax in &grid {
                    let f = forecast_variant(&prep, variant, config, kmax, h, plan.validation.start, self.learner)?;
                    tried.push((kmax, smape(val_actual, &clamp(f[..val_actual.len()].to_vec()))?));
                }
                let (kmax, _) = best_by_score(tried).expect("grid is non-empty");
                plan.origins
                    .iter()
                    .map(|&origin| {
                        let f = forecast_variant(&prep, variant, config, kmax, h, origin.start, self.learner)?;
                        let (value, forecast) = score_origin(&prep, origin, f)?;
                        Ok(EvaluationRow {
                            series: name.to_string(),
                            strategy: variant,
                            config,
                            origin,
                            smape: value,
                            forecast,
                            kmax,
                        })
                    })
                    .collect()
            })();
            match outcome {
                Ok(r) => rows.extend(r),
                Err(e) => failures.push(Failure {
                    series: name.to_string(),
                    config: Some(config),
                    strategy: Some(variant),
                    message: e.to_string(),
                }),
            }
        }

        let mut dirmo_validation = Vec::new();
        if strategies.iter().any(|v| v.is_dirmo()) {
            for &kmax in &grid {
                let blocks = forecast_dirmo_blocks(&prep, config, kmax, h, plan.validation.start, self.learner)?;
                dirmo_validation.push((kmax, blocks));
            }
        }
        Ok(FirstPass {
            series: name.to_string(),
            config,
            prep,
            plan,
            dirmo_validation,
        })
    }

    /// DIRMO variants for one series, with block-size scores pooled across series.
    fn second_pass(&self, fp: &FirstPass, pooled: &BTreeMap<usize, Vec<(usize, f64)>>) -> Result<Vec<EvaluationRow>> {
        let h = self.options.horizon;
        let val_actual = &fp.prep.actual[fp.plan.validation.clone()];
        let mut rows = Vec::new();
        let mut test_cache: BTreeMap<usize, Vec<Vec<(usize, Vec<f64>)>>> = BTreeMap::new();
        for &variant in self.options.strategies.iter().filter(|v| v.is_dirmo()) {
            let mode = dirmo_variant(variant);
            let mut tried = Vec::new();
            for (kmax, blocks) in &fp.dirmo_validation {
                let (combined, _) = combine_dirmo(mode, blocks, &pooled[kmax])?;
                tried.push((*kmax, smape(val_actual, &clamp(combined[..val_actual.len()].to_vec()))?));
            }
            let (kmax, _) = best_by_score(tried).expect("grid is non-empty");
            if !test_cache.contains_key(&kmax) {
                let per_origin = fp
                    .plan
                    .origins
                    .iter()
                    .map(|o| forecast_dirmo_blocks(&fp.prep, fp.config, kmax, h, o.start, self.learner))
                    .collect::<Result<Vec<_>>>()?;
                test_cache.insert(kmax, per_origin);
            }
            for (origin, blocks) in fp.plan.origins.iter().zip(&test_cache[&kmax]) {
                let (combined, _) = combine_dirmo(mode, blocks, &pooled[&kmax])?;
                let (value, forecast) = score_origin(&fp.prep, *origin, combined)?;
                rows.push(EvaluationRow {
                    series: fp.series.clone(),
                    strategy: variant,
                    config: fp.config,
                    origin: *origin,
                    smape: value,
                    forecast,
                    kmax,
                });
            }
        }
        Ok(rows)
    }

    fn run(&self, series: &[NamedSeries]) -> Result<EvaluationReport> {
        self.options.validate()?;
        let mut report = EvaluationReport::default();

        let mut repaired = Vec::with_capacity(series.len());
        for s in series {
            match repair_gaps(&s.series) {
                Ok(r) => repaired.push((s.name.as_str(), r)),
                Err(e) => report.failures.push(Failure {
                    series: s.name.clone(),
                    config: None,
                    strategy: None,
                    message: e.to_string(),
                }),
            }
        }

        let tasks: Vec<(usize, Configuration)> = (0..repaired.len())
            .flat_map(|i| self.options.configurations.iter().map(move |&c| (i, c)))
            .collect();
        let first: Vec<(Vec<EvaluationRow>, Vec<Failure>, Option<FirstPass>)> = tasks
            .par_iter()
            .map(|&(i, config)| {
                let (name, series) = &repaired[i];
                let mut rows = Vec::new();
                let mut failures = Vec::new();
                let fp = match self.first_pass(name, series, config, &mut rows, &mut failures) {
                    Ok(fp) => Some(fp),
                    Err(e) => {
                        failures.push(Failure {
                            series: name.to_string(),
                            config: Some(config),
                            strategy: None,
                            message: e.to_string(),
                        });
                        None
                    }
                };
                (rows, failures, fp)
            })
            .collect();

        let mut passes = Vec::new();
        for (rows, failures, fp) in first {
            report.rows.extend(rows);
            report.failures.extend(failures);
            passes.extend(fp);
        }

        let pooled = pool_dirmo_scores(&passes)?;
        let second: Vec<std::result::Result<Vec<EvaluationRow>, Failure>> = passes
            .par_iter()
            .filter(|fp| !fp.dirmo_validation.is_empty())
            .map(|fp| {
                self.second_pass(fp, &pooled[&fp.config]).map_err(|e| Failure {
                    series: fp.series.clone(),
                    config: Some(fp.config),
                    strategy: self.options.strategies.iter().copied().find(|v| v.is_dirmo()),
                    message: e.to_string(),
                })
            })
            .collect();
        for outcome in second {
            match outcome {
                Ok(rows) => report.rows.extend(rows),
                Err(f) => report.failures.push(f),
            }
        }
        report.canonicalize();
        Ok(report)
    }
}

/// Mean validation SMAPE per (configuration, Kmax, block size) over series,
/// summed in canonical series order.
fn pool_dirmo_scores(passes: &[FirstPass]) -> Result<BTreeMap<Configuration, BTreeMap<usize, Vec<(usize, f64)>>>> {
    let mut sums: BTreeMap<Configuration, BTreeMap<usize, BTreeMap<usize, Vec<(String, f64)>>>> = BTreeMap::new();
    for fp in passes {
        let val_actual = &fp.prep.actual[fp.plan.validation.clone()];
        for (kmax, blocks) in &fp.dirmo_validation {
            for (s, f) in blocks {
                let value = smape(val_actual, &clamp(f[..val_actual.len()].to_vec()))?;
                sums.entry(fp.config)
                    .or_default()
                    .entry(*kmax)
                    .or_default()
                    .entry(*s)
                    .or_default()
                    .push((fp.series.clone(), value));
            }
        }
    }
    Ok(sums
        .into_iter()
        .map(|(config, per_k)| {
            let per_k = per_k
                .into_iter()
                .map(|(kmax, per_s)| {
                    let scores = per_s
                        .into_iter()
                        .map(|(s, mut vals)| {
                            vals.sort_by(|a, b| a.0.cmp(&b.0));
                            let mean = vals.iter().map(|(_, v)| v).sum::<f64>() / vals.len() as f64;
                            (s, mean)
                        })
                        .collect();
                    (kmax, scores)
                })
                .collect();
            (config, per_k)
        })
        .collect())
}

/// Pre-competition phase: every series under every configuration, scored
/// at each test origin.
pub fn run_precompetition(series: &[NamedSeries], options: &HarnessOptions) -> Result<EvaluationReport> {
    Harness {
        options,
        learner: None,
        competition: false,
    }
    .run(series)
}

/// As [`run_precompetition`] with an injected learner replacing the lazy one.
pub fn run_precompetition_with(series: &[NamedSeries], options: &HarnessOptions, learner: &dyn Learner) -> Result<EvaluationReport> {
    Harness {
        options,
        learner: Some(learner),
        competition: false,
    }
    .run(series)
}

/// Future forecasts of one series from the competition phase.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetitionForecast {
    pub series: String,
    pub strategy: StrategyVariant,
    pub config: Configuration,
    pub values: Vec<f64>,
    pub kmax: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompetitionReport {
    pub forecasts: Vec<CompetitionForecast>,
    pub failures: Vec<Failure>,
}

/// Competition phase: refit on every observed value, tune on the last
/// horizon, forecast `horizon` values past the end.
pub fn run_competition(series: &[NamedSeries], options: &HarnessOptions) -> Result<CompetitionReport> {
    let report = Harness {
        options,
        learner: None,
        competition: true,
    }
    .run(series)?;
    Ok(CompetitionReport {
        forecasts: report
            .rows
            .into_iter()
            .map(|r| CompetitionForecast {
                series: r.series,
                strategy: r.strategy,
                config: r.config,
                values: r.forecast,
                kmax: r.kmax,
            })
            .collect(),
        failures: report.failures,
    })
}

/// Multi-origin evaluation of one prepared series with a fixed strategy and
/// `Kmax`. Preprocessing is fit on the data before the first test origin.
pub fn evaluate_multi_origin(
    series: &TimeSeries,
    variant: StrategyVariant,
    config: Configuration,
    kmax: usize,
    horizon: usize,
    plan: &SplitPlan,
) -> Result<Vec<(Origin, f64, Vec<f64>)>> {
    evaluate_multi_origin_inner(series, variant, config, kmax, horizon, plan, None)
}

/// As [`evaluate_multi_origin`] with an injected learner.
pub fn evaluate_multi_origin_with(
    series: &TimeSeries,
    variant: StrategyVariant,
    config: Configuration,
    kmax: usize,
    horizon: usize,
    plan: &SplitPlan,
    learner: &dyn Learner,
) -> Result<Vec<(Origin, f64, Vec<f64>)>> {
    evaluate_multi_origin_inner(series, variant, config, kmax, horizon, plan, Some(learner))
}

fn evaluate_multi_origin_inner(
    series: &TimeSeries,
    variant: StrategyVariant,
    config: Configuration,
    kmax: usize,
    horizon: usize,
    plan: &SplitPlan,
    learner: Option<&dyn Learner>,
) -> Result<Vec<(Origin, f64, Vec<f64>)>> {
    if plan.test.end > series.len() {
        return Err(Error::OriginOutOfRange {
            start: plan.test.start,
            steps: plan.test.len(),
            len: series.len(),
        });
    }
    let mut options = HarnessOptions::new(horizon, vec![variant], vec![config]);
    options.kmax_grid = vec![kmax];
    let repaired = repair_gaps(series)?;
    let prep = prepare(&repaired, plan.cutoff(), config, &options, &[variant])?;
    plan.origins
        .iter()
        .map(|&origin| {
            let forecast = if variant.is_dirmo() {
                // without validation scores only the plain average is defined
                let blocks = forecast_dirmo_blocks(&prep, config, kmax, horizon, origin.start, learner)?;
                let unit: Vec<(usize, f64)> = blocks.iter().map(|(s, _)| (*s, 1.0)).collect();
                combine_dirmo(DirmoVariant::Average, &blocks, &unit)?.0
            } else {
                forecast_variant(&prep, variant, config, kmax, horizon, origin.start, learner)?
            };
            let (value, scored) = score_origin(&prep, origin, forecast)?;
            Ok((origin, value, scored))
        })
        .collect()
}

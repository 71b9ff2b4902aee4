//! Multi-step-ahead forecasting strategies.
//!
//! Every strategy is a composition of delay embeddings and learner queries.
//! The `*_with` functions take any [`Learner`], which is how oracle learners
//! are injected in tests; [`forecast`] builds the lazy learner from the spec.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evaluation::smape;
use crate::lazy::{AggregationPolicy, Criterion, LazyLearner, Learner, LearningTask, DEFAULT_KMAX};
use crate::series::{embed_multi_output, EmbeddedDataset, LagSet, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Rec,
    Dir,
    DirRec,
    Mimo,
    Dirmo,
}

/// How DIRMO settles the block size `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirmoVariant {
    Fixed(usize),
    /// Lowest validation SMAPE.
    Select,
    /// Plain mean of the forecasts of every divisor.
    Average,
    /// Mean weighted by `1 / validation SMAPE`.
    WeightedAverage,
}

/// Neighbour-count range and aggregation of the lazy learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LearnerConfig {
    pub kmax: usize,
    pub policy: AggregationPolicy,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            kmax: DEFAULT_KMAX,
            policy: AggregationPolicy::Winner,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub horizon: usize,
    pub lags: LagSet,
    /// Criterion of the multiple-output strategies; single-output ones always use LOO.
    pub mimo_criterion: Criterion,
    pub dirmo: DirmoVariant,
    /// Validation SMAPE per block size, used by the DIRMO combination variants.
    /// When empty they are computed on a hold-out of the last `horizon` values.
    pub dirmo_scores: Vec<(usize, f64)>,
    pub learner: LearnerConfig,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind, horizon: usize, lags: LagSet) -> Self {
        Self {
            kind,
            horizon,
            lags,
            mimo_criterion: Criterion::Loo,
            dirmo: DirmoVariant::Fixed(1),
            dirmo_scores: Vec::new(),
            learner: LearnerConfig::default(),
        }
    }

    pub fn with_learner(mut self, learner: LearnerConfig) -> Self {
        self.learner = learner;
        self
    }

    pub fn with_criterion(mut self, criterion: Criterion) -> Self {
        self.mimo_criterion = criterion;
        self
    }

    pub fn with_dirmo(mut self, variant: DirmoVariant) -> Self {
        self.dirmo = variant;
        self
    }

    /// The lazy learner this spec asks for.
    pub fn lazy_learner(&self) -> LazyLearner {
        let criterion = match self.kind {
            StrategyKind::Rec | StrategyKind::Dir | StrategyKind::DirRec => Criterion::Loo,
            StrategyKind::Mimo | StrategyKind::Dirmo => self.mimo_criterion,
        };
        LazyLearner::new(self.learner.kmax, criterion, self.learner.policy)
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        if let (StrategyKind::Dirmo, DirmoVariant::Fixed(s)) = (self.kind, self.dirmo) {
            check_block(s, self.horizon)?;
        }
        Ok(())
    }
}

/// The eight compared strategy variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyVariant {
    Rec,
    Dir,
    DirRec,
    MimoLoo,
    MimoAcfLin,
    DirmoSel,
    DirmoAvg,
    DirmoWavg,
}

impl StrategyVariant {
    pub const ALL: [StrategyVariant; 8] = [
        Self::Rec,
        Self::Dir,
        Self::DirRec,
        Self::MimoLoo,
        Self::MimoAcfLin,
        Self::DirmoSel,
        Self::DirmoAvg,
        Self::DirmoWavg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rec => "REC",
            Self::Dir => "DIR",
            Self::DirRec => "DIRREC",
            Self::MimoLoo => "MIMO-LOO",
            Self::MimoAcfLin => "MIMO-ACFLIN",
            Self::DirmoSel => "DIRMO-SEL",
            Self::DirmoAvg => "DIRMO-AVG",
            Self::DirmoWavg => "DIRMO-WAVG",
        }
    }

    pub fn is_dirmo(self) -> bool {
        matches!(self, Self::DirmoSel | Self::DirmoAvg | Self::DirmoWavg)
    }

    pub fn is_multiple_output(self) -> bool {
        matches!(self, Self::MimoLoo | Self::MimoAcfLin) || self.is_dirmo()
    }

    /// Spec for this variant; DIRMO variants use the LOO criterion.
    pub fn spec(self, horizon: usize, lags: LagSet, learner: LearnerConfig) -> StrategySpec {
        let (kind, criterion, dirmo) = match self {
            Self::Rec => (StrategyKind::Rec, Criterion::Loo, DirmoVariant::Fixed(1)),
            Self::Dir => (StrategyKind::Dir, Criterion::Loo, DirmoVariant::Fixed(1)),
            Self::DirRec => (StrategyKind::DirRec, Criterion::Loo, DirmoVariant::Fixed(1)),
            Self::MimoLoo => (StrategyKind::Mimo, Criterion::Loo, DirmoVariant::Fixed(1)),
            Self::MimoAcfLin => (StrategyKind::Mimo, Criterion::AcfLin, DirmoVariant::Fixed(1)),
            Self::DirmoSel => (StrategyKind::Dirmo, Criterion::Loo, DirmoVariant::Select),
            Self::DirmoAvg => (StrategyKind::Dirmo, Criterion::Loo, DirmoVariant::Average),
            Self::DirmoWavg => (StrategyKind::Dirmo, Criterion::Loo, DirmoVariant::WeightedAverage),
        };
        StrategySpec::new(kind, horizon, lags)
            .with_criterion(criterion)
            .with_dirmo(dirmo)
            .with_learner(learner)
    }
}

impl fmt::Display for StrategyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|v| v.name() == wanted)
            .or(match wanted.as_str() {
                "MIMO" => Some(Self::MimoLoo),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

/// Learner diagnostics for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostic {
    /// First forecast step (1-based) covered by the query.
    pub first_step: usize,
    /// Number of steps the query produced.
    pub steps: usize,
    pub best_k: Option<usize>,
    pub criterion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    /// Forecasts for steps `1..=H`.
    pub values: Vec<f64>,
    pub diagnostics: Vec<StepDiagnostic>,
    /// Block size picked by DIRMO-SEL, or the fixed DIRMO block size.
    pub chosen_s: Option<usize>,
}

impl ForecastResult {
    fn finish(values: Vec<f64>, diagnostics: Vec<StepDiagnostic>, horizon: usize) -> Result<Self> {
        if values.len() != horizon {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: horizon,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateSeries("forecast contains non-finite values".into()));
        }
        Ok(Self {
            values,
            diagnostics,
            chosen_s: None,
        })
    }
}

/// Divisors of `h` in increasing order.
pub fn divisors(h: usize) -> Vec<usize> {
    (1..=h).filter(|s| h % s == 0).collect()
}

fn check_block(s: usize, horizon: usize) -> Result<()> {
    if s == 0 || horizon % s != 0 {
        return Err(Error::InvalidBlockSize { block: s, horizon });
    }
    Ok(())
}

fn check_kind(spec: &StrategySpec, kind: StrategyKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidConfig(format!(
            "strategy spec is {:?}, expected {kind:?}",
            spec.kind
        )));
    }
    spec.validate()
}

fn query_learner(
    learner: &dyn Learner,
    dataset: &EmbeddedDataset,
    query: &[f64],
    history: &[f64],
    max_lag: usize,
    first_step: usize,
) -> Result<(Vec<f64>, StepDiagnostic)> {
    let task = LearningTask {
        dataset,
        query,
        history,
        max_lag,
    };
    let p = learner.predict(&task)?;
    if p.values.len() != dataset.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.output_dim(),
            got: p.values.len(),
        });
    }
    let diag = StepDiagnostic {
        first_step,
        steps: p.values.len(),
        best_k: p.best_k,
        criterion: p.best_criterion,
    };
    Ok((p.values, diag))
}

/// Recursive strategy: one one-step model iterated `H` times, feeding back
/// its own forecasts for lags that land in the future.
pub fn forecast_recursive_with(series: &TimeSeries, spec: &StrategySpec, learner: &dyn Learner) -> Result<ForecastResult> {
    check_kind(spec, StrategyKind::Rec)?;
    let dataset = embed_multi_output(series, &spec.lags, 1, 1)?;
    let mut history = series.values().to_vec();
    let mut diagnostics = Vec::with_capacity(spec.horizon);
    for h in 1..=spec.horizon {
        let query = spec.lags.query(&history)?;
        let (y, diag) = query_learner(learner, &dataset, &query, &history, spec.lags.max_lag(), h)?;
        history.push(y[0]);
        diagnostics.push(diag);
    }
    let values = history.split_off(series.len());
    ForecastResult::finish(values, diagnostics, spec.horizon)
}

/// Direct strategy: `H` independent models, all queried with observed values only.
pub fn forecast_direct_with(series: &TimeSeries, spec: &StrategySpec, learner: &dyn Learner) -> Result<ForecastResult> {
    check_kind(spec, StrategyKind::Dir)?;
    let query = spec.lags.query(series.values())?;
    let mut values = Vec::with_capacity(spec.horizon);
    let mut diagnostics = Vec::with_capacity(spec.horizon);
    for h in 1..=spec.horizon {
        let dataset = embed_multi_output(series, &spec.lags, h, 1)?;
        let (y, diag) = query_learner(learner, &dataset, &query, series.values(), spec.lags.max_lag(), h)?;
        values.push(y[0]);
        diagnostics.push(diag);
    }
    ForecastResult::finish(values, diagnostics, spec.horizon)
}

/// Training pairs of the DirRec model for step `h`: inputs are the `h - 1`
/// values following the anchor (most recent first) then the lag window.
fn dirrec_dataset(values: &[f64], lags: &LagSet, h: usize) -> Result<EmbeddedDataset> {
    let n = values.len();
    let needed = lags.max_lag() + h;
    if n < needed {
        return Err(Error::SeriesTooShort {
            needed,
            available: n,
        });
    }
    let dim = lags.len() + h - 1;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut anchors = Vec::new();
    for t in (lags.max_lag() - 1)..(n - h) {
        inputs.extend((1..h).rev().map(|j| values[t + j]));
        lags.fill_input(values, t, &mut inputs);
        outputs.push(values[t + h]);
        anchors.push(t);
    }
    EmbeddedDataset::from_flat(inputs, dim, outputs, 1, h, anchors)
}

/// DirRec strategy: `H` models whose inputs grow by one forecast per step.
pub fn forecast_dirrec_with(series: &TimeSeries, spec: &StrategySpec, learner: &dyn Learner) -> Result<ForecastResult> {
    check_kind(spec, StrategyKind::DirRec)?;
    series.ensure_gap_free()?;
    let base = spec.lags.query(series.values())?;
    let mut values: Vec<f64> = Vec::with_capacity(spec.horizon);
    let mut diagnostics = Vec::with_capacity(spec.horizon);
    for h in 1..=spec.horizon {
        let dataset = dirrec_dataset(series.values(), &spec.lags, h)?;
        let mut query: Vec<f64> = values.iter().rev().copied().collect();
        query.extend_from_slice(&base);
        let (y, diag) = query_learner(learner, &dataset, &query, series.values(), spec.lags.max_lag(), h)?;
        values.push(y[0]);
        diagnostics.push(diag);
    }
    ForecastResult::finish(values, diagnostics, spec.horizon)
}

/// MIMO strategy: one model predicting the whole horizon.
pub fn forecast_mimo_with(series: &TimeSeries, spec: &StrategySpec, learner: &dyn Learner) -> Result<ForecastResult> {
    check_kind(spec, StrategyKind::Mimo)?;
    let dataset = embed_multi_output(series, &spec.lags, 1, spec.horizon)?;
    let query = spec.lags.query(series.values())?;
    let (values, diag) = query_learner(learner, &dataset, &query, series.values(), spec.lags.max_lag(), 1)?;
    ForecastResult::finish(values, vec![diag], spec.horizon)
}

/// DIRMO with a fixed block size `s`: `H / s` block models, concatenated.
pub fn forecast_dirmo_block(series: &TimeSeries, spec: &StrategySpec, s: usize, learner: &dyn Learner) -> Result<ForecastResult> {
    check_block(s, spec.horizon)?;
    let query = spec.lags.query(series.values())?;
    let mut values = Vec::with_capacity(spec.horizon);
    let mut diagnostics = Vec::with_capacity(spec.horizon / s);
    for p in 0..spec.horizon / s {
        let first = p * s + 1;
        let dataset = embed_multi_output(series, &spec.lags, first, s)?;
        let (y, diag) = query_learner(learner, &dataset, &query, series.values(), spec.lags.max_lag(), first)?;
        values.extend(y);
        diagnostics.push(diag);
    }
    let mut out = ForecastResult::finish(values, diagnostics, spec.horizon)?;
    out.chosen_s = Some(s);
    Ok(out)
}

/// Validation SMAPE of every block size: fit on all but the last `H`
/// values, score against them.
pub fn dirmo_validation_scores(series: &TimeSeries, spec: &StrategySpec, learner: &dyn Learner) -> Result<Vec<(usize, f64)>> {
    let n = series.len();
    if n <= spec.horizon {
        return Err(Error::SeriesTooShort {
            needed: spec.horizon + 1,
            available: n,
        });
    }
    let fit = series.slice(0..n - spec.horizon)?;
    let actual = &series.values()[n - spec.horizon..];
    divisors(spec.horizon)
        .into_iter()
        .map(|s| {
            let f = forecast_dirmo_block(&fit, spec, s, learner)?;
            let clamped: Vec<f64> = f.values.iter().map(|v| v.max(0.0)).collect();
            Ok((s, smape(actual, &clamped)?))
        })
        .collect()
}

/// Combines per-block-size forecasts by a DIRMO variant.
///
/// `forecasts` and `scores` are keyed by block size; zero scores under
/// weighted averaging restrict the mean to those exact entries.
pub fn combine_dirmo(
    variant: DirmoVariant,
    forecasts: &[(usize, Vec<f64>)],
    scores: &[(usize, f64)],
) -> Result<(Vec<f64>, Option<usize>)> {
    if forecasts.is_empty() {
        return Err(Error::EmptyInput("DIRMO forecasts"));
    }
    let score_of = |s: usize| -> Result<f64> {
        scores
            .iter()
            .find(|(b, _)| *b == s)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::InvalidConfig(format!("no validation score for s = {s}")))
    };
    let h = forecasts[0].1.len();
    let mean_of = |items: Vec<(&Vec<f64>, f64)>| -> Vec<f64> {
        let total: f64 = items.iter().map(|(_, w)| w).sum();
        (0..h)
            .map(|i| items.iter().map(|(f, w)| w * f[i]).sum::<f64>() / total)
            .collect()
    };
    match variant {
        DirmoVariant::Fixed(s) => forecasts
            .iter()
            .find(|(b, _)| *b == s)
            .map(|(_, f)| (f.clone(), Some(s)))
            .ok_or_else(|| Error::InvalidConfig(format!("no forecast for s = {s}"))),
        DirmoVariant::Select => {
            let mut best: Option<(usize, f64)> = None;
            for (s, _) in forecasts {
                let score = score_of(*s)?;
                if best.is_none_or(|(_, b)| score < b) {
                    best = Some((*s, score));
                }
            }
            let (s, _) = best.expect("forecasts are non-empty");
            combine_dirmo(DirmoVariant::Fixed(s), forecasts, scores)
        }
        DirmoVariant::Average => Ok((mean_of(forecasts.iter().map(|(_, f)| (f, 1.0)).collect()), None)),
        DirmoVariant::WeightedAverage => {
            let weighted: Vec<(&Vec<f64>, f64)> = forecasts
                .iter()
                .map(|(s, f)| Ok((f, score_of(*s)?)))
                .collect::<Result<_>>()?;
            let items = if weighted.iter().any(|(_, sc)| *sc == 0.0) {
                weighted.into_iter().filter(|(_, sc)| *sc == 0.0).map(|(f, _)| (f, 1.0)).collect()
            } else {
                weighted.into_iter().map(|(f, sc)| (f, 1.0 / sc)).collect()
            };
            Ok((mean_of(items), None))
        }
    }
}

/// DIRMO strategy with any of its variants.
pub fn forecast_dirmo_with(series: &TimeSeries, spec: &StrategySpec, learner: &dyn Learner) -> Result<ForecastResult> {
    check_kind(spec, StrategyKind::Dirmo)?;
    if let DirmoVariant::Fixed(s) = spec.dirmo {
        return forecast_dirmo_block(series, spec, s, learner);
    }
    let scores = if spec.dirmo_scores.is_empty() {
        dirmo_validation_scores(series, spec, learner)?
    } else {
        spec.dirmo_scores.clone()
    };
    let block_sizes: Vec<usize> = match spec.dirmo {
        DirmoVariant::Select => {
            let mut best: Option<(usize, f64)> = None;
            for &(s, sc) in &scores {
                if best.is_none_or(|(_, b)| sc < b) {
                    best = Some((s, sc));
                }
            }
            vec![best.ok_or(Error::EmptyInput("DIRMO validation scores"))?.0]
        }
        _ => scores.iter().map(|(s, _)| *s).collect(),
    };
    let mut forecasts = Vec::with_capacity(block_sizes.len());
    let mut diagnostics = Vec::new();
    for s in block_sizes {
        let f = forecast_dirmo_block(series, spec, s, learner)?;
        diagnostics.extend(f.diagnostics);
        forecasts.push((s, f.values));
    }
    let (values, chosen) = combine_dirmo(spec.dirmo, &forecasts, &scores)?;
    let mut out = ForecastResult::finish(values, diagnostics, spec.horizon)?;
    out.chosen_s = chosen;
    Ok(out)
}

/// Dispatches on `spec.kind` with an arbitrary learner.
pub fn forecast_with(series: &TimeSeries, spec: &StrategySpec, learner: &dyn Learner) -> Result<ForecastResult> {
    match spec.kind {
        StrategyKind::Rec => forecast_recursive_with(series, spec, learner),
        StrategyKind::Dir => forecast_direct_with(series, spec, learner),
        StrategyKind::DirRec => forecast_dirrec_with(series, spec, learner),
        StrategyKind::Mimo => forecast_mimo_with(series, spec, learner),
        StrategyKind::Dirmo => forecast_dirmo_with(series, spec, learner),
    }
}

/// Forecasts `spec.horizon` steps with the lazy learner described by `spec`.
pub fn forecast(series: &TimeSeries, spec: &StrategySpec) -> Result<ForecastResult> {
    forecast_with(series, spec, &spec.lazy_learner())
}

pub fn forecast_recursive(series: &TimeSeries, spec: &StrategySpec) -> Result<ForecastResult> {
    forecast_recursive_with(series, spec, &spec.lazy_learner())
}

pub fn forecast_direct(series: &TimeSeries, spec: &StrategySpec) -> Result<ForecastResult> {
    forecast_direct_with(series, spec, &spec.lazy_learner())
}

pub fn forecast_dirrec(series: &TimeSeries, spec: &StrategySpec) -> Result<ForecastResult> {
    forecast_dirrec_with(series, spec, &spec.lazy_learner())
}

pub fn forecast_mimo(series: &TimeSeries, spec: &StrategySpec) -> Result<ForecastResult> {
    forecast_mimo_with(series, spec, &spec.lazy_learner())
}

pub fn forecast_dirmo(series: &TimeSeries, spec: &StrategySpec) -> Result<ForecastResult> {
    forecast_dirmo_with(series, spec, &spec.lazy_learner())
}

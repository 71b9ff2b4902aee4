//! Query-time local constant models.
//!
//! For a query the training inputs are ranked by Euclidean distance and, for
//! every neighbour count `k` in `2..=Kmax`, the prediction is the plain mean
//! of the `k` nearest outputs. Each `k` is scored either by the closed-form
//! leave-one-out (PRESS) error or by the autocorrelation discrepancy between
//! the series extended with the prediction and the series itself. A
//! [`AggregationPolicy`] turns the sweep into one prediction.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::preprocessing::{acf_values, pacf_from_acf};
use crate::series::EmbeddedDataset;

/// Upper bound on the number of ACF/PACF lags used by the discrepancy criterion.
pub const ACF_LAGS_CAP: usize = 56;

/// Default largest neighbour count.
pub const DEFAULT_KMAX: usize = 50;

/// Worst value of the discrepancy criterion.
const WORST_DISCREPANCY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// PRESS leave-one-out error.
    Loo,
    /// ACF/PACF discrepancy with the training series.
    AcfLin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggregationPolicy {
    Winner,
    Comb,
    Wcomb,
}

impl AggregationPolicy {
    pub const ALL: [AggregationPolicy; 3] = [Self::Winner, Self::Comb, Self::Wcomb];

    pub fn name(self) -> &'static str {
        match self {
            Self::Winner => "WINNER",
            Self::Comb => "COMB",
            Self::Wcomb => "WCOMB",
        }
    }
}

impl fmt::Display for AggregationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "WINNER" => Ok(Self::Winner),
            "COMB" => Ok(Self::Comb),
            "WCOMB" => Ok(Self::Wcomb),
            other => Err(Error::InvalidConfig(format!("unknown model selection `{other}`"))),
        }
    }
}

/// Per-`k` predictions and criterion values for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSweep {
    kmax: usize,
    output_dim: usize,
    predictions: Vec<f64>,
    criterion: Vec<f64>,
    kind: Criterion,
}

impl NeighborSweep {
    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn kind(&self) -> Criterion {
        self.kind
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Number of swept neighbour counts, `Kmax - 1`.
    pub fn len(&self) -> usize {
        self.criterion.len()
    }

    pub fn is_empty(&self) -> bool {
        self.criterion.is_empty()
    }

    pub fn k_values(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.kmax
    }

    /// Mean output of the `k` nearest neighbours.
    pub fn prediction(&self, k: usize) -> &[f64] {
        let i = k - 2;
        &self.predictions[i * self.output_dim..(i + 1) * self.output_dim]
    }

    pub fn criterion(&self, k: usize) -> f64 {
        self.criterion[k - 2]
    }

    pub fn criteria(&self) -> &[f64] {
        &self.criterion
    }

    /// `argmin_k criterion(k)`, lowest `k` on ties.
    pub fn best_k(&self) -> usize {
        let mut best = 0;
        for (i, c) in self.criterion.iter().enumerate() {
            if *c < self.criterion[best] {
                best = i;
            }
        }
        best + 2
    }
}

/// Dataset indices ordered by distance to `query`, lowest index on ties.
pub fn neighbor_order(dataset: &EmbeddedDataset, query: &[f64]) -> Result<Vec<usize>> {
    if query.len() != dataset.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.input_dim(),
            got: query.len(),
        });
    }
    let mut keyed: Vec<(f64, usize)> = (0..dataset.len())
        .map(|i| {
            let d: f64 = dataset
                .input(i)
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().map(|(_, i)| i).collect())
}

/// Leave-one-out residuals `e_j(k) = k (y_[j] - mean_k) / (k - 1)` of the
/// first `k` entries of `sorted_outputs`.
pub fn press_residuals(sorted_outputs: &[f64], k: usize) -> Vec<f64> {
    assert!(k >= 2 && k <= sorted_outputs.len(), "need 2 <= k <= len");
    let mean = sorted_outputs[..k].iter().sum::<f64>() / k as f64;
    let scale = k as f64 / (k as f64 - 1.0);
    sorted_outputs[..k].iter().map(|y| scale * (y - mean)).collect()
}

fn check_sweep_input(dataset: &EmbeddedDataset, kmax: usize) -> Result<()> {
    if kmax < 2 {
        return Err(Error::InvalidConfig(format!("Kmax must be at least 2, got {kmax}")));
    }
    if dataset.len() < kmax {
        return Err(Error::InsufficientNeighbors {
            kmax,
            available: dataset.len(),
        });
    }
    Ok(())
}

/// Per-`k` neighbour means; `sums` holds the running component sums.
fn neighbor_means(dataset: &EmbeddedDataset, order: &[usize], kmax: usize) -> Vec<f64> {
    let l = dataset.output_dim();
    let mut sums = vec![0.0; l];
    let mut means = Vec::with_capacity((kmax - 1) * l);
    for (rank, &idx) in order.iter().take(kmax).enumerate() {
        for (s, y) in sums.iter_mut().zip(dataset.output(idx)) {
            *s += y;
        }
        let k = rank + 1;
        if k >= 2 {
            means.extend(sums.iter().map(|s| s / k as f64));
        }
    }
    means
}

/// Sweep scored by the PRESS leave-one-out error, averaged over output
/// components for vector outputs.
pub fn neighbor_sweep_loo(dataset: &EmbeddedDataset, query: &[f64], kmax: usize) -> Result<NeighborSweep> {
    check_sweep_input(dataset, kmax)?;
    let order = neighbor_order(dataset, query)?;
    let l = dataset.output_dim();
    let predictions = neighbor_means(dataset, &order, kmax);
    let mut criterion = Vec::with_capacity(kmax - 1);
    for k in 2..=kmax {
        let mean = &predictions[(k - 2) * l..(k - 1) * l];
        let scale = k as f64 / (k as f64 - 1.0);
        let mut total = 0.0;
        for (c, &m) in mean.iter().enumerate() {
            let mut sq = 0.0;
            for &idx in &order[..k] {
                let e = scale * (dataset.output(idx)[c] - m);
                sq += e * e;
            }
            total += sq / k as f64;
        }
        criterion.push(total / l as f64);
    }
    Ok(NeighborSweep {
        kmax,
        output_dim: l,
        predictions,
        criterion,
        kind: Criterion::Loo,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Default number of ACF/PACF lags: `min(l + max_lag, 56, len / 4)`, at least 2.
pub fn default_acf_lags(output_dim: usize, max_lag: usize, series_len: usize) -> usize {
    (output_dim + max_lag)
        .min(ACF_LAGS_CAP)
        .min(series_len / 4)
        .max(2)
}

/// Discrepancy between the ACF/PACF of `history` and those of `history`
/// extended with `forecast`. Any degenerate correlation scores the worst value.
fn discrepancy(reference: Option<&(Vec<f64>, Vec<f64>)>, history: &[f64], forecast: &[f64], lags: usize) -> f64 {
    let Some((rho_ref, pi_ref)) = reference else {
        return WORST_DISCREPANCY;
    };
    let mut extended = Vec::with_capacity(history.len() + forecast.len());
    extended.extend_from_slice(history);
    extended.extend_from_slice(forecast);
    let Ok(rho) = acf_values(&extended, lags) else {
        return WORST_DISCREPANCY;
    };
    let pi = pacf_from_acf(&rho);
    match (pearson(&rho, rho_ref), pearson(&pi, pi_ref)) {
        (Some(a), Some(b)) => (1.0 - a.abs()) + (1.0 - b.abs()),
        _ => WORST_DISCREPANCY,
    }
}

/// Sweep scored by the ACF/PACF discrepancy criterion.
pub fn neighbor_sweep_acflin(
    train_series: &[f64],
    dataset: &EmbeddedDataset,
    query: &[f64],
    kmax: usize,
    acf_lags: usize,
) -> Result<NeighborSweep> {
    check_sweep_input(dataset, kmax)?;
    if acf_lags < 2 {
        return Err(Error::InvalidConfig(format!(
            "discrepancy criterion needs at least 2 ACF lags, got {acf_lags}"
        )));
    }
    if train_series.len() <= acf_lags {
        return Err(Error::SeriesTooShort {
            needed: acf_lags + 1,
            available: train_series.len(),
        });
    }
    let order = neighbor_order(dataset, query)?;
    let l = dataset.output_dim();
    let predictions = neighbor_means(dataset, &order, kmax);
    let reference = acf_values(train_series, acf_lags)
        .ok()
        .map(|rho| {
            let pi = pacf_from_acf(&rho);
            (rho, pi)
        });
    let criterion = predictions
        .chunks(l)
        .map(|pred| discrepancy(reference.as_ref(), train_series, pred, acf_lags))
        .collect();
    Ok(NeighborSweep {
        kmax,
        output_dim: l,
        predictions,
        criterion,
        kind: Criterion::AcfLin,
    })
}

fn average<'a, I: Iterator<Item = (&'a [f64], f64)>>(l: usize, items: I) -> Vec<f64> {
    let mut acc = vec![0.0; l];
    let mut total = 0.0;
    for (pred, w) in items {
        for (a, p) in acc.iter_mut().zip(pred) {
            *a += w * p;
        }
        total += w;
    }
    acc.iter().map(|a| a / total).collect()
}

/// Combines a sweep into a single prediction.
///
/// WCOMB weights by `1 / criterion(k)`; when some criteria are exactly zero
/// only those predictions are averaged.
pub fn aggregate(sweep: &NeighborSweep, policy: AggregationPolicy) -> Vec<f64> {
    let l = sweep.output_dim;
    let entries = || sweep.k_values().map(|k| (sweep.prediction(k), sweep.criterion(k)));
    match policy {
        AggregationPolicy::Winner => sweep.prediction(sweep.best_k()).to_vec(),
        AggregationPolicy::Comb => average(l, entries().map(|(p, _)| (p, 1.0))),
        AggregationPolicy::Wcomb => {
            if sweep.criterion.iter().any(|c| *c == 0.0) {
                average(l, entries().filter(|(_, c)| *c == 0.0).map(|(p, _)| (p, 1.0)))
            } else {
                average(l, entries().map(|(p, c)| (p, 1.0 / c)))
            }
        }
    }
}

/// Runs the sweep for `criterion` and aggregates it.
///
/// `train_series` is required for [`Criterion::AcfLin`]; `acf_lags` defaults
/// to [`default_acf_lags`] with the input dimension standing in for the
/// maximum lag.
pub fn lazy_predict(
    dataset: &EmbeddedDataset,
    query: &[f64],
    kmax: usize,
    criterion: Criterion,
    policy: AggregationPolicy,
    train_series: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let sweep = match criterion {
        Criterion::Loo => neighbor_sweep_loo(dataset, query, kmax)?,
        Criterion::AcfLin => {
            let series = train_series.ok_or_else(|| {
                Error::InvalidConfig("discrepancy criterion needs the training series".into())
            })?;
            let lags = default_acf_lags(dataset.output_dim(), dataset.input_dim(), series.len());
            neighbor_sweep_acflin(series, dataset, query, kmax, lags)?
        }
    };
    Ok(aggregate(&sweep, policy))
}

/// Everything a learner sees for one forecasting query.
#[derive(Debug, Clone, Copy)]
pub struct LearningTask<'a> {
    pub dataset: &'a EmbeddedDataset,
    pub query: &'a [f64],
    /// Series observed so far, most recent value last.
    pub history: &'a [f64],
    /// Largest lag of the embedding that produced `dataset`.
    pub max_lag: usize,
}

/// Output of a learner for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub values: Vec<f64>,
    /// Criterion-minimizing neighbour count, when the learner sweeps `k`.
    pub best_k: Option<usize>,
    pub best_criterion: Option<f64>,
}

impl Prediction {
    pub fn plain(values: Vec<f64>) -> Self {
        Self {
            values,
            best_k: None,
            best_criterion: None,
        }
    }
}

/// A model fitted and queried in one call.
pub trait Learner: Send + Sync {
    fn predict(&self, task: &LearningTask<'_>) -> Result<Prediction>;
}

/// The lazy learner: neighbour sweep plus aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LazyLearner {
    pub kmax: usize,
    pub criterion: Criterion,
    pub policy: AggregationPolicy,
    /// Overrides [`default_acf_lags`] when set.
    pub acf_lags: Option<usize>,
}

impl LazyLearner {
    pub fn new(kmax: usize, criterion: Criterion, policy: AggregationPolicy) -> Self {
        Self {
            kmax,
            criterion,
            policy,
            acf_lags: None,
        }
    }
}

impl Learner for LazyLearner {
    /// `Kmax` is capped at the dataset size.
    fn predict(&self, task: &LearningTask<'_>) -> Result<Prediction> {
        let kmax = self.kmax.min(task.dataset.len());
        let sweep = match self.criterion {
            Criterion::Loo => neighbor_sweep_loo(task.dataset, task.query, kmax)?,
            Criterion::AcfLin => {
                let lags = self.acf_lags.unwrap_or_else(|| {
                    default_acf_lags(task.dataset.output_dim(), task.max_lag, task.history.len())
                });
                neighbor_sweep_acflin(task.history, task.dataset, task.query, kmax, lags)?
            }
        };
        let best = sweep.best_k();
        Ok(Prediction {
            values: aggregate(&sweep, self.policy),
            best_k: Some(best),
            best_criterion: Some(sweep.criterion(best)),
        })
    }
}

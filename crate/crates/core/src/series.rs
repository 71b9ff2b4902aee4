//! Time-series representation and delay embedding.
//!
//! A [`TimeSeries`] holds daily observations plus a gap mask and an optional
//! [`Calendar`] anchor. Delay embedding turns a gap-free series into an
//! [`EmbeddedDataset`] of `(lag vector, future values)` pairs.
//!
//! Index conventions used throughout the crate:
//! - the anchor time `t` of a pair is the 0-based index of the most recent
//!   observation in its input vector;
//! - lag `L` refers to the value at index `t + 1 - L` (lag 1 is `y_t` itself);
//! - input vectors follow the ascending order of the lag set, so slot 0 is the
//!   smallest lag;
//! - output vectors are ordered nearest step first.

use std::ops::Range;

use chrono::{Datelike, Days, NaiveDate};

use crate::error::{Error, Result};

/// Largest lag any [`LagSet`] may contain.
pub const MAX_LAG: usize = 200;

/// Calendar position of the first observation of a daily series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Calendar {
    /// Day of week of row 0, `0 = Monday .. 6 = Sunday`.
    weekday: u8,
    /// Full date of row 0 when known; required for day-of-month effects.
    start_date: Option<NaiveDate>,
}

impl Calendar {
    pub fn from_date(date: NaiveDate) -> Self {
        Self {
            weekday: date.weekday().num_days_from_monday() as u8,
            start_date: Some(date),
        }
    }

    /// Anchor that only knows the day of week of row 0.
    pub fn weekday_only(weekday: u8) -> Result<Self> {
        if weekday > 6 {
            return Err(Error::InvalidConfig(format!(
                "weekday index {weekday} outside 0..=6"
            )));
        }
        Ok(Self {
            weekday,
            start_date: None,
        })
    }

    pub fn start_date(&self) -> Option<NaiveDate> {
        self.start_date
    }

    pub fn has_day_of_month(&self) -> bool {
        self.start_date.is_some()
    }

    /// Day of week (0..7) of the observation at `index`.
    pub fn day_of_week(&self, index: usize) -> usize {
        (self.weekday as usize + index) % 7
    }

    /// Day of month (1..=31) of the observation at `index`, when the start date is known.
    pub fn day_of_month(&self, index: usize) -> Option<usize> {
        self.start_date
            .and_then(|d| d.checked_add_days(Days::new(index as u64)))
            .map(|d| d.day() as usize)
    }

    /// Calendar of a series that starts `days` rows later.
    pub fn advanced(&self, days: usize) -> Self {
        Self {
            weekday: ((self.weekday as usize + days) % 7) as u8,
            start_date: self
                .start_date
                .and_then(|d| d.checked_add_days(Days::new(days as u64))),
        }
    }
}

/// Ordered daily observations with a gap mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    missing: Vec<bool>,
    calendar: Option<Calendar>,
}

impl TimeSeries {
    /// Builds a series; non-finite values are recorded as gaps.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let missing = values.iter().map(|v| !v.is_finite()).collect();
        Self::with_missing(values, missing)
    }

    pub fn with_missing(mut values: Vec<f64>, mut missing: Vec<bool>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSeries("series must hold at least one value".into()));
        }
        if missing.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: missing.len(),
            });
        }
        for (v, m) in values.iter_mut().zip(missing.iter_mut()) {
            if !v.is_finite() {
                *m = true;
            }
            if *m {
                *v = f64::NAN;
            }
        }
        Ok(Self {
            values,
            missing,
            calendar: None,
        })
    }

    pub fn with_calendar(mut self, calendar: Calendar) -> Self {
        self.calendar = Some(calendar);
        self
    }

    pub fn set_calendar(&mut self, calendar: Option<Calendar>) {
        self.calendar = calendar;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Raw values; gap positions hold `NaN`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    pub fn calendar(&self) -> Option<&Calendar> {
        self.calendar.as_ref()
    }

    pub fn gap_count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }

    pub fn is_gap_free(&self) -> bool {
        self.gap_count() == 0
    }

    pub fn ensure_gap_free(&self) -> Result<()> {
        match self.gap_count() {
            0 => Ok(()),
            count => Err(Error::GapsPresent { count }),
        }
    }

    /// Sub-series over `range`; the calendar anchor moves with the start.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidSeries(format!(
                "slice {}..{} invalid for length {}",
                range.start,
                range.end,
                self.len()
            )));
        }
        Ok(Self {
            values: self.values[range.clone()].to_vec(),
            missing: self.missing[range.clone()].to_vec(),
            calendar: self.calendar.map(|c| c.advanced(range.start)),
        })
    }

    /// Gap-free series with the same calendar and new values.
    pub(crate) fn replace_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(values)?;
        out.calendar = self.calendar;
        Ok(out)
    }
}

/// How a lag set was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LagOrigin {
    Pacf,
    PacfPlusFbs,
    Manual,
}

/// Strictly increasing set of positive lags, `1 ..= MAX_LAG`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LagSet {
    lags: Vec<usize>,
    origin: LagOrigin,
}

impl LagSet {
    pub fn new<I: IntoIterator<Item = usize>>(lags: I, origin: LagOrigin) -> Result<Self> {
        let mut lags: Vec<usize> = lags.into_iter().collect();
        lags.sort_unstable();
        lags.dedup();
        if lags.is_empty() {
            return Err(Error::InvalidLags("lag set must not be empty".into()));
        }
        if lags[0] == 0 {
            return Err(Error::InvalidLags("lags start at 1".into()));
        }
        if let Some(&max) = lags.last() {
            if max > MAX_LAG {
                return Err(Error::InvalidLags(format!(
                    "lag {max} exceeds the maximum of {MAX_LAG}"
                )));
            }
        }
        Ok(Self { lags, origin })
    }

    /// The contiguous window `{1..=d}`.
    pub fn contiguous(d: usize) -> Result<Self> {
        Self::new(1..=d, LagOrigin::Manual)
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn origin(&self) -> LagOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    pub fn max_lag(&self) -> usize {
        *self.lags.last().expect("lag set is never empty")
    }

    pub fn contains(&self, lag: usize) -> bool {
        self.lags.binary_search(&lag).is_ok()
    }

    /// Input vector whose most recent observation is `history[history.len() - 1]`.
    pub fn query(&self, history: &[f64]) -> Result<Vec<f64>> {
        if history.len() < self.max_lag() {
            return Err(Error::SeriesTooShort {
                needed: self.max_lag(),
                available: history.len(),
            });
        }
        let n = history.len();
        Ok(self.lags.iter().map(|&lag| history[n - lag]).collect())
    }

    /// Fills `buf` with the input vector anchored at index `t`.
    pub(crate) fn fill_input(&self, values: &[f64], t: usize, buf: &mut Vec<f64>) {
        buf.extend(self.lags.iter().map(|&lag| values[t + 1 - lag]));
    }
}

/// Input/output pairs obtained by delay embedding.
///
/// Rows are stored flat: row `i` of the inputs is
/// `inputs[i * input_dim .. (i + 1) * input_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDataset {
    inputs: Vec<f64>,
    outputs: Vec<f64>,
    input_dim: usize,
    output_dim: usize,
    horizon_offset: usize,
    anchors: Vec<usize>,
}

impl EmbeddedDataset {
    /// Builds a dataset from flat row-major buffers.
    pub fn from_flat(
        inputs: Vec<f64>,
        input_dim: usize,
        outputs: Vec<f64>,
        output_dim: usize,
        horizon_offset: usize,
        anchors: Vec<usize>,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidConfig("dimensions must be positive".into()));
        }
        let m = anchors.len();
        if m == 0 {
            return Err(Error::EmptyInput("embedded dataset"));
        }
        if inputs.len() != m * input_dim {
            return Err(Error::LengthMismatch {
                left: inputs.len(),
                right: m * input_dim,
            });
        }
        if outputs.len() != m * output_dim {
            return Err(Error::LengthMismatch {
                left: outputs.len(),
                right: m * output_dim,
            });
        }
        if inputs.iter().chain(outputs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::GapsPresent {
                count: inputs
                    .iter()
                    .chain(outputs.iter())
                    .filter(|v| !v.is_finite())
                    .count(),
            });
        }
        Ok(Self {
            inputs,
            outputs,
            input_dim,
            output_dim,
            horizon_offset,
            anchors,
        })
    }

    /// Builds a dataset from explicit rows; anchors are the row indices.
    pub fn from_rows(inputs: &[Vec<f64>], outputs: &[Vec<f64>], horizon_offset: usize) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::LengthMismatch {
                left: inputs.len(),
                right: outputs.len(),
            });
        }
        let input_dim = inputs.first().map_or(0, Vec::len);
        let output_dim = outputs.first().map_or(0, Vec::len);
        for row in inputs {
            if row.len() != input_dim {
                return Err(Error::DimensionMismatch {
                    expected: input_dim,
                    got: row.len(),
                });
            }
        }
        for row in outputs {
            if row.len() != output_dim {
                return Err(Error::DimensionMismatch {
                    expected: output_dim,
                    got: row.len(),
                });
            }
        }
        Self::from_flat(
            inputs.concat(),
            input_dim,
            outputs.concat(),
            output_dim,
            horizon_offset,
            (0..inputs.len()).collect(),
        )
    }

    /// Number of pairs `M`.
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// First future step represented by the outputs.
    pub fn horizon_offset(&self) -> usize {
        self.horizon_offset
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn output(&self, i: usize) -> &[f64] {
        &self.outputs[i * self.output_dim..(i + 1) * self.output_dim]
    }

    /// Anchor time index `t` of pair `i`.
    pub fn anchor(&self, i: usize) -> usize {
        self.anchors[i]
    }
}

/// Embeds `series` into pairs `y(t at lags) -> y_{t+h}`.
pub fn embed_single_output(series: &TimeSeries, lags: &LagSet, h: usize) -> Result<EmbeddedDataset> {
    embed_multi_output(series, lags, h, 1)
}

/// Embeds `series` into pairs `y(t at lags) -> [y_{t+first}, .., y_{t+first+block-1}]`.
pub fn embed_multi_output(
    series: &TimeSeries,
    lags: &LagSet,
    first: usize,
    block: usize,
) -> Result<EmbeddedDataset> {
    if first == 0 || block == 0 {
        return Err(Error::InvalidConfig(
            "horizon offset and block size must be positive".into(),
        ));
    }
    series.ensure_gap_free()?;
    embed_values(series.values(), lags, first, block)
}

pub(crate) fn embed_values(
    values: &[f64],
    lags: &LagSet,
    first: usize,
    block: usize,
) -> Result<EmbeddedDataset> {
    let n = values.len();
    let max_lag = lags.max_lag();
    let last_step = first + block - 1;
    let needed = max_lag + last_step;
    if n < needed {
        return Err(Error::SeriesTooShort {
            needed,
            available: n,
        });
    }
    let m = n - needed + 1;
    let mut inputs = Vec::with_capacity(m * lags.len());
    let mut outputs = Vec::with_capacity(m * block);
    let mut anchors = Vec::with_capacity(m);
    for t in (max_lag - 1)..(n - last_step) {
        lags.fill_input(values, t, &mut inputs);
        outputs.extend_from_slice(&values[t + first..=t + last_step]);
        anchors.push(t);
    }
    EmbeddedDataset::from_flat(inputs, lags.len(), outputs, block, first, anchors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.to_vec()).unwrap()
    }

    fn rows(ds: &EmbeddedDataset) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..ds.len())
            .map(|i| (ds.input(i).to_vec(), ds.output(i).to_vec()))
            .collect()
    }

    #[test]
    fn single_output_unrolls_h1() {
        let s = series(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let lags = LagSet::contiguous(2).unwrap();
        let ds = embed_single_output(&s, &lags, 1).unwrap();
        assert_eq!(
            rows(&ds),
            vec![
                (vec![2.0, 1.0], vec![3.0]),
                (vec![3.0, 2.0], vec![4.0]),
                (vec![4.0, 3.0], vec![5.0]),
            ]
        );
    }

    #[test]
    fn single_output_unrolls_h2() {
        let s = series(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let lags = LagSet::contiguous(2).unwrap();
        let ds = embed_single_output(&s, &lags, 2).unwrap();
        assert_eq!(
            rows(&ds),
            vec![(vec![2.0, 1.0], vec![4.0]), (vec![3.0, 2.0], vec![5.0])]
        );
        assert_eq!(ds.horizon_offset(), 2);
    }

    #[test]
    fn too_short_series_is_rejected() {
        let s = series(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let lags = LagSet::contiguous(2).unwrap();
        assert!(matches!(
            embed_single_output(&s, &lags, 4),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn multi_output_blocks() {
        let s = series(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let lags = LagSet::contiguous(2).unwrap();
        let ds = embed_multi_output(&s, &lags, 1, 2).unwrap();
        assert_eq!(
            rows(&ds),
            vec![
                (vec![2.0, 1.0], vec![3.0, 4.0]),
                (vec![3.0, 2.0], vec![4.0, 5.0])
            ]
        );
    }

    #[test]
    fn multi_output_offset_block_matches_enumeration() {
        let values: Vec<f64> = (1..=10).map(f64::from).collect();
        let s = series(&values);
        let lags = LagSet::contiguous(1).unwrap();
        let ds = embed_multi_output(&s, &lags, 3, 2).unwrap();

        // brute force: every window (t, t+3, t+4) that fits inside the series
        let expected: Vec<(Vec<f64>, Vec<f64>)> = (0..values.len())
            .filter(|t| t + 4 < values.len())
            .map(|t| (vec![values[t]], vec![values[t + 3], values[t + 4]]))
            .collect();
        assert_eq!(rows(&ds), expected);
        assert_eq!(rows(&ds)[0], (vec![1.0], vec![4.0, 5.0]));
    }

    #[test]
    fn sparse_lags_read_the_right_positions() {
        let values: Vec<f64> = (0..20).map(f64::from).collect();
        let s = series(&values);
        let lags = LagSet::new([1, 7], LagOrigin::Manual).unwrap();
        let ds = embed_single_output(&s, &lags, 1).unwrap();
        for i in 0..ds.len() {
            let t = ds.anchor(i);
            assert_eq!(ds.input(i), &[values[t], values[t - 6]]);
            assert_eq!(ds.output(i), &[values[t + 1]]);
        }
        assert_eq!(ds.len(), 20 - 7 - 1 + 1);
    }

    #[test]
    fn gaps_block_embedding() {
        let s = TimeSeries::new(vec![1.0, f64::NAN, 3.0, 4.0]).unwrap();
        let lags = LagSet::contiguous(1).unwrap();
        assert!(matches!(
            embed_single_output(&s, &lags, 1),
            Err(Error::GapsPresent { count: 1 })
        ));
    }

    #[test]
    fn lag_set_validation() {
        assert!(LagSet::new(Vec::<usize>::new(), LagOrigin::Manual).is_err());
        assert!(LagSet::new([0, 1], LagOrigin::Manual).is_err());
        assert!(LagSet::new([201], LagOrigin::Manual).is_err());
        let l = LagSet::new([7, 1, 7, 3], LagOrigin::Pacf).unwrap();
        assert_eq!(l.lags(), &[1, 3, 7]);
        assert_eq!(l.query(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap(), vec![7.0, 5.0, 1.0]);
    }

    #[test]
    fn calendar_advances_weekday_and_month_day() {
        let c = Calendar::from_date(NaiveDate::from_ymd_opt(1996, 3, 18).unwrap());
        assert_eq!(c.day_of_week(0), 0);
        assert_eq!(c.day_of_week(6), 6);
        assert_eq!(c.day_of_week(7), 0);
        assert_eq!(c.day_of_month(0), Some(18));
        assert_eq!(c.day_of_month(14), Some(1));
        let later = c.advanced(14);
        assert_eq!(later.day_of_month(0), Some(1));
        assert_eq!(later.day_of_week(0), 0);
        let w = Calendar::weekday_only(5).unwrap();
        assert_eq!(w.day_of_month(3), None);
        assert_eq!(w.day_of_week(3), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn lagset() -> impl Strategy<Value = LagSet> {
            proptest::collection::btree_set(1usize..12, 1..5)
                .prop_map(|s| LagSet::new(s, LagOrigin::Manual).unwrap())
        }

        proptest! {
            #[test]
            fn block_one_equals_single_output(
                values in proptest::collection::vec(-100.0f64..100.0, 30..60),
                lags in lagset(),
                h in 1usize..6,
            ) {
                let s = TimeSeries::new(values).unwrap();
                let a = embed_single_output(&s, &lags, h).unwrap();
                let b = embed_multi_output(&s, &lags, h, 1).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn rows_reproduce_series_positions(
                values in proptest::collection::vec(-100.0f64..100.0, 30..60),
                lags in lagset(),
                first in 1usize..4,
                block in 1usize..5,
            ) {
                let s = TimeSeries::new(values.clone()).unwrap();
                let ds = embed_multi_output(&s, &lags, first, block).unwrap();
                prop_assert_eq!(ds.len(), values.len() - lags.max_lag() - first - block + 2);
                for i in 0..ds.len() {
                    let t = ds.anchor(i);
                    for (slot, &lag) in lags.lags().iter().enumerate() {
                        prop_assert_eq!(ds.input(i)[slot], values[t + 1 - lag]);
                    }
                    prop_assert_eq!(ds.output(i), &values[t + first..t + first + block]);
                }
            }
        }
    }
}

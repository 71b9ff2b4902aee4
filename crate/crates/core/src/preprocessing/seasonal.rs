use std::ops::Range;

use crate::error::{Error, Result};
use crate::series::{Calendar, TimeSeries};

/// Pseudo-count used to shrink day-of-month factors of days 29..=31 toward 1.
const SPARSE_DAY_PRIOR: f64 = 5.0;

/// Multiplicative day-of-week and day-of-month indices.
///
/// Both factor sets have mean 1. When the calendar only knows the weekday,
/// the monthly factors are all 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalModel {
    weekly: [f64; 7],
    monthly: [f64; 31],
    fitted_on: Range<usize>,
}

impl SeasonalModel {
    /// Model whose factors are all 1.
    pub fn identity() -> Self {
        Self {
            weekly: [1.0; 7],
            monthly: [1.0; 31],
            fitted_on: 0..0,
        }
    }

    /// Builds a model from explicit factors; every factor must be positive and finite.
    pub fn from_factors(weekly: [f64; 7], monthly: [f64; 31]) -> Result<Self> {
        if weekly
            .iter()
            .chain(monthly.iter())
            .any(|f| !(f.is_finite() && *f > 0.0))
        {
            return Err(Error::InvalidConfig(
                "seasonal factors must be positive and finite".into(),
            ));
        }
        Ok(Self {
            weekly,
            monthly,
            fitted_on: 0..0,
        })
    }

    pub fn weekly(&self) -> &[f64; 7] {
        &self.weekly
    }

    /// Day-of-month factors, index 0 = day 1.
    pub fn monthly(&self) -> &[f64; 31] {
        &self.monthly
    }

    pub fn fitted_on(&self) -> Range<usize> {
        self.fitted_on.clone()
    }

    /// Combined factor for row `index` of a series anchored at `calendar`.
    pub fn factor(&self, calendar: &Calendar, index: usize) -> f64 {
        let weekly = self.weekly[calendar.day_of_week(index)];
        let monthly = calendar
            .day_of_month(index)
            .map_or(1.0, |d| self.monthly[d - 1]);
        weekly * monthly
    }
}

fn normalize_to_unit_mean(factors: &mut [f64]) {
    let mean = factors.iter().sum::<f64>() / factors.len() as f64;
    for f in factors.iter_mut() {
        *f /= mean;
    }
}

/// Fits weekly then monthly indices on `fit_range` of a gap-free series.
pub fn fit_seasonal(series: &TimeSeries, fit_range: Range<usize>) -> Result<SeasonalModel> {
    let calendar = *series
        .calendar()
        .ok_or_else(|| Error::CalendarMissing("seasonal fit needs a calendar anchor".into()))?;
    if fit_range.end > series.len() || fit_range.start >= fit_range.end {
        return Err(Error::InvalidConfig(format!(
            "fit range {}..{} invalid for length {}",
            fit_range.start,
            fit_range.end,
            series.len()
        )));
    }
    if fit_range.len() < 14 {
        return Err(Error::SeriesTooShort {
            needed: 14,
            available: fit_range.len(),
        });
    }
    let values = &series.values()[fit_range.clone()];
    if series.missing_mask()[fit_range.clone()].iter().any(|m| *m) {
        return Err(Error::GapsPresent {
            count: series.missing_mask()[fit_range.clone()]
                .iter()
                .filter(|m| **m)
                .count(),
        });
    }
    let overall = values.iter().sum::<f64>() / values.len() as f64;
    if overall <= 0.0 {
        return Err(Error::DegenerateSeries(format!(
            "training mean {overall} is not positive"
        )));
    }

    let mut sums = [0.0; 7];
    let mut counts = [0usize; 7];
    for (i, v) in values.iter().enumerate() {
        let dow = calendar.day_of_week(fit_range.start + i);
        sums[dow] += v;
        counts[dow] += 1;
    }
    let mut weekly = [1.0; 7];
    for d in 0..7 {
        if counts[d] > 0 {
            weekly[d] = sums[d] / counts[d] as f64 / overall;
        }
    }
    if weekly.iter().any(|f| *f <= 0.0) {
        return Err(Error::DegenerateSeries(
            "a day-of-week mean is not positive".into(),
        ));
    }
    normalize_to_unit_mean(&mut weekly);

    let mut monthly = [1.0; 31];
    if calendar.has_day_of_month() {
        let mut sums = [0.0; 31];
        let mut counts = [0usize; 31];
        let mut total = 0.0;
        for (i, v) in values.iter().enumerate() {
            let idx = fit_range.start + i;
            let z = v / weekly[calendar.day_of_week(idx)];
            let dom = calendar.day_of_month(idx).expect("calendar has a start date") - 1;
            sums[dom] += z;
            counts[dom] += 1;
            total += z;
        }
        let mean_z = total / values.len() as f64;
        for d in 0..31 {
            if counts[d] == 0 {
                continue;
            }
            let raw = sums[d] / counts[d] as f64 / mean_z;
            monthly[d] = if d >= 28 {
                let n = counts[d] as f64;
                1.0 + n / (n + SPARSE_DAY_PRIOR) * (raw - 1.0)
            } else {
                raw
            };
        }
        if monthly.iter().any(|f| *f <= 0.0) {
            return Err(Error::DegenerateSeries(
                "a day-of-month mean is not positive".into(),
            ));
        }
        normalize_to_unit_mean(&mut monthly);
    }

    Ok(SeasonalModel {
        weekly,
        monthly,
        fitted_on: fit_range,
    })
}

fn require_calendar(series: &TimeSeries) -> Result<Calendar> {
    series
        .calendar()
        .copied()
        .ok_or_else(|| Error::CalendarMissing("series has no calendar anchor".into()))
}

/// Divides every value by its calendar factor.
pub fn deseasonalize(series: &TimeSeries, model: &SeasonalModel) -> Result<TimeSeries> {
    let calendar = require_calendar(series)?;
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v / model.factor(&calendar, i))
        .collect();
    let mut out = TimeSeries::with_missing(values, series.missing_mask().to_vec())?;
    out.set_calendar(Some(calendar));
    Ok(out)
}

/// Multiplies every value by its calendar factor; inverse of [`deseasonalize`].
pub fn reseasonalize(series: &TimeSeries, model: &SeasonalModel) -> Result<TimeSeries> {
    let calendar = require_calendar(series)?;
    let values = reseasonalize_values(series.values(), &calendar, model);
    let mut out = TimeSeries::with_missing(values, series.missing_mask().to_vec())?;
    out.set_calendar(Some(calendar));
    Ok(out)
}

/// Reseasonalizes forecast values whose first element sits at `calendar` row 0.
pub fn reseasonalize_values(values: &[f64], calendar: &Calendar, model: &SeasonalModel) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| v * model.factor(calendar, i))
        .collect()
}

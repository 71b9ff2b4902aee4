use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Offsets of the donor observations used to fill a gap: one year and one
/// week on either side.
const DONOR_OFFSETS: [isize; 4] = [365, -365, 7, -7];

/// True when position `i` counts as a gap: recorded as missing or holding an
/// exact zero (no withdrawal recorded).
fn is_gap(series: &TimeSeries, i: usize) -> bool {
    series.missing_mask()[i] || series.values()[i] == 0.0
}

/// Replaces every gap with the median of its available donors
/// `y[m+365], y[m-365], y[m+7], y[m-7]`.
///
/// Donors are read from the input series, so a donor that is itself a gap is
/// never used.
pub fn repair_gaps(series: &TimeSeries) -> Result<TimeSeries> {
    let n = series.len() as isize;
    let values = series.values();
    let mut repaired = values.to_vec();
    let mut donors = Vec::with_capacity(DONOR_OFFSETS.len());
    for m in 0..series.len() {
        if !is_gap(series, m) {
            continue;
        }
        donors.clear();
        for off in DONOR_OFFSETS {
            let j = m as isize + off;
            if (0..n).contains(&j) && !is_gap(series, j as usize) {
                donors.push(values[j as usize]);
            }
        }
        repaired[m] = median(&mut donors).ok_or(Error::UnrepairableGap { index: m })?;
    }
    series.replace_values(repaired)
}

/// Median of `xs` (mean of the middle pair for even counts); reorders `xs`.
pub(crate) fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn with_gap_at(values: Vec<f64>, m: usize) -> TimeSeries {
        let mut mask = vec![false; values.len()];
        mask[m] = true;
        TimeSeries::with_missing(values, mask).unwrap()
    }

    #[test]
    fn two_donors_give_midpoint() {
        // length 30 so the yearly donors fall out of range
        let mut values = vec![5.0; 30];
        values[3] = 10.0;
        values[17] = 14.0;
        let s = with_gap_at(values, 10);
        let r = repair_gaps(&s).unwrap();
        assert_eq!(r.values()[10], 12.0);
        assert!(r.is_gap_free());
    }

    #[test]
    fn four_donors_give_mean_of_middle_pair() {
        let mut values = vec![1.0; 800];
        let m = 400;
        values[m + 365] = 8.0;
        values[m - 365] = 10.0;
        values[m + 7] = 12.0;
        values[m - 7] = 20.0;
        let r = repair_gaps(&with_gap_at(values, m)).unwrap();
        assert_eq!(r.values()[m], 11.0);
    }

    #[test]
    fn zero_values_are_gaps() {
        let mut values = vec![3.0; 20];
        values[8] = 0.0;
        values[1] = 2.0;
        values[15] = 4.0;
        let r = repair_gaps(&TimeSeries::new(values).unwrap()).unwrap();
        assert_eq!(r.values()[8], 3.0);
    }

    #[test]
    fn gap_free_series_is_unchanged() {
        let values: Vec<f64> = (1..50).map(|i| i as f64 * 1.5).collect();
        let s = TimeSeries::new(values.clone()).unwrap();
        let r = repair_gaps(&s).unwrap();
        assert_eq!(r.values(), values.as_slice());
    }

    #[test]
    fn gap_without_donors_is_an_error() {
        let s = with_gap_at(vec![1.0; 5], 2);
        assert_eq!(repair_gaps(&s), Err(Error::UnrepairableGap { index: 2 }));
    }

    #[test]
    fn neighbouring_gap_is_not_a_donor() {
        let mut values = vec![6.0; 30];
        values[2] = 1.0;
        let mut mask = vec![false; 30];
        mask[9] = true;
        mask[16] = true;
        let r = repair_gaps(&TimeSeries::with_missing(values, mask).unwrap()).unwrap();
        assert_eq!(r.values()[9], 1.0);
        assert_eq!(r.values()[16], 6.0);
    }

    proptest! {
        #[test]
        fn repair_is_idempotent(
            values in proptest::collection::vec(1.0f64..500.0, 30..120),
            gaps in proptest::collection::vec(any::<bool>(), 120),
        ) {
            let n = values.len();
            // keep the first and last fortnight intact so every gap has a donor
            let mask: Vec<bool> = (0..n).map(|i| i >= 7 && i + 7 < n && gaps[i] && i % 7 != 0).collect();
            let mut mask = mask;
            for i in 0..n {
                if mask[i] && (i < 7 || mask[i - 7]) && (i + 7 >= n || mask[i + 7]) {
                    mask[i] = false;
                }
            }
            let s = TimeSeries::with_missing(values, mask).unwrap();
            let once = repair_gaps(&s).unwrap();
            let twice = repair_gaps(&once).unwrap();
            prop_assert_eq!(once.values(), twice.values());
        }
    }
}

use crate::error::{Error, Result};
use crate::series::{LagOrigin, LagSet, TimeSeries, MAX_LAG};

/// Two-sided 95% normal quantile used as the PACF significance multiplier.
const Z_95: f64 = 1.96;

/// Sample autocorrelations at lags `1..=max_lag` (biased estimator).
pub fn acf_values(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if n <= max_lag {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 1,
            available: n,
        });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-12 * scale;
    if !denom.is_finite() || denom <= n as f64 * floor * floor {
        return Err(Error::ZeroVariance);
    }
    Ok((1..=max_lag)
        .map(|h| {
            centered[..n - h]
                .iter()
                .zip(&centered[h..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / denom
        })
        .collect())
}

/// Durbin-Levinson recursion: partial autocorrelations from `acf[h-1] = r(h)`.
pub fn pacf_from_acf(acf: &[f64]) -> Vec<f64> {
    let max_lag = acf.len();
    let mut out = Vec::with_capacity(max_lag);
    if max_lag == 0 {
        return out;
    }
    let mut phi = vec![acf[0]];
    let mut prev = Vec::with_capacity(max_lag);
    out.push(acf[0]);
    let mut variance = 1.0 - acf[0] * acf[0];
    for k in 2..=max_lag {
        if variance <= 1e-14 {
            // the series is already perfectly predicted by the lower-order fit
            out.resize(max_lag, 0.0);
            break;
        }
        let num = acf[k - 1]
            - phi
                .iter()
                .enumerate()
                .map(|(j, p)| p * acf[k - 2 - j])
                .sum::<f64>();
        let phi_kk = num / variance;
        prev.clear();
        prev.extend_from_slice(&phi);
        for j in 0..k - 1 {
            phi[j] = prev[j] - phi_kk * prev[k - 2 - j];
        }
        phi.push(phi_kk);
        variance *= 1.0 - phi_kk * phi_kk;
        out.push(phi_kk);
    }
    out
}

/// Partial autocorrelations of raw values at lags `1..=max_lag`.
pub fn pacf_values(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    Ok(pacf_from_acf(&acf_values(values, max_lag)?))
}

/// Partial autocorrelations `π(1..=max_lag)` of a gap-free series.
pub fn pacf(series: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    series.ensure_gap_free()?;
    if max_lag == 0 {
        return Err(Error::InvalidConfig("max_lag must be positive".into()));
    }
    if series.len() < max_lag + 2 {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 2,
            available: series.len(),
        });
    }
    pacf_values(series.values(), max_lag)
}

/// Lags whose partial autocorrelation exceeds `1.96 / sqrt(N)` in magnitude.
///
/// Falls back to one week, `{1..=7}`, when nothing is significant.
pub fn select_embedding(series: &TimeSeries, max_lag: usize) -> Result<LagSet> {
    let max_lag = max_lag.min(MAX_LAG);
    let pi = pacf(series, max_lag)?;
    let threshold = Z_95 / (series.len() as f64).sqrt();
    let lags: Vec<usize> = pi
        .iter()
        .enumerate()
        .filter(|(_, p)| p.abs() > threshold)
        .map(|(i, _)| i + 1)
        .collect();
    if lags.is_empty() {
        LagSet::new(1..=7, LagOrigin::Pacf)
    } else {
        LagSet::new(lags, LagOrigin::Pacf)
    }
}

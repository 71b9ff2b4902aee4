//! Synthetic daily series with weekly and monthly seasonality.

#![allow(dead_code)]

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const WEEKLY: [f64; 7] = [1.25, 0.95, 0.85, 0.9, 1.35, 0.8, 0.9];

/// Positive seasonal series: level, weekly factors, a slow cycle and noise.
pub fn seasonal_values(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 2.0).unwrap();
    let level = 40.0 + (seed % 7) as f64 * 5.0;
    (0..n)
        .map(|i| {
            let slow = 1.0 + 0.15 * (2.0 * std::f64::consts::PI * i as f64 / 91.0).sin();
            (level * WEEKLY[i % 7] * slow + noise.sample(&mut rng)).max(1.0)
        })
        .collect()
}

/// Writes one single-column CSV per series plus a directory calendar.
pub fn write_series_dir(dir: &Path, count: usize, n: usize, seed: u64) {
    fs::create_dir_all(dir).unwrap();
    for s in 0..count {
        let values = seasonal_values(n, seed + s as u64);
        let mut text = String::from("value\n");
        for v in values {
            text.push_str(&format!("{v}\n"));
        }
        fs::write(dir.join(format!("series{:03}.csv", s + 1)), text).unwrap();
    }
    fs::write(dir.join("calendar.txt"), "start_date=1996-03-18\n").unwrap();
}

/// Parsed CSV: header and string rows.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

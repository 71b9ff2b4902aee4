//! Reading series from a directory of CSV files.
//!
//! Every `*.csv` file holds one or more series as columns, one row per day,
//! under a header row. A column named `date` anchors the calendar at its
//! first row. Blank or non-numeric cells become gaps. Lines are split by
//! hand because blank lines are data here and generic CSV readers skip them.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::warn;
use multistep::evaluation::NamedSeries;
use multistep::series::{Calendar, TimeSeries};

use crate::error::{BenchError, BenchResult};

/// Directory-wide anchor file.
pub const CALENDAR_FILE: &str = "calendar.txt";
/// Per-file anchor: `<stem>.calendar` next to `<stem>.csv`.
pub const SIDECAR_EXTENSION: &str = "calendar";

#[derive(Debug, Default)]
pub struct IngestOutcome {
    pub series: Vec<NamedSeries>,
    /// Files or series that could not be read: (name, reason).
    pub failures: Vec<(String, String)>,
    /// Series that fell back to "row 1 is a Monday".
    pub unanchored: Vec<String>,
    /// Count of cells that were non-numeric (blank cells are not counted).
    pub bad_cells: usize,
}

/// Parses a weekday as `0..=6` (Monday = 0) or an English day name.
pub fn parse_weekday(s: &str) -> Option<u8> {
    let s = s.trim().to_ascii_lowercase();
    if let Ok(n) = s.parse::<u8>() {
        return (n < 7).then_some(n);
    }
    const NAMES: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];
    NAMES.iter().position(|n| s.starts_with(n)).map(|p| p as u8)
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Reads `start_date=YYYY-MM-DD` or `weekday=<day>` from an anchor file.
pub fn read_anchor_file(path: &Path) -> BenchResult<Option<Calendar>> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    let mut calendar = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |message: String| BenchError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| malformed(format!("expected key=value, got `{line}`")))?;
        calendar = Some(match key.trim() {
            "start_date" => Calendar::from_date(
                parse_date(value).ok_or_else(|| malformed(format!("bad date `{}`", value.trim())))?,
            ),
            "weekday" => Calendar::weekday_only(
                parse_weekday(value).ok_or_else(|| malformed(format!("bad weekday `{}`", value.trim())))?,
            )?,
            other => return Err(malformed(format!("unknown key `{other}`"))),
        });
    }
    Ok(calendar)
}

/// Columns parsed from one CSV text.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedFile {
    /// (column header, values with NaN for gaps)
    pub columns: Vec<(String, Vec<f64>)>,
    pub start_date: Option<NaiveDate>,
    pub bad_cells: usize,
}

/// Parses CSV text: header row, optional `date` column, numeric columns.
pub fn parse_csv(text: &str, path: &Path) -> BenchResult<ParsedFile> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| BenchError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: "empty file".into(),
        })?
        .trim_start_matches('\u{feff}')
        .split(',')
        .map(|c| c.trim().trim_matches('"').to_string())
        .collect();
    let date_col = header.iter().position(|h| h.eq_ignore_ascii_case("date"));
    let value_cols: Vec<usize> = (0..header.len()).filter(|&c| Some(c) != date_col).collect();
    if value_cols.is_empty() {
        return Err(BenchError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: "no value column".into(),
        });
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); value_cols.len()];
    let mut start_date = None;
    let mut bad_cells = 0;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let cells: Vec<&str> = if line.trim().is_empty() {
            Vec::new()
        } else {
            line.split(',').map(|c| c.trim().trim_matches('"')).collect()
        };
        if cells.len() > header.len() {
            return Err(BenchError::Malformed {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("{} cells for {} header columns", cells.len(), header.len()),
            });
        }
        if let (Some(dc), 0) = (date_col, i) {
            let cell = cells.get(dc).copied().unwrap_or("");
            start_date = Some(parse_date(cell).ok_or_else(|| BenchError::Malformed {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("bad date `{cell}`"),
            })?);
        }
        for (slot, &c) in value_cols.iter().enumerate() {
            let cell = cells.get(c).copied().unwrap_or("");
            let value = if cell.is_empty() {
                f64::NAN
            } else {
                match cell.parse::<f64>() {
                    Ok(v) => v,
                    Err(_) => {
                        warn!("{}:{line_no}: non-numeric cell `{cell}` treated as missing", path.display());
                        bad_cells += 1;
                        f64::NAN
                    }
                }
            };
            columns[slot].push(value);
        }
    }
    Ok(ParsedFile {
        columns: value_cols
            .iter()
            .map(|&c| header[c].clone())
            .zip(columns)
            .collect(),
        start_date,
        bad_cells,
    })
}

fn csv_files(dir: &Path) -> BenchResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| BenchError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(BenchError::EmptyDirectory(dir.to_path_buf()));
    }
    Ok(files)
}

/// Reads every series under `dir`. Unreadable files are recorded as
/// failures; only a missing or empty directory is fatal.
///
/// Calendar precedence: `date` column, `<stem>.calendar`, `calendar.txt`,
/// then `default_anchor`; without any, row 1 is taken as a Monday and a
/// warning is logged. Weekly factors do not depend on which weekday the
/// label says, so that fallback only loses day-of-month factors.
pub fn ingest(dir: &Path, default_anchor: Option<Calendar>) -> BenchResult<IngestOutcome> {
    let files = csv_files(dir)?;
    let dir_calendar_path = dir.join(CALENDAR_FILE);
    let dir_calendar = if dir_calendar_path.is_file() {
        read_anchor_file(&dir_calendar_path)?
    } else {
        None
    };
    let mut out = IngestOutcome::default();
    let mut seen = BTreeSet::new();
    for path in files {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let parsed = fs::read_to_string(&path)
            .map_err(|e| BenchError::io(&path, e))
            .and_then(|text| parse_csv(&text, &path));
        let parsed = match parsed {
            Ok(p) => p,
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                out.failures.push((stem, e.to_string()));
                continue;
            }
        };
        out.bad_cells += parsed.bad_cells;
        let sidecar = path.with_extension(SIDECAR_EXTENSION);
        let sidecar_calendar = if sidecar.is_file() {
            match read_anchor_file(&sidecar) {
                Ok(c) => c,
                Err(e) => {
                    out.failures.push((stem, e.to_string()));
                    continue;
                }
            }
        } else {
            None
        };
        let calendar = parsed
            .start_date
            .map(Calendar::from_date)
            .or(sidecar_calendar)
            .or(dir_calendar)
            .or(default_anchor);
        let single = parsed.columns.len() == 1;
        for (header, values) in parsed.columns {
            let name = if single || header.is_empty() {
                if single {
                    stem.clone()
                } else {
                    format!("{stem}_{}", out.series.len())
                }
            } else {
                header
            };
            if !seen.insert(name.clone()) {
                out.failures.push((name, "duplicate series name".into()));
                continue;
            }
            let series = match TimeSeries::new(values) {
                Ok(s) => s,
                Err(e) => {
                    out.failures.push((name, e.to_string()));
                    continue;
                }
            };
            let calendar = calendar.unwrap_or_else(|| {
                warn!("{name}: no calendar anchor; assuming row 1 is a Monday and dropping day-of-month factors");
                out.unanchored.push(name.clone());
                Calendar::weekday_only(0).expect("0 is a valid weekday")
            });
            out.series.push(NamedSeries::new(name, series.with_calendar(calendar)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ParsedFile {
        parse_csv(text, Path::new("t.csv")).unwrap()
    }

    #[test]
    fn blank_line_is_a_gap() {
        let p = parse("v\n1\n\n3\n");
        let v = &p.columns[0].1;
        assert_eq!(v.len(), 3);
        assert_eq!(v[0], 1.0);
        assert!(v[1].is_nan());
        assert_eq!(v[2], 3.0);
    }

    #[test]
    fn non_numeric_cell_is_a_gap() {
        let p = parse("v\n1\nabc\n3\n");
        assert!(p.columns[0].1[1].is_nan());
        assert_eq!(p.bad_cells, 1);
    }

    #[test]
    fn date_column_sets_anchor() {
        let p = parse("date,a,b\n1996-03-18,1,2\n1996-03-19,,4\n");
        assert_eq!(p.start_date, NaiveDate::from_ymd_opt(1996, 3, 18));
        assert_eq!(p.columns.len(), 2);
        assert_eq!(p.columns[1], ("b".to_string(), vec![2.0, 4.0]));
    }

    #[test]
    fn too_many_cells_is_malformed() {
        let err = parse_csv("v\n1\n2,3\n", Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, BenchError::Malformed { line: 3, .. }), "{err}");
    }

    #[test]
    fn weekday_names() {
        assert_eq!(parse_weekday("Monday"), Some(0));
        assert_eq!(parse_weekday("sun"), Some(6));
        assert_eq!(parse_weekday("3"), Some(3));
        assert_eq!(parse_weekday("7"), None);
        assert_eq!(parse_weekday("noday"), None);
    }
}

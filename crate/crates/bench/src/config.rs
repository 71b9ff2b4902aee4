//! Run configuration: defaults, then a flat `key = value` file, then CLI flags.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Parser, ValueEnum};
use multistep::evaluation::{Configuration, DEFAULT_KMAX_GRID};
use multistep::lazy::AggregationPolicy;
use multistep::series::Calendar;
use multistep::strategies::StrategyVariant;
use serde::Serialize;

use crate::error::{BenchError, BenchResult};
use crate::ingest::{parse_date, parse_weekday};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Precompetition,
    Competition,
}

impl Phase {
    fn parse(s: &str) -> BenchResult<Self> {
        <Self as ValueEnum>::from_str(s.trim(), true).map_err(|_| BenchError::Config(format!("unknown phase `{s}`")))
    }
}

/// A boolean grid axis: one value or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Toggle {
    Off,
    On,
    Both,
}

impl Toggle {
    pub fn values(self) -> Vec<bool> {
        match self {
            Self::Off => vec![false],
            Self::On => vec![true],
            Self::Both => vec![false, true],
        }
    }

    fn parse(s: &str) -> BenchResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(Self::On),
            "false" | "no" | "off" | "0" => Ok(Self::Off),
            "both" => Ok(Self::Both),
            _ => Err(BenchError::Config(format!("expected true, false or both, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Future values for scoring the competition phase, same file names as `data_dir`.
    pub actuals_dir: Option<PathBuf>,
    pub phase: Phase,
    pub strategies: Vec<StrategyVariant>,
    pub deseasonalize: Toggle,
    pub input_selection: Toggle,
    pub model_selection: Vec<AggregationPolicy>,
    pub kmax_grid: Vec<usize>,
    pub horizon: usize,
    pub seed: u64,
    pub alpha: f64,
    pub workers: usize,
    /// Calendar anchor for files that carry none.
    pub start_date: Option<NaiveDate>,
    pub weekday: Option<u8>,
}

impl RunConfig {
    pub fn configurations(&self) -> Vec<Configuration> {
        Configuration::grid(
            &self.deseasonalize.values(),
            &self.input_selection.values(),
            &self.model_selection,
        )
    }

    pub fn default_anchor(&self) -> BenchResult<Option<Calendar>> {
        Ok(match (self.start_date, self.weekday) {
            (Some(d), _) => Some(Calendar::from_date(d)),
            (None, Some(w)) => Some(Calendar::weekday_only(w)?),
            (None, None) => None,
        })
    }

    pub fn validate(&self) -> BenchResult<()> {
        let bad = |m: &str| Err(BenchError::Config(m.into()));
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if self.kmax_grid.is_empty() || self.kmax_grid.iter().any(|&k| k < 2) {
            return bad("kmax grid must be non-empty with every value >= 2");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.strategies.is_empty() || self.model_selection.is_empty() {
            return bad("at least one strategy and one model-selection policy are required");
        }
        if self.data_dir.as_os_str().is_empty() {
            return bad("data_dir is required");
        }
        Ok(())
    }
}

/// Partially specified configuration; later layers win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub actuals_dir: Option<PathBuf>,
    pub phase: Option<Phase>,
    pub strategies: Option<Vec<StrategyVariant>>,
    pub deseasonalize: Option<Toggle>,
    pub input_selection: Option<Toggle>,
    pub model_selection: Option<Vec<AggregationPolicy>>,
    pub kmax_grid: Option<Vec<usize>>,
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub workers: Option<usize>,
    pub start_date: Option<NaiveDate>,
    pub weekday: Option<u8>,
}

pub const DEFAULT_HORIZON: usize = 56;
pub const DEFAULT_ALPHA: f64 = 0.05;

fn default_config() -> RunConfig {
    RunConfig {
        data_dir: PathBuf::new(),
        out_dir: PathBuf::from("out"),
        actuals_dir: None,
        phase: Phase::Precompetition,
        strategies: StrategyVariant::ALL.to_vec(),
        deseasonalize: Toggle::On,
        input_selection: Toggle::Off,
        model_selection: vec![AggregationPolicy::Comb],
        kmax_grid: DEFAULT_KMAX_GRID.to_vec(),
        horizon: DEFAULT_HORIZON,
        seed: 0,
        alpha: DEFAULT_ALPHA,
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        start_date: None,
        weekday: None,
    }
}

impl Overrides {
    fn apply(self, c: &mut RunConfig) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        take!(data_dir, out_dir, phase, strategies, deseasonalize, input_selection, model_selection, kmax_grid, horizon, seed, alpha, workers);
        if self.actuals_dir.is_some() {
            c.actuals_dir = self.actuals_dir;
        }
        if self.start_date.is_some() {
            c.start_date = self.start_date;
        }
        if self.weekday.is_some() {
            c.weekday = self.weekday;
        }
    }

    /// Sets one key from a config file or flag value.
    pub fn set(&mut self, key: &str, value: &str) -> BenchResult<()> {
        let value = value.trim();
        let num = |what: &str| BenchError::Config(format!("{what}: cannot parse `{value}`"));
        match key.trim().replace('-', "_").as_str() {
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "actuals_dir" => self.actuals_dir = Some(PathBuf::from(value)),
            "phase" => self.phase = Some(Phase::parse(value)?),
            "strategies" => self.strategies = Some(parse_strategies(value)?),
            "deseasonalize" => self.deseasonalize = Some(Toggle::parse(value)?),
            "input_selection" => self.input_selection = Some(Toggle::parse(value)?),
            "model_selection" => self.model_selection = Some(parse_policies(value)?),
            "kmax" => self.kmax_grid = Some(parse_list(value).map_err(|_| num("kmax"))?),
            "horizon" => self.horizon = Some(value.parse().map_err(|_| num("horizon"))?),
            "seed" => self.seed = Some(value.parse().map_err(|_| num("seed"))?),
            "alpha" => self.alpha = Some(value.parse().map_err(|_| num("alpha"))?),
            "workers" => self.workers = Some(value.parse().map_err(|_| num("workers"))?),
            "start_date" => self.start_date = Some(parse_date(value).ok_or_else(|| num("start_date"))?),
            "weekday" => self.weekday = Some(parse_weekday(value).ok_or_else(|| num("weekday"))?),
            other => return Err(BenchError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a flat config file: `key = value` lines, `#` comments.
    pub fn from_file(path: &Path) -> BenchResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut out = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| BenchError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected key = value, got `{line}`"),
            })?;
            out.set(k, v).map_err(|e| BenchError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(out)
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, T::Err> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| p.trim().parse()).collect()
}

pub fn parse_strategies(s: &str) -> BenchResult<Vec<StrategyVariant>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(StrategyVariant::ALL.to_vec());
    }
    let mut out: Vec<StrategyVariant> = parse_list(s)?;
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn parse_policies(s: &str) -> BenchResult<Vec<AggregationPolicy>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(AggregationPolicy::ALL.to_vec());
    }
    let mut out: Vec<AggregationPolicy> = parse_list(s)?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// Command-line flags. Every flag overrides the same key of `--config`.
#[derive(Debug, Parser, Default)]
#[command(name = "multistep-bench", version, about = "Multi-step-ahead forecasting benchmark")]
pub struct Cli {
    /// Directory of input CSV files.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Future values used to score the competition phase.
    #[arg(long)]
    pub actuals_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub phase: Option<Phase>,
    /// Comma-separated strategy names or `all`.
    #[arg(long)]
    pub strategies: Option<String>,
    #[arg(long, overrides_with = "no_deseasonalize")]
    pub deseasonalize: bool,
    #[arg(long)]
    pub no_deseasonalize: bool,
    #[arg(long, overrides_with = "no_input_selection")]
    pub input_selection: bool,
    #[arg(long)]
    pub no_input_selection: bool,
    /// Run both deseasonalization settings and all model-selection policies
    /// unless those are given explicitly.
    #[arg(long)]
    pub full_grid: bool,
    /// Comma-separated policies (winner, comb, wcomb) or `all`.
    #[arg(long)]
    pub model_selection: Option<String>,
    /// Comma-separated Kmax grid.
    #[arg(long)]
    pub kmax: Option<String>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Date of row 1 for files without an anchor (YYYY-MM-DD).
    #[arg(long)]
    pub start_date: Option<String>,
    /// Weekday of row 1 for files without an anchor (0 = Monday, or a name).
    #[arg(long)]
    pub weekday: Option<String>,
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Cli {
    fn overrides(&self) -> BenchResult<Overrides> {
        let mut o = Overrides {
            data_dir: self.data_dir.clone(),
            out_dir: self.out_dir.clone(),
            actuals_dir: self.actuals_dir.clone(),
            phase: self.phase,
            horizon: self.horizon,
            seed: self.seed,
            alpha: self.alpha,
            workers: self.workers,
            ..Overrides::default()
        };
        let pairs = [
            ("strategies", &self.strategies),
            ("model_selection", &self.model_selection),
            ("kmax", &self.kmax),
            ("start_date", &self.start_date),
            ("weekday", &self.weekday),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                o.set(key, v)?;
            }
        }
        o.deseasonalize = flag_pair(self.deseasonalize, self.no_deseasonalize);
        o.input_selection = flag_pair(self.input_selection, self.no_input_selection);
        Ok(o)
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> BenchResult<RunConfig> {
        let mut config = default_config();
        let file = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        let cli = self.overrides()?;
        file.apply(&mut config);
        if self.full_grid {
            // the flag outranks file values for the axes it widens
            if cli.deseasonalize.is_none() {
                config.deseasonalize = Toggle::Both;
            }
            if cli.model_selection.is_none() {
                config.model_selection = AggregationPolicy::ALL.to_vec();
            }
        }
        cli.apply(&mut config);
        config.validate()?;
        Ok(config)
    }
}

fn flag_pair(on: bool, off: bool) -> Option<Toggle> {
    match (on, off) {
        (true, _) => Some(Toggle::On),
        (false, true) => Some(Toggle::Off),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("multistep-bench").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults() {
        let c = cli(&["--data-dir", "d"]).resolve().unwrap();
        assert_eq!(c.horizon, 56);
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c.strategies.len(), 8);
        assert_eq!(c.kmax_grid, vec![20, 50, 100]);
        assert_eq!(c.configurations().len(), 1);
    }

    #[test]
    fn cli_overrides_file_overrides_defaults() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\ndata_dir = from-file\nhorizon = 14\nkmax = 5, 9\nstrategies = REC,DIR\ndeseasonalize = both").unwrap();
        let path = f.path().to_str().unwrap().to_string();
        let c = cli(&["--config", &path, "--horizon", "7", "--no-deseasonalize"]).resolve().unwrap();
        assert_eq!(c.data_dir, PathBuf::from("from-file"));
        assert_eq!(c.horizon, 7);
        assert_eq!(c.kmax_grid, vec![5, 9]);
        assert_eq!(c.strategies, vec![StrategyVariant::Rec, StrategyVariant::Dir]);
        assert_eq!(c.deseasonalize, Toggle::Off);
    }

    #[test]
    fn full_grid_without_input_selection_has_six_configurations() {
        let c = cli(&["--data-dir", "d", "--full-grid", "--no-input-selection"]).resolve().unwrap();
        assert_eq!(c.configurations().len(), 6);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(cli(&["--data-dir", "d", "--horizon", "0"]).resolve().is_err());
        assert!(cli(&["--data-dir", "d", "--kmax", "1"]).resolve().is_err());
        assert!(cli(&["--data-dir", "d", "--workers", "0"]).resolve().is_err());
        assert!(cli(&["--data-dir", "d", "--strategies", "FOO"]).resolve().is_err());
        assert!(cli(&["--horizon", "3"]).resolve().is_err());
    }

    #[test]
    fn unknown_file_key_reports_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "horizon = 3\nbogus = 1").unwrap();
        let err = Overrides::from_file(f.path()).unwrap_err();
        assert!(matches!(err, BenchError::Malformed { line: 2, .. }), "{err}");
    }
}

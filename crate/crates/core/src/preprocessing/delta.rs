//! Delta test noise-variance estimate and the forward-backward lag search
//! that minimizes it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::{EmbeddedDataset, LagOrigin, LagSet, TimeSeries, MAX_LAG};

/// Default iteration cap for [`forward_backward_select`].
pub const DEFAULT_FBS_MAX_ITER: usize = 50;

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Delta test: `(1 / 2M) Σ_i |y_nn(i) - y_i|² / l`, with `nn(i)` the nearest
/// other input in Euclidean distance (lowest index on ties).
pub fn delta_test(dataset: &EmbeddedDataset) -> Result<f64> {
    let m = dataset.len();
    if m < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            available: m,
        });
    }
    let l = dataset.output_dim() as f64;
    let total: f64 = (0..m)
        .map(|i| {
            let xi = dataset.input(i);
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for j in 0..m {
                if j == i {
                    continue;
                }
                let d = squared_distance(xi, dataset.input(j));
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            squared_distance(dataset.output(best), dataset.output(i)) / l
        })
        .sum();
    Ok(total / (2.0 * m as f64))
}

/// Which future values the selected inputs should explain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetSpec {
    /// First step ahead, `>= 1`.
    pub first: usize,
    /// Number of consecutive steps, `>= 1`.
    pub block: usize,
}

impl TargetSpec {
    pub fn single(h: usize) -> Self {
        Self { first: h, block: 1 }
    }

    pub fn block(first: usize, block: usize) -> Self {
        Self { first, block }
    }

    fn last_step(&self) -> usize {
        self.first + self.block - 1
    }
}

/// One lag set visited by the search.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub lags: LagSet,
    pub delta: f64,
    /// True for the starting state and for every accepted move.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    pub entries: Vec<TraceEntry>,
    pub final_lags: LagSet,
    pub final_delta: f64,
}

impl SelectionTrace {
    pub fn accepted(&self) -> impl Iterator<Item = &TraceEntry> {
        self.entries.iter().filter(|e| e.accepted)
    }
}

/// Rows shared by every candidate of one search: the anchors feasible for
/// the whole lag universe, so delta values are comparable across candidates.
struct SearchSpace<'a> {
    values: &'a [f64],
    anchors: std::ops::Range<usize>,
    outputs: Vec<f64>,
    output_dim: usize,
}

impl<'a> SearchSpace<'a> {
    fn new(values: &'a [f64], universe: usize, target: TargetSpec) -> Self {
        let anchors = (universe - 1)..(values.len() - target.last_step());
        let mut outputs = Vec::with_capacity(anchors.len() * target.block);
        for t in anchors.clone() {
            outputs.extend_from_slice(&values[t + target.first..=t + target.last_step()]);
        }
        Self {
            values,
            anchors,
            outputs,
            output_dim: target.block,
        }
    }

    fn rows(&self) -> usize {
        self.anchors.len()
    }

    fn column(&self, lag: usize) -> Vec<f64> {
        self.anchors
            .clone()
            .map(|t| self.values[t + 1 - lag])
            .collect()
    }

    fn distances(&self, lags: &[usize]) -> Vec<f64> {
        let m = self.rows();
        let mut d = vec![0.0; m * m];
        for &lag in lags {
            let col = self.column(lag);
            for i in 0..m {
                for j in 0..m {
                    let diff = col[i] - col[j];
                    d[i * m + j] += diff * diff;
                }
            }
        }
        d
    }

    /// Delta value for the distance matrix `base + sign * (column diffs)²`.
    fn delta(&self, base: &[f64], column: Option<(&[f64], f64)>) -> f64 {
        let m = self.rows();
        let l = self.output_dim;
        let mut total = 0.0;
        for i in 0..m {
            let row = &base[i * m..(i + 1) * m];
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for (j, &dij) in row.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = match column {
                    Some((col, sign)) => {
                        let diff = col[i] - col[j];
                        dij + sign * diff * diff
                    }
                    None => dij,
                };
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            let yi = &self.outputs[i * l..(i + 1) * l];
            let yb = &self.outputs[best * l..(best + 1) * l];
            total += squared_distance(yi, yb) / l as f64;
        }
        total / (2.0 * m as f64)
    }
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Add(usize),
    Remove(usize),
}

impl Move {
    fn lag(self) -> usize {
        match self {
            Move::Add(l) | Move::Remove(l) => l,
        }
    }
}

/// Largest lag the search may consider for a series of length `n`.
fn search_universe(n: usize, start: &LagSet, target: TargetSpec) -> usize {
    let half = n.saturating_sub(target.last_step()) / 2;
    MAX_LAG.min(half).max(start.max_lag())
}

/// Hill-climbing over lag sets that minimizes the Delta test.
///
/// Each iteration scores every single-lag addition from `1..=U` and every
/// single-lag removal (never emptying the set), then takes the best move if
/// it strictly lowers the incumbent delta. Ties go to the lowest lag. `U` is
/// `min(200, (N - last target step) / 2)`, widened to cover `start`.
pub fn forward_backward_select(
    series: &TimeSeries,
    start: &LagSet,
    target: TargetSpec,
    max_iter: usize,
) -> Result<SelectionTrace> {
    series.ensure_gap_free()?;
    if target.first == 0 || target.block == 0 {
        return Err(Error::InvalidConfig("target steps must be positive".into()));
    }
    let values = series.values();
    let universe = search_universe(values.len(), start, target);
    let needed = universe + target.last_step() + 1;
    if values.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            available: values.len(),
        });
    }
    let space = SearchSpace::new(values, universe, target);

    let mut current: Vec<usize> = start.lags().to_vec();
    let mut base = space.distances(&current);
    let mut incumbent = space.delta(&base, None);
    let mut entries = vec![TraceEntry {
        lags: LagSet::new(current.iter().copied(), start.origin())?,
        delta: incumbent,
        accepted: true,
    }];

    for _ in 0..max_iter {
        let mut moves: Vec<Move> = (1..=universe)
            .filter(|l| current.binary_search(l).is_err())
            .map(Move::Add)
            .collect();
        if current.len() > 1 {
            moves.extend(current.iter().map(|&l| Move::Remove(l)));
        }
        moves.sort_by_key(|m| m.lag());

        let scored: Vec<(Move, f64)> = moves
            .par_iter()
            .map(|&mv| {
                let col = space.column(mv.lag());
                let sign = match mv {
                    Move::Add(_) => 1.0,
                    Move::Remove(_) => -1.0,
                };
                (mv, space.delta(&base, Some((&col, sign))))
            })
            .collect();

        let mut best: Option<(Move, f64)> = None;
        for &(mv, delta) in &scored {
            if best.is_none_or(|(_, d)| delta < d) {
                best = Some((mv, delta));
            }
        }
        let Some((mv, delta)) = best else { break };
        let improves = delta < incumbent;

        for &(cand, d) in &scored {
            let lags = apply(&current, cand);
            entries.push(TraceEntry {
                lags: LagSet::new(lags, LagOrigin::PacfPlusFbs)?,
                delta: d,
                accepted: improves && cand.lag() == mv.lag(),
            });
        }
        if !improves {
            break;
        }
        current = apply(&current, mv);
        base = space.distances(&current);
        incumbent = delta;
    }

    let origin = if entries.iter().filter(|e| e.accepted).count() > 1 {
        LagOrigin::PacfPlusFbs
    } else {
        start.origin()
    };
    Ok(SelectionTrace {
        entries,
        final_lags: LagSet::new(current, origin)?,
        final_delta: incumbent,
    })
}

fn apply(current: &[usize], mv: Move) -> Vec<usize> {
    let mut next = current.to_vec();
    match mv {
        Move::Add(l) => {
            let pos = next.binary_search(&l).unwrap_err();
            next.insert(pos, l);
        }
        Move::Remove(l) => next.retain(|&x| x != l),
    }
    next
}

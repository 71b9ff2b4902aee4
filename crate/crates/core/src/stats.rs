//! Rank-based comparison of several strategies over many series: Friedman
//! and Iman-Davenport omnibus tests, then pairwise z tests with Shaffer's
//! static step-down correction.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::evaluation::{Configuration, EvaluationReport};
use crate::strategies::StrategyVariant;

// Special functions

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Lower regularized incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_frac(a, x)
    }
}

/// Upper regularized incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cont_frac(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cont_frac(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

/// Lentz evaluation of the incomplete beta continued fraction.
fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Upper tail of the chi-squared distribution with `dof` degrees of freedom.
pub fn chi2_sf(x: f64, dof: f64) -> f64 {
    gamma_q(dof / 2.0, x / 2.0)
}

/// Upper tail of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_sf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    beta_inc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x))
}

/// Two-sided standard normal tail `2 (1 - Phi(|z|))`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    // erfc(|z| / sqrt 2) = Q(1/2, z^2 / 2)
    gamma_q(0.5, z * z / 2.0)
}

// Rank tests

/// Per-series ranks of the strategies (1 = lowest score, ties averaged).
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    ranks: Vec<Vec<f64>>,
    k: usize,
}

impl RankMatrix {
    pub fn n(&self) -> usize {
        self.ranks.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ranks(&self) -> &[Vec<f64>] {
        &self.ranks
    }

    /// Mean rank `R_j` of every column.
    pub fn mean_ranks(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.k)
            .map(|j| self.ranks.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect()
    }
}

/// Ranks every row ascending, averaging the ranks of tied values.
pub fn rank_rows(scores: &[Vec<f64>]) -> Result<RankMatrix> {
    let k = scores.first().map_or(0, Vec::len);
    if scores.is_empty() || k == 0 {
        return Err(Error::EmptyInput("score matrix"));
    }
    let mut ranks = Vec::with_capacity(scores.len());
    for row in scores {
        if row.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("scores must be finite".into()));
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        let mut out = vec![0.0; k];
        let mut i = 0;
        while i < k {
            let mut j = i;
            while j + 1 < k && row[order[j + 1]] == row[order[i]] {
                j += 1;
            }
            // positions i..=j share ranks i+1..=j+1
            let avg = (i + j + 2) as f64 / 2.0;
            for &idx in &order[i..=j] {
                out[idx] = avg;
            }
            i = j + 1;
        }
        ranks.push(out);
    }
    Ok(RankMatrix { ranks, k })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Friedman {
    pub q: f64,
    pub p: f64,
}

pub fn friedman(rm: &RankMatrix) -> Result<Friedman> {
    let (n, k) = (rm.n(), rm.k());
    if n < 2 || k < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            available: n.min(k),
        });
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = rm.mean_ranks().iter().map(|r| r * r).sum();
    let q = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    Ok(Friedman {
        q,
        p: chi2_sf(q, kf - 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImanDavenport {
    pub s: f64,
    pub p: f64,
    /// Rankings were unanimous, `Q = N (k - 1)`; `s` is infinite and `p` is 0.
    pub saturated: bool,
}

pub fn iman_davenport(q: f64, n: usize, k: usize) -> ImanDavenport {
    let (nf, kf) = (n as f64, k as f64);
    let denom = nf * (kf - 1.0) - q;
    if denom <= 1e-12 * nf * kf {
        return ImanDavenport {
            s: f64::INFINITY,
            p: 0.0,
            saturated: true,
        };
    }
    let s = (nf - 1.0) * q / denom;
    ImanDavenport {
        s,
        p: f_sf(s, kf - 1.0, (kf - 1.0) * (nf - 1.0)),
        saturated: false,
    }
}

/// Standard error of the difference of two mean ranks.
pub fn z_denominator(n: usize, k: usize) -> f64 {
    let kf = k as f64;
    (kf * (kf + 1.0) / (6.0 * n as f64)).sqrt()
}

/// `(z, two-sided p)` for the mean-rank difference of columns `i` and `j`.
pub fn pairwise_z(rm: &RankMatrix, i: usize, j: usize) -> (f64, f64) {
    let r = rm.mean_ranks();
    let z = (r[i] - r[j]) / z_denominator(rm.n(), rm.k());
    (z, normal_two_sided_p(z))
}

/// Possible numbers of simultaneously true pairwise-equality hypotheses
/// among `k` groups.
pub fn shaffer_sets(k: usize) -> BTreeSet<usize> {
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::from([0])];
    for kk in 1..=k {
        let mut s = BTreeSet::new();
        if kk == 1 {
            s.insert(0);
        }
        for j in 1..=kk {
            let c = j * (j - 1) / 2;
            for x in &sets[kk - j] {
                s.insert(c + x);
            }
        }
        sets.push(s);
    }
    sets.swap_remove(k)
}

/// Step thresholds `t_1..t_m`, `t_i = max{ s in S(k) : s <= m - i + 1 }`.
pub fn shaffer_thresholds(k: usize) -> Vec<usize> {
    let m = k * k.saturating_sub(1) / 2;
    let s = shaffer_sets(k);
    (1..=m)
        .map(|i| *s.range(..=m - i + 1).next_back().expect("0 is always possible"))
        .collect()
}

/// Shaffer's static step-down procedure. Returns a decision per input
/// p-value; testing stops at the first acceptance.
pub fn shaffer_adjust(p_values: &[f64], k: usize, alpha: f64) -> Result<Vec<bool>> {
    let m = k * k.saturating_sub(1) / 2;
    if p_values.len() != m {
        return Err(Error::InvalidPValueCount {
            expected: m,
            got: p_values.len(),
        });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut rejected = vec![false; m];
    for (&idx, &t) in order.iter().zip(&shaffer_thresholds(k)) {
        if p_values[idx] <= alpha / t as f64 {
            rejected[idx] = true;
        } else {
            break;
        }
    }
    Ok(rejected)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTest {
    pub i: usize,
    pub j: usize,
    pub z: f64,
    pub p_raw: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posthoc {
    /// Every pair `i < j` in lexicographic order.
    pub pairs: Vec<PairTest>,
    /// Connected components of the "not significantly different" graph,
    /// each sorted, ordered by best mean rank. One possible grouping.
    pub groups: Vec<Vec<usize>>,
}

/// Pairwise z statistics with no rejections.
pub fn pairwise_table(rm: &RankMatrix) -> Vec<PairTest> {
    let k = rm.k();
    let mut pairs = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let (z, p_raw) = pairwise_z(rm, i, j);
            pairs.push(PairTest {
                i,
                j,
                z,
                p_raw,
                rejected: false,
            });
        }
    }
    pairs
}

pub fn posthoc(rm: &RankMatrix, alpha: f64) -> Result<Posthoc> {
    let mut pairs = pairwise_table(rm);
    let p: Vec<f64> = pairs.iter().map(|t| t.p_raw).collect();
    for (t, r) in pairs.iter_mut().zip(shaffer_adjust(&p, rm.k(), alpha)?) {
        t.rejected = r;
    }
    let groups = groups(rm, &pairs);
    Ok(Posthoc { pairs, groups })
}

fn groups(rm: &RankMatrix, pairs: &[PairTest]) -> Vec<Vec<usize>> {
    let k = rm.k();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for t in pairs.iter().filter(|t| !t.rejected) {
        let (a, b) = (find(&mut parent, t.i), find(&mut parent, t.j));
        parent[a.max(b)] = a.min(b);
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for x in 0..k {
        let r = find(&mut parent, x);
        match roots.iter().position(|&y| y == r) {
            Some(g) => out[g].push(x),
            None => {
                roots.push(r);
                out.push(vec![x]);
            }
        }
    }
    let ranks = rm.mean_ranks();
    let best = |g: &Vec<usize>| g.iter().map(|&x| ranks[x]).fold(f64::INFINITY, f64::min);
    out.sort_by(|a, b| best(a).total_cmp(&best(b)).then(a[0].cmp(&b[0])));
    out
}

/// Full two-stage comparison of the strategies of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub config: Configuration,
    pub strategies: Vec<StrategyVariant>,
    pub series: Vec<String>,
    pub mean_ranks: Vec<f64>,
    pub friedman: Friedman,
    pub iman_davenport: ImanDavenport,
    /// Present only when the Iman-Davenport test rejects at `alpha`.
    pub posthoc: Option<Posthoc>,
    pub alpha: f64,
}

impl Comparison {
    /// Pair table for reporting: post-hoc decisions when run, otherwise the
    /// raw statistics with nothing rejected.
    pub fn pair_table(&self, rm: &RankMatrix) -> Vec<PairTest> {
        match &self.posthoc {
            Some(p) => p.pairs.clone(),
            None => pairwise_table(rm),
        }
    }
}

/// Omnibus then post-hoc tests on a score matrix (`scores[series][strategy]`).
pub fn compare_scores(scores: &[Vec<f64>], alpha: f64) -> Result<(RankMatrix, Friedman, ImanDavenport, Option<Posthoc>)> {
    let rm = rank_rows(scores)?;
    let fr = friedman(&rm)?;
    let id = iman_davenport(fr.q, rm.n(), rm.k());
    let post = if id.p <= alpha { Some(posthoc(&rm, alpha)?) } else { None };
    Ok((rm, fr, id, post))
}

pub fn compare_strategies(report: &EvaluationReport, config: Configuration, alpha: f64) -> Result<(Comparison, RankMatrix)> {
    let m = report.score_matrix(config);
    let (rm, friedman, iman_davenport, posthoc) = compare_scores(&m.scores, alpha)?;
    Ok((
        Comparison {
            config,
            strategies: m.strategies,
            series: m.series,
            mean_ranks: rm.mean_ranks(),
            friedman,
            iman_davenport,
            posthoc,
            alpha,
        },
        rm,
    ))
}

//! Rank-based comparison battery: Wilcoxon rank-sum tests, Hommel
//! adjustment and Hodges–Lehmann intervals for paired differences.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Largest pooled sample size handled by the exact null distribution.
pub const EXACT_LIMIT: usize = 20;

/// Default significance level.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// Rank sum of the first sample (midranks for ties).
    pub statistic: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Midranks (1-based) of `values`.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn check_sample(name: &str, s: &[f64]) -> Result<()> {
    if s.len() < 3 {
        return Err(Error::analysis(format!("sample {name} needs at least 3 values, has {}", s.len())));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::analysis(format!("sample {name} contains non-finite values")));
    }
    Ok(())
}

/// Two-sided Wilcoxon rank-sum test of `a` against `b`.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    check_sample("a", a)?;
    check_sample("b", b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let statistic: f64 = ranks[..a.len()].iter().sum();
    if pooled.iter().all(|&v| v == pooled[0]) {
        return Ok(RankSumTest {
            statistic,
            p_value: 1.0,
            exact: pooled.len() <= EXACT_LIMIT,
        });
    }
    if pooled.len() <= EXACT_LIMIT {
        Ok(RankSumTest {
            statistic,
            p_value: exact_p(&ranks, a.len()),
            exact: true,
        })
    } else {
        Ok(RankSumTest {
            statistic,
            p_value: normal_p(&ranks, a.len(), statistic),
            exact: false,
        })
    }
}

/// Permutation p-value: share of size-`n` rank subsets whose sum lies at
/// least as far from the mean as the observed one. Doubled midranks are
/// integers, so the counting is exact.
fn exact_p(ranks: &[f64], n: usize) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    // counts[j][s]: subsets of size j with doubled sum s
    let mut counts = vec![vec![0f64; total + 1]; n + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for j in (1..=n).rev() {
            for s in (r..=total).rev() {
                let add = counts[j - 1][s - r];
                if add != 0.0 {
                    counts[j][s] += add;
                }
            }
        }
    }
    let observed: usize = doubled[..n].iter().sum();
    let mean2 = n * (ranks.len() + 1); // twice the expected rank sum
    let dev = observed.abs_diff(mean2);
    let (mut extreme, mut all) = (0.0, 0.0);
    for (s, &c) in counts[n].iter().enumerate() {
        all += c;
        if s.abs_diff(mean2) >= dev {
            extreme += c;
        }
    }
    (extreme / all).min(1.0)
}

fn normal_p(ranks: &[f64], n: usize, statistic: f64) -> f64 {
    let big_n = ranks.len() as f64;
    let (nf, mf) = (n as f64, (ranks.len() - n) as f64);
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut start = 0;
    while start < sorted.len() {
        let end = sorted[start..].iter().take_while(|&&r| r == sorted[start]).count() + start;
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    let u = statistic - nf * (nf + 1.0) / 2.0;
    let mean = nf * mf / 2.0;
    let var = nf * mf / 12.0 * ((big_n + 1.0) - ties / (big_n * (big_n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.sf(z)).min(1.0)
}

/// Hommel-adjusted p-values, in input order.
pub fn hommel_adjust(ps: &[f64]) -> Vec<f64> {
    let n = ps.len();
    if n <= 1 {
        return ps.to_vec();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ps[a].total_cmp(&ps[b]));
    let p: Vec<f64> = order.iter().map(|&i| ps[i]).collect();

    let init = (0..n)
        .map(|i| n as f64 * p[i] / (i + 1) as f64)
        .fold(f64::INFINITY, f64::min);
    let mut q = vec![init; n];
    let mut pa = vec![init; n];
    for m in (2..n).rev() {
        let split = n - m + 1;
        let q1 = (split..n)
            .enumerate()
            .map(|(k, i)| m as f64 * p[i] / (k + 2) as f64)
            .fold(f64::INFINITY, f64::min);
        for i in 0..split {
            q[i] = (m as f64 * p[i]).min(q1);
        }
        for i in split..n {
            q[i] = q[split - 1];
        }
        for i in 0..n {
            pa[i] = pa[i].max(q[i]);
        }
    }
    let mut out = vec![0.0; n];
    for (k, &i) in order.iter().enumerate() {
        out[i] = pa[k].max(p[k]).min(1.0);
    }
    out
}

/// Point estimate and confidence bounds for the median of paired
/// differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianInterval {
    pub low: f64,
    pub high: f64,
    pub estimate: f64,
}

impl MedianInterval {
    pub fn excludes_zero(&self) -> bool {
        self.low > 0.0 || self.high < 0.0
    }
}

/// Pairwise means `(d_i + d_j) / 2` for `i <= j`, sorted.
pub fn walsh_averages(diffs: &[f64]) -> Vec<f64> {
    let mut w = Vec::with_capacity(diffs.len() * (diffs.len() + 1) / 2);
    for i in 0..diffs.len() {
        for j in i..diffs.len() {
            w.push((diffs[i] + diffs[j]) / 2.0);
        }
    }
    w.sort_by(f64::total_cmp);
    w
}

/// Null distribution of the signed-rank statistic for `n` pairs as counts
/// indexed by the statistic.
pub fn signed_rank_counts(n: usize) -> Vec<f64> {
    let max = n * (n + 1) / 2;
    let mut counts = vec![0.0; max + 1];
    counts[0] = 1.0;
    for r in 1..=n {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    counts
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Hodges–Lehmann estimate of the median difference with the interval from
/// inverting the exact signed-rank test at level `1 - alpha`.
pub fn paired_median_ci(diffs: &[f64], alpha: f64) -> Result<MedianInterval> {
    if diffs.len() < 6 {
        return Err(Error::analysis(format!(
            "median interval needs at least 6 paired differences, got {}",
            diffs.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::analysis("paired differences contain non-finite values"));
    }
    let walsh = walsh_averages(diffs);
    let counts = signed_rank_counts(diffs.len());
    let total: f64 = counts.iter().sum();
    // largest k with P(T <= k - 1) <= alpha / 2, at least 1
    let mut k = 1;
    let mut cdf = 0.0;
    for (t, c) in counts.iter().enumerate() {
        cdf += c / total;
        if cdf <= alpha / 2.0 {
            k = t + 1;
        } else {
            break;
        }
    }
    let m = walsh.len();
    let k = k.min(m.div_ceil(2));
    Ok(MedianInterval {
        low: walsh[k - 1],
        high: walsh[m - k],
        estimate: median_sorted(&walsh),
    })
}

/// Which side of a row/column comparison is superior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// The column method is better (`↑`).
    Column,
    /// The row method is better (`←`).
    Row,
    /// No significant difference (`≈`).
    Neither,
}

impl Direction {
    /// Higher values are better; `median_diff` is row minus column.
    pub fn decide(median_diff: f64, adjusted_p: f64, alpha: f64) -> Self {
        if adjusted_p >= alpha || median_diff == 0.0 {
            Direction::Neither
        } else if median_diff > 0.0 {
            Direction::Row
        } else {
            Direction::Column
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Column => "↑",
            Direction::Row => "←",
            Direction::Neither => "≈",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub row: String,
    pub column: String,
    pub evals: usize,
    pub raw_p: f64,
    pub adjusted_p: f64,
    /// Median of paired differences, row minus column.
    pub median_diff: f64,
    pub direction: Direction,
    pub alpha: f64,
}

/// Compares every pair of labelled samples (paired by position) and
/// adjusts the raw p-values of the family with Hommel's procedure. For
/// `i < j` the later sample is the row and the earlier one the column.
pub fn compare_all(samples: &[(String, Vec<f64>)], evals: usize, alpha: f64) -> Result<Vec<TestReport>> {
    let mut reports = Vec::new();
    for j in 0..samples.len() {
        for i in 0..j {
            let (row, a) = &samples[j];
            let (column, b) = &samples[i];
            if a.len() != b.len() {
                return Err(Error::analysis(format!("{row} and {column} are not paired")));
            }
            let test = wilcoxon_rank_sum(a, b)?;
            let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            diffs.sort_by(f64::total_cmp);
            reports.push(TestReport {
                row: row.clone(),
                column: column.clone(),
                evals,
                raw_p: test.p_value,
                adjusted_p: f64::NAN,
                median_diff: median_sorted(&diffs),
                direction: Direction::Neither,
                alpha,
            });
        }
    }
    let raw: Vec<f64> = reports.iter().map(|r| r.raw_p).collect();
    for (r, adj) in reports.iter_mut().zip(hommel_adjust(&raw)) {
        r.adjusted_p = adj;
        r.direction = Direction::decide(r.median_diff, adj, alpha);
    }
    Ok(reports)
}

/// Comparison table with one line per method pair and budget.
pub fn reports_to_csv(reports: &[TestReport]) -> String {
    let mut out = String::from("row,column,evals,raw_p,adjusted_p,median_diff,direction,alpha\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{:e},{:e},{},{},{}",
            r.row,
            r.column,
            r.evals,
            r.raw_p,
            r.adjusted_p,
            r.median_diff,
            r.direction.symbol(),
            r.alpha
        );
    }
    out
}

//! Quality indicators: dominance filtering, non-dominated proportion,
//! normalisation, hypervolume, anytime trajectories and empirical
//! attainment functions.
//!
//! Everything here is minimisation and works on plain `&[Vec<f64>]` point
//! sets. Hypervolume is exact for two and three objectives; the EAF is
//! two-objective only.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::archive::{build_anytime_set, EvalArchivePolicy, EvaluationSet};
use crate::engine::RunResult;
use crate::{par, Error, Result};

/// `a` weakly dominates `b` and differs from it.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Mask of points not dominated by any other point of the set. Equal
/// points do not dominate each other.
pub fn nondominated_filter(points: &[Vec<f64>]) -> Vec<bool> {
    match points.first().map(Vec::len) {
        None => Vec::new(),
        Some(2) => nondominated_2d(points),
        Some(_) => points
            .iter()
            .map(|p| !points.iter().any(|q| dominates(q, p)))
            .collect(),
    }
}

fn nondominated_2d(points: &[Vec<f64>]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    let mut mask = vec![false; points.len()];
    // smallest second objective among points with a strictly smaller first one
    let mut best_before = f64::INFINITY;
    let mut start = 0;
    while start < order.len() {
        let x = points[order[start]][0];
        let mut end = start;
        while end < order.len() && points[order[end]][0] == x {
            end += 1;
        }
        let group_min = points[order[start]][1];
        for &i in &order[start..end] {
            let y = points[i][1];
            mask[i] = !(best_before <= y || group_min < y);
        }
        best_before = best_before.min(group_min);
        start = end;
    }
    mask
}

fn rounded_key(p: &[f64]) -> Vec<u64> {
    p.iter()
        .map(|v| ((v * 1e12).round() / 1e12 + 0.0).to_bits())
        .collect()
}

/// Distinct non-dominated objective vectors (equality after rounding to 12
/// decimals) divided by the set size.
pub fn unique_nondominated_proportion(points: &[Vec<f64>]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::analysis("non-dominated proportion of an empty set"));
    }
    let mask = nondominated_filter(points);
    let unique: HashSet<Vec<u64>> = points
        .iter()
        .zip(&mask)
        .filter(|(_, &nd)| nd)
        .map(|(p, _)| rounded_key(p))
        .collect();
    Ok(unique.len() as f64 / points.len() as f64)
}

/// Non-dominated members (duplicates included) divided by the set size.
pub fn nondominated_proportion(points: &[Vec<f64>]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::analysis("non-dominated proportion of an empty set"));
    }
    let count = nondominated_filter(points).into_iter().filter(|&b| b).count();
    Ok(count as f64 / points.len() as f64)
}

/// Per-objective bounds shared by every set in one comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationFrame {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl NormalizationFrame {
    /// Extent of the union of `sets`.
    pub fn from_sets<'a>(sets: impl IntoIterator<Item = &'a [Vec<f64>]>) -> Result<Self> {
        let mut frame: Option<Self> = None;
        for p in sets.into_iter().flatten() {
            match &mut frame {
                None => {
                    frame = Some(Self {
                        lo: p.clone(),
                        hi: p.clone(),
                    })
                }
                Some(f) => {
                    for (k, &v) in p.iter().enumerate() {
                        f.lo[k] = f.lo[k].min(v);
                        f.hi[k] = f.hi[k].max(v);
                    }
                }
            }
        }
        frame.ok_or_else(|| Error::analysis("normalisation frame of empty sets"))
    }

    pub fn objectives(&self) -> usize {
        self.lo.len()
    }
}

/// `(f - lo) / (hi - lo)` clamped to `[0, 1]`; flat components map to 0.
pub fn normalize_objectives(points: &[Vec<f64>], frame: &NormalizationFrame) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            p.iter()
                .zip(frame.lo.iter().zip(&frame.hi))
                .map(|(v, (lo, hi))| {
                    if hi > lo {
                        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Exact hypervolume dominated by `points` and bounded by `reference`.
/// Points that do not strictly dominate the reference contribute nothing.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    let inside: Vec<&[f64]> = points
        .iter()
        .map(Vec::as_slice)
        .filter(|p| p.iter().zip(reference).all(|(v, r)| v < r))
        .collect();
    match reference.len() {
        2 => Ok(hv2(inside, reference)),
        3 => Ok(hv3(inside, reference)),
        m => Err(Error::analysis(format!("hypervolume for {m} objectives is not supported"))),
    }
}

fn hv2(mut pts: Vec<&[f64]>, r: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut best = r[1];
    let mut area = 0.0;
    for p in pts {
        if p[1] < best {
            area += (r[0] - p[0]) * (best - p[1]);
            best = p[1];
        }
    }
    area
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Two-dimensional non-dominated staircase with its dominated area.
struct Staircase {
    front: BTreeMap<Key, f64>,
    area: f64,
    rx: f64,
    ry: f64,
}

impl Staircase {
    fn new(rx: f64, ry: f64) -> Self {
        Self {
            front: BTreeMap::new(),
            area: 0.0,
            rx,
            ry,
        }
    }

    fn insert(&mut self, x: f64, y: f64) {
        let pred = self.front.range(..=Key(x)).next_back().map(|(_, &py)| py);
        if matches!(pred, Some(py) if py <= y) {
            return;
        }
        let mut cur_x = x;
        let mut cur_h = pred.unwrap_or(self.ry);
        loop {
            let next = self.front.range(Key(x)..).next().map(|(k, &v)| (k.0, v));
            match next {
                None => {
                    self.area += (self.rx - cur_x) * (cur_h - y);
                    break;
                }
                Some((sx, sy)) => {
                    self.area += (sx - cur_x) * (cur_h - y);
                    if sy >= y {
                        self.front.remove(&Key(sx));
                        cur_x = sx;
                        cur_h = sy;
                    } else {
                        break;
                    }
                }
            }
        }
        self.front.insert(Key(x), y);
    }
}

fn hv3(mut pts: Vec<&[f64]>, r: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut stair = Staircase::new(r[0], r[1]);
    let mut volume = 0.0;
    for (i, p) in pts.iter().enumerate() {
        stair.insert(p[0], p[1]);
        let next_z = pts.get(i + 1).map_or(r[2], |q| q[2]);
        volume += stair.area * (next_z - p[2]);
    }
    volume
}

/// Monte-Carlo estimate of the hypervolume inside the box `[0, reference]`.
/// Samples are split into fixed chunks with their own seeds, so the value
/// does not depend on whether the chunks run in parallel.
pub fn hypervolume_monte_carlo(points: &[Vec<f64>], reference: &[f64], samples: usize, seed: u64) -> f64 {
    const CHUNKS: usize = 64;
    let m = reference.len();
    let chunks: Vec<(u64, usize)> = (0..CHUNKS)
        .map(|c| {
            let n = samples / CHUNKS + usize::from(c < samples % CHUNKS);
            (seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(c as u64), n)
        })
        .collect();
    let hits: usize = par::map(&chunks, |&(s, n)| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let mut sample = vec![0.0; m];
        let mut hits = 0usize;
        for _ in 0..n {
            for (v, r) in sample.iter_mut().zip(reference) {
                *v = rng.gen::<f64>() * r;
            }
            if points.iter().any(|p| p.iter().zip(&sample).all(|(a, b)| a <= b)) {
                hits += 1;
            }
        }
        hits
    })
    .into_iter()
    .sum();
    let box_volume: f64 = reference.iter().product();
    box_volume * hits as f64 / samples as f64
}

/// Hypervolume of one evaluation set after normalisation, with the
/// reference point at all ones.
pub fn normalized_hypervolume(points: &[Vec<f64>], frame: &NormalizationFrame) -> Result<f64> {
    let scaled = normalize_objectives(points, frame);
    hypervolume(&scaled, &vec![1.0; frame.objectives()])
}

/// `(evals, hv)` pairs of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySeries {
    pub points: Vec<(usize, f64)>,
}

impl TrajectorySeries {
    /// Value at the last entry not beyond `evals`.
    pub fn at(&self, evals: usize) -> Option<f64> {
        let end = self.points.partition_point(|&(e, _)| e <= evals);
        end.checked_sub(1).map(|i| self.points[i].1)
    }
}

/// Normalised hypervolume of the anytime evaluation set at every checkpoint.
pub fn anytime_trajectory(
    result: &RunResult,
    policy: &EvalArchivePolicy,
    frame: &NormalizationFrame,
) -> Result<TrajectorySeries> {
    let points = result
        .checkpoints
        .iter()
        .map(|cp| {
            let set: EvaluationSet = build_anytime_set(result, policy, cp.evals)?;
            Ok((cp.evals, normalized_hypervolume(&set.points, frame)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectorySeries { points })
}

/// Empirical attainment levels on a rectilinear grid. `levels` is indexed
/// `[ix * y_breaks.len() + iy]`; the cell value is taken at its lower-left
/// corner.
#[derive(Debug, Clone, PartialEq)]
pub struct EafGrid {
    pub x_breaks: Vec<f64>,
    pub y_breaks: Vec<f64>,
    pub levels: Vec<f64>,
}

impl EafGrid {
    pub fn level(&self, ix: usize, iy: usize) -> f64 {
        self.levels[ix * self.y_breaks.len() + iy]
    }

    /// Gridded CSV with columns `x,y,level`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,level\n");
        for (ix, x) in self.x_breaks.iter().enumerate() {
            for (iy, y) in self.y_breaks.iter().enumerate() {
                let _ = writeln!(out, "{x},{y},{}", self.level(ix, iy));
            }
        }
        out
    }
}

fn check_two_objective(sets: &[Vec<Vec<f64>>]) -> Result<()> {
    match sets.iter().flatten().find(|p| p.len() != 2) {
        Some(p) => Err(Error::analysis(format!(
            "attainment functions need two objectives, got {}",
            p.len()
        ))),
        None => Ok(()),
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn thin(v: Vec<f64>, cap: usize) -> Vec<f64> {
    if cap < 2 || v.len() <= cap {
        return v;
    }
    let last = v.len() - 1;
    let mut out: Vec<f64> = (0..cap)
        .map(|i| v[(i * last + (cap - 1) / 2) / (cap - 1)])
        .collect();
    out.dedup();
    out
}

/// Breaks from every observed coordinate; at most `cap` per axis, chosen
/// at evenly spaced quantiles when there are more.
pub fn eaf_breaks(sets: &[Vec<Vec<f64>>], cap: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_two_objective(sets)?;
    let xs = sorted_unique(sets.iter().flatten().map(|p| p[0]).collect());
    let ys = sorted_unique(sets.iter().flatten().map(|p| p[1]).collect());
    Ok((thin(xs, cap), thin(ys, cap)))
}

/// For each `x` break, the smallest second objective among points of `run`
/// whose first objective does not exceed the break.
fn attainment_profile(run: &[Vec<f64>], x_breaks: &[f64]) -> Vec<f64> {
    let mut pts: Vec<(f64, f64)> = run.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::with_capacity(x_breaks.len());
    let mut best = f64::INFINITY;
    let mut k = 0;
    for &xb in x_breaks {
        while k < pts.len() && pts[k].0 <= xb {
            best = best.min(pts[k].1);
            k += 1;
        }
        out.push(best);
    }
    out
}

fn attainment_counts(runs: &[Vec<Vec<f64>>], x_breaks: &[f64], y_breaks: &[f64]) -> Vec<u32> {
    let ny = y_breaks.len();
    let mut counts = vec![0u32; x_breaks.len() * ny];
    for run in runs {
        for (ix, min_y) in attainment_profile(run, x_breaks).into_iter().enumerate() {
            let first = y_breaks.partition_point(|&y| y < min_y);
            for c in &mut counts[ix * ny + first..(ix + 1) * ny] {
                *c += 1;
            }
        }
    }
    counts
}

/// Fraction of runs attaining each grid corner.
pub fn eaf(runs: &[Vec<Vec<f64>>], x_breaks: &[f64], y_breaks: &[f64]) -> Result<EafGrid> {
    if runs.is_empty() {
        return Err(Error::analysis("attainment function of zero runs"));
    }
    check_two_objective(runs)?;
    let total = runs.len() as f64;
    let levels = attainment_counts(runs, x_breaks, y_breaks)
        .into_iter()
        .map(|c| c as f64 / total)
        .collect();
    Ok(EafGrid {
        x_breaks: x_breaks.to_vec(),
        y_breaks: y_breaks.to_vec(),
        levels,
    })
}

/// Signed EAF difference of two algorithms plus the envelope surfaces of
/// all their runs together.
#[derive(Debug, Clone, PartialEq)]
pub struct EafDiff {
    /// `eaf(a) - eaf(b)` per cell.
    pub diff: EafGrid,
    /// Attainment level over the pooled runs of both algorithms.
    pub pooled: EafGrid,
    /// Corners of the region attained by at least one run.
    pub grand_best: Vec<(f64, f64)>,
    /// Corners of the region attained by every run.
    pub grand_worst: Vec<(f64, f64)>,
}

impl EafDiff {
    /// Share of the grid area between the grand-best and grand-worst
    /// surfaces (pooled level strictly between 0 and 1) where the difference
    /// is positive. Cells are weighted by their area; the outermost row and
    /// column have no extent and are ignored.
    pub fn positive_area_fraction(&self) -> f64 {
        let xs = &self.diff.x_breaks;
        let ys = &self.diff.y_breaks;
        let (mut contested, mut positive) = (0.0, 0.0);
        for ix in 0..xs.len().saturating_sub(1) {
            let w = xs[ix + 1] - xs[ix];
            for iy in 0..ys.len().saturating_sub(1) {
                let pooled = self.pooled.level(ix, iy);
                if pooled <= 0.0 || pooled >= 1.0 {
                    continue;
                }
                let a = w * (ys[iy + 1] - ys[iy]);
                contested += a;
                if self.diff.level(ix, iy) > 0.0 {
                    positive += a;
                }
            }
        }
        if contested > 0.0 {
            positive / contested
        } else {
            0.0
        }
    }

    pub fn surfaces_csv(&self) -> String {
        let mut out = String::from("surface,x,y\n");
        for (name, pts) in [("grand_best", &self.grand_best), ("grand_worst", &self.grand_worst)] {
            for (x, y) in pts {
                let _ = writeln!(out, "{name},{x},{y}");
            }
        }
        out
    }
}

/// Staircase corners of `h(x) = combine over runs of min-y(x)`.
fn envelope(runs: &[Vec<Vec<f64>>], combine: fn(f64, f64) -> f64) -> Vec<(f64, f64)> {
    let xs = sorted_unique(runs.iter().flatten().map(|p| p[0]).collect());
    let profiles: Vec<Vec<f64>> = runs.iter().map(|r| attainment_profile(r, &xs)).collect();
    let mut out = Vec::new();
    let mut last = f64::INFINITY;
    for (ix, &x) in xs.iter().enumerate() {
        let h = profiles.iter().map(|p| p[ix]).reduce(combine).unwrap_or(f64::INFINITY);
        if h < last {
            out.push((x, h));
            last = h;
        }
    }
    out
}

pub fn eaf_diff(
    runs_a: &[Vec<Vec<f64>>],
    runs_b: &[Vec<Vec<f64>>],
    x_breaks: &[f64],
    y_breaks: &[f64],
) -> Result<EafDiff> {
    let a = eaf(runs_a, x_breaks, y_breaks)?;
    let b = eaf(runs_b, x_breaks, y_breaks)?;
    let pooled_runs: Vec<Vec<Vec<f64>>> = runs_a.iter().chain(runs_b).cloned().collect();
    let pooled = eaf(&pooled_runs, x_breaks, y_breaks)?;
    let levels = a.levels.iter().zip(&b.levels).map(|(x, y)| x - y).collect();
    Ok(EafDiff {
        diff: EafGrid {
            x_breaks: x_breaks.to_vec(),
            y_breaks: y_breaks.to_vec(),
            levels,
        },
        pooled,
        grand_best: envelope(&pooled_runs, f64::min),
        grand_worst: envelope(&pooled_runs, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[[f64; 2]]) -> Vec<Vec<f64>> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn filter_examples() {
        assert_eq!(nondominated_filter(&pts(&[[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])), vec![true, true, false]);
        assert_eq!(nondominated_filter(&pts(&[[0.3, 0.3]; 4])), vec![true; 4]);
        // same first objective, larger second is dominated
        assert_eq!(nondominated_filter(&pts(&[[0.5, 0.2], [0.5, 0.4]])), vec![true, false]);
        let three = vec![vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 1.0], vec![1.0, 0.0, 1.0]];
        assert_eq!(nondominated_filter(&three), vec![true, false, true]);
    }

    #[test]
    fn proportions() {
        let all = pts(&[[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]);
        assert_eq!(unique_nondominated_proportion(&all).unwrap(), 1.0);
        let dup = vec![vec![0.25, 0.75]; 500];
        assert_eq!(unique_nondominated_proportion(&dup).unwrap(), 1.0 / 500.0);
        assert_eq!(nondominated_proportion(&dup).unwrap(), 1.0);
        assert!(unique_nondominated_proportion(&[]).is_err());
        let near = pts(&[[0.1, 0.2], [0.1 + 1e-14, 0.2]]);
        assert_eq!(unique_nondominated_proportion(&near).unwrap(), 0.5);
    }

    #[test]
    fn normalization_examples() {
        let frame = NormalizationFrame {
            lo: vec![1.0, 2.0],
            hi: vec![3.0, 6.0],
        };
        let out = normalize_objectives(&pts(&[[1.0, 2.0], [3.0, 6.0], [5.0, 0.0], [2.0, 4.0]]), &frame);
        assert_eq!(out, pts(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.5, 0.5]]));
        let flat = NormalizationFrame {
            lo: vec![1.0, 1.0],
            hi: vec![1.0, 2.0],
        };
        assert_eq!(normalize_objectives(&pts(&[[1.0, 1.5]]), &flat), pts(&[[0.0, 0.5]]));
    }

    #[test]
    fn hypervolume_hand_examples() {
        let r = [1.0, 1.0];
        assert_eq!(hypervolume(&pts(&[[0.5, 0.5]]), &r).unwrap(), 0.25);
        let two = hypervolume(&pts(&[[0.2, 0.6], [0.6, 0.2]]), &r).unwrap();
        assert!((two - 0.48).abs() < 1e-15, "{two}");
        assert_eq!(hypervolume(&[], &r).unwrap(), 0.0);
        assert_eq!(hypervolume(&pts(&[[1.0, 0.0]]), &r).unwrap(), 0.0);
        assert!(hypervolume(&[vec![0.1; 4]], &[1.0; 4]).is_err());
    }

    #[test]
    fn hypervolume_3d_boxes() {
        let r = [1.0, 1.0, 1.0];
        assert!((hypervolume(&[vec![0.5, 0.5, 0.5]], &r).unwrap() - 0.125).abs() < 1e-15);
        // two boxes overlapping in [0.5,1]^3 minus nothing: 0.25 + 0.25 - 0.125
        let v = hypervolume(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5]], &r).unwrap();
        assert!((v - 0.375).abs() < 1e-15, "{v}");
    }

    #[test]
    fn staircase_handles_ties() {
        let r = [1.0, 1.0];
        let v = hypervolume(&pts(&[[0.5, 0.5], [0.5, 0.25], [0.25, 0.5]]), &r).unwrap();
        // union of [0.5,1]x[0.25,1] and [0.25,1]x[0.5,1]
        assert!((v - (0.375 + 0.125)).abs() < 1e-15, "{v}");
        let v3 = hypervolume(
            &[vec![0.5, 0.5, 0.2], vec![0.5, 0.25, 0.2], vec![0.25, 0.5, 0.2]],
            &[1.0, 1.0, 1.0],
        )
        .unwrap();
        assert!((v3 - 0.5 * 0.8).abs() < 1e-15, "{v3}");
    }

    #[test]
    fn monte_carlo_agrees_roughly() {
        let set = pts(&[[0.2, 0.6], [0.6, 0.2]]);
        let est = hypervolume_monte_carlo(&set, &[1.0, 1.0], 200_000, 3);
        assert!((est - 0.48).abs() < 0.01, "{est}");
    }

    #[test]
    fn trajectory_lookup() {
        let t = TrajectorySeries {
            points: vec![(50, 0.1), (100, 0.2), (150, 0.4)],
        };
        assert_eq!(t.at(49), None);
        assert_eq!(t.at(120), Some(0.2));
        assert_eq!(t.at(1_000), Some(0.4));
    }

    #[test]
    fn single_run_eaf_is_indicator() {
        let run = pts(&[[0.2, 0.8], [0.6, 0.3]]);
        let (xb, yb) = eaf_breaks(&[run.clone()], 100).unwrap();
        let g = eaf(&[run], &xb, &yb).unwrap();
        assert!(g.levels.iter().all(|&l| l == 0.0 || l == 1.0));
        // corner (0.2, 0.3) is not attained, (0.6, 0.3) is
        assert_eq!(g.level(0, 0), 0.0);
        assert_eq!(g.level(1, 0), 1.0);
        assert_eq!(g.level(0, 1), 1.0);
    }

    #[test]
    fn eaf_rejects_three_objectives() {
        let run = vec![vec![0.1, 0.2, 0.3]];
        assert!(eaf(&[run.clone()], &[0.1], &[0.2]).is_err());
        assert!(eaf_breaks(&[run], 10).is_err());
    }

    #[test]
    fn diff_of_identical_inputs_is_zero() {
        let a = vec![pts(&[[0.2, 0.8], [0.6, 0.3]]), pts(&[[0.4, 0.4]])];
        let (xb, yb) = eaf_breaks(&a, 100).unwrap();
        let d = eaf_diff(&a, &a, &xb, &yb).unwrap();
        assert!(d.diff.levels.iter().all(|&l| l == 0.0));
        assert_eq!(d.positive_area_fraction(), 0.0);
    }

    #[test]
    fn envelopes() {
        let a = vec![pts(&[[0.0, 1.0], [1.0, 0.0]]), pts(&[[0.5, 0.5]])];
        let (xb, yb) = eaf_breaks(&a, 100).unwrap();
        let d = eaf_diff(&a, &a, &xb, &yb).unwrap();
        assert_eq!(d.grand_best, vec![(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]);
        assert_eq!(d.grand_worst, vec![(0.5, 1.0), (1.0, 0.5)]);
    }

    #[test]
    fn thinning_keeps_extremes() {
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        let t = thin(v, 11);
        assert_eq!(t.len(), 11);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[10], 999.0);
    }
}

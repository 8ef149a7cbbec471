//! Generational MOEA/D-DE with the partial update strategy.
//!
//! Each iteration draws a priority for every sub-problem, keeps the `n`
//! non-boundary sub-problems with the highest priority plus all boundary
//! sub-problems, and produces one candidate for each of them from the
//! population as it stood at the start of the iteration. Replacement then
//! runs over the whole population: any sub-problem in a candidate's pool
//! can take it, selected for variation or not. With `n >= N - m` every
//! sub-problem is selected and the loop is plain MOEA/D-DE.
//!
//! Random draws happen in a fixed order so that a run is a pure function of
//! `(config, problem, seed)`:
//!
//! 1. one uniform priority per sub-problem;
//! 2. per selected sub-problem, in ascending index order: the pool draw,
//!    the two donor draws, then one draw per variable for the mutation
//!    test and one more for every mutated variable;
//! 3. per candidate, in the same order, one shuffle of its pool.

use std::cell::Cell;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::EvalArchivePolicy;
use crate::problems::{Evaluator, Problem};
use crate::weights::{build_neighborhoods, generate_weights, NeighborhoodTable, WeightVector};
use crate::{Error, Result};

/// Lower bound applied to Tchebycheff weights.
pub const WEIGHT_FLOOR: f64 = 1e-6;

/// Every parameter of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    /// Population size `N` (number of sub-problems).
    pub population_size: usize,
    /// Sub-problems picked for variation per iteration, besides the boundaries.
    pub partial_update: usize,
    pub objectives: usize,
    /// DE scale factor `F`.
    pub de_f: f64,
    pub eta_m: f64,
    pub p_m: f64,
    /// Maximum replacements per candidate.
    pub nr: usize,
    /// Probability of mating within the neighbourhood.
    pub delta_p: f64,
    pub neighborhood_size: usize,
    pub budget: usize,
    pub archive_policy: EvalArchivePolicy,
    /// Iterations between population snapshots.
    pub checkpoint_stride: usize,
    /// Evaluation counts at which the last state not exceeding them is also
    /// snapshotted, so anytime comparisons line up across variants.
    #[serde(default)]
    pub checkpoint_evals: Vec<usize>,
    #[serde(default)]
    pub weight_seed: u64,
}

impl AlgorithmConfig {
    /// Defaults: `F = 0.25`, `eta_m = 20`, `p_m = 0.01`, `nr = 2`,
    /// `delta_p = 0.9`, `T = ceil(0.2 N)`, 100 000 evaluations, final
    /// population archive, a snapshot every iteration.
    pub fn new(population_size: usize, partial_update: usize, objectives: usize) -> Self {
        Self {
            population_size,
            partial_update,
            objectives,
            de_f: 0.25,
            eta_m: 20.0,
            p_m: 0.01,
            nr: 2,
            delta_p: 0.9,
            neighborhood_size: default_neighborhood(population_size),
            budget: 100_000,
            archive_policy: EvalArchivePolicy::final_population(population_size),
            checkpoint_stride: 1,
            checkpoint_evals: Vec::new(),
            weight_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.population_size;
        let fail = |msg: String| Err(Error::Config(msg));
        if !(2..=3).contains(&self.objectives) {
            return fail(format!("objectives must be 2 or 3, got {}", self.objectives));
        }
        if self.partial_update == 0 || self.partial_update > n {
            return fail(format!("partial update n = {} must be in 1..={n}", self.partial_update));
        }
        if !(self.de_f > 0.0 && self.de_f.is_finite()) {
            return fail(format!("DE scale factor must be positive, got {}", self.de_f));
        }
        if !(self.eta_m >= 0.0 && self.eta_m.is_finite()) {
            return fail(format!("eta_m must be non-negative, got {}", self.eta_m));
        }
        if !(0.0..=1.0).contains(&self.p_m) {
            return fail(format!("p_m must be in [0, 1], got {}", self.p_m));
        }
        if !(0.0..=1.0).contains(&self.delta_p) {
            return fail(format!("delta_p must be in [0, 1], got {}", self.delta_p));
        }
        if self.nr == 0 {
            return fail("nr must be at least 1".into());
        }
        if self.neighborhood_size < self.objectives || self.neighborhood_size > n {
            return fail(format!(
                "neighbourhood size {} must be in {}..={n}",
                self.neighborhood_size, self.objectives
            ));
        }
        if self.budget < n {
            return fail(format!(
                "budget {} cannot initialise a population of {n}",
                self.budget
            ));
        }
        if self.checkpoint_stride == 0 {
            return fail("checkpoint stride must be at least 1".into());
        }
        self.archive_policy.validate(n)
    }

    /// Sub-problems varied (and evaluations spent) per iteration.
    pub fn per_iteration(&self) -> usize {
        (self.partial_update + self.objectives).min(self.population_size)
    }
}

/// `ceil(0.2 N)`.
pub fn default_neighborhood(population_size: usize) -> usize {
    (population_size * 2).div_ceil(10)
}

/// One scalar sub-problem and its incumbent.
#[derive(Debug, Clone, PartialEq)]
pub struct Subproblem {
    pub weight: WeightVector,
    pub neighbors: Vec<usize>,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
}

/// Source of per-iteration sub-problem priorities.
pub trait PriorityFunction {
    fn assign(&mut self, rng: &mut ChaCha8Rng, subproblems: &[Subproblem], out: &mut [f64]);
}

/// Independent uniform draws, the partial update strategy.
#[derive(Debug, Default, Clone, Copy)]
pub struct UniformPriority;

impl PriorityFunction for UniformPriority {
    fn assign(&mut self, rng: &mut ChaCha8Rng, _subproblems: &[Subproblem], out: &mut [f64]) {
        for u in out.iter_mut() {
            *u = rng.gen::<f64>();
        }
    }
}

#[derive(Debug, Clone)]
pub struct EngineState {
    pub subproblems: Vec<Subproblem>,
    pub boundary: Vec<usize>,
    /// Running component-wise minimum of every objective vector seen.
    pub ideal: Vec<f64>,
    /// Running component-wise maximum of every objective vector seen.
    pub worst: Vec<f64>,
    pub priorities: Vec<f64>,
    pub evals_used: usize,
    pub iteration: usize,
    pub rng: ChaCha8Rng,
}

impl EngineState {
    /// Assembles a state from an already evaluated population.
    pub fn from_parts(
        weights: Vec<WeightVector>,
        table: &NeighborhoodTable,
        xs: Vec<Vec<f64>>,
        fs: Vec<Vec<f64>>,
        rng: ChaCha8Rng,
    ) -> Self {
        let m = fs[0].len();
        let mut ideal = vec![f64::INFINITY; m];
        let mut worst = vec![f64::NEG_INFINITY; m];
        for f in &fs {
            update_bounds(&mut ideal, &mut worst, f);
        }
        let n = weights.len();
        let evals_used = fs.len();
        let subproblems = weights
            .into_iter()
            .zip(xs)
            .zip(fs)
            .enumerate()
            .map(|(i, ((weight, x), f))| Subproblem {
                weight,
                neighbors: table.of(i).to_vec(),
                x,
                f,
            })
            .collect();
        Self {
            subproblems,
            boundary: table.boundary.clone(),
            ideal,
            worst,
            priorities: vec![0.0; n],
            evals_used,
            iteration: 0,
            rng,
        }
    }

    pub fn len(&self) -> usize {
        self.subproblems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subproblems.is_empty()
    }

    pub fn objectives(&self) -> Vec<Vec<f64>> {
        self.subproblems.iter().map(|s| s.f.clone()).collect()
    }

    fn snapshot(&self) -> Checkpoint {
        Checkpoint {
            iteration: self.iteration,
            evals: self.evals_used,
            m: self.ideal.len(),
            objectives: self.subproblems.iter().flat_map(|s| s.f.iter().copied()).collect(),
        }
    }
}

fn update_bounds(ideal: &mut [f64], worst: &mut [f64], f: &[f64]) {
    for ((lo, hi), v) in ideal.iter_mut().zip(worst.iter_mut()).zip(f) {
        *lo = lo.min(*v);
        *hi = hi.max(*v);
    }
}

/// Fills `state.priorities` from `priority` using the run generator.
pub fn sample_priorities(state: &mut EngineState, priority: &mut impl PriorityFunction) {
    let EngineState {
        subproblems,
        priorities,
        rng,
        ..
    } = state;
    priority.assign(rng, subproblems, priorities);
}

/// Indices chosen for variation, in ascending order: the `n` non-boundary
/// sub-problems with the highest priority (ties to the lower index) plus
/// every boundary index. When fewer than `n` non-boundary indices exist, all
/// are taken.
pub fn select_subproblems(priorities: &[f64], n: usize, boundary: &[usize]) -> Vec<usize> {
    select_counted(priorities, n, boundary, &Cell::new(0))
}

/// [`select_subproblems`] that also reports how many priority comparisons
/// it made.
pub fn select_subproblems_counted(priorities: &[f64], n: usize, boundary: &[usize]) -> (Vec<usize>, usize) {
    let counter = Cell::new(0);
    let selected = select_counted(priorities, n, boundary, &counter);
    (selected, counter.get())
}

fn select_counted(priorities: &[f64], n: usize, boundary: &[usize], comparisons: &Cell<usize>) -> Vec<usize> {
    let total = priorities.len();
    let mut chosen = vec![false; total];
    for &b in boundary {
        chosen[b] = true;
    }
    let mut pool: Vec<usize> = (0..total).filter(|&i| !chosen[i]).collect();
    if n >= pool.len() {
        pool.iter().for_each(|&i| chosen[i] = true);
    } else if n > 0 {
        // highest priority first, lower index on ties
        pool.select_nth_unstable_by(n - 1, |&a, &b| {
            comparisons.set(comparisons.get() + 1);
            priorities[b].total_cmp(&priorities[a]).then(a.cmp(&b))
        });
        pool[..n].iter().for_each(|&i| chosen[i] = true);
    }
    (0..total).filter(|&i| chosen[i]).collect()
}

/// Where parents (and later, replacement targets) are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatingScope {
    Neighborhood,
    Population,
}

/// Draws the mating scope of sub-problem `i` and returns its index pool.
pub fn make_mating_pool(
    rng: &mut ChaCha8Rng,
    neighbors: &[usize],
    population: usize,
    delta_p: f64,
) -> (MatingScope, Vec<usize>) {
    if rng.gen::<f64>() < delta_p {
        (MatingScope::Neighborhood, neighbors.to_vec())
    } else {
        (MatingScope::Population, (0..population).collect())
    }
}

/// Parameters of the variation step.
#[derive(Debug, Clone, Copy)]
pub struct VariationParams {
    pub f: f64,
    pub eta_m: f64,
    pub p_m: f64,
}

/// `x_i + F (x_r1 - x_r2)` with two distinct donors from `pool` (excluding
/// `i`), followed by polynomial mutation and truncation to the bounds.
/// Pools with fewer than three members fall back to the whole population.
pub fn de_variation(
    rng: &mut ChaCha8Rng,
    xs: &[Vec<f64>],
    i: usize,
    pool: &[usize],
    params: VariationParams,
    bounds: &[(f64, f64)],
) -> Vec<f64> {
    let donors: Vec<usize> = if pool.len() >= 3 {
        pool.iter().copied().filter(|&j| j != i).collect()
    } else {
        (0..xs.len()).filter(|&j| j != i).collect()
    };
    let (r1, r2) = match donors.len() {
        0 => (i, i),
        1 => (donors[0], donors[0]),
        len => {
            let a = rng.gen_range(0..len);
            let mut b = rng.gen_range(0..len - 1);
            if b >= a {
                b += 1;
            }
            (donors[a], donors[b])
        }
    };
    let y: Vec<f64> = xs[i]
        .iter()
        .zip(&xs[r1])
        .zip(&xs[r2])
        .map(|((xi, a), b)| xi + params.f * (a - b))
        .collect();
    let y = repair_truncate(&y, bounds);
    let y = polynomial_mutation(&y, params.eta_m, params.p_m, bounds, rng);
    repair_truncate(&y, bounds)
}

/// Bounded polynomial mutation; each variable is perturbed with probability
/// `p_m`.
pub fn polynomial_mutation(
    x: &[f64],
    eta_m: f64,
    p_m: f64,
    bounds: &[(f64, f64)],
    rng: &mut impl Rng,
) -> Vec<f64> {
    let power = 1.0 / (eta_m + 1.0);
    x.iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| {
            if rng.gen::<f64>() >= p_m {
                return v;
            }
            let r = rng.gen::<f64>();
            let span = hi - lo;
            if span <= 0.0 {
                return v;
            }
            let d1 = (v - lo) / span;
            let d2 = (hi - v) / span;
            let dq = if r < 0.5 {
                let t = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1).powf(eta_m + 1.0);
                t.powf(power) - 1.0
            } else {
                let t = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2).powf(eta_m + 1.0);
                1.0 - t.powf(power)
            };
            (v + dq * span).clamp(lo, hi)
        })
        .collect()
}

/// Clamps every component into its box.
pub fn repair_truncate(x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter().zip(bounds).map(|(&v, &(lo, hi))| v.clamp(lo, hi)).collect()
}

/// Linear map of objective vectors onto `[0, 1]` per component.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFrame {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScaleFrame {
    /// Component-wise extent of `points`.
    pub fn of<'a>(points: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut iter = points.into_iter();
        let first = iter.next().expect("frame of an empty point set");
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for p in iter {
            update_bounds(&mut min, &mut max, p);
        }
        Self { min, max }
    }

    /// Components with no spread map to 0.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }
}

/// Scales the current population by its own component-wise min and max.
pub fn scale_objectives(state: &EngineState) -> Vec<Vec<f64>> {
    let frame = ScaleFrame::of(state.subproblems.iter().map(|s| s.f.as_slice()));
    state.subproblems.iter().map(|s| frame.apply(&s.f)).collect()
}

/// Weighted Tchebycheff value `max_j max(w_j, 1e-6) (f_j - z_j)`.
pub fn scalarize(f: &[f64], w: &[f64], z: &[f64]) -> f64 {
    f.iter()
        .zip(w)
        .zip(z)
        .map(|((fj, wj), zj)| wj.max(WEIGHT_FLOOR) * (fj - zj))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A candidate produced for sub-problem `source`, with the pool it was
/// mated in.
#[derive(Debug, Clone, PartialEq)]
pub struct Offspring {
    pub source: usize,
    pub pool: Vec<usize>,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
}

/// Offers each candidate, in order, to the sub-problems of its pool visited
/// in a fresh random order. A sub-problem takes the candidate when the
/// candidate's scaled Tchebycheff value is strictly lower than its
/// incumbent's; at most `nr` sub-problems take any one candidate. The
/// running ideal and worst points absorb every candidate. Returns the
/// number of replacements per candidate.
pub fn replacement(state: &mut EngineState, offspring: &[Offspring], frame: &ScaleFrame, nr: usize) -> Vec<usize> {
    let m = state.ideal.len();
    let z = vec![0.0; m];
    let mut scaled: Vec<Vec<f64>> = state.subproblems.iter().map(|s| frame.apply(&s.f)).collect();
    let mut counts = Vec::with_capacity(offspring.len());
    for child in offspring {
        update_bounds(&mut state.ideal, &mut state.worst, &child.f);
        let child_scaled = frame.apply(&child.f);
        let mut order = child.pool.clone();
        order.shuffle(&mut state.rng);
        let mut replaced = 0;
        for j in order {
            if replaced >= nr {
                break;
            }
            let w = state.subproblems[j].weight.as_slice();
            if scalarize(&child_scaled, w, &z) < scalarize(&scaled[j], w, &z) {
                let sp = &mut state.subproblems[j];
                sp.x.clone_from(&child.x);
                sp.f.clone_from(&child.f);
                scaled[j].clone_from(&child_scaled);
                replaced += 1;
            }
        }
        counts.push(replaced);
    }
    counts
}

/// Population snapshot taken after an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub iteration: usize,
    pub evals: usize,
    pub m: usize,
    /// `N * m` values, slot-major.
    pub objectives: Vec<f64>,
}

impl Checkpoint {
    pub fn population(&self) -> usize {
        self.objectives.len() / self.m
    }

    pub fn point(&self, slot: usize) -> &[f64] {
        &self.objectives[slot * self.m..(slot + 1) * self.m]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.objectives.chunks_exact(self.m)
    }
}

/// Everything needed to recompute any metric of a run offline.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub problem: String,
    pub seed: u64,
    pub config: AlgorithmConfig,
    pub checkpoints: Vec<Checkpoint>,
    /// Final `(x, f)` pairs, one per sub-problem.
    pub final_population: Vec<(Vec<f64>, Vec<f64>)>,
}

impl RunResult {
    pub fn from_parts(
        problem: String,
        seed: u64,
        config: AlgorithmConfig,
        checkpoints: Vec<Checkpoint>,
        final_population: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Self {
        Self {
            problem,
            seed,
            config,
            checkpoints,
            final_population,
        }
    }

    /// Evaluations consumed by the whole run.
    pub fn final_evals(&self) -> usize {
        self.checkpoints.last().map_or(0, |c| c.evals)
    }
}

/// Runs MOEA/D-PS with uniform priorities.
pub fn run(config: &AlgorithmConfig, problem: &Problem, seed: u64) -> Result<RunResult> {
    run_with_priority(config, problem, seed, &mut UniformPriority)
}

/// Runs the optimizer with an arbitrary priority function.
pub fn run_with_priority(
    config: &AlgorithmConfig,
    problem: &Problem,
    seed: u64,
    priority: &mut impl PriorityFunction,
) -> Result<RunResult> {
    let mut observer = |_: &EngineState, _: &[usize]| {};
    run_observed(config, problem, seed, priority, &mut observer)
}

/// Core loop. `observer` sees the state and the selected indices after
/// every iteration; tests use it to check accounting invariants.
pub fn run_observed(
    config: &AlgorithmConfig,
    problem: &Problem,
    seed: u64,
    priority: &mut impl PriorityFunction,
    observer: &mut impl FnMut(&EngineState, &[usize]),
) -> Result<RunResult> {
    config.validate()?;
    if problem.objectives() != config.objectives {
        return Err(Error::config(format!(
            "{} has {} objectives, config expects {}",
            problem.key(),
            problem.objectives(),
            config.objectives
        )));
    }
    let n = config.population_size;
    let weights = generate_weights(n, config.objectives, config.weight_seed)?;
    let table = build_neighborhoods(&weights, config.neighborhood_size)?;
    let bounds = problem.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluator = Evaluator::new(problem);

    let xs: Vec<Vec<f64>> = (0..n)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect())
        .collect();
    let fs = xs
        .iter()
        .map(|x| evaluator.evaluate(x))
        .collect::<Result<Vec<_>>>()?;
    let mut state = EngineState::from_parts(weights, &table, xs, fs, rng);
    debug_assert_eq!(state.evals_used, evaluator.used());

    let params = VariationParams {
        f: config.de_f,
        eta_m: config.eta_m,
        p_m: config.p_m,
    };
    let per_iteration = config.per_iteration();
    let mut checkpoints = vec![state.snapshot()];

    while state.evals_used + per_iteration <= config.budget {
        let next = state.evals_used + per_iteration;
        let forced = config
            .checkpoint_evals
            .iter()
            .any(|&mark| state.evals_used <= mark && mark < next);
        if forced && checkpoints.last().map(|c| c.evals) != Some(state.evals_used) {
            checkpoints.push(state.snapshot());
        }

        sample_priorities(&mut state, priority);
        let selected = select_subproblems(&state.priorities, config.partial_update, &state.boundary);
        debug_assert_eq!(selected.len(), per_iteration);

        // every candidate is built from the population at iteration start
        let parents: Vec<Vec<f64>> = state.subproblems.iter().map(|s| s.x.clone()).collect();
        let mut offspring = Vec::with_capacity(selected.len());
        for &i in &selected {
            let (_, pool) = make_mating_pool(&mut state.rng, &state.subproblems[i].neighbors, n, config.delta_p);
            let x = de_variation(&mut state.rng, &parents, i, &pool, params, bounds);
            let f = evaluator.evaluate(&x)?;
            offspring.push(Offspring { source: i, pool, x, f });
        }
        state.evals_used = evaluator.used();

        let frame = ScaleFrame::of(state.subproblems.iter().map(|s| s.f.as_slice()));
        replacement(&mut state, &offspring, &frame, config.nr);
        state.iteration += 1;
        observer(&state, &selected);

        if state.iteration.is_multiple_of(config.checkpoint_stride) {
            checkpoints.push(state.snapshot());
        }
    }
    if checkpoints.last().map(|c| c.evals) != Some(state.evals_used) {
        checkpoints.push(state.snapshot());
    }

    let final_population = state
        .subproblems
        .into_iter()
        .map(|s| (s.x, s.f))
        .collect();
    Ok(RunResult {
        problem: problem.key(),
        seed,
        config: config.clone(),
        checkpoints,
        final_population,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_problem, Family};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn small_config(n: usize, partial: usize) -> AlgorithmConfig {
        let mut c = AlgorithmConfig::new(n, partial, 2);
        c.budget = 2_000;
        c
    }

    #[test]
    fn defaults_follow_the_parameter_table() {
        let c = AlgorithmConfig::new(500, 50, 2);
        assert_eq!(c.de_f, 0.25);
        assert_eq!(c.eta_m, 20.0);
        assert_eq!(c.p_m, 0.01);
        assert_eq!(c.nr, 2);
        assert_eq!(c.delta_p, 0.9);
        assert_eq!(c.neighborhood_size, 100);
        assert_eq!(c.budget, 100_000);
        assert_eq!(AlgorithmConfig::new(50, 48, 2).neighborhood_size, 10);
        assert_eq!(default_neighborhood(51), 11);
        c.validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let mut c = AlgorithmConfig::new(50, 5, 2);
        c.budget = 49;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = AlgorithmConfig::new(50, 0, 2);
        assert!(c.validate().is_err());
        c.partial_update = 51;
        assert!(c.validate().is_err());
        let mut c = AlgorithmConfig::new(50, 5, 4);
        assert!(c.validate().is_err());
        c.objectives = 2;
        c.neighborhood_size = 1;
        assert!(c.validate().is_err());
        c.neighborhood_size = 10;
        c.p_m = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn priorities_are_unit_interval_draws() {
        let p = make_problem(Family::Dtlz, 2, 2, 40).unwrap();
        let w = generate_weights(3, 2, 0).unwrap();
        let t = build_neighborhoods(&w, 2).unwrap();
        let xs: Vec<Vec<f64>> = (0..3).map(|i| vec![i as f64 / 3.0; 40]).collect();
        let fs = xs.iter().map(|x| p.evaluate(x).unwrap()).collect();
        let mut s = EngineState::from_parts(w, &t, xs, fs, rng(5));
        sample_priorities(&mut s, &mut UniformPriority);
        let first = s.priorities.clone();
        assert!(first.iter().all(|u| (0.0..1.0).contains(u)));
        sample_priorities(&mut s, &mut UniformPriority);
        assert_ne!(first, s.priorities);
    }

    #[test]
    fn uniform_priority_mean() {
        let mut r = rng(9);
        let mut out = vec![0.0; 100_000];
        UniformPriority.assign(&mut r, &[], &mut out);
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn selection_examples() {
        assert_eq!(select_subproblems(&[0.9, 0.1, 0.5, 0.2], 1, &[3]), vec![0, 3]);
        assert_eq!(select_subproblems(&[0.9, 0.1, 0.5, 0.2], 2, &[0, 3]), vec![0, 1, 2, 3]);
        assert_eq!(select_subproblems(&[0.5, 0.5, 0.5], 1, &[]), vec![0]);
        // ties go to the lower index even when it is not first
        assert_eq!(select_subproblems(&[0.1, 0.7, 0.7, 0.7], 2, &[0]), vec![0, 1, 2]);
    }

    #[test]
    fn selection_size_is_n_plus_m() {
        let mut r = rng(1);
        for _ in 0..1000 {
            let u: Vec<f64> = (0..500).map(|_| r.gen()).collect();
            let s = select_subproblems(&u, 50, &[0, 499]);
            assert_eq!(s.len(), 52);
            assert!(s.contains(&0) && s.contains(&499));
        }
    }

    #[test]
    fn selection_overhead_is_linear() {
        let mut r = rng(2);
        for n_total in [100usize, 1_000, 10_000, 100_000] {
            let u: Vec<f64> = (0..n_total).map(|_| r.gen()).collect();
            let (s, comparisons) = select_subproblems_counted(&u, n_total / 10, &[0, n_total - 1]);
            assert_eq!(s.len(), n_total / 10 + 2);
            assert!(comparisons <= 8 * n_total, "{comparisons} comparisons for N = {n_total}");
        }
    }

    #[test]
    fn mating_pool_extremes_and_rate() {
        let nb = vec![3, 1, 2];
        let mut r = rng(3);
        for _ in 0..100 {
            assert_eq!(make_mating_pool(&mut r, &nb, 10, 1.0).0, MatingScope::Neighborhood);
            let (scope, pool) = make_mating_pool(&mut r, &nb, 10, 0.0);
            assert_eq!(scope, MatingScope::Population);
            assert_eq!(pool, (0..10).collect::<Vec<_>>());
        }
        let hits = (0..10_000)
            .filter(|_| make_mating_pool(&mut r, &nb, 10, 0.9).0 == MatingScope::Neighborhood)
            .count();
        let frac = hits as f64 / 10_000.0;
        assert!((frac - 0.9).abs() <= 0.02, "{frac}");
    }

    #[test]
    fn repair_examples() {
        let b = vec![(0.0, 1.0); 3];
        assert_eq!(repair_truncate(&[0.2, 0.5, 1.0], &b), vec![0.2, 0.5, 1.0]);
        assert_eq!(repair_truncate(&[1.7, -0.2, 0.3], &b), vec![1.0, 0.0, 0.3]);
        let once = repair_truncate(&[1.7, -3.0, 0.3], &b);
        assert_eq!(repair_truncate(&once, &b), once);
    }

    #[test]
    fn mutation_identity_and_bounds() {
        let b = vec![(-2.0, 2.0); 40];
        let mut r = rng(4);
        let x: Vec<f64> = (0..40).map(|_| r.gen_range(-2.0..2.0)).collect();
        assert_eq!(polynomial_mutation(&x, 20.0, 0.0, &b, &mut r), x);
        for _ in 0..2_500 {
            let y = polynomial_mutation(&x, 20.0, 1.0, &b, &mut r);
            assert!(y.iter().all(|v| (-2.0..=2.0).contains(v)));
        }
    }

    #[test]
    fn mutation_is_symmetric_at_the_centre() {
        let b = [(0.0, 1.0)];
        let mut r = rng(6);
        let trials = 100_000;
        let mean = (0..trials)
            .map(|_| polynomial_mutation(&[0.5], 20.0, 1.0, &b, &mut r)[0] - 0.5)
            .sum::<f64>()
            / trials as f64;
        assert!(mean.abs() < 0.003, "{mean}");
    }

    #[test]
    fn scaling_examples() {
        let p = make_problem(Family::Dtlz, 2, 2, 40).unwrap();
        let w = generate_weights(2, 2, 0).unwrap();
        let t = build_neighborhoods(&w, 2).unwrap();
        let xs = vec![vec![0.1; 40], vec![0.2; 40]];
        let s = EngineState::from_parts(w.clone(), &t, xs.clone(), vec![vec![1.0, 3.0], vec![2.0, 1.0]], rng(0));
        assert_eq!(scale_objectives(&s), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let s = EngineState::from_parts(w, &t, xs, vec![vec![4.0, 4.0], vec![4.0, 4.0]], rng(0));
        assert_eq!(scale_objectives(&s), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        let _ = p;
    }

    #[test]
    fn scalarize_examples() {
        assert!((scalarize(&[0.2, 0.4], &[0.5, 0.5], &[0.0, 0.0]) - 0.2).abs() < 1e-15);
        assert_eq!(scalarize(&[0.3, 0.7], &[0.4, 0.6], &[0.3, 0.7]), 0.0);
        assert_eq!(scalarize(&[0.3, 0.9], &[1.0, 0.0], &[0.0, 0.0]), 0.3);
        assert_eq!(scalarize(&[0.0, 0.9], &[1.0, 0.0], &[0.0, 0.0]), 0.9 * WEIGHT_FLOOR);
    }

    #[test]
    fn zero_variation_returns_the_incumbent() {
        let b = vec![(0.0, 1.0); 4];
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![0.1 * i as f64 + 0.05; 4]).collect();
        let params = VariationParams {
            f: 0.0,
            eta_m: 20.0,
            p_m: 0.0,
        };
        let y = de_variation(&mut rng(8), &xs, 2, &[0, 1, 2, 3, 4], params, &b);
        assert_eq!(y, xs[2]);
    }

    #[test]
    fn equal_donors_give_mutated_incumbent() {
        let b = vec![(0.0, 1.0); 4];
        let mut xs: Vec<Vec<f64>> = vec![vec![0.3; 4]; 3];
        xs[0] = vec![0.9, 0.1, 0.5, 0.5];
        let params = VariationParams {
            f: 0.7,
            eta_m: 20.0,
            p_m: 1.0,
        };
        let mut a = rng(10);
        let y = de_variation(&mut a, &xs, 0, &[0, 1, 2], params, &b);
        // replay: donors 1 and 2 are identical, so only mutation acts
        let mut r = rng(10);
        let _ = r.gen_range(0..2usize);
        let _ = r.gen_range(0..1usize);
        let expect = polynomial_mutation(&xs[0], 20.0, 1.0, &b, &mut r);
        assert_eq!(y, expect);
    }

    #[test]
    fn de_matches_replayed_draws() {
        let d = 40;
        let b = vec![(-1.0, 1.0); d];
        let mut r = rng(11);
        let xs: Vec<Vec<f64>> = (0..20).map(|_| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let pool: Vec<usize> = vec![4, 7, 9, 12, 5];
        let params = VariationParams {
            f: 0.25,
            eta_m: 20.0,
            p_m: 0.3,
        };
        let y = de_variation(&mut rng(12), &xs, 7, &pool, params, &b);

        // step-through oracle, written against the documented draw order
        let mut r = rng(12);
        let donors = [4usize, 9, 12, 5];
        let a = r.gen_range(0..4usize);
        let mut c = r.gen_range(0..3usize);
        if c >= a {
            c += 1;
        }
        let (r1, r2) = (donors[a], donors[c]);
        let mut expect = Vec::with_capacity(d);
        for j in 0..d {
            let mut v = (xs[7][j] + 0.25 * (xs[r1][j] - xs[r2][j])).clamp(-1.0, 1.0);
            if r.gen::<f64>() < 0.3 {
                let u: f64 = r.gen();
                let (d1, d2) = ((v + 1.0) / 2.0, (1.0 - v) / 2.0);
                let dq = if u < 0.5 {
                    (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(21.0)).powf(1.0 / 21.0) - 1.0
                } else {
                    1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(21.0)).powf(1.0 / 21.0)
                };
                v = (v + dq * 2.0).clamp(-1.0, 1.0);
            }
            expect.push(v);
        }
        assert_eq!(y, expect);
    }

    fn toy_state() -> EngineState {
        let w: Vec<WeightVector> = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
            .iter()
            .map(|&a| WeightVector::new(vec![a, 1.0 - a]).unwrap())
            .collect();
        let t = build_neighborhoods(&w, 3).unwrap();
        let fs = vec![
            vec![1.0, 0.0],
            vec![0.8, 0.5],
            vec![0.6, 0.6],
            vec![0.5, 0.8],
            vec![0.2, 0.9],
            vec![0.0, 1.0],
        ];
        let xs = (0..6).map(|i| vec![i as f64]).collect();
        EngineState::from_parts(w, &t, xs, fs, rng(21))
    }

    #[test]
    fn dominated_candidate_replaces_nothing() {
        let mut s = toy_state();
        let before = s.subproblems.clone();
        let child = Offspring {
            source: 2,
            pool: vec![1, 2, 3],
            x: vec![9.0],
            f: vec![0.9, 0.95],
        };
        let frame = ScaleFrame::of(s.subproblems.iter().map(|p| p.f.as_slice()).chain([child.f.as_slice()]));
        assert_eq!(replacement(&mut s, &[child], &frame, 2), vec![0]);
        assert_eq!(s.subproblems, before);
        assert_eq!(s.ideal, vec![0.0, 0.0]);
    }

    #[test]
    fn dominating_candidate_replaces_exactly_nr() {
        let mut s = toy_state();
        let child = Offspring {
            source: 2,
            pool: vec![1, 2, 3],
            x: vec![9.0],
            f: vec![0.1, 0.1],
        };
        let frame = ScaleFrame::of(s.subproblems.iter().map(|p| p.f.as_slice()).chain([child.f.as_slice()]));
        assert_eq!(replacement(&mut s, &[child], &frame, 2), vec![2]);
        assert_eq!(s.subproblems.iter().filter(|p| p.x == vec![9.0]).count(), 2);
    }

    #[test]
    fn replacement_matches_hand_trace() {
        let mut s = toy_state();
        let child = Offspring {
            source: 3,
            pool: s.subproblems[3].neighbors.clone(),
            x: vec![7.0],
            f: vec![0.45, 0.55],
        };
        let frame = ScaleFrame::of(s.subproblems.iter().map(|p| p.f.as_slice()).chain([child.f.as_slice()]));
        // frame is [0,1] x [0,1] here, so scaled values equal raw ones
        assert_eq!(frame.min, vec![0.0, 0.0]);
        assert_eq!(frame.max, vec![1.0, 1.0]);

        let mut order = child.pool.clone();
        order.shuffle(&mut rng(21));
        // Tchebycheff values of the candidate vs incumbents (w = (a, 1 - a)):
        //   j=2 (0.4,0.6): cand max(0.18, 0.33) = 0.33 vs max(0.24, 0.36) = 0.36 -> take
        //   j=3 (0.6,0.4): cand max(0.27, 0.22) = 0.27 vs max(0.30, 0.32) = 0.32 -> take
        //   j=4 (0.8,0.2): cand max(0.36, 0.11) = 0.36 vs max(0.16, 0.18) = 0.18 -> keep
        let takes = |j: usize| j == 2 || j == 3;
        let mut expected: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let mut count = 0;
        for j in order {
            if count == 2 {
                break;
            }
            if takes(j) {
                expected[j] = 7.0;
                count += 1;
            }
        }
        replacement(&mut s, &[child], &frame, 2);
        let got: Vec<f64> = s.subproblems.iter().map(|p| p.x[0]).collect();
        assert_eq!(got, expected);
        assert_eq!(got[2], 7.0);
        assert_eq!(got[3], 7.0);
        assert_eq!(got[4], 4.0);
    }

    #[test]
    fn one_partial_iteration_spends_n_plus_m() {
        let p = make_problem(Family::Dtlz, 2, 2, 40).unwrap();
        let mut c = AlgorithmConfig::new(500, 50, 2);
        c.budget = 552;
        let r = run(&c, &p, 1).unwrap();
        assert_eq!(r.final_evals(), 552);
        assert_eq!(r.checkpoints.len(), 2);
    }

    #[test]
    fn full_update_selects_everything() {
        let p = make_problem(Family::Dtlz, 1, 2, 40).unwrap();
        let c = small_config(20, 20);
        let mut seen = Vec::new();
        run_observed(&c, &p, 3, &mut UniformPriority, &mut |s: &EngineState, sel: &[usize]| {
            seen.push((s.evals_used, sel.len()));
        })
        .unwrap();
        assert!(!seen.is_empty());
        for (k, (evals, len)) in seen.iter().enumerate() {
            assert_eq!(*len, 20);
            assert_eq!(*evals, 20 + (k + 1) * 20);
        }
    }

    #[test]
    fn budget_below_population_is_rejected() {
        let p = make_problem(Family::Dtlz, 1, 2, 40).unwrap();
        let mut c = AlgorithmConfig::new(50, 5, 2);
        c.budget = 10;
        assert!(matches!(run(&c, &p, 0), Err(Error::Config(_))));
        let uf8 = make_problem(Family::Uf, 8, 3, 40).unwrap();
        assert!(run(&AlgorithmConfig::new(50, 5, 2), &uf8, 0).is_err());
    }

    #[test]
    fn runs_are_deterministic() {
        let p = make_problem(Family::Uf, 8, 3, 40).unwrap();
        let mut c = AlgorithmConfig::new(30, 3, 3);
        c.budget = 600;
        assert_eq!(run(&c, &p, 42).unwrap(), run(&c, &p, 42).unwrap());
        assert_ne!(run(&c, &p, 42).unwrap(), run(&c, &p, 43).unwrap());
    }

    #[test]
    fn ideal_is_monotone_and_bounds_hold() {
        let p = make_problem(Family::Uf, 2, 2, 40).unwrap();
        let c = small_config(30, 3);
        let mut last_ideal: Option<Vec<f64>> = None;
        run_observed(&c, &p, 5, &mut UniformPriority, &mut |s: &EngineState, _: &[usize]| {
            if let Some(prev) = &last_ideal {
                assert!(s.ideal.iter().zip(prev).all(|(a, b)| a <= b));
            }
            for sp in &s.subproblems {
                for k in 0..2 {
                    assert!(s.ideal[k] <= sp.f[k] && sp.f[k] <= s.worst[k]);
                }
            }
            assert!(s.evals_used <= c.budget);
            last_ideal = Some(s.ideal.clone());
        })
        .unwrap();
    }

    #[test]
    fn checkpoints_follow_stride_and_marks() {
        let p = make_problem(Family::Dtlz, 2, 2, 40).unwrap();
        let mut c = AlgorithmConfig::new(50, 5, 2);
        c.budget = 1_000;
        c.checkpoint_stride = 4;
        c.checkpoint_evals = vec![300];
        let r = run(&c, &p, 0).unwrap();
        let evals: Vec<usize> = r.checkpoints.iter().map(|c| c.evals).collect();
        assert!(evals.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(evals[0], 50);
        // 50 + 7 * 7 = 99 evals per 4 iterations: 78, 106, ...; mark 300 -> 295
        assert!(evals.contains(&295));
        assert_eq!(*evals.last().unwrap(), r.final_evals());
        assert!(r.final_evals() <= 1_000 && r.final_evals() + 7 > 1_000);
        assert_eq!(r.final_population.len(), 50);
    }
}

//! Experiment orchestration: manifests, seeded batch runs, the results
//! directory and offline recomputation of metrics, tests and plots.
//!
//! Store layout under the output root:
//!
//! ```text
//! manifest.json
//! runs/<problem>/<variant>/run_<r>/{run.json, checkpoints.csv, final_population.csv}
//! metrics/{summary.csv, runs.csv, anytime.csv, frames.csv, eaf_summary.csv}
//! eaf/<problem>/<a>__vs__<b>.csv and <a>__vs__<b>_surfaces.csv
//! stats/{comparisons.csv, intervals.csv}
//! plots/*.svg
//! ```
//!
//! Every file is a function of the manifest alone and is written through a
//! temporary file followed by a rename.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::archive::{build_evaluation_set, EvalArchivePolicy};
use crate::engine::{self, default_neighborhood, AlgorithmConfig, Checkpoint, RunResult};
use crate::metrics::{
    anytime_trajectory, eaf_breaks, eaf_diff, nondominated_proportion, normalize_objectives,
    normalized_hypervolume, unique_nondominated_proportion, NormalizationFrame, TrajectorySeries,
};
use crate::problems::{problem_from_key, registry_keys, DEFAULT_DIMENSION};
use crate::stats::{compare_all, paired_median_ci, reports_to_csv, MedianInterval, TestReport};
use crate::svg::{anytime_svg, ci_svg, eaf_diff_svg, AnytimeBand, IntervalRow};
use crate::{par, Error, Result};

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "MOEADPS_OUTPUT";

fn default_de_f() -> f64 {
    0.25
}
fn default_eta_m() -> f64 {
    20.0
}
fn default_p_m() -> f64 {
    0.01
}
fn default_nr() -> usize {
    2
}
fn default_delta_p() -> f64 {
    0.9
}
fn default_one() -> usize {
    1
}
fn default_runs() -> usize {
    10
}
fn default_budget() -> usize {
    100_000
}
fn default_dimension() -> usize {
    DEFAULT_DIMENSION
}
fn default_alpha() -> f64 {
    crate::stats::ALPHA
}
fn default_eaf_cap() -> usize {
    2000
}

/// One algorithm configuration of an experiment, independent of the
/// problem's objective count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub label: String,
    pub population_size: usize,
    pub partial_update: usize,
    #[serde(default = "default_de_f")]
    pub de_f: f64,
    #[serde(default = "default_eta_m")]
    pub eta_m: f64,
    #[serde(default = "default_p_m")]
    pub p_m: f64,
    #[serde(default = "default_nr")]
    pub nr: usize,
    #[serde(default = "default_delta_p")]
    pub delta_p: f64,
    #[serde(default)]
    pub neighborhood_size: Option<usize>,
    #[serde(default)]
    pub archive_policy: Option<EvalArchivePolicy>,
    #[serde(default = "default_one")]
    pub checkpoint_stride: usize,
    #[serde(default)]
    pub weight_seed: u64,
}

impl VariantSpec {
    pub fn new(label: &str, population_size: usize, partial_update: usize) -> Self {
        Self {
            label: label.to_string(),
            population_size,
            partial_update,
            de_f: default_de_f(),
            eta_m: default_eta_m(),
            p_m: default_p_m(),
            nr: default_nr(),
            delta_p: default_delta_p(),
            neighborhood_size: None,
            archive_policy: None,
            checkpoint_stride: 1,
            weight_seed: 0,
        }
    }

    fn materialize(&mut self) {
        let n = self.population_size;
        self.neighborhood_size.get_or_insert(default_neighborhood(n));
        self.archive_policy.get_or_insert(EvalArchivePolicy::final_population(n));
    }

    pub fn policy(&self) -> EvalArchivePolicy {
        self.archive_policy
            .unwrap_or_else(|| EvalArchivePolicy::final_population(self.population_size))
    }

    /// Full engine configuration for a problem with `objectives` objectives.
    pub fn config(&self, objectives: usize, budget: usize, checkpoint_evals: &[usize]) -> AlgorithmConfig {
        let mut c = AlgorithmConfig::new(self.population_size, self.partial_update, objectives);
        c.de_f = self.de_f;
        c.eta_m = self.eta_m;
        c.p_m = self.p_m;
        c.nr = self.nr;
        c.delta_p = self.delta_p;
        c.neighborhood_size = self
            .neighborhood_size
            .unwrap_or_else(|| default_neighborhood(self.population_size));
        c.budget = budget;
        c.archive_policy = self.policy();
        c.checkpoint_stride = self.checkpoint_stride;
        c.checkpoint_evals = checkpoint_evals.to_vec();
        c.weight_seed = self.weight_seed;
        c
    }
}

/// How per-run indicator values enter the rank-sum samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// One observation per problem: the mean over its runs.
    #[default]
    ProblemMean,
    /// One observation per (problem, run).
    Runs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub problems: Vec<String>,
    pub variants: Vec<VariantSpec>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// Budgets of the statistics battery; defaults to 5000, 15000 and the
    /// full budget. Runs also snapshot their population at these counts.
    #[serde(default)]
    pub stats_evals: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub pooling: Pooling,
    /// Per-axis cap on EAF grid breaks.
    #[serde(default = "default_eaf_cap")]
    pub eaf_grid_cap: usize,
    /// Output root; never written to the stored copy.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
}

/// Problem subsets of the reference suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    Dtlz,
    Uf,
    All,
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dtlz" => Ok(Subset::Dtlz),
            "uf" => Ok(Subset::Uf),
            "all" => Ok(Subset::All),
            other => Err(Error::config(format!("unknown subset `{other}` (dtlz, uf or all)"))),
        }
    }
}

impl ExperimentManifest {
    /// The three reference variants on the chosen problems: `ps` (N = 500,
    /// n = 50), `big` (N = 500, n = 498) and `small` (N = 50, n = 48, last
    /// ten populations as evaluation set).
    pub fn reference(subset: Subset) -> Self {
        let problems = registry_keys()
            .into_iter()
            .filter(|k| match subset {
                Subset::Dtlz => k.starts_with("dtlz"),
                Subset::Uf => k.starts_with("uf"),
                Subset::All => true,
            })
            .collect();
        let mut ps = VariantSpec::new("ps", 500, 50);
        ps.checkpoint_stride = 20;
        let mut big = VariantSpec::new("big", 500, 498);
        big.checkpoint_stride = 2;
        let mut small = VariantSpec::new("small", 50, 48);
        small.archive_policy = Some(EvalArchivePolicy::last_k_union(10, 50));
        let mut m = Self {
            problems,
            variants: vec![ps, big, small],
            runs: default_runs(),
            base_seed: 0,
            budget: default_budget(),
            dimension: DEFAULT_DIMENSION,
            stats_evals: Vec::new(),
            alpha: default_alpha(),
            pooling: Pooling::ProblemMean,
            eaf_grid_cap: 300,
            output: None,
        };
        m.materialize();
        m
    }

    /// Parses, fills in defaults and validates a manifest file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let mut m: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_path_buf(),
            source,
        })?;
        m.materialize();
        m.validate()?;
        Ok(m)
    }

    /// Writes explicit values for every defaulted field.
    pub fn materialize(&mut self) {
        for v in &mut self.variants {
            v.materialize();
        }
        if self.stats_evals.is_empty() {
            self.stats_evals = vec![5_000, 15_000, self.budget];
        }
        self.stats_evals.retain(|&e| e <= self.budget);
        self.stats_evals.sort_unstable();
        self.stats_evals.dedup();
    }

    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() || self.variants.is_empty() {
            return Err(Error::config("manifest needs at least one problem and one variant"));
        }
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.eaf_grid_cap < 2 {
            return Err(Error::config("eaf_grid_cap must be at least 2"));
        }
        let mut seen = Vec::new();
        for key in &self.problems {
            if seen.contains(&key) {
                return Err(Error::config(format!("problem `{key}` listed twice")));
            }
            seen.push(key);
            let p = problem_from_key(key, self.dimension)?;
            if p.key() != *key {
                return Err(Error::config(format!("problem key `{key}` is not canonical, use `{}`", p.key())));
            }
            for v in &self.variants {
                v.config(p.objectives(), self.budget, &self.stats_evals)
                    .validate()
                    .map_err(|e| Error::config(format!("variant `{}` on {key}: {e}", v.label)))?;
            }
        }
        let mut labels = Vec::new();
        for v in &self.variants {
            let ok = !v.label.is_empty()
                && v.label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                return Err(Error::config(format!(
                    "variant label `{}` must be non-empty and use only letters, digits, `_` or `-`",
                    v.label
                )));
            }
            if labels.contains(&&v.label) {
                return Err(Error::config(format!("variant label `{}` is not unique", v.label)));
            }
            labels.push(&v.label);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }

    pub fn seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }
}

/// Paths of one results directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultsStore {
    pub root: PathBuf,
}

impl ResultsStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn run_dir(&self, problem: &str, variant: &str, run: usize) -> PathBuf {
        self.root
            .join("runs")
            .join(problem)
            .join(variant)
            .join(format!("run_{run}"))
    }

    pub fn metrics_dir(&self) -> PathBuf {
        self.root.join("metrics")
    }

    pub fn eaf_dir(&self, problem: &str) -> PathBuf {
        self.root.join("eaf").join(problem)
    }

    pub fn stats_dir(&self) -> PathBuf {
        self.root.join("stats")
    }

    pub fn plots_dir(&self) -> PathBuf {
        self.root.join("plots")
    }

    pub fn manifest(&self) -> Result<ExperimentManifest> {
        let path = self.manifest_path();
        if !path.exists() {
            return Err(Error::analysis(format!("{} is not a results store (no manifest.json)", self.root.display())));
        }
        ExperimentManifest::load(&path)
    }
}

/// Writes `contents` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// run files

#[derive(Debug, Serialize, Deserialize)]
struct RunHeader {
    problem: String,
    variant: String,
    run: usize,
    seed: u64,
    config: AlgorithmConfig,
}

/// Checkpoint table: one line per (checkpoint, slot).
pub fn checkpoints_to_csv(checkpoints: &[Checkpoint]) -> String {
    let m = checkpoints.first().map_or(0, |c| c.m);
    let mut out = String::from("iteration,evals,slot");
    for k in 1..=m {
        let _ = write!(out, ",f{k}");
    }
    out.push('\n');
    for cp in checkpoints {
        for (slot, p) in cp.points().enumerate() {
            let _ = write!(out, "{},{},{slot}", cp.iteration, cp.evals);
            for v in p {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

fn parse_f64(s: &str, path: &Path) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::analysis(format!("{}: bad number `{s}`", path.display())))
}

fn parse_usize(s: &str, path: &Path) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::analysis(format!("{}: bad integer `{s}`", path.display())))
}

pub fn checkpoints_from_csv(text: &str, m: usize, path: &Path) -> Result<Vec<Checkpoint>> {
    let mut out: Vec<Checkpoint> = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 + m {
            return Err(Error::analysis(format!("{}: expected {} columns, got `{line}`", path.display(), 3 + m)));
        }
        let iteration = parse_usize(cols[0], path)?;
        let evals = parse_usize(cols[1], path)?;
        let same = matches!(out.last(), Some(c) if c.iteration == iteration && c.evals == evals);
        if !same {
            out.push(Checkpoint {
                iteration,
                evals,
                m,
                objectives: Vec::new(),
            });
        }
        let cp = out.last_mut().expect("pushed above");
        for c in &cols[3..] {
            cp.objectives.push(parse_f64(c, path)?);
        }
    }
    Ok(out)
}

fn final_population_to_csv(pop: &[(Vec<f64>, Vec<f64>)]) -> String {
    let (d, m) = pop.first().map_or((0, 0), |(x, f)| (x.len(), f.len()));
    let mut out = String::from("slot");
    for k in 1..=d {
        let _ = write!(out, ",x{k}");
    }
    for k in 1..=m {
        let _ = write!(out, ",f{k}");
    }
    out.push('\n');
    for (slot, (x, f)) in pop.iter().enumerate() {
        let _ = write!(out, "{slot}");
        for v in x.iter().chain(f) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn final_population_from_csv(text: &str, m: usize, path: &Path) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|line| {
            let vals = line
                .split(',')
                .skip(1)
                .map(|c| parse_f64(c, path))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() < m {
                return Err(Error::analysis(format!("{}: short row `{line}`", path.display())));
            }
            let (x, f) = vals.split_at(vals.len() - m);
            Ok((x.to_vec(), f.to_vec()))
        })
        .collect()
}

const RUN_FILES: [&str; 3] = ["run.json", "checkpoints.csv", "final_population.csv"];

fn write_run(store: &ResultsStore, variant: &str, run: usize, result: &RunResult) -> Result<()> {
    let dir = store.run_dir(&result.problem, variant, run);
    let header = RunHeader {
        problem: result.problem.clone(),
        variant: variant.to_string(),
        run,
        seed: result.seed,
        config: result.config.clone(),
    };
    let mut json = serde_json::to_string_pretty(&header).expect("run header serialises");
    json.push('\n');
    write_atomic(&dir.join("run.json"), &json)?;
    write_atomic(&dir.join("checkpoints.csv"), &checkpoints_to_csv(&result.checkpoints))?;
    write_atomic(&dir.join("final_population.csv"), &final_population_to_csv(&result.final_population))
}

/// Reads one persisted run back.
pub fn load_run(store: &ResultsStore, problem: &str, variant: &str, run: usize) -> Result<RunResult> {
    let dir = store.run_dir(problem, variant, run);
    let header_path = dir.join("run.json");
    let header: RunHeader = serde_json::from_str(&read(&header_path)?).map_err(|source| Error::Json {
        path: header_path.clone(),
        source,
    })?;
    let m = header.config.objectives;
    let cp_path = dir.join("checkpoints.csv");
    let checkpoints = checkpoints_from_csv(&read(&cp_path)?, m, &cp_path)?;
    let fp_path = dir.join("final_population.csv");
    let final_population = final_population_from_csv(&read(&fp_path)?, m, &fp_path)?;
    Ok(RunResult::from_parts(
        header.problem,
        header.seed,
        header.config,
        checkpoints,
        final_population,
    ))
}

// ---------------------------------------------------------------------------
// execution

/// Runs every (problem, variant, run) of the manifest, then computes
/// metrics and the statistics battery. Problems are processed one at a
/// time; runs of a problem are spread over `workers` threads.
pub fn execute(manifest: &ExperimentManifest, root: &Path, workers: Option<usize>) -> Result<ResultsStore> {
    let mut manifest = manifest.clone();
    manifest.materialize();
    manifest.validate()?;
    let store = ResultsStore::new(root);
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    for sub in ["runs", "metrics", "eaf", "stats", "plots"] {
        let dir = root.join(sub);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
    }
    write_atomic(&store.manifest_path(), &manifest.to_json())?;

    par::with_workers(workers, || -> Result<()> {
        for key in &manifest.problems {
            let problem = problem_from_key(key, manifest.dimension)?;
            let jobs: Vec<(usize, usize)> = (0..manifest.variants.len())
                .flat_map(|v| (0..manifest.runs).map(move |r| (v, r)))
                .collect();
            par::map(&jobs, |&(v, r)| {
                let spec = &manifest.variants[v];
                let config = spec.config(problem.objectives(), manifest.budget, &manifest.stats_evals);
                let result = engine::run(&config, &problem, manifest.seed(r))?;
                write_run(&store, &spec.label, r, &result)
            })
            .into_iter()
            .collect::<Result<()>>()?;
        }
        Ok(())
    })?;

    recompute_metrics(&store, &MetricsOptions::default())?;
    match run_stats(&store, &manifest.stats_evals) {
        Ok(_) => {}
        Err(Error::Analysis(msg)) => {
            write_atomic(&store.stats_dir().join("unavailable.txt"), &format!("{msg}\n"))?;
        }
        Err(e) => return Err(e),
    }
    Ok(store)
}

// ---------------------------------------------------------------------------
// metrics

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsOptions {
    /// Evaluation-set policy to use instead of the stored one, per variant
    /// label.
    pub archive_overrides: Vec<(String, EvalArchivePolicy)>,
}

impl MetricsOptions {
    /// Parses `label=final` or `label=last_k:K` against the variants of
    /// `manifest`.
    pub fn parse_override(spec: &str, manifest: &ExperimentManifest) -> Result<(String, EvalArchivePolicy)> {
        let bad = || Error::config(format!("archive override `{spec}` must look like label=final or label=last_k:K"));
        let (label, policy) = spec.split_once('=').ok_or_else(bad)?;
        let variant = manifest
            .variants
            .iter()
            .find(|v| v.label == label)
            .ok_or_else(|| Error::config(format!("archive override names unknown variant `{label}`")))?;
        let n = variant.population_size;
        let policy = match policy.split_once(':') {
            None if policy == "final" => EvalArchivePolicy::final_population(n),
            Some(("last_k", k)) => EvalArchivePolicy::last_k_union(k.parse().map_err(|_| bad())?, n),
            _ => return Err(bad()),
        };
        Ok((label.to_string(), policy))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub problem: String,
    pub variant: String,
    pub run: usize,
    pub seed: u64,
    pub hv: f64,
    pub nndom_unique: f64,
    pub nndom: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EafSummary {
    pub problem: String,
    pub a: String,
    pub b: String,
    /// Share of the contested grid area where `a` attains more often.
    pub a_better_area: f64,
    /// Share of the contested grid area where `b` attains more often.
    pub b_better_area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTables {
    pub problems: Vec<String>,
    pub variants: Vec<String>,
    pub runs: Vec<RunMetrics>,
    pub frames: Vec<(String, NormalizationFrame)>,
    pub eaf: Vec<EafSummary>,
}

impl MetricsTables {
    /// Values of one (problem, variant) cell in run order.
    pub fn cell(&self, problem: &str, variant: &str) -> Vec<&RunMetrics> {
        self.runs
            .iter()
            .filter(|r| r.problem == problem && r.variant == variant)
            .collect()
    }

    pub fn mean_hv(&self, problem: &str, variant: &str) -> Option<f64> {
        mean(&self.cell(problem, variant).iter().map(|r| r.hv).collect::<Vec<_>>())
    }

    pub fn mean_nndom_unique(&self, problem: &str, variant: &str) -> Option<f64> {
        mean(&self.cell(problem, variant).iter().map(|r| r.nndom_unique).collect::<Vec<_>>())
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn sd(v: &[f64]) -> f64 {
    match (v.len(), mean(v)) {
        (n, Some(m)) if n > 1 => (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt(),
        _ => 0.0,
    }
}

fn subdirs(dir: &Path) -> Vec<String> {
    let mut out: Vec<String> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    out.sort();
    out
}

/// Problems and variants of the manifest that have a directory in the
/// store, in manifest order; errors list any missing run file.
fn present(store: &ResultsStore, manifest: &ExperimentManifest) -> Result<(Vec<String>, Vec<VariantSpec>)> {
    let runs_root = store.root.join("runs");
    let on_disk = subdirs(&runs_root);
    let problems: Vec<String> = manifest
        .problems
        .iter()
        .filter(|p| on_disk.contains(p))
        .cloned()
        .collect();
    let variants: Vec<VariantSpec> = manifest
        .variants
        .iter()
        .filter(|v| problems.iter().any(|p| runs_root.join(p).join(&v.label).is_dir()))
        .cloned()
        .collect();
    if problems.is_empty() || variants.is_empty() {
        return Err(Error::analysis(format!("no runs found under {}", runs_root.display())));
    }
    let mut missing = Vec::new();
    for p in &problems {
        for v in &variants {
            for r in 0..manifest.runs {
                let dir = store.run_dir(p, &v.label, r);
                for f in RUN_FILES {
                    if !dir.join(f).is_file() {
                        missing.push(format!("runs/{p}/{}/run_{r}/{f}", v.label));
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::analysis(format!("missing run files: {}", missing.join(", "))));
    }
    Ok((problems, variants))
}

struct ProblemMetrics {
    runs: Vec<RunMetrics>,
    trajectories: Vec<(String, usize, TrajectorySeries)>,
    frame: NormalizationFrame,
    eaf: Vec<EafSummary>,
}

/// Regenerates every metric table from the persisted runs without
/// evaluating any candidate solution.
pub fn recompute_metrics(store: &ResultsStore, options: &MetricsOptions) -> Result<MetricsTables> {
    let manifest = store.manifest()?;
    let (problems, variants) = present(store, &manifest)?;
    let mut policies = Vec::new();
    for v in &variants {
        let policy = options
            .archive_overrides
            .iter()
            .find(|(label, _)| *label == v.label)
            .map_or_else(|| v.policy(), |(_, p)| *p);
        policy
            .validate(v.population_size)
            .map_err(|e| Error::config(format!("archive policy for `{}`: {e}", v.label)))?;
        policies.push(policy);
    }
    for (label, _) in &options.archive_overrides {
        if !variants.iter().any(|v| &v.label == label) {
            return Err(Error::config(format!("archive override names unknown variant `{label}`")));
        }
    }

    let mut per_problem = Vec::new();
    for p in &problems {
        per_problem.push(problem_metrics(store, &manifest, p, &variants, &policies)?);
    }

    let labels: Vec<String> = variants.iter().map(|v| v.label.clone()).collect();
    let tables = MetricsTables {
        problems: problems.clone(),
        variants: labels.clone(),
        runs: per_problem.iter().flat_map(|m| m.runs.clone()).collect(),
        frames: problems
            .iter()
            .zip(&per_problem)
            .map(|(p, m)| (p.clone(), m.frame.clone()))
            .collect(),
        eaf: per_problem.iter().flat_map(|m| m.eaf.clone()).collect(),
    };

    let dir = store.metrics_dir();
    write_atomic(&dir.join("summary.csv"), &summary_csv(&tables))?;
    write_atomic(&dir.join("runs.csv"), &runs_csv(&tables.runs))?;
    write_atomic(&dir.join("frames.csv"), &frames_csv(&tables.frames))?;
    write_atomic(&dir.join("eaf_summary.csv"), &eaf_summary_csv(&tables.eaf))?;
    let mut anytime = String::from("problem,variant,run,evals,hv\n");
    for (p, m) in problems.iter().zip(&per_problem) {
        for (variant, run, series) in &m.trajectories {
            for (e, hv) in &series.points {
                let _ = writeln!(anytime, "{p},{variant},{run},{e},{hv}");
            }
        }
    }
    write_atomic(&dir.join("anytime.csv"), &anytime)?;
    Ok(tables)
}

fn problem_metrics(
    store: &ResultsStore,
    manifest: &ExperimentManifest,
    problem: &str,
    variants: &[VariantSpec],
    policies: &[EvalArchivePolicy],
) -> Result<ProblemMetrics> {
    let jobs: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..manifest.runs).map(move |r| (v, r)))
        .collect();
    let loaded = par::map(&jobs, |&(v, r)| {
        let result = load_run(store, problem, &variants[v].label, r)?;
        let set = build_evaluation_set(&result, &policies[v])?;
        Ok((result, set.points))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let frame = NormalizationFrame::from_sets(loaded.iter().map(|(_, s)| s.as_slice()))?;
    let computed = par::map(&jobs.iter().zip(&loaded).collect::<Vec<_>>(), |((v, r), (result, set))| {
        let hv = normalized_hypervolume(set, &frame)?;
        let trajectory = anytime_trajectory(result, &policies[*v], &frame)?;
        Ok((
            RunMetrics {
                problem: problem.to_string(),
                variant: variants[*v].label.clone(),
                run: *r,
                seed: result.seed,
                hv,
                nndom_unique: unique_nondominated_proportion(set)?,
                nndom: nondominated_proportion(set)?,
            },
            trajectory,
        ))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut eaf = Vec::new();
    if frame.objectives() == 2 {
        let scaled: Vec<Vec<Vec<f64>>> = loaded.iter().map(|(_, s)| normalize_objectives(s, &frame)).collect();
        let runs_of = |v: usize| -> Vec<Vec<Vec<f64>>> { scaled[v * manifest.runs..(v + 1) * manifest.runs].to_vec() };
        for j in 0..variants.len() {
            for i in 0..j {
                let (a, b) = (runs_of(i), runs_of(j));
                let both: Vec<Vec<Vec<f64>>> = a.iter().chain(&b).cloned().collect();
                let (xb, yb) = eaf_breaks(&both, manifest.eaf_grid_cap)?;
                let d = eaf_diff(&a, &b, &xb, &yb)?;
                let reversed = eaf_diff(&b, &a, &xb, &yb)?;
                let (la, lb) = (&variants[i].label, &variants[j].label);
                let dir = store.eaf_dir(problem);
                write_atomic(&dir.join(format!("{la}__vs__{lb}.csv")), &d.diff.to_csv())?;
                write_atomic(&dir.join(format!("{la}__vs__{lb}_surfaces.csv")), &d.surfaces_csv())?;
                eaf.push(EafSummary {
                    problem: problem.to_string(),
                    a: la.clone(),
                    b: lb.clone(),
                    a_better_area: d.positive_area_fraction(),
                    b_better_area: reversed.positive_area_fraction(),
                });
            }
        }
    }

    let (runs, trajectories) = computed
        .into_iter()
        .map(|(m, t)| {
            let key = (m.variant.clone(), m.run, t);
            (m, key)
        })
        .unzip();
    Ok(ProblemMetrics {
        runs,
        trajectories,
        frame,
        eaf,
    })
}

fn summary_csv(t: &MetricsTables) -> String {
    let mut out = String::from("problem");
    for v in &t.variants {
        let _ = write!(out, ",{v}_hv_mean,{v}_hv_sd,{v}_nndom_mean,{v}_nndom_sd,{v}_nndom_raw_mean");
    }
    out.push('\n');
    for p in &t.problems {
        out.push_str(p);
        for v in &t.variants {
            let cell = t.cell(p, v);
            let hv: Vec<f64> = cell.iter().map(|r| r.hv).collect();
            let nd: Vec<f64> = cell.iter().map(|r| r.nndom_unique).collect();
            let raw: Vec<f64> = cell.iter().map(|r| r.nndom).collect();
            let _ = write!(
                out,
                ",{},{},{},{},{}",
                mean(&hv).unwrap_or(f64::NAN),
                sd(&hv),
                mean(&nd).unwrap_or(f64::NAN),
                sd(&nd),
                mean(&raw).unwrap_or(f64::NAN)
            );
        }
        out.push('\n');
    }
    out
}

fn runs_csv(runs: &[RunMetrics]) -> String {
    let mut out = String::from("problem,variant,run,seed,hv,nndom_unique,nndom\n");
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.problem, r.variant, r.run, r.seed, r.hv, r.nndom_unique, r.nndom
        );
    }
    out
}

fn frames_csv(frames: &[(String, NormalizationFrame)]) -> String {
    let mut out = String::from("problem,objective,lo,hi\n");
    for (p, f) in frames {
        for k in 0..f.objectives() {
            let _ = writeln!(out, "{p},{},{},{}", k + 1, f.lo[k], f.hi[k]);
        }
    }
    out
}

fn eaf_summary_csv(rows: &[EafSummary]) -> String {
    let mut out = String::from("problem,a,b,a_better_area,b_better_area\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.problem, r.a, r.b, r.a_better_area, r.b_better_area);
    }
    out
}

// ---------------------------------------------------------------------------
// statistics

/// Rows of `metrics/anytime.csv`, grouped by (problem, variant, run).
type AnytimeTable = BTreeMap<(String, String, usize), TrajectorySeries>;

fn load_anytime(store: &ResultsStore) -> Result<AnytimeTable> {
    let path = store.metrics_dir().join("anytime.csv");
    if !path.is_file() {
        return Err(Error::analysis(format!("{} is missing; run the metrics step first", path.display())));
    }
    let text = read(&path)?;
    let mut table = AnytimeTable::new();
    for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::analysis(format!("{}: malformed row `{line}`", path.display())));
        }
        let key = (cols[0].to_string(), cols[1].to_string(), parse_usize(cols[2], &path)?);
        table
            .entry(key)
            .or_insert_with(|| TrajectorySeries { points: Vec::new() })
            .points
            .push((parse_usize(cols[3], &path)?, parse_f64(cols[4], &path)?));
    }
    Ok(table)
}

/// Output of the statistics battery.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsOutput {
    pub reports: Vec<TestReport>,
    /// `(row, column, evals, interval)` for every pair with enough data.
    pub intervals: Vec<(String, String, usize, MedianInterval)>,
}

/// Anytime HV samples per variant at `evals`, pooled as the manifest says.
pub fn pooled_samples(
    store: &ResultsStore,
    evals: usize,
) -> Result<Vec<(String, Vec<f64>)>> {
    let manifest = store.manifest()?;
    let (problems, variants) = present(store, &manifest)?;
    let table = load_anytime(store)?;
    variants
        .iter()
        .map(|v| {
            let mut sample = Vec::new();
            for p in &problems {
                let mut values = Vec::new();
                for r in 0..manifest.runs {
                    let series = table
                        .get(&(p.clone(), v.label.clone(), r))
                        .ok_or_else(|| Error::analysis(format!("no anytime data for {p}/{}/run_{r}", v.label)))?;
                    values.push(series.at(evals).ok_or_else(|| {
                        Error::analysis(format!("{p}/{}/run_{r} has no checkpoint by {evals} evaluations", v.label))
                    })?);
                }
                match manifest.pooling {
                    Pooling::ProblemMean => sample.push(mean(&values).expect("runs >= 1")),
                    Pooling::Runs => sample.extend(values),
                }
            }
            Ok((v.label.clone(), sample))
        })
        .collect()
}

/// Rank-sum tests with Hommel adjustment (one family per budget) and
/// paired median intervals, written to `stats/`.
pub fn run_stats(store: &ResultsStore, at: &[usize]) -> Result<StatsOutput> {
    let manifest = store.manifest()?;
    if at.is_empty() {
        return Err(Error::config("no budgets given for the statistics battery"));
    }
    let mut reports = Vec::new();
    let mut intervals = Vec::new();
    for &evals in at {
        let samples = pooled_samples(store, evals)?;
        reports.extend(compare_all(&samples, evals, manifest.alpha)?);
        for j in 0..samples.len() {
            for i in 0..j {
                let diffs: Vec<f64> = samples[j].1.iter().zip(&samples[i].1).map(|(a, b)| a - b).collect();
                if diffs.len() >= 6 {
                    let ci = paired_median_ci(&diffs, manifest.alpha)?;
                    intervals.push((samples[j].0.clone(), samples[i].0.clone(), evals, ci));
                }
            }
        }
    }
    let dir = store.stats_dir();
    let stale = dir.join("unavailable.txt");
    if stale.exists() {
        fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
    }
    write_atomic(&dir.join("comparisons.csv"), &reports_to_csv(&reports))?;
    let mut csv = String::from("row,column,evals,low,high,estimate,excludes_zero\n");
    for (row, col, evals, ci) in &intervals {
        let _ = writeln!(
            csv,
            "{row},{col},{evals},{},{},{},{}",
            ci.low,
            ci.high,
            ci.estimate,
            ci.excludes_zero()
        );
    }
    write_atomic(&dir.join("intervals.csv"), &csv)?;
    Ok(StatsOutput { reports, intervals })
}

// ---------------------------------------------------------------------------
// plots

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Anytime,
    EafDiff,
    Ci,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anytime" => Ok(PlotKind::Anytime),
            "eaf_diff" => Ok(PlotKind::EafDiff),
            "ci" => Ok(PlotKind::Ci),
            other => Err(Error::config(format!("unknown plot kind `{other}` (anytime, eaf_diff or ci)"))),
        }
    }
}

/// Renders plots of one kind from the stored tables; returns the files
/// written.
pub fn render_plots(store: &ResultsStore, kind: PlotKind) -> Result<Vec<PathBuf>> {
    match kind {
        PlotKind::Anytime => render_anytime(store),
        PlotKind::EafDiff => render_eaf(store),
        PlotKind::Ci => render_ci(store),
    }
}

fn render_anytime(store: &ResultsStore) -> Result<Vec<PathBuf>> {
    let manifest = store.manifest()?;
    let (problems, variants) = present(store, &manifest)?;
    let table = load_anytime(store)?;
    let mut written = Vec::new();
    for p in &problems {
        let mut bands = Vec::new();
        for v in &variants {
            let runs: Vec<&TrajectorySeries> = (0..manifest.runs)
                .filter_map(|r| table.get(&(p.clone(), v.label.clone(), r)))
                .collect();
            let mut evals: Vec<usize> = runs.iter().flat_map(|s| s.points.iter().map(|&(e, _)| e)).collect();
            evals.sort_unstable();
            evals.dedup();
            let points = evals
                .into_iter()
                .filter_map(|e| {
                    let vals: Vec<f64> = runs.iter().filter_map(|s| s.at(e)).collect();
                    mean(&vals).map(|m| (e as f64, m, sd(&vals)))
                })
                .collect();
            bands.push(AnytimeBand {
                label: v.label.clone(),
                points,
            });
        }
        let path = store.plots_dir().join(format!("anytime_{p}.svg"));
        write_atomic(&path, &anytime_svg(p, manifest.budget, &bands))?;
        written.push(path);
    }
    Ok(written)
}

fn read_grid(path: &Path) -> Result<crate::metrics::EafGrid> {
    let text = read(path)?;
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut levels = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::analysis(format!("{}: malformed row `{line}`", path.display())));
        }
        let (x, y) = (parse_f64(cols[0], path)?, parse_f64(cols[1], path)?);
        if xs.last() != Some(&x) {
            xs.push(x);
        }
        if xs.len() == 1 {
            ys.push(y);
        }
        levels.push(parse_f64(cols[2], path)?);
    }
    if levels.len() != xs.len() * ys.len() {
        return Err(Error::analysis(format!("{}: grid is not rectangular", path.display())));
    }
    Ok(crate::metrics::EafGrid {
        x_breaks: xs,
        y_breaks: ys,
        levels,
    })
}

type Surface = Vec<(f64, f64)>;

fn read_surfaces(path: &Path) -> Result<(Surface, Surface)> {
    let text = read(path)?;
    let (mut best, mut worst) = (Vec::new(), Vec::new());
    for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::analysis(format!("{}: malformed row `{line}`", path.display())));
        }
        let pt = (parse_f64(cols[1], path)?, parse_f64(cols[2], path)?);
        match cols[0] {
            "grand_best" => best.push(pt),
            "grand_worst" => worst.push(pt),
            other => return Err(Error::analysis(format!("{}: unknown surface `{other}`", path.display()))),
        }
    }
    Ok((best, worst))
}

fn render_eaf(store: &ResultsStore) -> Result<Vec<PathBuf>> {
    let manifest = store.manifest()?;
    let (problems, variants) = present(store, &manifest)?;
    let mut written = Vec::new();
    for p in &problems {
        let dir = store.eaf_dir(p);
        for j in 0..variants.len() {
            for i in 0..j {
                let (a, b) = (&variants[i].label, &variants[j].label);
                let grid_path = dir.join(format!("{a}__vs__{b}.csv"));
                if !grid_path.is_file() {
                    if problem_from_key(p, manifest.dimension)?.objectives() == 2 {
                        return Err(Error::analysis(format!("{} is missing", grid_path.display())));
                    }
                    continue;
                }
                let grid = read_grid(&grid_path)?;
                let (best, worst) = read_surfaces(&dir.join(format!("{a}__vs__{b}_surfaces.csv")))?;
                let path = store.plots_dir().join(format!("eaf_{p}_{a}__vs__{b}.svg"));
                write_atomic(&path, &eaf_diff_svg(&format!("{p}: {a} vs {b}"), a, b, &grid, &best, &worst))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn render_ci(store: &ResultsStore) -> Result<Vec<PathBuf>> {
    let path = store.stats_dir().join("intervals.csv");
    if !path.is_file() {
        return Err(Error::analysis(format!("{} is missing; run the stats step first", path.display())));
    }
    let text = read(&path)?;
    let mut by_evals: BTreeMap<usize, Vec<IntervalRow>> = BTreeMap::new();
    for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(Error::analysis(format!("{}: malformed row `{line}`", path.display())));
        }
        by_evals.entry(parse_usize(cols[2], &path)?).or_default().push(IntervalRow {
            label: format!("{} - {}", cols[0], cols[1]),
            low: parse_f64(cols[3], &path)?,
            high: parse_f64(cols[4], &path)?,
            estimate: parse_f64(cols[5], &path)?,
        });
    }
    let mut written = Vec::new();
    for (evals, rows) in by_evals {
        let out = store.plots_dir().join(format!("ci_{evals}.svg"));
        write_atomic(&out, &ci_svg(&format!("{evals} evaluations"), &rows))?;
        written.push(out);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_suite_shape() {
        let m = ExperimentManifest::reference(Subset::All);
        assert_eq!(m.problems.len(), 18);
        assert_eq!(m.stats_evals, vec![5_000, 15_000, 100_000]);
        let labels: Vec<&str> = m.variants.iter().map(|v| v.label.as_str()).collect();
        assert_eq!(labels, ["ps", "big", "small"]);
        assert_eq!(m.variants[2].policy(), EvalArchivePolicy::last_k_union(10, 50));
        assert_eq!(m.variants[0].neighborhood_size, Some(100));
        m.validate().unwrap();
        assert_eq!(ExperimentManifest::reference(Subset::Dtlz).problems.len(), 8);
        assert_eq!(ExperimentManifest::reference(Subset::Uf).problems.len(), 10);
    }

    #[test]
    fn defaults_are_materialized() {
        let json = r#"{"problems": ["dtlz2"], "variants": [{"label": "a", "population_size": 20, "partial_update": 5}]}"#;
        let m = ExperimentManifest::from_json(json, Path::new("m.json")).unwrap();
        assert_eq!(m.runs, 10);
        assert_eq!(m.budget, 100_000);
        assert_eq!(m.variants[0].neighborhood_size, Some(4));
        let stored = m.to_json();
        assert!(stored.contains("\"archive_policy\""));
        assert!(stored.contains("\"stats_evals\""));
        assert!(!stored.contains("output"));
        assert_eq!(ExperimentManifest::from_json(&stored, Path::new("m.json")).unwrap(), m);
    }

    #[test]
    fn manifest_errors_are_config_errors() {
        let dup = r#"{"problems": ["dtlz2"], "variants": [
            {"label": "a", "population_size": 20, "partial_update": 5},
            {"label": "a", "population_size": 20, "partial_update": 5}]}"#;
        assert!(matches!(ExperimentManifest::from_json(dup, Path::new("m")), Err(Error::Config(_))));
        let bad_key = r#"{"problems": ["zdt1"], "variants": [{"label": "a", "population_size": 20, "partial_update": 5}]}"#;
        assert!(matches!(ExperimentManifest::from_json(bad_key, Path::new("m")), Err(Error::Config(_))));
        let unknown = r#"{"problems": ["dtlz1"], "variants": [], "colour": 1}"#;
        let err = ExperimentManifest::from_json(unknown, Path::new("m")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn checkpoint_csv_round_trip() {
        let cps = vec![
            Checkpoint { iteration: 0, evals: 3, m: 2, objectives: vec![0.1, 0.2, 1.0 / 3.0, 4.0, 5e-17, 6.0] },
            Checkpoint { iteration: 1, evals: 5, m: 2, objectives: vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0] },
        ];
        let csv = checkpoints_to_csv(&cps);
        assert_eq!(checkpoints_from_csv(&csv, 2, Path::new("c")).unwrap(), cps);
    }

    #[test]
    fn plot_kinds() {
        assert_eq!("eaf_diff".parse::<PlotKind>().unwrap(), PlotKind::EafDiff);
        assert!("pie".parse::<PlotKind>().is_err());
    }
}

//! Size-matched evaluation sets built from stored runs.
//!
//! Two policies exist: the final population, or the union of the
//! population snapshots of the last `k` checkpoints. A population of 50
//! recorded every iteration with `k = 10` yields the same 500-point budget
//! as a final population of 500.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::{Checkpoint, RunResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchiveKind {
    FinalPopulation,
    LastKUnion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalArchivePolicy {
    pub kind: ArchiveKind,
    /// Number of checkpoints combined; always 1 for the final population.
    pub k: usize,
    pub capacity: usize,
}

impl EvalArchivePolicy {
    pub fn final_population(population: usize) -> Self {
        Self {
            kind: ArchiveKind::FinalPopulation,
            k: 1,
            capacity: population,
        }
    }

    pub fn last_k_union(k: usize, population: usize) -> Self {
        Self {
            kind: ArchiveKind::LastKUnion,
            k,
            capacity: k * population,
        }
    }

    /// Checks the policy against the population size it will be applied to.
    pub fn validate(&self, population: usize) -> Result<()> {
        if self.capacity == 0 || self.k == 0 {
            return Err(Error::config("archive capacity and k must be positive"));
        }
        match self.kind {
            ArchiveKind::FinalPopulation if self.k != 1 => {
                Err(Error::config("final_population archive requires k = 1"))
            }
            _ if self.k * population != self.capacity => Err(Error::config(format!(
                "archive capacity {} does not equal k * N = {} * {}",
                self.capacity, self.k, population
            ))),
            _ => Ok(()),
        }
    }

    /// Short textual form, `final` or `last_k:K`.
    pub fn label(&self) -> String {
        match self.kind {
            ArchiveKind::FinalPopulation => "final".to_string(),
            ArchiveKind::LastKUnion => format!("last_k:{}", self.k),
        }
    }
}

/// A point of an evaluation set and where it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub iteration: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    pub points: Vec<Vec<f64>>,
    pub provenance: Vec<Provenance>,
}

impl EvaluationSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let m = self.points.first().map_or(0, Vec::len);
        let mut out = String::new();
        for k in 1..=m {
            let _ = write!(out, "f{k},");
        }
        out.push_str("iteration,slot\n");
        for (p, prov) in self.points.iter().zip(&self.provenance) {
            for v in p {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{},{}", prov.iteration, prov.slot);
        }
        out
    }
}

fn union_of(checkpoints: &[Checkpoint]) -> EvaluationSet {
    let mut points = Vec::new();
    let mut provenance = Vec::new();
    for cp in checkpoints {
        for slot in 0..cp.population() {
            points.push(cp.point(slot).to_vec());
            provenance.push(Provenance {
                iteration: cp.iteration,
                slot,
            });
        }
    }
    EvaluationSet { points, provenance }
}

fn apply(checkpoints: &[Checkpoint], policy: &EvalArchivePolicy) -> EvaluationSet {
    let k = match policy.kind {
        ArchiveKind::FinalPopulation => 1,
        ArchiveKind::LastKUnion => policy.k,
    };
    let start = checkpoints.len().saturating_sub(k);
    let mut set = union_of(&checkpoints[start..]);
    set.points.truncate(policy.capacity);
    set.provenance.truncate(policy.capacity);
    set
}

/// The comparison set of a finished run.
pub fn build_evaluation_set(result: &RunResult, policy: &EvalArchivePolicy) -> Result<EvaluationSet> {
    if result.checkpoints.is_empty() {
        return Err(Error::analysis("run has no checkpoints"));
    }
    if policy.kind == ArchiveKind::LastKUnion && result.checkpoints.len() < policy.k {
        return Err(Error::analysis(format!(
            "last_k_union needs {} checkpoints, run has {}",
            policy.k,
            result.checkpoints.len()
        )));
    }
    Ok(apply(&result.checkpoints, policy))
}

/// The comparison set as it stood at `upto_evals`: the policy applied to
/// the checkpoints whose evaluation count does not exceed it.
pub fn build_anytime_set(
    result: &RunResult,
    policy: &EvalArchivePolicy,
    upto_evals: usize,
) -> Result<EvaluationSet> {
    let end = result.checkpoints.partition_point(|cp| cp.evals <= upto_evals);
    if end == 0 {
        return Err(Error::analysis(format!(
            "no checkpoint at or before {upto_evals} evaluations"
        )));
    }
    Ok(apply(&result.checkpoints[..end], policy))
}

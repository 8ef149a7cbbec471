//! Benchmark problems: DTLZ1-4 and their inverted forms (two objectives) and
//! the CEC-2009 unconstrained UF1-UF10 set.
//!
//! All problems are minimised and evaluated without any scaling. Evaluation
//! through [`Problem::evaluate`] is pure; budget accounting lives in
//! [`Evaluator`], which the optimizer owns.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_DIMENSION: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Dtlz,
    DtlzInverted,
    Uf,
}

/// Validated description of one benchmark instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    family: Family,
    id: u8,
    m: usize,
    dim: usize,
    bounds: Vec<(f64, f64)>,
}

/// Builds a problem descriptor, rejecting combinations that do not exist.
pub fn make_problem(family: Family, id: u8, m: usize, dim: usize) -> Result<Problem> {
    let valid = match family {
        Family::Dtlz | Family::DtlzInverted => (1..=4).contains(&id) && m == 2,
        Family::Uf => match id {
            1..=7 => m == 2,
            8..=10 => m == 3,
            _ => false,
        },
    };
    if !valid {
        return Err(Error::config(format!(
            "no {family:?} problem with id {id} and {m} objectives"
        )));
    }
    let min_dim = match family {
        Family::Uf if m == 3 => 5,
        Family::Uf => 3,
        _ => m,
    };
    if dim < min_dim {
        return Err(Error::config(format!(
            "{family:?}{id} needs at least {min_dim} variables, got {dim}"
        )));
    }
    let bounds = (0..dim)
        .map(|j| match family {
            Family::Dtlz | Family::DtlzInverted => (0.0, 1.0),
            Family::Uf => uf_bounds(id, j),
        })
        .collect();
    Ok(Problem {
        family,
        id,
        m,
        dim,
        bounds,
    })
}

fn uf_bounds(id: u8, j: usize) -> (f64, f64) {
    match id {
        3 => (0.0, 1.0),
        1 | 2 | 5 | 6 | 7 => {
            if j == 0 {
                (0.0, 1.0)
            } else {
                (-1.0, 1.0)
            }
        }
        4 => {
            if j == 0 {
                (0.0, 1.0)
            } else {
                (-2.0, 2.0)
            }
        }
        // UF8-UF10
        _ => {
            if j < 2 {
                (0.0, 1.0)
            } else {
                (-2.0, 2.0)
            }
        }
    }
}

impl Problem {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn objectives(&self) -> usize {
        self.m
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Registry key, e.g. `dtlz2`, `dtlz1_inv`, `uf8`.
    pub fn key(&self) -> String {
        match self.family {
            Family::Dtlz => format!("dtlz{}", self.id),
            Family::DtlzInverted => format!("dtlz{}_inv", self.id),
            Family::Uf => format!("uf{}", self.id),
        }
    }

    /// Raw objective vector of `x`. Pure; does not touch any budget.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Evaluation(format!(
                "{} expects {} variables, got {}",
                self.key(),
                self.dim,
                x.len()
            )));
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!(
                "{}: variable {j} is not finite ({})",
                self.key(),
                x[j]
            )));
        }
        let f = match self.family {
            Family::Dtlz => dtlz(self.id, x),
            Family::DtlzInverted => dtlz_inverted(self.id, x),
            Family::Uf => uf(self.id, x),
        };
        Ok(f)
    }

    /// `k` points of the analytic Pareto front, spread evenly in the front's
    /// angular (or linear) parameter. Only the DTLZ families are supported.
    pub fn true_front_sample(&self, k: usize) -> Result<Vec<Vec<f64>>> {
        if self.family == Family::Uf {
            return Err(Error::config(format!("{} has no analytic front sample", self.key())));
        }
        if k < 2 {
            return Err(Error::config("front sample needs at least two points"));
        }
        let front = (0..k)
            .map(|i| {
                let t = i as f64 / (k - 1) as f64;
                let base = if self.id == 1 {
                    vec![0.5 * t, 0.5 * (1.0 - t)]
                } else {
                    let theta = t * PI / 2.0;
                    // exact endpoints keep the sample on the axes
                    let (s, c) = match i {
                        0 => (0.0, 1.0),
                        _ if i == k - 1 => (1.0, 0.0),
                        _ => theta.sin_cos(),
                    };
                    vec![s, c]
                };
                match self.family {
                    Family::DtlzInverted => invert(self.id, &base, 0.0),
                    _ => base,
                }
            })
            .collect();
        Ok(front)
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl FromStr for Problem {
    type Err = Error;

    /// Parses registry keys at the default dimension.
    fn from_str(s: &str) -> Result<Self> {
        problem_from_key(s, DEFAULT_DIMENSION)
    }
}

/// Resolves a registry key such as `uf3` or `dtlz1_inv`.
pub fn problem_from_key(key: &str, dim: usize) -> Result<Problem> {
    let lower = key.trim().to_ascii_lowercase();
    let bad = || Error::config(format!("unknown problem key `{key}`"));
    if let Some(rest) = lower.strip_prefix("uf") {
        let id: u8 = rest.parse().map_err(|_| bad())?;
        let m = if id >= 8 { 3 } else { 2 };
        return make_problem(Family::Uf, id, m, dim).map_err(|_| bad());
    }
    if let Some(rest) = lower.strip_prefix("dtlz") {
        let (num, family) = match rest.strip_suffix("_inv") {
            Some(num) => (num, Family::DtlzInverted),
            None => (rest, Family::Dtlz),
        };
        let id: u8 = num.parse().map_err(|_| bad())?;
        return make_problem(family, id, 2, dim).map_err(|_| bad());
    }
    Err(bad())
}

/// Every in-scope benchmark key, DTLZ first, then inverted DTLZ, then UF.
pub fn registry_keys() -> Vec<String> {
    let mut keys: Vec<String> = (1..=4).map(|i| format!("dtlz{i}")).collect();
    keys.extend((1..=4).map(|i| format!("dtlz{i}_inv")));
    keys.extend((1..=10).map(|i| format!("uf{i}")));
    keys
}

/// Counts evaluations against a budget; the only path the optimizer uses
/// to evaluate candidates.
#[derive(Debug)]
pub struct Evaluator<'a> {
    problem: &'a Problem,
    used: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        Self { problem, used: 0 }
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let f = self.problem.evaluate(x)?;
        self.used += 1;
        Ok(f)
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }
}

// ---------------------------------------------------------------------------
// DTLZ, two objectives

fn dtlz_g_multimodal(tail: &[f64]) -> f64 {
    let k = tail.len() as f64;
    let s: f64 = tail
        .iter()
        .map(|&x| (x - 0.5).powi(2) - (20.0 * PI * (x - 0.5)).cos())
        .sum();
    100.0 * (k + s)
}

fn dtlz_g_sphere(tail: &[f64]) -> f64 {
    tail.iter().map(|&x| (x - 0.5).powi(2)).sum()
}

/// Returns `(objectives, g)`.
fn dtlz_parts(id: u8, x: &[f64]) -> (Vec<f64>, f64) {
    let tail = &x[1..];
    match id {
        1 => {
            let g = dtlz_g_multimodal(tail);
            (vec![0.5 * x[0] * (1.0 + g), 0.5 * (1.0 - x[0]) * (1.0 + g)], g)
        }
        2..=4 => {
            let g = if id == 3 {
                dtlz_g_multimodal(tail)
            } else {
                dtlz_g_sphere(tail)
            };
            let y = if id == 4 { x[0].powi(100) } else { x[0] };
            let theta = y * PI / 2.0;
            (vec![(1.0 + g) * theta.cos(), (1.0 + g) * theta.sin()], g)
        }
        _ => unreachable!("validated at construction"),
    }
}

fn dtlz(id: u8, x: &[f64]) -> Vec<f64> {
    dtlz_parts(id, x).0
}

/// Inversion rule: `0.5 (1 + g) - f` for DTLZ1, `(1 + g) - f` otherwise.
fn invert(id: u8, f: &[f64], g: f64) -> Vec<f64> {
    let top = if id == 1 { 0.5 * (1.0 + g) } else { 1.0 + g };
    f.iter().map(|fi| top - fi).collect()
}

fn dtlz_inverted(id: u8, x: &[f64]) -> Vec<f64> {
    let (f, g) = dtlz_parts(id, x);
    invert(id, &f, g)
}

// ---------------------------------------------------------------------------
// UF1-UF10 (CEC 2009). `j` below is the 1-based variable index.

fn uf(id: u8, x: &[f64]) -> Vec<f64> {
    match id {
        1..=7 => uf_two(id, x),
        _ => uf_three(id, x),
    }
}

fn uf_two(id: u8, x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let x1 = x[0];
    // (sum, count, product) for odd and even j >= 2
    let mut sum = [0.0f64; 2];
    let mut prod = [1.0f64; 2];
    let mut count = [0usize; 2];
    for (idx, &xj) in x.iter().enumerate().skip(1) {
        let j = (idx + 1) as f64;
        let set = if (idx + 1) % 2 == 1 { 0 } else { 1 };
        let y = match id {
            2 => {
                let amp = 0.3 * x1 * x1 * (24.0 * PI * x1 + 4.0 * j * PI / n).cos() + 0.6 * x1;
                let phase = 6.0 * PI * x1 + j * PI / n;
                if set == 0 {
                    xj - amp * phase.cos()
                } else {
                    xj - amp * phase.sin()
                }
            }
            3 => xj - x1.powf(0.5 * (1.0 + 3.0 * (j - 2.0) / (n - 2.0))),
            _ => xj - (6.0 * PI * x1 + j * PI / n).sin(),
        };
        let term = match id {
            4 => y.abs() / (1.0 + (2.0 * y.abs()).exp()),
            5 => 2.0 * y * y - (4.0 * PI * y).cos() + 1.0,
            _ => y * y,
        };
        sum[set] += term;
        count[set] += 1;
        if matches!(id, 3 | 6) {
            prod[set] *= (20.0 * y * PI / j.sqrt()).cos();
        }
    }
    let tail = |set: usize| -> f64 {
        let c = count[set] as f64;
        match id {
            3 | 6 => 2.0 / c * (4.0 * sum[set] - 2.0 * prod[set] + 2.0),
            _ => 2.0 / c * sum[set],
        }
    };
    match id {
        1..=3 => vec![x1 + tail(0), 1.0 - x1.sqrt() + tail(1)],
        4 => vec![x1 + tail(0), 1.0 - x1 * x1 + tail(1)],
        5 => {
            let big_n = 10.0;
            let ripple = (0.5 / big_n + 0.1) * (2.0 * big_n * PI * x1).sin().abs();
            vec![x1 + ripple + tail(0), 1.0 - x1 + ripple + tail(1)]
        }
        6 => {
            let big_n = 2.0;
            let gap = (2.0 * (0.5 / big_n + 0.1) * (2.0 * big_n * PI * x1).sin()).max(0.0);
            vec![x1 + gap + tail(0), 1.0 - x1 + gap + tail(1)]
        }
        7 => {
            let r = x1.powf(0.2);
            vec![r + tail(0), 1.0 - r + tail(1)]
        }
        _ => unreachable!(),
    }
}

fn uf_three(id: u8, x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let (x1, x2) = (x[0], x[1]);
    let mut sum = [0.0f64; 3];
    let mut count = [0usize; 3];
    for (idx, &xj) in x.iter().enumerate().skip(2) {
        let j = idx + 1;
        // J1: j-1 divisible by 3, J2: j-2 divisible by 3, J3: j divisible by 3
        let set = match j % 3 {
            1 => 0,
            2 => 1,
            _ => 2,
        };
        let y = xj - 2.0 * x2 * (2.0 * PI * x1 + j as f64 * PI / n).sin();
        let term = if id == 10 {
            4.0 * y * y - (8.0 * PI * y).cos() + 1.0
        } else {
            y * y
        };
        sum[set] += term;
        count[set] += 1;
    }
    let tail = |set: usize| 2.0 / count[set] as f64 * sum[set];
    match id {
        9 => {
            let eps = 0.1;
            let bump = ((1.0 + eps) * (1.0 - 4.0 * (2.0 * x1 - 1.0).powi(2))).max(0.0);
            vec![
                0.5 * (bump + 2.0 * x1) * x2 + tail(0),
                0.5 * (bump - 2.0 * x1 + 2.0) * x2 + tail(1),
                1.0 - x2 + tail(2),
            ]
        }
        _ => {
            let (a, b) = (0.5 * x1 * PI, 0.5 * x2 * PI);
            vec![
                a.cos() * b.cos() + tail(0),
                a.cos() * b.sin() + tail(1),
                a.sin() + tail(2),
            ]
        }
    }
}

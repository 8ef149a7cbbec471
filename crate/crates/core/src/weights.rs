//! Weight vectors, boundary sub-problems and neighbourhoods.
//!
//! Weights come from a digitally shifted Sobol sequence in the
//! `(m - 1)`-dimensional unit cube, mapped onto the simplex with the
//! sorted-uniform (Kraemer) transform. The `m` canonical basis vectors are
//! then written over the generated points nearest to them, so the set keeps
//! exactly `N` members.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// A point of the unit simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Builds a weight vector, checking the simplex constraints.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::config("empty weight vector"));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::config(format!("weight vector {w:?} has a negative component")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("weight vector {w:?} sums to {sum}")));
        }
        Ok(Self(w))
    }

    /// The `axis`-th canonical basis vector of dimension `m`.
    pub fn basis(m: usize, axis: usize) -> Self {
        let mut w = vec![0.0; m];
        w[axis] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn distance_sq(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

// (degree, coefficients, initial direction numbers), new-joe-kuo-6.21201.
// The first dimension is the van der Corput sequence.
const JOE_KUO: [(u32, u32, &[u32]); 7] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

/// Highest cube dimension the built-in direction numbers support.
pub const MAX_SOBOL_DIM: usize = JOE_KUO.len() + 1;

const BITS: usize = 32;

/// Direction numbers (already shifted to the top of a `u32`) for one dimension.
fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, v) in v.iter_mut().enumerate() {
            *v = 1 << (31 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (31 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

/// First `count` points of a `dim`-dimensional Sobol sequence with a random
/// digital shift drawn from `seed`, as `u32` fixed-point coordinates.
pub fn sobol_points(count: usize, dim: usize, seed: u64) -> Result<Vec<Vec<u32>>> {
    if dim == 0 || dim > MAX_SOBOL_DIM {
        return Err(Error::config(format!(
            "sobol dimension must be in 1..={MAX_SOBOL_DIM}, got {dim}"
        )));
    }
    if count as u64 > u32::MAX as u64 {
        return Err(Error::config("too many sobol points requested"));
    }
    let dirs: Vec<[u32; BITS]> = (0..dim).map(direction_numbers).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<u32> = (0..dim).map(|_| rng.gen()).collect();

    let points = (0..count as u32)
        .map(|index| {
            dirs.iter()
                .zip(&shift)
                .map(|(v, s)| {
                    let mut x = *s;
                    let mut bits = index;
                    let mut k = 0;
                    while bits != 0 {
                        if bits & 1 == 1 {
                            x ^= v[k];
                        }
                        bits >>= 1;
                        k += 1;
                    }
                    x
                })
                .collect()
        })
        .collect();
    Ok(points)
}

/// Sorted-uniform map from the unit cube `[0,1)^(m-1)` to the `m`-simplex.
fn cube_to_simplex(u: &[f64]) -> Vec<f64> {
    let mut sorted = u.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut w = Vec::with_capacity(u.len() + 1);
    let mut prev = 0.0;
    for s in sorted {
        w.push(s - prev);
        prev = s;
    }
    w.push(1.0 - prev);
    w
}

/// Generates `n` simplex weight vectors for `m` objectives.
///
/// The result always contains the `m` canonical basis vectors; each one
/// replaces the not-yet-replaced generated point nearest to it.
pub fn generate_weights(n: usize, m: usize, seed: u64) -> Result<Vec<WeightVector>> {
    if m < 2 {
        return Err(Error::config(format!("need at least two objectives, got {m}")));
    }
    if n < m {
        return Err(Error::config(format!(
            "{n} weight vectors cannot host boundary vectors for {m} objectives"
        )));
    }
    let scale = 1.0 / (1u64 << 32) as f64;
    let mut weights: Vec<WeightVector> = sobol_points(n, m - 1, seed)?
        .into_iter()
        .map(|p| {
            let u: Vec<f64> = p.iter().map(|&x| x as f64 * scale).collect();
            WeightVector(cube_to_simplex(&u))
        })
        .collect();

    let mut replaced = vec![false; n];
    for axis in 0..m {
        let target = WeightVector::basis(m, axis);
        let nearest = (0..n)
            .filter(|&i| !replaced[i])
            .min_by(|&a, &b| {
                let da = weights[a].distance_sq(target.as_slice());
                let db = weights[b].distance_sq(target.as_slice());
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("n >= m leaves a free slot");
        replaced[nearest] = true;
        weights[nearest] = target;
    }
    Ok(weights)
}

/// Indices of the canonical basis vectors, in objective order.
pub fn boundary_indices(weights: &[WeightVector]) -> Result<Vec<usize>> {
    let m = weights
        .first()
        .map(WeightVector::len)
        .ok_or_else(|| Error::config("empty weight set"))?;
    (0..m)
        .map(|axis| {
            let basis = WeightVector::basis(m, axis);
            weights.iter().position(|w| *w == basis).ok_or_else(|| {
                Error::config(format!("weight set is missing the boundary vector for objective {axis}"))
            })
        })
        .collect()
}

/// `T`-nearest neighbour lists plus the boundary sub-problems.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodTable {
    pub neighbors: Vec<Vec<usize>>,
    pub boundary: Vec<usize>,
}

impl NeighborhoodTable {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn of(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }
}

/// For every weight, the `t` closest weights by Euclidean distance
/// (ties to the lower index), nearest first.
pub fn build_neighborhoods(weights: &[WeightVector], t: usize) -> Result<NeighborhoodTable> {
    let n = weights.len();
    if t == 0 || t > n {
        return Err(Error::config(format!("neighbourhood size {t} must be in 1..={n}")));
    }
    let boundary = boundary_indices(weights)?;
    let neighbors = weights
        .iter()
        .map(|wi| {
            let mut order: Vec<(f64, usize)> = weights
                .iter()
                .enumerate()
                .map(|(j, wj)| (wi.distance_sq(wj.as_slice()), j))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            order.into_iter().take(t).map(|(_, j)| j).collect()
        })
        .collect();
    Ok(NeighborhoodTable { neighbors, boundary })
}

/// One row per vector, columns `w1..wm`.
pub fn weights_to_csv(weights: &[WeightVector]) -> String {
    let m = weights.first().map_or(0, WeightVector::len);
    let mut out = String::new();
    let header: Vec<String> = (1..=m).map(|k| format!("w{k}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for w in weights {
        let row: Vec<String> = w.as_slice().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

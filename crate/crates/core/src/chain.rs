//! Heights of the Poisson partial order: longest strictly increasing chains,
//! the weighted last-passage kernel, Monte Carlo estimates of `c_ν`, and the
//! factorial tail bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Point, TaggedCorner};
use crate::height::Height;
use crate::poisson::{self, PointCloud, PoissonError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ChainError {
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid estimate parameters: {0}")]
    InvalidParameters(&'static str),
    #[error(transparent)]
    Sampling(#[from] PoissonError),
}

/// Monte Carlo estimate of `n⁻¹ H(0, n b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainEstimate {
    pub dim: usize,
    pub n: f64,
    pub b: Point,
    pub replicas: usize,
    pub mean: f64,
    pub stderr: f64,
    pub seed: u64,
    pub rng_id: String,
}

impl ChainEstimate {
    pub fn b_product(&self) -> f64 {
        self.b.product()
    }
}

/// Longest chain `p¹ < p² < …` under strict coordinatewise order.
pub fn longest_chain(points: &[Point], dim: usize) -> Result<usize, ChainError> {
    let mut flat = Vec::with_capacity(points.len() * dim);
    for (index, p) in points.iter().enumerate() {
        if p.dim() != dim {
            return Err(ChainError::DimensionMismatch {
                index,
                expected: dim,
                found: p.dim(),
            });
        }
        flat.extend_from_slice(p.coords());
    }
    Ok(longest_chain_flat(&flat, dim))
}

/// [`longest_chain`] on point-major coordinates.
pub fn longest_chain_flat(coords: &[f64], dim: usize) -> usize {
    let n = coords.len() / dim;
    match dim {
        0 => 0,
        1 => {
            let mut xs: Vec<f64> = coords.to_vec();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            xs.len()
        }
        2 => patience_length(coords),
        _ => {
            let w = chain_weights(coords, dim, &vec![Height::ZERO; n]);
            w.weight
                .iter()
                .filter_map(|h| h.finite())
                .max()
                .unwrap_or(0) as usize
        }
    }
}

/// Patience sorting on the second coordinate after sorting by the first.
fn patience_length(coords: &[f64]) -> usize {
    let mut pts: Vec<(f64, f64)> = coords.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    // Equal first coordinates must not chain: visit them with decreasing
    // second coordinate.
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut tops: Vec<f64> = Vec::new();
    for &(_, y) in &pts {
        let pos = tops.partition_point(|&top| top < y);
        if pos == tops.len() {
            tops.push(y);
        } else {
            tops[pos] = y;
        }
    }
    tops.len()
}

/// Reference `O(n²)` dominance recursion `L(p) = 1 + max{L(q) : q < p}`.
pub fn longest_chain_quadratic(coords: &[f64], dim: usize) -> usize {
    let n = coords.len() / dim;
    let w = dp_weights(coords, dim, &vec![Height::ZERO; n]);
    w.weight
        .iter()
        .filter_map(|h| h.finite())
        .max()
        .unwrap_or(0) as usize
}

/// Result of the weighted last-passage kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainWeights {
    /// `W(p) = 1 + max(base(p), max{W(q) : q < p strictly})`.
    pub weight: Vec<Height>,
    /// The dominated point the maximum was taken from, or `None` when the
    /// base value won (the chain starts at `p`).
    pub pred: Vec<Option<usize>>,
}

impl ChainWeights {
    /// First point of the chain ending at `i`.
    pub fn chain_start(&self, mut i: usize) -> usize {
        while let Some(j) = self.pred[i] {
            i = j;
        }
        i
    }
}

pub(crate) type Best = Option<(Height, usize)>;

pub(crate) fn better(a: Best, b: Best) -> Best {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.0 > x.0 { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

fn finalize(base: Height, best: Best) -> (Height, Option<usize>) {
    match best {
        Some((w, j)) if w > base => (w + 1, Some(j)),
        _ => (base + 1, None),
    }
}

/// Weighted kernel for points with per-point base values.
///
/// Dimension 2 uses a Fenwick sweep; dimension 3 with distinct coordinates
/// uses divide and conquer in `O(n log² n)`; otherwise an `O(n²)` scan.
pub fn chain_weights(coords: &[f64], dim: usize, base: &[Height]) -> ChainWeights {
    let n = coords.len() / dim;
    assert_eq!(base.len(), n, "one base value per point");
    match dim {
        1 | 2 => sweep_weights(coords, dim, base),
        3 if all_distinct(coords, dim) => cdq_weights(coords, base),
        _ => dp_weights(coords, dim, base),
    }
}

fn all_distinct(coords: &[f64], dim: usize) -> bool {
    let n = coords.len() / dim;
    (0..dim).all(|a| {
        let mut col: Vec<f64> = (0..n).map(|i| coords[i * dim + a]).collect();
        col.sort_by(f64::total_cmp);
        col.windows(2).all(|w| w[0] != w[1])
    })
}

fn dense_ranks(values: impl Iterator<Item = f64>) -> (Vec<usize>, usize) {
    let vals: Vec<f64> = values.collect();
    let mut sorted = vals.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let ranks = vals
        .iter()
        .map(|v| sorted.partition_point(|s| s < v))
        .collect();
    (ranks, sorted.len())
}

/// Prefix-maximum Fenwick tree over ranks.
pub(crate) struct MaxFenwick {
    tree: Vec<Best>,
}

impl MaxFenwick {
    pub(crate) fn new(n: usize) -> Self {
        MaxFenwick {
            tree: vec![None; n + 1],
        }
    }

    pub(crate) fn update(&mut self, rank: usize, value: (Height, usize)) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            self.tree[i] = better(self.tree[i], Some(value));
            i += i & i.wrapping_neg();
        }
    }

    /// Maximum over ranks strictly below `rank`.
    pub(crate) fn query_below(&self, rank: usize) -> Best {
        let mut i = rank;
        let mut acc = None;
        while i > 0 {
            acc = better(acc, self.tree[i]);
            i -= i & i.wrapping_neg();
        }
        acc
    }

    fn clear(&mut self, rank: usize) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            self.tree[i] = None;
            i += i & i.wrapping_neg();
        }
    }
}

fn sweep_weights(coords: &[f64], dim: usize, base: &[Height]) -> ChainWeights {
    let n = base.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| coords[a * dim].total_cmp(&coords[b * dim]));
    let (ranks, m) = if dim == 2 {
        dense_ranks((0..n).map(|i| coords[i * 2 + 1]))
    } else {
        (vec![0; n], 1)
    };
    let mut weight = vec![Height::NegInf; n];
    let mut pred = vec![None; n];
    let mut fen = MaxFenwick::new(m);
    // In one dimension every earlier group dominates, so a running max is
    // kept in `all`.
    let mut all: Best = None;
    let mut start = 0;
    while start < n {
        let x = coords[order[start] * dim];
        let mut end = start;
        while end < n && coords[order[end] * dim] == x {
            end += 1;
        }
        for &i in &order[start..end] {
            let best = if dim == 2 {
                fen.query_below(ranks[i])
            } else {
                all
            };
            let (w, p) = finalize(base[i], best);
            weight[i] = w;
            pred[i] = p;
        }
        for &i in &order[start..end] {
            if dim == 2 {
                fen.update(ranks[i], (weight[i], i));
            } else {
                all = better(all, Some((weight[i], i)));
            }
        }
        start = end;
    }
    ChainWeights { weight, pred }
}

fn dp_weights(coords: &[f64], dim: usize, base: &[Height]) -> ChainWeights {
    let n = base.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| coords[a * dim].total_cmp(&coords[b * dim]));
    let mut weight = vec![Height::NegInf; n];
    let mut pred = vec![None; n];
    for (k, &i) in order.iter().enumerate() {
        let p = &coords[i * dim..(i + 1) * dim];
        let mut best: Best = None;
        for &j in &order[..k] {
            let q = &coords[j * dim..(j + 1) * dim];
            if q.iter().zip(p).all(|(a, b)| a < b) {
                best = better(best, Some((weight[j], j)));
            }
        }
        let (w, pr) = finalize(base[i], best);
        weight[i] = w;
        pred[i] = pr;
    }
    ChainWeights { weight, pred }
}

struct Cdq<'a> {
    x1: Vec<f64>,
    rank2: Vec<usize>,
    base: &'a [Height],
    /// Sorted position -> original index.
    order: Vec<usize>,
    best: Vec<Best>,
    weight: Vec<Height>,
    pred: Vec<Option<usize>>,
    fen: MaxFenwick,
}

impl Cdq<'_> {
    fn solve(&mut self, l: usize, r: usize) {
        if r - l == 1 {
            let (w, p) = finalize(self.base[self.order[l]], self.best[l]);
            self.weight[l] = w;
            self.pred[l] = p.map(|pos| self.order[pos]);
            return;
        }
        let mid = (l + r) / 2;
        self.solve(l, mid);
        self.contribute(l, mid, r);
        self.solve(mid, r);
    }

    fn contribute(&mut self, l: usize, mid: usize, r: usize) {
        let by_x1 = |v: &mut Vec<usize>, x1: &[f64]| v.sort_by(|&a, &b| x1[a].total_cmp(&x1[b]));
        let mut left: Vec<usize> = (l..mid).collect();
        let mut right: Vec<usize> = (mid..r).collect();
        by_x1(&mut left, &self.x1);
        by_x1(&mut right, &self.x1);
        let mut j = 0;
        for &p in &right {
            while j < left.len() && self.x1[left[j]] < self.x1[p] {
                let q = left[j];
                self.fen.update(self.rank2[q], (self.weight[q], q));
                j += 1;
            }
            let got = self.fen.query_below(self.rank2[p]);
            self.best[p] = better(self.best[p], got);
        }
        for &q in &left[..j] {
            self.fen.clear(self.rank2[q]);
        }
    }
}

fn cdq_weights(coords: &[f64], base: &[Height]) -> ChainWeights {
    let n = base.len();
    if n == 0 {
        return ChainWeights {
            weight: vec![],
            pred: vec![],
        };
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| coords[a * 3].total_cmp(&coords[b * 3]));
    let x1: Vec<f64> = order.iter().map(|&i| coords[i * 3 + 1]).collect();
    let (rank2, m) = dense_ranks(order.iter().map(|&i| coords[i * 3 + 2]));
    let mut cdq = Cdq {
        x1,
        rank2,
        base,
        order,
        best: vec![None; n],
        weight: vec![Height::NegInf; n],
        pred: vec![None; n],
        fen: MaxFenwick::new(m),
    };
    cdq.solve(0, n);
    let mut weight = vec![Height::NegInf; n];
    let mut pred = vec![None; n];
    for pos in 0..n {
        weight[cdq.order[pos]] = cdq.weight[pos];
        pred[cdq.order[pos]] = cdq.pred[pos];
    }
    ChainWeights { weight, pred }
}

/// Longest chain among cloud points in the half-open space-time box
/// `(lower, upper]`; `upper` carries the time as its last coordinate.
pub fn chain_height(cloud: &PointCloud, lower: &TaggedCorner, upper: &Point) -> usize {
    let dim = cloud.dim();
    let d = dim - 1;
    let mut kept = Vec::new();
    for p in cloud.points() {
        let (space, time) = (&p[..d], p[d]);
        let below_upper = p.iter().zip(upper.coords()).all(|(a, b)| a <= b);
        if below_upper && lower.admits(space, Some(time)) {
            kept.extend_from_slice(p);
        }
    }
    longest_chain_flat(&kept, dim)
}

/// One draw of `n⁻¹ H(0, n b)` from the cloud seeded with `seed`.
pub fn chain_replica(dim: usize, n: f64, b: &Point, seed: u64) -> Result<f64, ChainError> {
    let lower = Point::splat(0.0, dim);
    let upper = Point::from(b.coords().iter().map(|v| v * n).collect::<Vec<_>>());
    let cloud = poisson::sample(&lower, &upper, 1.0, seed)?;
    Ok(longest_chain_flat(cloud.flat(), dim) as f64 / n)
}

/// Mean and standard error of `n⁻¹ H(0, n b)` over independent replicas,
/// replica `r` drawing its cloud from `mix(seed, r)`.
pub fn estimate_c(
    dim: usize,
    n: f64,
    b: &Point,
    replicas: usize,
    seed: u64,
) -> Result<ChainEstimate, ChainError> {
    if dim == 0 || b.dim() != dim {
        return Err(ChainError::InvalidParameters("b must have dimension ν ≥ 1"));
    }
    if !(n > 0.0) || b.coords().iter().any(|&v| !(v > 0.0)) {
        return Err(ChainError::InvalidParameters("n and b must be positive"));
    }
    if replicas == 0 {
        return Err(ChainError::InvalidParameters("need at least one replica"));
    }
    let values: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| chain_replica(dim, n, b, poisson::mix(seed, r)))
        .collect::<Result<_, ChainError>>()?;
    let (mean, stderr) = mean_stderr(&values);
    Ok(ChainEstimate {
        dim,
        n,
        b: b.clone(),
        replicas,
        mean,
        stderr,
        seed,
        rng_id: poisson::RNG_ID.to_string(),
    })
}

/// Sample mean and standard error (0 for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// `min(1, γ^k / (k!)^ν)`, evaluated in log space.
pub fn tail_bound(gamma: f64, k: u32, dim: usize) -> f64 {
    let log_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    let log_bound = k as f64 * gamma.ln() - dim as f64 * log_fact;
    log_bound.exp().min(1.0)
}

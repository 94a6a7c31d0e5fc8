//! One-dimensional Hammersley process through its graphical construction,
//! and two-dimensional random initial fields read off its space-time picture
//! (space `y` becomes `x₁`, time `t` becomes `x₂`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::chain_weights;
use crate::geometry::{GridRegion, GridSpec, Point};
use crate::growth::{GrowthError, ProfileSpec, StaircaseField};
use crate::height::Height;
use crate::poisson::{mix, sample, PoissonError, PointCloud};

#[derive(Debug, Error, PartialEq)]
pub enum HammersleyError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error("measurement window still changed when the padding was doubled to {pad}")]
    PaddingNotConverged { pad: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleConfig {
    pub positions: Vec<f64>,
    pub window: (f64, f64),
    pub mu: f64,
}

impl ParticleConfig {
    pub fn new(positions: Vec<f64>, window: (f64, f64), mu: f64) -> Result<Self, HammersleyError> {
        if positions.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(HammersleyError::BadParams("positions must be sorted".into()));
        }
        if positions.iter().any(|&z| !(z > window.0 && z <= window.1)) {
            return Err(HammersleyError::BadParams("positions must lie in the window".into()));
        }
        Ok(ParticleConfig {
            positions,
            window,
            mu,
        })
    }
}

/// A rate-`mu` Poisson configuration on `(window.0, window.1]`.
pub fn equilibrium_init(
    mu: f64,
    window: (f64, f64),
    seed: u64,
) -> Result<ParticleConfig, HammersleyError> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(HammersleyError::BadParams(format!("density must be positive, got {mu}")));
    }
    let cloud = sample(&Point::from([window.0]), &Point::from([window.1]), mu, seed)?;
    let mut positions = cloud.flat().to_vec();
    positions.sort_by(f64::total_cmp);
    Ok(ParticleConfig {
        positions,
        window,
        mu,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    /// Rank of the particle in the (order-preserving) configuration.
    pub index: usize,
    pub from: f64,
    pub to: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectories {
    pub initial: Vec<f64>,
    pub window: (f64, f64),
    pub start: f64,
    pub end: f64,
    /// Jumps in time order.
    pub jumps: Vec<Jump>,
    /// Particles at or left of 0 at time 0 (or at `start` if 0 is outside
    /// the simulated interval), so that `N(0, 0) = 0`.
    pub offset: usize,
}

impl Trajectories {
    pub fn label(&self, index: usize) -> i64 {
        index as i64 - self.offset as i64 + 1
    }

    pub fn positions_at(&self, t: f64) -> Vec<f64> {
        let mut pos = self.initial.clone();
        for j in self.jumps.iter().take_while(|j| j.time <= t) {
            pos[j.index] = j.to;
        }
        pos
    }

    /// Configurations at each of `times`, in the given order.
    pub fn snapshots(&self, times: &[f64]) -> Vec<Vec<f64>> {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut pos = self.initial.clone();
        let mut next = 0;
        let mut out = vec![Vec::new(); times.len()];
        for i in order {
            while next < self.jumps.len() && self.jumps[next].time <= times[i] {
                pos[self.jumps[next].index] = self.jumps[next].to;
                next += 1;
            }
            out[i] = pos.clone();
        }
        out
    }

    /// `N(y, t) = sup{k : z_k(t) ≤ y}` relative to the label normalization.
    pub fn count(&self, y: f64, t: f64) -> i64 {
        count_in(&self.positions_at(t), y, self.offset)
    }

    /// `(label, time, new position)` for every jump.
    pub fn jump_rows(&self) -> impl Iterator<Item = (i64, f64, f64)> + '_ {
        self.jumps.iter().map(|j| (self.label(j.index), j.time, j.to))
    }
}

fn count_in(positions: &[f64], y: f64, offset: usize) -> i64 {
    positions.partition_point(|&z| z <= y) as i64 - offset as i64
}

/// Drives `init` with a fixed space-time cloud: at each point `(y, s)` the
/// leftmost particle strictly right of `y` jumps to `y`.
pub fn simulate_with_cloud(
    init: &ParticleConfig,
    cloud: &PointCloud,
) -> Result<Trajectories, HammersleyError> {
    if cloud.dim() != 2 {
        return Err(HammersleyError::BadParams("cloud must be (space, time)".into()));
    }
    let (start, end) = (cloud.lower()[1], cloud.upper()[1]);
    let reference = if start <= 0.0 && 0.0 <= end { 0.0 } else { start };
    let mut events: Vec<&[f64]> = cloud.points().collect();
    events.sort_by(|a, b| a[1].total_cmp(&b[1]));

    let mut pos = init.positions.clone();
    let mut jumps = Vec::new();
    let mut offset = None;
    for p in events {
        let (y, s) = (p[0], p[1]);
        if offset.is_none() && s > reference {
            offset = Some(pos.partition_point(|&z| z <= 0.0));
        }
        let j = pos.partition_point(|&z| z <= y);
        if j < pos.len() {
            jumps.push(Jump {
                time: s,
                index: j,
                from: pos[j],
                to: y,
            });
            pos[j] = y;
        }
    }
    let offset = offset.unwrap_or_else(|| pos.partition_point(|&z| z <= 0.0));
    Ok(Trajectories {
        initial: init.positions.clone(),
        window: init.window,
        start,
        end,
        jumps,
        offset,
    })
}

/// Runs over `window × (start, end]` with a rate-`tau` cloud.
pub fn simulate_between(
    init: &ParticleConfig,
    tau: f64,
    start: f64,
    end: f64,
    seed: u64,
) -> Result<Trajectories, HammersleyError> {
    let cloud = sample(
        &Point::from([init.window.0, start]),
        &Point::from([init.window.1, end]),
        tau,
        seed,
    )?;
    simulate_with_cloud(init, &cloud)
}

pub fn simulate(
    init: &ParticleConfig,
    tau: f64,
    horizon: f64,
    seed: u64,
) -> Result<Trajectories, HammersleyError> {
    simulate_between(init, tau, 0.0, horizon, seed)
}

/// Right-to-left crossings of `y0` during `(start, t]`.
pub fn flux_past(traj: &Trajectories, y0: f64, t: f64) -> u64 {
    traj.jumps
        .iter()
        .filter(|j| j.time <= t && j.from > y0 && j.to <= y0)
        .count() as u64
}

/// Spatial margin added on each side of a measurement window so that the
/// missing particles beyond a finite window cannot be felt within `duration`.
pub fn padding(mu: f64, tau: f64, duration: f64) -> f64 {
    (3.0 * (tau / mu) * duration / mu).max(10.0 / mu)
}

/// `a = (ρ₁ − λ₁)/(ρ₂ − λ₂)` of the line `t = −a·y`; requires `ρ > λ > 0`.
pub fn shock_line_slope(lambda: &[f64], rho: &[f64]) -> Result<f64, HammersleyError> {
    if lambda.len() != 2 || rho.len() != 2 {
        return Err(HammersleyError::BadParams("λ and ρ must be two-dimensional".into()));
    }
    if !(lambda.iter().all(|&l| l > 0.0 && l.is_finite()) && rho[0] > lambda[0] && rho[1] > lambda[1])
    {
        return Err(HammersleyError::BadParams(format!(
            "need ρ > λ > 0 coordinatewise, got λ = {lambda:?}, ρ = {rho:?}"
        )));
    }
    Ok((rho[0] - lambda[0]) / (rho[1] - lambda[1]))
}

/// [`shock_line_slope`] plus the condition that every particle meets the line.
pub fn check_shock_params(lambda: &[f64], rho: &[f64]) -> Result<f64, HammersleyError> {
    let a = shock_line_slope(lambda, rho)?;
    if !(rho[0] / rho[1] < lambda[0] / lambda[1]) {
        return Err(HammersleyError::BadParams(format!(
            "need ρ₁/ρ₂ < λ₁/λ₂ so every particle meets the line, got λ = {lambda:?}, ρ = {rho:?}"
        )));
    }
    Ok(a)
}

fn check_grid(grid: &GridSpec) -> Result<(), HammersleyError> {
    if grid.dim() != 2 {
        return Err(HammersleyError::BadParams("fields are two-dimensional".into()));
    }
    Ok(())
}

/// Poisson points on `(lo, hi] × time` assembled from fixed-width spatial
/// tiles with their own seeds, so that a wider domain extends a narrower one
/// with the same points.
fn tiled_points(
    lo: f64,
    hi: f64,
    time: Option<(f64, f64)>,
    rate: f64,
    width: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>, HammersleyError> {
    let mut out = Vec::new();
    let first = (lo / width).floor() as i64;
    let last = (hi / width).ceil() as i64;
    for k in first..last {
        let zigzag = ((k << 1) ^ (k >> 63)) as u64;
        let (a, b) = (k as f64 * width, (k + 1) as f64 * width);
        let (lower, upper) = match time {
            Some((t0, t1)) => (vec![a, t0], vec![b, t1]),
            None => (vec![a], vec![b]),
        };
        let tile = sample(&Point::from(lower), &Point::from(upper), rate, mix(seed, zigzag))?;
        out.extend(tile.points().filter(|p| p[0] > lo && p[0] <= hi).map(<[f64]>::to_vec));
    }
    Ok(out)
}

fn padded_once(
    mu: f64,
    tau: f64,
    domain: (f64, f64),
    time: (f64, f64),
    seed: u64,
) -> Result<Trajectories, HammersleyError> {
    let width = 10.0 / mu;
    let mut positions: Vec<f64> = tiled_points(domain.0, domain.1, None, mu, width, mix(seed, 0))?
        .into_iter()
        .map(|p| p[0])
        .collect();
    positions.sort_by(f64::total_cmp);
    let init = ParticleConfig::new(positions, domain, mu)?;
    let pts = tiled_points(domain.0, domain.1, Some(time), tau, width, mix(seed, 1))?;
    let cloud = PointCloud::from_points(
        Point::from([domain.0, time.0]),
        Point::from([domain.1, time.1]),
        &pts,
        tau,
        seed,
    )?;
    simulate_with_cloud(&init, &cloud)
}

fn touching(traj: &Trajectories, window: (f64, f64)) -> Vec<Jump> {
    let inside = |z: f64| z >= window.0 && z <= window.1;
    traj.jumps
        .iter()
        .filter(|j| inside(j.from) || inside(j.to))
        .map(|j| Jump { index: 0, ..*j })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PaddedRun {
    pub traj: Trajectories,
    pub pad: f64,
}

/// Equilibrium run at density `mu` and rate `tau` observed on
/// `window × (time.0, time.1]`. The padding starts at [`padding`] and is
/// doubled until doubling it once more leaves every jump touching the
/// window unchanged; the wider of the two agreeing runs is returned.
pub fn simulate_padded(
    mu: f64,
    tau: f64,
    window: (f64, f64),
    time: (f64, f64),
    seed: u64,
) -> Result<PaddedRun, HammersleyError> {
    if !(mu > 0.0 && tau > 0.0 && mu.is_finite() && tau.is_finite()) {
        return Err(HammersleyError::BadParams(format!("need μ, τ > 0, got {mu}, {tau}")));
    }
    let mut pad = padding(mu, tau, time.1 - time.0);
    let run = |pad: f64| padded_once(mu, tau, (window.0 - pad, window.1 + pad), time, seed);
    let mut narrow = run(pad)?;
    for _ in 0..MAX_PAD_DOUBLINGS {
        let wide = run(2.0 * pad)?;
        if touching(&narrow, window) == touching(&wide, window) {
            return Ok(PaddedRun {
                traj: wide,
                pad: 2.0 * pad,
            });
        }
        narrow = wide;
        pad *= 2.0;
    }
    Err(HammersleyError::PaddingNotConverged { pad })
}

const MAX_PAD_DOUBLINGS: usize = 6;

fn equilibrium_run(
    mu: f64,
    tau: f64,
    space: (f64, f64),
    time: (f64, f64),
    seed: u64,
) -> Result<Trajectories, HammersleyError> {
    Ok(simulate_padded(mu, tau, space, time, seed)?.traj)
}

/// Values at the lower-left corner of each grid cell, `N(edge₀, edge₁)`.
fn corner_counts(traj: &Trajectories, grid: &GridSpec) -> Vec<Vec<i64>> {
    let times: Vec<f64> = (0..grid.cells[1]).map(|j| grid.edge(1, j)).collect();
    let snaps = traj.snapshots(&times);
    (0..grid.cells[0])
        .map(|i| {
            let y = grid.edge(0, i);
            snaps.iter().map(|s| count_in(s, y, traj.offset)).collect()
        })
        .collect()
}

fn staircase(grid: &GridSpec, values: &[Vec<i64>]) -> Result<ProfileSpec, HammersleyError> {
    let bps = (0..2)
        .map(|a| (0..=grid.cells[a]).map(|k| grid.edge(a, k)).collect())
        .collect();
    let flat = values.iter().flatten().map(|&v| Height::Finite(v)).collect();
    Ok(ProfileSpec::Staircase {
        field: StaircaseField::new(bps, flat)?,
    })
}

/// Flat slope-`ρ` field: equilibrium with `μ = ρ₁`, `τ = ρ₁ρ₂`, sampled at
/// grid cell corners.
pub fn build_flat_field_2d(
    rho: &[f64],
    grid: &GridSpec,
    seed: u64,
) -> Result<ProfileSpec, HammersleyError> {
    check_grid(grid)?;
    if rho.len() != 2 || !rho.iter().all(|&r| r > 0.0 && r.is_finite()) {
        return Err(HammersleyError::BadParams(format!("need ρ > 0, got {rho:?}")));
    }
    let time = (grid.lo[1].min(0.0), grid.hi[1].max(0.0));
    let space = (grid.lo[0].min(0.0), grid.hi[0].max(0.0));
    let traj = equilibrium_run(rho[0], rho[0] * rho[1], space, time, seed)?;
    staircase(grid, &corner_counts(&traj, grid))
}

/// `y' ↦ N(y', (−a·y')−)`: the below-line process read along the line.
struct LineProfile {
    breaks: Vec<f64>,
    table: RangeMax,
}

impl LineProfile {
    fn new(traj: &Trajectories, a: f64) -> Self {
        let mut by_particle: Vec<Vec<&Jump>> = vec![Vec::new(); traj.initial.len()];
        for j in &traj.jumps {
            by_particle[j.index].push(j);
        }
        // While the left-limit position is `p` on time (s₀, s₁], the line
        // point `y'` with `−a·y' ∈ (s₀, s₁]` counts the particle iff `p ≤ y'`.
        let mut deltas: Vec<(f64, i64)> = Vec::new();
        let mut segment = |p: f64, s0: f64, s1: f64| {
            let lo = (-s1 / a).max(p);
            let hi = -s0 / a;
            if lo < hi {
                deltas.push((lo, 1));
                deltas.push((hi, -1));
            }
        };
        for (k, jumps) in by_particle.iter().enumerate() {
            let (mut p, mut s) = (traj.initial[k], traj.start);
            for j in jumps {
                segment(p, s, j.time);
                p = j.to;
                s = j.time;
            }
            segment(p, s, traj.end);
        }
        deltas.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut breaks = vec![-traj.end / a];
        let mut values = vec![-(traj.offset as i64)];
        let mut level = values[0];
        for (x, d) in deltas {
            level += d;
            if x == *breaks.last().unwrap() {
                *values.last_mut().unwrap() = level;
            } else {
                breaks.push(x);
                values.push(level);
            }
        }
        LineProfile {
            breaks,
            table: RangeMax::new(values),
        }
    }

    fn piece(&self, y: f64) -> usize {
        self.breaks.partition_point(|&b| b <= y).saturating_sub(1)
    }

    /// Maximum over `[u, v]`.
    fn max_closed(&self, u: f64, v: f64) -> i64 {
        self.table.query(self.piece(u), self.piece(v))
    }

    /// Maximum over `(u, v)`, `u < v`.
    fn max_open(&self, u: f64, v: f64) -> i64 {
        let hi = self.breaks.partition_point(|&b| b < v).saturating_sub(1);
        self.table.query(self.piece(u), hi.max(self.piece(u)))
    }
}

/// Sparse table for static range maxima.
struct RangeMax {
    levels: Vec<Vec<i64>>,
}

impl RangeMax {
    fn new(values: Vec<i64>) -> Self {
        let mut levels = vec![values];
        let mut w = 1;
        while 2 * w <= levels[0].len() {
            let prev = levels.last().unwrap();
            let next = (0..prev.len() - w).map(|i| prev[i].max(prev[i + w])).collect();
            levels.push(next);
            w *= 2;
        }
        RangeMax { levels }
    }

    fn query(&self, lo: usize, hi: usize) -> i64 {
        let k = (usize::BITS - 1 - (hi - lo + 1).leading_zeros()) as usize;
        self.levels[k][lo].max(self.levels[k][hi + 1 - (1 << k)])
    }
}

/// Corner values of the shock field `ζ₀` and of its surgered partner `σ₀`.
///
/// Below the line both equal the equilibrium `N` at `(μ, τ) = (λ₁, λ₁λ₂)`.
/// Above it, `ζ₀(y, t)` is the last-passage extension from the line through
/// a fresh rate-`ρ₁ρ₂` cloud, and `σ₀ = max(ζ₀ − 1, max of the line values
/// on [−t/a, y])` — every level curve moved to the next one from where it
/// left the line.
/// Corner values per column, per row.
type Corners = Vec<Vec<i64>>;

fn shock_corners(
    lambda: &[f64],
    rho: &[f64],
    grid: &GridSpec,
    seed: u64,
) -> Result<(Corners, Corners), HammersleyError> {
    check_grid(grid)?;
    let a = check_shock_params(lambda, rho)?;
    let (ylo, yhi) = (grid.lo[0], grid.hi[0]);
    let (tlo, thi) = (grid.lo[1], grid.hi[1]);
    let t1 = thi.max(0.0);
    let t0 = tlo.min(-a * yhi).min(0.0) - 1.0;
    let space = (ylo.min(-t1 / a).min(0.0), yhi.max(0.0));
    let traj = equilibrium_run(lambda[0], lambda[0] * lambda[1], space, (t0, t1), mix(seed, 0))?;
    let below = corner_counts(&traj, grid);
    let line = LineProfile::new(&traj, a);

    let fresh_lo = [-t1 / a, -a * yhi];
    let fresh_hi = [yhi, t1];
    let coords: Vec<f64> = if fresh_lo[0] < fresh_hi[0] && fresh_lo[1] < fresh_hi[1] {
        sample(
            &Point::from(fresh_lo),
            &Point::from(fresh_hi),
            rho[0] * rho[1],
            mix(seed, 2),
        )?
        .points()
        .filter(|p| p[1] + a * p[0] > 0.0)
        .flatten()
        .copied()
        .collect()
    } else {
        Vec::new()
    };
    let base: Vec<Height> = coords
        .chunks_exact(2)
        .map(|p| Height::Finite(line.max_open(-p[1] / a, p[0])))
        .collect();
    let weights = chain_weights(&coords, 2, &base);

    // best[i][j] = max W(p) over fresh points p ≤ corner (i, j).
    let (n0, n1) = (grid.cells[0], grid.cells[1]);
    let edges = |axis: usize, n: usize| (0..n).map(|k| grid.edge(axis, k)).collect::<Vec<f64>>();
    let (e0, e1) = (edges(0, n0), edges(1, n1));
    let mut best = vec![vec![i64::MIN; n1]; n0];
    for (p, w) in coords.chunks_exact(2).zip(&weights.weight) {
        let i = e0.partition_point(|&e| e < p[0]);
        let j = e1.partition_point(|&e| e < p[1]);
        if i < n0 && j < n1 {
            let w = w.finite().expect("finite base gives finite weights");
            best[i][j] = best[i][j].max(w);
        }
    }
    for i in 0..n0 {
        for j in 0..n1 {
            let mut m = best[i][j];
            if i > 0 {
                m = m.max(best[i - 1][j]);
            }
            if j > 0 {
                m = m.max(best[i][j - 1]);
            }
            best[i][j] = m;
        }
    }

    let mut zeta = below.clone();
    let mut sigma = below;
    for i in 0..n0 {
        for j in 0..n1 {
            let (y, t) = (e0[i], e1[j]);
            if t + a * y < 0.0 {
                continue;
            }
            let on_line = line.max_closed(-t / a, y);
            let z = on_line.max(best[i][j]);
            zeta[i][j] = z;
            sigma[i][j] = on_line.max(z - 1);
        }
    }
    Ok((zeta, sigma))
}

/// Shock initial field: slope `λ` below `(ρ − λ)·x = 0`, slope `ρ` above.
/// Requires `ρ > λ` and `ρ₁/ρ₂ < λ₁/λ₂`.
pub fn build_shock_field_2d(
    lambda: &[f64],
    rho: &[f64],
    grid: &GridSpec,
    seed: u64,
) -> Result<ProfileSpec, HammersleyError> {
    let (zeta, _) = shock_corners(lambda, rho, grid, seed)?;
    staircase(grid, &zeta)
}

/// `(σ₀, ζ₀, A(0))` with `ζ₀` the shock field, `σ₀` its surgered version
/// and `A(0)` the cells where `ζ₀ = σ₀ + 1`.
pub fn build_coupled_shock_pair(
    lambda: &[f64],
    rho: &[f64],
    grid: &GridSpec,
    seed: u64,
) -> Result<(ProfileSpec, ProfileSpec, GridRegion), HammersleyError> {
    let (zeta, sigma) = shock_corners(lambda, rho, grid, seed)?;
    let membership = zeta
        .iter()
        .flatten()
        .zip(sigma.iter().flatten())
        .map(|(z, s)| *z == s + 1)
        .collect();
    let a0 = GridRegion::new(grid.clone(), membership).expect("one flag per cell");
    Ok((staircase(grid, &sigma)?, staircase(grid, &zeta)?, a0))
}

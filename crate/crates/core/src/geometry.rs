//! Shared geometry: the coordinatewise partial order, tagged coordinates for
//! exact half-open box semantics, and rectangular grid regions with their
//! morphology (boundary, ε-neighborhoods and inclusion gaps).

use std::cmp::Ordering;
use std::ops::Index;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point has a non-finite coordinate")]
    NonFinite,
    #[error("point must have at least one coordinate")]
    Empty,
    #[error("grid axis {axis} is degenerate (lo must be < hi and cells >= 1)")]
    DegenerateGrid { axis: usize },
    #[error("membership length {found} does not match the grid's {expected} cells")]
    MembershipLength { expected: usize, found: usize },
    #[error("regions live on different grids")]
    GridMismatch,
}

/// A point of `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    /// Checked constructor: at least one coordinate, all finite.
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::Empty);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn splat(value: f64, dim: usize) -> Self {
        Point(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn product(&self) -> f64 {
        self.0.iter().product()
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point(coords)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(coords: [f64; N]) -> Self {
        Point(coords.to_vec())
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `x <= y` coordinatewise.
pub fn leq(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a <= b)
}

/// `x < y` in every coordinate.
pub fn lt(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a < b)
}

/// True iff `x <= y` (or `x < y` in every coordinate when `strict`).
pub fn dominates(x: &Point, y: &Point, strict: bool) -> Result<bool, GeometryError> {
    if x.dim() != y.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(if strict {
        lt(x.coords(), y.coords())
    } else {
        leq(x.coords(), y.coords())
    })
}

/// Which side of `value` a tagged lower bound sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Exactly at `value`: admits coordinates `q > value`.
    At,
    /// Infinitesimally below `value`: admits coordinates `q >= value`.
    Before,
}

/// A lower-bound coordinate with exact open/closed semantics.
///
/// Ordered as positions on the line: `(v, Before) < (v, At) < (w, _)` for
/// `v < w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedCoord {
    pub value: f64,
    pub side: Side,
}

impl TaggedCoord {
    pub fn at(value: f64) -> Self {
        TaggedCoord {
            value,
            side: Side::At,
        }
    }

    pub fn before(value: f64) -> Self {
        TaggedCoord {
            value,
            side: Side::Before,
        }
    }

    /// Whether a point coordinate `q` lies strictly above this bound.
    pub fn is_exceeded_by(&self, q: f64) -> bool {
        match self.side {
            Side::At => q > self.value,
            Side::Before => q >= self.value,
        }
    }

    /// Whether this position is `<= q` as a point of the line.
    pub fn is_at_or_below(&self, q: f64) -> bool {
        self.value <= q
    }
}

impl Eq for TaggedCoord {}

impl PartialOrd for TaggedCoord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TaggedCoord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value).then_with(|| {
            let rank = |s: Side| match s {
                Side::Before => 0,
                Side::At => 1,
            };
            rank(self.side).cmp(&rank(other.side))
        })
    }
}

/// Lower corner of a half-open box `(a, b]`, optionally with a time bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedCorner {
    pub coords: Vec<TaggedCoord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TaggedCoord>,
}

impl TaggedCorner {
    pub fn new(coords: Vec<TaggedCoord>) -> Self {
        TaggedCorner { coords, time: None }
    }

    /// Corner exactly at `p`: admits points `q > p`.
    pub fn at(p: &[f64]) -> Self {
        Self::new(p.iter().map(|&v| TaggedCoord::at(v)).collect())
    }

    /// Corner just below `p`: admits points `q >= p`.
    pub fn before(p: &[f64]) -> Self {
        Self::new(p.iter().map(|&v| TaggedCoord::before(v)).collect())
    }

    pub fn with_time(mut self, time: TaggedCoord) -> Self {
        self.time = Some(time);
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.value).collect()
    }

    /// Whether the spatial point (and optional time) lies strictly above
    /// this corner in every tagged coordinate.
    pub fn admits(&self, space: &[f64], time: Option<f64>) -> bool {
        let space_ok = self
            .coords
            .iter()
            .zip(space)
            .all(|(c, &q)| c.is_exceeded_by(q));
        match (self.time, time) {
            (Some(tc), Some(s)) => space_ok && tc.is_exceeded_by(s),
            _ => space_ok,
        }
    }
}

/// A rectangular grid of `cells[i]` equal cells per axis on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Point,
    pub hi: Point,
    pub cells: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Point, hi: Point, cells: Vec<usize>) -> Result<Self, GeometryError> {
        let d = lo.dim();
        for found in [hi.dim(), cells.len()] {
            if found != d {
                return Err(GeometryError::DimensionMismatch { expected: d, found });
            }
        }
        for axis in 0..d {
            if !(lo[axis] < hi[axis]) || cells[axis] == 0 {
                return Err(GeometryError::DegenerateGrid { axis });
            }
        }
        Ok(GridSpec { lo, hi, cells })
    }

    /// Same cell count on every axis.
    pub fn uniform(lo: Point, hi: Point, cells: usize) -> Result<Self, GeometryError> {
        let d = lo.dim();
        Self::new(lo, hi, vec![cells; d])
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.cells[axis] as f64
    }

    pub fn max_cell_width(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.cell_width(a))
            .fold(0.0, f64::max)
    }

    /// Position of the `k`-th cell edge on `axis` (`k = 0..=cells`).
    pub fn edge(&self, axis: usize, k: usize) -> f64 {
        if k == self.cells[axis] {
            return self.hi[axis];
        }
        self.lo[axis] + (self.hi[axis] - self.lo[axis]) * (k as f64 / self.cells[axis] as f64)
    }

    pub fn center_coord(&self, axis: usize, k: usize) -> f64 {
        self.lo[axis]
            + (self.hi[axis] - self.lo[axis]) * ((k as f64 + 0.5) / self.cells[axis] as f64)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.cells[axis];
            flat /= self.cells[axis];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.cells)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(axis, &k)| self.center_coord(axis, k))
            .collect()
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        (0..self.n_cells()).map(|i| self.center(i)).collect()
    }

    /// Index of the cell holding the tagged position on `axis`, clamped into
    /// the grid. Cells are left-closed: `[edge(k), edge(k+1))`.
    pub fn axis_index(&self, axis: usize, pos: TaggedCoord) -> usize {
        let n = self.cells[axis];
        let inside = |edge: f64| match pos.side {
            Side::At => edge <= pos.value,
            Side::Before => edge < pos.value,
        };
        let rel = (pos.value - self.lo[axis]) / (self.hi[axis] - self.lo[axis]) * n as f64;
        let mut k = if rel.is_nan() {
            0
        } else {
            rel.floor().clamp(0.0, (n - 1) as f64) as usize
        };
        while k > 0 && !inside(self.edge(axis, k)) {
            k -= 1;
        }
        while k + 1 < n && inside(self.edge(axis, k + 1)) {
            k += 1;
        }
        k
    }

    /// Flat index of the (clamped) cell containing `p`.
    pub fn cell_of(&self, p: &[f64]) -> usize {
        let idx: Vec<usize> = p
            .iter()
            .enumerate()
            .map(|(axis, &v)| self.axis_index(axis, TaggedCoord::at(v)))
            .collect();
        self.flat_index(&idx)
    }

    /// The same grid rescaled by `factor` (cell counts unchanged).
    pub fn scaled(&self, factor: f64) -> GridSpec {
        let scale = |p: &Point| Point(p.coords().iter().map(|v| v * factor).collect());
        GridSpec {
            lo: scale(&self.lo),
            hi: scale(&self.hi),
            cells: self.cells.clone(),
        }
    }

    fn check_point(&self, p: &[f64]) -> Result<(), GeometryError> {
        if p.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: p.len(),
            });
        }
        Ok(())
    }
}

/// Indicator of a set of grid cells.
///
/// Outside the grid window membership is extended by clamping to the nearest
/// cell, so half-spaces and upper sets keep their shape beyond the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRegion {
    grid: GridSpec,
    membership: Vec<bool>,
}

impl GridRegion {
    pub fn new(grid: GridSpec, membership: Vec<bool>) -> Result<Self, GeometryError> {
        if membership.len() != grid.n_cells() {
            return Err(GeometryError::MembershipLength {
                expected: grid.n_cells(),
                found: membership.len(),
            });
        }
        Ok(GridRegion { grid, membership })
    }

    /// A cell is a member iff its center satisfies `pred`.
    pub fn from_predicate(grid: GridSpec, pred: impl Fn(&[f64]) -> bool) -> Self {
        let membership = (0..grid.n_cells()).map(|i| pred(&grid.center(i))).collect();
        GridRegion { grid, membership }
    }

    pub fn empty(grid: GridSpec) -> Self {
        let n = grid.n_cells();
        GridRegion {
            grid,
            membership: vec![false; n],
        }
    }

    pub fn full(grid: GridSpec) -> Self {
        let n = grid.n_cells();
        GridRegion {
            grid,
            membership: vec![true; n],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn membership(&self) -> &[bool] {
        &self.membership
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.membership[flat]
    }

    pub fn contains_index(&self, idx: &[usize]) -> bool {
        self.membership[self.grid.flat_index(idx)]
    }

    /// Membership of an arbitrary point (clamped extension).
    pub fn contains_point(&self, p: &[f64]) -> bool {
        self.membership[self.grid.cell_of(p)]
    }

    /// Membership of a tagged position (clamped extension).
    pub fn contains_tagged(&self, p: &[TaggedCoord]) -> bool {
        let idx: Vec<usize> = p
            .iter()
            .enumerate()
            .map(|(axis, &c)| self.grid.axis_index(axis, c))
            .collect();
        self.contains_index(&idx)
    }

    /// True if any cell meeting the closed ℓ∞ ball of radius `eps` around
    /// `p` is a member.
    pub fn contains_point_near(&self, p: &[f64], eps: f64) -> bool {
        let ranges: Vec<(usize, usize)> = p
            .iter()
            .enumerate()
            .map(|(axis, &v)| {
                let a = self.grid.axis_index(axis, TaggedCoord::at(v - eps));
                let b = self.grid.axis_index(axis, TaggedCoord::at(v + eps));
                (a, b)
            })
            .collect();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            if self.contains_index(&idx) {
                return true;
            }
            let mut axis = idx.len();
            loop {
                if axis == 0 {
                    return false;
                }
                axis -= 1;
                if idx[axis] < ranges[axis].1 {
                    idx[axis] += 1;
                    break;
                }
                idx[axis] = ranges[axis].0;
            }
        }
    }

    pub fn count(&self) -> usize {
        self.membership.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.membership.iter().any(|&m| m)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.membership
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn complement(&self) -> GridRegion {
        GridRegion {
            grid: self.grid.clone(),
            membership: self.membership.iter().map(|m| !m).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &GridRegion,
        f: impl Fn(bool, bool) -> bool,
    ) -> Result<GridRegion, GeometryError> {
        if self.grid != other.grid {
            return Err(GeometryError::GridMismatch);
        }
        Ok(GridRegion {
            grid: self.grid.clone(),
            membership: self
                .membership
                .iter()
                .zip(&other.membership)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn union(&self, other: &GridRegion) -> Result<GridRegion, GeometryError> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &GridRegion) -> Result<GridRegion, GeometryError> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn is_subset_of(&self, other: &GridRegion) -> Result<bool, GeometryError> {
        if self.grid != other.grid {
            return Err(GeometryError::GridMismatch);
        }
        Ok(self
            .membership
            .iter()
            .zip(&other.membership)
            .all(|(&a, &b)| !a || b))
    }

    /// Grid analogue of the closure of the complement: the complement plus
    /// the member cells touching it.
    pub fn closure_of_complement(&self) -> GridRegion {
        let bd = boundary_of(self);
        GridRegion {
            grid: self.grid.clone(),
            membership: self
                .membership
                .iter()
                .zip(&bd.membership)
                .map(|(&m, &b)| !m || b)
                .collect(),
        }
    }

    /// The same membership on a grid rescaled by `factor`.
    pub fn rescaled(&self, factor: f64) -> GridRegion {
        GridRegion {
            grid: self.grid.scaled(factor),
            membership: self.membership.clone(),
        }
    }

    /// Mean of the member cell centers, or `None` when empty.
    pub fn centroid(&self) -> Option<Vec<f64>> {
        let mut acc = vec![0.0; self.grid.dim()];
        let mut n = 0usize;
        for i in self.members() {
            for (a, c) in acc.iter_mut().zip(self.grid.center(i)) {
                *a += c;
            }
            n += 1;
        }
        (n > 0).then(|| acc.into_iter().map(|a| a / n as f64).collect())
    }
}

/// Calls `f` with the flat indices of every grid line parallel to `axis`.
fn for_each_line(grid: &GridSpec, axis: usize, mut f: impl FnMut(&[usize])) {
    let n = grid.cells[axis];
    let inner: usize = grid.cells[axis + 1..].iter().product();
    let outer: usize = grid.cells[..axis].iter().product();
    let mut line = vec![0; n];
    for o in 0..outer {
        for i in 0..inner {
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = (o * n + k) * inner + i;
            }
            f(&line);
        }
    }
}

/// Cells whose closed axis-neighborhood holds both member and non-member
/// cells.
pub fn boundary_of(region: &GridRegion) -> GridRegion {
    let grid = &region.grid;
    let mut bd = vec![false; grid.n_cells()];
    for axis in 0..grid.dim() {
        for_each_line(grid, axis, |line| {
            for w in line.windows(2) {
                if region.membership[w[0]] != region.membership[w[1]] {
                    bd[w[0]] = true;
                    bd[w[1]] = true;
                }
            }
        });
    }
    GridRegion {
        grid: grid.clone(),
        membership: bd,
    }
}

/// Box dilation by `radius[axis]` cells per axis.
fn dilate_cells(region: &GridRegion, radius: &[usize]) -> GridRegion {
    let grid = &region.grid;
    let mut current = region.membership.clone();
    for (axis, &r) in radius.iter().enumerate() {
        if r == 0 {
            continue;
        }
        let mut next = current.clone();
        for_each_line(grid, axis, |line| {
            let n = line.len();
            let mut prefix = vec![0usize; n + 1];
            for (k, &flat) in line.iter().enumerate() {
                prefix[k + 1] = prefix[k] + current[flat] as usize;
            }
            for (k, &flat) in line.iter().enumerate() {
                let a = k.saturating_sub(r);
                let b = (k + r + 1).min(n);
                next[flat] = prefix[b] > prefix[a];
            }
        });
        current = next;
    }
    GridRegion {
        grid: grid.clone(),
        membership: current,
    }
}

fn radius_in_cells(grid: &GridSpec, eps: f64) -> Vec<usize> {
    (0..grid.dim())
        .map(|axis| {
            let ratio = eps / grid.cell_width(axis);
            // Absorb rounding so exact multiples of the width are not bumped up.
            (ratio - 1e-9).ceil().max(0.0) as usize
        })
        .collect()
}

/// ε-neighborhood (`epsilon > 0`) or ε-interior (`epsilon < 0`) in the ℓ∞
/// metric on cell centers. Radii that are not whole cells round outward, so
/// dilations never shrink and erosions never grow.
pub fn morph(region: &GridRegion, epsilon: f64) -> GridRegion {
    if epsilon == 0.0 {
        return region.clone();
    }
    let radius = radius_in_cells(&region.grid, epsilon.abs());
    if epsilon > 0.0 {
        dilate_cells(region, &radius)
    } else {
        dilate_cells(&region.complement(), &radius).complement()
    }
}

/// ℓ∞ distance (physical units) from each cell center to the nearest member
/// of `region`; `+∞` everywhere when the region is empty.
pub fn distance_to(region: &GridRegion) -> Vec<f64> {
    let grid = &region.grid;
    let mut dist: Vec<f64> = region
        .membership
        .iter()
        .map(|&m| if m { 0.0 } else { f64::INFINITY })
        .collect();
    for axis in 0..grid.dim() {
        let w = grid.cell_width(axis);
        let mut next = dist.clone();
        for_each_line(grid, axis, |line| {
            for (k, &flat) in line.iter().enumerate() {
                let mut best = f64::INFINITY;
                for (j, &other) in line.iter().enumerate() {
                    let step = k.abs_diff(j) as f64 * w;
                    best = best.min(step.max(dist[other]));
                }
                next[flat] = best;
            }
        });
        dist = next;
    }
    dist
}

/// Smallest `ε >= 0` (cell-center distance) with `a ⊆ morph(b, ε)`.
pub fn inclusion_gap(a: &GridRegion, b: &GridRegion) -> Result<f64, GeometryError> {
    if a.grid != b.grid {
        return Err(GeometryError::GridMismatch);
    }
    let dist = distance_to(b);
    Ok(a.members().map(|i| dist[i]).fold(0.0, f64::max))
}

impl GridSpec {
    /// Validates that `p` has this grid's dimension.
    pub fn validate_point(&self, p: &[f64]) -> Result<(), GeometryError> {
        self.check_point(p)
    }
}

//! Initial height functions: the wedge, rounded macroscopic profiles and
//! explicit staircases, all evaluated at tagged positions.

use serde::{Deserialize, Serialize};

use super::GrowthError;
use crate::geometry::{GridRegion, Side, TaggedCoord};
use crate::height::Height;
use crate::macroscopic::MacroProfile;

/// A monotone integer height function on `R^d` evaluated at tagged
/// positions: `(v, Before)` reads the left limit at `v` along that axis.
pub trait HeightProfile: Send + Sync {
    fn dim(&self) -> usize;

    fn value_at(&self, y: &[TaggedCoord]) -> Height;

    /// Coordinates in `[lo, hi]` on `axis` where the function may jump.
    fn breakpoints(&self, axis: usize, lo: f64, hi: f64) -> Vec<f64>;

    fn eval(&self, y: &[f64]) -> Height {
        let tagged: Vec<TaggedCoord> = y.iter().map(|&v| TaggedCoord::at(v)).collect();
        self.value_at(&tagged)
    }

    /// `sup{σ(w) : w < y strictly}`.
    fn left_limit(&self, y: &[f64]) -> Height {
        let tagged: Vec<TaggedCoord> = y.iter().map(|&v| TaggedCoord::before(v)).collect();
        self.value_at(&tagged)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutsideRule {
    /// `−∞` below the window's lower corner on any axis; beyond the upper
    /// corner the last cell is extended.
    MinusInfinityBelowClampElsewhere,
}

/// Piecewise-constant monotone field on left-closed, right-open cells.
///
/// Axis `i` has breakpoints `s_i^0 < … < s_i^m`; cell `k` is
/// `[s_i^k, s_i^{k+1})`, with the last cell extended past `s_i^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaircaseField {
    breakpoints: Vec<Vec<f64>>,
    values: Vec<Height>,
    outside: OutsideRule,
}

impl StaircaseField {
    pub fn new(breakpoints: Vec<Vec<f64>>, values: Vec<Height>) -> Result<Self, GrowthError> {
        if breakpoints.is_empty() {
            return Err(GrowthError::BadStaircase("no axes".into()));
        }
        for (axis, b) in breakpoints.iter().enumerate() {
            if b.len() < 2 || b.windows(2).any(|w| !(w[0] < w[1])) || b.iter().any(|v| !v.is_finite()) {
                return Err(GrowthError::BadStaircase(format!(
                    "axis {axis} needs at least two strictly increasing finite breakpoints"
                )));
            }
        }
        let field = StaircaseField {
            breakpoints,
            values,
            outside: OutsideRule::MinusInfinityBelowClampElsewhere,
        };
        if field.values.len() != field.n_cells() {
            return Err(GrowthError::BadStaircase(format!(
                "expected {} cell values, got {}",
                field.n_cells(),
                field.values.len()
            )));
        }
        field.check_monotone()?;
        Ok(field)
    }

    /// A single constant cell on the window `[lo, hi)`.
    pub fn constant(lo: &[f64], hi: &[f64], value: Height) -> Result<Self, GrowthError> {
        let bps = lo.iter().zip(hi).map(|(&a, &b)| vec![a, b]).collect();
        Self::new(bps, vec![value])
    }

    pub fn dim(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn axis_breakpoints(&self, axis: usize) -> &[f64] {
        &self.breakpoints[axis]
    }

    pub fn cells(&self) -> Vec<usize> {
        self.breakpoints.iter().map(|b| b.len() - 1).collect()
    }

    pub fn n_cells(&self) -> usize {
        self.cells().iter().product()
    }

    pub fn values(&self) -> &[Height] {
        &self.values
    }

    pub fn outside_rule(&self) -> OutsideRule {
        self.outside
    }

    pub fn window_lo(&self) -> Vec<f64> {
        self.breakpoints.iter().map(|b| b[0]).collect()
    }

    pub fn window_hi(&self) -> Vec<f64> {
        self.breakpoints.iter().map(|b| *b.last().unwrap()).collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.breakpoints)
            .fold(0, |acc, (&i, b)| acc * (b.len() - 1) + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let n = self.breakpoints[axis].len() - 1;
            idx[axis] = flat % n;
            flat /= n;
        }
        idx
    }

    /// `[lo, hi)` bounds of a cell.
    pub fn cell_bounds(&self, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let lo = idx
            .iter()
            .zip(&self.breakpoints)
            .map(|(&k, b)| b[k])
            .collect();
        let hi = idx
            .iter()
            .zip(&self.breakpoints)
            .map(|(&k, b)| b[k + 1])
            .collect();
        (lo, hi)
    }

    /// Cell index holding a tagged position, `None` below the window.
    pub fn axis_cell(&self, axis: usize, pos: TaggedCoord) -> Option<usize> {
        let b = &self.breakpoints[axis];
        let count = match pos.side {
            Side::At => b.partition_point(|&s| s <= pos.value),
            Side::Before => b.partition_point(|&s| s < pos.value),
        };
        if count == 0 {
            None
        } else {
            Some((count - 1).min(b.len() - 2))
        }
    }

    pub fn cell_of(&self, y: &[TaggedCoord]) -> Option<Vec<usize>> {
        y.iter()
            .enumerate()
            .map(|(axis, &c)| self.axis_cell(axis, c))
            .collect()
    }

    pub fn value(&self, idx: &[usize]) -> Height {
        self.values[self.flat_index(idx)]
    }

    fn check_monotone(&self) -> Result<(), GrowthError> {
        let cells = self.cells();
        for flat in 0..self.n_cells() {
            let idx = self.multi_index(flat);
            for axis in 0..self.dim() {
                if idx[axis] + 1 < cells[axis] {
                    let mut up = idx.clone();
                    up[axis] += 1;
                    if self.value(&up) < self.values[flat] {
                        return Err(GrowthError::NotMonotone);
                    }
                }
            }
        }
        Ok(())
    }

    /// Inserts `v` as a breakpoint on `axis` (no-op outside the open window
    /// or when already present). Returns the index of the cell starting at
    /// `v`, if any.
    pub fn refine(&mut self, axis: usize, v: f64) -> Option<usize> {
        let b = &self.breakpoints[axis];
        let pos = b.partition_point(|&s| s < v);
        if pos < b.len() && b[pos] == v {
            return (pos < b.len() - 1).then_some(pos);
        }
        if pos == 0 || pos == b.len() {
            return None;
        }
        let old_cells = self.cells();
        let mut new_cells = old_cells.clone();
        new_cells[axis] += 1;
        let total: usize = new_cells.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim()];
        for _ in 0..total {
            let mut old = idx.clone();
            if old[axis] >= pos {
                old[axis] -= 1;
            }
            values.push(self.value(&old));
            for a in (0..idx.len()).rev() {
                idx[a] += 1;
                if idx[a] < new_cells[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        self.breakpoints[axis].insert(pos, v);
        self.values = values;
        Some(pos)
    }

    /// Adds one to every cell with index `>= from` whose value is `level`.
    pub fn raise_level_from(&mut self, from: &[usize], level: Height) {
        for flat in 0..self.values.len() {
            if self.values[flat] != level {
                continue;
            }
            let idx = self.multi_index(flat);
            if idx.iter().zip(from).all(|(a, b)| a >= b) {
                self.values[flat] = level + 1;
            }
        }
    }
}

impl HeightProfile for StaircaseField {
    fn dim(&self) -> usize {
        self.breakpoints.len()
    }

    fn value_at(&self, y: &[TaggedCoord]) -> Height {
        match self.cell_of(y) {
            Some(idx) => self.value(&idx),
            None => Height::NegInf,
        }
    }

    fn breakpoints(&self, axis: usize, lo: f64, hi: f64) -> Vec<f64> {
        let b = &self.breakpoints[axis];
        b[..b.len() - 1]
            .iter()
            .copied()
            .filter(|&s| s >= lo && s <= hi)
            .collect()
    }
}

/// Finite descriptions of initial heights `σ(·, 0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// `0` on `{y ≥ corner}`, `−∞` elsewhere.
    Wedge { corner: Vec<f64> },
    /// `y ↦ ⌊n u₀(z/n)⌋` where `z` is `y` rounded down to the lattice of
    /// spacing `mesh`. For homogeneous `u₀` this is `⌊u₀(z)⌋`.
    RoundedMacro {
        profile: MacroProfile,
        n: f64,
        #[serde(default = "unit_mesh")]
        mesh: f64,
    },
    Staircase { field: StaircaseField },
}

fn unit_mesh() -> f64 {
    1.0
}

impl ProfileSpec {
    pub fn wedge(corner: Vec<f64>) -> Self {
        ProfileSpec::Wedge { corner }
    }

    pub fn rounded(profile: MacroProfile, n: f64) -> Self {
        ProfileSpec::RoundedMacro {
            profile,
            n,
            mesh: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), GrowthError> {
        match self {
            ProfileSpec::Wedge { corner } => {
                if corner.is_empty() || corner.iter().any(|v| !v.is_finite()) {
                    return Err(GrowthError::BadProfile("wedge corner must be finite".into()));
                }
            }
            ProfileSpec::RoundedMacro { profile, n, mesh } => {
                profile.validate()?;
                if !(*n > 0.0) || !(*mesh > 0.0) {
                    return Err(GrowthError::BadProfile("n and mesh must be positive".into()));
                }
            }
            ProfileSpec::Staircase { field } => field.check_monotone()?,
        }
        Ok(())
    }

    fn lattice_index(mesh: f64, pos: TaggedCoord) -> f64 {
        let r = pos.value / mesh;
        match pos.side {
            Side::At => r.floor(),
            Side::Before => r.ceil() - 1.0,
        }
    }
}

fn rounded_value(profile: &MacroProfile, n: f64, z: &[f64]) -> Height {
    let v = if profile.is_homogeneous() {
        profile.u0(z)
    } else {
        let scaled: Vec<f64> = z.iter().map(|v| v / n).collect();
        n * profile.u0(&scaled)
    };
    Height::floor_of(v)
}

impl HeightProfile for ProfileSpec {
    fn dim(&self) -> usize {
        match self {
            ProfileSpec::Wedge { corner } => corner.len(),
            ProfileSpec::RoundedMacro { profile, .. } => profile.dim(),
            ProfileSpec::Staircase { field } => field.dim(),
        }
    }

    fn value_at(&self, y: &[TaggedCoord]) -> Height {
        match self {
            ProfileSpec::Wedge { corner } => {
                let inside = y.iter().zip(corner).all(|(p, &c)| match p.side {
                    Side::At => p.value >= c,
                    Side::Before => p.value > c,
                });
                if inside {
                    Height::ZERO
                } else {
                    Height::NegInf
                }
            }
            ProfileSpec::RoundedMacro { profile, n, mesh } => {
                let z: Vec<f64> = y
                    .iter()
                    .map(|&p| Self::lattice_index(*mesh, p) * mesh)
                    .collect();
                rounded_value(profile, *n, &z)
            }
            ProfileSpec::Staircase { field } => field.value_at(y),
        }
    }

    fn breakpoints(&self, axis: usize, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            ProfileSpec::Wedge { corner } => {
                let c = corner[axis];
                if c >= lo && c <= hi {
                    vec![c]
                } else {
                    vec![]
                }
            }
            ProfileSpec::RoundedMacro { mesh, .. } => {
                let first = (lo / mesh).ceil() as i64;
                let last = (hi / mesh).floor() as i64;
                (first..=last).map(|k| k as f64 * mesh).collect()
            }
            ProfileSpec::Staircase { field } => field.breakpoints(axis, lo, hi),
        }
    }
}

/// `σ₀ + h·1_A`, for a region `A` given on a grid (clamped outside it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaisedProfile {
    base: ProfileSpec,
    region: GridRegion,
    h: i64,
    /// Per axis, grid edges across which membership changes somewhere.
    #[serde(skip)]
    edges: Vec<Vec<f64>>,
}

impl RaisedProfile {
    /// Builds `σ₀ + h·1_A` and checks that it is nondecreasing on the
    /// window `[lo, hi]`.
    pub fn new(
        base: ProfileSpec,
        region: GridRegion,
        h: i64,
        lo: &[f64],
        hi: &[f64],
    ) -> Result<Self, GrowthError> {
        if h < 1 {
            return Err(GrowthError::BadProfile("h must be a positive integer".into()));
        }
        if region.grid().dim() != base.dim() {
            return Err(GrowthError::DimensionMismatch {
                expected: base.dim(),
                found: region.grid().dim(),
            });
        }
        let edges = membership_edges(&region);
        let raised = RaisedProfile {
            base,
            region,
            h,
            edges,
        };
        check_monotone_on(&raised, lo, hi)?;
        Ok(raised)
    }

    pub fn base(&self) -> &ProfileSpec {
        &self.base
    }

    pub fn region(&self) -> &GridRegion {
        &self.region
    }

    pub fn h(&self) -> i64 {
        self.h
    }
}

fn membership_edges(region: &GridRegion) -> Vec<Vec<f64>> {
    let grid = region.grid();
    let mut edges = vec![Vec::new(); grid.dim()];
    for (axis, out) in edges.iter_mut().enumerate() {
        let mut change = vec![false; grid.cells[axis]];
        for flat in 0..grid.n_cells() {
            let idx = grid.multi_index(flat);
            if idx[axis] + 1 < grid.cells[axis] {
                let mut up = idx.clone();
                up[axis] += 1;
                if region.contains(flat) != region.contains_index(&up) {
                    change[idx[axis] + 1] = true;
                }
            }
        }
        *out = (1..grid.cells[axis])
            .filter(|&k| change[k])
            .map(|k| grid.edge(axis, k))
            .collect();
    }
    edges
}

impl HeightProfile for RaisedProfile {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value_at(&self, y: &[TaggedCoord]) -> Height {
        let v = self.base.value_at(y);
        if self.region.contains_tagged(y) {
            v + self.h
        } else {
            v
        }
    }

    fn breakpoints(&self, axis: usize, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = self.base.breakpoints(axis, lo, hi);
        let edges = if self.edges.is_empty() {
            membership_edges(&self.region)
        } else {
            self.edges.clone()
        };
        out.extend(edges[axis].iter().copied().filter(|&e| e >= lo && e <= hi));
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Checks monotonicity of a profile on `[lo, hi]` by evaluating it on the
/// product of its breakpoints, which covers every constancy cell.
pub fn check_monotone_on(
    profile: &dyn HeightProfile,
    lo: &[f64],
    hi: &[f64],
) -> Result<(), GrowthError> {
    let d = profile.dim();
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let mut v = profile.breakpoints(a, lo[a], hi[a]);
            v.push(lo[a]);
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let sizes: Vec<usize> = axes.iter().map(|v| v.len()).collect();
    let total: usize = sizes.iter().product();
    let flat_of = |idx: &[usize]| idx.iter().zip(&sizes).fold(0, |acc, (&i, &n)| acc * n + i);
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let y: Vec<f64> = (0..d).map(|a| axes[a][idx[a]]).collect();
        values.push(profile.eval(&y));
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < sizes[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    let mut idx = vec![0usize; d];
    for flat in 0..total {
        for a in 0..d {
            if idx[a] + 1 < sizes[a] {
                let mut up = idx.clone();
                up[a] += 1;
                if values[flat_of(&up)] < values[flat] {
                    return Err(GrowthError::NotMonotone);
                }
            }
        }
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < sizes[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(())
}

//! Pairs of height processes driven by one cloud, and their defect sets
//! `A(t) = {x : ζ(x, t) = σ(x, t) + h}`.

use rayon::join;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{boundary_of, GridRegion, GridSpec, TaggedCoord, TaggedCorner};
use crate::growth::{
    check_monotone_on, evaluate_lpp, evaluate_oracle, GrowthError, HeightProfile, ProfileSpec,
    Query, RaisedProfile, SearchBox,
};
use crate::height::Height;
use crate::poisson::PointCloud;

#[derive(Debug, Error, PartialEq)]
pub enum CouplingError {
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error("initial pair violates σ₀ ≤ ζ₀ ≤ σ₀ + h at {at:?}: σ₀ = {sigma}, ζ₀ = {zeta}")]
    InitialSandwich {
        at: Vec<f64>,
        sigma: Height,
        zeta: Height,
    },
    #[error("evolved pair violates the sandwich at cell {cell}: σ = {sigma}, ζ = {zeta}")]
    EvolvedSandwich {
        cell: usize,
        sigma: Height,
        zeta: Height,
    },
    #[error("maximizer characterizations of A(t) and its complement disagree at cell {cell}")]
    Complementarity { cell: usize },
    #[error("h must be a positive integer, got {0}")]
    BadH(i64),
}

/// The upper member of a coupled pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZetaProfile {
    /// `σ₀ + h·1_{A(0)}`.
    Raised(RaisedProfile),
    /// An independently constructed profile.
    Given(ProfileSpec),
}

impl HeightProfile for ZetaProfile {
    fn dim(&self) -> usize {
        match self {
            ZetaProfile::Raised(p) => p.dim(),
            ZetaProfile::Given(p) => p.dim(),
        }
    }

    fn value_at(&self, y: &[TaggedCoord]) -> Height {
        match self {
            ZetaProfile::Raised(p) => p.value_at(y),
            ZetaProfile::Given(p) => p.value_at(y),
        }
    }

    fn breakpoints(&self, axis: usize, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            ZetaProfile::Raised(p) => p.breakpoints(axis, lo, hi),
            ZetaProfile::Given(p) => p.breakpoints(axis, lo, hi),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoupledState {
    pub sigma: ProfileSpec,
    pub zeta: ZetaProfile,
    /// `A(0)` on its grid; for [`CoupledState::raised`] this defines `ζ₀`.
    pub defect0: GridRegion,
    pub h: i64,
}

impl CoupledState {
    /// `ζ₀ = σ₀ + h·1_{A(0)}`, rejected unless nondecreasing on `[lo, hi]`.
    pub fn raised(
        sigma: ProfileSpec,
        defect0: GridRegion,
        h: i64,
        lo: &[f64],
        hi: &[f64],
    ) -> Result<Self, CouplingError> {
        if h < 1 {
            return Err(CouplingError::BadH(h));
        }
        let zeta = RaisedProfile::new(sigma.clone(), defect0.clone(), h, lo, hi)?;
        Ok(CoupledState {
            sigma,
            zeta: ZetaProfile::Raised(zeta),
            defect0,
            h,
        })
    }

    /// Pairs two given profiles after checking monotonicity of both and the
    /// sandwich on every constancy cell of `[lo, hi]`.
    pub fn from_pair(
        sigma: ProfileSpec,
        zeta: ProfileSpec,
        defect0: GridRegion,
        h: i64,
        lo: &[f64],
        hi: &[f64],
    ) -> Result<Self, CouplingError> {
        if h < 1 {
            return Err(CouplingError::BadH(h));
        }
        sigma.validate()?;
        zeta.validate()?;
        check_monotone_on(&sigma, lo, hi)?;
        check_monotone_on(&zeta, lo, hi)?;
        check_sandwich(&sigma, &zeta, h, lo, hi)?;
        Ok(CoupledState {
            sigma,
            zeta: ZetaProfile::Given(zeta),
            defect0,
            h,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    /// Exact membership of a tagged corner in `A(0) = {ζ₀ = σ₀ + h}`.
    pub fn in_defect0(&self, y: &[TaggedCoord]) -> bool {
        self.zeta.value_at(y) == self.sigma.value_at(y) + self.h
    }
}

fn check_sandwich(
    sigma: &dyn HeightProfile,
    zeta: &dyn HeightProfile,
    h: i64,
    lo: &[f64],
    hi: &[f64],
) -> Result<(), CouplingError> {
    let d = sigma.dim();
    let joint = Refined {
        inner: sigma,
        extra: zeta,
    };
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let mut v = joint.breakpoints(a, lo[a], hi[a]);
            v.push(lo[a]);
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let total: usize = axes.iter().map(Vec::len).product();
    for flat in 0..total {
        let mut r = flat;
        let mut y = vec![0.0; d];
        for a in (0..d).rev() {
            y[a] = axes[a][r % axes[a].len()];
            r /= axes[a].len();
        }
        let (s, z) = (sigma.eval(&y), zeta.eval(&y));
        if !(s <= z && z <= s + h) {
            return Err(CouplingError::InitialSandwich {
                at: y,
                sigma: s,
                zeta: z,
            });
        }
    }
    Ok(())
}

/// `inner`'s values with the union of both profiles' breakpoints, so that
/// the oracle's corners also resolve where `extra` is constant.
struct Refined<'a> {
    inner: &'a dyn HeightProfile,
    extra: &'a dyn HeightProfile,
}

impl HeightProfile for Refined<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value_at(&self, y: &[TaggedCoord]) -> Height {
        self.inner.value_at(y)
    }

    fn breakpoints(&self, axis: usize, lo: f64, hi: f64) -> Vec<f64> {
        let mut v = self.inner.breakpoints(axis, lo, hi);
        v.extend(self.extra.breakpoints(axis, lo, hi));
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectSnapshot {
    pub t: f64,
    pub h: i64,
    pub grid: GridSpec,
    pub in_a: Vec<bool>,
    pub boundary: GridRegion,
    pub sigma: Vec<Height>,
    pub zeta: Vec<Height>,
}

impl DefectSnapshot {
    fn new(t: f64, h: i64, grid: &GridSpec, in_a: Vec<bool>, sigma: Vec<Height>, zeta: Vec<Height>) -> Self {
        let region = GridRegion::new(grid.clone(), in_a.clone()).expect("one flag per cell");
        DefectSnapshot {
            t,
            h,
            grid: grid.clone(),
            boundary: boundary_of(&region),
            in_a,
            sigma,
            zeta,
        }
    }

    pub fn region(&self) -> GridRegion {
        GridRegion::new(self.grid.clone(), self.in_a.clone()).expect("one flag per cell")
    }
}

fn center_queries(grid: &GridSpec, t: f64) -> Vec<Query> {
    grid.centers().into_iter().map(|x| Query::new(x, t)).collect()
}

fn check_evolved(sigma: &[Height], zeta: &[Height], h: i64) -> Result<(), CouplingError> {
    for (cell, (&s, &z)) in sigma.iter().zip(zeta).enumerate() {
        if !(s <= z && z <= s + h) {
            return Err(CouplingError::EvolvedSandwich {
                cell,
                sigma: s,
                zeta: z,
            });
        }
    }
    Ok(())
}

/// Evolves both members at the cell centers of `grid` and reads off `A(t)`.
pub fn couple_evolve(
    state: &CoupledState,
    cloud: &PointCloud,
    grid: &GridSpec,
    t: f64,
    search_box: &SearchBox,
) -> Result<DefectSnapshot, CouplingError> {
    let queries = center_queries(grid, t);
    let (s, z) = join(
        || evaluate_lpp(&state.sigma, cloud, &queries, search_box),
        || evaluate_lpp(&state.zeta, cloud, &queries, search_box),
    );
    let (s, z) = (s?.values, z?.values);
    check_evolved(&s, &z, state.h)?;
    let in_a = s.iter().zip(&z).map(|(&s, &z)| z == s + state.h).collect();
    Ok(DefectSnapshot::new(t, state.h, grid, in_a, s, z))
}

/// `A(t)` as the set of `x` where `σ(x, t)` has a maximizer in `A(0)`; for
/// `h = 1` its complement is recomputed from `ζ`'s maximizers in `A(0)ᶜ`.
pub fn defect_from_maximizers(
    state: &CoupledState,
    cloud: &PointCloud,
    grid: &GridSpec,
    t: f64,
    search_box: &SearchBox,
) -> Result<DefectSnapshot, CouplingError> {
    let queries = center_queries(grid, t);
    let sigma_view = Refined {
        inner: &state.sigma,
        extra: &state.zeta,
    };
    let zeta_view = Refined {
        inner: &state.zeta,
        extra: &state.sigma,
    };
    let (s, z) = join(
        || evaluate_oracle(&sigma_view, cloud, &queries, search_box),
        || evaluate_oracle(&zeta_view, cloud, &queries, search_box),
    );
    let (s, z) = (s?, z?);
    check_evolved(&s.values, &z.values, state.h)?;
    let hits = |ys: &[TaggedCorner], inside: bool| {
        ys.iter().any(|y| state.in_defect0(&y.coords) == inside)
    };
    let in_a: Vec<bool> = s.maximizers.iter().map(|ys| hits(ys, true)).collect();
    if state.h == 1 {
        for (cell, ys) in z.maximizers.iter().enumerate() {
            if hits(ys, false) == in_a[cell] {
                return Err(CouplingError::Complementarity { cell });
            }
        }
    }
    Ok(DefectSnapshot::new(t, state.h, grid, in_a, s.values, z.values))
}

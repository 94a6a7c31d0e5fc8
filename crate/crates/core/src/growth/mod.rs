//! The microscopic height process.
//!
//! Three evaluators of `σ(x, t) = sup_{y ≤ x} {σ₀(y) + H((y, 0), (x, t))}`
//! that must agree exactly: the last-passage recursion ([`evaluate_lpp`]),
//! a brute candidate-corner scan ([`evaluate_oracle`]), and the event-driven
//! dynamics ([`simulate_event_driven`]). Jump regions and the generator live
//! in [`jump`].

pub mod event;
pub mod jump;
pub mod lpp;
pub mod oracle;
pub mod profile;

use serde::{Deserialize, Serialize};

pub use event::{run_event_driven, simulate_event_driven, Snapshot};
pub use jump::{generator_apply, jump_region, JumpRegion};
pub use lpp::evaluate_lpp;
pub use oracle::evaluate_oracle;
pub use profile::{
    check_monotone_on, HeightProfile, OutsideRule, ProfileSpec, RaisedProfile, StaircaseField,
};

use crate::geometry::{TaggedCoord, TaggedCorner};
use crate::height::Height;
use crate::macroscopic::MacroError;
use crate::poisson::PointCloud;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GrowthError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("query {index} lies outside the search box")]
    QueryOutsideBox { index: usize },
    #[error("query {index} at time {t} is outside the cloud's sampled time range (0, {t_max}]")]
    QueryTimeOutOfRange { index: usize, t: f64, t_max: f64 },
    #[error("cloud does not cover the search box")]
    CloudDoesNotCover,
    #[error("profile has unbounded level sets; only wedge-class profiles can be simulated")]
    UnboundedLevelSets,
    #[error("search box too small: query {index} changed from {small} to {doubled} when doubled")]
    SearchBoxTooSmall {
        index: usize,
        small: Height,
        doubled: Height,
    },
    #[error("height function is not nondecreasing")]
    NotMonotone,
    #[error("malformed staircase: {0}")]
    BadStaircase(String),
    #[error("invalid profile: {0}")]
    BadProfile(String),
    #[error(transparent)]
    Macro(#[from] MacroError),
}

/// A space point and a time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub x: Vec<f64>,
    pub t: f64,
}

impl Query {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        Query { x, t }
    }
}

/// Restricts the supremum to corners `y` with `lower ≤ y ≤ upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lower: TaggedCorner,
    pub upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: TaggedCorner, upper: Vec<f64>) -> Self {
        SearchBox { lower, upper }
    }

    /// `lower` tagged `At`.
    pub fn at(lower: &[f64], upper: &[f64]) -> Self {
        SearchBox::new(TaggedCorner::at(lower), upper.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.upper.len()
    }

    /// Same upper corner, lower corner pushed out to double the extent.
    pub fn doubled(&self) -> SearchBox {
        let coords = self
            .lower
            .coords
            .iter()
            .zip(&self.upper)
            .map(|(c, &u)| TaggedCoord {
                value: u - 2.0 * (u - c.value),
                side: c.side,
            })
            .collect();
        SearchBox {
            lower: TaggedCorner::new(coords),
            upper: self.upper.clone(),
        }
    }
}

/// Heights at a list of queries with, per query, lower corners attaining
/// the supremum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolvedHeights {
    pub queries: Vec<Query>,
    pub values: Vec<Height>,
    pub maximizers: Vec<Vec<TaggedCorner>>,
    pub search_box: SearchBox,
}

/// Which evaluator to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluator {
    Lpp,
    Oracle,
}

pub fn evaluate(
    evaluator: Evaluator,
    profile: &dyn HeightProfile,
    cloud: &PointCloud,
    queries: &[Query],
    search_box: &SearchBox,
) -> Result<EvolvedHeights, GrowthError> {
    match evaluator {
        Evaluator::Lpp => evaluate_lpp(profile, cloud, queries, search_box),
        Evaluator::Oracle => evaluate_oracle(profile, cloud, queries, search_box),
    }
}

/// Evaluates with the given box and with the doubled box, failing if any
/// value moves. The cloud must cover the doubled box.
pub fn validate_search_box(
    evaluator: Evaluator,
    profile: &dyn HeightProfile,
    cloud: &PointCloud,
    queries: &[Query],
    search_box: &SearchBox,
) -> Result<EvolvedHeights, GrowthError> {
    let doubled = search_box.doubled();
    let big = evaluate(evaluator, profile, cloud, queries, &doubled)?;
    let small = evaluate(evaluator, profile, cloud, queries, search_box)?;
    for (index, (a, b)) in small.values.iter().zip(&big.values).enumerate() {
        if a != b {
            return Err(GrowthError::SearchBoxTooSmall {
                index,
                small: *a,
                doubled: *b,
            });
        }
    }
    Ok(small)
}

/// Shared argument checks; returns the largest query time.
pub(crate) fn check_inputs(
    profile: &dyn HeightProfile,
    cloud: &PointCloud,
    queries: &[Query],
    sb: &SearchBox,
) -> Result<f64, GrowthError> {
    let d = profile.dim();
    for found in [cloud.dim().saturating_sub(1), sb.lower.dim(), sb.upper.len()] {
        if found != d {
            return Err(GrowthError::DimensionMismatch { expected: d, found });
        }
    }
    let t_lo = cloud.lower()[d];
    let t_hi = cloud.upper()[d];
    let lower_vals = sb.lower.values();
    if t_lo > 0.0 || !cloud.covers(&lower_vals, &sb.upper) {
        return Err(GrowthError::CloudDoesNotCover);
    }
    let mut t_max: f64 = 0.0;
    for (index, q) in queries.iter().enumerate() {
        if q.x.len() != d {
            return Err(GrowthError::DimensionMismatch {
                expected: d,
                found: q.x.len(),
            });
        }
        let inside = q
            .x
            .iter()
            .zip(&sb.upper)
            .zip(&sb.lower.coords)
            .all(|((&x, &u), c)| x <= u && c.value <= x);
        if !inside {
            return Err(GrowthError::QueryOutsideBox { index });
        }
        if !(q.t >= 0.0 && q.t <= t_hi) {
            return Err(GrowthError::QueryTimeOutOfRange {
                index,
                t: q.t,
                t_max: t_hi,
            });
        }
        t_max = t_max.max(q.t);
    }
    Ok(t_max)
}

/// Cloud points that can appear in a chain for some query: above the
/// search box lower corner, below its upper corner, at times `≤ t_max`.
pub(crate) fn participants(cloud: &PointCloud, sb: &SearchBox, t_max: f64) -> Vec<f64> {
    let d = sb.dim();
    let mut out = Vec::new();
    for p in cloud.points() {
        let space = &p[..d];
        if p[d] <= t_max
            && sb.lower.admits(space, None)
            && space.iter().zip(&sb.upper).all(|(a, b)| a <= b)
        {
            out.extend_from_slice(p);
        }
    }
    out
}

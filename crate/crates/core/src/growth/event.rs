//! Event-driven graphical dynamics: at a cloud point `(y, s)` every `w ≥ y`
//! with `σ(w) = σ(y)` goes up by one; infinite `σ(y)` leaves the field alone.

use super::{GrowthError, HeightProfile, ProfileSpec, StaircaseField};
use crate::height::Height;
use crate::poisson::PointCloud;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: StaircaseField,
}

/// The starting staircase for a wedge-class profile on the window `[lo, hi)`.
pub fn initial_field(
    profile: &ProfileSpec,
    window: (&[f64], &[f64]),
) -> Result<StaircaseField, GrowthError> {
    match profile {
        ProfileSpec::Wedge { corner } => {
            let hi = window.1;
            if corner.len() != hi.len() {
                return Err(GrowthError::DimensionMismatch {
                    expected: corner.len(),
                    found: hi.len(),
                });
            }
            StaircaseField::constant(corner, hi, Height::ZERO)
        }
        ProfileSpec::Staircase { field } => Ok(field.clone()),
        ProfileSpec::RoundedMacro { .. } => Err(GrowthError::UnboundedLevelSets),
    }
}

/// Runs the dynamics up to `horizon`, calling `observer` at time 0 and after
/// every event that changed the field. Returns the final field.
pub fn run_event_driven(
    profile: &ProfileSpec,
    cloud: &PointCloud,
    window: (&[f64], &[f64]),
    horizon: f64,
    mut observer: impl FnMut(f64, &StaircaseField),
) -> Result<StaircaseField, GrowthError> {
    let mut field = initial_field(profile, window)?;
    let d = field.dim();
    if cloud.dim() != d + 1 || window.0.len() != d {
        return Err(GrowthError::DimensionMismatch {
            expected: d + 1,
            found: cloud.dim(),
        });
    }
    let lo = field.window_lo();
    let hi = field.window_hi();
    if !cloud.covers(&lo, &hi) || cloud.upper()[d] < horizon || cloud.lower()[d] > 0.0 {
        return Err(GrowthError::CloudDoesNotCover);
    }
    let in_window = |y: &[f64]| {
        (0..d).all(|a| y[a] >= lo[a] && y[a] < hi[a] && y[a] >= window.0[a] && y[a] < window.1[a])
    };

    let mut events: Vec<&[f64]> = cloud.points().filter(|p| p[d] <= horizon).collect();
    events.sort_by(|a, b| a[d].total_cmp(&b[d]));
    observer(0.0, &field);
    for p in events {
        let y = &p[..d];
        if !in_window(y) {
            continue;
        }
        let level = field.eval(y);
        if !level.is_finite() {
            continue;
        }
        let from: Vec<usize> = (0..d)
            .map(|a| field.refine(a, y[a]).expect("y lies inside the open window"))
            .collect();
        field.raise_level_from(&from, level);
        observer(p[d], &field);
    }
    Ok(field)
}

/// [`run_event_driven`] collecting a snapshot at time 0 and after each
/// effective event.
pub fn simulate_event_driven(
    profile: &ProfileSpec,
    cloud: &PointCloud,
    window: (&[f64], &[f64]),
    horizon: f64,
) -> Result<Vec<Snapshot>, GrowthError> {
    let mut out = Vec::new();
    run_event_driven(profile, cloud, window, horizon, |time, field| {
        out.push(Snapshot {
            time,
            field: field.clone(),
        })
    })?;
    Ok(out)
}

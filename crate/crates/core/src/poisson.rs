//! Reproducible homogeneous Poisson point processes in boxes.
//!
//! Every cloud is a pure function of `(box, rate, seed)` and the generator
//! named by [`RNG_ID`]. Replica `r` of an experiment should draw from
//! `mix(seed, r)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// ChaCha12 seeded through `SeedableRng::seed_from_u64`, counts drawn with
/// `rand_distr::Poisson`, coordinates as `hi - u * (hi - lo)`.
pub const RNG_ID: &str = "chacha12/splitmix64-mix/v1";

/// Collision resampling gives up after this many attempts.
const MAX_RETRIES: u64 = 16;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PoissonError {
    #[error("rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("box corners must have the same positive dimension")]
    BadBox,
    #[error("box corner has a non-finite coordinate")]
    NonFiniteBox,
    #[error("point {index} lies outside the half-open box")]
    OutsideBox { index: usize },
    #[error("coordinate collision on axis {axis}")]
    Collision { axis: usize },
    #[error("point list length is not a multiple of the dimension")]
    Ragged,
    #[error("could not draw a collision-free cloud in {0} attempts")]
    RetriesExhausted(u64),
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of substream `r` from a master seed.
pub fn mix(seed: u64, r: u64) -> u64 {
    splitmix64(seed ^ splitmix64(r))
}

pub fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Poisson-distributed count with the given mean (0 for mean 0).
pub fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    dist.sample(rng) as usize
}

/// Uniform on the half-open interval `(lo, hi]`.
pub fn uniform_open_closed<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    loop {
        let u: f64 = rng.random();
        let x = hi - u * (hi - lo);
        if x > lo {
            return x;
        }
    }
}

/// Points of a homogeneous Poisson process in the box `(lower, upper]`.
///
/// For space-time clouds the last coordinate is time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    lower: Point,
    upper: Point,
    rate: f64,
    seed: u64,
    rng_id: String,
}

/// JSON sidecar describing a cloud dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudMeta {
    pub lower: Point,
    pub upper: Point,
    pub rate: f64,
    pub seed: u64,
    pub rng_id: String,
}

fn check_box(lower: &Point, upper: &Point) -> Result<(), PoissonError> {
    if lower.dim() == 0 || lower.dim() != upper.dim() {
        return Err(PoissonError::BadBox);
    }
    if lower
        .coords()
        .iter()
        .chain(upper.coords())
        .any(|v| !v.is_finite())
    {
        return Err(PoissonError::NonFiniteBox);
    }
    Ok(())
}

fn first_collision(coords: &[f64], dim: usize) -> Option<usize> {
    let n = coords.len() / dim;
    let mut column = Vec::with_capacity(n);
    for axis in 0..dim {
        column.clear();
        column.extend((0..n).map(|i| coords[i * dim + axis]));
        column.sort_by(f64::total_cmp);
        if column.windows(2).any(|w| w[0] == w[1]) {
            return Some(axis);
        }
    }
    None
}

/// Samples a rate-`rate` Poisson process in `(lower, upper]`.
///
/// A box with zero (or negative) extent on some axis gives an empty cloud.
pub fn sample(
    lower: &Point,
    upper: &Point,
    rate: f64,
    seed: u64,
) -> Result<PointCloud, PoissonError> {
    check_box(lower, upper)?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(PoissonError::InvalidRate(rate));
    }
    let dim = lower.dim();
    let extents: Vec<f64> = (0..dim).map(|i| upper[i] - lower[i]).collect();
    let volume: f64 = if extents.iter().any(|&e| e <= 0.0) {
        0.0
    } else {
        extents.iter().product()
    };

    for attempt in 0..MAX_RETRIES {
        let stream = if attempt == 0 { seed } else { mix(seed, attempt) };
        let mut rng = rng_from_seed(stream);
        let count = poisson_count(&mut rng, rate * volume);
        let mut coords = Vec::with_capacity(count * dim);
        for _ in 0..count {
            for axis in 0..dim {
                coords.push(uniform_open_closed(&mut rng, lower[axis], upper[axis]));
            }
        }
        if first_collision(&coords, dim).is_none() {
            return Ok(PointCloud {
                dim,
                coords,
                lower: lower.clone(),
                upper: upper.clone(),
                rate,
                seed,
                rng_id: RNG_ID.to_string(),
            });
        }
    }
    Err(PoissonError::RetriesExhausted(MAX_RETRIES))
}

impl PointCloud {
    /// Builds a cloud from explicit points, checking box membership and
    /// per-axis distinctness.
    pub fn from_points(
        lower: Point,
        upper: Point,
        points: &[Vec<f64>],
        rate: f64,
        seed: u64,
    ) -> Result<PointCloud, PoissonError> {
        check_box(&lower, &upper)?;
        let dim = lower.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(PoissonError::Ragged);
            }
            let inside = (0..dim).all(|a| p[a] > lower[a] && p[a] <= upper[a]);
            if !inside {
                return Err(PoissonError::OutsideBox { index });
            }
            coords.extend_from_slice(p);
        }
        if let Some(axis) = first_collision(&coords, dim) {
            return Err(PoissonError::Collision { axis });
        }
        Ok(PointCloud {
            dim,
            coords,
            lower,
            upper,
            rate,
            seed,
            rng_id: RNG_ID.to_string(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// All coordinates, point-major.
    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng_id(&self) -> &str {
        &self.rng_id
    }

    pub fn meta(&self) -> CloudMeta {
        CloudMeta {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            rate: self.rate,
            seed: self.seed,
            rng_id: self.rng_id.clone(),
        }
    }

    /// Restriction to the sub-box `(lower, upper]` (intersected with the
    /// cloud's own box).
    pub fn restrict(&self, lower: &Point, upper: &Point) -> PointCloud {
        let lo: Vec<f64> = (0..self.dim)
            .map(|a| lower[a].max(self.lower[a]))
            .collect();
        let hi: Vec<f64> = (0..self.dim)
            .map(|a| upper[a].min(self.upper[a]))
            .collect();
        let mut coords = Vec::new();
        for p in self.points() {
            if (0..self.dim).all(|a| p[a] > lo[a] && p[a] <= hi[a]) {
                coords.extend_from_slice(p);
            }
        }
        PointCloud {
            dim: self.dim,
            coords,
            lower: Point::from(lo),
            upper: Point::from(hi),
            rate: self.rate,
            seed: self.seed,
            rng_id: self.rng_id.clone(),
        }
    }

    /// Whether the cloud's box contains the closed box `[lower, upper]`
    /// minus its lower faces. Shorter corners check only the leading axes.
    pub fn covers(&self, lower: &[f64], upper: &[f64]) -> bool {
        (0..lower.len().min(upper.len()).min(self.dim)).all(|a| self.lower[a] <= lower[a] && self.upper[a] >= upper[a])
    }
}

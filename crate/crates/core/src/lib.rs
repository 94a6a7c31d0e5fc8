//! Simulation and verification toolkit for a multidimensional Poissonian
//! interface growth model.
//!
//! * [`poisson`] samples reproducible space-time Poisson clouds.
//! * [`chain`] computes heights of the random partial order (longest
//!   strictly increasing chains) and the constants `c_ν`.
//! * [`growth`] evolves integer height functions three ways: the
//!   last-passage recursion, a candidate-corner oracle for the variational
//!   formula, and the event-driven graphical dynamics.
//! * [`macroscopic`] holds the shape function, the velocity, and Hopf-Lax
//!   solutions of the deterministic limit.
//! * [`coupling`] tracks defect sets of coupled processes.
//! * [`hammersley`] is the one-dimensional Hammersley process and its
//!   random two-dimensional initial fields.
//! * [`io`] reads and writes the CSV/JSON artifact formats.

pub mod chain;
pub mod coupling;
pub mod geometry;
pub mod growth;
pub mod hammersley;
pub mod height;
pub mod io;
pub mod macroscopic;
pub mod poisson;

pub use geometry::{GridRegion, GridSpec, Point, Side, TaggedCoord, TaggedCorner};
pub use height::Height;
pub use poisson::{PointCloud, RNG_ID};

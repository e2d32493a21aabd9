//! Corner Cantor sets in `R^d`, the Riesz transforms of their natural
//! measures, martingale decompositions, stopping-scale combinatorics and
//! Wolff-potential capacity estimates.
//!
//! Geometry and densities live in [`geometry`], quadrature in [`quadrature`],
//! kernel sums in [`riesz`]. [`experiment`] turns a JSON configuration into
//! CSV, JSON and SVG artifacts.

pub mod error;
pub mod experiment;
pub mod geometry;
pub mod lemmas;
pub mod martingale;
pub mod quadrature;
pub mod riesz;
pub mod stopping;
pub mod sum;
pub mod wolff;

pub use error::{Error, Result};
pub use geometry::{build_profile, CantorParams, CubeId, DensityProfile};
pub use quadrature::{atomize, ball_mass, AtomSet};
pub use riesz::{eval_brute, eval_treecode, KernelSpec, Targets, TreeCodeConfig, VecField};
pub use stopping::{Classification, StopConfig};

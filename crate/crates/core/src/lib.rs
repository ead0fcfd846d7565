//! Discrete toolkit for two-weight Orlicz bump conditions and commutators
//! of truncated Calderón–Zygmund operators on a uniform 1-D grid.
//!
//! Data-parallel loops go through [`exec`]; build without the default
//! `parallel` feature (or call [`exec::sequential`]) for a single-threaded
//! run. Both paths produce bit-identical results.

pub mod builders;
pub mod compactness;
pub mod error;
pub mod exec;
pub mod grid;
pub mod linalg;
pub mod operators;
pub mod orlicz;
pub mod weights;

pub use builders::{Builder, Profile};
pub use error::{Error, Result};
pub use grid::{average, dyadic_cubes, lp_norm_weighted, Cube, CubeFamily, Grid, GridFunction};
pub use operators::{Hilbert, Kernel, KernelSpec, TruncationSpec};
pub use orlicz::{bmo_norm, orlicz_average, YoungFunction};
pub use weights::{BumpPreset, BumpReport, BumpSpec, WeightPair};

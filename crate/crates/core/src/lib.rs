//! Convex-body sparse domination laboratory.
//!
//! The crate discretizes the objects of convex-body sparse domination for
//! rough singular integrals on uniform grids in dimension one and two:
//!
//! * [`grid`]: grids, vector-valued grid functions, L^p averages, maximal
//!   operators;
//! * [`dyadic`]: dyadic cubes, stopping collections, sparse collections and
//!   their exact verifiers;
//! * [`convexbody`]: L^p convex bodies via support functions, Minkowski dot
//!   products;
//! * [`johnell`]: John ellipsoids and the coordinate decomposition with its
//!   `n^{3/2}` inequality;
//! * [`kernels`]: rough homogeneous kernels, truncated forms, `T_Ω`,
//!   commutators, Ω-norms, Bochner–Riesz means;
//! * [`domination`]: the recursive sparse-collection builder and sparse forms;
//! * [`weights`]: matrix A_t constants, weighted norms, bound audits and the
//!   scalar Bloom-type quantities.

pub mod convexbody;
pub mod dyadic;
pub mod domination;
pub mod error;
pub mod grid;
pub mod johnell;
pub mod kernels;
pub mod linalg;
pub mod rng;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{CellMask, CubeRegion, Grid, GridFunction};

/// Crate version, embedded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Numerical laboratory for generalized Riesz means of multiple Fourier
//! series and integrals.
//!
//! The crate is organized bottom-up:
//!
//! * [`distance`]: homogeneous distance functions and their cospheres.
//! * [`spectral`]: torus grids, coefficient boxes, FFT synthesis/analysis,
//!   `L^p` and weak `L^{p,∞}` norms, and the `SLAB` binary container.
//! * [`riesz`]: Riesz means on the torus and on `ℝ^d`, the edge-localized
//!   means, the subordination identity check and the transplantation sum.
//! * [`strong`]: `q`-strong means, their supremum over a `T`-ladder and the
//!   density-set construction for almost convergence.
//! * [`decomp`]: Littlewood–Paley pieces, ring and cap systems, kernel tiles,
//!   Whitney cubes and the Calderón–Zygmund profile.
//! * [`sharpness`]: plate test functions and the exponent scan.
//! * [`atoms`]: Hardy-space atoms and maximal-operator scaling scans.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise. Every
//! reduction is performed sequentially over results collected in index
//! order, so outputs do not depend on the thread count.

pub mod atoms;
pub mod decomp;
pub mod distance;
mod error;
pub mod fit;
pub mod jet;
pub mod par;
pub mod quad;
pub mod riesz;
pub mod sharpness;
pub mod smooth;
pub mod special;
pub mod spectral;
pub mod strong;

pub use error::{Error, Result};

pub use num_complex::Complex64;

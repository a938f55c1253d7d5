//! Isotropy-preserving planar deformations.
//!
//! * [`profile`], [`spiral`]: radial profiles `(f, g, h)` and the explicit
//!   spiral maps `R = √h`, `Θ = ±θ + Θ̄(r)` they determine.
//! * [`polar_map`], [`analysis`]: polar maps, their partials, residuals of
//!   the isotropy equations and the spiral classifier.
//! * [`geometry`]: pushforward areas and lengths under rotations.
//! * [`field`], [`euler`], [`experiment`]: randomized spectral fields,
//!   cubical Euler characteristics of excursion sets and the Monte Carlo
//!   weak-isotropy test.

// `!(x > 0.0)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod euler;
pub mod experiment;
pub mod field;
pub mod geometry;
pub mod interp;
pub mod polar_map;
pub mod profile;
pub mod quadrature;
pub mod spiral;

pub use analysis::{
    classify_spiral, extract_fgh, fgh_residuals, hyperbolic_residuals, partials, phi_decomposition, polarform_det,
    PolarGrid, Scheme, SpiralVerdict,
};
pub use error::{Error, Result};
pub use euler::{euler_characteristic, BinaryGrid};
pub use experiment::{
    area_length_fit, deformed_excursion, mean_euler, weak_isotropy_test, EulerEstimate, IsotropyReport,
};
pub use field::{sample_field, FieldSample, RadialLaw, SpectralFieldSpec};
pub use geometry::{pushforward_area, pushforward_length, rotation_invariance_report, PlanarMap, Rect, Segment, Shape};
pub use polar_map::{Partials, PolarMap, SampledMap};
pub use profile::{validate_profile, Condition, ProfileSource, RadialProfile, ValidationReport};
pub use spiral::{build_spiral, theta_bar, Sign, SpiralSpec, SpiralSpecFile};

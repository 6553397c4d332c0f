//! Disparity estimation for 4D light fields.
//!
//! Three estimators share the same [`LightField`] container: a closed-form
//! least-squares gradient solver ([`lsg`]), a variance plane sweep
//! ([`sweep`]) and an epipolar-plane kernel-density estimator with
//! fine-to-coarse hole filling ([`epi`]). [`refine`] holds the filters,
//! fusion and energy-based refinement; [`eval`] the metrics and benchmark
//! drivers; [`io`] dataset ingestion, PFM/PNG writers and a synthetic scene
//! generator used as ground truth.

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod epi;
pub mod error;
pub mod eval;
pub mod gradients;
pub mod io;
pub mod lightfield;
pub mod lsg;
pub mod maps;
pub mod pyramid;
pub mod refine;
pub mod sampling;
pub mod shear;
pub mod sweep;

pub use error::{Error, Result};
pub use gradients::{gradients, GradientField};
pub use lightfield::{center_view, uniform_disparities, LightField, SceneMeta};
pub use maps::{ConfidenceMap, CostVolume, DisparityMap};
pub use pyramid::{pyramid_down, upsample_disparity};
pub use shear::shear;

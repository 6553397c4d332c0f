//! Post-processing: median and joint bilateral filtering, hole filling,
//! weighted fusion of several estimates and energy-based refinement.

mod bilateral;
mod energy;
mod fill;
mod fusion;
mod median;

pub use bilateral::bilateral_filter;
pub use energy::{
    charbonnier, charbonnier_grad, energy_refine, energy_refine_traced, EnergyOutcome, EnergyParams,
};
pub use fill::fill_nearest;
pub use fusion::{fuse_weighted, FusionWeights};
pub use median::{median_filter_3x3, median_filter_valid};

//! Dataset ingestion, map writers and the synthetic scene generator.

pub mod pfm;
pub mod png;
pub mod scene;
pub mod synth;

pub use pfm::{read_disparity_pfm, read_pfm, write_disparity_pfm, write_pfm};
pub use png::{read_view_png, write_gray_png, write_view_png};
pub use scene::{load_lightfield, save_scene, SceneConfig};
pub use synth::{synth_scene, Layer, Region, SynthSpec, TextureSpec};

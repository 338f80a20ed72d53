//! Post-segmentation analysis of co-registered 3D tumor volumes.
//!
//! The crate fuses per-model probability maps into NEH masks, scores
//! segmentation agreement (Dice, Jaccard, HD95, Surface Dice), builds
//! peri-enhancing rim shells with masked perfusion statistics, measures the
//! spatial relation between preoperative NEH and recurrence, and runs
//! sign-flip permutation tests and one-way ANOVA on the results.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar type for the common `f64` and `f32` cases.

pub mod cli;
pub mod error;
pub mod fusion;
pub mod morphology;
pub mod phantom;
pub mod rng;
pub mod scalar;
pub mod segmetrics;
pub mod spatial;
pub mod stats;
pub mod volume;

pub use error::{Error, Result};
pub use scalar::Real;
pub use volume::{
    assert_geometry_match, label_mask, load_volume, masked_stats, save_volume, BinaryMask,
    LabelVolume, LoadedVolume, Region, VolumeGeometry,
};

pub type ScalarVolume64 = volume::ScalarVolume<f64>;
pub type ScalarVolume32 = volume::ScalarVolume<f32>;
pub type ProbabilityVolume64 = volume::ProbabilityVolume<f64>;
pub type ProbabilityVolume32 = volume::ProbabilityVolume<f32>;
pub type MaskedStats64 = volume::MaskedStats<f64>;
pub type DistanceField64 = morphology::DistanceField<f64>;
pub type DistanceField32 = morphology::DistanceField<f32>;
pub type RegionMetrics64 = segmetrics::RegionMetrics<f64>;
pub type SpatialMetrics64 = spatial::SpatialMetrics<f64>;
pub type PermutationResult64 = stats::PermutationResult<f64>;

/// Tool version recorded in provenance documents.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Object-aware crop sampling for contrastive learning views.
//!
//! A heatmap is thresholded into a bounding box; crops are then placed with
//! their centers drawn from a U-shaped Beta(alpha, alpha) law inside that box,
//! so every view touches the object while pairs of views stay diverse. The
//! crate also carries a seeded Monte-Carlo harness that measures how often
//! pairs miss the object, how similar the two views are and how much of the
//! object they cover.
//!
//! Geometry, heatmaps and the samplers are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below fix `f64`. The simulator and metrics work in
//! `f64`.

pub mod config;
pub mod error;
pub mod geometry;
pub mod heatmap;
pub mod metrics;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod schedule;
pub mod simulator;
pub mod stats;
pub mod sweep;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use geometry::{grid_box_to_rect, rectangular_closure, GridIndexBox};
pub use heatmap::{localize, normalize, reduce_features, Normalized};
pub use metrics::{aggregate, PairStats, StatsRow};
pub use rng::{stream_key, RngStream};
pub use sampling::{
    beta_symmetric, contrastive_crop, crop_dims, place_in_box, place_uniform, random_crop,
    sample_scale_ratio, BetaSymmetric, CropConfig, CropDraws,
};
pub use scalar::Scalar;
pub use schedule::{sampler_for_epoch, update_epochs, SamplerKind, TrainPlan};
pub use simulator::{
    compare_samplers, run_experiment, synth_heatmap, Arm, PairSample, SceneSpec, SharpnessSchedule,
};
pub use sweep::{sweep, Axis};

pub type Rect = geometry::Rect<f64>;
pub type Rect32 = geometry::Rect<f32>;
pub type Heatmap = heatmap::Heatmap<f64>;
pub type Heatmap32 = heatmap::Heatmap<f32>;
pub type BoxStore = schedule::BoxStore<f64>;
pub type BoxStore32 = schedule::BoxStore<f32>;
pub type Draws = sampling::CropDraws<f64>;

//! Trajectory-based motion segmentation.
//!
//! Points are tracked through dense optical flow, trajectory pairs are
//! scored by a translational motion model or a Siamese GRU, the resulting
//! graph is partitioned by minimum cost multicut and the sparse trajectory
//! labels are propagated to dense per-frame segmentations.

pub mod affinity;
pub mod densify;
pub mod eval;
pub mod flowio;
pub mod gru;
pub mod multicut;
pub mod pipeline;
pub mod scalar;
pub mod synth;
pub mod tracker;

pub use scalar::Scalar;

pub type Trajectory = tracker::Trajectory<f64>;
pub type TrajectorySet = tracker::TrajectorySet<f64>;
pub type AffinityGraph = affinity::AffinityGraph<f64>;
pub type GruParams = gru::GruParams<f64>;
pub type AlignedPair = gru::AlignedPair<f64>;

pub type TrajectoryF32 = tracker::Trajectory<f32>;
pub type TrajectorySetF32 = tracker::TrajectorySet<f32>;
pub type AffinityGraphF32 = affinity::AffinityGraph<f32>;
pub type GruParamsF32 = gru::GruParams<f32>;
pub type AlignedPairF32 = gru::AlignedPair<f32>;

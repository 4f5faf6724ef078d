//! Training-free point cloud registration that tunes itself to the scene.
//!
//! The pipeline bootstraps every scale parameter from the input geometry
//! (voxel size, neighborhood radii), describes multi-scale patches with a
//! rotation-aware cylindrical histogram, matches them mutually, turns each
//! match into a rigid-motion hypothesis, and picks the pose by cross-scale
//! consensus followed by a robust solve. One code path covers object,
//! indoor, and outdoor scans without retraining or per-dataset tuning.

pub mod bench;
pub mod bootstrap;
pub mod config;
pub mod descriptor;
pub mod error;
pub mod geom;
pub mod io;
pub mod matching;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod spatial;

pub use bench::{
    generate_pair, run_benchmark, BenchmarkReport, NoiseModel, Primitive, RunMode, ScenePreset,
    SceneSpec, SensorModel,
};
pub use bootstrap::{Scale, ScaleRadii, SceneShape};
pub use config::{PipelineConfig, SolverKind};
pub use descriptor::{CylindricalMap, DescriptorSet, FeatureVector};
pub use error::{Error, Result};
pub use geom::{Point3, PointCloud, RigidTransform, RotationMatrix};
pub use matching::CorrespondenceSet;
pub use pipeline::{register, register_lite, MetricReport, RegistrationResult};
pub use sampling::Patch;
pub use solver::SolverReport;
pub use spatial::SpatialIndex;

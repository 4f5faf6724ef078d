//! Synthetic scene-pair generation with planted ground truth, plus the
//! benchmark harness that registers generated pairs and aggregates metrics.
//!
//! Scenes are assembled from surface primitives, sampled once into a master
//! point set, split into two overlapping crops, and the target crop is moved
//! by a random rigid transform. The shared samples give exact planted
//! correspondences, which makes generated pairs usable as solver oracles.

use std::time::Instant;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::geom::{axis_angle, Point3, PointCloud, RigidTransform, RotationMatrix};
use crate::pipeline::{pose_errors, register, register_lite, success, StageTimings};
use crate::rng::{derived_rng, stream};

// ---------------------------------------------------------------------------
// Scene specification
// ---------------------------------------------------------------------------

/// A surface primitive of a synthetic scene. Coordinates are meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Primitive {
    /// Parallelogram patch spanned by two edge vectors, optionally rippled
    /// along its normal so patches on it are not featureless planes.
    Rect {
        origin: [f64; 3],
        edge_u: [f64; 3],
        edge_v: [f64; 3],
        #[serde(default)]
        wave_amplitude: f64,
        #[serde(default)]
        wave_cycles: f64,
    },
    /// Axis-aligned box surface; points are drawn from all six faces with
    /// area weighting.
    Cuboid {
        center: [f64; 3],
        half_extents: [f64; 3],
    },
    Sphere { center: [f64; 3], radius: f64 },
}

/// How the scene samples are captured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SensorModel {
    /// Keep the surface samples as drawn.
    Uniform,
    /// Spinning-scanner statistics: the vertical extent of the captured
    /// cloud is compressed by this factor, producing the disc-like shape of
    /// outdoor lidar sweeps.
    DiscLidar { z_compression: f64 },
}

/// Direction of the per-point Gaussian perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Independent Gaussian offsets on every coordinate.
    #[default]
    Isotropic,
    /// One Gaussian offset along the local surface normal, emulating the
    /// range error of depth sensors.
    AlongNormal,
}

/// Recipe for one synthetic registration pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
    pub points_per_primitive: usize,
    pub sensor: SensorModel,
    /// Standard deviation of the Gaussian noise added to each cloud
    /// independently, meters.
    pub noise_sigma: f64,
    /// Direction of the noise displacement.
    #[serde(default)]
    pub noise_model: NoiseModel,
    /// Target shared fraction of the smaller crop, in (0, 1].
    pub overlap: f64,
    /// The planted rotation angle is uniform in [0, this], degrees; the axis
    /// is uniform on the sphere and passes through the sensor origin.
    pub max_rotation_deg: f64,
    /// The planted translation is uniform in a ball of this radius, meters.
    pub max_translation_m: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(Error::invalid("scene needs at least one primitive"));
        }
        if self.points_per_primitive == 0 {
            return Err(Error::invalid("points per primitive must be positive"));
        }
        if !(self.overlap > 0.0 && self.overlap <= 1.0) {
            return Err(Error::invalid(format!(
                "overlap must lie in (0, 1], got {}",
                self.overlap
            )));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::invalid(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        if !self.max_rotation_deg.is_finite() || self.max_rotation_deg < 0.0 {
            return Err(Error::invalid(format!(
                "max rotation must be finite and non-negative, got {}",
                self.max_rotation_deg
            )));
        }
        if !self.max_translation_m.is_finite() || self.max_translation_m < 0.0 {
            return Err(Error::invalid(format!(
                "max translation must be finite and non-negative, got {}",
                self.max_translation_m
            )));
        }
        if let SensorModel::DiscLidar { z_compression } = self.sensor {
            if !(z_compression > 0.0 && z_compression <= 1.0) {
                return Err(Error::invalid(format!(
                    "z compression must lie in (0, 1], got {z_compression}"
                )));
            }
        }
        for primitive in &self.primitives {
            primitive.validate()?;
        }
        Ok(())
    }
}

impl Primitive {
    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64; 3]| v.iter().all(|c| c.is_finite());
        match self {
            Primitive::Rect {
                origin,
                edge_u,
                edge_v,
                wave_amplitude,
                wave_cycles,
            } => {
                if !finite(origin) || !finite(edge_u) || !finite(edge_v) {
                    return Err(Error::invalid("rect has non-finite coordinates"));
                }
                let u = Vector3::from(*edge_u);
                let v = Vector3::from(*edge_v);
                if u.cross(&v).norm() <= 0.0 {
                    return Err(Error::invalid("rect edges must span a plane"));
                }
                if !wave_amplitude.is_finite()
                    || *wave_amplitude < 0.0
                    || !wave_cycles.is_finite()
                    || *wave_cycles < 0.0
                {
                    return Err(Error::invalid("rect wave parameters must be non-negative"));
                }
            }
            Primitive::Cuboid {
                center,
                half_extents,
            } => {
                if !finite(center) || !finite(half_extents) {
                    return Err(Error::invalid("cuboid has non-finite coordinates"));
                }
                if half_extents.iter().any(|&h| h <= 0.0) {
                    return Err(Error::invalid("cuboid half extents must be positive"));
                }
            }
            Primitive::Sphere { center, radius } => {
                if !finite(center) || !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::invalid("sphere needs finite center and positive radius"));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (Point3, Vector3<f64>) {
        match self {
            Primitive::Rect {
                origin,
                edge_u,
                edge_v,
                wave_amplitude,
                wave_cycles,
            } => {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                let eu = Vector3::from(*edge_u);
                let ev = Vector3::from(*edge_v);
                // The wave only ripples the sheet; its base normal is kept as
                // the surface normal (amplitudes are small by construction).
                let normal = eu.cross(&ev).normalize();
                let mut p = Vector3::from(*origin) + eu * u + ev * v;
                if *wave_amplitude > 0.0 {
                    let phase = 2.0 * std::f64::consts::PI * wave_cycles;
                    p += normal * (wave_amplitude * (phase * u).sin() * (phase * v).cos());
                }
                (Point3::from(p), normal)
            }
            Primitive::Cuboid {
                center,
                half_extents,
            } => {
                let [hx, hy, hz] = *half_extents;
                let areas = [hy * hz, hx * hz, hx * hy]; // per face pair
                let total: f64 = 2.0 * areas.iter().sum::<f64>();
                let mut pick = rng.random_range(0.0..total);
                let mut axis = 2;
                for (i, &a) in areas.iter().enumerate() {
                    if pick < 2.0 * a {
                        axis = i;
                        break;
                    }
                    pick -= 2.0 * a;
                }
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let spread = |rng: &mut ChaCha8Rng, h: f64| rng.random_range(-h..h);
                let (local, normal) = match axis {
                    0 => (
                        Vector3::new(sign * hx, spread(rng, hy), spread(rng, hz)),
                        Vector3::new(sign, 0.0, 0.0),
                    ),
                    1 => (
                        Vector3::new(spread(rng, hx), sign * hy, spread(rng, hz)),
                        Vector3::new(0.0, sign, 0.0),
                    ),
                    _ => (
                        Vector3::new(spread(rng, hx), spread(rng, hy), sign * hz),
                        Vector3::new(0.0, 0.0, sign),
                    ),
                };
                (Point3::from(Vector3::from(*center) + local), normal)
            }
            Primitive::Sphere { center, radius } => {
                let dir: [f64; 3] = UnitSphere.sample(rng);
                let dir = Vector3::from(dir);
                (Point3::from(Vector3::from(*center) + dir * *radius), dir)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Pair generation
// ---------------------------------------------------------------------------

/// A generated pair with its planted ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedPair {
    pub source: PointCloud,
    pub target: PointCloud,
    /// Maps source coordinates onto target coordinates.
    pub transform: RigidTransform,
    /// Index pairs `(source, target)` of samples both crops share; with zero
    /// noise these are exact inliers of `transform`.
    pub shared: Vec<(usize, usize)>,
    /// Achieved shared fraction of the smaller crop.
    pub overlap: f64,
}

/// Generate a registration pair: sample the scene once, split it into two
/// overlapping half-space crops, and move the target crop by a random rigid
/// transform plus per-cloud Gaussian noise.
pub fn generate_pair(spec: &SceneSpec) -> Result<(PointCloud, PointCloud, RigidTransform)> {
    let pair = generate_pair_with_truth(spec)?;
    Ok((pair.source, pair.target, pair.transform))
}

/// [`generate_pair`] plus the planted shared-sample correspondences.
pub fn generate_pair_with_truth(spec: &SceneSpec) -> Result<GeneratedPair> {
    spec.validate()?;
    let mut rng = derived_rng(spec.seed, &[stream::SCENE]);

    let mut scene: Vec<Point3> = Vec::with_capacity(spec.primitives.len() * spec.points_per_primitive);
    let mut scene_normals: Vec<Vector3<f64>> = Vec::with_capacity(scene.capacity());
    for primitive in &spec.primitives {
        for _ in 0..spec.points_per_primitive {
            let (point, normal) = primitive.sample(&mut rng);
            scene.push(point);
            scene_normals.push(normal);
        }
    }
    if let SensorModel::DiscLidar { z_compression } = spec.sensor {
        let (lo, hi) = scene
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.z), hi.max(p.z))
            });
        let mid = 0.5 * (lo + hi);
        for p in &mut scene {
            p.z = mid + (p.z - mid) * z_compression;
        }
        // Normals transform with the inverse transpose of the squash.
        for n in &mut scene_normals {
            n.z /= z_compression;
            n.normalize_mut();
        }
    }

    // Crop along a random horizontal direction. The band of width 2w around
    // the median projection is shared by both crops; w is binary-searched so
    // the shared fraction of the smaller crop hits the overlap target.
    let azimuth = rng.random_range(0.0..2.0 * std::f64::consts::PI);
    let crop_dir = Vector3::new(azimuth.cos(), azimuth.sin(), 0.0);
    let projections: Vec<f64> = scene.iter().map(|p| p.coords.dot(&crop_dir)).collect();
    let mut sorted = projections.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite projections"));
    let median = sorted[sorted.len() / 2];
    let span = sorted[sorted.len() - 1] - sorted[0];

    let shared_fraction = |w: f64| -> f64 {
        let le_hi = sorted.partition_point(|&v| v <= median + w);
        let lt_lo = sorted.partition_point(|&v| v < median - w);
        let shared = le_hi.saturating_sub(lt_lo);
        let p_count = le_hi;
        let q_count = sorted.len() - lt_lo;
        shared as f64 / p_count.min(q_count).max(1) as f64
    };
    let mut lo = 0.0;
    let mut hi = span;
    let mut best_w = hi;
    let mut best_gap = (shared_fraction(hi) - spec.overlap).abs();
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let f = shared_fraction(mid);
        let gap = (f - spec.overlap).abs();
        if gap < best_gap {
            best_gap = gap;
            best_w = mid;
        }
        if f < spec.overlap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = best_w;

    let mut source_of_scene = vec![usize::MAX; scene.len()];
    let mut target_of_scene = vec![usize::MAX; scene.len()];
    let mut source_points: Vec<Point3> = Vec::new();
    let mut source_normals: Vec<Vector3<f64>> = Vec::new();
    let mut target_scene_points: Vec<Point3> = Vec::new();
    let mut target_scene_normals: Vec<Vector3<f64>> = Vec::new();
    for (i, p) in scene.iter().enumerate() {
        if projections[i] <= median + w {
            source_of_scene[i] = source_points.len();
            source_points.push(*p);
            source_normals.push(scene_normals[i]);
        }
        if projections[i] >= median - w {
            target_of_scene[i] = target_scene_points.len();
            target_scene_points.push(*p);
            target_scene_normals.push(scene_normals[i]);
        }
    }
    if source_points.is_empty() || target_scene_points.is_empty() {
        return Err(Error::Benchmark(
            "overlap crop emptied a cloud; re-seed the scene".into(),
        ));
    }
    let mut shared: Vec<(usize, usize)> = Vec::new();
    for i in 0..scene.len() {
        if source_of_scene[i] != usize::MAX && target_of_scene[i] != usize::MAX {
            shared.push((source_of_scene[i], target_of_scene[i]));
        }
    }
    let achieved = shared.len() as f64 / source_points.len().min(target_scene_points.len()) as f64;

    let transform = random_transform(
        &mut rng,
        spec.max_rotation_deg.to_radians(),
        spec.max_translation_m,
    );
    let mut target_points: Vec<Point3> = target_scene_points
        .iter()
        .map(|p| transform.apply_point(p))
        .collect();
    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        match spec.noise_model {
            NoiseModel::Isotropic => {
                for p in &mut source_points {
                    *p = Point3::new(
                        p.x + normal.sample(&mut rng),
                        p.y + normal.sample(&mut rng),
                        p.z + normal.sample(&mut rng),
                    );
                }
                for p in &mut target_points {
                    *p = Point3::new(
                        p.x + normal.sample(&mut rng),
                        p.y + normal.sample(&mut rng),
                        p.z + normal.sample(&mut rng),
                    );
                }
            }
            NoiseModel::AlongNormal => {
                for (p, n) in source_points.iter_mut().zip(&source_normals) {
                    *p += n * normal.sample(&mut rng);
                }
                // Target points are already transformed, so their normals
                // rotate along.
                for (p, n) in target_points.iter_mut().zip(&target_scene_normals) {
                    *p += transform.rotation.apply(n) * normal.sample(&mut rng);
                }
            }
        }
    }

    Ok(GeneratedPair {
        source: PointCloud::new(source_points),
        target: PointCloud::new(target_points),
        transform,
        shared,
        overlap: achieved,
    })
}

/// Rotation uniform in axis and angle (up to `max_angle` radians) about the
/// origin, translation uniform in a ball. Rotating about the sensor origin
/// keeps patch-frame disambiguation consistent between the crops.
fn random_transform(rng: &mut ChaCha8Rng, max_angle: f64, max_translation: f64) -> RigidTransform {
    let rotation = if max_angle > 0.0 {
        let axis: [f64; 3] = UnitSphere.sample(rng);
        let angle = rng.random_range(0.0..max_angle);
        axis_angle(&Vector3::from(axis), angle).expect("unit axis")
    } else {
        RotationMatrix::identity()
    };
    let translation = if max_translation > 0.0 {
        loop {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.norm_squared() <= 1.0 {
                break v * max_translation;
            }
        }
    } else {
        Vector3::zeros()
    };
    RigidTransform {
        rotation,
        translation,
    }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// Scene-scale presets spanning the supported deployment range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenePreset {
    /// Tabletop extent, ~0.5 m.
    Object,
    /// Room extent, ~10 m.
    Indoor,
    /// Street extent, ~100 m, disc-like capture.
    Outdoor,
    /// Cycles object, indoor, outdoor per pair.
    Mixed,
}

impl ScenePreset {
    pub fn parse(name: &str) -> Result<ScenePreset> {
        match name {
            "object" => Ok(ScenePreset::Object),
            "indoor" => Ok(ScenePreset::Indoor),
            "outdoor" => Ok(ScenePreset::Outdoor),
            "mixed" => Ok(ScenePreset::Mixed),
            other => Err(Error::invalid(format!(
                "unknown preset `{other}`; expected object, indoor, outdoor, or mixed"
            ))),
        }
    }

    fn extent(self) -> f64 {
        match self {
            ScenePreset::Object => 0.5,
            ScenePreset::Indoor => 10.0,
            ScenePreset::Outdoor => 100.0,
            ScenePreset::Mixed => unreachable!("mixed resolves per pair"),
        }
    }
}

/// Default success thresholds for a preset: `(tau_rot_deg, tau_trans_m)`.
/// Outdoor scenes use the wide outdoor convention; object and indoor scenes
/// the tight indoor convention; mixed uses the outdoor pair since it must
/// cover street-scale errors.
pub fn preset_thresholds(preset: ScenePreset) -> (f64, f64) {
    match preset {
        ScenePreset::Object | ScenePreset::Indoor => (15.0, 0.3),
        ScenePreset::Outdoor | ScenePreset::Mixed => (5.0, 2.0),
    }
}

/// Build `count` randomized scene specs for a preset. Per-pair seeds derive
/// from `(run_seed, pair index)`, so the list is reproducible and pairs stay
/// independent under parallel execution.
pub fn preset_specs(preset: ScenePreset, count: usize, run_seed: u64) -> Vec<SceneSpec> {
    (0..count)
        .map(|i| {
            let concrete = match preset {
                ScenePreset::Mixed => match i % 3 {
                    0 => ScenePreset::Object,
                    1 => ScenePreset::Indoor,
                    _ => ScenePreset::Outdoor,
                },
                other => other,
            };
            let mut rng = derived_rng(run_seed, &[stream::BENCH_PAIR, i as u64]);
            let scale = concrete.extent();
            let sensor = match concrete {
                ScenePreset::Outdoor => SensorModel::DiscLidar { z_compression: 0.3 },
                _ => SensorModel::Uniform,
            };
            let walls = concrete != ScenePreset::Outdoor;
            SceneSpec {
                primitives: preset_layout(scale, walls, &mut rng),
                points_per_primitive: 1200,
                sensor,
                noise_sigma: 0.002 * scale,
                noise_model: NoiseModel::default(),
                overlap: 0.7,
                max_rotation_deg: 180.0,
                max_translation_m: 0.02 * scale,
                seed: rng.random(),
            }
        })
        .collect()
}

/// Scanner-on-a-pole geometry: everything sits below the sensor origin, so
/// the default patch-frame disambiguation stays consistent for rotations
/// about the origin.
fn preset_layout(scale: f64, walls: bool, rng: &mut ChaCha8Rng) -> Vec<Primitive> {
    let half = 0.5 * scale;
    let floor_z = -0.35 * scale;
    let mut primitives = vec![Primitive::Rect {
        origin: [-half, -half, floor_z],
        edge_u: [scale, 0.0, 0.0],
        edge_v: [0.0, scale, 0.0],
        wave_amplitude: 0.012 * scale,
        wave_cycles: 3.0,
    }];
    if walls {
        primitives.push(Primitive::Rect {
            origin: [-half, half, floor_z],
            edge_u: [scale, 0.0, 0.0],
            edge_v: [0.0, 0.0, 0.3 * scale],
            wave_amplitude: 0.006 * scale,
            wave_cycles: 2.0,
        });
        primitives.push(Primitive::Rect {
            origin: [-half, -half, floor_z],
            edge_u: [0.0, scale, 0.0],
            edge_v: [0.0, 0.0, 0.3 * scale],
            wave_amplitude: 0.006 * scale,
            wave_cycles: 2.0,
        });
    }
    for _ in 0..6 {
        let hx = rng.random_range(0.04..0.10) * scale;
        let hy = rng.random_range(0.04..0.10) * scale;
        let hz = rng.random_range(0.05..0.12) * scale;
        let cx = rng.random_range(-0.8..0.8) * half;
        let cy = rng.random_range(-0.8..0.8) * half;
        primitives.push(Primitive::Cuboid {
            center: [cx, cy, floor_z + hz],
            half_extents: [hx, hy, hz],
        });
    }
    for _ in 0..2 {
        let radius = rng.random_range(0.04..0.08) * scale;
        let cx = rng.random_range(-0.7..0.7) * half;
        let cy = rng.random_range(-0.7..0.7) * half;
        primitives.push(Primitive::Sphere {
            center: [cx, cy, floor_z + 1.5 * radius],
            radius,
        });
    }
    primitives
}

// ---------------------------------------------------------------------------
// Benchmark harness
// ---------------------------------------------------------------------------

/// Which pipeline variant a benchmark run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Full,
    Lite,
}

/// One benchmark pair's outcome. Failed pairs keep `success = false` with
/// empty metrics and the error message; they never abort the run.
#[derive(Debug, Clone, Serialize)]
pub struct PairRecord {
    pub pair_id: usize,
    pub mode: RunMode,
    pub success: bool,
    pub rte_m: Option<f64>,
    pub rre_deg: Option<f64>,
    pub inliers: usize,
    pub early_exited: bool,
    pub wall_ms: f64,
    pub timings: Option<StageTimings>,
    pub error: Option<String>,
}

/// Aggregated benchmark outcome; every aggregate is recomputable from the
/// rows.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    /// Report format version.
    pub schema: u32,
    pub mode: RunMode,
    pub tau_rot_deg: f64,
    pub tau_trans_m: f64,
    pub pair_count: usize,
    pub success_rate: f64,
    /// Mean over successful pairs; `None` when nothing succeeded.
    pub mean_rre_deg: Option<f64>,
    /// Mean over successful pairs; `None` when nothing succeeded.
    pub mean_rte_m: Option<f64>,
    /// Fraction of completed registrations that exited early.
    pub early_exit_fraction: f64,
    pub mean_wall_ms: f64,
    /// Mean per-stage wall time over completed registrations.
    pub mean_stage_ms: Option<StageTimings>,
    pub rows: Vec<PairRecord>,
}

/// Register every generated pair and aggregate the outcome. Pairs run in
/// parallel; all seeds are fixed by the specs, so parallelism never changes
/// the rows.
pub fn run_benchmark(
    specs: &[SceneSpec],
    cfg: &PipelineConfig,
    mode: RunMode,
    tau_rot_deg: f64,
    tau_trans_m: f64,
) -> Result<BenchmarkReport> {
    if specs.is_empty() {
        return Err(Error::Benchmark("benchmark needs at least one scene spec".into()));
    }
    let rows: Vec<PairRecord> = specs
        .par_iter()
        .enumerate()
        .map(|(pair_id, spec)| run_pair(pair_id, spec, cfg, mode, tau_rot_deg, tau_trans_m))
        .collect();
    Ok(aggregate(rows, mode, tau_rot_deg, tau_trans_m))
}

fn run_pair(
    pair_id: usize,
    spec: &SceneSpec,
    cfg: &PipelineConfig,
    mode: RunMode,
    tau_rot_deg: f64,
    tau_trans_m: f64,
) -> PairRecord {
    let failed = |wall_ms: f64, message: String| PairRecord {
        pair_id,
        mode,
        success: false,
        rte_m: None,
        rre_deg: None,
        inliers: 0,
        early_exited: false,
        wall_ms,
        timings: None,
        error: Some(message),
    };

    // An emptied crop is the one generation error worth retrying: re-seed a
    // few times before recording the pair as failed.
    let mut attempt_spec = spec.clone();
    let mut pair = None;
    for attempt in 0..4 {
        match generate_pair_with_truth(&attempt_spec) {
            Ok(p) => {
                pair = Some(p);
                break;
            }
            Err(Error::Benchmark(_)) if attempt < 3 => {
                attempt_spec.seed = derived_rng(spec.seed, &[stream::BENCH_PAIR, attempt + 1])
                    .random::<u64>();
            }
            Err(e) => return failed(0.0, e.to_string()),
        }
    }
    let pair = match pair {
        Some(p) => p,
        None => return failed(0.0, "pair generation kept emptying a crop".into()),
    };

    let start = Instant::now();
    let outcome = match mode {
        RunMode::Full => register(&pair.source, &pair.target, cfg),
        RunMode::Lite => register_lite(&pair.source, &pair.target, cfg),
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    match outcome {
        Ok(result) => {
            let (rre_deg, rte_m) = pose_errors(&pair.transform, &result.transform);
            PairRecord {
                pair_id,
                mode,
                success: success(rre_deg, rte_m, tau_rot_deg, tau_trans_m),
                rte_m: Some(rte_m),
                rre_deg: Some(rre_deg),
                inliers: result.inlier_count,
                early_exited: result.early_exited,
                wall_ms,
                timings: Some(result.timings),
                error: None,
            }
        }
        Err(e) => failed(wall_ms, e.to_string()),
    }
}

fn aggregate(
    rows: Vec<PairRecord>,
    mode: RunMode,
    tau_rot_deg: f64,
    tau_trans_m: f64,
) -> BenchmarkReport {
    let pair_count = rows.len();
    let n_success = rows.iter().filter(|r| r.success).count();
    let mean_over_successes = |pick: fn(&PairRecord) -> Option<f64>| {
        if n_success == 0 {
            None
        } else {
            let sum: f64 = rows
                .iter()
                .filter(|r| r.success)
                .filter_map(pick)
                .sum();
            Some(sum / n_success as f64)
        }
    };
    let mean_rre_deg = mean_over_successes(|r| r.rre_deg);
    let mean_rte_m = mean_over_successes(|r| r.rte_m);

    let completed: Vec<&PairRecord> = rows.iter().filter(|r| r.error.is_none()).collect();
    let early_exit_fraction = if completed.is_empty() {
        0.0
    } else {
        completed.iter().filter(|r| r.early_exited).count() as f64 / completed.len() as f64
    };
    let mean_stage_ms = if completed.is_empty() {
        None
    } else {
        let n = completed.len() as f64;
        let mut sum = StageTimings::default();
        for row in &completed {
            let t = row.timings.expect("completed rows carry timings");
            sum.bootstrap_ms += t.bootstrap_ms;
            sum.describe_ms += t.describe_ms;
            sum.match_ms += t.match_ms;
            sum.solve_ms += t.solve_ms;
            sum.total_ms += t.total_ms;
        }
        Some(StageTimings {
            bootstrap_ms: sum.bootstrap_ms / n,
            describe_ms: sum.describe_ms / n,
            match_ms: sum.match_ms / n,
            solve_ms: sum.solve_ms / n,
            total_ms: sum.total_ms / n,
        })
    };
    let mean_wall_ms = if pair_count == 0 {
        0.0
    } else {
        rows.iter().map(|r| r.wall_ms).sum::<f64>() / pair_count as f64
    };

    BenchmarkReport {
        schema: 1,
        mode,
        tau_rot_deg,
        tau_trans_m,
        pair_count,
        success_rate: if pair_count == 0 {
            0.0
        } else {
            n_success as f64 / pair_count as f64
        },
        mean_rre_deg,
        mean_rte_m,
        early_exit_fraction,
        mean_wall_ms,
        mean_stage_ms,
        rows,
    }
}

/// Flat per-pair CSV with the fixed column set
/// `pair_id,mode,success,rte_m,rre_deg,inliers,early_exited,wall_ms`.
pub fn write_csv<W: std::io::Write>(report: &BenchmarkReport, writer: W) -> Result<()> {
    #[derive(Serialize)]
    struct CsvRow {
        pair_id: usize,
        mode: RunMode,
        success: bool,
        rte_m: Option<f64>,
        rre_deg: Option<f64>,
        inliers: usize,
        early_exited: bool,
        wall_ms: f64,
    }
    let mut w = csv::Writer::from_writer(writer);
    for row in &report.rows {
        w.serialize(CsvRow {
            pair_id: row.pair_id,
            mode: row.mode,
            success: row.success,
            rte_m: row.rte_m,
            rre_deg: row.rre_deg,
            inliers: row.inliers,
            early_exited: row.early_exited,
            wall_ms: row.wall_ms,
        })
        .map_err(|e| Error::Benchmark(format!("csv serialization failed: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::Benchmark(format!("csv flush failed: {e}")))?;
    Ok(())
}

/// Voxel size the pipeline would bootstrap for a preset's scenes; benchmark
/// callers use it to phrase noise levels in voxel units.
pub fn preset_voxel_size(preset: ScenePreset, run_seed: u64, cfg: &PipelineConfig) -> Result<f64> {
    let spec = &preset_specs(preset, 1, run_seed)[0];
    let noise_free = SceneSpec {
        noise_sigma: 0.0,
        noise_model: NoiseModel::default(),
        ..spec.clone()
    };
    let pair = generate_pair_with_truth(&noise_free)?;
    crate::bootstrap::estimate_voxel_size(&pair.source, &pair.target, cfg)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bootstrap::{larger_cloud, scene_shape};

    fn small_spec(seed: u64) -> SceneSpec {
        let mut rng = derived_rng(seed, &[stream::BENCH_PAIR]);
        SceneSpec {
            primitives: preset_layout(8.0, true, &mut rng),
            points_per_primitive: 500,
            sensor: SensorModel::Uniform,
            noise_sigma: 0.01,
            noise_model: NoiseModel::default(),
            overlap: 0.8,
            max_rotation_deg: 60.0,
            max_translation_m: 0.2,
            seed,
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let spec = small_spec(3);
        let a = generate_pair_with_truth(&spec).unwrap();
        let b = generate_pair_with_truth(&spec).unwrap();
        assert_eq!(a.source.len(), b.source.len());
        assert_eq!(a.target.len(), b.target.len());
        for (p, q) in a.source.points.iter().zip(b.source.points.iter()) {
            assert_eq!(p, q);
        }
        for (p, q) in a.target.points.iter().zip(b.target.points.iter()) {
            assert_eq!(p, q);
        }
        assert_eq!(
            a.transform.to_matrix_rows(),
            b.transform.to_matrix_rows()
        );
        assert_eq!(a.shared, b.shared);
    }

    #[test]
    fn identity_spec_yields_identical_clouds() {
        let spec = SceneSpec {
            noise_sigma: 0.0,
            noise_model: NoiseModel::default(),
            overlap: 1.0,
            max_rotation_deg: 0.0,
            max_translation_m: 0.0,
            ..small_spec(5)
        };
        let pair = generate_pair_with_truth(&spec).unwrap();
        assert_eq!(
            pair.transform.to_matrix_rows(),
            RigidTransform::identity().to_matrix_rows()
        );
        assert_eq!(pair.source.len(), pair.target.len());
        for (p, q) in pair.source.points.iter().zip(pair.target.points.iter()) {
            assert_eq!(p, q);
        }
        assert_eq!(pair.shared.len(), pair.source.len());
    }

    #[test]
    fn planted_correspondences_are_exact_inliers() {
        let spec = SceneSpec {
            noise_sigma: 0.0,
            noise_model: NoiseModel::default(),
            ..small_spec(7)
        };
        let pair = generate_pair_with_truth(&spec).unwrap();
        assert!(!pair.shared.is_empty());
        for &(i, j) in &pair.shared {
            let moved = pair.transform.apply_point(&pair.source.points[i]);
            let residual = (moved - pair.target.points[j]).norm();
            assert!(residual <= 1e-12, "residual {residual}");
        }
    }

    #[test]
    fn overlap_calibration_hits_target_within_tolerance() {
        for &target in &[0.4, 0.6, 0.8] {
            for seed in 0..4 {
                let spec = SceneSpec {
                    overlap: target,
                    ..small_spec(100 + seed)
                };
                let pair = generate_pair_with_truth(&spec).unwrap();
                assert!(
                    (pair.overlap - target).abs() <= 0.02,
                    "target {target}, achieved {} (seed {seed})",
                    pair.overlap
                );
            }
        }
    }

    #[test]
    fn disc_lidar_capture_reads_as_disc_shaped() {
        let cfg = PipelineConfig::default();
        let outdoor = &preset_specs(ScenePreset::Outdoor, 1, 11)[0];
        let pair = generate_pair_with_truth(outdoor).unwrap();
        let shape = scene_shape(
            larger_cloud(&pair.source, &pair.target),
            cfg.delta_v,
            cfg.seed,
        )
        .unwrap();
        assert!(
            shape.sphericity < cfg.tau_v,
            "sphericity {} not below {}",
            shape.sphericity,
            cfg.tau_v
        );

        let indoor = &preset_specs(ScenePreset::Indoor, 1, 11)[0];
        let pair = generate_pair_with_truth(indoor).unwrap();
        let shape = scene_shape(
            larger_cloud(&pair.source, &pair.target),
            cfg.delta_v,
            cfg.seed,
        )
        .unwrap();
        assert!(
            shape.sphericity >= cfg.tau_v,
            "sphericity {} unexpectedly below {}",
            shape.sphericity,
            cfg.tau_v
        );
    }

    #[test]
    fn mixed_preset_cycles_scales_and_validates() {
        let specs = preset_specs(ScenePreset::Mixed, 6, 17);
        assert_eq!(specs.len(), 6);
        for spec in &specs {
            spec.validate().unwrap();
        }
        let spread = |spec: &SceneSpec| match &spec.primitives[0] {
            Primitive::Rect { edge_u, .. } => edge_u[0],
            _ => panic!("preset layouts start with the ground rect"),
        };
        assert_eq!(spread(&specs[0]), 0.5);
        assert_eq!(spread(&specs[1]), 10.0);
        assert_eq!(spread(&specs[2]), 100.0);
        assert_eq!(spread(&specs[3]), 0.5);
    }

    #[test]
    fn spec_validation_rejects_bad_fields() {
        let good = small_spec(1);
        assert!(good.validate().is_ok());
        assert!(SceneSpec {
            overlap: 0.0,
            ..good.clone()
        }
        .validate()
        .is_err());
        assert!(SceneSpec {
            noise_sigma: -0.1,
            noise_model: NoiseModel::default(),
            ..good.clone()
        }
        .validate()
        .is_err());
        assert!(SceneSpec {
            primitives: vec![],
            ..good.clone()
        }
        .validate()
        .is_err());
        assert!(SceneSpec {
            sensor: SensorModel::DiscLidar { z_compression: 0.0 },
            ..good.clone()
        }
        .validate()
        .is_err());
        assert!(SceneSpec {
            primitives: vec![Primitive::Sphere {
                center: [0.0; 3],
                radius: 0.0
            }],
            ..good
        }
        .validate()
        .is_err());
    }

    #[test]
    fn benchmark_requires_specs_and_aggregates_match_rows() {
        let cfg = PipelineConfig {
            n_fps: 300,
            n_r: 400,
            ..PipelineConfig::default()
        };
        assert!(run_benchmark(&[], &cfg, RunMode::Full, 5.0, 2.0).is_err());

        let specs: Vec<SceneSpec> = (0..2)
            .map(|i| SceneSpec {
                points_per_primitive: 400,
                noise_sigma: 0.005,
                noise_model: NoiseModel::default(),
                ..small_spec(40 + i)
            })
            .collect();
        let report = run_benchmark(&specs, &cfg, RunMode::Full, 5.0, 2.0).unwrap();
        assert_eq!(report.schema, 1);
        assert_eq!(report.pair_count, 2);
        assert_eq!(report.rows.len(), 2);
        let recomputed =
            report.rows.iter().filter(|r| r.success).count() as f64 / report.rows.len() as f64;
        assert_eq!(report.success_rate, recomputed);
        for (i, row) in report.rows.iter().enumerate() {
            assert_eq!(row.pair_id, i);
            assert_eq!(row.mode, RunMode::Full);
            if row.error.is_none() {
                assert!(row.rre_deg.is_some() && row.rte_m.is_some());
            }
        }

        // Parallel execution must not perturb the outcome.
        let again = run_benchmark(&specs, &cfg, RunMode::Full, 5.0, 2.0).unwrap();
        for (a, b) in report.rows.iter().zip(again.rows.iter()) {
            assert_eq!(a.success, b.success);
            assert_eq!(a.inliers, b.inliers);
            assert_eq!(a.rre_deg, b.rre_deg);
            assert_eq!(a.rte_m, b.rte_m);
            assert_eq!(a.early_exited, b.early_exited);
        }
    }

    #[test]
    fn csv_rows_use_the_fixed_column_set() {
        let report = aggregate(
            vec![PairRecord {
                pair_id: 0,
                mode: RunMode::Lite,
                success: true,
                rte_m: Some(0.05),
                rre_deg: Some(0.4),
                inliers: 42,
                early_exited: true,
                wall_ms: 12.5,
                timings: Some(StageTimings::default()),
                error: None,
            }],
            RunMode::Lite,
            5.0,
            2.0,
        );
        let mut buffer = Vec::new();
        write_csv(&report, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "pair_id,mode,success,rte_m,rre_deg,inliers,early_exited,wall_ms"
        );
        assert_eq!(lines.next().unwrap(), "0,lite,true,0.05,0.4,42,true,12.5");
    }
}

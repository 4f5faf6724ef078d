//! End-to-end registration: bootstrap the scales from the data, describe and
//! match keypoints at each scale, pool the per-pair hypotheses, and solve for
//! the final pose.
//!
//! [`register`] always processes all three scales. [`register_lite`] runs the
//! middle scale first and finalizes from it alone when it already yields
//! enough inliers, falling back to the full three-scale path otherwise.

use std::time::Instant;

use nalgebra::Vector3;
use serde::Serialize;

use crate::bootstrap::{
    estimate_radii, estimate_voxel_size, larger_cloud, voxel_downsample, Scale, ScaleRadii,
};
use crate::config::{PipelineConfig, SolverKind};
use crate::descriptor::{describe_set, DescriptorSet};
use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud, RigidTransform, RotationMatrix};
use crate::matching::{match_scale, CorrespondenceSet};
use crate::sampling::farthest_point_sampling;
use crate::solver::{
    consensus_maximize, count_inliers, kabsch_weighted, kiss_solver, ransac, subset,
};
use crate::spatial::SpatialIndex;

// ---------------------------------------------------------------------------
// Result types
// ---------------------------------------------------------------------------

/// What happened at one descriptor scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScaleDiagnostics {
    pub scale: Scale,
    /// Source keypoints that yielded a descriptor.
    pub source_keypoints: usize,
    /// Source keypoints dropped because their patch was too sparse or flat.
    pub source_skipped: usize,
    pub target_keypoints: usize,
    pub target_skipped: usize,
    /// Mutual matches that survived yaw estimation; each carries one
    /// transform hypothesis, so this is also the hypothesis count.
    pub correspondences: usize,
    /// False when the scale was abandoned before matching (no usable
    /// descriptors on one side).
    pub processed: bool,
}

/// Wall-clock breakdown in milliseconds.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StageTimings {
    pub bootstrap_ms: f64,
    pub describe_ms: f64,
    pub match_ms: f64,
    pub solve_ms: f64,
    pub total_ms: f64,
}

/// Output of [`register`] and [`register_lite`].
#[derive(Debug, Clone, Serialize)]
pub struct RegistrationResult {
    /// Estimated map from source to target coordinates; serialized as a
    /// row-major 4x4 matrix.
    pub transform: RigidTransform,
    /// Inliers of `transform` among all pooled correspondences.
    pub inlier_count: usize,
    /// Voxel size resolved from the data (meters).
    pub voxel_size: f64,
    /// Patch radii resolved from the data (meters).
    pub radii: ScaleRadii,
    /// One entry per processed scale, in local/middle/global order. An
    /// early-exited lite run contains only the middle entry.
    pub scales: Vec<ScaleDiagnostics>,
    /// True when the lite path finalized from the middle scale alone.
    pub early_exited: bool,
    pub timings: StageTimings,
}

// ---------------------------------------------------------------------------
// Evaluation metrics
// ---------------------------------------------------------------------------

/// Relative rotation error between two rotations, in degrees.
///
/// The clamp keeps round-off in the trace from pushing the cosine outside
/// [-1, 1], so the metric is total and never returns NaN.
pub fn rre(r_gt: &RotationMatrix, r_est: &RotationMatrix) -> f64 {
    let trace = (r_gt.matrix().transpose() * r_est.matrix()).trace();
    ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Relative translation error between two translations, in meters.
pub fn rte(t_gt: &Vector3<f64>, t_est: &Vector3<f64>) -> f64 {
    (t_gt - t_est).norm()
}

/// A pair counts as registered when both errors are within their thresholds
/// (closed comparison on both).
pub fn success(rre_deg: f64, rte_m: f64, tau_rot_deg: f64, tau_trans_m: f64) -> bool {
    rte_m <= tau_trans_m && rre_deg <= tau_rot_deg
}

/// Both error metrics of an estimated pose against the ground truth:
/// `(rre_deg, rte_m)`.
pub fn pose_errors(gt: &RigidTransform, est: &RigidTransform) -> (f64, f64) {
    (
        rre(&gt.rotation, &est.rotation),
        rte(&gt.translation, &est.translation),
    )
}

/// Per-pair metrics plus aggregates over the successful pairs.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub rre_deg: Vec<f64>,
    pub rte_m: Vec<f64>,
    pub success: Vec<bool>,
    /// Mean over successful pairs only; `None` when nothing succeeded.
    pub mean_rre_deg: Option<f64>,
    /// Mean over successful pairs only; `None` when nothing succeeded.
    pub mean_rte_m: Option<f64>,
    pub success_rate: f64,
}

impl MetricReport {
    /// Aggregate per-pair errors under the given success thresholds.
    pub fn from_errors(
        rre_deg: Vec<f64>,
        rte_m: Vec<f64>,
        tau_rot_deg: f64,
        tau_trans_m: f64,
    ) -> MetricReport {
        assert_eq!(rre_deg.len(), rte_m.len(), "metric vectors must align");
        let flags: Vec<bool> = rre_deg
            .iter()
            .zip(&rte_m)
            .map(|(&r, &t)| success(r, t, tau_rot_deg, tau_trans_m))
            .collect();
        let n_success = flags.iter().filter(|&&s| s).count();
        let mean_over_successes = |values: &[f64]| {
            if n_success == 0 {
                None
            } else {
                let sum: f64 = values
                    .iter()
                    .zip(&flags)
                    .filter(|(_, &ok)| ok)
                    .map(|(&v, _)| v)
                    .sum();
                Some(sum / n_success as f64)
            }
        };
        let mean_rre_deg = mean_over_successes(&rre_deg);
        let mean_rte_m = mean_over_successes(&rte_m);
        let success_rate = if flags.is_empty() {
            0.0
        } else {
            n_success as f64 / flags.len() as f64
        };
        MetricReport {
            rre_deg,
            rte_m,
            success: flags,
            mean_rre_deg,
            mean_rte_m,
            success_rate,
        }
    }
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// Register `source` onto `target` with the full three-scale pipeline.
///
/// Runs: voxel-size estimation, downsampling, radius estimation, per-scale
/// keypoint description and matching, pooled consensus over all hypotheses,
/// and a robust solve (per `cfg.solver`) refined by a uniform least-squares
/// fit on the final inlier set.
pub fn register(
    source: &PointCloud,
    target: &PointCloud,
    cfg: &PipelineConfig,
) -> Result<RegistrationResult> {
    run(source, target, cfg, Mode::Full)
}

/// Register with the early-exit variant: the middle scale is processed first
/// with the k-core + GNC solver, and when its inlier set reaches `cfg.tau_n`
/// the result is finalized without touching the other scales. Otherwise the
/// full three-scale path runs (also with the k-core + GNC solver), reusing
/// the middle-scale work.
pub fn register_lite(
    source: &PointCloud,
    target: &PointCloud,
    cfg: &PipelineConfig,
) -> Result<RegistrationResult> {
    run(source, target, cfg, Mode::Lite)
}

#[derive(Clone, Copy)]
enum Mode {
    Full,
    Lite,
}

/// A downsampled cloud with its spatial index and keypoint sample. The
/// keypoints do not depend on the patch radius, so they are shared across
/// scales.
struct Prepared {
    cloud: PointCloud,
    index: SpatialIndex,
    keypoints: Vec<usize>,
}

struct ScaleArtifacts {
    diagnostics: ScaleDiagnostics,
    correspondences: CorrespondenceSet,
}

fn run(
    source: &PointCloud,
    target: &PointCloud,
    cfg: &PipelineConfig,
    mode: Mode,
) -> Result<RegistrationResult> {
    let total_start = Instant::now();
    cfg.validate().map_err(|e| e.at_stage("config"))?;
    let mut timings = StageTimings::default();

    let bootstrap_start = Instant::now();
    let voxel_size =
        estimate_voxel_size(source, target, cfg).map_err(|e| e.at_stage("bootstrap"))?;
    let down_source = voxel_downsample(source, voxel_size).map_err(|e| e.at_stage("bootstrap"))?;
    let down_target = voxel_downsample(target, voxel_size).map_err(|e| e.at_stage("bootstrap"))?;
    let radii = estimate_radii(larger_cloud(&down_source, &down_target), cfg)
        .map_err(|e| e.at_stage("bootstrap"))?;
    timings.bootstrap_ms = ms_since(bootstrap_start);

    let keypoint_start = Instant::now();
    let prep_source = prepare(down_source, cfg).map_err(|e| e.at_stage("keypoints"))?;
    let prep_target = prepare(down_target, cfg).map_err(|e| e.at_stage("keypoints"))?;
    timings.describe_ms += ms_since(keypoint_start);

    // The lite variant pairs early exit with the k-core solver; the full
    // pipeline solves with whatever the config selects.
    let solver = match mode {
        Mode::Full => cfg.solver,
        Mode::Lite => SolverKind::KcoreGnc,
    };
    let mut artifacts: Vec<ScaleArtifacts> = Vec::with_capacity(3);
    if let Mode::Lite = mode {
        let middle = process_scale(
            &prep_source,
            &prep_target,
            Scale::Middle,
            radii.get(Scale::Middle),
            cfg,
            &mut timings,
        );
        let mut early: Option<(RigidTransform, usize)> = None;
        if !middle.correspondences.is_empty() {
            let solve_start = Instant::now();
            let attempt = solve_chain(&middle.correspondences, voxel_size, solver, cfg);
            timings.solve_ms += ms_since(solve_start);
            // A failed middle-scale solve is not fatal: fall through to the
            // full path instead.
            if let Ok((transform, inliers)) = attempt {
                if inliers.len() >= cfg.tau_n {
                    early = Some((transform, inliers.len()));
                }
            }
        }
        if let Some((transform, inlier_count)) = early {
            timings.total_ms = ms_since(total_start);
            return Ok(RegistrationResult {
                transform,
                inlier_count,
                voxel_size,
                radii,
                scales: vec![middle.diagnostics],
                early_exited: true,
                timings,
            });
        }
        artifacts.push(middle);
    }

    for scale in Scale::ALL {
        if artifacts.iter().any(|a| a.diagnostics.scale == scale) {
            continue;
        }
        artifacts.push(process_scale(
            &prep_source,
            &prep_target,
            scale,
            radii.get(scale),
            cfg,
            &mut timings,
        ));
    }
    // Pool in canonical scale order so the outcome does not depend on the
    // order the scales were computed in.
    artifacts.sort_by_key(|a| Scale::ALL.iter().position(|s| *s == a.diagnostics.scale));

    let mut pooled = CorrespondenceSet::new();
    let mut diagnostics = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        diagnostics.push(artifact.diagnostics);
        pooled.extend(artifact.correspondences);
    }
    if pooled.is_empty() {
        return Err(Error::NoHypothesis.at_stage("matching"));
    }

    let solve_start = Instant::now();
    let (transform, inliers) = solve_chain(&pooled, voxel_size, solver, cfg)?;
    timings.solve_ms += ms_since(solve_start);
    timings.total_ms = ms_since(total_start);

    Ok(RegistrationResult {
        transform,
        inlier_count: inliers.len(),
        voxel_size,
        radii,
        scales: diagnostics,
        early_exited: false,
        timings,
    })
}

fn prepare(cloud: PointCloud, cfg: &PipelineConfig) -> Result<Prepared> {
    let index = SpatialIndex::build(&cloud.points);
    let count = cfg.n_fps.min(cloud.len());
    let keypoints = farthest_point_sampling(&cloud, count)?;
    Ok(Prepared {
        cloud,
        index,
        keypoints,
    })
}

/// Describe and match one scale. Failures on either side abandon the scale
/// (recorded in the diagnostics) rather than the whole run.
fn process_scale(
    source: &Prepared,
    target: &Prepared,
    scale: Scale,
    radius: f64,
    cfg: &PipelineConfig,
    timings: &mut StageTimings,
) -> ScaleArtifacts {
    let describe_start = Instant::now();
    let set_source = describe_set(
        &source.cloud,
        &source.index,
        &source.keypoints,
        radius,
        scale,
        cfg,
    );
    let set_target = describe_set(
        &target.cloud,
        &target.index,
        &target.keypoints,
        radius,
        scale,
        cfg,
    );
    timings.describe_ms += ms_since(describe_start);

    let (set_source, set_target) = match (set_source, set_target) {
        (Ok(s), Ok(t)) => (s, t),
        (s, t) => {
            let (source_keypoints, source_skipped) = side_counts(&s, source.keypoints.len());
            let (target_keypoints, target_skipped) = side_counts(&t, target.keypoints.len());
            return ScaleArtifacts {
                diagnostics: ScaleDiagnostics {
                    scale,
                    source_keypoints,
                    source_skipped,
                    target_keypoints,
                    target_skipped,
                    correspondences: 0,
                    processed: false,
                },
                correspondences: CorrespondenceSet::new(),
            };
        }
    };

    let match_start = Instant::now();
    let correspondences = match_scale(&set_source, &set_target, cfg);
    timings.match_ms += ms_since(match_start);

    ScaleArtifacts {
        diagnostics: ScaleDiagnostics {
            scale,
            source_keypoints: set_source.len(),
            source_skipped: set_source.skipped,
            target_keypoints: set_target.len(),
            target_skipped: set_target.skipped,
            correspondences: correspondences.len(),
            processed: true,
        },
        correspondences,
    }
}

fn side_counts(set: &Result<DescriptorSet>, attempted: usize) -> (usize, usize) {
    match set {
        Ok(s) => (s.len(), s.skipped),
        Err(_) => (0, attempted),
    }
}

/// Consensus over the pooled hypotheses, a robust solve on the consensus
/// set, then one uniform least-squares refit on the solver's inliers. The
/// returned inlier list is measured against the whole pool.
fn solve_chain(
    pooled: &CorrespondenceSet,
    voxel_size: f64,
    solver: SolverKind,
    cfg: &PipelineConfig,
) -> Result<(RigidTransform, Vec<usize>)> {
    let epsilon = cfg.resolved_epsilon(voxel_size);
    let consensus = consensus_maximize(pooled, &pooled.hypotheses, epsilon)
        .map_err(|e| e.at_stage("consensus"))?;
    let pruned = subset(pooled, &consensus.inliers);
    let report = match solver {
        SolverKind::Ransac => ransac(
            &pruned,
            epsilon,
            cfg.ransac_max_iter,
            cfg.ransac_confidence,
            cfg.seed,
        ),
        SolverKind::KcoreGnc => kiss_solver(&pruned, voxel_size, cfg),
    }
    .map_err(|e| e.at_stage("solve"))?;

    let refined: Vec<usize> = report
        .inliers
        .iter()
        .map(|&i| consensus.inliers[i])
        .collect();
    let mut transform = report.transform;
    if refined.len() >= 3 {
        let src: Vec<Point3> = refined.iter().map(|&i| pooled.source[i]).collect();
        let tgt: Vec<Point3> = refined.iter().map(|&i| pooled.target[i]).collect();
        if let Ok(refit) = kabsch_weighted(&src, &tgt, &vec![1.0; refined.len()]) {
            transform = refit;
        }
    }
    let inliers = count_inliers(pooled, &transform, epsilon);
    Ok((transform, inliers))
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rodrigues_align;
    use crate::rng::{derived_rng, stream};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Room-like scene below the origin (scanner-on-a-tripod geometry): a
    /// gently wavy floor, two walls, box obstacles, and a sphere. Keeping the
    /// structure below z = 0 makes the default sensor origin consistent for
    /// both clouds under yaw-dominant transforms.
    fn test_scene(seed: u64) -> PointCloud {
        let mut rng = derived_rng(seed, &[stream::SCENE]);
        let mut points: Vec<Point3> = Vec::new();

        for _ in 0..5000 {
            let x: f64 = rng.random_range(-6.0..6.0);
            let y: f64 = rng.random_range(-6.0..6.0);
            let z = -2.0 + 0.15 * (0.8 * x).sin() * (0.6 * y).cos();
            points.push(Point3::new(x, y, z));
        }
        for _ in 0..1200 {
            points.push(Point3::new(
                rng.random_range(-6.0..6.0),
                6.0,
                rng.random_range(-2.0..-0.4),
            ));
        }
        for _ in 0..1200 {
            points.push(Point3::new(
                -6.0,
                rng.random_range(-6.0..6.0),
                rng.random_range(-2.0..-0.4),
            ));
        }
        for _ in 0..4 {
            let cx = rng.random_range(-4.5..4.5);
            let cy = rng.random_range(-4.5..4.5);
            let hx = rng.random_range(0.3..0.7);
            let hy = rng.random_range(0.3..0.7);
            let top = rng.random_range(-1.4..-0.6);
            for _ in 0..250 {
                points.push(Point3::new(
                    cx + rng.random_range(-hx..hx),
                    cy + rng.random_range(-hy..hy),
                    top,
                ));
            }
            for _ in 0..400 {
                let z = rng.random_range(-2.0..top);
                let side: u8 = rng.random_range(0..4);
                let (x, y) = match side {
                    0 => (cx + hx, cy + rng.random_range(-hy..hy)),
                    1 => (cx - hx, cy + rng.random_range(-hy..hy)),
                    2 => (cx + rng.random_range(-hx..hx), cy + hy),
                    _ => (cx + rng.random_range(-hx..hx), cy - hy),
                };
                points.push(Point3::new(x, y, z));
            }
        }
        let (sx, sy) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        for _ in 0..600 {
            let z = rng.random_range(-1.0_f64..1.0);
            let theta = rng.random_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).sqrt();
            points.push(Point3::new(
                sx + 0.5 * r * theta.cos(),
                sy + 0.5 * r * theta.sin(),
                -1.3 + 0.5 * z,
            ));
        }
        PointCloud::new(points)
    }

    /// A yaw-dominant rigid transform with a small tilt and bounded
    /// translation, the regime the default sensor origin tolerates.
    fn yawish_transform(yaw: f64, tilt: f64, translation: Vector3<f64>) -> RigidTransform {
        let spin = RotationMatrix::about_z(yaw);
        let tilt_axis = Vector3::new(tilt.sin(), 0.0, tilt.cos()).normalize();
        let frame = rodrigues_align(&tilt_axis).unwrap();
        let rotation = RotationMatrix::try_new(
            frame.matrix().transpose() * spin.matrix() * frame.matrix(),
        )
        .unwrap();
        RigidTransform {
            rotation,
            translation,
        }
    }

    fn noisy(cloud: &PointCloud, sigma: f64, rng: &mut ChaCha8Rng) -> PointCloud {
        use rand_distr::{Distribution, Normal};
        let normal = Normal::new(0.0, sigma).unwrap();
        PointCloud::new(
            cloud
                .points
                .iter()
                .map(|p| {
                    Point3::new(
                        p.x + normal.sample(rng),
                        p.y + normal.sample(rng),
                        p.z + normal.sample(rng),
                    )
                })
                .collect(),
        )
    }

    /// Smaller sampling budgets keep the end-to-end tests fast without
    /// changing any algorithmic behavior.
    fn fast_config() -> PipelineConfig {
        PipelineConfig {
            n_fps: 400,
            n_r: 600,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn identity_pair_recovers_identity() {
        let scene = test_scene(11);
        let cfg = fast_config();
        let result = register(&scene, &scene, &cfg).expect("identity registration");
        let (rot_deg, trans_err) = pose_errors(&RigidTransform::identity(), &result.transform);
        assert!(rot_deg <= 0.5, "rotation error {rot_deg} deg");
        assert!(
            trans_err <= 0.05 * result.voxel_size,
            "translation error {trans_err} m vs voxel {}",
            result.voxel_size
        );
        assert!(!result.early_exited);
        assert!(result.inlier_count >= 3);
        assert_eq!(result.scales.len(), 3);
        assert!(result.scales.iter().any(|s| s.correspondences > 0));
    }

    #[test]
    fn recovers_planted_transform() {
        let scene = test_scene(23);
        let gt = yawish_transform(0.6, 0.04, Vector3::new(0.5, -0.4, 0.15));
        let mut rng = derived_rng(23, &[stream::BENCH_PAIR]);
        let target = noisy(&gt.apply(&scene), 0.002, &mut rng);
        let cfg = fast_config();
        let result = register(&scene, &target, &cfg).expect("registration");
        let (rot_deg, trans_err) = pose_errors(&gt, &result.transform);
        assert!(rot_deg <= 2.0, "rotation error {rot_deg} deg");
        assert!(trans_err <= 0.3, "translation error {trans_err} m");
        assert!(result.inlier_count >= cfg.tau_n);
    }

    #[test]
    fn register_is_deterministic() {
        let scene = test_scene(31);
        let gt = yawish_transform(-0.4, 0.03, Vector3::new(-0.3, 0.2, 0.1));
        let target = gt.apply(&scene);
        let cfg = fast_config();
        let a = register(&scene, &target, &cfg).expect("first run");
        let b = register(&scene, &target, &cfg).expect("second run");
        assert_eq!(a.transform.to_matrix_rows(), b.transform.to_matrix_rows());
        assert_eq!(a.inlier_count, b.inlier_count);
        assert_eq!(a.scales, b.scales);
        assert_eq!(a.voxel_size, b.voxel_size);
    }

    #[test]
    fn lite_tau_zero_always_early_exits() {
        let scene = test_scene(47);
        let cfg = PipelineConfig {
            tau_n: 0,
            ..fast_config()
        };
        let result = register_lite(&scene, &scene, &cfg).expect("lite registration");
        assert!(result.early_exited);
        assert_eq!(result.scales.len(), 1);
        assert_eq!(result.scales[0].scale, Scale::Middle);
        let (rot_deg, trans_err) = pose_errors(&RigidTransform::identity(), &result.transform);
        assert!(rot_deg <= 0.5, "rotation error {rot_deg} deg");
        assert!(trans_err <= 0.1, "translation error {trans_err} m");
    }

    #[test]
    fn lite_easy_pair_early_exits_within_thresholds() {
        let scene = test_scene(53);
        let gt = yawish_transform(0.35, 0.02, Vector3::new(0.3, 0.25, -0.05));
        let mut rng = derived_rng(53, &[stream::BENCH_PAIR]);
        let target = noisy(&gt.apply(&scene), 0.002, &mut rng);
        // Full keypoint density: the middle scale must reach tau_n on its own,
        // and inlier counts grow with keypoint coverage.
        let cfg = PipelineConfig {
            tau_n: 25,
            n_r: 600,
            ..PipelineConfig::default()
        };
        let result = register_lite(&scene, &target, &cfg).expect("lite registration");
        assert!(result.early_exited, "easy pair should exit early");
        assert_eq!(result.scales.len(), 1);
        let (rot_deg, trans_err) = pose_errors(&gt, &result.transform);
        assert!(success(rot_deg, trans_err, 5.0, 2.0), "{rot_deg} deg / {trans_err} m");
    }

    #[test]
    fn lite_unreachable_threshold_falls_through_with_full_trace() {
        let scene = test_scene(61);
        let gt = yawish_transform(0.5, 0.03, Vector3::new(0.2, -0.3, 0.1));
        let target = gt.apply(&scene);
        let cfg = PipelineConfig {
            tau_n: usize::MAX,
            solver: SolverKind::KcoreGnc,
            ..fast_config()
        };
        let lite = register_lite(&scene, &target, &cfg).expect("lite registration");
        let full = register(&scene, &target, &cfg).expect("full registration");
        assert!(!lite.early_exited);
        assert_eq!(lite.scales.len(), 3);
        // The fall-through path must process the same scales with the same
        // outcome as the full pipeline.
        assert_eq!(lite.scales, full.scales);
        assert_eq!(lite.inlier_count, full.inlier_count);
        let lite_rows = lite.transform.to_matrix_rows();
        let full_rows = full.transform.to_matrix_rows();
        for (lr, fr) in lite_rows.iter().zip(full_rows.iter()) {
            for (a, b) in lr.iter().zip(fr.iter()) {
                assert!((a - b).abs() <= 1e-12, "lite {a} vs full {b}");
            }
        }
    }

    #[test]
    fn pipeline_is_rigid_equivariant() {
        let scene = test_scene(71);
        let gt = yawish_transform(0.45, 0.02, Vector3::new(0.4, 0.1, -0.1));
        let target = gt.apply(&scene);
        let cfg = fast_config();
        let g = yawish_transform(-0.7, 0.03, Vector3::new(0.6, -0.5, 0.2));
        let moved_source = g.apply(&scene);
        let expected = RigidTransform::compose(&gt, &g.inverse());
        let result = register(&moved_source, &target, &cfg).expect("registration");
        let (rot_deg, trans_err) = pose_errors(&expected, &result.transform);
        assert!(rot_deg <= 1.0, "rotation error {rot_deg} deg");
        assert!(
            trans_err <= 2.0 * result.voxel_size,
            "translation error {trans_err} m vs voxel {}",
            result.voxel_size
        );
    }

    #[test]
    fn rre_matches_planted_angles() {
        for &deg in &[1.0_f64, 10.0, 90.0, 179.0] {
            let angle = deg.to_radians();
            let axis = Vector3::new(0.3, -0.5, 0.8).normalize();
            let frame = rodrigues_align(&axis).unwrap();
            let spin = RotationMatrix::about_z(angle);
            let rot = RotationMatrix::try_new(
                frame.matrix() * spin.matrix() * frame.matrix().transpose(),
            )
            .unwrap();
            let measured = rre(&RotationMatrix::identity(), &rot);
            assert!(
                (measured - deg).abs() <= 1e-9,
                "angle {deg}: measured {measured}"
            );
        }
    }

    #[test]
    fn rre_is_total_under_roundoff() {
        let mut rng = derived_rng(99, &[stream::SCENE]);
        for _ in 0..50 {
            let axis = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if axis.norm() < 1e-3 {
                continue;
            }
            let frame = rodrigues_align(&axis.normalize()).unwrap();
            let spin = RotationMatrix::about_z(rng.random_range(0.0..2.0 * PI));
            let rot = RotationMatrix::try_new(
                frame.matrix() * spin.matrix() * frame.matrix().transpose(),
            )
            .unwrap();
            // tr(R^T R) carries round-off slightly past 3; the clamp must
            // absorb it instead of returning NaN.
            let same = rre(&rot, &rot);
            assert!(same.is_finite());
            // acos resolves nothing below ~1e-8 rad, so the self-distance is
            // not exactly zero, only negligible.
            assert!(same.abs() <= 1e-5, "self-rre {same}");
        }
    }

    #[test]
    fn rte_is_euclidean_and_success_uses_closed_thresholds() {
        let gt = Vector3::new(1.0, 2.0, 2.0);
        let est = Vector3::new(1.0, 2.0, 0.0);
        assert!((rte(&gt, &est) - 2.0).abs() <= 1e-12);

        assert!(success(0.0, 0.0, 5.0, 2.0));
        assert!(success(5.0, 2.0, 5.0, 2.0), "thresholds are inclusive");
        assert!(!success(5.0 + 1e-9, 2.0, 5.0, 2.0));
        assert!(!success(5.0, 2.0 + 1e-9, 5.0, 2.0));
        assert!(!success(0.0, 1.0, 5.0, 0.5), "t offset beyond tau_trans");
    }

    #[test]
    fn metric_report_averages_over_successes_only() {
        let report = MetricReport::from_errors(
            vec![0.2, 30.0, 0.4],
            vec![0.05, 0.01, 0.15],
            5.0,
            2.0,
        );
        assert_eq!(report.success, vec![true, false, true]);
        assert!((report.success_rate - 2.0 / 3.0).abs() <= 1e-12);
        assert!((report.mean_rre_deg.unwrap() - 0.3).abs() <= 1e-12);
        assert!((report.mean_rte_m.unwrap() - 0.10).abs() <= 1e-12);

        let empty = MetricReport::from_errors(vec![90.0], vec![50.0], 5.0, 2.0);
        assert_eq!(empty.mean_rre_deg, None);
        assert_eq!(empty.mean_rte_m, None);
        assert_eq!(empty.success_rate, 0.0);

        let none = MetricReport::from_errors(vec![], vec![], 5.0, 2.0);
        assert_eq!(none.success_rate, 0.0);
    }
}

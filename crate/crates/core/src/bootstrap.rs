//! Geometric bootstrapping: the scene itself supplies every scale parameter.
//!
//! The stage estimates a voxel size from the shape of the larger cloud, then
//! solves for three neighborhood radii whose mean neighbor fractions hit the
//! configured targets. No training data, no per-dataset tuning.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};
use crate::rng::{derived_rng, stream};
use crate::spatial::SpatialIndex;

/// The three descriptor scales, ordered from tightest to widest neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Local,
    Middle,
    Global,
}

impl Scale {
    pub const ALL: [Scale; 3] = [Scale::Local, Scale::Middle, Scale::Global];

    pub fn index(self) -> usize {
        match self {
            Scale::Local => 0,
            Scale::Middle => 1,
            Scale::Global => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scale::Local => "local",
            Scale::Middle => "middle",
            Scale::Global => "global",
        }
    }
}

/// Search radii per scale, meters. Always `0 < local <= middle <= global`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleRadii {
    pub local: f64,
    pub middle: f64,
    pub global: f64,
}

impl ScaleRadii {
    pub fn get(&self, scale: Scale) -> f64 {
        match scale {
            Scale::Local => self.local,
            Scale::Middle => self.middle,
            Scale::Global => self.global,
        }
    }
}

/// Principal-component summary of a sampled cloud.
#[derive(Debug, Clone, Serialize)]
pub struct SceneShape {
    /// Covariance eigenvalues, descending.
    pub eigenvalues: [f64; 3],
    /// Matching unit eigenvectors; `axes[2]` is the minor axis.
    #[serde(skip)]
    pub axes: [Vector3<f64>; 3],
    /// Minor-to-major eigenvalue ratio in [0, 1]; low values mean disc-like.
    pub sphericity: f64,
    /// Extent of the sample along the minor axis, meters.
    pub spread: f64,
    pub sample_size: usize,
}

/// The cloud that drives bootstrapping: the larger one, ties favoring `p`.
pub fn larger_cloud<'a>(p: &'a PointCloud, q: &'a PointCloud) -> &'a PointCloud {
    if q.len() > p.len() {
        q
    } else {
        p
    }
}

// ---------------------------------------------------------------------------
// Voxel downsampling
// ---------------------------------------------------------------------------

/// Replaces each occupied cell of an axis-aligned grid with the centroid of
/// its member points. Output order is first occurrence of each cell.
pub fn voxel_downsample(cloud: &PointCloud, voxel_size: f64) -> Result<PointCloud> {
    if !voxel_size.is_finite() || voxel_size <= 0.0 {
        return Err(Error::invalid(format!(
            "voxel size must be positive and finite, got {voxel_size}"
        )));
    }
    let mut slots: HashMap<(i64, i64, i64), usize> = HashMap::with_capacity(cloud.len());
    let mut cells: Vec<(Vector3<f64>, u32)> = Vec::new();
    for p in &cloud.points {
        let key = (
            (p.x / voxel_size).floor() as i64,
            (p.y / voxel_size).floor() as i64,
            (p.z / voxel_size).floor() as i64,
        );
        match slots.entry(key) {
            std::collections::hash_map::Entry::Occupied(e) => {
                let cell = &mut cells[*e.get()];
                cell.0 += p.coords;
                cell.1 += 1;
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(cells.len());
                cells.push((p.coords, 1));
            }
        }
    }
    let points = cells
        .into_iter()
        .map(|(sum, count)| Point3::from(sum / count as f64))
        .collect();
    Ok(PointCloud {
        points,
        source: cloud.source.clone(),
    })
}

// ---------------------------------------------------------------------------
// Scene shape and voxel size
// ---------------------------------------------------------------------------

/// PCA over a `delta_v` fraction of the cloud (at least 3 points).
pub fn scene_shape(cloud: &PointCloud, delta_v: f64, seed: u64) -> Result<SceneShape> {
    if !(delta_v > 0.0 && delta_v <= 1.0) {
        return Err(Error::invalid(format!(
            "sampling fraction must lie in (0, 1], got {delta_v}"
        )));
    }
    let n = cloud.len();
    if n < 3 {
        return Err(Error::InsufficientData {
            stage: "shape analysis",
            detail: format!("need at least 3 points, have {n}"),
        });
    }
    let k = ((delta_v * n as f64).ceil() as usize).clamp(3, n);
    let mut rng = derived_rng(seed, &[stream::VOXEL_SHAPE]);
    let mut indices: Vec<usize> = rand::seq::index::sample(&mut rng, n, k).iter().collect();
    indices.sort_unstable();

    let mut mean = Vector3::zeros();
    for &i in &indices {
        mean += cloud.points[i].coords;
    }
    mean /= k as f64;
    let mut cov = Matrix3::zeros();
    for &i in &indices {
        let d = cloud.points[i].coords - mean;
        cov += d * d.transpose();
    }
    cov /= k as f64;

    let eigen = nalgebra::SymmetricEigen::new(cov);
    let mut pairs: Vec<(f64, Vector3<f64>)> = (0..3)
        .map(|i| {
            (
                eigen.eigenvalues[i].max(0.0),
                eigen.eigenvectors.column(i).into_owned(),
            )
        })
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));
    let eigenvalues = [pairs[0].0, pairs[1].0, pairs[2].0];
    let axes = [pairs[0].1, pairs[1].1, pairs[2].1];
    let sphericity = if eigenvalues[0] > 0.0 {
        (eigenvalues[2] / eigenvalues[0]).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let minor = axes[2];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in &indices {
        let t = cloud.points[i].coords.dot(&minor);
        lo = lo.min(t);
        hi = hi.max(t);
    }
    Ok(SceneShape {
        eigenvalues,
        axes,
        sphericity,
        spread: hi - lo,
        sample_size: k,
    })
}

/// Voxel size from an already computed shape summary.
pub fn voxel_size_from_shape(shape: &SceneShape, cfg: &PipelineConfig) -> Result<f64> {
    let kappa = if shape.sphericity >= cfg.tau_v {
        cfg.kappa_spheric
    } else {
        cfg.kappa_disc
    };
    let v = kappa * shape.spread.sqrt();
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::InsufficientData {
            stage: "voxel estimation",
            detail: format!(
                "degenerate scene (spread {} m along the minor axis)",
                shape.spread
            ),
        });
    }
    Ok(v)
}

/// Self-tuned voxel size for a cloud pair: shape analysis of the larger cloud
/// picks the coefficient (spheric vs disc-like) applied to sqrt(spread).
pub fn estimate_voxel_size(p: &PointCloud, q: &PointCloud, cfg: &PipelineConfig) -> Result<f64> {
    let shape = scene_shape(larger_cloud(p, q), cfg.delta_v, cfg.seed)?;
    voxel_size_from_shape(&shape, cfg)
}

// ---------------------------------------------------------------------------
// Radius estimation
// ---------------------------------------------------------------------------

/// The query sample used to solve for the radii (at most `n_r` points).
pub fn radius_sample(cloud: &PointCloud, n_r: usize, seed: u64) -> Result<Vec<Point3>> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::InsufficientData {
            stage: "radius estimation",
            detail: "empty cloud".into(),
        });
    }
    if n <= n_r {
        return Ok(cloud.points.clone());
    }
    let mut rng = derived_rng(seed, &[stream::RADIUS_SAMPLE]);
    let mut indices: Vec<usize> = rand::seq::index::sample(&mut rng, n, n_r).iter().collect();
    indices.sort_unstable();
    Ok(indices.iter().map(|&i| cloud.points[i]).collect())
}

/// Mean neighbor fraction over the sample at radius `r` (self included):
/// an exact integer pair count divided by n^2, so it is nondecreasing in `r`
/// and independent of summation order.
fn mean_neighbor_fraction(index: &SpatialIndex, sample: &[Point3], r: f64) -> f64 {
    let total: usize = sample
        .par_iter()
        .map(|q| index.count_within(q, r))
        .sum();
    total as f64 / (sample.len() as f64 * sample.len() as f64)
}

/// Solves for the radius whose mean neighbor fraction is closest to `tau` by
/// bisection over `[lo, hi]`; the objective is a nondecreasing step function.
fn solve_radius(index: &SpatialIndex, sample: &[Point3], tau: f64, lo0: f64, hi0: f64) -> f64 {
    const REL_TOL: f64 = 1e-4;
    let f_lo = mean_neighbor_fraction(index, sample, lo0);
    if f_lo >= tau {
        return lo0;
    }
    let f_hi = mean_neighbor_fraction(index, sample, hi0);
    if f_hi <= tau {
        return hi0;
    }
    let (mut lo, mut hi) = (lo0, hi0);
    let (mut f_lo, mut f_hi) = (f_lo, f_hi);
    while hi - lo > REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        let f_mid = mean_neighbor_fraction(index, sample, mid);
        if f_mid < tau {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    if (f_hi - tau).abs() <= (f_lo - tau).abs() {
        hi
    } else {
        lo
    }
}

/// Pairwise distance extremes of the sample: (min nonzero, max).
fn distance_bracket(sample: &[Point3]) -> (f64, f64) {
    let n = sample.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for j in (i + 1)..n {
                let d = (sample[i] - sample[j]).norm();
                if d > 0.0 {
                    lo = lo.min(d);
                }
                hi = hi.max(d);
            }
            (lo, hi)
        })
        .reduce(
            || (f64::INFINITY, 0.0),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        )
}

/// Solves for the three scale radii on a sample of the (downsampled) cloud.
/// Radii are clamped to `r_max` and forced monotone across scales.
pub fn estimate_radii(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<ScaleRadii> {
    let sample = radius_sample(cloud, cfg.n_r, cfg.seed)?;
    if sample.len() < 2 {
        return Err(Error::InsufficientData {
            stage: "radius estimation",
            detail: format!("need at least 2 sampled points, have {}", sample.len()),
        });
    }
    let (min_dist, diameter) = distance_bracket(&sample);
    if !(diameter > 0.0) || !min_dist.is_finite() {
        return Err(Error::InsufficientData {
            stage: "radius estimation",
            detail: "all sampled points coincide".into(),
        });
    }
    let index = SpatialIndex::build(&sample);
    let [tau_l, tau_m, tau_g] = cfg.neighbor_fractions();
    let local = solve_radius(&index, &sample, tau_l, min_dist, diameter);
    let middle = solve_radius(&index, &sample, tau_m, min_dist, diameter).max(local);
    let global = solve_radius(&index, &sample, tau_g, min_dist, diameter).max(middle);
    Ok(ScaleRadii {
        local: local.min(cfg.r_max),
        middle: middle.min(cfg.r_max),
        global: global.min(cfg.r_max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, extent: f64, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-extent..extent),
                    rng.random_range(-extent..extent),
                    rng.random_range(-extent..extent),
                )
            })
            .collect()
    }

    /// Independent binning oracle: count distinct occupied cells.
    fn occupied_cells(cloud: &PointCloud, v: f64) -> usize {
        cloud
            .points
            .iter()
            .map(|p| {
                (
                    (p.x / v).floor() as i64,
                    (p.y / v).floor() as i64,
                    (p.z / v).floor() as i64,
                )
            })
            .collect::<BTreeSet<_>>()
            .len()
    }

    #[test]
    fn downsample_matches_binning_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..50 {
            let n = rng.random_range(1..500);
            let cloud = random_cloud(n, 5.0, 1000 + trial);
            let v = rng.random_range(0.05..3.0);
            let down = voxel_downsample(&cloud, v).unwrap();
            assert_eq!(down.len(), occupied_cells(&cloud, v), "trial {trial}");
        }
    }

    #[test]
    fn downsample_single_point_is_exact() {
        let p = Point3::new(0.123456789, -7.5, 2.25);
        let cloud = PointCloud::new(vec![p]);
        let down = voxel_downsample(&cloud, 0.7).unwrap();
        assert_eq!(down.points, vec![p]);
    }

    #[test]
    fn downsample_centroids_are_member_means() {
        // Two points in one cell, one in another; coordinates chosen so the
        // mean is exact in f64.
        let cloud = PointCloud::new(vec![
            Point3::new(0.25, 0.5, 0.125),
            Point3::new(0.75, 0.25, 0.375),
            Point3::new(5.0, 5.0, 5.0),
        ]);
        let down = voxel_downsample(&cloud, 1.0).unwrap();
        assert_eq!(down.len(), 2);
        assert_eq!(down.points[0], Point3::new(0.5, 0.375, 0.25));
        assert_eq!(down.points[1], Point3::new(5.0, 5.0, 5.0));
    }

    #[test]
    fn downsample_rejects_bad_voxel_and_keeps_empty() {
        assert!(voxel_downsample(&PointCloud::default(), 0.0).is_err());
        assert!(voxel_downsample(&PointCloud::default(), -1.0).is_err());
        let empty = voxel_downsample(&PointCloud::default(), 1.0).unwrap();
        assert!(empty.is_empty());
    }

    /// A flat disc: 2000 points, z confined to a thin slab.
    fn disc_cloud(seed: u64, extent: f64, thickness: f64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..2000)
            .map(|_| {
                Point3::new(
                    rng.random_range(-extent..extent),
                    rng.random_range(-extent..extent),
                    rng.random_range(-thickness..thickness),
                )
            })
            .collect()
    }

    #[test]
    fn disc_cloud_is_disc_branch_and_sphere_is_spheric() {
        let cfg = PipelineConfig::default();
        let disc = disc_cloud(41, 50.0, 0.5);
        let shape = scene_shape(&disc, cfg.delta_v, cfg.seed).unwrap();
        assert!(shape.sphericity < cfg.tau_v, "sphericity {}", shape.sphericity);
        // Minor axis must be close to +/-z for a z-slab.
        assert!(shape.axes[2].z.abs() > 0.99);

        let ball = random_cloud(2000, 5.0, 43);
        let shape = scene_shape(&ball, cfg.delta_v, cfg.seed).unwrap();
        assert!(shape.sphericity >= cfg.tau_v, "sphericity {}", shape.sphericity);
    }

    #[test]
    fn voxel_size_uses_the_right_coefficient() {
        let cfg = PipelineConfig::default();
        let disc = disc_cloud(47, 50.0, 0.5);
        let shape = scene_shape(&disc, cfg.delta_v, cfg.seed).unwrap();
        let v = voxel_size_from_shape(&shape, &cfg).unwrap();
        assert!((v - cfg.kappa_disc * shape.spread.sqrt()).abs() < 1e-12);

        let ball = random_cloud(2000, 5.0, 49);
        let shape = scene_shape(&ball, cfg.delta_v, cfg.seed).unwrap();
        let v = voxel_size_from_shape(&shape, &cfg).unwrap();
        assert!((v - cfg.kappa_spheric * shape.spread.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn voxel_size_scale_equivariance() {
        // Scaling coordinates by alpha scales the voxel size by sqrt(alpha).
        let cfg = PipelineConfig::default();
        let base = random_cloud(1500, 4.0, 53);
        let alpha = 9.0;
        let scaled: PointCloud = base
            .points
            .iter()
            .map(|p| Point3::from(p.coords * alpha))
            .collect();
        let v1 = estimate_voxel_size(&base, &base, &cfg).unwrap();
        let v2 = estimate_voxel_size(&scaled, &scaled, &cfg).unwrap();
        assert!(
            (v2 - alpha.sqrt() * v1).abs() <= 1e-9 * v2.abs(),
            "v1 = {v1}, v2 = {v2}"
        );
    }

    #[test]
    fn degenerate_flat_cloud_errors() {
        // All points identical: zero spread along every axis.
        let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0); 100]);
        let cfg = PipelineConfig::default();
        assert!(estimate_voxel_size(&cloud, &cloud, &cfg).is_err());
        let tiny = PointCloud::new(vec![Point3::origin(); 2]);
        assert!(scene_shape(&tiny, 0.1, 0).is_err());
    }

    #[test]
    fn larger_cloud_ties_prefer_first() {
        let a = PointCloud::with_source(vec![Point3::origin(); 5], "a");
        let b = PointCloud::with_source(vec![Point3::origin(); 5], "b");
        assert_eq!(larger_cloud(&a, &b).source.as_deref(), Some("a"));
        let c = PointCloud::with_source(vec![Point3::origin(); 6], "c");
        assert_eq!(larger_cloud(&a, &c).source.as_deref(), Some("c"));
    }

    /// 101 points on a line with 1 m spacing: the fraction step at r = 1.0
    /// lands nearest tau = 0.02, so the solver must return ~1.0.
    #[test]
    fn line_grid_radius_lands_on_spacing() {
        let cloud: PointCloud = (0..101)
            .map(|i| Point3::new(i as f64, 0.0, 0.0))
            .collect();
        let cfg = PipelineConfig {
            r_max: 1e9,
            ..PipelineConfig::default()
        };
        let sample = radius_sample(&cloud, cfg.n_r, cfg.seed).unwrap();
        assert_eq!(sample.len(), 101);
        let index = SpatialIndex::build(&sample);
        let r = solve_radius(&index, &sample, 0.02, 1.0, 100.0);
        assert!((r - 1.0).abs() <= 1e-3, "r = {r}");
        // Sanity: fractions on the two plateaus around the step.
        assert!((mean_neighbor_fraction(&index, &sample, 0.99) - 0.0099).abs() < 1e-3);
        assert!((mean_neighbor_fraction(&index, &sample, 1.0) - 0.0295).abs() < 1e-3);
    }

    #[test]
    fn tau_one_returns_diameter_then_clamps() {
        let cloud = random_cloud(300, 2.0, 59);
        let mut cfg = PipelineConfig {
            tau_l: 1.0,
            tau_m: 1.0,
            tau_g: 1.0,
            r_max: 1e9,
            ..PipelineConfig::default()
        };
        let sample = radius_sample(&cloud, cfg.n_r, cfg.seed).unwrap();
        let (_, diameter) = distance_bracket(&sample);
        let radii = estimate_radii(&cloud, &cfg).unwrap();
        assert!((radii.global - diameter).abs() < 1e-12);
        // With the default clamp the same solve caps at r_max.
        cfg.r_max = 1.5;
        let radii = estimate_radii(&cloud, &cfg).unwrap();
        assert_eq!(radii.global, 1.5);
        assert!(radii.local <= radii.middle && radii.middle <= radii.global);
    }

    #[test]
    fn radii_are_monotone_and_positive_on_random_clouds() {
        for seed in 0..5 {
            let cloud = random_cloud(800, 10.0, 600 + seed);
            let cfg = PipelineConfig::default();
            let radii = estimate_radii(&cloud, &cfg).unwrap();
            assert!(radii.local > 0.0);
            assert!(radii.local <= radii.middle && radii.middle <= radii.global);
            assert!(radii.global <= cfg.r_max);
        }
    }

    #[test]
    fn estimate_radii_rejects_degenerate_clouds() {
        let cfg = PipelineConfig::default();
        assert!(estimate_radii(&PointCloud::default(), &cfg).is_err());
        let coincident = PointCloud::new(vec![Point3::origin(); 50]);
        assert!(estimate_radii(&coincident, &cfg).is_err());
    }

    /// Mean neighbor fraction must be nondecreasing in r.
    #[test]
    fn neighbor_fraction_is_monotone() {
        let cloud = random_cloud(400, 3.0, 71);
        let index = SpatialIndex::build(&cloud.points);
        let mut prev = 0.0;
        for i in 1..=40 {
            let r = i as f64 * 0.25;
            let f = mean_neighbor_fraction(&index, &cloud.points, r);
            assert!(f >= prev);
            prev = f;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }
}

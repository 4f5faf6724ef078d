//! Patch descriptors: a cylindrical occupancy histogram and its yaw-invariant
//! feature vector.
//!
//! Patch points are rotated into the canonical frame (minor axis on +z) and
//! binned into an H x W x D cylinder: H uniform height bins over z in [-1, 1],
//! W uniform yaw sectors, and a D-bin radial histogram with triangular soft
//! assignment between adjacent bins. Rotating a patch about its axis by a
//! whole number of sectors circularly shifts the map along W, which is what
//! the yaw correlation in matching exploits; summing out height and yaw gives
//! a feature that is invariant to that rotation entirely.

use rayon::prelude::*;

use crate::bootstrap::Scale;
use crate::config::{BackendKind, PipelineConfig};
use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud, RotationMatrix};
use crate::sampling::{extract_patch, Patch};
use crate::spatial::SpatialIndex;

/// Dense H x W x D histogram, normalized by patch point count.
#[derive(Debug, Clone, PartialEq)]
pub struct CylindricalMap {
    height: usize,
    sectors: usize,
    radial: usize,
    data: Vec<f64>,
}

impl CylindricalMap {
    pub fn zeros(height: usize, sectors: usize, radial: usize) -> CylindricalMap {
        CylindricalMap {
            height,
            sectors,
            radial,
            data: vec![0.0; height * sectors * radial],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.sectors, self.radial)
    }

    #[inline]
    fn offset(&self, h: usize, w: usize, d: usize) -> usize {
        (h * self.sectors + w) * self.radial + d
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, d: usize) -> f64 {
        self.data[self.offset(h, w, d)]
    }

    #[inline]
    pub fn add(&mut self, h: usize, w: usize, d: usize, value: f64) {
        let i = self.offset(h, w, d);
        self.data[i] += value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn total_mass(&self) -> f64 {
        self.data.iter().sum()
    }

    /// The map with every sector index advanced by `k`: content of sector `w`
    /// moves to sector `(w + k) mod W`, as a physical rotation by `k` sectors
    /// would produce.
    pub fn shifted(&self, k: usize) -> CylindricalMap {
        let mut out = CylindricalMap::zeros(self.height, self.sectors, self.radial);
        for h in 0..self.height {
            for w in 0..self.sectors {
                let target = (w + k) % self.sectors;
                for d in 0..self.radial {
                    let v = self.get(h, w, d);
                    let i = out.offset(h, target, d);
                    out.data[i] = v;
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &CylindricalMap) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// L2-normalized rotation-invariant feature (the radial marginal of the map).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Squared Euclidean distance, the matching metric.
    pub fn dist2(&self, other: &FeatureVector) -> f64 {
        debug_assert_eq!(self.0.len(), other.0.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum()
    }
}

/// Descriptors for the surviving keypoints of one cloud at one scale.
/// `keypoints`, `frames`, `features`, and `maps` are index-aligned.
#[derive(Debug, Clone)]
pub struct DescriptorSet {
    pub scale: Scale,
    pub keypoints: Vec<Point3>,
    pub frames: Vec<RotationMatrix>,
    pub features: Vec<FeatureVector>,
    pub maps: Vec<CylindricalMap>,
    /// Keypoints dropped because their patch was too sparse or too flat.
    pub skipped: usize,
}

impl DescriptorSet {
    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

/// A descriptor backend turns a patch into a feature and a cylindrical map.
/// The histogram backend below is the only built-in; the trait keeps the
/// pipeline open to drop-in replacements with richer embeddings.
pub trait DescriptorBackend: Sync + Send {
    fn describe(&self, patch: &Patch) -> Result<(FeatureVector, CylindricalMap)>;
}

/// The built-in hand-crafted backend.
#[derive(Debug, Clone, Copy)]
pub struct CylindricalHistogram {
    pub height: usize,
    pub sectors: usize,
    pub radial: usize,
}

impl CylindricalHistogram {
    pub fn from_config(cfg: &PipelineConfig) -> CylindricalHistogram {
        CylindricalHistogram {
            height: cfg.map_h,
            sectors: cfg.map_w,
            radial: cfg.map_d,
        }
    }
}

impl DescriptorBackend for CylindricalHistogram {
    fn describe(&self, patch: &Patch) -> Result<(FeatureVector, CylindricalMap)> {
        if patch.points.is_empty() {
            return Err(Error::invalid("cannot describe an empty patch"));
        }
        let mut map = CylindricalMap::zeros(self.height, self.sectors, self.radial);
        let rot = patch.frame.matrix();
        for p in &patch.points {
            let q = rot * p;
            let h = height_bin(q.z, self.height);
            let w = sector_bin(q.y.atan2(q.x), self.sectors);
            let rho = (q.x * q.x + q.y * q.y).sqrt().clamp(0.0, 1.0);
            for (d, weight) in radial_soft_bins(rho, self.radial) {
                if weight > 0.0 {
                    map.add(h, w, d, weight);
                }
            }
        }
        let inv_n = 1.0 / patch.points.len() as f64;
        for v in &mut map.data {
            *v *= inv_n;
        }

        let mut feature = vec![0.0; self.radial];
        for h in 0..self.height {
            for w in 0..self.sectors {
                for (d, f) in feature.iter_mut().enumerate() {
                    *f += map.get(h, w, d);
                }
            }
        }
        // Total mass is exactly 1 after normalization, so the norm is > 0.
        let norm = feature.iter().map(|v| v * v).sum::<f64>().sqrt();
        for f in &mut feature {
            *f /= norm;
        }
        Ok((FeatureVector(feature), map))
    }
}

/// Height bin for z in [-1, 1]; out-of-range values clamp to the edge bins.
#[inline]
fn height_bin(z: f64, bins: usize) -> usize {
    let t = (z + 1.0) * 0.5 * bins as f64;
    (t.floor().max(0.0) as usize).min(bins - 1)
}

/// Yaw sector for an atan2 angle; sector 0 starts at angle 0.
#[inline]
fn sector_bin(phi: f64, sectors: usize) -> usize {
    let tau = std::f64::consts::TAU;
    let wrapped = if phi < 0.0 { phi + tau } else { phi };
    ((wrapped / tau * sectors as f64).floor() as usize).min(sectors - 1)
}

/// Triangular soft assignment of rho in [0, 1] onto `bins` radial channels
/// anchored at rho = k / bins; the two weights always sum to exactly 1.
#[inline]
fn radial_soft_bins(rho: f64, bins: usize) -> [(usize, f64); 2] {
    let u = rho * bins as f64;
    let k0 = u.floor();
    let frac = u - k0;
    let lo = (k0 as usize).min(bins - 1);
    let hi = ((k0 as usize) + 1).min(bins - 1);
    if lo == hi {
        [(lo, 1.0), (lo, 0.0)]
    } else {
        [(lo, 1.0 - frac), (hi, frac)]
    }
}

/// Convenience entry point matching the backend selected in the config.
pub fn describe(patch: &Patch, cfg: &PipelineConfig) -> Result<(FeatureVector, CylindricalMap)> {
    match cfg.descriptor_backend {
        BackendKind::CylindricalHistogram => {
            CylindricalHistogram::from_config(cfg).describe(patch)
        }
    }
}

/// Extracts and describes patches for every keypoint at one scale.
///
/// Keypoints whose patch is skipped (sparse or flat neighborhood) are dropped
/// from all output sequences; `skipped` records how many. Erroring only when
/// nothing survives keeps one bad scale from sinking the others.
pub fn describe_set(
    cloud: &PointCloud,
    index: &SpatialIndex,
    keypoint_indices: &[usize],
    radius: f64,
    scale: Scale,
    cfg: &PipelineConfig,
) -> Result<DescriptorSet> {
    let backend = CylindricalHistogram::from_config(cfg);
    let origin = nalgebra::Vector3::new(
        cfg.sensor_origin[0],
        cfg.sensor_origin[1],
        cfg.sensor_origin[2],
    );
    let described: Vec<Option<(Point3, RotationMatrix, FeatureVector, CylindricalMap)>> =
        keypoint_indices
            .par_iter()
            .map(|&ki| {
                let patch = extract_patch(
                    cloud, index, ki, radius, scale, cfg.n_patch, &origin, cfg.seed,
                )?;
                match patch {
                    Some(patch) => {
                        let (feature, map) = backend.describe(&patch)?;
                        Ok(Some((patch.center, patch.frame, feature, map)))
                    }
                    None => Ok(None),
                }
            })
            .collect::<Result<_>>()?;

    let mut set = DescriptorSet {
        scale,
        keypoints: Vec::new(),
        frames: Vec::new(),
        features: Vec::new(),
        maps: Vec::new(),
        skipped: 0,
    };
    for entry in described {
        match entry {
            Some((center, frame, feature, map)) => {
                set.keypoints.push(center);
                set.frames.push(frame);
                set.features.push(feature);
                set.maps.push(map);
            }
            None => set.skipped += 1,
        }
    }
    if set.is_empty() {
        return Err(Error::EmptyDescriptors(format!(
            "all {} candidate patches at the {} scale were skipped",
            keypoint_indices.len(),
            scale.label()
        )));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_backend() -> CylindricalHistogram {
        CylindricalHistogram {
            height: 7,
            sectors: 20,
            radial: 32,
        }
    }

    fn patch_from_points(points: Vec<Vector3<f64>>) -> Patch {
        Patch {
            center: Point3::origin(),
            radius: 1.0,
            scale: Scale::Middle,
            points,
            frame: RotationMatrix::identity(),
        }
    }

    /// Points whose yaw angles sit at sector centers, so small angular noise
    /// cannot move them across a sector boundary.
    fn sector_center_patch(seed: u64, sectors: usize) -> Patch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::new();
        for w in 0..sectors {
            let phi = (w as f64 + 0.5) * std::f64::consts::TAU / sectors as f64;
            for _ in 0..rng.random_range(1..6) {
                let rho: f64 = rng.random_range(0.1..0.95);
                let z: f64 = rng.random_range(-0.9..0.9);
                points.push(Vector3::new(rho * phi.cos(), rho * phi.sin(), z));
            }
        }
        patch_from_points(points)
    }

    #[test]
    fn single_point_occupies_exactly_one_cell() {
        let backend = test_backend();
        let patch = patch_from_points(vec![Vector3::new(0.5, 0.0, 0.0)]);
        let (feature, map) = backend.describe(&patch).unwrap();
        // z = 0 is height bin 3 of 7; phi = 0 is sector 0; rho = 0.5 lands
        // exactly on radial anchor 16 of 32.
        let mut nonzero = Vec::new();
        for h in 0..7 {
            for w in 0..20 {
                for d in 0..32 {
                    if map.get(h, w, d) != 0.0 {
                        nonzero.push((h, w, d, map.get(h, w, d)));
                    }
                }
            }
        }
        assert_eq!(nonzero, vec![(3, 0, 16, 1.0)]);
        let expected: Vec<f64> = (0..32).map(|d| if d == 16 { 1.0 } else { 0.0 }).collect();
        assert_eq!(feature.0, expected);
    }

    #[test]
    fn map_mass_is_normalized_by_point_count() {
        let backend = test_backend();
        let patch = sector_center_patch(5, backend.sectors);
        let (_, map) = backend.describe(&patch).unwrap();
        assert!((map.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sector_center_rotation_shifts_map_and_fixes_feature() {
        let backend = test_backend();
        let patch = sector_center_patch(7, backend.sectors);
        let (f0, c0) = backend.describe(&patch).unwrap();
        for k in [1usize, 3, 11, 19] {
            let angle = k as f64 * std::f64::consts::TAU / backend.sectors as f64;
            let rot = RotationMatrix::about_z(angle);
            let rotated = patch_from_points(
                patch.points.iter().map(|p| rot.matrix() * p).collect(),
            );
            let (fk, ck) = backend.describe(&rotated).unwrap();
            assert!(
                ck.max_abs_diff(&c0.shifted(k)) <= 1e-12,
                "map shift mismatch at k = {k}"
            );
            let fdiff = f0
                .0
                .iter()
                .zip(&fk.0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(fdiff <= 1e-12, "feature drift {fdiff} at k = {k}");
        }
    }

    #[test]
    fn feature_is_permutation_invariant() {
        let backend = test_backend();
        let patch = sector_center_patch(9, backend.sectors);
        let mut reversed = patch.clone();
        reversed.points.reverse();
        let (f0, _) = backend.describe(&patch).unwrap();
        let (f1, _) = backend.describe(&reversed).unwrap();
        let diff = f0
            .0
            .iter()
            .zip(&f1.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-12);
    }

    #[test]
    fn uniform_ball_fills_every_radial_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut points = Vec::new();
        while points.len() < 50_000 {
            let p = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if p.norm() <= 1.0 {
                points.push(p);
            }
        }
        let backend = test_backend();
        let (feature, _) = backend.describe(&patch_from_points(points)).unwrap();
        assert!((feature.norm() - 1.0).abs() < 1e-12);
        for (d, v) in feature.0.iter().enumerate() {
            assert!(*v > 0.0, "radial channel {d} is empty");
        }
    }

    #[test]
    fn boundary_coordinates_stay_in_range() {
        let backend = test_backend();
        // Extremes: on-axis, on the rim, top and bottom caps.
        let patch = patch_from_points(vec![
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(0.0, 0.0, -1.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 0.0),
        ]);
        let (_, map) = backend.describe(&patch).unwrap();
        assert!((map.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_patch_is_rejected() {
        let backend = test_backend();
        let err = backend.describe(&patch_from_points(vec![])).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn radial_soft_bins_sum_to_one_and_hit_anchors() {
        for i in 0..=64 {
            let rho = i as f64 / 64.0;
            let bins = radial_soft_bins(rho, 32);
            let total: f64 = bins.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
        // Exact anchor: all nonzero mass in one bin.
        let nonzero: Vec<(usize, f64)> = radial_soft_bins(0.5, 32)
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .collect();
        assert_eq!(nonzero, vec![(16, 1.0)]);
        // Midpoint between anchors 16/32 and 17/32 splits evenly.
        let bins = radial_soft_bins(0.515625, 32);
        assert_eq!(bins[0].0, 16);
        assert_eq!(bins[1].0, 17);
        assert!((bins[0].1 - 0.5).abs() < 1e-12);
        assert!((bins[1].1 - 0.5).abs() < 1e-12);
        // rho = 1.0 collapses into the last bin.
        let rim: Vec<(usize, f64)> = radial_soft_bins(1.0, 32)
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .collect();
        assert_eq!(rim, vec![(31, 1.0)]);
    }

    #[test]
    fn describe_set_drops_bad_keypoints_and_stays_aligned() {
        // A structured cluster plus one isolated point whose patch is sparse.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut points: Vec<Point3> = (0..300)
            .map(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                Point3::new(x, y, 0.2 * x * x + 0.1 * y)
            })
            .collect();
        points.push(Point3::new(100.0, 100.0, 100.0));
        let cloud = PointCloud::new(points);
        let index = SpatialIndex::build(&cloud.points);
        let cfg = PipelineConfig {
            n_patch: 64,
            ..PipelineConfig::default()
        };
        let keypoints: Vec<usize> = vec![0, 5, 10, 300];
        let set = describe_set(&cloud, &index, &keypoints, 0.8, Scale::Middle, &cfg).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.skipped, 1);
        assert_eq!(set.frames.len(), set.len());
        assert_eq!(set.features.len(), set.len());
        assert_eq!(set.maps.len(), set.len());

        // All keypoints bad -> error.
        let err = describe_set(&cloud, &index, &[300], 0.8, Scale::Middle, &cfg).unwrap_err();
        assert!(matches!(err, Error::EmptyDescriptors(_)));
    }
}

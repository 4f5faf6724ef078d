//! Keypoint sampling and local patch extraction.
//!
//! Keypoints come from deterministic farthest-point sampling; each keypoint
//! yields a patch of radius-`r` neighbors with a PCA frame whose minor axis
//! is oriented toward the sensor. Patches are subsampled to a fixed budget
//! and normalized to the unit ball before description.

use nalgebra::{Matrix3, Vector3};

use crate::bootstrap::Scale;
use crate::error::{Error, Result};
use crate::geom::{rodrigues_align, Point3, PointCloud, RotationMatrix};
use crate::rng::{derived_rng, stream};
use crate::spatial::SpatialIndex;

/// A normalized neighborhood around one keypoint.
#[derive(Debug, Clone)]
pub struct Patch {
    /// Keypoint position in cloud coordinates, meters.
    pub center: Point3,
    /// Extraction radius, meters.
    pub radius: f64,
    pub scale: Scale,
    /// Neighbor offsets divided by `radius`; every norm is <= 1 (+ fp slack).
    pub points: Vec<Vector3<f64>>,
    /// Canonicalizing rotation: maps the oriented minor axis onto +z.
    pub frame: RotationMatrix,
}

/// Greedy farthest-point sampling over the cloud.
///
/// Deterministic: the first index is the point farthest from the centroid and
/// every later pick maximizes the min-distance to those already selected,
/// breaking ties toward the lowest index. Returns `min(n, cloud.len())`
/// distinct indices in selection order.
pub fn farthest_point_sampling(cloud: &PointCloud, n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::invalid("cannot sample zero keypoints"));
    }
    if cloud.is_empty() {
        return Err(Error::InsufficientData {
            stage: "keypoint sampling",
            detail: "empty cloud".into(),
        });
    }
    let points = &cloud.points;
    let count = n.min(points.len());
    let centroid = cloud.centroid().expect("non-empty cloud");

    let mut first = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = (p.coords - centroid).norm_squared();
        if d > best {
            best = d;
            first = i;
        }
    }

    let mut selected = Vec::with_capacity(count);
    let mut selected_mask = vec![false; points.len()];
    let mut min_dist2 = vec![f64::INFINITY; points.len()];
    let mut current = first;
    selected.push(first);
    selected_mask[first] = true;
    while selected.len() < count {
        let anchor = points[current];
        let mut next = usize::MAX;
        let mut next_dist = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            let d = (p - anchor).norm_squared().min(min_dist2[i]);
            min_dist2[i] = d;
            // Strict improvement breaks ties toward the lowest unselected
            // index; duplicates (d == 0) still yield distinct indices.
            if !selected_mask[i] && d > next_dist {
                next_dist = d;
                next = i;
            }
        }
        selected.push(next);
        selected_mask[next] = true;
        current = next;
    }
    Ok(selected)
}

/// PCA frame of a neighborhood: rotation taking the minor covariance axis
/// (sign-disambiguated toward the sensor origin) onto +z.
pub fn local_frame(
    points: &[Point3],
    center: &Point3,
    sensor_origin: &Vector3<f64>,
) -> Result<RotationMatrix> {
    if points.len() < 3 {
        return Err(Error::DegenerateFrame(format!(
            "need at least 3 points, have {}",
            points.len()
        )));
    }
    let mut mean = Vector3::zeros();
    for p in points {
        mean += p.coords;
    }
    mean /= points.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - mean;
        cov += d * d.transpose();
    }
    cov /= points.len() as f64;

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
    let (l1, l2) = (pairs[0].0, pairs[1].0);
    if l1 <= 0.0 || l2 <= 1e-12 * l1 {
        return Err(Error::DegenerateFrame(format!(
            "neighborhood is rank-deficient (eigenvalues {:.3e}, {:.3e}, {:.3e})",
            pairs[0].0, pairs[1].0, pairs[2].0
        )));
    }
    let mut minor = pairs[2].1.normalize();
    // Orient the normal toward the sensor; an exactly tangent view keeps the
    // eigensolver's sign.
    if minor.dot(&(sensor_origin - center.coords)) < 0.0 {
        minor = -minor;
    }
    rodrigues_align(&minor)
}

/// Extracts the patch around `keypoint_index` (which must index `cloud`).
///
/// Returns `Ok(None)` when the neighborhood is too small or too flat to carry
/// a stable frame; callers count such skips in diagnostics.
#[allow(clippy::too_many_arguments)]
pub fn extract_patch(
    cloud: &PointCloud,
    index: &SpatialIndex,
    keypoint_index: usize,
    radius: f64,
    scale: Scale,
    n_patch: usize,
    sensor_origin: &Vector3<f64>,
    seed: u64,
) -> Result<Option<Patch>> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!(
            "patch radius must be positive, got {radius}"
        )));
    }
    if n_patch == 0 {
        return Err(Error::invalid("patch budget must be at least 1"));
    }
    let center = cloud.points[keypoint_index];
    let neighbors = index.radius_neighbors(&center, radius);
    if neighbors.len() < 3 {
        return Ok(None);
    }
    // The frame comes from the full (unsubsampled) neighborhood so that the
    // canonical orientation does not depend on the subsample draw.
    let neighbor_points: Vec<Point3> = neighbors.iter().map(|&i| cloud.points[i]).collect();
    let frame = match local_frame(&neighbor_points, &center, sensor_origin) {
        Ok(frame) => frame,
        Err(Error::DegenerateFrame(_)) => return Ok(None),
        Err(e) => return Err(e),
    };

    let kept: Vec<Point3> = if neighbor_points.len() > n_patch {
        let mut rng = derived_rng(
            seed,
            &[
                stream::PATCH_SUBSAMPLE,
                scale.index() as u64,
                keypoint_index as u64,
            ],
        );
        let mut pick: Vec<usize> =
            rand::seq::index::sample(&mut rng, neighbor_points.len(), n_patch)
                .iter()
                .collect();
        pick.sort_unstable();
        pick.into_iter().map(|i| neighbor_points[i]).collect()
    } else {
        neighbor_points
    };

    let inv_r = 1.0 / radius;
    let points = kept.iter().map(|p| (p - center) * inv_r).collect();
    Ok(Some(Patch {
        center,
        radius,
        scale,
        points,
        frame,
    }))
}

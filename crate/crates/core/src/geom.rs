//! Core geometric types: points, clouds, rotations, and rigid transforms.
//!
//! All coordinates are metric (meters). Rotations are proper (det = +1) and
//! validated on construction; downstream code may assume orthonormality.

use nalgebra::{Matrix3, Vector3};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A 3D point in meters.
pub type Point3 = nalgebra::Point3<f64>;

/// Orthonormality / determinant tolerance for accepting a rotation matrix.
pub const ROTATION_TOL: f64 = 1e-9;

/// Angle (radians) below which an axis is treated as already aligned.
const ALIGN_EPS: f64 = 1e-8;

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

// ---------------------------------------------------------------------------
// Point cloud
// ---------------------------------------------------------------------------

/// An unordered set of finite 3D points, optionally tagged with its origin.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    /// Provenance label (file path or generator tag) for diagnostics.
    pub source: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        PointCloud {
            points,
            source: None,
        }
    }

    pub fn with_source(points: Vec<Point3>, source: impl Into<String>) -> Self {
        PointCloud {
            points,
            source: Some(source.into()),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vector3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Some(sum / self.points.len() as f64)
    }

    /// Axis-aligned bounding box as (min, max), or `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let first = self.points.first()?.coords;
        let mut lo = first;
        let mut hi = first;
        for p in &self.points {
            for a in 0..3 {
                lo[a] = lo[a].min(p.coords[a]);
                hi[a] = hi[a].max(p.coords[a]);
            }
        }
        Some((lo, hi))
    }

    /// Diagonal length of the bounding box; 0.0 for empty clouds.
    pub fn bounding_diagonal(&self) -> f64 {
        self.bounds().map(|(lo, hi)| (hi - lo).norm()).unwrap_or(0.0)
    }

    pub fn all_finite(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.coords.iter().all(|c| c.is_finite()))
    }
}

impl FromIterator<Point3> for PointCloud {
    fn from_iter<T: IntoIterator<Item = Point3>>(iter: T) -> Self {
        PointCloud::new(iter.into_iter().collect())
    }
}

// ---------------------------------------------------------------------------
// Rotation matrix
// ---------------------------------------------------------------------------

/// A proper rotation: `R^T R = I` and `det R = +1`, both within 1e-9.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    /// Validates orthonormality and orientation before accepting `m`.
    pub fn try_new(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("rotation matrix has non-finite entries"));
        }
        let ortho = (m.transpose() * m - Matrix3::identity()).norm();
        if ortho > ROTATION_TOL {
            return Err(Error::invalid(format!(
                "matrix is not orthonormal (|R^T R - I| = {ortho:.3e})"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::invalid(format!(
                "matrix is not a proper rotation (det = {det:.12})"
            )));
        }
        Ok(RotationMatrix(m))
    }

    /// For products of already-validated rotations; debug builds still check.
    pub(crate) fn from_valid(m: Matrix3<f64>) -> Self {
        debug_assert!(
            (m.transpose() * m - Matrix3::identity()).norm() < 1e-6,
            "rotation product drifted from orthonormality"
        );
        RotationMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Rotation about +z by `angle` radians.
    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RotationMatrix(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Geodesic distance to another rotation, in radians.
    pub fn angle_to(&self, other: &RotationMatrix) -> f64 {
        // atan2 of the skew part against the trace stays accurate near both
        // 0 and pi, where the acos form loses up to eight digits.
        let delta = self.0.transpose() * other.0;
        let sin_part = 0.5
            * ((delta[(2, 1)] - delta[(1, 2)]).powi(2)
                + (delta[(0, 2)] - delta[(2, 0)]).powi(2)
                + (delta[(1, 0)] - delta[(0, 1)]).powi(2))
            .sqrt();
        let cos_part = (delta.trace() - 1.0) / 2.0;
        sin_part.atan2(cos_part)
    }

    pub fn to_rows(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        RotationMatrix::try_new(Matrix3::new(
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
            rows[2][1], rows[2][2],
        ))
    }
}

impl std::ops::Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix::from_valid(self.0 * rhs.0)
    }
}

impl Serialize for RotationMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RotationMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = <[[f64; 3]; 3]>::deserialize(deserializer)?;
        RotationMatrix::from_rows(rows).map_err(D::Error::custom)
    }
}

/// Rotation taking unit vector `v` onto +z; the minimal-angle rotation unless
/// `v` is within 1e-8 of -z, in which case the convention is a half turn about +x.
pub fn rodrigues_align(v: &Vector3<f64>) -> Result<RotationMatrix> {
    if !v.iter().all(|c| c.is_finite()) {
        return Err(Error::invalid("alignment axis has non-finite entries"));
    }
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "alignment axis must be unit length (|v| = {:.12})",
            v.norm()
        )));
    }
    let z = Vector3::z();
    let cos_theta = v.dot(&z).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    if theta < ALIGN_EPS {
        return Ok(RotationMatrix::identity());
    }
    let axis = v.cross(&z);
    if axis.norm() < ALIGN_EPS {
        // Antiparallel: any axis in the xy-plane works; fix +x for determinism.
        return Ok(RotationMatrix(Matrix3::new(
            1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0,
        )));
    }
    let n = axis.normalize();
    let k = skew(&n);
    let m = Matrix3::identity() + theta.sin() * k + (1.0 - theta.cos()) * (k * k);
    Ok(RotationMatrix::from_valid(m))
}

/// Rotation by `angle` radians about a unit-length `axis` (Rodrigues form).
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<RotationMatrix> {
    if !axis.iter().all(|c| c.is_finite()) || (axis.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "rotation axis must be unit length (|v| = {:.12})",
            axis.norm()
        )));
    }
    if !angle.is_finite() {
        return Err(Error::invalid("rotation angle must be finite"));
    }
    let k = skew(axis);
    let m = Matrix3::identity() + angle.sin() * k + (1.0 - angle.cos()) * (k * k);
    Ok(RotationMatrix::from_valid(m))
}

/// Rotation about +z by `d` sectors out of `sectors` total (2*pi*d/sectors).
pub fn yaw_rotation(d: f64, sectors: u32) -> Result<RotationMatrix> {
    if sectors < 2 {
        return Err(Error::invalid(format!(
            "sector count must be at least 2, got {sectors}"
        )));
    }
    if !d.is_finite() {
        return Err(Error::invalid("sector offset must be finite"));
    }
    Ok(RotationMatrix::about_z(
        2.0 * std::f64::consts::PI * d / sectors as f64,
    ))
}

// ---------------------------------------------------------------------------
// Rigid transform
// ---------------------------------------------------------------------------

/// An SE(3) element: `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: RotationMatrix,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: RotationMatrix::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: RotationMatrix, translation: Vector3<f64>) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn apply_point(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation.apply(&p.coords) + self.translation)
    }

    pub fn apply(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud {
            points: cloud.points.iter().map(|p| self.apply_point(p)).collect(),
            source: cloud.source.clone(),
        }
    }

    /// `compose(a, b)` applies `b` first: `(a * b)(p) = a(b(p))`.
    pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: a.rotation * b.rotation,
            translation: a.rotation.apply(&b.translation) + a.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -rt.apply(&self.translation),
        }
    }

    /// Homogeneous 4x4 form, row-major.
    pub fn to_matrix_rows(&self) -> [[f64; 4]; 4] {
        let r = self.rotation.to_rows();
        let t = self.translation;
        [
            [r[0][0], r[0][1], r[0][2], t.x],
            [r[1][0], r[1][1], r[1][2], t.y],
            [r[2][0], r[2][1], r[2][2], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn from_matrix_rows(rows: [[f64; 4]; 4]) -> Result<Self> {
        if rows[3] != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::invalid(
                "last row of a rigid transform must be [0, 0, 0, 1]",
            ));
        }
        let rotation = RotationMatrix::from_rows([
            [rows[0][0], rows[0][1], rows[0][2]],
            [rows[1][0], rows[1][1], rows[1][2]],
            [rows[2][0], rows[2][1], rows[2][2]],
        ])?;
        Ok(RigidTransform {
            rotation,
            translation: Vector3::new(rows[0][3], rows[1][3], rows[2][3]),
        })
    }
}

impl Serialize for RigidTransform {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_matrix_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = <[[f64; 4]; 4]>::deserialize(deserializer)?;
        RigidTransform::from_matrix_rows(rows).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
        // z uniform in [-1, 1], azimuth uniform: area-uniform on the sphere.
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        Vector3::new(r * phi.cos(), r * phi.sin(), z)
    }

    fn random_rotation(rng: &mut impl Rng) -> RotationMatrix {
        let axis = random_unit(rng);
        let angle: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let k = skew(&axis);
        let m = Matrix3::identity() + angle.sin() * k + (1.0 - angle.cos()) * (k * k);
        RotationMatrix::try_new(m).unwrap()
    }

    fn random_transform(rng: &mut impl Rng) -> RigidTransform {
        RigidTransform::new(
            random_rotation(rng),
            Vector3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            ),
        )
    }

    #[test]
    fn align_z_is_exact_identity() {
        let r = rodrigues_align(&Vector3::z()).unwrap();
        assert_eq!(r.matrix(), &Matrix3::identity());
    }

    #[test]
    fn align_x_matches_expected_quarter_turn() {
        // Axis n = (0, -1, 0), angle pi/2 gives exactly this matrix.
        let r = rodrigues_align(&Vector3::x()).unwrap();
        let expected = Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        assert!((r.matrix() - expected).norm() < 1e-15);
        assert!((r.apply(&Vector3::x()) - Vector3::z()).norm() < 1e-15);
    }

    #[test]
    fn align_antiparallel_uses_x_axis_half_turn() {
        let r = rodrigues_align(&Vector3::new(0.0, 0.0, -1.0)).unwrap();
        let expected = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);
        assert_eq!(r.matrix(), &expected);
        assert!((r.apply(&Vector3::new(0.0, 0.0, -1.0)) - Vector3::z()).norm() == 0.0);
    }

    #[test]
    fn align_random_unit_vectors_land_on_z() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let v = random_unit(&mut rng);
            let r = rodrigues_align(&v).unwrap();
            assert!((r.apply(&v) - Vector3::z()).norm() < 1e-9);
            assert!((r.matrix().determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn align_rejects_non_unit_and_non_finite() {
        assert!(rodrigues_align(&Vector3::new(0.0, 0.0, 2.0)).is_err());
        assert!(rodrigues_align(&Vector3::new(f64::NAN, 0.0, 0.0)).is_err());
    }

    #[test]
    fn yaw_quarter_turn_sends_x_to_y() {
        // d = 5 of 20 sectors = pi/2.
        let r = yaw_rotation(5.0, 20).unwrap();
        assert!((r.apply(&Vector3::x()) - Vector3::y()).norm() < 1e-12);
    }

    #[test]
    fn yaw_full_turn_is_identity() {
        let r = yaw_rotation(20.0, 20).unwrap();
        assert!((r.matrix() - Matrix3::identity()).norm() < 1e-12);
        assert_eq!(
            yaw_rotation(0.0, 20).unwrap().matrix(),
            &Matrix3::identity()
        );
    }

    #[test]
    fn yaw_rejects_degenerate_sector_count() {
        assert!(yaw_rotation(1.0, 1).is_err());
        assert!(yaw_rotation(1.0, 0).is_err());
    }

    #[test]
    fn compose_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let ab = RigidTransform::compose(&a, &b);
            for _ in 0..10 {
                let p = Point3::new(
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                );
                let direct = ab.apply_point(&p);
                let sequential = a.apply_point(&b.apply_point(&p));
                assert!((direct - sequential).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_roundtrips_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let t = random_transform(&mut rng);
            let round = RigidTransform::compose(&t, &t.inverse());
            assert!((round.rotation.matrix() - Matrix3::identity()).norm() < 1e-12);
            assert!(round.translation.norm() < 1e-12);
        }
    }

    #[test]
    fn apply_preserves_pairwise_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cloud: PointCloud = (0..50)
            .map(|_| {
                Point3::new(
                    rng.random_range(-100.0..100.0),
                    rng.random_range(-100.0..100.0),
                    rng.random_range(-100.0..100.0),
                )
            })
            .collect();
        let t = random_transform(&mut rng);
        let moved = t.apply(&cloud);
        for i in 0..cloud.len() {
            for j in (i + 1)..cloud.len() {
                let before = (cloud.points[i] - cloud.points[j]).norm();
                let after = (moved.points[i] - moved.points[j]).norm();
                assert_abs_diff_eq!(before, after, epsilon = 1e-9 * before.max(1.0));
            }
        }
    }

    #[test]
    fn rejects_reflection_and_scaled_matrices() {
        let reflection = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(RotationMatrix::try_new(reflection).is_err());
        let scaled = Matrix3::identity() * 1.001;
        assert!(RotationMatrix::try_new(scaled).is_err());
    }

    #[test]
    fn transform_serde_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let t = random_transform(&mut rng);
        let json = serde_json::to_string(&t).unwrap();
        let back: RigidTransform = serde_json::from_str(&json).unwrap();
        assert!((back.rotation.matrix() - t.rotation.matrix()).norm() < 1e-15);
        assert!((back.translation - t.translation).norm() < 1e-15);
    }

    #[test]
    fn transform_deserialize_rejects_reflection() {
        let json = "[[1,0,0,0],[0,1,0,0],[0,0,-1,0],[0,0,0,1]]";
        assert!(serde_json::from_str::<RigidTransform>(json).is_err());
    }

    #[test]
    fn axis_angle_about_z_matches_about_z() {
        for &angle in &[0.0, 0.3, 1.7, std::f64::consts::PI, 5.9] {
            let via_axis = axis_angle(&Vector3::z(), angle).unwrap();
            let direct = RotationMatrix::about_z(angle);
            assert!((via_axis.matrix() - direct.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn axis_angle_recovers_planted_angle() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..50 {
            let axis = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if axis.norm() < 1e-3 {
                continue;
            }
            let axis = axis.normalize();
            let angle = rng.random_range(1e-3..std::f64::consts::PI - 1e-3);
            let rot = axis_angle(&axis, angle).unwrap();
            assert_abs_diff_eq!(
                RotationMatrix::identity().angle_to(&rot),
                angle,
                epsilon = 1e-9
            );
            // The planted axis is fixed by the rotation.
            assert!((rot.apply(&axis) - axis).norm() < 1e-9);
        }
    }

    #[test]
    fn axis_angle_rejects_bad_inputs() {
        assert!(axis_angle(&Vector3::new(1.0, 1.0, 0.0), 0.5).is_err());
        assert!(axis_angle(&Vector3::z(), f64::NAN).is_err());
    }
}

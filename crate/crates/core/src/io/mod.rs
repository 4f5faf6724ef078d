//! Point cloud and configuration file I/O.
//!
//! Supported cloud formats: PLY 1.0 (ascii / binary little-endian) and
//! KITTI-style packed float32 `.bin` scans. Non-finite points are dropped on
//! load and the count is reported alongside the cloud.

mod kitti;
mod ply;

use std::path::Path;

pub use crate::config::load_config;
use crate::error::{Error, Result};
use crate::geom::PointCloud;

/// Input format selector; `Auto` sniffs the PLY magic and falls back to the
/// file extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CloudFormat {
    #[default]
    Auto,
    Ply,
    KittiBin,
}

impl CloudFormat {
    pub fn parse(name: &str) -> Result<CloudFormat> {
        match name {
            "auto" => Ok(CloudFormat::Auto),
            "ply" => Ok(CloudFormat::Ply),
            "kitti-bin" => Ok(CloudFormat::KittiBin),
            other => Err(Error::invalid(format!(
                "unknown cloud format `{other}` (expected auto, ply, or kitti-bin)"
            ))),
        }
    }
}

/// Output format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SaveFormat {
    #[default]
    PlyBinary,
    PlyAscii,
    KittiBin,
}

/// A loaded cloud plus how many non-finite points were discarded.
#[derive(Debug, Clone)]
pub struct LoadedCloud {
    pub cloud: PointCloud,
    pub dropped_non_finite: usize,
}

fn detect_format(bytes: &[u8], path: &Path) -> Result<CloudFormat> {
    if bytes.starts_with(b"ply\n") || bytes.starts_with(b"ply\r\n") {
        return Ok(CloudFormat::Ply);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("ply") => Ok(CloudFormat::Ply),
        Some("bin") => Ok(CloudFormat::KittiBin),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            offset: 0,
            detail: "cannot auto-detect format: no PLY magic and unrecognized extension".into(),
        }),
    }
}

/// Loads a cloud, dropping non-finite points (their count is reported).
pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<LoadedCloud> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = match format {
        CloudFormat::Auto => detect_format(&bytes, path)?,
        other => other,
    };
    let parsed = match format {
        CloudFormat::Ply => ply::parse_ply(&bytes, path)?,
        CloudFormat::KittiBin => kitti::parse_kitti(&bytes, path)?,
        CloudFormat::Auto => unreachable!("auto resolved above"),
    };
    let mut cloud = PointCloud::new(parsed.points);
    cloud.source = Some(path.display().to_string());
    Ok(LoadedCloud {
        cloud,
        dropped_non_finite: parsed.dropped_non_finite,
    })
}

/// Saves a cloud; all points must be finite.
pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>, format: SaveFormat) -> Result<()> {
    let path = path.as_ref();
    if !cloud.all_finite() {
        return Err(Error::invalid(
            "refusing to save a cloud containing non-finite points",
        ));
    }
    match format {
        SaveFormat::PlyBinary => ply::write_ply(cloud, path, false),
        SaveFormat::PlyAscii => ply::write_ply(cloud, path, true),
        SaveFormat::KittiBin => kitti::write_kitti(cloud, path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-100.0..100.0),
                    rng.random_range(-100.0..100.0),
                    rng.random_range(-100.0..100.0),
                )
            })
            .collect()
    }

    fn assert_f32_identical(a: &PointCloud, b: &PointCloud) {
        assert_eq!(a.len(), b.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.x as f32, q.x as f32);
            assert_eq!(p.y as f32, q.y as f32);
            assert_eq!(p.z as f32, q.z as f32);
        }
    }

    #[test]
    fn binary_ply_roundtrip_preserves_float32_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.ply");
        let cloud = random_cloud(1000, 3);
        save_cloud(&cloud, &path, SaveFormat::PlyBinary).unwrap();
        let loaded = load_cloud(&path, CloudFormat::Auto).unwrap();
        assert_eq!(loaded.dropped_non_finite, 0);
        assert_f32_identical(&cloud, &loaded.cloud);
    }

    #[test]
    fn ascii_ply_roundtrip_preserves_float32_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.ply");
        let cloud = random_cloud(200, 4);
        save_cloud(&cloud, &path, SaveFormat::PlyAscii).unwrap();
        let loaded = load_cloud(&path, CloudFormat::Ply).unwrap();
        assert_f32_identical(&cloud, &loaded.cloud);
    }

    #[test]
    fn empty_ply_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.ply");
        save_cloud(&PointCloud::default(), &path, SaveFormat::PlyBinary).unwrap();
        let loaded = load_cloud(&path, CloudFormat::Auto).unwrap();
        assert!(loaded.cloud.is_empty());
    }

    #[test]
    fn ascii_ply_ignores_extra_properties_and_elements() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("extra.ply");
        let text = "ply\nformat ascii 1.0\ncomment has extras\n\
                    element vertex 2\n\
                    property float x\nproperty float y\nproperty float z\n\
                    property uchar red\n\
                    element face 1\n\
                    property list uchar int vertex_indices\n\
                    end_header\n\
                    1 2 3 255\n4 5 6 128\n3 0 1 0\n";
        std::fs::write(&path, text).unwrap();
        let loaded = load_cloud(&path, CloudFormat::Auto).unwrap();
        assert_eq!(loaded.cloud.len(), 2);
        assert_eq!(loaded.cloud.points[0], Point3::new(1.0, 2.0, 3.0));
        assert_eq!(loaded.cloud.points[1], Point3::new(4.0, 5.0, 6.0));
    }

    #[test]
    fn binary_ply_skips_trailing_elements_with_lists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("faces.ply");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(
            b"ply\nformat binary_little_endian 1.0\n\
              element vertex 1\n\
              property float x\nproperty float y\nproperty float z\n\
              property uchar intensity\n\
              element face 2\n\
              property list uchar uint vertex_indices\n\
              end_header\n",
        );
        for v in [1.5f32, -2.5, 3.5] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.push(77); // intensity
        for _ in 0..2 {
            bytes.push(3); // list count
            for idx in [0u32, 1, 2] {
                bytes.extend_from_slice(&idx.to_le_bytes());
            }
        }
        std::fs::write(&path, &bytes).unwrap();
        let loaded = load_cloud(&path, CloudFormat::Auto).unwrap();
        assert_eq!(loaded.cloud.len(), 1);
        assert_eq!(loaded.cloud.points[0], Point3::new(1.5, -2.5, 3.5));
    }

    #[test]
    fn truncated_binary_ply_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.ply");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(
            b"ply\nformat binary_little_endian 1.0\nelement vertex 2\n\
              property float x\nproperty float y\nproperty float z\nend_header\n",
        );
        // One and a half points instead of two.
        for v in [1.0f32, 2.0, 3.0, 4.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&path, &bytes).unwrap();
        match load_cloud(&path, CloudFormat::Auto) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, bytes.len() as u64),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_vertices_are_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.ply");
        let text = "ply\nformat ascii 1.0\nelement vertex 3\n\
                    property float x\nproperty float y\nproperty float z\nend_header\n\
                    1 2 3\nnan 0 0\n4 5 6\n";
        std::fs::write(&path, text).unwrap();
        let loaded = load_cloud(&path, CloudFormat::Auto).unwrap();
        assert_eq!(loaded.cloud.len(), 2);
        assert_eq!(loaded.dropped_non_finite, 1);
    }

    #[test]
    fn kitti_roundtrip_and_stride() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.bin");
        let cloud = random_cloud(4, 5);
        save_cloud(&cloud, &path, SaveFormat::KittiBin).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 64);
        let loaded = load_cloud(&path, CloudFormat::Auto).unwrap();
        assert_f32_identical(&cloud, &loaded.cloud);
    }

    #[test]
    fn kitti_rejects_bad_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, vec![0u8; 100]).unwrap();
        match load_cloud(&path, CloudFormat::KittiBin) {
            Err(Error::Parse { offset, detail, .. }) => {
                assert_eq!(offset, 96);
                assert!(detail.contains("multiple"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        match load_cloud("/nonexistent/cloud.ply", CloudFormat::Auto) {
            Err(Error::Io { .. }) => {}
            other => panic!("expected io error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_format_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mystery.xyz");
        std::fs::write(&path, b"not a cloud").unwrap();
        assert!(matches!(
            load_cloud(&path, CloudFormat::Auto),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn header_without_end_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("noend.ply");
        std::fs::write(&path, "ply\nformat ascii 1.0\nelement vertex 1\n").unwrap();
        assert!(matches!(
            load_cloud(&path, CloudFormat::Auto),
            Err(Error::Parse { .. })
        ));
    }
}

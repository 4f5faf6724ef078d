//! KITTI-style `.bin` scans: packed little-endian float32 (x, y, z, intensity).

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

use super::ply::PlyCloud;

const STRIDE: usize = 16;

pub(crate) fn parse_kitti(bytes: &[u8], path: &Path) -> Result<PlyCloud> {
    if bytes.len() % STRIDE != 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            offset: (bytes.len() - bytes.len() % STRIDE) as u64,
            detail: format!(
                "file size {} is not a multiple of the {STRIDE}-byte point stride",
                bytes.len()
            ),
        });
    }
    let mut points = Vec::with_capacity(bytes.len() / STRIDE);
    let mut dropped = 0usize;
    for record in bytes.chunks_exact(STRIDE) {
        let x = f32::from_le_bytes([record[0], record[1], record[2], record[3]]) as f64;
        let y = f32::from_le_bytes([record[4], record[5], record[6], record[7]]) as f64;
        let z = f32::from_le_bytes([record[8], record[9], record[10], record[11]]) as f64;
        // Bytes 12..16 hold intensity, which the pipeline ignores.
        if x.is_finite() && y.is_finite() && z.is_finite() {
            points.push(Point3::new(x, y, z));
        } else {
            dropped += 1;
        }
    }
    Ok(PlyCloud {
        points,
        dropped_non_finite: dropped,
    })
}

pub(crate) fn write_kitti(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(cloud.len() * STRIDE);
    for p in &cloud.points {
        out.extend_from_slice(&(p.x as f32).to_le_bytes());
        out.extend_from_slice(&(p.y as f32).to_le_bytes());
        out.extend_from_slice(&(p.z as f32).to_le_bytes());
        out.extend_from_slice(&0.0f32.to_le_bytes());
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

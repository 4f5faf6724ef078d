//! `zeroreg inspect`: surface the bootstrap decisions for a single cloud —
//! shape statistics, voxel branch, resolved voxel size and search radii.

use serde::Serialize;
use zeroreg_core::bootstrap::{
    estimate_radii, scene_shape, voxel_downsample, voxel_size_from_shape,
};
use zeroreg_core::io::load_cloud;
use zeroreg_core::{PipelineConfig, Result, ScaleRadii};

use super::emit_document;
use crate::args::InspectArgs;

#[derive(Serialize)]
struct InspectDocument<'a> {
    config: &'a PipelineConfig,
    path: String,
    points: usize,
    dropped_non_finite: usize,
    /// Ratio of smallest to largest covariance eigenvalue.
    sphericity: f64,
    /// Standard deviation along the flattest axis, meters.
    spread: f64,
    /// Points used for the shape estimate.
    shape_sample: usize,
    /// Which voxel-coefficient branch the sphericity selected.
    branch: &'static str,
    voxel_size: f64,
    downsampled_points: usize,
    radii: &'a ScaleRadii,
}

pub fn run(args: &InspectArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let loaded = load_cloud(&args.cloud, args.format.into())?;
    let cloud = &loaded.cloud;

    let shape = scene_shape(cloud, cfg.delta_v, cfg.seed)?;
    let branch = if shape.sphericity >= cfg.tau_v {
        "spheric"
    } else {
        "disc"
    };
    let voxel_size = voxel_size_from_shape(&shape, &cfg)?;
    let down = voxel_downsample(cloud, voxel_size)?;
    let radii = estimate_radii(&down, &cfg)?;

    let doc = InspectDocument {
        config: &cfg,
        path: args.cloud.display().to_string(),
        points: cloud.len(),
        dropped_non_finite: loaded.dropped_non_finite,
        sphericity: shape.sphericity,
        spread: shape.spread,
        shape_sample: shape.sample_size,
        branch,
        voxel_size,
        downsampled_points: down.len(),
        radii: &radii,
    };
    emit_document(&doc, args.out.as_deref())?;

    eprintln!(
        "{}: {} points, sphericity {:.4} ({} branch), spread {:.4} m",
        args.cloud.display(),
        cloud.len(),
        shape.sphericity,
        branch,
        shape.spread,
    );
    eprintln!(
        "voxel {:.4} m -> {} cells, radii local {:.4} / middle {:.4} / global {:.4} m",
        voxel_size,
        down.len(),
        radii.local,
        radii.middle,
        radii.global,
    );
    Ok(())
}

//! `zeroreg register`: load two clouds, run the pipeline, report the pose.

use serde::Serialize;
use zeroreg_core::io::load_cloud;
use zeroreg_core::{pipeline, PipelineConfig, RegistrationResult, Result, RotationMatrix};

use super::emit_document;
use crate::args::{ModeArg, RegisterArgs};

#[derive(Serialize)]
struct RegisterDocument<'a> {
    config: &'a PipelineConfig,
    source: String,
    target: String,
    mode: &'static str,
    /// Non-finite rows dropped while loading [source, target].
    dropped_non_finite: [usize; 2],
    result: &'a RegistrationResult,
}

pub fn run(args: &RegisterArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let format = args.format.into();
    let source = load_cloud(&args.source, format)?;
    let target = load_cloud(&args.target, format)?;

    let result = match args.mode {
        ModeArg::Full => pipeline::register(&source.cloud, &target.cloud, &cfg)?,
        ModeArg::Lite => pipeline::register_lite(&source.cloud, &target.cloud, &cfg)?,
    };

    let doc = RegisterDocument {
        config: &cfg,
        source: args.source.display().to_string(),
        target: args.target.display().to_string(),
        mode: args.mode.label(),
        dropped_non_finite: [source.dropped_non_finite, target.dropped_non_finite],
        result: &result,
    };
    emit_document(&doc, args.out.as_deref())?;
    summarize(args, &result);
    Ok(())
}

fn summarize(args: &RegisterArgs, result: &RegistrationResult) {
    let rotation_deg = pipeline::rre(&RotationMatrix::identity(), &result.transform.rotation);
    let translation_m = result.transform.translation.norm();
    eprintln!(
        "registered {} -> {} ({} mode): rotation {:.3} deg, translation {:.4} m, {} inliers{}",
        args.source.display(),
        args.target.display(),
        args.mode.label(),
        rotation_deg,
        translation_m,
        result.inlier_count,
        if result.early_exited { ", early exit" } else { "" },
    );
    eprintln!(
        "voxel {:.4} m, radii {:.4}/{:.4}/{:.4} m, total {:.1} ms",
        result.voxel_size,
        result.radii.local,
        result.radii.middle,
        result.radii.global,
        result.timings.total_ms,
    );
}

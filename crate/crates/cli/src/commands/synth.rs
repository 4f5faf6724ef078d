//! `zeroreg synth`: materialize one synthetic pair as on-disk cloud files
//! plus a ground-truth document, so external tools can replay the benchmark.

use serde::Serialize;
use zeroreg_core::bench::{generate_pair_with_truth, preset_specs, SceneSpec};
use zeroreg_core::io::save_cloud;
use zeroreg_core::{Error, Result, RigidTransform};

use super::{emit_document, load_specs};
use crate::args::SynthArgs;

#[derive(Serialize)]
struct SynthDocument<'a> {
    /// The scene spec is the whole configuration of a generated pair.
    spec: &'a SceneSpec,
    source: String,
    target: String,
    /// Ground truth mapping source points onto the target, 4x4 row-major.
    transform: &'a RigidTransform,
    /// Overlap fraction achieved by the crop.
    overlap: f64,
    /// Number of points surviving in both clouds (exact correspondences).
    shared_pairs: usize,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let spec = resolve_spec(args)?;
    let pair = generate_pair_with_truth(&spec)?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;
    let extension = args.save_format.extension();
    let source_path = args.out_dir.join(format!("source.{extension}"));
    let target_path = args.out_dir.join(format!("target.{extension}"));
    let format = args.save_format.to_format();
    save_cloud(&pair.source, &source_path, format)?;
    save_cloud(&pair.target, &target_path, format)?;

    let doc = SynthDocument {
        spec: &spec,
        source: source_path.display().to_string(),
        target: target_path.display().to_string(),
        transform: &pair.transform,
        overlap: pair.overlap,
        shared_pairs: pair.shared.len(),
    };
    emit_document(&doc, Some(&args.out_dir.join("truth.json")))?;
    emit_document(&doc, None)?;
    eprintln!(
        "synthesized {} + {} points into {} (overlap {:.3}, {} shared points)",
        pair.source.len(),
        pair.target.len(),
        args.out_dir.display(),
        pair.overlap,
        pair.shared.len(),
    );
    Ok(())
}

fn resolve_spec(args: &SynthArgs) -> Result<SceneSpec> {
    if let Some(path) = &args.spec {
        let specs = load_specs(path)?;
        let count = specs.len();
        return specs.into_iter().nth(args.index).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "--index {} is out of range: {} holds {count} specs",
                args.index,
                path.display(),
            ))
        });
    }
    let preset = args
        .preset
        .expect("clap enforces exactly one of --spec/--preset");
    let spec = preset_specs(preset.to_preset(), args.index + 1, args.seed)
        .pop()
        .expect("preset expansion yields index+1 specs");
    spec.validate()?;
    Ok(spec)
}

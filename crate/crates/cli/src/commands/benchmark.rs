//! `zeroreg benchmark`: run the synthetic harness over a preset or a
//! scene-spec file, then write the aggregate report (JSON, optionally CSV).

use std::fs::File;
use std::io::BufWriter;

use serde::Serialize;
use zeroreg_core::bench::{preset_specs, preset_thresholds, write_csv, RunMode, SceneSpec};
use zeroreg_core::{run_benchmark, BenchmarkReport, Error, PipelineConfig, Result};

use super::{emit_document, load_specs, opt_stat};
use crate::args::{BenchmarkArgs, ModeArg};

/// Rotation/translation success thresholds applied to spec-file runs, where
/// no preset hints at the scene scale.
const SPEC_FILE_THRESHOLDS: (f64, f64) = (5.0, 2.0);

#[derive(Serialize)]
struct BenchmarkDocument<'a> {
    config: &'a PipelineConfig,
    /// Preset name or spec-file path the scenes came from.
    scenes: String,
    report: &'a BenchmarkReport,
}

pub fn run(args: &BenchmarkArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let (specs, scenes, defaults) = resolve_scenes(args, &cfg)?;
    let mode = match args.mode {
        ModeArg::Full => RunMode::Full,
        ModeArg::Lite => RunMode::Lite,
    };
    let tau_rot = args.tau_rot.unwrap_or(defaults.0);
    let tau_trans = args.tau_trans.unwrap_or(defaults.1);

    let report = run_benchmark(&specs, &cfg, mode, tau_rot, tau_trans)?;

    if let Some(path) = &args.csv {
        let file = File::create(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        write_csv(&report, BufWriter::new(file))?;
    }
    let doc = BenchmarkDocument {
        config: &cfg,
        scenes: scenes.clone(),
        report: &report,
    };
    emit_document(&doc, args.out.as_deref())?;
    summarize(&scenes, args.mode, &report);
    Ok(())
}

/// Expands `--preset`/`--spec` into concrete scene specs plus the default
/// success thresholds for that scene family. Preset generation keys off the
/// pipeline seed so one flag pins the whole run.
fn resolve_scenes(
    args: &BenchmarkArgs,
    cfg: &PipelineConfig,
) -> Result<(Vec<SceneSpec>, String, (f64, f64))> {
    if let Some(path) = &args.spec {
        let specs = load_specs(path)?;
        return Ok((specs, path.display().to_string(), SPEC_FILE_THRESHOLDS));
    }
    let preset = args
        .preset
        .expect("clap enforces exactly one of --spec/--preset");
    if args.pairs == 0 {
        return Err(Error::InvalidArgument("--pairs must be at least 1".into()));
    }
    let specs = preset_specs(preset.to_preset(), args.pairs, cfg.seed);
    let thresholds = preset_thresholds(preset.to_preset());
    Ok((specs, preset.label().to_string(), thresholds))
}

fn summarize(scenes: &str, mode: ModeArg, report: &BenchmarkReport) {
    let mut line = format!(
        "benchmark {scenes} ({} mode): {} pairs, {:.1}% success, mean rre {} deg, \
         mean rte {} m, mean wall {:.1} ms",
        mode.label(),
        report.pair_count,
        100.0 * report.success_rate,
        opt_stat(report.mean_rre_deg, 3),
        opt_stat(report.mean_rte_m, 4),
        report.mean_wall_ms,
    );
    if matches!(mode, ModeArg::Lite) {
        line.push_str(&format!(
            ", {:.1}% early exits",
            100.0 * report.early_exit_fraction
        ));
    }
    eprintln!("{line}");
}

//! Command-line surface: one subcommand per entry point, plus a flag block
//! that mirrors every `PipelineConfig` key one-to-one.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use zeroreg_core::bench::ScenePreset;
use zeroreg_core::config::{BackendKind, RobustKernel, SolverKind, YawMode};
use zeroreg_core::io::{load_config, CloudFormat, SaveFormat};
use zeroreg_core::{PipelineConfig, Result};

#[derive(Debug, Parser)]
#[command(
    name = "zeroreg",
    version,
    about = "Self-tuning point-cloud registration: register, benchmark, synthesize, inspect",
    propagate_version = true
)]
pub struct Cli {
    /// Worker threads (0 = one per core); the ZEROREG_THREADS environment
    /// variable is used when the flag is absent.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the rigid transform mapping a source cloud onto a target cloud.
    Register(RegisterArgs),
    /// Run the synthetic benchmark and write an aggregate report.
    Benchmark(BenchmarkArgs),
    /// Materialize one synthetic pair as cloud files plus ground truth.
    Synth(SynthArgs),
    /// Report the shape statistics and resolved scales of a single cloud.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    /// Source cloud (PLY or KITTI float32 .bin).
    pub source: PathBuf,
    /// Target cloud; the reported transform maps source points onto it.
    pub target: PathBuf,

    /// Pipeline variant: the full three-scale pass or the early-exit one.
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    pub mode: ModeArg,

    /// Input format; `auto` sniffs the PLY magic number, then the extension.
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,

    /// Write the JSON result here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// JSON file holding an array of scene specs.
    #[arg(
        long,
        value_name = "FILE",
        conflicts_with = "preset",
        required_unless_present = "preset"
    )]
    pub spec: Option<PathBuf>,

    /// Built-in scene family.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,

    /// Number of generated pairs when using --preset.
    #[arg(long, default_value_t = 10, value_name = "N")]
    pub pairs: usize,

    /// Pipeline variant applied to every pair.
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    pub mode: ModeArg,

    /// Success threshold on rotation error, degrees (default: per preset,
    /// 5 for spec files).
    #[arg(long, value_name = "DEG")]
    pub tau_rot: Option<f64>,

    /// Success threshold on translation error, meters (default: per preset,
    /// 2 for spec files).
    #[arg(long, value_name = "M")]
    pub tau_trans: Option<f64>,

    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Also write the per-pair rows as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,

    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON file holding an array of scene specs.
    #[arg(
        long,
        value_name = "FILE",
        conflicts_with = "preset",
        required_unless_present = "preset"
    )]
    pub spec: Option<PathBuf>,

    /// Built-in scene family.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,

    /// Which spec (spec files) or generated pair (presets) to materialize.
    #[arg(long, default_value_t = 0, value_name = "I")]
    pub index: usize,

    /// Run seed for preset scene generation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Directory receiving source/target clouds and the ground-truth JSON.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,

    /// On-disk cloud format.
    #[arg(long, value_enum, default_value_t = SaveFormatArg::PlyBinary)]
    pub save_format: SaveFormatArg,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Cloud to analyze.
    pub cloud: PathBuf,

    /// Input format; `auto` sniffs the PLY magic number, then the extension.
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,

    /// Write the JSON diagnostics here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Lite,
}

impl ModeArg {
    pub fn label(self) -> &'static str {
        match self {
            ModeArg::Full => "full",
            ModeArg::Lite => "lite",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Auto,
    Ply,
    KittiBin,
}

impl From<FormatArg> for CloudFormat {
    fn from(arg: FormatArg) -> CloudFormat {
        match arg {
            FormatArg::Auto => CloudFormat::Auto,
            FormatArg::Ply => CloudFormat::Ply,
            FormatArg::KittiBin => CloudFormat::KittiBin,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SaveFormatArg {
    PlyBinary,
    PlyAscii,
    KittiBin,
}

impl SaveFormatArg {
    pub fn to_format(self) -> SaveFormat {
        match self {
            SaveFormatArg::PlyBinary => SaveFormat::PlyBinary,
            SaveFormatArg::PlyAscii => SaveFormat::PlyAscii,
            SaveFormatArg::KittiBin => SaveFormat::KittiBin,
        }
    }

    /// File extension matching the format, used for generated cloud names.
    pub fn extension(self) -> &'static str {
        match self {
            SaveFormatArg::PlyBinary | SaveFormatArg::PlyAscii => "ply",
            SaveFormatArg::KittiBin => "bin",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    Object,
    Indoor,
    Outdoor,
    Mixed,
}

impl PresetArg {
    pub fn to_preset(self) -> ScenePreset {
        match self {
            PresetArg::Object => ScenePreset::Object,
            PresetArg::Indoor => ScenePreset::Indoor,
            PresetArg::Outdoor => ScenePreset::Outdoor,
            PresetArg::Mixed => ScenePreset::Mixed,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PresetArg::Object => "object",
            PresetArg::Indoor => "indoor",
            PresetArg::Outdoor => "outdoor",
            PresetArg::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SolverArg {
    Ransac,
    KcoreGnc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendArg {
    CylindricalHistogram,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum YawModeArg {
    Windowed,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Tls,
    Huber,
}

const CONFIG_HEADING: &str = "Pipeline config (overrides --config keys)";

/// Every pipeline knob as an optional flag. Values are applied on top of the
/// `--config` file (or the defaults), then validated before any file is read.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON config file; the flags below override its keys.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Voxel coefficient for spheric scenes.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub kappa_spheric: Option<f64>,

    /// Voxel coefficient for disc-like scenes.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub kappa_disc: Option<f64>,

    /// Sphericity threshold separating the two voxel branches.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub tau_v: Option<f64>,

    /// Target mean neighbor fraction at the local scale.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub tau_l: Option<f64>,

    /// Target mean neighbor fraction at the middle scale.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub tau_m: Option<f64>,

    /// Target mean neighbor fraction at the global scale.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub tau_g: Option<f64>,

    /// Fraction of the larger cloud sampled for shape analysis.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub delta_v: Option<f64>,

    /// Query points sampled when solving for the search radii.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub n_r: Option<usize>,

    /// Upper clamp on every search radius, meters.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub r_max: Option<f64>,

    /// Keypoints requested per cloud per scale.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub n_fps: Option<usize>,

    /// Maximum points retained per patch.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub n_patch: Option<usize>,

    /// Cylindrical map height bins.
    #[arg(long = "h", help_heading = CONFIG_HEADING, value_name = "H")]
    pub map_h: Option<usize>,

    /// Cylindrical map yaw sectors.
    #[arg(long = "w", help_heading = CONFIG_HEADING, value_name = "W")]
    pub map_w: Option<usize>,

    /// Cylindrical map radial channels.
    #[arg(long = "d", help_heading = CONFIG_HEADING, value_name = "D")]
    pub map_d: Option<usize>,

    /// Robust solver for the final pose.
    #[arg(long, value_enum, help_heading = CONFIG_HEADING)]
    pub solver: Option<SolverArg>,

    /// RANSAC iteration cap.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub ransac_max_iter: Option<usize>,

    /// RANSAC early-stop confidence; 1.0 disables early stopping.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub ransac_confidence: Option<f64>,

    /// Inlier threshold in meters (default: twice the voxel size).
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub epsilon: Option<f64>,

    /// Early-exit inlier count for the lite pipeline.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub tau_n: Option<usize>,

    /// Base RNG seed; also drives benchmark scene generation.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub seed: Option<u64>,

    /// Patch descriptor backend.
    #[arg(long, value_enum, help_heading = CONFIG_HEADING)]
    pub descriptor_backend: Option<BackendArg>,

    /// How the fractional yaw offset is read off the correlation scores.
    #[arg(long, value_enum, help_heading = CONFIG_HEADING)]
    pub yaw_mode: Option<YawModeArg>,

    /// Sensor origin used to orient patch normals, as `x,y,z` meters.
    #[arg(long, value_name = "X,Y,Z", value_parser = parse_triple, help_heading = CONFIG_HEADING)]
    pub sensor_origin: Option<[f64; 3]>,

    /// Robust kernel used by the graph solver's refinement stage.
    #[arg(long, value_enum, help_heading = CONFIG_HEADING)]
    pub robust_kernel: Option<KernelArg>,

    /// Huber kernel width in meters (default: the solver noise bound).
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub huber_delta: Option<f64>,

    /// Graduated non-convexity control-parameter growth factor.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub gnc_mu_factor: Option<f64>,

    /// Graduated non-convexity outer iteration cap.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub gnc_max_outer: Option<usize>,

    /// Convergence: maximum distance of weights from {0, 1}.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub gnc_weight_tol: Option<f64>,

    /// Convergence: minimum cost change between outer iterations.
    #[arg(long, help_heading = CONFIG_HEADING)]
    pub gnc_cost_tol: Option<f64>,
}

fn parse_triple(text: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got `{text}`"));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad coordinate `{part}`: {e}"))?;
    }
    Ok(out)
}

impl ConfigArgs {
    /// File-then-flags override order: start from `--config` (or the
    /// defaults), overlay every flag that was given, then validate.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.kappa_spheric {
            cfg.kappa_spheric = v;
        }
        if let Some(v) = self.kappa_disc {
            cfg.kappa_disc = v;
        }
        if let Some(v) = self.tau_v {
            cfg.tau_v = v;
        }
        if let Some(v) = self.tau_l {
            cfg.tau_l = v;
        }
        if let Some(v) = self.tau_m {
            cfg.tau_m = v;
        }
        if let Some(v) = self.tau_g {
            cfg.tau_g = v;
        }
        if let Some(v) = self.delta_v {
            cfg.delta_v = v;
        }
        if let Some(v) = self.n_r {
            cfg.n_r = v;
        }
        if let Some(v) = self.r_max {
            cfg.r_max = v;
        }
        if let Some(v) = self.n_fps {
            cfg.n_fps = v;
        }
        if let Some(v) = self.n_patch {
            cfg.n_patch = v;
        }
        if let Some(v) = self.map_h {
            cfg.map_h = v;
        }
        if let Some(v) = self.map_w {
            cfg.map_w = v;
        }
        if let Some(v) = self.map_d {
            cfg.map_d = v;
        }
        if let Some(v) = self.solver {
            cfg.solver = match v {
                SolverArg::Ransac => SolverKind::Ransac,
                SolverArg::KcoreGnc => SolverKind::KcoreGnc,
            };
        }
        if let Some(v) = self.ransac_max_iter {
            cfg.ransac_max_iter = v;
        }
        if let Some(v) = self.ransac_confidence {
            cfg.ransac_confidence = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = Some(v);
        }
        if let Some(v) = self.tau_n {
            cfg.tau_n = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.descriptor_backend {
            cfg.descriptor_backend = match v {
                BackendArg::CylindricalHistogram => BackendKind::CylindricalHistogram,
            };
        }
        if let Some(v) = self.yaw_mode {
            cfg.yaw_mode = match v {
                YawModeArg::Windowed => YawMode::Windowed,
                YawModeArg::Full => YawMode::Full,
            };
        }
        if let Some(v) = self.sensor_origin {
            cfg.sensor_origin = v;
        }
        if let Some(v) = self.robust_kernel {
            cfg.robust_kernel = match v {
                KernelArg::Tls => RobustKernel::Tls,
                KernelArg::Huber => RobustKernel::Huber,
            };
        }
        if let Some(v) = self.huber_delta {
            cfg.huber_delta = Some(v);
        }
        if let Some(v) = self.gnc_mu_factor {
            cfg.gnc_mu_factor = v;
        }
        if let Some(v) = self.gnc_max_outer {
            cfg.gnc_max_outer = v;
        }
        if let Some(v) = self.gnc_weight_tol {
            cfg.gnc_weight_tol = v;
        }
        if let Some(v) = self.gnc_cost_tol {
            cfg.gnc_cost_tol = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

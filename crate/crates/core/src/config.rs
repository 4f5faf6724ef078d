//! Pipeline configuration: defaults, JSON loading, and validation.
//!
//! Every knob has a scene-agnostic default; a config file may override any
//! subset. Unknown keys are rejected so typos fail loudly instead of silently
//! running with defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which robust solver produces the final pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Ransac,
    KcoreGnc,
}

/// Descriptor backend selection; the histogram backend is the built-in default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    CylindricalHistogram,
}

/// How the fractional sector offset is read off the yaw correlation scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum YawMode {
    /// Soft expectation over a +/-2-sector window around the peak (default);
    /// immune to wrap-around bias when the peak sits near sector 0.
    Windowed,
    /// Soft expectation over the full circle of sector indices.
    Full,
}

/// Robust kernel used by the graph-based solver's refinement stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RobustKernel {
    /// Truncated least squares with graduated non-convexity (default).
    Tls,
    /// Huber-weighted iteratively reweighted least squares.
    Huber,
}

/// All tuning knobs of the registration pipeline.
///
/// Field names double as the JSON config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Voxel coefficient for spheric scenes (sphericity >= tau_v).
    pub kappa_spheric: f64,
    /// Voxel coefficient for disc-like scenes; must exceed kappa_spheric.
    pub kappa_disc: f64,
    /// Sphericity threshold separating the two voxel branches.
    pub tau_v: f64,
    /// Target mean neighbor fraction at the local scale.
    pub tau_l: f64,
    /// Target mean neighbor fraction at the middle scale.
    pub tau_m: f64,
    /// Target mean neighbor fraction at the global scale.
    pub tau_g: f64,
    /// Fraction of the larger cloud sampled for shape analysis.
    pub delta_v: f64,
    /// Number of query points sampled when solving for the search radii.
    pub n_r: usize,
    /// Upper clamp on every search radius, meters.
    pub r_max: f64,
    /// Keypoints requested per cloud per scale.
    pub n_fps: usize,
    /// Maximum points retained per patch.
    pub n_patch: usize,
    /// Cylindrical map height bins.
    #[serde(rename = "h")]
    pub map_h: usize,
    /// Cylindrical map yaw sectors.
    #[serde(rename = "w")]
    pub map_w: usize,
    /// Cylindrical map radial channels.
    #[serde(rename = "d")]
    pub map_d: usize,
    /// Robust solver for the final pose.
    pub solver: SolverKind,
    /// RANSAC iteration cap.
    pub ransac_max_iter: usize,
    /// RANSAC early-stop confidence; 1.0 disables early stopping.
    pub ransac_confidence: f64,
    /// Inlier threshold in meters; `null` resolves to twice the voxel size.
    pub epsilon: Option<f64>,
    /// Early-exit inlier count for the lite pipeline.
    pub tau_n: usize,
    /// Base RNG seed; all stochastic stages derive their streams from it.
    pub seed: u64,
    pub descriptor_backend: BackendKind,
    pub yaw_mode: YawMode,
    /// Sensor origin used to orient patch normals, meters.
    pub sensor_origin: [f64; 3],
    pub robust_kernel: RobustKernel,
    /// Huber kernel width in meters; `null` resolves to the solver noise bound.
    pub huber_delta: Option<f64>,
    /// Graduated non-convexity: control-parameter growth factor per iteration.
    pub gnc_mu_factor: f64,
    /// Graduated non-convexity: outer iteration cap.
    pub gnc_max_outer: usize,
    /// Convergence: maximum distance of weights from {0, 1}.
    pub gnc_weight_tol: f64,
    /// Convergence: minimum cost change between outer iterations.
    pub gnc_cost_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            kappa_spheric: 0.10,
            kappa_disc: 0.15,
            tau_v: 0.05,
            tau_l: 0.005,
            tau_m: 0.02,
            tau_g: 0.05,
            delta_v: 0.10,
            n_r: 2000,
            r_max: 5.0,
            n_fps: 1500,
            n_patch: 512,
            map_h: 7,
            map_w: 20,
            map_d: 32,
            solver: SolverKind::KcoreGnc,
            ransac_max_iter: 50_000,
            ransac_confidence: 0.999,
            epsilon: None,
            tau_n: 25,
            seed: 0,
            descriptor_backend: BackendKind::CylindricalHistogram,
            yaw_mode: YawMode::Windowed,
            sensor_origin: [0.0, 0.0, 0.0],
            robust_kernel: RobustKernel::Tls,
            huber_delta: None,
            gnc_mu_factor: 1.4,
            gnc_max_outer: 100,
            gnc_weight_tol: 1e-3,
            gnc_cost_tol: 1e-9,
        }
    }
}

impl PipelineConfig {
    /// Parses a JSON document, applies defaults for missing keys, validates.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| Error::Config {
            field: "(document)".into(),
            detail: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        fn fail(field: &str, detail: impl Into<String>) -> Result<()> {
            Err(Error::Config {
                field: field.into(),
                detail: detail.into(),
            })
        }
        let positive = [
            ("kappa_spheric", self.kappa_spheric),
            ("kappa_disc", self.kappa_disc),
            ("tau_v", self.tau_v),
            ("tau_l", self.tau_l),
            ("tau_m", self.tau_m),
            ("tau_g", self.tau_g),
            ("r_max", self.r_max),
            ("gnc_mu_factor", self.gnc_mu_factor),
            ("gnc_weight_tol", self.gnc_weight_tol),
            ("gnc_cost_tol", self.gnc_cost_tol),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return fail(name, format!("must be a positive number, got {value}"));
            }
        }
        if self.kappa_spheric >= self.kappa_disc {
            return fail(
                "kappa_spheric",
                format!(
                    "spheric coefficient ({}) must be below the disc coefficient ({})",
                    self.kappa_spheric, self.kappa_disc
                ),
            );
        }
        if !(self.tau_l <= self.tau_m && self.tau_m <= self.tau_g) {
            return fail(
                "tau_l",
                format!(
                    "neighbor fractions must be ordered tau_l <= tau_m <= tau_g, got {} / {} / {}",
                    self.tau_l, self.tau_m, self.tau_g
                ),
            );
        }
        if self.tau_g > 1.0 {
            return fail("tau_g", "a neighbor fraction cannot exceed 1.0");
        }
        if !(self.delta_v > 0.0 && self.delta_v <= 1.0) {
            return fail(
                "delta_v",
                format!("sampling fraction must lie in (0, 1], got {}", self.delta_v),
            );
        }
        let counts = [
            ("n_r", self.n_r),
            ("n_fps", self.n_fps),
            ("n_patch", self.n_patch),
            ("h", self.map_h),
            ("d", self.map_d),
            ("ransac_max_iter", self.ransac_max_iter),
        ];
        for (name, value) in counts {
            if value == 0 {
                return fail(name, "must be at least 1");
            }
        }
        if self.map_w < 2 {
            return fail("w", "at least 2 yaw sectors are required");
        }
        if !(self.ransac_confidence > 0.0 && self.ransac_confidence <= 1.0) {
            return fail(
                "ransac_confidence",
                format!("must lie in (0, 1], got {}", self.ransac_confidence),
            );
        }
        if let Some(eps) = self.epsilon {
            if !eps.is_finite() || eps <= 0.0 {
                return fail("epsilon", format!("must be positive when set, got {eps}"));
            }
        }
        if let Some(delta) = self.huber_delta {
            if !delta.is_finite() || delta <= 0.0 {
                return fail(
                    "huber_delta",
                    format!("must be positive when set, got {delta}"),
                );
            }
        }
        if self.gnc_max_outer == 0 {
            return fail("gnc_max_outer", "must be at least 1");
        }
        if !self.sensor_origin.iter().all(|c| c.is_finite()) {
            return fail("sensor_origin", "coordinates must be finite");
        }
        Ok(())
    }

    /// Inlier threshold for consensus and final solving, given the voxel size.
    pub fn resolved_epsilon(&self, voxel_size: f64) -> f64 {
        self.epsilon.unwrap_or(2.0 * voxel_size)
    }

    /// Huber width, defaulting to the solver's noise bound.
    pub fn resolved_huber_delta(&self, noise_bound: f64) -> f64 {
        self.huber_delta.unwrap_or(noise_bound)
    }

    /// Target neighbor fractions in scale order (local, middle, global).
    pub fn neighbor_fractions(&self) -> [f64; 3] {
        [self.tau_l, self.tau_m, self.tau_g]
    }
}

/// Reads and validates a JSON config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    PipelineConfig::from_json_str(&text)
}

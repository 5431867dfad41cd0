use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    FrameVerify,
    Simulate,
    FlowCheck,
    Entropy,
    FpCheck,
    ExoticCompare,
    Circles,
}

/// Named driving-field presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldPreset {
    /// independent noise on each listed frame field (all seven: Brownian motion)
    Frame,
    /// one channel along `(U1 + ... + U7)/√7`
    Diagonal,
    /// one channel along `(U1 - U2 + U3 - ... + U7)/√7`
    Alternating,
    /// one channel along `z1·U1`, a tangent but non-Killing field
    FirstCoordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeformationFamily {
    Identity,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaPreset {
    One,
    Smooth,
    Kink,
}

fn default_fields() -> FieldPreset {
    FieldPreset::Frame
}
fn default_frames() -> Vec<usize> {
    (1..=7).collect()
}
fn default_n_paths() -> usize {
    1000
}
fn default_dt() -> f64 {
    0.01
}
fn default_scheme() -> String {
    "heun".into()
}
fn default_polar_bins() -> usize {
    3
}
fn default_azimuth_bins() -> usize {
    6
}
fn default_deformation() -> DeformationFamily {
    DeformationFamily::Radial
}
fn default_epsilon() -> f64 {
    0.2
}
fn default_beta() -> BetaPreset {
    BetaPreset::One
}
fn default_circle_samples() -> usize {
    256
}
fn default_fp_points() -> usize {
    200
}
fn default_svg() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_fields")]
    pub fields: FieldPreset,
    #[serde(default = "default_frames")]
    pub frames: Vec<usize>,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub n_steps: Option<usize>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default)]
    pub save_every: Option<usize>,
    #[serde(default)]
    pub save_times: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub cap_radius: Option<f64>,
    #[serde(default = "default_polar_bins")]
    pub polar_bins: usize,
    #[serde(default = "default_azimuth_bins")]
    pub azimuth_bins: usize,
    #[serde(default = "default_deformation")]
    pub deformation: DeformationFamily,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_beta")]
    pub beta: BetaPreset,
    #[serde(default = "default_circle_samples")]
    pub circle_samples: usize,
    #[serde(default = "default_fp_points")]
    pub fp_points: usize,
    #[serde(default = "default_svg")]
    pub svg: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Divisible by the refinement ladders of flow-check and exotic-compare.
pub const DEFAULT_STEPS: usize = 128;

pub const SCHEMA: &str = r#"# Flat TOML, one key per line. Unknown keys are rejected.
experiment    = "simulate"   # required: frame-verify | simulate | flow-check | entropy
                             #           | fp-check | exotic-compare | circles
seed          = 42           # required unless --seed is given (u64)
fields        = "frame"      # frame | diagonal | alternating | first-coordinate
frames        = [1,2,3,4,5,6,7]  # frame indices driven when fields = "frame"
n_paths       = 1000         # ensemble size (sample points for frame-verify / flow-check)
n_steps       = 100          # integration steps (default 128); or give t_final
                             # flow-check: multiple of 8, exotic-compare: multiple of 16
dt            = 0.01         # step size
t_final       = 1.0          # optional; n_steps = t_final / dt
scheme        = "heun"       # heun | exact_rotation | ito_euler
save_every    = 10           # optional trajectory save stride (default: first and last)
save_times    = [0.0, 0.5]   # optional entropy snapshot times (entropy experiment)
start         = [1,0,0,0,0,0,0,0]  # optional initial point (normalized), default e1
cap_radius    = 0.1          # optional: start uniformly in a geodesic cap around `start`
polar_bins    = 3            # histogram bins per polar angle
azimuth_bins  = 6            # histogram bins for the azimuth
deformation   = "radial"     # identity | radial
epsilon       = 0.2          # radial deformation amplitude, in [0, 0.3]
beta          = "one"        # one | smooth | kink  (kink is continuous, not C1)
circle_samples = 256         # samples per circle image
fp_points     = 200          # grid points tested by fp-check
svg           = true         # also write SVG line charts
output        = "out"        # output directory (overridden by --output)
"#;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Number of integration steps after reconciling `n_steps`, `t_final` and `dt`.
    pub fn steps(&self) -> Result<usize, CliError> {
        match (self.n_steps, self.t_final) {
            (Some(n), None) => Ok(n),
            (n, Some(t)) => {
                let k = (t / self.dt).round();
                if (k * self.dt - t).abs() > 1e-9 * t.max(1.0) || k < 1.0 {
                    return Err(CliError::Config(format!(
                        "key `t_final`: {t} is not a positive multiple of dt = {}",
                        self.dt
                    )));
                }
                let k = k as usize;
                if let Some(n) = n {
                    if n != k {
                        return Err(CliError::Config(format!(
                            "keys `n_steps` ({n}) and `t_final` / `dt` ({k}) disagree"
                        )));
                    }
                }
                Ok(k)
            }
            (None, None) => Ok(DEFAULT_STEPS),
        }
    }

    pub fn t_final(&self) -> Result<f64, CliError> {
        Ok(self.steps()? as f64 * self.dt)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::Config("key `seed` is required (set it in the file or pass --seed)".into())
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: String| Err(CliError::Config(format!("key `{key}`: {msg}")));
        self.seed()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        if let Some(t) = self.t_final {
            if !(t > 0.0 && t.is_finite()) {
                return bad("t_final", format!("must be positive, got {t}"));
            }
        }
        if self.steps()? == 0 {
            return bad("n_steps", "must be positive".into());
        }
        for (key, v) in [
            ("n_paths", self.n_paths),
            ("polar_bins", self.polar_bins),
            ("azimuth_bins", self.azimuth_bins),
            ("circle_samples", self.circle_samples),
            ("fp_points", self.fp_points),
        ] {
            if v == 0 {
                return bad(key, "must be positive".into());
            }
        }
        if self.save_every == Some(0) {
            return bad("save_every", "must be positive".into());
        }
        if self.polar_bins > u16::MAX as usize || self.azimuth_bins > u16::MAX as usize {
            return bad("polar_bins", "too many bins".into());
        }
        if self.frames.is_empty() || self.frames.iter().any(|&m| !(1..=7).contains(&m)) {
            return bad("frames", "indices must lie in 1..=7".into());
        }
        if let Err(e) = self.scheme.parse::<s7flow::Scheme>() {
            return bad("scheme", e.to_string());
        }
        if let Some(s) = &self.start {
            if s.len() != 8 || s.iter().all(|x| *x == 0.0) || s.iter().any(|x| !x.is_finite()) {
                return bad("start", "needs 8 finite components, not all zero".into());
            }
        }
        if let Some(r) = self.cap_radius {
            if !(r > 0.0 && r <= std::f64::consts::PI) {
                return bad("cap_radius", format!("must lie in (0, π], got {r}"));
            }
        }
        if let Some(ts) = &self.save_times {
            if ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return bad("save_times", "times must be nonnegative".into());
            }
        }
        if !(0.0..=s7flow::exotic::MAX_EPSILON).contains(&self.epsilon) {
            return bad(
                "epsilon",
                format!(
                    "must lie in [0, {}], got {}",
                    s7flow::exotic::MAX_EPSILON,
                    self.epsilon
                ),
            );
        }
        Ok(())
    }
}

//! Pipeline settings: built-in defaults, overridden by an optional JSON
//! config file, overridden in turn by command-line flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use oneshot_deblur::blind::{BlurModel, DEFAULT_BINS};
use oneshot_deblur::deblur::DEFAULT_ENTROPY_THRESHOLD;
use oneshot_deblur::design::DEFAULT_GAIN_CAP;
use oneshot_deblur::{BandPolicy, DesignConfig, TuningParams};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, CliError, CliResult};

pub const DEFAULT_ORDER: usize = 7;
pub const DEFAULT_SCALE_FACTOR: usize = 2;
pub const DEFAULT_DENOISE_RATIO: f64 = 0.5;
pub const DEFAULT_SEED: u64 = 0;
/// Designs whose relative inverse error over the fit band exceeds this are
/// refused.
pub const FEASIBILITY_LIMIT: f64 = 0.1;

/// Either `auto` or an explicit number; used for `--omega-t` and `--gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

impl FromStr for AutoOr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AutoOr::Auto);
        }
        s.parse::<f64>()
            .map(AutoOr::Value)
            .map_err(|_| format!("expected 'auto' or a number, got '{s}'"))
    }
}

impl fmt::Display for AutoOr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutoOr::Auto => f.write_str("auto"),
            AutoOr::Value(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for AutoOr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AutoOr::Auto => s.serialize_str("auto"),
            AutoOr::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for AutoOr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(AutoOr::Value(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Every tunable the subcommands share. In a config file all keys are
/// optional; unknown keys are an error.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<BlurModel>,
    pub scale_factor: Option<usize>,
    pub order: Option<usize>,
    pub omega_t: Option<AutoOr>,
    pub gain_cap: Option<f64>,
    pub gamma: Option<AutoOr>,
    pub entropy_threshold: Option<f64>,
    pub denoise: Option<bool>,
    pub denoise_ratio: Option<f64>,
    pub bins: Option<usize>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::InvalidArgument(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(self, over: ConfigFile) -> ConfigFile {
        ConfigFile {
            model: over.model.or(self.model),
            scale_factor: over.scale_factor.or(self.scale_factor),
            order: over.order.or(self.order),
            omega_t: over.omega_t.or(self.omega_t),
            gain_cap: over.gain_cap.or(self.gain_cap),
            gamma: over.gamma.or(self.gamma),
            entropy_threshold: over.entropy_threshold.or(self.entropy_threshold),
            denoise: over.denoise.or(self.denoise),
            denoise_ratio: over.denoise_ratio.or(self.denoise_ratio),
            bins: over.bins.or(self.bins),
            seed: over.seed.or(self.seed),
        }
    }
}

/// Resolved and validated settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub model: BlurModel,
    pub scale_factor: usize,
    pub order: usize,
    pub omega_t: AutoOr,
    pub gain_cap: f64,
    pub gamma: AutoOr,
    pub entropy_threshold: f64,
    /// Denoise scale as a fraction of the blur scale; `None` disables it.
    pub denoise_ratio: Option<f64>,
    pub bins: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            model: BlurModel::Gaussian,
            scale_factor: DEFAULT_SCALE_FACTOR,
            order: DEFAULT_ORDER,
            omega_t: AutoOr::Auto,
            gain_cap: DEFAULT_GAIN_CAP,
            gamma: AutoOr::Auto,
            entropy_threshold: DEFAULT_ENTROPY_THRESHOLD,
            denoise_ratio: None,
            bins: DEFAULT_BINS,
            seed: DEFAULT_SEED,
        }
    }
}

impl PipelineConfig {
    pub fn resolve(settings: ConfigFile) -> CliResult<Self> {
        let d = PipelineConfig::default();
        // Giving a ratio implies denoising; `denoise: false` still wins.
        let denoise_ratio = match (settings.denoise, settings.denoise_ratio) {
            (Some(false), _) => None,
            (Some(true), r) => Some(r.unwrap_or(DEFAULT_DENOISE_RATIO)),
            (None, r) => r,
        };
        let config = PipelineConfig {
            model: settings.model.unwrap_or(d.model),
            scale_factor: settings.scale_factor.unwrap_or(d.scale_factor),
            order: settings.order.unwrap_or(d.order),
            omega_t: settings.omega_t.unwrap_or(d.omega_t),
            gain_cap: settings.gain_cap.unwrap_or(d.gain_cap),
            gamma: settings.gamma.unwrap_or(d.gamma),
            entropy_threshold: settings.entropy_threshold.unwrap_or(d.entropy_threshold),
            denoise_ratio,
            bins: settings.bins.unwrap_or(d.bins),
            seed: settings.seed.unwrap_or(d.seed),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> CliResult<()> {
        if !matches!(self.scale_factor, 2 | 4) {
            return invalid(format!("scale factor must be 2 or 4, got {}", self.scale_factor));
        }
        // 2N+1 taps must fit the longest kernel the designer builds.
        if !(1..=31).contains(&self.order) {
            return invalid(format!("order must be in 1..=31, got {}", self.order));
        }
        if let AutoOr::Value(w) = self.omega_t {
            if !(w > 0.0 && w <= std::f64::consts::PI) {
                return invalid(format!("omega-t must lie in (0, pi], got {w}"));
            }
        }
        if !(self.gain_cap > 1.0 && self.gain_cap.is_finite()) {
            return invalid(format!("gain cap must exceed 1, got {}", self.gain_cap));
        }
        if let AutoOr::Value(g) = self.gamma {
            if !(0.0..=1.0).contains(&g) {
                return invalid(format!("gamma must lie in [0, 1], got {g}"));
            }
        }
        if !(self.entropy_threshold > 0.0 && self.entropy_threshold.is_finite()) {
            return invalid(format!("entropy threshold must be positive, got {}", self.entropy_threshold));
        }
        if let Some(r) = self.denoise_ratio {
            if !(r > 0.0 && r < 1.0) {
                return invalid(format!("denoise ratio must lie in (0, 1), got {r}"));
            }
        }
        if self.bins < 16 {
            return invalid(format!("bins must be at least 16, got {}", self.bins));
        }
        Ok(())
    }

    pub fn design_config(&self) -> DesignConfig {
        let band = match self.omega_t {
            AutoOr::Auto => BandPolicy::Auto {
                gain_cap: self.gain_cap,
            },
            AutoOr::Value(w) => BandPolicy::Explicit(w),
        };
        DesignConfig {
            order: self.order,
            band,
            ..DesignConfig::default()
        }
    }

    pub fn tuning(&self) -> CliResult<TuningParams> {
        Ok(match self.gamma {
            AutoOr::Auto => TuningParams::adaptive(self.entropy_threshold)?,
            AutoOr::Value(g) => TuningParams::fixed(g)?,
        })
    }
}

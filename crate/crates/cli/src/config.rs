//! Problem configuration: a single TOML file describing the model, the
//! discount rate, the reward polynomial, and optional Monte Carlo and output
//! grid blocks.

use levystop_core::{LevyModel64, PathConfig, Polynomial64};
use serde::{Deserialize, Serialize};

/// Top-level problem description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Discount rate `r >= 0`.
    pub discount: f64,
    pub model: ModelConfig,
    pub reward: RewardConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "variant")]
pub enum ModelConfig {
    Brownian {
        drift: f64,
        sigma: f64,
    },
    Kou {
        drift: f64,
        sigma: f64,
        up_intensity: f64,
        up_rate: f64,
        down_intensity: f64,
        down_rate: f64,
    },
    /// Spectrally negative process given by the positive root `phi` of
    /// `psi(z) = r` directly.
    SpectrallyNegative { phi: f64 },
}

/// Reward polynomial: ascending coefficients, or a factored list of roots
/// (which yields the monic polynomial with those roots).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub paths: u64,
    pub seed: u64,
    pub x0: f64,
    /// Path truncation horizon; defaults to `12 / r` for `r > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

fn default_dt() -> f64 {
    1e-3
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

/// A configuration problem: reported with exit code 3.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn build_model(&self) -> Result<LevyModel64, ConfigError> {
        let model = match self.model {
            ModelConfig::Brownian { drift, sigma } => LevyModel64::brownian(drift, sigma),
            ModelConfig::Kou {
                drift,
                sigma,
                up_intensity,
                up_rate,
                down_intensity,
                down_rate,
            } => LevyModel64::kou(drift, sigma, up_intensity, up_rate, down_intensity, down_rate),
            ModelConfig::SpectrallyNegative { phi } => LevyModel64::spectrally_negative(phi),
        };
        model.map_err(|e| ConfigError(e.to_string()))
    }

    /// Build and validate the reward polynomial.
    ///
    /// The solver works on the normalized class (monic, `p(0) = 0`); any
    /// other polynomial is rejected here with a pointer to the affine
    /// reduction that brings it into that form.
    pub fn build_reward(&self) -> Result<Polynomial64, ConfigError> {
        let p = match (&self.reward.coeffs, &self.reward.roots) {
            (Some(c), None) => Polynomial64::new(c.clone()),
            (None, Some(r)) => Polynomial64::from_roots(r),
            (Some(_), Some(_)) => {
                return Err(ConfigError(
                    "reward: give either coeffs or roots, not both".into(),
                ))
            }
            (None, None) => {
                return Err(ConfigError("reward: give coeffs or roots".into()))
            }
        };
        let n = p
            .degree()
            .ok_or_else(|| ConfigError("reward: polynomial is zero".into()))?;
        if n < 1 {
            return Err(ConfigError("reward: polynomial must be non-constant".into()));
        }
        if (p.coeff(n) - 1.0).abs() > 1e-12 {
            return Err(ConfigError(format!(
                "reward: must be monic with zero constant term (p(x) = x^n + ... + a_1 x); \
                 leading coefficient is {}. Rescale and shift the polynomial first: a reward \
                 q(y) = scale * p(y - shift) has value scale * V(y - shift) and threshold \
                 x* + shift in terms of the normalized solution",
                p.coeff(n)
            )));
        }
        if p.coeff(0).abs() > 1e-12 * p.max_abs_coeff() {
            return Err(ConfigError(format!(
                "reward: must vanish at zero (constant term {}, expected 0); shift the \
                 polynomial so its smallest real root sits at the origin (q(y) = p(y - shift))",
                p.coeff(0)
            )));
        }
        Ok(p)
    }

    pub fn discount(&self) -> Result<f64, ConfigError> {
        if !self.discount.is_finite() || self.discount < 0.0 {
            return Err(ConfigError(format!(
                "discount = {} must be a nonnegative number",
                self.discount
            )));
        }
        Ok(self.discount)
    }

    /// Resolve the Monte Carlo block into a [`PathConfig`], applying the
    /// default horizon and any command-line overrides.
    pub fn build_path_config(
        &self,
        seed_override: Option<u64>,
        paths_override: Option<u64>,
    ) -> Result<PathConfig, ConfigError> {
        let blk = self
            .mc
            .ok_or_else(|| ConfigError("mc block is required for this command".into()))?;
        let r = self.discount()?;
        let horizon = match blk.horizon {
            Some(h) => h,
            None if r > 0.0 => PathConfig::default_horizon(r),
            None => {
                return Err(ConfigError(
                    "mc.horizon must be given explicitly when discount = 0".into(),
                ))
            }
        };
        let cfg = PathConfig {
            dt: blk.dt,
            horizon,
            paths: paths_override.unwrap_or(blk.paths),
            seed: seed_override.unwrap_or(blk.seed),
            x0: blk.x0,
        };
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }
}

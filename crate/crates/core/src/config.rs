//! TOML run configuration.
//!
//! Every table rejects unknown keys. [`RunConfig::resolve`] fills in every
//! default so the result can be written next to the output as a complete
//! record of the run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{default_dip_window, DEFAULT_PROMINENCE_FRACTION};
use crate::doppler::DopplerParams;
use crate::error::{Error, Result};
use crate::fit::{FitOptions, FreeParam};
use crate::model::{pulsation_weight_r, DetuningGrid, FieldConfig, PumpSource, PumpTermMode, RelaxationParams};
use crate::repump::{RepumpParams, REFERENCE_SWEEP};

pub const SCHEMA_VERSION: &str = "1";

/// Detuning grid: either `start`/`stop`/`points` or an explicit `values` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            start: Some(-150.0),
            stop: Some(150.0),
            points: Some(601),
            values: None,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<DetuningGrid> {
        match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => DetuningGrid::new(v.clone()),
            (None, Some(a), Some(b), Some(n)) => DetuningGrid::linspace(a, b, n),
            _ => Err(Error::param(
                "grid",
                "give either `values` or all of `start`, `stop`, `points`",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_prominence")]
    pub prominence_fraction: f64,
    /// Half-width of the central-dip search (MHz); four times γ1 when absent.
    #[serde(default)]
    pub dip_window: Option<f64>,
}

fn default_prominence() -> f64 {
    DEFAULT_PROMINENCE_FRACTION
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            prominence_fraction: DEFAULT_PROMINENCE_FRACTION,
            dip_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Repump detunings (MHz), one spectrum each.
    #[serde(default = "default_sweep")]
    pub delta_r: Vec<f64>,
}

fn default_sweep() -> Vec<f64> {
    REFERENCE_SWEEP.to_vec()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            delta_r: default_sweep(),
        }
    }
}

/// Synthetic data for a fit: the configured model plus seeded noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticData {
    /// Noise standard deviation as a fraction of the peak intensity.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// CSV file with the measured spectrum, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticData>,
    /// Amplitude scale when `scale` is not a free parameter.
    #[serde(default = "one")]
    pub scale: f64,
    pub free: Vec<FreeParam>,
    #[serde(default)]
    pub options: FitOptions,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_check_seed")]
    pub seed: u64,
    /// Random draws for the pulsation identity.
    #[serde(default = "default_pulsation_draws")]
    pub pulsation_draws: usize,
    /// Random draws for the third-order comparison.
    #[serde(default = "default_oracle_draws")]
    pub oracle_draws: usize,
    /// How many of those draws also go through time-domain integration.
    #[serde(default = "default_time_domain_draws")]
    pub time_domain_draws: usize,
}

fn default_check_seed() -> u64 {
    2024
}
fn default_pulsation_draws() -> usize {
    100
}
fn default_oracle_draws() -> usize {
    20
}
fn default_time_domain_draws() -> usize {
    2
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seed: default_check_seed(),
            pulsation_draws: default_pulsation_draws(),
            oracle_draws: default_oracle_draws(),
            time_domain_draws: default_time_domain_draws(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: String,
    #[serde(default)]
    pub mode: PumpTermMode,
    pub relaxation: RelaxationParams,
    /// Incoherent pumping; pumping into level 1 at γ1 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump: Option<PumpSource>,
    #[serde(default)]
    pub fields: FieldConfig,
    #[serde(default)]
    pub grid: GridConfig,
    /// Velocity averaging; a stationary spectrum when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doppler: Option<DopplerParams>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repump: Option<RepumpParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::param("config", e.message().to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::param("config", format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(fit) = config.fit.as_mut() {
            if let Some(data) = fit.data.as_mut() {
                if data.is_relative() {
                    if let Some(dir) = path.parent() {
                        *data = dir.join(&*data);
                    }
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration is always representable as TOML")
    }

    /// Checks every physical invariant; the resulting error names the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::param(
                "schema_version",
                format!("expected \"{SCHEMA_VERSION}\", got \"{}\"", self.schema_version),
            ));
        }
        self.relaxation.validate()?;
        self.relaxation.require_steady_state()?;
        pulsation_weight_r(&self.relaxation)?;
        self.pump().validate()?;
        self.fields.validate()?;
        self.grid.build()?;
        if let Some(d) = &self.doppler {
            d.validate()?;
        }
        let a = &self.analysis;
        if !(a.prominence_fraction > 0.0 && a.prominence_fraction < 1.0) {
            return Err(Error::param("prominence_fraction", "must lie in (0, 1)"));
        }
        if let Some(w) = a.dip_window {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::param("dip_window", "must be > 0"));
            }
        }
        if let Some(r) = &self.repump {
            r.validate()?;
        }
        if let Some(s) = &self.sweep {
            if s.delta_r.is_empty() || s.delta_r.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("delta_r", "sweep needs finite repump detunings"));
            }
        }
        if let Some(f) = &self.fit {
            if f.data.is_some() == f.synthetic.is_some() {
                return Err(Error::param("fit", "give exactly one of `data` and `synthetic`"));
            }
            if let Some(s) = f.synthetic {
                if !(s.noise >= 0.0 && s.noise.is_finite()) {
                    return Err(Error::param("noise", "must be >= 0"));
                }
            }
        }
        Ok(())
    }

    pub fn pump(&self) -> PumpSource {
        self.pump.unwrap_or_else(|| PumpSource::ground_only(&self.relaxation))
    }

    pub fn dip_window(&self) -> f64 {
        self.analysis
            .dip_window
            .unwrap_or_else(|| default_dip_window(&self.relaxation))
    }

    /// Copy with every default written out.
    pub fn resolve(&self) -> Self {
        let mut r = self.clone();
        r.pump = Some(self.pump());
        r.analysis.dip_window = Some(self.dip_window());
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = "1"
[relaxation]
gamma1 = 3.0
gamma2 = 6.0
gamma21 = 6.0
gamma_ph = 3.0
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.mode, PumpTermMode::BothPumps);
        assert_eq!(c.grid.build().unwrap().len(), 601);
        let r = c.resolve();
        assert_eq!(r.pump, Some(PumpSource::ground_only(&c.relaxation)));
        assert_eq!(r.analysis.dip_window, Some(12.0));
        let again = RunConfig::from_toml(&r.to_toml()).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[fields]\nomega_q = 1.0\n");
        let err = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("omega_q"), "{err}");
        let text = format!("{MINIMAL}\ncolour = 1\n");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn degenerate_rates_fail_validation() {
        let text = MINIMAL.replace("gamma2 = 6.0", "gamma2 = 3.0");
        let c = RunConfig::from_toml(&text).unwrap();
        assert!(matches!(c.validate(), Err(Error::DegenerateRates { .. })));
    }

    #[test]
    fn grid_needs_one_form() {
        let g = GridConfig {
            values: Some(vec![0.0, 1.0]),
            ..GridConfig::default()
        };
        assert!(g.build().is_err());
        let g = GridConfig {
            start: None,
            stop: None,
            points: None,
            values: Some(vec![0.0, 1.0]),
        };
        assert_eq!(g.build().unwrap().len(), 2);
    }
}

//! Run configuration read from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decoherence::Weighting;
use crate::error::{Error, Result};
use crate::fitter::{stage_free_params, FitSettings};
use crate::ion::ModelParams;
use crate::spectrum::{ModelOptions, SweepConfig};
use crate::SCHEMA_VERSION;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "ModelParams::er_gdvo4")]
    pub params: ModelParams,
    #[serde(default)]
    pub model: ModelOptions,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub echo: EchoConfig,
    #[serde(default)]
    pub linewidth: LinewidthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            params: ModelParams::er_gdvo4(),
            model: ModelOptions::default(),
            sweep: SweepConfig::default(),
            fit: FitConfig::default(),
            echo: EchoConfig::default(),
            linewidth: LinewidthConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Transition CSV, relative to the config file.
    pub data: Option<String>,
    pub stage1: FitSettings,
    pub stage2: FitSettings,
    /// Run stage 2 (magnons on) after stage 1.
    pub two_stage: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        let (s1, s2) = stage_free_params();
        FitConfig {
            data: None,
            stage1: FitSettings { free: s1, with_magnons: false, ..FitSettings::default() },
            stage2: FitSettings { free: s2, with_magnons: true, ..FitSettings::default() },
            two_stage: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EchoConfig {
    pub data: Option<String>,
    pub fixed_stretch: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinewidthConfig {
    pub data: Option<String>,
    pub weighting: Weighting,
}

impl RunConfig {
    /// Parses and validates a JSON document. Errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let wrap = |e: Error| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        };
        self.params.validate().map_err(wrap)?;
        self.sweep.validate().map_err(wrap)?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_uses_defaults() {
        let cfg = RunConfig::from_json(r#"{"schema_version": 1}"#).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_reports_position() {
        let err = RunConfig::from_json("{\n  \"schema_version\": 1,\n  \"sweeep\": {}\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("sweeep"), "{msg}");
    }

    #[test]
    fn wrong_schema_version() {
        assert!(matches!(RunConfig::from_json(r#"{"schema_version": 9}"#), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_sweep_is_config_error() {
        let err = RunConfig::from_json(r#"{"schema_version": 1, "sweep": {"steps": 1}}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}

//! Experiment configuration, read from a single JSON document.

use std::path::PathBuf;

use freeclt::bounds::{check_g_class, default_probe_grid, GrowthFunction, DEFAULT_EPSILONS};
use freeclt::families::Family;
use freeclt::oracle::EnsembleSpec;
use freeclt::{ConvolutionParams, Measure};
use serde::Deserialize;

use crate::{RunError, Subcommand};

/// `g` as a power `δ` or by name.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GSpec {
    Power(f64),
    Named(String),
}

impl GSpec {
    pub fn growth(&self) -> Result<GrowthFunction, RunError> {
        match self {
            GSpec::Power(d) if *d > 0.0 && *d <= 1.0 => Ok(GrowthFunction::power(*d)),
            GSpec::Power(d) => Err(RunError::Config(format!("g_spec power {d} must lie in (0, 1]"))),
            GSpec::Named(name) => match name.as_str() {
                "log1p" => Ok(GrowthFunction::log1p()),
                "square" => Ok(GrowthFunction::square()),
                other => Err(RunError::Config(format!("unknown growth function {other:?} (known: log1p, square, or a number δ)"))),
            },
        }
    }

    /// `δ` for the corollary column, when `g` is a power.
    pub fn power(&self) -> Option<f64> {
        match self {
            GSpec::Power(d) => Some(*d),
            GSpec::Named(_) => None,
        }
    }
}

fn default_epsilons() -> Vec<f64> {
    DEFAULT_EPSILONS.to_vec()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub family: Option<Family>,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub g_spec: Option<GSpec>,
    #[serde(default)]
    pub conv_params: ConvolutionParams,
    #[serde(default)]
    pub oracle_spec: Option<EnsembleSpec>,
    pub output_prefix: PathBuf,
    /// The two inputs of `convolve`.
    #[serde(default)]
    pub measures: Vec<Measure>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Config(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Family of a row-based run, checked.
    pub fn family(&self) -> Result<&Family, RunError> {
        let f = self.family.as_ref().ok_or_else(|| RunError::Config("family is required".into()))?;
        f.validate().map_err(|e| RunError::Config(e.to_string()))?;
        Ok(f)
    }

    /// Checks everything the subcommand will use.
    pub fn validate(&self, cmd: Subcommand) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        self.conv_params.validate().map_err(|e| RunError::Config(e.to_string()))?;
        if self.output_prefix.as_os_str().is_empty() {
            return bad("output_prefix is empty".into());
        }
        if cmd == Subcommand::Convolve {
            if self.measures.len() != 2 {
                return bad(format!("convolve needs exactly two measures, got {}", self.measures.len()));
            }
            return Ok(());
        }
        let family = self.family()?;
        if self.n_values.is_empty() {
            return bad("n_values is empty".into());
        }
        if self.n_values[0] == 0 {
            return bad("n_values must be positive".into());
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_values must be strictly ascending".into());
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return bad("epsilons must be a nonempty list in (0, 1]".into());
        }
        if matches!(cmd, Subcommand::CltSweep | Subcommand::BoundsReport | Subcommand::OracleCheck) && !family.is_centered() {
            return bad("CLT runs need a centered family".into());
        }
        if let Some(g) = &self.g_spec {
            let g = g.growth()?;
            let v = check_g_class(&g, &default_probe_grid()).map_err(|e| RunError::Config(e.to_string()))?;
            if let Some(v) = v {
                return bad(format!("g_spec {} is not in class G: {v}", g.label()));
            }
        }
        if cmd == Subcommand::OracleCheck {
            let spec = self.oracle_spec.as_ref().ok_or_else(|| RunError::Config("oracle-check needs oracle_spec".into()))?;
            spec.validate().map_err(|e| RunError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn output(&self, ext: &str) -> PathBuf {
        let mut s = self.output_prefix.clone().into_os_string();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Result<ExperimentConfig, RunError> {
        ExperimentConfig::from_json(text)
    }

    #[test]
    fn minimal_and_defaults() {
        let c = cfg(r#"{"family": "rademacher", "n_values": [1, 2], "output_prefix": "out/x"}"#).unwrap();
        assert_eq!(c.epsilons, DEFAULT_EPSILONS.to_vec());
        assert_eq!(c.conv_params, ConvolutionParams::default());
        assert!(c.validate(Subcommand::CltSweep).is_ok());
        assert_eq!(c.output("csv"), PathBuf::from("out/x.csv"));
    }

    #[test]
    fn rejections() {
        let err = |t: &str, cmd| cfg(t).and_then(|c| c.validate(cmd)).unwrap_err();
        assert!(matches!(err(r#"{"family": "rademacher", "n_values": [], "output_prefix": "x"}"#, Subcommand::CltSweep), RunError::Config(_)));
        assert!(matches!(err(r#"{"family": "rademacher", "n_values": [4, 2], "output_prefix": "x"}"#, Subcommand::CltSweep), RunError::Config(_)));
        assert!(matches!(err(r#"{"family": "rademacher", "n_values": [2], "output_prefix": "x", "bogus": 1}"#, Subcommand::CltSweep), RunError::Config(_)));
        assert!(matches!(err(r#"{"family": {"two_point": {"p": 0.3, "centered": false}}, "n_values": [2], "output_prefix": "x"}"#, Subcommand::CltSweep), RunError::Config(_)));
        assert!(matches!(err(r#"{"family": "rademacher", "n_values": [2], "output_prefix": "x", "g_spec": "square"}"#, Subcommand::CltSweep), RunError::Config(_)));
        assert!(matches!(err(r#"{"family": "rademacher", "n_values": [2], "output_prefix": "x"}"#, Subcommand::OracleCheck), RunError::Config(_)));
        assert!(matches!(err(r#"{"family": "rademacher", "n_values": [2], "output_prefix": "x", "epsilons": [0]}"#, Subcommand::CltSweep), RunError::Config(_)));
        assert!(matches!(err(r#"{"output_prefix": "x", "measures": []}"#, Subcommand::Convolve), RunError::Config(_)));
    }

    #[test]
    fn g_spec_forms() {
        let c = cfg(r#"{"family": "rademacher", "n_values": [2], "output_prefix": "x", "g_spec": 0.5}"#).unwrap();
        assert_eq!(c.g_spec, Some(GSpec::Power(0.5)));
        let c = cfg(r#"{"family": "rademacher", "n_values": [2], "output_prefix": "x", "g_spec": "log1p"}"#).unwrap();
        assert!(c.validate(Subcommand::BoundsReport).is_ok());
    }
}

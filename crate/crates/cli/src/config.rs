//! Pipeline configuration file. Every field is optional; command-line
//! flags override whatever the file says.

use std::path::{Path, PathBuf};

use infospec::eval::{BayesConfig, PriorWeighting};
use infospec::fit::{FitParams, ThresholdChoice, DEFAULT_BINS};
use infospec::synth::VariationConfig;
use infospec::{ClassMultiplicities, PpmGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub fit: FitConfig,
    pub eval: EvalConfig,
    pub ann: AnnConfig,
    pub synth: SynthConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub library: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// `"auto"` or a fixed positive level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSetting {
    Fixed(f64),
    Named(String),
}

impl ThresholdSetting {
    pub fn parse(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Self::Named(s.into()));
        }
        s.parse::<f64>().map(Self::Fixed).map_err(|_| format!("threshold must be 'auto' or a number, got '{s}'"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub n_bins: usize,
    pub threshold: ThresholdSetting,
    /// Centre and half-width of the solvent window used by the auto threshold.
    pub solvent_ppm: f64,
    pub solvent_half_width_ppm: f64,
    pub suppress_solvent: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_bins: DEFAULT_BINS,
            threshold: ThresholdSetting::Named("auto".into()),
            solvent_ppm: 4.7,
            solvent_half_width_ppm: 0.05,
            suppress_solvent: true,
        }
    }
}

impl FitConfig {
    pub fn params(&self) -> Result<FitParams, String> {
        let threshold = match &self.threshold {
            ThresholdSetting::Fixed(t) => ThresholdChoice::Fixed(*t),
            ThresholdSetting::Named(s) if s == "auto" => {
                ThresholdChoice::auto_around(self.solvent_ppm, self.solvent_half_width_ppm)
            }
            ThresholdSetting::Named(s) => return Err(format!("unknown threshold setting '{s}'")),
        };
        Ok(FitParams { n_bins: self.n_bins, threshold, suppress_solvent: self.suppress_solvent })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub bayes_bins: usize,
    pub priors: PriorWeighting,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let d = BayesConfig::default();
        Self { bayes_bins: d.n_bins, priors: d.priors }
    }
}

impl EvalConfig {
    pub fn bayes(&self) -> BayesConfig {
        BayesConfig { n_bins: self.bayes_bins, priors: self.priors }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnConfig {
    pub hidden: usize,
    pub step_size: f64,
    pub max_epochs: usize,
    pub target_max_bit_error: Option<f64>,
    pub seeds: Vec<u64>,
    /// Resample the library to this many channels before training.
    pub channels: Option<usize>,
}

impl Default for AnnConfig {
    fn default() -> Self {
        Self { hidden: 10, step_size: 0.01, max_epochs: 20_000, target_max_bit_error: Some(0.3), seeds: vec![1, 2, 3, 4], channels: None }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start_ppm: f64,
    pub end_ppm: f64,
    pub n_channels: usize,
}

impl GridConfig {
    pub fn grid(&self) -> infospec::Result<PpmGrid> {
        PpmGrid::new(self.start_ppm, self.end_ppm, self.n_channels)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: Option<u64>,
    pub multiplicities: Vec<usize>,
    pub grid: GridConfig,
    pub variation: VariationConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: None,
            multiplicities: ClassMultiplicities::reference_pattern().counts().to_vec(),
            grid: GridConfig { start_ppm: 1.0, end_ppm: 5.5, n_channels: 5000 },
            variation: VariationConfig::default(),
        }
    }
}

pub fn load(path: Option<&Path>) -> Result<PipelineConfig, String> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_fills_defaults() {
        let c: PipelineConfig = serde_json::from_str(r#"{"fit":{"n_bins":7,"threshold":0.2},"synth":{"seed":3}}"#).unwrap();
        assert_eq!(c.fit.n_bins, 7);
        assert_eq!(c.fit.params().unwrap().threshold, ThresholdChoice::Fixed(0.2));
        assert_eq!(c.synth.seed, Some(3));
        assert_eq!(c.synth.multiplicities.len(), 23);
        assert_eq!(c.ann.seeds, vec![1, 2, 3, 4]);
    }

    #[test]
    fn threshold_settings() {
        assert_eq!(ThresholdSetting::parse("auto").unwrap(), ThresholdSetting::Named("auto".into()));
        assert_eq!(ThresholdSetting::parse("0.5").unwrap(), ThresholdSetting::Fixed(0.5));
        assert!(ThresholdSetting::parse("high").is_err());
        let c = FitConfig { threshold: ThresholdSetting::Named("high".into()), ..FitConfig::default() };
        assert!(c.params().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"fitt":{}}"#).is_err());
    }
}

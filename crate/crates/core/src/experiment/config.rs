use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::data::WorkloadComponent;
use crate::forecaster::TrainConfig;
use crate::synth::SynthParams;
use crate::window::{
    HorizonConfig, InputMode, DEFAULT_FOLDS, DEFAULT_MIN_WINDOWS_PER_FOLD, LAG_GRID_S, PRED_GRID_S,
};

/// Everything a run depends on. The per-task training seed is derived from
/// `seed`, so `train.seed` is ignored by the runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data_dir: PathBuf,
    pub seed: u64,
    pub modes: Vec<InputMode>,
    pub components: Vec<WorkloadComponent>,
    pub lag_grid_s: Vec<u32>,
    pub pred_grid_s: Vec<u32>,
    pub folds: usize,
    pub min_windows_per_fold: usize,
    /// Permits horizons outside the study grid.
    pub allow_custom_grid: bool,
    /// Cohort size when synthesizing.
    pub n_subjects: usize,
    pub train: TrainConfig,
    pub synth: Option<SynthParams>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data_dir: PathBuf::from("cohort"),
            seed: 7,
            modes: vec![InputMode::Univariate, InputMode::Multivariate],
            components: vec![
                WorkloadComponent::Cognitive,
                WorkloadComponent::Visual,
                WorkloadComponent::Auditory,
                WorkloadComponent::Overall,
            ],
            lag_grid_s: LAG_GRID_S.to_vec(),
            pred_grid_s: PRED_GRID_S.to_vec(),
            folds: DEFAULT_FOLDS,
            min_windows_per_fold: DEFAULT_MIN_WINDOWS_PER_FOLD,
            allow_custom_grid: false,
            n_subjects: 16,
            train: TrainConfig::default(),
            synth: Some(SynthParams::default()),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.normalized()
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sorts and deduplicates the grids into canonical order, then validates.
    pub fn normalized(mut self) -> Result<Self, ExperimentError> {
        self.modes.sort();
        self.modes.dedup();
        self.components.sort();
        self.components.dedup();
        self.lag_grid_s.sort_unstable();
        self.lag_grid_s.dedup();
        self.pred_grid_s.sort_unstable();
        self.pred_grid_s.dedup();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.modes.is_empty() || self.components.is_empty() {
            return bad("modes and components must be non-empty".into());
        }
        if self.lag_grid_s.is_empty() || self.pred_grid_s.is_empty() {
            return bad("lag and prediction grids must be non-empty".into());
        }
        if !self.allow_custom_grid {
            if let Some(l) = self.lag_grid_s.iter().find(|l| !LAG_GRID_S.contains(l)) {
                return bad(format!(
                    "lag horizon {l}s is outside {LAG_GRID_S:?}; set allow_custom_grid to override"
                ));
            }
            if let Some(p) = self.pred_grid_s.iter().find(|p| !PRED_GRID_S.contains(p)) {
                return bad(format!(
                    "prediction horizon {p}s is outside {PRED_GRID_S:?}; set allow_custom_grid to override"
                ));
            }
        }
        for &lag in &self.lag_grid_s {
            for &pred in &self.pred_grid_s {
                HorizonConfig::new(lag, pred).map_err(|e| ExperimentError::Config(e.to_string()))?;
            }
        }
        if self.folds < 2 {
            return bad("at least 2 folds are required".into());
        }
        if self.min_windows_per_fold < 2 {
            return bad("min_windows_per_fold must be at least 2 for rank correlation".into());
        }
        self.train
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        if let Some(s) = &self.synth {
            s.validate()
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn horizons(&self) -> Vec<HorizonConfig> {
        let mut out = Vec::new();
        for &lag in &self.lag_grid_s {
            for &pred in &self.pred_grid_s {
                out.push(HorizonConfig::new(lag, pred).expect("validated horizon"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_the_study_grid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.horizons().len(), 12);
        assert_eq!(cfg.train.learning_rate, 1e-4);
        assert_eq!(cfg.train.batch_size, 128);
    }

    #[test]
    fn toml_round_trip_and_normalization() {
        let text = r#"
            data_dir = "somewhere"
            seed = 3
            modes = ["multivariate", "univariate", "multivariate"]
            components = ["overall", "cognitive"]
            lag_grid_s = [240, 30]
            pred_grid_s = [60]

            [train]
            max_epochs = 20
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.modes, vec![InputMode::Univariate, InputMode::Multivariate]);
        assert_eq!(
            cfg.components,
            vec![WorkloadComponent::Cognitive, WorkloadComponent::Overall]
        );
        assert_eq!(cfg.lag_grid_s, vec![30, 240]);
        assert_eq!(cfg.train.max_epochs, 20);
        assert_eq!(cfg.train.patience, 10);
        assert!(cfg.synth.is_some());
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn off_grid_horizons_need_override() {
        let cfg = ExperimentConfig {
            lag_grid_s: vec![45],
            ..ExperimentConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(ExperimentError::Config(_))));
        let cfg = ExperimentConfig {
            allow_custom_grid: true,
            ..cfg
        };
        cfg.validate().unwrap();
        let cfg = ExperimentConfig {
            lag_grid_s: vec![400],
            ..cfg
        };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
    }
}

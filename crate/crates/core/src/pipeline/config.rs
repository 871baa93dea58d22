//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cv::ExperimentConfig;
use crate::error::{Error, Result};
use crate::geo::GridSpec;
use crate::kriging::KrigingMode;
use crate::metrics::CompositeLossConfig;
use crate::models::{PredictorConfig, PredictorKind};
use crate::preprocess::{CurationConfig, InputKind};
use crate::synthetic::SyntheticConfig;
use crate::time::{Month, TimeAxis};
use crate::variogram::VariogramConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub points: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grids: Option<PathBuf>,
    /// `well_id,sy` table; required when inputs are depths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study_area: Option<PathBuf>,
}

/// Explicit time axis; inferred from the point file when absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub start: Month,
    pub n_months: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    #[serde(default = "default_folds")]
    pub n_folds: usize,
    #[serde(default = "default_eval_len")]
    pub eval_len: usize,
    #[serde(default = "default_fraction")]
    pub holdout_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_folds() -> usize {
    10
}
fn default_eval_len() -> usize {
    8
}
fn default_fraction() -> f64 {
    0.08
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            n_folds: default_folds(),
            eval_len: default_eval_len(),
            holdout_fraction: default_fraction(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    #[serde(default)]
    pub curation: CurationConfig,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default)]
    pub variogram: VariogramConfig,
    #[serde(default)]
    pub kriging: KrigingMode,
    #[serde(default)]
    pub loss: CompositeLossConfig,
    #[serde(default)]
    pub predictors: Vec<PredictorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: e.message().to_string(),
            }
        })
    }

    /// Reads, resolves relative paths against the file's directory and
    /// validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.points);
        for p in [
            &mut self.paths.grids,
            &mut self.paths.storage,
            &mut self.paths.study_area,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        for p in &mut self.predictors {
            if let PredictorKind::External { path } = &mut p.kind {
                fix(path);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut files = vec![("points", &self.paths.points)];
        for (k, p) in [
            ("grids", &self.paths.grids),
            ("storage", &self.paths.storage),
            ("study_area", &self.paths.study_area),
        ] {
            if let Some(p) = p {
                files.push((k, p));
            }
        }
        for (key, p) in files {
            if !p.is_file() {
                return Err(Error::Config(format!("paths.{key}: {} does not exist", p.display())));
            }
        }
        if self.curation.input == InputKind::Depth && self.paths.storage.is_none() {
            return Err(Error::Config("depth inputs need paths.storage".into()));
        }
        self.grid.validate()?;
        if let Some(t) = &self.time {
            if t.n_months == 0 {
                return Err(Error::Config("time.n_months must be positive".into()));
            }
        }
        if self.cv.n_folds == 0 || self.cv.eval_len == 0 {
            return Err(Error::Config("cv.n_folds and cv.eval_len must be positive".into()));
        }
        if !(self.cv.holdout_fraction > 0.0 && self.cv.holdout_fraction < 1.0) {
            return Err(Error::Config(format!(
                "cv.holdout_fraction must lie in (0, 1), got {}",
                self.cv.holdout_fraction
            )));
        }
        if self.curation.baseline_start > self.curation.baseline_end {
            return Err(Error::Config("curation baseline starts after it ends".into()));
        }
        self.variogram.validate()?;
        self.loss.validate()?;
        if let KrigingMode::Local {
            max_neighbors,
            search_radius,
        } = self.kriging
        {
            if max_neighbors == 0 || !(search_radius > 0.0) {
                return Err(Error::Config(
                    "local kriging needs max_neighbors ≥ 1 and a positive radius".into(),
                ));
            }
        }
        let mut labels = Vec::new();
        for p in &self.predictors {
            p.validate()?;
            let l = p.label();
            if labels.contains(&l) {
                return Err(Error::Config(format!("duplicate predictor name {l:?}")));
            }
            labels.push(l);
        }
        Ok(())
    }

    pub fn axis(&self) -> Option<TimeAxis> {
        self.time.map(|t| TimeAxis::new(t.start, t.n_months))
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            n_folds: self.cv.n_folds,
            eval_len: self.cv.eval_len,
            holdout_fraction: self.cv.holdout_fraction,
            variogram: self.variogram,
            kriging: self.kriging,
            loss: self.loss,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unserializable config: {e}\n"))
    }
}

//! Grid-to-point predictors and their building blocks.
//!
//! Predictors are fitted through a [`DataAccess`] restricted to a
//! [`TrainWindow`] and predict through an unrestricted one. All values
//! crossing this interface are in physical units (meters of storage
//! anomaly); models scale internally.

pub mod baselines;
pub mod external;
pub mod features;
pub mod net;
pub mod rbf;
pub mod rbf_net;
pub mod ridge;

use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GridSpec};
use crate::gridstack::GridSource;
use crate::time::TimeAxis;

pub use baselines::{Climatology, Persistence};
pub use external::{read_predictions, ExternalPredictions};
pub use features::{extract_features, unflatten, FeatureConfig, FeatureLayout, FeatureVector, PatchTensor};
pub use net::{pinball_loss, Activation, QuantileNet, TrainConfig};
pub use rbf::{rbf_embed, RbfEmbedding};
pub use rbf_net::{RbfQuantileConfig, RbfQuantilePredictor};
pub use ridge::{ridge_solve, RidgeConfig, RidgePredictor};

/// Wells, targets and gridded predictors as seen by a model.
pub trait DataAccess: GridSource + Sync {
    fn n_wells(&self) -> usize;
    fn site(&self, well: usize) -> &GeoPoint;
    /// Observed target in physical units.
    fn target(&self, well: usize, t: usize) -> Result<f64>;
    fn grid_spec(&self) -> &GridSpec;
    fn axis(&self) -> TimeAxis;
    fn channel_names(&self) -> &[String];
}

/// The part of the data a fit may use: `wells` over `[0, end)`. The last
/// `val_len` steps of that range serve as the early-stopping set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainWindow {
    pub wells: Vec<usize>,
    pub end: usize,
    pub val_len: usize,
}

impl TrainWindow {
    pub fn fit_range(&self) -> Range<usize> {
        0..self.end.saturating_sub(self.val_len)
    }

    pub fn stop_range(&self) -> Range<usize> {
        self.end.saturating_sub(self.val_len)..self.end
    }
}

pub trait Predictor: Send + Sync {
    fn name(&self) -> &str;
    /// Earliest time index the predictor can serve.
    fn first_time(&self) -> usize {
        0
    }
    fn predict(&self, data: &dyn DataAccess, well: usize, t: usize) -> Result<f64>;
}

/// How a predictor's values reach the interpolation holdout wells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Krige model-well predictions to the holdout sites.
    Kriging,
    /// Evaluate the predictor at the holdout sites.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorKind {
    Climatology,
    Persistence,
    Ridge(RidgeConfig),
    RbfQuantile(RbfQuantileConfig),
    External { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub interpolation: Option<Interpolation>,
    #[serde(flatten)]
    pub kind: PredictorKind,
}

impl PredictorConfig {
    pub fn new(kind: PredictorKind) -> Self {
        PredictorConfig {
            name: None,
            interpolation: None,
            kind,
        }
    }

    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match &self.kind {
            PredictorKind::Climatology => "climatology",
            PredictorKind::Persistence => "persistence",
            PredictorKind::Ridge(_) => "ridge",
            PredictorKind::RbfQuantile(_) => "rbf_quantile",
            PredictorKind::External { .. } => "external",
        }
        .to_string()
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation.unwrap_or(match self.kind {
            PredictorKind::RbfQuantile(_) | PredictorKind::External { .. } => Interpolation::Direct,
            _ => Interpolation::Kriging,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            PredictorKind::Ridge(c) => c.validate(),
            PredictorKind::RbfQuantile(c) => c.validate(),
            PredictorKind::External { path } if !path.exists() => Err(Error::Config(format!(
                "predictions file {} does not exist",
                path.display()
            ))),
            _ => Ok(()),
        }
    }
}

pub fn fit_predictor(
    cfg: &PredictorConfig,
    data: &dyn DataAccess,
    window: &TrainWindow,
    seed: u64,
) -> Result<Box<dyn Predictor>> {
    if window.wells.is_empty() || window.end == 0 {
        return Err(Error::InsufficientData("empty training window".into()));
    }
    let name = cfg.label();
    Ok(match &cfg.kind {
        PredictorKind::Climatology => Box::new(Climatology::fit(name, data, window)?),
        PredictorKind::Persistence => Box::new(Persistence::new(name)),
        PredictorKind::Ridge(c) => Box::new(RidgePredictor::fit(name, c, data, window)?),
        PredictorKind::RbfQuantile(c) => Box::new(RbfQuantilePredictor::fit(name, c, data, window, seed)?),
        PredictorKind::External { path } => Box::new(ExternalPredictions::load(name, path)?),
    })
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::geo::Projection;
    use crate::gridstack::GridStack;
    use crate::time::Month;

    /// Wells on a diagonal over a 4×4 grid with one all-zero channel.
    pub struct ToyData {
        pub points: Vec<GeoPoint>,
        pub values: Vec<Vec<f64>>,
        pub stack: GridStack,
        pub grid: GridSpec,
        pub names: Vec<String>,
    }

    impl ToyData {
        pub fn new(n_wells: usize, n_times: usize, f: impl Fn(usize, usize) -> f64) -> Self {
            let proj = Projection::default();
            let grid = GridSpec::new(90.0, 22.0, 0.25, 4, 4).unwrap();
            let points = (0..n_wells)
                .map(|w| {
                    GeoPoint::new(
                        format!("w{w}"),
                        90.05 + 0.9 * w as f64 / n_wells as f64,
                        22.1 + 0.03 * w as f64,
                        &proj,
                    )
                    .unwrap()
                })
                .collect();
            let values = (0..n_wells).map(|w| (0..n_times).map(|t| f(w, t)).collect()).collect();
            let names = vec!["zero".to_string()];
            let mut stack = GridStack::new(n_times, names.clone(), 4, 4);
            for t in 0..n_times {
                for i in 0..4 {
                    for j in 0..4 {
                        stack.set(t, 0, i, j, Some(0.0));
                    }
                }
            }
            ToyData {
                points,
                values,
                stack,
                grid,
                names,
            }
        }
    }

    impl GridSource for ToyData {
        fn grid_dims(&self) -> [usize; 4] {
            self.stack.dims()
        }
        fn grid_value(&self, t: usize, c: usize, i: usize, j: usize) -> Result<Option<f64>> {
            Ok(self.stack.get(t, c, i, j))
        }
    }

    impl DataAccess for ToyData {
        fn n_wells(&self) -> usize {
            self.points.len()
        }
        fn site(&self, well: usize) -> &GeoPoint {
            &self.points[well]
        }
        fn target(&self, well: usize, t: usize) -> Result<f64> {
            Ok(self.values[well][t])
        }
        fn grid_spec(&self) -> &GridSpec {
            &self.grid
        }
        fn axis(&self) -> TimeAxis {
            TimeAxis::new(Month::new(2000, 1).unwrap(), self.stack.n_times())
        }
        fn channel_names(&self) -> &[String] {
            &self.names
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_from_toml() {
        let text = r#"
            [[p]]
            kind = "climatology"

            [[p]]
            kind = "ridge"
            alpha = 0.5
            lags = 5

            [[p]]
            kind = "rbf_quantile"
            name = "deepkriging"
            knots = [2, 3]
        "#;
        #[derive(Deserialize)]
        struct W {
            p: Vec<PredictorConfig>,
        }
        let w: W = toml::from_str(text).unwrap();
        assert_eq!(w.p[0].label(), "climatology");
        assert_eq!(w.p[0].interpolation(), Interpolation::Kriging);
        match &w.p[1].kind {
            PredictorKind::Ridge(c) => {
                assert_eq!(c.alpha, 0.5);
                assert_eq!(c.lags, 5);
                assert_eq!(c.patch_radius, 1);
            }
            k => panic!("{k:?}"),
        }
        assert_eq!(w.p[2].label(), "deepkriging");
        assert_eq!(w.p[2].interpolation(), Interpolation::Direct);
    }
}

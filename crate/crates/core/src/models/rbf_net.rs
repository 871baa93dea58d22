//! Quantile network on RBF embeddings of (x, y, t) plus the channel values
//! at the site cell.

use serde::{Deserialize, Serialize};

use super::net::{Activation, QuantileNet, TrainConfig};
use super::rbf::RbfEmbedding;
use super::{DataAccess, Predictor, TrainWindow};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::preprocess::ScalingParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfQuantileConfig {
    /// Knots per axis for each resolution level.
    #[serde(default = "default_knots")]
    pub knots: Vec<usize>,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_levels")]
    pub quantiles: Vec<f64>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    /// Append the gridded channel values at the site cell.
    #[serde(default = "yes")]
    pub site_channels: bool,
}

fn default_knots() -> Vec<usize> {
    vec![2, 4, 6]
}
fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}
fn default_levels() -> Vec<f64> {
    vec![0.1, 0.5, 0.9]
}
fn default_lr() -> f64 {
    1e-3
}
fn default_epochs() -> usize {
    200
}
fn default_batch() -> usize {
    64
}
fn default_patience() -> usize {
    20
}
fn yes() -> bool {
    true
}

impl Default for RbfQuantileConfig {
    fn default() -> Self {
        RbfQuantileConfig {
            knots: default_knots(),
            hidden: default_hidden(),
            quantiles: default_levels(),
            activation: Activation::default(),
            learning_rate: default_lr(),
            max_epochs: default_epochs(),
            batch_size: default_batch(),
            patience: default_patience(),
            site_channels: true,
        }
    }
}

impl RbfQuantileConfig {
    pub fn validate(&self) -> Result<()> {
        super::net::validate_levels(&self.quantiles)?;
        if self.knots.is_empty() || self.knots.iter().any(|&k| k < 2) {
            return Err(Error::Config(format!(
                "rbf knots must be ≥ 2 per level, got {:?}",
                self.knots
            )));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config(format!("invalid hidden layer sizes {:?}", self.hidden)));
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config(
                "learning rate, batch size and epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RbfQuantilePredictor {
    name: String,
    embedding: RbfEmbedding,
    /// Per-channel scaling, present when site channels are used.
    channels: Option<ScalingParams>,
    target: ScalingParams,
    bounds: [f64; 4],
    n_times: usize,
    net: QuantileNet,
}

impl RbfQuantilePredictor {
    pub fn fit(
        name: String,
        cfg: &RbfQuantileConfig,
        data: &dyn DataAccess,
        window: &TrainWindow,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let g = data.grid_spec();
        let [n_times, n_c, h, w] = data.grid_dims();
        let channels = if cfg.site_channels {
            let mut lo = vec![f64::INFINITY; n_c];
            let mut hi = vec![f64::NEG_INFINITY; n_c];
            for t in 0..window.end {
                for c in 0..n_c {
                    for i in 0..h {
                        for j in 0..w {
                            if let Some(v) = data.grid_value(t, c, i, j)? {
                                lo[c] = lo[c].min(v);
                                hi[c] = hi[c].max(v);
                            }
                        }
                    }
                }
            }
            for c in 0..n_c {
                if !(lo[c].is_finite() && hi[c] > lo[c]) {
                    (lo[c], hi[c]) = (0.0, 1.0);
                }
            }
            Some(ScalingParams { min: lo, max: hi })
        } else {
            None
        };
        let mut ys_all = Vec::new();
        for &wl in &window.wells {
            for t in 0..window.end {
                ys_all.push(data.target(wl, t)?);
            }
        }
        let (lo, hi) = ys_all
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let target = if hi > lo {
            ScalingParams::from_range(lo, hi)?
        } else {
            ScalingParams::from_range(lo - 0.5, lo + 0.5)?
        };
        let embedding = RbfEmbedding::grid(3, &cfg.knots)?;
        let mut model = RbfQuantilePredictor {
            name,
            embedding,
            channels,
            target,
            bounds: [g.lon_min, g.lon_max(), g.lat_min, g.lat_max()],
            n_times,
            net: QuantileNet::zeros(1, &cfg.hidden, &cfg.quantiles, cfg.activation)?,
        };
        let sample = |range: std::ops::Range<usize>| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for t in range {
                for &wl in &window.wells {
                    xs.push(model.inputs(data, data.site(wl), t)?);
                    ys.push(model.target.transform(0, data.target(wl, t)?));
                }
            }
            Ok((xs, ys))
        };
        let (xs, ys) = sample(window.fit_range())?;
        let (xv, yv) = sample(window.stop_range())?;
        if xs.is_empty() {
            return Err(Error::InsufficientData(
                "no samples before the early-stopping window".into(),
            ));
        }
        let mut net = QuantileNet::new(xs[0].len(), &cfg.hidden, &cfg.quantiles, cfg.activation, seed)?;
        let train_cfg = TrainConfig {
            learning_rate: cfg.learning_rate,
            max_epochs: cfg.max_epochs,
            batch_size: cfg.batch_size,
            patience: cfg.patience,
            seed: seed.wrapping_add(1),
        };
        let summary = net.train((&xs, &ys), (&xv, &yv), &train_cfg)?;
        log::debug!(
            "{}: {} epochs, best {} (val pinball {:.5})",
            model.name,
            summary.epochs_run,
            summary.best_epoch,
            summary.best_val_loss
        );
        model.net = net;
        Ok(model)
    }

    fn inputs(&self, data: &dyn DataAccess, site: &GeoPoint, t: usize) -> Result<Vec<f64>> {
        let [lon0, lon1, lat0, lat1] = self.bounds;
        let u = [
            (site.lon - lon0) / (lon1 - lon0),
            (site.lat - lat0) / (lat1 - lat0),
            if self.n_times > 1 {
                t as f64 / (self.n_times - 1) as f64
            } else {
                0.0
            },
        ];
        let mut x = self.embedding.embed(&u)?;
        if let Some(sc) = &self.channels {
            let cell = data.grid_spec().cell_of(site);
            for c in 0..sc.n_channels() {
                let v = match cell {
                    Some((i, j)) => data.grid_value(t, c, i, j)?,
                    None => None,
                };
                x.push(v.map_or(0.0, |v| sc.transform(c, v)));
            }
        }
        Ok(x)
    }

    pub fn net(&self) -> &QuantileNet {
        &self.net
    }

    /// Sorted quantiles in physical units.
    pub fn quantiles(&self, data: &dyn DataAccess, well: usize, t: usize) -> Result<Vec<f64>> {
        let x = self.inputs(data, data.site(well), t)?;
        Ok(self
            .net
            .quantiles(&x)
            .into_iter()
            .map(|q| self.target.inverse(0, q))
            .collect())
    }
}

impl Predictor for RbfQuantilePredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, data: &dyn DataAccess, well: usize, t: usize) -> Result<f64> {
        let x = self.inputs(data, data.site(well), t)?;
        Ok(self.target.inverse(0, self.net.median(&x)))
    }
}

//! Closed-form ridge regression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureConfig};
use super::{DataAccess, Predictor, TrainWindow};
use crate::error::{Error, Result};

/// Solves (XᵀX + αI)β = Xᵀy. Rows of `x` are samples.
///
/// The normal matrix is Cholesky-factored; a failed or numerically
/// rank-deficient factorization is reported as [`Error::Singular`].
pub fn ridge_solve(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InsufficientData(format!(
            "ridge needs matching nonempty rows ({} rows, {} targets)",
            x.len(),
            y.len()
        )));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!(
            "ridge alpha must be finite and ≥ 0, got {alpha}"
        )));
    }
    let d = x[0].len();
    let xm = DMatrix::from_fn(x.len(), d, |i, j| x[i][j]);
    let mut a = xm.tr_mul(&xm);
    for k in 0..d {
        a[(k, k)] += alpha;
    }
    let b = xm.tr_mul(&DVector::from_column_slice(y));
    let chol = a.clone().cholesky().ok_or_else(|| singular(alpha))?;
    let diag: Vec<f64> = (0..d).map(|k| chol.l_dirty()[(k, k)]).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if d > 0 && (min / max).powi(2) < RANK_TOL {
        return Err(singular(alpha));
    }
    Ok(chol.solve(&b).iter().copied().collect())
}

/// Smallest accepted ratio of extreme eigenvalue proxies (squared Cholesky
/// pivots) before the normal matrix is declared rank deficient.
const RANK_TOL: f64 = 1e-12;

fn singular(alpha: f64) -> Error {
    Error::Singular(format!(
        "regularized normal matrix is singular at alpha = {alpha}; use alpha > 0 or drop collinear features"
    ))
}

/// Ridge on standardized features with an unpenalized intercept.
///
/// Columns with zero spread on the fit data get a zero coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl RidgeModel {
    pub fn fit(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InsufficientData("ridge fit on an empty sample".into()));
        }
        let n = x.len() as f64;
        let d = x[0].len();
        let means: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scales: Vec<f64> = (0..d)
            .map(|j| (x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        let live: Vec<usize> = (0..d).filter(|&j| scales[j] > 1e-12 * (1.0 + means[j].abs())).collect();
        let y_mean = y.iter().sum::<f64>() / n;
        let z: Vec<Vec<f64>> = x
            .iter()
            .map(|r| live.iter().map(|&j| (r[j] - means[j]) / scales[j]).collect())
            .collect();
        let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        let mut coef = vec![0.0; d];
        if !live.is_empty() {
            let beta = ridge_solve(&z, &yc, alpha)?;
            for (k, &j) in live.iter().enumerate() {
                coef[j] = beta[k];
            }
        }
        Ok(RidgeModel {
            means,
            scales,
            coef,
            intercept: y_mean,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept
            + x.iter()
                .zip(&self.coef)
                .zip(self.means.iter().zip(&self.scales))
                .filter(|((_, c), _)| **c != 0.0)
                .map(|((v, c), (m, s))| c * (v - m) / s)
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_radius")]
    pub patch_radius: usize,
    /// 1 for the spatial configuration, 5 for the spatiotemporal one.
    #[serde(default = "default_lags")]
    pub lags: usize,
    #[serde(default = "yes")]
    pub site_xy: bool,
    /// Channel name appended as the site elevation scalar.
    #[serde(default)]
    pub elevation: Option<String>,
}

fn default_alpha() -> f64 {
    1.0
}
fn default_radius() -> usize {
    1
}
fn default_lags() -> usize {
    1
}
fn yes() -> bool {
    true
}

impl Default for RidgeConfig {
    fn default() -> Self {
        RidgeConfig {
            alpha: default_alpha(),
            patch_radius: default_radius(),
            lags: default_lags(),
            site_xy: true,
            elevation: None,
        }
    }
}

impl RidgeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!(
                "ridge alpha must be finite and ≥ 0, got {}",
                self.alpha
            )));
        }
        if self.lags == 0 {
            return Err(Error::Config("ridge lags must be at least 1".into()));
        }
        Ok(())
    }

    fn features(&self, channels: &[String]) -> Result<FeatureConfig> {
        let elevation_channel = match &self.elevation {
            None => None,
            Some(name) => Some(
                channels
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::Config(format!("elevation channel {name:?} not among {channels:?}")))?,
            ),
        };
        Ok(FeatureConfig {
            patch_radius: self.patch_radius,
            lags: self.lags,
            site_xy: self.site_xy,
            elevation_channel,
        })
    }
}

/// Ridge regression on patch features.
#[derive(Debug, Clone)]
pub struct RidgePredictor {
    name: String,
    features: FeatureConfig,
    model: RidgeModel,
}

impl RidgePredictor {
    pub fn fit(name: String, cfg: &RidgeConfig, data: &dyn DataAccess, window: &TrainWindow) -> Result<Self> {
        cfg.validate()?;
        let features = cfg.features(data.channel_names())?;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for t in cfg.lags - 1..window.end {
            for &w in &window.wells {
                x.push(extract_features(data, data.grid_spec(), data.site(w), t, &features)?.values);
                y.push(data.target(w, t)?);
            }
        }
        if x.is_empty() {
            return Err(Error::InsufficientHistory {
                t: window.end,
                lags: cfg.lags,
            });
        }
        let model = RidgeModel::fit(&x, &y, cfg.alpha)?;
        Ok(RidgePredictor { name, features, model })
    }

    pub fn model(&self) -> &RidgeModel {
        &self.model
    }
}

impl Predictor for RidgePredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn first_time(&self) -> usize {
        self.features.lags - 1
    }

    fn predict(&self, data: &dyn DataAccess, well: usize, t: usize) -> Result<f64> {
        let fv = extract_features(data, data.grid_spec(), data.site(well), t, &self.features)?;
        Ok(self.model.predict(&fv.values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_design(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect()
    }

    #[test]
    fn exact_recovery_without_penalty() {
        let x = random_design(1, 50, 4);
        let beta = [1.5, -2.0, 0.25, 3.0];
        let y: Vec<f64> = x
            .iter()
            .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum())
            .collect();
        let got = ridge_solve(&x, &y, 0.0).unwrap();
        for (g, b) in got.iter().zip(&beta) {
            assert!((g - b).abs() < 1e-6);
        }
    }

    #[test]
    fn collinear_without_penalty_is_singular() {
        let x: Vec<Vec<f64>> = random_design(2, 20, 1)
            .into_iter()
            .map(|r| vec![r[0], 2.0 * r[0]])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0]).collect();
        match ridge_solve(&x, &y, 0.0) {
            Err(Error::Singular(m)) => assert!(m.contains("alpha > 0")),
            other => panic!("{other:?}"),
        }
        assert!(ridge_solve(&x, &y, 1e-3).is_ok());
    }

    #[test]
    fn standardized_model_fits_affine_target() {
        let x = random_design(3, 40, 3);
        let x: Vec<Vec<f64>> = x
            .into_iter()
            .map(|mut r| {
                r.push(7.0);
                r
            })
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 10.0 + 2.0 * r[0] - r[2]).collect();
        let m = RidgeModel::fit(&x, &y, 0.0).unwrap();
        assert_eq!(m.coef[3], 0.0);
        for (r, v) in x.iter().zip(&y) {
            assert!((m.predict(r) - v).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn norm_shrinks_with_alpha(seed in 0u64..1000) {
            let x = random_design(seed, 30, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let y: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut last = f64::INFINITY;
            for alpha in [0.0, 0.1, 1.0, 10.0, 100.0, 1e4, 1e8] {
                let b = ridge_solve(&x, &y, alpha).unwrap();
                let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                prop_assert!(norm <= last + 1e-12);
                last = norm;
            }
            prop_assert!(last < 1e-4);
        }
    }
}

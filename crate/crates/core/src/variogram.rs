//! Empirical semivariograms and parametric variogram models.
//!
//! Exponential and gaussian models use the practical-range convention: the
//! model reaches about 95% of its sill at `range` (factors 3 and √3 on the
//! distance). Spherical attains the sill exactly at `range`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::optimize::NelderMead;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Spherical,
    #[default]
    Exponential,
    Gaussian,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Spherical, Family::Exponential, Family::Gaussian];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Spherical => "spherical",
            Family::Exponential => "exponential",
            Family::Gaussian => "gaussian",
        })
    }
}

/// Nugget, partial sill and range of one of the three families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramModel {
    pub family: Family,
    pub nugget: f64,
    pub partial_sill: f64,
    pub range: f64,
}

impl VariogramModel {
    pub fn new(family: Family, nugget: f64, partial_sill: f64, range: f64) -> Result<Self> {
        let m = VariogramModel {
            family,
            nugget,
            partial_sill,
            range,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nugget >= 0.0 && self.partial_sill >= 0.0 && self.range > 0.0)
            || !self.nugget.is_finite()
            || !self.partial_sill.is_finite()
            || !self.range.is_finite()
        {
            return Err(Error::Domain(format!(
                "variogram needs nugget ≥ 0, partial sill ≥ 0, range > 0; got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn sill(&self) -> f64 {
        self.nugget + self.partial_sill
    }

    /// Semivariance at lag `h`; `γ(0) = 0`.
    pub fn gamma(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(Error::Domain(format!("negative lag {h}")));
        }
        Ok(self.eval(h))
    }

    /// [`gamma`](Self::gamma) without the lag check, for internal hot loops
    /// where `h` is a computed distance.
    #[inline]
    pub(crate) fn eval(&self, h: f64) -> f64 {
        if h == 0.0 {
            return 0.0;
        }
        let r = self.range;
        let shape = match self.family {
            Family::Exponential => 1.0 - (-3.0 * h / r).exp(),
            Family::Gaussian => 1.0 - (-3.0 * h * h / (r * r)).exp(),
            Family::Spherical => {
                if h < r {
                    let s = h / r;
                    1.5 * s - 0.5 * s * s * s
                } else {
                    1.0
                }
            }
        };
        self.nugget + self.partial_sill * shape
    }
}

/// Free-function form of [`VariogramModel::gamma`].
pub fn gamma(model: &VariogramModel, h: f64) -> Result<f64> {
    model.gamma(h)
}

/// Binned semivariances; only bins with at least one pair are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalVariogram {
    /// Mean pair distance of each bin, meters.
    pub bin_centers: Vec<f64>,
    pub semivariances: Vec<f64>,
    pub pair_counts: Vec<u64>,
}

impl EmpiricalVariogram {
    pub fn len(&self) -> usize {
        self.bin_centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin_centers.is_empty()
    }
}

/// Half the largest pairwise distance.
pub fn default_max_lag(points: &[GeoPoint]) -> f64 {
    let mut max: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            max = max.max(points[i].distance(&points[j]));
        }
    }
    max / 2.0
}

/// Classical (Matheron) estimator with `n_bins` equal-width bins on
/// `[0, max_lag]`.
pub fn empirical_variogram(
    points: &[GeoPoint],
    values: &[f64],
    n_bins: usize,
    max_lag: f64,
) -> Result<EmpiricalVariogram> {
    empirical_variogram_pooled(points, std::slice::from_ref(&values.to_vec()), n_bins, max_lag)
}

/// Pools pairs over several realizations (e.g. timesteps) observed at the
/// same points.
pub fn empirical_variogram_pooled(
    points: &[GeoPoint],
    realizations: &[Vec<f64>],
    n_bins: usize,
    max_lag: f64,
) -> Result<EmpiricalVariogram> {
    if points.len() < 2 {
        return Err(Error::InsufficientData("variogram needs at least 2 points".into()));
    }
    if !(max_lag > 0.0) || n_bins == 0 {
        return Err(Error::Domain(format!(
            "variogram binning needs max_lag > 0 and n_bins > 0, got {max_lag}, {n_bins}"
        )));
    }
    for r in realizations {
        if r.len() != points.len() {
            return Err(Error::Domain(format!("{} values for {} points", r.len(), points.len())));
        }
    }
    let width = max_lag / n_bins as f64;
    let mut sq = vec![0.0; n_bins];
    let mut dist = vec![0.0; n_bins];
    let mut count = vec![0u64; n_bins];
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = points[i].distance(&points[j]);
            if d > max_lag {
                continue;
            }
            let b = ((d / width) as usize).min(n_bins - 1);
            for r in realizations {
                let diff = r[i] - r[j];
                sq[b] += diff * diff;
                dist[b] += d;
                count[b] += 1;
            }
        }
    }
    let mut out = EmpiricalVariogram {
        bin_centers: Vec::new(),
        semivariances: Vec::new(),
        pair_counts: Vec::new(),
    };
    for b in 0..n_bins {
        if count[b] > 0 {
            out.bin_centers.push(dist[b] / count[b] as f64);
            out.semivariances.push(sq[b] / (2.0 * count[b] as f64));
            out.pair_counts.push(count[b]);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyVariogram { max_lag });
    }
    Ok(out)
}

/// A fitted model plus diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariogramFit {
    pub model: VariogramModel,
    /// Weighted least-squares objective at the optimum.
    pub objective: f64,
    pub warning: Option<String>,
}

/// Fits `family` to `emp` by minimizing the Cressie weighted least squares
/// `Σ N_k (γ̂_k − γ(h_k))² / γ(h_k)²` over log-scaled (nugget, partial sill,
/// range), from a fixed grid of starting points.
pub fn fit(emp: &EmpiricalVariogram, family: Family) -> Result<VariogramFit> {
    if emp.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "variogram fit needs 3 non-empty bins, got {}",
            emp.len()
        )));
    }
    let smax = emp.semivariances.iter().cloned().fold(0.0, f64::max);
    let hmin = emp.bin_centers[0].max(f64::MIN_POSITIVE);
    let hmax = *emp.bin_centers.last().unwrap();
    if smax == 0.0 {
        return Ok(VariogramFit {
            model: VariogramModel::new(family, 0.0, 0.0, hmax.max(hmin))?,
            objective: 0.0,
            warning: Some("degenerate fit: empirical semivariances are all zero".into()),
        });
    }

    let lo = [(smax * 1e-9).ln(), (smax * 1e-9).ln(), (hmin * 0.1).ln()];
    let hi = [(smax * 10.0).ln(), (smax * 10.0).ln(), (hmax * 10.0).ln()];
    let clamp = |x: &[f64]| -> [f64; 3] { [0, 1, 2].map(|i| x[i].clamp(lo[i], hi[i])) };
    let floor = smax * 1e-12;
    let objective = |x: &[f64]| -> f64 {
        let p = clamp(x);
        let m = VariogramModel {
            family,
            nugget: p[0].exp(),
            partial_sill: p[1].exp(),
            range: p[2].exp(),
        };
        let mut s = 0.0;
        for k in 0..emp.len() {
            let g = m.eval(emp.bin_centers[k]).max(floor);
            let r = (emp.semivariances[k] - g) / g;
            s += emp.pair_counts[k] as f64 * r * r;
        }
        // pull strays back into the box without changing the optimum
        let out: f64 = (0..3).map(|i| (x[i] - p[i]).abs()).sum();
        s + out * out
    };

    let nm = NelderMead {
        max_iter: 4000,
        ..NelderMead::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for nug_frac in [1e-6, 0.1, 0.4] {
        for range_frac in [0.1, 0.3, 0.6, 1.0] {
            let x0 = [
                (smax * nug_frac).ln(),
                (smax * (1.0 - nug_frac)).ln(),
                (hmax * range_frac).ln(),
            ];
            let mut m = nm.minimize(objective, &x0);
            for _ in 0..2 {
                let again = nm.minimize(objective, &m.x);
                if again.value < m.value {
                    m = again;
                } else {
                    break;
                }
            }
            if best.as_ref().map_or(true, |(v, _)| m.value < *v) {
                best = Some((m.value, m.x));
            }
        }
    }
    let (value, x) = best.unwrap();
    let p = clamp(&x);
    let at_bound = |i: usize| (p[i] - lo[i]).abs() < 1e-6 || (hi[i] - p[i]).abs() < 1e-6;
    let snap = |i: usize| if (p[i] - lo[i]).abs() < 1e-6 { 0.0 } else { p[i].exp() };
    let model = VariogramModel::new(family, snap(0), snap(1), p[2].exp())?;
    let warning = if (0..3).all(at_bound) || model.sill() == 0.0 {
        Some("degenerate fit: optimizer stopped on parameter bounds".to_string())
    } else {
        None
    };
    if let Some(w) = &warning {
        log::warn!("{family} variogram: {w}");
    }
    Ok(VariogramFit {
        model,
        objective: value,
        warning,
    })
}

/// Family and binning used when a variogram is estimated from data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramConfig {
    #[serde(default)]
    pub family: Family,
    #[serde(default = "default_bins")]
    pub n_bins: usize,
    /// Defaults to half the largest inter-point distance.
    #[serde(default)]
    pub max_lag: Option<f64>,
}

fn default_bins() -> usize {
    15
}

impl Default for VariogramConfig {
    fn default() -> Self {
        VariogramConfig {
            family: Family::default(),
            n_bins: default_bins(),
            max_lag: None,
        }
    }
}

impl VariogramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 3 {
            return Err(Error::Config(format!(
                "variogram needs at least 3 bins, got {}",
                self.n_bins
            )));
        }
        if let Some(l) = self.max_lag {
            if !(l > 0.0) {
                return Err(Error::Config(format!("variogram max_lag must be positive, got {l}")));
            }
        }
        Ok(())
    }

    /// Pooled empirical variogram over `realizations` and its fitted model.
    pub fn estimate(
        &self,
        points: &[GeoPoint],
        realizations: &[Vec<f64>],
    ) -> Result<(EmpiricalVariogram, VariogramFit)> {
        let lag = self.max_lag.unwrap_or_else(|| default_max_lag(points));
        let emp = empirical_variogram_pooled(points, realizations, self.n_bins, lag)?;
        let f = fit(&emp, self.family)?;
        Ok((emp, f))
    }
}

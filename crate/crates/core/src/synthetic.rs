//! Seeded synthetic datasets: a Gaussian random field sampled at stations,
//! AR(1)-correlated in time, plus a gridded stack whose `dtws` channel is a
//! noisy cell average of the same field.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GridSpec, Projection};
use crate::gridstack::GridStack;
use crate::preprocess::PointObservationSet;
use crate::time::{Month, TimeAxis};

pub const CHANNELS: [&str; 5] = ["ndvi", "precipitation", "aet", "elevation", "dtws"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_stations: usize,
    pub n_holdout: usize,
    pub n_times: usize,
    pub start: Month,
    pub lon_min: f64,
    pub lat_min: f64,
    pub cell_size: f64,
    pub n_cols: usize,
    pub n_rows: usize,
    /// Practical range of the exponential covariance, meters.
    pub range: f64,
    pub partial_sill: f64,
    /// White measurement noise added to station values.
    pub nugget: f64,
    /// Lag-one autocorrelation of the field in time.
    pub ar1: f64,
    /// Standard deviation of the noise on the `dtws` product.
    pub product_noise: f64,
    /// Sub-cell sample points per axis used for cell averages.
    pub subcell: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            n_stations: 100,
            n_holdout: 20,
            n_times: 60,
            start: Month::new(2002, 4).unwrap(),
            lon_min: 90.0,
            lat_min: 23.0,
            cell_size: 0.25,
            n_cols: 4,
            n_rows: 4,
            range: 50_000.0,
            partial_sill: 0.9,
            nugget: 0.1,
            ar1: 0.8,
            product_noise: 0.1,
            subcell: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    /// Noisy station observations.
    pub obs: PointObservationSet,
    /// Noise-free field at the stations.
    pub truth: Vec<Vec<f64>>,
    pub holdout_ids: Vec<String>,
    pub model_ids: Vec<String>,
    pub grids: GridStack,
    pub grid: GridSpec,
}

/// Lower Cholesky factor of the exponential covariance
/// `ps · exp(−3h / range)` between `points`.
pub fn exponential_cholesky(points: &[(f64, f64)], partial_sill: f64, range: f64) -> Result<DMatrix<f64>> {
    let n = points.len();
    let cov = DMatrix::from_fn(n, n, |i, j| {
        let h = (points[i].0 - points[j].0).hypot(points[i].1 - points[j].1);
        let c = partial_sill * (-3.0 * h / range).exp();
        // tiny jitter keeps near-coincident points factorable
        if i == j {
            c + 1e-10 * partial_sill
        } else {
            c
        }
    });
    cov.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Singular("field covariance is not positive definite".into()))
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticDataset> {
    if cfg.n_holdout == 0 || cfg.n_holdout >= cfg.n_stations {
        return Err(Error::Config(format!(
            "need 0 < n_holdout < n_stations, got {} of {}",
            cfg.n_holdout, cfg.n_stations
        )));
    }
    if !(cfg.ar1.abs() < 1.0) || cfg.subcell == 0 || cfg.n_times == 0 {
        return Err(Error::Config(
            "ar1 must lie in (−1, 1); subcell and n_times must be positive".into(),
        ));
    }
    let grid = GridSpec::new(cfg.lon_min, cfg.lat_min, cfg.cell_size, cfg.n_cols, cfg.n_rows)?;
    let proj = Projection::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let stations: Vec<GeoPoint> = (0..cfg.n_stations)
        .map(|i| {
            let lon = rng.gen_range(grid.lon_min..grid.lon_max());
            let lat = rng.gen_range(grid.lat_min..grid.lat_max());
            GeoPoint::new(format!("s{i:03}"), lon, lat, &proj)
        })
        .collect::<Result<_>>()?;
    let k = cfg.subcell;
    let mut sub = Vec::new();
    for r in 0..grid.n_rows {
        for c in 0..grid.n_cols {
            for a in 0..k {
                for b in 0..k {
                    let lon = grid.lon_min + (c as f64 + (b as f64 + 0.5) / k as f64) * grid.cell_size;
                    let lat = grid.lat_min + (r as f64 + (a as f64 + 0.5) / k as f64) * grid.cell_size;
                    sub.push(proj.project(lon, lat)?);
                }
            }
        }
    }
    let mut xy: Vec<(f64, f64)> = stations.iter().map(|p| (p.x, p.y)).collect();
    xy.extend(&sub);
    let l = exponential_cholesky(&xy, cfg.partial_sill, cfg.range)?;
    let n = xy.len();
    let draw = |rng: &mut ChaCha8Rng| -> DVector<f64> {
        let e = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        &l * e
    };

    let innov = (1.0 - cfg.ar1 * cfg.ar1).sqrt();
    let mut field = draw(&mut rng);
    let ns = cfg.n_stations;
    let mut truth = vec![Vec::with_capacity(cfg.n_times); ns];
    let mut observed = vec![Vec::with_capacity(cfg.n_times); ns];
    let names: Vec<String> = CHANNELS.iter().map(|s| s.to_string()).collect();
    let mut grids = GridStack::new(cfg.n_times, names, grid.n_rows, grid.n_cols);
    let noise_sd = cfg.nugget.sqrt();
    for t in 0..cfg.n_times {
        if t > 0 {
            field = cfg.ar1 * &field + innov * draw(&mut rng);
        }
        for s in 0..ns {
            truth[s].push(field[s]);
            let e: f64 = rng.sample(StandardNormal);
            observed[s].push(field[s] + noise_sd * e);
        }
        let season = (2.0 * std::f64::consts::PI * t as f64 / 12.0).sin();
        for r in 0..grid.n_rows {
            for c in 0..grid.n_cols {
                let cell = r * grid.n_cols + c;
                let base = ns + cell * k * k;
                let mean = (0..k * k).map(|q| field[base + q]).sum::<f64>() / (k * k) as f64;
                let e: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
                let (lon, lat) = grid.cell_center(r, c);
                let values = [
                    0.5 + 0.1 * mean + 0.05 * e[0],
                    100.0 * (1.0 + season) + 10.0 * e[1],
                    50.0 + 20.0 * season + 5.0 * e[2],
                    5.0 + 10.0 * (lat - grid.lat_min) + 2.0 * (lon - grid.lon_min),
                    mean + cfg.product_noise * e[3],
                ];
                for (ch, v) in values.into_iter().enumerate() {
                    grids.set(t, ch, r, c, Some(v));
                }
            }
        }
    }

    let holdout: Vec<usize> = {
        let mut idx = rand::seq::index::sample(&mut rng, ns, cfg.n_holdout).into_vec();
        idx.sort_unstable();
        idx
    };
    let holdout_ids: Vec<String> = holdout.iter().map(|&i| stations[i].id.clone()).collect();
    let model_ids: Vec<String> = stations
        .iter()
        .map(|p| p.id.clone())
        .filter(|id| !holdout_ids.contains(id))
        .collect();
    let axis = TimeAxis::new(cfg.start, cfg.n_times);
    let obs = PointObservationSet::complete(stations, axis, observed)?;
    Ok(SyntheticDataset {
        obs,
        truth,
        holdout_ids,
        model_ids,
        grids,
        grid,
    })
}

//! Patch features around a site, flattened in a fixed order.
//!
//! A [`FeatureVector`] of C channels, L lags and side S = 2p+1 holds, in order:
//!
//! 1. patch values, index `((c·L + l)·S + r)·S + k`;
//! 2. validity flags, index `C·L·S² + (l·S + r)·S + k`;
//! 3. site scalars (projected x, projected y, elevation when configured).
//!
//! Lag `l` refers to time `t − l`. Patch row `r` runs south to north and
//! column `k` west to east, both centred on the site's cell. A cell is valid
//! when it lies inside the grid and every channel is present there; invalid
//! cells carry 0 in all channels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GridSpec};
use crate::gridstack::GridSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    #[serde(default = "default_radius")]
    pub patch_radius: usize,
    #[serde(default = "default_lags")]
    pub lags: usize,
    #[serde(default = "yes")]
    pub site_xy: bool,
    /// Channel whose value at the site cell is appended as elevation.
    #[serde(default)]
    pub elevation_channel: Option<usize>,
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

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            patch_radius: default_radius(),
            lags: default_lags(),
            site_xy: true,
            elevation_channel: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub channels: usize,
    pub lags: usize,
    pub side: usize,
    pub n_scalars: usize,
}

impl FeatureLayout {
    pub fn new(channels: usize, cfg: &FeatureConfig) -> Self {
        FeatureLayout {
            channels,
            lags: cfg.lags,
            side: 2 * cfg.patch_radius + 1,
            n_scalars: if cfg.site_xy { 2 } else { 0 } + usize::from(cfg.elevation_channel.is_some()),
        }
    }

    pub fn patch_len(&self) -> usize {
        self.channels * self.lags * self.side * self.side
    }

    pub fn validity_len(&self) -> usize {
        self.lags * self.side * self.side
    }

    pub fn len(&self) -> usize {
        self.patch_len() + self.validity_len() + self.n_scalars
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn patch_index(&self, c: usize, l: usize, r: usize, k: usize) -> usize {
        ((c * self.lags + l) * self.side + r) * self.side + k
    }

    pub fn validity_index(&self, l: usize, r: usize, k: usize) -> usize {
        self.patch_len() + (l * self.side + r) * self.side + k
    }

    pub fn scalar_index(&self, s: usize) -> usize {
        self.patch_len() + self.validity_len() + s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub layout: FeatureLayout,
    pub values: Vec<f64>,
}

/// Structured form of a [`FeatureVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct PatchTensor {
    pub layout: FeatureLayout,
    /// `[c][l][r][k]`
    pub patch: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[l][r][k]`
    pub validity: Vec<Vec<Vec<f64>>>,
    pub scalars: Vec<f64>,
}

impl PatchTensor {
    pub fn flatten(&self) -> FeatureVector {
        let lay = self.layout;
        let mut values = vec![0.0; lay.len()];
        for c in 0..lay.channels {
            for l in 0..lay.lags {
                for r in 0..lay.side {
                    for k in 0..lay.side {
                        values[lay.patch_index(c, l, r, k)] = self.patch[c][l][r][k];
                    }
                }
            }
        }
        for l in 0..lay.lags {
            for r in 0..lay.side {
                for k in 0..lay.side {
                    values[lay.validity_index(l, r, k)] = self.validity[l][r][k];
                }
            }
        }
        for (s, v) in self.scalars.iter().enumerate() {
            values[lay.scalar_index(s)] = *v;
        }
        FeatureVector { layout: lay, values }
    }
}

pub fn unflatten(fv: &FeatureVector) -> PatchTensor {
    let lay = fv.layout;
    let square = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
        (0..lay.side)
            .map(|r| (0..lay.side).map(|k| f(r, k)).collect())
            .collect()
    };
    PatchTensor {
        layout: lay,
        patch: (0..lay.channels)
            .map(|c| {
                (0..lay.lags)
                    .map(|l| square(&|r, k| fv.values[lay.patch_index(c, l, r, k)]))
                    .collect()
            })
            .collect(),
        validity: (0..lay.lags)
            .map(|l| square(&|r, k| fv.values[lay.validity_index(l, r, k)]))
            .collect(),
        scalars: (0..lay.n_scalars).map(|s| fv.values[lay.scalar_index(s)]).collect(),
    }
}

/// Signed cell indices of a point; may lie outside the grid.
fn signed_cell(grid: &GridSpec, site: &GeoPoint) -> (i64, i64) {
    (
        ((site.lat - grid.lat_min) / grid.cell_size).floor() as i64,
        ((site.lon - grid.lon_min) / grid.cell_size).floor() as i64,
    )
}

pub fn extract_features<G: GridSource + ?Sized>(
    grids: &G,
    grid: &GridSpec,
    site: &GeoPoint,
    t: usize,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    if cfg.lags == 0 {
        return Err(Error::Config("feature lags must be at least 1".into()));
    }
    if t + 1 < cfg.lags {
        return Err(Error::InsufficientHistory { t, lags: cfg.lags });
    }
    let [n_t, n_c, h, w] = grids.grid_dims();
    if h != grid.n_rows || w != grid.n_cols {
        return Err(Error::Alignment(format!(
            "grid stack is {h}×{w}, grid spec is {}×{}",
            grid.n_rows, grid.n_cols
        )));
    }
    if t >= n_t {
        return Err(Error::Alignment(format!("time index {t} beyond stack length {n_t}")));
    }
    let lay = FeatureLayout::new(n_c, cfg);
    let p = cfg.patch_radius as i64;
    let (r0, k0) = signed_cell(grid, site);
    let mut values = vec![0.0; lay.len()];
    let mut cell = vec![0.0; n_c];
    for l in 0..lay.lags {
        let tt = t - l;
        for (r, dr) in (-p..=p).enumerate() {
            for (k, dk) in (-p..=p).enumerate() {
                let (i, j) = (r0 + dr, k0 + dk);
                if i < 0 || j < 0 || i >= h as i64 || j >= w as i64 {
                    continue;
                }
                let mut ok = true;
                for (c, slot) in cell.iter_mut().enumerate() {
                    match grids.grid_value(tt, c, i as usize, j as usize)? {
                        Some(v) => *slot = v,
                        None => ok = false,
                    }
                }
                if ok {
                    for (c, v) in cell.iter().enumerate() {
                        values[lay.patch_index(c, l, r, k)] = *v;
                    }
                    values[lay.validity_index(l, r, k)] = 1.0;
                }
            }
        }
    }
    let mut s = 0;
    if cfg.site_xy {
        values[lay.scalar_index(0)] = site.x;
        values[lay.scalar_index(1)] = site.y;
        s = 2;
    }
    if let Some(c) = cfg.elevation_channel {
        if c >= n_c {
            return Err(Error::Config(format!("elevation channel {c} out of range (C = {n_c})")));
        }
        let in_grid = r0 >= 0 && k0 >= 0 && r0 < h as i64 && k0 < w as i64;
        let elev = if in_grid {
            grids.grid_value(t, c, r0 as usize, k0 as usize)?
        } else {
            None
        };
        values[lay.scalar_index(s)] = elev.unwrap_or(0.0);
    }
    Ok(FeatureVector { layout: lay, values })
}

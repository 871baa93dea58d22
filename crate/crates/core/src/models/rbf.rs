//! Multi-resolution Gaussian radial basis embedding of normalized coordinates.

use crate::error::{Error, Result};

/// φ_k(u) = exp(−‖u − c_k‖² / (2·b_k²)) for every center.
pub fn rbf_embed(coords: &[f64], centers: &[Vec<f64>], bandwidths: &[f64]) -> Result<Vec<f64>> {
    if centers.len() != bandwidths.len() {
        return Err(Error::Domain(format!(
            "{} centers but {} bandwidths",
            centers.len(),
            bandwidths.len()
        )));
    }
    centers
        .iter()
        .zip(bandwidths)
        .map(|(c, &b)| {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::Domain(format!("bandwidth must be positive, got {b}")));
            }
            if c.len() != coords.len() {
                return Err(Error::Domain(format!(
                    "center has {} dims, coordinate has {}",
                    c.len(),
                    coords.len()
                )));
            }
            let d2: f64 = c.iter().zip(coords).map(|(a, u)| (a - u) * (a - u)).sum();
            Ok((-d2 / (2.0 * b * b)).exp())
        })
        .collect()
}

/// Concatenated regular center grids over the unit cube, one per level.
///
/// A level with `k` knots per axis has spacing `1/(k−1)` and uses it as
/// bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfEmbedding {
    pub centers: Vec<Vec<f64>>,
    pub bandwidths: Vec<f64>,
}

impl RbfEmbedding {
    pub fn grid(dims: usize, knots_per_level: &[usize]) -> Result<Self> {
        if dims == 0 {
            return Err(Error::Domain("embedding needs at least one axis".into()));
        }
        let mut centers = Vec::new();
        let mut bandwidths = Vec::new();
        for &k in knots_per_level {
            if k < 2 {
                return Err(Error::Domain(format!("need at least 2 knots per axis, got {k}")));
            }
            let step = 1.0 / (k - 1) as f64;
            let total = k.pow(dims as u32);
            for mut code in 0..total {
                let mut c = vec![0.0; dims];
                for slot in c.iter_mut().rev() {
                    *slot = (code % k) as f64 * step;
                    code /= k;
                }
                centers.push(c);
                bandwidths.push(step);
            }
        }
        Ok(RbfEmbedding { centers, bandwidths })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn embed(&self, coords: &[f64]) -> Result<Vec<f64>> {
        rbf_embed(coords, &self.centers, &self.bandwidths)
    }
}

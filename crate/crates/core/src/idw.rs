//! Inverse-distance weighting, the comparison floor for kriging.

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

/// Normalized inverse-distance weights `d^-power`. A target coinciding with
/// a station takes that station's value.
pub fn idw_weights(stations: &[GeoPoint], target: &GeoPoint, power: f64) -> Result<Vec<f64>> {
    if stations.is_empty() {
        return Err(Error::InsufficientData("IDW needs at least one station".into()));
    }
    let d: Vec<f64> = stations.iter().map(|s| s.distance(target)).collect();
    if let Some(hit) = d.iter().position(|&d| d == 0.0) {
        let mut w = vec![0.0; d.len()];
        w[hit] = 1.0;
        return Ok(w);
    }
    let raw: Vec<f64> = d.iter().map(|d| d.powf(-power)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

pub fn idw_point(stations: &[GeoPoint], values: &[f64], target: &GeoPoint, power: f64) -> Result<f64> {
    let w = idw_weights(stations, target, power)?;
    Ok(w.iter().zip(values).map(|(w, v)| w * v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Projection;

    #[test]
    fn midpoint_and_exact_hit() {
        let p = Projection::default();
        let s = vec![
            GeoPoint::from_projected("a", 400_000.0, 2_600_000.0, &p),
            GeoPoint::from_projected("b", 402_000.0, 2_600_000.0, &p),
        ];
        let mid = GeoPoint::from_projected("t", 401_000.0, 2_600_000.0, &p);
        assert!((idw_point(&s, &[1.0, 3.0], &mid, 2.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(idw_point(&s, &[1.0, 3.0], &s[1], 2.0).unwrap(), 3.0);
    }
}

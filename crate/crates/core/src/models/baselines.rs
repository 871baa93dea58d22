//! Reference predictors without learned parameters beyond per-well means.

use std::collections::HashMap;

use super::{DataAccess, Predictor, TrainWindow};
use crate::error::{Error, Result};

/// Per-well calendar-month mean over the training window. Months never
/// observed in training fall back to the well's overall training mean.
#[derive(Debug, Clone)]
pub struct Climatology {
    name: String,
    by_well: HashMap<usize, [f64; 12]>,
}

impl Climatology {
    pub fn fit(name: String, data: &dyn DataAccess, window: &TrainWindow) -> Result<Self> {
        let axis = data.axis();
        let mut by_well = HashMap::new();
        for &w in &window.wells {
            let mut sum = [0.0; 12];
            let mut n = [0usize; 12];
            for t in 0..window.end {
                let m = axis.month(t).month() as usize - 1;
                sum[m] += data.target(w, t)?;
                n[m] += 1;
            }
            let overall = sum.iter().sum::<f64>() / n.iter().sum::<usize>() as f64;
            let mut table = [overall; 12];
            for m in 0..12 {
                if n[m] > 0 {
                    table[m] = sum[m] / n[m] as f64;
                }
            }
            by_well.insert(w, table);
        }
        Ok(Climatology { name, by_well })
    }
}

impl Predictor for Climatology {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, data: &dyn DataAccess, well: usize, t: usize) -> Result<f64> {
        let table = self.by_well.get(&well).ok_or_else(|| {
            Error::InsufficientData(format!("climatology has no history for well {}", data.site(well).id))
        })?;
        Ok(table[data.axis().month(t).month() as usize - 1])
    }
}

/// The previous month's observation.
#[derive(Debug, Clone)]
pub struct Persistence {
    name: String,
}

impl Persistence {
    pub fn new(name: String) -> Self {
        Persistence { name }
    }
}

impl Predictor for Persistence {
    fn name(&self) -> &str {
        &self.name
    }

    fn first_time(&self) -> usize {
        1
    }

    fn predict(&self, data: &dyn DataAccess, well: usize, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(Error::InsufficientHistory { t, lags: 2 });
        }
        data.target(well, t - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testing::ToyData;

    #[test]
    fn climatology_reproduces_pure_cycle() {
        let data = ToyData::new(2, 48, |w, t| (t % 12) as f64 * (w as f64 + 1.0) - 3.0);
        let window = TrainWindow {
            wells: vec![0, 1],
            end: 24,
            val_len: 0,
        };
        let c = Climatology::fit("c".into(), &data, &window).unwrap();
        for w in 0..2 {
            for t in 24..48 {
                assert_eq!(c.predict(&data, w, t).unwrap(), data.target(w, t).unwrap());
            }
        }
    }

    #[test]
    fn climatology_falls_back_to_overall_mean() {
        let data = ToyData::new(1, 30, |_, t| t as f64);
        let window = TrainWindow {
            wells: vec![0],
            end: 6,
            val_len: 0,
        };
        let c = Climatology::fit("c".into(), &data, &window).unwrap();
        assert_eq!(c.predict(&data, 0, 2).unwrap(), 2.0);
        assert_eq!(c.predict(&data, 0, 10).unwrap(), 2.5);
    }

    #[test]
    fn persistence_on_constant_series() {
        let data = ToyData::new(1, 10, |_, _| 4.25);
        let p = Persistence::new("p".into());
        for t in 1..10 {
            assert_eq!(p.predict(&data, 0, t).unwrap(), 4.25);
        }
        assert!(p.predict(&data, 0, 0).is_err());
    }
}

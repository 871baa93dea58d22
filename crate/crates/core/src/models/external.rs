//! Predictions produced outside the toolkit, read from a
//! `well_id,time_index,value` CSV.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::{DataAccess, Predictor};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
struct Row {
    well_id: String,
    time_index: usize,
    value: f64,
}

pub type PredictionTable = HashMap<(String, usize), f64>;

/// Parses a predictions CSV; `origin` names the source in diagnostics.
pub fn read_predictions<R: Read>(reader: R, origin: &Path) -> Result<PredictionTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut table = HashMap::new();
    for (k, rec) in rdr.deserialize::<Row>().enumerate() {
        let line = k + 2;
        let row = rec.map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        if !row.value.is_finite() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: format!("non-finite value {}", row.value),
            });
        }
        if table.insert((row.well_id.clone(), row.time_index), row.value).is_some() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: format!("duplicate prediction for ({}, {})", row.well_id, row.time_index),
            });
        }
    }
    Ok(table)
}

#[derive(Debug, Clone)]
pub struct ExternalPredictions {
    name: String,
    table: PredictionTable,
}

impl ExternalPredictions {
    pub fn new(name: String, table: PredictionTable) -> Self {
        ExternalPredictions { name, table }
    }

    pub fn load(name: String, path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(name, read_predictions(std::io::BufReader::new(f), path)?))
    }
}

impl Predictor for ExternalPredictions {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, data: &dyn DataAccess, well: usize, t: usize) -> Result<f64> {
        let id = &data.site(well).id;
        self.table
            .get(&(id.clone(), t))
            .copied()
            .ok_or_else(|| Error::InsufficientData(format!("no external prediction for well {id} at t = {t}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testing::ToyData;

    #[test]
    fn reads_and_serves_rows() {
        let csv = "well_id,time_index,value\nw0,0,1.5\nw1,0,-2\nw0,1,3\n";
        let table = read_predictions(csv.as_bytes(), Path::new("p.csv")).unwrap();
        let p = ExternalPredictions::new("x".into(), table);
        let data = ToyData::new(2, 2, |_, _| 0.0);
        assert_eq!(p.predict(&data, 0, 1).unwrap(), 3.0);
        assert_eq!(p.predict(&data, 1, 0).unwrap(), -2.0);
        assert!(p.predict(&data, 1, 1).is_err());
    }

    #[test]
    fn bad_rows_name_the_line() {
        let csv = "well_id,time_index,value\nw0,0,1\nw0,x,2\n";
        match read_predictions(csv.as_bytes(), Path::new("p.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let dup = "well_id,time_index,value\nw0,0,1\nw0,0,2\n";
        assert!(matches!(
            read_predictions(dup.as_bytes(), Path::new("p.csv")),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}

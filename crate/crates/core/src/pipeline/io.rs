//! Text file formats: point observations, storage coefficients and study
//! area rings.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, Projection, StudyArea};
use crate::gridstack::GridStack;
use crate::preprocess::{PointObservationSet, StorageCoefficients};
use crate::time::{Month, TimeAxis};

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufReader::new(f))
}

#[derive(Debug, Deserialize)]
struct PointRow {
    well_id: String,
    lon: f64,
    lat: f64,
    date: String,
    value: Option<f64>,
}

/// Reads `well_id,lon,lat,date,value` rows. Wells keep their order of first
/// appearance. The time axis spans the observed months unless `axis` is
/// given, in which case rows outside it are rejected.
pub fn read_points<R: Read>(
    reader: R,
    origin: &Path,
    proj: &Projection,
    axis: Option<TimeAxis>,
) -> Result<PointObservationSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["well_id", "lon", "lat", "date", "value"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let bad = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    struct Well {
        lon: f64,
        lat: f64,
        line: usize,
        values: Vec<(Month, Option<f64>, usize)>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut wells: HashMap<String, Well> = HashMap::new();
    let mut seen: HashMap<(String, Month), usize> = HashMap::new();
    for (k, rec) in rdr.deserialize::<PointRow>().enumerate() {
        let line = k + 2;
        let row = rec.map_err(|e| bad(line, e.to_string()))?;
        if row.well_id.is_empty() {
            return Err(bad(line, "empty well_id".into()));
        }
        let month: Month = row.date.parse().map_err(|e: Error| bad(line, e.to_string()))?;
        if let Some(v) = row.value {
            if !v.is_finite() {
                return Err(bad(line, format!("non-finite value {v}")));
            }
        }
        if let Some(first) = seen.insert((row.well_id.clone(), month), line) {
            return Err(bad(
                line,
                format!(
                    "duplicate row for well {} at {month} (first at line {first})",
                    row.well_id
                ),
            ));
        }
        let w = wells.entry(row.well_id.clone()).or_insert_with(|| {
            order.push(row.well_id.clone());
            Well {
                lon: row.lon,
                lat: row.lat,
                line,
                values: Vec::new(),
            }
        });
        if w.lon != row.lon || w.lat != row.lat {
            return Err(bad(
                line,
                format!(
                    "well {} moved from ({}, {}) given at line {}",
                    row.well_id, w.lon, w.lat, w.line
                ),
            ));
        }
        w.values.push((month, row.value, line));
    }
    if order.is_empty() {
        return Err(bad(1, "no observations".into()));
    }
    let axis = match axis {
        Some(a) => a,
        None => {
            let months = wells.values().flat_map(|w| w.values.iter().map(|v| v.0));
            let (lo, hi) = months.fold((None::<Month>, None::<Month>), |(lo, hi), m| {
                (Some(lo.map_or(m, |l| l.min(m))), Some(hi.map_or(m, |h| h.max(m))))
            });
            let (lo, hi) = (lo.unwrap(), hi.unwrap());
            TimeAxis::new(lo, (hi.since(lo) + 1) as usize)
        }
    };
    let mut points = Vec::with_capacity(order.len());
    let mut series = Vec::with_capacity(order.len());
    for id in &order {
        let w = &wells[id];
        let p = GeoPoint::new(id.clone(), w.lon, w.lat, proj).map_err(|e| bad(w.line, e.to_string()))?;
        let mut s = vec![None; axis.len];
        for &(m, v, line) in &w.values {
            let t = axis
                .index_of(m)
                .ok_or_else(|| bad(line, format!("month {m} outside {}..{}", axis.start, axis.end())))?;
            s[t] = v;
        }
        points.push(p);
        series.push(s);
    }
    PointObservationSet::new(points, axis, series)
}

pub fn ingest_points(path: &Path, proj: &Projection, axis: Option<TimeAxis>) -> Result<PointObservationSet> {
    read_points(open(path)?, path, proj, axis)
}

/// Writes the long `well_id,lon,lat,date,value` format; missing values
/// are empty fields.
pub fn write_points<W: Write>(obs: &PointObservationSet, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["well_id", "lon", "lat", "date", "value"])?;
    for (i, p) in obs.points.iter().enumerate() {
        for t in 0..obs.n_times() {
            let v = obs.value(i, t).map(|v| v.to_string()).unwrap_or_default();
            wr.write_record([
                p.id.as_str(),
                &p.lon.to_string(),
                &p.lat.to_string(),
                &obs.axis.month(t).to_string(),
                &v,
            ])?;
        }
    }
    wr.flush().map_err(|e| Error::io("points", e))?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct SyRow {
    well_id: String,
    sy: f64,
}

/// Reads `well_id,sy` rows.
pub fn read_storage_coefficients<R: Read>(reader: R, origin: &Path) -> Result<StorageCoefficients> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut pairs = Vec::new();
    for (k, rec) in rdr.deserialize::<SyRow>().enumerate() {
        let row = rec.map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: k + 2,
            message: e.to_string(),
        })?;
        pairs.push((row.well_id, row.sy));
    }
    StorageCoefficients::new(pairs)
}

pub fn load_storage_coefficients(path: &Path) -> Result<StorageCoefficients> {
    read_storage_coefficients(open(path)?, path)
}

/// Reads a ring of `lon,lat` lines. Blank lines, `#` comments and a
/// `lon,lat` header are skipped.
pub fn read_polygon<R: Read>(mut reader: R, origin: &Path) -> Result<StudyArea> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|e| Error::io(origin, e))?;
    let mut ring = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.eq_ignore_ascii_case("lon,lat") {
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)));
        match parsed {
            Some(v) if v.0.is_finite() && v.1.is_finite() => ring.push(v),
            _ => {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: k + 1,
                    message: format!("expected `lon,lat`, got {line:?}"),
                })
            }
        }
    }
    StudyArea::new(ring)
}

pub fn load_polygon(path: &Path) -> Result<StudyArea> {
    read_polygon(open(path)?, path)
}

pub fn ingest_grids(path: &Path) -> Result<GridStack> {
    GridStack::read(path)
}

pub fn write_grids(stack: &GridStack, path: &Path) -> Result<()> {
    stack.write(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PointObservationSet> {
        read_points(text.as_bytes(), Path::new("p.csv"), &Projection::default(), None)
    }

    #[test]
    fn two_wells_three_months() {
        let obs = parse(
            "well_id,lon,lat,date,value\n\
             a,90.1,23.2,2002-04,1.0\na,90.1,23.2,2002-05,2.0\na,90.1,23.2,2002-06,3.0\n\
             b,90.3,23.4,2002-06,6.0\nb,90.3,23.4,2002-04,4.0\nb,90.3,23.4,2002-05,5.0\n",
        )
        .unwrap();
        assert_eq!((obs.n_points(), obs.n_times()), (2, 3));
        assert!(obs.is_complete());
        assert_eq!(obs.complete_series(1).unwrap(), &[4.0, 5.0, 6.0]);
        assert_eq!(obs.axis.start, Month::new(2002, 4).unwrap());
    }

    #[test]
    fn empty_value_is_missing() {
        let obs = parse("well_id,lon,lat,date,value\na,90,23,2002-04,1\na,90,23,2002-05,\n").unwrap();
        assert!(obs.is_valid(0, 0));
        assert!(!obs.is_valid(0, 1));
    }

    #[test]
    fn duplicates_and_bad_rows_name_the_line() {
        let dup = "well_id,lon,lat,date,value\na,90,23,2002-04,1\nb,91,23,2002-04,1\na,90,23,2002-04,2\n";
        match parse(dup) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 4);
                assert!(message.contains("line 2"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("well_id,lon,lat,date,value\na,90,23,2002-13,1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse("well_id,lon,lat,date,value\na,90,23,2002-04,1\na,90.5,23,2002-05,1\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse("id,lon,lat,date,value\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn points_round_trip() {
        let text = "well_id,lon,lat,date,value\na,90.125,23.5,2002-04,1.5\na,90.125,23.5,2002-05,\n";
        let obs = parse(text).unwrap();
        let mut buf = Vec::new();
        write_points(&obs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn polygon_and_sy() {
        let area = read_polygon("# ring\nlon,lat\n0,0\n1,0\n\n1,1\n0,1\n".as_bytes(), Path::new("a.txt")).unwrap();
        assert!(area.contains(0.5, 0.5));
        assert!(!area.contains(1.5, 0.5));
        assert!(matches!(
            read_polygon("0,0\n1;0\n".as_bytes(), Path::new("a.txt")),
            Err(Error::Parse { line: 2, .. })
        ));
        let sy = read_storage_coefficients("well_id,sy\na,0.1\n".as_bytes(), Path::new("sy.csv")).unwrap();
        assert_eq!(sy.get("a"), Some(0.1));
    }
}

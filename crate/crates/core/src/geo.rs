//! Coordinates, UTM-style projection, the regular lon/lat grid and
//! rasterization of point observations onto it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::PointObservationSet;

const WGS84_A: f64 = 6_378_137.0;
const WGS84_F: f64 = 1.0 / 298.257_223_563;
const UTM_K0: f64 = 0.9996;
const FALSE_EASTING: f64 = 500_000.0;

/// Transverse Mercator on the WGS84 ellipsoid with UTM scale and false
/// easting. Series coefficients follow Krüger's expansion in the third
/// flattening, truncated at fourth order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub central_meridian: f64,
}

/// UTM zone 46N.
impl Default for Projection {
    fn default() -> Self {
        Projection { central_meridian: 93.0 }
    }
}

struct Kruger {
    radius: f64,
    alpha: [f64; 4],
    beta: [f64; 4],
    delta: [f64; 4],
    n: f64,
}

fn kruger() -> Kruger {
    let n = WGS84_F / (2.0 - WGS84_F);
    let (n2, n3, n4) = (n * n, n * n * n, n * n * n * n);
    Kruger {
        radius: WGS84_A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0),
        alpha: [
            n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0,
            13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0,
            61.0 * n3 / 240.0 - 103.0 * n4 / 140.0,
            49561.0 * n4 / 161280.0,
        ],
        beta: [
            n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0,
            n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0,
            17.0 * n3 / 480.0 - 37.0 * n4 / 840.0,
            4397.0 * n4 / 161280.0,
        ],
        delta: [
            2.0 * n - 2.0 * n2 / 3.0 - 2.0 * n3 + 116.0 * n4 / 45.0,
            7.0 * n2 / 3.0 - 8.0 * n3 / 5.0 - 227.0 * n4 / 45.0,
            56.0 * n3 / 15.0 - 136.0 * n4 / 35.0,
            4279.0 * n4 / 630.0,
        ],
        n,
    }
}

impl Projection {
    pub fn new(central_meridian: f64) -> Self {
        Projection { central_meridian }
    }

    /// Forward mapping (lon, lat) in degrees to (easting, northing) in meters.
    pub fn project(&self, lon: f64, lat: f64) -> Result<(f64, f64)> {
        if !(lat > -80.0 && lat < 84.0) {
            return Err(Error::Domain(format!("latitude {lat} outside the UTM band (-80, 84)")));
        }
        let dlon = lon - self.central_meridian;
        if !(dlon.abs() <= 30.0) {
            return Err(Error::Domain(format!(
                "longitude {lon} more than 30 degrees from central meridian {}",
                self.central_meridian
            )));
        }
        let k = kruger();
        let phi = lat.to_radians();
        let lam = dlon.to_radians();
        let e = 2.0 * k.n.sqrt() / (1.0 + k.n);
        let t = (phi.sin().atanh() - e * (e * phi.sin()).atanh()).sinh();
        let xi_p = t.atan2(lam.cos());
        let eta_p = (lam.sin() / (1.0 + t * t).sqrt()).atanh();
        let mut xi = xi_p;
        let mut eta = eta_p;
        for (j, a) in k.alpha.iter().enumerate() {
            let m = 2.0 * (j + 1) as f64;
            xi += a * (m * xi_p).sin() * (m * eta_p).cosh();
            eta += a * (m * xi_p).cos() * (m * eta_p).sinh();
        }
        Ok((FALSE_EASTING + UTM_K0 * k.radius * eta, UTM_K0 * k.radius * xi))
    }

    /// Inverse mapping (easting, northing) in meters to (lon, lat) in degrees.
    pub fn inverse(&self, x: f64, y: f64) -> (f64, f64) {
        let k = kruger();
        let xi = y / (UTM_K0 * k.radius);
        let eta = (x - FALSE_EASTING) / (UTM_K0 * k.radius);
        let mut xi_p = xi;
        let mut eta_p = eta;
        for (j, b) in k.beta.iter().enumerate() {
            let m = 2.0 * (j + 1) as f64;
            xi_p -= b * (m * xi).sin() * (m * eta).cosh();
            eta_p -= b * (m * xi).cos() * (m * eta).sinh();
        }
        let chi = (xi_p.sin() / eta_p.cosh()).asin();
        let mut phi = chi;
        for (j, d) in k.delta.iter().enumerate() {
            phi += d * (2.0 * (j + 1) as f64 * chi).sin();
        }
        let lam = eta_p.sinh().atan2(xi_p.cos());
        (self.central_meridian + lam.to_degrees(), phi.to_degrees())
    }
}

/// A well location in geographic and projected coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoPoint {
    pub id: String,
    pub lon: f64,
    pub lat: f64,
    pub x: f64,
    pub y: f64,
}

impl GeoPoint {
    pub fn new(id: impl Into<String>, lon: f64, lat: f64, proj: &Projection) -> Result<Self> {
        if !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::Domain(format!("invalid coordinate ({lon}, {lat})")));
        }
        let (x, y) = proj.project(lon, lat)?;
        Ok(GeoPoint {
            id: id.into(),
            lon,
            lat,
            x,
            y,
        })
    }

    /// Builds a point from projected coordinates; lon/lat come from the
    /// inverse mapping and the given (x, y) are kept verbatim.
    pub fn from_projected(id: impl Into<String>, x: f64, y: f64, proj: &Projection) -> Self {
        let (lon, lat) = proj.inverse(x, y);
        GeoPoint {
            id: id.into(),
            lon,
            lat,
            x,
            y,
        }
    }

    pub fn distance(&self, other: &GeoPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Regular lon/lat grid. Row 0 is the southernmost row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lon_min: f64,
    pub lat_min: f64,
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    pub n_cols: usize,
    pub n_rows: usize,
}

fn default_cell_size() -> f64 {
    0.25
}

impl GridSpec {
    pub fn new(lon_min: f64, lat_min: f64, cell_size: f64, n_cols: usize, n_rows: usize) -> Result<Self> {
        let g = GridSpec {
            lon_min,
            lat_min,
            cell_size,
            n_cols,
            n_rows,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0) || self.n_cols == 0 || self.n_rows == 0 {
            return Err(Error::Config(format!(
                "grid needs positive cell size and dimensions, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows * self.n_cols
    }

    /// Covering cell under the half-open convention; points on a shared edge
    /// belong to the cell above/right of it.
    pub fn cell_of_lonlat(&self, lon: f64, lat: f64) -> Option<(usize, usize)> {
        let c = ((lon - self.lon_min) / self.cell_size).floor();
        let r = ((lat - self.lat_min) / self.cell_size).floor();
        if !(c >= 0.0 && r >= 0.0) || c >= self.n_cols as f64 || r >= self.n_rows as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }

    pub fn cell_of(&self, point: &GeoPoint) -> Option<(usize, usize)> {
        self.cell_of_lonlat(point.lon, point.lat)
    }

    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.lon_min + (col as f64 + 0.5) * self.cell_size,
            self.lat_min + (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn lon_max(&self) -> f64 {
        self.lon_min + self.n_cols as f64 * self.cell_size
    }

    pub fn lat_max(&self) -> f64 {
        self.lat_min + self.n_rows as f64 * self.cell_size
    }
}

/// Free-function form of [`GridSpec::cell_of`].
pub fn cell_of(point: &GeoPoint, grid: &GridSpec) -> Option<(usize, usize)> {
    grid.cell_of(point)
}

/// A 2-D field with a per-cell validity mask. Masked cells hold no value.
#[derive(Debug, Clone)]
pub struct MaskedGrid {
    rows: usize,
    cols: usize,
    // NaN marks masked cells; never exposed.
    values: Vec<f64>,
}

/// Equal shape, equal masks and equal values on valid cells.
impl PartialEq for MaskedGrid {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a == b || (a.is_nan() && b.is_nan()))
    }
}

impl MaskedGrid {
    /// All-masked grid.
    pub fn masked(rows: usize, cols: usize) -> Self {
        MaskedGrid {
            rows,
            cols,
            values: vec![f64::NAN; rows * cols],
        }
    }

    /// Builds a grid from row-major values and a mask. Masked cells ignore
    /// their value; valid cells must be finite.
    pub fn from_parts(rows: usize, cols: usize, values: &[f64], mask: &[bool]) -> Result<Self> {
        if values.len() != rows * cols || mask.len() != rows * cols {
            return Err(Error::Domain(format!(
                "expected {} cells, got {} values and {} mask entries",
                rows * cols,
                values.len(),
                mask.len()
            )));
        }
        let mut g = MaskedGrid::masked(rows, cols);
        for (k, (&v, &m)) in values.iter().zip(mask).enumerate() {
            if m {
                if !v.is_finite() {
                    return Err(Error::Domain(format!("non-finite value at valid cell {k}")));
                }
                g.values[k] = v;
            }
        }
        Ok(g)
    }

    /// All-valid grid from row-major values.
    pub fn filled(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::from_parts(rows, cols, values, &vec![true; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.values[row * self.cols + col];
        (!v.is_nan()).then_some(v)
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_some()
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(value.is_finite(), "masked grid values must be finite");
        self.values[row * self.cols + col] = value;
    }

    pub fn mask_out(&mut self, row: usize, col: usize) {
        self.values[row * self.cols + col] = f64::NAN;
    }

    pub fn mask(&self) -> Vec<bool> {
        self.values.iter().map(|v| !v.is_nan()).collect()
    }

    pub fn n_valid(&self) -> usize {
        self.values.iter().filter(|v| !v.is_nan()).count()
    }

    /// Valid cells as `(row, col, value)` in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(move |(k, &v)| (k / self.cols, k % self.cols, v))
    }
}

/// Simple lon/lat ring used to restrict gridded output to a study area.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyArea {
    ring: Vec<(f64, f64)>,
}

impl StudyArea {
    pub fn new(ring: Vec<(f64, f64)>) -> Result<Self> {
        if ring.len() < 3 {
            return Err(Error::Domain("polygon ring needs at least 3 vertices".into()));
        }
        Ok(StudyArea { ring })
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        let mut inside = false;
        let n = self.ring.len();
        let mut j = n - 1;
        for i in 0..n {
            let (xi, yi) = self.ring[i];
            let (xj, yj) = self.ring[j];
            if (yi > lat) != (yj > lat) && lon < (xj - xi) * (lat - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

/// Averages the valid observations at time `t` into the cells of `grid`.
/// Cells without contributions are masked out.
pub fn rasterize(obs: &PointObservationSet, grid: &GridSpec, t: usize) -> MaskedGrid {
    let values: Vec<Option<f64>> = (0..obs.n_points()).map(|i| obs.value(i, t)).collect();
    rasterize_values(&obs.points, &values, grid)
}

/// Rasterizes an arbitrary value per point (`None` = missing).
pub fn rasterize_values(points: &[GeoPoint], values: &[Option<f64>], grid: &GridSpec) -> MaskedGrid {
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); grid.n_cells()];
    for (p, v) in points.iter().zip(values) {
        if let (Some(v), Some((r, c))) = (v, grid.cell_of(p)) {
            bins[r * grid.n_cols + c].push(*v);
        }
    }
    let mut out = MaskedGrid::masked(grid.n_rows, grid.n_cols);
    for (k, bin) in bins.iter_mut().enumerate() {
        if bin.is_empty() {
            continue;
        }
        // Sorted summation keeps the mean independent of input order.
        bin.sort_by(f64::total_cmp);
        let mean = bin.iter().sum::<f64>() / bin.len() as f64;
        out.values[k] = mean;
    }
    out
}

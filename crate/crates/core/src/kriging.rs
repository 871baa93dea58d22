//! Ordinary kriging.
//!
//! The augmented system
//!
//! ```text
//! [ Γ   1 ] [ λ ]   [ γ* ]
//! [ 1ᵀ  0 ] [ μ ] = [ 1  ]
//! ```
//!
//! with `Γ_ij = γ(‖s_i − s_j‖)` and `γ*_i = γ(‖s_i − s*‖)` is factored once
//! per station set in global mode. Weights at a target depend only on the
//! geometry, so for gridded output they are computed once per cell and then
//! applied to every timestep.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GridSpec, MaskedGrid, Projection, StudyArea};
use crate::linalg::SymmetricFactorization;
use crate::variogram::VariogramModel;

/// Tolerance below zero before a kriging variance is treated as a solver
/// failure rather than roundoff.
pub const VARIANCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum KrigingMode {
    #[default]
    Global,
    /// Per-target neighborhood of the nearest stations.
    Local { max_neighbors: usize, search_radius: f64 },
}

#[derive(Debug, Clone)]
pub struct KrigingSystem {
    points: Vec<GeoPoint>,
    model: VariogramModel,
    mode: KrigingMode,
    factor: Option<SymmetricFactorization>,
}

/// Weights, Lagrange multiplier and kriging variance at one target.
#[derive(Debug, Clone, PartialEq)]
pub struct KrigingWeights {
    /// One weight per station; zero for stations outside a local
    /// neighborhood.
    pub weights: Vec<f64>,
    pub lagrange: f64,
    pub variance: f64,
}

impl KrigingWeights {
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrigingEstimate {
    pub value: f64,
    pub variance: f64,
    pub weights: Vec<f64>,
}

/// Augmented ordinary-kriging matrix over `points`, row-major.
pub fn augmented_matrix(points: &[&GeoPoint], model: &VariogramModel) -> Vec<f64> {
    let n = points.len();
    let m = n + 1;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..i {
            let g = model.eval(points[i].distance(points[j]));
            a[i * m + j] = g;
            a[j * m + i] = g;
        }
        a[i * m + n] = 1.0;
        a[n * m + i] = 1.0;
    }
    a
}

fn check_duplicates(points: &[GeoPoint]) -> Result<()> {
    let mut seen: HashMap<(u64, u64), &str> = HashMap::new();
    let mut dups = Vec::new();
    for p in points {
        if let Some(first) = seen.insert((p.x.to_bits(), p.y.to_bits()), &p.id) {
            dups.push(format!("{first}={}", p.id));
        }
    }
    if dups.is_empty() {
        Ok(())
    } else {
        Err(Error::DuplicateLocation(dups))
    }
}

impl KrigingSystem {
    /// Validates the station set and, in global mode, factors the augmented
    /// system.
    pub fn build(points: &[GeoPoint], model: VariogramModel, mode: KrigingMode) -> Result<Self> {
        model.validate()?;
        if points.len() < 2 {
            return Err(Error::InsufficientData("kriging needs at least 2 stations".into()));
        }
        check_duplicates(points)?;
        let factor = match mode {
            KrigingMode::Global => {
                let refs: Vec<&GeoPoint> = points.iter().collect();
                Some(SymmetricFactorization::new(
                    points.len() + 1,
                    &augmented_matrix(&refs, &model),
                )?)
            }
            KrigingMode::Local {
                max_neighbors,
                search_radius,
            } => {
                if max_neighbors == 0 || !(search_radius > 0.0) {
                    return Err(Error::Config(format!(
                        "local kriging needs max_neighbors > 0 and search_radius > 0, got {max_neighbors}, {search_radius}"
                    )));
                }
                None
            }
        };
        Ok(KrigingSystem {
            points: points.to_vec(),
            model,
            mode,
            factor,
        })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    pub fn model(&self) -> &VariogramModel {
        &self.model
    }

    pub fn mode(&self) -> KrigingMode {
        self.mode
    }

    /// Stations used for `target` in local mode: nearest first, ties broken
    /// by station id.
    pub fn local_neighbors(&self, target: &GeoPoint) -> Result<Vec<usize>> {
        let KrigingMode::Local {
            max_neighbors,
            search_radius,
        } = self.mode
        else {
            return Err(Error::Config("local_neighbors requires local mode".into()));
        };
        let mut cand: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.distance(target), i))
            .filter(|(d, _)| *d <= search_radius)
            .collect();
        if cand.is_empty() {
            return Err(Error::NoNeighbors { radius: search_radius });
        }
        cand.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| self.points[a.1].id.cmp(&self.points[b.1].id))
        });
        cand.truncate(max_neighbors);
        Ok(cand.into_iter().map(|(_, i)| i).collect())
    }

    /// Kriging weights at `target`.
    pub fn weights(&self, target: &GeoPoint) -> Result<KrigingWeights> {
        let n = self.n();
        // On a station the right-hand side is that station's matrix column, so
        // the unit vector solves the system exactly; ill-conditioned models
        // (gaussian, zero nugget) would otherwise lose that to roundoff.
        if let Some(i) = self.points.iter().position(|p| p.distance(target) == 0.0) {
            let mut weights = vec![0.0; n];
            weights[i] = 1.0;
            return Ok(KrigingWeights {
                weights,
                lagrange: 0.0,
                variance: 0.0,
            });
        }
        match &self.factor {
            Some(f) => {
                let mut rhs: Vec<f64> = self
                    .points
                    .iter()
                    .map(|p| self.model.eval(p.distance(target)))
                    .collect();
                rhs.push(1.0);
                let sol = f.solve(&rhs);
                finish(sol, &rhs, (0..n).collect(), n)
            }
            None => {
                let idx = self.local_neighbors(target)?;
                let sub: Vec<&GeoPoint> = idx.iter().map(|&i| &self.points[i]).collect();
                let f = SymmetricFactorization::new(sub.len() + 1, &augmented_matrix(&sub, &self.model))?;
                let mut rhs: Vec<f64> = sub.iter().map(|p| self.model.eval(p.distance(target))).collect();
                rhs.push(1.0);
                let sol = f.solve(&rhs);
                finish(sol, &rhs, idx, n)
            }
        }
    }

    pub fn krige_point(&self, values: &[f64], target: &GeoPoint) -> Result<KrigingEstimate> {
        check_values(values, self.n())?;
        let w = self.weights(target)?;
        Ok(KrigingEstimate {
            value: w.apply(values),
            variance: w.variance,
            weights: w.weights,
        })
    }

    /// Kriges every cell center for every timestep. Cells outside `area`,
    /// and cells without neighbors in local mode, are masked out.
    pub fn krige_grid(
        &self,
        values_per_t: &[Vec<f64>],
        grid: &GridSpec,
        proj: &Projection,
        area: Option<&StudyArea>,
    ) -> Result<KrigedGrids> {
        for v in values_per_t {
            check_values(v, self.n())?;
        }
        let cells: Vec<(usize, usize)> = (0..grid.n_rows)
            .flat_map(|r| (0..grid.n_cols).map(move |c| (r, c)))
            .collect();
        let weights: Vec<Option<KrigingWeights>> = cells
            .par_iter()
            .map(|&(r, c)| {
                let (lon, lat) = grid.cell_center(r, c);
                if area.is_some_and(|a| !a.contains(lon, lat)) {
                    return Ok(None);
                }
                let target = GeoPoint::new("cell", lon, lat, proj)?;
                match self.weights(&target) {
                    Ok(w) => Ok(Some(w)),
                    Err(Error::NoNeighbors { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;

        let mut out = KrigedGrids {
            values: Vec::with_capacity(values_per_t.len()),
            variances: Vec::with_capacity(values_per_t.len()),
        };
        let mut variance = MaskedGrid::masked(grid.n_rows, grid.n_cols);
        for (&(r, c), w) in cells.iter().zip(&weights) {
            if let Some(w) = w {
                variance.set(r, c, w.variance);
            }
        }
        for values in values_per_t {
            let mut g = MaskedGrid::masked(grid.n_rows, grid.n_cols);
            for (&(r, c), w) in cells.iter().zip(&weights) {
                if let Some(w) = w {
                    g.set(r, c, w.apply(values));
                }
            }
            out.values.push(g);
            out.variances.push(variance.clone());
        }
        Ok(out)
    }
}

/// Per-timestep estimate and variance grids.
#[derive(Debug, Clone, PartialEq)]
pub struct KrigedGrids {
    pub values: Vec<MaskedGrid>,
    pub variances: Vec<MaskedGrid>,
}

fn check_values(values: &[f64], n: usize) -> Result<()> {
    if values.len() != n {
        return Err(Error::Domain(format!("{} values for {n} stations", values.len())));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value at station {i}")));
    }
    Ok(())
}

fn finish(sol: Vec<f64>, rhs: &[f64], idx: Vec<usize>, n: usize) -> Result<KrigingWeights> {
    let k = idx.len();
    let lagrange = sol[k];
    let mut variance = lagrange;
    for j in 0..k {
        variance += sol[j] * rhs[j];
    }
    if variance < -VARIANCE_TOLERANCE {
        return Err(Error::NegativeVariance(variance));
    }
    let mut weights = vec![0.0; n];
    for (j, &i) in idx.iter().enumerate() {
        weights[i] = sol[j];
    }
    Ok(KrigingWeights {
        weights,
        lagrange,
        variance: variance.max(0.0),
    })
}

pub fn build_system(points: &[GeoPoint], model: VariogramModel, mode: KrigingMode) -> Result<KrigingSystem> {
    KrigingSystem::build(points, model, mode)
}

pub fn krige_point(sys: &KrigingSystem, values: &[f64], target: &GeoPoint) -> Result<KrigingEstimate> {
    sys.krige_point(values, target)
}

pub fn local_neighbors(sys: &KrigingSystem, target: &GeoPoint) -> Result<Vec<usize>> {
    sys.local_neighbors(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variogram::Family;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};

    fn proj() -> Projection {
        Projection::default()
    }

    fn station(id: &str, x: f64, y: f64) -> GeoPoint {
        GeoPoint::from_projected(id, x, y, &proj())
    }

    fn random_stations(n: usize, seed: u64) -> Vec<GeoPoint> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                station(
                    &format!("s{i:03}"),
                    rng.gen_range(400_000.0..480_000.0),
                    rng.gen_range(2_600_000.0..2_680_000.0),
                )
            })
            .collect()
    }

    fn exp_model() -> VariogramModel {
        VariogramModel::new(Family::Exponential, 0.0, 1.0, 30_000.0).unwrap()
    }

    #[test]
    fn two_points_factor() {
        let s = vec![
            station("a", 450_000.0, 2_600_000.0),
            station("b", 451_000.0, 2_600_000.0),
        ];
        let sys = KrigingSystem::build(&s, exp_model(), KrigingMode::Global).unwrap();
        assert_eq!(sys.n(), 2);
    }

    #[test]
    fn duplicates_are_named() {
        let s = vec![
            station("a", 450_000.0, 2_600_000.0),
            station("b", 451_000.0, 2_600_000.0),
            station("c", 450_000.0, 2_600_000.0),
        ];
        match KrigingSystem::build(&s, exp_model(), KrigingMode::Global) {
            Err(Error::DuplicateLocation(ids)) => assert_eq!(ids, vec!["a=c".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn factorization_matches_dense_solve() {
        let s = random_stations(50, 4);
        let model = VariogramModel::new(Family::Spherical, 0.05, 1.0, 40_000.0).unwrap();
        let sys = KrigingSystem::build(&s, model, KrigingMode::Global).unwrap();
        let refs: Vec<&GeoPoint> = s.iter().collect();
        let a = DMatrix::from_row_slice(51, 51, &augmented_matrix(&refs, &model));
        let lu = a.lu();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let b: Vec<f64> = (0..51).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = sys.factor.as_ref().unwrap().solve(&b);
            let y = lu.solve(&DVector::from_column_slice(&b)).unwrap();
            let err = x.iter().zip(y.iter()).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            assert!(err / y.norm() < 1e-8);
        }
    }

    #[test]
    fn exact_at_observation() {
        let s = random_stations(20, 1);
        let z: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let sys = KrigingSystem::build(&s, exp_model(), KrigingMode::Global).unwrap();
        for (i, p) in s.iter().enumerate() {
            let e = sys.krige_point(&z, p).unwrap();
            assert!((e.value - z[i]).abs() < 1e-8);
            assert!(e.variance < 1e-8);
        }
    }

    #[test]
    fn exact_at_observation_for_ill_conditioned_model() {
        let s = random_stations(60, 4);
        let z: Vec<f64> = (0..60).map(|i| (i as f64 * 0.7).cos()).collect();
        let model = VariogramModel::new(Family::Gaussian, 0.0, 1.0, 80_000.0).unwrap();
        let local = KrigingMode::Local {
            max_neighbors: 8,
            search_radius: f64::INFINITY,
        };
        for mode in [KrigingMode::Global, local] {
            let sys = KrigingSystem::build(&s, model, mode).unwrap();
            for (i, p) in s.iter().enumerate() {
                assert_eq!(sys.krige_point(&z, p).unwrap().value, z[i]);
            }
        }
    }

    #[test]
    fn station_weights_solve_the_system_with_nugget() {
        let s = random_stations(12, 5);
        let model = VariogramModel::new(Family::Exponential, 0.3, 1.0, 30_000.0).unwrap();
        let refs: Vec<&GeoPoint> = s.iter().collect();
        let a = DMatrix::from_row_slice(13, 13, &augmented_matrix(&refs, &model));
        let sys = KrigingSystem::build(&s, model, KrigingMode::Global).unwrap();
        let w = sys.weights(&s[3]).unwrap();
        let x = DVector::from_iterator(13, w.weights.iter().copied().chain([w.lagrange]));
        let mut rhs: Vec<f64> = s.iter().map(|p| model.eval(p.distance(&s[3]))).collect();
        rhs.push(1.0);
        assert!((a * x - DVector::from_vec(rhs)).norm() < 1e-12);
    }

    #[test]
    fn pure_nugget_gives_equal_weights() {
        let s = random_stations(7, 2);
        let z = [1.0, 2.0, 4.0, -1.0, 0.5, 3.0, 7.0];
        let model = VariogramModel::new(Family::Gaussian, 0.4, 0.0, 1000.0).unwrap();
        let sys = KrigingSystem::build(&s, model, KrigingMode::Global).unwrap();
        let e = sys.krige_point(&z, &station("t", 440_123.0, 2_640_456.0)).unwrap();
        for w in &e.weights {
            assert!((w - 1.0 / 7.0).abs() < 1e-12);
        }
        assert!((e.value - z.iter().sum::<f64>() / 7.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair() {
        let s = vec![
            station("a", 449_000.0, 2_600_000.0),
            station("b", 451_000.0, 2_600_000.0),
        ];
        let sys = KrigingSystem::build(&s, exp_model(), KrigingMode::Global).unwrap();
        let e = sys
            .krige_point(&[2.0, 6.0], &station("t", 450_000.0, 2_601_000.0))
            .unwrap();
        assert!((e.weights[0] - 0.5).abs() < 1e-12 && (e.weights[1] - 0.5).abs() < 1e-12);
        assert!((e.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_values_rejected() {
        let s = random_stations(4, 3);
        let sys = KrigingSystem::build(&s, exp_model(), KrigingMode::Global).unwrap();
        assert!(matches!(
            sys.krige_point(&[1.0, f64::NAN, 0.0, 0.0], &s[0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn local_with_everything_equals_global() {
        let s = random_stations(30, 6);
        let z: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).cos()).collect();
        let model = VariogramModel::new(Family::Exponential, 0.1, 0.9, 25_000.0).unwrap();
        let g = KrigingSystem::build(&s, model, KrigingMode::Global).unwrap();
        let l = KrigingSystem::build(
            &s,
            model,
            KrigingMode::Local {
                max_neighbors: 30,
                search_radius: f64::INFINITY,
            },
        )
        .unwrap();
        let t = station("t", 437_000.0, 2_633_000.0);
        let (a, b) = (g.krige_point(&z, &t).unwrap(), l.krige_point(&z, &t).unwrap());
        assert!((a.value - b.value).abs() < 1e-8);
        assert!((a.variance - b.variance).abs() < 1e-8);
    }

    #[test]
    fn neighbors_radius_and_count() {
        let s = random_stations(20, 7);
        let t = station("t", 440_000.0, 2_640_000.0);
        let tight = KrigingSystem::build(
            &s,
            exp_model(),
            KrigingMode::Local {
                max_neighbors: 5,
                search_radius: 1.0,
            },
        )
        .unwrap();
        assert!(matches!(tight.local_neighbors(&t), Err(Error::NoNeighbors { .. })));

        let five = KrigingSystem::build(
            &s,
            exp_model(),
            KrigingMode::Local {
                max_neighbors: 5,
                search_radius: 1e9,
            },
        )
        .unwrap();
        let mut bf: Vec<(f64, usize)> = s.iter().enumerate().map(|(i, p)| (p.distance(&t), i)).collect();
        bf.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let expect: Vec<usize> = bf[..5].iter().map(|x| x.1).collect();
        assert_eq!(five.local_neighbors(&t).unwrap(), expect);
    }

    #[test]
    fn neighbor_ties_break_by_id() {
        let s = vec![
            station("b", 451_000.0, 2_600_000.0),
            station("a", 449_000.0, 2_600_000.0),
            station("c", 450_000.0, 2_610_000.0),
        ];
        let sys = KrigingSystem::build(
            &s,
            exp_model(),
            KrigingMode::Local {
                max_neighbors: 1,
                search_radius: 1e9,
            },
        )
        .unwrap();
        assert_eq!(
            sys.local_neighbors(&station("t", 450_000.0, 2_600_000.0)).unwrap(),
            vec![1]
        );
    }

    #[test]
    fn grid_matches_point_calls() {
        let s = random_stations(10, 8);
        let grid = GridSpec::new(89.5, 23.6, 0.1, 4, 4).unwrap();
        let model = VariogramModel::new(Family::Exponential, 0.05, 1.0, 30_000.0).unwrap();
        let sys = KrigingSystem::build(&s, model, KrigingMode::Global).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let vals: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let out = sys.krige_grid(&vals, &grid, &proj(), None).unwrap();
        assert_eq!(out.values.len(), 3);
        for t in 0..3 {
            for r in 0..4 {
                for c in 0..4 {
                    let (lon, lat) = grid.cell_center(r, c);
                    let p = GeoPoint::new("x", lon, lat, &proj()).unwrap();
                    let e = sys.krige_point(&vals[t], &p).unwrap();
                    assert!((out.values[t].get(r, c).unwrap() - e.value).abs() < 1e-12);
                    assert!((out.variances[t].get(r, c).unwrap() - e.variance).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn grid_constant_and_area_mask() {
        let s = random_stations(10, 9);
        let grid = GridSpec::new(89.5, 23.6, 0.25, 3, 3).unwrap();
        let sys = KrigingSystem::build(&s, exp_model(), KrigingMode::Global).unwrap();
        let area = StudyArea::new(vec![(89.5, 23.6), (90.0, 23.6), (90.0, 24.1), (89.5, 24.1)]).unwrap();
        let out = sys.krige_grid(&[vec![3.25; 10]], &grid, &proj(), Some(&area)).unwrap();
        let g = &out.values[0];
        assert_eq!(g.n_valid(), 4);
        assert!(g.iter_valid().all(|(_, _, v)| (v - 3.25).abs() < 1e-9));
        assert!(!g.is_valid(2, 2));
    }
}

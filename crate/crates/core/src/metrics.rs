//! Scoring functionals and the cross-validation metrics report.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::MaskedGrid;

/// Coefficient of determination `1 − Σ(y−ŷ)² / Σ(y−ȳ)²`.
pub fn r2(pred: &[f64], obs: &[f64]) -> Result<f64> {
    check_pair(pred, obs)?;
    if obs.len() < 2 {
        return Err(Error::InsufficientData("R² needs at least 2 observations".into()));
    }
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    let ss_tot: f64 = obs.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedR2);
    }
    let ss_res: f64 = pred.iter().zip(obs).map(|(p, y)| (y - p) * (y - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn mse(pred: &[f64], obs: &[f64]) -> Result<f64> {
    check_pair(pred, obs)?;
    if obs.is_empty() {
        return Err(Error::InsufficientData("MSE of an empty sample".into()));
    }
    Ok(pred.iter().zip(obs).map(|(p, y)| (y - p) * (y - p)).sum::<f64>() / obs.len() as f64)
}

fn check_pair(pred: &[f64], obs: &[f64]) -> Result<()> {
    if pred.len() != obs.len() {
        return Err(Error::Domain(format!(
            "{} predictions for {} observations",
            pred.len(),
            obs.len()
        )));
    }
    Ok(())
}

fn check_shapes(a: &MaskedGrid, b: &MaskedGrid) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Domain(format!(
            "grid shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// (sum of squared differences, count) over cells valid in both grids.
fn joint_sq(pred: &MaskedGrid, truth: &MaskedGrid) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0;
    for (r, c, p) in pred.iter_valid() {
        if let Some(t) = truth.get(r, c) {
            sum += (p - t) * (p - t);
            n += 1;
        }
    }
    (sum, n)
}

/// Mean squared difference over cells valid in both masks.
pub fn masked_mse(pred: &MaskedGrid, truth: &MaskedGrid) -> Result<f64> {
    check_shapes(pred, truth)?;
    let (sum, n) = joint_sq(pred, truth);
    if n == 0 {
        return Err(Error::InsufficientData("joint mask is empty".into()));
    }
    Ok(sum / n as f64)
}

/// Normalized average pooling: each valid cell becomes the mean of the valid
/// cells in its `pool_size` window (clipped at the edges). The mask is kept.
pub fn lowpass(grid: &MaskedGrid, pool_size: usize) -> Result<MaskedGrid> {
    if pool_size < 3 || pool_size % 2 == 0 {
        return Err(Error::Domain(format!("pool size must be odd and ≥ 3, got {pool_size}")));
    }
    let h = pool_size / 2;
    let (rows, cols) = grid.shape();
    let mut out = MaskedGrid::masked(rows, cols);
    for (r, c, _) in grid.iter_valid() {
        let mut sum = 0.0;
        let mut n = 0usize;
        for rr in r.saturating_sub(h)..(r + h + 1).min(rows) {
            for cc in c.saturating_sub(h)..(c + h + 1).min(cols) {
                if let Some(v) = grid.get(rr, cc) {
                    sum += v;
                    n += 1;
                }
            }
        }
        out.set(r, c, sum / n as f64);
    }
    Ok(out)
}

/// Weights of the three-term masked loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeLossConfig {
    pub w_main: f64,
    pub w_trend: f64,
    pub w_mean: f64,
    pub pool_size: usize,
}

impl Default for CompositeLossConfig {
    fn default() -> Self {
        CompositeLossConfig {
            w_main: 1.0,
            w_trend: 0.5,
            w_mean: 0.5,
            pool_size: 3,
        }
    }
}

impl CompositeLossConfig {
    pub fn validate(&self) -> Result<()> {
        let w = [self.w_main, self.w_trend, self.w_mean];
        if w.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || w.iter().all(|&w| w == 0.0) {
            return Err(Error::Config(format!(
                "loss weights must be nonnegative with at least one positive, got {w:?}"
            )));
        }
        if self.pool_size < 3 || self.pool_size % 2 == 0 {
            return Err(Error::Config(format!(
                "pool size must be odd and ≥ 3, got {}",
                self.pool_size
            )));
        }
        Ok(())
    }
}

/// `w_main·L_mse + w_trend·L_lowpass + w_mean·L_mean` over a sequence of
/// grids. The first two terms pool squared errors over all jointly valid
/// cells of all timesteps; the last averages, over timesteps, the squared
/// difference of spatial means taken on the joint mask.
pub fn composite_loss(pred: &[MaskedGrid], truth: &[MaskedGrid], cfg: &CompositeLossConfig) -> Result<f64> {
    cfg.validate()?;
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::Domain(format!(
            "composite loss needs equal, nonempty sequences; got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let (mut main_sum, mut main_n) = (0.0, 0usize);
    let (mut trend_sum, mut trend_n) = (0.0, 0usize);
    let (mut mean_sum, mut mean_n) = (0.0, 0usize);
    for (p, t) in pred.iter().zip(truth) {
        check_shapes(p, t)?;
        let (s, n) = joint_sq(p, t);
        main_sum += s;
        main_n += n;
        if cfg.w_trend != 0.0 {
            let (s, n) = joint_sq(&lowpass(p, cfg.pool_size)?, &lowpass(t, cfg.pool_size)?);
            trend_sum += s;
            trend_n += n;
        }
        if cfg.w_mean != 0.0 {
            let (mut sp, mut st, mut k) = (0.0, 0.0, 0usize);
            for (r, c, pv) in p.iter_valid() {
                if let Some(tv) = t.get(r, c) {
                    sp += pv;
                    st += tv;
                    k += 1;
                }
            }
            if k > 0 {
                let d = (sp - st) / k as f64;
                mean_sum += d * d;
                mean_n += 1;
            }
        }
    }
    if main_n == 0 {
        return Err(Error::InsufficientData("joint mask is empty at every timestep".into()));
    }
    let mut loss = cfg.w_main * (main_sum / main_n as f64);
    if cfg.w_trend != 0.0 {
        loss += cfg.w_trend * (trend_sum / trend_n as f64);
    }
    if cfg.w_mean != 0.0 {
        loss += cfg.w_mean * (mean_sum / mean_n as f64);
    }
    Ok(loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Model-set wells, the locations the predictor was trained on.
    Prediction,
    /// Holdout wells never seen in training.
    Interpolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    R2,
    Mse,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Prediction, Role::Interpolation];
}
impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}
impl Metric {
    pub const ALL: [Metric; 2] = [Metric::R2, Metric::Mse];
}

macro_rules! text_enum {
    ($t:ty { $($v:ident => $s:literal),* $(,)? }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),* })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(Self::$v),)*
                    other => Err(Error::Domain(format!("unknown {} {other:?}", stringify!($t)))),
                }
            }
        }
    };
}

text_enum!(Role { Prediction => "prediction", Interpolation => "interpolation" });
text_enum!(Split { Train => "train", Val => "val", Test => "test" });
text_enum!(Metric { R2 => "r2", Mse => "mse" });

/// R² and MSE of one report cell. R² is NaN when undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub r2: f64,
    pub mse: f64,
}

impl Score {
    /// Pooled score of paired samples.
    pub fn of(pred: &[f64], obs: &[f64]) -> Result<Score> {
        let r2 = match r2(pred, obs) {
            Ok(v) => v,
            Err(Error::UndefinedR2) | Err(Error::InsufficientData(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        Ok(Score {
            r2,
            mse: mse(pred, obs)?,
        })
    }

    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::R2 => self.r2,
            Metric::Mse => self.mse,
        }
    }
}

pub type Cells = BTreeMap<(Role, Split), Score>;

/// Scores of one predictor on one fold, or the reason the fold failed.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub predictor: String,
    pub result: std::result::Result<Cells, String>,
}

/// Per-fold scores. Cross-fold aggregates are always derived from the
/// stored per-fold values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub outcomes: Vec<FoldOutcome>,
}

/// Mean and sample standard deviation (NaN for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl MetricsReport {
    /// Predictor names in order of first appearance.
    pub fn predictors(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for o in &self.outcomes {
            if !out.contains(&o.predictor) {
                out.push(o.predictor.clone());
            }
        }
        out
    }

    /// Values of one report cell across successful folds, in fold order.
    pub fn values(&self, predictor: &str, role: Role, split: Split, metric: Metric) -> Vec<f64> {
        let mut v: Vec<(usize, f64)> = self
            .outcomes
            .iter()
            .filter(|o| o.predictor == predictor)
            .filter_map(|o| o.result.as_ref().ok().map(|c| (o.fold, c)))
            .filter_map(|(f, c)| c.get(&(role, split)).map(|s| (f, s.get(metric))))
            .collect();
        v.sort_by_key(|x| x.0);
        v.into_iter().map(|x| x.1).collect()
    }

    pub fn aggregate(&self, predictor: &str, role: Role, split: Split, metric: Metric) -> (f64, f64) {
        let v: Vec<f64> = self
            .values(predictor, role, split, metric)
            .into_iter()
            .filter(|v| !v.is_nan())
            .collect();
        mean_std(&v)
    }

    pub fn failed_folds(&self) -> Vec<&FoldOutcome> {
        self.outcomes.iter().filter(|o| o.result.is_err()).collect()
    }

    /// Long-format CSV: `fold,predictor,role,split,metric,value`. Per-fold
    /// rows come first, then `mean` and `std` rows per cell; failed folds
    /// are one `status` row each.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["fold", "predictor", "role", "split", "metric", "value"])?;
        let mut outcomes: Vec<&FoldOutcome> = self.outcomes.iter().collect();
        outcomes.sort_by(|a, b| a.fold.cmp(&b.fold));
        let order = self.predictors();
        outcomes.sort_by_key(|o| (o.fold, order.iter().position(|p| *p == o.predictor)));
        for o in &outcomes {
            let fold = o.fold.to_string();
            match &o.result {
                Ok(cells) => {
                    for ((role, split), score) in cells {
                        for m in Metric::ALL {
                            wr.write_record([
                                fold.as_str(),
                                &o.predictor,
                                &role.to_string(),
                                &split.to_string(),
                                &m.to_string(),
                                &score.get(m).to_string(),
                            ])?;
                        }
                    }
                }
                Err(msg) => {
                    wr.write_record([fold.as_str(), &o.predictor, "", "", "status", &format!("failed: {msg}")])?;
                }
            }
        }
        for p in &order {
            for role in Role::ALL {
                for split in Split::ALL {
                    for m in Metric::ALL {
                        if self.values(p, role, split, m).is_empty() {
                            continue;
                        }
                        let (mean, std) = self.aggregate(p, role, split, m);
                        for (label, v) in [("mean", mean), ("std", std)] {
                            wr.write_record([
                                label,
                                p,
                                &role.to_string(),
                                &split.to_string(),
                                &m.to_string(),
                                &v.to_string(),
                            ])?;
                        }
                    }
                }
            }
        }
        wr.flush().map_err(|e| Error::io("report", e))?;
        Ok(())
    }

    /// Reads the per-fold rows of a report written by
    /// [`write_csv`](Self::write_csv); aggregate rows are ignored.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut by_key: BTreeMap<(usize, String), FoldOutcome> = BTreeMap::new();
        let mut first_seen: Vec<(usize, String)> = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            let bad = |m: String| Error::Parse {
                path: "report.csv".into(),
                line: line + 2,
                message: m,
            };
            if rec.len() != 6 {
                return Err(bad(format!("expected 6 fields, got {}", rec.len())));
            }
            let Ok(fold) = rec[0].parse::<usize>() else {
                continue; // mean/std rows
            };
            let key = (fold, rec[1].to_string());
            if !by_key.contains_key(&key) {
                first_seen.push(key.clone());
            }
            let entry = by_key.entry(key).or_insert_with(|| FoldOutcome {
                fold,
                predictor: rec[1].to_string(),
                result: Ok(Cells::new()),
            });
            if &rec[4] == "status" {
                entry.result = Err(rec[5].trim_start_matches("failed: ").to_string());
                continue;
            }
            let role: Role = rec[2].parse().map_err(|e: Error| bad(e.to_string()))?;
            let split: Split = rec[3].parse().map_err(|e: Error| bad(e.to_string()))?;
            let metric: Metric = rec[4].parse().map_err(|e: Error| bad(e.to_string()))?;
            let value: f64 = rec[5].parse().map_err(|_| bad(format!("bad value {:?}", &rec[5])))?;
            if let Ok(cells) = entry.result.as_mut() {
                let s = cells.entry((role, split)).or_insert(Score {
                    r2: f64::NAN,
                    mse: f64::NAN,
                });
                match metric {
                    Metric::R2 => s.r2 = value,
                    Metric::Mse => s.mse = value,
                }
            }
        }
        Ok(MetricsReport {
            outcomes: first_seen.into_iter().map(|k| by_key.remove(&k).unwrap()).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(values: &[f64], mask: &[bool], cols: usize) -> MaskedGrid {
        MaskedGrid::from_parts(values.len() / cols, cols, values, mask).unwrap()
    }

    #[test]
    fn r2_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r2(&y, &y).unwrap(), 1.0);
        assert_eq!(r2(&[2.0; 3], &y).unwrap(), 0.0);
        assert_eq!(r2(&[3.0, 2.0, 1.0], &y).unwrap(), -3.0);
        assert!(matches!(r2(&[1.0, 2.0], &[5.0, 5.0]), Err(Error::UndefinedR2)));
    }

    #[test]
    fn r2_affine_behaviour() {
        let y = [1.0, 4.0, 2.0, 8.0];
        let p = [1.5, 3.0, 2.5, 7.0];
        let base = r2(&p, &y).unwrap();
        let ys: Vec<f64> = y.iter().map(|v| v + 10.0).collect();
        let ps: Vec<f64> = p.iter().map(|v| v + 10.0).collect();
        assert!((r2(&ps, &ys).unwrap() - base).abs() < 1e-12);
        let y2: Vec<f64> = y.iter().map(|v| v * 2.0).collect();
        assert!((r2(&p, &y2).unwrap() - base).abs() > 1e-3);
    }

    #[test]
    fn masked_mse_examples() {
        let a = grid(&[1.0, 2.0, 3.0, 4.0], &[true; 4], 2);
        assert_eq!(masked_mse(&a, &a).unwrap(), 0.0);
        let b = grid(&[2.0, 3.0, 4.0, 5.0], &[true; 4], 2);
        assert_eq!(masked_mse(&a, &b).unwrap(), 1.0);
        let p = grid(&[4.0, 9.0, 0.0, 0.0], &[true, false, true, true], 2);
        let t = grid(&[0.0; 4], &[true; 4], 2);
        assert_eq!(masked_mse(&p, &t).unwrap(), 16.0 / 3.0);
        let p = grid(&[2.0, 9.0, 0.0, 0.0], &[true, false, true, true], 2);
        assert_eq!(masked_mse(&p, &t).unwrap(), 4.0 / 3.0);
        let none = MaskedGrid::masked(2, 2);
        assert!(masked_mse(&none, &t).is_err());
    }

    #[test]
    fn lowpass_examples() {
        let c = grid(&[2.5; 9], &[true; 9], 3);
        assert_eq!(lowpass(&c, 3).unwrap(), c);
        let mut mask = [false; 9];
        mask[4] = true;
        let single = grid(&[7.0; 9], &mask, 3);
        assert_eq!(lowpass(&single, 3).unwrap(), single);
        let mut v = [0.0; 9];
        v[4] = 9.0;
        let center = grid(&v, &[true; 9], 3);
        assert_eq!(lowpass(&center, 3).unwrap().get(1, 1), Some(1.0));
        assert!(lowpass(&center, 2).is_err());
    }

    #[test]
    fn composite_hand_example() {
        let p = grid(&[2.0, 0.0, 0.0, 0.0], &[true; 4], 2);
        let t = grid(&[0.0; 4], &[true; 4], 2);
        let cfg = CompositeLossConfig {
            w_main: 1.0,
            w_trend: 0.0,
            w_mean: 1.0,
            pool_size: 3,
        };
        assert_eq!(composite_loss(&[p], &[t], &cfg).unwrap(), 1.25);
    }

    #[test]
    fn report_csv_roundtrip_and_aggregates() {
        let mut cells = Cells::new();
        cells.insert((Role::Prediction, Split::Test), Score { r2: 0.5, mse: 0.1 });
        let mut cells2 = Cells::new();
        cells2.insert((Role::Prediction, Split::Test), Score { r2: 0.7, mse: 0.3 });
        let rep = MetricsReport {
            outcomes: vec![
                FoldOutcome {
                    fold: 1,
                    predictor: "ridge".into(),
                    result: Ok(cells),
                },
                FoldOutcome {
                    fold: 2,
                    predictor: "ridge".into(),
                    result: Ok(cells2),
                },
                FoldOutcome {
                    fold: 3,
                    predictor: "ridge".into(),
                    result: Err("boom".into()),
                },
            ],
        };
        let (m, s) = rep.aggregate("ridge", Role::Prediction, Split::Test, Metric::R2);
        assert!((m - 0.6).abs() < 1e-12);
        assert!((s - (0.02f64).sqrt()).abs() < 1e-12);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let back = MetricsReport::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rep);
        assert_eq!(back.failed_folds().len(), 1);
    }

    fn arb_grid(rows: usize, cols: usize) -> impl Strategy<Value = MaskedGrid> {
        (
            prop::collection::vec(-10.0f64..10.0, rows * cols),
            prop::collection::vec(prop::bool::weighted(0.8), rows * cols),
        )
            .prop_map(move |(v, m)| MaskedGrid::from_parts(rows, cols, &v, &m).unwrap())
    }

    proptest! {
        #[test]
        fn masked_mse_symmetric(a in arb_grid(4, 5), b in arb_grid(4, 5)) {
            match (masked_mse(&a, &b), masked_mse(&b, &a)) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn lowpass_bounded_by_neighborhood(g in arb_grid(5, 6)) {
            let lp = lowpass(&g, 3).unwrap();
            prop_assert_eq!(lp.mask(), g.mask());
            for (r, c, v) in lp.iter_valid() {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for rr in r.saturating_sub(1)..(r + 2).min(5) {
                    for cc in c.saturating_sub(1)..(c + 2).min(6) {
                        if let Some(x) = g.get(rr, cc) { lo = lo.min(x); hi = hi.max(x); }
                    }
                }
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }

        #[test]
        fn composite_is_weight_linear_and_nonnegative(
            a in arb_grid(3, 4), b in arb_grid(3, 4),
            w in (0.0f64..2.0, 0.0f64..2.0, 0.1f64..2.0),
        ) {
            let cfg = CompositeLossConfig { w_main: w.0, w_trend: w.1, w_mean: w.2, pool_size: 3 };
            let dbl = CompositeLossConfig { w_main: 2.0 * w.0, w_trend: 2.0 * w.1, w_mean: 2.0 * w.2, pool_size: 3 };
            if let Ok(l) = composite_loss(&[a.clone()], &[b.clone()], &cfg) {
                prop_assert!(l >= 0.0);
                let l2 = composite_loss(&[a.clone()], &[b.clone()], &dbl).unwrap();
                prop_assert!((l2 - 2.0 * l).abs() <= 1e-12 * (1.0 + l.abs()));
            }
            prop_assert_eq!(composite_loss(&[a.clone()], &[a.clone()], &cfg).unwrap_or(0.0), 0.0);
        }
    }
}

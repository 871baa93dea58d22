//! Spatial holdout split and expanding-window temporal cross-validation.
//!
//! Fold `k` (1-based) of `n` trains on `[0, e_k)` with
//! `e_k = T − 2L − (n − k)·L`, validates on `[e_k, e_k + L)` and tests on
//! `[e_k + L, e_k + 2L)`, where `L` is the evaluation length. Consecutive
//! folds are `L` steps apart and the last test window ends at `T`.
//!
//! Predictors see training data only through a [`TrainingView`], which
//! refuses (and counts) reads of holdout wells and of timesteps at or after
//! `e_k`.

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{rasterize_values, GeoPoint, GridSpec, MaskedGrid};
use crate::gridstack::{GridSource, GridStack};
use crate::kriging::{KrigingMode, KrigingSystem, KrigingWeights};
use crate::metrics::{composite_loss, Cells, CompositeLossConfig, FoldOutcome, MetricsReport, Role, Score, Split};
use crate::models::{fit_predictor, DataAccess, Interpolation, Predictor, PredictorConfig, TrainWindow};
use crate::preprocess::PointObservationSet;
use crate::time::TimeAxis;
use crate::variogram::{VariogramConfig, VariogramFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub holdout_fraction: f64,
    pub seed: u64,
    pub holdout_ids: Vec<String>,
    pub model_ids: Vec<String>,
}

/// Draws `round_half_up(fraction · n)` holdout wells uniformly without
/// replacement. Both id lists keep the input order.
pub fn spatial_split(ids: &[String], fraction: f64, seed: u64) -> Result<SplitSpec> {
    if ids.len() < 2 {
        return Err(Error::Config(format!(
            "spatial split needs at least 2 wells, got {}",
            ids.len()
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "holdout fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = ids.len();
    let n_hold = (fraction * n as f64 + 0.5).floor() as usize;
    if n_hold == 0 || n_hold >= n {
        return Err(Error::Config(format!(
            "holdout fraction {fraction} of {n} wells gives {n_hold} holdouts; need between 1 and {}",
            n - 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; n];
    for i in rand::seq::index::sample(&mut rng, n, n_hold) {
        chosen[i] = true;
    }
    let pick = |want: bool| -> Vec<String> {
        ids.iter()
            .zip(&chosen)
            .filter(|(_, &c)| c == want)
            .map(|(id, _)| id.clone())
            .collect()
    };
    Ok(SplitSpec {
        holdout_fraction: fraction,
        seed,
        holdout_ids: pick(true),
        model_ids: pick(false),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    /// 1-based.
    pub index: usize,
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl FoldSpec {
    pub fn range(&self, split: Split) -> Range<usize> {
        match split {
            Split::Train => self.train.clone(),
            Split::Val => self.val.clone(),
            Split::Test => self.test.clone(),
        }
    }
}

pub fn temporal_folds(n_times: usize, n_folds: usize, eval_len: usize) -> Result<Vec<FoldSpec>> {
    if n_folds == 0 || eval_len == 0 {
        return Err(Error::Config("n_folds and eval_len must be positive".into()));
    }
    let min_t = (n_folds + 2) * eval_len;
    if n_times < min_t {
        return Err(Error::Config(format!(
            "{n_folds} folds with eval_len {eval_len} need at least {min_t} timesteps, got {n_times}"
        )));
    }
    Ok((1..=n_folds)
        .map(|k| {
            let e = n_times - 2 * eval_len - (n_folds - k) * eval_len;
            FoldSpec {
                index: k,
                train: 0..e,
                val: e..e + eval_len,
                test: e + eval_len..e + 2 * eval_len,
            }
        })
        .collect())
}

/// Curated observations aligned with a grid stack.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub obs: PointObservationSet,
    pub grids: GridStack,
    pub grid: GridSpec,
}

impl Dataset {
    pub fn new(obs: PointObservationSet, grids: GridStack, grid: GridSpec) -> Result<Self> {
        if !obs.is_complete() {
            return Err(Error::InsufficientData(
                "experiments need gap-free series; run curation first".into(),
            ));
        }
        if grids.n_times() != obs.n_times() {
            return Err(Error::Alignment(format!(
                "grid stack has {} timesteps, observations {}",
                grids.n_times(),
                obs.n_times()
            )));
        }
        if grids.height() != grid.n_rows || grids.width() != grid.n_cols {
            return Err(Error::Alignment(format!(
                "grid stack is {}×{}, grid spec {}×{}",
                grids.height(),
                grids.width(),
                grid.n_rows,
                grid.n_cols
            )));
        }
        Ok(Dataset { obs, grids, grid })
    }

    pub fn well_ids(&self) -> Vec<String> {
        self.obs.points.iter().map(|p| p.id.clone()).collect()
    }

    fn indices_of(&self, ids: &[String]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.obs
                    .index_of(id)
                    .ok_or_else(|| Error::Config(format!("split names unknown well {id}")))
            })
            .collect()
    }
}

impl GridSource for Dataset {
    fn grid_dims(&self) -> [usize; 4] {
        self.grids.dims()
    }
    fn grid_value(&self, t: usize, c: usize, i: usize, j: usize) -> Result<Option<f64>> {
        Ok(self.grids.get(t, c, i, j))
    }
}

impl DataAccess for Dataset {
    fn n_wells(&self) -> usize {
        self.obs.n_points()
    }
    fn site(&self, well: usize) -> &GeoPoint {
        &self.obs.points[well]
    }
    fn target(&self, well: usize, t: usize) -> Result<f64> {
        self.obs
            .value(well, t)
            .ok_or_else(|| Error::InsufficientData(format!("no observation for well {well} at t = {t}")))
    }
    fn grid_spec(&self) -> &GridSpec {
        &self.grid
    }
    fn axis(&self) -> TimeAxis {
        self.obs.axis
    }
    fn channel_names(&self) -> &[String] {
        self.grids.channels()
    }
}

/// Read counters of one training run.
#[derive(Debug, Default)]
pub struct AccessAudit {
    reads: AtomicU64,
    holdout_violations: AtomicU64,
    future_violations: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AuditCounts {
    pub reads: u64,
    pub holdout_violations: u64,
    pub future_violations: u64,
}

impl AuditCounts {
    pub fn is_clean(&self) -> bool {
        self.holdout_violations == 0 && self.future_violations == 0
    }
}

impl AccessAudit {
    pub fn counts(&self) -> AuditCounts {
        AuditCounts {
            reads: self.reads.load(Ordering::Relaxed),
            holdout_violations: self.holdout_violations.load(Ordering::Relaxed),
            future_violations: self.future_violations.load(Ordering::Relaxed),
        }
    }
}

/// Training-time access to a [`Dataset`]: model wells only, times before
/// `end` only.
pub struct TrainingView<'a> {
    data: &'a Dataset,
    allowed: Vec<bool>,
    end: usize,
    audit: &'a AccessAudit,
}

impl<'a> TrainingView<'a> {
    pub fn new(data: &'a Dataset, wells: &[usize], end: usize, audit: &'a AccessAudit) -> Self {
        let mut allowed = vec![false; data.n_wells()];
        for &w in wells {
            allowed[w] = true;
        }
        TrainingView {
            data,
            allowed,
            end,
            audit,
        }
    }

    fn check_time(&self, t: usize) -> Result<()> {
        if t >= self.end {
            self.audit.future_violations.fetch_add(1, Ordering::Relaxed);
            return Err(Error::Leakage(format!(
                "read at t = {t} during training that ends at {}",
                self.end
            )));
        }
        Ok(())
    }
}

impl GridSource for TrainingView<'_> {
    fn grid_dims(&self) -> [usize; 4] {
        self.data.grid_dims()
    }
    fn grid_value(&self, t: usize, c: usize, i: usize, j: usize) -> Result<Option<f64>> {
        self.audit.reads.fetch_add(1, Ordering::Relaxed);
        self.check_time(t)?;
        self.data.grid_value(t, c, i, j)
    }
}

impl DataAccess for TrainingView<'_> {
    fn n_wells(&self) -> usize {
        self.data.n_wells()
    }
    fn site(&self, well: usize) -> &GeoPoint {
        self.data.site(well)
    }
    fn target(&self, well: usize, t: usize) -> Result<f64> {
        self.audit.reads.fetch_add(1, Ordering::Relaxed);
        if !self.allowed[well] {
            self.audit.holdout_violations.fetch_add(1, Ordering::Relaxed);
            return Err(Error::Leakage(format!(
                "training read holdout well {}",
                self.data.site(well).id
            )));
        }
        self.check_time(t)?;
        self.data.target(well, t)
    }
    fn grid_spec(&self) -> &GridSpec {
        self.data.grid_spec()
    }
    fn axis(&self) -> TimeAxis {
        self.data.axis()
    }
    fn channel_names(&self) -> &[String] {
        self.data.channel_names()
    }
}

/// Anything the harness can fit per fold.
pub trait PredictorSpec: Sync {
    fn label(&self) -> String;
    fn interpolation(&self) -> Interpolation;
    fn fit(&self, data: &dyn DataAccess, window: &TrainWindow, seed: u64) -> Result<Box<dyn Predictor>>;
}

impl PredictorSpec for PredictorConfig {
    fn label(&self) -> String {
        PredictorConfig::label(self)
    }
    fn interpolation(&self) -> Interpolation {
        PredictorConfig::interpolation(self)
    }
    fn fit(&self, data: &dyn DataAccess, window: &TrainWindow, seed: u64) -> Result<Box<dyn Predictor>> {
        fit_predictor(self, data, window, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_folds")]
    pub n_folds: usize,
    #[serde(default = "default_eval_len")]
    pub eval_len: usize,
    #[serde(default = "default_fraction")]
    pub holdout_fraction: f64,
    #[serde(default)]
    pub variogram: VariogramConfig,
    #[serde(default)]
    pub kriging: KrigingMode,
    #[serde(default)]
    pub loss: CompositeLossConfig,
}

fn default_folds() -> usize {
    10
}
fn default_eval_len() -> usize {
    8
}
fn default_fraction() -> f64 {
    0.08
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_folds: default_folds(),
            eval_len: default_eval_len(),
            holdout_fraction: default_fraction(),
            variogram: VariogramConfig::default(),
            kriging: KrigingMode::default(),
            loss: CompositeLossConfig::default(),
        }
    }
}

/// Audit counters of one fitted (fold, predictor) pair; the variogram fit
/// is audited under the name `variogram`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub fold: usize,
    pub predictor: String,
    pub counts: AuditCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRecord {
    pub fold: usize,
    pub predictor: String,
    pub split: Split,
    pub value: f64,
}

/// One predicted value of the final fold, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    pub predictor: String,
    pub well_id: String,
    pub role: Role,
    pub t: usize,
    pub observed: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: MetricsReport,
    pub audits: Vec<AuditRecord>,
    pub variograms: Vec<(usize, std::result::Result<VariogramFit, String>)>,
    pub composite: Vec<CompositeRecord>,
    pub final_fold_series: Vec<SeriesRecord>,
}

impl ExperimentOutput {
    pub fn audit_is_clean(&self) -> bool {
        self.audits.iter().all(|a| a.counts.is_clean())
    }
}

struct FoldContext {
    kriging: std::result::Result<Vec<KrigingWeights>, String>,
    variogram: std::result::Result<VariogramFit, String>,
    audit: AuditCounts,
}

fn fold_kriging(
    data: &Dataset,
    model: &[usize],
    holdout: &[usize],
    fold: &FoldSpec,
    cfg: &ExperimentConfig,
) -> FoldContext {
    let audit = AccessAudit::default();
    let view = TrainingView::new(data, model, fold.train.end, &audit);
    let points: Vec<GeoPoint> = model.iter().map(|&w| data.site(w).clone()).collect();
    let variogram = (|| -> Result<VariogramFit> {
        let realizations = fold
            .train
            .clone()
            .map(|t| model.iter().map(|&w| view.target(w, t)).collect::<Result<Vec<f64>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(cfg.variogram.estimate(&points, &realizations)?.1)
    })()
    .map_err(|e| format!("variogram fit failed: {e}"));
    let kriging = variogram.clone().and_then(|vf| {
        if let Some(w) = &vf.warning {
            log::warn!("fold {}: {w}", fold.index);
        }
        let sys = KrigingSystem::build(&points, vf.model, cfg.kriging).map_err(|e| format!("kriging system: {e}"))?;
        holdout
            .iter()
            .map(|&h| sys.weights(data.site(h)))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| format!("kriging weights: {e}"))
    });
    FoldContext {
        kriging,
        variogram,
        audit: audit.counts(),
    }
}

struct JobResult {
    outcome: FoldOutcome,
    audit: AuditCounts,
    composite: Vec<CompositeRecord>,
    series: Vec<SeriesRecord>,
}

/// Per-seed offset so every (fold, predictor) job draws its own stream.
fn job_seed(seed: u64, fold: usize, predictor: usize) -> u64 {
    seed.wrapping_add(1_000_003 * fold as u64)
        .wrapping_add(7919 * predictor as u64)
}

#[allow(clippy::too_many_arguments)]
fn run_job(
    data: &Dataset,
    spec: &dyn PredictorSpec,
    p_index: usize,
    model: &[usize],
    holdout: &[usize],
    fold: &FoldSpec,
    ctx: &FoldContext,
    cfg: &ExperimentConfig,
    seed: u64,
    keep_series: bool,
) -> JobResult {
    let name = spec.label();
    let audit = AccessAudit::default();
    let mut composite = Vec::new();
    let mut series = Vec::new();
    let result = (|| -> Result<Cells> {
        let predictor = {
            let view = TrainingView::new(data, model, fold.train.end, &audit);
            let window = TrainWindow {
                wells: model.to_vec(),
                end: fold.train.end,
                val_len: cfg.eval_len.min(fold.train.end / 2),
            };
            spec.fit(&view, &window, job_seed(seed, fold.index, p_index))?
        };
        let first = predictor.first_time();
        let horizon = fold.test.end;
        let n_wells = data.n_wells();
        // pred[w][t] for t < horizon; NaN where not predicted.
        let mut pred = vec![vec![f64::NAN; horizon]; n_wells];
        for &w in model {
            for t in first..horizon {
                pred[w][t] = predictor.predict(data, w, t)?;
            }
        }
        match spec.interpolation() {
            Interpolation::Direct => {
                for &h in holdout {
                    for t in first..horizon {
                        pred[h][t] = predictor.predict(data, h, t)?;
                    }
                }
            }
            Interpolation::Kriging => {
                let weights = ctx.kriging.as_ref().map_err(|e| Error::InsufficientData(e.clone()))?;
                let mut at_t = vec![0.0; model.len()];
                for t in first..horizon {
                    for (k, &w) in model.iter().enumerate() {
                        at_t[k] = pred[w][t];
                    }
                    for (kw, &h) in weights.iter().zip(holdout) {
                        pred[h][t] = kw.apply(&at_t);
                    }
                }
            }
        }
        let mut cells = Cells::new();
        for split in Split::ALL {
            let r = fold.range(split);
            let r = r.start.max(first)..r.end;
            for (role, wells) in [(Role::Prediction, model), (Role::Interpolation, holdout)] {
                let mut p = Vec::new();
                let mut o = Vec::new();
                for &w in wells {
                    for t in r.clone() {
                        p.push(pred[w][t]);
                        o.push(data.target(w, t)?);
                    }
                }
                cells.insert((role, split), Score::of(&p, &o)?);
            }
            let mut pg = Vec::new();
            let mut og = Vec::new();
            for t in r.clone() {
                let pv: Vec<Option<f64>> = (0..n_wells).map(|w| Some(pred[w][t])).collect();
                let ov: Vec<Option<f64>> = (0..n_wells).map(|w| data.obs.value(w, t)).collect();
                pg.push(rasterize_values(&data.obs.points, &pv, &data.grid));
                og.push(rasterize_values(&data.obs.points, &ov, &data.grid));
            }
            if let Ok(v) = composite_on_joint_support(&pg, &og, &cfg.loss) {
                composite.push(CompositeRecord {
                    fold: fold.index,
                    predictor: name.clone(),
                    split,
                    value: v,
                });
            }
        }
        if keep_series {
            for (role, wells) in [(Role::Prediction, model), (Role::Interpolation, holdout)] {
                for &w in wells {
                    for t in first..horizon {
                        series.push(SeriesRecord {
                            predictor: name.clone(),
                            well_id: data.site(w).id.clone(),
                            role,
                            t,
                            observed: data.target(w, t)?,
                            predicted: pred[w][t],
                        });
                    }
                }
            }
        }
        Ok(cells)
    })();
    if let Err(e) = &result {
        log::warn!("fold {} / {name} failed: {e}", fold.index);
    }
    JobResult {
        outcome: FoldOutcome {
            fold: fold.index,
            predictor: name,
            result: result.map_err(|e| e.to_string()),
        },
        audit: audit.counts(),
        composite,
        series,
    }
}

fn composite_on_joint_support(pred: &[MaskedGrid], truth: &[MaskedGrid], cfg: &CompositeLossConfig) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::InsufficientData("empty split".into()));
    }
    composite_loss(pred, truth, cfg)
}

/// Fits every predictor on every fold and scores both roles on all splits.
///
/// Folds and predictors run concurrently; results keep (fold, roster)
/// order, so output is independent of scheduling.
pub fn run_experiment(
    data: &Dataset,
    roster: &[&dyn PredictorSpec],
    split: &SplitSpec,
    folds: &[FoldSpec],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<ExperimentOutput> {
    let model = data.indices_of(&split.model_ids)?;
    let holdout = data.indices_of(&split.holdout_ids)?;
    if let Some(f) = folds.iter().find(|f| f.test.end > data.obs.n_times()) {
        return Err(Error::Config(format!(
            "fold {} ends at {} beyond {} timesteps",
            f.index,
            f.test.end,
            data.obs.n_times()
        )));
    }
    let contexts: Vec<FoldContext> = folds
        .par_iter()
        .map(|f| fold_kriging(data, &model, &holdout, f, cfg))
        .collect();
    let last = folds.iter().map(|f| f.index).max();
    let jobs: Vec<(usize, usize)> = (0..folds.len())
        .flat_map(|k| (0..roster.len()).map(move |p| (k, p)))
        .collect();
    let results: Vec<JobResult> = jobs
        .par_iter()
        .map(|&(k, p)| {
            let f = &folds[k];
            run_job(
                data,
                roster[p],
                p,
                &model,
                &holdout,
                f,
                &contexts[k],
                cfg,
                seed,
                Some(f.index) == last,
            )
        })
        .collect();

    let mut out = ExperimentOutput {
        report: MetricsReport::default(),
        audits: Vec::new(),
        variograms: Vec::new(),
        composite: Vec::new(),
        final_fold_series: Vec::new(),
    };
    for (f, ctx) in folds.iter().zip(&contexts) {
        out.variograms.push((f.index, ctx.variogram.clone()));
        out.audits.push(AuditRecord {
            fold: f.index,
            predictor: "variogram".into(),
            counts: ctx.audit,
        });
    }
    for r in results {
        out.audits.push(AuditRecord {
            fold: r.outcome.fold,
            predictor: r.outcome.predictor.clone(),
            counts: r.audit,
        });
        out.report.outcomes.push(r.outcome);
        out.composite.extend(r.composite);
        out.final_fold_series.extend(r.series);
    }
    Ok(out)
}

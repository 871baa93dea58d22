//! The subcommands behind the `gwsinterp` binary.
//!
//! Every command reads the run configuration, writes its outputs under the
//! output directory and leaves a `manifest-<command>.txt` beside them.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::cv::{run_experiment, spatial_split, temporal_folds, Dataset, ExperimentOutput, PredictorSpec, SplitSpec};
use crate::error::Error;
use crate::geo::Projection;
use crate::gridstack::GridStack;
use crate::kriging::KrigingSystem;
use crate::metrics::{Metric, MetricsReport, Role};
use crate::preprocess::{curate, CurationConfig, InputKind, PointObservationSet, StorageCoefficients};
use crate::synthetic::{self, SyntheticConfig};

use super::config::{CvConfig, Paths, RunConfig, TimeConfig};
use super::external::evaluate_external;
use super::io;
use super::report::{boxplot_svg, series_svg, slug, write_summary, SeriesRow};

/// A failed command, split by whether the inputs or the computation were at
/// fault.
#[derive(Debug)]
pub enum Failure {
    Validation(Error),
    Runtime(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(e) => write!(f, "{e}"),
            Failure::Runtime(e) => write!(f, "{e}"),
        }
    }
}

pub type CmdResult<T = ()> = std::result::Result<T, Failure>;

fn invalid(e: Error) -> Failure {
    Failure::Validation(e)
}

fn runtime(e: Error) -> Failure {
    Failure::Runtime(e)
}

/// Global options shared by all subcommands.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

impl Context {
    fn config(&self) -> CmdResult<RunConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| invalid(Error::Config("this command needs --config <path>".into())))?;
        RunConfig::load(path).map_err(invalid)
    }

    fn seed(&self, cfg: &RunConfig) -> u64 {
        self.seed.unwrap_or(cfg.cv.seed)
    }

    fn out_dir(&self) -> CmdResult<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| runtime(Error::io(&self.out, e)))?;
        Ok(&self.out)
    }
}

/// Single writer per output file.
fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> crate::Result<()>) -> CmdResult {
    let file = File::create(path).map_err(|e| runtime(Error::io(path, e)))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(runtime)?;
    w.flush().map_err(|e| runtime(Error::io(path, e)))
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    write_file(path, |w| w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e)))
}

/// Declared departures from the reference protocol, recorded in every
/// manifest.
fn deviations(cfg: &RunConfig) -> Vec<(&'static str, String)> {
    let l = &cfg.loss;
    vec![
        (
            "deviation.gap_fill",
            "gaps are filled with the monthly climatology plus linear interpolation of deseasonalized \
             residuals instead of random-forest imputation"
                .into(),
        ),
        (
            "deviation.scaling_fit",
            "min-max scaling of channels and targets is fitted on each fold's training window only and \
             applied unchanged to validation and test months"
                .into(),
        ),
        (
            "deviation.fold_stride",
            format!(
                "expanding-window folds advance by eval_len = {} months; fold k (0-based) trains on months \
                 [0, T - (n_folds - k + 1) * eval_len) with n_folds = {}",
                cfg.cv.eval_len, cfg.cv.n_folds
            ),
        ),
        (
            "deviation.loss_weights",
            format!(
                "composite loss weights are configuration inputs: w_main = {}, w_trend = {}, w_mean = {}, \
                 pool_size = {}",
                l.w_main, l.w_trend, l.w_mean, l.pool_size
            ),
        ),
        (
            "deviation.early_stopping",
            "learned predictors stop early on the last min(eval_len, train/2) months of their training \
             window, never on the fold's validation months"
                .into(),
        ),
        (
            "deviation.segmentation",
            format!(
                "well changes are detected by rolling-window two-sample z statistics (window {}, threshold {}); \
                 the longest segment is kept",
                cfg.curation.segment_window, cfg.curation.segment_z
            ),
        ),
    ]
}

fn write_manifest(ctx: &Context, cfg: &RunConfig, command: &str, extra: &[(String, String)]) -> CmdResult {
    let mut s = String::new();
    let mut kv = |k: &str, v: &str| s.push_str(&format!("{k} = {}\n", v.replace('\n', " ")));
    kv("tool", concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")));
    kv("command", command);
    kv(
        "config_path",
        &ctx.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
    );
    kv("seed", &ctx.seed(cfg).to_string());
    for (k, v) in deviations(cfg) {
        kv(k, &v);
    }
    for (k, v) in extra {
        kv(k, v);
    }
    s.push_str("\n[config]\n");
    s.push_str(&cfg.to_toml());
    write_text(&ctx.out.join(format!("manifest-{command}.txt")), &s)
}

fn load_raw(cfg: &RunConfig) -> CmdResult<PointObservationSet> {
    io::ingest_points(&cfg.paths.points, &Projection::default(), cfg.axis()).map_err(invalid)
}

fn load_curated(cfg: &RunConfig) -> CmdResult<(PointObservationSet, Vec<String>)> {
    let raw = load_raw(cfg)?;
    let sy = match &cfg.paths.storage {
        Some(p) => io::load_storage_coefficients(p).map_err(invalid)?,
        None => StorageCoefficients::new(Vec::new()).map_err(invalid)?,
    };
    let (obs, log) = curate(&raw, &sy, &cfg.curation).map_err(invalid)?;
    Ok((obs, log.lines))
}

fn load_grids(cfg: &RunConfig) -> CmdResult<GridStack> {
    let p = cfg
        .paths
        .grids
        .as_ref()
        .ok_or_else(|| invalid(Error::Config("this command needs paths.grids".into())))?;
    io::ingest_grids(p).map_err(invalid)
}

fn split_and_folds(
    cfg: &RunConfig,
    obs: &PointObservationSet,
    seed: u64,
) -> CmdResult<(SplitSpec, Vec<crate::cv::FoldSpec>)> {
    let ids: Vec<String> = obs.points.iter().map(|p| p.id.clone()).collect();
    let split = spatial_split(&ids, cfg.cv.holdout_fraction, seed).map_err(invalid)?;
    let folds = temporal_folds(obs.n_times(), cfg.cv.n_folds, cfg.cv.eval_len).map_err(invalid)?;
    Ok((split, folds))
}

pub fn ingest(ctx: &Context) -> CmdResult {
    let cfg = ctx.config()?;
    let obs = load_raw(&cfg)?;
    let out = ctx.out_dir()?;
    write_file(&out.join("observations.csv"), |w| io::write_points(&obs, w))?;
    let missing: usize = (0..obs.n_points()).map(|i| obs.n_times() - obs.n_valid(i)).sum();
    println!(
        "{} wells, {} months ({} to {}), {missing} missing values",
        obs.n_points(),
        obs.n_times(),
        obs.axis.start,
        obs.axis.end()
    );
    write_manifest(ctx, &cfg, "ingest", &[])
}

pub fn preprocess(ctx: &Context) -> CmdResult {
    let cfg = ctx.config()?;
    let (obs, log) = load_curated(&cfg)?;
    let out = ctx.out_dir()?;
    write_file(&out.join("curated.csv"), |w| io::write_points(&obs, w))?;
    let mut text = log.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    write_text(&out.join("curation_log.txt"), &text)?;
    println!("{} wells curated, {} log entries", obs.n_points(), log.len());
    write_manifest(ctx, &cfg, "preprocess", &[])
}

fn fit_variogram(
    cfg: &RunConfig,
    obs: &PointObservationSet,
) -> CmdResult<(crate::variogram::EmpiricalVariogram, crate::variogram::VariogramFit)> {
    let realizations: Vec<Vec<f64>> = (0..obs.n_times())
        .map(|t| obs.values_at(t))
        .collect::<crate::Result<_>>()
        .map_err(runtime)?;
    cfg.variogram.estimate(&obs.points, &realizations).map_err(runtime)
}

fn fit_entries(fit: &crate::variogram::VariogramFit) -> Vec<(String, String)> {
    let m = &fit.model;
    let mut v = vec![
        ("variogram.family".into(), format!("{:?}", m.family).to_lowercase()),
        ("variogram.nugget".into(), m.nugget.to_string()),
        ("variogram.partial_sill".into(), m.partial_sill.to_string()),
        ("variogram.range".into(), m.range.to_string()),
        ("variogram.objective".into(), fit.objective.to_string()),
    ];
    if let Some(w) = &fit.warning {
        v.push(("variogram.warning".into(), w.clone()));
    }
    v
}

pub fn variogram(ctx: &Context) -> CmdResult {
    let cfg = ctx.config()?;
    let (obs, _) = load_curated(&cfg)?;
    let (emp, fit) = fit_variogram(&cfg, &obs)?;
    let out = ctx.out_dir()?;
    write_file(&out.join("variogram_empirical.csv"), |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["lag_m", "semivariance", "pairs"])?;
        for k in 0..emp.len() {
            wr.write_record([
                emp.bin_centers[k].to_string(),
                emp.semivariances[k].to_string(),
                emp.pair_counts[k].to_string(),
            ])?;
        }
        wr.flush().map_err(|e| Error::io("variogram_empirical.csv", e))
    })?;
    let text = toml::to_string(&fit).map_err(|e| runtime(Error::Config(e.to_string())))?;
    write_text(&out.join("variogram.toml"), &text)?;
    println!(
        "{:?}: nugget {:.6}, partial sill {:.6}, range {:.1} m",
        fit.model.family, fit.model.nugget, fit.model.partial_sill, fit.model.range
    );
    write_manifest(ctx, &cfg, "variogram", &fit_entries(&fit))
}

pub fn krige(ctx: &Context) -> CmdResult {
    let cfg = ctx.config()?;
    let (obs, _) = load_curated(&cfg)?;
    let area = match &cfg.paths.study_area {
        Some(p) => Some(io::load_polygon(p).map_err(invalid)?),
        None => None,
    };
    let (_, fit) = fit_variogram(&cfg, &obs)?;
    let sys = KrigingSystem::build(&obs.points, fit.model, cfg.kriging).map_err(|e| match e {
        Error::DuplicateLocation(_) => invalid(e),
        e => runtime(e),
    })?;
    let values: Vec<Vec<f64>> = (0..obs.n_times())
        .map(|t| obs.values_at(t))
        .collect::<crate::Result<_>>()
        .map_err(runtime)?;
    let g = cfg.grid;
    let kriged = sys
        .krige_grid(&values, &g, &Projection::default(), area.as_ref())
        .map_err(runtime)?;
    let to_stack = |frames: &[crate::geo::MaskedGrid], name: &str| {
        let mut s = GridStack::new(frames.len(), vec![name.to_string()], g.n_rows, g.n_cols);
        for (t, f) in frames.iter().enumerate() {
            for r in 0..g.n_rows {
                for c in 0..g.n_cols {
                    s.set(t, 0, r, c, f.get(r, c));
                }
            }
        }
        s
    };
    let out = ctx.out_dir()?;
    for (file, frames, name) in [
        ("kriged_values.gstk", &kriged.values, "gws"),
        ("kriged_variance.gstk", &kriged.variances, "variance"),
    ] {
        io::write_grids(&to_stack(frames, name), &out.join(file)).map_err(runtime)?;
    }
    println!(
        "kriged {} months onto a {}x{} grid from {} wells",
        obs.n_times(),
        g.n_rows,
        g.n_cols,
        obs.n_points()
    );
    write_manifest(ctx, &cfg, "krige", &fit_entries(&fit))
}

fn write_experiment(out: &Path, data: &Dataset, split: &SplitSpec, res: &ExperimentOutput) -> CmdResult {
    write_file(&out.join("report.csv"), |w| res.report.write_csv(w))?;
    write_file(&out.join("composite_loss.csv"), |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["fold", "predictor", "split", "value"])?;
        for r in &res.composite {
            wr.write_record([
                r.fold.to_string(),
                r.predictor.clone(),
                r.split.to_string(),
                r.value.to_string(),
            ])?;
        }
        wr.flush().map_err(|e| Error::io("composite_loss.csv", e))
    })?;
    write_file(&out.join("audit.csv"), |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["fold", "predictor", "reads", "holdout_violations", "future_violations"])?;
        for a in &res.audits {
            wr.write_record([
                a.fold.to_string(),
                a.predictor.clone(),
                a.counts.reads.to_string(),
                a.counts.holdout_violations.to_string(),
                a.counts.future_violations.to_string(),
            ])?;
        }
        wr.flush().map_err(|e| Error::io("audit.csv", e))
    })?;
    write_file(&out.join("variograms.csv"), |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "fold",
            "family",
            "nugget",
            "partial_sill",
            "range",
            "objective",
            "status",
        ])?;
        for (fold, v) in &res.variograms {
            match v {
                Ok(f) => wr.write_record([
                    fold.to_string(),
                    format!("{:?}", f.model.family).to_lowercase(),
                    f.model.nugget.to_string(),
                    f.model.partial_sill.to_string(),
                    f.model.range.to_string(),
                    f.objective.to_string(),
                    f.warning.clone().unwrap_or_else(|| "ok".into()),
                ])?,
                Err(e) => wr.write_record([
                    fold.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.clone(),
                ])?,
            }
        }
        wr.flush().map_err(|e| Error::io("variograms.csv", e))
    })?;
    write_file(&out.join("series.csv"), |w| {
        let mut wr = csv::Writer::from_writer(w);
        for r in &res.final_fold_series {
            wr.serialize(SeriesRow {
                predictor: r.predictor.clone(),
                well_id: r.well_id.clone(),
                role: r.role,
                t: r.t,
                month: data.obs.axis.month(r.t).to_string(),
                observed: r.observed,
                predicted: r.predicted,
            })?;
        }
        wr.flush().map_err(|e| Error::io("series.csv", e))
    })?;
    write_file(&out.join("split.csv"), |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["well_id", "role"])?;
        for id in &split.model_ids {
            wr.write_record([id.as_str(), "prediction"])?;
        }
        for id in &split.holdout_ids {
            wr.write_record([id.as_str(), "interpolation"])?;
        }
        wr.flush().map_err(|e| Error::io("split.csv", e))
    })
}

pub fn cv_run(ctx: &Context) -> CmdResult {
    let cfg = ctx.config()?;
    if cfg.predictors.is_empty() {
        return Err(invalid(Error::Config("no [[predictors]] configured".into())));
    }
    let seed = ctx.seed(&cfg);
    let (obs, _) = load_curated(&cfg)?;
    let grids = load_grids(&cfg)?;
    let data = Dataset::new(obs, grids, cfg.grid).map_err(invalid)?;
    let (split, folds) = split_and_folds(&cfg, &data.obs, seed)?;
    let roster: Vec<&dyn PredictorSpec> = cfg.predictors.iter().map(|p| p as &dyn PredictorSpec).collect();
    let res = run_experiment(&data, &roster, &split, &folds, &cfg.experiment(), seed).map_err(runtime)?;
    let out = ctx.out_dir()?;
    write_experiment(out, &data, &split, &res)?;

    let mut extra = vec![
        ("split.model_wells".to_string(), split.model_ids.len().to_string()),
        ("split.holdout_wells".to_string(), split.holdout_ids.len().to_string()),
        ("audit.clean".to_string(), res.audit_is_clean().to_string()),
    ];
    for f in &folds {
        extra.push((
            format!("fold.{}", f.index),
            format!("train {:?} val {:?} test {:?}", f.train, f.val, f.test),
        ));
    }
    for (fold, v) in &res.variograms {
        if let Ok(fit) = v {
            extra.push((
                format!("variogram.fold.{fold}"),
                format!(
                    "{:?} nugget {} partial_sill {} range {}",
                    fit.model.family, fit.model.nugget, fit.model.partial_sill, fit.model.range
                ),
            ));
        }
    }
    write_manifest(ctx, &cfg, "cv-run", &extra)?;

    let failed = res.report.failed_folds();
    for f in &failed {
        eprintln!(
            "fold {} / {} failed: {}",
            f.fold,
            f.predictor,
            f.result.as_ref().err().unwrap()
        );
    }
    for p in res.report.predictors() {
        let (m, s) = res
            .report
            .aggregate(&p, Role::Interpolation, crate::metrics::Split::Test, Metric::R2);
        println!("{p}: interpolation test R² {m:.4} ± {s:.4}");
    }
    if !res.audit_is_clean() {
        return Err(runtime(Error::Leakage(
            "training read data outside its window; see audit.csv".into(),
        )));
    }
    if failed.len() == res.report.outcomes.len() {
        return Err(runtime(Error::InsufficientData("every fold failed".into())));
    }
    Ok(())
}

pub fn evaluate_external_cmd(ctx: &Context, product: &Path, channel: &str, name: &str) -> CmdResult {
    let cfg = ctx.config()?;
    let seed = ctx.seed(&cfg);
    let (obs, _) = load_curated(&cfg)?;
    let stack = io::ingest_grids(product).map_err(invalid)?;
    let (split, folds) = split_and_folds(&cfg, &obs, seed)?;
    let baseline = (cfg.curation.baseline_start, cfg.curation.baseline_end);
    let report =
        evaluate_external(&stack, channel, &obs, &cfg.grid, baseline, &split, &folds, name).map_err(|e| match e {
            Error::Alignment(_) | Error::Config(_) => invalid(e),
            e => runtime(e),
        })?;
    let out = ctx.out_dir()?;
    write_file(&out.join("external_report.csv"), |w| report.write_csv(w))?;
    let extra = vec![
        ("external.product".to_string(), product.display().to_string()),
        ("external.channel".to_string(), channel.to_string()),
    ];
    write_manifest(ctx, &cfg, "evaluate-external", &extra)
}

fn read_report(path: &Path) -> CmdResult<Option<MetricsReport>> {
    if !path.is_file() {
        return Ok(None);
    }
    let f = File::open(path).map_err(|e| invalid(Error::io(path, e)))?;
    MetricsReport::read_csv(std::io::BufReader::new(f))
        .map(Some)
        .map_err(invalid)
}

/// Upper bound on per-well plots of each role.
const MAX_SERIES_PLOTS: usize = 6;

pub fn report(ctx: &Context, run_dir: Option<&Path>) -> CmdResult {
    let dir = run_dir.unwrap_or(&ctx.out);
    let mut merged = MetricsReport::default();
    let mut found = false;
    for name in ["report.csv", "external_report.csv"] {
        if let Some(r) = read_report(&dir.join(name))? {
            found = true;
            merged.outcomes.extend(r.outcomes);
        }
    }
    if !found {
        return Err(invalid(Error::InsufficientData(format!(
            "no results found in {}",
            dir.display()
        ))));
    }
    let out = ctx.out_dir()?;
    write_file(&out.join("summary.csv"), |w| write_summary(&merged, w))?;
    let mut written = 1;
    for role in Role::ALL {
        for m in Metric::ALL {
            if let Some(svg) = boxplot_svg(&merged, role, m) {
                write_text(&out.join(format!("boxplot_{role}_{m}.svg")), &svg)?;
                written += 1;
            }
        }
    }
    let series_path = dir.join("series.csv");
    if series_path.is_file() {
        let mut rd = csv::Reader::from_path(&series_path).map_err(|e| invalid(e.into()))?;
        let rows: Vec<SeriesRow> = rd
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e: csv::Error| invalid(e.into()))?;
        for role in Role::ALL {
            let mut wells: Vec<&str> = Vec::new();
            for r in rows.iter().filter(|r| r.role == role) {
                if !wells.contains(&r.well_id.as_str()) {
                    wells.push(&r.well_id);
                }
            }
            for w in wells.into_iter().take(MAX_SERIES_PLOTS) {
                let sel: Vec<&SeriesRow> = rows.iter().filter(|r| r.well_id == w).collect();
                if let Some(svg) = series_svg(w, &sel) {
                    write_text(&out.join(format!("series_{role}_{}.svg", slug(w))), &svg)?;
                    written += 1;
                }
            }
        }
    }
    println!("wrote {written} report files to {}", out.display());
    Ok(())
}

/// Writes a synthetic dataset (`points.csv`, `grids.gstk`, `holdout.csv`)
/// and a ready-to-run `config.toml` into the output directory.
pub fn synth(ctx: &Context, stations: Option<usize>, months: Option<usize>) -> CmdResult {
    let base = match &ctx.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| invalid(Error::io(p, e)))?;
            #[derive(serde::Deserialize)]
            struct Only {
                synthetic: Option<SyntheticConfig>,
            }
            let only: Only = toml::from_str(&text).map_err(|e| {
                invalid(Error::Parse {
                    path: p.clone(),
                    line: 0,
                    message: e.message().to_string(),
                })
            })?;
            only.synthetic.unwrap_or_default()
        }
        None => SyntheticConfig::default(),
    };
    let mut sc = base;
    if let Some(s) = ctx.seed {
        sc.seed = s;
    }
    if let Some(n) = stations {
        // keep the configured holdout share
        let share = sc.n_holdout as f64 / sc.n_stations.max(1) as f64;
        sc.n_stations = n;
        sc.n_holdout = ((n as f64 * share).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    }
    if let Some(m) = months {
        sc.n_times = m;
    }
    let d = synthetic::generate(&sc).map_err(invalid)?;
    let out = ctx.out_dir()?;
    write_file(&out.join("points.csv"), |w| io::write_points(&d.obs, w))?;
    io::write_grids(&d.grids, &out.join("grids.gstk")).map_err(runtime)?;
    write_file(&out.join("holdout.csv"), |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["well_id", "role"])?;
        for id in &d.model_ids {
            wr.write_record([id.as_str(), "prediction"])?;
        }
        for id in &d.holdout_ids {
            wr.write_record([id.as_str(), "interpolation"])?;
        }
        wr.flush().map_err(|e| Error::io("holdout.csv", e))
    })?;

    let eval_len = 8;
    let n_folds = (sc.n_times / eval_len).saturating_sub(2).clamp(1, 10);
    let axis = d.obs.axis;
    let cfg = RunConfig {
        paths: Paths {
            points: "points.csv".into(),
            grids: Some("grids.gstk".into()),
            storage: None,
            study_area: None,
        },
        grid: d.grid,
        time: Some(TimeConfig {
            start: axis.start,
            n_months: axis.len,
        }),
        curation: CurationConfig {
            input: InputKind::StorageAnomaly,
            baseline_start: axis.start,
            baseline_end: axis.end(),
            ..CurationConfig::default()
        },
        cv: CvConfig {
            n_folds,
            eval_len,
            holdout_fraction: sc.n_holdout as f64 / sc.n_stations as f64,
            seed: sc.seed,
        },
        variogram: Default::default(),
        kriging: Default::default(),
        loss: Default::default(),
        predictors: default_roster(),
        synthetic: Some(sc),
    };
    write_text(&out.join("config.toml"), &cfg.to_toml())?;
    println!(
        "synthetic dataset: {} stations, {} months, {}x{} grid",
        d.obs.n_points(),
        d.obs.n_times(),
        d.grid.n_rows,
        d.grid.n_cols
    );
    Ok(())
}

fn default_roster() -> Vec<crate::models::PredictorConfig> {
    use crate::models::ridge::RidgeConfig;
    use crate::models::{PredictorConfig, PredictorKind};
    vec![
        PredictorConfig::new(PredictorKind::Climatology),
        PredictorConfig::new(PredictorKind::Persistence),
        PredictorConfig::new(PredictorKind::Ridge(RidgeConfig {
            elevation: Some("elevation".into()),
            ..RidgeConfig::default()
        })),
        PredictorConfig::new(PredictorKind::RbfQuantile(Default::default())),
    ]
}

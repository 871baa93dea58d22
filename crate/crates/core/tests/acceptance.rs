//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gwsinterp::cv::{
    run_experiment, spatial_split, temporal_folds, Dataset, ExperimentConfig, PredictorSpec, SplitSpec,
};
use gwsinterp::geo::{GeoPoint, MaskedGrid, Projection};
use gwsinterp::idw::idw_point;
use gwsinterp::kriging::{augmented_matrix, KrigingMode, KrigingSystem};
use gwsinterp::metrics::{composite_loss, masked_mse, r2, CompositeLossConfig, Metric, Role, Split};
use gwsinterp::models::net::gradient_check;
use gwsinterp::models::{
    Activation, DataAccess, Interpolation, Predictor, PredictorConfig, PredictorKind, QuantileNet, RbfQuantileConfig,
    RidgeConfig, TrainWindow,
};
use gwsinterp::synthetic::{generate, SyntheticConfig, SyntheticDataset};
use gwsinterp::variogram::{
    default_max_lag, empirical_variogram, fit, EmpiricalVariogram, Family, VariogramConfig, VariogramModel,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<GeoPoint> {
    let proj = Projection::default();
    (0..n)
        .map(|i| {
            let x = rng.gen_range(400_000.0..500_000.0);
            let y = rng.gen_range(2_500_000.0..2_600_000.0);
            GeoPoint::from_projected(format!("s{i:03}"), x, y, &proj)
        })
        .collect()
}

fn random_model(rng: &mut ChaCha8Rng, nugget: f64) -> VariogramModel {
    let fam = Family::ALL[rng.gen_range(0..Family::ALL.len())];
    VariogramModel::new(fam, nugget, rng.gen_range(0.5..2.0), rng.gen_range(10_000.0..80_000.0)).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_sum: f64 = 0.0;
    let mut worst_exact: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(3..=100);
        let pts = random_points(&mut rng, n);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let nugget = if rng.gen_bool(0.5) {
            0.0
        } else {
            rng.gen_range(0.01..0.5)
        };
        let model = random_model(&mut rng, nugget);
        let sys = KrigingSystem::build(&pts, model, KrigingMode::Global).unwrap();
        for target in random_points(&mut rng, 5) {
            let w = sys.weights(&target).unwrap();
            worst_sum = worst_sum.max((w.weights.iter().sum::<f64>() - 1.0).abs());
        }
        if nugget == 0.0 {
            for (p, v) in pts.iter().zip(&values) {
                let e = sys.krige_point(&values, p).unwrap();
                worst_exact = worst_exact.max((e.value - v).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst_sum < 1e-9 && worst_exact < 1e-8 && secs < 10.0,
        format!("max |sum w - 1| {worst_sum:.2e}, max station error {worst_exact:.2e}, {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_dense: f64 = 0.0;
    let mut worst_local: f64 = 0.0;
    for n in [5, 20, 100] {
        let pts = random_points(&mut rng, n);
        let model = random_model(&mut rng, 0.1);
        let global = KrigingSystem::build(&pts, model, KrigingMode::Global).unwrap();
        let local = KrigingSystem::build(
            &pts,
            model,
            KrigingMode::Local {
                max_neighbors: n,
                search_radius: f64::INFINITY,
            },
        )
        .unwrap();
        let refs: Vec<&GeoPoint> = pts.iter().collect();
        let a = DMatrix::from_row_slice(n + 1, n + 1, &augmented_matrix(&refs, &model));
        let lu = a.lu();
        for target in random_points(&mut rng, 10) {
            let mut rhs: Vec<f64> = pts.iter().map(|p| model.gamma(p.distance(&target)).unwrap()).collect();
            rhs.push(1.0);
            let dense = lu.solve(&DVector::from_vec(rhs)).unwrap();
            let w = global.weights(&target).unwrap();
            let got = DVector::from_iterator(n + 1, w.weights.iter().copied().chain([w.lagrange]));
            worst_dense = worst_dense.max((&got - &dense).norm() / dense.norm());
            let l = local.weights(&target).unwrap();
            let lv = DVector::from_iterator(n + 1, l.weights.iter().copied().chain([l.lagrange]));
            worst_local = worst_local.max((&lv - &got).norm() / got.norm());
        }
    }
    (
        worst_dense < 1e-8 && worst_local < 1e-8,
        format!("max rel. error vs dense solve {worst_dense:.2e}, local vs global {worst_local:.2e}"),
    )
}

/// All-pairs empirical variogram with the same binning rule.
fn brute_force(p: &[GeoPoint], z: &[f64], n_bins: usize, max_lag: f64) -> EmpiricalVariogram {
    let w = max_lag / n_bins as f64;
    let mut sd = vec![0.0; n_bins];
    let mut sq = vec![0.0; n_bins];
    let mut cnt = vec![0u64; n_bins];
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            let d = (p[i].x - p[j].x).hypot(p[i].y - p[j].y);
            if d > max_lag {
                continue;
            }
            let b = ((d / w) as usize).min(n_bins - 1);
            sd[b] += d;
            sq[b] += (z[i] - z[j]) * (z[i] - z[j]);
            cnt[b] += 1;
        }
    }
    let keep: Vec<usize> = (0..n_bins).filter(|&b| cnt[b] > 0).collect();
    EmpiricalVariogram {
        bin_centers: keep.iter().map(|&b| sd[b] / cnt[b] as f64).collect(),
        semivariances: keep.iter().map(|&b| sq[b] / (2.0 * cnt[b] as f64)).collect(),
        pair_counts: keep.iter().map(|&b| cnt[b]).collect(),
    }
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for fam in Family::ALL {
        let truth = VariogramModel::new(fam, 0.1, 0.9, 50_000.0).unwrap();
        let centers: Vec<f64> = (1..=30).map(|k| k as f64 * 3_000.0).collect();
        let emp = EmpiricalVariogram {
            semivariances: centers.iter().map(|&h| truth.gamma(h).unwrap()).collect(),
            pair_counts: vec![100; centers.len()],
            bin_centers: centers,
        };
        let m = fit(&emp, fam).unwrap().model;
        for (got, want) in [(m.nugget, 0.1), (m.partial_sill, 0.9), (m.range, 50_000.0)] {
            worst = worst.max((got - want).abs() / want);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut exact = true;
    for n in [2, 17, 64, 200] {
        let pts = random_points(&mut rng, n);
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let lag = default_max_lag(&pts);
        let got = empirical_variogram(&pts, &z, 12, lag).ok();
        let want = brute_force(&pts, &z, 12, lag);
        exact &= match got {
            Some(g) => g == want,
            None => want.bin_centers.is_empty(),
        };
    }
    (
        worst < 0.01 && exact,
        format!("max parameter rel. error {worst:.2e}, brute-force match {exact}"),
    )
}

fn synthetic() -> SyntheticDataset {
    generate(&SyntheticConfig::default()).unwrap()
}

fn criterion_4(d: &SyntheticDataset) -> Outcome {
    let start = Instant::now();
    let index = |ids: &[String]| -> Vec<usize> { ids.iter().map(|id| d.obs.index_of(id).unwrap()).collect() };
    let train = index(&d.model_ids);
    let hold = index(&d.holdout_ids);
    let pts: Vec<GeoPoint> = train.iter().map(|&i| d.obs.points[i].clone()).collect();
    let values: Vec<Vec<f64>> = (0..d.obs.n_times())
        .map(|t| train.iter().map(|&i| d.obs.value(i, t).unwrap()).collect())
        .collect();
    let (_, vf) = VariogramConfig::default().estimate(&pts, &values).unwrap();
    let sys = KrigingSystem::build(&pts, vf.model, KrigingMode::Global).unwrap();
    let (mut k, mut idw, mut obs) = (Vec::new(), Vec::new(), Vec::new());
    for &h in &hold {
        let target = &d.obs.points[h];
        let w = sys.weights(target).unwrap();
        for (t, v) in values.iter().enumerate() {
            k.push(w.apply(v));
            idw.push(idw_point(&pts, v, target, 2.0).unwrap());
            obs.push(d.obs.value(h, t).unwrap());
        }
    }
    let (rk, ri) = (r2(&k, &obs).unwrap(), r2(&idw, &obs).unwrap());
    let secs = start.elapsed().as_secs_f64();
    (
        rk - ri >= 0.05 && rk > 0.5 && secs < 60.0,
        format!(
            "kriging R² {rk:.4}, IDW R² {ri:.4}, gain {:.4} (need ≥ 0.05 and R² > 0.5), {secs:.2} s",
            rk - ri
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut identical: f64 = 0.0;
    let mut checked = 0;
    while checked < 100 {
        let (rows, cols) = (rng.gen_range(1..8), rng.gen_range(1..8));
        let n = rows * cols;
        let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.8)).collect();
        if !mask.iter().any(|&m| m) {
            continue;
        }
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let p = MaskedGrid::from_parts(rows, cols, &a, &mask).unwrap();
        let t = MaskedGrid::from_parts(rows, cols, &b, &mask).unwrap();
        let main_only = CompositeLossConfig {
            w_main: 1.0,
            w_trend: 0.0,
            w_mean: 0.0,
            pool_size: 3,
        };
        let c = composite_loss(&[p.clone()], &[t.clone()], &main_only).unwrap();
        worst = worst.max((c - masked_mse(&p, &t).unwrap()).abs());
        let any = CompositeLossConfig {
            w_main: rng.gen_range(0.0..3.0),
            w_trend: rng.gen_range(0.0..3.0),
            w_mean: rng.gen_range(0.1..3.0),
            pool_size: 3,
        };
        identical = identical.max(composite_loss(&[p.clone()], &[p], &any).unwrap().abs());
        checked += 1;
    }
    let p = MaskedGrid::filled(2, 2, &[2.0, 0.0, 0.0, 0.0]).unwrap();
    let t = MaskedGrid::filled(2, 2, &[0.0; 4]).unwrap();
    let hand = composite_loss(
        &[p],
        &[t],
        &CompositeLossConfig {
            w_main: 1.0,
            w_trend: 0.0,
            w_mean: 1.0,
            pool_size: 3,
        },
    )
    .unwrap();
    (
        worst <= 1e-12 && identical == 0.0 && hand == 1.25,
        format!("max |loss - masked mse| {worst:.2e}, identical-input loss {identical}, 2x2 example {hand}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut redrawn = 0;
    let configs = 24;
    for k in 0..configs {
        let n_in = rng.gen_range(1..6);
        let hidden: Vec<usize> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..9)).collect();
        let mut levels: Vec<f64> = (0..rng.gen_range(1..5)).map(|_| rng.gen_range(0.05..0.95)).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let act = if k % 2 == 0 { Activation::Tanh } else { Activation::Relu };
        let net = QuantileNet::new(n_in, &hidden, &levels, act, k as u64).unwrap();
        let mut checked = 0;
        while checked < 3 {
            let x: Vec<f64> = (0..n_in).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let y = rng.gen_range(-2.0..2.0);
            // finite differences are meaningless across a ReLU or pinball kink
            if net.kink_distance(&x, y) < 1e-3 {
                redrawn += 1;
                continue;
            }
            worst = worst.max(gradient_check(&net, &x, y, 1e-5));
            checked += 1;
        }
    }
    (
        worst < 1e-4,
        format!("{configs} configurations, max rel. error {worst:.2e}, {redrawn} samples redrawn at kinks"),
    )
}

fn criterion_7() -> Outcome {
    let folds = temporal_folds(182, 10, 8).unwrap();
    let last = folds.last().unwrap();
    let shape = (last.train.len(), last.val.len(), last.test.len());
    let disjoint = folds.windows(2).all(|w| w[0].test.end <= w[1].test.start);
    let nested = folds
        .windows(2)
        .all(|w| w[1].train.start <= w[0].train.start && w[0].train.end < w[1].train.end);
    let ids: Vec<String> = (0..1023).map(|i| format!("w{i}")).collect();
    let holdout = spatial_split(&ids, 0.08, 0).unwrap().holdout_ids.len();
    (
        folds.len() == 10 && shape == (166, 8, 8) && last.test.end == 182 && disjoint && nested && holdout == 82,
        format!(
            "final fold {}/{}/{}, disjoint tests {disjoint}, nested trains {nested}, holdout {holdout} of 1023",
            shape.0, shape.1, shape.2
        ),
    )
}

fn roster() -> Vec<PredictorConfig> {
    let mut rbf = PredictorConfig::new(PredictorKind::RbfQuantile(RbfQuantileConfig {
        site_channels: false,
        ..RbfQuantileConfig::default()
    }));
    rbf.name = Some("rbf_coords".into());
    vec![
        PredictorConfig::new(PredictorKind::Climatology),
        PredictorConfig::new(PredictorKind::Persistence),
        PredictorConfig::new(PredictorKind::Ridge(RidgeConfig::default())),
        rbf,
    ]
}

fn experiment(d: &SyntheticDataset, extra: Option<&dyn PredictorSpec>) -> gwsinterp::cv::ExperimentOutput {
    let data = Dataset::new(d.obs.clone(), d.grids.clone(), d.grid).unwrap();
    let split = SplitSpec {
        holdout_fraction: d.holdout_ids.len() as f64 / d.obs.n_points() as f64,
        seed: 0,
        holdout_ids: d.holdout_ids.clone(),
        model_ids: d.model_ids.clone(),
    };
    let folds = temporal_folds(d.obs.n_times(), 5, 8).unwrap();
    let cfgs = roster();
    let mut specs: Vec<&dyn PredictorSpec> = cfgs.iter().map(|c| c as &dyn PredictorSpec).collect();
    specs.extend(extra);
    run_experiment(&data, &specs, &split, &folds, &ExperimentConfig::default(), 0).unwrap()
}

fn criterion_8(out: &gwsinterp::cv::ExperimentOutput) -> Outcome {
    let drop = |p: &str| {
        let a = out.report.aggregate(p, Role::Prediction, Split::Train, Metric::R2).0;
        let b = out.report.aggregate(p, Role::Prediction, Split::Test, Metric::R2).0;
        (a, b, a - b)
    };
    let (rt, rs, rd) = drop("rbf_coords");
    let (gt, gs, gd) = drop("ridge");
    (
        rd.is_finite() && gd.is_finite() && rd > 0.0 && rd >= 2.0 * gd,
        format!(
            "rbf (coordinates only) R² {rt:.3} -> {rs:.3} (drop {rd:.3}); ridge patch R² {gt:.3} -> {gs:.3} (drop {gd:.3})"
        ),
    )
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_gwsinterp");
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| -> bool {
        Command::new(bin)
            .args(args)
            .current_dir(dir.path())
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
    };
    let ok = run(&["synth", "--seed", "9", "--out", "data"])
        && run(&["cv-run", "--config", "data/config.toml", "--out", "a"])
        && run(&["cv-run", "--config", "data/config.toml", "--out", "b"]);
    if !ok {
        return (false, "cv-run failed".into());
    }
    let read = |p: &Path| std::fs::read(dir.path().join(p)).unwrap_or_default();
    let mut same = Vec::new();
    for f in ["report.csv", "composite_loss.csv", "series.csv"] {
        let (a, b) = (read(&Path::new("a").join(f)), read(&Path::new("b").join(f)));
        same.push((f, !a.is_empty() && a == b, a.len()));
    }
    (
        same.iter().all(|s| s.1),
        same.iter()
            .map(|(f, s, n)| format!("{f} identical {s} ({n} bytes)"))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

/// Reads a holdout well and a month after the training end while fitting.
struct Peeker;

struct Constant;

impl Predictor for Constant {
    fn name(&self) -> &str {
        "peeker"
    }
    fn predict(&self, _: &dyn DataAccess, _: usize, _: usize) -> gwsinterp::Result<f64> {
        Ok(0.0)
    }
}

impl PredictorSpec for Peeker {
    fn label(&self) -> String {
        "peeker".into()
    }
    fn interpolation(&self) -> Interpolation {
        Interpolation::Direct
    }
    fn fit(&self, data: &dyn DataAccess, window: &TrainWindow, _: u64) -> gwsinterp::Result<Box<dyn Predictor>> {
        let outsider = (0..data.n_wells()).find(|w| !window.wells.contains(w)).unwrap();
        let _ = data.target(outsider, 0);
        let _ = data.target(window.wells[0], window.end);
        Ok(Box::new(Constant))
    }
}

fn criterion_10(clean: &gwsinterp::cv::ExperimentOutput, leaky: &gwsinterp::cv::ExperimentOutput) -> Outcome {
    let folds = clean.variograms.len();
    let audited = clean.audits.len();
    let reads: u64 = clean.audits.iter().map(|a| a.counts.reads).sum();
    let caught = leaky
        .audits
        .iter()
        .filter(|a| a.predictor == "peeker")
        .all(|a| a.counts.holdout_violations > 0 && a.counts.future_violations > 0);
    let others_clean = leaky
        .audits
        .iter()
        .filter(|a| a.predictor != "peeker")
        .all(|a| a.counts.is_clean());
    (
        clean.audit_is_clean() && reads > 0 && caught && others_clean,
        format!(
            "{audited} audited fits over {folds} folds, {reads} reads, no violations {}; planted leak detected {caught}",
            clean.audit_is_clean()
        ),
    )
}

fn main() {
    let d = synthetic();
    let clean = experiment(&d, None);
    let leaky = experiment(&d, Some(&Peeker));
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "kriging exactness and unbiasedness", criterion_1()),
        (2, "solver oracle equivalence", criterion_2()),
        (3, "variogram round trip", criterion_3()),
        (4, "synthetic field skill", criterion_4(&d)),
        (5, "composite loss reductions", criterion_5()),
        (6, "gradient checks", criterion_6()),
        (7, "protocol shape", criterion_7()),
        (8, "overfitting gap", criterion_8(&clean)),
        (9, "determinism", criterion_9()),
        (10, "no-leakage audit", criterion_10(&clean, &leaky)),
    ];
    let mut failed = 0;
    for (k, name, (ok, detail)) in &results {
        println!(
            "criterion {k:>2} {}: {name}: {detail}",
            if *ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failed += 1;
        }
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

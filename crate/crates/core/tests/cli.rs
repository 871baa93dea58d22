use std::path::Path;
use std::process::{Command, Output};

use gwsinterp::gridstack::GridStack;
use gwsinterp::pipeline::RunConfig;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwsinterp"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture(dir: &Path, stations: &str, months: &str) {
    let o = run(
        dir,
        &["synth", "--stations", stations, "--months", months, "--out", "data"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn missing_config_is_a_validation_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["cv-run", "--config", "nowhere/missing.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere/missing.toml"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_and_flag_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["interpolate"][..], &["krige", "--frobnicate"][..]] {
        let o = run(dir.path(), args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).to_lowercase().contains("usage"), "{}", stderr(&o));
    }
}

#[test]
fn report_on_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("empty")).unwrap();
    let o = run(dir.path(), &["report", "--run", "empty", "--out", "rep"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no results found"), "{}", stderr(&o));
}

#[test]
fn krige_on_ten_station_fixture() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), "10", "24");
    let o = run(dir.path(), &["krige", "--config", "data/config.toml", "--out", "k"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = RunConfig::load(&dir.path().join("data/config.toml")).unwrap();
    let (rows, cols) = (cfg.grid.n_rows, cfg.grid.n_cols);
    for (file, channel) in [("kriged_values.gstk", "gws"), ("kriged_variance.gstk", "variance")] {
        let g = GridStack::read(&dir.path().join("k").join(file)).unwrap();
        assert_eq!(g.dims(), [24, 1, rows, cols], "{file}");
        assert_eq!(g.channels(), [channel.to_string()]);
        assert!((0..24).all(|t| g.get(t, 0, 0, 0).is_some_and(f64::is_finite)));
    }
    let manifest = std::fs::read_to_string(dir.path().join("k/manifest-krige.txt")).unwrap();
    for key in [
        "gap_fill",
        "scaling_fit",
        "fold_stride",
        "loss_weights",
        "early_stopping",
        "segmentation",
    ] {
        assert!(manifest.contains(&format!("deviation.{key} = ")), "{key}");
    }
}

#[test]
fn cv_run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), "30", "40");
    let o = run(dir.path(), &["cv-run", "--config", "data/config.toml", "--out", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["report.csv", "audit.csv", "manifest-cv-run.txt"] {
        assert!(dir.path().join("run").join(f).is_file(), "{f}");
    }
    let o = run(dir.path(), &["report", "--run", "run", "--out", "rep"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = std::fs::read_dir(dir.path().join("rep"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"summary.csv".to_string()));
    assert!(
        names.iter().any(|n| n.starts_with("boxplot_") && n.ends_with(".svg")),
        "{names:?}"
    );
    assert!(
        names.iter().any(|n| n.starts_with("series_") && n.ends_with(".svg")),
        "{names:?}"
    );
    let svg = std::fs::read_to_string(
        dir.path()
            .join("rep")
            .join(names.iter().find(|n| n.ends_with(".svg")).unwrap()),
    )
    .unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

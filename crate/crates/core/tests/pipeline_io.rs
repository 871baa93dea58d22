use std::path::Path;

use gwsinterp::geo::Projection;
use gwsinterp::gridstack::GridStack;
use gwsinterp::pipeline::{ingest_grids, ingest_points, write_grids, write_points, RunConfig};
use gwsinterp::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_file_round_trip_is_bitwise(
        t in 1usize..4, c in 1usize..3, h in 1usize..5, w in 1usize..5,
        seed in any::<u64>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let n = t * c * h * w;
        let data: Vec<f32> = (0..n)
            .map(|i| {
                let bits = (seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64) >> 32) as u32;
                if bits % 5 == 0 { f32::NAN } else { f32::from_bits(bits & 0x3FFF_FFFF) }
            })
            .collect();
        let channels = (0..c).map(|k| format!("ch{k}")).collect();
        let stack = GridStack::from_raw([t, c, h, w], channels, data).unwrap();
        let path = dir.path().join("s.gstk");
        write_grids(&stack, &path).unwrap();
        let back = ingest_grids(&path).unwrap();
        prop_assert_eq!(back.dims(), stack.dims());
        prop_assert_eq!(back.channels(), stack.channels());
        let a: Vec<u32> = stack.raw().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = back.raw().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn truncated_grid_file_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let stack = GridStack::new(2, vec!["gws".into()], 3, 3);
    let path = dir.path().join("s.gstk");
    write_grids(&stack, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
    assert!(matches!(ingest_grids(&path), Err(Error::CorruptFile(_))));
}

#[test]
fn points_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    std::fs::write(
        &path,
        "well_id,lon,lat,date,value\n\
         a,90.1,23.2,2003-01,1.5\n\
         b,90.4,23.6,2003-01,\n\
         a,90.1,23.2,2003-03,-0.5\n\
         b,90.4,23.6,2003-02,2.0\n",
    )
    .unwrap();
    let proj = Projection::default();
    let obs = ingest_points(&path, &proj, None).unwrap();
    assert_eq!(obs.n_points(), 2);
    assert_eq!(obs.n_times(), 3);
    assert_eq!(obs.value(0, 0), Some(1.5));
    assert_eq!(obs.value(0, 1), None);
    assert_eq!(obs.value(1, 0), None);
    assert_eq!(obs.value(1, 1), Some(2.0));

    let out = dir.path().join("q.csv");
    write_points(&obs, std::fs::File::create(&out).unwrap()).unwrap();
    let again = ingest_points(&out, &proj, Some(obs.axis)).unwrap();
    assert_eq!(again.points, obs.points);
    assert_eq!(again.axis, obs.axis);
    for w in 0..2 {
        for t in 0..3 {
            assert_eq!(again.value(w, t), obs.value(w, t));
        }
    }
}

#[test]
fn duplicate_point_rows_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    std::fs::write(
        &path,
        "well_id,lon,lat,date,value\na,90.1,23.2,2003-01,1\na,90.1,23.2,2003-01,2\n",
    )
    .unwrap();
    match ingest_points(&path, &Projection::default(), None) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn config_paths_resolve_against_its_directory() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("cfg");
    std::fs::create_dir_all(sub.join("data")).unwrap();
    std::fs::write(sub.join("data/points.csv"), "well_id,lon,lat,date,value\n").unwrap();
    let text = "[paths]\npoints = \"data/points.csv\"\n\n[grid]\nlon_min = 90.0\nlat_min = 23.0\n\
                cell_size = 0.25\nn_cols = 4\nn_rows = 4\n\n[curation]\ninput = \"storage_anomaly\"\n";
    std::fs::write(sub.join("run.toml"), text).unwrap();
    let cfg = RunConfig::load(&sub.join("run.toml")).unwrap();
    assert_eq!(cfg.paths.points, sub.join("data/points.csv"));
    assert!(cfg.paths.points.is_file());

    std::fs::write(sub.join("bad.toml"), text.replace("data/points.csv", "nope.csv")).unwrap();
    let err = RunConfig::load(&sub.join("bad.toml")).unwrap_err().to_string();
    assert!(err.contains(&Path::new("nope.csv").display().to_string()), "{err}");
}

use std::fs;

use thermoscan::synth::{plan_benchmark, render_benchmark, BenchmarkSpec, Manifest, GENERATOR};
use thermoscan::{CameraModel, CaptureSchedule, FrameName, SceneConfig, ThermalSeries};

#[test]
fn fifty_fifty_plan_counts() {
    let plan = plan_benchmark(&BenchmarkSpec::new(50, 50, vec![1.5], 1), &SceneConfig::default());
    assert_eq!(plan.len(), 100);
    assert_eq!(plan.iter().filter(|p| p.1.mine_present).count(), 50);
    let ids: std::collections::BTreeSet<_> = plan.iter().map(|p| p.0.clone()).collect();
    assert_eq!(ids.len(), 100);
}

#[test]
fn rendered_tree_matches_manifest_and_is_deterministic() {
    let schedule = CaptureSchedule::default();
    let spec = BenchmarkSpec::new(2, 1, vec![1.5, 2.0], 11);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cam = CameraModel::default();
    let ma = render_benchmark(&spec, &SceneConfig::default(), &cam, &schedule, a.path()).unwrap();
    let mb = render_benchmark(&spec, &SceneConfig::default(), &cam, &schedule, b.path()).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(ma.generator, GENERATOR);
    assert_eq!(ma.series.len(), 6);
    assert_eq!(Manifest::load(a.path().join("manifest.json")).unwrap(), ma);

    let raw: serde_json::Value = serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    let keys: Vec<_> = raw["series"][0].as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["altitude_m", "center_px", "mine_present", "radius_px", "seed", "series_id"]);

    for entry in &ma.series {
        let dir = a.path().join(&entry.series_id);
        let mut names: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert_eq!(names.len(), 44);
        for name in &names {
            let parsed = FrameName::parse(std::path::Path::new(name)).unwrap();
            assert_eq!(parsed.location_id, entry.series_id);
            assert_eq!(fs::read(dir.join(name)).unwrap(), fs::read(b.path().join(&entry.series_id).join(name)).unwrap());
        }
        let series = ThermalSeries::load_dir(&dir, entry.altitude_m).unwrap();
        assert_eq!(series.len(), 44);
        assert!(series.frames().iter().all(|f| !(11..17).contains(&chrono::Timelike::hour(&f.timestamp))));
        assert_eq!(entry.center_px.is_some(), entry.mine_present);
    }
}

#[test]
fn empty_benchmark_has_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = render_benchmark(
        &BenchmarkSpec::new(0, 0, vec![1.5], 3),
        &SceneConfig::default(),
        &CameraModel::default(),
        &CaptureSchedule::default(),
        dir.path(),
    )
    .unwrap();
    assert!(m.series.is_empty());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn unwritable_root_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, b"x").unwrap();
    let err = render_benchmark(
        &BenchmarkSpec::new(1, 0, vec![1.5], 3),
        &SceneConfig::default(),
        &CameraModel::default(),
        &CaptureSchedule::default(),
        &file,
    );
    assert!(matches!(err, Err(thermoscan::Error::Io { .. })));
}

//! Renders a synthetic benchmark in memory and prints detection rates.
//!
//! Usage: `cargo run --release --example benchmark [config.toml] [per_class]`

use rayon::prelude::*;
use thermoscan::synth::{plan_benchmark, render_series, BenchmarkSpec};
use thermoscan::{run_pipeline, ConfusionMatrix, PipelineConfig};

fn main() -> thermoscan::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let config = match args.get(1) {
        Some(p) if p != "-" => PipelineConfig::load(p)?,
        _ => PipelineConfig::default(),
    };
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(7);
    let spec = BenchmarkSpec::new(n, n, vec![1.0, 1.5, 2.0], seed);
    let plan = plan_benchmark(&spec, &config.scene);
    let results: Vec<_> = plan
        .par_iter()
        .map(|(id, scene, alt)| {
            let schedule = thermoscan::CaptureSchedule { altitude_m: *alt, ..config.schedule.clone() };
            let (series, truth) = render_series(id, scene, &config.camera, &schedule)?;
            let out = run_pipeline(&series, &config, Some(scene.seed))?;
            Ok((*alt, truth.mine_present, out.report))
        })
        .collect::<thermoscan::Result<Vec<_>>>()?;
    for alt in &spec.altitudes {
        let mut cm = ConfusionMatrix::default();
        for (a, truth, report) in results.iter().filter(|r| r.0 == *alt) {
            cm.record(report.verdict.is_positive(), *truth);
            if std::env::var_os("VERBOSE").is_some() {
                let r = report.best_region.as_ref();
                println!(
                    "  {a} truth={truth} score={:.3} area={:?} circ={:.3?} expected={:.0}",
                    report.score,
                    r.map(|r| r.area_px),
                    r.map(|r| r.circularity),
                    report.expected_area_px
                );
            }
        }
        println!("altitude {alt}: tp_rate {:.3} fp_rate {:.3} {cm:?}", cm.tp_rate(), cm.fp_rate());
    }
    Ok(())
}

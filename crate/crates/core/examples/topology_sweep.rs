//! Co-located versus distributed subarrays of the LoS scene, K = 12.

use dmimo::config::{ExperimentConfig, Metric, Source, Spacing, Sweep};
use dmimo::experiment::run_experiment;
use dmimo::{AllocationMode, ScenePreset};

fn main() -> dmimo::Result<()> {
    let cfg = ExperimentConfig {
        source: Source::Preset { preset: ScenePreset::Los },
        user_spacing: Spacing::default(),
        sweep: Sweep { m: vec![16, 32], n: vec![1, 2, 4], snr_db: vec![10.0], k: vec![12] },
        trials: 200,
        seed: 7,
        metrics: vec![Metric::Svs, Metric::Zf],
        allocation_mode: AllocationMode::PerSlice,
    };
    let res = run_experiment(&cfg)?;
    println!("{:>4} {:>3} {:>12} {:>10}", "M", "N", "median SVS", "mean ZF");
    for &m in &cfg.sweep.m {
        for &n in &cfg.sweep.n {
            let s = res.aggregate(12, m, n, 10.0, Metric::Svs).unwrap();
            let z = res.aggregate(12, m, n, 10.0, Metric::Zf).unwrap();
            println!("{:>4} {:>3} {:>12.2} {:>10.2}", m, n, s.median.unwrap(), z.mean.unwrap());
        }
    }
    Ok(())
}

//! Users given power by ZF and by DPC versus SNR and array size.

use dmimo::config::{ExperimentConfig, Metric, Source, Spacing, Sweep};
use dmimo::experiment::run_experiment;
use dmimo::{AllocationMode, ScenePreset};

fn main() -> dmimo::Result<()> {
    let snrs = vec![-10.0, 0.0, 10.0, 20.0];
    let cfg = ExperimentConfig {
        source: Source::Preset { preset: ScenePreset::Los },
        user_spacing: Spacing::default(),
        sweep: Sweep { m: vec![16, 64, 128], n: vec![4], snr_db: snrs.clone(), k: vec![12] },
        trials: 100,
        seed: 8,
        metrics: vec![Metric::Fairness, Metric::FairnessDpc],
        allocation_mode: AllocationMode::PerSlice,
    };
    let res = run_experiment(&cfg)?;
    for &m in &cfg.sweep.m {
        print!("M={m:<4}");
        for &rho in &snrs {
            let zf = res.aggregate(12, m, 4, rho, Metric::Fairness).unwrap().mean.unwrap();
            let dpc = res.aggregate(12, m, 4, rho, Metric::FairnessDpc).unwrap().mean.unwrap();
            print!("  {rho:>5} dB: zf {zf:>5.2} dpc {dpc:>5.2}");
        }
        println!();
    }
    Ok(())
}

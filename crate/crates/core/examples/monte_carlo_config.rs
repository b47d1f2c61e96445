//! Run an experiment from a JSON config and write results.csv and aggregates.json.
//!
//!     cargo run --release --example monte_carlo_config -- examples/configs/los_capacity.json out/

use dmimo::config::ExperimentConfig;
use dmimo::experiment::run_experiment;

fn main() -> dmimo::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg_path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/los_capacity.json").into());
    let out = args.next().unwrap_or_else(|| "results".into());
    let cfg = ExperimentConfig::from_path(&cfg_path)?;
    let res = run_experiment(&cfg)?;
    res.write_dir(&out)?;
    for a in &res.aggregates {
        println!(
            "K={} M={} N={} rho={} {}: mean {:.3} ({} valid, {} degenerate)",
            a.k,
            a.m,
            a.n,
            a.rho_db,
            a.metric,
            a.mean.unwrap_or(f64::NAN),
            a.valid,
            a.degenerate
        );
    }
    if res.nonconverged_dpc > 0 {
        println!("{} DPC solves hit the iteration cap", res.nonconverged_dpc);
    }
    println!("{} rows written to {out}", res.rows.len());
    Ok(())
}

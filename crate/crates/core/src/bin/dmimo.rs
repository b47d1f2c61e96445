use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dmimo::config::ExperimentConfig;
use dmimo::experiment::{cdf_table, read_rows_csv, run_experiment_threads, write_cdf_csv};
use dmimo::io::write_channel_file;
use dmimo::metrics::AllocationMode;
use dmimo::stats::DEFAULT_CDF_POINTS;
use dmimo::synth::{gen_geometric, gen_trajectory_users, Scene, ScenePreset};
use dmimo::{normalize, RngHandle};

#[derive(Parser)]
#[command(name = "dmimo", version, about = "Distributed massive MIMO user-separability toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a channel tensor from a scene and write it as a channel file.
    Synth {
        /// Scene JSON; defaults to the preset when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "los")]
        preset: ScenePreset,
        #[arg(long, default_value_t = 12)]
        users: usize,
        #[arg(long, default_value_t = 0.1)]
        min_spacing: f64,
        #[arg(long)]
        max_spacing: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Normalize per user before writing.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Monte-Carlo experiment and write results.csv and aggregates.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        allocation_mode: Option<AllocationMode>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Turn a results CSV into long-format CDF tables.
    Cdf {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CDF_POINTS)]
        points: usize,
        #[arg(long, default_value = "cdf.csv")]
        out: PathBuf,
    },
    /// Check the metrics against brute-force reference computations.
    Oracle {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_mode(s: &str) -> Result<AllocationMode, String> {
    s.parse().map_err(|e: dmimo::Error| e.to_string())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> dmimo::Result<ExitCode> {
    match cli.cmd {
        Command::Synth { config, preset, users, min_spacing, max_spacing, seed, normalize: norm, out } => {
            let scene: Scene = match config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => Scene::preset(preset),
            };
            let root = RngHandle::new(seed, 0);
            let layout = gen_trajectory_users(&scene, users, (min_spacing, max_spacing), root.derive(0, 0))?;
            let mut h = gen_geometric(&scene, &layout, root.derive(0, 1))?;
            if norm {
                h = normalize(&h)?.into_tensor();
            }
            write_channel_file(&h, &out)?;
            let d = h.dims();
            println!("wrote {} (T={} L={} K={} M={})", out.display(), d.t, d.l, d.k, d.m);
        }
        Command::Run { config, seed, trials, out, allocation_mode, threads } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(m) = allocation_mode {
                cfg.allocation_mode = m;
            }
            let res = run_experiment_threads(&cfg, threads)?;
            res.write_dir(&out)?;
            println!(
                "{:>4} {:>4} {:>4} {:>7} {:>13} {:>10} {:>10} {:>6}",
                "K", "M", "N", "rho_db", "metric", "mean", "median", "degen"
            );
            for a in &res.aggregates {
                let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
                println!(
                    "{:>4} {:>4} {:>4} {:>7.1} {:>13} {:>10} {:>10} {:>6}",
                    a.k,
                    a.m,
                    a.n,
                    a.rho_db,
                    a.metric,
                    f(a.mean),
                    f(a.median),
                    a.degenerate
                );
            }
            println!("{} rows -> {}", res.rows.len(), out.display());
        }
        Command::Cdf { results, points, out } => {
            let rows = read_rows_csv(&results)?;
            let table = cdf_table(&rows, points)?;
            write_cdf_csv(&table, &out)?;
            println!("{} CDF points -> {}", table.len(), out.display());
        }
        Command::Oracle { seed } => {
            let checks = dmimo::validation::run_suite(seed);
            let mut ok = true;
            for c in &checks {
                ok &= c.passed;
                println!(
                    "[{}] {:<24} worst {:.3e} (tol {:.0e}, {} cases)",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.worst_error,
                    c.tolerance,
                    c.cases
                );
            }
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    }
    Ok(ExitCode::SUCCESS)
}

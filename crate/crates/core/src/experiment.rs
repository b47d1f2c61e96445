//! Seeded Monte-Carlo sweeps and result files.
//!
//! For every user count `K` and trial a full channel is drawn (or users
//! are picked from a loaded file) and normalized once. Every `(M, N)` cell
//! then slices its own random subarray from that channel and evaluates the
//! requested metrics at each SNR. Trials run in parallel; each owns RNG
//! streams derived from `(seed, K, cell, trial)`, and rows are merged in
//! `(cell, trial, metric)` order, so results do not depend on the worker
//! count.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Metric, Source};
use crate::error::{Error, Result};
use crate::io::read_channel_file;
use crate::linalg::{condition_number_gram, singular_values, SINGULAR_CONDITION};
use crate::metrics::{dpc_capacity_with, svs, zf_sum_rate_with, CapacityResult, SnrSpec};
use crate::prep::{normalize, select_subarray};
use crate::rng::RngHandle;
use crate::stats::{compute_cdf, mean, median, Cdf, DEFAULT_CDF_POINTS};
use crate::synth::{gen_geometric, gen_iid_rayleigh, gen_trajectory_users};
use crate::tensor::{ChannelTensor, Dims};

/// One per-trial metric value. Column order is the CSV order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub rho_db: f64,
    pub metric: Metric,
    pub value: f64,
    #[serde(rename = "degenerate_flag", with = "flag")]
    pub degenerate: bool,
}

mod flag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        Ok(u8::deserialize(d)? != 0)
    }
}

/// Statistics of one `(K, M, N, ρ, metric)` cell over its valid trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub rho_db: f64,
    pub metric: Metric,
    pub valid: usize,
    pub degenerate: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub cdf: Option<Cdf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateTrial {
    pub trial: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<Aggregate>,
    pub degenerate_trials: Vec<DegenerateTrial>,
    /// DPC evaluations that hit the iteration cap without meeting tolerance.
    pub nonconverged_dpc: usize,
}

impl ExperimentResult {
    pub fn aggregate(&self, k: usize, m: usize, n: usize, rho_db: f64, metric: Metric) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.k == k && a.m == m && a.n == n && a.rho_db == rho_db && a.metric == metric)
    }

    /// Valid per-trial values of one cell.
    pub fn values(&self, k: usize, m: usize, n: usize, rho_db: f64, metric: Metric) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.k == k && r.m == m && r.n == n && r.rho_db == rho_db && r.metric == metric && !r.degenerate)
            .map(|r| r.value)
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, rows_to_csv(&self.rows)?)?;
        Ok(())
    }

    /// Aggregates, degenerate-trial list and the config echo.
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        #[derive(Serialize)]
        struct Summary<'a> {
            config: &'a ExperimentConfig,
            trials: usize,
            aggregates: &'a [Aggregate],
            degenerate_trials: &'a [DegenerateTrial],
            nonconverged_dpc: usize,
        }
        let s = Summary {
            config: &self.config,
            trials: self.config.trials,
            aggregates: &self.aggregates,
            degenerate_trials: &self.degenerate_trials,
            nonconverged_dpc: self.nonconverged_dpc,
        };
        fs::write(path, serde_json::to_string_pretty(&s)?)?;
        Ok(())
    }

    /// `results.csv` and `aggregates.json` in `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        self.write_csv(dir.join("results.csv"))?;
        self.write_json(dir.join("aggregates.json"))
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_rows_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Group rows into aggregates, in first-appearance order of the cells.
pub fn aggregate_rows(rows: &[ResultRow]) -> Result<Vec<Aggregate>> {
    let mut keys: Vec<(usize, usize, usize, u64, Metric)> = Vec::new();
    let mut groups: Vec<Vec<&ResultRow>> = Vec::new();
    for r in rows {
        let key = (r.k, r.m, r.n, r.rho_db.to_bits(), r.metric);
        match keys.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(r),
            None => {
                keys.push(key);
                groups.push(vec![r]);
            }
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let first = g[0];
            let vals: Vec<f64> = g.iter().filter(|r| !r.degenerate).map(|r| r.value).collect();
            let cdf = if vals.is_empty() { None } else { Some(compute_cdf(&vals, DEFAULT_CDF_POINTS)?) };
            Ok(Aggregate {
                m: first.m,
                n: first.n,
                k: first.k,
                rho_db: first.rho_db,
                metric: first.metric,
                valid: vals.len(),
                degenerate: g.len() - vals.len(),
                mean: mean(&vals),
                median: median(&vals),
                cdf,
            })
        })
        .collect()
}

/// One point of a long-format CDF table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub rho_db: f64,
    pub metric: Metric,
    pub x: f64,
    pub cdf: f64,
}

/// CDF of every cell's valid values on a `points`-long grid; degenerate
/// rows are excluded.
pub fn cdf_table(rows: &[ResultRow], points: usize) -> Result<Vec<CdfPoint>> {
    let mut out = Vec::new();
    for a in aggregate_rows(rows)? {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.k == a.k && r.m == a.m && r.n == a.n && r.rho_db == a.rho_db && r.metric == a.metric)
            .filter(|r| !r.degenerate)
            .map(|r| r.value)
            .collect();
        if vals.is_empty() {
            continue;
        }
        let c = compute_cdf(&vals, points)?;
        out.extend(c.grid.iter().zip(&c.probability).map(|(&x, &p)| CdfPoint {
            k: a.k,
            m: a.m,
            n: a.n,
            rho_db: a.rho_db,
            metric: a.metric,
            x,
            cdf: p,
        }));
    }
    Ok(out)
}

pub fn write_cdf_csv(points: &[CdfPoint], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

enum Prepared {
    Synthetic,
    File(ChannelTensor),
}

impl Prepared {
    fn layout(&self, cfg: &ExperimentConfig) -> (usize, usize, Option<usize>) {
        match self {
            Prepared::Synthetic => {
                let (a, w) = cfg.synthetic_layout().expect("synthetic source");
                (a, w, None)
            }
            Prepared::File(h) => {
                let ids = h.ap_ids();
                let per = ids.iter().map(|&a| h.antennas_of(a).len()).min().unwrap_or(0);
                (ids.len(), per, Some(h.dims().k))
            }
        }
    }
}

/// Run on the global thread pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_threads(cfg, None)
}

/// Run with a dedicated pool of `threads` workers (`None` uses the global pool).
pub fn run_experiment_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    let prepared = match &cfg.source {
        Source::File { path } => Prepared::File(read_channel_file(path)?),
        _ => Prepared::Synthetic,
    };
    cfg.validate_against(prepared.layout(cfg))?;

    let jobs: Vec<(usize, usize)> =
        (0..cfg.sweep.k.len()).flat_map(|ki| (0..cfg.trials).map(move |t| (ki, t))).collect();
    let work = || -> Result<Vec<TrialOutput>> {
        jobs.par_iter().map(|&(ki, trial)| run_trial(cfg, &prepared, ki, trial)).collect()
    };
    let outputs = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let mut keyed: Vec<(RowKey, ResultRow)> = Vec::new();
    let mut degenerate = Vec::new();
    let mut nonconverged = 0;
    for out in outputs {
        keyed.extend(out.rows);
        degenerate.extend(out.degenerate);
        nonconverged += out.nonconverged;
    }
    keyed.sort_by_key(|(k, _)| *k);
    degenerate.sort_by_key(|d: &(RowKey, DegenerateTrial)| d.0);
    let rows: Vec<ResultRow> = keyed.into_iter().map(|(_, r)| r).collect();
    let aggregates = aggregate_rows(&rows)?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        rows,
        aggregates,
        degenerate_trials: degenerate.into_iter().map(|(_, d)| d).collect(),
        nonconverged_dpc: nonconverged,
    })
}

/// (K index, M index, N index, SNR index, trial, metric position).
type RowKey = (usize, usize, usize, usize, usize, usize);

struct TrialOutput {
    rows: Vec<(RowKey, ResultRow)>,
    degenerate: Vec<(RowKey, DegenerateTrial)>,
    nonconverged: usize,
}

fn draw_channel(cfg: &ExperimentConfig, prepared: &Prepared, k: usize, rng: RngHandle) -> Result<ChannelTensor> {
    match (&cfg.source, prepared) {
        (Source::IidRayleigh { num_aps, antennas_per_ap, num_subcarriers, num_snapshots }, _) => {
            let dims = Dims::new(*num_snapshots, *num_subcarriers, k, num_aps * antennas_per_ap);
            gen_iid_rayleigh(dims, rng)?.with_uniform_aps(*num_aps)
        }
        (_, Prepared::File(h)) => {
            let mut r = rng.rng();
            let mut users = sample(&mut r, h.dims().k, k).into_vec();
            users.sort_unstable();
            h.select_users(&users)
        }
        (src, Prepared::Synthetic) => {
            let scene = src.scene().expect("geometric source");
            let sp = cfg.user_spacing;
            let users = gen_trajectory_users(&scene, k, (sp.min_m, sp.max_m), rng.derive(0, 0))?;
            gen_geometric(&scene, &users, rng.derive(0, 1))
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, prepared: &Prepared, ki: usize, trial: usize) -> Result<TrialOutput> {
    let k = cfg.sweep.k[ki];
    let root = RngHandle::new(cfg.seed, 0);
    let channel_rng = root.derive(ki as u64, trial as u64);
    let full = draw_channel(cfg, prepared, k, channel_rng)?;
    let normalized = normalize(&full);

    let mut out = TrialOutput { rows: Vec::new(), degenerate: Vec::new(), nonconverged: 0 };
    for (mi, &m) in cfg.sweep.m.iter().enumerate() {
        for (ni, &n) in cfg.sweep.n.iter().enumerate() {
            let cell_rng = channel_rng.derive(1 + mi as u64, 1 + ni as u64);
            // subarrays keep the full-array normalization
            let sub = match &normalized {
                Ok(h) => Ok(select_subarray(h.tensor(), m, n, cell_rng)?.0),
                Err(e) => Err(e.to_string()),
            };
            let cell = evaluate_cell(cfg, sub)?;
            out.nonconverged += cell.nonconverged;
            let is_degenerate = cell.degenerate.is_some();
            if let Some(reason) = cell.degenerate {
                out.degenerate.push(((ki, mi, ni, 0, trial, 0), DegenerateTrial { trial, m, n, k, reason }));
            }
            for (si, &rho_db) in cfg.sweep.snr_db.iter().enumerate() {
                for (pos, metric) in cfg.metrics.iter().enumerate() {
                    let value = cell.values[si][pos];
                    out.rows.push((
                        (ki, mi, ni, si, trial, pos),
                        ResultRow { trial, m, n, k, rho_db, metric: *metric, value, degenerate: is_degenerate },
                    ));
                }
            }
        }
    }
    Ok(out)
}

struct CellOutput {
    /// `[snr][metric]`
    values: Vec<Vec<f64>>,
    degenerate: Option<String>,
    nonconverged: usize,
}

fn evaluate_cell(cfg: &ExperimentConfig, sub: std::result::Result<ChannelTensor, String>) -> Result<CellOutput> {
    let nan_grid = || vec![vec![f64::NAN; cfg.metrics.len()]; cfg.sweep.snr_db.len()];
    let sub = match sub {
        Ok(s) => s,
        Err(reason) => return Ok(CellOutput { values: nan_grid(), degenerate: Some(reason), nonconverged: 0 }),
    };

    // Conditioning decides degeneracy for every metric of the cell.
    let mut svs_sum = 0.0;
    let mut degenerate = None;
    let mut max_cond: f64 = 0.0;
    for s in sub.slices() {
        let sv = singular_values(&s)?;
        max_cond = max_cond.max(condition_number_gram(&sv));
        svs_sum += svs(&s)?.db();
    }
    if max_cond >= SINGULAR_CONDITION {
        degenerate = Some(format!("rank-deficient slice (condition {max_cond:e})"));
    }
    let svs_value = svs_sum / sub.dims().slices() as f64;

    let mut values = Vec::with_capacity(cfg.sweep.snr_db.len());
    let mut nonconverged = 0;
    let wants = |f: fn(&Metric) -> bool| cfg.metrics.iter().any(f);
    for &rho_db in &cfg.sweep.snr_db {
        let snr = SnrSpec::from_db(rho_db);
        let dpc: Option<CapacityResult> = if wants(|m| matches!(m, Metric::Dpc | Metric::FairnessDpc)) {
            let r = dpc_capacity_with(&sub, snr, cfg.allocation_mode)?;
            if !r.converged {
                nonconverged += 1;
            }
            Some(r)
        } else {
            None
        };
        let zf: Option<CapacityResult> = if degenerate.is_none() && wants(Metric::needs_zf) {
            Some(zf_sum_rate_with(&sub, snr, cfg.allocation_mode)?)
        } else {
            None
        };
        let row = cfg
            .metrics
            .iter()
            .map(|m| match m {
                Metric::Svs => svs_value,
                Metric::Dpc => dpc.as_ref().map_or(f64::NAN, |r| r.sum_rate_bits_per_s_per_hz),
                Metric::FairnessDpc => dpc.as_ref().map_or(f64::NAN, CapacityResult::allocated_users),
                Metric::Zf => zf.as_ref().map_or(f64::NAN, |r| r.sum_rate_bits_per_s_per_hz),
                Metric::Fairness => zf.as_ref().map_or(f64::NAN, CapacityResult::allocated_users),
            })
            .collect();
        values.push(row);
    }
    Ok(CellOutput { values, degenerate, nonconverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Spacing, Sweep};
    use crate::metrics::AllocationMode;
    use crate::synth::ScenePreset;

    fn cfg(metrics: Vec<Metric>, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            source: Source::Preset { preset: ScenePreset::Los },
            user_spacing: Spacing::default(),
            sweep: Sweep { m: vec![16, 128], n: vec![4], snr_db: vec![0.0, 15.0], k: vec![4] },
            trials,
            seed: 11,
            metrics,
            allocation_mode: AllocationMode::PerSlice,
        }
    }

    #[test]
    fn row_count_and_order() {
        let c = cfg(vec![Metric::Svs, Metric::Dpc, Metric::Zf, Metric::Fairness], 3);
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.rows.len(), 3 * 2 * 2 * 4);
        assert_eq!(r.rows[0].m, 16);
        assert_eq!(r.rows[0].metric, Metric::Svs);
        assert_eq!(r.rows[1].metric, Metric::Dpc);
        assert_eq!(r.aggregates.len(), 2 * 2 * 4);
        for a in &r.aggregates {
            assert_eq!(a.valid + a.degenerate, 3);
        }
    }

    #[test]
    fn deterministic_across_threads() {
        let c = cfg(vec![Metric::Svs, Metric::Zf], 4);
        let a = run_experiment_threads(&c, Some(1)).unwrap();
        let b = run_experiment_threads(&c, Some(4)).unwrap();
        assert_eq!(rows_to_csv(&a.rows).unwrap(), rows_to_csv(&b.rows).unwrap());
    }

    #[test]
    fn infeasible_topology_fails_before_trials() {
        let mut c = cfg(vec![Metric::Svs], 1);
        c.sweep.n = vec![3];
        assert!(matches!(run_experiment(&c), Err(Error::Config(_))));
    }

    #[test]
    fn coincident_users_are_degenerate() {
        let mut c = cfg(vec![Metric::Svs, Metric::Zf], 2);
        let mut scene = crate::synth::Scene::preset(ScenePreset::Los);
        scene.rice_k_db = f64::INFINITY;
        // a tiny region forces every user onto the same spot
        scene.region.width = 1e-13;
        scene.region.depth = 1e-13;
        c.source = Source::Scene { scene };
        c.user_spacing = Spacing { min_m: 0.0, max_m: None };
        c.sweep.k = vec![2];
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.degenerate_trials.len(), 2 * 2);
        assert!(r.rows.iter().all(|row| row.degenerate));
        let svs_row = r.rows.iter().find(|row| row.metric == Metric::Svs).unwrap();
        assert!(svs_row.value.is_infinite());
        assert!(r.aggregates.iter().all(|a| a.mean.is_none() && a.degenerate == 2));
    }

    #[test]
    fn csv_roundtrip_recomputes_aggregates() {
        let c = cfg(vec![Metric::Svs, Metric::Dpc], 5);
        let r = run_experiment(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        r.write_dir(dir.path()).unwrap();
        let rows = read_rows_csv(dir.path().join("results.csv")).unwrap();
        assert_eq!(rows, r.rows);
        let again = aggregate_rows(&rows).unwrap();
        for (x, y) in again.iter().zip(&r.aggregates) {
            assert!((x.mean.unwrap() - y.mean.unwrap()).abs() <= 1e-12);
            assert!((x.median.unwrap() - y.median.unwrap()).abs() <= 1e-12);
        }
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("aggregates.json")).unwrap()).unwrap();
        assert_eq!(json["aggregates"].as_array().unwrap().len(), r.aggregates.len());
    }
}

//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "source": { "kind": "preset", "preset": "los" },
//!   "user_spacing": { "min_m": 0.1, "max_m": 5.0 },
//!   "sweep": { "m": [16, 32, 64, 128], "n": [4], "snr_db": [15.0], "k": [12] },
//!   "trials": 500,
//!   "seed": 1,
//!   "metrics": ["svs", "dpc", "zf", "fairness"],
//!   "allocation_mode": "per_tl"
//! }
//! ```
//!
//! `source.kind` is one of `preset` (`los` | `mixed` | `nlos`), `scene`
//! (a full [`Scene`] object), `iid_rayleigh` or `file` (a channel file,
//! resolved relative to the config file's directory).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::AllocationMode;
use crate::prep::check_topology;
use crate::synth::{Scene, ScenePreset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Preset {
        preset: ScenePreset,
    },
    Scene {
        scene: Scene,
    },
    IidRayleigh {
        num_aps: usize,
        antennas_per_ap: usize,
        #[serde(default = "one")]
        num_subcarriers: usize,
        #[serde(default = "one")]
        num_snapshots: usize,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> usize {
    1
}

impl Source {
    /// Scene for geometric sources.
    pub fn scene(&self) -> Option<Scene> {
        match self {
            Source::Preset { preset } => Some(Scene::preset(*preset)),
            Source::Scene { scene } => Some(scene.clone()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spacing {
    pub min_m: f64,
    /// Omit for unbounded.
    #[serde(default)]
    pub max_m: Option<f64>,
}

impl Default for Spacing {
    fn default() -> Self {
        Self { min_m: 0.1, max_m: Some(5.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub m: Vec<usize>,
    pub n: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub k: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Svs,
    Dpc,
    Zf,
    /// Users allocated power by the ZF water-filling.
    Fairness,
    /// Users allocated power by the DPC optimum.
    FairnessDpc,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Svs => "svs",
            Metric::Dpc => "dpc",
            Metric::Zf => "zf",
            Metric::Fairness => "fairness",
            Metric::FairnessDpc => "fairness_dpc",
        }
    }

    pub fn needs_zf(&self) -> bool {
        matches!(self, Metric::Zf | Metric::Fairness)
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown metric {s:?}")))
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: Source,
    #[serde(default)]
    pub user_spacing: Spacing,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub allocation_mode: AllocationMode,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Load a config; a relative channel-file path is resolved against the config's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&fs::read_to_string(path)?)?;
        if let Source::File { path: p } = &mut cfg.source {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Check everything that does not require reading a channel file.
    ///
    /// `layout` is `(available APs, antennas per AP, users available)`;
    /// pass `None` to derive it from a synthetic source.
    pub fn validate_against(&self, layout: (usize, usize, Option<usize>)) -> Result<()> {
        let (aps, per_ap, users) = layout;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let s = &self.sweep;
        if s.m.is_empty() || s.n.is_empty() || s.snr_db.is_empty() || s.k.is_empty() {
            return Err(Error::Config("every sweep list must be non-empty".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("at least one metric required".into()));
        }
        if let Some(x) = s.snr_db.iter().find(|x| !x.is_finite()) {
            return Err(Error::Config(format!("SNR {x} dB is not finite")));
        }
        for &m in &s.m {
            for &n in &s.n {
                check_topology(m, n, aps, per_ap).map_err(|e| Error::Config(format!("(M={m}, N={n}): {e}")))?;
            }
        }
        let min_m = *s.m.iter().min().expect("non-empty");
        for &k in &s.k {
            if k == 0 {
                return Err(Error::Config("K must be at least 1".into()));
            }
            if let Some(u) = users {
                if k > u {
                    return Err(Error::Config(format!("K = {k} exceeds the {u} users in the channel file")));
                }
            }
            if self.metrics.iter().any(Metric::needs_zf) && k > min_m {
                return Err(Error::Config(format!("ZF needs K <= M, got K = {k} with M = {min_m}")));
            }
        }
        Ok(())
    }

    /// Synthetic layout `(APs, antennas per AP)`; `None` for file sources.
    pub fn synthetic_layout(&self) -> Option<(usize, usize)> {
        match &self.source {
            Source::IidRayleigh { num_aps, antennas_per_ap, .. } => Some((*num_aps, *antennas_per_ap)),
            src => src.scene().map(|s| (s.num_aps(), s.antennas_per_ap)),
        }
    }
}

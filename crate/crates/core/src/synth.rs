//! Synthetic distributed-MIMO channels.
//!
//! Two generators: an i.i.d. Rayleigh baseline and a geometric scene model
//! with a Ricean line-of-sight component plus a finite set of point
//! scatterers per access point. The geometric model uses exact spherical
//! wavefronts, so closely spaced users and near-field distributed arrays
//! are represented without a far-field approximation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngHandle;
use crate::tensor::{ChannelTensor, Dims};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Rejection-sampling budget for user placement.
pub const PLACEMENT_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkCondition {
    Los,
    Nlos,
}

/// Axis-aligned user placement rectangle at a fixed user height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub origin: [f64; 2],
    pub width: f64,
    pub depth: f64,
    #[serde(default = "default_user_height")]
    pub height: f64,
}

fn default_user_height() -> f64 {
    1.2
}

impl Region {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let eps = 1e-12;
        p[0] >= self.origin[0] - eps
            && p[0] <= self.origin[0] + self.width + eps
            && p[1] >= self.origin[1] - eps
            && p[1] <= self.origin[1] + self.depth + eps
    }

    pub fn center(&self) -> [f64; 3] {
        [self.origin[0] + self.width / 2.0, self.origin[1] + self.depth / 2.0, self.height]
    }

    pub fn area(&self) -> f64 {
        self.width * self.depth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// AP array centers in meters.
    pub ap_positions: Vec<[f64; 3]>,
    pub antennas_per_ap: usize,
    pub region: Region,
    pub condition_per_ap: Vec<LinkCondition>,
    /// Ricean K-factor of LoS links in dB. `+inf` gives a pure LoS channel.
    pub rice_k_db: f64,
    pub num_scatterers: usize,
    pub angular_spread_deg: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub num_subcarriers: usize,
    pub num_snapshots: usize,
}

/// Preset regimes modelled on an indoor office with four wall-mounted APs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenePreset {
    Los,
    Mixed,
    Nlos,
}

impl std::str::FromStr for ScenePreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "los" => Ok(Self::Los),
            "mixed" => Ok(Self::Mixed),
            "nlos" => Ok(Self::Nlos),
            other => Err(Error::Config(format!("unknown scene preset {other:?}"))),
        }
    }
}

impl Scene {
    pub fn preset(p: ScenePreset) -> Self {
        use LinkCondition::{Los, Nlos};
        let ap_positions = vec![[-1.5, -1.0, 2.0], [4.0, -1.0, 2.0], [4.0, 6.0, 2.0], [-1.5, 6.0, 2.0]];
        let (width, conditions, spread) = match p {
            ScenePreset::Los => (2.5, vec![Los; 4], 37.0),
            ScenePreset::Mixed => (1.7, vec![Los, Los, Nlos, Nlos], 37.0),
            ScenePreset::Nlos => (2.0, vec![Nlos; 4], 64.0),
        };
        Scene {
            ap_positions,
            antennas_per_ap: 32,
            region: Region { origin: [0.0, 0.0], width, depth: 5.0, height: 1.2 },
            condition_per_ap: conditions,
            rice_k_db: 3.0,
            num_scatterers: 20,
            angular_spread_deg: spread,
            carrier_hz: 5.6e9,
            bandwidth_hz: 400e6,
            num_subcarriers: 1,
            num_snapshots: 1,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn total_antennas(&self) -> usize {
        self.num_aps() * self.antennas_per_ap
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("scene: {m}")));
        if self.ap_positions.is_empty() {
            return bad("at least one AP required");
        }
        if self.condition_per_ap.len() != self.ap_positions.len() {
            return bad("condition_per_ap must list one tag per AP");
        }
        if self.antennas_per_ap == 0 {
            return bad("antennas_per_ap must be positive");
        }
        if !(self.region.width > 0.0 && self.region.depth > 0.0) || !self.region.area().is_finite() {
            return bad("region area must be positive");
        }
        if self.rice_k_db.is_nan() || self.rice_k_db == f64::NEG_INFINITY {
            return bad("rice_k_db must be a number or +inf");
        }
        if !(self.angular_spread_deg > 0.0 && self.angular_spread_deg <= 360.0) {
            return bad("angular_spread_deg must lie in (0, 360]");
        }
        if self.num_scatterers == 0 {
            return bad("num_scatterers must be positive");
        }
        if !(self.carrier_hz > 0.0) || !(self.bandwidth_hz >= 0.0) {
            return bad("carrier and bandwidth must be positive");
        }
        if self.num_subcarriers == 0 || self.num_snapshots == 0 {
            return bad("num_subcarriers and num_snapshots must be positive");
        }
        Ok(())
    }

    /// Subcarrier frequencies, uniform across the band and centered on the carrier.
    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        let l = self.num_subcarriers as f64;
        (0..self.num_subcarriers).map(|i| self.carrier_hz + self.bandwidth_hz * ((i as f64 + 0.5) / l - 0.5)).collect()
    }

    /// Element positions of every antenna, AP by AP.
    ///
    /// Each AP is a vertical planar grid at half-wavelength spacing whose
    /// broadside points at the region center.
    pub fn antenna_positions(&self) -> Vec<[f64; 3]> {
        let w = self.antennas_per_ap;
        let mut rows = ((w as f64 / 2.0).sqrt().floor() as usize).max(1);
        while !w.is_multiple_of(rows) {
            rows -= 1;
        }
        let cols = w / rows;
        let spacing = SPEED_OF_LIGHT / self.carrier_hz / 2.0;
        let center = self.region.center();
        let mut out = Vec::with_capacity(self.total_antennas());
        for ap in &self.ap_positions {
            let (dx, dy) = (center[0] - ap[0], center[1] - ap[1]);
            let norm = dx.hypot(dy);
            let (ux, uy) = if norm > 0.0 { (-dy / norm, dx / norm) } else { (1.0, 0.0) };
            for e in 0..w {
                let (r, c) = (e / cols, e % cols);
                let h = (c as f64 - (cols as f64 - 1.0) / 2.0) * spacing;
                let v = (r as f64 - (rows as f64 - 1.0) / 2.0) * spacing;
                out.push([ap[0] + ux * h, ap[1] + uy * h, ap[2] + v]);
            }
        }
        out
    }
}

/// User positions for one channel realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserLayout {
    pub positions: Vec<[f64; 3]>,
    pub min_spacing_m: f64,
    /// `None` means unbounded.
    pub max_spacing_m: Option<f64>,
}

impl UserLayout {
    pub fn num_users(&self) -> usize {
        self.positions.len()
    }

    /// Check placement and spacing constraints against `region`.
    pub fn validate(&self, region: &Region) -> Result<()> {
        for (k, p) in self.positions.iter().enumerate() {
            if !region.contains(*p) {
                return Err(Error::Placement { k, x: p[0], y: p[1] });
            }
        }
        for (i, a) in self.positions.iter().enumerate() {
            for b in &self.positions[i + 1..] {
                let d = distance(*a, *b);
                if d < self.min_spacing_m || self.max_spacing_m.is_some_and(|mx| d > mx) {
                    return Err(Error::InvalidInput(format!(
                        "users {i} spacing {d:.3} m violates [{}, {:?}]",
                        self.min_spacing_m, self.max_spacing_m
                    )));
                }
            }
        }
        Ok(())
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// I.i.d. CN(0, 1) entries; all antennas on a single AP.
pub fn gen_iid_rayleigh(dims: Dims, rng: RngHandle) -> Result<ChannelTensor> {
    dims.validate()?;
    let mut r = rng.rng();
    let data = (0..dims.len()).map(|_| complex_gaussian(&mut r)).collect();
    ChannelTensor::colocated(dims, data)
}

/// Draw `k` users uniformly in the scene region under pairwise spacing bounds.
pub fn gen_trajectory_users(
    scene: &Scene,
    k: usize,
    spacing: (f64, Option<f64>),
    rng: RngHandle,
) -> Result<UserLayout> {
    let (min_m, max_m) = spacing;
    if k == 0 {
        return Err(Error::InvalidInput("at least one user required".into()));
    }
    if !(min_m >= 0.0) || max_m.is_some_and(|mx| !(mx > 0.0) || mx < min_m) {
        return Err(Error::InvalidInput(format!("bad spacing bounds ({min_m}, {max_m:?})")));
    }
    let reg = scene.region;
    let mut r = rng.rng();
    let mut positions: Vec<[f64; 3]> = Vec::with_capacity(k);
    let mut attempts = 0;
    while positions.len() < k {
        if attempts >= PLACEMENT_ATTEMPTS {
            return Err(Error::InfeasibleLayout { k, attempts });
        }
        attempts += 1;
        let p =
            [reg.origin[0] + r.random::<f64>() * reg.width, reg.origin[1] + r.random::<f64>() * reg.depth, reg.height];
        let ok = positions.iter().all(|q| {
            let d = distance(p, *q);
            d >= min_m && max_m.is_none_or(|mx| d <= mx)
        });
        if ok {
            positions.push(p);
        }
    }
    Ok(UserLayout { positions, min_spacing_m: min_m, max_spacing_m: max_m })
}

/// Geometric channel for `users` in `scene`.
///
/// Coefficient for antenna `m` of AP `n`, user `k`, subcarrier frequency `f`:
///
/// ```text
/// h = sqrt(K/(K+1)) · los_n · exp(-j2π f d_mk / c)
///   + sqrt(1/(K+1)) · (1/sqrt(S)) Σ_s g_s · exp(-j2π f (d_ms + d_sk) / c)
/// ```
///
/// `K` is the Ricean factor (zero on NLoS links), `g_s ~ CN(0, 1)` is
/// redrawn per snapshot, and scatterer positions are fixed per call. The
/// expected per-link power is exactly one.
pub fn gen_geometric(scene: &Scene, users: &UserLayout, rng: RngHandle) -> Result<ChannelTensor> {
    scene.validate()?;
    if users.positions.is_empty() {
        return Err(Error::InvalidInput("at least one user required".into()));
    }
    for (k, p) in users.positions.iter().enumerate() {
        if !scene.region.contains(*p) {
            return Err(Error::Placement { k, x: p[0], y: p[1] });
        }
    }
    let mut r = rng.rng();
    let n_aps = scene.num_aps();
    let w = scene.antennas_per_ap;
    let dims = Dims::new(scene.num_snapshots, scene.num_subcarriers, users.num_users(), n_aps * w);
    let antennas = scene.antenna_positions();
    let freqs = scene.subcarrier_frequencies();
    let s = scene.num_scatterers;

    let scatterers: Vec<Vec<[f64; 3]>> =
        scene.ap_positions.iter().map(|ap| place_scatterers(scene, *ap, &mut r)).collect();

    let k_lin = if scene.rice_k_db == f64::INFINITY { f64::INFINITY } else { 10f64.powf(scene.rice_k_db / 10.0) };
    let (los_amp, nlos_amp) =
        if k_lin.is_infinite() { (1.0, 0.0) } else { ((k_lin / (k_lin + 1.0)).sqrt(), (1.0 / (k_lin + 1.0)).sqrt()) };

    // Path lengths are realization constants; only scatterer gains vary per snapshot.
    let los_dist: Vec<Vec<f64>> =
        users.positions.iter().map(|u| antennas.iter().map(|a| distance(*a, *u)).collect()).collect();
    let mut scat_dist = vec![0.0; users.num_users() * dims.m * s];
    for (k, u) in users.positions.iter().enumerate() {
        for (m, a) in antennas.iter().enumerate() {
            for (i, q) in scatterers[m / w].iter().enumerate() {
                scat_dist[(k * dims.m + m) * s + i] = distance(*a, *q) + distance(*q, *u);
            }
        }
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut data = vec![zero; dims.len()];
    let phase = |f: f64, d: f64| Complex64::from_polar(1.0, -2.0 * PI * f * d / SPEED_OF_LIGHT);
    let inv_sqrt_s = 1.0 / (s as f64).sqrt();
    for t in 0..dims.t {
        let gains: Vec<Complex64> = (0..n_aps * s).map(|_| complex_gaussian(&mut r)).collect();
        for (l, &f) in freqs.iter().enumerate() {
            for k in 0..dims.k {
                for m in 0..dims.m {
                    let ap = m / w;
                    let mut h = zero;
                    if scene.condition_per_ap[ap] == LinkCondition::Los {
                        h += phase(f, los_dist[k][m]) * los_amp;
                    }
                    let nlos = if scene.condition_per_ap[ap] == LinkCondition::Los { nlos_amp } else { 1.0 };
                    if nlos > 0.0 {
                        let base = (k * dims.m + m) * s;
                        let sum: Complex64 = (0..s).map(|i| gains[ap * s + i] * phase(f, scat_dist[base + i])).sum();
                        h += sum * (nlos * inv_sqrt_s);
                    }
                    data[((t * dims.l + l) * dims.k + k) * dims.m + m] = h;
                }
            }
        }
    }
    let ap_map = (0..dims.m).map(|m| m / w).collect();
    ChannelTensor::new(dims, data, ap_map)
}

/// Scatterers seen from `ap` within the angular spread around the region direction.
fn place_scatterers<R: Rng + ?Sized>(scene: &Scene, ap: [f64; 3], r: &mut R) -> Vec<[f64; 3]> {
    let c = scene.region.center();
    let base_az = (c[1] - ap[1]).atan2(c[0] - ap[0]);
    let base_dist = distance(ap, c).max(1.0);
    let spread = scene.angular_spread_deg.to_radians();
    (0..scene.num_scatterers)
        .map(|_| {
            let az = base_az + (r.random::<f64>() - 0.5) * spread;
            let d = base_dist * (0.5 + r.random::<f64>());
            let z = r.random::<f64>() * 3.0;
            [ap[0] + d * az.cos(), ap[1] + d * az.sin(), z]
        })
        .collect()
}

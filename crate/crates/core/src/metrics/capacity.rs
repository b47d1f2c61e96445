//! DPC and ZF sum-rate capacities.
//!
//! Both objectives use transmit scaling `c = ρK/M` and a total power
//! budget `Σ p_k = 1`. The DPC capacity is evaluated on the dual uplink
//! channel, `log2 det(I_M + c Hᴴ P H) = log2 det(I_K + c P^½ H Hᴴ P^½)`,
//! and optimized with sum-power iterative water-filling. The ZF sum rate
//! uses the per-user noise enhancement `[(H Hᴴ)⁻¹]_kk`.
//!
//! The ZF objective is read as a sum over snapshots and subcarriers
//! (`l = 1..L`), averaged by `1/(LT)`.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::waterfill::waterfill_shared_unchecked;
use super::{count_allocated_users, PowerAllocation, SnrSpec};
use crate::error::Result;
use crate::linalg::{gram, ln_det_hpd, lu_solve, zf_effective_gains};
use crate::prep::NormalizedTensor;
use crate::tensor::{ChannelTensor, SnapshotMatrix};

pub const IWF_REL_TOL: f64 = 1e-8;
pub const IWF_MAX_ITERATIONS: usize = 500;
/// Frank–Wolfe duality gap, relative to `max(1, objective)`, required
/// before declaring convergence. The gap bounds the distance to the optimum.
pub const KKT_TOL: f64 = 1e-6;

/// Scope of the power optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AllocationMode {
    /// Independent allocation per (snapshot, subcarrier) slice, then averaged.
    #[default]
    #[serde(rename = "per_tl", alias = "per-tl")]
    PerSlice,
    /// One allocation shared by every slice.
    #[serde(rename = "joint")]
    Joint,
}

impl std::str::FromStr for AllocationMode {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-tl" | "per_tl" => Ok(Self::PerSlice),
            "joint" => Ok(Self::Joint),
            other => Err(crate::error::Error::Config(format!("unknown allocation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Allocations {
    PerSlice(Vec<PowerAllocation>),
    Joint(PowerAllocation),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub sum_rate_bits_per_s_per_hz: f64,
    pub allocation: Allocations,
    /// Largest iteration count over the optimized problems.
    pub iterations: usize,
    pub converged: bool,
    /// Largest Frank–Wolfe gap in bit/s/Hz; zero for closed-form allocations.
    pub kkt_residual: f64,
}

impl CapacityResult {
    /// Number of users with power, averaged over slices.
    pub fn allocated_users(&self) -> f64 {
        match &self.allocation {
            Allocations::Joint(a) => count_allocated_users(a) as f64,
            Allocations::PerSlice(v) => v.iter().map(|a| count_allocated_users(a) as f64).sum::<f64>() / v.len() as f64,
        }
    }
}

/// Anything that can be viewed as a list of `K x M` slices.
pub trait ChannelSlices {
    fn snapshot_slices(&self) -> Vec<SnapshotMatrix>;
}

impl ChannelSlices for ChannelTensor {
    fn snapshot_slices(&self) -> Vec<SnapshotMatrix> {
        self.slices().collect()
    }
}

impl ChannelSlices for NormalizedTensor {
    fn snapshot_slices(&self) -> Vec<SnapshotMatrix> {
        self.tensor().snapshot_slices()
    }
}

impl ChannelSlices for SnapshotMatrix {
    fn snapshot_slices(&self) -> Vec<SnapshotMatrix> {
        vec![self.clone()]
    }
}

impl ChannelSlices for [SnapshotMatrix] {
    fn snapshot_slices(&self) -> Vec<SnapshotMatrix> {
        self.to_vec()
    }
}

/// ZF sum rate with per-slice water-filling.
pub fn zf_sum_rate<C: ChannelSlices + ?Sized>(ch: &C, snr: SnrSpec) -> Result<CapacityResult> {
    zf_sum_rate_with(ch, snr, AllocationMode::PerSlice)
}

pub fn zf_sum_rate_with<C: ChannelSlices + ?Sized>(
    ch: &C,
    snr: SnrSpec,
    mode: AllocationMode,
) -> Result<CapacityResult> {
    let slices = ch.snapshot_slices();
    let noise = zf_noise(&slices, snr)?;
    match mode {
        AllocationMode::PerSlice => {
            let allocs: Vec<PowerAllocation> =
                noise.iter().map(|n| waterfill_shared_unchecked(&one_sample_each(n), 1.0)).collect();
            let rate = allocs.iter().zip(&noise).map(|(a, n)| zf_rate(&a.p, n)).sum::<f64>() / slices.len() as f64;
            Ok(CapacityResult {
                sum_rate_bits_per_s_per_hz: rate,
                allocation: Allocations::PerSlice(allocs),
                iterations: 1,
                converged: true,
                kkt_residual: 0.0,
            })
        }
        AllocationMode::Joint => {
            let per_user = transpose(&noise);
            let a = waterfill_shared_unchecked(&per_user, 1.0);
            let rate = noise.iter().map(|n| zf_rate(&a.p, n)).sum::<f64>() / slices.len() as f64;
            Ok(CapacityResult {
                sum_rate_bits_per_s_per_hz: rate,
                allocation: Allocations::Joint(a),
                iterations: 1,
                converged: true,
                kkt_residual: 0.0,
            })
        }
    }
}

/// Effective ZF noise floors `g²_k · M / (ρK)` per slice.
fn zf_noise(slices: &[SnapshotMatrix], snr: SnrSpec) -> Result<Vec<Vec<f64>>> {
    slices
        .iter()
        .map(|s| {
            let c = snr.scaling(s.users(), s.antennas());
            Ok(zf_effective_gains(s)?.into_iter().map(|g2| g2 / c).collect())
        })
        .collect()
}

fn zf_rate(p: &[f64], noise: &[f64]) -> f64 {
    p.iter().zip(noise).map(|(p, n)| (p / n).ln_1p()).sum::<f64>() / LN_2
}

fn one_sample_each(v: &[f64]) -> Vec<Vec<f64>> {
    v.iter().map(|&x| vec![x]).collect()
}

fn transpose(per_slice: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = per_slice[0].len();
    (0..k).map(|u| per_slice.iter().map(|s| s[u]).collect()).collect()
}

/// DPC sum capacity with per-slice optimization.
pub fn dpc_capacity<C: ChannelSlices + ?Sized>(ch: &C, snr: SnrSpec) -> Result<CapacityResult> {
    dpc_capacity_with(ch, snr, AllocationMode::PerSlice)
}

pub fn dpc_capacity_with<C: ChannelSlices + ?Sized>(
    ch: &C,
    snr: SnrSpec,
    mode: AllocationMode,
) -> Result<CapacityResult> {
    let slices = ch.snapshot_slices();
    for s in &slices {
        s.check_finite()?;
    }
    match mode {
        AllocationMode::PerSlice => {
            let outs: Vec<IwfOutcome> =
                slices.iter().map(|s| Iwf::new(std::slice::from_ref(s), snr).run(false)).collect();
            let rate = outs.iter().map(|o| o.objective).sum::<f64>() / outs.len() as f64;
            Ok(CapacityResult {
                sum_rate_bits_per_s_per_hz: rate.max(0.0),
                iterations: outs.iter().map(|o| o.iterations).max().unwrap_or(0),
                converged: outs.iter().all(|o| o.converged),
                kkt_residual: outs.iter().map(|o| o.gap).fold(0.0, f64::max),
                allocation: Allocations::PerSlice(outs.into_iter().map(|o| o.allocation).collect()),
            })
        }
        AllocationMode::Joint => {
            let o = Iwf::new(&slices, snr).run(false);
            Ok(CapacityResult {
                sum_rate_bits_per_s_per_hz: o.objective.max(0.0),
                iterations: o.iterations,
                converged: o.converged,
                kkt_residual: o.gap,
                allocation: Allocations::Joint(o.allocation),
            })
        }
    }
}

/// Objective value after every accepted iterate (starting point first).
pub fn dpc_objective_trace<C: ChannelSlices + ?Sized>(ch: &C, snr: SnrSpec, mode: AllocationMode) -> Vec<Vec<f64>> {
    let slices = ch.snapshot_slices();
    match mode {
        AllocationMode::PerSlice => {
            slices.iter().map(|s| Iwf::new(std::slice::from_ref(s), snr).run(true).trace).collect()
        }
        AllocationMode::Joint => vec![Iwf::new(&slices, snr).run(true).trace],
    }
}

struct IwfOutcome {
    allocation: PowerAllocation,
    objective: f64,
    iterations: usize,
    converged: bool,
    gap: f64,
    trace: Vec<f64>,
}

/// Sum-power iterative water-filling on the dual uplink, one allocation
/// shared across `slices`.
///
/// Each iteration computes every user's effective gain with the other
/// users' powers fixed, water-fills over the sum-power budget, and accepts
/// the better of the full update and the `1/K` averaged update. The
/// averaged update never lowers the concave objective, so the accepted
/// sequence is monotone.
struct Iwf<'a> {
    slices: &'a [SnapshotMatrix],
    grams: Vec<Vec<Complex64>>,
    scaling: Vec<f64>,
    k: usize,
    snr: SnrSpec,
}

impl<'a> Iwf<'a> {
    fn new(slices: &'a [SnapshotMatrix], snr: SnrSpec) -> Self {
        let k = slices[0].users();
        Self {
            slices,
            grams: slices.iter().map(gram).collect(),
            scaling: slices.iter().map(|s| snr.scaling(s.users(), s.antennas())).collect(),
            k,
            snr,
        }
    }

    /// Mean of `log2 det(I + c D G D)` over slices, `D = diag(√p)`.
    fn objective(&self, p: &[f64]) -> f64 {
        let k = self.k;
        let d: Vec<f64> = p.iter().map(|x| x.max(0.0).sqrt()).collect();
        let mut total = 0.0;
        for (g, &c) in self.grams.iter().zip(&self.scaling) {
            let mut a = vec![Complex64::new(0.0, 0.0); k * k];
            for i in 0..k {
                for j in 0..k {
                    a[i * k + j] = g[i * k + j] * (c * d[i] * d[j]);
                }
                a[i * k + i] += 1.0;
            }
            total += ln_det_hpd(&a, k).unwrap_or(f64::NEG_INFINITY);
        }
        total / self.grams.len() as f64 / LN_2
    }

    /// `g[k][s] = c [G (I + c P_{-k} G)⁻¹]_kk`: user k's gain with others as interference.
    fn effective_gains(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let k = self.k;
        let mut out = vec![Vec::with_capacity(self.grams.len()); k];
        for (g, &c) in self.grams.iter().zip(&self.scaling) {
            for (u, row) in out.iter_mut().enumerate() {
                let mut a = vec![Complex64::new(0.0, 0.0); k * k];
                for i in 0..k {
                    let pi = if i == u { 0.0 } else { p[i] };
                    for j in 0..k {
                        a[i * k + j] = g[i * k + j] * (c * pi);
                    }
                    a[i * k + i] += 1.0;
                }
                let mut e = vec![Complex64::new(0.0, 0.0); k];
                e[u] = Complex64::new(1.0, 0.0);
                let val = lu_solve(&a, k, &e)
                    .map(|x| (0..k).map(|j| g[u * k + j] * x[j]).sum::<Complex64>().re * c)
                    .unwrap_or(0.0);
                row.push(val.max(0.0));
            }
        }
        out
    }

    /// Frank–Wolfe gap `max_k ∂f/∂p_k − Σ p_k ∂f/∂p_k` in bits.
    fn gap(&self, p: &[f64], gains: &[Vec<f64>]) -> f64 {
        let s = self.grams.len() as f64;
        let grad: Vec<f64> =
            gains.iter().zip(p).map(|(g, &pk)| g.iter().map(|x| x / (1.0 + pk * x)).sum::<f64>() / s / LN_2).collect();
        let max = grad.iter().cloned().fold(0.0, f64::max);
        let avg: f64 = grad.iter().zip(p).map(|(g, q)| g * q).sum();
        (max - avg).max(0.0)
    }

    fn start(&self) -> Vec<f64> {
        let uniform = vec![1.0 / self.k as f64; self.k];
        // ZF powers also lower-bound the DPC objective; use them when feasible.
        match zf_sum_rate_with(self.slices, self.snr, AllocationMode::Joint) {
            Ok(CapacityResult { allocation: Allocations::Joint(a), .. })
                if self.objective(&a.p) > self.objective(&uniform) =>
            {
                a.p
            }
            _ => uniform,
        }
    }

    fn run(&self, record: bool) -> IwfOutcome {
        let k = self.k;
        let mut p = self.start();
        let mut f = self.objective(&p);
        let mut trace = if record { vec![f] } else { Vec::new() };
        let mut level = f64::NAN;
        let mut rel = f64::INFINITY;
        let mut converged = false;
        let mut gap = f64::INFINITY;
        let mut iterations = 0;

        while iterations < IWF_MAX_ITERATIONS {
            let gains = self.effective_gains(&p);
            gap = self.gap(&p, &gains);
            if gap <= KKT_TOL * f.abs().max(1.0) && rel < IWF_REL_TOL {
                converged = true;
                break;
            }
            iterations += 1;
            let noise: Vec<Vec<f64>> = gains
                .iter()
                .map(|g| g.iter().map(|&x| if x > 0.0 { 1.0 / x } else { f64::INFINITY }).collect())
                .collect();
            let wf = waterfill_shared_unchecked(&noise, 1.0);
            level = wf.water_level;
            let avg: Vec<f64> = p.iter().zip(&wf.p).map(|(o, n)| (o * (k as f64 - 1.0) + n) / k as f64).collect();
            let f_full = self.objective(&wf.p);
            let f_avg = self.objective(&avg);
            let (cand, f_new) = if f_full >= f_avg { (wf.p, f_full) } else { (avg, f_avg) };
            if f_new < f {
                // no representable ascent left
                rel = 0.0;
                if gap <= KKT_TOL * f.abs().max(1.0) {
                    converged = true;
                }
                break;
            }
            rel = (f_new - f) / f.abs().max(f64::MIN_POSITIVE);
            debug_assert!(f_new >= f, "objective decreased: {f} -> {f_new}");
            p = cand;
            f = f_new;
            if record {
                trace.push(f);
            }
        }
        if !converged && iterations >= IWF_MAX_ITERATIONS {
            gap = self.gap(&p, &self.effective_gains(&p));
            converged = gap <= KKT_TOL * f.abs().max(1.0) && rel < IWF_REL_TOL;
        }
        if !level.is_finite() {
            level = 1.0 / k as f64;
        }
        IwfOutcome {
            allocation: PowerAllocation { p, water_level: level },
            objective: f,
            iterations,
            converged,
            gap,
            trace,
        }
    }
}

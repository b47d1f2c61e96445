//! Spatial separability metrics: singular value spread, DPC and ZF sum-rate
//! capacities, and the number of users that receive power.

mod capacity;
mod waterfill;

pub use capacity::{
    dpc_capacity, dpc_capacity_with, dpc_objective_trace, zf_sum_rate, zf_sum_rate_with, AllocationMode, Allocations,
    CapacityResult, ChannelSlices, IWF_MAX_ITERATIONS, IWF_REL_TOL, KKT_TOL,
};
pub use waterfill::{waterfill, waterfill_shared};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{condition_number_gram, singular_values, SINGULAR_CONDITION};
use crate::tensor::SnapshotMatrix;

/// Mean per-user SNR `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    pub rho_db: f64,
}

impl SnrSpec {
    pub fn from_db(rho_db: f64) -> Self {
        Self { rho_db }
    }

    pub fn from_linear(rho: f64) -> Self {
        Self { rho_db: 10.0 * rho.log10() }
    }

    pub fn linear(&self) -> f64 {
        10f64.powf(self.rho_db / 10.0)
    }

    /// Transmit-power scaling `ρK/M` that harvests array gain as reduced power.
    pub fn scaling(&self, users: usize, antennas: usize) -> f64 {
        self.linear() * users as f64 / antennas as f64
    }
}

/// Per-user powers with `Σ p_k` equal to the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
    pub water_level: f64,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Share of total power below which a user counts as unserved.
pub const ALLOCATED_EPS: f64 = 1e-12;

/// Users with `p_k > 1e-12 · Σp`.
pub fn count_allocated_users(alloc: &PowerAllocation) -> usize {
    let eps = ALLOCATED_EPS * alloc.total();
    alloc.p.iter().filter(|&&p| p > eps).count()
}

/// Singular value spread of one slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Svs {
    Finite(f64),
    /// Smallest singular value is zero to working precision.
    Saturated,
}

impl Svs {
    /// Value in dB; `+inf` when saturated.
    pub fn db(&self) -> f64 {
        match self {
            Svs::Finite(v) => *v,
            Svs::Saturated => f64::INFINITY,
        }
    }

    pub fn is_saturated(&self) -> bool {
        matches!(self, Svs::Saturated)
    }
}

/// `κ = 10·log10(σ_max / σ_min)` in dB.
///
/// Slices whose Gram matrix has condition number at or above
/// [`SINGULAR_CONDITION`] report [`Svs::Saturated`] instead of a huge number.
pub fn svs(m: &SnapshotMatrix) -> Result<Svs> {
    let sv = singular_values(m)?;
    if condition_number_gram(&sv) >= SINGULAR_CONDITION {
        return Ok(Svs::Saturated);
    }
    let (max, min) = (sv[0], sv[sv.len() - 1]);
    Ok(Svs::Finite((10.0 * (max / min).log10()).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHandle;
    use crate::synth::gen_iid_rayleigh;
    use crate::tensor::Dims;

    #[test]
    fn svs_simple_cases() {
        let one = SnapshotMatrix::from_real_rows(&[vec![0.3, -2.0, 1.0]]).unwrap();
        assert_eq!(svs(&one).unwrap(), Svs::Finite(0.0));
        let d = SnapshotMatrix::from_real_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let v = svs(&d).unwrap().db();
        assert!((v - 3.010299956639812).abs() < 1e-12);
        let dup = SnapshotMatrix::from_real_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert!(svs(&dup).unwrap().is_saturated());
    }

    #[test]
    fn svs_matches_oracle_extremes() {
        let h = gen_iid_rayleigh(Dims::new(1, 1, 12, 128), RngHandle::new(8, 8)).unwrap();
        let m = h.slice(0, 0);
        let a = nalgebra::DMatrix::from_row_slice(12, 128, m.entries());
        let s = a.singular_values();
        let expect = 10.0 * (s.max() / s.min()).log10();
        assert!((svs(&m).unwrap().db() - expect).abs() < 1e-6);
    }

    #[test]
    fn counting() {
        assert_eq!(count_allocated_users(&PowerAllocation { p: vec![0.5, 0.5], water_level: 1.5 }), 2);
        assert_eq!(count_allocated_users(&PowerAllocation { p: vec![1.0, 0.0], water_level: 2.0 }), 1);
        assert_eq!(count_allocated_users(&waterfill(&[1.0, 10.0], 1.0).unwrap()), 1);
        assert_eq!(count_allocated_users(&PowerAllocation { p: vec![1.0, 1e-14], water_level: 1.0 }), 1);
    }

    #[test]
    fn snr_scaling() {
        let s = SnrSpec::from_linear(2.0);
        assert!((s.linear() - 2.0).abs() < 1e-12);
        assert!((s.scaling(2, 4) - 1.0).abs() < 1e-12);
    }
}

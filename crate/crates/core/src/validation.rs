//! Brute-force reference computations.
//!
//! Every routine here takes a deliberately different route from the
//! production code: full `M x M` determinants instead of the `K x K` dual
//! form, closed-form `2 x 2` inverses instead of Cholesky, exhaustive grids
//! instead of iterative water-filling, and nalgebra's SVD instead of the
//! Jacobi sweeps. [`run_suite`] bundles them into the checks behind the
//! `dmimo oracle` command.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::metrics::{dpc_capacity, svs, waterfill, zf_sum_rate, PowerAllocation, SnrSpec};
use crate::rng::RngHandle;
use crate::synth::gen_iid_rayleigh;
use crate::tensor::{Dims, SnapshotMatrix};

/// `log2 det(I_M + c Hᴴ P H)` with an explicit `M x M` determinant.
pub fn dpc_objective_full(h: &SnapshotMatrix, snr: SnrSpec, p: &[f64]) -> f64 {
    let (k, m) = (h.users(), h.antennas());
    let c = snr.scaling(k, m);
    let hm = DMatrix::from_row_slice(k, m, h.entries());
    let pm =
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(k, p.iter().map(|&x| Complex64::new(c * x, 0.0))));
    let a = DMatrix::<Complex64>::identity(m, m) + hm.adjoint() * pm * hm;
    a.determinant().norm().ln() / LN_2
}

/// Diagonal of `(H Hᴴ)⁻¹` for two users, by the closed-form 2x2 inverse.
pub fn zf_gains_2x2(h: &SnapshotMatrix) -> [f64; 2] {
    assert_eq!(h.users(), 2, "two-user closed form");
    let dot = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>();
    let (r0, r1) = (h.row(0), h.row(1));
    let a = dot(r0, r0).re;
    let d = dot(r1, r1).re;
    let b = dot(r0, r1);
    let det = a * d - b.norm_sqr();
    [d / det, a / det]
}

/// ZF sum rate for powers `p` from the closed-form gains.
pub fn zf_objective_2x2(h: &SnapshotMatrix, snr: SnrSpec, p: &[f64]) -> f64 {
    let g = zf_gains_2x2(h);
    let c = snr.scaling(2, h.antennas());
    (0..2).map(|i| (1.0 + c * p[i] / g[i]).log2()).sum()
}

/// Maximum of `objective([p, 1-p])` over `p ∈ {0, step, 2·step, …, 1}`.
pub fn grid_search_two_users(step: f64, objective: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let n = (1.0 / step).round() as usize;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=n {
        let p1 = (i as f64 * step).min(1.0);
        let v = objective(&[p1, 1.0 - p1]);
        if v > best.0 {
            best = (v, p1);
        }
    }
    best
}

/// Water level `μ` with `Σ max(0, μ − n_k) = budget`, by bisection.
pub fn bisection_water_level(noise: &[f64], budget: f64) -> f64 {
    let filled = |mu: f64| noise.iter().map(|n| (mu - n).max(0.0)).sum::<f64>();
    let mut lo = 0.0;
    let mut hi = noise.iter().cloned().fold(0.0, f64::max) + budget;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if filled(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Worst complementary-slackness error and `|Σp − budget|` of an allocation.
///
/// Active users must satisfy `p_k + n_k = μ`; inactive users `n_k ≥ μ`.
pub fn waterfill_kkt_violation(noise: &[f64], alloc: &PowerAllocation, budget: f64) -> (f64, f64) {
    let mu = alloc.water_level;
    let mut worst: f64 = 0.0;
    for (p, n) in alloc.p.iter().zip(noise) {
        if *p < 0.0 {
            worst = worst.max(-p);
        } else if *p > 0.0 {
            worst = worst.max((p + n - mu).abs());
        } else {
            worst = worst.max((mu - n).max(0.0));
        }
    }
    (worst, (alloc.total() - budget).abs())
}

/// SVS in dB from nalgebra's SVD.
pub fn svs_reference(h: &SnapshotMatrix) -> f64 {
    let s = DMatrix::from_row_slice(h.users(), h.antennas(), h.entries()).singular_values();
    10.0 * (s.max() / s.min()).log10()
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub worst_error: f64,
    pub tolerance: f64,
    pub cases: usize,
}

/// Quick brute-force validation of the metric implementations.
pub fn run_suite(seed: u64) -> Vec<OracleCheck> {
    let root = RngHandle::new(seed, 0);
    let mut checks = Vec::new();

    let mut worst_dpc: f64 = 0.0;
    let mut worst_zf: f64 = 0.0;
    let mut cases = 0;
    for (i, &m) in [2usize, 4, 8].iter().cycle().take(30).enumerate() {
        let h = gen_iid_rayleigh(Dims::new(1, 1, 2, m), root.derive(1, i as u64)).expect("dims").slice(0, 0);
        for rho in [0.0, 10.0, 20.0] {
            let snr = SnrSpec::from_db(rho);
            let (g_dpc, _) = grid_search_two_users(1e-4, |p| dpc_objective_full(&h, snr, p));
            let (g_zf, _) = grid_search_two_users(1e-4, |p| zf_objective_2x2(&h, snr, p));
            let d = dpc_capacity(&h, snr).map_or(f64::INFINITY, |r| r.sum_rate_bits_per_s_per_hz);
            let z = zf_sum_rate(&h, snr).map_or(f64::INFINITY, |r| r.sum_rate_bits_per_s_per_hz);
            worst_dpc = worst_dpc.max((d - g_dpc).abs());
            worst_zf = worst_zf.max((z - g_zf).abs());
            cases += 1;
        }
    }
    checks.push(check("dpc_vs_grid_search", worst_dpc, 1e-3, cases));
    checks.push(check("zf_vs_grid_search", worst_zf, 1e-3, cases));

    let mut worst_wf: f64 = 0.0;
    let mut r = root.derive(2, 0).rng();
    for _ in 0..1000 {
        let noise: Vec<f64> = (0..12).map(|_| r.random_range(0.1..5.0)).collect();
        let a = waterfill(&noise, 1.0).expect("valid noise");
        let mu = bisection_water_level(&noise, 1.0);
        worst_wf = worst_wf.max((a.water_level - mu).abs());
        for (p, n) in a.p.iter().zip(&noise) {
            worst_wf = worst_wf.max((p - (mu - n).max(0.0)).abs());
        }
    }
    checks.push(check("waterfill_vs_bisection", worst_wf, 1e-9, 1000));

    let mut worst_svs: f64 = 0.0;
    for i in 0..50 {
        let h = gen_iid_rayleigh(Dims::new(1, 1, 12, 128), root.derive(3, i)).expect("dims").slice(0, 0);
        let ours = svs(&h).map_or(f64::INFINITY, |s| s.db());
        worst_svs = worst_svs.max((ours - svs_reference(&h)).abs());
    }
    checks.push(check("svs_vs_reference_svd", worst_svs, 1e-6, 50));
    checks
}

fn check(name: &str, worst: f64, tol: f64, cases: usize) -> OracleCheck {
    OracleCheck { name: name.into(), passed: worst <= tol, worst_error: worst, tolerance: tol, cases }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_objective_matches_identity_case() {
        let h = SnapshotMatrix::identity(2);
        let v = dpc_objective_full(&h, SnrSpec::from_linear(2.0), &[0.5, 0.5]);
        assert!((v - 2.0).abs() < 1e-12);
        assert_eq!(zf_gains_2x2(&h), [1.0, 1.0]);
    }

    #[test]
    fn suite_passes() {
        for c in run_suite(1) {
            assert!(c.passed, "{c:?}");
        }
    }
}

//! Water-filling power allocation.

use crate::error::{Error, Result};
use crate::metrics::PowerAllocation;

/// Classic water-filling: maximize `Σ log(1 + p_k / noise_k)` subject to
/// `Σ p_k = budget`, `p_k ≥ 0`.
///
/// Returns `p_k = max(0, μ − noise_k)`; users whose floor equals the level
/// exactly get zero power.
pub fn waterfill(noise_levels: &[f64], budget: f64) -> Result<PowerAllocation> {
    if noise_levels.is_empty() {
        return Err(Error::InvalidInput("water-filling needs at least one channel".into()));
    }
    if let Some(bad) = noise_levels.iter().find(|n| !(n.is_finite() && **n > 0.0)) {
        return Err(Error::InvalidInput(format!("noise level {bad} is not finite and positive")));
    }
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::InvalidInput(format!("budget {budget} is not finite and positive")));
    }
    Ok(waterfill_unchecked(noise_levels, budget))
}

/// Like [`waterfill`] but tolerates `+inf` floors (permanently off channels).
pub(crate) fn waterfill_unchecked(noise: &[f64], budget: f64) -> PowerAllocation {
    let mut order: Vec<usize> = (0..noise.len()).filter(|&i| noise[i].is_finite()).collect();
    order.sort_by(|&a, &b| noise[a].total_cmp(&noise[b]));
    if order.is_empty() {
        return PowerAllocation { p: vec![0.0; noise.len()], water_level: f64::INFINITY };
    }

    // Largest active set whose level stays above its worst floor.
    let mut level = budget + noise[order[0]];
    let mut acc = 0.0;
    for (n, &i) in order.iter().enumerate() {
        acc += noise[i];
        let mu = (budget + acc) / (n + 1) as f64;
        if mu <= noise[i] {
            break;
        }
        level = mu;
    }
    let p: Vec<f64> = noise.iter().map(|&n| if n < level { level - n } else { 0.0 }).collect();
    PowerAllocation { p, water_level: level }
}

/// Water-filling with one allocation shared across several samples per user:
/// maximize `Σ_k Σ_s log(1 + p_k / noise[k][s])` subject to `Σ p_k = budget`.
///
/// With one sample per user this reduces to [`waterfill`]. Otherwise the
/// marginal `φ_k(p) = Σ_s 1/(noise[k][s] + p)` is matched to a common
/// multiplier `ν` by bisection; the reported water level is `1/ν`.
pub fn waterfill_shared(noise: &[Vec<f64>], budget: f64) -> Result<PowerAllocation> {
    if noise.is_empty() || noise.iter().any(Vec::is_empty) {
        return Err(Error::InvalidInput("every user needs at least one noise sample".into()));
    }
    if noise.iter().flatten().any(|n| n.is_nan() || *n <= 0.0) {
        return Err(Error::InvalidInput("noise levels must be positive".into()));
    }
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::InvalidInput(format!("budget {budget} is not finite and positive")));
    }
    Ok(waterfill_shared_unchecked(noise, budget))
}

pub(crate) fn waterfill_shared_unchecked(noise: &[Vec<f64>], budget: f64) -> PowerAllocation {
    if noise.iter().all(|s| s.len() == 1) {
        let flat: Vec<f64> = noise.iter().map(|s| s[0]).collect();
        return waterfill_unchecked(&flat, budget);
    }
    let marginal = |k: usize, p: f64| -> f64 { noise[k].iter().map(|n| 1.0 / (n + p)).sum() };
    let slope = |k: usize, p: f64| -> f64 { -noise[k].iter().map(|n| (n + p).powi(-2)).sum::<f64>() };

    let power_at = |k: usize, nu: f64| -> f64 {
        if marginal(k, 0.0) <= nu {
            return 0.0;
        }
        // φ_k is convex decreasing: Newton from the left approaches the root monotonically.
        let mut p = 0.0;
        for _ in 0..200 {
            let f = marginal(k, p) - nu;
            if f <= 0.0 {
                break;
            }
            let step = f / -slope(k, p);
            p += step;
            if step <= 1e-16 * p.max(1e-300) {
                break;
            }
        }
        p
    };
    let total = |nu: f64| -> f64 { (0..noise.len()).map(|k| power_at(k, nu)).sum() };

    let nu_hi = (0..noise.len()).map(|k| marginal(k, 0.0)).fold(0.0, f64::max);
    if nu_hi <= 0.0 {
        return PowerAllocation { p: vec![0.0; noise.len()], water_level: f64::INFINITY };
    }
    let mut hi = nu_hi;
    let mut lo = nu_hi / 2.0;
    while total(lo) < budget {
        hi = lo;
        lo /= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) >= budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    let mut p: Vec<f64> = (0..noise.len()).map(|k| power_at(k, lo)).collect();
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        for v in &mut p {
            *v *= budget / s;
        }
    }
    PowerAllocation { p, water_level: 1.0 / lo }
}

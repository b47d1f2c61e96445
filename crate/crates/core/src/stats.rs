//! Empirical CDFs and summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid size used for stored aggregate CDFs.
pub const DEFAULT_CDF_POINTS: usize = 512;

/// Empirical CDF on a uniform grid spanning the finite samples.
///
/// `+inf` samples (saturated SVS values) are not placed on the axis; they
/// appear only as `saturated_mass`, so the curve tops out at
/// `1 - saturated_mass`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cdf {
    pub grid: Vec<f64>,
    pub probability: Vec<f64>,
    pub saturated_mass: f64,
    pub finite_count: usize,
}

impl Cdf {
    /// Right-continuous evaluation at an arbitrary point, using the grid.
    pub fn at(&self, x: f64) -> f64 {
        let idx = self.grid.partition_point(|&g| g <= x);
        if idx == 0 {
            0.0
        } else {
            self.probability[idx - 1]
        }
    }
}

pub fn compute_cdf(samples: &[f64], grid_points: usize) -> Result<Cdf> {
    if grid_points == 0 {
        return Err(Error::InvalidInput("CDF grid needs at least one point".into()));
    }
    if samples.iter().any(|x| x.is_nan() || *x == f64::NEG_INFINITY) {
        return Err(Error::InvalidInput("CDF samples must be numbers or +inf".into()));
    }
    let mut finite: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::EmptySample);
    }
    finite.sort_by(f64::total_cmp);
    let total = samples.len() as f64;
    let (lo, hi) = (finite[0], finite[finite.len() - 1]);
    let grid: Vec<f64> = if grid_points == 1 {
        vec![hi]
    } else {
        (0..grid_points)
            .map(|i| if i + 1 == grid_points { hi } else { lo + (hi - lo) * i as f64 / (grid_points - 1) as f64 })
            .collect()
    };
    let probability = grid.iter().map(|&x| finite.partition_point(|&s| s <= x) as f64 / total).collect();
    Ok(Cdf {
        grid,
        probability,
        saturated_mass: (samples.len() - finite.len()) as f64 / total,
        finite_count: finite.len(),
    })
}

pub fn mean(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        None
    } else {
        Some(samples.iter().sum::<f64>() / samples.len() as f64)
    }
}

pub fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_samples() {
        let c = compute_cdf(&[1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(c.grid, vec![1.0, 2.0, 3.0]);
        assert_eq!(c.probability, vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(c.at(0.5), 0.0);
        assert_eq!(c.at(2.5), 2.0 / 3.0);
    }

    #[test]
    fn constant_samples_step() {
        let c = compute_cdf(&[4.0; 5], 8).unwrap();
        assert!(c.grid.iter().all(|&g| g == 4.0));
        assert!(c.probability.iter().all(|&p| p == 1.0));
        assert_eq!(c.at(3.999), 0.0);
    }

    #[test]
    fn saturated_tail() {
        let c = compute_cdf(&[1.0, f64::INFINITY, 2.0, f64::INFINITY], 2).unwrap();
        assert_eq!(c.saturated_mass, 0.5);
        assert_eq!(c.probability, vec![0.25, 0.5]);
        assert!(matches!(compute_cdf(&[f64::INFINITY], 4), Err(Error::EmptySample)));
    }

    #[test]
    fn errors() {
        assert!(matches!(compute_cdf(&[], 4), Err(Error::EmptySample)));
        assert!(compute_cdf(&[f64::NAN], 4).is_err());
        assert!(compute_cdf(&[1.0], 0).is_err());
    }

    #[test]
    fn normal_draws_match_closed_form() {
        use rand_distr::{Distribution, StandardNormal};
        use statrs::distribution::{ContinuousCDF, Normal};
        let mut r = crate::rng::RngHandle::new(2024, 0).rng();
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut r)).collect();
        let c = compute_cdf(&xs, DEFAULT_CDF_POINTS).unwrap();
        let phi = Normal::new(0.0, 1.0).unwrap();
        let ks = c.grid.iter().zip(&c.probability).map(|(x, p)| (p - phi.cdf(*x)).abs()).fold(0.0, f64::max);
        assert!(ks < 0.02, "KS distance {ks}");
    }

    #[test]
    fn summaries() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(mean(&[1.0, 2.0]), Some(1.5));
        assert_eq!(mean(&[]), None);
    }
}

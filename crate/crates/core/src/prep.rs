//! Per-user normalization and random subarray (topology) selection.

use num_complex::Complex64;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngHandle;
use crate::tensor::ChannelTensor;

/// A channel tensor with per-user energy `Σ_{t,l} ‖h_{t,l,k}‖² = M·L·T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTensor {
    tensor: ChannelTensor,
    scales: Vec<f64>,
}

impl NormalizedTensor {
    pub fn tensor(&self) -> &ChannelTensor {
        &self.tensor
    }

    pub fn into_tensor(self) -> ChannelTensor {
        self.tensor
    }

    /// Applied amplitude factor per user.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
}

impl AsRef<ChannelTensor> for NormalizedTensor {
    fn as_ref(&self) -> &ChannelTensor {
        &self.tensor
    }
}

/// Scale each user's channel by `sqrt(M·L·T / Σ_{t,l} ‖h_{t,l,k}‖²)`.
///
/// Removes the attenuation imbalance between users while keeping the
/// relative gains across antennas, subcarriers and snapshots of each user.
pub fn normalize(ch: &ChannelTensor) -> Result<NormalizedTensor> {
    let d = ch.dims();
    let target = (d.m * d.l * d.t) as f64;
    let scales: Vec<f64> = (0..d.k)
        .map(|k| {
            let e = ch.user_energy(k);
            if e > 0.0 {
                Ok((target / e).sqrt())
            } else {
                Err(Error::DegenerateUser { k })
            }
        })
        .collect::<Result<_>>()?;
    let mut data = ch.data().to_vec();
    for (i, z) in data.iter_mut().enumerate() {
        let k = (i / d.m) % d.k;
        *z *= scales[k];
    }
    let tensor = ChannelTensor::new(d, data, ch.ap_map().to_vec())?;
    Ok(NormalizedTensor { tensor, scales })
}

/// Which APs and which of their elements form a subarray.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub n_aps: usize,
    pub per_ap_antennas: usize,
    pub chosen_ap_ids: Vec<usize>,
    /// Element indices local to each chosen AP, ascending.
    pub chosen_element_ids: Vec<Vec<usize>>,
}

impl Topology {
    pub fn total_antennas(&self) -> usize {
        self.n_aps * self.per_ap_antennas
    }
}

/// Check that `m_total` antennas split as `W = m_total / n_aps` per AP.
pub fn check_topology(m_total: usize, n_aps: usize, available_aps: usize, per_ap: usize) -> Result<usize> {
    if n_aps == 0 || m_total == 0 {
        return Err(Error::Topology("M and N must be positive".into()));
    }
    if !m_total.is_multiple_of(n_aps) {
        return Err(Error::Topology(format!("M = {m_total} is not divisible by N = {n_aps}")));
    }
    if n_aps > available_aps {
        return Err(Error::Topology(format!("N = {n_aps} exceeds the {available_aps} available APs")));
    }
    let w = m_total / n_aps;
    if w > per_ap {
        return Err(Error::Capacity { requested: w, available: per_ap });
    }
    Ok(w)
}

/// Draw `n_aps` APs, then `m_total / n_aps` elements within each, all
/// uniformly without replacement. Entries are sliced exactly; no
/// renormalization happens here.
pub fn select_subarray(
    ch: &ChannelTensor,
    m_total: usize,
    n_aps: usize,
    rng: RngHandle,
) -> Result<(ChannelTensor, Topology)> {
    let ap_ids = ch.ap_ids();
    let groups: Vec<Vec<usize>> = ap_ids.iter().map(|&a| ch.antennas_of(a)).collect();
    let per_ap = groups.iter().map(Vec::len).min().unwrap_or(0);
    let w = check_topology(m_total, n_aps, ap_ids.len(), per_ap)?;

    let mut r = rng.rng();
    let mut aps: Vec<usize> = sample(&mut r, ap_ids.len(), n_aps).into_vec();
    aps.sort_unstable();
    let mut antennas = Vec::with_capacity(m_total);
    let mut chosen_elements = Vec::with_capacity(n_aps);
    for &a in &aps {
        let group = &groups[a];
        let mut elems: Vec<usize> = sample(&mut r, group.len(), w).into_vec();
        elems.sort_unstable();
        antennas.extend(elems.iter().map(|&e| group[e]));
        chosen_elements.push(elems);
    }
    let sub = ch.select_antennas(&antennas)?;
    let topo = Topology {
        n_aps,
        per_ap_antennas: w,
        chosen_ap_ids: aps.iter().map(|&i| ap_ids[i]).collect(),
        chosen_element_ids: chosen_elements,
    };
    Ok((sub, topo))
}

/// Multiply user `k` by `phases[k]` (unit-modulus rotation helper for tests and demos).
pub fn rotate_users(ch: &ChannelTensor, phases: &[f64]) -> Result<ChannelTensor> {
    let d = ch.dims();
    if phases.len() != d.k {
        return Err(Error::Dimension(format!("{} phases for {} users", phases.len(), d.k)));
    }
    let mut data = ch.data().to_vec();
    for (i, z) in data.iter_mut().enumerate() {
        *z *= Complex64::from_polar(1.0, phases[(i / d.m) % d.k]);
    }
    ChannelTensor::new(d, data, ch.ap_map().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_iid_rayleigh;
    use crate::tensor::Dims;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn scale_for_energy_32_of_128() {
        let d = Dims::new(1, 1, 1, 128);
        let mut data = vec![c(0.0); 128];
        for z in data.iter_mut().take(32) {
            *z = c(1.0);
        }
        let n = normalize(&ChannelTensor::colocated(d, data).unwrap()).unwrap();
        assert!((n.scales()[0] - 2.0).abs() < 1e-15);
        assert!((n.tensor().user_energy(0) - 128.0).abs() < 1e-9);
    }

    #[test]
    fn normalized_is_fixed_point() {
        let h = gen_iid_rayleigh(Dims::new(2, 3, 4, 8), RngHandle::new(1, 0)).unwrap();
        let n1 = normalize(&h).unwrap();
        let n2 = normalize(n1.tensor()).unwrap();
        for s in n2.scales() {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn per_user_scalar_only() {
        let d = Dims::new(1, 1, 2, 2);
        let data = vec![c(1.0), c(0.0), c(6.0), c(8.0)];
        let n = normalize(&ChannelTensor::colocated(d, data).unwrap()).unwrap();
        let t = n.tensor();
        assert!((t.user_energy(0) - 2.0).abs() < 1e-12);
        assert!((t.user_energy(1) - 2.0).abs() < 1e-12);
        assert!((t.get(0, 0, 1, 1) / t.get(0, 0, 1, 0) - c(8.0 / 6.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_user_is_degenerate() {
        let d = Dims::new(1, 1, 2, 2);
        let data = vec![c(1.0), c(0.0), c(0.0), c(0.0)];
        let err = normalize(&ChannelTensor::colocated(d, data).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DegenerateUser { k: 1 }));
    }

    fn four_aps() -> ChannelTensor {
        gen_iid_rayleigh(Dims::new(1, 1, 3, 128), RngHandle::new(9, 0)).unwrap().with_uniform_aps(4).unwrap()
    }

    #[test]
    fn full_selection() {
        let h = four_aps();
        let (sub, topo) = select_subarray(&h, 128, 4, RngHandle::new(1, 1)).unwrap();
        assert_eq!(topo.per_ap_antennas, 32);
        assert_eq!(topo.chosen_ap_ids, vec![0, 1, 2, 3]);
        assert_eq!(sub, h);
    }

    #[test]
    fn two_of_four_aps() {
        let h = four_aps();
        let (sub, topo) = select_subarray(&h, 64, 2, RngHandle::new(1, 2)).unwrap();
        assert_eq!(topo.per_ap_antennas, 32);
        assert_eq!(topo.chosen_ap_ids.len(), 2);
        assert_eq!(sub.dims().m, 64);
        assert_eq!(sub.ap_ids(), topo.chosen_ap_ids);
    }

    #[test]
    fn colocated_selection_maps_to_one_ap() {
        let h = four_aps();
        let (sub, topo) = select_subarray(&h, 16, 1, RngHandle::new(3, 3)).unwrap();
        assert_eq!(sub.ap_ids().len(), 1);
        assert_eq!(topo.chosen_element_ids[0].len(), 16);
    }

    #[test]
    fn selection_errors() {
        let h = four_aps();
        assert!(matches!(select_subarray(&h, 50, 4, RngHandle::new(0, 0)), Err(Error::Topology(_))));
        assert!(matches!(
            select_subarray(&h, 64, 1, RngHandle::new(0, 0)),
            Err(Error::Capacity { requested: 64, available: 32 })
        ));
        assert!(matches!(select_subarray(&h, 40, 5, RngHandle::new(0, 0)), Err(Error::Topology(_))));
    }

    #[test]
    fn element_inclusion_frequency_is_uniform() {
        let h = four_aps();
        let draws = 10_000;
        let mut hits = vec![vec![0usize; 32]; 4];
        for i in 0..draws {
            let (_, topo) = select_subarray(&h, 48, 4, RngHandle::new(11, i)).unwrap();
            for (ap, elems) in topo.chosen_ap_ids.iter().zip(&topo.chosen_element_ids) {
                assert_eq!(elems.len(), 12);
                for &e in elems {
                    hits[*ap][e] += 1;
                }
            }
        }
        let p = 12.0 / 32.0;
        for row in hits {
            for cnt in row {
                let f = cnt as f64 / draws as f64;
                assert!((f - p).abs() < 0.02, "frequency {f}");
            }
        }
    }

    #[test]
    fn slicing_is_exact() {
        let h = four_aps();
        let (sub, topo) = select_subarray(&h, 24, 3, RngHandle::new(5, 5)).unwrap();
        let mut col = 0;
        for (ap, elems) in topo.chosen_ap_ids.iter().zip(&topo.chosen_element_ids) {
            for &e in elems {
                let m = ap * 32 + e;
                for k in 0..3 {
                    assert_eq!(sub.get(0, 0, k, col), h.get(0, 0, k, m));
                }
                col += 1;
            }
        }
    }
}

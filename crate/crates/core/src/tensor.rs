//! Channel tensors and per-(snapshot, subcarrier) matrix slices.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tensor extents: snapshots `t`, subcarriers `l`, users `k`, antennas `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Dims {
    pub t: usize,
    pub l: usize,
    pub k: usize,
    pub m: usize,
}

impl Dims {
    pub fn new(t: usize, l: usize, k: usize, m: usize) -> Self {
        Self { t, l, k, m }
    }

    pub fn len(&self) -> usize {
        self.t * self.l * self.k * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slices(&self) -> usize {
        self.t * self.l
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.l == 0 || self.k == 0 || self.m == 0 {
            return Err(Error::Dimension(format!("all dims must be >= 1, got {self:?}")));
        }
        Ok(())
    }
}

/// Complex channel coefficients indexed `(t, l, k, m)`.
///
/// Storage is row-major with the antenna index fastest, so each `(t, l)`
/// slice is a contiguous `K x M` block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    dims: Dims,
    data: Vec<Complex64>,
    ap_map: Vec<usize>,
}

impl ChannelTensor {
    pub fn new(dims: Dims, data: Vec<Complex64>, ap_map: Vec<usize>) -> Result<Self> {
        dims.validate()?;
        if data.len() != dims.len() {
            return Err(Error::Dimension(format!(
                "data length {} does not match {}x{}x{}x{}",
                data.len(),
                dims.t,
                dims.l,
                dims.k,
                dims.m
            )));
        }
        if let Some(i) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coefficient at flat index {i}")));
        }
        check_ap_map(&ap_map, dims.m)?;
        Ok(Self { dims, data, ap_map })
    }

    /// Single-AP tensor (all antennas co-located).
    pub fn colocated(dims: Dims, data: Vec<Complex64>) -> Result<Self> {
        let map = vec![0; dims.m];
        Self::new(dims, data, map)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Access-point index of every antenna, grouped contiguously.
    pub fn ap_map(&self) -> &[usize] {
        &self.ap_map
    }

    /// Distinct AP ids in antenna order.
    pub fn ap_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = Vec::new();
        for &a in &self.ap_map {
            if ids.last() != Some(&a) {
                ids.push(a);
            }
        }
        ids
    }

    /// Antenna indices belonging to AP `ap`.
    pub fn antennas_of(&self, ap: usize) -> Vec<usize> {
        (0..self.dims.m).filter(|&m| self.ap_map[m] == ap).collect()
    }

    #[inline]
    pub fn index(&self, t: usize, l: usize, k: usize, m: usize) -> usize {
        let d = self.dims;
        ((t * d.l + l) * d.k + k) * d.m + m
    }

    #[inline]
    pub fn get(&self, t: usize, l: usize, k: usize, m: usize) -> Complex64 {
        self.data[self.index(t, l, k, m)]
    }

    /// Channel vector of user `k` at `(t, l)`.
    pub fn user_row(&self, t: usize, l: usize, k: usize) -> &[Complex64] {
        let start = self.index(t, l, k, 0);
        &self.data[start..start + self.dims.m]
    }

    /// Copy of the `K x M` matrix at `(t, l)`.
    pub fn slice(&self, t: usize, l: usize) -> SnapshotMatrix {
        let d = self.dims;
        let start = self.index(t, l, 0, 0);
        SnapshotMatrix { rows: d.k, cols: d.m, entries: self.data[start..start + d.k * d.m].to_vec(), index: (t, l) }
    }

    /// All slices in `(t, l)` order.
    pub fn slices(&self) -> impl Iterator<Item = SnapshotMatrix> + '_ {
        let d = self.dims;
        (0..d.t).flat_map(move |t| (0..d.l).map(move |l| self.slice(t, l)))
    }

    /// Σ over (t, l) of ‖h_{t,l,k}‖².
    pub fn user_energy(&self, k: usize) -> f64 {
        let d = self.dims;
        let mut e = 0.0;
        for t in 0..d.t {
            for l in 0..d.l {
                e += self.user_row(t, l, k).iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        e
    }

    /// Re-partition the antennas into `n_aps` equal contiguous groups.
    pub fn with_uniform_aps(mut self, n_aps: usize) -> Result<Self> {
        let m = self.dims.m;
        if n_aps == 0 || !m.is_multiple_of(n_aps) {
            return Err(Error::Topology(format!("{m} antennas cannot split evenly over {n_aps} APs")));
        }
        let w = m / n_aps;
        self.ap_map = (0..m).map(|i| i / w).collect();
        Ok(self)
    }

    /// New tensor keeping only the listed antennas, in the given order.
    pub fn select_antennas(&self, antennas: &[usize]) -> Result<Self> {
        let d = self.dims;
        if let Some(&bad) = antennas.iter().find(|&&m| m >= d.m) {
            return Err(Error::Dimension(format!("antenna {bad} out of range 0..{}", d.m)));
        }
        let nd = Dims { m: antennas.len(), ..d };
        let mut data = Vec::with_capacity(nd.len());
        for t in 0..d.t {
            for l in 0..d.l {
                for k in 0..d.k {
                    let row = self.user_row(t, l, k);
                    data.extend(antennas.iter().map(|&m| row[m]));
                }
            }
        }
        let map = antennas.iter().map(|&m| self.ap_map[m]).collect();
        Self::new(nd, data, map)
    }

    /// New tensor keeping only the listed users, in the given order.
    pub fn select_users(&self, users: &[usize]) -> Result<Self> {
        let d = self.dims;
        if let Some(&bad) = users.iter().find(|&&k| k >= d.k) {
            return Err(Error::Dimension(format!("user {bad} out of range 0..{}", d.k)));
        }
        let nd = Dims { k: users.len(), ..d };
        let mut data = Vec::with_capacity(nd.len());
        for t in 0..d.t {
            for l in 0..d.l {
                for &k in users {
                    data.extend_from_slice(self.user_row(t, l, k));
                }
            }
        }
        Self::new(nd, data, self.ap_map.clone())
    }
}

fn check_ap_map(map: &[usize], m: usize) -> Result<()> {
    if map.len() != m {
        return Err(Error::Dimension(format!("AP map has {} entries for {m} antennas", map.len())));
    }
    let mut seen = Vec::new();
    let mut prev = None;
    for &a in map {
        if prev != Some(a) {
            if seen.contains(&a) {
                return Err(Error::InvalidInput(format!("AP {a} antennas are not contiguous")));
            }
            seen.push(a);
            prev = Some(a);
        }
    }
    Ok(())
}

/// One `K x M` user-channel matrix `H_{t,l}`, rows are users.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
    index: (usize, usize),
}

impl SnapshotMatrix {
    /// Row-major `k x m` matrix.
    pub fn new(k: usize, m: usize, entries: Vec<Complex64>) -> Result<Self> {
        if k == 0 || m == 0 || entries.len() != k * m {
            return Err(Error::Dimension(format!("{} entries cannot form a {k}x{m} matrix", entries.len())));
        }
        Ok(Self { rows: k, cols: m, entries, index: (0, 0) })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let k = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(k, m, rows.concat())
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> =
            rows.iter().map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            e[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self { rows: n, cols: n, entries: e, index: (0, 0) }
    }

    /// Tag the matrix with the `(t, l)` slice it came from.
    pub fn with_index(mut self, t: usize, l: usize) -> Self {
        self.index = (t, l);
        self
    }

    pub fn users(&self) -> usize {
        self.rows
    }

    pub fn antennas(&self) -> usize {
        self.cols
    }

    /// `(t, l)` origin of the slice; `(0, 0)` for standalone matrices.
    pub fn index(&self) -> (usize, usize) {
        self.index
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        &self.entries[k * self.cols..(k + 1) * self.cols]
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { entries: self.entries.iter().map(|z| z * c).collect(), ..self.clone() }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput("matrix contains non-finite entries".into()))
        }
    }

    pub(crate) fn check_wide(&self) -> Result<()> {
        if self.rows > self.cols {
            Err(Error::Dimension(format!("{} users exceed {} antennas", self.rows, self.cols)))
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn layout_is_antenna_fastest() {
        let d = Dims::new(2, 2, 2, 3);
        let data: Vec<Complex64> = (0..d.len()).map(|i| c(i as f64)).collect();
        let h = ChannelTensor::colocated(d, data).unwrap();
        assert_eq!(h.get(0, 0, 0, 1), c(1.0));
        assert_eq!(h.get(0, 0, 1, 0), c(3.0));
        assert_eq!(h.get(0, 1, 0, 0), c(6.0));
        assert_eq!(h.get(1, 0, 0, 0), c(12.0));
        let s = h.slice(1, 1);
        assert_eq!(s.index(), (1, 1));
        assert_eq!(s.row(1)[2], c(23.0));
    }

    #[test]
    fn rejects_bad_tensors() {
        let d = Dims::new(1, 1, 1, 2);
        assert!(ChannelTensor::colocated(d, vec![c(1.0)]).is_err());
        assert!(ChannelTensor::colocated(d, vec![c(1.0), c(f64::NAN)]).is_err());
        assert!(ChannelTensor::colocated(Dims::new(0, 1, 1, 1), vec![]).is_err());
        let d3 = Dims::new(1, 1, 1, 3);
        assert!(ChannelTensor::new(d3, vec![c(1.0); 3], vec![0, 1, 0]).is_err());
        assert!(ChannelTensor::new(d3, vec![c(1.0); 3], vec![2, 2, 0]).is_ok());
    }

    #[test]
    fn antenna_and_user_selection() {
        let d = Dims::new(1, 2, 2, 4);
        let data: Vec<Complex64> = (0..d.len()).map(|i| c(i as f64)).collect();
        let h = ChannelTensor::new(d, data, vec![0, 0, 1, 1]).unwrap();
        let s = h.select_antennas(&[3, 2]).unwrap();
        assert_eq!(s.ap_map(), &[1, 1]);
        assert_eq!(s.user_row(0, 1, 1), &[c(15.0), c(14.0)]);
        let u = h.select_users(&[1]).unwrap();
        assert_eq!(u.user_row(0, 0, 0), h.user_row(0, 0, 1));
        assert_eq!(h.ap_ids(), vec![0, 1]);
    }
}

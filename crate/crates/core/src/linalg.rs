//! Dense complex linear algebra for small per-slice problems.
//!
//! Matrices are row-major `Vec<Complex64>`. Sizes here are at most a few
//! hundred, so plain loops are adequate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::SnapshotMatrix;

/// Condition number at or above which a Gram matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

const JACOBI_TOL: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 80;

/// Singular values of a `K x M` matrix (K ≤ M), largest first.
///
/// One-sided Hestenes–Jacobi on the rows: rows are rotated pairwise until
/// mutually orthogonal, after which their norms are the singular values.
pub fn singular_values(m: &SnapshotMatrix) -> Result<Vec<f64>> {
    m.check_finite()?;
    m.check_wide()?;
    let (k, n) = (m.users(), m.antennas());
    let mut rows: Vec<Vec<Complex64>> = (0..k).map(|i| m.row(i).to_vec()).collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let (a, b) = split_pair(&mut rows, i, j);
                let alpha: f64 = a.iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = b.iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // unit phase that makes <a, e·b> real
                let e = (gamma / g).conj();
                for idx in 0..n {
                    let x = a[idx];
                    let y = e * b[idx];
                    a[idx] = x * c - y * s;
                    b[idx] = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = rows.iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

fn split_pair(rows: &mut [Vec<Complex64>], i: usize, j: usize) -> (&mut [Complex64], &mut [Complex64]) {
    debug_assert!(i < j);
    let (lo, hi) = rows.split_at_mut(j);
    (&mut lo[i], &mut hi[0])
}

/// Gram matrix `H Hᴴ` (K x K, Hermitian).
pub fn gram(m: &SnapshotMatrix) -> Vec<Complex64> {
    let k = m.users();
    let mut g = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        let ri = m.row(i);
        for j in i..k {
            let rj = m.row(j);
            let v: Complex64 = ri.iter().zip(rj).map(|(a, b)| a * b.conj()).sum();
            g[i * k + j] = v;
            g[j * k + i] = v.conj();
        }
        g[i * k + i] = Complex64::new(g[i * k + i].re, 0.0);
    }
    g
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix.
pub fn cholesky(a: &[Complex64], n: usize) -> Option<Vec<Complex64>> {
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for p in 0..j {
            d -= l[j * n + p].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[j * n + j] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for p in 0..j {
                s -= l[i * n + p] * l[j * n + p].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    Some(l)
}

/// Natural-log determinant of a Hermitian positive-definite matrix.
pub fn ln_det_hpd(a: &[Complex64], n: usize) -> Option<f64> {
    let l = cholesky(a, n)?;
    Some((0..n).map(|i| 2.0 * l[i * n + i].re.ln()).sum())
}

/// Diagonal of the inverse of a Hermitian positive-definite matrix.
pub fn inverse_diagonal_hpd(a: &[Complex64], n: usize) -> Option<Vec<f64>> {
    let l = cholesky(a, n)?;
    // X = L⁻¹ by forward substitution, column by column; diag(A⁻¹)_k = Σ_i |X_ik|².
    let mut x = vec![Complex64::new(0.0, 0.0); n * n];
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            for p in col..i {
                s -= l[i * n + p] * x[p * n + col];
            }
            x[i * n + col] = s / l[i * n + i];
        }
    }
    Some((0..n).map(|k| (k..n).map(|i| x[i * n + k].norm_sqr()).sum()).collect())
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &[Complex64], n: usize, b: &[Complex64]) -> Option<Vec<Complex64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].norm().total_cmp(&m[j * n + col].norm()))?;
        if m[piv * n + col].norm() == 0.0 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(piv * n + c, col * n + c);
            }
            x.swap(piv, col);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col..n {
                let v = m[col * n + c];
                m[r * n + c] -= f * v;
            }
            let v = x[col];
            x[r] -= f * v;
        }
    }
    for r in (0..n).rev() {
        let mut s = x[r];
        for c in (r + 1)..n {
            s -= m[r * n + c] * x[c];
        }
        x[r] = s / m[r * n + r];
    }
    Some(x)
}

/// Diagonal entries `g_k²` of `(H Hᴴ)⁻¹`, the zero-forcing noise enhancement per user.
pub fn zf_effective_gains(m: &SnapshotMatrix) -> Result<Vec<f64>> {
    let sv = singular_values(m)?;
    let (t, l) = m.index();
    let condition = condition_number_gram(&sv);
    if condition >= SINGULAR_CONDITION {
        return Err(Error::RankDeficient { t, l, condition });
    }
    let k = m.users();
    inverse_diagonal_hpd(&gram(m), k)
        .filter(|d| d.iter().all(|&v| v > 0.0 && v.is_finite()))
        .ok_or(Error::RankDeficient { t, l, condition })
}

/// Condition number of `H Hᴴ` from the singular values of `H`.
pub fn condition_number_gram(sv: &[f64]) -> f64 {
    let max = sv.first().copied().unwrap_or(0.0);
    let min = sv.last().copied().unwrap_or(0.0);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        (max / min).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHandle;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(k: usize, m: usize, seed: u64) -> SnapshotMatrix {
        let mut rng = RngHandle::new(seed, 0).rng();
        let e = (0..k * m)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                c(re, im)
            })
            .collect();
        SnapshotMatrix::new(k, m, e).unwrap()
    }

    /// Singular values from nalgebra's complex SVD (independent route).
    fn oracle_sv(m: &SnapshotMatrix) -> Vec<f64> {
        let a = nalgebra::DMatrix::from_row_slice(m.users(), m.antennas(), m.entries());
        let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Explicit 3x3 inverse by cofactor expansion.
    fn cofactor_inverse_3(a: &[Complex64]) -> Vec<Complex64> {
        let e = |r: usize, col: usize| a[r * 3 + col];
        let minor = |r: usize, col: usize| {
            let rs: Vec<usize> = (0..3).filter(|&x| x != r).collect();
            let cs: Vec<usize> = (0..3).filter(|&x| x != col).collect();
            e(rs[0], cs[0]) * e(rs[1], cs[1]) - e(rs[0], cs[1]) * e(rs[1], cs[0])
        };
        let det: Complex64 = (0..3)
            .map(|col| {
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                e(0, col) * minor(0, col) * sign
            })
            .sum();
        let mut inv = vec![c(0.0, 0.0); 9];
        for r in 0..3 {
            for col in 0..3 {
                let sign = if (r + col) % 2 == 0 { 1.0 } else { -1.0 };
                inv[col * 3 + r] = minor(r, col) * sign / det;
            }
        }
        inv
    }

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(singular_values(&SnapshotMatrix::identity(2)).unwrap(), vec![1.0, 1.0]);
        let d = SnapshotMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(singular_values(&d).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn random_matches_oracle_svd() {
        for seed in 0..20 {
            let m = random(4, 16, seed);
            let ours = singular_values(&m).unwrap();
            let theirs = oracle_sv(&m);
            for (a, b) in ours.iter().zip(&theirs) {
                assert!(((a - b) / b).abs() < 1e-9, "{a} vs {b}");
            }
            let fro: f64 = ours.iter().map(|s| s * s).sum();
            assert!((fro - m.frobenius_sq()).abs() / m.frobenius_sq() < 1e-10);
        }
    }

    #[test]
    fn rejects_tall_and_nonfinite() {
        let tall = random(3, 2, 1);
        assert!(matches!(singular_values(&tall), Err(Error::Dimension(_))));
        let bad = SnapshotMatrix::new(1, 2, vec![c(f64::NAN, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(singular_values(&bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn zf_gains_identity_and_duplicate() {
        assert_eq!(zf_effective_gains(&SnapshotMatrix::identity(2)).unwrap(), vec![1.0, 1.0]);
        let dup = SnapshotMatrix::from_real_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap().with_index(3, 5);
        match zf_effective_gains(&dup) {
            Err(Error::RankDeficient { t: 3, l: 5, .. }) => {}
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn zf_gains_match_cofactor_inverse() {
        for seed in 100..110 {
            let m = random(3, 8, seed);
            let inv = cofactor_inverse_3(&gram(&m));
            let ours = zf_effective_gains(&m).unwrap();
            for k in 0..3 {
                assert!(((ours[k] - inv[k * 3 + k].re) / ours[k]).abs() < 1e-10);
                assert!(inv[k * 3 + k].im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lu_solve_roundtrip() {
        let m = random(4, 4, 9);
        let a = m.entries();
        let x0: Vec<Complex64> = (0..4).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let b: Vec<Complex64> = (0..4).map(|r| (0..4).map(|j| a[r * 4 + j] * x0[j]).sum()).collect();
        let x = lu_solve(a, 4, &b).unwrap();
        for (u, v) in x.iter().zip(&x0) {
            assert!((u - v).norm() < 1e-10);
        }
    }

    #[test]
    fn log_det_of_gram_matches_singular_values() {
        let m = random(5, 12, 4);
        let sv = singular_values(&m).unwrap();
        let expect: f64 = sv.iter().map(|s| 2.0 * s.ln()).sum();
        let got = ln_det_hpd(&gram(&m), 5).unwrap();
        assert!((got - expect).abs() < 1e-10);
    }
}

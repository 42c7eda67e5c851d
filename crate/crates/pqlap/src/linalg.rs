//! Banded symmetric positive definite solver.
//!
//! The interior-node Jacobians assembled from piecewise-linear elements on
//! uniform meshes are SPD with small bandwidth (tridiagonal in 1D), so a
//! banded Cholesky factorization covers every linear solve in the crate.

// Band-window index loops read better than iterator adaptors here.
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

/// Symmetric banded matrix storing the lower band: `data[i][d] = A[i, i-d]`
/// for `d = 0..=bw`.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSpd {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, d: usize) -> usize {
        i * (self.bw + 1) + d
    }

    /// Accumulate `A[i, j] += v`. Entries with `j > i` are ignored; the
    /// element loops visit both ordered pairs, so the lower triangle sees
    /// every contribution.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if j > i {
            return;
        }
        let d = i - j;
        debug_assert!(d <= self.bw, "entry outside band");
        let k = self.idx(i, d);
        self.data[k] += v;
    }

    /// In-place banded Cholesky `A = L Lᵀ`, then solve `A x = b`.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let bw = self.bw;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                let mut s = self.data[self.idx(i, i - j)];
                let kmin = lo.max(j.saturating_sub(bw));
                for k in kmin..j {
                    s -= self.data[self.idx(i, i - k)] * self.data[self.idx(j, j - k)];
                }
                let djj = self.data[self.idx(j, 0)];
                let at = self.idx(i, i - j);
                self.data[at] = s / djj;
            }
            let mut s = self.data[self.idx(i, 0)];
            for k in lo..i {
                let lik = self.data[self.idx(i, i - k)];
                s -= lik * lik;
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Linear(format!(
                    "nonpositive pivot {s} at row {i} of {n}"
                )));
            }
            let at = self.idx(i, 0);
            self.data[at] = s.sqrt();
        }
        // Forward substitution L y = b.
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for k in lo..i {
                s -= self.data[self.idx(i, i - k)] * x[k];
            }
            x[i] = s / self.data[self.idx(i, 0)];
        }
        // Back substitution Lᵀ x = y.
        for i in (0..n).rev() {
            let mut s = x[i];
            let hi = (i + bw).min(n - 1);
            for k in (i + 1)..=hi {
                s -= self.data[self.idx(k, k - i)] * x[k];
            }
            x[i] = s / self.data[self.idx(i, 0)];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
            m.swap(col, piv);
            x.swap(col, piv);
            for row in (col + 1)..n {
                let f = m[row][col] / m[col][col];
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
                x[row] -= f * x[col];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= m[i][k] * x[k];
            }
            x[i] /= m[i][i];
        }
        x
    }

    #[test]
    fn matches_dense_elimination() {
        // Deterministic pseudo-random SPD band matrix.
        let n = 40;
        let bw = 3;
        let mut state = 0x243f6a8885a308d3u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut dense = vec![vec![0.0; n]; n];
        let mut band = BandedSpd::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                let v = rnd();
                dense[i][j] = v;
                dense[j][i] = v;
                band.add(i, j, v);
                band.add(j, i, v);
            }
            let v = 4.0 + rnd().abs();
            dense[i][i] = v;
            band.add(i, i, v);
        }
        let b: Vec<f64> = (0..n).map(|_| rnd()).collect();
        let x_band = band.solve(&b).unwrap();
        let x_dense = dense_solve(&dense, &b);
        for (a, c) in x_band.iter().zip(&x_dense) {
            assert!((a - c).abs() < 1e-10, "{a} vs {c}");
        }
    }

    #[test]
    fn tridiagonal_poisson_row_exact() {
        // -u'' = 1 on (0,1): nodal solution x(1-x)/2 is exact for the
        // standard three-point stencil.
        let n = 9;
        let h = 1.0 / (n as f64 + 1.0);
        let mut band = BandedSpd::zeros(n, 1);
        for i in 0..n {
            band.add(i, i, 2.0 / h);
            if i > 0 {
                band.add(i, i - 1, -1.0 / h);
                band.add(i - 1, i, -1.0 / h);
            }
        }
        let b = vec![h; n];
        let x = band.solve(&b).unwrap();
        for (i, &v) in x.iter().enumerate() {
            let xi = (i as f64 + 1.0) * h;
            assert!((v - 0.5 * xi * (1.0 - xi)).abs() < 1e-13);
        }
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let mut band = BandedSpd::zeros(2, 1);
        band.add(0, 0, 1.0);
        band.add(1, 1, -1.0);
        assert!(band.solve(&[1.0, 1.0]).is_err());
    }
}

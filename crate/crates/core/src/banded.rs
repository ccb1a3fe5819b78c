//! Symmetric banded storage and an LDL^T factorization without pivoting.
//!
//! Interior blocks of structured lattice meshes have small bandwidth under
//! lexicographic node ordering, so a banded direct solver covers every
//! factorization this crate performs. Positive definiteness is established a
//! posteriori: the factorization reports the smallest pivot and the caller
//! decides whether the matrix was acceptable.

use crate::error::Error;
use crate::Result;

/// Lower band of a symmetric matrix, row-major.
///
/// Row `i` stores columns `i-bw ..= i` at `data[i*(bw+1) + (j + bw - i)]`.
#[derive(Debug, Clone)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSym {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `v` at (i, j); only the lower triangle is stored, so (i, j) and
    /// (j, i) refer to the same slot.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(r - c <= self.bw, "entry ({i},{j}) outside bandwidth {}", self.bw);
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            return 0.0;
        }
        self.data[self.idx(r, c)]
    }

    /// Largest diagonal entry, used to scale the pivot tolerance.
    pub fn max_diag(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[self.idx(i, i)])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Factors the matrix as L D L^T in banded storage.
    ///
    /// Fails with [`Error::ShiftTooLarge`] if any pivot falls at or below
    /// `pivot_tol_rel * max_diag`, which is how loss of positive definiteness
    /// is detected for shifted interior blocks.
    pub fn factor_ldlt(&self, pivot_tol_rel: f64) -> Result<BandedLdlt> {
        let n = self.n;
        let bw = self.bw;
        let mut f = self.data.clone();
        let stride = bw + 1;
        let tol = pivot_tol_rel * self.max_diag().max(0.0);

        for j in 0..n {
            let lo_j = j.saturating_sub(bw);
            // d_j = a_jj - sum_k l_jk^2 d_k
            let mut d = f[j * stride + bw];
            for k in lo_j..j {
                let ljk = f[j * stride + (k + bw - j)];
                let dk = f[k * stride + bw];
                d -= ljk * ljk * dk;
            }
            if !(d > tol) {
                return Err(Error::ShiftTooLarge(format!(
                    "non-positive pivot {d:.6e} at row {j} (tolerance {tol:.3e})"
                )));
            }
            f[j * stride + bw] = d;
            let hi = (j + bw).min(n - 1);
            for i in (j + 1)..=hi {
                let lo_i = i.saturating_sub(bw);
                let lo = lo_i.max(lo_j);
                let mut s = f[i * stride + (j + bw - i)];
                for k in lo..j {
                    let lik = f[i * stride + (k + bw - i)];
                    let ljk = f[j * stride + (k + bw - j)];
                    let dk = f[k * stride + bw];
                    s -= lik * ljk * dk;
                }
                f[i * stride + (j + bw - i)] = s / d;
            }
        }
        Ok(BandedLdlt {
            n,
            bw,
            data: f,
        })
    }
}

/// Banded L D L^T factors; `solve_in_place` performs the three triangular
/// sweeps.
#[derive(Debug, Clone)]
pub struct BandedLdlt {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedLdlt {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Smallest pivot of the factorization (all pivots are positive by
    /// construction).
    pub fn min_pivot(&self) -> f64 {
        let stride = self.bw + 1;
        (0..self.n)
            .map(|i| self.data[i * stride + self.bw])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let n = self.n;
        let bw = self.bw;
        let stride = bw + 1;
        // L y = b
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for k in lo..i {
                s -= self.data[i * stride + (k + bw - i)] * x[k];
            }
            x[i] = s;
        }
        // D z = y
        for i in 0..n {
            x[i] /= self.data[i * stride + bw];
        }
        // L^T x = z
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = x[i];
            for k in (i + 1)..=hi {
                s -= self.data[k * stride + (i + bw - k)] * x[k];
            }
            x[i] = s;
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

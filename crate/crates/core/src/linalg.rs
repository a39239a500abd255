//! Banded matrices. Structured meshes number nodes so that every element
//! couples indices at most `bw` apart, so factorizations stay O(n·bw²).

use crate::error::{Result, SplError};

/// Symmetric band matrix, lower triangle stored row-wise.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBand {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to entry (i, j) (and by symmetry (j, i)).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i},{j}) outside bandwidth {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Zeroes row and column `i` and puts `diag` on the diagonal.
    pub fn pin(&mut self, i: usize, diag: f64) {
        let lo = i.saturating_sub(self.bw);
        let hi = (i + self.bw).min(self.n - 1);
        for j in lo..=hi {
            let (a, b) = if i >= j { (i, j) } else { (j, i) };
            let k = self.idx(a, b);
            self.data[k] = 0.0;
        }
        let k = self.idx(i, i);
        self.data[k] = diag;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[self.idx(i, i)]).collect()
    }

    /// self + alpha·other (same shape).
    pub fn add_scaled(&mut self, alpha: f64, other: &SymBand) {
        assert_eq!(self.n, other.n);
        assert_eq!(self.bw, other.bw);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.idx(i, i)] * x[i];
        }
        y
    }

    /// Cholesky factorization; `None` when a pivot is not positive.
    pub fn cholesky(&self) -> Option<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let scale = self.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs())).max(1e-300);
        let mut l = self.data.clone();
        let at = |i: usize, j: usize| i * (bw + 1) + (i - j);
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut d = l[at(j, j)];
            for k in lo..j {
                let v = l[at(j, k)];
                d -= v * v;
            }
            if !(d > 1e-14 * scale) {
                return None;
            }
            let d = d.sqrt();
            l[at(j, j)] = d;
            let hi = (j + bw).min(n - 1);
            for i in j + 1..=hi {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut s = l[at(i, j)];
                for k in lo_i..j {
                    s -= l[at(i, k)] * l[at(j, k)];
                }
                l[at(i, j)] = s / d;
            }
        }
        Some(BandCholesky { n, bw, l })
    }

    /// LU factorization with partial pivoting; works for indefinite matrices.
    pub fn lu(&self) -> Result<BandLu> {
        BandLu::factor(self)
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let at = |i: usize, j: usize| i * (bw + 1) + (i - j);
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.l[at(i, k)] * y[k];
            }
            y[i] = s / self.l[at(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = y[i];
            for k in i + 1..=hi {
                s -= self.l[at(k, i)] * y[k];
            }
            y[i] = s / self.l[at(i, i)];
        }
        y
    }
}

/// Band LU with row interchanges. Rows keep a window of width 3·bw+1
/// starting at column i-bw, which holds the fill from pivoting.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    bw: usize,
    width: usize,
    rows: Vec<f64>,
    mult: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    fn factor(a: &SymBand) -> Result<Self> {
        let (n, bw) = (a.n, a.bw);
        let width = 3 * bw + 1;
        let mut rows = vec![0.0; n * width];
        let col = |i: usize, j: usize| -> usize { i * width + (j + bw - i) };
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw).min(n - 1);
            for j in lo..=hi {
                rows[col(i, j)] = a.get(i, j);
            }
        }
        let mut mult = vec![0.0; n * bw.max(1)];
        let mut piv = vec![0; n];
        let scale = rows.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for k in 0..n {
            let last = (k + bw).min(n - 1);
            let mut p = k;
            let mut best = rows[col(k, k)].abs();
            for i in k + 1..=last {
                let v = rows[col(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-15 * scale {
                return Err(SplError::LinearSolve(format!("singular pivot at row {k}")));
            }
            piv[k] = p;
            let jmax = (k + 2 * bw).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    rows.swap(col(k, j), col(p, j));
                }
            }
            let pivot = rows[col(k, k)];
            for i in k + 1..=last {
                let m = rows[col(i, k)] / pivot;
                mult[k * bw.max(1) + (i - k - 1)] = m;
                if m != 0.0 {
                    rows[col(i, k)] = 0.0;
                    for j in k + 1..=jmax {
                        let u = rows[col(k, j)];
                        rows[col(i, j)] -= m * u;
                    }
                }
            }
        }
        Ok(BandLu {
            n,
            bw,
            width,
            rows,
            mult,
            piv,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, width) = (self.n, self.bw, self.width);
        let col = |i: usize, j: usize| -> usize { i * width + (j + bw - i) };
        let mut y = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                y.swap(k, p);
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                y[i] -= self.mult[k * bw.max(1) + (i - k - 1)] * y[k];
            }
        }
        for i in (0..n).rev() {
            let jmax = (i + 2 * bw).min(n - 1);
            let mut s = y[i];
            for j in i + 1..=jmax {
                s -= self.rows[col(i, j)] * y[j];
            }
            y[i] = s / self.rows[col(i, i)];
        }
        y
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

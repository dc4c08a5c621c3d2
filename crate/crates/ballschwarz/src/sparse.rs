//! Sparse and banded linear algebra kernels: CSR matrices, banded and
//! dense Cholesky factorizations, and symmetric tridiagonal extreme
//! eigenvalues.

use crate::error::Error;
use crate::Result;
use rayon::prelude::*;

/// Compressed sparse row matrix (square).
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, val)` lists; entries within a row must be
    /// sorted by column.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> CsrMatrix {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Entries of row `i` as parallel column/value slices.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let (cols, vals) = (
                &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]],
                &self.vals[self.row_ptr[i]..self.row_ptr[i + 1]],
            );
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c];
            }
            *yi = s;
        });
    }

    /// Maximum relative asymmetry, for diagnostics.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let (jc, jv) = self.row(j);
                let vt = jc
                    .iter()
                    .position(|&c| c == i)
                    .map(|k| jv[k])
                    .unwrap_or(0.0);
                worst = worst.max((v - vt).abs());
            }
        }
        worst
    }
}

/// Symmetric banded matrix, lower band stored row-major: entry `(i, j)`
/// with `i - bw <= j <= i` sits at `i * (bw + 1) + bw - i + j`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    pub n: usize,
    pub bw: usize,
    pub data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> BandMatrix {
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + self.bw - (i - j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }
}

/// Cholesky factorization of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &BandMatrix) -> Result<BandCholesky> {
        let (n, bw) = (a.n, a.bw);
        let w = bw + 1;
        let mut l = a.data.clone();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = l[i * w + bw - (i - j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= l[i * w + bw - (i - k)] * l[j * w + bw - (j - k)];
                }
                if j < i {
                    l[i * w + bw - (i - j)] = s / l[j * w + bw];
                } else {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite {
                            msg: format!("pivot {s} at row {i}"),
                        });
                    }
                    l[i * w + bw] = s.sqrt();
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        // Forward: L y = b.
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = b[i];
            for j in lo..i {
                s -= self.l[i * w + bw - (i - j)] * b[j];
            }
            b[i] = s / self.l[i * w + bw];
        }
        // Backward: L^T x = y.
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = b[i];
            for j in (i + 1)..=hi {
                s -= self.l[j * w + bw - (j - i)] * b[j];
            }
            b[i] = s / self.l[i * w + bw];
        }
    }

    /// Bytes of factor storage, for resource accounting.
    pub fn storage_bytes(&self) -> usize {
        self.l.len() * std::mem::size_of::<f64>()
    }
}

/// Dense Cholesky for small symmetric positive definite systems (row-major
/// input).
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    pub fn factor(a: &[f64], n: usize) -> Result<DenseCholesky> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if j < i {
                    l[i * n + j] = s / l[j * n + j];
                } else {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite {
                            msg: format!("pivot {s} at row {i}"),
                        });
                    }
                    l[i * n + i] = s.sqrt();
                }
            }
        }
        Ok(DenseCholesky { n, l })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.l[i * n + j] * b[j];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in (i + 1)..n {
                s -= self.l[j * n + i] * b[j];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly
/// below `x` (Sturm sequence count).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0_f64;
    for i in 0..diag.len() {
        let off_sq = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = diag[i] - x - off_sq / d;
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Extreme eigenvalues of a symmetric tridiagonal matrix by bisection.
pub fn sym_tridiag_extreme_eigs(diag: &[f64], off: &[f64]) -> (f64, f64) {
    assert!(!diag.is_empty());
    assert_eq!(off.len() + 1, diag.len());
    let n = diag.len();
    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = (if i > 0 { off[i - 1].abs() } else { 0.0 })
            + (if i + 1 < n { off[i].abs() } else { 0.0 });
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let bisect = |target: usize| {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..120 {
            let mid = 0.5 * (a + b);
            if sturm_count(diag, off, mid) >= target {
                b = mid;
            } else {
                a = mid;
            }
            if (b - a) <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
                break;
            }
        }
        0.5 * (a + b)
    };
    (bisect(1), bisect(n))
}

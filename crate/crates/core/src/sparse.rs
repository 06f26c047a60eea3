//! Compressed sparse storage with both row and column access.

use crate::error::{Error, Result};

/// Compressed sparse row matrix. Column indices within each row are strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets in any order.
    /// Explicit zeros are kept; duplicate coordinates are rejected.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::invalid(format!(
                    "entry ({r}, {c}) outside a {nrows}x{ncols} matrix"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; triplets.len()];
        let mut values = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let slot = next[r];
            indices[slot] = c;
            values[slot] = v;
            next[r] += 1;
        }
        for r in 0..nrows {
            let (lo, hi) = (indptr[r], indptr[r + 1]);
            let mut pairs: Vec<(usize, f64)> = indices[lo..hi]
                .iter()
                .copied()
                .zip(values[lo..hi].iter().copied())
                .collect();
            pairs.sort_by_key(|p| p.0);
            for w in pairs.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::invalid(format!("duplicate entry ({r}, {})", w[0].0)));
                }
            }
            for (k, (c, v)) in pairs.into_iter().enumerate() {
                indices[lo + k] = c;
                values[lo + k] = v;
            }
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Builds a matrix from row-major dense data, skipping zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            Error::check_len(ncols, row.len())?;
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    /// Entries of row `i` whose column lies in `[lo, hi)`.
    #[inline]
    pub fn row_range(&self, i: usize, lo: usize, hi: usize) -> (&[usize], &[f64]) {
        let (idx, val) = self.row(i);
        let a = idx.partition_point(|&c| c < lo);
        let b = a + idx[a..].partition_point(|&c| c < hi);
        (&idx[a..b], &val[a..b])
    }

    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(&c, &v)| v * x[c]).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |k| val[k])
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row_dot(i, x)).collect()
    }

    /// `Aᵀ v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let (idx, val) = self.row(i);
            for (&c, &a) in idx.iter().zip(val) {
                out[c] += a * vi;
            }
        }
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // rows visited in order, so each transposed row comes out sorted
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                let slot = next[c];
                indices[slot] = i;
                values[slot] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            values,
        }
    }

    /// Keeps the listed columns, renumbered so that `cols[k]` becomes column `k`.
    pub fn select_columns(&self, cols: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            map[c] = k;
        }
        let monotone = cols.windows(2).all(|w| w[0] < w[1]);
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            scratch.clear();
            for (&c, &v) in idx.iter().zip(val) {
                let k = map[c];
                if k != usize::MAX {
                    scratch.push((k, v));
                }
            }
            if !monotone {
                scratch.sort_by_key(|p| p.0);
            }
            for &(k, v) in &scratch {
                indices.push(k);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: cols.len(),
            indptr,
            indices,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in out.iter_mut().enumerate() {
            let (idx, val) = self.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                row[c] = v;
            }
        }
        out
    }
}

/// Design matrix with row and column views, plus the response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: CsrMatrix,
    cols: CsrMatrix,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(matrix: CsrMatrix, y: Vec<f64>) -> Result<Self> {
        Error::check_len(matrix.nrows(), y.len())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("response contains non-finite values"));
        }
        let cols = matrix.transpose();
        Ok(Self {
            rows: matrix,
            cols,
            y,
        })
    }

    pub fn from_dense(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        Self::new(CsrMatrix::from_dense(rows)?, y)
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn d(&self) -> usize {
        self.rows.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Row-major view: row `i` is sample `a_i`.
    pub fn rows(&self) -> &CsrMatrix {
        &self.rows
    }

    /// Column-major view: row `j` of this matrix is feature column `A_j`.
    pub fn cols(&self) -> &CsrMatrix {
        &self.cols
    }

    pub fn is_binary(&self) -> bool {
        self.y.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

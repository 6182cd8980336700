use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted column indices in every row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the union of the dense blocks `groups × groups` as pattern.
    pub fn from_groups(n: usize, groups: &[Vec<usize>]) -> Self {
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for g in groups {
            for &i in g {
                rows[i].extend(g.iter().copied());
            }
        }
        Self::from_rows(n, n, rows)
    }

    fn from_rows(nrows: usize, ncols: usize, rows: Vec<BTreeSet<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in rows {
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sums duplicate entries.
    pub fn from_triplets(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nrows];
        for &(i, j, _) in entries {
            if i >= nrows || j >= ncols {
                return Err(Error::DimensionMismatch(format!("entry ({i},{j}) outside {nrows}x{ncols}")));
            }
            rows[i].insert(j);
        }
        let mut m = Self::from_rows(nrows, ncols, rows);
        for &(i, j, v) in entries {
            m.add(i, j, v)?;
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Storage position of (i, j), if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.nrows {
            return None;
        }
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b].binary_search(&j).ok().map(|k| a + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        let p = self
            .position(i, j)
            .ok_or_else(|| Error::DimensionMismatch(format!("entry ({i},{j}) not in sparsity pattern")))?;
        self.values[p] += v;
        Ok(())
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn fill_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec dimension");
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.ncols];
        for i in 0..self.nrows {
            for (j, _) in self.row(i) {
                rows[j].insert(i);
            }
        }
        let mut t = Self::from_rows(self.ncols, self.nrows, rows);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let p = t.position(j, i).unwrap();
                t.values[p] = v;
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |a_ij - a_ji| / max |a_ij|.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Rows `rows` and columns `cols` (both strictly increasing) as a new matrix.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            map[c] = k;
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &r in rows {
            for (j, v) in self.row(r) {
                let k = map[j];
                if k != usize::MAX {
                    col_idx.push(k);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows: rows.len(),
            ncols: cols.len(),
            row_ptr,
            col_idx,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (1, 1, -1.0)]).unwrap();
        assert_eq!(m.col_idx(), &[0, 2, 1]);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 2.0]), vec![5.0, -1.0]);
        assert!(CsrMatrix::from_triplets(1, 1, &[(0, 1, 1.0)]).is_err());
    }

    #[test]
    fn transpose_and_submatrix() {
        let m = CsrMatrix::from_triplets(3, 3, &[(0, 1, 1.0), (1, 0, 2.0), (2, 2, 3.0), (0, 2, 4.0)]).unwrap();
        let t = m.transpose();
        assert_eq!(t.to_dense(), m.to_dense().transpose());
        let s = m.submatrix(&[0, 2], &[1, 2]);
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[1.0, 4.0, 0.0, 3.0]));
        assert!(m.asymmetry() > 0.0);
        assert_eq!(CsrMatrix::identity(3).asymmetry(), 0.0);
    }

    #[test]
    fn group_pattern_is_union_of_blocks() {
        let m = CsrMatrix::from_groups(4, &[vec![0, 1], vec![1, 3]]);
        assert_eq!(m.nnz(), 4 + 4 - 1);
        assert!(m.position(0, 3).is_none());
        assert!(m.position(3, 1).is_some());
    }
}

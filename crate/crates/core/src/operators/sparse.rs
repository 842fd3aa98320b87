use std::io::{self, Write};

use nalgebra::DMatrix;

/// Real sparse matrix in compressed-row form.
///
/// Column indices within a row are strictly increasing and no stored value is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseOperator { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    /// Builds from (row, col, value) triplets. Duplicates are summed and exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(trips.len());
        let mut values: Vec<f64> = Vec::with_capacity(trips.len());
        let mut rows = Vec::with_capacity(trips.len());
        for (r, c, v) in trips {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        let mut k = 0;
        for i in 0..rows.len() {
            if values[i] != 0.0 {
                rows[k] = rows[i];
                col_idx[k] = col_idx[i];
                values[k] = values[i];
                k += 1;
            }
        }
        rows.truncate(k);
        col_idx.truncate(k);
        values.truncate(k);
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let trips = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), d.len(), trips)
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

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// Row-major triplet iterator.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> Self {
        let trips = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, trips)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// Sparse product `self * rhs`.
    pub fn mul(&self, rhs: &SparseOperator) -> Self {
        assert_eq!(self.ncols, rhs.nrows);
        let mut trips = Vec::new();
        let mut acc = vec![0.0; rhs.ncols];
        let mut mark = vec![usize::MAX; rhs.ncols];
        let mut touched = Vec::new();
        for r in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                trips.push((r, c, acc[c]));
            }
        }
        Self::from_triplets(self.nrows, rhs.ncols, trips)
    }

    /// `diag(left) * self * diag(right)`.
    pub fn scale(&self, left: &[f64], right: &[f64]) -> Self {
        let trips = self.triplets().map(|(r, c, v)| (r, c, left[r] * v * right[c])).collect();
        Self::from_triplets(self.nrows, self.ncols, trips)
    }

    pub fn add(&self, rhs: &SparseOperator) -> Self {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let trips = self.triplets().chain(rhs.triplets()).collect();
        Self::from_triplets(self.nrows, self.ncols, trips)
    }

    /// Submatrix on the given rows and columns, renumbered in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut trips = Vec::new();
        for (k, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if col_map[c] != usize::MAX {
                    trips.push((k, col_map[c], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), trips)
    }

    /// Horizontal concatenation `[self | rhs]`.
    pub fn hcat(&self, rhs: &SparseOperator) -> Self {
        assert_eq!(self.nrows, rhs.nrows);
        let off = self.ncols;
        let trips = self.triplets().chain(rhs.triplets().map(|(r, c, v)| (r, c + off, v))).collect();
        Self::from_triplets(self.nrows, self.ncols + rhs.ncols, trips)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Coordinate text export: header line `nrows ncols nnz`, then `row col value` sorted row-major.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{} {} {}", r, c, crate::fmt17(v))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_sum_and_zeros_vanish() {
        let a = SparseOperator::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 1.0), (1, 0, -1.0)]);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 0.0);
    }

    #[test]
    fn product_matches_dense() {
        let a = SparseOperator::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0)]);
        let b = SparseOperator::from_triplets(3, 2, vec![(0, 1, 4.0), (1, 0, 3.0), (2, 0, 1.0)]);
        assert_eq!(a.mul(&b).to_dense(), a.to_dense() * b.to_dense());
    }

    #[test]
    fn coo_is_row_major() {
        let a = SparseOperator::from_triplets(2, 2, vec![(1, 0, 1.0), (0, 1, 2.0)]);
        let mut buf = Vec::new();
        a.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "2 2 2");
        assert!(lines[1].starts_with("0 1 "));
        assert!(lines[2].starts_with("1 0 "));
    }
}

//! Compressed sparse row matrices.
//!
//! Column indices are stored as `u32`; the fine-level DG operators are the
//! largest objects in memory and the index width matters there.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<T>,
    /// Size of the element blocks along the diagonal, when the matrix has that structure.
    block_size: Option<usize>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds a matrix from raw CSR arrays. Column indices within a row must be strictly increasing.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<u32>,
        values: Vec<T>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || col_idx.len() != values.len() || row_ptr[nrows] != values.len() {
            return Err(Error::DimensionMismatch("inconsistent CSR arrays".into()));
        }
        for r in 0..nrows {
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c as usize >= ncols) {
                return Err(Error::InvalidArgument(format!("row {r} has unsorted or out-of-range columns")));
            }
        }
        Ok(Self { nrows, ncols, row_ptr, col_idx, values, block_size: None })
    }

    /// Sums duplicate entries; explicit zeros are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut order = vec![0usize; triplets.len()];
        let mut next = counts.clone();
        for (t, &(r, _, _)) in triplets.iter().enumerate() {
            order[next[r]] = t;
            next[r] += 1;
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut row: Vec<(usize, T)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend(order[counts[r]..counts[r + 1]].iter().map(|&t| (triplets[t].1, triplets[t].2)));
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in &row {
                assert!(c < ncols, "column {c} out of range");
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c as u32);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr[r + 1] = values.len();
        }
        Self { nrows, ncols, row_ptr, col_idx, values, block_size: None }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n as u32).collect(),
            values: vec![T::one(); n],
            block_size: None,
        }
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let mut m = Self::identity(d.len());
        m.values.copy_from_slice(d);
        m
    }

    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut trip = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != T::zero() {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &trip)
    }

    pub fn with_block_size(mut self, bs: usize) -> Self {
        assert!(bs > 0 && self.nrows % bs == 0 && self.ncols == self.nrows);
        self.block_size = Some(bs);
        self
    }

    pub fn block_size(&self) -> Option<usize> {
        self.block_size
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

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn row(&self, r: usize) -> (&[u32], &[T]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(p) => vals[p],
            Err(_) => T::zero(),
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut s = T::zero();
            for (c, v) in self.col_idx[a..b].iter().zip(&self.values[a..b]) {
                s += *v * x[*c as usize];
            }
            *yr = s;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// y = A^T x
    pub fn matvec_transpose(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        y.iter_mut().for_each(|v| *v = T::zero());
        for (r, &xr) in x.iter().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            for (c, v) in self.col_idx[a..b].iter().zip(&self.values[a..b]) {
                y[*c as usize] += *v * xr;
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c as usize + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0u32; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for r in 0..self.nrows {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            for p in a..b {
                let c = self.col_idx[p] as usize;
                col_idx[next[c]] = r as u32;
                values[next[c]] = self.values[p];
                next[c] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, row_ptr: counts, col_idx, values, block_size: None }
    }

    /// Sparse product `self * other` (Gustavson with a dense accumulator).
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let n = other.ncols;
        let mut marker = vec![usize::MAX; n];
        let mut acc = vec![T::zero(); n];
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let mut col_idx: Vec<u32> = Vec::new();
        let mut values: Vec<T> = Vec::new();
        let mut cols: Vec<u32> = Vec::new();
        for r in 0..self.nrows {
            cols.clear();
            let (ac, av) = self.row(r);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k as usize);
                for (&c, &b) in bc.iter().zip(bv) {
                    let cu = c as usize;
                    if marker[cu] != r {
                        marker[cu] = r;
                        acc[cu] = a * b;
                        cols.push(c);
                    } else {
                        acc[cu] += a * b;
                    }
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                col_idx.push(c);
                values.push(acc[c as usize]);
            }
            row_ptr.push(values.len());
        }
        Ok(Self { nrows: self.nrows, ncols: n, row_ptr, col_idx, values, block_size: None })
    }

    /// Galerkin triple product `P^T A P`.
    pub fn ptap(&self, p: &Self) -> Result<Self> {
        let ap = self.matmul(p)?;
        p.transpose().matmul(&ap)
    }

    /// If every row has at most one entry equal to one and every column exactly
    /// one, returns the selected fine index for each coarse column.
    pub fn as_selection(&self) -> Option<Vec<usize>> {
        let mut sel = vec![usize::MAX; self.ncols];
        for r in 0..self.nrows {
            let (c, v) = self.row(r);
            match c.len() {
                0 => {}
                1 if v[0] == T::one() => {
                    let c = c[0] as usize;
                    if sel[c] != usize::MAX {
                        return None;
                    }
                    sel[c] = r;
                }
                _ => return None,
            }
        }
        sel.iter().all(|&s| s != usize::MAX).then_some(sel)
    }

    /// Principal sub-matrix on the given (increasing) index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        let mut map = vec![u32::MAX; self.ncols];
        for (new, &old) in idx.iter().enumerate() {
            map[old] = new as u32;
        }
        let mut row_ptr = Vec::with_capacity(idx.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut row: Vec<(u32, T)> = Vec::new();
        for &r in idx {
            row.clear();
            let (c, v) = self.row(r);
            for (&cc, &vv) in c.iter().zip(v) {
                let m = map[cc as usize];
                if m != u32::MAX {
                    row.push((m, vv));
                }
            }
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in &row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(values.len());
        }
        Self { nrows: idx.len(), ncols: idx.len(), row_ptr, col_idx, values, block_size: None }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|r| self.get(r, r)).collect()
    }

    /// Dense copy of the diagonal block `[start, start+size)^2`, row-major.
    pub fn dense_block(&self, start: usize, size: usize) -> Vec<T> {
        let mut out = vec![T::zero(); size * size];
        for i in 0..size {
            let (c, v) = self.row(start + i);
            for (&cc, &vv) in c.iter().zip(v) {
                let cc = cc as usize;
                if cc >= start && cc < start + size {
                    out[i * size + cc - start] = vv;
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji|` over all stored entries.
    pub fn symmetry_error(&self) -> T {
        let t = self.transpose();
        self.max_abs_diff(&t)
    }

    /// `max |A_ij - B_ij|` over the union of both patterns.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut m = T::zero();
        for r in 0..self.nrows {
            let (ac, av) = self.row(r);
            let (bc, bv) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ac.len() || j < bc.len() {
                let d = if j >= bc.len() || (i < ac.len() && ac[i] < bc[j]) {
                    i += 1;
                    av[i - 1]
                } else if i >= ac.len() || bc[j] < ac[i] {
                    j += 1;
                    bv[j - 1]
                } else {
                    i += 1;
                    j += 1;
                    av[i - 1] - bv[j - 1]
                };
                m = m.max(d.abs());
            }
        }
        m
    }

    pub fn scale(&mut self, s: T) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// Lower and upper bandwidth.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut lo = 0;
        let mut hi = 0;
        for r in 0..self.nrows {
            let (c, _) = self.row(r);
            if let (Some(&first), Some(&last)) = (c.first(), c.last()) {
                lo = lo.max(r.saturating_sub(first as usize));
                hi = hi.max((last as usize).saturating_sub(r));
            }
        }
        (lo, hi)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            let (c, v) = self.row(r);
            for (&cc, &vv) in c.iter().zip(v) {
                row[cc as usize] = vv;
            }
        }
        d
    }

    /// Coordinate text export: `row col value` per line, 17 significant digits.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "% {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for r in 0..self.nrows {
            let (c, v) = self.row(r);
            for (&cc, &vv) in c.iter().zip(v) {
                writeln!(w, "{} {} {:.16e}", r, cc, vv.as_f64())?;
            }
        }
        Ok(())
    }
}

/// Block-sparse pattern builder: square blocks of fixed size on a given block adjacency.
///
/// All blocks of one block row are laid out contiguously per scalar row, which
/// lets local element matrices be added in place without triplet storage.
pub(crate) struct BlockPattern {
    pub row_block: usize,
    pub col_block: usize,
    /// Sorted block columns of each block row.
    pub adjacency: Vec<Vec<usize>>,
    pub n_block_cols: usize,
}

impl BlockPattern {
    pub fn allocate<T: Real>(&self) -> CsrMatrix<T> {
        let nbr = self.adjacency.len();
        let nrows = nbr * self.row_block;
        let ncols = self.n_block_cols * self.col_block;
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0usize);
        let total: usize = self.adjacency.iter().map(|a| a.len()).sum::<usize>() * self.row_block * self.col_block;
        let mut col_idx = Vec::with_capacity(total);
        for adj in &self.adjacency {
            for _ in 0..self.row_block {
                for &bc in adj {
                    for c in 0..self.col_block {
                        col_idx.push((bc * self.col_block + c) as u32);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        let values = vec![T::zero(); col_idx.len()];
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values, block_size: None }
    }

    /// Adds a dense row-major local block (scaled) at block position `(br, bc)`.
    pub fn add_block<T: Real>(&self, m: &mut CsrMatrix<T>, br: usize, bc: usize, scale: T, block: &[T]) {
        let pos = self.adjacency[br].binary_search(&bc).expect("block outside the pattern");
        let stride = self.adjacency[br].len() * self.col_block;
        let base = m.row_ptr[br * self.row_block] + pos * self.col_block;
        for i in 0..self.row_block {
            let off = base + i * stride;
            let dst = &mut m.values[off..off + self.col_block];
            let src = &block[i * self.col_block..(i + 1) * self.col_block];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * *s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        let m = b[0].len();
        let mut c = vec![vec![0.0; m]; n];
        for i in 0..n {
            for k in 0..b.len() {
                for j in 0..m {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        c
    }

    fn random_sparse(rows: usize, cols: usize, seed: &[f64]) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for (n, &v) in seed.iter().enumerate() {
            let r = (n * 7 + 3) % rows;
            let c = (n * 13 + 5) % cols;
            t.push((r, c, v));
        }
        CsrMatrix::from_triplets(rows, cols, &t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]);
        assert_eq!(m.to_dense(), vec![vec![2.0, 0.0, 4.0], vec![0.0, -1.0, 0.0]]);
    }

    #[test]
    fn coordinate_export() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0 / 3.0), (1, 0, 2.0)]);
        let mut out = Vec::new();
        m.write_coordinate(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "% 2 2 2");
        let v: f64 = lines[1].split_whitespace().nth(2).unwrap().parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }

    #[test]
    fn selection_detection() {
        let p = CsrMatrix::<f64>::from_triplets(4, 2, &[(1, 0, 1.0), (3, 1, 1.0)]);
        assert_eq!(p.as_selection(), Some(vec![1, 3]));
        let q = CsrMatrix::<f64>::from_triplets(4, 2, &[(1, 0, 0.5), (3, 1, 1.0)]);
        assert_eq!(q.as_selection(), None);
    }

    proptest! {
        #[test]
        fn matmul_matches_dense(a in proptest::collection::vec(-5.0f64..5.0, 1..30),
                                b in proptest::collection::vec(-5.0f64..5.0, 1..30)) {
            let ma = random_sparse(6, 5, &a);
            let mb = random_sparse(5, 4, &b);
            let c = ma.matmul(&mb).unwrap().to_dense();
            let d = dense_mul(&ma.to_dense(), &mb.to_dense());
            for i in 0..6 { for j in 0..4 { prop_assert!((c[i][j] - d[i][j]).abs() < 1e-12); } }
        }

        #[test]
        fn transpose_apply_consistent(a in proptest::collection::vec(-5.0f64..5.0, 1..40),
                                      x in proptest::collection::vec(-1.0f64..1.0, 7),
                                      y in proptest::collection::vec(-1.0f64..1.0, 9)) {
            let m = random_sparse(9, 7, &a);
            let mx = m.mul_vec(&x);
            let mut mty = vec![0.0; 7];
            m.matvec_transpose(&y, &mut mty);
            let lhs: f64 = mx.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&mty).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() < 1e-12);
            prop_assert_eq!(m.transpose().transpose(), m.clone());
            prop_assert_eq!(m.transpose().mul_vec(&y), mty);
        }
    }
}

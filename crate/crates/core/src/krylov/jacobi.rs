use super::Preconditioner;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Diagonal (point) Jacobi.
#[derive(Clone, Debug)]
pub struct PointJacobi<T> {
    inv_diag: Vec<T>,
}

impl<T: Real> PointJacobi<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        let d = a.diagonal();
        if let Some(row) = d.iter().position(|v| !(v.abs() > T::zero())) {
            return Err(Error::SingularBlock { element: row });
        }
        Ok(Self { inv_diag: d.iter().map(|&v| T::one() / v).collect() })
    }
}

impl<T: Real> Preconditioner<T> for PointJacobi<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = *ri * *di;
        }
    }
}

/// Element-block Jacobi with Cholesky-factorised diagonal blocks.
#[derive(Clone, Debug)]
pub struct BlockJacobi<T> {
    bs: usize,
    /// Lower Cholesky factors, row-major, one per block.
    factors: Vec<T>,
}

fn cholesky<T: Real>(a: &mut [T], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > T::zero()) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for i in 0..j {
            a[i * n + j] = T::zero();
        }
    }
    true
}

impl<T: Real> BlockJacobi<T> {
    /// Factorises the given row-major blocks of size `bs`.
    pub fn from_blocks(bs: usize, blocks: Vec<Vec<T>>) -> Result<Self> {
        let mut factors = Vec::with_capacity(bs * bs * blocks.len());
        for (e, mut b) in blocks.into_iter().enumerate() {
            if b.len() != bs * bs {
                return Err(Error::DimensionMismatch(format!("block {e} has {} entries, expected {}", b.len(), bs * bs)));
            }
            if !cholesky(&mut b, bs) {
                return Err(Error::SingularBlock { element: e });
            }
            factors.extend_from_slice(&b);
        }
        Ok(Self { bs, factors })
    }

    /// Extracts and factorises the diagonal blocks of `a`.
    pub fn from_matrix(a: &CsrMatrix<T>, bs: usize) -> Result<Self> {
        if bs == 0 || a.nrows() % bs != 0 {
            return Err(Error::DimensionMismatch(format!("{} rows not divisible into blocks of {bs}", a.nrows())));
        }
        let blocks = (0..a.nrows() / bs).map(|e| a.dense_block(e * bs, bs)).collect();
        Self::from_blocks(bs, blocks)
    }

    pub fn block_size(&self) -> usize {
        self.bs
    }

    pub fn n_blocks(&self) -> usize {
        self.factors.len() / (self.bs * self.bs).max(1)
    }

    /// Reconstructs block `e` from its factor (`L L^T`).
    pub fn block(&self, e: usize) -> Vec<T> {
        let n = self.bs;
        let l = &self.factors[e * n * n..(e + 1) * n * n];
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for k in 0..=i.min(j) {
                    s += l[i * n + k] * l[j * n + k];
                }
                out[i * n + j] = s;
            }
        }
        out
    }
}

impl<T: Real> Preconditioner<T> for BlockJacobi<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        let n = self.bs;
        for ((l, rb), zb) in self.factors.chunks_exact(n * n).zip(r.chunks_exact(n)).zip(z.chunks_exact_mut(n)) {
            for i in 0..n {
                let mut s = rb[i];
                for k in 0..i {
                    s -= l[i * n + k] * zb[k];
                }
                zb[i] = s / l[i * n + i];
            }
            for i in (0..n).rev() {
                let mut s = zb[i];
                for k in i + 1..n {
                    s -= l[k * n + i] * zb[k];
                }
                zb[i] = s / l[i * n + i];
            }
        }
    }
}

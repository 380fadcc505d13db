use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Banded LU factorisation without pivoting, for the (symmetric positive definite)
/// coarsest multigrid operator. Fill stays inside the band.
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    n: usize,
    lo: usize,
    hi: usize,
    /// Row `i` holds columns `i - lo ..= i + hi`.
    data: Vec<T>,
}

impl<T: Real> BandLu<T> {
    /// Factorises `a`; `level` names the operator in error messages.
    pub fn new(a: &CsrMatrix<T>, level: &str) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!("{level}: LU of a {}x{} matrix", a.nrows(), a.ncols())));
        }
        let n = a.nrows();
        let (lo, hi) = a.bandwidth();
        let w = lo + hi + 1;
        let mut data = vec![T::zero(); n * w];
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                data[r * w + (c as usize + lo - r)] += v;
            }
        }
        let tol = T::of(1e3) * T::epsilon() * a.max_abs();
        let mut lu = Self { n, lo, hi, data };
        for k in 0..n {
            let piv = lu.data[k * w + lo];
            if !(piv.abs() > tol) {
                return Err(Error::SingularPivot { level: level.to_string(), row: k });
            }
            let jmax = (k + hi).min(n - 1);
            for i in k + 1..=(k + lo).min(n - 1) {
                let ik = i * w + (k + lo - i);
                let l = lu.data[ik] / piv;
                if l == T::zero() {
                    continue;
                }
                lu.data[ik] = l;
                for j in k + 1..=jmax {
                    let kj = lu.data[k * w + (j + lo - k)];
                    lu.data[i * w + (j + lo - i)] -= l * kj;
                }
            }
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let (n, lo, hi) = (self.n, self.lo, self.hi);
        let w = lo + hi + 1;
        for i in 0..n {
            let mut s = x[i];
            for j in i.saturating_sub(lo)..i {
                s -= self.data[i * w + (j + lo - i)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + hi).min(n - 1) {
                s -= self.data[i * w + (j + lo - i)] * x[j];
            }
            x[i] = s / self.data[i * w + lo];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve() {
        let lu = BandLu::new(&CsrMatrix::<f64>::identity(5), "fine").unwrap();
        assert_eq!(lu.solve(&[1.0, 2.0, 3.0, 4.0, 5.0]), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn random_spd_residual() {
        let n = 20;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| g[i][k] * g[j][k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 }).collect())
            .collect();
        let a = CsrMatrix::from_dense(&a);
        let lu = BandLu::new(&a, "coarse").unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = lu.solve(&b);
        let r: f64 = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(r / bn < 1e-12);
    }

    #[test]
    fn singular_pivot_names_level() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        match BandLu::new(&a, "level 3") {
            Err(Error::SingularPivot { level, row }) => {
                assert_eq!(level, "level 3");
                assert_eq!(row, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

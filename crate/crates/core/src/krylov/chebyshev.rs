use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LinearOperator, Preconditioner};
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm2, Real};

/// Spectral interval `[lambda0, lambda1]` of the preconditioned operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChebyshevBounds {
    pub lambda0: f64,
    pub lambda1: f64,
}

impl ChebyshevBounds {
    pub fn new(lambda0: f64, lambda1: f64) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda1 > lambda0 && lambda1.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid Chebyshev interval [{lambda0}, {lambda1}]")));
        }
        Ok(Self { lambda0, lambda1 })
    }

    /// `(0.1 lambda*, 1.1 lambda*)`.
    pub fn from_lambda_max(lambda_max: f64) -> Result<Self> {
        Self::new(0.1 * lambda_max, 1.1 * lambda_max)
    }
}

/// Runs `steps` Chebyshev iterations for `A x = b` preconditioned by `m`, updating `x` in place.
///
/// The iteration is a fixed polynomial in `M^{-1}A`, so for `x = 0` on entry the map `b -> x`
/// is linear.
pub fn chebyshev<T, A, M>(a: &A, m: &M, b: &[T], x: &mut [T], bounds: &ChebyshevBounds, steps: usize)
where
    T: Real,
    A: LinearOperator<T> + ?Sized,
    M: Preconditioner<T> + ?Sized,
{
    let n = b.len();
    let theta = T::of(0.5 * (bounds.lambda1 + bounds.lambda0));
    let delta = T::of(0.5 * (bounds.lambda1 - bounds.lambda0));
    let sigma = theta / delta;
    let mut r = b.to_vec();
    let mut ad = vec![T::zero(); n];
    if x.iter().any(|v| *v != T::zero()) {
        a.apply(x, &mut ad);
        for i in 0..n {
            r[i] -= ad[i];
        }
    }
    let mut z = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut rho = T::one() / sigma;
    for step in 0..steps {
        m.apply(&r, &mut z);
        if step == 0 {
            for i in 0..n {
                d[i] = z[i] / theta;
            }
        } else {
            let rho_new = T::one() / (T::of(2.0) * sigma - rho);
            let c1 = rho_new * rho;
            let c2 = T::of(2.0) * rho_new / delta;
            for i in 0..n {
                d[i] = c1 * d[i] + c2 * z[i];
            }
            rho = rho_new;
        }
        axpy(T::one(), &d, x);
        if step + 1 < steps {
            a.apply(&d, &mut ad);
            axpy(-T::one(), &ad, &mut r);
        }
    }
}

/// Largest Ritz value of `M^{-1}A` after `steps` Arnoldi iterations from a seeded random vector.
pub fn estimate_lambda_max<T, A, M>(a: &A, m: &M, seed: u64, steps: usize) -> Result<f64>
where
    T: Real,
    A: LinearOperator<T> + ?Sized,
    M: Preconditioner<T> + ?Sized,
{
    let n = a.dim();
    if n == 0 || steps == 0 {
        return Err(Error::InvalidArgument("empty operator or zero Arnoldi steps".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v0: Vec<T> = (0..n).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
    let nv = norm2(&v0);
    v0.iter_mut().for_each(|v| *v /= nv);
    let mut basis = vec![v0];
    let steps = steps.min(n);
    let mut h = DMatrix::<f64>::zeros(steps + 1, steps);
    let mut av = vec![T::zero(); n];
    let mut used = 0;
    for j in 0..steps {
        let mut w = vec![T::zero(); n];
        a.apply(&basis[j], &mut av);
        m.apply(&av, &mut w);
        for _pass in 0..2 {
            for (i, vi) in basis.iter().enumerate() {
                let c = dot(vi, &w);
                h[(i, j)] += c.as_f64();
                axpy(-c, vi, &mut w);
            }
        }
        let hn = norm2(&w);
        h[(j + 1, j)] = hn.as_f64();
        used = j + 1;
        let scale = (0..=j).map(|i| h[(i, j)].abs()).fold(0.0, f64::max);
        if !(hn.as_f64() > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
            break;
        }
        w.iter_mut().for_each(|v| *v /= hn);
        basis.push(w);
    }
    let hm = h.view((0, 0), (used, used)).into_owned();
    let eig = hm.complex_eigenvalues();
    let lmax = eig.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
    if !(lmax.is_finite() && lmax > 0.0) {
        return Err(Error::ContractViolation(format!("nonpositive spectral estimate {lmax}")));
    }
    Ok(lmax)
}

//! Dense eigenvalue probes for small meshes: coercivity, inf-sup constant, block-Jacobi
//! conditioning and the spectrum of the Schur surrogate. These form full matrices and are
//! only meant for meshes of a few hundred elements.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

pub fn to_dense<T: Real>(a: &CsrMatrix<T>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols());
    for r in 0..a.nrows() {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            m[(r, c as usize)] += v.as_f64();
        }
    }
    m
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Sorted eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut m = m;
    symmetrize(&mut m);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue<T: Real>(a: &CsrMatrix<T>) -> f64 {
    symmetric_eigenvalues(to_dense(a))[0]
}

/// Eigenvalues of the pencil `(S, M)` with `M = L L^T` SPD, i.e. of `L^{-1} S L^{-T}`,
/// optionally removing the eigenpair along the direction `deflate` (a vector in the
/// original coordinates, M-normalised internally).
fn pencil_eigenvalues(s: &DMatrix<f64>, m: &DMatrix<f64>, deflate: Option<&DVector<f64>>) -> Result<Vec<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::ContractViolation("reference matrix of the eigenproblem is not SPD".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::ContractViolation("singular Cholesky factor".into()))?;
    let mut c = &linv * s * linv.transpose();
    symmetrize(&mut c);
    let eig = SymmetricEigen::new(c);
    let drop = deflate.map(|d| {
        let u = l.transpose() * d;
        let u = u.normalize();
        (0..eig.eigenvalues.len())
            .max_by(|&i, &j| {
                let a = eig.eigenvectors.column(i).dot(&u).abs();
                let b = eig.eigenvectors.column(j).dot(&u).abs();
                a.total_cmp(&b)
            })
            .expect("nonempty spectrum")
    });
    let mut ev: Vec<f64> =
        eig.eigenvalues.iter().enumerate().filter(|(i, _)| Some(*i) != drop).map(|(_, &v)| v).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

fn schur_dense<T: Real>(a: &CsrMatrix<T>, b: &CsrMatrix<T>) -> Result<DMatrix<f64>> {
    let ad = to_dense(a);
    let bd = to_dense(b);
    let chol = ad
        .cholesky()
        .ok_or_else(|| Error::ContractViolation("velocity operator is not SPD (rigid motions not restrained?)".into()))?;
    let x = chol.solve(&bd);
    Ok(bd.transpose() * x)
}

/// Discrete inf-sup constant `sqrt(lambda_min)` of `B^T H^{-1} B q = lambda M q`, taken off the
/// constant pressure when `nullspace` is set.
pub fn infsup_constant<T: Real>(
    h1h: &CsrMatrix<T>,
    b: &CsrMatrix<T>,
    pressure_mass: &CsrMatrix<T>,
    constant_pressure: Option<&[T]>,
) -> Result<f64> {
    let s = schur_dense(h1h, b)?;
    let m = to_dense(pressure_mass);
    let d = constant_pressure.map(|c| DVector::from_iterator(c.len(), c.iter().map(|v| v.as_f64())));
    let ev = pencil_eigenvalues(&s, &m, d.as_ref())?;
    Ok(ev[0].max(0.0).sqrt())
}

/// Eigenvalues of `(S*)^{-1} B^T A^{-1} B` for a diagonal `S*`, off the constant pressure if given.
pub fn schur_surrogate_spectrum<T: Real>(
    a: &CsrMatrix<T>,
    b: &CsrMatrix<T>,
    sstar: &[T],
    constant_pressure: Option<&[T]>,
) -> Result<Vec<f64>> {
    let s = schur_dense(a, b)?;
    let m = DMatrix::from_diagonal(&DVector::from_iterator(sstar.len(), sstar.iter().map(|v| v.as_f64())));
    let d = constant_pressure.map(|c| DVector::from_iterator(c.len(), c.iter().map(|v| v.as_f64())));
    pencil_eigenvalues(&s, &m, d.as_ref())
}

/// Spectral condition number of `M^{-1} A` where `M` holds the diagonal blocks of size `bs`.
pub fn condition_probe<T: Real>(a: &CsrMatrix<T>, bs: usize) -> Result<f64> {
    let ad = to_dense(a);
    let n = ad.nrows();
    let mut m = DMatrix::zeros(n, n);
    for e in 0..n / bs {
        let r = e * bs;
        m.view_mut((r, r), (bs, bs)).copy_from(&ad.view((r, r), (bs, bs)));
    }
    let ev = pencil_eigenvalues(&ad, &m, None)?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 0.0) {
        return Err(Error::ContractViolation(format!("operator is not positive definite (lambda_min = {lo:e})")));
    }
    Ok(hi / lo)
}

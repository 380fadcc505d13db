use super::{LinearOperator, Preconditioner, SolveReport, SolverSettings};
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm2, Real};

fn start<T: Real>(b: &[T], settings: &SolverSettings) -> (T, SolveReport) {
    let bn = norm2(b);
    let report = SolveReport {
        residual_history: settings.record_history.then(|| vec![1.0]),
        final_relative_residual: 1.0,
        ..SolveReport::default()
    };
    (bn, report)
}

fn push<T: Real>(report: &mut SolveReport, rel: T) {
    report.final_relative_residual = rel.as_f64();
    if let Some(h) = report.residual_history.as_mut() {
        h.push(rel.as_f64());
    }
}

fn zero_rhs(report: &mut SolveReport) {
    report.converged = true;
    report.final_relative_residual = 0.0;
    if let Some(h) = report.residual_history.as_mut() {
        h[0] = 0.0;
    }
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// Stops on the recursively updated residual `||r|| <= rtol ||b||`. Reaching
/// `max_iters` is not an error; check `converged` in the report.
pub fn cg<T, A, M>(a: &A, m: &M, b: &[T], settings: &SolverSettings) -> Result<(Vec<T>, SolveReport)>
where
    T: Real,
    A: LinearOperator<T> + ?Sized,
    M: Preconditioner<T> + ?Sized,
{
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let (bn, mut report) = start(b, settings);
    if bn == T::zero() {
        zero_rhs(&mut report);
        return Ok((x, report));
    }
    let rtol = T::of(settings.rtol);
    let mut r = b.to_vec();
    let mut z = vec![T::zero(); n];
    let mut q = vec![T::zero(); n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=settings.max_iters {
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > T::zero()) {
            return Err(Error::Indefinite { iteration: it, curvature: pq.as_f64() });
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        let rel = norm2(&r) / bn;
        push(&mut report, rel);
        report.iterations = it;
        if rel <= rtol {
            report.converged = true;
            break;
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = *zi + beta * *pi;
        }
    }
    Ok((x, report))
}

fn givens<T: Real>(a: T, b: T) -> (T, T) {
    if b == T::zero() {
        (T::one(), T::zero())
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Right-preconditioned flexible GMRES with restarts, zero initial guess.
///
/// Arnoldi uses classical Gram-Schmidt with one reorthogonalisation pass. The
/// stopping test is on the unpreconditioned residual relative to `||b||`; the
/// true residual is recomputed at the end of every cycle.
pub fn fgmres<T, A, M>(a: &A, m: &M, b: &[T], settings: &SolverSettings) -> Result<(Vec<T>, SolveReport)>
where
    T: Real,
    A: LinearOperator<T> + ?Sized,
    M: Preconditioner<T> + ?Sized,
{
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let (bn, mut report) = start(b, settings);
    if bn == T::zero() {
        zero_rhs(&mut report);
        return Ok((x, report));
    }
    let rtol = T::of(settings.rtol);
    let restart = settings.restart.max(1);
    let mut r = b.to_vec();
    let mut tmp = vec![T::zero(); n];
    let mut total = 0usize;
    loop {
        let beta = norm2(&r);
        let rel = beta / bn;
        report.final_relative_residual = rel.as_f64();
        if let Some(last) = report.residual_history.as_mut().and_then(|h| h.last_mut()) {
            *last = rel.as_f64();
        }
        if rel <= rtol {
            report.converged = true;
            break;
        }
        if total >= settings.max_iters {
            break;
        }
        let mut v: Vec<Vec<T>> = vec![r.iter().map(|&ri| ri / beta).collect()];
        let mut z: Vec<Vec<T>> = Vec::new();
        // columns of the Hessenberg matrix, rotated in place
        let mut h: Vec<Vec<T>> = Vec::new();
        let mut cs: Vec<(T, T)> = Vec::new();
        let mut g = vec![beta];
        for j in 0..restart {
            let mut zj = vec![T::zero(); n];
            m.apply(&v[j], &mut zj);
            let mut w = vec![T::zero(); n];
            a.apply(&zj, &mut w);
            z.push(zj);
            let mut col = vec![T::zero(); j + 2];
            for _pass in 0..2 {
                let coeffs: Vec<T> = v.iter().map(|vi| dot(vi, &w)).collect();
                for (vi, &c) in v.iter().zip(&coeffs) {
                    axpy(-c, vi, &mut w);
                }
                for (i, c) in coeffs.into_iter().enumerate() {
                    col[i] += c;
                }
            }
            let hn = norm2(&w);
            col[j + 1] = hn;
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a0, a1) = (col[i], col[i + 1]);
                col[i] = c * a0 + s * a1;
                col[i + 1] = -s * a0 + c * a1;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = T::zero();
            cs.push((c, s));
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            h.push(col);
            total += 1;
            let est = g[j + 1].abs() / bn;
            push(&mut report, est);
            report.iterations = total;
            let breakdown = !(hn > T::zero()) || !hn.is_finite();
            if breakdown || est <= rtol || total >= settings.max_iters {
                break;
            }
            v.push(w.iter().map(|&wi| wi / hn).collect());
        }
        // back substitution on the triangular factor
        let kdim = h.len();
        let mut y = vec![T::zero(); kdim];
        for i in (0..kdim).rev() {
            let mut s = g[i];
            for jj in i + 1..kdim {
                s -= h[jj][i] * y[jj];
            }
            y[i] = if h[i][i] != T::zero() { s / h[i][i] } else { T::zero() };
        }
        for (zj, &yj) in z.iter().zip(&y) {
            axpy(yj, zj, &mut x);
        }
        a.apply(&x, &mut tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        let est = g[kdim].abs() / bn;
        if est <= rtol && norm2(&r) / bn > rtol {
            report.warnings.push(format!(
                "residual estimate {:.3e} below tolerance but true residual {:.3e}; restarting",
                est.as_f64(),
                (norm2(&r) / bn).as_f64()
            ));
        }
    }
    Ok((x, report))
}

/// Flexible generalized conjugate residuals with truncation after `restart` directions.
pub fn gcr<T, A, M>(a: &A, m: &M, b: &[T], settings: &SolverSettings) -> Result<(Vec<T>, SolveReport)>
where
    T: Real,
    A: LinearOperator<T> + ?Sized,
    M: Preconditioner<T> + ?Sized,
{
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let (bn, mut report) = start(b, settings);
    if bn == T::zero() {
        zero_rhs(&mut report);
        return Ok((x, report));
    }
    let rtol = T::of(settings.rtol);
    let tiny = T::of(1e-30);
    let mut r = b.to_vec();
    let mut zs: Vec<Vec<T>> = Vec::new();
    let mut ws: Vec<Vec<T>> = Vec::new();
    for it in 1..=settings.max_iters {
        if zs.len() >= settings.restart.max(1) {
            zs.clear();
            ws.clear();
        }
        let mut z = vec![T::zero(); n];
        m.apply(&r, &mut z);
        let mut w = vec![T::zero(); n];
        a.apply(&z, &mut w);
        for (zi, wi) in zs.iter().zip(&ws) {
            let beta = dot(&w, wi);
            axpy(-beta, wi, &mut w);
            axpy(-beta, zi, &mut z);
        }
        let nw = norm2(&w);
        if !(nw >= tiny) {
            return Err(Error::Stagnation { iteration: it, norm: nw.as_f64() });
        }
        w.iter_mut().for_each(|v| *v /= nw);
        z.iter_mut().for_each(|v| *v /= nw);
        let alpha = dot(&r, &w);
        axpy(alpha, &z, &mut x);
        axpy(-alpha, &w, &mut r);
        zs.push(z);
        ws.push(w);
        let rel = norm2(&r) / bn;
        push(&mut report, rel);
        report.iterations = it;
        if rel <= rtol {
            report.converged = true;
            break;
        }
    }
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{IdentityPreconditioner, PointJacobi};
    use crate::sparse::CsrMatrix;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn settings(rtol: f64) -> SolverSettings {
        SolverSettings::new(rtol, 500).unwrap().with_history()
    }

    fn random_spd(n: usize, seed: u64) -> CsrMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut a = &g * g.transpose();
        for i in 0..n {
            a[(i, i)] += 1.0 + i as f64;
        }
        CsrMatrix::from_dense(&(0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect::<Vec<_>>())
    }

    fn residual(a: &CsrMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mul_vec(x);
        let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        r / b.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn identity_in_one_iteration() {
        let a = CsrMatrix::<f64>::identity(7);
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 2.5).collect();
        for (x, rep) in [
            cg(&a, &IdentityPreconditioner, &b, &settings(1e-10)).unwrap(),
            fgmres(&a, &IdentityPreconditioner, &b, &settings(1e-10)).unwrap(),
            gcr(&a, &IdentityPreconditioner, &b, &settings(1e-10)).unwrap(),
        ] {
            assert_eq!(rep.iterations, 1);
            assert!(rep.converged);
            assert!(residual(&a, &x, &b) < 1e-14);
        }
    }

    #[test]
    fn cg_two_by_two_terminates() {
        let a = CsrMatrix::<f64>::from_diagonal(&[1.0, 1e6]);
        let (x, rep) = cg(&a, &IdentityPreconditioner, &[1.0, 1.0], &settings(1e-8)).unwrap();
        assert!(rep.iterations <= 2 && rep.converged);
        assert!((x[1] - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn cg_reports_indefiniteness() {
        let a = CsrMatrix::from_diagonal(&[1.0, -2.0]);
        let err = cg(&a, &IdentityPreconditioner, &[1.0, 1.0], &settings(1e-12)).unwrap_err();
        assert!(matches!(err, Error::Indefinite { iteration: 1, .. }));
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = random_spd(5, 1);
        let (x, rep) = fgmres(&a, &IdentityPreconditioner, &[0.0; 5], &settings(1e-8)).unwrap();
        assert!(rep.converged && rep.iterations == 0 && x.iter().all(|&v| v == 0.0));
    }

    /// With an identity preconditioner the k-th FGMRES residual is the minimal residual
    /// over the Krylov space K_k(A, b); compare against a dense least-squares oracle.
    #[test]
    fn fgmres_matches_minimal_residual_oracle() {
        let n = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let am = DMatrix::<f64>::from_fn(n, n, |i, j| rng.gen_range(-1.0..1.0) + if i == j { 4.0 } else { 0.0 });
        let b = DVector::<f64>::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let a = CsrMatrix::from_dense(&(0..n).map(|i| (0..n).map(|j| am[(i, j)]).collect()).collect::<Vec<_>>());
        let (_, rep) = fgmres(&a, &IdentityPreconditioner, b.as_slice(), &settings(1e-13)).unwrap();
        let hist = rep.residual_history.unwrap();
        let mut krylov = vec![b.clone()];
        for k in 1..hist.len().min(n) {
            let basis = DMatrix::from_columns(&krylov);
            let ak = &am * &basis;
            let svd = ak.clone().svd(true, true);
            let y = svd.solve(&b, 1e-14).unwrap();
            let res = (&b - &ak * y).norm() / b.norm();
            assert!((res - hist[k]).abs() < 1e-9, "k={k} oracle {res} fgmres {}", hist[k]);
            let next = &am * krylov.last().unwrap();
            krylov.push(next.normalize());
        }
    }

    #[test]
    fn gcr_matches_fgmres_counts() {
        let a = random_spd(50, 3);
        let jac = PointJacobi::new(&a).unwrap();
        let b: Vec<f64> = (0..50).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let s = settings(1e-8);
        let (x1, r1) = fgmres(&a, &jac, &b, &s).unwrap();
        let (x2, r2) = gcr(&a, &jac, &b, &s).unwrap();
        assert!(r1.converged && r2.converged);
        assert!(r1.iterations.abs_diff(r2.iterations) <= 1, "{} {}", r1.iterations, r2.iterations);
        assert!(residual(&a, &x1, &b) <= 1e-8 && residual(&a, &x2, &b) <= 1e-8 * 1.0001);
    }

    #[test]
    fn histories_decrease() {
        let a = random_spd(40, 5);
        let b = vec![1.0; 40];
        let s = settings(1e-10);
        for rep in [
            fgmres(&a, &IdentityPreconditioner, &b, &s).unwrap().1,
            gcr(&a, &IdentityPreconditioner, &b, &s).unwrap().1,
        ] {
            let h = rep.residual_history.unwrap();
            assert!(h.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
        let rep = cg(&a, &IdentityPreconditioner, &b, &s).unwrap().1;
        assert!(rep.converged);
    }

    #[test]
    fn fgmres_restarts_still_converge() {
        let a = random_spd(60, 9);
        let b = vec![1.0; 60];
        let s = SolverSettings::new(1e-9, 1000).unwrap().with_restart(5);
        let (x, rep) = fgmres(&a, &IdentityPreconditioner, &b, &s).unwrap();
        assert!(rep.converged);
        assert!(residual(&a, &x, &b) <= 1e-9);
        let (x, rep) = gcr(&a, &IdentityPreconditioner, &b, &s).unwrap();
        assert!(rep.converged);
        assert!(residual(&a, &x, &b) <= 1e-9 * 1.0001);
    }

    #[test]
    fn history_csv() {
        let a = random_spd(8, 2);
        let (_, rep) = cg(&a, &IdentityPreconditioner, &[1.0; 8], &settings(1e-10)).unwrap();
        let mut out = Vec::new();
        rep.write_history_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("iteration,relative_residual\n0,1.0"));
        assert_eq!(text.lines().count(), rep.iterations + 2);
    }
}

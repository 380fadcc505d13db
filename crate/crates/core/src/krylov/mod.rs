//! Krylov solvers, Chebyshev smoothing, spectral estimation and direct coarse solves.

mod chebyshev;
mod direct;
mod jacobi;
mod solvers;

pub use chebyshev::{chebyshev, estimate_lambda_max, ChebyshevBounds};
pub use direct::BandLu;
pub use jacobi::{BlockJacobi, PointJacobi};
pub use solvers::{cg, fgmres, gcr};

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// A square linear map `y = A x`.
pub trait LinearOperator<T: Real> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

impl<T: Real> LinearOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.matvec(x, y)
    }
}

/// Approximate inverse `z = M^{-1} r`. May be nonlinear (inner iterations), in which
/// case only the flexible outer methods should be used.
pub trait Preconditioner<T: Real> {
    fn apply(&self, r: &[T], z: &mut [T]);
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityPreconditioner;

impl<T: Real> Preconditioner<T> for IdentityPreconditioner {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
    }
}

/// Closure wrapper, handy in tests and for ad-hoc compositions.
pub struct FnPreconditioner<F>(pub F);

impl<T: Real, F: Fn(&[T], &mut [T])> Preconditioner<T> for FnPreconditioner<F> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        (self.0)(r, z)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverSettings {
    pub rtol: f64,
    pub max_iters: usize,
    /// Krylov basis size before a restart (FGMRES) or truncation (GCR).
    pub restart: usize,
    pub record_history: bool,
}

impl SolverSettings {
    pub fn new(rtol: f64, max_iters: usize) -> Result<Self> {
        if !(rtol > 0.0 && rtol < 1.0) {
            return Err(Error::InvalidArgument(format!("rtol must lie in (0,1), got {rtol}")));
        }
        if max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        Ok(Self { rtol, max_iters, restart: 200, record_history: false })
    }

    pub fn with_restart(mut self, restart: usize) -> Self {
        self.restart = restart.max(1);
        self
    }

    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }
}

/// Iteration statistics of a nested (inner) solver.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InnerStats {
    pub calls: usize,
    pub total: usize,
    pub max: usize,
    /// Inner solves that stopped at `max_iters` without reaching their tolerance.
    pub unconverged: usize,
}

impl InnerStats {
    pub fn record(&mut self, iterations: usize, converged: bool) {
        self.calls += 1;
        self.total += iterations;
        self.max = self.max.max(iterations);
        if !converged {
            self.unconverged += 1;
        }
    }

    pub fn average(&self) -> f64 {
        if self.calls == 0 {
            0.0
        } else {
            self.total as f64 / self.calls as f64
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_relative_residual: f64,
    /// Relative residuals, entry 0 is the initial residual.
    pub residual_history: Option<Vec<f64>>,
    pub inner: Option<InnerStats>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    /// Writes `iteration,relative_residual` rows.
    pub fn write_history_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iteration", "relative_residual"])?;
        for (i, r) in self.residual_history.iter().flatten().enumerate() {
            wr.write_record([i.to_string(), format!("{r:.16e}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

impl std::fmt::Display for SolveReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} after {} iterations, relative residual {:.3e}",
            if self.converged { "converged" } else { "not converged" },
            self.iterations,
            self.final_relative_residual
        )?;
        if let Some(inner) = &self.inner {
            write!(f, ", inner avg {:.2} max {}", inner.average(), inner.max)?;
        }
        Ok(())
    }
}

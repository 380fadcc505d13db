//! The discrete Stokes saddle-point system `[[A, B], [B^T, 0]]` and its solution with an
//! upper block-triangular preconditioner whose velocity block is an inner Krylov solve
//! accelerated by hp-multigrid.

use std::io::Write;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::assembly::{assemble_a, assemble_b, assemble_rhs_by_element, assemble_sstar, SipConfig, ViscosityField};
use crate::basis::DGSpace;
use crate::error::{Error, Result};
use crate::krylov::{
    cg, fgmres, gcr, InnerStats, LinearOperator, Preconditioner, SolveReport, SolverSettings,
};
use crate::mesh::CartesianMesh;
use crate::multigrid::{build_hierarchy, MgHierarchy, MgSettings};
use crate::scalar::{dot, Real};
use crate::sparse::CsrMatrix;

pub struct StokesSystem<T> {
    pub space_u: DGSpace<T>,
    pub space_p: DGSpace<T>,
    pub visc: ViscosityField<T>,
    pub a: Arc<CsrMatrix<T>>,
    pub b: CsrMatrix<T>,
    pub bt: CsrMatrix<T>,
    /// Diagonal of the viscosity-scaled pressure mass matrix.
    pub sstar: Vec<T>,
    pub rhs_u: Vec<T>,
    pub rhs_p: Vec<T>,
    pub has_pressure_nullspace: bool,
}

impl<T: Real> StokesSystem<T> {
    /// Assembles the system for a body force given per element and point.
    pub fn assemble<F>(mesh: Arc<CartesianMesh<T>>, k: usize, visc: ViscosityField<T>, sip: &SipConfig<T>, force: F) -> Result<Self>
    where
        F: Fn(usize, T, T) -> [T; 2],
    {
        if k == 0 {
            return Err(Error::InvalidArgument("velocity order must be at least 1".into()));
        }
        let space_u = DGSpace::velocity(mesh.clone(), k);
        let space_p = DGSpace::pressure(mesh.clone(), k);
        let a = assemble_a(&space_u, &visc, sip)?;
        let b = assemble_b(&space_u, &space_p)?;
        let bt = b.transpose();
        let sstar = assemble_sstar(&space_p, &visc)?;
        let rhs_u = assemble_rhs_by_element(&space_u, force);
        let rhs_p = vec![T::zero(); space_p.n_dofs()];
        let mut sys = Self {
            has_pressure_nullspace: mesh.bc.has_pressure_nullspace(),
            space_u,
            space_p,
            visc,
            a: Arc::new(a),
            b,
            bt,
            sstar,
            rhs_u,
            rhs_p,
        };
        if sys.has_pressure_nullspace {
            sys.make_rhs_consistent();
        }
        Ok(sys)
    }

    pub fn n_u(&self) -> usize {
        self.space_u.n_dofs()
    }

    pub fn n_p(&self) -> usize {
        self.space_p.n_dofs()
    }

    pub fn rhs(&self) -> Vec<T> {
        let mut r = self.rhs_u.clone();
        r.extend_from_slice(&self.rhs_p);
        r
    }

    /// Coefficient vector of the constant pressure.
    pub fn constant_pressure(&self) -> Vec<T> {
        self.space_p.constant_vector(0)
    }

    /// Removes the constant-pressure component from the continuity right-hand side.
    pub fn make_rhs_consistent(&mut self) {
        let c = self.constant_pressure();
        project_out(&mut self.rhs_p, &c);
    }

    /// Block residuals `(f - A u - B p, g - B^T u)`.
    pub fn residual(&self, u: &[T], p: &[T]) -> (Vec<T>, Vec<T>) {
        let mut ru = self.a.mul_vec(u);
        let bp = self.b.mul_vec(p);
        for i in 0..ru.len() {
            ru[i] = self.rhs_u[i] - ru[i] - bp[i];
        }
        let mut rp = self.bt.mul_vec(u);
        for i in 0..rp.len() {
            rp[i] = self.rhs_p[i] - rp[i];
        }
        (ru, rp)
    }
}

impl<T: Real> LinearOperator<T> for StokesSystem<T> {
    fn dim(&self) -> usize {
        self.n_u() + self.n_p()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let nu = self.n_u();
        let (xu, xp) = x.split_at(nu);
        let (yu, yp) = y.split_at_mut(nu);
        self.a.matvec(xu, yu);
        let mut bp = vec![T::zero(); yu.len()];
        self.b.matvec(xp, &mut bp);
        for (a, b) in yu.iter_mut().zip(&bp) {
            *a += *b;
        }
        self.bt.matvec(xu, yp);
    }
}

/// `x -= (x.c / c.c) c`
pub fn project_out<T: Real>(x: &mut [T], c: &[T]) {
    let cc = dot(c, c);
    if cc > T::zero() {
        let s = dot(x, c) / cc;
        for (xi, ci) in x.iter_mut().zip(c) {
            *xi -= s * *ci;
        }
    }
}

type InnerSolve<'a, T> = Box<dyn Fn(&[T]) -> Result<(Vec<T>, SolveReport)> + 'a>;
type SchurSolve<'a, T> = Box<dyn Fn(&[T], &mut [T]) + 'a>;

/// Upper block-triangular preconditioner `[[A, B], [0, S]]^{-1}` with `A^{-1}` and `S^{-1}`
/// supplied as closures.
pub struct BlockPreconditioner<'a, T> {
    b: &'a CsrMatrix<T>,
    n_u: usize,
    schur: SchurSolve<'a, T>,
    inner: InnerSolve<'a, T>,
    nullspace: Option<Vec<T>>,
    stats: Mutex<InnerStats>,
    failure: Mutex<Option<Error>>,
}

impl<'a, T: Real> BlockPreconditioner<'a, T> {
    pub fn new(
        b: &'a CsrMatrix<T>,
        schur: impl Fn(&[T], &mut [T]) + 'a,
        inner: impl Fn(&[T]) -> Result<(Vec<T>, SolveReport)> + 'a,
        nullspace: Option<Vec<T>>,
    ) -> Self {
        Self {
            b,
            n_u: b.nrows(),
            schur: Box::new(schur),
            inner: Box::new(inner),
            nullspace,
            stats: Mutex::new(InnerStats::default()),
            failure: Mutex::new(None),
        }
    }

    /// Uses `-S*` for the pressure block. The Schur complement of `[[A, B], [B^T, 0]]` is
    /// `-B^T A^{-1} B`, so the negative sign keeps the preconditioned spectrum on one side of
    /// zero; with `+S*` GMRES sees eigenvalues near both +1 and -1 and needs several times
    /// more iterations.
    pub fn with_diagonal_schur(
        b: &'a CsrMatrix<T>,
        sstar: &'a [T],
        inner: impl Fn(&[T]) -> Result<(Vec<T>, SolveReport)> + 'a,
        nullspace: Option<Vec<T>>,
    ) -> Self {
        let schur = move |x: &[T], y: &mut [T]| {
            for ((yi, xi), si) in y.iter_mut().zip(x).zip(sstar) {
                *yi = -*xi / *si;
            }
        };
        Self::new(b, schur, inner, nullspace)
    }

    pub fn stats(&self) -> InnerStats {
        self.stats.lock().expect("stats lock").clone()
    }

    /// First inner-solve error, if any occurred.
    pub fn take_failure(&self) -> Option<Error> {
        self.failure.lock().expect("failure lock").take()
    }
}

impl<T: Real> Preconditioner<T> for BlockPreconditioner<'_, T> {
    fn apply(&self, x: &[T], y: &mut [T]) {
        let (xu, xp) = x.split_at(self.n_u);
        let (yu, yp) = y.split_at_mut(self.n_u);
        (self.schur)(xp, yp);
        if let Some(c) = &self.nullspace {
            project_out(yp, c);
        }
        let mut rhs = self.b.mul_vec(yp);
        for (r, xi) in rhs.iter_mut().zip(xu) {
            *r = *xi - *r;
        }
        match (self.inner)(&rhs) {
            Ok((z, rep)) => {
                yu.copy_from_slice(&z);
                self.stats.lock().expect("stats lock").record(rep.iterations, rep.converged);
            }
            Err(e) => {
                yu.iter_mut().for_each(|v| *v = T::zero());
                let mut f = self.failure.lock().expect("failure lock");
                if f.is_none() {
                    *f = Some(e);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OuterMethod {
    Fgmres,
    Gcr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerMethod {
    Cg,
    Gcr,
}

#[derive(Clone, Copy, Debug)]
pub struct StokesSolverConfig {
    pub outer: OuterMethod,
    pub inner: InnerMethod,
    pub rtol_outer: f64,
    pub rtol_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub restart: usize,
    pub mg: MgSettings,
    pub record_history: bool,
}

impl StokesSolverConfig {
    pub fn new(mg: MgSettings) -> Self {
        Self {
            outer: OuterMethod::Fgmres,
            inner: InnerMethod::Cg,
            rtol_outer: 1e-6,
            rtol_inner: 1e-3,
            max_outer: 200,
            max_inner: 500,
            restart: 200,
            mg,
            record_history: false,
        }
    }
}

pub struct StokesSolution<T> {
    pub u: Vec<T>,
    pub p: Vec<T>,
    pub report: SolveReport,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub hierarchy: String,
}

fn inner_solve<T: Real>(
    a: &CsrMatrix<T>,
    mg: &MgHierarchy<T>,
    method: InnerMethod,
    settings: &SolverSettings,
    r: &[T],
) -> Result<(Vec<T>, SolveReport)> {
    match method {
        InnerMethod::Cg => cg(a, mg, r, settings),
        InnerMethod::Gcr => gcr(a, mg, r, settings),
    }
}

/// Solves the system to `rtol_outer` in the unpreconditioned full residual.
pub fn solve_stokes<T: Real>(sys: &StokesSystem<T>, cfg: &StokesSolverConfig) -> Result<StokesSolution<T>> {
    let t0 = Instant::now();
    let mg = build_hierarchy(sys.a.clone(), &sys.space_u, &cfg.mg)?;
    let setup_seconds = t0.elapsed().as_secs_f64();
    let inner_settings = SolverSettings::new(cfg.rtol_inner, cfg.max_inner)?;
    let mut outer_settings = SolverSettings::new(cfg.rtol_outer, cfg.max_outer)?.with_restart(cfg.restart);
    outer_settings.record_history = cfg.record_history;
    let a = &*sys.a;
    let mgr = &mg;
    let inner = move |r: &[T]| inner_solve(a, mgr, cfg.inner, &inner_settings, r);
    let nullspace = sys.has_pressure_nullspace.then(|| sys.constant_pressure());
    let prec = BlockPreconditioner::with_diagonal_schur(&sys.b, &sys.sstar, inner, nullspace.clone());
    let rhs = sys.rhs();
    let t1 = Instant::now();
    let (x, mut report) = match cfg.outer {
        OuterMethod::Fgmres => fgmres(sys, &prec, &rhs, &outer_settings)?,
        OuterMethod::Gcr => gcr(sys, &prec, &rhs, &outer_settings)?,
    };
    let solve_seconds = t1.elapsed().as_secs_f64();
    if let Some(e) = prec.take_failure() {
        return Err(e);
    }
    let stats = prec.stats();
    if stats.unconverged > 0 {
        report.warnings.push(format!("{} inner solves stopped at the iteration limit", stats.unconverged));
    }
    report.inner = Some(stats);
    if !report.converged {
        return Err(Error::NotConverged(Box::new(report)));
    }
    let (u, p) = x.split_at(sys.n_u());
    let mut p = p.to_vec();
    if let Some(c) = &nullspace {
        project_out(&mut p, c);
    }
    Ok(StokesSolution { u: u.to_vec(), p, report, setup_seconds, solve_seconds, hierarchy: mg.summary() })
}

/// One CSV row per solve: `variant,nx,k,delta_eta,outer_its,inner_avg,inner_max,seconds,converged`.
pub struct ReportRow {
    pub variant: String,
    pub nx: usize,
    pub k: usize,
    pub delta_eta: f64,
    pub outer_its: usize,
    pub inner_avg: f64,
    pub inner_max: usize,
    pub seconds: f64,
    pub converged: bool,
}

impl ReportRow {
    pub const HEADER: [&'static str; 9] =
        ["variant", "nx", "k", "delta_eta", "outer_its", "inner_avg", "inner_max", "seconds", "converged"];

    pub fn from_report(variant: &str, nx: usize, k: usize, delta_eta: f64, report: &SolveReport, seconds: f64) -> Self {
        let inner = report.inner.clone().unwrap_or_default();
        Self {
            variant: variant.to_string(),
            nx,
            k,
            delta_eta,
            outer_its: report.iterations,
            inner_avg: inner.average(),
            inner_max: inner.max,
            seconds,
            converged: report.converged,
        }
    }

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.variant.clone(),
            self.nx.to_string(),
            self.k.to_string(),
            format!("{:.16e}", self.delta_eta),
            self.outer_its.to_string(),
            format!("{:.16e}", self.inner_avg),
            self.inner_max.to_string(),
            format!("{:.16e}", self.seconds),
            self.converged.to_string(),
        ]
    }

    pub fn write_csv<W: Write>(rows: &[ReportRow], w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(Self::HEADER)?;
        for r in rows {
            wr.write_record(r.fields())?;
        }
        wr.flush()?;
        Ok(())
    }
}

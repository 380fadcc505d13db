//! Experiment runner behind the `dgstokes` binary: single solves, convergence studies,
//! preconditioner comparisons and penalty sweeps, with CSV and markdown output.

mod config;
mod table;

pub use config::{defaults_help, ConfigFile, RunConfig, KNOWN_KEYS};
pub use table::{comparison_markdown, rows_markdown, TableRow};

use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use crate::assembly::SipConfig;
use crate::diagnostics::min_eigenvalue;
use crate::error::{Error, Result};
use crate::krylov::SolveReport;
use crate::problems::{measure_errors, observed_order, pairwise_orders, ErrorNorms, Reference};
use crate::stokes::{solve_stokes, StokesSolution, StokesSystem};
use crate::multigrid::Variant;

/// Outcome of one assembled and solved system.
pub struct SolvedRun {
    pub row: TableRow,
    pub system: StokesSystem<f64>,
    pub solution: Option<StokesSolution<f64>>,
}

fn sip(cfg: &RunConfig) -> SipConfig<f64> {
    SipConfig { penalty_safety: cfg.penalty_safety, tau: cfg.tau }
}

fn write_history(cfg: &RunConfig, report: &SolveReport) -> Result<()> {
    if let (Some(path), Some(_)) = (&cfg.history, &report.residual_history) {
        report.write_history_csv(BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

/// Assembles and solves one configuration without measuring errors.
pub fn solve_config(cfg: &RunConfig) -> Result<SolvedRun> {
    cfg.validate()?;
    let nx = cfg.variant.adjust_elements(cfg.nx);
    let ny = cfg.variant.adjust_elements(cfg.ny);
    let spec = cfg.problem_spec()?;
    let t0 = Instant::now();
    let system = spec.build_system(nx, ny, cfg.k, &sip(cfg))?;
    let assembly_seconds = t0.elapsed().as_secs_f64();
    let solver = cfg.solver_config(nx, ny);
    let mut row = TableRow::from_config(cfg, &spec, nx, ny, solver.mg.h_levels);
    row.assembly_seconds = assembly_seconds;
    let solution = match solve_stokes(&system, &solver) {
        Ok(sol) => {
            row.record(&sol.report, sol.setup_seconds, sol.solve_seconds);
            write_history(cfg, &sol.report)?;
            Some(sol)
        }
        Err(Error::NotConverged(report)) => {
            row.record(&report, 0.0, 0.0);
            write_history(cfg, &report)?;
            row.note = format!("outer solve stopped at {} iterations", report.iterations);
            None
        }
        Err(e) => {
            row.converged = false;
            row.note = e.to_string();
            None
        }
    };
    Ok(SolvedRun { row, system, solution })
}

fn attach_errors(row: &mut TableRow, e: &ErrorNorms) {
    row.err_l2_u = Some(e.l2_u);
    row.err_l2_p = Some(e.l2_p);
    row.err_1h_u = Some(e.norm1h_u);
}

/// One solve; errors are reported when the problem has an exact solution.
pub fn run_solve(cfg: &RunConfig) -> Result<TableRow> {
    let run = solve_config(cfg)?;
    let mut row = run.row;
    let spec = cfg.problem_spec()?;
    if let (Some(sol), true) = (&run.solution, spec.has_exact_solution()) {
        let e = measure_errors(&spec, &run.system.space_u, &run.system.space_p, &sol.u, &sol.p, &Reference::Exact)?;
        attach_errors(&mut row, &e);
    }
    Ok(row)
}

/// A mesh sequence is nested if each step doubles the element count (vertex nesting) or
/// maps n to 2n - 1 (cell-centred odd nesting).
pub fn check_nested(meshes: &[usize]) -> Result<()> {
    if meshes.len() < 3 {
        return Err(Error::Config(format!("a convergence study needs at least 3 meshes, got {}", meshes.len())));
    }
    for w in meshes.windows(2) {
        if w[1] != 2 * w[0] && w[1] + 1 != 2 * w[0] {
            return Err(Error::Config(format!("meshes {} and {} are not nested", w[0], w[1])));
        }
    }
    Ok(())
}

pub struct ConvergenceTable {
    pub rows: Vec<TableRow>,
    /// Least-squares orders over all meshes.
    pub order_u: f64,
    pub order_p: f64,
    /// Description of the reference used.
    pub reference: String,
}

impl ConvergenceTable {
    /// Rows followed by an aggregate row carrying the least-squares orders.
    pub fn all_rows(&self) -> Vec<TableRow> {
        let mut rows = self.rows.clone();
        let mut agg = TableRow { note: "least_squares".into(), ..self.rows[0].clone() };
        agg.clear_results();
        agg.order_u = Some(self.order_u);
        agg.order_p = Some(self.order_p);
        rows.push(agg);
        rows
    }
}

/// Convergence study over `cfg.converge_meshes` (square meshes). Problems without an exact
/// solution are measured against a solve with order k+1 on a mesh `reference_factor` times
/// the finest one.
pub fn run_convergence(cfg: &RunConfig) -> Result<ConvergenceTable> {
    let meshes = cfg.converge_meshes.clone();
    check_nested(&meshes)?;
    let spec = cfg.problem_spec()?;
    let base = RunConfig { rtol_outer: cfg.converge_rtol, rtol_inner: cfg.converge_rtol_inner, ..cfg.clone() };
    let reference_run = if spec.has_exact_solution() {
        None
    } else {
        let finest = *meshes.iter().max().expect("meshes");
        let n = finest * cfg.reference_factor;
        let rc = RunConfig {
            nx: n,
            ny: n,
            k: cfg.k + 1,
            variant: if n % 2 == 0 { Variant::HpQ1 } else { Variant::HpQ0 },
            h_levels: None,
            projection: cfg.projection,
            ..base.clone()
        };
        let run = solve_config(&rc)?;
        if run.solution.is_none() {
            return Err(Error::Config(format!("reference solve on {n}x{n} failed: {}", run.row.note)));
        }
        Some(run)
    };
    let reference_desc = match &reference_run {
        None => "exact".to_string(),
        Some(r) => format!("fine grid {}x{} k={}", r.row.nx, r.row.ny, r.row.k),
    };
    let mut rows = Vec::new();
    for &n in &meshes {
        let rc = RunConfig { nx: n, ny: n, ..base.clone() };
        let run = solve_config(&rc)?;
        let mut row = run.row;
        let Some(sol) = run.solution else {
            return Err(Error::Config(format!("solve on {n}x{n} failed: {}", row.note)));
        };
        let reference = match &reference_run {
            None => Reference::Exact,
            Some(r) => {
                let s = r.solution.as_ref().expect("reference solution");
                Reference::FineGrid { space_u: &r.system.space_u, space_p: &r.system.space_p, u: &s.u, p: &s.p }
            }
        };
        let e = measure_errors(&spec, &run.system.space_u, &run.system.space_p, &sol.u, &sol.p, &reference)?;
        attach_errors(&mut row, &e);
        row.note = format!("reference: {reference_desc}");
        rows.push(row);
    }
    let h: Vec<f64> = rows.iter().map(|r| 1.0 / r.nx as f64).collect();
    let eu: Vec<f64> = rows.iter().map(|r| r.err_l2_u.unwrap_or(f64::NAN)).collect();
    let ep: Vec<f64> = rows.iter().map(|r| r.err_l2_p.unwrap_or(f64::NAN)).collect();
    for (i, (ou, op)) in pairwise_orders(&h, &eu).into_iter().zip(pairwise_orders(&h, &ep)).enumerate() {
        rows[i + 1].order_u = Some(ou);
        rows[i + 1].order_p = Some(op);
    }
    Ok(ConvergenceTable { order_u: observed_order(&h, &eu), order_p: observed_order(&h, &ep), rows, reference: reference_desc })
}

/// Every variant on every mesh and contrast; failed runs are kept as unconverged rows.
pub fn run_comparison(cfg: &RunConfig) -> Result<Vec<TableRow>> {
    if cfg.compare_variants.is_empty() {
        return Err(Error::Config("no variants to compare".into()));
    }
    let mut rows = Vec::new();
    for &variant in &cfg.compare_variants {
        for &n in &cfg.compare_meshes {
            for &de in &cfg.compare_delta_etas {
                let rc = RunConfig { variant, nx: n, ny: n, delta_eta: de, ..cfg.clone() };
                match run_solve(&rc) {
                    Ok(row) => rows.push(row),
                    Err(e) => {
                        let spec = rc.problem_spec()?;
                        let mut row = TableRow::from_config(&rc, &spec, variant.adjust_elements(n), variant.adjust_elements(n), 0);
                        row.note = e.to_string();
                        rows.push(row);
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Largest viscous operator for which the sweep computes the spectrum densely.
pub const DENSE_SPD_LIMIT: usize = 3000;

/// Repeats a solve with the penalty safety factor scaled by each entry of `sweep_factors`.
/// The note records whether the viscous operator is positive definite (checked densely for
/// small systems).
pub fn run_penalty_sweep(cfg: &RunConfig) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for &f in &cfg.sweep_factors {
        let rc = RunConfig { penalty_safety: cfg.penalty_safety * f, ..cfg.clone() };
        let run = solve_config(&rc)?;
        let mut row = run.row;
        let spec = rc.problem_spec()?;
        if let (Some(sol), true) = (&run.solution, spec.has_exact_solution()) {
            let e = measure_errors(&spec, &run.system.space_u, &run.system.space_p, &sol.u, &sol.p, &Reference::Exact)?;
            attach_errors(&mut row, &e);
        }
        let spd = if run.system.n_u() <= DENSE_SPD_LIMIT {
            let lmin = min_eigenvalue(&run.system.a);
            format!("min_eig_A={lmin:.6e} spd={}", lmin > 0.0)
        } else {
            "spd=unchecked".to_string()
        };
        row.note = if row.note.is_empty() { spd } else { format!("{spd}; {}", row.note) };
        rows.push(row);
    }
    Ok(rows)
}

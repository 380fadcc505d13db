use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::krylov::SolveReport;
use crate::problems::ProblemSpec;

/// One result line: the run configuration flattened, followed by measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub problem: String,
    pub delta_eta: f64,
    pub projection: String,
    pub nx: usize,
    pub ny: usize,
    pub k: usize,
    pub variant: String,
    pub h_levels: usize,
    pub outer: String,
    pub inner: String,
    pub rtol_outer: f64,
    pub rtol_inner: f64,
    pub penalty_safety: f64,
    pub seed: u64,
    pub converged: bool,
    pub outer_its: usize,
    pub inner_avg: f64,
    pub inner_max: usize,
    pub assembly_seconds: f64,
    pub setup_seconds: f64,
    /// Wall-clock time of the Krylov solve only.
    pub seconds: f64,
    pub err_l2_u: Option<f64>,
    pub err_l2_p: Option<f64>,
    pub err_1h_u: Option<f64>,
    pub order_u: Option<f64>,
    pub order_p: Option<f64>,
    pub note: String,
}

pub const HEADER: [&str; 27] = [
    "problem",
    "delta_eta",
    "projection",
    "nx",
    "ny",
    "k",
    "variant",
    "h_levels",
    "outer",
    "inner",
    "rtol_outer",
    "rtol_inner",
    "penalty_safety",
    "seed",
    "converged",
    "outer_its",
    "inner_avg",
    "inner_max",
    "assembly_seconds",
    "setup_seconds",
    "seconds",
    "err_l2_u",
    "err_l2_p",
    "err_1h_u",
    "order_u",
    "order_p",
    "note",
];

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

fn parse<V: std::str::FromStr>(field: &str, v: &str) -> Result<V> {
    v.parse().map_err(|_| Error::Config(format!("column {field}: cannot parse '{v}'")))
}

fn parse_opt(field: &str, v: &str) -> Result<Option<f64>> {
    if v.is_empty() {
        Ok(None)
    } else {
        parse(field, v).map(Some)
    }
}

impl TableRow {
    pub fn from_config(cfg: &RunConfig, spec: &ProblemSpec, nx: usize, ny: usize, h_levels: usize) -> Self {
        let solver = cfg.solver_config(nx, ny);
        Self {
            problem: spec.name.to_string(),
            delta_eta: spec.delta_eta(),
            projection: spec.projection.to_string(),
            nx,
            ny,
            k: cfg.k,
            variant: cfg.variant.to_string(),
            h_levels,
            outer: format!("{:?}", solver.outer).to_ascii_lowercase(),
            inner: format!("{:?}", solver.inner).to_ascii_lowercase(),
            rtol_outer: cfg.rtol_outer,
            rtol_inner: cfg.rtol_inner,
            penalty_safety: cfg.penalty_safety,
            seed: cfg.seed,
            converged: false,
            outer_its: 0,
            inner_avg: 0.0,
            inner_max: 0,
            assembly_seconds: 0.0,
            setup_seconds: 0.0,
            seconds: 0.0,
            err_l2_u: None,
            err_l2_p: None,
            err_1h_u: None,
            order_u: None,
            order_p: None,
            note: String::new(),
        }
    }

    pub fn record(&mut self, report: &SolveReport, setup_seconds: f64, seconds: f64) {
        let inner = report.inner.clone().unwrap_or_default();
        self.converged = report.converged;
        self.outer_its = report.iterations;
        self.inner_avg = inner.average();
        self.inner_max = inner.max;
        self.setup_seconds = setup_seconds;
        self.seconds = seconds;
        if !report.warnings.is_empty() {
            self.note = report.warnings.join("; ");
        }
    }

    /// Resets all measured fields, keeping the configuration.
    pub fn clear_results(&mut self) {
        self.outer_its = 0;
        self.inner_avg = 0.0;
        self.inner_max = 0;
        self.assembly_seconds = 0.0;
        self.setup_seconds = 0.0;
        self.seconds = 0.0;
        self.err_l2_u = None;
        self.err_l2_p = None;
        self.err_1h_u = None;
        self.order_u = None;
        self.order_p = None;
    }

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.problem.clone(),
            fmt_f(self.delta_eta),
            self.projection.clone(),
            self.nx.to_string(),
            self.ny.to_string(),
            self.k.to_string(),
            self.variant.clone(),
            self.h_levels.to_string(),
            self.outer.clone(),
            self.inner.clone(),
            fmt_f(self.rtol_outer),
            fmt_f(self.rtol_inner),
            fmt_f(self.penalty_safety),
            self.seed.to_string(),
            self.converged.to_string(),
            self.outer_its.to_string(),
            fmt_f(self.inner_avg),
            self.inner_max.to_string(),
            fmt_f(self.assembly_seconds),
            fmt_f(self.setup_seconds),
            fmt_f(self.seconds),
            fmt_opt(self.err_l2_u),
            fmt_opt(self.err_l2_p),
            fmt_opt(self.err_1h_u),
            fmt_opt(self.order_u),
            fmt_opt(self.order_p),
            self.note.clone(),
        ]
    }

    pub fn from_fields(f: &[&str]) -> Result<Self> {
        if f.len() != HEADER.len() {
            return Err(Error::Config(format!("expected {} columns, got {}", HEADER.len(), f.len())));
        }
        Ok(Self {
            problem: f[0].to_string(),
            delta_eta: parse(HEADER[1], f[1])?,
            projection: f[2].to_string(),
            nx: parse(HEADER[3], f[3])?,
            ny: parse(HEADER[4], f[4])?,
            k: parse(HEADER[5], f[5])?,
            variant: f[6].to_string(),
            h_levels: parse(HEADER[7], f[7])?,
            outer: f[8].to_string(),
            inner: f[9].to_string(),
            rtol_outer: parse(HEADER[10], f[10])?,
            rtol_inner: parse(HEADER[11], f[11])?,
            penalty_safety: parse(HEADER[12], f[12])?,
            seed: parse(HEADER[13], f[13])?,
            converged: parse(HEADER[14], f[14])?,
            outer_its: parse(HEADER[15], f[15])?,
            inner_avg: parse(HEADER[16], f[16])?,
            inner_max: parse(HEADER[17], f[17])?,
            assembly_seconds: parse(HEADER[18], f[18])?,
            setup_seconds: parse(HEADER[19], f[19])?,
            seconds: parse(HEADER[20], f[20])?,
            err_l2_u: parse_opt(HEADER[21], f[21])?,
            err_l2_p: parse_opt(HEADER[22], f[22])?,
            err_1h_u: parse_opt(HEADER[23], f[23])?,
            order_u: parse_opt(HEADER[24], f[24])?,
            order_p: parse_opt(HEADER[25], f[25])?,
            note: f[26].to_string(),
        })
    }

    pub fn write_csv<W: Write>(rows: &[TableRow], w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(HEADER)?;
        for r in rows {
            wr.write_record(r.fields())?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Vec<TableRow>> {
        let mut rd = csv::Reader::from_reader(r);
        let mut out = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let f: Vec<&str> = rec.iter().collect();
            out.push(Self::from_fields(&f)?);
        }
        Ok(out)
    }

    /// Iteration cell in the `outer (inner avg, inner max)` layout.
    pub fn iteration_cell(&self) -> String {
        if self.converged {
            format!("{} ({:.1}, {})", self.outer_its, self.inner_avg, self.inner_max)
        } else {
            "failed".to_string()
        }
    }
}

fn opt_cell(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) if digits == 0 => format!("{x:.3e}"),
        Some(x) => format!("{x:.digits$}"),
        None => String::new(),
    }
}

/// Plain markdown table of the main columns.
pub fn rows_markdown(rows: &[TableRow]) -> String {
    let mut s = String::from(
        "| problem | delta_eta | mesh | k | variant | outer (inner avg, max) | t (s) | err u | err p | order u | order p | note |\n",
    );
    s.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|\n");
    for r in rows {
        let _ = writeln!(
            s,
            "| {} | {:e} | {}x{} | {} | {} | {} | {:.2} | {} | {} | {} | {} | {} |",
            r.problem,
            r.delta_eta,
            r.nx,
            r.ny,
            r.k,
            r.variant,
            if r.note == "least_squares" { String::new() } else { r.iteration_cell() },
            r.seconds,
            opt_cell(r.err_l2_u, 0),
            opt_cell(r.err_l2_p, 0),
            opt_cell(r.order_u, 2),
            opt_cell(r.order_p, 2),
            r.note
        );
    }
    s
}

/// One block per variant: meshes down, contrasts across, cells `outer (avg, max)` and time.
pub fn comparison_markdown(rows: &[TableRow]) -> String {
    let mut order: Vec<String> = Vec::new();
    for r in rows {
        if !order.contains(&r.variant) {
            order.push(r.variant.clone());
        }
    }
    let mut s = String::new();
    for v in order {
        let block: Vec<&TableRow> = rows.iter().filter(|r| r.variant == v).collect();
        let mut etas: Vec<f64> = Vec::new();
        for r in &block {
            if !etas.contains(&r.delta_eta) {
                etas.push(r.delta_eta);
            }
        }
        let mut meshes: BTreeMap<(usize, usize), Vec<&TableRow>> = BTreeMap::new();
        for r in &block {
            meshes.entry((r.nx, r.ny)).or_default().push(r);
        }
        let _ = writeln!(s, "### {v}\n");
        s.push_str("| mesh |");
        for e in &etas {
            let _ = write!(s, " delta_eta = {e:e} | t (s) |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---|---|".repeat(etas.len()));
        s.push('\n');
        for ((nx, ny), rs) in meshes {
            let _ = write!(s, "| {nx}x{ny} |");
            for e in &etas {
                match rs.iter().find(|r| r.delta_eta == *e) {
                    Some(r) => {
                        let _ = write!(s, " {} | {:.2} |", r.iteration_cell(), r.seconds);
                    }
                    None => s.push_str(" | |"),
                }
            }
            s.push('\n');
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;

    fn sample() -> TableRow {
        let cfg = RunConfig::default();
        let spec = problems::solcx(1e6, 0.5).unwrap();
        let mut r = TableRow::from_config(&cfg, &spec, 64, 64, 4);
        r.converged = true;
        r.outer_its = 5;
        r.inner_avg = 33.0 / 5.0;
        r.inner_max = 8;
        r.seconds = 0.1 + 0.2;
        r.err_l2_u = Some(1.0 / 3.0);
        r.order_p = Some(std::f64::consts::E);
        r.note = "with, comma".into();
        r
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![sample(), TableRow { variant: "p_q0".into(), ..sample() }];
        let mut buf = Vec::new();
        TableRow::write_csv(&rows, &mut buf).unwrap();
        let back = TableRow::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn comparison_groups_by_variant() {
        let mut rows = Vec::new();
        for v in ["p_q0", "hp_q1"] {
            for n in [16, 32] {
                rows.push(TableRow { variant: v.into(), nx: n, ny: n, ..sample() });
            }
        }
        let md = comparison_markdown(&rows);
        assert_eq!(md.matches("### ").count(), 2);
        assert!(md.find("### p_q0").unwrap() < md.find("### hp_q1").unwrap());
        assert_eq!(md.matches("5 (6.6, 8)").count(), 4);
    }
}

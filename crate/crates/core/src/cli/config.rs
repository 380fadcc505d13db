//! Sectioned `key = value` configuration and the resolved run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{coarse_counts, CoarsenMode};
use crate::multigrid::{MgSettings, Variant};
use crate::problems::{self, Projection, ProblemSpec};
use crate::stokes::{InnerMethod, OuterMethod, StokesSolverConfig};

/// Raw configuration: section name to key/value pairs. Keys outside any section go to `""`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: unterminated section header", lineno + 1)))?;
                section = name.trim().to_ascii_lowercase();
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{line}'", lineno + 1)))?;
            let key = k.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            cfg.sections.entry(section.clone()).or_default().insert(key, v.trim().to_string());
        }
        Ok(cfg)
    }

    /// Applies `section.key=value`.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("override key '{path}' is not section.key")))?;
        self.sections
            .entry(section.trim().to_ascii_lowercase())
            .or_default()
            .insert(key.trim().to_ascii_lowercase(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(String::as_str)
    }
}

/// Every key recognised in a configuration file, by section.
pub const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("problem", &["name", "delta_eta", "x_c", "projection"]),
    ("mesh", &["nx", "ny", "k"]),
    ("multigrid", &["variant", "h_levels", "smooth_p", "smooth_h", "arnoldi_steps"]),
    ("solver", &["outer", "inner", "rtol_outer", "rtol_inner", "max_outer", "max_inner", "restart"]),
    ("discretisation", &["penalty_safety", "tau"]),
    ("run", &["seed", "output", "markdown", "history"]),
    ("converge", &["meshes", "reference_factor", "rtol_outer", "rtol_inner"]),
    ("compare", &["variants", "meshes", "delta_etas"]),
    ("sweep", &["factors"]),
];

/// Text listing all keys with their defaults, used by `--help`.
pub fn defaults_help() -> String {
    let d = RunConfig::default();
    let mut s = String::from("configuration keys (section.key = default):\n");
    for line in d.to_config_text().lines() {
        if !line.is_empty() {
            let _ = writeln!(s, "  {line}");
        }
    }
    s
}

fn parse_value<V: FromStr>(section: &str, key: &str, v: &str) -> Result<V> {
    v.parse::<V>().map_err(|_| Error::Config(format!("{section}.{key}: cannot parse '{v}'")))
}

fn parse_list<V: FromStr>(section: &str, key: &str, v: &str) -> Result<Vec<V>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_value(section, key, s)).collect()
}

fn join<V: ToString>(v: &[V]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn outer_name(m: OuterMethod) -> &'static str {
    match m {
        OuterMethod::Fgmres => "fgmres",
        OuterMethod::Gcr => "gcr",
    }
}

fn inner_name(m: InnerMethod) -> &'static str {
    match m {
        InnerMethod::Cg => "cg",
        InnerMethod::Gcr => "gcr",
    }
}

/// Fully resolved settings of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub delta_eta: f64,
    pub x_c: f64,
    /// Overrides the problem's default viscosity projection.
    pub projection: Option<Projection>,
    pub nx: usize,
    pub ny: usize,
    pub k: usize,
    pub variant: Variant,
    /// `None` picks the deepest hierarchy whose coarsest lattice keeps at least 8 elements.
    pub h_levels: Option<usize>,
    pub smooth_p: usize,
    pub smooth_h: usize,
    pub arnoldi_steps: usize,
    /// `None` picks per problem: GCR for sinkers, FGMRES otherwise.
    pub outer: Option<OuterMethod>,
    /// `None` picks per problem: GCR for sinkers, CG otherwise.
    pub inner: Option<InnerMethod>,
    pub rtol_outer: f64,
    pub rtol_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub restart: usize,
    pub penalty_safety: f64,
    pub tau: f64,
    pub seed: u64,
    pub output: Option<String>,
    pub markdown: Option<String>,
    pub history: Option<String>,
    pub converge_meshes: Vec<usize>,
    pub reference_factor: usize,
    pub converge_rtol: f64,
    pub converge_rtol_inner: f64,
    pub compare_variants: Vec<Variant>,
    pub compare_meshes: Vec<usize>,
    pub compare_delta_etas: Vec<f64>,
    pub sweep_factors: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "solcx".into(),
            delta_eta: 1e6,
            x_c: 0.5,
            projection: None,
            nx: 32,
            ny: 32,
            k: 2,
            variant: Variant::HpQ1,
            h_levels: None,
            smooth_p: 2,
            smooth_h: 3,
            arnoldi_steps: 10,
            outer: None,
            inner: None,
            rtol_outer: 1e-6,
            rtol_inner: 1e-3,
            max_outer: 200,
            max_inner: 500,
            restart: 200,
            penalty_safety: 1.0,
            tau: 0.0,
            seed: 0,
            output: None,
            markdown: None,
            history: None,
            converge_meshes: vec![8, 16, 32, 64],
            reference_factor: 2,
            converge_rtol: 1e-7,
            converge_rtol_inner: 1e-6,
            compare_variants: Variant::ALL.to_vec(),
            compare_meshes: vec![16, 32],
            compare_delta_etas: vec![1.0, 1e6],
            sweep_factors: vec![0.05, 0.25, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

impl RunConfig {
    pub fn from_file(cfg: &ConfigFile) -> Result<Self> {
        let mut rc = Self::default();
        for (section, keys) in &cfg.sections {
            let known = KNOWN_KEYS
                .iter()
                .find(|(s, _)| s == section)
                .ok_or_else(|| Error::Config(format!("unknown section [{section}]")))?
                .1;
            for (key, v) in keys {
                if !known.contains(&key.as_str()) {
                    return Err(Error::Config(format!("unknown key {section}.{key}")));
                }
                rc.apply(section, key, v)?;
            }
        }
        rc.validate()?;
        Ok(rc)
    }

    fn apply(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        let s = section;
        let optional = |v: &str| (!v.is_empty() && v != "none").then(|| v.to_string());
        match (section, key) {
            ("problem", "name") => self.problem = v.to_ascii_lowercase(),
            ("problem", "delta_eta") => self.delta_eta = parse_value(s, key, v)?,
            ("problem", "x_c") => self.x_c = parse_value(s, key, v)?,
            ("problem", "projection") => {
                self.projection = if v == "default" { None } else { Some(v.parse()?) };
            }
            ("mesh", "nx") => self.nx = parse_value(s, key, v)?,
            ("mesh", "ny") => self.ny = parse_value(s, key, v)?,
            ("mesh", "k") => self.k = parse_value(s, key, v)?,
            ("multigrid", "variant") => self.variant = v.parse()?,
            ("multigrid", "h_levels") => {
                self.h_levels = if v == "auto" { None } else { Some(parse_value(s, key, v)?) };
            }
            ("multigrid", "smooth_p") => self.smooth_p = parse_value(s, key, v)?,
            ("multigrid", "smooth_h") => self.smooth_h = parse_value(s, key, v)?,
            ("multigrid", "arnoldi_steps") => self.arnoldi_steps = parse_value(s, key, v)?,
            ("solver", "outer") => {
                self.outer = match v.to_ascii_lowercase().as_str() {
                    "auto" => None,
                    "fgmres" => Some(OuterMethod::Fgmres),
                    "gcr" => Some(OuterMethod::Gcr),
                    _ => return Err(Error::Config(format!("solver.outer: expected auto, fgmres or gcr, got '{v}'"))),
                }
            }
            ("solver", "inner") => {
                self.inner = match v.to_ascii_lowercase().as_str() {
                    "auto" => None,
                    "cg" => Some(InnerMethod::Cg),
                    "gcr" => Some(InnerMethod::Gcr),
                    _ => return Err(Error::Config(format!("solver.inner: expected auto, cg or gcr, got '{v}'"))),
                }
            }
            ("solver", "rtol_outer") => self.rtol_outer = parse_value(s, key, v)?,
            ("solver", "rtol_inner") => self.rtol_inner = parse_value(s, key, v)?,
            ("solver", "max_outer") => self.max_outer = parse_value(s, key, v)?,
            ("solver", "max_inner") => self.max_inner = parse_value(s, key, v)?,
            ("solver", "restart") => self.restart = parse_value(s, key, v)?,
            ("discretisation", "penalty_safety") => self.penalty_safety = parse_value(s, key, v)?,
            ("discretisation", "tau") => self.tau = parse_value(s, key, v)?,
            ("run", "seed") => self.seed = parse_value(s, key, v)?,
            ("run", "output") => self.output = optional(v),
            ("run", "markdown") => self.markdown = optional(v),
            ("run", "history") => self.history = optional(v),
            ("converge", "meshes") => self.converge_meshes = parse_list(s, key, v)?,
            ("converge", "reference_factor") => self.reference_factor = parse_value(s, key, v)?,
            ("converge", "rtol_outer") => self.converge_rtol = parse_value(s, key, v)?,
            ("converge", "rtol_inner") => self.converge_rtol_inner = parse_value(s, key, v)?,
            ("compare", "variants") => {
                self.compare_variants = v.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::parse).collect::<Result<_>>()?
            }
            ("compare", "meshes") => self.compare_meshes = parse_list(s, key, v)?,
            ("compare", "delta_etas") => self.compare_delta_etas = parse_list(s, key, v)?,
            ("sweep", "factors") => self.sweep_factors = parse_list(s, key, v)?,
            _ => return Err(Error::Config(format!("unknown key {section}.{key}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        problems::by_name(&self.problem, self.delta_eta)?;
        if !(1..=6).contains(&self.k) {
            return bad(format!("mesh.k must lie in [1, 6], got {}", self.k));
        }
        if self.nx == 0 || self.ny == 0 {
            return bad("mesh.nx and mesh.ny must be positive".into());
        }
        for (name, t) in [("solver.rtol_outer", self.rtol_outer), ("solver.rtol_inner", self.rtol_inner), ("converge.rtol_outer", self.converge_rtol), ("converge.rtol_inner", self.converge_rtol_inner)] {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {t}"));
            }
        }
        if self.max_outer == 0 || self.max_inner == 0 || self.restart == 0 {
            return bad("iteration limits and restart must be positive".into());
        }
        if self.h_levels == Some(0) {
            return bad("multigrid.h_levels must be at least 1".into());
        }
        if !(self.penalty_safety > 0.0) || self.tau < 0.0 {
            return bad("discretisation.penalty_safety must be positive and tau non-negative".into());
        }
        if self.reference_factor < 2 {
            return bad("converge.reference_factor must be at least 2".into());
        }
        if self.compare_variants.is_empty() {
            return bad("compare.variants must not be empty".into());
        }
        Ok(())
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let spec = match self.problem.as_str() {
            "solcx" => problems::solcx(self.delta_eta, self.x_c)?,
            other => problems::by_name(other, self.delta_eta)?,
        };
        Ok(match self.projection {
            Some(p) => spec.with_projection(p),
            None => spec,
        })
    }

    fn is_sinkers(&self) -> bool {
        self.problem.eq_ignore_ascii_case("sinkers")
    }

    pub fn resolved_outer(&self) -> OuterMethod {
        self.outer.unwrap_or(if self.is_sinkers() { OuterMethod::Gcr } else { OuterMethod::Fgmres })
    }

    pub fn resolved_inner(&self) -> InnerMethod {
        self.inner.unwrap_or(if self.is_sinkers() { InnerMethod::Gcr } else { InnerMethod::Cg })
    }

    /// Number of h-levels actually used on an `nx` by `ny` mesh. The automatic rule stops
    /// coarsening before the lattice drops below 16 cells per direction (32 for sinkers,
    /// whose inclusions are not resolved by coarser lattices).
    pub fn resolved_h_levels(&self, nx: usize, ny: usize) -> usize {
        if let Some(h) = self.h_levels {
            return h;
        }
        if !self.variant.is_hp() {
            return 1;
        }
        let mode = match self.variant {
            Variant::HpQ0 => CoarsenMode::CellCenteredOdd,
            _ => CoarsenMode::VertexCenteredEven,
        };
        let min_cells = if self.is_sinkers() { 32 } else { 16 };
        let (mut x, mut y, mut levels) = (nx, ny, 1);
        while let Ok((cx, cy)) = coarse_counts(x, y, mode) {
            if cx < min_cells || cy < min_cells {
                break;
            }
            (x, y) = (cx, cy);
            levels += 1;
        }
        levels
    }

    pub fn solver_config(&self, nx: usize, ny: usize) -> StokesSolverConfig {
        let mut mg = MgSettings::new(self.variant, self.resolved_h_levels(nx, ny));
        mg.smooth_p = self.smooth_p;
        mg.smooth_h = self.smooth_h;
        mg.arnoldi_steps = self.arnoldi_steps;
        mg.seed = self.seed;
        let mut c = StokesSolverConfig::new(mg);
        c.outer = self.resolved_outer();
        c.inner = self.resolved_inner();
        c.rtol_outer = self.rtol_outer;
        c.rtol_inner = self.rtol_inner;
        c.max_outer = self.max_outer;
        c.max_inner = self.max_inner;
        c.restart = self.restart;
        c.record_history = self.history.is_some();
        c
    }

    /// The resolved configuration in the input format.
    pub fn to_config_text(&self) -> String {
        let opt = |o: &Option<String>| o.clone().unwrap_or_else(|| "none".into());
        let mut s = String::new();
        let _ = writeln!(s, "[problem]\nname = {}\ndelta_eta = {:e}\nx_c = {}", self.problem, self.delta_eta, self.x_c);
        let _ = writeln!(s, "projection = {}", self.projection.map_or("default".to_string(), |p| p.to_string()));
        let _ = writeln!(s, "\n[mesh]\nnx = {}\nny = {}\nk = {}", self.nx, self.ny, self.k);
        let _ = writeln!(
            s,
            "\n[multigrid]\nvariant = {}\nh_levels = {}\nsmooth_p = {}\nsmooth_h = {}\narnoldi_steps = {}",
            self.variant,
            self.h_levels.map_or("auto".to_string(), |h| h.to_string()),
            self.smooth_p,
            self.smooth_h,
            self.arnoldi_steps
        );
        let _ = writeln!(
            s,
            "\n[solver]\nouter = {}\ninner = {}\nrtol_outer = {:e}\nrtol_inner = {:e}\nmax_outer = {}\nmax_inner = {}\nrestart = {}",
            self.outer.map_or("auto", outer_name),
            self.inner.map_or("auto", inner_name),
            self.rtol_outer,
            self.rtol_inner,
            self.max_outer,
            self.max_inner,
            self.restart
        );
        let _ = writeln!(s, "\n[discretisation]\npenalty_safety = {}\ntau = {}", self.penalty_safety, self.tau);
        let _ = writeln!(
            s,
            "\n[run]\nseed = {}\noutput = {}\nmarkdown = {}\nhistory = {}",
            self.seed,
            opt(&self.output),
            opt(&self.markdown),
            opt(&self.history)
        );
        let _ = writeln!(
            s,
            "\n[converge]\nmeshes = {}\nreference_factor = {}\nrtol_outer = {:e}\nrtol_inner = {:e}",
            join(&self.converge_meshes),
            self.reference_factor,
            self.converge_rtol,
            self.converge_rtol_inner
        );
        let _ = writeln!(
            s,
            "\n[compare]\nvariants = {}\nmeshes = {}\ndelta_etas = {}",
            join(&self.compare_variants),
            join(&self.compare_meshes),
            self.compare_delta_etas.iter().map(|d| format!("{d:e}")).collect::<Vec<_>>().join(", ")
        );
        let _ = writeln!(s, "\n[sweep]\nfactors = {}", join(&self.sweep_factors));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_sections_comments_and_overrides() {
        let text = "# leading comment\n[problem]\nname = sinkers ; trailing\ndelta_eta = 1e3\n\n[mesh]\nnx=16\n";
        let mut cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(cfg.get("problem", "name"), Some("sinkers"));
        cfg.set("mesh.k = 3").unwrap();
        let rc = RunConfig::from_file(&cfg).unwrap();
        assert_eq!((rc.problem.as_str(), rc.delta_eta, rc.nx, rc.ny, rc.k), ("sinkers", 1e3, 16, 32, 3));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConfigFile::parse("[problem\nname = x").is_err());
        assert!(ConfigFile::parse("[mesh]\nnx 4").is_err());
        let mut cfg = ConfigFile::default();
        assert!(cfg.set("nx=4").is_err());
        cfg.set("mesh.bogus=1").unwrap();
        assert!(RunConfig::from_file(&cfg).is_err());
        for bad in ["mesh.k=7", "multigrid.variant=amg", "problem.name=zhong", "solver.rtol_outer=2", "mesh.nx=abc"] {
            let mut cfg = ConfigFile::default();
            cfg.set(bad).unwrap();
            assert!(RunConfig::from_file(&cfg).is_err(), "{bad}");
        }
    }

    #[test]
    fn echoed_config_round_trips() {
        let mut rc = RunConfig::default();
        rc.problem = "checkerboard".into();
        rc.projection = Some(Projection::L2Mean);
        rc.h_levels = Some(3);
        rc.output = Some("out.csv".into());
        rc.compare_variants = vec![Variant::PQ0, Variant::HpQ1];
        let back = RunConfig::from_file(&ConfigFile::parse(&rc.to_config_text()).unwrap()).unwrap();
        assert_eq!(back, rc);
    }

    #[test]
    fn auto_h_levels() {
        let rc = RunConfig::default();
        assert_eq!(rc.resolved_h_levels(64, 64), 3);
        assert_eq!(rc.resolved_h_levels(512, 512), 6);
        assert_eq!(rc.resolved_h_levels(8, 8), 1);
        let q0 = RunConfig { variant: Variant::HpQ0, ..RunConfig::default() };
        assert_eq!(q0.resolved_h_levels(65, 65), 3);
        assert_eq!(q0.resolved_h_levels(129, 129), 4);
        let p = RunConfig { variant: Variant::PQ1, ..RunConfig::default() };
        assert_eq!(p.resolved_h_levels(64, 64), 1);
        let sink = RunConfig { problem: "sinkers".into(), ..RunConfig::default() };
        assert_eq!(sink.resolved_h_levels(64, 64), 2);
        assert_eq!(sink.resolved_h_levels(128, 128), 3);
    }

    #[test]
    fn solver_methods_follow_problem() {
        let rc = RunConfig::default();
        assert_eq!((rc.resolved_outer(), rc.resolved_inner()), (OuterMethod::Fgmres, InnerMethod::Cg));
        let sink = RunConfig { problem: "sinkers".into(), ..RunConfig::default() };
        assert_eq!((sink.resolved_outer(), sink.resolved_inner()), (OuterMethod::Gcr, InnerMethod::Gcr));
        let forced = RunConfig { outer: Some(OuterMethod::Fgmres), ..sink };
        assert_eq!(forced.resolved_outer(), OuterMethod::Fgmres);
    }
}

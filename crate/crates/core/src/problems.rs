//! Benchmark problems: SolCx-type lateral viscosity jump, the 2x2 checkerboard, six
//! sinking inclusions and a manufactured smooth solution, plus error measurement.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use crate::assembly::{assemble_norm_matrices, SipConfig, ViscosityField};
use crate::basis::{project_element_constant, tensor_rule, DGSpace};
use crate::error::{Error, Result};
use crate::mesh::{BoundarySpec, CartesianMesh, Rect};
use crate::scalar::{dot, Real};
use crate::stokes::StokesSystem;

/// Inclusion centres and radii of the sinker benchmark.
pub const SINKER_CENTERS: [[f64; 2]; 6] =
    [[0.84, 0.39], [0.79, 0.91], [0.33, 0.76], [0.55, 0.47], [0.14, 0.60], [0.24, 0.13]];
pub const SINKER_RADII: [f64; 6] = [0.089, 0.059, 0.063, 0.081, 0.05, 0.09];
pub const SINKER_RHO_INSIDE: f64 = 1.2;
pub const SINKER_RHO_OUTSIDE: f64 = 1.0;
pub const GRAVITY: f64 = 10.0;

/// How a pointwise viscosity becomes one value per element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    PointwiseCenter,
    L2Mean,
    ElementMax,
}

impl Projection {
    pub fn name(self) -> &'static str {
        match self {
            Projection::PointwiseCenter => "pointwise_center",
            Projection::L2Mean => "l2_mean",
            Projection::ElementMax => "element_max",
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pointwise_center" | "center" => Ok(Projection::PointwiseCenter),
            "l2_mean" | "l2" => Ok(Projection::L2Mean),
            "element_max" | "max" => Ok(Projection::ElementMax),
            _ => Err(Error::Config(format!("unknown viscosity projection '{s}' (pointwise_center, l2_mean, element_max)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemKind {
    SolCx { delta_eta: f64, x_c: f64 },
    Checkerboard { delta_eta: f64 },
    Sinkers { eta2: f64 },
    /// Manufactured solution with viscosity 1 for x < 0.5 and e^c beyond.
    MmsSmooth { c: f64 },
}

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub kind: ProblemKind,
    pub bc: BoundarySpec,
    pub projection: Projection,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

pub fn solcx(delta_eta: f64, x_c: f64) -> Result<ProblemSpec> {
    positive("delta_eta", delta_eta)?;
    if !(0.0..=1.0).contains(&x_c) {
        return Err(Error::InvalidArgument(format!("x_c must lie in [0, 1], got {x_c}")));
    }
    Ok(ProblemSpec {
        name: "solcx",
        kind: ProblemKind::SolCx { delta_eta, x_c },
        bc: BoundarySpec::all_navier(),
        projection: Projection::PointwiseCenter,
    })
}

pub fn checkerboard(delta_eta: f64) -> Result<ProblemSpec> {
    positive("delta_eta", delta_eta)?;
    Ok(ProblemSpec {
        name: "checkerboard",
        kind: ProblemKind::Checkerboard { delta_eta },
        bc: BoundarySpec::all_navier(),
        projection: Projection::PointwiseCenter,
    })
}

pub fn sinkers(eta2: f64) -> Result<ProblemSpec> {
    positive("eta2", eta2)?;
    Ok(ProblemSpec {
        name: "sinkers",
        kind: ProblemKind::Sinkers { eta2 },
        bc: BoundarySpec::neumann_top(),
        projection: Projection::ElementMax,
    })
}

pub fn mms_smooth() -> ProblemSpec {
    ProblemSpec {
        name: "mms_smooth",
        kind: ProblemKind::MmsSmooth { c: 1.0 },
        bc: BoundarySpec::all_navier(),
        projection: Projection::PointwiseCenter,
    }
}

/// Looks a problem up by name with a contrast parameter (ignored by `mms_smooth`).
pub fn by_name(name: &str, delta_eta: f64) -> Result<ProblemSpec> {
    match name.trim().to_ascii_lowercase().as_str() {
        "solcx" => solcx(delta_eta, 0.5),
        "checkerboard" => checkerboard(delta_eta),
        "sinkers" => sinkers(delta_eta),
        "mms_smooth" | "mms" => Ok(mms_smooth()),
        _ => Err(Error::Config(format!("unknown problem '{name}' (solcx, checkerboard, sinkers, mms_smooth)"))),
    }
}

fn inside_inclusion(x: f64, y: f64) -> bool {
    SINKER_CENTERS
        .iter()
        .zip(SINKER_RADII)
        .any(|(c, r)| (x - c[0]).powi(2) + (y - c[1]).powi(2) < r * r)
}

fn rect_meets_disc(r: &Rect<f64>, c: [f64; 2], rad: f64) -> bool {
    let dx = c[0].clamp(r.x0, r.x1) - c[0];
    let dy = c[1].clamp(r.y0, r.y1) - c[1];
    dx * dx + dy * dy < rad * rad
}

fn rect_inside_disc(r: &Rect<f64>, c: [f64; 2], rad: f64) -> bool {
    let dx = (r.x0 - c[0]).abs().max((r.x1 - c[0]).abs());
    let dy = (r.y0 - c[1]).abs().max((r.y1 - c[1]).abs());
    dx * dx + dy * dy < rad * rad
}

fn to_f64_rect<T: Real>(r: &Rect<T>) -> Rect<f64> {
    Rect { x0: r.x0.as_f64(), x1: r.x1.as_f64(), y0: r.y0.as_f64(), y1: r.y1.as_f64() }
}

fn mms_u(x: f64, y: f64) -> [f64; 2] {
    let (sx, cx) = (PI * x).sin_cos();
    let (sy, cy) = (PI * y).sin_cos();
    [sx * cy, -cx * sy]
}

fn mms_p(x: f64, y: f64) -> f64 {
    (PI * x).cos() * (PI * y).cos()
}

impl ProblemSpec {
    pub fn with_projection(mut self, projection: Projection) -> Self {
        self.projection = projection;
        self
    }

    pub fn viscosity(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            ProblemKind::SolCx { delta_eta, x_c } => {
                if x < x_c {
                    delta_eta
                } else {
                    1.0
                }
            }
            ProblemKind::Checkerboard { delta_eta } => {
                if (x < 0.5) == (y < 0.5) {
                    delta_eta
                } else {
                    1.0
                }
            }
            ProblemKind::Sinkers { eta2 } => {
                if inside_inclusion(x, y) {
                    eta2
                } else {
                    1.0
                }
            }
            ProblemKind::MmsSmooth { c } => {
                if x < 0.5 {
                    1.0
                } else {
                    c.exp()
                }
            }
        }
    }

    /// Density for buoyancy-driven problems.
    pub fn density(&self, x: f64, y: f64) -> Option<f64> {
        match self.kind {
            ProblemKind::Sinkers { .. } => {
                Some(if inside_inclusion(x, y) { SINKER_RHO_INSIDE } else { SINKER_RHO_OUTSIDE })
            }
            _ => None,
        }
    }

    /// Pointwise body force.
    pub fn forcing(&self, x: f64, y: f64) -> [f64; 2] {
        match self.kind {
            ProblemKind::SolCx { .. } | ProblemKind::Checkerboard { .. } => {
                [0.0, -(PI * y).sin() * (PI * x).cos()]
            }
            ProblemKind::Sinkers { .. } => [0.0, -GRAVITY * self.density(x, y).unwrap_or(1.0)],
            ProblemKind::MmsSmooth { .. } => {
                // -div(2 eta eps(u)) = -eta lap u = 2 pi^2 eta u on each side of the jump
                let eta = self.viscosity(x, y);
                let u = mms_u(x, y);
                let (sx, cx) = (PI * x).sin_cos();
                let (sy, cy) = (PI * y).sin_cos();
                let grad_p = [-PI * sx * cy, -PI * cx * sy];
                [2.0 * PI * PI * eta * u[0] + grad_p[0], 2.0 * PI * PI * eta * u[1] + grad_p[1]]
            }
        }
    }

    pub fn exact_velocity(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        matches!(self.kind, ProblemKind::MmsSmooth { .. }).then(|| mms_u(x, y))
    }

    pub fn exact_pressure(&self, x: f64, y: f64) -> Option<f64> {
        matches!(self.kind, ProblemKind::MmsSmooth { .. }).then(|| mms_p(x, y))
    }

    pub fn has_exact_solution(&self) -> bool {
        matches!(self.kind, ProblemKind::MmsSmooth { .. })
    }

    /// Contrast parameter used in reports.
    pub fn delta_eta(&self) -> f64 {
        match self.kind {
            ProblemKind::SolCx { delta_eta, .. } | ProblemKind::Checkerboard { delta_eta } => delta_eta,
            ProblemKind::Sinkers { eta2 } => eta2,
            ProblemKind::MmsSmooth { c } => c.exp(),
        }
    }

    fn element_extreme(&self, r: &Rect<f64>, max: bool) -> f64 {
        let ProblemKind::Sinkers { eta2 } = self.kind else {
            return self.element_extreme_sampled(r, max);
        };
        let discs = || SINKER_CENTERS.iter().zip(SINKER_RADII);
        if discs().any(|(c, rad)| rect_inside_disc(r, *c, rad)) {
            eta2
        } else if discs().any(|(c, rad)| rect_meets_disc(r, *c, rad)) {
            if max {
                eta2.max(1.0)
            } else {
                eta2.min(1.0)
            }
        } else {
            1.0
        }
    }

    fn element_extreme_sampled(&self, r: &Rect<f64>, max: bool) -> f64 {
        let n = 16;
        let mut best = if max { f64::MIN } else { f64::MAX };
        for i in 0..n {
            for j in 0..n {
                let x = r.x0 + (i as f64 + 0.5) / n as f64 * r.width();
                let y = r.y0 + (j as f64 + 0.5) / n as f64 * r.height();
                let v = self.viscosity(x, y);
                best = if max { best.max(v) } else { best.min(v) };
            }
        }
        best
    }

    /// Per-element viscosity under the problem's projection rule.
    pub fn element_viscosity<T: Real>(&self, mesh: &CartesianMesh<T>) -> Result<ViscosityField<T>> {
        let n = mesh.n_elements();
        let values: Vec<T> = match self.projection {
            Projection::PointwiseCenter => (0..n)
                .map(|e| {
                    let c = mesh.element_center(e);
                    T::of(self.viscosity(c[0].as_f64(), c[1].as_f64()))
                })
                .collect(),
            Projection::L2Mean => {
                project_element_constant(|x: T, y: T| T::of(self.viscosity(x.as_f64(), y.as_f64())), mesh, 6)
            }
            Projection::ElementMax => {
                (0..n).map(|e| T::of(self.element_extreme(&to_f64_rect(&mesh.element_rect(e)), true))).collect()
            }
        };
        ViscosityField::new(values)
    }

    /// Per-element density: the minimum over the element (sinkers only).
    pub fn element_density<T: Real>(&self, mesh: &CartesianMesh<T>) -> Option<Vec<T>> {
        if !matches!(self.kind, ProblemKind::Sinkers { .. }) {
            return None;
        }
        Some(
            (0..mesh.n_elements())
                .map(|e| {
                    let r = to_f64_rect(&mesh.element_rect(e));
                    let full = SINKER_CENTERS.iter().zip(SINKER_RADII).any(|(c, rad)| rect_inside_disc(&r, *c, rad));
                    T::of(if full { SINKER_RHO_INSIDE } else { SINKER_RHO_OUTSIDE })
                })
                .collect(),
        )
    }

    /// Assembles the Stokes system on an `nx` by `ny` unit-square mesh.
    pub fn build_system<T: Real>(&self, nx: usize, ny: usize, k: usize, sip: &SipConfig<T>) -> Result<StokesSystem<T>> {
        let mesh = Arc::new(CartesianMesh::new(nx, ny, Rect::unit(), self.bc)?);
        let visc = self.element_viscosity(&mesh)?;
        match self.element_density(&mesh) {
            Some(rho) => StokesSystem::assemble(mesh, k, visc, sip, move |e, _, _| [T::zero(), -T::of(GRAVITY) * rho[e]]),
            None => StokesSystem::assemble(mesh, k, visc, sip, |_, x: T, y: T| {
                let f = self.forcing(x.as_f64(), y.as_f64());
                [T::of(f[0]), T::of(f[1])]
            }),
        }
    }

    /// Parameter echo block included in reports.
    pub fn echo(&self) -> String {
        let mut s = String::from("{\n");
        let _ = writeln!(s, "  \"problem\": \"{}\",", self.name);
        match self.kind {
            ProblemKind::SolCx { delta_eta, x_c } => {
                let _ = writeln!(s, "  \"eta_1\": {delta_eta:e},\n  \"eta_2\": 1,\n  \"x_c\": {x_c},");
                let _ = writeln!(s, "  \"forcing\": \"(0, -sin(pi y) cos(pi x))\",");
            }
            ProblemKind::Checkerboard { delta_eta } => {
                let _ = writeln!(s, "  \"delta_eta\": {delta_eta:e},\n  \"jumps\": \"x = 0.5, y = 0.5\",");
                let _ = writeln!(s, "  \"forcing\": \"(0, -sin(pi y) cos(pi x))\",");
            }
            ProblemKind::Sinkers { eta2 } => {
                let _ = writeln!(s, "  \"eta_1\": 1,\n  \"eta_2\": {eta2:e},");
                let _ = writeln!(s, "  \"rho_1\": {SINKER_RHO_OUTSIDE},\n  \"rho_2\": {SINKER_RHO_INSIDE},\n  \"g\": {GRAVITY},");
                let c: Vec<String> = SINKER_CENTERS.iter().map(|c| format!("[{}, {}]", c[0], c[1])).collect();
                let r: Vec<String> = SINKER_RADII.iter().map(|r| r.to_string()).collect();
                let _ = writeln!(s, "  \"centers\": [{}],\n  \"radii\": [{}],", c.join(", "), r.join(", "));
                let _ = writeln!(s, "  \"density_projection\": \"element_min\",");
            }
            ProblemKind::MmsSmooth { c } => {
                let _ = writeln!(s, "  \"eta\": \"1 for x < 0.5, exp({c}) otherwise\",");
                let _ = writeln!(s, "  \"u\": \"(sin(pi x) cos(pi y), -cos(pi x) sin(pi y))\",\n  \"p\": \"cos(pi x) cos(pi y)\",");
            }
        }
        let _ = writeln!(s, "  \"boundary\": \"{}\",", self.bc);
        let _ = writeln!(s, "  \"viscosity_projection\": \"{}\"", self.projection);
        s.push('}');
        s
    }
}

/// Reference solution for error measurement.
pub enum Reference<'a, T> {
    Exact,
    /// Discrete solution on a finer mesh of the same domain (any order).
    FineGrid { space_u: &'a DGSpace<T>, space_p: &'a DGSpace<T>, u: &'a [T], p: &'a [T] },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    pub l2_u: f64,
    pub l2_p: f64,
    /// Broken energy norm of the difference to the projected reference.
    pub norm1h_u: f64,
}

/// Sorted union of two sets of grid lines, merging lines closer than a small tolerance.
fn merged_lines(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = a.iter().chain(b).copied().collect();
    v.sort_by(|x, y| x.total_cmp(y));
    let tol = 1e-12 * (v[v.len() - 1] - v[0]).abs().max(1.0);
    v.dedup_by(|x, y| (*x - *y).abs() <= tol);
    v
}

fn grid_lines<T: Real>(x0: T, h: T, n: usize) -> Vec<f64> {
    (0..=n).map(|i| (x0 + h * T::of(i as f64)).as_f64()).collect()
}

/// Element and local coordinates of a point known to lie inside the sub-cell with centre `c`.
fn local<T: Real>(mesh: &CartesianMesh<T>, c: [f64; 2], x: f64, y: f64) -> (usize, T, T) {
    let i = (((c[0] - mesh.x0.as_f64()) / mesh.hx.as_f64()).floor() as usize).min(mesh.nx - 1);
    let j = (((c[1] - mesh.y0.as_f64()) / mesh.hy.as_f64()).floor() as usize).min(mesh.ny - 1);
    let e = mesh.element_index(i, j);
    let r = mesh.element_rect(e);
    (e, T::of((x - r.x0.as_f64()) / mesh.hx.as_f64()), T::of((y - r.y0.as_f64()) / mesh.hy.as_f64()))
}

/// L2 and broken energy errors of `(u_h, p_h)` against a reference.
///
/// Integrals run over the common refinement of the solution mesh and the reference mesh
/// (just the solution mesh for an exact reference), so both fields are polynomial on every
/// integration cell. The energy error uses the L2 projection of the reference onto the
/// solution space.
pub fn measure_errors<T: Real>(
    spec: &ProblemSpec,
    space_u: &DGSpace<T>,
    space_p: &DGSpace<T>,
    u_h: &[T],
    p_h: &[T],
    reference: &Reference<'_, T>,
) -> Result<ErrorNorms> {
    let mesh = space_u.mesh();
    let mut xs = grid_lines(mesh.x0, mesh.hx, mesh.nx);
    let mut ys = grid_lines(mesh.y0, mesh.hy, mesh.ny);
    let q = match reference {
        Reference::Exact => {
            if !spec.has_exact_solution() {
                return Err(Error::InvalidArgument(format!("problem '{}' has no exact solution", spec.name)));
            }
            space_u.order() + 3
        }
        Reference::FineGrid { space_u: fu, .. } => {
            let fine = fu.mesh();
            if fine.domain() != mesh.domain() {
                return Err(Error::InvalidArgument("reference mesh covers a different domain".into()));
            }
            xs = merged_lines(&xs, &grid_lines(fine.x0, fine.hx, fine.nx));
            ys = merged_lines(&ys, &grid_lines(fine.y0, fine.hy, fine.ny));
            fu.order().max(space_u.order()) + 3
        }
    };
    let rule = tensor_rule::<f64>(q);
    let coarse_area = mesh.element_area().as_f64();
    let mut proj = vec![0.0f64; space_u.n_dofs()];
    let (mut eu, mut ep) = (0.0f64, 0.0f64);
    for wy in ys.windows(2) {
        for wx in xs.windows(2) {
            let (w, h) = (wx[1] - wx[0], wy[1] - wy[0]);
            let c = [0.5 * (wx[0] + wx[1]), 0.5 * (wy[0] + wy[1])];
            for (pt, &wq) in rule.points.iter().zip(&rule.weights) {
                let x = wx[0] + pt[0] * w;
                let y = wy[0] + pt[1] * h;
                let (e, xi, eta) = local(mesh, c, x, y);
                let uh = space_u.eval_in_element(u_h, e, xi, eta);
                let ph = space_p.eval_in_element(p_h, e, xi, eta);
                let (ur, pr) = match reference {
                    Reference::Exact => (spec.exact_velocity(x, y).unwrap_or([0.0; 2]), spec.exact_pressure(x, y).unwrap_or(0.0)),
                    Reference::FineGrid { space_u: fu, space_p: fp, u, p } => {
                        let (ef, xf, yf) = local(fu.mesh(), c, x, y);
                        let vu = fu.eval_in_element(u, ef, xf, yf);
                        let vp = fp.eval_in_element(p, ef, xf, yf);
                        ([vu[0].as_f64(), vu[1].as_f64()], vp[0].as_f64())
                    }
                };
                let wa = wq * w * h;
                eu += wa * ((uh[0].as_f64() - ur[0]).powi(2) + (uh[1].as_f64() - ur[1]).powi(2));
                ep += wa * (ph[0].as_f64() - pr).powi(2);
                let phi = space_u.reference_values(xi, eta);
                let scale = wa / coarse_area;
                for (comp, val) in ur.iter().enumerate() {
                    let off = space_u.dof(e, comp, 0, 0);
                    for (m, v) in phi.iter().enumerate() {
                        proj[off + m] += scale * val * v.as_f64();
                    }
                }
            }
        }
    }
    let (h1h, _) = assemble_norm_matrices(space_u, space_p);
    let diff: Vec<T> = u_h.iter().zip(&proj).map(|(a, b)| *a - T::of(*b)).collect();
    let energy = dot(&diff, &h1h.mul_vec(&diff)).as_f64().max(0.0).sqrt();
    Ok(ErrorNorms { l2_u: eu.sqrt(), l2_p: ep.sqrt(), norm1h_u: energy })
}

/// Least-squares slope of `log e` against `log h`.
pub fn observed_order(h: &[f64], err: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Orders between consecutive entries.
pub fn pairwise_orders(h: &[f64], err: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(err.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

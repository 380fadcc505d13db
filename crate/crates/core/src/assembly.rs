//! Assembly of the SIP viscous operator, the divergence coupling, loads,
//! the viscosity-scaled pressure mass matrix and the discrete norm matrices.
//!
//! All elements of a uniform mesh share one geometry, so the element and face
//! integrals are computed once per mesh (without viscosity or penalty) in
//! [`LocalOperators`] and assembled with element-wise scalings. Local matrices
//! are row-major with rows indexing the test function and columns the trial
//! function; local velocity index is `comp * modes + mode`.

use crate::basis::{gauss_rule, legendre_eval, tensor_rule, DGSpace};
use crate::error::{Error, Result};
use crate::krylov::BlockJacobi;
use crate::mesh::{CartesianMesh, Face, FaceKind, Side};
use crate::scalar::Real;
use crate::sparse::{BlockPattern, CsrMatrix};

/// Number of faces of a quadrilateral element.
pub const N_FACES: usize = 4;

/// Element-wise constant viscosity.
#[derive(Clone, Debug)]
pub struct ViscosityField<T> {
    values: Vec<T>,
    min: T,
    max: T,
}

impl<T: Real> ViscosityField<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty viscosity field".into()));
        }
        if let Some(bad) = values.iter().position(|v| !(v.is_finite() && *v > T::zero())) {
            return Err(Error::InvalidArgument(format!("viscosity of element {bad} is not positive")));
        }
        let min = values.iter().fold(T::infinity(), |m, &v| m.min(v));
        let max = values.iter().fold(T::zero(), |m, &v| m.max(v));
        Ok(Self { values, min, max })
    }

    pub fn uniform(n_elements: usize, eta: T) -> Self {
        Self::new(vec![eta; n_elements]).expect("positive viscosity")
    }

    pub fn get(&self, e: usize) -> T {
        self.values[e]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn min(&self) -> T {
        self.min
    }

    pub fn max(&self) -> T {
        self.max
    }

    pub fn scaled(&self, c: T) -> Self {
        Self::new(self.values.iter().map(|&v| v * c).collect()).expect("positive scale")
    }

    /// Face viscosity: maximum of the adjacent elements.
    pub fn face_value(&self, face: &Face) -> T {
        match face.minus {
            Some(m) => self.values[face.plus].max(self.values[m]),
            None => self.values[face.plus],
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SipConfig<T> {
    /// Multiplier on the coercivity lower bound.
    pub penalty_safety: T,
    pub tau: T,
}

impl<T: Real> Default for SipConfig<T> {
    fn default() -> Self {
        Self { penalty_safety: T::one(), tau: T::zero() }
    }
}

impl<T: Real> SipConfig<T> {
    pub fn with_safety(safety: T) -> Self {
        Self { penalty_safety: safety, ..Self::default() }
    }
}

/// Face penalty `safety * n_faces * eta_F * (1 + tau) * m * C_F`, `m = 1` interior, `m = 2` Navier.
pub fn penalty<T: Real>(
    mesh: &CartesianMesh<T>,
    face: &Face,
    k: usize,
    visc: &ViscosityField<T>,
    cfg: &SipConfig<T>,
) -> Result<T> {
    let m = match face.kind {
        FaceKind::Interior => T::one(),
        FaceKind::Navier => T::of(2.0),
        FaceKind::Neumann => {
            return Err(Error::ContractViolation("Neumann faces carry no penalty".into()));
        }
    };
    let c_f = mesh.face_trace_constant(face, k)?;
    Ok(cfg.penalty_safety * T::of_usize(N_FACES) * visc.face_value(face) * (T::one() + cfg.tau) * m * c_f)
}

/// Mode values and physical gradients at a set of reference points.
struct ModeTable<T> {
    values: Vec<Vec<T>>,
    grads: Vec<Vec<[T; 2]>>,
}

impl<T: Real> ModeTable<T> {
    fn new(order: usize, points: &[[T; 2]], hx: T, hy: T) -> Self {
        let mut values = Vec::with_capacity(points.len());
        let mut grads = Vec::with_capacity(points.len());
        for p in points {
            let (lx, dlx) = legendre_eval(order, p[0]);
            let (ly, dly) = legendre_eval(order, p[1]);
            let mut v = Vec::new();
            let mut g = Vec::new();
            for a in 0..=order {
                for b in 0..=order {
                    v.push(lx[a] * ly[b]);
                    g.push([dlx[a] * ly[b] / hx, lx[a] * dly[b] / hy]);
                }
            }
            values.push(v);
            grads.push(g);
        }
        Self { values, grads }
    }
}

/// Face quadrature points on a side of the reference element and the weights scaled by the face length.
fn side_points<T: Real>(side: Side, q: usize, length: T) -> (Vec<[T; 2]>, Vec<T>) {
    let r = gauss_rule::<T>(q);
    let pts = r
        .points
        .iter()
        .map(|&s| match side {
            Side::Left => [T::zero(), s],
            Side::Right => [T::one(), s],
            Side::Bottom => [s, T::zero()],
            Side::Top => [s, T::one()],
        })
        .collect();
    (pts, r.weights.iter().map(|&w| w * length).collect())
}

/// Per-mesh reference integrals with unit viscosity and unit penalty.
pub struct LocalOperators<T> {
    pub k: usize,
    /// Velocity modes per component.
    pub nm: usize,
    /// Velocity DOFs per element.
    pub nu: usize,
    /// Pressure DOFs per element.
    pub np: usize,
    /// `\int 2 eps(u):eps(v)`.
    pub volume: Vec<T>,
    /// `\int grad u : grad v` (broken H1 seminorm).
    pub gradient: Vec<T>,
    /// Interior faces, indexed by axis (0: normal along x, 1: along y), then `[test side][trial side]`.
    pub consistency: [[[Vec<T>; 2]; 2]; 2],
    pub jump: [[[Vec<T>; 2]; 2]; 2],
    /// Navier faces indexed by `Side as usize` order of [`Side::ALL`].
    pub boundary_consistency: [Vec<T>; 4],
    pub boundary_normal: [Vec<T>; 4],
    /// Divergence coupling, rows velocity, columns pressure.
    pub div_volume: Vec<T>,
    pub div_face: [[[Vec<T>; 2]; 2]; 2],
    pub div_boundary: [Vec<T>; 4],
    /// Pressure face products: interior `{q}{r}`, boundary `q r`.
    pub pressure_mean: [[[Vec<T>; 2]; 2]; 2],
    pub pressure_boundary: [Vec<T>; 4],
}

fn side_slot(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
        Side::Bottom => 2,
        Side::Top => 3,
    }
}

fn axis_of(side: Side) -> usize {
    if side.is_vertical() {
        0
    } else {
        1
    }
}

/// Plus-side of an interior face along an axis.
fn plus_side(axis: usize) -> Side {
    if axis == 0 {
        Side::Right
    } else {
        Side::Top
    }
}

impl<T: Real> LocalOperators<T> {
    pub fn new(k: usize, hx: T, hy: T) -> Self {
        assert!(k >= 1);
        let nm = (k + 1) * (k + 1);
        let nu = 2 * nm;
        let np = k * k;
        let q = k + 1;
        let area = hx * hy;
        let half = T::of(0.5);

        let vol_rule = tensor_rule::<T>(q);
        let vt = ModeTable::new(k, &vol_rule.points, hx, hy);
        let pt = ModeTable::new(k - 1, &vol_rule.points, hx, hy);
        let mut volume = vec![T::zero(); nu * nu];
        let mut gradient = vec![T::zero(); nu * nu];
        let mut div_volume = vec![T::zero(); nu * np];
        for (qp, &w0) in vol_rule.weights.iter().enumerate() {
            let w = w0 * area;
            let g = &vt.grads[qp];
            for d in 0..2 {
                for j in 0..nm {
                    let row = d * nm + j;
                    for c in 0..2 {
                        for i in 0..nm {
                            let col = c * nm + i;
                            let gg = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                            let mut v = g[i][d] * g[j][c];
                            if c == d {
                                v += gg;
                                gradient[row * nu + col] += w * gg;
                            }
                            volume[row * nu + col] += w * v;
                        }
                    }
                }
            }
            for c in 0..2 {
                for i in 0..nm {
                    for (j, psi) in pt.values[qp].iter().enumerate() {
                        div_volume[(c * nm + i) * np + j] -= w * g[i][c] * *psi;
                    }
                }
            }
        }

        let zeros = |n: usize| vec![T::zero(); n];
        let mut consistency: [[[Vec<T>; 2]; 2]; 2] = Default::default();
        let mut jump: [[[Vec<T>; 2]; 2]; 2] = Default::default();
        let mut div_face: [[[Vec<T>; 2]; 2]; 2] = Default::default();
        let mut pressure_mean: [[[Vec<T>; 2]; 2]; 2] = Default::default();
        for axis in 0..2 {
            let ps = plus_side(axis);
            let n = ps.normal().map(|c| T::of(c as f64));
            let len = if axis == 0 { hy } else { hx };
            let (pts_p, w) = side_points(ps, q, len);
            let (pts_m, _) = side_points(ps.opposite(), q, len);
            let tabs = [ModeTable::new(k, &pts_p, hx, hy), ModeTable::new(k, &pts_m, hx, hy)];
            let ptabs = [ModeTable::new(k - 1, &pts_p, hx, hy), ModeTable::new(k - 1, &pts_m, hx, hy)];
            let sign = [T::one(), -T::one()];
            for t in 0..2 {
                for s in 0..2 {
                    let mut cons = zeros(nu * nu);
                    let mut jmp = zeros(nu * nu);
                    let mut bdiv = zeros(nu * np);
                    let mut pm = zeros(np * np);
                    for (qp, &wq) in w.iter().enumerate() {
                        let (vt_, gs) = (&tabs[t].values[qp], &tabs[s].grads[qp]);
                        let vs = &tabs[s].values[qp];
                        for d in 0..2 {
                            for j in 0..nm {
                                let row = d * nm + j;
                                for c in 0..2 {
                                    for i in 0..nm {
                                        let col = c * nm + i;
                                        let gn = gs[i][0] * n[0] + gs[i][1] * n[1];
                                        // (eps(phi e_c) n)_d
                                        let mut en = gs[i][d] * n[c];
                                        if c == d {
                                            en += gn;
                                        }
                                        en *= half;
                                        cons[row * nu + col] -= sign[t] * wq * en * vt_[j];
                                        if c == d {
                                            jmp[row * nu + col] += sign[s] * sign[t] * wq * vs[i] * vt_[j];
                                        }
                                    }
                                }
                            }
                        }
                        let psi_s = &ptabs[s].values[qp];
                        let psi_t = &ptabs[t].values[qp];
                        for c in 0..2 {
                            for i in 0..nm {
                                for j in 0..np {
                                    bdiv[(c * nm + i) * np + j] += half * sign[t] * wq * vt_[i] * n[c] * psi_s[j];
                                }
                            }
                        }
                        for j in 0..np {
                            for i in 0..np {
                                pm[j * np + i] += T::of(0.25) * wq * psi_s[i] * psi_t[j];
                            }
                        }
                    }
                    consistency[axis][t][s] = cons;
                    jump[axis][t][s] = jmp;
                    div_face[axis][t][s] = bdiv;
                    pressure_mean[axis][t][s] = pm;
                }
            }
        }

        let mut boundary_consistency: [Vec<T>; 4] = Default::default();
        let mut boundary_normal: [Vec<T>; 4] = Default::default();
        let mut div_boundary: [Vec<T>; 4] = Default::default();
        let mut pressure_boundary: [Vec<T>; 4] = Default::default();
        for side in Side::ALL {
            let n = side.normal().map(|c| T::of(c as f64));
            let len = if side.is_vertical() { hy } else { hx };
            let (pts, w) = side_points(side, q, len);
            let tab = ModeTable::new(k, &pts, hx, hy);
            let ptab = ModeTable::new(k - 1, &pts, hx, hy);
            let mut cons = zeros(nu * nu);
            let mut nn = zeros(nu * nu);
            let mut bdiv = zeros(nu * np);
            let mut pb = zeros(np * np);
            for (qp, &wq) in w.iter().enumerate() {
                let (v, g) = (&tab.values[qp], &tab.grads[qp]);
                for d in 0..2 {
                    for j in 0..nm {
                        let row = d * nm + j;
                        for c in 0..2 {
                            for i in 0..nm {
                                let col = c * nm + i;
                                let gn = g[i][0] * n[0] + g[i][1] * n[1];
                                // n . 2 eps(phi e_c) n = 2 n_c (grad phi . n)
                                cons[row * nu + col] -= wq * T::of(2.0) * n[c] * gn * v[j] * n[d];
                                nn[row * nu + col] += wq * v[i] * n[c] * v[j] * n[d];
                            }
                        }
                    }
                }
                let psi = &ptab.values[qp];
                for c in 0..2 {
                    for i in 0..nm {
                        for j in 0..np {
                            bdiv[(c * nm + i) * np + j] += wq * v[i] * n[c] * psi[j];
                        }
                    }
                }
                for j in 0..np {
                    for i in 0..np {
                        pb[j * np + i] += wq * psi[i] * psi[j];
                    }
                }
            }
            let slot = side_slot(side);
            boundary_consistency[slot] = cons;
            boundary_normal[slot] = nn;
            div_boundary[slot] = bdiv;
            pressure_boundary[slot] = pb;
        }

        Self {
            k,
            nm,
            nu,
            np,
            volume,
            gradient,
            consistency,
            jump,
            boundary_consistency,
            boundary_normal,
            div_volume,
            div_face,
            div_boundary,
            pressure_mean,
            pressure_boundary,
        }
    }

    pub fn for_space(space: &DGSpace<T>) -> Self {
        let m = space.mesh();
        Self::new(space.order(), m.hx, m.hy)
    }

    /// Local block of the SIP operator for an interior face.
    /// `t` is the test side and `s` the trial side (0 plus, 1 minus).
    pub fn interior_block(&self, axis: usize, t: usize, s: usize, eta: [T; 2], delta: T) -> Vec<T> {
        let nu = self.nu;
        let cts = &self.consistency[axis][t][s];
        let cst = &self.consistency[axis][s][t];
        let jm = &self.jump[axis][t][s];
        let mut out = vec![T::zero(); nu * nu];
        for r in 0..nu {
            for c in 0..nu {
                out[r * nu + c] = eta[s] * cts[r * nu + c] + eta[t] * cst[c * nu + r] + delta * jm[r * nu + c];
            }
        }
        out
    }

    /// Diagonal-block contribution of a Navier face on `side`.
    pub fn navier_block(&self, side: Side, eta: T, delta: T) -> Vec<T> {
        let nu = self.nu;
        let slot = side_slot(side);
        let cb = &self.boundary_consistency[slot];
        let nn = &self.boundary_normal[slot];
        let mut out = vec![T::zero(); nu * nu];
        for r in 0..nu {
            for c in 0..nu {
                out[r * nu + c] = eta * (cb[r * nu + c] + cb[c * nu + r]) + delta * nn[r * nu + c];
            }
        }
        out
    }
}

fn element_pattern<T: Real>(mesh: &CartesianMesh<T>, row_block: usize, col_block: usize) -> BlockPattern {
    BlockPattern {
        row_block,
        col_block,
        adjacency: (0..mesh.n_elements()).map(|e| mesh.stencil(e)).collect(),
        n_block_cols: mesh.n_elements(),
    }
}

fn check_visc<T: Real>(space: &DGSpace<T>, visc: &ViscosityField<T>) -> Result<()> {
    if visc.values().len() != space.mesh().n_elements() {
        return Err(Error::DimensionMismatch(format!(
            "viscosity has {} values for {} elements",
            visc.values().len(),
            space.mesh().n_elements()
        )));
    }
    Ok(())
}

/// Assembles the SIP viscous operator `A`.
pub fn assemble_a<T: Real>(space: &DGSpace<T>, visc: &ViscosityField<T>, cfg: &SipConfig<T>) -> Result<CsrMatrix<T>> {
    check_visc(space, visc)?;
    let mesh = space.mesh();
    let k = space.order();
    let lo = LocalOperators::for_space(space);
    let pattern = element_pattern(mesh, lo.nu, lo.nu);
    let mut a = pattern.allocate::<T>();
    for e in 0..mesh.n_elements() {
        pattern.add_block(&mut a, e, e, visc.get(e), &lo.volume);
    }
    for face in mesh.faces() {
        match face.kind {
            FaceKind::Neumann => {}
            FaceKind::Navier => {
                let delta = penalty(mesh, face, k, visc, cfg)?;
                let blk = lo.navier_block(face.plus_side, visc.get(face.plus), delta);
                pattern.add_block(&mut a, face.plus, face.plus, T::one(), &blk);
            }
            FaceKind::Interior => {
                let delta = penalty(mesh, face, k, visc, cfg)?;
                let minus = face.minus.expect("interior face has two elements");
                let elems = [face.plus, minus];
                let eta = [visc.get(face.plus), visc.get(minus)];
                let axis = axis_of(face.plus_side);
                for t in 0..2 {
                    for s in 0..2 {
                        let blk = lo.interior_block(axis, t, s, eta, delta);
                        pattern.add_block(&mut a, elems[t], elems[s], T::one(), &blk);
                    }
                }
            }
        }
    }
    Ok(a.with_block_size(lo.nu))
}

/// Element-diagonal blocks of `A`, assembled directly (row-major, one per element).
pub fn assemble_diagonal_blocks<T: Real>(
    space: &DGSpace<T>,
    visc: &ViscosityField<T>,
    cfg: &SipConfig<T>,
) -> Result<Vec<Vec<T>>> {
    check_visc(space, visc)?;
    let mesh = space.mesh();
    let k = space.order();
    let lo = LocalOperators::for_space(space);
    let mut blocks: Vec<Vec<T>> =
        (0..mesh.n_elements()).map(|e| lo.volume.iter().map(|&v| v * visc.get(e)).collect()).collect();
    for face in mesh.faces() {
        match face.kind {
            FaceKind::Neumann => {}
            FaceKind::Navier => {
                let delta = penalty(mesh, face, k, visc, cfg)?;
                let blk = lo.navier_block(face.plus_side, visc.get(face.plus), delta);
                blocks[face.plus].iter_mut().zip(&blk).for_each(|(a, b)| *a += *b);
            }
            FaceKind::Interior => {
                let delta = penalty(mesh, face, k, visc, cfg)?;
                let minus = face.minus.expect("interior face has two elements");
                let elems = [face.plus, minus];
                let eta = [visc.get(face.plus), visc.get(minus)];
                let axis = axis_of(face.plus_side);
                for t in 0..2 {
                    let blk = lo.interior_block(axis, t, t, eta, delta);
                    blocks[elems[t]].iter_mut().zip(&blk).for_each(|(a, b)| *a += *b);
                }
            }
        }
    }
    Ok(blocks)
}

/// Element-block Jacobi operator of `A` with factorised blocks.
pub fn assemble_block_jacobi<T: Real>(
    space: &DGSpace<T>,
    visc: &ViscosityField<T>,
    cfg: &SipConfig<T>,
) -> Result<BlockJacobi<T>> {
    let blocks = assemble_diagonal_blocks(space, visc, cfg)?;
    BlockJacobi::from_blocks(space.dofs_per_element(), blocks)
}

/// Assembles the divergence coupling `B` (velocity rows, pressure columns).
pub fn assemble_b<T: Real>(space_u: &DGSpace<T>, space_p: &DGSpace<T>) -> Result<CsrMatrix<T>> {
    if space_p.order() + 1 != space_u.order() || space_p.components() != 1 {
        return Err(Error::InvalidArgument("pressure order must be velocity order minus one".into()));
    }
    let mesh = space_u.mesh();
    let lo = LocalOperators::for_space(space_u);
    let pattern = element_pattern(mesh, lo.nu, lo.np);
    let mut b = pattern.allocate::<T>();
    for e in 0..mesh.n_elements() {
        pattern.add_block(&mut b, e, e, T::one(), &lo.div_volume);
    }
    for face in mesh.faces() {
        match face.kind {
            FaceKind::Neumann => {}
            FaceKind::Navier => {
                pattern.add_block(&mut b, face.plus, face.plus, T::one(), &lo.div_boundary[side_slot(face.plus_side)]);
            }
            FaceKind::Interior => {
                let elems = [face.plus, face.minus.expect("interior face")];
                let axis = axis_of(face.plus_side);
                for t in 0..2 {
                    for s in 0..2 {
                        pattern.add_block(&mut b, elems[t], elems[s], T::one(), &lo.div_face[axis][t][s]);
                    }
                }
            }
        }
    }
    Ok(b)
}

/// Load vector `\int f . v` with `k+3` Gauss points per direction.
pub fn assemble_rhs<T: Real, F>(space: &DGSpace<T>, f: F) -> Vec<T>
where
    F: Fn(T, T) -> [T; 2],
{
    assemble_rhs_by_element(space, |_, x, y| f(x, y))
}

/// As [`assemble_rhs`] with the element index passed to the forcing (element-wise data).
pub fn assemble_rhs_by_element<T: Real, F>(space: &DGSpace<T>, f: F) -> Vec<T>
where
    F: Fn(usize, T, T) -> [T; 2],
{
    let mesh = space.mesh();
    let rule = tensor_rule::<T>(space.order() + 3);
    let table: Vec<Vec<T>> = rule.points.iter().map(|p| space.reference_values(p[0], p[1])).collect();
    let area = mesh.element_area();
    let nm = space.modes();
    let mut out = vec![T::zero(); space.n_dofs()];
    for e in 0..mesh.n_elements() {
        let r = mesh.element_rect(e);
        let base = e * space.dofs_per_element();
        for (qp, (p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let fv = f(e, r.x0 + p[0] * mesh.hx, r.y0 + p[1] * mesh.hy);
            for c in 0..2 {
                let wf = w * area * fv[c];
                for (m, v) in table[qp].iter().enumerate() {
                    out[base + c * nm + m] += wf * *v;
                }
            }
        }
    }
    out
}

/// Diagonal of the Schur surrogate: `|K| / eta_K` for every pressure mode of `K`.
pub fn assemble_sstar<T: Real>(space_p: &DGSpace<T>, visc: &ViscosityField<T>) -> Result<Vec<T>> {
    check_visc(space_p, visc)?;
    let area = space_p.mesh().element_area();
    let per = space_p.dofs_per_element();
    Ok((0..space_p.n_dofs()).map(|i| area / visc.get(i / per)).collect())
}

fn assemble_h1h<T: Real>(space_u: &DGSpace<T>, with_gradient: bool) -> CsrMatrix<T> {
    let mesh = space_u.mesh();
    let lo = LocalOperators::for_space(space_u);
    let kf = T::of_usize(space_u.order());
    let weight = kf * kf / mesh.diameter();
    let pattern = element_pattern(mesh, lo.nu, lo.nu);
    let mut m = pattern.allocate::<T>();
    if with_gradient {
        for e in 0..mesh.n_elements() {
            pattern.add_block(&mut m, e, e, T::one(), &lo.gradient);
        }
    }
    for face in mesh.faces() {
        match face.kind {
            FaceKind::Neumann => {}
            FaceKind::Navier => {
                let slot = side_slot(face.plus_side);
                pattern.add_block(&mut m, face.plus, face.plus, weight, &lo.boundary_normal[slot]);
            }
            FaceKind::Interior => {
                let elems = [face.plus, face.minus.expect("interior face")];
                let axis = axis_of(face.plus_side);
                for t in 0..2 {
                    for s in 0..2 {
                        pattern.add_block(&mut m, elems[t], elems[s], weight, &lo.jump[axis][t][s]);
                    }
                }
            }
        }
    }
    m
}

/// Face part of the discrete `||.||_{1,h}` norm (jumps and Navier normal traces only).
pub fn assemble_jump_matrix<T: Real>(space_u: &DGSpace<T>) -> CsrMatrix<T> {
    assemble_h1h(space_u, false)
}

/// Matrices of the squared discrete norms: `||v||_{1,h}^2 = v^T H v` and `|||q|||_0^2 = q^T L q`.
pub fn assemble_norm_matrices<T: Real>(space_u: &DGSpace<T>, space_p: &DGSpace<T>) -> (CsrMatrix<T>, CsrMatrix<T>) {
    let h1h = assemble_h1h(space_u, true);
    let mesh = space_u.mesh();
    let lo = LocalOperators::for_space(space_u);
    let kf = T::of_usize(space_u.order());
    let weight = mesh.diameter() / (kf * kf);
    debug_assert_eq!(space_p.dofs_per_element(), lo.np);
    let pattern = element_pattern(mesh, lo.np, lo.np);
    let mut l0 = pattern.allocate::<T>();
    let mut mass = vec![T::zero(); lo.np * lo.np];
    for i in 0..lo.np {
        mass[i * lo.np + i] = mesh.element_area();
    }
    for e in 0..mesh.n_elements() {
        pattern.add_block(&mut l0, e, e, T::one(), &mass);
    }
    for face in mesh.faces() {
        match face.kind {
            FaceKind::Neumann => {}
            FaceKind::Navier => {
                let slot = side_slot(face.plus_side);
                pattern.add_block(&mut l0, face.plus, face.plus, weight, &lo.pressure_boundary[slot]);
            }
            FaceKind::Interior => {
                let elems = [face.plus, face.minus.expect("interior face")];
                let axis = axis_of(face.plus_side);
                for t in 0..2 {
                    for s in 0..2 {
                        pattern.add_block(&mut l0, elems[t], elems[s], weight, &lo.pressure_mean[axis][t][s]);
                    }
                }
            }
        }
    }
    (h1h, l0)
}

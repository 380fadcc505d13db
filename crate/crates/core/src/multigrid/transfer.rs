use crate::basis::DGSpace;
use crate::error::{Error, Result};
use crate::mesh::{CartesianMesh, CoarsenMode};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Prolongation `P` (coarse to fine) together with its transpose, used as restriction.
#[derive(Clone, Debug)]
pub struct Transfer<T> {
    pub prolongation: CsrMatrix<T>,
    pub restriction: CsrMatrix<T>,
}

impl<T: Real> Transfer<T> {
    pub fn new(prolongation: CsrMatrix<T>) -> Self {
        let restriction = prolongation.transpose();
        Self { prolongation, restriction }
    }

    pub fn fine_dim(&self) -> usize {
        self.prolongation.nrows()
    }

    pub fn coarse_dim(&self) -> usize {
        self.prolongation.ncols()
    }

    pub fn prolong(&self, xc: &[T], xf: &mut [T]) {
        self.prolongation.matvec(xc, xf)
    }

    pub fn restrict(&self, xf: &[T], xc: &mut [T]) {
        self.restriction.matvec(xf, xc)
    }
}

/// Selection of the modal coefficients with per-direction degree `<= s` from an order-`k` space.
pub fn build_p_prolong<T: Real>(space: &DGSpace<T>, s: usize) -> Result<CsrMatrix<T>> {
    let k = space.order();
    if k < s {
        return Err(Error::InvalidArgument(format!("cannot p-coarsen from order {k} to order {s}")));
    }
    let coarse = DGSpace::new(space.mesh().clone(), space.components(), s);
    let mut trip = Vec::with_capacity(coarse.n_dofs());
    for e in 0..space.mesh().n_elements() {
        for c in 0..space.components() {
            for a in 0..=s {
                for b in 0..=s {
                    trip.push((space.dof(e, c, a, b), coarse.dof(e, c, a, b), T::one()));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(space.n_dofs(), coarse.n_dofs(), &trip))
}

/// Coarse operator `P^T A P`; selection matrices take the principal sub-matrix directly.
pub fn galerkin_coarsen<T: Real>(p: &CsrMatrix<T>, a: &CsrMatrix<T>) -> Result<CsrMatrix<T>> {
    if p.nrows() != a.ncols() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "P is {}x{}, A is {}x{}",
            p.nrows(),
            p.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    match p.as_selection() {
        Some(idx) if idx.windows(2).all(|w| w[0] < w[1]) => Ok(a.principal_submatrix(&idx)),
        _ => a.ptap(p),
    }
}

/// Number of continuous Q1 velocity unknowns on the node grid of `mesh`.
pub fn cg_dofs<T: Real>(mesh: &CartesianMesh<T>) -> usize {
    2 * (mesh.nx + 1) * (mesh.ny + 1)
}

/// Maps continuous bilinear nodal values (`2 * node + comp`, nodes row-major) to the
/// element-wise modal coefficients of the order-1 DG space.
pub fn build_dg_to_cg<T: Real>(space_q1: &DGSpace<T>) -> Result<CsrMatrix<T>> {
    if space_q1.order() != 1 || space_q1.components() != 2 {
        return Err(Error::InvalidArgument("DG to CG map needs the order-one vector space".into()));
    }
    let mesh = space_q1.mesh();
    let half = T::of(0.5);
    let slope = T::one() / (T::of(2.0) * T::of(3.0).sqrt());
    // 1D nodal function N_s expressed in the modes (1, phi_1)
    let coef = [[half, -slope], [half, slope]];
    let mut trip = Vec::with_capacity(space_q1.n_dofs() * 4);
    for e in 0..mesh.n_elements() {
        let (i, j) = mesh.element_ij(e);
        for t in 0..2 {
            for s in 0..2 {
                let node = (j + t) * (mesh.nx + 1) + i + s;
                for c in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            trip.push((space_q1.dof(e, c, a, b), 2 * node + c, coef[s][a] * coef[t][b]));
                        }
                    }
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(space_q1.n_dofs(), cg_dofs(mesh), &trip))
}

/// 1D interpolation from `(m+1)/2` coarse lattice points to `m` (odd) fine points.
fn interp_1d<T: Real>(m: usize) -> Vec<Vec<(usize, T)>> {
    let half = T::of(0.5);
    (0..m)
        .map(|i| if i % 2 == 0 { vec![(i / 2, T::one())] } else { vec![(i / 2, half), (i / 2 + 1, half)] })
        .collect()
}

/// Lattice size (points per direction) carrying the unknowns of a coarsening mode.
fn lattice<T: Real>(mesh: &CartesianMesh<T>, mode: CoarsenMode) -> (usize, usize) {
    match mode {
        CoarsenMode::CellCenteredOdd => (mesh.nx, mesh.ny),
        CoarsenMode::VertexCenteredEven => (mesh.nx + 1, mesh.ny + 1),
    }
}

/// Bilinear interpolation between two lattices related by one coarsening step, applied to
/// both velocity components (unknown `2 * point + comp`).
pub fn build_h_prolong<T: Real>(
    coarse: &CartesianMesh<T>,
    fine: &CartesianMesh<T>,
    mode: CoarsenMode,
) -> Result<CsrMatrix<T>> {
    let expect = fine.coarsen(mode)?;
    if expect.nx != coarse.nx || expect.ny != coarse.ny {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not one {mode:?} coarsening of {}x{}",
            coarse.nx, coarse.ny, fine.nx, fine.ny
        )));
    }
    let (mx, my) = lattice(fine, mode);
    let (cx, _) = lattice(coarse, mode);
    let px = interp_1d::<T>(mx);
    let py = interp_1d::<T>(my);
    let mut trip = Vec::new();
    for j in 0..my {
        for i in 0..mx {
            let f = j * mx + i;
            for &(jc, wy) in &py[j] {
                for &(ic, wx) in &px[i] {
                    let cpt = jc * cx + ic;
                    for c in 0..2 {
                        trip.push((2 * f + c, 2 * cpt + c, wx * wy));
                    }
                }
            }
        }
    }
    let (cxn, cyn) = lattice(coarse, mode);
    Ok(CsrMatrix::from_triplets(2 * mx * my, 2 * cxn * cyn, &trip))
}

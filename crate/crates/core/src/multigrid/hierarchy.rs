use std::fmt::Write as _;
use std::sync::Arc;

use super::transfer::{build_dg_to_cg, build_h_prolong, build_p_prolong, galerkin_coarsen, Transfer};
use super::Variant;
use crate::basis::DGSpace;
use crate::error::{Error, Result};
use crate::krylov::{chebyshev, estimate_lambda_max, BandLu, BlockJacobi, ChebyshevBounds, Preconditioner, PointJacobi};
use crate::mesh::{CartesianMesh, CoarsenMode};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug)]
pub struct MgSettings {
    pub variant: Variant,
    /// Number of lattice levels below the p-coarse DG level (1 means no geometric coarsening).
    pub h_levels: usize,
    pub smooth_p: usize,
    pub smooth_h: usize,
    pub seed: u64,
    pub arnoldi_steps: usize,
}

impl MgSettings {
    pub fn new(variant: Variant, h_levels: usize) -> Self {
        Self { variant, h_levels, smooth_p: 2, smooth_h: 3, seed: 0, arnoldi_steps: 10 }
    }
}

pub enum SmootherKind<T> {
    Block(BlockJacobi<T>),
    Point(PointJacobi<T>),
}

impl<T: Real> Preconditioner<T> for SmootherKind<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        match self {
            SmootherKind::Block(b) => b.apply(r, z),
            SmootherKind::Point(p) => p.apply(r, z),
        }
    }
}

pub struct LevelSmoother<T> {
    pub kind: SmootherKind<T>,
    pub bounds: ChebyshevBounds,
    pub steps: usize,
}

pub struct MgLevel<T> {
    pub name: String,
    pub op: Arc<CsrMatrix<T>>,
    /// Absent on the coarsest level.
    pub smoother: Option<LevelSmoother<T>>,
    /// Transfer between the next coarser level and this one.
    pub transfer: Option<Transfer<T>>,
}

pub struct MgHierarchy<T> {
    pub variant: Variant,
    pub levels: Vec<MgLevel<T>>,
    coarse: BandLu<T>,
    /// Diagonal shift applied to make the coarsest operator factorisable, if any.
    pub coarse_shift: Option<f64>,
}

/// Intermediate description of a level before smoothers are attached.
struct Pending<T> {
    name: String,
    op: Arc<CsrMatrix<T>>,
    block: Option<usize>,
    steps: usize,
}

fn coarse_factor<T: Real>(op: &CsrMatrix<T>, name: &str) -> Result<(BandLu<T>, Option<f64>)> {
    match BandLu::new(op, name) {
        Ok(lu) => Ok((lu, None)),
        Err(Error::SingularPivot { .. }) => {
            let shift = T::of(1e-12) * op.max_abs();
            let n = op.nrows();
            let mut trip: Vec<(usize, usize, T)> = Vec::with_capacity(op.nnz() + n);
            for r in 0..n {
                let (c, v) = op.row(r);
                trip.extend(c.iter().zip(v).map(|(&c, &v)| (r, c as usize, v)));
                trip.push((r, r, shift));
            }
            let shifted = CsrMatrix::from_triplets(n, n, &trip);
            let lu = BandLu::new(&shifted, name)?;
            Ok((lu, Some(shift.as_f64())))
        }
        Err(e) => Err(e),
    }
}

/// Builds the multigrid hierarchy for the SIP operator `a` on `space`.
pub fn build_hierarchy<T: Real>(
    a: Arc<CsrMatrix<T>>,
    space: &DGSpace<T>,
    settings: &MgSettings,
) -> Result<MgHierarchy<T>> {
    let k = space.order();
    let mesh = space.mesh();
    if a.nrows() != space.n_dofs() {
        return Err(Error::DimensionMismatch(format!("operator has {} rows, space {} dofs", a.nrows(), space.n_dofs())));
    }
    if settings.h_levels == 0 {
        return Err(Error::InvalidArgument("h_levels must be at least 1".into()));
    }
    let variant = settings.variant;
    match variant {
        Variant::HpQ0 if mesh.nx % 2 == 0 || mesh.ny % 2 == 0 => {
            return Err(Error::InvalidArgument(format!(
                "hp_q0 needs odd element counts, got {}x{}",
                mesh.nx, mesh.ny
            )));
        }
        Variant::HpQ1 => {
            let d = 1usize << (settings.h_levels - 1);
            if mesh.nx % d != 0 || mesh.ny % d != 0 {
                return Err(Error::InvalidArgument(format!(
                    "hp_q1 with {} h-levels needs element counts divisible by {d}, got {}x{}",
                    settings.h_levels, mesh.nx, mesh.ny
                )));
            }
        }
        _ => {}
    }

    let mut pending = vec![Pending {
        name: format!("DG Q{k}"),
        op: a.clone(),
        block: Some(space.dofs_per_element()),
        steps: settings.smooth_p,
    }];
    let mut transfers: Vec<Transfer<T>> = Vec::new();
    let s = variant.coarse_order();
    let push = |pending: &mut Vec<Pending<T>>, transfers: &mut Vec<Transfer<T>>, p: CsrMatrix<T>, name: String, block: Option<usize>| -> Result<()> {
        let op = galerkin_coarsen(&p, &pending.last().expect("fine level").op)?;
        transfers.push(Transfer::new(p));
        pending.push(Pending { name, op: Arc::new(op), block, steps: settings.smooth_h });
        Ok(())
    };

    match variant {
        Variant::PQ0 | Variant::PQ1 => {
            let p = build_p_prolong(space, s)?;
            push(&mut pending, &mut transfers, p, format!("DG Q{s}"), None)?;
        }
        Variant::HpQ0 => {
            let p = build_p_prolong(space, 0)?;
            push(&mut pending, &mut transfers, p, format!("Q0 {}x{}", mesh.nx, mesh.ny), None)?;
            let mut fine: CartesianMesh<T> = (**mesh).clone();
            for _ in 1..settings.h_levels {
                let coarse = fine.coarsen(CoarsenMode::CellCenteredOdd)?;
                let p = build_h_prolong(&coarse, &fine, CoarsenMode::CellCenteredOdd)?;
                push(&mut pending, &mut transfers, p, format!("Q0 {}x{}", coarse.nx, coarse.ny), None)?;
                fine = coarse;
            }
        }
        Variant::HpQ1 => {
            let q1 = DGSpace::velocity(mesh.clone(), 1);
            if k > 1 {
                let p = build_p_prolong(space, 1)?;
                push(&mut pending, &mut transfers, p, "DG Q1".to_string(), Some(q1.dofs_per_element()))?;
            }
            let p = build_dg_to_cg(&q1)?;
            push(&mut pending, &mut transfers, p, format!("CG Q1 {}x{}", mesh.nx, mesh.ny), None)?;
            let mut fine: CartesianMesh<T> = (**mesh).clone();
            for _ in 1..settings.h_levels {
                let coarse = fine.coarsen(CoarsenMode::VertexCenteredEven)?;
                let p = build_h_prolong(&coarse, &fine, CoarsenMode::VertexCenteredEven)?;
                push(&mut pending, &mut transfers, p, format!("CG Q1 {}x{}", coarse.nx, coarse.ny), None)?;
                fine = coarse;
            }
        }
    }

    let last = pending.pop().expect("coarsest level");
    let (coarse, coarse_shift) = coarse_factor(&last.op, &last.name)?;
    let mut levels = Vec::with_capacity(pending.len() + 1);
    let mut transfers = transfers.into_iter();
    for (l, p) in pending.into_iter().enumerate() {
        let kind = match p.block {
            Some(bs) => SmootherKind::Block(BlockJacobi::from_matrix(&p.op, bs)?),
            None => SmootherKind::Point(PointJacobi::new(&p.op)?),
        };
        let lmax = estimate_lambda_max(&*p.op, &kind, settings.seed.wrapping_add(l as u64), settings.arnoldi_steps)?;
        let bounds = ChebyshevBounds::from_lambda_max(lmax)?;
        levels.push(MgLevel {
            name: p.name,
            op: p.op,
            smoother: Some(LevelSmoother { kind, bounds, steps: p.steps }),
            transfer: transfers.next(),
        });
    }
    levels.push(MgLevel { name: last.name, op: last.op, smoother: None, transfer: None });
    Ok(MgHierarchy { variant, levels, coarse, coarse_shift })
}

impl<T: Real> MgHierarchy<T> {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.op.nrows()).collect()
    }

    /// One V-cycle for `A z = r` from a zero initial guess.
    pub fn v_cycle(&self, r: &[T]) -> Vec<T> {
        let mut z = vec![T::zero(); r.len()];
        self.cycle(0, r, &mut z);
        z
    }

    fn cycle(&self, l: usize, b: &[T], x: &mut [T]) {
        let level = &self.levels[l];
        let Some(sm) = level.smoother.as_ref() else {
            x.copy_from_slice(b);
            self.coarse.solve_in_place(x);
            return;
        };
        let transfer = level.transfer.as_ref().expect("transfer below a smoothed level");
        let op = &*level.op;
        chebyshev(op, &sm.kind, b, x, &sm.bounds, sm.steps);
        let mut r = vec![T::zero(); b.len()];
        op.matvec(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = *bi - *ri;
        }
        let mut rc = vec![T::zero(); transfer.coarse_dim()];
        transfer.restrict(&r, &mut rc);
        let mut xc = vec![T::zero(); rc.len()];
        self.cycle(l + 1, &rc, &mut xc);
        transfer.prolong(&xc, &mut r);
        for (xi, ci) in x.iter_mut().zip(&r) {
            *xi += *ci;
        }
        chebyshev(op, &sm.kind, b, x, &sm.bounds, sm.steps);
    }

    /// Text summary: one line per level with dimension, nonzeros and smoother.
    pub fn summary(&self) -> String {
        let mut out = format!("multigrid hierarchy ({}), {} levels\n", self.variant, self.levels.len());
        for (l, lev) in self.levels.iter().enumerate() {
            let _ = write!(out, "  {l}: {:<14} dim {:>9} nnz {:>11}", lev.name, lev.op.nrows(), lev.op.nnz());
            match &lev.smoother {
                Some(sm) => {
                    let kind = match sm.kind {
                        SmootherKind::Block(ref b) => format!("block Jacobi ({})", b.block_size()),
                        SmootherKind::Point(_) => "point Jacobi".to_string(),
                    };
                    let _ = writeln!(
                        out,
                        "  {kind}, Chebyshev x{} on [{:.4e}, {:.4e}]",
                        sm.steps, sm.bounds.lambda0, sm.bounds.lambda1
                    );
                }
                None => {
                    let _ = write!(out, "  direct LU");
                    if let Some(s) = self.coarse_shift {
                        let _ = write!(out, " (diagonal shift {s:.3e})");
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

impl<T: Real> Preconditioner<T> for MgHierarchy<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.iter_mut().for_each(|v| *v = T::zero());
        self.cycle(0, r, z);
    }
}

//! Uniform Cartesian quadrilateral meshes with face topology.
//!
//! Elements are numbered row-major with `i` (the x index) running fastest. Every
//! face has a *plus* element; for interior faces this is the neighbour with the
//! smaller index and the stored normal points from plus to minus. Boundary faces
//! carry the outward unit normal of the domain.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// Outward unit normal of an element side, as integer components.
    pub fn normal(self) -> [i8; 2] {
        match self {
            Side::Left => [-1, 0],
            Side::Right => [1, 0],
            Side::Bottom => [0, -1],
            Side::Top => [0, 1],
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Bottom => Side::Top,
            Side::Top => Side::Bottom,
        }
    }

    /// True for the sides whose normal is parallel to the x axis.
    pub fn is_vertical(self) -> bool {
        matches!(self, Side::Left | Side::Right)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Neumann,
    Navier,
}

/// Boundary condition type per side of the rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundarySpec {
    pub left: BoundaryKind,
    pub right: BoundaryKind,
    pub bottom: BoundaryKind,
    pub top: BoundaryKind,
}

impl BoundarySpec {
    pub fn all_navier() -> Self {
        Self::uniform(BoundaryKind::Navier)
    }

    pub fn uniform(kind: BoundaryKind) -> Self {
        Self { left: kind, right: kind, bottom: kind, top: kind }
    }

    /// Free surface on top, free slip elsewhere.
    pub fn neumann_top() -> Self {
        Self { top: BoundaryKind::Neumann, ..Self::all_navier() }
    }

    pub fn side(&self, side: Side) -> BoundaryKind {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }

    /// The discrete pressure is only determined up to a constant when no side is Neumann.
    pub fn has_pressure_nullspace(&self) -> bool {
        Side::ALL.iter().all(|&s| self.side(s) == BoundaryKind::Navier)
    }
}

impl std::fmt::Display for BoundarySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = |k: BoundaryKind| match k {
            BoundaryKind::Neumann => "neumann",
            BoundaryKind::Navier => "navier",
        };
        write!(
            f,
            "left={} right={} bottom={} top={}",
            name(self.left),
            name(self.right),
            name(self.bottom),
            name(self.top)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Neumann,
    Navier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Face {
    pub kind: FaceKind,
    pub plus: usize,
    pub minus: Option<usize>,
    /// Side of the plus element on which the face lies; the normal is its outward normal.
    pub plus_side: Side,
}

impl Face {
    pub fn normal<T: Real>(&self) -> [T; 2] {
        let n = self.plus_side.normal();
        [T::of(n[0] as f64), T::of(n[1] as f64)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoarsenMode {
    /// Odd element counts; cell-centred lattices of size n and (n+1)/2.
    CellCenteredOdd,
    /// Even element counts; element counts halve, vertex lattices go from n+1 to n/2+1.
    VertexCenteredEven,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Real> Rect<T> {
    pub fn unit() -> Self {
        Self { x0: T::zero(), y0: T::zero(), x1: T::one(), y1: T::one() }
    }

    pub fn width(&self) -> T {
        self.x1 - self.x0
    }

    pub fn height(&self) -> T {
        self.y1 - self.y0
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }
}

#[derive(Clone, Debug)]
pub struct CartesianMesh<T> {
    pub nx: usize,
    pub ny: usize,
    pub x0: T,
    pub y0: T,
    pub lx: T,
    pub ly: T,
    pub hx: T,
    pub hy: T,
    pub bc: BoundarySpec,
    faces: Vec<Face>,
    n_interior: usize,
}

impl<T: Real> CartesianMesh<T> {
    pub fn new(nx: usize, ny: usize, domain: Rect<T>, bc: BoundarySpec) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!("element counts must be positive, got {nx}x{ny}")));
        }
        let (lx, ly) = (domain.width(), domain.height());
        if !(lx > T::zero() && ly > T::zero()) {
            return Err(Error::InvalidArgument(format!("domain extents must be positive, got {lx} x {ly}")));
        }
        let mut mesh = Self {
            nx,
            ny,
            x0: domain.x0,
            y0: domain.y0,
            lx,
            ly,
            hx: lx / T::of_usize(nx),
            hy: ly / T::of_usize(ny),
            bc,
            faces: Vec::new(),
            n_interior: 0,
        };
        mesh.build_faces();
        Ok(mesh)
    }

    pub fn unit_square(n: usize, bc: BoundarySpec) -> Result<Self> {
        Self::new(n, n, Rect::unit(), bc)
    }

    fn build_faces(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        let mut faces = Vec::with_capacity((nx - 1) * ny + nx * (ny - 1) + 2 * (nx + ny));
        for j in 0..ny {
            for i in 0..nx {
                let e = self.element_index(i, j);
                if i + 1 < nx {
                    faces.push(Face {
                        kind: FaceKind::Interior,
                        plus: e,
                        minus: Some(e + 1),
                        plus_side: Side::Right,
                    });
                }
                if j + 1 < ny {
                    faces.push(Face {
                        kind: FaceKind::Interior,
                        plus: e,
                        minus: Some(e + nx),
                        plus_side: Side::Top,
                    });
                }
            }
        }
        self.n_interior = faces.len();
        let boundary = |side: Side, e: usize, bc: &BoundarySpec| Face {
            kind: match bc.side(side) {
                BoundaryKind::Neumann => FaceKind::Neumann,
                BoundaryKind::Navier => FaceKind::Navier,
            },
            plus: e,
            minus: None,
            plus_side: side,
        };
        for i in 0..nx {
            faces.push(boundary(Side::Bottom, self.element_index(i, 0), &self.bc));
        }
        for i in 0..nx {
            faces.push(boundary(Side::Top, self.element_index(i, ny - 1), &self.bc));
        }
        for j in 0..ny {
            faces.push(boundary(Side::Left, self.element_index(0, j), &self.bc));
        }
        for j in 0..ny {
            faces.push(boundary(Side::Right, self.element_index(nx - 1, j), &self.bc));
        }
        self.faces = faces;
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn element_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn element_ij(&self, e: usize) -> (usize, usize) {
        (e % self.nx, e / self.nx)
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn interior_faces(&self) -> &[Face] {
        &self.faces[..self.n_interior]
    }

    pub fn boundary_faces(&self) -> &[Face] {
        &self.faces[self.n_interior..]
    }

    pub fn element_rect(&self, e: usize) -> Rect<T> {
        let (i, j) = self.element_ij(e);
        let x0 = self.x0 + self.hx * T::of_usize(i);
        let y0 = self.y0 + self.hy * T::of_usize(j);
        Rect { x0, y0, x1: x0 + self.hx, y1: y0 + self.hy }
    }

    pub fn element_center(&self, e: usize) -> [T; 2] {
        let r = self.element_rect(e);
        let half = T::of(0.5);
        [r.x0 + half * self.hx, r.y0 + half * self.hy]
    }

    pub fn element_area(&self) -> T {
        self.hx * self.hy
    }

    /// Element diameter, the mesh size `h` used by the discrete norms.
    pub fn diameter(&self) -> T {
        (self.hx * self.hx + self.hy * self.hy).sqrt()
    }

    /// Length of an element side.
    pub fn side_length(&self, side: Side) -> T {
        if side.is_vertical() {
            self.hy
        } else {
            self.hx
        }
    }

    /// Element across `side` of `e`, if any.
    pub fn neighbor(&self, e: usize, side: Side) -> Option<usize> {
        let (i, j) = self.element_ij(e);
        match side {
            Side::Left => (i > 0).then(|| e - 1),
            Side::Right => (i + 1 < self.nx).then(|| e + 1),
            Side::Bottom => (j > 0).then(|| e - self.nx),
            Side::Top => (j + 1 < self.ny).then(|| e + self.nx),
        }
    }

    /// The element itself followed by its neighbours, sorted by index.
    pub fn stencil(&self, e: usize) -> Vec<usize> {
        let mut s: Vec<usize> = std::iter::once(e)
            .chain(Side::ALL.iter().filter_map(|&side| self.neighbor(e, side)))
            .collect();
        s.sort_unstable();
        s
    }

    /// Discrete trace inequality constant `(k+1)^2 |e| / |K|` for one side of an element.
    pub fn trace_constant(&self, side: Side, k: usize) -> T {
        let kp = T::of_usize(k + 1);
        kp * kp * self.side_length(side) / self.element_area()
    }

    /// Face trace constant: maximum over the adjacent elements (interior) or the
    /// single element (Navier). Neumann faces carry no penalty.
    pub fn face_trace_constant(&self, face: &Face, k: usize) -> Result<T> {
        match face.kind {
            FaceKind::Neumann => Err(Error::ContractViolation("Neumann faces carry no trace constant".into())),
            FaceKind::Navier => Ok(self.trace_constant(face.plus_side, k)),
            FaceKind::Interior => {
                let cp = self.trace_constant(face.plus_side, k);
                let cm = self.trace_constant(face.plus_side.opposite(), k);
                Ok(cp.max(cm))
            }
        }
    }

    pub fn domain(&self) -> Rect<T> {
        Rect { x0: self.x0, y0: self.y0, x1: self.x0 + self.lx, y1: self.y0 + self.ly }
    }

    pub fn coarsen(&self, mode: CoarsenMode) -> Result<Self> {
        let (nxc, nyc) = coarse_counts(self.nx, self.ny, mode)?;
        Self::new(nxc, nyc, self.domain(), self.bc)
    }
}

/// Element counts after one coarsening step.
pub fn coarse_counts(nx: usize, ny: usize, mode: CoarsenMode) -> Result<(usize, usize)> {
    let fail = |reason: &str| Error::CannotCoarsen { nx, ny, reason: reason.to_string() };
    match mode {
        CoarsenMode::CellCenteredOdd => {
            if nx % 2 == 0 || ny % 2 == 0 {
                return Err(fail("cell-centred coarsening needs odd element counts"));
            }
            if nx < 3 || ny < 3 {
                return Err(fail("at least three elements per direction are required"));
            }
            Ok(((nx + 1) / 2, (ny + 1) / 2))
        }
        CoarsenMode::VertexCenteredEven => {
            if nx % 2 != 0 || ny % 2 != 0 {
                return Err(fail("vertex-centred coarsening needs even element counts"));
            }
            Ok((nx / 2, ny / 2))
        }
    }
}

//! Hierarchical Legendre bases, Gauss quadrature and the DG function spaces.
//!
//! The reference interval is `[0, 1]` and the 1D basis functions are
//! `sqrt(2n+1) P_n(2 xi - 1)`, orthonormal with respect to the unit measure.
//! Under the affine map of a uniform element every DG mass matrix is therefore
//! `|K|` times the identity.

use std::sync::Arc;

use crate::mesh::{CartesianMesh, Rect};
use crate::scalar::Real;

/// Orthonormal Legendre values and first derivatives of orders `0..=k` at `x` in `[0, 1]`.
pub fn legendre_eval<T: Real>(k: usize, x: T) -> (Vec<T>, Vec<T>) {
    let t = T::of(2.0) * x - T::one();
    let mut p = vec![T::zero(); k + 1];
    let mut dp = vec![T::zero(); k + 1];
    p[0] = T::one();
    if k >= 1 {
        p[1] = t;
        dp[1] = T::one();
    }
    for n in 1..k {
        let nf = T::of_usize(n);
        p[n + 1] = ((T::of_usize(2 * n + 1)) * t * p[n] - nf * p[n - 1]) / (nf + T::one());
        dp[n + 1] = dp[n - 1] + T::of_usize(2 * n + 1) * p[n];
    }
    for n in 0..=k {
        let s = T::of_usize(2 * n + 1).sqrt();
        p[n] *= s;
        // d/dx = 2 d/dt on the unit interval
        dp[n] *= s * T::of(2.0);
    }
    (p, dp)
}

/// Gauss-Legendre rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct QuadratureRule<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

/// `q`-point Gauss-Legendre rule on the unit interval; exact up to degree `2q-1`.
pub fn gauss_rule<T: Real>(q: usize) -> QuadratureRule<T> {
    assert!(q >= 1, "a quadrature rule needs at least one point");
    let mut points = vec![0.0f64; q];
    let mut weights = vec![0.0f64; q];
    let qf = q as f64;
    for i in 0..(q + 1) / 2 {
        // Newton on P_q starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for n in 1..q {
                let nf = n as f64;
                let p2 = ((2.0 * nf + 1.0) * x * p1 - nf * p0) / (nf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let pq = if q == 1 { x } else { p1 };
            let pqm1 = if q == 1 { 1.0 } else { p0 };
            dp = qf * (x * pq - pqm1) / (x * x - 1.0);
            let dx = pq / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]; nodes come out in descending order of x
        points[i] = 0.5 * (1.0 - x);
        points[q - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[q - 1 - i] = 0.5 * w;
    }
    if q % 2 == 1 {
        points[q / 2] = 0.5;
    }
    QuadratureRule {
        points: points.into_iter().map(T::of).collect(),
        weights: weights.into_iter().map(T::of).collect(),
    }
}

/// Tensor product rule on the unit square, `q^2` points, x index fastest.
#[derive(Clone, Debug)]
pub struct TensorRule<T> {
    pub points: Vec<[T; 2]>,
    pub weights: Vec<T>,
}

pub fn tensor_rule<T: Real>(q: usize) -> TensorRule<T> {
    let r = gauss_rule::<T>(q);
    let mut points = Vec::with_capacity(q * q);
    let mut weights = Vec::with_capacity(q * q);
    for j in 0..q {
        for i in 0..q {
            points.push([r.points[i], r.points[j]]);
            weights.push(r.weights[i] * r.weights[j]);
        }
    }
    TensorRule { points, weights }
}

/// Per-element values `(1/|K|) \int_K f` computed with a `q`-point tensor Gauss rule.
pub fn project_element_constant<T: Real, F>(f: F, mesh: &CartesianMesh<T>, q: usize) -> Vec<T>
where
    F: Fn(T, T) -> T,
{
    let rule = tensor_rule::<T>(q);
    (0..mesh.n_elements())
        .map(|e| {
            let r = mesh.element_rect(e);
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(p, &w)| w * f(r.x0 + p[0] * mesh.hx, r.y0 + p[1] * mesh.hy))
                .sum()
        })
        .collect()
}

/// Mean of `f` over a rectangle using a `q`-point tensor rule.
pub fn rect_mean<T: Real, F: Fn(T, T) -> T>(f: F, rect: &Rect<T>, q: usize) -> T {
    let rule = tensor_rule::<T>(q);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(p, &w)| w * f(rect.x0 + p[0] * rect.width(), rect.y0 + p[1] * rect.height()))
        .sum()
}

/// Tensor-product modal DG space of uniform order on a Cartesian mesh.
///
/// DOF layout: element-major, then component, then mode `(a, b)` at `a (k+1) + b`
/// where `a` is the degree in x and `b` the degree in y.
#[derive(Clone, Debug)]
pub struct DGSpace<T> {
    mesh: Arc<CartesianMesh<T>>,
    components: usize,
    order: usize,
}

impl<T: Real> DGSpace<T> {
    pub fn new(mesh: Arc<CartesianMesh<T>>, components: usize, order: usize) -> Self {
        assert!(components >= 1);
        Self { mesh, components, order }
    }

    /// Velocity space `Q_k^2`.
    pub fn velocity(mesh: Arc<CartesianMesh<T>>, k: usize) -> Self {
        assert!(k >= 1, "velocity order must be at least one");
        Self::new(mesh, 2, k)
    }

    /// Pressure space `Q_{k-1}` paired with velocity order `k`.
    pub fn pressure(mesh: Arc<CartesianMesh<T>>, k: usize) -> Self {
        assert!(k >= 1, "velocity order must be at least one");
        Self::new(mesh, 1, k - 1)
    }

    pub fn mesh(&self) -> &Arc<CartesianMesh<T>> {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn modes(&self) -> usize {
        (self.order + 1) * (self.order + 1)
    }

    pub fn dofs_per_element(&self) -> usize {
        self.components * self.modes()
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs_per_element() * self.mesh.n_elements()
    }

    #[inline]
    pub fn mode_index(&self, a: usize, b: usize) -> usize {
        a * (self.order + 1) + b
    }

    #[inline]
    pub fn dof(&self, elem: usize, comp: usize, a: usize, b: usize) -> usize {
        elem * self.dofs_per_element() + comp * self.modes() + self.mode_index(a, b)
    }

    /// Coefficient vector of the function that is constant `1` in component `comp`.
    pub fn constant_vector(&self, comp: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.n_dofs()];
        for e in 0..self.mesh.n_elements() {
            v[self.dof(e, comp, 0, 0)] = T::one();
        }
        v
    }

    /// Values of all modes at reference coordinates.
    pub fn reference_values(&self, xi: T, eta: T) -> Vec<T> {
        let (lx, _) = legendre_eval(self.order, xi);
        let (ly, _) = legendre_eval(self.order, eta);
        let mut out = Vec::with_capacity(self.modes());
        for a in 0..=self.order {
            for b in 0..=self.order {
                out.push(lx[a] * ly[b]);
            }
        }
        out
    }

    /// Element containing a physical point (points on element edges go to the upper element).
    pub fn locate(&self, x: T, y: T) -> (usize, T, T) {
        let m = &*self.mesh;
        let fx = ((x - m.x0) / m.hx).floor();
        let fy = ((y - m.y0) / m.hy).floor();
        let i = fx.to_isize().unwrap_or(0).clamp(0, m.nx as isize - 1) as usize;
        let j = fy.to_isize().unwrap_or(0).clamp(0, m.ny as isize - 1) as usize;
        let e = m.element_index(i, j);
        let r = m.element_rect(e);
        (e, (x - r.x0) / m.hx, (y - r.y0) / m.hy)
    }

    /// Evaluates all components of the DG function `coeffs` at a physical point.
    pub fn eval(&self, coeffs: &[T], x: T, y: T) -> Vec<T> {
        let (e, xi, eta) = self.locate(x, y);
        self.eval_in_element(coeffs, e, xi, eta)
    }

    pub fn eval_in_element(&self, coeffs: &[T], e: usize, xi: T, eta: T) -> Vec<T> {
        let vals = self.reference_values(xi, eta);
        let base = e * self.dofs_per_element();
        (0..self.components)
            .map(|c| {
                let off = base + c * self.modes();
                vals.iter().zip(&coeffs[off..off + self.modes()]).map(|(v, u)| *v * *u).sum()
            })
            .collect()
    }

    /// Element-wise L2 projection of a vector field with `q`-point tensor quadrature.
    pub fn project<F>(&self, f: F, q: usize) -> Vec<T>
    where
        F: Fn(T, T) -> Vec<T>,
    {
        let rule = tensor_rule::<T>(q);
        let table: Vec<Vec<T>> = rule.points.iter().map(|p| self.reference_values(p[0], p[1])).collect();
        let m = &*self.mesh;
        let mut out = vec![T::zero(); self.n_dofs()];
        for e in 0..m.n_elements() {
            let r = m.element_rect(e);
            for (qp, (p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let fv = f(r.x0 + p[0] * m.hx, r.y0 + p[1] * m.hy);
                for c in 0..self.components {
                    let off = e * self.dofs_per_element() + c * self.modes();
                    for (mode, v) in table[qp].iter().enumerate() {
                        out[off + mode] += w * fv[c] * *v;
                    }
                }
            }
        }
        out
    }
}

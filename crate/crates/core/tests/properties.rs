use approx::assert_relative_eq;
use dgstokes::basis::{gauss_rule, legendre_eval};
use dgstokes::krylov::{cg, chebyshev, fgmres, gcr, ChebyshevBounds, IdentityPreconditioner, PointJacobi};
use dgstokes::mesh::Side;
use dgstokes::stokes::project_out;
use dgstokes::{BoundarySpec, Csr, Mesh, SolverSettings};
use proptest::prelude::*;

/// Diagonally dominant matrix with the given off-diagonal pattern; symmetric if `sym`.
fn dominant(n: usize, entries: &[(usize, usize, f64)], sym: bool) -> Csr {
    let mut t = Vec::new();
    let mut rowsum = vec![0.0; n];
    for &(i, j, v) in entries {
        let (i, j) = (i % n, j % n);
        if i == j {
            continue;
        }
        t.push((i, j, v));
        rowsum[i] += v.abs();
        if sym {
            t.push((j, i, v));
            rowsum[j] += v.abs();
        } else {
            rowsum[j] += v.abs();
        }
    }
    for (i, s) in rowsum.iter().enumerate() {
        t.push((i, i, 1.0 + 1.5 * s + i as f64 * 0.1));
    }
    Csr::from_triplets(n, n, &t)
}

fn residual(a: &Csr, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    r / b.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn entries() -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    prop::collection::vec((0usize..40, 0usize..40, -1.0f64..1.0), 0..120)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transpose_is_an_involution(n in 1usize..30, e in entries()) {
        let a = dominant(n, &e, false);
        prop_assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn matvec_matches_dense(n in 1usize..25, e in entries(), x in prop::collection::vec(-1.0f64..1.0, 25)) {
        let a = dominant(n, &e, false);
        let y = a.mul_vec(&x[..n]);
        for i in 0..n {
            let d: f64 = (0..n).map(|j| a.get(i, j) * x[j]).sum();
            assert_relative_eq!(y[i], d, epsilon = 1e-12);
        }
    }

    #[test]
    fn cg_reaches_tolerance(n in 2usize..40, e in entries(), b in prop::collection::vec(-1.0f64..1.0, 40)) {
        prop_assume!(b[..n].iter().any(|v| v.abs() > 1e-3));
        let a = dominant(n, &e, true);
        let s = SolverSettings::new(1e-10, 200).unwrap();
        let (x, rep) = cg(&a, &PointJacobi::new(&a).unwrap(), &b[..n], &s).unwrap();
        prop_assert!(rep.converged);
        prop_assert!(residual(&a, &x, &b[..n]) <= 1e-10 * 1.0001);
    }

    #[test]
    fn fgmres_and_gcr_agree(n in 2usize..30, e in entries(), b in prop::collection::vec(-1.0f64..1.0, 30)) {
        prop_assume!(b[..n].iter().any(|v| v.abs() > 1e-3));
        let a = dominant(n, &e, false);
        let s = SolverSettings::new(1e-10, 100).unwrap();
        let (x1, r1) = fgmres(&a, &IdentityPreconditioner, &b[..n], &s).unwrap();
        let (x2, r2) = gcr(&a, &IdentityPreconditioner, &b[..n], &s).unwrap();
        prop_assert!(r1.converged && r2.converged);
        prop_assert!(r1.iterations.abs_diff(r2.iterations) <= 1);
        for (p, q) in x1.iter().zip(&x2) {
            assert_relative_eq!(p, q, epsilon = 1e-7, max_relative = 1e-7);
        }
    }

    #[test]
    fn chebyshev_is_linear(n in 2usize..30, e in entries(),
                           b1 in prop::collection::vec(-1.0f64..1.0, 30), b2 in prop::collection::vec(-1.0f64..1.0, 30),
                           m in 1usize..6) {
        let a = dominant(n, &e, true);
        let jac = PointJacobi::new(&a).unwrap();
        let bounds = ChebyshevBounds::from_lambda_max(2.0).unwrap();
        let run = |b: &[f64]| {
            let mut x = vec![0.0; n];
            chebyshev(&a, &jac, b, &mut x, &bounds, m);
            x
        };
        let sum: Vec<f64> = b1[..n].iter().zip(&b2[..n]).map(|(p, q)| p + q).collect();
        let (x1, x2, xs) = (run(&b1[..n]), run(&b2[..n]), run(&sum));
        for i in 0..n {
            assert_relative_eq!(xs[i], x1[i] + x2[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_removes_component(x in prop::collection::vec(-10.0f64..10.0, 1..50), w in 0.1f64..3.0) {
        let c = vec![w; x.len()];
        let mut y = x.clone();
        project_out(&mut y, &c);
        let d: f64 = y.iter().zip(&c).map(|(a, b)| a * b).sum();
        prop_assert!(d.abs() <= 1e-12 * (1.0 + x.iter().map(|v| v.abs()).sum::<f64>()));
        let mut z = y.clone();
        project_out(&mut z, &c);
        for (a, b) in y.iter().zip(&z) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn legendre_orthonormal_for_any_order(k in 0usize..8) {
        let q = gauss_rule::<f64>(k + 2);
        for i in 0..=k {
            for j in 0..=k {
                let s: f64 = q.points.iter().zip(&q.weights).map(|(&x, &w)| {
                    let (v, _) = legendre_eval(k, x);
                    w * v[i] * v[j]
                }).sum();
                assert_relative_eq!(s, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mesh_neighbours_are_mutual(nx in 1usize..12, ny in 1usize..12) {
        let mesh = Mesh::new(nx, ny, dgstokes::Rect::unit(), BoundarySpec::all_navier()).unwrap();
        for e in 0..mesh.n_elements() {
            let (i, j) = mesh.element_ij(e);
            prop_assert_eq!(mesh.element_index(i, j), e);
            for side in Side::ALL {
                if let Some(n) = mesh.neighbor(e, side) {
                    prop_assert_eq!(mesh.neighbor(n, side.opposite()), Some(e));
                }
            }
        }
        prop_assert_eq!(mesh.faces().len(), mesh.interior_faces().len() + mesh.boundary_faces().len());
        prop_assert_eq!(mesh.interior_faces().len(), (nx - 1) * ny + nx * (ny - 1));
    }
}

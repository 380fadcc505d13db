//! Independent quadrature and dense-eigenvalue oracles for the assembled operators.

use std::sync::Arc;

use dgstokes::assembly::{
    assemble_a, assemble_b, assemble_block_jacobi, assemble_diagonal_blocks, assemble_jump_matrix,
    assemble_norm_matrices, assemble_rhs, assemble_sstar, penalty,
};
use dgstokes::basis::{gauss_rule, legendre_eval, DGSpace};
use dgstokes::diagnostics::{condition_probe, infsup_constant, min_eigenvalue, schur_surrogate_spectrum};
use dgstokes::mesh::{BoundaryKind, BoundarySpec, CartesianMesh, FaceKind, Side};
use dgstokes::{CsrMatrix, SipConfig, ViscosityField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mesh(n: usize, bc: BoundarySpec) -> Arc<CartesianMesh<f64>> {
    Arc::new(CartesianMesh::unit_square(n, bc).unwrap())
}

fn jump_visc(n: usize, delta: f64) -> ViscosityField<f64> {
    let m = CartesianMesh::<f64>::unit_square(n, BoundarySpec::all_navier()).unwrap();
    ViscosityField::new((0..m.n_elements()).map(|e| if m.element_center(e)[0] < 0.5 { delta } else { 1.0 }).collect())
        .unwrap()
}

/// Values and physical gradients of the order-`k` modes at a point of element `e`.
fn modes_at(space: &DGSpace<f64>, e: usize, x: f64, y: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    let m = space.mesh();
    let r = m.element_rect(e);
    let (xi, eta) = ((x - r.x0) / m.hx, (y - r.y0) / m.hy);
    let k = space.order();
    let (lx, dx) = legendre_eval::<f64>(k, xi);
    let (ly, dy) = legendre_eval::<f64>(k, eta);
    let mut v = Vec::new();
    let mut g = Vec::new();
    for a in 0..=k {
        for b in 0..=k {
            v.push(lx[a] * ly[b]);
            g.push([dx[a] * ly[b] / m.hx, lx[a] * dy[b] / m.hy]);
        }
    }
    (v, g)
}

/// Velocity value and gradient `g[c][d] = d u_c / d x_d` of a coefficient vector in element `e`.
fn velocity_at(space: &DGSpace<f64>, u: &[f64], e: usize, x: f64, y: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let (v, g) = modes_at(space, e, x, y);
    let nm = space.modes();
    let base = e * space.dofs_per_element();
    let mut val = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for c in 0..2 {
        for m in 0..nm {
            let coef = u[base + c * nm + m];
            val[c] += coef * v[m];
            grad[c][0] += coef * g[m][0];
            grad[c][1] += coef * g[m][1];
        }
    }
    (val, grad)
}

fn pressure_at(space: &DGSpace<f64>, q: &[f64], e: usize, x: f64, y: f64) -> f64 {
    let (v, _) = modes_at(space, e, x, y);
    let base = e * space.dofs_per_element();
    v.iter().enumerate().map(|(m, vm)| q[base + m] * vm).sum()
}

/// Quadrature points along the side of element `e` in physical coordinates, with weights.
fn face_points(mesh: &CartesianMesh<f64>, e: usize, side: Side, q: usize) -> Vec<(f64, f64, f64)> {
    let r = mesh.element_rect(e);
    let rule = gauss_rule::<f64>(q);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &w)| match side {
            Side::Left => (r.x0, r.y0 + s * mesh.hy, w * mesh.hy),
            Side::Right => (r.x1, r.y0 + s * mesh.hy, w * mesh.hy),
            Side::Bottom => (r.x0 + s * mesh.hx, r.y0, w * mesh.hx),
            Side::Top => (r.x0 + s * mesh.hx, r.y1, w * mesh.hx),
        })
        .collect()
}

fn side_normal(side: Side) -> [f64; 2] {
    let n = side.normal();
    [n[0] as f64, n[1] as f64]
}

#[test]
fn coercivity_with_default_penalty_and_loss_at_five_percent() {
    let m = mesh(2, BoundarySpec::all_navier());
    let space = DGSpace::velocity(m.clone(), 1);
    let visc = ViscosityField::uniform(4, 1.0);
    let a = assemble_a(&space, &visc, &SipConfig::default()).unwrap();
    assert!(min_eigenvalue(&a) > 0.0);
    let a = assemble_a(&space, &visc, &SipConfig::with_safety(0.05)).unwrap();
    assert!(min_eigenvalue(&a) <= 0.0);
}

#[test]
fn coercivity_across_orders_and_contrast() {
    for k in 1..=3 {
        for delta in [1.0, 1e6] {
            let space = DGSpace::velocity(mesh(4, BoundarySpec::all_navier()), k);
            let a = assemble_a(&space, &jump_visc(4, delta), &SipConfig::default()).unwrap();
            assert!(min_eigenvalue(&a) > 0.0, "k={k} delta={delta}");
            assert!(a.symmetry_error() < 1e-12 * a.max_abs());
        }
    }
}

#[test]
fn b_matches_quadrature_of_divergence_form() {
    for (k, bc) in [(1, BoundarySpec::all_navier()), (2, BoundarySpec::neumann_top()), (3, BoundarySpec::all_navier())] {
        let m = mesh(3, bc);
        let su = DGSpace::velocity(m.clone(), k);
        let sp = DGSpace::pressure(m.clone(), k);
        let b = assemble_b(&su, &sp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        for _ in 0..10 {
            let u: Vec<f64> = (0..su.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q: Vec<f64> = (0..sp.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bq = b.mul_vec(&q);
            let matrix: f64 = u.iter().zip(&bq).map(|(x, y)| x * y).sum();

            let nq = k + 2;
            let rule = gauss_rule::<f64>(nq);
            let mut quad = 0.0;
            for e in 0..m.n_elements() {
                let r = m.element_rect(e);
                for (&sx, &wx) in rule.points.iter().zip(&rule.weights) {
                    for (&sy, &wy) in rule.points.iter().zip(&rule.weights) {
                        let (x, y) = (r.x0 + sx * m.hx, r.y0 + sy * m.hy);
                        let (_, g) = velocity_at(&su, &u, e, x, y);
                        quad -= wx * wy * m.element_area() * (g[0][0] + g[1][1]) * pressure_at(&sp, &q, e, x, y);
                    }
                }
            }
            for f in m.faces() {
                let n = f.normal::<f64>();
                match f.kind {
                    FaceKind::Neumann => {}
                    FaceKind::Navier => {
                        for (x, y, w) in face_points(&m, f.plus, f.plus_side, nq) {
                            let (uv, _) = velocity_at(&su, &u, f.plus, x, y);
                            quad += w * pressure_at(&sp, &q, f.plus, x, y) * (uv[0] * n[0] + uv[1] * n[1]);
                        }
                    }
                    FaceKind::Interior => {
                        let mi = f.minus.unwrap();
                        for (x, y, w) in face_points(&m, f.plus, f.plus_side, nq) {
                            let (up, _) = velocity_at(&su, &u, f.plus, x, y);
                            let (um, _) = velocity_at(&su, &u, mi, x, y);
                            let mean = 0.5 * (pressure_at(&sp, &q, f.plus, x, y) + pressure_at(&sp, &q, mi, x, y));
                            let jump = (up[0] - um[0]) * n[0] + (up[1] - um[1]) * n[1];
                            quad += w * mean * jump;
                        }
                    }
                }
            }
            assert!((matrix - quad).abs() <= 1e-12 * quad.abs().max(1.0), "k={k}: {matrix} vs {quad}");
        }
    }
}

/// Element-local smoother form assembled from scratch: the mean of the flux on interior faces
/// sees only this element, so its consistency terms carry half the weight of the full form.
fn smoother_block_oracle(space: &DGSpace<f64>, visc: &ViscosityField<f64>, e: usize) -> Vec<f64> {
    let m = space.mesh();
    let k = space.order();
    let nm = space.modes();
    let nu = 2 * nm;
    let eta = visc.get(e);
    let nq = k + 2;
    let rule = gauss_rule::<f64>(nq);
    let mut blk = vec![0.0; nu * nu];
    // basis function (c, i) is phi_i e_c; strain eps(phi e_c)_{ab} = (delta_ac d_b phi + delta_bc d_a phi)/2
    let strain = |g: &[f64; 2], c: usize| {
        let mut s = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                if a == c {
                    s[a][b] += 0.5 * g[b];
                }
                if b == c {
                    s[a][b] += 0.5 * g[a];
                }
            }
        }
        s
    };
    let r = m.element_rect(e);
    for (&sx, &wx) in rule.points.iter().zip(&rule.weights) {
        for (&sy, &wy) in rule.points.iter().zip(&rule.weights) {
            let (x, y) = (r.x0 + sx * m.hx, r.y0 + sy * m.hy);
            let (_, g) = modes_at(space, e, x, y);
            let w = wx * wy * m.element_area();
            for d in 0..2 {
                for j in 0..nm {
                    let sv = strain(&g[j], d);
                    for c in 0..2 {
                        for i in 0..nm {
                            let su = strain(&g[i], c);
                            let mut contr = 0.0;
                            for a in 0..2 {
                                for b in 0..2 {
                                    contr += su[a][b] * sv[a][b];
                                }
                            }
                            blk[(d * nm + j) * nu + c * nm + i] += w * 2.0 * eta * contr;
                        }
                    }
                }
            }
        }
    }
    let cfg = SipConfig::default();
    for side in Side::ALL {
        let face = m
            .faces()
            .iter()
            .find(|f| (f.plus == e && f.plus_side == side) || (f.minus == Some(e) && f.plus_side == side.opposite()))
            .unwrap();
        let n = side_normal(side);
        let (weight, navier) = match face.kind {
            FaceKind::Neumann => continue,
            FaceKind::Interior => (0.5, false),
            FaceKind::Navier => (1.0, true),
        };
        let delta = penalty(m, face, k, visc, &cfg).unwrap();
        for (x, y, w) in face_points(m, e, side, nq) {
            let (v, g) = modes_at(space, e, x, y);
            for d in 0..2 {
                for j in 0..nm {
                    let tv = strain(&g[j], d);
                    for c in 0..2 {
                        for i in 0..nm {
                            let tu = strain(&g[i], c);
                            // traction of trial / test functions
                            let su_n = [tu[0][0] * n[0] + tu[0][1] * n[1], tu[1][0] * n[0] + tu[1][1] * n[1]];
                            let sv_n = [tv[0][0] * n[0] + tv[0][1] * n[1], tv[1][0] * n[0] + tv[1][1] * n[1]];
                            let val = if navier {
                                let un = v[i] * n[c];
                                let vn = v[j] * n[d];
                                let nsn_u = su_n[0] * n[0] + su_n[1] * n[1];
                                let nsn_v = sv_n[0] * n[0] + sv_n[1] * n[1];
                                -2.0 * eta * nsn_u * vn - 2.0 * eta * nsn_v * un + delta * un * vn
                            } else {
                                let cons = -2.0 * eta * weight * su_n[d] * v[j] - 2.0 * eta * weight * sv_n[c] * v[i];
                                let pen = if c == d { delta * v[i] * v[j] } else { 0.0 };
                                cons + pen
                            };
                            blk[(d * nm + j) * nu + c * nm + i] += w * val;
                        }
                    }
                }
            }
        }
    }
    blk
}

#[test]
fn block_jacobi_matches_independent_smoother_form() {
    for (k, bc) in [(1, BoundarySpec::all_navier()), (2, BoundarySpec::neumann_top()), (3, BoundarySpec::all_navier())] {
        let m = mesh(4, bc);
        let space = DGSpace::velocity(m.clone(), k);
        let visc = ViscosityField::new((0..16).map(|e| 1.0 + 10.0 * (e % 3) as f64).collect()).unwrap();
        let blocks = assemble_diagonal_blocks(&space, &visc, &SipConfig::default()).unwrap();
        let scale = blocks.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for (e, blk) in blocks.iter().enumerate() {
            let oracle = smoother_block_oracle(&space, &visc, e);
            for (x, y) in blk.iter().zip(&oracle) {
                assert!((x - y).abs() < 1e-12 * scale, "k={k} e={e}: {x} vs {y}");
            }
        }
        // each block is SPD (Cholesky succeeds) and the factorised blocks reproduce A's
        let bj = assemble_block_jacobi(&space, &visc, &SipConfig::default()).unwrap();
        let a = assemble_a(&space, &visc, &SipConfig::default()).unwrap();
        let nb = space.dofs_per_element();
        for e in 0..16 {
            let direct = a.dense_block(e * nb, nb);
            for (x, y) in bj.block(e).iter().zip(&direct) {
                assert!((x - y).abs() < 1e-10 * scale);
            }
        }
    }
}

#[test]
fn rhs_matches_quadrature_oracle_for_polynomial_forcing() {
    let k = 2;
    let m = mesh(3, BoundarySpec::all_navier());
    let space = DGSpace::velocity(m.clone(), k);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c: Vec<f64> = (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let poly = move |x: f64, y: f64, off: usize| {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += c[off + 3 * a + b] * x.powi(a as i32) * y.powi(b as i32);
            }
        }
        s
    };
    let p2 = poly.clone();
    let f = assemble_rhs(&space, move |x, y| [poly(x, y, 0), p2(x, y, 9)]);
    // exact integrals against each mode with a rule well above the polynomial degree
    let rule = gauss_rule::<f64>(6);
    let nm = space.modes();
    let c2: Vec<f64> = (0..18).map(|_| 0.0).collect();
    let _ = c2;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c: Vec<f64> = (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let polyv = |x: f64, y: f64, off: usize| {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += c[off + 3 * a + b] * x.powi(a as i32) * y.powi(b as i32);
            }
        }
        s
    };
    for e in 0..m.n_elements() {
        let r = m.element_rect(e);
        let mut loc = vec![0.0; 2 * nm];
        for (&sx, &wx) in rule.points.iter().zip(&rule.weights) {
            for (&sy, &wy) in rule.points.iter().zip(&rule.weights) {
                let (x, y) = (r.x0 + sx * m.hx, r.y0 + sy * m.hy);
                let (v, _) = modes_at(&space, e, x, y);
                for comp in 0..2 {
                    let fv = polyv(x, y, 9 * comp);
                    for md in 0..nm {
                        loc[comp * nm + md] += wx * wy * m.element_area() * fv * v[md];
                    }
                }
            }
        }
        for (i, val) in loc.iter().enumerate() {
            assert!((f[e * 2 * nm + i] - val).abs() < 1e-13, "{} vs {}", f[e * 2 * nm + i], val);
        }
    }
}

#[test]
fn smooth_field_has_no_jumps_and_seminorm_matches() {
    let k = 2;
    let m = mesh(4, BoundarySpec::uniform(BoundaryKind::Neumann));
    let su = DGSpace::velocity(m.clone(), k);
    let sp = DGSpace::pressure(m.clone(), k);
    let u = su.project(|x, y| vec![x + y, x * y], k + 3);
    let jm = assemble_jump_matrix(&su);
    let ju: f64 = u.iter().zip(jm.mul_vec(&u)).map(|(a, b)| a * b).sum();
    assert!(ju.abs() < 1e-10, "{ju}");
    let (h, _) = assemble_norm_matrices(&su, &sp);
    let hu: f64 = u.iter().zip(h.mul_vec(&u)).map(|(a, b)| a * b).sum();
    assert!((hu - 8.0 / 3.0).abs() < 1e-10, "{hu}");
}

#[test]
fn sstar_and_schur_spectrum() {
    for k in [1, 2] {
        for delta in [1.0, 1e6] {
            let m = mesh(8, BoundarySpec::all_navier());
            let su = DGSpace::velocity(m.clone(), k);
            let sp = DGSpace::pressure(m.clone(), k);
            let visc = jump_visc(8, delta);
            let a = assemble_a(&su, &visc, &SipConfig::default()).unwrap();
            let b = assemble_b(&su, &sp).unwrap();
            let s = assemble_sstar(&sp, &visc).unwrap();
            let ev = schur_surrogate_spectrum(&a, &b, &s, Some(&sp.constant_vector(0))).unwrap();
            let (lo, hi) = (ev[0], ev[ev.len() - 1]);
            eprintln!("k={k} delta={delta:e}: spectrum [{lo:.4e}, {hi:.6}]");
            assert!(lo > 0.0);
        }
    }
}

#[test]
fn infsup_constant_trends() {
    let beta = |n: usize, k: usize| {
        let m = mesh(n, BoundarySpec::all_navier());
        let su = DGSpace::velocity(m.clone(), k);
        let sp = DGSpace::pressure(m.clone(), k);
        let (h, _) = assemble_norm_matrices(&su, &sp);
        let b = assemble_b(&su, &sp).unwrap();
        let mass = CsrMatrix::from_diagonal(&vec![m.element_area(); sp.n_dofs()]);
        infsup_constant(&h, &b, &mass, Some(&sp.constant_vector(0))).unwrap()
    };
    let b4 = beta(4, 1);
    let b8 = beta(8, 1);
    let b8k2 = beta(8, 2);
    eprintln!("beta: 4x4 k1 {b4:.4}, 8x8 k1 {b8:.4}, 8x8 k2 {b8k2:.4}");
    assert!(b4 > 0.0);
    assert!((0.8..=1.25).contains(&(b8 / b4)));
    // c/k is a lower bound; the measured constant hardly depends on k at these orders
    assert!(b8k2 * 2.0 / b8 >= 0.6);
}

#[test]
fn infsup_requires_restrained_rigid_motions() {
    let m = mesh(2, BoundarySpec::uniform(BoundaryKind::Neumann));
    let su = DGSpace::velocity(m.clone(), 1);
    let sp = DGSpace::pressure(m.clone(), 1);
    let (h, l0) = assemble_norm_matrices(&su, &sp);
    let b = assemble_b(&su, &sp).unwrap();
    assert!(infsup_constant(&h, &b, &l0, None).is_err());
}

#[test]
fn condition_probe_trends() {
    let m = mesh(4, BoundarySpec::all_navier());
    let space = DGSpace::velocity(m.clone(), 2);
    let visc = ViscosityField::uniform(16, 1.0);
    let k1 = condition_probe(&assemble_a(&space, &visc, &SipConfig::default()).unwrap(), 18).unwrap();
    let k100 = condition_probe(&assemble_a(&space, &visc, &SipConfig::with_safety(100.0)).unwrap(), 18).unwrap();
    assert!(k1 >= 1.0 && k100 > k1, "{k1} {k100}");
    let jump = jump_visc(4, 1e6);
    let kj = condition_probe(&assemble_a(&space, &jump, &SipConfig::default()).unwrap(), 18).unwrap();
    assert!(kj.is_finite() && kj >= 1.0);
    assert!(assemble_block_jacobi(&space, &jump, &SipConfig::default()).is_ok());
}

#[test]
fn viscosity_scaling_scales_every_piece() {
    let m = mesh(4, BoundarySpec::neumann_top());
    let su = DGSpace::velocity(m.clone(), 2);
    let sp = DGSpace::pressure(m.clone(), 2);
    let visc = jump_visc(4, 1e3);
    let c = 7.0;
    let s1 = assemble_sstar(&sp, &visc).unwrap();
    let s2 = assemble_sstar(&sp, &visc.scaled(c)).unwrap();
    assert!(s1.iter().zip(&s2).all(|(a, b)| (a / c - b).abs() < 1e-15 * a.abs()));
    for f in m.interior_faces().iter().chain(m.boundary_faces().iter().filter(|f| f.kind == FaceKind::Navier)) {
        let d1 = penalty(&m, f, 2, &visc, &SipConfig::default()).unwrap();
        let d2 = penalty(&m, f, 2, &visc.scaled(c), &SipConfig::default()).unwrap();
        assert!((d1 * c - d2).abs() < 1e-12 * d2);
    }
    let _ = su;
}

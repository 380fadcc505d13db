use approx::assert_relative_eq;
use dgstokes::problems::{
    by_name, checkerboard, measure_errors, mms_smooth, observed_order, pairwise_orders, sinkers, solcx, Projection,
    Reference,
};
use dgstokes::{BoundaryKind, Mesh, SipConfig, System};

#[test]
fn solcx_viscosity_sides() {
    let s = solcx(1e6, 0.5).unwrap();
    assert_eq!(s.viscosity(0.25, 0.3), 1e6);
    assert_eq!(s.viscosity(0.75, 0.3), 1.0);
    let iso = solcx(1.0, 0.5).unwrap();
    assert_eq!(iso.viscosity(0.1, 0.9), iso.viscosity(0.9, 0.1));
    assert!(solcx(-1.0, 0.5).is_err());
}

#[test]
fn even_grid_projection_is_center_value() {
    let s = solcx(1e6, 0.5).unwrap();
    for n in [8, 16] {
        let mesh = Mesh::unit_square(n, s.bc).unwrap();
        let v = s.element_viscosity(&mesh).unwrap();
        for e in 0..mesh.n_elements() {
            let c = mesh.element_center(e);
            assert_eq!(v.values()[e], s.viscosity(c[0], c[1]));
        }
    }
}

#[test]
fn odd_grid_l2_mean_splits_straddling_column() {
    let s = solcx(1e6, 0.5).unwrap().with_projection(Projection::L2Mean);
    let mesh = Mesh::unit_square(9, s.bc).unwrap();
    let v = s.element_viscosity(&mesh).unwrap();
    // the middle column is cut in half by the jump
    let e = mesh.element_index(4, 2);
    assert_relative_eq!(v.values()[e], 0.5 * (1e6 + 1.0), max_relative = 1e-12);
}

#[test]
fn checkerboard_quadrants() {
    let s = checkerboard(1e3).unwrap();
    assert_eq!(s.viscosity(0.25, 0.25), 1e3);
    assert_eq!(s.viscosity(0.75, 0.75), 1e3);
    assert_eq!(s.viscosity(0.25, 0.75), 1.0);
    assert_eq!(s.viscosity(0.75, 0.25), 1.0);
    let iso = checkerboard(1.0).unwrap();
    let sc = solcx(1.0, 0.5).unwrap();
    assert_eq!(iso.forcing(0.3, 0.6), sc.forcing(0.3, 0.6));
}

#[test]
fn sinker_point_values() {
    let s = sinkers(1e6).unwrap();
    assert_eq!(s.viscosity(0.84, 0.39), 1e6);
    assert_eq!(s.density(0.84, 0.39), Some(1.2));
    assert_eq!(s.viscosity(0.05, 0.05), 1.0);
    assert_eq!(s.density(0.05, 0.05), Some(1.0));
    let f = s.forcing(0.84, 0.39);
    assert_relative_eq!(f[1], -12.0, max_relative = 1e-14);
    assert_eq!(f[0], 0.0);
    assert_eq!(s.bc.side(dgstokes::mesh::Side::Top), BoundaryKind::Neumann);
}

#[test]
fn straddling_element_takes_max_viscosity_and_min_density() {
    let s = sinkers(1e3).unwrap();
    let mesh = Mesh::unit_square(16, s.bc).unwrap();
    // cell [0.875, 0.9375] x [0.375, 0.4375] is cut by the circle around (0.84, 0.39)
    let e = mesh.element_index(14, 6);
    let r = mesh.element_rect(e);
    assert!(r.x0 < 0.929 && 0.929 < r.x0 + r.width());
    assert_eq!(s.element_viscosity(&mesh).unwrap().values()[e], 1e3);
    assert_eq!(s.element_density(&mesh).unwrap()[e], 1.0);
    // an element fully inside keeps the inclusion density
    let inside = mesh.element_index(13, 6);
    assert_eq!(s.element_density(&mesh).unwrap()[inside], 1.2);
}

#[test]
fn mms_velocity_is_divergence_free() {
    let s = mms_smooth();
    let h = 1e-5;
    for &(x, y) in &[(0.1, 0.2), (0.37, 0.81), (0.66, 0.45), (0.9, 0.93)] {
        let ux = |x: f64, y: f64| s.exact_velocity(x, y).unwrap();
        let div = (ux(x + h, y)[0] - ux(x - h, y)[0] + ux(x, y + h)[1] - ux(x, y - h)[1]) / (2.0 * h);
        assert!(div.abs() < 1e-8, "div u = {div} at ({x}, {y})");
    }
}

#[test]
fn mms_forcing_matches_finite_differences() {
    let s = mms_smooth();
    let h = 1e-4;
    let u = |x: f64, y: f64| s.exact_velocity(x, y).unwrap();
    // 2 eta eps(u), row by row
    let tau = |x: f64, y: f64, i: usize, j: usize| {
        let du = |c: usize, d: usize| {
            let (ex, ey) = if d == 0 { (h, 0.0) } else { (0.0, h) };
            (u(x + ex, y + ey)[c] - u(x - ex, y - ey)[c]) / (2.0 * h)
        };
        s.viscosity(x, y) * (du(i, j) + du(j, i))
    };
    // points away from the viscosity interface
    for &(x, y) in &[(0.2, 0.3), (0.31, 0.77), (0.7, 0.4), (0.85, 0.15)] {
        let p = |x: f64, y: f64| s.exact_pressure(x, y).unwrap();
        let f = s.forcing(x, y);
        for i in 0..2 {
            let dtx = (tau(x + h, y, i, 0) - tau(x - h, y, i, 0)) / (2.0 * h);
            let dty = (tau(x, y + h, i, 1) - tau(x, y - h, i, 1)) / (2.0 * h);
            let dp = if i == 0 { (p(x + h, y) - p(x - h, y)) / (2.0 * h) } else { (p(x, y + h) - p(x, y - h)) / (2.0 * h) };
            let fd = -(dtx + dty) + dp;
            assert_relative_eq!(f[i], fd, epsilon = 1e-5, max_relative = 1e-5);
        }
    }
}

#[test]
fn zero_solution_error_is_solution_norm() {
    let s = mms_smooth();
    let sys: System = s.build_system(8, 8, 2, &SipConfig::default()).unwrap();
    let e = measure_errors(&s, &sys.space_u, &sys.space_p, &vec![0.0; sys.n_u()], &vec![0.0; sys.n_p()], &Reference::Exact)
        .unwrap();
    assert_relative_eq!(e.l2_u, 0.5f64.sqrt(), max_relative = 1e-10);
    assert_relative_eq!(e.l2_p, 0.5, max_relative = 1e-10);
}

#[test]
fn fine_grid_reference_of_itself_is_zero_error() {
    let s = solcx(1e3, 0.5).unwrap();
    let sys: System = s.build_system(4, 4, 1, &SipConfig::default()).unwrap();
    let u: Vec<f64> = (0..sys.n_u()).map(|i| (i as f64 * 0.3).sin()).collect();
    let p: Vec<f64> = (0..sys.n_p()).map(|i| (i as f64 * 0.7).cos()).collect();
    let reference = Reference::FineGrid { space_u: &sys.space_u, space_p: &sys.space_p, u: &u, p: &p };
    let e = measure_errors(&s, &sys.space_u, &sys.space_p, &u, &p, &reference).unwrap();
    assert!(e.l2_u < 1e-13 && e.l2_p < 1e-13 && e.norm1h_u < 1e-12);
}

#[test]
fn orders_from_synthetic_errors() {
    let h = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let err: Vec<f64> = h.iter().map(|h| 3.0 * h * h * h).collect();
    assert_relative_eq!(observed_order(&h, &err), 3.0, max_relative = 1e-12);
    for o in pairwise_orders(&h, &err) {
        assert_relative_eq!(o, 3.0, max_relative = 1e-12);
    }
}

#[test]
fn lookup_by_name() {
    assert!(by_name("solcx", 1e6).is_ok());
    assert!(by_name("checkerboard", 1e3).is_ok());
    assert!(by_name("sinkers", 1e6).is_ok());
    assert!(by_name("mms_smooth", 1.0).is_ok());
    assert!(by_name("zhong", 1.0).is_err());
    let s = sinkers(1e6).unwrap();
    assert!(!s.has_exact_solution());
    assert!(mms_smooth().has_exact_solution());
    assert!(s.echo().contains("sinkers"));
}

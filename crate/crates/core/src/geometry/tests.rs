use super::*;
use crate::linalg::symmetric_eigenvalues;

fn assert_vec_close(a: &Vec3, b: &Vec3, tol: f64) {
    assert!((a - b).norm() <= tol, "{a:?} vs {b:?}");
}

fn random_points(seed: u64, n: usize) -> Vec<Vec3> {
    // xorshift keeps these tests free of extra dependencies
    let mut s = seed;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..n)
        .map(|_| {
            let z = 2.0 * next() - 1.0;
            let t = 2.0 * std::f64::consts::PI * next();
            let r = (1.0 - z * z).sqrt();
            Vec3::new(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

fn surface_points(surface: &LevelSetSurface, seed: u64, n: usize) -> Vec<Vec3> {
    // exact surface points from the mesh constructions, sampled pseudo-randomly
    let mesh = match surface.kind() {
        SurfaceKind::Dziuk => crate::mesh::dziuk_mesh(3),
        _ => crate::mesh::star_shaped_mesh(surface, 3).unwrap(),
    };
    let picks = random_points(seed, n);
    picks
        .iter()
        .map(|p| {
            let k = ((p[0] + 1.0) * 0.5 * mesh.n_vertices() as f64) as usize;
            mesh.vertices()[k.min(mesh.n_vertices() - 1)]
        })
        .collect()
}

#[test]
fn sphere_projection_examples() {
    let s = LevelSetSurface::sphere();
    let (xi, d) = s.closest_point(&Vec3::new(2.0, 0.0, 0.0)).unwrap();
    assert_vec_close(&xi, &Vec3::new(1.0, 0.0, 0.0), 1e-12);
    assert!((d - 1.0).abs() < 1e-12);
    let (xi, d) = s.closest_point(&Vec3::new(0.5, 0.0, 0.0)).unwrap();
    assert_vec_close(&xi, &Vec3::new(1.0, 0.0, 0.0), 1e-12);
    assert!((d + 0.5).abs() < 1e-12);
}

#[test]
fn sphere_projection_is_radial() {
    let s = LevelSetSurface::sphere();
    for p in random_points(7, 50) {
        let x = p * 1.07;
        let (xi, d) = s.closest_point(&x).unwrap();
        assert_vec_close(&xi, &p, 1e-10);
        assert!((d - 0.07).abs() < 1e-10);
    }
}

#[test]
fn projection_fixed_point_residual() {
    for surface in [LevelSetSurface::sphere(), LevelSetSurface::dziuk(), LevelSetSurface::enzensberger_stern()] {
        let r = surface.bounding_radius();
        for p in surface_points(&surface, 11, 40) {
            let nu = surface.normal(&p).unwrap();
            for offset in [-0.02, 0.003, 0.02] {
                let x = p + nu * offset;
                let (xi, d) = surface.closest_point(&x).unwrap();
                let nu_xi = surface.normal(&xi).unwrap();
                assert!((x - xi - nu_xi * d).norm() <= 1e-10 * r);
                let g = surface.grad_phi(&xi);
                assert!(surface.phi(&xi).abs() / g.norm() <= 1e-12 * r);
                if d.abs() > 1e-8 {
                    let sin = (x - xi).normalize().cross(&nu_xi).norm();
                    assert!(sin * d.abs() <= 1e-11 * r, "angle {sin}");
                    assert_eq!(d.signum(), surface.phi(&x).signum());
                }
            }
        }
    }
}

/// Brute-force nearest point on the Dziuk surface through its parametrisation
/// `(a, b, c) ↦ (a + c², b, c)` of the unit sphere, refined by shrinking grid searches.
fn dziuk_nearest_brute_force(x: &Vec3) -> Vec3 {
    let param = |theta: f64, phi: f64| {
        let (a, b, c) = (theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        Vec3::new(a + c * c, b, c)
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let n = 400;
    for i in 0..=n {
        for j in 0..2 * n {
            let theta = std::f64::consts::PI * i as f64 / n as f64;
            let phi = std::f64::consts::PI * j as f64 / n as f64;
            let dist = (param(theta, phi) - x).norm();
            if dist < best.0 {
                best = (dist, theta, phi);
            }
        }
    }
    let mut window = 2.0 * std::f64::consts::PI / n as f64;
    for _ in 0..12 {
        let (_, t0, p0) = best;
        for i in -20..=20 {
            for j in -20..=20 {
                let theta = t0 + window * i as f64 / 20.0;
                let phi = p0 + window * j as f64 / 20.0;
                let dist = (param(theta, phi) - x).norm();
                if dist < best.0 {
                    best = (dist, theta, phi);
                }
            }
        }
        window /= 4.0;
    }
    param(best.1, best.2)
}

#[test]
fn dziuk_projection_matches_brute_force() {
    let surface = LevelSetSurface::dziuk();
    let mesh = crate::mesh::dziuk_mesh(1);
    for t in (0..mesh.n_triangles()).step_by(7) {
        let x = mesh.barycenter(t);
        let (xi, d) = surface.closest_point(&x).unwrap();
        let brute = dziuk_nearest_brute_force(&x);
        assert!(surface.phi(&xi).abs() < 1e-12);
        assert!(((x - brute).norm() - d.abs()).abs() < 1e-9, "distance mismatch at triangle {t}");
        assert_vec_close(&xi, &brute, 1e-5);
    }
}

#[test]
fn sphere_shape_operator() {
    let s = LevelSetSurface::sphere();
    let shape = s.shape_operator(&Vec3::new(0.0, 0.0, 1.0)).unwrap();
    let expected = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0));
    assert!((shape - expected).amax() < 1e-14);
    for p in random_points(3, 30) {
        let shape = s.shape_operator(&p).unwrap();
        assert!((shape.trace() - 2.0).abs() < 1e-10);
        assert!((shape * p).norm() < 1e-12);
    }
}

fn distance(surface: &LevelSetSurface, x: &Vec3) -> f64 {
    surface.closest_point(x).unwrap().1
}

fn fd_distance_hessian(surface: &LevelSetSurface, xi: &Vec3, h: f64) -> Mat3 {
    let mut m = Mat3::zeros();
    let e = |k: usize| {
        let mut v = Vec3::zeros();
        v[k] = h;
        v
    };
    let d0 = distance(surface, xi);
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = if i == j {
                (distance(surface, &(xi + e(i))) - 2.0 * d0 + distance(surface, &(xi - e(i)))) / (h * h)
            } else {
                (distance(surface, &(xi + e(i) + e(j))) - distance(surface, &(xi + e(i) - e(j)))
                    - distance(surface, &(xi - e(i) + e(j)))
                    + distance(surface, &(xi - e(i) - e(j))))
                    / (4.0 * h * h)
            };
        }
    }
    m
}

#[test]
fn shape_operator_matches_distance_hessian() {
    for (surface, seed) in [
        (LevelSetSurface::sphere(), 5),
        (LevelSetSurface::dziuk(), 6),
        (LevelSetSurface::enzensberger_stern(), 8),
    ] {
        for xi in surface_points(&surface, seed, 100) {
            let shape = surface.shape_operator(&xi).unwrap();
            let fd = fd_distance_hessian(&surface, &xi, 1e-4);
            let scale = 1.0 + shape.amax();
            assert!(
                (shape - fd).amax() <= 1e-5 * scale,
                "{:?}: {:e} at {xi:?}",
                surface.kind(),
                (shape - fd).amax()
            );
        }
    }
}

#[test]
fn lift_on_exact_surface_is_identity() {
    for surface in [LevelSetSurface::sphere(), LevelSetSurface::dziuk(), LevelSetSurface::enzensberger_stern()] {
        for xi in surface_points(&surface, 21, 20) {
            let nu = surface.normal(&xi).unwrap();
            let lift = surface.lift_data(&xi, &nu).unwrap();
            assert!((lift.delta_h - 1.0).abs() < 1e-12);
            assert!((lift.a_h - lift.p).amax() < 1e-12);
            assert!(lift.b_h.amax() < 1e-12);
            assert!((lift.f_h - lift.p).amax() < 1e-12);
        }
    }
}

#[test]
fn sphere_area_ratio_matches_radial_jacobian() {
    let s = LevelSetSurface::sphere();
    let mesh = crate::mesh::icosphere(0);
    for t in 0..mesh.n_triangles() {
        let nu_h = mesh.normal(t);
        for bary in [[1.0 / 3.0; 3], [0.6, 0.3, 0.1], [0.1, 0.1, 0.8]] {
            let x = mesh.point(t, &bary);
            let lift = s.lift_data(&x, &nu_h).unwrap();
            let r = x.norm();
            let expected = x.dot(&nu_h) / (r * r * r);
            assert!((lift.delta_h - expected).abs() < 1e-13, "{} vs {expected}", lift.delta_h);
        }
    }
}

#[test]
fn lift_invariants_on_coarse_meshes() {
    let cases = [
        (LevelSetSurface::sphere(), crate::mesh::icosphere(1)),
        (LevelSetSurface::dziuk(), crate::mesh::dziuk_mesh(2)),
    ];
    for (surface, mesh) in cases {
        for t in 0..mesh.n_triangles() {
            let nu_h = mesh.normal(t);
            let x = mesh.barycenter(t);
            let lift = surface.lift_data(&x, &nu_h).unwrap();
            assert!((lift.nu.norm() - 1.0).abs() < 1e-14);
            assert!(lift.nu.dot(&nu_h) > 0.0);
            assert!((lift.a_h * lift.nu).norm() < 1e-12);
            assert!((lift.nu.transpose() * lift.a_h).norm() < 1e-12);
            assert!((lift.a_h - lift.a_h.transpose()).amax() <= 1e-12 * lift.a_h.amax());
            let eig = symmetric_eigenvalues(&lift.a_h);
            assert!(eig[2] >= -1e-12);
            assert!(lift.delta_h > 0.0);
            // gradients: ∇_Γh v = P_h (I - dH) P F_h ∇_Γh v for tangential vectors
            let w = lift.p_h * Vec3::new(0.3, -0.2, 0.9);
            let back = lift.pullback() * (lift.f_h * w);
            assert!((back - w).norm() < 1e-12 * w.norm());
        }
    }
}

#[test]
fn folded_and_flipped_geometry_errors() {
    let s = LevelSetSurface::sphere();
    let x = Vec3::new(0.0, 0.0, -0.5);
    let flipped = s.lift_data(&x, &Vec3::new(0.0, 0.0, 1.0));
    assert!(matches!(flipped, Err(GeometryError::OrientationFlip { .. })));
    // inside the centre of curvature: 1 + dκ = 1 - 1.05 < 0 once the projection falls through
    let proj = Projection {
        x,
        xi: Vec3::new(0.0, 0.0, -1.0),
        d: -1.05,
        nu: Vec3::new(0.0, 0.0, -1.0),
        shape: Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0)),
    };
    assert!(matches!(proj.lift(&Vec3::new(0.0, 0.0, -1.0)), Err(GeometryError::FoldedGeometry { .. })));
    assert!(matches!(
        s.closest_point(&Vec3::zeros()),
        Err(GeometryError::DegenerateGradient { .. })
    ));
}

#[test]
fn edge_lift_on_surface_is_unit() {
    let s = LevelSetSurface::dziuk();
    for xi in surface_points(&s, 4, 20) {
        let nu = s.normal(&xi).unwrap();
        let lift = s.lift_data(&xi, &nu).unwrap();
        let tau = lift.p * Vec3::new(0.4, 0.1, -0.3);
        let tau = tau.normalize();
        let n_h = nu.cross(&tau);
        let e = lift.edge(&tau, &n_h).unwrap();
        assert!((e.delta_e - 1.0).abs() < 1e-12);
        assert!(e.n_inv_lift.dot(&lift.nu).abs() < 1e-10);
        assert!((e.n_inv_lift.norm() - 1.0).abs() < 1e-14);
        assert!(e.n_inv_lift.dot(&n_h) > 0.0);
    }
}

#[test]
fn sphere_edge_ratio_matches_arc_length() {
    let s = LevelSetSurface::sphere();
    let mesh = crate::mesh::icosphere(1);
    let rule = crate::dgspace::gauss_legendre_rule(64);
    for e in (0..mesh.n_edges()).step_by(5) {
        let [a, b] = mesh.edges()[e].vertices;
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        let length = (pb - pa).norm();
        let tau = (pb - pa) / length;
        let (t, _) = mesh.edges()[e].plus;
        let nu_h = mesh.normal(t);
        let n_h = tau.cross(&nu_h);
        let mut mean = 0.0;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x = pa * p[0] + pb * p[1];
            let lift = s.lift_data(&x, &nu_h).unwrap();
            mean += w * lift.edge(&tau, &n_h).unwrap().delta_e;
        }
        let arc = pa.dot(&pb).clamp(-1.0, 1.0).acos();
        assert!((mean - arc / length).abs() < 1e-8, "{mean} vs {}", arc / length);
    }
}

fn product_field() -> ClosureField {
    ClosureField::new(
        |x: &Vec3| x[0] * x[1],
        |x: &Vec3| Vec3::new(x[1], x[0], 0.0),
        |_: &Vec3| Mat3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    )
}

#[test]
fn sphere_forcing_matches_geodesic_differences() {
    let s = LevelSetSurface::sphere();
    let u = product_field();
    let h = 1e-4;
    for p in random_points(9, 25) {
        let f = surface_forcing(&s, &u, &p).unwrap();
        assert!((f - 7.0 * p[0] * p[1]).abs() < 1e-12);
        // Laplace-Beltrami as the sum of second derivatives along two orthogonal geodesics
        let t1 = p.cross(&Vec3::new(0.3, 0.5, 0.7)).normalize();
        let t2 = p.cross(&t1);
        let mut lap = 0.0;
        for t in [t1, t2] {
            let g = |s: f64| p * s.cos() + t * s.sin();
            lap += (u.value(&g(h)) - 2.0 * u.value(&p) + u.value(&g(-h))) / (h * h);
        }
        let fd = -lap + u.value(&p);
        assert!((f - fd).abs() < 1e-6, "{f} vs {fd}");
    }
}

#[test]
fn constant_field_forcing_is_one() {
    let one = ClosureField::new(|_: &Vec3| 1.0, |_: &Vec3| Vec3::zeros(), |_: &Vec3| Mat3::zeros());
    for surface in [LevelSetSurface::sphere(), LevelSetSurface::dziuk(), LevelSetSurface::enzensberger_stern()] {
        for xi in surface_points(&surface, 2, 10) {
            assert!((surface_forcing(&surface, &one, &xi).unwrap() - 1.0).abs() < 1e-14);
        }
    }
}

/// `Δ_Γ u = Δ(u∘ξ)` on the surface for the closest-point extension `u∘ξ`.
pub(crate) fn closest_point_laplacian(surface: &LevelSetSurface, u: &dyn AmbientField, p: &Vec3, h: f64) -> f64 {
    let ext = |x: &Vec3| u.value(&surface.closest_point(x).unwrap().0);
    let mut lap = 0.0;
    for k in 0..3 {
        let mut e = Vec3::zeros();
        e[k] = h;
        lap += (ext(&(p + e)) - 2.0 * u.value(p) + ext(&(p - e))) / (h * h);
    }
    lap
}

#[test]
fn dziuk_forcing_matches_closest_point_differences() {
    let s = LevelSetSurface::dziuk();
    let u = crate::problems::dziuk_exact_solution();
    for p in surface_points(&s, 13, 20) {
        let f = surface_forcing(&s, &u, &p).unwrap();
        let fd = -closest_point_laplacian(&s, &u, &p, 1e-3) + u.value(&p);
        assert!((f - fd).abs() <= 1e-4 * f.abs().max(1.0), "{f} vs {fd} at {p:?}");
    }
}

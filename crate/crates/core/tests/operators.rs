use std::f64::consts::PI;

use hybem::elements::{PyramidBasis, SwgBasis, WireHatBasis};
use hybem::geometry::{generate_ball_tets, generate_sphere_surface, Fiber, Mat3, TriangleSurface, Vec3, WireBundle};
use hybem::operators::*;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

fn sphere_family(radius: f64, level: u32) -> (TriangleSurface, PyramidBasis, Family) {
    let s = generate_sphere_surface(radius, level);
    let b = PyramidBasis::new(&s).unwrap();
    let f = Family::pyramids(&b);
    (s, b, f)
}

fn shifted(s: &TriangleSurface, by: Vec3) -> TriangleSurface {
    let v = s.vertices.iter().map(|p| p + by).collect();
    TriangleSurface::new(v, s.triangles.clone(), 1).unwrap()
}

#[test]
fn single_layer_symmetric_positive_definite() {
    let (_, _, f) = sphere_family(1.0, 1);
    let s = assemble_s(&f, &f, &QuadratureOptions::default()).matrix;
    let asym = (&s - s.transpose()).norm() / s.norm();
    assert!(asym < 1e-12, "asymmetry {asym}");
    let eig = SymmetricEigen::new((&s + s.transpose()) * 0.5);
    assert!(eig.eigenvalues.min() > 0.0);
}

#[test]
fn shell_theorem() {
    let r = 0.5;
    let (_, b, f) = sphere_family(r, 3);
    let ones = vec![1.0; b.len()];
    let pts = [Vec3::zeros(), Vec3::new(0.1, -0.2, 0.15), Vec3::new(0.0, 0.0, 0.4)];
    for u in eval_potential(&ones, &f, &pts, &QuadratureOptions::default()) {
        assert!((u - r).abs() < 0.01 * r, "{u}");
    }
    let outside = eval_potential(&ones, &f, &[Vec3::new(0.0, 0.0, 2.0)], &QuadratureOptions::default());
    let area = b.integrals().iter().sum::<f64>();
    assert!((outside[0] - area / (4.0 * PI * 2.0)).abs() < 1e-6);
}

#[test]
fn constant_density_normal_derivative_is_minus_half() {
    let (_, b, f) = sphere_family(1.0, 2);
    let d = assemble_dstar(&f, &f, &QuadratureOptions::default()).matrix;
    let ones = DVector::from_element(b.len(), 1.0);
    let lhs = &d * &ones;
    let mass = DVector::from_vec(b.integrals());
    let rel = (&lhs + &mass * 0.5).norm() / mass.norm();
    assert!(rel < 0.02, "relative deviation {rel}");
    let spread = lhs.component_div(&mass);
    assert!(spread.max() - spread.min() < 0.02);
}

#[test]
fn jump_of_normal_derivative_off_surface() {
    let (s, b, f) = sphere_family(1.0, 2);
    let coeffs: Vec<f64> = (0..b.len()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0).collect();
    let h = s.mean_edge_length();
    let t = s.triangles[7];
    let c = (s.vertices[t[0]] + s.vertices[t[1]] + s.vertices[t[2]]) / 3.0;
    let n = c.normalize();
    let xi = (coeffs[t[0]] + coeffs[t[1]] + coeffs[t[2]]) / 3.0;
    let eps = h / 100.0;
    let delta = eps / 10.0;
    let opts = QuadratureOptions::default();
    let deriv = |x: Vec3| {
        let v = eval_potential(&coeffs, &f, &[x + n * delta, x - n * delta], &opts);
        (v[0] - v[1]) / (2.0 * delta)
    };
    let outer = deriv(c + n * eps);
    let inner = deriv(c - n * eps);
    let scale = coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((inner - outer - xi).abs() < 0.01 * scale, "{inner} {outer} {xi}");
}

#[test]
fn far_block_decays_with_separation() {
    let (s, _, f) = sphere_family(0.1, 0);
    let opts = QuadratureOptions::default();
    let norm_at = |d: f64| {
        let g = Family::pyramids(&PyramidBasis::new(&shifted(&s, Vec3::new(d, 0.0, 0.0))).unwrap());
        assemble_dstar(&g, &f, &opts).matrix.norm()
    };
    let ratio = norm_at(2.0) / norm_at(4.0);
    assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
}

#[test]
fn far_entries_stable_under_order_increase() {
    let (s, _, f) = sphere_family(0.1, 1);
    let g = Family::pyramids(&PyramidBasis::new(&shifted(&s, Vec3::new(3.0, 0.0, 0.0))).unwrap());
    let a = assemble_s(&g, &f, &QuadratureOptions::with_order(4).unwrap()).matrix;
    let b = assemble_s(&g, &f, &QuadratureOptions::with_order(6).unwrap()).matrix;
    let rel = (&a - &b).amax() / b.amax();
    assert!(rel < 1e-8, "{rel}");
}

fn uniform_flux(basis: &SwgBasis, j: Vec3) -> Vec<f64> {
    basis.dofs.iter().map(|d| j.dot(&d.normal) * d.area).collect()
}

#[test]
fn uniform_ball_current_is_a_dipole_far_away() {
    let r = 0.1;
    let region = generate_ball_tets(r, 0.04, Mat3::identity()).unwrap();
    let basis = SwgBasis::new(&region);
    let charges = Family::swg_charges(&region, &basis);
    let j = Vec3::new(0.3, -0.2, 1.0);
    let coeffs = uniform_flux(&basis, j);
    let p = j * region.volume();
    let x = Vec3::new(0.4, 0.7, 0.6).normalize() * (10.0 * r);
    let u = eval_potential(&coeffs, &charges, &[x], &QuadratureOptions::default())[0];
    let expected = -p.dot(&x) / (4.0 * PI * x.norm().powi(3));
    assert!((u - expected).abs() < 0.01 * expected.abs(), "{u} {expected}");
}

#[test]
fn isotropic_weighted_tests_match_charges() {
    let region = generate_ball_tets(0.1, 0.05, Mat3::identity()).unwrap();
    let basis = SwgBasis::new(&region);
    let charges = Family::swg_charges(&region, &basis);
    let tests = Family::swg_weighted_tests(&region, &basis, &vec![Mat3::identity(); region.tets.len()]);
    let opts = QuadratureOptions::default();
    let probe = Family::pyramids(&PyramidBasis::new(&generate_sphere_surface(0.3, 1)).unwrap());
    let a = assemble_grad_s(&charges, &probe, &opts).matrix;
    let b = assemble_grad_s(&tests, &probe, &opts).matrix;
    assert!((&a - &b).amax() < 1e-10 * a.amax());
}

#[test]
fn no_interior_gradient_from_constant_shell_density() {
    let region = generate_ball_tets(0.05, 0.025, Mat3::identity()).unwrap();
    let basis = SwgBasis::new(&region);
    let tests = Family::swg_weighted_tests(&region, &basis, &vec![Mat3::identity(); region.tets.len()]);
    let (_, b, f) = sphere_family(0.1, 3);
    let m = assemble_grad_s(&tests, &f, &QuadratureOptions::default()).matrix;
    let action = &m * DVector::from_element(b.len(), 1.0);
    // compare against the gradient of a unit potential ramp
    let ramp = project(&tests, &QuadratureOptions::default(), |x, _| x.z, None);
    assert!(action.amax() < 1e-3 * ramp.amax(), "{} {}", action.amax(), ramp.amax());
}

#[test]
fn grad_s_matches_finite_difference() {
    let region = generate_ball_tets(0.05, 0.05, Mat3::identity()).unwrap();
    let basis = SwgBasis::new(&region);
    let tests = Family::swg_weighted_tests(&region, &basis, &vec![Mat3::identity(); region.tets.len()]);
    let (_, b, f) = sphere_family(0.1, 2);
    let opts = QuadratureOptions::default();
    let m = assemble_grad_s(&tests, &f, &opts).matrix;
    let col = 5;
    let mut e = vec![0.0; b.len()];
    e[col] = 1.0;
    // int f_m . grad u over the support, with the gradient by central differences
    let h = 1e-5;
    let q = hybem::elements::tet_quadrature(4).unwrap();
    let dof = 3;
    let mut expected = 0.0;
    for (t, v, vol, sign) in basis.dofs[dof].sides() {
        let tet = Tet::new(region.corners(t));
        for (p, w) in q.points.iter().zip(&q.weights) {
            let x = tet.point(p);
            let fv = (x - v) * (sign / (3.0 * vol));
            let mut g = Vec3::zeros();
            for k in 0..3 {
                let mut d = Vec3::zeros();
                d[k] = h;
                let u = eval_potential(&e, &f, &[x + d, x - d], &opts);
                g[k] = (u[0] - u[1]) / (2.0 * h);
            }
            expected += 6.0 * tet.volume * w * fv.dot(&g);
        }
    }
    let got = m[(dof, col)];
    assert!((got - expected).abs() < 1e-4 * expected.abs(), "{got} {expected}");
}

#[test]
fn far_volume_pairs_are_reciprocal() {
    let near = generate_ball_tets(0.05, 0.05, Mat3::identity()).unwrap();
    let mut far = near.clone();
    for v in &mut far.vertices {
        *v += Vec3::new(0.5, 0.1, 0.0);
    }
    let (bn, bf) = (SwgBasis::new(&near), SwgBasis::new(&far));
    let (a, b) = (Family::swg_charges(&near, &bn), Family::swg_charges(&far, &bf));
    let opts = QuadratureOptions::with_order(4).unwrap();
    let ab = assemble_grad_sv(&a, &b, &opts).matrix;
    let ba = assemble_grad_sv(&b, &a, &opts).matrix;
    assert!((&ab - ba.transpose()).amax() < 1e-10 * ab.amax());
}

#[test]
fn overlapping_volume_entries_converge_with_order() {
    let region = generate_ball_tets(0.1, 0.05, Mat3::identity()).unwrap();
    let basis = SwgBasis::new(&region);
    let charges = Family::swg_charges(&region, &basis);
    let tests = Family::swg_weighted_tests(&region, &basis, &vec![Mat3::identity(); region.tets.len()]);
    let a = assemble_grad_sv(&tests, &charges, &QuadratureOptions::with_order(4).unwrap()).matrix;
    let b = assemble_grad_sv(&tests, &charges, &QuadratureOptions::with_order(6).unwrap()).matrix;
    for i in 0..basis.len() {
        assert!(
            (a[(i, i)] - b[(i, i)]).abs() < 0.01 * b[(i, i)].abs(),
            "{i} {} {}",
            a[(i, i)],
            b[(i, i)]
        );
    }
}

fn straight_fiber(n: usize, radius: f64) -> (WireBundle, WireHatBasis) {
    let nodes = (0..=n)
        .map(|k| Vec3::new(0.0, 0.0, -0.05 + 0.1 * k as f64 / n as f64))
        .collect();
    let bundle = WireBundle::new(
        vec![Fiber {
            nodes,
            radius,
            sigma_l: 1.0,
        }],
        1,
        None,
    )
    .unwrap();
    let basis = WireHatBasis::new(&bundle);
    (bundle, basis)
}

#[test]
fn wire_potential_on_axis_matches_dense_quadrature() {
    let a = 1e-3;
    let (bundle, basis) = straight_fiber(10, a);
    let charges = Family::wire_charges(&bundle, &basis);
    let coeffs: Vec<f64> = (0..basis.len()).map(|i| (i as f64 * 0.7).sin() + 0.2).collect();
    let x = Vec3::new(0.0, 0.0, 0.08);
    let u = eval_potential(&coeffs, &charges, &[x], &QuadratureOptions::default())[0];
    // line charge pi a^2 dh/dl integrated with many midpoint samples
    let fiber = &bundle.fibers[0];
    let mut expected = 0.0;
    let samples = 20000;
    for s in 0..fiber.segment_count() {
        let (p0, p1) = (fiber.nodes[s], fiber.nodes[s + 1]);
        let len = (p1 - p0).norm();
        let mut rho = 0.0;
        for (d, dof) in basis.dofs.iter().enumerate() {
            for (seg, slope) in basis.derivative(d) {
                if seg == s && dof.fiber == 0 {
                    rho += coeffs[d] * slope;
                }
            }
        }
        for k in 0..samples {
            let y = p0 + (p1 - p0) * ((k as f64 + 0.5) / samples as f64);
            expected += PI * a * a * rho * len / samples as f64 / (4.0 * PI * (x - y).norm());
        }
    }
    assert!(
        (u - expected).abs() < 1e-6 * expected.abs().max(1e-12),
        "{u} {expected}"
    );
}

#[test]
fn wire_self_block_diagonally_dominant() {
    let (bundle, basis) = straight_fiber(20, 5e-4);
    let tests = Family::wire_weighted_tests(&bundle, &basis, &[1.0]);
    let charges = Family::wire_charges(&bundle, &basis);
    let m: DMatrix<f64> = assemble_grad_sv(&tests, &charges, &QuadratureOptions::default()).matrix;
    for i in 0..m.nrows() {
        let off: f64 = (0..m.ncols()).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        assert!(m[(i, i)].abs() > off, "row {i}");
    }
}

#[test]
fn wire_orthogonal_to_field_sees_nothing() {
    // fiber on a circle around a charged sphere: the field is radial, the
    // fiber tangential
    let circle = |k: usize| {
        let t = 0.2 * k as f64;
        Vec3::new(0.1 * t.cos(), 0.1 * t.sin(), 0.0)
    };
    let ring = Fiber {
        nodes: (0..=8).map(circle).collect(),
        radius: 1e-3,
        sigma_l: 1.0,
    };
    let spoke = Fiber {
        nodes: (0..=8).map(|k| Vec3::new(0.06 + 0.01 * k as f64, 0.0, 0.0)).collect(),
        radius: 1e-3,
        sigma_l: 1.0,
    };
    let bundle = WireBundle::new(vec![ring, spoke], 1, None).unwrap();
    let basis = WireHatBasis::new(&bundle);
    let tests = Family::wire_weighted_tests(&bundle, &basis, &[1.0, 1.0]);
    let (_, b, f) = sphere_family(0.02, 3);
    let ones = DVector::from_element(b.len(), 1.0);
    let rows = assemble_grad_s(&tests, &f, &QuadratureOptions::default()).matrix * &ones;
    let (ring_rows, spoke_rows): (Vec<_>, Vec<_>) = (0..basis.len())
        .map(|i| (basis.dofs[i].fiber, rows[i].abs()))
        .partition(|(f, _)| *f == 0);
    let ring_max = ring_rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let spoke_min = spoke_rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    assert!(ring_max < 1e-3 * spoke_min, "{ring_max} {spoke_min}");
}

#[test]
fn matches_brute_force_entry_on_icosahedron() {
    let s = generate_sphere_surface(1.0, 0);
    let b = PyramidBasis::new(&s).unwrap();
    let f = Family::pyramids(&b);
    let m = assemble_s(&f, &f, &QuadratureOptions::with_order(6).unwrap()).matrix;
    let q = hybem::elements::tri_quadrature(6).unwrap();
    let (i, j) = (0, 5);
    // outer integral on 4^5 sub-triangles of each test triangle
    let mut sub: Vec<[f64; 6]> = vec![[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]];
    for _ in 0..5 {
        sub = sub
            .iter()
            .flat_map(|t| {
                let p = |k: usize| (t[2 * k], t[2 * k + 1]);
                let m = |a: (f64, f64), b: (f64, f64)| ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
                let (a, b, c) = (p(0), p(1), p(2));
                let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
                [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
                    .map(|v| [v[0].0, v[0].1, v[1].0, v[1].1, v[2].0, v[2].1])
            })
            .collect();
    }
    let mut expected = 0.0;
    for tri_i in b.tris.iter().zip(&b.triangles).filter(|(_, t)| t.contains(&i)) {
        let li = tri_i.1.iter().position(|&v| v == i).unwrap();
        for st in &sub {
            let jac = ((st[2] - st[0]) * (st[5] - st[1]) - (st[4] - st[0]) * (st[3] - st[1])).abs();
            for (p, w) in q.points.iter().zip(&q.weights) {
                let xi = st[0] + (st[2] - st[0]) * p[0] + (st[4] - st[0]) * p[1];
                let eta = st[1] + (st[3] - st[1]) * p[0] + (st[5] - st[1]) * p[1];
                let x = tri_i.0.point(xi, eta);
                let lam = [1.0 - xi - eta, xi, eta][li];
                for tri_j in b.tris.iter().zip(&b.triangles).filter(|(_, t)| t.contains(&j)) {
                    let lj = tri_j.1.iter().position(|&v| v == j).unwrap();
                    let u = hybem::elements::tri_p1_inv_r(tri_j.0, &x)[lj] / (4.0 * PI);
                    expected += 2.0 * tri_i.0.area * jac * w * lam * u;
                }
            }
        }
    }
    assert!(
        (m[(i, j)] - expected).abs() < 1e-6 * expected.abs(),
        "{} {expected}",
        m[(i, j)]
    );
}

#[test]
fn gram_matrices_integrate_constants() {
    let (s, b, _) = sphere_family(1.0, 2);
    let g = pyramid_gram(&b);
    assert!((g.sum() - s.area()).abs() < 1e-12);
    let region = generate_ball_tets(0.1, 0.05, Mat3::identity()).unwrap();
    let basis = SwgBasis::new(&region);
    let sg = swg_gram(&region, &basis);
    let eig = SymmetricEigen::new(sg.clone());
    assert!(eig.eigenvalues.min() > 0.0);
    let (bundle, wb) = straight_fiber(10, 1e-3);
    let wg = wire_gram(&bundle, &wb);
    // hats sum to one except on the end segments
    assert!((wg.sum() - (0.08 + 0.02 / 3.0)).abs() < 1e-12);
}

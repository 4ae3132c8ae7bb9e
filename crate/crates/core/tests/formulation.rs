use std::f64::consts::PI;

use hybem::analytic::{analytic_layered_sphere, relative_error, LayeredSphereModel};
use hybem::elements::{dipole_gradient, dipole_potential};
use hybem::formulation::*;
use hybem::geometry::*;
use hybem::operators::QuadratureOptions;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn three_shell(level: u32) -> (LayeredSphereModel, HybridModel) {
    let sphere = LayeredSphereModel::default_three_shell();
    let surfaces = sphere
        .radii
        .iter()
        .map(|&r| generate_sphere_surface(r, level))
        .collect();
    let head = NestedHeadModel::new(surfaces, sphere.sigma.clone()).unwrap();
    (sphere, HybridModel::surface_only(head))
}

fn deflated(model: &HybridModel) -> BlockSystem {
    let mut sys = build_system(model, &QuadratureOptions::default()).unwrap();
    sys.deflate();
    sys
}

fn electrodes(model: &HybridModel) -> Vec<Vec3> {
    model.head.as_ref().unwrap().outer().vertices.clone()
}

fn referenced(sys: &BlockSystem, d: &Dipole, pts: &[Vec3]) -> Vec<f64> {
    let mut v = solve(sys, d, SolverKind::Direct).unwrap().potential(sys, pts);
    mean_reference(&mut v);
    v
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn contrast_of_simple_tensors() {
    let iso = compute_contrast(0.33, &(Mat3::identity() * 0.33)).unwrap();
    assert!(!iso.active);
    assert_eq!(iso.weight, Mat3::zeros());
    let double = compute_contrast(1.0, &(Mat3::identity() * 2.0)).unwrap();
    assert!(double.active);
    assert!((double.chi - Mat3::identity() * -0.5).norm() < 1e-15);
    let aniso = compute_contrast(1.0, &Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 5.0))).unwrap();
    assert!((aniso.chi - Mat3::from_diagonal(&Vec3::new(0.0, 0.0, -0.8))).norm() < 1e-15);
    assert!(compute_contrast(1.0, &Mat3::zeros()).is_err());
    assert_eq!(wire_contrast(0.33, 0.33), (0.0, false));
    let (c, active) = wire_contrast(0.2, 1.0);
    assert!(active && (c + 0.8).abs() < 1e-15);
}

#[test]
fn equal_conductivities_are_rejected() {
    let surfaces = vec![generate_sphere_surface(0.09, 0), generate_sphere_surface(0.1, 0)];
    let model = HybridModel::surface_only(NestedHeadModel::new(surfaces, vec![0.33, 0.33]).unwrap());
    assert_eq!(
        build_system(&model, &QuadratureOptions::default()).unwrap_err(),
        FormulationError::DegenerateInterface(1)
    );
}

#[test]
fn interface_coefficients() {
    let (_, model) = three_shell(0);
    assert_eq!(surface_coefficient(&model, 3).unwrap(), -0.5);
    let c1 = surface_coefficient(&model, 1).unwrap();
    assert!((c1 - (0.33 + 0.0125) / (2.0 * (0.0125 - 0.33))).abs() < 1e-15);
}

#[test]
fn inactive_contrast_reproduces_surface_system_bitwise() {
    let (_, surface_model) = three_shell(1);
    let ball = generate_ball_tets(0.03, 0.03, Mat3::identity() * 0.33).unwrap();
    let fiber = Fiber {
        nodes: vec![Vec3::new(0.0, 0.04, -0.02), Vec3::new(0.0, 0.04, 0.02)],
        radius: 1e-3,
        sigma_l: 0.33,
    };
    let bundle = WireBundle::new(vec![fiber], 1, Some(0.01)).unwrap();
    let hybrid = HybridModel::new(surface_model.head.clone().unwrap(), vec![ball], vec![bundle]).unwrap();
    let a = deflated(&surface_model);
    let b = deflated(&hybrid);
    assert_eq!(b.layout.volume_dofs() + b.layout.wire_dofs(), 0);
    assert_eq!(a.matrix, b.matrix);
    let d = Dipole::new(Vec3::new(0.01, 0.05, 0.02), Vec3::new(0.0, 1.0, 0.5));
    let pts = electrodes(&surface_model);
    assert_eq!(referenced(&a, &d, &pts), referenced(&b, &d, &pts));
}

#[test]
fn planned_layout_matches_assembly() {
    let (_, surface_model) = three_shell(0);
    let head = surface_model.head.clone().unwrap();
    let active = generate_ball_tets(0.03, 0.03, Mat3::identity() * 1.0).unwrap();
    let mut mixed = generate_ball_tets(0.02, 0.02, Mat3::identity() * 0.33).unwrap();
    mixed.vertices.iter_mut().for_each(|v| *v += Vec3::new(0.0, 0.0, 0.045));
    let n = mixed.sigma.len();
    mixed.sigma[..n / 2]
        .iter_mut()
        .for_each(|s| *s = Mat3::identity() * 2.0);
    let fibers = WireBundle::new(
        vec![
            Fiber {
                nodes: vec![Vec3::new(0.0, 0.05, -0.02), Vec3::new(0.0, 0.05, 0.02)],
                radius: 1e-3,
                sigma_l: 3.0,
            },
            Fiber {
                nodes: vec![Vec3::new(0.05, 0.0, -0.02), Vec3::new(0.05, 0.0, 0.02)],
                radius: 1e-3,
                sigma_l: 0.33,
            },
        ],
        1,
        Some(0.01),
    )
    .unwrap();
    let model = HybridModel::new(head, vec![active, mixed], vec![fibers]).unwrap();
    let planned = plan_layout(&model).unwrap();
    let built = build_system(&model, &QuadratureOptions::default()).unwrap().layout;
    assert_eq!(planned, built);
    assert_eq!(planned.regions.len(), 2);
    assert!(planned.wire_dofs() > 0);
}

#[test]
fn deflation_removes_the_null_space() {
    let (_, model) = three_shell(1);
    let mut sys = build_system(&model, &QuadratureOptions::with_order(6).unwrap()).unwrap();
    let ratio = |m: &DMatrix<f64>| {
        let s = m.clone().singular_values();
        s.min() / s.max()
    };
    let before = ratio(&sys.matrix);
    sys.deflate();
    let after = ratio(&sys.matrix);
    assert!(before < 1e-8, "{before:e}");
    assert!(after > 1e-6, "{after:e}");
}

#[test]
fn potentials_do_not_depend_on_the_deflation_shift() {
    let (_, model) = three_shell(1);
    let mut sys = build_system(&model, &QuadratureOptions::with_order(6).unwrap()).unwrap();
    sys.deflate();
    let d = Dipole::new(Vec3::new(0.02, 0.0, 0.04), Vec3::new(1.0, 0.2, 0.0));
    let pts = electrodes(&model);
    let a = referenced(&sys, &d, &pts);
    for factor in [0.1, 10.0] {
        sys.deflate_with(factor * sys.alpha);
        let b = referenced(&sys, &d, &pts);
        assert!(max_diff(&a, &b) < 1e-9 * max_abs(&a));
        sys.deflate_with(sys.alpha / factor);
    }
}

#[test]
fn scaling_all_conductivities_scales_potentials_inversely() {
    let (_, model) = three_shell(1);
    let mut head = model.head.clone().unwrap();
    let gamma = 2.5;
    head.sigma.iter_mut().for_each(|s| *s *= gamma);
    let scaled = HybridModel::surface_only(head);
    let d = Dipole::new(Vec3::new(0.0, 0.03, 0.03), Vec3::new(0.0, 0.0, 1.0));
    let pts = electrodes(&model);
    let a = referenced(&deflated(&model), &d, &pts);
    let b = referenced(&deflated(&scaled), &d, &pts);
    let a_scaled: Vec<f64> = a.iter().map(|x| x / gamma).collect();
    assert!(max_diff(&a_scaled, &b) < 1e-9 * max_abs(&b));
}

#[test]
fn potentials_are_linear_in_the_moment() {
    let (_, model) = three_shell(1);
    let sys = deflated(&model);
    let pts = electrodes(&model);
    let r0 = Vec3::new(0.01, -0.02, 0.03);
    let (p, q) = (Vec3::new(1.0, 0.0, 0.3), Vec3::new(-0.2, 0.7, 0.0));
    let a = referenced(&sys, &Dipole::new(r0, p), &pts);
    let b = referenced(&sys, &Dipole::new(r0, q), &pts);
    let c = referenced(&sys, &Dipole::new(r0, p * 2.0 + q), &pts);
    let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x + y).collect();
    assert!(max_diff(&combo, &c) < 1e-10 * max_abs(&c));
    let zero = solve(&sys, &Dipole::new(r0, Vec3::zeros()), SolverKind::Direct).unwrap();
    assert!(zero.coefficients.iter().all(|&x| x == 0.0));
}

#[test]
fn direct_and_iterative_solvers_agree() {
    let (_, model) = three_shell(1);
    let sys = deflated(&model);
    let d = Dipole::new(Vec3::new(0.03, 0.01, -0.02), Vec3::new(0.3, -1.0, 0.2));
    let a = solve(&sys, &d, SolverKind::Direct).unwrap();
    let b = solve(&sys, &d, SolverKind::iterative()).unwrap();
    let err = (&a.coefficients - &b.coefficients).norm() / a.coefficients.norm();
    assert!(err < 1e-6, "{err:e}");
    let pts = electrodes(&model);
    let (va, vb) = (a.potential(&sys, &pts), b.potential(&sys, &pts));
    assert!(max_diff(&va, &vb) < 1e-6 * max_abs(&va));
}

#[test]
fn leadfield_columns_match_single_solves() {
    let (_, model) = three_shell(1);
    let sys = deflated(&model);
    let pts = electrodes(&model);
    let positions = [Vec3::new(0.0, 0.0, 0.05), Vec3::new(0.03, -0.02, 0.0)];
    let lf = compute_leadfield(&sys, &positions, &pts, SolverKind::Direct).unwrap();
    assert_eq!(lf.shape(), (pts.len(), 6));
    let v = referenced(&sys, &Dipole::new(positions[1], Vec3::y()), &pts);
    assert_eq!(lf.column(4).as_slice(), v.as_slice());
    for c in 0..6 {
        assert!(lf.column(c).sum().abs() < 1e-12 * lf.column(c).amax() * pts.len() as f64);
    }
}

#[test]
fn three_shell_sphere_matches_the_series() {
    let (sphere, model) = three_shell(2);
    let sys = deflated(&model);
    let pts = electrodes(&model);
    for (r0, p) in [
        (Vec3::zeros(), Vec3::z()),
        (Vec3::new(0.0, 0.0, 0.0435), Vec3::new(1.0, 0.0, 1.0)),
        (Vec3::new(0.03, 0.04, 0.0), Vec3::new(0.0, 0.0, 1.0)),
    ] {
        let d = Dipole::new(r0, p);
        let v = referenced(&sys, &d, &pts);
        let exact = analytic_layered_sphere(&sphere, &d, &pts).unwrap();
        let re = relative_error(&v, &exact).unwrap();
        assert!(re < 0.03, "{r0:?}: {re}");
    }
}

#[test]
fn unbounded_homogeneous_medium_is_the_closed_form() {
    let model = HybridModel::unbounded(0.4, vec![], vec![]).unwrap();
    let sys = deflated(&model);
    assert_eq!(sys.dimension(), 0);
    let d = Dipole::new(Vec3::new(0.1, -0.2, 0.3), Vec3::new(1.0, 2.0, -0.5));
    let pts = [
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(-0.3, 0.4, 2.0),
        Vec3::new(0.1, -0.2, 0.35),
    ];
    let v = solve(&sys, &d, SolverKind::Direct).unwrap().potential(&sys, &pts);
    for (x, vi) in pts.iter().zip(&v) {
        let exact = dipole_potential(&d.position, &d.moment, 0.4, x);
        assert!((vi - exact).abs() <= 1e-12 * exact.abs());
    }
}

/// Perturbation of a nearly uniform field `e0` by a conducting body of
/// polarizability `k v`, seen at `x`.
fn induced_dipole_potential(k: f64, volume: f64, e0: &Vec3, x: &Vec3) -> f64 {
    k * 3.0 * volume / (4.0 * PI) * e0.dot(x) / x.norm().powi(3)
}

#[test]
fn conducting_ball_in_a_uniform_field() {
    let (se, si) = (1.0, 3.0);
    let ball = generate_ball_tets(0.02, 0.02, Mat3::identity() * si).unwrap();
    let volume = ball.volume();
    let model = HybridModel::unbounded(se, vec![ball], vec![]).unwrap();
    let sys = deflated(&model);
    let d = Dipole::new(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.3, 0.0, 1.0));
    let e0 = -dipole_gradient(&d.position, &d.moment, se, &Vec3::zeros());
    let k = (si - se) / (si + 2.0 * se);
    let pts: Vec<Vec3> = (0..12)
        .map(|i| {
            let t = i as f64 * 0.5;
            Vec3::new(t.cos(), t.sin(), (0.3 * t).cos()).normalize() * 0.05
        })
        .collect();
    let v = solve(&sys, &d, SolverKind::Direct).unwrap().potential(&sys, &pts);
    let (num, den) = pts.iter().zip(&v).fold((0.0, 0.0), |(n, dd), (x, vi)| {
        let pert = vi - dipole_potential(&d.position, &d.moment, se, x);
        let exact = induced_dipole_potential(k, volume, &e0, x);
        (n + (pert - exact).powi(2), dd + exact * exact)
    });
    assert!((num / den).sqrt() < 0.05, "{}", (num / den).sqrt());
}

#[test]
fn thin_wire_carries_the_excess_axial_current() {
    let (s, sl, a, half) = (1.0, 2.0, 5e-4, 0.02);
    let fiber = Fiber {
        nodes: vec![Vec3::new(0.0, 0.0, -half), Vec3::new(0.0, 0.0, half)],
        radius: a,
        sigma_l: sl,
    };
    let bundle = WireBundle::new(vec![fiber], 1, Some(2e-3)).unwrap();
    let model = HybridModel::unbounded(s, vec![], vec![bundle]).unwrap();
    let sys = deflated(&model);
    let d = Dipole::new(Vec3::new(0.0, 0.0, 1.0), Vec3::z());
    let e0 = -dipole_gradient(&d.position, &d.moment, s, &Vec3::zeros());
    let pts: Vec<Vec3> = (0..8)
        .map(|i| {
            let t = i as f64 * 0.7;
            Vec3::new(t.cos(), 0.5 * t.sin(), (0.4 * t).cos()).normalize() * 0.06
        })
        .collect();
    let v = solve(&sys, &d, SolverKind::Direct).unwrap().potential(&sys, &pts);
    // line of dipoles carrying the excess current of a uniform axial field
    let moment = (sl - s) * PI * a * a * e0.z;
    let (num, den) = pts.iter().zip(&v).fold((0.0, 0.0), |(n, dd), (x, vi)| {
        let pert = vi - dipole_potential(&d.position, &d.moment, s, x);
        let steps = 400;
        let exact: f64 = (0..steps)
            .map(|k| {
                let z = -half + 2.0 * half * (k as f64 + 0.5) / steps as f64;
                dipole_potential(&Vec3::new(0.0, 0.0, z), &Vec3::new(0.0, 0.0, moment), s, x) * 2.0 * half
                    / steps as f64
            })
            .sum();
        (n + (pert - exact).powi(2), dd + exact * exact)
    });
    assert!((num / den).sqrt() < 0.1, "{}", (num / den).sqrt());
}

#[test]
fn invalid_dipole_positions() {
    let (_, model) = three_shell(0);
    let ball = generate_ball_tets(0.03, 0.03, Mat3::identity() * 1.0).unwrap();
    let hybrid = HybridModel::new(model.head.clone().unwrap(), vec![ball], vec![]).unwrap();
    let sys = build_system(&hybrid, &QuadratureOptions::default()).unwrap();
    let rhs = |p: Vec3| sys.rhs(&Dipole::new(p, Vec3::z()));
    assert_eq!(
        rhs(Vec3::new(0.0, 0.0, 0.2)).unwrap_err(),
        FormulationError::DipoleOutside
    );
    assert_eq!(
        rhs(Vec3::new(0.001, 0.002, 0.0)).unwrap_err(),
        FormulationError::DipoleInContrast
    );
    let vertex = hybrid.head.as_ref().unwrap().surfaces[0].vertices[0];
    assert_eq!(rhs(vertex).unwrap_err(), FormulationError::DipoleOnInterface(1));
    assert!(rhs(Vec3::new(0.0, 0.06, 0.0)).is_ok());
}

#[test]
fn regions_touching_an_interface_are_rejected() {
    let (_, model) = three_shell(0);
    let head = model.head.unwrap();
    let vertex = head.surfaces[0].vertices[0] * (1.0 - 1e-13);
    let fiber = Fiber {
        nodes: vec![Vec3::zeros(), vertex],
        radius: 1e-3,
        sigma_l: 1.0,
    };
    let bundle = WireBundle::new(vec![fiber], 1, None).unwrap();
    assert!(matches!(
        HybridModel::new(head, vec![], vec![bundle]),
        Err(FormulationError::TouchesInterface { surface: 1, .. })
    ));
}

#[test]
fn gmres_reports_non_convergence() {
    let a = DMatrix::from_fn(30, 30, |i, j| {
        if i == j {
            1.0
        } else {
            ((i * 7 + j * 3) % 11) as f64 - 5.0
        }
    });
    let b = DVector::from_element(30, 1.0);
    assert!(matches!(
        gmres(&a, &b, 1e-14, 2, 4),
        Err(FormulationError::NotConverged { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn gmres_solves_diagonally_dominant_systems(seed in proptest::collection::vec(-1.0f64..1.0, 64), shift in 9.0f64..20.0) {
        let a = DMatrix::from_fn(8, 8, |i, j| seed[i * 8 + j] + if i == j { shift } else { 0.0 });
        let b = DVector::from_fn(8, |i, _| seed[i] + 0.5);
        let x = gmres(&a, &b, 1e-12, 3, 500).unwrap();
        prop_assert!((&a * &x - &b).norm() <= 1e-12 * b.norm() * 1.0001);
    }
}

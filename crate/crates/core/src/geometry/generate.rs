//! Canonical meshes used for validation runs.

use std::collections::HashMap;

use super::{Fiber, GeometryError, Mat3, TetRegion, TriangleSurface, Vec3, WireBundle};

/// Icosphere: subdivided icosahedron with every vertex projected onto the
/// sphere. Has `20 * 4^level` triangles.
pub fn generate_sphere_surface(radius: f64, level: u32) -> TriangleSurface {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    for v in vertices.iter_mut() {
        *v *= radius;
    }
    TriangleSurface::new(vertices, triangles, 1).expect("icosphere is a valid closed surface")
}

/// Structured grid of `n[0] x n[1] x n[2]` cells over `[-1, 1]^3`, each cell
/// split into six tets sharing the diagonal that starts at the cell corner
/// nearest the origin (mirrored per octant, so the split stays conforming).
/// `map` sends grid points to physical space.
fn grid_tets(n: [usize; 3], map: impl Fn(Vec3) -> Vec3) -> (Vec<Vec3>, Vec<[usize; 4]>) {
    let idx = |i: usize, j: usize, k: usize| (i * (n[1] + 1) + j) * (n[2] + 1) + k;
    let mut vertices = Vec::with_capacity((n[0] + 1) * (n[1] + 1) * (n[2] + 1));
    for i in 0..=n[0] {
        for j in 0..=n[1] {
            for k in 0..=n[2] {
                let u = Vec3::new(
                    -1.0 + 2.0 * i as f64 / n[0] as f64,
                    -1.0 + 2.0 * j as f64 / n[1] as f64,
                    -1.0 + 2.0 * k as f64 / n[2] as f64,
                );
                vertices.push(map(u));
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * n[0] * n[1] * n[2]);
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let cell = [i, j, k];
                let flip: [bool; 3] = [0, 1, 2].map(|a| 2 * cell[a] < n[a]);
                for p in PERMS {
                    let mut c = [0, 1, 2].map(|a| cell[a] + usize::from(flip[a]));
                    let mut t = [idx(c[0], c[1], c[2]); 4];
                    for (s, &axis) in p.iter().enumerate() {
                        if flip[axis] {
                            c[axis] -= 1;
                        } else {
                            c[axis] += 1;
                        }
                        t[s + 1] = idx(c[0], c[1], c[2]);
                    }
                    tets.push(t);
                }
            }
        }
    }
    (vertices, tets)
}

fn cube_to_ball(u: Vec3) -> Vec3 {
    let n2 = u.norm();
    if n2 == 0.0 {
        u
    } else {
        u * (u.amax() / n2)
    }
}

/// Tetrahedralized ball centered at the origin with a uniform tensor.
pub fn generate_ball_tets(radius: f64, target_edge: f64, sigma: Mat3) -> Result<TetRegion, GeometryError> {
    if !(radius > 0.0) || !(target_edge > 0.0) {
        return Err(GeometryError::InvalidParameter(
            "radius and target edge must be positive".into(),
        ));
    }
    let cells = (2.0 * radius / target_edge).ceil() as usize;
    let cells = (cells + cells % 2).max(2);
    let (vertices, tets) = grid_tets([cells; 3], |u| cube_to_ball(u) * radius);
    let count = tets.len();
    TetRegion::new(vertices, tets, vec![sigma; count], 1)
}

/// Tetrahedralized straight circular cylinder around `axis` through `center`.
pub fn generate_cylinder_tets(
    center: Vec3,
    axis: Vec3,
    radius: f64,
    length: f64,
    target_edge: f64,
    sigma: Mat3,
) -> Result<TetRegion, GeometryError> {
    if !(radius > 0.0) || !(length > 0.0) || !(target_edge > 0.0) || axis.norm() == 0.0 {
        return Err(GeometryError::InvalidParameter(
            "cylinder dimensions must be positive".into(),
        ));
    }
    let l = axis.normalize();
    let seed = if l.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = l.cross(&seed).normalize();
    let e2 = l.cross(&e1);
    let across = (2.0 * radius / target_edge).ceil() as usize;
    let across = (across + across % 2).max(2);
    let along = ((length / target_edge).ceil() as usize).max(1);
    let (vertices, tets) = grid_tets([across, across, along], |u| {
        let q = Vec3::new(u.x, u.y, 0.0);
        let d = if q.norm() == 0.0 { q } else { q * (q.amax() / q.norm()) };
        center + e1 * (d.x * radius) + e2 * (d.y * radius) + l * (0.5 * length * u.z)
    });
    let count = tets.len();
    TetRegion::new(vertices, tets, vec![sigma; count], 1)
}

/// Radial fibers from `r_inner` to `r_outer` along nearly uniform directions
/// (a Fibonacci lattice that includes both poles; a single fiber points
/// along +z).
pub fn generate_radial_fibers(
    count: usize,
    r_inner: f64,
    r_outer: f64,
    radius: f64,
    sigma_l: f64,
) -> Result<WireBundle, GeometryError> {
    if !(r_inner > 0.0 && r_inner < r_outer) {
        return Err(GeometryError::InvalidParameter("need 0 < r_inner < r_outer".into()));
    }
    if !(radius > 0.0) {
        return Err(GeometryError::NonPositiveRadius(0));
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let fibers = (0..count)
        .map(|i| {
            let z = if count == 1 {
                1.0
            } else {
                1.0 - 2.0 * i as f64 / (count - 1) as f64
            };
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let th = golden * i as f64;
            let d = Vec3::new(rho * th.cos(), rho * th.sin(), z);
            Fiber {
                nodes: vec![d * r_inner, d * r_outer],
                radius,
                sigma_l,
            }
        })
        .collect();
    WireBundle::new(fibers, 1, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_counts() {
        let s0 = generate_sphere_surface(1.0, 0);
        assert_eq!((s0.triangles.len(), s0.vertices.len()), (20, 12));
        assert_eq!(generate_sphere_surface(1.0, 2).triangles.len(), 320);
    }

    #[test]
    fn icosphere_vertices_on_sphere() {
        for level in 0..4 {
            let s = generate_sphere_surface(0.087, level);
            let dev = s.vertices.iter().map(|v| (v.norm() - 0.087).abs()).fold(0.0, f64::max);
            assert!(dev < 1e-15, "level {level}: {dev}");
            assert_eq!(s.euler_characteristic(), 2);
        }
    }

    #[test]
    fn icosphere_area_converges_quadratically() {
        let err: Vec<f64> = (1..5)
            .map(|l| (generate_sphere_surface(1.0, l).area() - 4.0 * PI).abs())
            .collect();
        for w in err.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
        }
    }

    #[test]
    fn ball_volume_within_five_percent() {
        for edge in [0.25, 0.2, 0.125] {
            let b = generate_ball_tets(1.0, edge, Mat3::identity()).unwrap();
            let exact = 4.0 / 3.0 * PI;
            assert!((b.volume() - exact).abs() / exact < 0.05, "edge {edge}: {}", b.volume());
            assert!((0..b.tets.len()).all(|k| b.tet_volume(k) > 0.0));
        }
    }

    #[test]
    fn ball_bounding_box() {
        let b = generate_ball_tets(0.5, 0.1, Mat3::identity()).unwrap();
        let (lo, hi) = b.bounding_box();
        assert!(lo.min() >= -0.5 - 1e-15 && hi.max() <= 0.5 + 1e-15);
    }

    #[test]
    fn cylinder_volume() {
        let c = generate_cylinder_tets(
            Vec3::zeros(),
            Vec3::new(1.0, 1.0, 0.0),
            0.01,
            0.05,
            0.004,
            Mat3::identity(),
        )
        .unwrap();
        let exact = PI * 1e-4 * 0.05;
        assert!((c.volume() - exact).abs() / exact < 0.05);
    }

    #[test]
    fn single_radial_fiber() {
        let b = generate_radial_fibers(1, 0.2, 0.8, 1e-3, 1.0).unwrap();
        assert_eq!(b.fibers.len(), 1);
        assert!((b.fibers[0].length() - 0.6).abs() < 1e-15);
        assert!((b.fibers[0].nodes[1] - Vec3::new(0.0, 0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn radial_fiber_directions_balanced() {
        let b = generate_radial_fibers(100, 0.2, 0.8, 1e-3, 1.0).unwrap();
        let mean: Vec3 = b
            .fibers
            .iter()
            .map(|f| (f.nodes[1] - f.nodes[0]).normalize())
            .sum::<Vec3>()
            / 100.0;
        assert!(mean.norm() < 0.2, "{}", mean.norm());
    }

    #[test]
    fn zero_fiber_radius_rejected() {
        assert!(generate_radial_fibers(3, 0.2, 0.8, 0.0, 1.0).is_err());
    }
}

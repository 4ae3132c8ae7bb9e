//! Laplace kernel and closed-form potential integrals over flat simplices.
//!
//! All `*_inv_r` integrals omit the `1/(4 pi)` factor of the Green function.
//! Gradients are taken with respect to the observation point.

use std::f64::consts::PI;

use super::ElementError;
use crate::geometry::Vec3;

pub const FOUR_PI: f64 = 4.0 * PI;

/// Free-space Laplace Green function `1 / (4 pi |r - r'|)`.
pub fn green(r: &Vec3, rp: &Vec3) -> Result<f64, ElementError> {
    let d = (r - rp).norm();
    if d == 0.0 {
        return Err(ElementError::CoincidentPoints);
    }
    Ok(1.0 / (FOUR_PI * d))
}

/// Gradient of [`green`] with respect to `r`.
pub fn grad_green(r: &Vec3, rp: &Vec3) -> Result<Vec3, ElementError> {
    let d = r - rp;
    let n = d.norm();
    if n == 0.0 {
        return Err(ElementError::CoincidentPoints);
    }
    Ok(-d / (FOUR_PI * n * n * n))
}

/// `R + l` with `R = sqrt(l^2 + rho2)`, accurate when `l < 0`.
fn r_plus_l(l: f64, r: f64, rho2: f64) -> f64 {
    if l >= 0.0 {
        r + l
    } else {
        rho2 / (r - l)
    }
}

/// `int_{lm}^{lp} dl / sqrt(l^2 + rho2)`. Returns 0 when the observation
/// point lies on the segment itself (log-singular; callers multiply by a
/// vanishing factor there).
fn line_log(lm: f64, lp: f64, rm: f64, rp: f64, rho2: f64, scale: f64) -> f64 {
    if rho2 <= (1e-14 * scale).powi(2) {
        if lm > 0.0 {
            (lp / lm).ln()
        } else if lp < 0.0 {
            (lm / lp).ln()
        } else {
            0.0
        }
    } else {
        (r_plus_l(lp, rp, rho2) / r_plus_l(lm, rm, rho2)).ln()
    }
}

/// Flat triangle with cached frame data.
#[derive(Debug, Clone, PartialEq)]
pub struct Tri {
    pub v: [Vec3; 3],
    pub normal: Vec3,
    pub area: f64,
    pub centroid: Vec3,
    pub diameter: f64,
    /// In-plane gradients of the barycentric coordinates.
    pub grad_bary: [Vec3; 3],
    /// Unit edge directions (`v[i] -> v[i+1]`), outward in-plane edge
    /// normals and edge lengths.
    edge_dir: [Vec3; 3],
    edge_normal: [Vec3; 3],
    edge_len: [f64; 3],
}

impl Tri {
    pub fn new(v: [Vec3; 3]) -> Result<Self, ElementError> {
        let c = (v[1] - v[0]).cross(&(v[2] - v[0]));
        let twice_area = c.norm();
        let diameter = (v[1] - v[0]).norm().max((v[2] - v[1]).norm()).max((v[0] - v[2]).norm());
        if twice_area <= 1e-14 * diameter * diameter || !twice_area.is_finite() {
            return Err(ElementError::DegenerateElement);
        }
        let normal = c / twice_area;
        let grad_bary = [0, 1, 2].map(|k| normal.cross(&(v[(k + 2) % 3] - v[(k + 1) % 3])) / twice_area);
        let edge_len = [0, 1, 2].map(|i| (v[(i + 1) % 3] - v[i]).norm());
        let edge_dir = [0, 1, 2].map(|i| (v[(i + 1) % 3] - v[i]) / edge_len[i]);
        Ok(Self {
            edge_normal: edge_dir.map(|l| l.cross(&normal)),
            edge_dir,
            edge_len,
            v,
            normal,
            area: 0.5 * twice_area,
            centroid: (v[0] + v[1] + v[2]) / 3.0,
            diameter,
            grad_bary,
        })
    }

    pub fn point(&self, xi: f64, eta: f64) -> Vec3 {
        self.v[0] + (self.v[1] - self.v[0]) * xi + (self.v[2] - self.v[0]) * eta
    }

    pub fn barycentric(&self, p: &Vec3) -> [f64; 3] {
        [0, 1, 2].map(|k| 1.0 + self.grad_bary[k].dot(&(p - self.v[k])))
    }
}

struct Edge {
    m: Vec3,
    l: Vec3,
    t0: f64,
    f: f64,
    r0sq: f64,
    lm: f64,
    lp: f64,
    rm: f64,
    rp: f64,
}

struct Frame {
    d: f64,
    rho0: Vec3,
    edges: [Edge; 3],
    /// Unsigned solid angle of the triangle seen from the point (0 in its
    /// plane).
    omega: f64,
}

/// Signed solid angle subtended by a triangle.
fn solid_angle(v: &[Vec3; 3], x: &Vec3) -> f64 {
    let a = v[0] - x;
    let b = v[1] - x;
    let c = v[2] - x;
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(&c));
    let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    2.0 * num.atan2(den)
}

fn frame(tri: &Tri, x: &Vec3) -> Frame {
    let n = tri.normal;
    let mut d = n.dot(&(x - tri.v[0]));
    if d.abs() < 1e-12 * tri.diameter {
        d = 0.0;
    }
    let rho0 = x - n * d;
    let edges = [0, 1, 2].map(|i| {
        let a = tri.v[i];
        let b = tri.v[(i + 1) % 3];
        let len = tri.edge_len[i];
        let l = tri.edge_dir[i];
        let m = tri.edge_normal[i];
        let lm = (a - rho0).dot(&l);
        let lp = (b - rho0).dot(&l);
        let mut t0 = (a - rho0).dot(&m);
        if t0.abs() < 1e-14 * len {
            t0 = 0.0;
        }
        let r0sq = t0 * t0 + d * d;
        let rm = (lm * lm + r0sq).sqrt();
        let rp = (lp * lp + r0sq).sqrt();
        let f = line_log(lm, lp, rm, rp, r0sq, len);
        Edge {
            m,
            l,
            t0,
            f,
            r0sq,
            lm,
            lp,
            rm,
            rp,
        }
    });
    let omega = if d == 0.0 { 0.0 } else { solid_angle(&tri.v, x).abs() };
    Frame { d, rho0, edges, omega }
}

/// Exact `int_T 1/|x - r'| dS'`, valid on, near and far from the triangle.
pub fn analytic_inv_r_triangle(v: [Vec3; 3], x: &Vec3) -> Result<f64, ElementError> {
    let tri = Tri::new(v)?;
    Ok(tri_inv_r(&tri, x))
}

pub fn tri_inv_r(tri: &Tri, x: &Vec3) -> f64 {
    let fr = frame(tri, x);
    let ad = fr.d.abs();
    fr.edges.iter().map(|e| e.t0 * e.f).sum::<f64>() - ad * fr.omega
}

/// Potentials `int_T lambda_k / R` of the three linear shape functions.
pub fn tri_p1_inv_r(tri: &Tri, x: &Vec3) -> [f64; 3] {
    let fr = frame(tri, x);
    let ad = fr.d.abs();
    let mut i0 = -ad * fr.omega;
    let mut i1 = Vec3::zeros();
    for e in &fr.edges {
        i0 += e.t0 * e.f;
        i1 += e.m * (0.5 * (e.r0sq * e.f + e.lp * e.rp - e.lm * e.rm));
    }
    let lam = tri.barycentric(&fr.rho0);
    [0, 1, 2].map(|k| lam[k] * i0 + tri.grad_bary[k].dot(&i1))
}

/// Potentials and gradients of the three linear shape-function densities.
/// On the triangle plane the normal component is the principal value.
pub fn tri_p1_grad_inv_r(tri: &Tri, x: &Vec3) -> ([f64; 3], [Vec3; 3]) {
    let fr = frame(tri, x);
    let d = fr.d;
    let ad = d.abs();
    let n = tri.normal;
    let omega = fr.omega;
    let mut i0 = -ad * omega;
    let mut i1 = Vec3::zeros();
    let mut j1 = Vec3::zeros();
    for e in &fr.edges {
        i0 += e.t0 * e.f;
        i1 += e.m * (0.5 * (e.r0sq * e.f + e.lp * e.rp - e.lm * e.rm));
        j1 -= e.m * e.f;
    }
    let sgn = if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    };
    let lam = tri.barycentric(&fr.rho0);
    let mut pot = [0.0; 3];
    let mut grad = [Vec3::zeros(); 3];
    for k in 0..3 {
        let g = tri.grad_bary[k];
        pot[k] = lam[k] * i0 + g.dot(&i1);
        let mut tg = g * i0;
        for e in &fr.edges {
            tg -= e.m * (e.t0 * e.f * e.m.dot(&g) + (e.rp - e.rm) * e.l.dot(&g));
        }
        grad[k] = j1 * lam[k] + tg - n * (lam[k] * sgn * omega + d * g.dot(&j1));
    }
    (pot, grad)
}

/// Gradient of [`tri_inv_r`] (constant unit density).
pub fn tri_grad_inv_r(tri: &Tri, x: &Vec3) -> Vec3 {
    let (_, g) = tri_p1_grad_inv_r(tri, x);
    g[0] + g[1] + g[2]
}

/// Outward-oriented faces of a positively oriented tet.
fn tet_faces(v: &[Vec3; 4]) -> [[Vec3; 3]; 4] {
    crate::geometry::TET_FACES.map(|f| f.map(|i| v[i]))
}

/// Boundary triangles of a positively oriented tet, for repeated
/// evaluation of its potential.
pub fn tet_face_tris(v: &[Vec3; 4]) -> [Tri; 4] {
    tet_faces(v).map(|f| Tri::new(f).expect("non-degenerate tet face"))
}

/// `int_V 1/|x - r'| dV'` for a tetrahedron, exact everywhere.
pub fn tet_inv_r(v: &[Vec3; 4], x: &Vec3) -> f64 {
    tet_inv_r_faces(&tet_face_tris(v), x)
}

pub fn tet_inv_r_faces(faces: &[Tri; 4], x: &Vec3) -> f64 {
    faces
        .iter()
        .map(|tri| 0.5 * (tri.v[0] - x).dot(&tri.normal) * tri_inv_r(tri, x))
        .sum()
}

/// Potential and gradient of a unit-density tetrahedron.
pub fn tet_grad_inv_r(v: &[Vec3; 4], x: &Vec3) -> (f64, Vec3) {
    tet_grad_inv_r_faces(&tet_face_tris(v), x)
}

pub fn tet_grad_inv_r_faces(faces: &[Tri; 4], x: &Vec3) -> (f64, Vec3) {
    let mut pot = 0.0;
    let mut grad = Vec3::zeros();
    for tri in faces {
        let i0 = tri_inv_r(tri, x);
        pot += 0.5 * (tri.v[0] - x).dot(&tri.normal) * i0;
        grad -= tri.normal * i0;
    }
    (pot, grad)
}

/// `int_seg dl / sqrt(|x - r'|^2 + reg^2)` for a uniform line density.
pub fn segment_inv_r(a: &Vec3, b: &Vec3, x: &Vec3, reg: f64) -> f64 {
    segment_grad_inv_r(a, b, x, reg).0
}

/// Potential and gradient of a unit line density, with optional thin-wire
/// regularization `reg` (0 for the exact kernel).
pub fn segment_grad_inv_r(a: &Vec3, b: &Vec3, x: &Vec3, reg: f64) -> (f64, Vec3) {
    let len = (b - a).norm();
    let l = (b - a) / len;
    let s = (x - a).dot(&l);
    let p = x - a - l * s;
    let lm = -s;
    let lp = len - s;
    let rho2 = p.norm_squared() + reg * reg;
    let rm = (lm * lm + rho2).sqrt();
    let rp = (lp * lp + rho2).sqrt();
    let pot = line_log(lm, lp, rm, rp, rho2, len);
    let along = 1.0 / rm - 1.0 / rp;
    let perp = if p.norm_squared() == 0.0 {
        0.0
    } else {
        let sg = |t: f64| if t >= 0.0 { 1.0 } else { -1.0 };
        (sg(lp) - sg(lm)) / rho2 - sg(lp) / (rp * (rp + lp.abs())) + sg(lm) / (rm * (rm + lm.abs()))
    };
    (pot, l * along - p * perp)
}

/// Infinite-medium potential of a current dipole `p` at `r0` in conductivity
/// `sigma`.
pub fn dipole_potential(r0: &Vec3, p: &Vec3, sigma: f64, r: &Vec3) -> f64 {
    let d = r - r0;
    let n = d.norm();
    p.dot(&d) / (FOUR_PI * sigma * n * n * n)
}

pub fn dipole_gradient(r0: &Vec3, p: &Vec3, sigma: f64, r: &Vec3) -> Vec3 {
    let d = r - r0;
    let n2 = d.norm_squared();
    let n = n2.sqrt();
    (p * n2 - d * (3.0 * p.dot(&d))) / (FOUR_PI * sigma * n2 * n2 * n)
}

//! Galerkin assembly of Newton-potential interactions between families.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::family::{Element, Family, Shape};
use crate::elements::quadrature::gauss_legendre;
use crate::elements::{
    segment_grad_inv_r, segment_quadrature, tet_face_tris, tet_grad_inv_r_faces, tet_inv_r_faces, tet_quadrature,
    tri_p1_grad_inv_r, tri_p1_inv_r, tri_quadrature, ElementError, Tri, FOUR_PI,
};
use crate::geometry::Vec3;

/// What is sampled from the source potential on the test element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Potential,
    /// Derivative along the test triangle's normal (principal value on the
    /// source plane).
    NormalDerivative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Rule on test triangles.
    pub tri_order: usize,
    /// Rule on test tets.
    pub tet_order: usize,
    /// Rule on test segments.
    pub seg_order: usize,
    /// Rule used for well-separated source triangles.
    pub far_tri_order: usize,
    /// Rule used for well-separated source tets.
    pub far_tet_order: usize,
    /// Sources closer than `(1 + near_factor) * diameter` to the test point
    /// are integrated in closed form.
    pub near_factor: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            tri_order: 4,
            tet_order: 4,
            seg_order: 4,
            far_tri_order: 4,
            far_tet_order: 2,
            near_factor: 1.0,
        }
    }
}

impl QuadratureOptions {
    /// Same rule everywhere; used to override the order from the CLI.
    pub fn with_order(order: usize) -> Result<Self, ElementError> {
        tri_quadrature(order)?;
        Ok(Self {
            tri_order: order,
            tet_order: order,
            seg_order: order,
            far_tri_order: order,
            far_tet_order: order.min(4),
            ..Self::default()
        })
    }
}

/// Quadrature point with the weights of every local shape function.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WeightedPoint {
    pub x: Vec3,
    pub w: [f64; 3],
}

pub(crate) fn element_points(
    shape: &Shape,
    tri_order: usize,
    tet_order: usize,
    seg_order: usize,
) -> Vec<WeightedPoint> {
    match shape {
        Shape::Tri(t) => {
            let q = tri_quadrature(tri_order).expect("validated order");
            q.points
                .iter()
                .zip(&q.weights)
                .map(|(p, w)| {
                    let s = 2.0 * t.area * w;
                    WeightedPoint {
                        x: t.point(p[0], p[1]),
                        w: [s * (1.0 - p[0] - p[1]), s * p[0], s * p[1]],
                    }
                })
                .collect()
        }
        Shape::Tet(t) => {
            let q = tet_quadrature(tet_order).expect("validated order");
            q.points
                .iter()
                .zip(&q.weights)
                .map(|(p, w)| WeightedPoint {
                    x: t.point(p),
                    w: [6.0 * t.volume * w, 0.0, 0.0],
                })
                .collect()
        }
        Shape::Seg(s) => {
            let q = segment_quadrature(seg_order).expect("validated order");
            q.points
                .iter()
                .zip(&q.weights)
                .map(|(p, w)| WeightedPoint {
                    x: s.a + (s.b - s.a) * p[0],
                    w: [s.length * w, 0.0, 0.0],
                })
                .collect()
        }
    }
}

/// Source element prepared for repeated evaluation.
pub(crate) struct Source<'a> {
    pub element: &'a Element,
    centroid: Vec3,
    diameter: f64,
    near_radius: f64,
    far: Vec<WeightedPoint>,
    faces: Option<[Tri; 4]>,
}

pub(crate) fn prepare_sources<'a>(family: &'a Family, opts: &QuadratureOptions) -> Vec<Source<'a>> {
    family
        .elements
        .iter()
        .map(|e| Source {
            element: e,
            centroid: e.shape.centroid(),
            diameter: e.shape.diameter(),
            near_radius: (1.0 + opts.near_factor) * e.shape.diameter(),
            far: match e.shape {
                Shape::Seg(_) => Vec::new(),
                _ => element_points(&e.shape, opts.far_tri_order, opts.far_tet_order, opts.seg_order),
            },
            faces: match &e.shape {
                Shape::Tet(t) => Some(tet_face_tris(&t.v)),
                _ => None,
            },
        })
        .collect()
}

impl Source<'_> {
    /// `(1/4pi) int psi_b / R` (or its derivative along `normal`) for each
    /// local shape function `psi_b`. `reg` regularizes line sources.
    pub(crate) fn field(&self, x: &Vec3, normal: Option<&Vec3>, reg: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        let near = (x - self.centroid).norm() < self.near_radius;
        match (&self.element.shape, near) {
            (Shape::Seg(s), _) => {
                let (p, g) = segment_grad_inv_r(&s.a, &s.b, x, reg);
                out[0] = match normal {
                    None => p,
                    Some(n) => g.dot(n),
                };
            }
            (Shape::Tri(t), true) => match normal {
                None => out = tri_p1_inv_r(t, x),
                Some(n) => {
                    let (_, g) = tri_p1_grad_inv_r(t, x);
                    out = g.map(|gk| gk.dot(n));
                }
            },
            (Shape::Tet(_), true) => {
                let faces = self.faces.as_ref().expect("tet faces");
                out[0] = match normal {
                    None => tet_inv_r_faces(faces, x),
                    Some(n) => tet_grad_inv_r_faces(faces, x).1.dot(n),
                };
            }
            (_, false) => {
                for q in &self.far {
                    let d = x - q.x;
                    let r2 = d.norm_squared();
                    let r = r2.sqrt();
                    let k = match normal {
                        None => 1.0 / r,
                        Some(n) => -d.dot(n) / (r2 * r),
                    };
                    for (o, w) in out.iter_mut().zip(&q.w) {
                        *o += w * k;
                    }
                }
            }
        }
        out.map(|v| v / FOUR_PI)
    }
}

fn regularization(test: &Shape, source: &Shape) -> f64 {
    match (test, source) {
        (Shape::Seg(t), Shape::Seg(s)) => t.radius.max(s.radius),
        _ => 0.0,
    }
}

fn test_normal(shape: &Shape, functional: Functional) -> Option<Vec3> {
    match (functional, shape) {
        (Functional::Potential, _) => None,
        (Functional::NormalDerivative, Shape::Tri(t)) => Some(t.normal),
        (Functional::NormalDerivative, _) => panic!("normal derivative needs triangle test elements"),
    }
}

/// `M[m, n] = < t_m, F u[s_n] >`, where `u[q] = (1/4pi) int q / R` and `F`
/// is the functional. Rows follow `tests`, columns follow `sources`.
pub fn galerkin(tests: &Family, functional: Functional, sources: &Family, opts: &QuadratureOptions) -> DMatrix<f64> {
    let prepared = prepare_sources(sources, opts);
    let ncols = sources.size;
    let touch = touch_factor(functional);
    let blocks: Vec<Vec<f64>> = tests
        .elements
        .par_iter()
        .map(|te| {
            let pts = element_points(&te.shape, opts.tri_order, opts.tet_order, opts.seg_order);
            let mut fine: Option<Vec<WeightedPoint>> = None;
            let centroid = te.shape.centroid();
            let diameter = te.shape.diameter();
            let normal = test_normal(&te.shape, functional);
            let nloc = te.shape.local_count();
            let mut local = vec![0.0; nloc * ncols];
            for src in &prepared {
                let reg = regularization(&te.shape, &src.element.shape);
                let touching = (centroid - src.centroid).norm() < touch * (diameter + src.diameter);
                let adjacent = if touching {
                    adjacent_points(&te.shape, &src.element.shape)
                } else {
                    None
                };
                let pts = match (&adjacent, touching) {
                    (Some(a), _) => a,
                    (None, true) => fine.get_or_insert_with(|| uniform_points(&te.shape, opts)),
                    (None, false) => &pts,
                };
                let mut b = [[0.0; 3]; 3];
                for p in pts {
                    let f = src.field(&p.x, normal.as_ref(), reg);
                    for a in 0..nloc {
                        for (bb, fv) in b[a].iter_mut().zip(&f) {
                            *bb += p.w[a] * fv;
                        }
                    }
                }
                for e in &src.element.map {
                    for a in 0..nloc {
                        local[a * ncols + e.index] += e.coeff * b[a][e.local];
                    }
                }
            }
            local
        })
        .collect();
    let mut m = DMatrix::zeros(tests.size, ncols);
    for (te, local) in tests.elements.iter().zip(&blocks) {
        for e in &te.map {
            let row = &local[e.local * ncols..(e.local + 1) * ncols];
            for (j, v) in row.iter().enumerate() {
                m[(e.index, j)] += e.coeff * v;
            }
        }
    }
    m
}

/// `< t_m, g >` for a smooth field `g`, refining test elements that come
/// within `refine_radius * diameter` of `singular_point`.
pub fn project<F>(tests: &Family, opts: &QuadratureOptions, field: F, singular_point: Option<Vec3>) -> DVector<f64>
where
    F: Fn(&Vec3, Option<&Vec3>) -> f64 + Sync,
{
    project_functional(tests, Functional::Potential, opts, field, singular_point)
}

/// Like [`project`], passing the test normal for
/// [`Functional::NormalDerivative`].
pub fn project_functional<F>(
    tests: &Family,
    functional: Functional,
    opts: &QuadratureOptions,
    field: F,
    singular_point: Option<Vec3>,
) -> DVector<f64>
where
    F: Fn(&Vec3, Option<&Vec3>) -> f64 + Sync,
{
    let locals: Vec<[f64; 3]> = tests
        .elements
        .par_iter()
        .map(|te| {
            let normal = test_normal(&te.shape, functional);
            let pts = refined_points(&te.shape, opts, singular_point.as_ref());
            let mut acc = [0.0; 3];
            for p in &pts {
                let g = field(&p.x, normal.as_ref());
                for (a, w) in acc.iter_mut().zip(&p.w) {
                    *a += w * g;
                }
            }
            acc
        })
        .collect();
    let mut out = DVector::zeros(tests.size);
    for (te, acc) in tests.elements.iter().zip(&locals) {
        for e in &te.map {
            out[e.index] += e.coeff * acc[e.local];
        }
    }
    out
}

/// Gauss points per direction of the rules for triangles sharing vertices.
const ADJACENT_POINTS: usize = 12;

/// Rule on a test triangle sharing vertices with a source triangle, `None`
/// for pairs without common vertices.
///
/// Each piece is a Duffy square collapsed at a shared vertex with the radial
/// coordinate graded as `s^3`. A shared edge splits the triangle at the edge
/// midpoint into two such pieces whose angular coordinate is graded as `s^5`
/// towards the edge, where the normal derivative of the source has a
/// logarithmic singularity. A triangle paired with itself is split at its
/// centroid into three pieces graded towards the edges.
fn adjacent_points(test: &Shape, source: &Shape) -> Option<Vec<WeightedPoint>> {
    let (Shape::Tri(t), Shape::Tri(s)) = (test, source) else {
        return None;
    };
    let shared: Vec<usize> = (0..3).filter(|&i| s.v.contains(&t.v[i])).collect();
    #[derive(Clone, Copy, PartialEq)]
    enum Grading {
        None,
        /// Angular coordinate towards the first edge-side end.
        Side,
        /// Radial coordinate towards the far edge.
        Rim,
    }
    // (apex, two far corners, grading)
    let pieces = match shared[..] {
        [i] => vec![(t.v[i], t.v[(i + 1) % 3], t.v[(i + 2) % 3], Grading::None)],
        [i, j] => {
            let (a, b, c) = (t.v[i], t.v[j], t.v[3 - i - j]);
            let m = (a + b) * 0.5;
            vec![(a, m, c, Grading::Side), (b, m, c, Grading::Side)]
        }
        [_, _, _] => (0..3)
            .map(|k| (t.centroid, t.v[k], t.v[(k + 1) % 3], Grading::Rim))
            .collect(),
        _ => return None,
    };
    let (x, w) = gauss_legendre(ADJACENT_POINTS);
    let mut out = Vec::with_capacity(pieces.len() * ADJACENT_POINTS * ADJACENT_POINTS);
    for (apex, q1, q2, grading) in pieces {
        let jac = (q1 - apex).cross(&(q2 - apex)).norm();
        for (r, wr) in x.iter().zip(&w) {
            let (u, du) = match grading {
                Grading::Rim => (1.0 - (1.0 - r).powi(3), 3.0 * (1.0 - r).powi(2)),
                _ => (r * r * r, 3.0 * r * r),
            };
            for (sv, wv) in x.iter().zip(&w) {
                let (v, dv) = match grading {
                    Grading::Side => (sv.powi(5), 5.0 * sv.powi(4)),
                    _ => (*sv, 1.0),
                };
                let p = apex + ((q1 - apex) * (1.0 - v) + (q2 - apex) * v) * u;
                let weight = jac * u * du * dv * wr * wv;
                out.push(WeightedPoint {
                    x: p,
                    w: t.barycentric(&p).map(|l| l * weight),
                });
            }
        }
    }
    Some(out)
}

/// Test elements whose centroid lies within this fraction of the summed
/// diameters of a source are integrated on a subdivided rule. Normal
/// derivatives vary faster near a source and get the larger zone.
fn touch_factor(functional: Functional) -> f64 {
    match functional {
        Functional::Potential => 0.5,
        Functional::NormalDerivative => 1.0,
    }
}

/// Three levels of uniform subdivision for triangles and segments, one for
/// tets.
fn uniform_points(shape: &Shape, opts: &QuadratureOptions) -> Vec<WeightedPoint> {
    let levels = match shape {
        Shape::Tet(_) => 1,
        _ => 3,
    };
    let mut pieces = vec![shape.clone()];
    for _ in 0..levels {
        pieces = pieces.iter().flat_map(subdivide).collect();
    }
    let mut out = Vec::new();
    for piece in &pieces {
        push_points(shape, piece, opts, &mut out);
    }
    out
}

fn push_points(parent: &Shape, piece: &Shape, opts: &QuadratureOptions, out: &mut Vec<WeightedPoint>) {
    for p in element_points(piece, opts.tri_order, opts.tet_order, opts.seg_order) {
        let w = match parent {
            Shape::Tri(t) => {
                let total = p.w[0] + p.w[1] + p.w[2];
                t.barycentric(&p.x).map(|l| l * total)
            }
            _ => p.w,
        };
        out.push(WeightedPoint { x: p.x, w });
    }
}

const REFINE_RADIUS: f64 = 3.0;
const MAX_REFINE_DEPTH: usize = 8;

/// Quadrature points of `shape`, recursively subdividing pieces near the
/// singular point. Weights refer to the parent's local shape functions.
pub(crate) fn refined_points(shape: &Shape, opts: &QuadratureOptions, singular: Option<&Vec3>) -> Vec<WeightedPoint> {
    let Some(x0) = singular else {
        return element_points(shape, opts.tri_order, opts.tet_order, opts.seg_order);
    };
    let mut out = Vec::new();
    refine(shape, shape, opts, x0, 0, &mut out);
    out
}

fn refine(
    parent: &Shape,
    piece: &Shape,
    opts: &QuadratureOptions,
    x0: &Vec3,
    depth: usize,
    out: &mut Vec<WeightedPoint>,
) {
    let close = (piece.centroid() - x0).norm() < REFINE_RADIUS * piece.diameter();
    if !close || depth >= MAX_REFINE_DEPTH {
        push_points(parent, piece, opts, out);
        return;
    }
    for child in subdivide(piece) {
        refine(parent, &child, opts, x0, depth + 1, out);
    }
}

fn subdivide(shape: &Shape) -> Vec<Shape> {
    use super::family::{Seg, Tet};
    use crate::elements::Tri;
    match shape {
        Shape::Tri(t) => {
            let [a, b, c] = t.v;
            let (ab, bc, ca) = ((a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0);
            [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
                .into_iter()
                .map(|v| Shape::Tri(Tri::new(v).expect("child of valid triangle")))
                .collect()
        }
        Shape::Tet(t) => {
            let v = t.v;
            let m = |i: usize, j: usize| (v[i] + v[j]) / 2.0;
            let children = [
                [v[0], m(0, 1), m(0, 2), m(0, 3)],
                [m(0, 1), v[1], m(1, 2), m(1, 3)],
                [m(0, 2), m(1, 2), v[2], m(2, 3)],
                [m(0, 3), m(1, 3), m(2, 3), v[3]],
                [m(0, 1), m(0, 2), m(0, 3), m(1, 3)],
                [m(0, 1), m(0, 2), m(1, 3), m(1, 2)],
                [m(0, 2), m(0, 3), m(1, 3), m(2, 3)],
                [m(0, 2), m(1, 3), m(1, 2), m(2, 3)],
            ];
            children
                .into_iter()
                .map(|c| {
                    let mut tet = Tet::new(c);
                    if tet.volume < 0.0 {
                        tet = Tet::new([c[0], c[2], c[1], c[3]]);
                    }
                    Shape::Tet(tet)
                })
                .collect()
        }
        Shape::Seg(s) => {
            let mid = (s.a + s.b) / 2.0;
            [(s.a, mid), (mid, s.b)]
                .into_iter()
                .map(|(a, b)| {
                    Shape::Seg(Seg {
                        a,
                        b,
                        length: s.length / 2.0,
                        radius: s.radius,
                        fiber: s.fiber,
                    })
                })
                .collect()
        }
    }
}

/// Potential (or directional derivative) at `points` of the density
/// `sum_n coeffs[n] s_n`.
pub fn evaluate(sources: &Family, coeffs: &[f64], points: &[Vec3], opts: &QuadratureOptions) -> Vec<f64> {
    let prepared = prepare_sources(sources, opts);
    let densities: Vec<[f64; 3]> = sources
        .elements
        .iter()
        .map(|e| {
            let mut d = [0.0; 3];
            for m in &e.map {
                d[m.local] += m.coeff * coeffs[m.index];
            }
            d
        })
        .collect();
    points
        .par_iter()
        .map(|x| {
            prepared
                .iter()
                .zip(&densities)
                .map(|(s, d)| {
                    let f = s.field(x, None, 0.0);
                    f[0] * d[0] + f[1] * d[1] + f[2] * d[2]
                })
                .sum()
        })
        .collect()
}

use std::collections::HashMap;

use super::{GeometryError, Vec3};

/// Closed, consistently oriented triangle mesh with outward normals.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleSurface {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub layer_index: usize,
}

impl TriangleSurface {
    /// Validates topology and orientation. A uniformly inward-oriented mesh is
    /// flipped; anything else that is not a closed genus-0 orientable surface
    /// is rejected.
    pub fn new(vertices: Vec<Vec3>, mut triangles: Vec<[usize; 3]>, layer_index: usize) -> Result<Self, GeometryError> {
        let nv = vertices.len();
        for t in &triangles {
            for &i in t {
                if i >= nv {
                    return Err(GeometryError::IndexOutOfRange { index: i, count: nv });
                }
            }
        }
        for (k, t) in triangles.iter().enumerate() {
            let [a, b, c] = t.map(|i| vertices[i]);
            if (b - a).cross(&(c - a)).norm() == 0.0 {
                return Err(GeometryError::DegenerateTriangle(k));
            }
        }

        let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
                *directed.entry((a, b)).or_default() += 1;
            }
        }
        let boundary = undirected.values().filter(|&&c| c == 1).count();
        if boundary > 0 {
            return Err(GeometryError::OpenMesh(boundary));
        }
        let mut bad: Vec<_> = undirected.iter().filter(|(_, &c)| c != 2).collect();
        bad.sort();
        if let Some((&(a, b), &c)) = bad.first() {
            return Err(GeometryError::NonManifold(a, b, c));
        }
        if directed.values().any(|&c| c != 1) {
            return Err(GeometryError::MixedOrientation);
        }

        let used = {
            let mut seen = vec![false; nv];
            for t in &triangles {
                for &i in t {
                    seen[i] = true;
                }
            }
            seen.iter().filter(|&&s| s).count()
        };
        let euler = used as i64 - undirected.len() as i64 + triangles.len() as i64;
        if euler != 2 {
            return Err(GeometryError::NotGenusZero(euler));
        }

        if signed_volume(&vertices, &triangles) < 0.0 {
            for t in triangles.iter_mut() {
                t.swap(1, 2);
            }
        }
        Ok(Self {
            vertices,
            triangles,
            layer_index,
        })
    }

    pub fn signed_volume(&self) -> f64 {
        signed_volume(&self.vertices, &self.triangles)
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = self.corners(t);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    pub fn corners(&self, t: &[usize; 3]) -> [Vec3; 3] {
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn edge_count(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |e| (t[e].min(t[(e + 1) % 3]), t[e].max(t[(e + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// Generalized winding number; 1 inside, 0 outside.
    pub fn winding_number(&self, p: &Vec3) -> f64 {
        let mut total = 0.0;
        for t in &self.triangles {
            let [a, b, c] = self.corners(t);
            total += solid_angle(&(a - p), &(b - p), &(c - p));
        }
        total / (4.0 * std::f64::consts::PI)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.winding_number(p) > 0.5
    }

    /// Closest point on the surface and its distance from `p`.
    pub fn closest_point(&self, p: &Vec3) -> (Vec3, f64) {
        let mut best = (self.vertices[0], f64::INFINITY);
        for t in &self.triangles {
            let [a, b, c] = self.corners(t);
            let q = closest_point_on_triangle(p, &a, &b, &c);
            let d = (q - p).norm();
            if d < best.1 {
                best = (q, d);
            }
        }
        best
    }

    /// Smallest distance from `p` to the surface.
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.closest_point(p).1
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut sum = 0.0;
        for t in &self.triangles {
            let [a, b, c] = self.corners(t);
            sum += (b - a).norm() + (c - b).norm() + (a - c).norm();
        }
        sum / (3.0 * self.triangles.len() as f64)
    }
}

fn signed_volume(vertices: &[Vec3], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .map(|t| vertices[t[0]].dot(&vertices[t[1]].cross(&vertices[t[2]])) / 6.0)
        .sum()
}

/// Signed solid angle of triangle (a, b, c) seen from the origin.
pub(crate) fn solid_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(c));
    let den = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    2.0 * num.atan2(den)
}

pub(crate) fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Ordered closed surfaces (innermost first) with background conductivities.
/// The medium outside the last surface is non-conducting.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedHeadModel {
    pub surfaces: Vec<TriangleSurface>,
    pub sigma: Vec<f64>,
}

impl NestedHeadModel {
    pub fn new(mut surfaces: Vec<TriangleSurface>, sigma: Vec<f64>) -> Result<Self, GeometryError> {
        if surfaces.is_empty() {
            return Err(GeometryError::EmptyModel);
        }
        if surfaces.len() != sigma.len() {
            return Err(GeometryError::LayerCountMismatch {
                surfaces: surfaces.len(),
                conductivities: sigma.len(),
            });
        }
        for (i, &s) in sigma.iter().enumerate() {
            if !(s > 0.0) || !s.is_finite() {
                return Err(GeometryError::NonPositiveConductivity(i + 1));
            }
        }
        for (i, s) in surfaces.iter_mut().enumerate() {
            s.layer_index = i + 1;
        }
        Ok(Self { surfaces, sigma })
    }

    pub fn layer_count(&self) -> usize {
        self.surfaces.len()
    }

    /// Background conductivity of layer `i` (1-based); `N + 1` is air.
    pub fn sigma_of(&self, layer: usize) -> f64 {
        if layer == 0 || layer > self.sigma.len() {
            0.0
        } else {
            self.sigma[layer - 1]
        }
    }

    pub fn outer(&self) -> &TriangleSurface {
        self.surfaces.last().expect("non-empty model")
    }

    /// 1-based compartment holding `p`, or `None` outside the head.
    pub fn compartment_of(&self, p: &Vec3) -> Option<usize> {
        self.surfaces.iter().position(|s| s.contains(p)).map(|i| i + 1)
    }

    pub fn check_layer(&self, layer: usize) -> Result<(), GeometryError> {
        if layer == 0 || layer > self.layer_count() {
            Err(GeometryError::BadLayer(layer, self.layer_count()))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairContainment {
    /// 1-based index of the inner surface of the pair.
    pub inner: usize,
    pub outer: usize,
    pub vertices_outside: usize,
    pub contained: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestingReport {
    pub pairs: Vec<PairContainment>,
    pub passed: bool,
}

impl NestingReport {
    pub fn failures(&self) -> Vec<String> {
        self.pairs
            .iter()
            .filter(|p| !p.contained)
            .map(|p| format!("surface {} not inside surface {}", p.inner, p.outer))
            .collect()
    }
}

/// Checks every vertex of surface i against surface i+1 with the winding
/// number test. Vertices lying on the outer surface count as outside.
pub fn validate_nesting(model: &NestedHeadModel) -> NestingReport {
    let pairs: Vec<PairContainment> = model
        .surfaces
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (inner, outer) = (&w[0], &w[1]);
            let scale = outer.mean_edge_length();
            let vertices_outside = inner
                .vertices
                .iter()
                .filter(|v| !outer.contains(v) || outer.distance(v) < 1e-9 * scale)
                .count();
            PairContainment {
                inner: i + 1,
                outer: i + 2,
                vertices_outside,
                contained: vertices_outside == 0,
            }
        })
        .collect();
    let passed = pairs.iter().all(|p| p.contained);
    NestingReport { pairs, passed }
}

/// Electrode positions snapped onto the outermost surface.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeSet {
    pub positions: Vec<Vec3>,
    pub labels: Vec<String>,
}

impl ElectrodeSet {
    /// Projects each raw position onto the nearest point of `scalp`; fails if
    /// any electrode is farther than `tolerance` from it.
    pub fn snap(
        labels: Vec<String>,
        raw: &[Vec3],
        scalp: &TriangleSurface,
        tolerance: f64,
    ) -> Result<Self, GeometryError> {
        let mut positions = Vec::with_capacity(raw.len());
        for (label, p) in labels.iter().zip(raw) {
            let (q, d) = scalp.closest_point(p);
            if d > tolerance {
                return Err(GeometryError::ElectrodeTooFar {
                    label: label.clone(),
                    distance: d,
                    tolerance,
                });
            }
            positions.push(q);
        }
        Ok(Self { positions, labels })
    }

    /// Uses the vertices of `surface` as electrodes, labelled by index.
    pub fn from_vertices(surface: &TriangleSurface) -> Self {
        Self {
            positions: surface.vertices.clone(),
            labels: (0..surface.vertices.len()).map(|i| format!("v{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

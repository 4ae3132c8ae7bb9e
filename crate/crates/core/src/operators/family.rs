//! Basis families expressed as charge densities on simplices.
//!
//! Every operator of the formulation is a Newton potential (or its normal
//! derivative) of a charge density: surface densities directly, volume
//! currents through their distributional divergence. A [`Family`] lists the
//! simplices carrying those densities and how each local shape function
//! feeds a global degree of freedom.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::elements::{PyramidBasis, SwgBasis, Tri, WireHatBasis};
use crate::geometry::{Mat3, TetRegion, Vec3, WireBundle, TET_FACES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    SurfacePyramid,
    TetSwg,
    WireHat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tet {
    pub v: [Vec3; 4],
    pub volume: f64,
    pub centroid: Vec3,
    pub diameter: f64,
}

impl Tet {
    pub fn new(v: [Vec3; 4]) -> Self {
        let volume = (v[1] - v[0]).dot(&(v[2] - v[0]).cross(&(v[3] - v[0]))) / 6.0;
        let mut diameter: f64 = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                diameter = diameter.max((v[i] - v[j]).norm());
            }
        }
        Self {
            v,
            volume,
            centroid: v.iter().sum::<Vec3>() / 4.0,
            diameter,
        }
    }

    pub fn point(&self, p: &[f64]) -> Vec3 {
        self.v[0] + (self.v[1] - self.v[0]) * p[0] + (self.v[2] - self.v[0]) * p[1] + (self.v[3] - self.v[0]) * p[2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seg {
    pub a: Vec3,
    pub b: Vec3,
    pub length: f64,
    pub radius: f64,
    pub fiber: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Three linear shape functions.
    Tri(Tri),
    /// One constant shape function.
    Tet(Tet),
    /// One constant shape function along the segment.
    Seg(Seg),
}

impl Shape {
    pub fn local_count(&self) -> usize {
        match self {
            Shape::Tri(_) => 3,
            _ => 1,
        }
    }

    pub fn centroid(&self) -> Vec3 {
        match self {
            Shape::Tri(t) => t.centroid,
            Shape::Tet(t) => t.centroid,
            Shape::Seg(s) => (s.a + s.b) * 0.5,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Shape::Tri(t) => t.diameter,
            Shape::Tet(t) => t.diameter,
            Shape::Seg(s) => s.length,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapEntry {
    pub local: usize,
    pub index: usize,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub shape: Shape,
    pub map: Vec<MapEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub kind: FamilyKind,
    pub size: usize,
    pub elements: Vec<Element>,
}

impl Family {
    /// Linear hats on a surface; each triangle carries its three vertices.
    pub fn pyramids(basis: &PyramidBasis) -> Self {
        let elements = basis
            .tris
            .iter()
            .zip(&basis.triangles)
            .map(|(tri, t)| Element {
                shape: Shape::Tri(tri.clone()),
                map: (0..3)
                    .map(|k| MapEntry {
                        local: k,
                        index: t[k],
                        coeff: 1.0,
                    })
                    .collect(),
            })
            .collect();
        Self {
            kind: FamilyKind::SurfacePyramid,
            size: basis.len(),
            elements,
        }
    }

    /// Charge of each face function: `+/-1/V` in its tets and `-1/A` on
    /// region-boundary faces (interior face contributions cancel).
    pub fn swg_charges(region: &TetRegion, basis: &SwgBasis) -> Self {
        let mut elements = Vec::new();
        for (t, dofs) in basis.tet_dofs.iter().enumerate() {
            let vol = region.tet_volume(t);
            elements.push(Element {
                shape: Shape::Tet(Tet::new(region.corners(t))),
                map: dofs
                    .iter()
                    .map(|&(d, s)| MapEntry {
                        local: 0,
                        index: d,
                        coeff: s / vol,
                    })
                    .collect(),
            });
        }
        for (d, dof) in basis.dofs.iter().enumerate() {
            if dof.minus.is_none() {
                let tri = Tri::new(dof.face.map(|i| region.vertices[i])).expect("valid face");
                elements.push(Element {
                    shape: Shape::Tri(tri),
                    map: (0..3)
                        .map(|k| MapEntry {
                            local: k,
                            index: d,
                            coeff: -1.0 / dof.area,
                        })
                        .collect(),
                });
            }
        }
        Self {
            kind: FamilyKind::TetSwg,
            size: basis.len(),
            elements,
        }
    }

    /// Test charges of the weighted functions `K f_m`, where `K` is a
    /// constant tensor per tet: `<K f_m, grad u> = -<charge, u>` for any
    /// potential `u`. With `K = I` this equals [`Family::swg_charges`] up to
    /// the cancelling interior-face terms.
    pub fn swg_weighted_tests(region: &TetRegion, basis: &SwgBasis, weights: &[Mat3]) -> Self {
        let mut elements = Vec::new();
        let mut faces: BTreeMap<[usize; 3], Vec<MapEntry>> = BTreeMap::new();
        for (t, dofs) in basis.tet_dofs.iter().enumerate() {
            let k = &weights[t];
            let vol = region.tet_volume(t);
            let corners = region.corners(t);
            elements.push(Element {
                shape: Shape::Tet(Tet::new(corners)),
                map: dofs
                    .iter()
                    .map(|&(d, s)| MapEntry {
                        local: 0,
                        index: d,
                        coeff: s * k.trace() / (3.0 * vol),
                    })
                    .collect(),
            });
            for f in TET_FACES {
                let mut key = f.map(|i| region.tets[t][i]);
                key.sort_unstable();
                let fv = f.map(|i| corners[i]);
                let n = (fv[1] - fv[0]).cross(&(fv[2] - fv[0])).normalize();
                let kn = k * n;
                let entry = faces.entry(key).or_default();
                for &(d, s) in dofs {
                    let dof = &basis.dofs[d];
                    let free = if dof.plus.0 == t {
                        dof.plus.1
                    } else {
                        dof.minus.expect("tet in support").1
                    };
                    for (local, &vi) in key.iter().enumerate() {
                        let coeff = -s * (region.vertices[vi] - free).dot(&kn) / (3.0 * vol);
                        entry.push(MapEntry { local, index: d, coeff });
                    }
                }
            }
        }
        for (key, entries) in faces {
            // merge contributions of the two tets sharing the face
            let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for e in entries {
                *merged.entry((e.index, e.local)).or_default() += e.coeff;
            }
            let scale = merged.values().fold(0.0f64, |m, c| m.max(c.abs()));
            let map: Vec<MapEntry> = merged
                .into_iter()
                .filter(|(_, c)| c.abs() > 1e-12 * scale)
                .map(|((index, local), coeff)| MapEntry { local, index, coeff })
                .collect();
            if map.is_empty() {
                continue;
            }
            let tri = Tri::new(key.map(|i| region.vertices[i])).expect("valid face");
            elements.push(Element {
                shape: Shape::Tri(tri),
                map,
            });
        }
        Self {
            kind: FamilyKind::TetSwg,
            size: basis.len(),
            elements,
        }
    }

    /// Line charges of wire currents `pi a^2 h_n(l)`: the derivative of the
    /// hat, scaled by the fiber cross-section.
    pub fn wire_charges(bundle: &WireBundle, basis: &WireHatBasis) -> Self {
        let scales: Vec<f64> = bundle.fibers.iter().map(|f| PI * f.radius * f.radius).collect();
        Self::wire_family(bundle, basis, &scales)
    }

    /// Test line charges `c_f h_m'` with a per-fiber factor `c_f`.
    pub fn wire_weighted_tests(bundle: &WireBundle, basis: &WireHatBasis, factors: &[f64]) -> Self {
        Self::wire_family(bundle, basis, factors)
    }

    fn wire_family(bundle: &WireBundle, basis: &WireHatBasis, scales: &[f64]) -> Self {
        let mut per_segment: BTreeMap<(usize, usize), Vec<MapEntry>> = BTreeMap::new();
        for d in 0..basis.len() {
            let fiber = basis.dofs[d].fiber;
            for (seg, slope) in basis.derivative(d) {
                per_segment.entry((fiber, seg)).or_default().push(MapEntry {
                    local: 0,
                    index: d,
                    coeff: scales[fiber] * slope,
                });
            }
        }
        let elements = per_segment
            .into_iter()
            .map(|((fiber, seg), map)| {
                let f = &bundle.fibers[fiber];
                let (a, b) = (f.nodes[seg], f.nodes[seg + 1]);
                Element {
                    shape: Shape::Seg(Seg {
                        a,
                        b,
                        length: (b - a).norm(),
                        radius: f.radius,
                        fiber,
                    }),
                    map,
                }
            })
            .collect();
        Self {
            kind: FamilyKind::WireHat,
            size: basis.len(),
            elements,
        }
    }
}

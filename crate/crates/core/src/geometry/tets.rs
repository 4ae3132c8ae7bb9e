use std::collections::BTreeMap;

use nalgebra::SymmetricEigen;

use super::{GeometryError, Mat3, NestedHeadModel, Vec3};

/// Tetrahedral region with a conductivity tensor per tet.
#[derive(Debug, Clone, PartialEq)]
pub struct TetRegion {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub sigma: Vec<Mat3>,
    pub host_layer: usize,
}

/// A face of the region, shared by one (boundary) or two (interior) tets.
#[derive(Debug, Clone, PartialEq)]
pub struct TetFace {
    /// Sorted vertex indices.
    pub vertices: [usize; 3],
    /// `(tet, local vertex opposite to the face)`; the first entry is the
    /// plus side.
    pub sides: Vec<(usize, usize)>,
}

impl TetFace {
    pub fn is_boundary(&self) -> bool {
        self.sides.len() == 1
    }
}

/// Face of local tet vertex `k`'s opposite side, listed so that the face
/// normal from the right-hand rule points out of a positively oriented tet.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

impl TetRegion {
    /// Validates tensors (symmetric positive definite) and volumes.
    /// Negatively oriented tets are repaired by swapping two vertices.
    pub fn new(
        vertices: Vec<Vec3>,
        mut tets: Vec<[usize; 4]>,
        sigma: Vec<Mat3>,
        host_layer: usize,
    ) -> Result<Self, GeometryError> {
        if sigma.len() != tets.len() {
            return Err(GeometryError::InvalidParameter(format!(
                "{} tets but {} tensors",
                tets.len(),
                sigma.len()
            )));
        }
        let scale = bbox_diagonal(&vertices).max(f64::MIN_POSITIVE);
        for (k, t) in tets.iter_mut().enumerate() {
            for &i in t.iter() {
                if i >= vertices.len() {
                    return Err(GeometryError::IndexOutOfRange {
                        index: i,
                        count: vertices.len(),
                    });
                }
            }
            let v = signed_tet_volume(&t.map(|i| vertices[i]));
            if v.abs() <= 1e-14 * scale.powi(3) {
                return Err(GeometryError::ZeroVolumeTet(k));
            }
            if v < 0.0 {
                t.swap(2, 3);
            }
        }
        for (k, s) in sigma.iter().enumerate() {
            let asym = (s - s.transpose()).norm();
            if asym > 1e-12 * s.norm() {
                return Err(GeometryError::InvalidParameter(format!(
                    "tensor of tet {k} is not symmetric"
                )));
            }
            let min = SymmetricEigen::new(*s).eigenvalues.min();
            if !(min > 0.0) {
                return Err(GeometryError::TensorNotPositiveDefinite {
                    tet: k,
                    eigenvalue: min,
                });
            }
        }
        Ok(Self {
            vertices,
            tets,
            sigma,
            host_layer,
        })
    }

    pub fn corners(&self, tet: usize) -> [Vec3; 4] {
        self.tets[tet].map(|i| self.vertices[i])
    }

    pub fn tet_volume(&self, tet: usize) -> f64 {
        signed_tet_volume(&self.corners(tet))
    }

    pub fn volume(&self) -> f64 {
        (0..self.tets.len()).map(|k| self.tet_volume(k)).sum()
    }

    pub fn centroid(&self, tet: usize) -> Vec3 {
        self.corners(tet).iter().sum::<Vec3>() / 4.0
    }

    /// All faces in deterministic (sorted vertex key) order.
    pub fn faces(&self) -> Vec<TetFace> {
        let mut map: BTreeMap<[usize; 3], Vec<(usize, usize)>> = BTreeMap::new();
        for (k, t) in self.tets.iter().enumerate() {
            for (opp, f) in TET_FACES.iter().enumerate() {
                let mut key = f.map(|i| t[i]);
                key.sort_unstable();
                map.entry(key).or_default().push((k, opp));
            }
        }
        map.into_iter()
            .map(|(vertices, sides)| TetFace { vertices, sides })
            .collect()
    }

    pub fn interior_face_count(&self) -> usize {
        self.faces().iter().filter(|f| !f.is_boundary()).count()
    }

    /// Checks that every tet centroid lies inside the host compartment.
    pub fn check_host(&self, model: &NestedHeadModel) -> Result<(), GeometryError> {
        model.check_layer(self.host_layer)?;
        for k in 0..self.tets.len() {
            let c = self.centroid(k);
            if model.compartment_of(&c) != Some(self.host_layer) {
                return Err(GeometryError::InvalidParameter(format!(
                    "tet {k} centroid outside compartment {}",
                    self.host_layer
                )));
            }
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        bbox(&self.vertices)
    }
}

pub(crate) fn signed_tet_volume(v: &[Vec3; 4]) -> f64 {
    (v[1] - v[0]).dot(&(v[2] - v[0]).cross(&(v[3] - v[0]))) / 6.0
}

pub(crate) fn bbox(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

fn bbox_diagonal(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (lo, hi) = bbox(points);
    (hi - lo).norm()
}

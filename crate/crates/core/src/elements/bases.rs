//! Basis families: linear hats on surface vertices, face-based
//! divergence-conforming functions on tets, and linear hats on fiber nodes.

use super::kernels::Tri;
use super::ElementError;
use crate::geometry::{TetRegion, TriangleSurface, Vec3, WireBundle, TET_FACES};

const SUPPORT_TOL: f64 = 1e-9;

/// One degree of freedom per surface vertex.
#[derive(Debug, Clone)]
pub struct PyramidBasis {
    pub tris: Vec<Tri>,
    pub triangles: Vec<[usize; 3]>,
    pub vertex_count: usize,
}

impl PyramidBasis {
    pub fn new(surface: &TriangleSurface) -> Result<Self, ElementError> {
        let tris = surface
            .triangles
            .iter()
            .map(|t| Tri::new(surface.corners(t)))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            tris,
            triangles: surface.triangles.clone(),
            vertex_count: surface.vertices.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.vertex_count
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_count == 0
    }

    /// Triangle holding `r` and its barycentric coordinates.
    fn locate(&self, r: &Vec3) -> Option<(usize, [f64; 3])> {
        self.tris.iter().enumerate().find_map(|(k, t)| {
            let off = t.normal.dot(&(r - t.v[0])).abs();
            let b = t.barycentric(r);
            (off <= SUPPORT_TOL * t.diameter && b.iter().all(|&x| x >= -SUPPORT_TOL)).then_some((k, b))
        })
    }

    /// Value of the hat of `vertex` at a surface point.
    pub fn eval(&self, vertex: usize, r: &Vec3) -> Result<f64, ElementError> {
        let (k, b) = self.locate(r).ok_or(ElementError::OutsideSupport)?;
        match self.triangles[k].iter().position(|&v| v == vertex) {
            Some(local) => Ok(b[local].clamp(0.0, 1.0)),
            None => {
                // r may sit on an edge shared with a supporting triangle
                for (j, t) in self.triangles.iter().enumerate() {
                    if let Some(local) = t.iter().position(|&v| v == vertex) {
                        let tri = &self.tris[j];
                        let bj = tri.barycentric(r);
                        let off = tri.normal.dot(&(r - tri.v[0])).abs();
                        if off <= SUPPORT_TOL * tri.diameter && bj.iter().all(|&x| x >= -SUPPORT_TOL) {
                            return Ok(bj[local].clamp(0.0, 1.0));
                        }
                    }
                }
                Err(ElementError::OutsideSupport)
            }
        }
    }

    /// `int p_m dS` for every vertex.
    pub fn integrals(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.vertex_count];
        for (t, tri) in self.triangles.iter().zip(&self.tris) {
            for &v in t {
                w[v] += tri.area / 3.0;
            }
        }
        w
    }
}

/// Convenience wrapper matching the operation name used in the docs.
pub fn pyramid_eval(basis: &PyramidBasis, vertex: usize, r: &Vec3) -> Result<f64, ElementError> {
    basis.eval(vertex, r)
}

/// One face-based degree of freedom. `plus` is the tet the function points
/// out of; `minus` is absent on region-boundary faces (half functions).
#[derive(Debug, Clone, PartialEq)]
pub struct SwgDof {
    pub face: [usize; 3],
    pub area: f64,
    /// Unit normal from the plus tet towards the minus side.
    pub normal: Vec3,
    pub plus: (usize, Vec3, f64),
    pub minus: Option<(usize, Vec3, f64)>,
}

impl SwgDof {
    /// `(tet, free vertex, volume, sign)` for each supporting tet.
    pub fn sides(&self) -> impl Iterator<Item = (usize, Vec3, f64, f64)> + '_ {
        std::iter::once((self.plus.0, self.plus.1, self.plus.2, 1.0))
            .chain(self.minus.iter().map(|&(t, v, vol)| (t, v, vol, -1.0)))
    }
}

/// Divergence-conforming basis with unit flux through each defining face:
/// `f = +/-(r - v)/(3 V)` in the two adjacent tets, divergence `+/-1/V`.
#[derive(Debug, Clone)]
pub struct SwgBasis {
    pub dofs: Vec<SwgDof>,
    /// DoFs touching each tet, with sign.
    pub tet_dofs: Vec<Vec<(usize, f64)>>,
}

impl SwgBasis {
    pub fn new(region: &TetRegion) -> Self {
        let mut dofs = Vec::new();
        let mut tet_dofs = vec![Vec::new(); region.tets.len()];
        for face in region.faces() {
            let (t0, opp0) = face.sides[0];
            let corners = region.corners(t0);
            let fv = TET_FACES[opp0].map(|i| corners[i]);
            let c = (fv[1] - fv[0]).cross(&(fv[2] - fv[0]));
            let area = 0.5 * c.norm();
            let normal = c.normalize();
            let plus = (t0, corners[opp0], region.tet_volume(t0));
            let minus = face
                .sides
                .get(1)
                .map(|&(t1, opp1)| (t1, region.corners(t1)[opp1], region.tet_volume(t1)));
            let id = dofs.len();
            tet_dofs[t0].push((id, 1.0));
            if let Some((t1, _, _)) = minus {
                tet_dofs[t1].push((id, -1.0));
            }
            dofs.push(SwgDof {
                face: face.vertices,
                area,
                normal,
                plus,
                minus,
            });
        }
        Self { dofs, tet_dofs }
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Value at `r`, which must lie in one of the supporting tets.
    pub fn eval(&self, region: &TetRegion, dof: usize, r: &Vec3) -> Result<Vec3, ElementError> {
        let d = &self.dofs[dof];
        for (tet, v, vol, sign) in d.sides() {
            if tet_contains(&region.corners(tet), r) {
                return Ok((r - v) * (sign / (3.0 * vol)));
            }
        }
        Err(ElementError::OutsideSupport)
    }

    /// Divergence in `tet`.
    pub fn div(&self, dof: usize, tet: usize) -> Result<f64, ElementError> {
        self.dofs[dof]
            .sides()
            .find(|s| s.0 == tet)
            .map(|(_, _, vol, sign)| sign / vol)
            .ok_or(ElementError::OutsideSupport)
    }
}

pub fn swg_eval(basis: &SwgBasis, region: &TetRegion, dof: usize, r: &Vec3) -> Result<Vec3, ElementError> {
    basis.eval(region, dof, r)
}

pub fn swg_div(basis: &SwgBasis, dof: usize, tet: usize) -> Result<f64, ElementError> {
    basis.div(dof, tet)
}

fn tet_contains(v: &[Vec3; 4], r: &Vec3) -> bool {
    let vol = (v[1] - v[0]).dot(&(v[2] - v[0]).cross(&(v[3] - v[0])));
    TET_FACES.iter().enumerate().all(|(_, f)| {
        let n = (v[f[1]] - v[f[0]]).cross(&(v[f[2]] - v[f[0]]));
        n.dot(&(r - v[f[0]])) <= SUPPORT_TOL * vol.abs()
    })
}

/// Hat on an interior fiber node; vanishes at both fiber tips.
#[derive(Debug, Clone, PartialEq)]
pub struct WireHatDof {
    pub fiber: usize,
    /// Node index within the fiber (1..nodes-1).
    pub node: usize,
}

#[derive(Debug, Clone)]
pub struct WireHatBasis {
    pub dofs: Vec<WireHatDof>,
    /// Cumulative arclength per fiber node.
    arclengths: Vec<Vec<f64>>,
}

impl WireHatBasis {
    pub fn new(bundle: &WireBundle) -> Self {
        let mut dofs = Vec::new();
        for (f, fiber) in bundle.fibers.iter().enumerate() {
            for node in 1..fiber.nodes.len() - 1 {
                dofs.push(WireHatDof { fiber: f, node });
            }
        }
        Self {
            dofs,
            arclengths: bundle.fibers.iter().map(|f| f.arclengths()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Value at arclength `s` along the DoF's fiber.
    pub fn eval(&self, dof: usize, s: f64) -> Result<f64, ElementError> {
        let d = &self.dofs[dof];
        let a = &self.arclengths[d.fiber];
        let (lo, mid, hi) = (a[d.node - 1], a[d.node], a[d.node + 1]);
        let tol = SUPPORT_TOL * (hi - lo);
        if s < lo - tol || s > hi + tol {
            return Err(ElementError::OutsideSupport);
        }
        Ok(if s <= mid {
            ((s - lo) / (mid - lo)).clamp(0.0, 1.0)
        } else {
            ((hi - s) / (hi - mid)).clamp(0.0, 1.0)
        })
    }

    /// `(segment index, constant derivative)` on the two supporting segments.
    pub fn derivative(&self, dof: usize) -> [(usize, f64); 2] {
        let d = &self.dofs[dof];
        let a = &self.arclengths[d.fiber];
        [
            (d.node - 1, 1.0 / (a[d.node] - a[d.node - 1])),
            (d.node, -1.0 / (a[d.node + 1] - a[d.node])),
        ]
    }
}

pub fn wire_hat_eval(basis: &WireHatBasis, dof: usize, arclength: f64) -> Result<f64, ElementError> {
    basis.eval(dof, arclength)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::quadrature::tri_quadrature;
    use crate::geometry::{generate_ball_tets, generate_sphere_surface, Fiber, Mat3};
    use proptest::prelude::*;

    #[test]
    fn pyramid_own_vertex_and_partition_of_unity() {
        let s = generate_sphere_surface(1.0, 1);
        let b = PyramidBasis::new(&s).unwrap();
        for v in 0..s.vertices.len() {
            assert!((b.eval(v, &s.vertices[v]).unwrap() - 1.0).abs() < 1e-12);
        }
        let t = &b.tris[7];
        let r = t.point(0.2, 0.3);
        let sum: f64 = s.triangles[7].iter().map(|&v| b.eval(v, &r).unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let far_vertex = (0..s.vertices.len()).find(|v| !s.triangles[7].contains(v)).unwrap();
        let in_support = s.triangles.iter().any(|t| {
            t.contains(&far_vertex) && {
                let tri = Tri::new(s.corners(t)).unwrap();
                tri.barycentric(&r).iter().all(|&x| x >= -1e-9)
            }
        });
        if !in_support {
            assert_eq!(b.eval(far_vertex, &r), Err(ElementError::OutsideSupport));
        }
    }

    fn ball() -> TetRegion {
        generate_ball_tets(1.0, 0.6, Mat3::identity()).unwrap()
    }

    #[test]
    fn unit_flux_normalization() {
        let region = ball();
        let basis = SwgBasis::new(&region);
        let q = tri_quadrature(2).unwrap();
        for (i, d) in basis.dofs.iter().enumerate().step_by(7) {
            let fv = d.face.map(|k| region.vertices[k]);
            let tri = Tri::new(fv).unwrap();
            // evaluate just inside the plus tet
            let c = region.centroid(d.plus.0);
            let flux: f64 = q
                .points
                .iter()
                .zip(&q.weights)
                .map(|(p, w)| {
                    let r = tri.point(p[0], p[1]);
                    let r_in = r + (c - r) * 1e-9;
                    2.0 * tri.area * w * basis.eval(&region, i, &r_in).unwrap().dot(&d.normal)
                })
                .sum();
            assert!((flux - 1.0).abs() < 1e-6, "dof {i}: {flux}");
        }
    }

    #[test]
    fn divergence_theorem_per_tet() {
        let region = ball();
        let basis = SwgBasis::new(&region);
        for (i, d) in basis.dofs.iter().enumerate().step_by(5) {
            for (tet, _, vol, sign) in d.sides() {
                // net outward flux of the function from this tet is +/-1
                let div = basis.div(i, tet).unwrap();
                assert!((div * vol - sign).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_tet_centroid_value() {
        let region = TetRegion::new(
            vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()],
            vec![[0, 1, 2, 3]],
            vec![Mat3::identity()],
            1,
        )
        .unwrap();
        let basis = SwgBasis::new(&region);
        let dof = basis.dofs.iter().position(|d| d.face == [1, 2, 3]).unwrap();
        // face opposite the origin: f(r) = r / (3 V) = 2 r
        let c = Vec3::repeat(0.25);
        let f = basis.eval(&region, dof, &c).unwrap();
        assert!((f - Vec3::repeat(0.5)).norm() < 1e-15);
        assert!(basis.dofs[dof].minus.is_none());
    }

    proptest! {
        #[test]
        fn normal_component_continuous(seed in 0usize..1000, a in 0.05f64..0.9, b in 0.05f64..0.9) {
            prop_assume!(a + b < 0.95);
            let region = ball();
            let basis = SwgBasis::new(&region);
            let interior: Vec<usize> = (0..basis.len()).filter(|&i| basis.dofs[i].minus.is_some()).collect();
            let i = interior[seed % interior.len()];
            let d = &basis.dofs[i];
            let fv = d.face.map(|k| region.vertices[k]);
            let r = fv[0] + (fv[1] - fv[0]) * a + (fv[2] - fv[0]) * b;
            let fp = (r - d.plus.1) / (3.0 * d.plus.2);
            let (_, vm, volm) = d.minus.unwrap();
            let fm = -(r - vm) / (3.0 * volm);
            prop_assert!((fp.dot(&d.normal) - fm.dot(&d.normal)).abs() < 1e-13 * fp.norm().max(1.0));
        }
    }

    #[test]
    fn wire_hats() {
        let bundle = WireBundle::new(
            vec![Fiber {
                nodes: vec![Vec3::zeros(), Vec3::new(0.0, 0.0, 1.0)],
                radius: 0.01,
                sigma_l: 1.0,
            }],
            1,
            Some(0.25),
        )
        .unwrap();
        let b = WireHatBasis::new(&bundle);
        assert_eq!(b.len(), 3);
        assert_eq!(b.eval(0, 0.25).unwrap(), 1.0);
        assert!((b.eval(0, 0.125).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(b.eval(0, 0.0).unwrap(), 0.0);
        assert_eq!(b.eval(2, 1.0).unwrap(), 0.0);
        assert_eq!(b.eval(0, 0.9), Err(ElementError::OutsideSupport));
    }
}

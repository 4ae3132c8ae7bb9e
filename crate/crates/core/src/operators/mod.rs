//! Integral operators of the hybrid formulation, assembled densely.
//!
//! Conventions (`G = 1/(4 pi R)`):
//! - `S xi = int G xi dS'` and `D* xi = n . grad S xi` (principal value);
//! - `S*_v J = int grad_r G . J dV' = int G div J`, where the divergence is
//!   taken in the distributional sense (volume charge plus surface charge
//!   on the boundary of the support);
//! - vector rows are tested against `K f_m` (or `c h_m l`), which by parts
//!   becomes minus the potential tested against the corresponding charge.

mod engine;
mod family;

pub use engine::{evaluate, galerkin, project, project_functional, Functional, QuadratureOptions};
pub use family::{Element, Family, FamilyKind, MapEntry, Seg, Shape, Tet};

use nalgebra::DMatrix;

use crate::elements::{PyramidBasis, SwgBasis, WireHatBasis};
use crate::geometry::{TetRegion, WireBundle};

/// Dense block with the families it couples and its place in the global
/// layout.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBlock {
    pub matrix: DMatrix<f64>,
    pub row_kind: FamilyKind,
    pub col_kind: FamilyKind,
    pub row_offset: usize,
    pub col_offset: usize,
}

impl OperatorBlock {
    fn new(matrix: DMatrix<f64>, rows: &Family, cols: &Family) -> Self {
        Self {
            matrix,
            row_kind: rows.kind,
            col_kind: cols.kind,
            row_offset: 0,
            col_offset: 0,
        }
    }

    pub fn at(mut self, row_offset: usize, col_offset: usize) -> Self {
        self.row_offset = row_offset;
        self.col_offset = col_offset;
        self
    }
}

/// Single layer between two pyramid families.
/// Same-family blocks are symmetrized.
pub fn assemble_s(rows: &Family, cols: &Family, opts: &QuadratureOptions) -> OperatorBlock {
    let mut m = galerkin(rows, Functional::Potential, cols, opts);
    if std::ptr::eq(rows, cols) || rows == cols {
        m = (&m + m.transpose()) * 0.5;
    }
    OperatorBlock::new(m, rows, cols)
}

/// Adjoint double layer: normal derivative on the row surface.
pub fn assemble_dstar(rows: &Family, cols: &Family, opts: &QuadratureOptions) -> OperatorBlock {
    OperatorBlock::new(galerkin(rows, Functional::NormalDerivative, cols, opts), rows, cols)
}

/// Potential of volume or wire currents, tested with any scalar family
/// (`sources` from [`Family::swg_charges`] or [`Family::wire_charges`]).
pub fn assemble_sv_star(rows: &Family, sources: &Family, opts: &QuadratureOptions) -> OperatorBlock {
    OperatorBlock::new(galerkin(rows, Functional::Potential, sources, opts), rows, sources)
}

/// Normal derivative of the current potential on a pyramid row family.
pub fn assemble_dstar_v(rows: &Family, sources: &Family, opts: &QuadratureOptions) -> OperatorBlock {
    assemble_dstar(rows, sources, opts)
}

/// `int K f_m . grad S p_n`, with `rows` the weighted test charges.
pub fn assemble_grad_s(rows: &Family, cols: &Family, opts: &QuadratureOptions) -> OperatorBlock {
    let mut b = assemble_sv_star(rows, cols, opts);
    b.matrix.neg_mut();
    b
}

/// `int K f_m . grad S*_v f_n`.
pub fn assemble_grad_sv(rows: &Family, sources: &Family, opts: &QuadratureOptions) -> OperatorBlock {
    assemble_grad_s(rows, sources, opts)
}

/// Potential of the density `sum coeffs[n] s_n` at `points`.
pub fn eval_potential(
    coeffs: &[f64],
    sources: &Family,
    points: &[crate::geometry::Vec3],
    opts: &QuadratureOptions,
) -> Vec<f64> {
    evaluate(sources, coeffs, points, opts)
}

/// `int p_m p_n dS`.
pub fn pyramid_gram(basis: &PyramidBasis) -> DMatrix<f64> {
    let n = basis.len();
    let mut g = DMatrix::zeros(n, n);
    for (tri, t) in basis.tris.iter().zip(&basis.triangles) {
        for a in 0..3 {
            for b in 0..3 {
                let f = if a == b { 2.0 } else { 1.0 };
                g[(t[a], t[b])] += tri.area * f / 12.0;
            }
        }
    }
    g
}

/// `int f_m . f_n dV`, exact for the linear fields.
pub fn swg_gram(region: &TetRegion, basis: &SwgBasis) -> DMatrix<f64> {
    let n = basis.len();
    let mut g = DMatrix::zeros(n, n);
    let q = crate::elements::tet_quadrature(2).expect("order 2 rule");
    for (t, dofs) in basis.tet_dofs.iter().enumerate() {
        let tet = Tet::new(region.corners(t));
        let vol = tet.volume;
        let free: Vec<_> = dofs
            .iter()
            .map(|&(d, s)| {
                let dof = &basis.dofs[d];
                let v = if dof.plus.0 == t {
                    dof.plus.1
                } else {
                    dof.minus.expect("tet in support").1
                };
                (d, s, v)
            })
            .collect();
        for (p, w) in q.points.iter().zip(&q.weights) {
            let x = tet.point(p);
            let wt = 6.0 * vol * w / (9.0 * vol * vol);
            for &(dm, sm, vm) in &free {
                for &(dn, sn, vn) in &free {
                    g[(dm, dn)] += wt * sm * sn * (x - vm).dot(&(x - vn));
                }
            }
        }
    }
    g
}

/// `int h_m h_n dl` along the fibers.
pub fn wire_gram(bundle: &WireBundle, basis: &WireHatBasis) -> DMatrix<f64> {
    let n = basis.len();
    let mut g = DMatrix::zeros(n, n);
    let index: std::collections::HashMap<(usize, usize), usize> = basis
        .dofs
        .iter()
        .enumerate()
        .map(|(i, d)| ((d.fiber, d.node), i))
        .collect();
    for (f, fiber) in bundle.fibers.iter().enumerate() {
        for (s, len) in fiber.segment_lengths().into_iter().enumerate() {
            let ends = [index.get(&(f, s)), index.get(&(f, s + 1))];
            for a in 0..2 {
                for b in 0..2 {
                    if let (Some(&i), Some(&j)) = (ends[a], ends[b]) {
                        g[(i, j)] += len * if a == b { 1.0 / 3.0 } else { 1.0 / 6.0 };
                    }
                }
            }
        }
    }
    g
}

//! Kernels, quadrature and basis functions shared by the operators.

mod bases;
mod kernels;
pub mod quadrature;

pub use bases::{
    pyramid_eval, swg_div, swg_eval, wire_hat_eval, PyramidBasis, SwgBasis, SwgDof, WireHatBasis, WireHatDof,
};
pub use kernels::{
    analytic_inv_r_triangle, dipole_gradient, dipole_potential, grad_green, green, segment_grad_inv_r, segment_inv_r,
    tet_face_tris, tet_grad_inv_r, tet_grad_inv_r_faces, tet_inv_r, tet_inv_r_faces, tri_grad_inv_r, tri_inv_r,
    tri_p1_grad_inv_r, tri_p1_inv_r, Tri, FOUR_PI,
};
pub use quadrature::{segment_quadrature, tet_quadrature, tri_quadrature, QuadratureRule};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementError {
    #[error("coincident observation and source points")]
    CoincidentPoints,
    #[error("unsupported quadrature order {0} (supported: 1, 2, 3, 4, 6)")]
    UnsupportedOrder(usize),
    #[error("degenerate element")]
    DegenerateElement,
    #[error("point outside basis support")]
    OutsideSupport,
}

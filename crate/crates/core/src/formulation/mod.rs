//! Coupled surface/volume/wire system: contrast, unknown layout, assembly,
//! deflation, solution and lead fields.

mod model;
mod solver;
mod system;

pub use model::{compute_contrast, wire_contrast, ContrastField, Dipole, HybridModel, TetContrast, EPS_ACTIVE};
pub use solver::{
    compute_leadfield, compute_leadfield_with, gmres, mean_reference, solve, solve_with, ForwardSolution, Solver,
    SolverKind, DIRECT_RESIDUAL,
};
pub use system::{build_system, plan_layout, surface_coefficient, ActiveBundle, ActiveRegion, BlockSystem, DofLayout};

use thiserror::Error;

use crate::elements::ElementError;
use crate::geometry::GeometryError;

#[derive(Debug, Error, PartialEq)]
pub enum FormulationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error("degenerate interface {0}: equal conductivities on both sides")]
    DegenerateInterface(usize),
    #[error("dipole lies outside the head")]
    DipoleOutside,
    #[error("dipole lies on interface {0}")]
    DipoleOnInterface(usize),
    #[error("dipole lies inside an active contrast region")]
    DipoleInContrast,
    #[error("{what} touches interface {surface}")]
    TouchesInterface { what: String, surface: usize },
    #[error("system matrix is singular")]
    Singular,
    #[error("direct solve residual {0:.3e} exceeds 1e-10")]
    ResidualTooLarge(f64),
    #[error("iterative solver did not converge in {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

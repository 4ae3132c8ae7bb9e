//! Meshes for the head model: closed triangle surfaces, tetrahedral contrast
//! regions, wire bundles and electrodes.
//!
//! Layer indices are 1-based throughout (`1..=N`, innermost first). The
//! region outside the outermost surface is air and carries no current.

mod generate;
mod io;
mod surface;
mod tets;
mod wires;

pub use generate::{generate_ball_tets, generate_cylinder_tets, generate_radial_fibers, generate_sphere_surface};
pub use io::{
    load_electrodes, load_surface_mesh, load_tet_region, load_wire_bundle, parse_electrodes, parse_surface, parse_tets,
    parse_wires, write_electrodes, write_surface, write_tets, write_wires,
};
pub use surface::{validate_nesting, ElectrodeSet, NestedHeadModel, NestingReport, PairContainment, TriangleSurface};
pub use tets::{TetFace, TetRegion, TET_FACES};
pub use wires::{Fiber, WireBundle};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Default electrode snapping tolerance (meters).
pub const DEFAULT_SNAP_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("open mesh: {0} boundary edges")]
    OpenMesh(usize),
    #[error("non-manifold edge ({0}, {1}) shared by {2} triangles")]
    NonManifold(usize, usize, usize),
    #[error("mixed triangle orientation not fixable by a global flip")]
    MixedOrientation,
    #[error("surface is not genus-0 (Euler characteristic {0})")]
    NotGenusZero(i64),
    #[error("index {index} out of range ({count} vertices)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),
    #[error("tensor not positive definite (tet {tet}, smallest eigenvalue {eigenvalue})")]
    TensorNotPositiveDefinite { tet: usize, eigenvalue: f64 },
    #[error("zero-volume tet {0}")]
    ZeroVolumeTet(usize),
    #[error("fiber {0} has fewer than 2 nodes")]
    ShortFiber(usize),
    #[error("fiber {0}: non-positive radius")]
    NonPositiveRadius(usize),
    #[error("fiber {0}: non-positive longitudinal conductivity")]
    NonPositiveFiberConductivity(usize),
    #[error("fiber {fiber}: zero-length segment at node {node}")]
    ZeroLengthSegment { fiber: usize, node: usize },
    #[error("conductivity of layer {0} must be positive")]
    NonPositiveConductivity(usize),
    #[error("{surfaces} surfaces but {conductivities} conductivities")]
    LayerCountMismatch { surfaces: usize, conductivities: usize },
    #[error("head model needs at least one surface")]
    EmptyModel,
    #[error("layer index {0} outside 1..={1}")]
    BadLayer(usize, usize),
    #[error("electrode '{label}' is {distance:.4e} m from the outer surface (tolerance {tolerance:.1e})")]
    ElectrodeTooFar {
        label: String,
        distance: f64,
        tolerance: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

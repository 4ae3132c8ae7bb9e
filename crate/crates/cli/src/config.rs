//! Run configuration: a TOML file with the sections described in the README.
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use hybem::analytic::LayeredSphereModel;
use hybem::elements::{segment_quadrature, tet_quadrature, tri_quadrature};
use hybem::formulation::{Dipole, SolverKind};
use hybem::geometry::{Vec3, DEFAULT_SNAP_TOLERANCE};
use hybem::operators::QuadratureOptions;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    head: RawHead,
    #[serde(default)]
    tets: Vec<RawTets>,
    #[serde(default)]
    wires: Vec<RawWires>,
    #[serde(default)]
    electrodes: RawElectrodes,
    #[serde(default)]
    sources: RawSources,
    #[serde(default)]
    solver: RawSolver,
    validation: Option<RawValidation>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHead {
    conductivities: Vec<f64>,
    surfaces: Option<Vec<PathBuf>>,
    sphere_radii: Option<Vec<f64>>,
    sphere_level: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTets {
    file: PathBuf,
    host_layer: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWires {
    file: PathBuf,
    host_layer: usize,
    max_segment_length: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElectrodes {
    file: Option<PathBuf>,
    snap_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSources {
    #[serde(default)]
    dipoles: Vec<[f64; 6]>,
    #[serde(default)]
    positions: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSolver {
    method: Method,
    tolerance: f64,
    restart: usize,
    max_iterations: usize,
    quadrature_order: usize,
    threads: usize,
}

impl Default for RawSolver {
    fn default() -> Self {
        let q = QuadratureOptions::default();
        let SolverKind::Iterative { tol, restart, max_iter } = SolverKind::iterative() else {
            unreachable!()
        };
        Self {
            method: Method::Direct,
            tolerance: tol,
            restart,
            max_iterations: max_iter,
            quadrature_order: q.tri_order,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Radial,
    Tangential,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValidation {
    eccentricities_pct: Option<Vec<f64>>,
    axis: Option<[f64; 3]>,
    orientations: Option<Vec<Orientation>>,
    max_relative_error_pct: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub solver: Option<Method>,
    pub quadrature_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeadSource {
    Meshes(Vec<PathBuf>),
    Spheres { radii: Vec<f64>, level: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub eccentricities_pct: Vec<f64>,
    pub axis: Vec3,
    pub orientations: Vec<Orientation>,
    pub max_relative_error_pct: f64,
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub head: HeadSource,
    pub conductivities: Vec<f64>,
    pub tets: Vec<(PathBuf, usize)>,
    pub wires: Vec<(PathBuf, usize, Option<f64>)>,
    pub electrodes: Option<PathBuf>,
    pub snap_tolerance: f64,
    pub dipoles: Vec<Dipole>,
    pub positions: Vec<Vec3>,
    pub solver: SolverKind,
    pub quadrature: QuadratureOptions,
    pub threads: usize,
    pub validation: Option<Validation>,
    pub output: PathBuf,
    /// Hex SHA-256 of the config text and the result-relevant overrides.
    pub hash: String,
}

/// Default sweep: 5% to 95% in steps of 5%.
pub fn default_eccentricities() -> Vec<f64> {
    (1..=19).map(|k| 5.0 * k as f64).collect()
}

fn cfg(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base, overrides)
    }

    pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| cfg(e.to_string()))?;
        let resolve = |p: &PathBuf| -> Result<PathBuf, CliError> {
            let full = if p.is_absolute() { p.clone() } else { base.join(p) };
            if !full.is_file() {
                return Err(cfg(format!("file not found: {}", full.display())));
            }
            Ok(full)
        };

        let h = &raw.head;
        if h.conductivities.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(cfg("head.conductivities must be positive"));
        }
        let head = match (&h.surfaces, &h.sphere_radii) {
            (Some(files), None) => {
                if h.sphere_level.is_some() {
                    return Err(cfg("head.sphere_level requires head.sphere_radii"));
                }
                HeadSource::Meshes(files.iter().map(resolve).collect::<Result<_, _>>()?)
            }
            (None, Some(radii)) => {
                LayeredSphereModel::new(radii.clone(), h.conductivities.clone())
                    .map_err(|e| cfg(format!("head: {e}")))?;
                let level = h
                    .sphere_level
                    .ok_or_else(|| cfg("head.sphere_level is required with sphere_radii"))?;
                if level > 6 {
                    return Err(cfg("head.sphere_level must be at most 6"));
                }
                HeadSource::Spheres {
                    radii: radii.clone(),
                    level,
                }
            }
            _ => return Err(cfg("head needs exactly one of 'surfaces' or 'sphere_radii'")),
        };
        let layers = match &head {
            HeadSource::Meshes(f) => f.len(),
            HeadSource::Spheres { radii, .. } => radii.len(),
        };
        if layers == 0 || layers != h.conductivities.len() {
            return Err(cfg("head needs one conductivity per surface"));
        }
        let check_layer = |what: &str, l: usize| {
            if (1..=layers).contains(&l) {
                Ok(l)
            } else {
                Err(cfg(format!("{what}.host_layer must be in 1..={layers}")))
            }
        };
        let tets = raw
            .tets
            .iter()
            .map(|t| Ok((resolve(&t.file)?, check_layer("tets", t.host_layer)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let wires = raw
            .wires
            .iter()
            .map(|w| {
                if w.max_segment_length.is_some_and(|l| !(l > 0.0)) {
                    return Err(cfg("wires.max_segment_length must be positive"));
                }
                Ok((
                    resolve(&w.file)?,
                    check_layer("wires", w.host_layer)?,
                    w.max_segment_length,
                ))
            })
            .collect::<Result<Vec<_>, CliError>>()?;

        let electrodes = raw.electrodes.file.as_ref().map(resolve).transpose()?;
        let snap_tolerance = raw.electrodes.snap_tolerance.unwrap_or(DEFAULT_SNAP_TOLERANCE);
        if !(snap_tolerance >= 0.0) {
            return Err(cfg("electrodes.snap_tolerance must be non-negative"));
        }

        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !raw.sources.dipoles.iter().all(|d| finite(d)) || !raw.sources.positions.iter().all(|p| finite(p)) {
            return Err(cfg("sources must be finite"));
        }
        let dipoles: Vec<Dipole> = raw
            .sources
            .dipoles
            .iter()
            .map(|d| Dipole::new(Vec3::new(d[0], d[1], d[2]), Vec3::new(d[3], d[4], d[5])))
            .collect();
        let positions = raw
            .sources
            .positions
            .iter()
            .map(|p| Vec3::new(p[0], p[1], p[2]))
            .collect();

        let s = &raw.solver;
        let method = overrides.solver.unwrap_or(s.method);
        let solver = match method {
            Method::Direct => SolverKind::Direct,
            Method::Iterative => {
                if !(s.tolerance > 0.0) || s.restart == 0 || s.max_iterations == 0 {
                    return Err(cfg("solver.tolerance, restart and max_iterations must be positive"));
                }
                SolverKind::Iterative {
                    tol: s.tolerance,
                    restart: s.restart,
                    max_iter: s.max_iterations,
                }
            }
        };
        let order = overrides.quadrature_order.unwrap_or(s.quadrature_order);
        if tri_quadrature(order).is_err() || tet_quadrature(order).is_err() || segment_quadrature(order).is_err() {
            return Err(cfg(format!("unsupported quadrature order {order}")));
        }
        let quadrature = QuadratureOptions {
            tri_order: order,
            tet_order: order,
            seg_order: order,
            ..QuadratureOptions::default()
        };

        let validation = raw
            .validation
            .as_ref()
            .map(|v| -> Result<Validation, CliError> {
                let ecc = v.eccentricities_pct.clone().unwrap_or_else(default_eccentricities);
                if ecc.is_empty() || ecc.iter().any(|e| !(0.0..100.0).contains(e)) {
                    return Err(cfg("validation.eccentricities_pct must lie in [0, 100)"));
                }
                let axis = Vec3::from(v.axis.unwrap_or([0.0, 0.0, 1.0]));
                if !(axis.norm() > 0.0) {
                    return Err(cfg("validation.axis must be non-zero"));
                }
                let orientations = v
                    .orientations
                    .clone()
                    .unwrap_or_else(|| vec![Orientation::Radial, Orientation::Tangential]);
                if orientations.is_empty() {
                    return Err(cfg("validation.orientations must not be empty"));
                }
                if !(v.max_relative_error_pct > 0.0) {
                    return Err(cfg("validation.max_relative_error_pct must be positive"));
                }
                Ok(Validation {
                    eccentricities_pct: ecc,
                    axis: axis.normalize(),
                    orientations,
                    max_relative_error_pct: v.max_relative_error_pct,
                })
            })
            .transpose()?;

        let output = overrides
            .output
            .clone()
            .or_else(|| raw.output.directory.as_ref().map(|d| base.join(d)))
            .unwrap_or_else(|| PathBuf::from("."));

        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        hasher.update(format!("\nsolver={method:?}\nquadrature_order={order}\n").as_bytes());
        let hash = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();

        Ok(Self {
            head,
            conductivities: h.conductivities.clone(),
            tets,
            wires,
            electrodes,
            snap_tolerance,
            dipoles,
            positions,
            solver,
            quadrature,
            threads: overrides.threads.unwrap_or(s.threads),
            validation,
            output,
            hash,
        })
    }
}

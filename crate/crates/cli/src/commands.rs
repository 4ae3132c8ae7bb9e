//! The four verbs. Each returns the paths it wrote (or the report it printed).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use hybem::analytic::{analytic_layered_sphere, relative_error, LayeredSphereModel};
use hybem::formulation::{
    build_system, compute_leadfield_with, mean_reference, plan_layout, solve_with, BlockSystem, Dipole,
    FormulationError, HybridModel, Solver,
};
use hybem::geometry::{
    generate_sphere_surface, load_electrodes, load_surface_mesh, load_tet_region, load_wire_bundle, validate_nesting,
    ElectrodeSet, NestedHeadModel, TriangleSurface, Vec3,
};

use crate::config::{HeadSource, Orientation, RunConfig};
use crate::output::{write_csv, write_text};
use crate::CliError;

/// Moment used for the validation sweep (A m); the error is scale free.
const SWEEP_MOMENT: f64 = 1e-8;

fn cfg(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn stage(stage: &'static str) -> impl Fn(FormulationError) -> CliError {
    move |source| CliError::Solver { stage, source }
}

fn load_head(c: &RunConfig) -> Result<NestedHeadModel, CliError> {
    let surfaces: Vec<TriangleSurface> = match &c.head {
        HeadSource::Meshes(files) => files
            .iter()
            .enumerate()
            .map(|(k, f)| load_surface_mesh(f, k + 1).map_err(|e| cfg(format!("{}: {e}", f.display()))))
            .collect::<Result<_, _>>()?,
        HeadSource::Spheres { radii, level } => radii.iter().map(|&r| generate_sphere_surface(r, *level)).collect(),
    };
    let head = NestedHeadModel::new(surfaces, c.conductivities.clone()).map_err(cfg)?;
    let failures = validate_nesting(&head).failures();
    if !failures.is_empty() {
        return Err(cfg(format!("surfaces are not nested: {}", failures.join("; "))));
    }
    Ok(head)
}

/// Head model with all configured tet regions and wire bundles.
pub fn load_model(c: &RunConfig) -> Result<HybridModel, CliError> {
    let head = load_head(c)?;
    let regions = c
        .tets
        .iter()
        .map(|(f, host)| load_tet_region(f, *host).map_err(|e| cfg(format!("{}: {e}", f.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    let bundles = c
        .wires
        .iter()
        .map(|(f, host, max)| load_wire_bundle(f, *host, *max).map_err(|e| cfg(format!("{}: {e}", f.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    HybridModel::new(head, regions, bundles).map_err(cfg)
}

/// Configured electrodes snapped to the scalp, or the scalp vertices.
pub fn load_electrode_set(c: &RunConfig, model: &HybridModel) -> Result<ElectrodeSet, CliError> {
    let scalp = model.head.as_ref().expect("head model").outer();
    match &c.electrodes {
        Some(f) => load_electrodes(f, scalp, c.snap_tolerance).map_err(|e| cfg(format!("{}: {e}", f.display()))),
        None => Ok(ElectrodeSet::from_vertices(scalp)),
    }
}

struct Prepared {
    system: BlockSystem,
    assembly: Duration,
}

fn assemble(c: &RunConfig, model: &HybridModel) -> Result<Prepared, CliError> {
    let t = Instant::now();
    let mut system = build_system(model, &c.quadrature).map_err(stage("assembly"))?;
    system.deflate();
    Ok(Prepared {
        system,
        assembly: t.elapsed(),
    })
}

fn check_sources(system: &BlockSystem, dipoles: &[Dipole]) -> Result<(), CliError> {
    for (k, d) in dipoles.iter().enumerate() {
        system
            .source_sigma(d)
            .map_err(|e| cfg(format!("source {k} at {:?}: {e}", d.position.as_slice())))?;
    }
    Ok(())
}

fn electrode_rows(electrodes: &ElectrodeSet, values: &[Vec<f64>]) -> Vec<Vec<String>> {
    (0..electrodes.len())
        .map(|i| {
            let mut row = vec![i.to_string(), electrodes.labels[i].clone()];
            row.extend(values.iter().map(|col| col[i].to_string()));
            row
        })
        .collect()
}

/// Mean-referenced electrode potentials (mV), one CSV per dipole.
pub fn cmd_solve(c: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    if c.dipoles.is_empty() {
        return Err(cfg("solve needs at least one entry in sources.dipoles"));
    }
    let model = load_model(c)?;
    let electrodes = load_electrode_set(c, &model)?;
    let Prepared { system, .. } = assemble(c, &model)?;
    check_sources(&system, &c.dipoles)?;
    let solver = Solver::new(&system.matrix, c.solver).map_err(stage("factorization"))?;
    let header = ["electrode_index", "label", "phi_mV"].map(String::from);
    let mut written = Vec::new();
    for (k, d) in c.dipoles.iter().enumerate() {
        let sol = solve_with(&system, &solver, d).map_err(stage("solve"))?;
        let mut v = sol.potential(&system, &electrodes.positions);
        mean_reference(&mut v);
        let mv: Vec<f64> = v.iter().map(|x| x * 1e3).collect();
        let rows = electrode_rows(&electrodes, &[mv]);
        written.push(write_csv(
            &c.output,
            &format!("potentials_dipole_{k}.csv"),
            &c.hash,
            &header,
            &rows,
        )?);
    }
    Ok(written)
}

/// Lead-field matrix (V per A m) plus a timing report.
pub fn cmd_leadfield(c: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let positions: Vec<Vec3> = if c.positions.is_empty() {
        c.dipoles.iter().map(|d| d.position).collect()
    } else {
        c.positions.clone()
    };
    if positions.is_empty() {
        return Err(cfg("leadfield needs sources.positions or sources.dipoles"));
    }
    let model = load_model(c)?;
    let electrodes = load_electrode_set(c, &model)?;
    let Prepared { system, assembly } = assemble(c, &model)?;
    let probes: Vec<Dipole> = positions.iter().map(|p| Dipole::new(*p, Vec3::z())).collect();
    check_sources(&system, &probes)?;
    let t = Instant::now();
    let solver = Solver::new(&system.matrix, c.solver).map_err(stage("factorization"))?;
    let factorization = t.elapsed();
    let t = Instant::now();
    let lf = compute_leadfield_with(&system, &solver, &positions, &electrodes.positions).map_err(stage("solve"))?;
    let solve = t.elapsed();

    let mut header = vec!["electrode_index".to_string(), "label".to_string()];
    for d in 0..positions.len() {
        for axis in ["x", "y", "z"] {
            header.push(format!("d{d}_{axis}_V_per_Am"));
        }
    }
    let columns: Vec<Vec<f64>> = lf.column_iter().map(|col| col.iter().copied().collect()).collect();
    let rows = electrode_rows(&electrodes, &columns);
    let csv = write_csv(&c.output, "leadfield.csv", &c.hash, &header, &rows)?;
    let report = format!(
        "unknowns {}\nelectrodes {}\ncolumns {}\nassembly_s {:.6}\nfactorization_s {:.6}\nsolve_s {:.6}\n",
        system.dimension(),
        electrodes.len(),
        lf.ncols(),
        assembly.as_secs_f64(),
        factorization.as_secs_f64(),
        solve.as_secs_f64()
    );
    print!("{report}");
    let timings = write_text(&c.output, "leadfield_timings.txt", &report)?;
    Ok(vec![csv, timings])
}

fn perpendicular(axis: &Vec3) -> Vec3 {
    let seed = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    axis.cross(&seed).normalize()
}

/// Relative error (percent) against the layered-sphere series for every
/// configured eccentricity; the worst orientation is reported.
pub fn cmd_validate_sphere(c: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let HeadSource::Spheres { radii, .. } = &c.head else {
        return Err(cfg("validate-sphere needs head.sphere_radii"));
    };
    let v = c
        .validation
        .as_ref()
        .ok_or_else(|| cfg("validate-sphere needs a [validation] section"))?;
    let sphere = LayeredSphereModel::new(radii.clone(), c.conductivities.clone()).map_err(cfg)?;
    let model = HybridModel::surface_only(load_head(c)?);
    let electrodes = load_electrode_set(c, &model)?;
    let Prepared { system, .. } = assemble(c, &model)?;
    let solver = Solver::new(&system.matrix, c.solver).map_err(stage("factorization"))?;

    let tangent = perpendicular(&v.axis);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for &e in &v.eccentricities_pct {
        let position = v.axis * (e / 100.0 * radii[0]);
        let mut worst = 0.0f64;
        for o in &v.orientations {
            let dir = match o {
                Orientation::Radial => v.axis,
                Orientation::Tangential => tangent,
            };
            let d = Dipole::new(position, dir * SWEEP_MOMENT);
            check_sources(&system, &[d])?;
            let sol = solve_with(&system, &solver, &d).map_err(stage("solve"))?;
            let num = sol.potential(&system, &electrodes.positions);
            let exact = analytic_layered_sphere(&sphere, &d, &electrodes.positions).map_err(cfg)?;
            let re = relative_error(&num, &exact).map_err(cfg)? * 100.0;
            worst = worst.max(re);
        }
        if !(worst < v.max_relative_error_pct) {
            violations.push(format!("{e}% -> {worst:.3}%"));
        }
        rows.push(vec![e.to_string(), worst.to_string()]);
    }
    let header = ["eccentricity_pct", "relative_error_pct"].map(String::from);
    let path = write_csv(&c.output, "sphere_validation.csv", &c.hash, &header, &rows)?;
    if !violations.is_empty() {
        return Err(CliError::Validation(format!(
            "relative error above {}% at {} (results in {})",
            v.max_relative_error_pct,
            violations.join(", "),
            path.display()
        )));
    }
    Ok(vec![path])
}

/// Mesh and unknown statistics.
pub fn cmd_info(c: &RunConfig) -> Result<String, CliError> {
    let model = load_model(c)?;
    let electrodes = load_electrode_set(c, &model)?;
    let layout = plan_layout(&model).map_err(cfg)?;
    let head = model.head.as_ref().expect("head model");
    let mut s = String::new();
    let _ = writeln!(s, "layers {}", head.layer_count());
    for (k, surf) in head.surfaces.iter().enumerate() {
        let _ = writeln!(
            s,
            "surface {} sigma_S_per_m {} vertices {} triangles {} mean_edge_m {:.6e}",
            k + 1,
            head.sigma[k],
            surf.vertices.len(),
            surf.triangles.len(),
            surf.mean_edge_length()
        );
    }
    for (k, r) in model.regions.iter().enumerate() {
        let _ = writeln!(
            s,
            "tet_region {k} host_layer {} vertices {} tets {} volume_m3 {:.6e}",
            r.host_layer,
            r.vertices.len(),
            r.tets.len(),
            r.volume()
        );
    }
    for (k, b) in model.bundles.iter().enumerate() {
        let segments: usize = b.fibers.iter().map(|f| f.segment_count()).sum();
        let _ = writeln!(
            s,
            "wire_bundle {k} host_layer {} fibers {} segments {segments} length_m {:.6e}",
            b.host_layer,
            b.fibers.len(),
            b.total_length()
        );
    }
    let _ = writeln!(s, "electrodes {}", electrodes.len());
    let _ = writeln!(s, "dipoles {}", c.dipoles.len());
    let _ = writeln!(
        s,
        "dofs surface {} volume {} wire {} total {}",
        layout.surface_dofs(),
        layout.volume_dofs(),
        layout.wire_dofs(),
        layout.total
    );
    Ok(s)
}

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use super::model::{ContrastField, Dipole, HybridModel};
use super::FormulationError;
use crate::elements::{dipole_gradient, dipole_potential, PyramidBasis, SwgBasis, WireHatBasis};
use crate::geometry::{Mat3, TetRegion, Vec3, WireBundle};
use crate::operators::{
    evaluate, galerkin, project_functional, pyramid_gram, swg_gram, wire_gram, Family, Functional, QuadratureOptions,
};

/// Contiguous unknown ranges: surface densities, then volume currents per
/// region, then wire currents per bundle.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DofLayout {
    pub surfaces: Vec<Range<usize>>,
    pub regions: Vec<Range<usize>>,
    pub bundles: Vec<Range<usize>>,
    pub total: usize,
}

impl DofLayout {
    pub fn surface_dofs(&self) -> usize {
        self.surfaces.iter().map(|r| r.len()).sum()
    }

    pub fn volume_dofs(&self) -> usize {
        self.regions.iter().map(|r| r.len()).sum()
    }

    pub fn wire_dofs(&self) -> usize {
        self.bundles.iter().map(|r| r.len()).sum()
    }
}

/// Discretized unknown family together with its test counterpart.
#[derive(Debug, Clone)]
pub(crate) struct Group {
    pub range: Range<usize>,
    /// Densities whose potentials make up the field.
    pub sources: Family,
    /// Test charges of the rows.
    pub tests: Family,
    pub functional: Functional,
    /// Factor of the field contributed by a unit coefficient.
    pub field_factor: f64,
    /// Diagonal term of the rows.
    pub gram: DMatrix<f64>,
    pub gram_scale: f64,
}

/// Active (non-zero contrast) part of a tet region.
#[derive(Debug, Clone)]
pub struct ActiveRegion {
    pub region: TetRegion,
    pub basis: SwgBasis,
    pub weights: Vec<Mat3>,
    pub host_sigma: f64,
}

#[derive(Debug, Clone)]
pub struct ActiveBundle {
    pub bundle: WireBundle,
    pub basis: WireHatBasis,
    pub factors: Vec<f64>,
    pub host_sigma: f64,
}

/// Global system over a [`DofLayout`] (independent of the source).
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: DMatrix<f64>,
    pub layout: DofLayout,
    /// Unit deflation vector over the outermost surface (global length).
    pub deflation: Option<DVector<f64>>,
    /// Rank-one shift applied (zero before deflation).
    pub alpha: f64,
    pub model: HybridModel,
    pub contrast: ContrastField,
    pub surface_bases: Vec<PyramidBasis>,
    pub regions: Vec<ActiveRegion>,
    pub bundles: Vec<ActiveBundle>,
    pub options: QuadratureOptions,
    pub(crate) groups: Vec<Group>,
}

/// Coefficient of the Gram term in the rows of surface `i` (1-based).
pub fn surface_coefficient(model: &HybridModel, i: usize) -> Result<f64, FormulationError> {
    let (a, b) = (model.sigma_of(i), model.sigma_of(i + 1));
    if a == b {
        return Err(FormulationError::DegenerateInterface(i));
    }
    Ok((a + b) / (2.0 * (b - a)))
}

fn active_region(
    region: &TetRegion,
    contrast: &[super::model::TetContrast],
    host_sigma: f64,
) -> Result<Option<ActiveRegion>, FormulationError> {
    let keep: Vec<usize> = (0..region.tets.len()).filter(|&t| contrast[t].active).collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let sub = TetRegion::new(
        region.vertices.clone(),
        keep.iter().map(|&t| region.tets[t]).collect(),
        keep.iter().map(|&t| region.sigma[t]).collect(),
        region.host_layer,
    )?;
    let basis = SwgBasis::new(&sub);
    Ok(Some(ActiveRegion {
        weights: keep.iter().map(|&t| contrast[t].weight).collect(),
        region: sub,
        basis,
        host_sigma,
    }))
}

fn active_bundle(
    bundle: &WireBundle,
    contrast: &[(f64, bool)],
    host_sigma: f64,
) -> Result<Option<ActiveBundle>, FormulationError> {
    let keep: Vec<usize> = (0..bundle.fibers.len()).filter(|&f| contrast[f].1).collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let sub = WireBundle::new(
        keep.iter().map(|&f| bundle.fibers[f].clone()).collect(),
        bundle.host_layer,
        None,
    )?;
    let basis = WireHatBasis::new(&sub);
    if basis.is_empty() {
        return Ok(None);
    }
    Ok(Some(ActiveBundle {
        factors: keep.iter().map(|&f| contrast[f].0).collect(),
        bundle: sub,
        basis,
        host_sigma,
    }))
}

/// Unknown layout of `model` without assembling anything.
pub fn plan_layout(model: &HybridModel) -> Result<DofLayout, FormulationError> {
    let contrast = ContrastField::new(model)?;
    let mut layout = DofLayout::default();
    let mut offset = 0;
    let mut push = |len: usize| {
        let r = offset..offset + len;
        offset += len;
        r
    };
    if let Some(head) = &model.head {
        for (k, s) in head.surfaces.iter().enumerate() {
            surface_coefficient(model, k + 1)?;
            layout.surfaces.push(push(PyramidBasis::new(s)?.len()));
        }
    }
    for (region, c) in model.regions.iter().zip(&contrast.tets) {
        if let Some(a) = active_region(region, c, model.sigma_of(region.host_layer))? {
            layout.regions.push(push(a.basis.len()));
        }
    }
    for (bundle, c) in model.bundles.iter().zip(&contrast.fibers) {
        if let Some(a) = active_bundle(bundle, c, model.sigma_of(bundle.host_layer))? {
            layout.bundles.push(push(a.basis.len()));
        }
    }
    layout.total = offset;
    Ok(layout)
}

/// Assembles the coupled surface/volume/wire system (not yet deflated).
pub fn build_system(model: &HybridModel, options: &QuadratureOptions) -> Result<BlockSystem, FormulationError> {
    let contrast = ContrastField::new(model)?;
    let mut layout = DofLayout::default();
    let mut groups = Vec::new();
    let mut surface_bases = Vec::new();
    let mut offset = 0;

    if let Some(head) = &model.head {
        for (k, s) in head.surfaces.iter().enumerate() {
            let coef = surface_coefficient(model, k + 1)?;
            let basis = PyramidBasis::new(s)?;
            let family = Family::pyramids(&basis);
            let range = offset..offset + basis.len();
            offset = range.end;
            layout.surfaces.push(range.clone());
            groups.push(Group {
                range,
                tests: family.clone(),
                sources: family,
                functional: Functional::NormalDerivative,
                field_factor: 1.0,
                gram: pyramid_gram(&basis),
                gram_scale: coef,
            });
            surface_bases.push(basis);
        }
    }

    let mut regions = Vec::new();
    for (region, c) in model.regions.iter().zip(&contrast.tets) {
        let host_sigma = model.sigma_of(region.host_layer);
        let Some(active) = active_region(region, c, host_sigma)? else {
            continue;
        };
        let range = offset..offset + active.basis.len();
        offset = range.end;
        layout.regions.push(range.clone());
        groups.push(Group {
            range,
            sources: Family::swg_charges(&active.region, &active.basis),
            tests: Family::swg_weighted_tests(&active.region, &active.basis, &active.weights),
            functional: Functional::Potential,
            field_factor: -1.0 / host_sigma,
            gram: swg_gram(&active.region, &active.basis),
            gram_scale: -1.0,
        });
        regions.push(active);
    }

    let mut bundles = Vec::new();
    for (bundle, c) in model.bundles.iter().zip(&contrast.fibers) {
        let host_sigma = model.sigma_of(bundle.host_layer);
        let Some(active) = active_bundle(bundle, c, host_sigma)? else {
            continue;
        };
        let range = offset..offset + active.basis.len();
        offset = range.end;
        layout.bundles.push(range.clone());
        groups.push(Group {
            range,
            sources: Family::wire_charges(&active.bundle, &active.basis),
            tests: Family::wire_weighted_tests(&active.bundle, &active.basis, &active.factors),
            functional: Functional::Potential,
            field_factor: -1.0 / host_sigma,
            gram: wire_gram(&active.bundle, &active.basis),
            gram_scale: -1.0,
        });
        bundles.push(active);
    }
    layout.total = offset;

    let mut matrix = DMatrix::zeros(offset, offset);
    for row in &groups {
        for col in &groups {
            let block = galerkin(&row.tests, row.functional, &col.sources, options);
            let mut view = matrix.view_mut((row.range.start, col.range.start), (row.range.len(), col.range.len()));
            view += block * -col.field_factor;
        }
        let mut diag = matrix.view_mut((row.range.start, row.range.start), (row.range.len(), row.range.len()));
        diag += &row.gram * row.gram_scale;
    }

    Ok(BlockSystem {
        matrix,
        layout,
        deflation: None,
        alpha: 0.0,
        model: model.clone(),
        contrast,
        surface_bases,
        regions,
        bundles,
        options: *options,
        groups,
    })
}

impl BlockSystem {
    pub fn dimension(&self) -> usize {
        self.layout.total
    }

    /// Adds `alpha w w^T` on the outermost surface block with `alpha` the
    /// mean diagonal entry of that block. No-op for unbounded media.
    pub fn deflate(&mut self) {
        let Some(outer) = self.layout.surfaces.last().cloned() else {
            return;
        };
        let n = outer.len();
        let alpha = (0..n)
            .map(|i| self.matrix[(outer.start + i, outer.start + i)])
            .sum::<f64>()
            / n as f64;
        self.deflate_with(alpha);
    }

    /// Rank-one deflation with an explicit shift.
    pub fn deflate_with(&mut self, alpha: f64) {
        let Some(outer) = self.layout.surfaces.last().cloned() else {
            return;
        };
        let basis = self.surface_bases.last().expect("outer basis");
        let mut w = DVector::from_vec(basis.integrals());
        w /= w.norm();
        let shift = (alpha - self.alpha) * &w * w.transpose();
        let mut view = self
            .matrix
            .view_mut((outer.start, outer.start), (outer.len(), outer.len()));
        view += shift;
        let mut global = DVector::zeros(self.layout.total);
        global.rows_mut(outer.start, outer.len()).copy_from(&w);
        self.deflation = Some(global);
        self.alpha = alpha;
    }

    /// Host conductivity of a dipole, after validating its position.
    pub fn source_sigma(&self, dipole: &Dipole) -> Result<f64, FormulationError> {
        let host = dipole.host(&self.model, &self.contrast)?;
        Ok(self.model.sigma_of(host))
    }

    /// Right-hand side for one dipole.
    pub fn rhs(&self, dipole: &Dipole) -> Result<DVector<f64>, FormulationError> {
        let sigma = self.source_sigma(dipole)?;
        let (r0, p) = (dipole.position, dipole.moment);
        let mut b = DVector::zeros(self.layout.total);
        for g in &self.groups {
            let part = match g.functional {
                Functional::NormalDerivative => project_functional(
                    &g.tests,
                    g.functional,
                    &self.options,
                    |x, n| dipole_gradient(&r0, &p, sigma, x).dot(n.expect("surface normal")),
                    Some(r0),
                ),
                Functional::Potential => project_functional(
                    &g.tests,
                    g.functional,
                    &self.options,
                    |x, _| dipole_potential(&r0, &p, sigma, x),
                    Some(r0),
                ),
            };
            b.rows_mut(g.range.start, g.range.len()).copy_from(&part);
        }
        Ok(b)
    }

    /// Potential at `points` for solved coefficients `x` and the source.
    pub fn potential(&self, x: &DVector<f64>, dipole: &Dipole, sigma_s: f64, points: &[Vec3]) -> Vec<f64> {
        let mut out: Vec<f64> = points
            .iter()
            .map(|r| dipole_potential(&dipole.position, &dipole.moment, sigma_s, r))
            .collect();
        for g in &self.groups {
            let coeffs: Vec<f64> = x
                .rows(g.range.start, g.range.len())
                .iter()
                .map(|c| c * g.field_factor)
                .collect();
            for (o, v) in out.iter_mut().zip(evaluate(&g.sources, &coeffs, points, &self.options)) {
                *o += v;
            }
        }
        out
    }
}

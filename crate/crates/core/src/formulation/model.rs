use crate::geometry::{GeometryError, Mat3, NestedHeadModel, TetRegion, Vec3, WireBundle};

use super::FormulationError;

/// Contrast tensors below this Frobenius norm are treated as zero.
pub const EPS_ACTIVE: f64 = 1e-10;

/// Relative distance (to the model size) below which a point counts as
/// lying on an interface.
const TOUCH_TOLERANCE: f64 = 1e-9;

/// Layered head plus anisotropic tet regions and wire bundles, each embedded
/// in one layer. Without surfaces the medium is unbounded and homogeneous.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub head: Option<NestedHeadModel>,
    /// Conductivity of the unbounded medium when `head` is absent.
    pub unbounded_sigma: f64,
    pub regions: Vec<TetRegion>,
    pub bundles: Vec<WireBundle>,
}

impl HybridModel {
    pub fn new(
        head: NestedHeadModel,
        regions: Vec<TetRegion>,
        bundles: Vec<WireBundle>,
    ) -> Result<Self, FormulationError> {
        let m = Self {
            head: Some(head),
            unbounded_sigma: 0.0,
            regions,
            bundles,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn unbounded(sigma: f64, regions: Vec<TetRegion>, bundles: Vec<WireBundle>) -> Result<Self, FormulationError> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(GeometryError::NonPositiveConductivity(1).into());
        }
        let m = Self {
            head: None,
            unbounded_sigma: sigma,
            regions,
            bundles,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn surface_only(head: NestedHeadModel) -> Self {
        Self {
            head: Some(head),
            unbounded_sigma: 0.0,
            regions: Vec::new(),
            bundles: Vec::new(),
        }
    }

    pub fn layer_count(&self) -> usize {
        self.head.as_ref().map_or(1, NestedHeadModel::layer_count)
    }

    /// Background conductivity of a 1-based layer.
    pub fn sigma_of(&self, layer: usize) -> f64 {
        match &self.head {
            Some(h) => h.sigma_of(layer),
            None if layer == 1 => self.unbounded_sigma,
            None => 0.0,
        }
    }

    pub fn compartment_of(&self, p: &Vec3) -> Option<usize> {
        match &self.head {
            Some(h) => h.compartment_of(p),
            None => Some(1),
        }
    }

    fn scale(&self) -> f64 {
        self.head.as_ref().map_or(1.0, |h| {
            h.outer()
                .vertices
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max)
                .max(1e-300)
        })
    }

    /// Distance from `p` to the nearest interface and its 1-based index.
    pub fn nearest_interface(&self, p: &Vec3) -> Option<(usize, f64)> {
        let h = self.head.as_ref()?;
        h.surfaces
            .iter()
            .enumerate()
            .map(|(i, s)| (i + 1, s.distance(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn validate(&self) -> Result<(), FormulationError> {
        let tol = TOUCH_TOLERANCE * self.scale();
        for (r, region) in self.regions.iter().enumerate() {
            if let Some(h) = &self.head {
                region.check_host(h)?;
            } else if region.host_layer != 1 {
                return Err(GeometryError::BadLayer(region.host_layer, 1).into());
            }
            for v in &region.vertices {
                if let Some((surface, d)) = self.nearest_interface(v) {
                    if d <= tol {
                        return Err(FormulationError::TouchesInterface {
                            what: format!("tet region {}", r + 1),
                            surface,
                        });
                    }
                }
            }
        }
        for (b, bundle) in self.bundles.iter().enumerate() {
            if let Some(h) = &self.head {
                bundle.check_host(h)?;
            } else if bundle.host_layer != 1 {
                return Err(GeometryError::BadLayer(bundle.host_layer, 1).into());
            }
            for f in &bundle.fibers {
                for v in &f.nodes {
                    if let Some((surface, d)) = self.nearest_interface(v) {
                        if d <= tol {
                            return Err(FormulationError::TouchesInterface {
                                what: format!("wire bundle {}", b + 1),
                                surface,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-tet contrast `chi = (sigma_i I - sigma) sigma^-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetContrast {
    pub chi: Mat3,
    /// `sigma_i I - sigma`, the weight of the volume rows.
    pub weight: Mat3,
    pub active: bool,
}

pub fn compute_contrast(sigma_i: f64, sigma: &Mat3) -> Result<TetContrast, FormulationError> {
    if !(sigma_i > 0.0) {
        return Err(FormulationError::InvalidParameter(
            "background conductivity must be positive".into(),
        ));
    }
    let inv = sigma
        .try_inverse()
        .ok_or_else(|| FormulationError::InvalidParameter("singular conductivity tensor".into()))?;
    let weight = Mat3::identity() * sigma_i - sigma;
    let chi = weight * inv;
    Ok(TetContrast {
        chi,
        weight,
        active: chi.norm() > EPS_ACTIVE,
    })
}

/// Wire factor `sigma_i - sigma_l` and whether the fiber is active.
pub fn wire_contrast(sigma_i: f64, sigma_l: f64) -> (f64, bool) {
    let c = sigma_i - sigma_l;
    (c, (c / sigma_i).abs() > EPS_ACTIVE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastField {
    pub tets: Vec<Vec<TetContrast>>,
    pub fibers: Vec<Vec<(f64, bool)>>,
}

impl ContrastField {
    pub fn new(model: &HybridModel) -> Result<Self, FormulationError> {
        let tets = model
            .regions
            .iter()
            .map(|r| {
                let si = model.sigma_of(r.host_layer);
                r.sigma
                    .iter()
                    .map(|s| compute_contrast(si, s))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let fibers = model
            .bundles
            .iter()
            .map(|b| {
                let si = model.sigma_of(b.host_layer);
                b.fibers.iter().map(|f| wire_contrast(si, f.sigma_l)).collect()
            })
            .collect();
        Ok(Self { tets, fibers })
    }

    pub fn active_tets(&self) -> usize {
        self.tets.iter().flatten().filter(|c| c.active).count()
    }

    pub fn active_fibers(&self) -> usize {
        self.fibers.iter().flatten().filter(|c| c.1).count()
    }
}

/// Current dipole at `position` with moment `moment` (A m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dipole {
    pub position: Vec3,
    pub moment: Vec3,
}

impl Dipole {
    pub fn new(position: Vec3, moment: Vec3) -> Self {
        Self { position, moment }
    }

    /// Host compartment, rejecting positions outside the head, on an
    /// interface or inside an active contrast tet.
    pub fn host(&self, model: &HybridModel, contrast: &ContrastField) -> Result<usize, FormulationError> {
        let host = model
            .compartment_of(&self.position)
            .ok_or(FormulationError::DipoleOutside)?;
        if let Some((surface, d)) = model.nearest_interface(&self.position) {
            if d <= TOUCH_TOLERANCE * model.scale() {
                return Err(FormulationError::DipoleOnInterface(surface));
            }
        }
        for (region, flags) in model.regions.iter().zip(&contrast.tets) {
            for (t, c) in flags.iter().enumerate() {
                if c.active && inside_tet(&region.corners(t), &self.position) {
                    return Err(FormulationError::DipoleInContrast);
                }
            }
        }
        Ok(host)
    }
}

fn inside_tet(v: &[Vec3; 4], p: &Vec3) -> bool {
    let vol = |a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3| (b - a).dot(&(c - a).cross(&(d - a)));
    let total = vol(&v[0], &v[1], &v[2], &v[3]);
    let parts = [
        vol(p, &v[1], &v[2], &v[3]),
        vol(&v[0], p, &v[2], &v[3]),
        vol(&v[0], &v[1], p, &v[3]),
        vol(&v[0], &v[1], &v[2], p),
    ];
    parts.iter().all(|x| x * total.signum() >= -1e-12 * total.abs())
}

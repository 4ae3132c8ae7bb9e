use super::{GeometryError, NestedHeadModel, Vec3};

/// One fiber: a polyline with a circular cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    pub nodes: Vec<Vec3>,
    pub radius: f64,
    pub sigma_l: f64,
}

impl Fiber {
    pub fn segment_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| (w[1] - w[0]).norm()).collect()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Cumulative arclength at each node.
    pub fn arclengths(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.nodes.len());
        let mut acc = 0.0;
        s.push(0.0);
        for l in self.segment_lengths() {
            acc += l;
            s.push(acc);
        }
        s
    }
}

/// Fibers of one compartment, e.g. a clustered tractography bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct WireBundle {
    pub fibers: Vec<Fiber>,
    pub host_layer: usize,
}

impl WireBundle {
    /// Validates fibers and, when `max_seg_len` is given, splits every segment
    /// longer than it into equal parts. Resampling keeps the polyline, so the
    /// length of each fiber is unchanged.
    pub fn new(fibers: Vec<Fiber>, host_layer: usize, max_seg_len: Option<f64>) -> Result<Self, GeometryError> {
        let mut out = Vec::with_capacity(fibers.len());
        for (k, f) in fibers.into_iter().enumerate() {
            if f.nodes.len() < 2 {
                return Err(GeometryError::ShortFiber(k));
            }
            if !(f.radius > 0.0) {
                return Err(GeometryError::NonPositiveRadius(k));
            }
            if !(f.sigma_l > 0.0) {
                return Err(GeometryError::NonPositiveFiberConductivity(k));
            }
            for (i, w) in f.nodes.windows(2).enumerate() {
                if (w[1] - w[0]).norm() == 0.0 {
                    return Err(GeometryError::ZeroLengthSegment { fiber: k, node: i + 1 });
                }
            }
            let nodes = match max_seg_len {
                Some(h) if h > 0.0 => resample(&f.nodes, h),
                Some(h) => {
                    return Err(GeometryError::InvalidParameter(format!(
                        "max segment length {h} must be positive"
                    )))
                }
                None => f.nodes,
            };
            out.push(Fiber { nodes, ..f });
        }
        Ok(Self {
            fibers: out,
            host_layer,
        })
    }

    pub fn total_length(&self) -> f64 {
        self.fibers.iter().map(Fiber::length).sum()
    }

    /// Nodes must lie inside the host compartment.
    pub fn check_host(&self, model: &NestedHeadModel) -> Result<(), GeometryError> {
        model.check_layer(self.host_layer)?;
        for (k, f) in self.fibers.iter().enumerate() {
            for (i, p) in f.nodes.iter().enumerate() {
                if model.compartment_of(p) != Some(self.host_layer) {
                    return Err(GeometryError::InvalidParameter(format!(
                        "fiber {k} node {i} outside compartment {}",
                        self.host_layer
                    )));
                }
            }
        }
        Ok(())
    }
}

fn resample(nodes: &[Vec3], max_len: f64) -> Vec<Vec3> {
    let mut out = vec![nodes[0]];
    for w in nodes.windows(2) {
        let len = (w[1] - w[0]).norm();
        let parts = ((len / max_len) - 1e-9).ceil().max(1.0) as usize;
        for j in 1..parts {
            let t = j as f64 / parts as f64;
            out.push(w[0] + (w[1] - w[0]) * t);
        }
        out.push(w[1]);
    }
    out
}

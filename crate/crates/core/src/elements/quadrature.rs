//! Quadrature rules on the reference triangle, tetrahedron and segment.
//!
//! Reference elements: triangle `{(x, y): x, y >= 0, x + y <= 1}` (area 1/2),
//! tetrahedron `{x, y, z >= 0, x + y + z <= 1}` (volume 1/6) and `[0, 1]`.

use super::ElementError;

/// Supported polynomial orders.
pub const SUPPORTED_ORDERS: [usize; 5] = [1, 2, 3, 4, 6];

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates (1, 2 or 3 per point).
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn check(order: usize) -> Result<(), ElementError> {
    if SUPPORTED_ORDERS.contains(&order) {
        Ok(())
    } else {
        Err(ElementError::UnsupportedOrder(order))
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

pub fn segment_quadrature(order: usize) -> Result<QuadratureRule, ElementError> {
    check(order)?;
    let (x, w) = gauss_legendre(order / 2 + 1);
    Ok(QuadratureRule {
        points: x.into_iter().map(|t| vec![t]).collect(),
        weights: w,
        order,
    })
}

fn sym_tri(out: &mut QuadratureRule, w: f64, a: f64, b: f64, c: f64) {
    let mut seen: Vec<[u64; 3]> = Vec::new();
    for p in [[a, b, c], [b, c, a], [c, a, b], [a, c, b], [c, b, a], [b, a, c]] {
        let key = p.map(f64::to_bits);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        out.points.push(vec![p[1], p[2]]);
        out.weights.push(0.5 * w);
    }
}

/// Symmetric positive-weight rules (degree 4 with 6 points, degree 6 with 12).
pub fn tri_quadrature(order: usize) -> Result<QuadratureRule, ElementError> {
    check(order)?;
    let mut r = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        order,
    };
    match order {
        1 => sym_tri(&mut r, 1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
        2 => sym_tri(&mut r, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0),
        3 | 4 => {
            sym_tri(
                &mut r,
                0.223381589678011,
                0.108103018168070,
                0.445948490915965,
                0.445948490915965,
            );
            sym_tri(
                &mut r,
                0.109951743655322,
                0.816847572980459,
                0.091576213509771,
                0.091576213509771,
            );
        }
        _ => {
            sym_tri(
                &mut r,
                0.116786275726379,
                0.501426509658179,
                0.249286745170910,
                0.249286745170910,
            );
            sym_tri(
                &mut r,
                0.050844906370207,
                0.873821971016996,
                0.063089014491502,
                0.063089014491502,
            );
            sym_tri(
                &mut r,
                0.082851075618374,
                0.053145049844817,
                0.310352451033784,
                0.636502499121399,
            );
        }
    }
    Ok(r)
}

/// Centroid and 4-point rules for orders 1 and 2, a symmetric 14-point rule
/// up to order 5 and collapsed-coordinate Gauss products above that.
pub fn tet_quadrature(order: usize) -> Result<QuadratureRule, ElementError> {
    check(order)?;
    let mut r = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        order,
    };
    match order {
        1 => {
            r.points.push(vec![0.25; 3]);
            r.weights.push(1.0 / 6.0);
        }
        2 => {
            let (a, b) = (0.5854101966249685, 0.1381966011250105);
            for k in 0..4 {
                let mut bary = [b; 4];
                bary[k] = a;
                r.points.push(bary[1..].to_vec());
                r.weights.push(1.0 / 24.0);
            }
        }
        3..=5 => {
            for (a, w) in [
                (0.0927352503108912, 0.01224884051939366),
                (0.3108859192633006, 0.01878132095300264),
            ] {
                for k in 0..4 {
                    let mut bary = [a; 4];
                    bary[k] = 1.0 - 3.0 * a;
                    r.points.push(bary[1..].to_vec());
                    r.weights.push(w);
                }
            }
            let (b, w) = (0.0455037041256496, 0.007091003462846911);
            for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
                let mut bary = [0.5 - b; 4];
                bary[i] = b;
                bary[j] = b;
                r.points.push(bary[1..].to_vec());
                r.weights.push(w);
            }
        }
        _ => {
            let (xu, wu) = gauss_legendre((order + 3).div_ceil(2));
            let (xv, wv) = gauss_legendre((order + 2).div_ceil(2));
            let (xw, ww) = gauss_legendre((order + 1).div_ceil(2));
            for (u, wu) in xu.iter().zip(&wu) {
                for (v, wv) in xv.iter().zip(&wv) {
                    for (w, www) in xw.iter().zip(&ww) {
                        let x = u;
                        let y = v * (1.0 - u);
                        let z = w * (1.0 - u) * (1.0 - v);
                        r.points.push(vec![*x, y, z]);
                        r.weights.push(wu * wv * www * (1.0 - u).powi(2) * (1.0 - v));
                    }
                }
            }
        }
    }
    Ok(r)
}

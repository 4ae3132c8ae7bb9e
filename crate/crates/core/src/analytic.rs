//! Closed-form references: the infinite-medium dipole, the concentric
//! layered sphere and the error metrics used to compare potentials.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::formulation::{mean_reference, Dipole};
use crate::geometry::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("observation point coincides with the dipole")]
    CoincidentPoint,
    #[error("dipole eccentricity {0:.4} is not below 1")]
    Eccentricity(f64),
    #[error("dipole lies on interface {0}")]
    OnInterface(usize),
    #[error("series did not converge within {0} terms")]
    NotConverged(usize),
    #[error("reference vector is zero")]
    ZeroReference,
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid sphere model: {0}")]
    InvalidModel(String),
}

pub fn dipole_infinite_potential(dipole: &Dipole, sigma: f64, r: &Vec3) -> Result<f64, AnalyticError> {
    let d = r - dipole.position;
    let n = d.norm();
    if n == 0.0 {
        return Err(AnalyticError::CoincidentPoint);
    }
    Ok(dipole.moment.dot(&d) / (4.0 * PI * sigma * n * n * n))
}

pub fn dipole_infinite_gradient(dipole: &Dipole, sigma: f64, r: &Vec3) -> Result<Vec3, AnalyticError> {
    let d = r - dipole.position;
    let n2 = d.norm_squared();
    if n2 == 0.0 {
        return Err(AnalyticError::CoincidentPoint);
    }
    let n = n2.sqrt();
    let p = dipole.moment;
    Ok((p * n2 - d * (3.0 * p.dot(&d))) / (4.0 * PI * sigma * n2 * n2 * n))
}

/// Concentric spheres, innermost first.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredSphereModel {
    pub radii: Vec<f64>,
    pub sigma: Vec<f64>,
    pub n_max: usize,
}

/// Default series truncation.
pub const DEFAULT_N_MAX: usize = 100;
const HARD_N_MAX: usize = 20_000;
const TAIL_TOLERANCE: f64 = 1e-10;

impl LayeredSphereModel {
    pub fn new(radii: Vec<f64>, sigma: Vec<f64>) -> Result<Self, AnalyticError> {
        if radii.is_empty() || radii.len() != sigma.len() {
            return Err(AnalyticError::InvalidModel("need one conductivity per radius".into()));
        }
        if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AnalyticError::InvalidModel(
                "radii must be positive and increasing".into(),
            ));
        }
        if sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(AnalyticError::InvalidModel("conductivities must be positive".into()));
        }
        Ok(Self {
            radii,
            sigma,
            n_max: DEFAULT_N_MAX,
        })
    }

    /// Three-shell default: radii (0.087, 0.092, 0.1) m, conductivities
    /// (0.33, 0.0125, 0.33) S/m.
    pub fn default_three_shell() -> Self {
        Self::new(vec![0.087, 0.092, 0.1], vec![0.33, 0.0125, 0.33]).expect("valid default")
    }

    fn layer_of(&self, r: f64) -> usize {
        self.radii
            .iter()
            .position(|&rho| r < rho)
            .unwrap_or(self.radii.len() - 1)
    }

    fn checked_layer(&self, b: f64) -> Result<usize, AnalyticError> {
        let outer = *self.radii.last().expect("non-empty");
        if b >= outer {
            return Err(AnalyticError::Eccentricity(b / outer));
        }
        for (j, &rho) in self.radii.iter().enumerate() {
            if (b - rho).abs() <= 1e-12 * outer {
                return Err(AnalyticError::OnInterface(j + 1));
            }
        }
        Ok(self.layer_of(b))
    }

    /// Degree-`n` radial solution at `r` for a source of radius `b` whose
    /// free-space expansion is `c_out (b/r)^(n-1) / r^2` outside and
    /// `c_in (r/b)^n / b^2` inside, both divided by `4 pi sigma_s`.
    pub fn radial_mode(&self, n: usize, b: f64, c_out: f64, c_in: f64, r: f64) -> Result<f64, AnalyticError> {
        let s = self.checked_layer(b)?;
        let sol = self.mode_coefficients(n, b, s, c_out, c_in);
        Ok(self.eval_mode(n, b, s, c_out, c_in, &sol, r))
    }

    /// Source part `(radial value, radial derivative)` at `r`.
    fn source(&self, n: usize, b: f64, s: usize, c_out: f64, c_in: f64, r: f64) -> (f64, f64) {
        let k = 1.0 / (4.0 * PI * self.sigma[s]);
        let nf = n as f64;
        if r > b {
            let v = c_out * (b / r).powi(n as i32 - 1) / (r * r) * k;
            (v, -(nf + 1.0) * v / r)
        } else {
            let v = c_in * (r / b).powi(n as i32) / (b * b) * k;
            (v, nf * v / r)
        }
    }

    /// Coefficients `[A_1..A_N, B_2..B_N]` of the homogeneous parts
    /// `A_j (r/rho_j)^n + B_j (rho_{j-1}/r)^(n+1)`.
    fn mode_coefficients(&self, n: usize, b: f64, s: usize, c_out: f64, c_in: f64) -> DVector<f64> {
        let nl = self.radii.len();
        let size = 2 * nl - 1;
        let nf = n as f64;
        let ia = |j: usize| j;
        let ib = |j: usize| nl + j - 1;
        let mut m = DMatrix::<f64>::zeros(size, size);
        let mut rhs = DVector::<f64>::zeros(size);
        let basis = |j: usize, r: f64| -> [(usize, f64, f64); 2] {
            let rho = self.radii[j];
            let a = (r / rho).powi(n as i32);
            let mut out = [(ia(j), a, nf * a / r), (usize::MAX, 0.0, 0.0)];
            if j > 0 {
                let bb = (self.radii[j - 1] / r).powi(n as i32 + 1);
                out[1] = (ib(j), bb, -(nf + 1.0) * bb / r);
            }
            out
        };
        let mut row = 0;
        for j in 0..nl - 1 {
            let r = self.radii[j];
            let (sj, sk) = (self.sigma[j], self.sigma[j + 1]);
            for (col, v, d) in basis(j, r) {
                if col != usize::MAX {
                    m[(row, col)] += v;
                    m[(row + 1, col)] += sj * d;
                }
            }
            for (col, v, d) in basis(j + 1, r) {
                if col != usize::MAX {
                    m[(row, col)] -= v;
                    m[(row + 1, col)] -= sk * d;
                }
            }
            if s == j || s == j + 1 {
                let (v, d) = self.source(n, b, s, c_out, c_in, r);
                let sign = if s == j { -1.0 } else { 1.0 };
                rhs[row] += sign * v;
                rhs[row + 1] += sign * self.sigma[s] * d;
            }
            row += 2;
        }
        let r = self.radii[nl - 1];
        for (col, _, d) in basis(nl - 1, r) {
            if col != usize::MAX {
                m[(row, col)] += d;
            }
        }
        if s == nl - 1 {
            rhs[row] -= self.source(n, b, s, c_out, c_in, r).1;
        }
        m.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(size))
    }

    #[allow(clippy::too_many_arguments)]
    fn eval_mode(&self, n: usize, b: f64, s: usize, c_out: f64, c_in: f64, sol: &DVector<f64>, r: f64) -> f64 {
        let nl = self.radii.len();
        let j = self.layer_of(r);
        let mut v = sol[j] * (r / self.radii[j]).powi(n as i32);
        if j > 0 {
            v += sol[nl + j - 1] * (self.radii[j - 1] / r).powi(n as i32 + 1);
        }
        if j == s {
            v += self.source(n, b, s, c_out, c_in, r).0;
        }
        v
    }

    /// Truncation order for a dipole at radius `b`.
    pub fn order_for(&self, b: f64) -> usize {
        let outer = *self.radii.last().expect("non-empty");
        let ratio = b / outer;
        if ratio <= 0.0 {
            return self.n_max;
        }
        // smallest n with n ratio^n below the tail tolerance
        let mut n = (TAIL_TOLERANCE.ln() / ratio.ln()).ceil().max(1.0) as usize;
        while n < HARD_N_MAX && (n as f64).ln() + n as f64 * ratio.ln() > TAIL_TOLERANCE.ln() {
            n += n / 8 + 1;
        }
        self.n_max.max(n).min(HARD_N_MAX)
    }
}

/// Legendre polynomials and their derivatives up to degree `n`.
fn legendre(x: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for k in 2..=n {
        let kf = k as f64;
        p[k] = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
        dp[k] = dp[k - 2] + (2.0 * kf - 1.0) * p[k - 1];
    }
    (p, dp)
}

/// Potential of `dipole` at `points` in the layered sphere, defined up to a
/// global constant (the degree-0 homogeneous term is dropped).
pub fn analytic_layered_sphere(
    model: &LayeredSphereModel,
    dipole: &Dipole,
    points: &[Vec3],
) -> Result<Vec<f64>, AnalyticError> {
    let b = dipole.position.norm();
    let s = model.checked_layer(b)?;
    let p = dipole.moment;
    let r0_hat = if b > 0.0 {
        dipole.position / b
    } else if p.norm() > 0.0 {
        p.normalize()
    } else {
        return Ok(vec![0.0; points.len()]);
    };
    let p_r = p.dot(&r0_hat);
    let p_t = p - r0_hat * p_r;
    let n_max = if b == 0.0 { 1 } else { model.order_for(b) };
    // per degree: homogeneous solutions for unit outer and inner sources
    let modes: Vec<(DVector<f64>, DVector<f64>)> = (0..=n_max)
        .map(|n| {
            if n == 0 {
                (DVector::zeros(0), DVector::zeros(0))
            } else {
                (
                    model.mode_coefficients(n, b, s, 1.0, 0.0),
                    model.mode_coefficients(n, b, s, 0.0, 1.0),
                )
            }
        })
        .collect();
    let mut out = Vec::with_capacity(points.len());
    for x in points {
        let r = x.norm();
        if (x - dipole.position).norm() == 0.0 {
            return Err(AnalyticError::CoincidentPoint);
        }
        let r_hat = if r > 0.0 { x / r } else { r0_hat };
        let cosg = r_hat.dot(&r0_hat).clamp(-1.0, 1.0);
        let (pn, dpn) = legendre(cosg, n_max);
        let pt_r = p_t.dot(&r_hat);
        let mut total = 0.0;
        for n in 0..=n_max {
            let nf = n as f64;
            let (u_out, u_in) = (nf * p_r, -(nf + 1.0) * p_r);
            let term = if n == 0 {
                if r < b {
                    model.source(0, b, s, 0.0, u_in, r).0
                } else {
                    0.0
                }
            } else {
                let (ref e_out, ref e_in) = modes[n];
                let f_out = model.eval_mode(n, b, s, 1.0, 0.0, e_out, r);
                let f_in = model.eval_mode(n, b, s, 0.0, 1.0, e_in, r);
                (u_out * f_out + u_in * f_in) * pn[n] + (f_out + f_in) * pt_r * dpn[n]
            };
            total += term;
        }
        if !total.is_finite() {
            return Err(AnalyticError::NotConverged(n_max));
        }
        out.push(total);
    }
    Ok(out)
}

fn check_lengths(u: &[f64], v: &[f64]) -> Result<(), AnalyticError> {
    if u.len() != v.len() {
        return Err(AnalyticError::LengthMismatch(u.len(), v.len()));
    }
    Ok(())
}

fn referenced(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    mean_reference(&mut out);
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `|u - v| / |v|` after mean-referencing both vectors.
pub fn relative_error(u: &[f64], v: &[f64]) -> Result<f64, AnalyticError> {
    check_lengths(u, v)?;
    let (u, v) = (referenced(u), referenced(v));
    let nv = norm(&v);
    if nv == 0.0 {
        return Err(AnalyticError::ZeroReference);
    }
    Ok(u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / nv)
}

/// Relative difference measure `|u/|u| - v/|v||` of mean-referenced vectors.
pub fn rdm(u: &[f64], v: &[f64]) -> Result<f64, AnalyticError> {
    check_lengths(u, v)?;
    let (u, v) = (referenced(u), referenced(v));
    let (nu, nv) = (norm(&u), norm(&v));
    if nv == 0.0 || nu == 0.0 {
        return Err(AnalyticError::ZeroReference);
    }
    Ok(u.iter()
        .zip(&v)
        .map(|(a, b)| (a / nu - b / nv).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Magnitude ratio `|u| / |v|` of mean-referenced vectors.
pub fn mag(u: &[f64], v: &[f64]) -> Result<f64, AnalyticError> {
    check_lengths(u, v)?;
    let (u, v) = (referenced(u), referenced(v));
    let nv = norm(&v);
    if nv == 0.0 {
        return Err(AnalyticError::ZeroReference);
    }
    Ok(norm(&u) / nv)
}

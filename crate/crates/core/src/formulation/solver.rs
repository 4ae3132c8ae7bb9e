use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::model::Dipole;
use super::system::BlockSystem;
use super::FormulationError;
use crate::geometry::Vec3;

/// Relative residual required of the direct solver.
pub const DIRECT_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    Direct,
    /// Restarted GMRES with Jacobi preconditioning.
    Iterative {
        tol: f64,
        restart: usize,
        max_iter: usize,
    },
}

impl SolverKind {
    pub fn iterative() -> Self {
        SolverKind::Iterative {
            tol: 1e-8,
            restart: 100,
            max_iter: 5000,
        }
    }
}

/// A prepared solver, reused across right-hand sides.
pub struct Solver<'a> {
    matrix: &'a DMatrix<f64>,
    kind: SolverKind,
    lu: Option<LU<f64, Dyn, Dyn>>,
}

impl<'a> Solver<'a> {
    pub fn new(matrix: &'a DMatrix<f64>, kind: SolverKind) -> Result<Self, FormulationError> {
        let lu = match kind {
            SolverKind::Direct => {
                let lu = matrix.clone().lu();
                if !lu.is_invertible() {
                    return Err(FormulationError::Singular);
                }
                Some(lu)
            }
            SolverKind::Iterative { .. } => None,
        };
        Ok(Self { matrix, kind, lu })
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>, FormulationError> {
        let bn = b.norm();
        if bn == 0.0 {
            return Ok(DVector::zeros(b.len()));
        }
        match self.kind {
            SolverKind::Direct => {
                let x = self
                    .lu
                    .as_ref()
                    .expect("factorized")
                    .solve(b)
                    .ok_or(FormulationError::Singular)?;
                let res = (self.matrix * &x - b).norm() / bn;
                if !(res <= DIRECT_RESIDUAL) {
                    return Err(FormulationError::ResidualTooLarge(res));
                }
                Ok(x)
            }
            SolverKind::Iterative { tol, restart, max_iter } => gmres(self.matrix, b, tol, restart, max_iter),
        }
    }
}

/// Right-preconditioned restarted GMRES; the returned solution satisfies
/// `|A x - b| <= tol |b|`.
pub fn gmres(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<DVector<f64>, FormulationError> {
    let n = b.len();
    let dinv = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let d = a[(i, i)];
            if d != 0.0 {
                1.0 / d
            } else {
                1.0
            }
        }),
    );
    let bn = b.norm();
    let mut x = DVector::zeros(n);
    let mut iters = 0;
    let m = restart.max(1).min(n.max(1));
    loop {
        let r = b - a * &x;
        let beta = r.norm();
        if beta <= tol * bn {
            return Ok(x);
        }
        if iters >= max_iter {
            return Err(FormulationError::NotConverged {
                iterations: iters,
                residual: beta / bn,
            });
        }
        let mut v: Vec<DVector<f64>> = vec![r / beta];
        let mut h = DMatrix::<f64>::zeros(m + 1, m);
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = DVector::<f64>::zeros(m + 1);
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let z = v[k].component_mul(&dinv);
            let mut w = a * z;
            for (j, vj) in v.iter().enumerate() {
                h[(j, k)] = w.dot(vj);
                w.axpy(-h[(j, k)], vj, 1.0);
            }
            let hn = w.norm();
            h[(k + 1, k)] = hn;
            for j in 0..k {
                let t = cs[j] * h[(j, k)] + sn[j] * h[(j + 1, k)];
                h[(j + 1, k)] = -sn[j] * h[(j, k)] + cs[j] * h[(j + 1, k)];
                h[(j, k)] = t;
            }
            let denom = h[(k, k)].hypot(hn);
            cs[k] = h[(k, k)] / denom;
            sn[k] = hn / denom;
            h[(k, k)] = denom;
            h[(k + 1, k)] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            iters += 1;
            if g[k + 1].abs() <= 0.5 * tol * bn || iters >= max_iter || hn == 0.0 {
                break;
            }
            v.push(w / hn);
        }
        // back substitution for the Krylov coefficients
        let mut y = DVector::<f64>::zeros(k_used);
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[(i, j)] * y[j];
            }
            y[i] = s / h[(i, i)];
        }
        let mut update = DVector::zeros(n);
        for (j, yj) in y.iter().enumerate() {
            update.axpy(*yj, &v[j], 1.0);
        }
        x += update.component_mul(&dinv);
    }
}

/// Coefficients of one solve together with the source.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSolution {
    pub coefficients: DVector<f64>,
    pub dipole: Dipole,
    pub sigma_s: f64,
}

impl ForwardSolution {
    pub fn potential(&self, system: &BlockSystem, points: &[Vec3]) -> Vec<f64> {
        system.potential(&self.coefficients, &self.dipole, self.sigma_s, points)
    }
}

pub fn solve(system: &BlockSystem, dipole: &Dipole, kind: SolverKind) -> Result<ForwardSolution, FormulationError> {
    let solver = Solver::new(&system.matrix, kind)?;
    solve_with(system, &solver, dipole)
}

pub fn solve_with(
    system: &BlockSystem,
    solver: &Solver<'_>,
    dipole: &Dipole,
) -> Result<ForwardSolution, FormulationError> {
    let sigma_s = system.source_sigma(dipole)?;
    let b = system.rhs(dipole)?;
    let coefficients = solver.solve(&b)?;
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(FormulationError::Singular);
    }
    Ok(ForwardSolution {
        coefficients,
        dipole: *dipole,
        sigma_s,
    })
}

pub fn mean_reference(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v {
        *x -= mean;
    }
}

/// Mean-referenced electrode potentials, one column per dipole position and
/// Cartesian moment component (`3 * positions.len()` columns). One
/// factorization serves every column.
pub fn compute_leadfield(
    system: &BlockSystem,
    positions: &[Vec3],
    electrodes: &[Vec3],
    kind: SolverKind,
) -> Result<DMatrix<f64>, FormulationError> {
    let solver = Solver::new(&system.matrix, kind)?;
    compute_leadfield_with(system, &solver, positions, electrodes)
}

/// [`compute_leadfield`] with an already prepared solver.
pub fn compute_leadfield_with(
    system: &BlockSystem,
    solver: &Solver<'_>,
    positions: &[Vec3],
    electrodes: &[Vec3],
) -> Result<DMatrix<f64>, FormulationError> {
    let mut out = DMatrix::zeros(electrodes.len(), 3 * positions.len());
    for (d, pos) in positions.iter().enumerate() {
        for k in 0..3 {
            let mut moment = Vec3::zeros();
            moment[k] = 1.0;
            let sol = solve_with(system, solver, &Dipole::new(*pos, moment))?;
            let mut v = sol.potential(system, electrodes);
            mean_reference(&mut v);
            out.column_mut(3 * d + k).copy_from_slice(&v);
        }
    }
    Ok(out)
}

//! Jacobi-preconditioned conjugate gradient for matrix-free SPD operators.

use crate::error::{Error, Result};

pub trait LinearOperator {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn apply(&self, x: &[f64], out: &mut [f64]);

    /// Diagonal of the operator, used as the preconditioner.
    fn diagonal(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `‖A x − b‖₂ / ‖b‖₂`, recomputed from the final iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = rhs` from `x = 0`.
pub fn cg_solve<A: LinearOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<CgOutcome> {
    cg_solve_from(op, rhs, &vec![0.0; rhs.len()], tol, max_iters)
}

/// Solves `A x = rhs` starting from `x0`. Every iterate lowers the quadratic
/// `½xᵀAx − bᵀx` relative to `x0`.
pub fn cg_solve_from<A: LinearOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    x0: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<CgOutcome> {
    let n = op.len();
    if rhs.len() != n || x0.len() != n {
        return Err(Error::param(format!(
            "CG size mismatch: operator {n}, rhs {}, x0 {}",
            rhs.len(),
            x0.len()
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::param("CG tolerance must be > 0"));
    }
    let b_norm = dot(rhs, rhs).sqrt();
    if !b_norm.is_finite() {
        return Err(Error::Numerical {
            iteration: 0,
            message: "non-finite right-hand side".to_string(),
        });
    }
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }

    let inv_diag: Vec<f64> = op
        .diagonal()
        .into_iter()
        .map(|d| if d.abs() > 1e-300 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = x0.to_vec();
    let mut ap = vec![0.0; n];
    op.apply(&x, &mut ap);
    let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let mut converged = dot(&r, &r).sqrt() <= tol * b_norm;

    while !converged && iterations < max_iters {
        iterations += 1;
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || !rz.is_finite() {
            return Err(Error::Numerical {
                iteration: iterations,
                message: "non-finite value in conjugate gradient".to_string(),
            });
        }
        if pap <= 0.0 {
            // Direction of non-positive curvature: the operator is not SPD
            // here and no further progress is possible.
            break;
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let r_norm = dot(&r, &r).sqrt();
        if !r_norm.is_finite() {
            return Err(Error::Numerical {
                iteration: iterations,
                message: "residual became non-finite".to_string(),
            });
        }
        if r_norm <= tol * b_norm {
            converged = true;
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    op.apply(&x, &mut ap);
    let true_res: f64 = rhs
        .iter()
        .zip(&ap)
        .map(|(b, a)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    if !true_res.is_finite() {
        return Err(Error::Numerical {
            iteration: iterations,
            message: "non-finite final residual".to_string(),
        });
    }
    Ok(CgOutcome {
        solution: x,
        iterations,
        relative_residual: true_res,
        converged,
    })
}

/// A dense row-major matrix as a [`LinearOperator`].
#[derive(Debug, Clone)]
pub struct DenseOperator {
    n: usize,
    entries: Vec<f64>,
}

impl DenseOperator {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::param("dense operator needs n*n entries"));
        }
        Ok(Self { n, entries })
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut entries = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            entries[i * n + i] = *d;
        }
        Self { n, entries }
    }
}

impl LinearOperator for DenseOperator {
    fn len(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&self.entries[i * self.n..(i + 1) * self.n], x);
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.entries[i * self.n + i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_in_one_iteration() {
        let rhs = vec![1.0, -2.0, 3.5, 0.25];
        let op = DenseOperator::diagonal_matrix(&[1.0; 4]);
        let out = cg_solve(&op, &rhs, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.solution, rhs);
        assert!(out.converged);
    }

    #[test]
    fn diagonal_closed_form() {
        let diag: Vec<f64> = (1..=16).map(|v| v as f64).collect();
        let rhs: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let op = DenseOperator::diagonal_matrix(&diag);
        let out = cg_solve(&op, &rhs, 1e-14, 100).unwrap();
        for i in 0..16 {
            assert!((out.solution[i] - rhs[i] / diag[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn spd_tridiagonal() {
        let n = 12;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 2.5;
            if i + 1 < n {
                m[i * n + i + 1] = -1.0;
                m[(i + 1) * n + i] = -1.0;
            }
        }
        let op = DenseOperator::new(n, m).unwrap();
        let truth: Vec<f64> = (0..n).map(|i| i as f64 * 0.1 - 0.3).collect();
        let mut rhs = vec![0.0; n];
        op.apply(&truth, &mut rhs);
        let out = cg_solve(&op, &rhs, 1e-13, 100).unwrap();
        assert!(out.relative_residual < 1e-12);
        for (a, b) in out.solution.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_and_errors() {
        let op = DenseOperator::diagonal_matrix(&[2.0, 3.0]);
        let out = cg_solve(&op, &[0.0, 0.0], 1e-8, 10).unwrap();
        assert_eq!(out.solution, vec![0.0, 0.0]);
        assert!(cg_solve(&op, &[1.0], 1e-8, 10).is_err());
        assert!(cg_solve(&op, &[1.0, 1.0], 0.0, 10).is_err());
        let err = cg_solve(&op, &[f64::NAN, 1.0], 1e-8, 10).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn non_finite_operator_reports_iteration() {
        let op = DenseOperator::diagonal_matrix(&[f64::INFINITY, 1.0]);
        let err = cg_solve(&op, &[1.0, 1.0], 1e-8, 10).unwrap_err();
        assert!(matches!(err, Error::Numerical { iteration, .. } if iteration >= 1));
    }
}

//! Damped Gauss-Newton (Levenberg-Marquardt) least squares for the small
//! dense problems in this crate: oscillator line fits, camera calibration,
//! detuning-sweep parameter estimation.
//!
//! Callers should scale their parameters to order unity; the finite-difference
//! Jacobian steps relative to each parameter's magnitude.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative step-size tolerance on the parameter vector.
    pub step_tolerance: f64,
    /// Relative cost-decrease tolerance.
    pub cost_tolerance: f64,
    /// Relative finite-difference step for the numerical Jacobian.
    pub fd_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 200, step_tolerance: 1e-10, cost_tolerance: 1e-12, fd_step: 1e-6 }
    }
}

/// Converged (or not) least-squares solution with curvature information.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub params: Vec<f64>,
    /// Parameter covariance sigma^2 (J^T J)^-1 at the solution.
    pub covariance: Vec<Vec<f64>>,
    /// Euclidean norm of the residual vector at the solution.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// 1-norm condition estimate of J^T J at the solution.
    pub condition: f64,
}

impl FitOutcome {
    /// Standard error of parameter `i`.
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[i][i].max(0.0).sqrt()
    }
}

type Matrix = Vec<Vec<f64>>;

fn solve_linear(mut a: Matrix, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in (row + 1)..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn invert(a: &Matrix) -> Option<Matrix> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = solve_linear(a.clone(), e)?;
        for row in 0..n {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

fn one_norm(a: &Matrix) -> f64 {
    let n = a.len();
    (0..n).map(|j| (0..n).map(|i| a[i][j].abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn finite_difference_jacobian(
    residuals: &dyn Fn(&[f64]) -> Vec<f64>,
    params: &[f64],
    n_res: usize,
    fd_step: f64,
) -> Matrix {
    let mut jac = vec![vec![0.0; params.len()]; n_res];
    let mut work = params.to_vec();
    for j in 0..params.len() {
        let h = fd_step * params[j].abs().max(fd_step);
        work[j] = params[j] + h;
        let plus = residuals(&work);
        work[j] = params[j] - h;
        let minus = residuals(&work);
        work[j] = params[j];
        for i in 0..n_res {
            jac[i][j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

fn cost_of(r: &[f64]) -> f64 {
    let c: f64 = r.iter().map(|v| v * v).sum();
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}

/// Minimize the sum of squared residuals starting from `init`.
///
/// `jacobian`, when given, returns the n_residuals x n_params matrix of
/// derivatives; otherwise central finite differences are used. Returns an
/// error only when the normal equations cannot be solved at all; a fit that
/// merely ran out of iterations comes back with `converged == false`.
pub fn fit_least_squares(
    init: &[f64],
    residuals: &dyn Fn(&[f64]) -> Vec<f64>,
    jacobian: Option<&dyn Fn(&[f64]) -> Matrix>,
    opts: &FitOptions,
) -> Result<FitOutcome> {
    let n_par = init.len();
    if n_par == 0 {
        return Err(Error::invalid("no parameters to fit".to_string()));
    }
    let mut params = init.to_vec();
    let mut r = residuals(&params);
    let n_res = r.len();
    if n_res < n_par {
        return Err(Error::invalid(format!(
            "{n_res} residuals cannot determine {n_par} parameters"
        )));
    }
    let mut cost = cost_of(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jtj = vec![vec![0.0; n_par]; n_par];

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = match jacobian {
            Some(f) => f(&params),
            None => finite_difference_jacobian(residuals, &params, n_res, opts.fd_step),
        };
        // Normal equations J^T J and gradient J^T r.
        let mut grad = vec![0.0; n_par];
        for a in 0..n_par {
            for b in a..n_par {
                let s: f64 = (0..n_res).map(|i| jac[i][a] * jac[i][b]).sum();
                jtj[a][b] = s;
                jtj[b][a] = s;
            }
            grad[a] = (0..n_res).map(|i| jac[i][a] * r[i]).sum();
        }

        let mut accepted = false;
        for _ in 0..30 {
            let mut damped = jtj.clone();
            for (d, row) in damped.iter_mut().enumerate() {
                row[d] += lambda * jtj[d][d].max(1e-30);
            }
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(step) = solve_linear(damped, rhs) else {
                lambda = (lambda * 10.0).min(1e14);
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(&step).map(|(p, s)| p + s).collect();
            let trial_r = residuals(&trial);
            let trial_cost = cost_of(&trial_r);
            if trial_cost < cost {
                let small_step = step
                    .iter()
                    .zip(&params)
                    .all(|(s, p)| s.abs() <= opts.step_tolerance * (p.abs() + opts.step_tolerance));
                let small_decrease = (cost - trial_cost) <= opts.cost_tolerance * cost;
                params = trial;
                r = trial_r;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-14);
                accepted = true;
                if small_step || small_decrease {
                    converged = true;
                }
                break;
            }
            lambda = (lambda * 10.0).min(1e14);
        }
        if !accepted {
            // No downhill step found at any damping: stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }

    // Curvature at the solution for covariance and conditioning.
    let jac = match jacobian {
        Some(f) => f(&params),
        None => finite_difference_jacobian(residuals, &params, n_res, opts.fd_step),
    };
    for a in 0..n_par {
        for b in a..n_par {
            let s: f64 = (0..n_res).map(|i| jac[i][a] * jac[i][b]).sum();
            jtj[a][b] = s;
            jtj[b][a] = s;
        }
    }
    let (covariance, condition) = match invert(&jtj) {
        Some(inv) => {
            let cond = one_norm(&jtj) * one_norm(&inv);
            let dof = (n_res.saturating_sub(n_par)).max(1) as f64;
            let sigma_sq = cost / dof;
            let cov =
                inv.iter().map(|row| row.iter().map(|v| v * sigma_sq).collect()).collect();
            (cov, cond)
        }
        None => (vec![vec![f64::INFINITY; n_par]; n_par], f64::INFINITY),
    };

    Ok(FitOutcome {
        params,
        covariance,
        residual_norm: cost.sqrt(),
        converged,
        iterations,
        condition,
    })
}

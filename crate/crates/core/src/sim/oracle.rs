//! The optimal trajectory `x*(t)` of `Σ f_i(·, t)` and its velocity.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::objective::ObjectiveModel;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    ClosedForm,
    NewtonContinuation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub x_star: Vector,
    /// `ẋ* = −H⁻¹ ∂∇f/∂t` at `x*`.
    pub v_star_opt: Vector,
    pub mode: OracleMode,
}

fn sum_grad(objectives: &[ObjectiveModel], x: &Vector, t: f64) -> Vector {
    objectives.iter().map(|o| o.oracle().grad(x, t)).sum()
}

fn sum_hessian(objectives: &[ObjectiveModel], x: &Vector, t: f64) -> Matrix {
    objectives.iter().map(|o| o.oracle().hessian(x, t)).sum()
}

fn closed_form(objectives: &[ObjectiveModel], t: f64) -> Option<Vector> {
    let mut h_sum: Option<Matrix> = None;
    let mut c_sum: Option<Vector> = None;
    for o in objectives {
        let (h, c) = o.oracle().quadratic_parts(t)?;
        h_sum = Some(h_sum.map_or(h.clone(), |s| s + h));
        c_sum = Some(c_sum.map_or(c.clone(), |s| s + c));
    }
    let c_sum = c_sum?;
    h_sum?.cholesky().map(|ch| ch.solve(&c_sum))
}

/// Damped Newton on `Σ ∇f_i(x, t) = 0`, halving the step until the residual
/// norm decreases.
pub fn newton_solve(objectives: &[ObjectiveModel], t: f64, guess: &Vector) -> Result<Vector> {
    let mut x = guess.clone();
    let mut r = sum_grad(objectives, &x, t);
    let mut history = vec![r.norm()];
    for _ in 0..NEWTON_MAX_ITERS {
        if r.norm() <= NEWTON_TOL {
            return Ok(x);
        }
        let step = sum_hessian(objectives, &x, t)
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::NewtonDiverged { residuals: history.clone() })?;
        let mut damping = 1.0;
        loop {
            let trial = &x - damping * &step;
            let r_trial = sum_grad(objectives, &trial, t);
            if r_trial.norm() < r.norm() || damping < 1e-10 {
                x = trial;
                r = r_trial;
                break;
            }
            damping *= 0.5;
        }
        history.push(r.norm());
        if history.len() > 2 && history[history.len() - 1] >= history[history.len() - 2] {
            // no further progress in floating point
            break;
        }
    }
    if r.norm() <= 1e-10 {
        Ok(x)
    } else {
        Err(Error::NewtonDiverged { residuals: history })
    }
}

/// `x*(t)`: closed form when every objective is quadratic, Newton otherwise.
pub fn oracle_solve(objectives: &[ObjectiveModel], t: f64, guess: &Vector) -> Result<Vector> {
    Ok(oracle_solution(objectives, t, guess)?.x_star)
}

pub fn oracle_solution(objectives: &[ObjectiveModel], t: f64, guess: &Vector) -> Result<OracleSolution> {
    let (x_star, mode) = match closed_form(objectives, t) {
        Some(x) => (x, OracleMode::ClosedForm),
        None => (newton_solve(objectives, t, guess)?, OracleMode::NewtonContinuation),
    };
    let rate: Vector = objectives.iter().map(|o| o.oracle().dgrad_dt(&x_star, t)).sum();
    let v_star_opt = sum_hessian(objectives, &x_star, t)
        .lu()
        .solve(&(-rate))
        .unwrap_or_else(|| Vector::from_element(x_star.len(), f64::NAN));
    Ok(OracleSolution {
        x_star,
        v_star_opt,
        mode,
    })
}

/// `‖Σ ∇f_i(x, t)‖₂`.
pub fn oracle_residual(objectives: &[ObjectiveModel], x: &Vector, t: f64) -> f64 {
    sum_grad(objectives, x, t).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{build_quadratic_tracking, Signal};

    #[test]
    fn single_sinusoid() {
        let objs = vec![build_quadratic_tracking(Matrix::identity(1, 1), vec![Signal::sin()]).unwrap()];
        for t in [0.0, 0.7, 3.0] {
            let sol = oracle_solution(&objs, t, &Vector::zeros(1)).unwrap();
            assert!((sol.x_star[0] - f64::sin(t)).abs() < 1e-15);
            assert!((sol.v_star_opt[0] - f64::cos(t)).abs() < 1e-15);
            assert_eq!(sol.mode, OracleMode::ClosedForm);
        }
    }

    #[test]
    fn newton_matches_closed_form_from_far_away() {
        let objs: Vec<_> = [0.6, 1.4]
            .iter()
            .map(|&c| build_quadratic_tracking(Matrix::identity(1, 1), vec![Signal::sin().scaled(c)]).unwrap())
            .collect();
        let t = 1.1;
        let x = newton_solve(&objs, t, &Vector::from_element(1, 1e6)).unwrap();
        assert!((x[0] - f64::sin(t)).abs() < 1e-10);
    }
}

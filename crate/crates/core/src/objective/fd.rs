use crate::linalg::Vector;

use super::ObjectiveModel;

pub const FD_STEP: f64 = 1e-5;

fn rel_err(fd: &Vector, analytic: &Vector) -> f64 {
    (fd - analytic).amax() / analytic.amax().max(1.0)
}

/// Worst relative error between the analytic derivatives and central
/// differences: gradient against the value, Hessian columns against the
/// gradient, `∂∇f/∂t` against the gradient in `t`.
pub fn finite_difference_check(obj: &ObjectiveModel, x: &Vector, t: f64, step: f64) -> f64 {
    let o = obj.oracle();
    let m = x.len();
    let grad = o.grad(x, t);
    let hess = o.hessian(x, t);
    let mut worst = 0.0f64;

    let mut fd_grad = Vector::zeros(m);
    for k in 0..m {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += step;
        xm[k] -= step;
        fd_grad[k] = (o.value(&xp, t) - o.value(&xm, t)) / (2.0 * step);
        let col = (o.grad(&xp, t) - o.grad(&xm, t)) / (2.0 * step);
        worst = worst.max(rel_err(&col, &hess.column(k).into_owned()));
    }
    worst = worst.max(rel_err(&fd_grad, &grad));

    let fd_t = (o.grad(x, t + step) - o.grad(x, t - step)) / (2.0 * step);
    worst.max(rel_err(&fd_t, &o.dgrad_dt(x, t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::objective::{build_quadratic_tracking, Signal, SignalKind};

    #[test]
    fn constant_objective_is_exact() {
        let obj = build_quadratic_tracking(Matrix::identity(1, 1), vec![Signal::new(SignalKind::Constant)]).unwrap();
        let err = finite_difference_check(&obj, &Vector::from_element(1, 1.0), 0.0, FD_STEP);
        assert!(err < 1e-9, "{err}");
    }
}

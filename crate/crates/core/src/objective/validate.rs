//! Sampled checks of the standing assumptions on a set of local objectives.

use std::fmt;

use crate::error::Result;
use crate::linalg::{condition_number, Matrix, Vector, SINGULAR_COND};

use super::{common_dim, ObjectiveModel, FD_STEP};

const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub passed: bool,
    /// Magnitude-only checks have no threshold; `passed` then means "finite".
    pub thresholded: bool,
    pub magnitude: f64,
    pub detail: String,
}

impl AssumptionCheck {
    fn threshold(passed: bool, magnitude: f64, detail: String) -> Self {
        Self {
            passed,
            thresholded: true,
            magnitude,
            detail,
        }
    }

    fn report(magnitude: f64, detail: String) -> Self {
        Self {
            passed: magnitude.is_finite(),
            thresholded: false,
            magnitude,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Identical, invertible Hessians.
    pub a1: AssumptionCheck,
    /// `‖∂∇f_i/∂t‖ < alpha_bound`.
    pub a2: AssumptionCheck,
    /// `H = Ω h` and `∂∇f/∂t = A g`.
    pub a3: AssumptionCheck,
    /// Pairwise gradient disagreement (reported).
    pub a5: AssumptionCheck,
    /// `∂²∇f/∂t²` and `∂H/∂t` magnitudes (reported).
    pub a7: AssumptionCheck,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.passed)
    }

    pub fn checks(&self) -> [(&'static str, &AssumptionCheck); 5] {
        [
            ("Assumption 1 (identical invertible Hessians)", &self.a1),
            ("Assumption 2 (bounded time-derivative of gradient)", &self.a2),
            ("Assumption 3 (parameterized decomposition)", &self.a3),
            ("Assumption 5 (bounded gradient disagreement)", &self.a5),
            ("Assumption 7 (bounded second time-derivatives)", &self.a7),
        ]
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks()
            .iter()
            .filter(|(_, c)| !c.passed)
            .map(|(name, c)| format!("{name}: {}", c.detail))
            .collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, c) in self.checks() {
            let status = match (c.passed, c.thresholded) {
                (true, true) => "pass",
                (true, false) => "ok",
                (false, _) => "FAIL",
            };
            writeln!(f, "{status:>4}  {name}: {}", c.detail)?;
        }
        Ok(())
    }
}

/// Evaluate every assumption over `samples`.
///
/// Agent `i` is evaluated at sample `(x_{(k+i) mod S}, t_k)` so that the
/// Hessian-identity check compares agents at different states.
pub fn validate_assumptions(
    objectives: &[ObjectiveModel],
    samples: &[(Vector, f64)],
    alpha_bound: f64,
) -> Result<ValidationReport> {
    common_dim(objectives)?;
    if samples.is_empty() {
        return Err(crate::error::Error::Validation("no validation samples".into()));
    }
    let s = samples.len();
    let mut hess_gap = 0.0f64;
    let mut worst_cond = 0.0f64;
    let mut max_rate = 0.0f64;
    let mut decomp_gap = 0.0f64;
    let mut grad_gap = 0.0f64;
    let mut rate2 = 0.0f64;
    let mut hess_rate = 0.0f64;

    for (k, (_, t)) in samples.iter().enumerate() {
        let t = *t;
        let at = |i: usize| &samples[(k + i) % s].0;
        let mut hessians: Vec<Matrix> = Vec::with_capacity(objectives.len());
        let mut grads: Vec<Vector> = Vec::with_capacity(objectives.len());
        for (i, obj) in objectives.iter().enumerate() {
            let o = obj.oracle();
            let x = at(i);
            let h = o.hessian(x, t);
            worst_cond = worst_cond.max(condition_number(&h));
            let rate = o.dgrad_dt(x, t);
            max_rate = max_rate.max(rate.norm());
            let gh = (&h - o.true_omega() * o.h(x, t)).norm();
            let gg = (&rate - o.true_a() * o.g(x, t)).norm();
            decomp_gap = decomp_gap.max(gh).max(gg);

            let d2 = (o.dgrad_dt(x, t + FD_STEP) - o.dgrad_dt(x, t - FD_STEP)) / (2.0 * FD_STEP);
            let dh = (o.hessian(x, t + FD_STEP) - o.hessian(x, t - FD_STEP)) / (2.0 * FD_STEP);
            rate2 = rate2.max(d2.norm());
            hess_rate = hess_rate.max(dh.norm());

            grads.push(o.grad(x, t));
            hessians.push(h);
        }
        for i in 0..objectives.len() {
            for j in i + 1..objectives.len() {
                let scale = 1.0f64.max(hessians[i].norm());
                hess_gap = hess_gap.max((&hessians[i] - &hessians[j]).norm() / scale);
                grad_gap = grad_gap.max((&grads[i] - &grads[j]).norm());
            }
        }
    }

    let a1_ok = hess_gap <= IDENTITY_TOL && worst_cond < SINGULAR_COND;
    Ok(ValidationReport {
        a1: AssumptionCheck::threshold(
            a1_ok,
            hess_gap,
            format!("max Hessian gap {hess_gap:.3e}, worst condition number {worst_cond:.3e}"),
        ),
        a2: AssumptionCheck::threshold(
            max_rate < alpha_bound,
            max_rate,
            format!("max ‖∂∇f/∂t‖ = {max_rate:.4} against bound {alpha_bound}"),
        ),
        a3: AssumptionCheck::threshold(
            decomp_gap < IDENTITY_TOL,
            decomp_gap,
            format!("max decomposition residual {decomp_gap:.3e}"),
        ),
        a5: AssumptionCheck::report(grad_gap, format!("max pairwise gradient gap {grad_gap:.4}")),
        a7: AssumptionCheck::report(
            rate2.max(hess_rate),
            format!("max ‖∂²∇f/∂t²‖ = {rate2:.4}, max ‖∂H/∂t‖ = {hess_rate:.3e}"),
        ),
    })
}

/// `Ω_i = Ω_j` for all pairs.
pub fn identical_omegas(objectives: &[ObjectiveModel]) -> bool {
    let omegas: Vec<Matrix> = objectives.iter().map(|o| o.oracle().true_omega()).collect();
    omegas.windows(2).all(|w| (&w[0] - &w[1]).norm() <= IDENTITY_TOL * 1.0f64.max(w[0].norm()))
}

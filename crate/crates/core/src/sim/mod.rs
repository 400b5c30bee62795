//! Fixed-step integration of closed loops, the optimal-trajectory oracle,
//! trace recording and metrics.

mod closed_loop;
mod integrator;
mod metrics;
mod oracle;
mod plant;
pub mod trace;

pub use closed_loop::{
    consensus_norm, ClosedLoop, ControllerRegistry, Diagnostics, Gains, InitialState, LoopBuilder, LoopSpec,
};
pub use integrator::{ExplicitEuler, Integrator, IntegratorConfig, IntegratorRegistry, Rhs, Rk4};
pub use metrics::{metrics, Metrics, V_TOLERANCE};
pub use oracle::{newton_solve, oracle_residual, oracle_solution, oracle_solve, OracleMode, OracleSolution};
pub use plant::{drag, feedback_linearize_vehicle, vehicle_acceleration, Plant};
pub use trace::{Trace, TraceLayout, TraceRecord};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Records kept in a non-finite abort diagnosis.
pub const ABORT_TAIL: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordPolicy {
    /// Record every this many steps; the first and last steps are always recorded.
    pub every: usize,
}

impl Default for RecordPolicy {
    fn default() -> Self {
        Self { every: 10 }
    }
}

fn record(lp: &dyn ClosedLoop, t: f64, y: &[f64], x_star: &Vector) -> TraceRecord {
    let x = lp.positions(y);
    let tracking_error = x.iter().map(|xi| (xi - x_star).norm()).fold(0.0, f64::max);
    let diag = lp.diagnostics(t, y);
    TraceRecord {
        t,
        consensus_error: consensus_norm(&x),
        x,
        x_star: x_star.clone(),
        v: lp.velocities(y),
        estimates: lp.estimates(y),
        tracking_error,
        estimator_error: diag.estimator_error,
        lyapunov_v: diag.lyapunov_v,
        lyapunov_w: diag.lyapunov_w,
    }
}

pub fn layout_of(lp: &dyn ClosedLoop) -> TraceLayout {
    TraceLayout {
        n_agents: lp.n_agents(),
        dim: lp.dim(),
        has_velocity: lp.has_velocity(),
        estimate_labels: lp.estimate_labels(),
    }
}

/// Integrate a closed loop from `t = 0` to the configured horizon.
///
/// Every step first hands the step-initial snapshot to
/// [`ClosedLoop::begin_step`], then advances all agents and estimators together.
pub fn simulate(lp: &mut dyn ClosedLoop, cfg: &IntegratorConfig, policy: RecordPolicy) -> Result<Trace> {
    cfg.validate()?;
    let integrator = IntegratorRegistry::default().get(&cfg.method)?;
    let every = policy.every.max(1);
    let n_steps = cfg.n_steps();
    let h = cfg.step;

    let mut y = lp.initial_state();
    let mut t = 0.0;
    let mut x_star = oracle_solve(lp.objectives(), t, &lp.positions(&y)[0])?;
    let mut records = vec![record(lp, t, &y, &x_star)];

    for k in 0..n_steps {
        lp.begin_step(t, &y)?;
        let next = {
            let lp_ref: &dyn ClosedLoop = lp;
            integrator.advance(&|tt, yy| lp_ref.derivative(tt, yy), t, &y, h)?
        };
        t = (k + 1) as f64 * h;
        if let Some(index) = next.iter().position(|v| !v.is_finite()) {
            let tail_start = records.len().saturating_sub(ABORT_TAIL);
            return Err(Error::NonFinite {
                t,
                index,
                tail: records.split_off(tail_start).into_boxed_slice(),
            });
        }
        y = next;
        if (k + 1) % every == 0 || k + 1 == n_steps {
            x_star = oracle_solve(lp.objectives(), t, &x_star)?;
            records.push(record(lp, t, &y, &x_star));
        }
    }
    Ok(Trace {
        layout: layout_of(lp),
        records,
    })
}

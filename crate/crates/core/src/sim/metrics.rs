//! Window aggregates over a recorded trace.

use crate::error::{Error, Result};

use super::trace::TraceRecord;

/// Per-step tolerance on Lyapunov increases.
pub const V_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub max_tracking_error: f64,
    pub max_consensus_error: f64,
    pub max_estimator_error: Option<f64>,
    /// Largest agent speed; zero for first-order plants.
    pub max_speed: f64,
    /// Consecutive records whose `V` rises by more than [`V_TOLERANCE`].
    pub v_violations: usize,
    /// Earliest time from which the tracking error stays within the
    /// tolerance through the end of the window, measured from the window start.
    pub settle_time: Option<f64>,
}

pub fn metrics(records: &[TraceRecord], t_a: f64, t_b: f64, settle_tol: f64) -> Result<Metrics> {
    let window: Vec<&TraceRecord> = records.iter().filter(|r| r.t >= t_a && r.t <= t_b).collect();
    if !(t_a < t_b) || window.is_empty() {
        return Err(Error::EmptyWindow(t_a, t_b));
    }
    let max = |f: &dyn Fn(&TraceRecord) -> f64| window.iter().map(|r| f(r)).fold(0.0, f64::max);
    let max_estimator_error = window
        .iter()
        .filter_map(|r| r.estimator_error)
        .reduce(f64::max);
    let max_speed = max(&|r| r.v.as_ref().map_or(0.0, |vs| vs.iter().map(|v| v.norm()).fold(0.0, f64::max)));
    let v_violations = window
        .windows(2)
        .filter(|w| match (w[0].lyapunov_v, w[1].lyapunov_v) {
            (Some(a), Some(b)) => b - a > V_TOLERANCE,
            _ => false,
        })
        .count();
    let settle_time = match window.iter().rposition(|r| r.tracking_error > settle_tol) {
        None => Some(0.0),
        Some(k) if k + 1 < window.len() => Some(window[k + 1].t - window[0].t),
        Some(_) => None,
    };
    Ok(Metrics {
        max_tracking_error: max(&|r| r.tracking_error),
        max_consensus_error: max(&|r| r.consensus_error),
        max_estimator_error,
        max_speed,
        v_violations,
        settle_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;

    fn rec(t: f64, err: f64, v: f64) -> TraceRecord {
        TraceRecord {
            t,
            x: vec![Vector::zeros(1)],
            x_star: Vector::zeros(1),
            v: None,
            estimates: vec![],
            tracking_error: err,
            consensus_error: 0.0,
            estimator_error: None,
            lyapunov_v: Some(v),
            lyapunov_w: None,
        }
    }

    #[test]
    fn pinned_trace_settles_immediately() {
        let recs: Vec<_> = (0..10).map(|k| rec(k as f64, 0.0, 1.0)).collect();
        let m = metrics(&recs, 0.0, 9.0, 1e-6).unwrap();
        assert_eq!(m.max_tracking_error, 0.0);
        assert_eq!(m.settle_time, Some(0.0));
        assert_eq!(m.v_violations, 0);
    }

    #[test]
    fn decreasing_v_has_no_violations() {
        let recs: Vec<_> = (0..10).map(|k| rec(k as f64, 1.0 / (k + 1) as f64, 10.0 - k as f64)).collect();
        let m = metrics(&recs, 0.0, 9.0, 0.2).unwrap();
        assert_eq!(m.v_violations, 0);
        assert_eq!(m.settle_time, Some(4.0));
    }

    #[test]
    fn counts_increases() {
        let recs = vec![rec(0.0, 0.0, 1.0), rec(1.0, 0.0, 2.0), rec(2.0, 0.0, 1.5), rec(3.0, 0.0, 1.5 + 1e-9)];
        assert_eq!(metrics(&recs, 0.0, 3.0, 1.0).unwrap().v_violations, 1);
    }

    #[test]
    fn empty_window_is_an_error() {
        let recs = vec![rec(0.0, 0.0, 1.0)];
        assert!(matches!(metrics(&recs, 5.0, 6.0, 1.0), Err(Error::EmptyWindow(..))));
        assert!(matches!(metrics(&recs, 1.0, 1.0, 1.0), Err(Error::EmptyWindow(..))));
    }
}

//! Time-varying local objectives.
//!
//! Each objective carries two faces. [`Measurement`] is everything a controller
//! may use: the measured gradient and the known factors `h`, `g` of the
//! Hessian / time-derivative decomposition `H = Ω h`, `∂∇f/∂t = A g`.
//! [`ObjectiveOracle`] exposes the exact Hessian, `∂∇f/∂t`, and the hidden
//! parameters `Ω`, `A`; it exists for validators, Lyapunov diagnostics and the
//! optimal-trajectory oracle, never for control.

mod families;
mod fd;
mod signal;
mod validate;

use std::fmt::Debug;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{from_rows, Matrix, MatrixSpec, Vector};

pub use families::{QuadraticTracking, SourceSeekLocal};
pub use fd::{finite_difference_check, FD_STEP};
pub use signal::{Signal, SignalKind};
pub use validate::{identical_omegas, validate_assumptions, AssumptionCheck, ValidationReport};

/// Implemented by each objective family.
pub trait LocalObjective: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    fn value(&self, x: &Vector, t: f64) -> f64;
    fn grad(&self, x: &Vector, t: f64) -> Vector;
    fn hessian(&self, x: &Vector, t: f64) -> Matrix;
    fn dgrad_dt(&self, x: &Vector, t: f64) -> Vector;
    fn h(&self, x: &Vector, t: f64) -> Matrix;
    fn g(&self, x: &Vector, t: f64) -> Vector;
    /// `dh/dt` along a trajectory through `x` with velocity `xdot`.
    fn h_total_deriv(&self, x: &Vector, xdot: &Vector, t: f64) -> Matrix;
    /// `dg/dt` along a trajectory through `x` with velocity `xdot`.
    fn g_total_deriv(&self, x: &Vector, xdot: &Vector, t: f64) -> Vector;
    fn true_omega(&self) -> Matrix;
    fn true_a(&self) -> Matrix;
    /// `(H, c)` when `∇f(x,t) = H x − c(t)` with constant `H`.
    fn quadratic_parts(&self, _t: f64) -> Option<(Matrix, Vector)> {
        None
    }
}

/// What a controller is allowed to query.
pub trait Measurement {
    fn dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    fn grad(&self, x: &Vector, t: f64) -> Vector;
    fn h(&self, x: &Vector, t: f64) -> Matrix;
    fn g(&self, x: &Vector, t: f64) -> Vector;
    fn h_total_deriv(&self, x: &Vector, xdot: &Vector, t: f64) -> Matrix;
    fn g_total_deriv(&self, x: &Vector, xdot: &Vector, t: f64) -> Vector;
}

/// Additive uniform gradient noise in `[-magnitude, magnitude]`, a pure
/// function of `(seed, t)`. Zero magnitude disables it.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SensorNoise {
    pub magnitude: f64,
    pub seed: u64,
}

impl SensorNoise {
    fn perturb(&self, mut g: Vector, t: f64) -> Vector {
        if self.magnitude == 0.0 {
            return g;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ t.to_bits().rotate_left(17));
        for v in g.iter_mut() {
            *v += rng.gen_range(-self.magnitude..=self.magnitude);
        }
        g
    }
}

#[derive(Debug, Clone)]
pub struct ObjectiveModel {
    inner: Arc<dyn LocalObjective>,
    noise: SensorNoise,
}

impl ObjectiveModel {
    pub fn new(inner: impl LocalObjective + 'static) -> Self {
        Self {
            inner: Arc::new(inner),
            noise: SensorNoise::default(),
        }
    }

    pub fn with_noise(mut self, noise: SensorNoise) -> Self {
        self.noise = noise;
        self
    }

    pub fn value(&self, x: &Vector, t: f64) -> f64 {
        self.inner.value(x, t)
    }

    /// Privileged access to exact derivatives and hidden parameters.
    pub fn oracle(&self) -> ObjectiveOracle<'_> {
        ObjectiveOracle(self.inner.as_ref())
    }
}

impl Measurement for ObjectiveModel {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }

    fn grad(&self, x: &Vector, t: f64) -> Vector {
        self.noise.perturb(self.inner.grad(x, t), t)
    }

    fn h(&self, x: &Vector, t: f64) -> Matrix {
        self.inner.h(x, t)
    }

    fn g(&self, x: &Vector, t: f64) -> Vector {
        self.inner.g(x, t)
    }

    fn h_total_deriv(&self, x: &Vector, xdot: &Vector, t: f64) -> Matrix {
        self.inner.h_total_deriv(x, xdot, t)
    }

    fn g_total_deriv(&self, x: &Vector, xdot: &Vector, t: f64) -> Vector {
        self.inner.g_total_deriv(x, xdot, t)
    }
}

#[derive(Clone, Copy)]
pub struct ObjectiveOracle<'a>(&'a dyn LocalObjective);

impl ObjectiveOracle<'_> {
    pub fn value(&self, x: &Vector, t: f64) -> f64 {
        self.0.value(x, t)
    }

    /// Noise-free gradient.
    pub fn grad(&self, x: &Vector, t: f64) -> Vector {
        self.0.grad(x, t)
    }

    pub fn hessian(&self, x: &Vector, t: f64) -> Matrix {
        self.0.hessian(x, t)
    }

    pub fn dgrad_dt(&self, x: &Vector, t: f64) -> Vector {
        self.0.dgrad_dt(x, t)
    }

    pub fn h(&self, x: &Vector, t: f64) -> Matrix {
        self.0.h(x, t)
    }

    pub fn g(&self, x: &Vector, t: f64) -> Vector {
        self.0.g(x, t)
    }

    pub fn h_total_deriv(&self, x: &Vector, xdot: &Vector, t: f64) -> Matrix {
        self.0.h_total_deriv(x, xdot, t)
    }

    pub fn g_total_deriv(&self, x: &Vector, xdot: &Vector, t: f64) -> Vector {
        self.0.g_total_deriv(x, xdot, t)
    }

    pub fn true_omega(&self) -> Matrix {
        self.0.true_omega()
    }

    pub fn true_a(&self) -> Matrix {
        self.0.true_a()
    }

    pub fn quadratic_parts(&self, t: f64) -> Option<(Matrix, Vector)> {
        self.0.quadratic_parts(t)
    }
}

/// `(x − traj(t))ᵀ K (x − traj(t))` with the trajectory taken as known signals.
pub fn build_quadratic_tracking(k: Matrix, traj: Vec<Signal>) -> Result<ObjectiveModel> {
    Ok(ObjectiveModel::new(QuadraticTracking::tracking(k, traj)?))
}

/// `(x − B s(t))ᵀ K (x − B s(t))`, with `B` an unknown trajectory parameter.
pub fn build_parametric_tracking(k: Matrix, b: Matrix, signals: Vec<Signal>) -> Result<ObjectiveModel> {
    Ok(ObjectiveModel::new(QuadraticTracking::new(k, b, signals)?))
}

/// `(x + k1 r1(t) + k2 r2(t))²` on the real line.
pub fn build_power_supply(k1: f64, k2: f64, r1: Signal, r2: Signal) -> Result<ObjectiveModel> {
    let b = Matrix::from_row_slice(1, 2, &[-k1, -k2]);
    build_parametric_tracking(Matrix::identity(1, 1), b, vec![r1, r2])
}

pub fn build_source_seek_local(
    a: f64,
    b: Matrix,
    r: Vec<Signal>,
    anchors: Vec<Vector>,
    weights: Vec<f64>,
) -> Result<ObjectiveModel> {
    Ok(ObjectiveModel::new(SourceSeekLocal::new(a, b, r, anchors, weights)?))
}

/// Objective family as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    QuadraticTracking {
        k: MatrixSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<Vec<f64>>>,
        signals: Vec<Signal>,
    },
    PowerSupply {
        k1: f64,
        k2: f64,
        r1: Signal,
        r2: Signal,
    },
    SourceSeekLocal {
        a: f64,
        b: Vec<Vec<f64>>,
        signals: Vec<Signal>,
        anchors: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<ObjectiveModel> {
        match self {
            ObjectiveSpec::QuadraticTracking { k, b, signals } => match b {
                Some(rows) => {
                    let b = from_rows(rows)?;
                    build_parametric_tracking(k.to_matrix(b.nrows())?, b, signals.clone())
                }
                None => build_quadratic_tracking(k.to_matrix(signals.len())?, signals.clone()),
            },
            ObjectiveSpec::PowerSupply { k1, k2, r1, r2 } => build_power_supply(*k1, *k2, *r1, *r2),
            ObjectiveSpec::SourceSeekLocal {
                a,
                b,
                signals,
                anchors,
                weights,
            } => build_source_seek_local(
                *a,
                from_rows(b)?,
                signals.clone(),
                anchors.iter().map(|r| Vector::from_column_slice(r)).collect(),
                weights.clone(),
            ),
        }
    }
}

/// Dimension check shared by every multi-agent entry point.
pub fn common_dim(objectives: &[ObjectiveModel]) -> Result<usize> {
    let m = objectives
        .first()
        .map(Measurement::dim)
        .ok_or_else(|| Error::Dimension("no objectives".into()))?;
    if let Some(bad) = objectives.iter().position(|o| o.dim() != m) {
        return Err(Error::Dimension(format!(
            "objective {bad} has dimension {}, objective 0 has {m}",
            objectives[bad].dim()
        )));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn remark_two_decomposition() {
        // f = k1 (x − k2 t)²
        let (k1, k2) = (1.7, 0.4);
        let obj = build_parametric_tracking(
            Matrix::from_element(1, 1, k1),
            Matrix::from_element(1, 1, k2),
            vec![Signal::new(SignalKind::Linear)],
        )
        .unwrap();
        let o = obj.oracle();
        assert!((o.true_omega()[(0, 0)] - 2.0 * k1).abs() < 1e-15);
        assert!((o.true_a()[(0, 0)] + 2.0 * k1 * k2).abs() < 1e-15);
        assert_eq!(obj.h(&v(&[0.3]), 2.0)[(0, 0)], 1.0);
        assert_eq!(obj.g(&v(&[0.3]), 2.0)[0], 1.0);
    }

    #[test]
    fn static_trajectory_has_no_time_derivative() {
        let obj = build_quadratic_tracking(Matrix::identity(1, 1), vec![Signal::new(SignalKind::Constant).scaled(0.0)]).unwrap();
        assert_eq!(obj.oracle().dgrad_dt(&v(&[1.0]), 3.0)[0], 0.0);
        assert_eq!(obj.grad(&v(&[0.0]), 3.0)[0], 0.0);
    }

    #[test]
    fn circular_tracking_at_origin() {
        let obj = build_quadratic_tracking(Matrix::identity(2, 2), vec![Signal::sin(), Signal::cos()]).unwrap();
        let x = v(&[0.0, 0.0]);
        let o = obj.oracle();
        assert_eq!(obj.grad(&x, 0.0), v(&[0.0, -2.0]));
        assert_eq!(o.hessian(&x, 0.0), 2.0 * Matrix::identity(2, 2));
        assert_eq!(o.dgrad_dt(&x, 0.0), v(&[-2.0, 0.0]));
        assert!(finite_difference_check(&obj, &x, 0.0, FD_STEP) < 1e-6);
    }

    #[test]
    fn source_seek_hessian_for_first_agent() {
        let obj = build_source_seek_local(
            0.9,
            Matrix::from_diagonal(&v(&[1.9, 2.1])),
            vec![Signal::sin(), Signal::cos()],
            vec![v(&[-6.0, 6.0]), v(&[6.0, 6.0]), v(&[6.0, -6.0]), v(&[-6.0, -6.0])],
            vec![0.1, 0.1, 0.0, 0.0],
        )
        .unwrap();
        let h = obj.oracle().hessian(&v(&[4.0, 4.0]), 0.0);
        let expected = 2.0 / 0.9 + 0.4;
        assert!((h[(0, 0)] - expected).abs() < 1e-12 && h[(0, 1)] == 0.0);
        assert!((expected - 2.6222).abs() < 1e-4);
        assert!(finite_difference_check(&obj, &v(&[4.0, 4.0]), 0.0, FD_STEP) < 1e-6);
    }

    #[test]
    fn source_seek_gradient_vanishes_at_source_without_anchors() {
        let b = Matrix::from_diagonal(&v(&[1.9, 2.1]));
        let obj = build_source_seek_local(0.9, b.clone(), vec![Signal::sin(), Signal::cos()], vec![], vec![]).unwrap();
        let t: f64 = 0.7;
        let src = b * v(&[t.sin(), t.cos()]);
        assert!(obj.grad(&src, t).norm() < 1e-14);
    }

    #[test]
    fn power_supply_decomposition() {
        let obj = build_power_supply(2.0, 3.0, Signal::sin(), Signal::new(SignalKind::Log1p)).unwrap();
        let x = v(&[0.5]);
        let o = obj.oracle();
        for t in [0.0, 1.0, 4.0] {
            let ag = o.true_a() * obj.g(&x, t);
            assert!((o.dgrad_dt(&x, t) - ag).norm() < 1e-12);
        }
        assert!(finite_difference_check(&obj, &x, 1.0, FD_STEP) < 1e-6);
    }

    #[test]
    fn rejects_non_pd_weight() {
        let k = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(build_quadratic_tracking(k, vec![Signal::sin(), Signal::cos()]).is_err());
    }

    #[test]
    fn noise_hook_is_deterministic_and_off_by_default() {
        let base = build_quadratic_tracking(Matrix::identity(1, 1), vec![Signal::sin()]).unwrap();
        let noisy = base.clone().with_noise(SensorNoise { magnitude: 0.1, seed: 7 });
        let x = v(&[0.2]);
        assert_eq!(base.grad(&x, 1.0), base.oracle().grad(&x, 1.0));
        assert_eq!(noisy.grad(&x, 1.0), noisy.grad(&x, 1.0));
        assert!((noisy.grad(&x, 1.0) - base.grad(&x, 1.0)).amax() <= 0.1);
    }

    #[test]
    fn spec_builds_each_family() {
        let text = r#"
            [[o]]
            family = "quadratic_tracking"
            k = 1.0
            signals = [{ kind = "sin" }]

            [[o]]
            family = "power_supply"
            k1 = 1.0
            k2 = 2.0
            r1 = { kind = "sin" }
            r2 = { kind = "t2_exp" }

            [[o]]
            family = "source_seek_local"
            a = 0.9
            b = [[1.9, 0.0], [0.0, 2.1]]
            signals = [{ kind = "sin" }, { kind = "cos" }]
            anchors = [[-6.0, 6.0]]
            weights = [0.1]
        "#;
        #[derive(Deserialize)]
        struct Wrap {
            o: Vec<ObjectiveSpec>,
        }
        let w: Wrap = toml::from_str(text).unwrap();
        let dims: Vec<usize> = w.o.iter().map(|s| s.build().unwrap().dim()).collect();
        assert_eq!(dims, vec![1, 1, 2]);
    }
}

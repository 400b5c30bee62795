//! Concrete objective families. Every family here has a constant Hessian and a
//! gradient affine in `x`, so the minimizer of a sum is available in closed form.

use crate::error::{Error, Result};
use crate::linalg::{require_spd, Matrix, Vector};

use super::signal::Signal;
use super::LocalObjective;

fn signal_vector(signals: &[Signal], t: f64, order: usize) -> Vector {
    Vector::from_iterator(signals.len(), signals.iter().map(|s| s.eval(t)[order]))
}

/// `f(x,t) = (x − B s(t))ᵀ K (x − B s(t))`.
///
/// The controller sees `h = I` and `g = ṡ(t)`; `Ω = 2K` and `A = −2KB` stay hidden.
#[derive(Debug, Clone)]
pub struct QuadraticTracking {
    k: Matrix,
    b: Matrix,
    signals: Vec<Signal>,
}

impl QuadraticTracking {
    pub fn new(k: Matrix, b: Matrix, signals: Vec<Signal>) -> Result<Self> {
        require_spd(&k, "K")?;
        if b.nrows() != k.nrows() || b.ncols() != signals.len() {
            return Err(Error::Dimension(format!(
                "B is {}x{}, expected {}x{}",
                b.nrows(),
                b.ncols(),
                k.nrows(),
                signals.len()
            )));
        }
        Ok(Self { k, b, signals })
    }

    /// Tracking of `traj(t)` directly, i.e. `B = I`.
    pub fn tracking(k: Matrix, traj: Vec<Signal>) -> Result<Self> {
        let m = traj.len();
        Self::new(k, Matrix::identity(m, m), traj)
    }

    fn target(&self, t: f64) -> Vector {
        &self.b * signal_vector(&self.signals, t, 0)
    }
}

impl LocalObjective for QuadraticTracking {
    fn dim(&self) -> usize {
        self.k.nrows()
    }

    fn param_dim(&self) -> usize {
        self.signals.len()
    }

    fn value(&self, x: &Vector, t: f64) -> f64 {
        let e = x - self.target(t);
        e.dot(&(&self.k * &e))
    }

    fn grad(&self, x: &Vector, t: f64) -> Vector {
        2.0 * &self.k * (x - self.target(t))
    }

    fn hessian(&self, _x: &Vector, _t: f64) -> Matrix {
        2.0 * &self.k
    }

    fn dgrad_dt(&self, _x: &Vector, t: f64) -> Vector {
        -2.0 * &self.k * &self.b * signal_vector(&self.signals, t, 1)
    }

    fn h(&self, _x: &Vector, _t: f64) -> Matrix {
        Matrix::identity(self.dim(), self.dim())
    }

    fn g(&self, _x: &Vector, t: f64) -> Vector {
        signal_vector(&self.signals, t, 1)
    }

    fn h_total_deriv(&self, _x: &Vector, _xdot: &Vector, _t: f64) -> Matrix {
        Matrix::zeros(self.dim(), self.dim())
    }

    fn g_total_deriv(&self, _x: &Vector, _xdot: &Vector, t: f64) -> Vector {
        signal_vector(&self.signals, t, 2)
    }

    fn true_omega(&self) -> Matrix {
        2.0 * &self.k
    }

    fn true_a(&self) -> Matrix {
        -2.0 * &self.k * &self.b
    }

    fn quadratic_parts(&self, t: f64) -> Option<(Matrix, Vector)> {
        let h = 2.0 * &self.k;
        let c = &h * self.target(t);
        Some((h, c))
    }
}

/// Source-seeking local objective: inverse received signal strength plus
/// weighted squared distances to the anchors this agent can see,
/// `F(x,t) = ‖x − b r(t)‖²/a + Σ_j q_j ‖x − R_j‖²`.
#[derive(Debug, Clone)]
pub struct SourceSeekLocal {
    a: f64,
    b: Matrix,
    signals: Vec<Signal>,
    anchors: Vec<Vector>,
    weights: Vec<f64>,
}

impl SourceSeekLocal {
    pub fn new(a: f64, b: Matrix, signals: Vec<Signal>, anchors: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Validation(format!("source power a = {a} must be positive")));
        }
        if b.ncols() != signals.len() {
            return Err(Error::Dimension(format!(
                "b has {} columns but {} trajectory signals given",
                b.ncols(),
                signals.len()
            )));
        }
        if anchors.len() != weights.len() {
            return Err(Error::Dimension(format!("{} anchors but {} weights", anchors.len(), weights.len())));
        }
        if let Some(r) = anchors.iter().find(|r| r.len() != b.nrows()) {
            return Err(Error::Dimension(format!("anchor of length {} in {}-dimensional space", r.len(), b.nrows())));
        }
        if let Some(q) = weights.iter().find(|&&q| !(q >= 0.0)) {
            return Err(Error::Validation(format!("anchor weight {q} must be nonnegative")));
        }
        Ok(Self {
            a,
            b,
            signals,
            anchors,
            weights,
        })
    }

    fn source(&self, t: f64) -> Vector {
        &self.b * signal_vector(&self.signals, t, 0)
    }

    fn curvature(&self) -> f64 {
        2.0 / self.a + 2.0 * self.weights.iter().sum::<f64>()
    }

    fn identity(&self) -> Matrix {
        Matrix::identity(self.dim(), self.dim())
    }
}

impl LocalObjective for SourceSeekLocal {
    fn dim(&self) -> usize {
        self.b.nrows()
    }

    fn param_dim(&self) -> usize {
        self.signals.len()
    }

    fn value(&self, x: &Vector, t: f64) -> f64 {
        let src = (x - self.source(t)).norm_squared() / self.a;
        let anchors: f64 = self
            .anchors
            .iter()
            .zip(&self.weights)
            .map(|(r, q)| q * (x - r).norm_squared())
            .sum();
        src + anchors
    }

    fn grad(&self, x: &Vector, t: f64) -> Vector {
        let mut g = (2.0 / self.a) * (x - self.source(t));
        for (r, q) in self.anchors.iter().zip(&self.weights) {
            g += 2.0 * q * (x - r);
        }
        g
    }

    fn hessian(&self, _x: &Vector, _t: f64) -> Matrix {
        self.curvature() * self.identity()
    }

    fn dgrad_dt(&self, _x: &Vector, t: f64) -> Vector {
        (-2.0 / self.a) * &self.b * signal_vector(&self.signals, t, 1)
    }

    fn h(&self, _x: &Vector, _t: f64) -> Matrix {
        self.identity()
    }

    fn g(&self, _x: &Vector, t: f64) -> Vector {
        signal_vector(&self.signals, t, 1)
    }

    fn h_total_deriv(&self, _x: &Vector, _xdot: &Vector, _t: f64) -> Matrix {
        Matrix::zeros(self.dim(), self.dim())
    }

    fn g_total_deriv(&self, _x: &Vector, _xdot: &Vector, t: f64) -> Vector {
        signal_vector(&self.signals, t, 2)
    }

    fn true_omega(&self) -> Matrix {
        self.curvature() * self.identity()
    }

    fn true_a(&self) -> Matrix {
        (-2.0 / self.a) * &self.b
    }

    fn quadratic_parts(&self, t: f64) -> Option<(Matrix, Vector)> {
        let mut c = (2.0 / self.a) * self.source(t);
        for (r, q) in self.anchors.iter().zip(&self.weights) {
            c += 2.0 * q * r;
        }
        Some((self.hessian(&c, t), c))
    }
}

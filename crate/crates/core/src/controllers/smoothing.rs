use serde::{Deserialize, Serialize};

use crate::linalg::Vector;

/// Boundary-layer parameters of the smoothed sign `y / (|y| + ε e^{-ct})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub epsilon: f64,
    pub c: f64,
}

impl SmoothingParams {
    /// Boundary-layer width `ε e^{-ct}` at time `t`.
    pub fn width(&self, t: f64) -> f64 {
        self.epsilon * (-self.c * t).exp()
    }
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self { epsilon: 0.1, c: 0.1 }
    }
}

pub fn smooth_sign(y: &Vector, t: f64, params: &SmoothingParams) -> Vector {
    let w = params.width(t);
    y.map(|v| v / (v.abs() + w))
}

use serde::{Deserialize, Serialize};

/// Scalar time signal `amplitude · base(frequency · t + phase)` with analytic
/// first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub kind: SignalKind,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Constant,
    Linear,
    Square,
    Sin,
    Cos,
    /// `τ² e^{-τ}`
    T2Exp,
    /// `ln(τ + 1)`
    Log1p,
}

fn one() -> f64 {
    1.0
}

impl Signal {
    pub fn new(kind: SignalKind) -> Self {
        Self {
            kind,
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0,
        }
    }

    pub fn scaled(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn sin() -> Self {
        Self::new(SignalKind::Sin)
    }

    pub fn cos() -> Self {
        Self::new(SignalKind::Cos)
    }

    /// Value and first two time derivatives.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let w = self.frequency;
        let tau = w * t + self.phase;
        let [f, d, dd] = match self.kind {
            SignalKind::Constant => [1.0, 0.0, 0.0],
            SignalKind::Linear => [tau, 1.0, 0.0],
            SignalKind::Square => [tau * tau, 2.0 * tau, 2.0],
            SignalKind::Sin => [tau.sin(), tau.cos(), -tau.sin()],
            SignalKind::Cos => [tau.cos(), -tau.sin(), -tau.cos()],
            SignalKind::T2Exp => {
                let e = (-tau).exp();
                [tau * tau * e, (2.0 * tau - tau * tau) * e, (2.0 - 4.0 * tau + tau * tau) * e]
            }
            SignalKind::Log1p => [tau.ln_1p(), 1.0 / (tau + 1.0), -1.0 / ((tau + 1.0) * (tau + 1.0))],
        };
        let a = self.amplitude;
        [a * f, a * w * d, a * w * w * dd]
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t)[0]
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.eval(t)[1]
    }

    pub fn accel(&self, t: f64) -> f64 {
        self.eval(t)[2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_central_differences() {
        let kinds = [
            SignalKind::Constant,
            SignalKind::Linear,
            SignalKind::Square,
            SignalKind::Sin,
            SignalKind::Cos,
            SignalKind::T2Exp,
            SignalKind::Log1p,
        ];
        let h = 1e-5;
        for kind in kinds {
            let s = Signal {
                kind,
                amplitude: 1.3,
                frequency: 0.7,
                phase: 0.2,
            };
            for &t in &[0.0, 0.9, 3.3] {
                let [_, d, dd] = s.eval(t);
                let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
                let fdd = (s.rate(t + h) - s.rate(t - h)) / (2.0 * h);
                assert!((fd - d).abs() < 1e-7, "{kind:?} rate at {t}");
                assert!((fdd - dd).abs() < 1e-7, "{kind:?} accel at {t}");
            }
        }
    }
}

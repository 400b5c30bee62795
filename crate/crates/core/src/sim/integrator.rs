//! Fixed-step explicit integrators, selectable by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-hand side `ẏ = f(t, y)`.
pub type Rhs<'a> = dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + 'a;

pub trait Integrator: Send + Sync {
    fn name(&self) -> &'static str;
    /// One step of size `h` from `(t, y)`.
    fn advance(&self, f: &Rhs<'_>, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>;
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(yi, ki)| yi + a * ki).collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExplicitEuler;

impl Integrator for ExplicitEuler {
    fn name(&self) -> &'static str {
        "explicit-euler"
    }

    fn advance(&self, f: &Rhs<'_>, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
        Ok(axpy(y, h, &f(t, y)?))
    }
}

/// Classical fourth-order Runge–Kutta.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rk4;

impl Integrator for Rk4 {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn advance(&self, f: &Rhs<'_>, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
        let k1 = f(t, y)?;
        let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
        let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
        let k4 = f(t + h, &axpy(y, h, &k3))?;
        Ok((0..y.len())
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }
}

#[derive(Clone)]
pub struct IntegratorRegistry {
    entries: BTreeMap<&'static str, Arc<dyn Integrator>>,
}

impl Default for IntegratorRegistry {
    fn default() -> Self {
        let mut reg = Self {
            entries: BTreeMap::new(),
        };
        reg.register(Arc::new(ExplicitEuler));
        reg.register(Arc::new(Rk4));
        reg
    }
}

impl IntegratorRegistry {
    pub fn register(&mut self, integrator: Arc<dyn Integrator>) {
        self.entries.insert(integrator.name(), integrator);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Integrator>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "integrator",
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
}

fn default_method() -> String {
    "rk4".into()
}

fn default_step() -> f64 {
    1e-3
}

fn default_t_end() -> f64 {
    20.0
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: default_method(),
            step: default_step(),
            t_end: default_t_end(),
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Validation(format!("integrator step {} must be positive", self.step)));
        }
        if !(self.t_end >= self.step && self.t_end.is_finite()) {
            return Err(Error::Validation(format!(
                "horizon t_end = {} must be at least one step ({})",
                self.t_end, self.step
            )));
        }
        IntegratorRegistry::default().get(&self.method).map(|_| ())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.step).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![-y[0]])
    }

    #[test]
    fn rk4_local_error_is_fifth_order() {
        let exact = |h: f64| (-h).exp();
        let e1 = (Rk4.advance(&decay, 0.0, &[1.0], 0.1).unwrap()[0] - exact(0.1)).abs();
        let e2 = (Rk4.advance(&decay, 0.0, &[1.0], 0.05).unwrap()[0] - exact(0.05)).abs();
        let ratio = e1 / e2;
        assert!((ratio - 32.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn euler_step() {
        assert_eq!(ExplicitEuler.advance(&decay, 0.0, &[2.0], 0.5).unwrap(), vec![1.0]);
    }

    #[test]
    fn registry_lookup() {
        let reg = IntegratorRegistry::default();
        assert_eq!(reg.names(), vec!["explicit-euler", "rk4"]);
        assert!(matches!(reg.get("midpoint"), Err(Error::Unknown { .. })));
    }

    #[test]
    fn config_bounds() {
        let mut cfg = IntegratorConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.n_steps(), 20_000);
        cfg.t_end = 1e-4;
        assert!(cfg.validate().is_err());
    }
}

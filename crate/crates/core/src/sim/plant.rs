//! Agent dynamics below the control input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Quadratic drag `h(v) = (−v₁|v₁|, −v₂|v₂|, …)`.
pub fn drag(v: &Vector) -> Vector {
    v.map(|c| -c * c.abs())
}

/// Torque that turns `b v̇ = τ + c h(v)` into `v̇ = u`: `τ = b u − c h(v)`.
pub fn feedback_linearize_vehicle(u: &Vector, v: &Vector, mass: f64, friction: &Vector) -> Vector {
    mass * u - friction.component_mul(&drag(v))
}

/// `v̇ = (τ + c h(v)) / b`.
pub fn vehicle_acceleration(tau: &Vector, v: &Vector, mass: f64, friction: &Vector) -> Vector {
    (tau + friction.component_mul(&drag(v))) / mass
}

/// How a double-integrator control input reaches the velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Plant {
    #[default]
    DoubleIntegrator,
    /// Per-agent mass `b_i` and diagonal friction `c_i`, driven through
    /// [`feedback_linearize_vehicle`].
    Vehicle { mass: Vec<f64>, friction: Vec<Vec<f64>> },
}

impl Plant {
    pub fn validate(&self, n_agents: usize, dim: usize) -> Result<()> {
        match self {
            Plant::DoubleIntegrator => Ok(()),
            Plant::Vehicle { mass, friction } => {
                if mass.len() != n_agents || friction.len() != n_agents {
                    return Err(Error::Dimension(format!(
                        "vehicle plant lists {} masses and {} friction vectors for {n_agents} agents",
                        mass.len(),
                        friction.len()
                    )));
                }
                if let Some(b) = mass.iter().find(|&&b| !(b > 0.0)) {
                    return Err(Error::Validation(format!("vehicle mass {b} must be positive")));
                }
                if let Some(c) = friction.iter().find(|c| c.len() != dim) {
                    return Err(Error::Dimension(format!("friction of length {} in dimension {dim}", c.len())));
                }
                Ok(())
            }
        }
    }

    /// Velocity rate of agent `i` under control `u`.
    pub fn acceleration(&self, i: usize, u: &Vector, v: &Vector) -> Vector {
        match self {
            Plant::DoubleIntegrator => u.clone(),
            Plant::Vehicle { mass, friction } => {
                let c = Vector::from_column_slice(&friction[i]);
                let tau = feedback_linearize_vehicle(u, v, mass[i], &c);
                vehicle_acceleration(&tau, v, mass[i], &c)
            }
        }
    }
}

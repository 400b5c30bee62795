//! Distributed controllers: the finite-time average-tracking estimator, the
//! single-integrator controller built on it, and the double-integrator
//! controller fed by two-hop global sums.
//!
//! Each step function only sees agent `i`, the neighbor views it is handed, and
//! (double integrator) the aggregates it obtained from the summation rounds.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::linalg::{checked_inverse, sgn, Matrix, Vector};
use crate::objective::Measurement;

use super::centralized::product_rule;
use super::smoothing::{smooth_sign, SmoothingParams};

#[derive(Debug, Clone, PartialEq)]
pub struct DistributedSiAgentState {
    /// Estimator internal state σ_i.
    pub sigma: Vector,
    /// Adaptive consensus gains β_ij keyed by neighbor.
    pub beta: BTreeMap<usize, f64>,
    pub theta_hat: Matrix,
    pub gamma_theta: Matrix,
    pub alpha_est: f64,
}

impl DistributedSiAgentState {
    /// `ξ_i = σ_i + ∇f_i`.
    pub fn xi(&self, grad: &Vector) -> Vector {
        &self.sigma + grad
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributedDiAgentState {
    pub beta: BTreeMap<usize, f64>,
    pub theta_hat: Matrix,
    pub omega_hat: Matrix,
    pub a_hat: Matrix,
    pub gamma_theta: Matrix,
    pub gamma_omega: Matrix,
    pub gamma_a: Matrix,
    pub k1: f64,
    pub k2: f64,
}

/// What agent `i` receives from a single-integrator neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct SiNeighbor {
    pub id: usize,
    pub x: Vector,
    pub xi: Vector,
}

/// What agent `i` receives from a double-integrator neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct DiNeighbor {
    pub id: usize,
    pub weight: f64,
    pub x: Vector,
    pub v: Vector,
}

/// Network-wide sums available to every agent after the summation rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalAggregates {
    /// `ζ_n = Σ ∇f_i`.
    pub zeta_n: Vector,
    /// `Σ h_j v_j`.
    pub sum_hv: Vector,
    /// `ζ_g = Σ (∇f_i + h_i⁻¹ θ̂_i g_i + v_i)`.
    pub zeta_g: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiAgentControl {
    pub u: Vector,
    pub d_sigma: Vector,
    pub d_beta: BTreeMap<usize, f64>,
    pub d_theta: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiAgentControl {
    pub u: Vector,
    pub d_beta: BTreeMap<usize, f64>,
    pub d_theta: Matrix,
    pub d_omega: Matrix,
    pub d_a: Matrix,
}

/// `σ̇_i = −α Σ_{j∈N_i} sgn(ξ_i − ξ_j)` for one agent.
pub fn dat_agent_rate<'a>(xi: &Vector, neighbor_xis: impl IntoIterator<Item = &'a Vector>, alpha: f64) -> Vector {
    let mut rate = Vector::zeros(xi.len());
    for xj in neighbor_xis {
        rate -= (xi - xj).map(sgn);
    }
    alpha * rate
}

/// Estimator rates for the whole network.
pub fn dat_estimator_step(xi_all: &[Vector], topology: &Topology, alpha: f64) -> Vec<Vector> {
    (0..xi_all.len())
        .map(|i| dat_agent_rate(&xi_all[i], topology.neighbors(i).iter().map(|&j| &xi_all[j]), alpha))
        .collect()
}

/// Extract the neighbor views of agent `i` from full network snapshots.
pub fn si_neighbors(topology: &Topology, i: usize, xs: &[Vector], xis: &[Vector]) -> Vec<SiNeighbor> {
    topology
        .neighbors(i)
        .iter()
        .map(|&j| SiNeighbor {
            id: j,
            x: xs[j].clone(),
            xi: xis[j].clone(),
        })
        .collect()
}

pub fn di_neighbors(topology: &Topology, i: usize, xs: &[Vector], vs: &[Vector]) -> Vec<DiNeighbor> {
    topology
        .neighbors(i)
        .iter()
        .map(|&j| DiNeighbor {
            id: j,
            weight: topology.weight(i, j),
            x: xs[j].clone(),
            v: vs[j].clone(),
        })
        .collect()
}

fn beta_of(beta: &BTreeMap<usize, f64>, i: usize, j: usize) -> Result<f64> {
    beta.get(&j)
        .copied()
        .ok_or_else(|| Error::Dimension(format!("agent {i} has no consensus gain for neighbor {j}")))
}

/// Single-integrator agent:
/// `u_i = −Σ β_ij S(x_i − x_j) + φ_i`, `β̇_ij = ‖x_i − x_j‖₁ − m ε e^{-ct}`,
/// `φ_i = −∇f_i − h_i⁻¹ θ̂_i g_i`, `θ̂̇_i = N² Γ_θ h_i⁻ᵀ ξ_i g_iᵀ`.
pub fn distributed_si_step(
    i: usize,
    x: &Vector,
    t: f64,
    obj: &dyn Measurement,
    st: &DistributedSiAgentState,
    neighbors: &[SiNeighbor],
    n_agents: usize,
    params: &SmoothingParams,
) -> Result<SiAgentControl> {
    let m = x.len() as f64;
    let grad = obj.grad(x, t);
    let h_inv = checked_inverse(&obj.h(x, t), "h_i", t, x.as_slice())?;
    let g = obj.g(x, t);
    let xi = st.xi(&grad);
    let width = params.width(t);

    let mut u = -&grad - &h_inv * &st.theta_hat * &g;
    let mut d_beta = BTreeMap::new();
    for nb in neighbors {
        let diff = x - &nb.x;
        u -= beta_of(&st.beta, i, nb.id)? * smooth_sign(&diff, t, params);
        d_beta.insert(nb.id, diff.lp_norm(1) - m * width);
    }
    let d_sigma = dat_agent_rate(&xi, neighbors.iter().map(|nb| &nb.xi), st.alpha_est);
    let n2 = (n_agents * n_agents) as f64;
    let d_theta = n2 * &st.gamma_theta * h_inv.transpose() * &xi * g.transpose();
    Ok(SiAgentControl {
        u,
        d_sigma,
        d_beta,
        d_theta,
    })
}

/// Double-integrator agent:
/// `u_i = −Σ a_ij y_ij − Σ β_ij S(y_ij) + φ_i`, `y_ij = k₁(x_i − x_j) + k₂(v_i − v_j)`,
/// `φ_i = −∇f_i − Ω̂_i h_i v_i − Â_i g_i − d/dt(h_i⁻¹ θ̂_i g_i)`, with
/// `θ̂̇_i = N Γ_θ h_i⁻ᵀ ζ_n g_iᵀ`, `Ω̂̇_i = Γ_Ω ζ_g (Σ h_j v_j)ᵀ / N`, `Â̇_i = Γ_A ζ_g g_iᵀ / N`.
#[allow(clippy::too_many_arguments)]
pub fn distributed_di_step(
    i: usize,
    x: &Vector,
    v: &Vector,
    t: f64,
    obj: &dyn Measurement,
    st: &DistributedDiAgentState,
    neighbors: &[DiNeighbor],
    aggregates: &GlobalAggregates,
    n_agents: usize,
    params: &SmoothingParams,
) -> Result<DiAgentControl> {
    let dim = x.len();
    if [&aggregates.zeta_n, &aggregates.sum_hv, &aggregates.zeta_g]
        .iter()
        .any(|a| a.len() != dim)
    {
        return Err(Error::Dimension(format!("aggregates for agent {i} do not match dimension {dim}")));
    }
    let n = n_agents as f64;
    let grad = obj.grad(x, t);
    let h = obj.h(x, t);
    let h_inv = checked_inverse(&h, "h_i", t, x.as_slice())?;
    let g = obj.g(x, t);
    let dh = obj.h_total_deriv(x, v, t);
    let dg = obj.g_total_deriv(x, v, t);
    let width = params.width(t);

    let d_theta = n * &st.gamma_theta * h_inv.transpose() * &aggregates.zeta_n * g.transpose();
    let d_omega = (1.0 / n) * &st.gamma_omega * &aggregates.zeta_g * aggregates.sum_hv.transpose();
    let d_a = (1.0 / n) * &st.gamma_a * &aggregates.zeta_g * g.transpose();

    let feedforward = product_rule(&h_inv, &dh, &st.theta_hat, &d_theta, &g, &dg);
    let mut u = -&grad - &st.omega_hat * (&h * v) - &st.a_hat * &g - feedforward;

    let mut d_beta = BTreeMap::new();
    for nb in neighbors {
        let y = st.k1 * (x - &nb.x) + st.k2 * (v - &nb.v);
        u -= nb.weight * &y;
        u -= beta_of(&st.beta, i, nb.id)? * smooth_sign(&y, t, params);
        d_beta.insert(nb.id, y.lp_norm(1) - dim as f64 * width);
    }
    Ok(DiAgentControl {
        u,
        d_beta,
        d_theta,
        d_omega,
        d_a,
    })
}

//! Lyapunov candidates of the four closed loops, evaluated with oracle access
//! to the hidden parameters. Diagnostics only.

use crate::linalg::{weighted_trace, Matrix, Vector};
use crate::objective::ObjectiveOracle;

use super::centralized::{CentralizedDiState, CentralizedSiState};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LyapunovRecord {
    pub v: f64,
    pub w: Option<f64>,
}

fn inv(m: &Matrix) -> Matrix {
    m.clone().try_inverse().unwrap_or_else(|| Matrix::from_element(m.nrows(), m.ncols(), f64::NAN))
}

/// `½ ∇fᵀ H⁻¹ ∇f + ½ tr(η̃₁ᵀ γ₁⁻¹ η̃₁)` with `η̃₁ = Ω⁻¹A − η̂₁`.
pub fn centralized_si_v(x: &Vector, t: f64, oracle: ObjectiveOracle<'_>, st: &CentralizedSiState) -> f64 {
    let grad = oracle.grad(x, t);
    let h_inv = inv(&oracle.hessian(x, t));
    let eta1_err = inv(&oracle.true_omega()) * oracle.true_a() - &st.eta1_hat;
    0.5 * grad.dot(&(h_inv * &grad)) + 0.5 * weighted_trace(&eta1_err, &inv(&st.gamma1))
}

/// The single-integrator candidate plus `½ ζᵀζ` and the `η̂₂`, `η̂₃` error terms.
pub fn centralized_di_v(x: &Vector, v: &Vector, t: f64, oracle: ObjectiveOracle<'_>, st: &CentralizedDiState) -> f64 {
    let grad = oracle.grad(x, t);
    let h_inv = inv(&oracle.hessian(x, t));
    let omega = oracle.true_omega();
    let a = oracle.true_a();
    let v_star = -&grad - inv(&oracle.h(x, t)) * &st.eta1_hat * oracle.g(x, t);
    let zeta = v - v_star;
    let e1 = inv(&omega) * &a - &st.eta1_hat;
    let e2 = omega - &st.eta2_hat;
    let e3 = a - &st.eta3_hat;
    0.5 * grad.dot(&(h_inv * &grad))
        + 0.5 * zeta.norm_squared()
        + 0.5 * weighted_trace(&e1, &inv(&st.gamma1))
        + 0.5 * weighted_trace(&e2, &inv(&st.gamma2))
        + 0.5 * weighted_trace(&e3, &inv(&st.gamma3))
}

/// Per-agent adaptive state needed by the distributed candidates.
#[derive(Clone, Copy)]
pub struct AgentView<'a> {
    pub oracle: ObjectiveOracle<'a>,
    pub x: &'a Vector,
    pub v: Option<&'a Vector>,
    pub theta_hat: &'a Matrix,
    pub gamma_theta: &'a Matrix,
    /// `(Â_i, Γ_A,i)` for the double integrator.
    pub a_hat: Option<(&'a Matrix, &'a Matrix)>,
}

fn zeta_n_part(agents: &[AgentView<'_>], t: f64) -> (Vector, f64, Matrix) {
    let zeta_n: Vector = agents.iter().map(|a| a.oracle.grad(a.x, t)).sum();
    let sum_h: Matrix = agents.iter().map(|a| a.oracle.hessian(a.x, t)).sum();
    let sum_omega: Matrix = agents.iter().map(|a| a.oracle.true_omega()).sum();
    let quad = 0.5 * zeta_n.dot(&(inv(&sum_h) * &zeta_n));
    (zeta_n, quad, inv(&sum_omega))
}

fn theta_part(agents: &[AgentView<'_>], sum_omega_inv: &Matrix) -> f64 {
    let n = agents.len() as f64;
    agents
        .iter()
        .map(|a| {
            let err = sum_omega_inv * a.oracle.true_a() - a.theta_hat / n;
            0.5 * weighted_trace(&err, &inv(a.gamma_theta))
        })
        .sum()
}

/// `½ ζ_nᵀ (Σ H_j)⁻¹ ζ_n + ½ Σ tr(θ̃_jᵀ Γ_θ,j⁻¹ θ̃_j)`, `θ̃_j = (ΣΩ)⁻¹A_j − θ̂_j/N`.
pub fn distributed_si_v(agents: &[AgentView<'_>], t: f64) -> f64 {
    let (_, quad, sum_omega_inv) = zeta_n_part(agents, t);
    quad + theta_part(agents, &sum_omega_inv)
}

/// Double-integrator distributed candidate; `omega_hat` is the (common) `Ω̂`.
pub fn distributed_di_v(agents: &[AgentView<'_>], t: f64, omega_hat: &Matrix, gamma_omega: &Matrix) -> f64 {
    let n = agents.len() as f64;
    let (_, quad, sum_omega_inv) = zeta_n_part(agents, t);
    let mut total = quad + theta_part(agents, &sum_omega_inv);
    let mut gap = Vector::zeros(agents[0].x.len());
    for a in agents {
        if let Some((a_hat, gamma_a)) = a.a_hat {
            total += 0.5 * weighted_trace(&(a.oracle.true_a() - a_hat), &inv(gamma_a));
        }
        let v_star = -a.oracle.grad(a.x, t) - inv(&a.oracle.h(a.x, t)) * a.theta_hat * a.oracle.g(a.x, t);
        gap += v_star - a.v.expect("double-integrator view carries velocities");
    }
    let omega_err = agents[0].oracle.true_omega() - omega_hat;
    total + 0.5 * weighted_trace(&omega_err, &inv(gamma_omega)) + gap.norm_squared() / (2.0 * n)
}

/// Consensus error `e = (M ⊗ I) x`, `M = I − 11ᵀ/N`, stacked per agent.
pub fn consensus_error(xs: &[Vector]) -> Vec<Vector> {
    let mean: Vector = xs.iter().sum::<Vector>() / xs.len() as f64;
    xs.iter().map(|x| x - &mean).collect()
}

pub fn stacked_norm(es: &[Vector]) -> f64 {
    es.iter().map(Vector::norm_squared).sum::<f64>().sqrt()
}

fn beta_spread(betas: &[f64], beta_bar: f64) -> f64 {
    0.5 * betas.iter().map(|b| (b - beta_bar).powi(2)).sum::<f64>()
}

/// `eᵀe + ½ Σ_i Σ_{j∈N_i} (β_ij − β̄)²` over directed gains.
pub fn consensus_w_si(xs: &[Vector], betas: &[f64], beta_bar: f64) -> f64 {
    let e = consensus_error(xs);
    stacked_norm(&e).powi(2) + beta_spread(betas, beta_bar)
}

/// `yᵀ P y + ½ Σ (β_ij − β̄)²`, `y = col(e, δ)`,
/// `P = [2k₁k₂ L⊗I, k₁I; k₁I, k₂I]`.
pub fn consensus_w_di(
    xs: &[Vector],
    vs: &[Vector],
    laplacian: &Matrix,
    k1: f64,
    k2: f64,
    betas: &[f64],
    beta_bar: f64,
) -> f64 {
    let e = consensus_error(xs);
    let d = consensus_error(vs);
    let n = xs.len();
    let mut le = 0.0;
    for i in 0..n {
        for j in 0..n {
            if laplacian[(i, j)] != 0.0 {
                le += laplacian[(i, j)] * e[i].dot(&e[j]);
            }
        }
    }
    let cross: f64 = e.iter().zip(&d).map(|(a, b)| a.dot(b)).sum();
    let dd: f64 = d.iter().map(Vector::norm_squared).sum();
    2.0 * k1 * k2 * le + 2.0 * k1 * cross + k2 * dd + beta_spread(betas, beta_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Generator, Topology};
    use crate::objective::{build_quadratic_tracking, Signal};

    #[test]
    fn centralized_v_vanishes_at_perfect_optimum() {
        let obj = build_quadratic_tracking(Matrix::identity(1, 1), vec![Signal::sin()]).unwrap();
        let o = obj.oracle();
        let eta1 = inv(&o.true_omega()) * o.true_a();
        let t: f64 = 1.3;
        let x = Vector::from_element(1, t.sin());
        let st = CentralizedSiState {
            eta1_hat: eta1.clone(),
            gamma1: Matrix::identity(1, 1),
        };
        assert!(centralized_si_v(&x, t, o, &st).abs() < 1e-28);
        let dst = CentralizedDiState {
            eta1_hat: eta1,
            eta2_hat: o.true_omega(),
            eta3_hat: o.true_a(),
            gamma1: Matrix::identity(1, 1),
            gamma2: Matrix::identity(1, 1),
            gamma3: Matrix::identity(1, 1),
        };
        assert!(centralized_di_v(&x, &Vector::from_element(1, t.cos()), t, o, &dst).abs() < 1e-28);
    }

    #[test]
    fn w_vanishes_at_consensus() {
        let xs = vec![Vector::from_element(2, 0.7); 5];
        let vs = vec![Vector::from_element(2, -0.1); 5];
        let betas = vec![1.5; 10];
        assert_eq!(consensus_w_si(&xs, &betas, 1.5), 0.0);
        let l = Topology::generate(Generator::Cycle, 5).unwrap().laplacian();
        assert!(consensus_w_di(&xs, &vs, &l, 3.12, 1.1, &betas, 1.5).abs() < 1e-12);
    }

    #[test]
    fn w_is_positive_off_consensus_when_gain_condition_holds() {
        let l = Topology::generate(Generator::Cycle, 5).unwrap().laplacian();
        let xs: Vec<Vector> = (0..5).map(|i| Vector::from_element(1, i as f64)).collect();
        let vs: Vec<Vector> = (0..5).map(|i| Vector::from_element(1, -(i as f64) * 3.0)).collect();
        assert!(consensus_w_di(&xs, &vs, &l, 3.12, 1.1, &[], 0.0) > 0.0);
    }
}

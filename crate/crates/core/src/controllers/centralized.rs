//! Centralized adaptive controllers for single- and double-integrator plants.

use crate::error::Result;
use crate::linalg::{checked_inverse, Matrix, Vector};
use crate::objective::Measurement;

#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedSiState {
    /// Estimate of `Ω⁻¹ A`, `m × p`.
    pub eta1_hat: Matrix,
    pub gamma1: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedDiState {
    pub eta1_hat: Matrix,
    /// Estimate of `Ω`, `m × m`.
    pub eta2_hat: Matrix,
    /// Estimate of `A`, `m × p`.
    pub eta3_hat: Matrix,
    pub gamma1: Matrix,
    pub gamma2: Matrix,
    pub gamma3: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiControl {
    pub u: Vector,
    pub d_eta1: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiControl {
    pub u: Vector,
    pub d_eta1: Matrix,
    pub d_eta2: Matrix,
    pub d_eta3: Matrix,
    /// Desired velocity `v* = −∇f − h⁻¹ η̂₁ g`.
    pub v_star: Vector,
}

/// `u = −∇f − h⁻¹ η̂₁ g`, `η̂̇₁ = γ₁ h⁻ᵀ ∇f gᵀ`.
pub fn centralized_si_step(x: &Vector, t: f64, obj: &dyn Measurement, st: &CentralizedSiState) -> Result<SiControl> {
    let grad = obj.grad(x, t);
    let h_inv = checked_inverse(&obj.h(x, t), "h_c", t, x.as_slice())?;
    let g = obj.g(x, t);
    let u = -&grad - &h_inv * &st.eta1_hat * &g;
    let d_eta1 = &st.gamma1 * h_inv.transpose() * &grad * g.transpose();
    Ok(SiControl { u, d_eta1 })
}

/// `d/dt (h⁻¹ M g)` by the product rule, with `dh/dt`, `dg/dt` taken along the
/// trajectory and `Ṁ` supplied by the adaptive law.
pub(crate) fn product_rule(h_inv: &Matrix, dh: &Matrix, m: &Matrix, dm: &Matrix, g: &Vector, dg: &Vector) -> Vector {
    let dh_inv = -(h_inv * dh * h_inv);
    dh_inv * m * g + h_inv * dm * g + h_inv * m * dg
}

/// Double-integrator controller:
/// `u = −∇f − η̂₂ h v − η̂₃ g − d/dt(h⁻¹ η̂₁ g)` with
/// `η̂̇₂ = γ₂ ζ (h v)ᵀ`, `η̂̇₃ = γ₃ ζ gᵀ`, `ζ = v − v*`.
pub fn centralized_di_step(
    x: &Vector,
    v: &Vector,
    t: f64,
    obj: &dyn Measurement,
    st: &CentralizedDiState,
) -> Result<DiControl> {
    let grad = obj.grad(x, t);
    let h = obj.h(x, t);
    let h_inv = checked_inverse(&h, "h_c", t, x.as_slice())?;
    let g = obj.g(x, t);
    let dh = obj.h_total_deriv(x, v, t);
    let dg = obj.g_total_deriv(x, v, t);

    let v_star = -&grad - &h_inv * &st.eta1_hat * &g;
    let zeta = v - &v_star;
    let hv = &h * v;

    let d_eta1 = &st.gamma1 * h_inv.transpose() * &grad * g.transpose();
    let d_eta2 = &st.gamma2 * &zeta * hv.transpose();
    let d_eta3 = &st.gamma3 * &zeta * g.transpose();

    let feedforward = product_rule(&h_inv, &dh, &st.eta1_hat, &d_eta1, &g, &dg);
    let u = -&grad - &st.eta2_hat * &hv - &st.eta3_hat * &g - feedforward;
    Ok(DiControl {
        u,
        d_eta1,
        d_eta2,
        d_eta3,
        v_star,
    })
}

/// Known-parameter baseline `ẋ = −(Ω h)⁻¹ (k ∇f + A g)` driven by nominal
/// (possibly wrong) `Ω`, `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalModel {
    pub omega: Matrix,
    pub a: Matrix,
    pub gain: f64,
}

pub fn nominal_newton_step(x: &Vector, t: f64, obj: &dyn Measurement, model: &NominalModel) -> Result<Vector> {
    let hess = &model.omega * obj.h(x, t);
    let hess_inv = checked_inverse(&hess, "nominal Hessian", t, x.as_slice())?;
    let rate = &model.a * obj.g(x, t);
    Ok(-(hess_inv * (model.gain * obj.grad(x, t) + rate)))
}

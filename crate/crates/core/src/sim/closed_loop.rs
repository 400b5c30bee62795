//! Closed-loop systems: a controller, its plant, and the flat state vector the
//! integrator advances. Each controller kind is registered by name.

use std::collections::BTreeMap;

use crate::controllers::lyapunov::{
    centralized_di_v, centralized_si_v, consensus_error, consensus_w_di, consensus_w_si, distributed_di_v,
    distributed_si_v, stacked_norm, AgentView,
};
use crate::controllers::{
    centralized_di_step, centralized_si_step, di_neighbors, distributed_di_step, distributed_si_step,
    distributed_summation, nominal_newton_step, si_neighbors, CentralizedDiState, CentralizedSiState,
    DistributedDiAgentState, DistributedSiAgentState, GlobalAggregates, NominalModel, SmoothingParams,
};
use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::linalg::{checked_inverse, Matrix, Vector};
use crate::objective::{common_dim, Measurement, ObjectiveModel};

use super::plant::Plant;

/// Resolved gains; unused entries are ignored by controllers that do not need them.
#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    pub gamma1: Matrix,
    pub gamma2: Matrix,
    pub gamma3: Matrix,
    pub gamma_theta: Vec<Matrix>,
    pub gamma_omega: Matrix,
    pub gamma_a: Vec<Matrix>,
    pub k1: f64,
    pub k2: f64,
    pub alpha_est: f64,
    pub smoothing: SmoothingParams,
    /// Reference level `β̄` in the consensus Lyapunov function.
    pub beta_bar: f64,
    pub baseline: Option<NominalModel>,
}

/// Resolved initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub x: Vec<Vector>,
    pub v: Vec<Vector>,
    pub eta1: Matrix,
    pub eta2: Matrix,
    pub eta3: Matrix,
    pub theta: Vec<Matrix>,
    pub omega: Matrix,
    pub a: Vec<Matrix>,
    pub sigma: Vec<Vector>,
    pub beta: f64,
}

impl InitialState {
    /// Everything zero except the given positions.
    pub fn at_rest(x: Vec<Vector>, param_dim: usize) -> Self {
        let n = x.len();
        let m = x.first().map_or(0, Vector::len);
        let p = param_dim;
        Self {
            v: vec![Vector::zeros(m); n],
            eta1: Matrix::zeros(m, p),
            eta2: Matrix::zeros(m, m),
            eta3: Matrix::zeros(m, p),
            theta: vec![Matrix::zeros(m, p); n],
            omega: Matrix::zeros(m, m),
            a: vec![Matrix::zeros(m, p); n],
            sigma: vec![Vector::zeros(m); n],
            beta: 0.0,
            x,
        }
    }
}

/// Everything needed to assemble a closed loop.
#[derive(Debug, Clone)]
pub struct LoopSpec {
    pub objectives: Vec<ObjectiveModel>,
    pub topology: Option<Topology>,
    pub gains: Gains,
    pub init: InitialState,
    pub plant: Plant,
}

/// Per-record diagnostics computed with oracle access.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    pub estimator_error: Option<f64>,
    pub lyapunov_v: Option<f64>,
    pub lyapunov_w: Option<f64>,
}

pub trait ClosedLoop: Send {
    fn kind(&self) -> &'static str;
    fn objectives(&self) -> &[ObjectiveModel];
    fn n_agents(&self) -> usize;
    fn dim(&self) -> usize;
    fn has_velocity(&self) -> bool;
    fn initial_state(&self) -> Vec<f64>;
    /// Hook run once per integration step on the step-initial snapshot,
    /// before any derivative evaluation of that step.
    fn begin_step(&mut self, _t: f64, _y: &[f64]) -> Result<()> {
        Ok(())
    }
    fn derivative(&self, t: f64, y: &[f64]) -> Result<Vec<f64>>;
    fn positions(&self, y: &[f64]) -> Vec<Vector>;
    fn velocities(&self, _y: &[f64]) -> Option<Vec<Vector>> {
        None
    }
    fn estimate_labels(&self) -> Vec<String>;
    fn estimates(&self, y: &[f64]) -> Vec<f64>;
    fn diagnostics(&self, t: f64, y: &[f64]) -> Diagnostics;
}

pub type LoopBuilder = fn(LoopSpec) -> Result<Box<dyn ClosedLoop>>;

#[derive(Clone)]
pub struct ControllerRegistry {
    entries: BTreeMap<&'static str, LoopBuilder>,
}

impl Default for ControllerRegistry {
    fn default() -> Self {
        let mut reg = Self {
            entries: BTreeMap::new(),
        };
        reg.register("centralized_si", |s| Ok(Box::new(CentralizedSiLoop::new(s)?)));
        reg.register("centralized_di", |s| Ok(Box::new(CentralizedDiLoop::new(s)?)));
        reg.register("distributed_si", |s| Ok(Box::new(DistributedSiLoop::new(s)?)));
        reg.register("distributed_di", |s| Ok(Box::new(DistributedDiLoop::new(s)?)));
        reg.register("newton_baseline", |s| Ok(Box::new(BaselineLoop::new(s)?)));
        reg
    }
}

impl ControllerRegistry {
    pub fn register(&mut self, name: &'static str, builder: LoopBuilder) {
        self.entries.insert(name, builder);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn build(&self, name: &str, spec: LoopSpec) -> Result<Box<dyn ClosedLoop>> {
        let builder = self.entries.get(name).ok_or_else(|| Error::Unknown {
            kind: "controller",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        builder(spec)
    }
}

fn vec_at(y: &[f64], off: usize, m: usize) -> Vector {
    Vector::from_column_slice(&y[off..off + m])
}

fn mat_at(y: &[f64], off: usize, r: usize, c: usize) -> Matrix {
    Matrix::from_column_slice(r, c, &y[off..off + r * c])
}

fn matrix_labels(name: &str, r: usize, c: usize) -> impl Iterator<Item = String> + '_ {
    (0..c).flat_map(move |j| (0..r).map(move |i| format!("{name}_{}{}", i + 1, j + 1)))
}

fn require_single(spec: &LoopSpec, kind: &str) -> Result<(usize, usize)> {
    if spec.objectives.len() != 1 || spec.init.x.len() != 1 {
        return Err(Error::Validation(format!(
            "{kind} drives a single agent with the global objective; got {} objectives and {} initial positions",
            spec.objectives.len(),
            spec.init.x.len()
        )));
    }
    let m = spec.objectives[0].dim();
    if spec.init.x[0].len() != m {
        return Err(Error::Dimension(format!("initial position has length {}, objective dimension {m}", spec.init.x[0].len())));
    }
    Ok((m, spec.objectives[0].param_dim()))
}

fn require_shape(what: &str, mat: &Matrix, r: usize, c: usize) -> Result<()> {
    if mat.shape() != (r, c) {
        return Err(Error::Dimension(format!("{what} is {}x{}, expected {r}x{c}", mat.nrows(), mat.ncols())));
    }
    Ok(())
}

fn require_per_agent<T>(what: &str, items: &[T], n: usize) -> Result<()> {
    if items.len() != n {
        return Err(Error::Dimension(format!("{} values of {what} for {n} agents", items.len())));
    }
    Ok(())
}

fn require_topology(spec: &LoopSpec, kind: &str) -> Result<(Topology, usize, usize)> {
    let topo = spec
        .topology
        .clone()
        .ok_or_else(|| Error::Validation(format!("{kind} needs a communication topology")))?;
    let n = topo.n_agents();
    require_per_agent("objectives", &spec.objectives, n)?;
    require_per_agent("initial positions", &spec.init.x, n)?;
    let m = common_dim(&spec.objectives)?;
    let p = spec.objectives[0].param_dim();
    if let Some(i) = spec.objectives.iter().position(|o| o.param_dim() != p) {
        return Err(Error::Dimension(format!("objective {i} has a different parameter dimension")));
    }
    if let Some(x) = spec.init.x.iter().find(|x| x.len() != m) {
        return Err(Error::Dimension(format!("initial position of length {} in dimension {m}", x.len())));
    }
    Ok((topo, m, p))
}

// single agent, single integrator: [x, η̂₁]
struct CentralizedSiLoop {
    spec: LoopSpec,
    m: usize,
    p: usize,
}

impl CentralizedSiLoop {
    fn new(spec: LoopSpec) -> Result<Self> {
        let (m, p) = require_single(&spec, "centralized_si")?;
        require_shape("eta1 initial", &spec.init.eta1, m, p)?;
        require_shape("gamma1", &spec.gains.gamma1, m, m)?;
        Ok(Self { spec, m, p })
    }

    fn state(&self, y: &[f64]) -> (Vector, CentralizedSiState) {
        let st = CentralizedSiState {
            eta1_hat: mat_at(y, self.m, self.m, self.p),
            gamma1: self.spec.gains.gamma1.clone(),
        };
        (vec_at(y, 0, self.m), st)
    }
}

impl ClosedLoop for CentralizedSiLoop {
    fn kind(&self) -> &'static str {
        "centralized_si"
    }
    fn objectives(&self) -> &[ObjectiveModel] {
        &self.spec.objectives
    }
    fn n_agents(&self) -> usize {
        1
    }
    fn dim(&self) -> usize {
        self.m
    }
    fn has_velocity(&self) -> bool {
        false
    }
    fn initial_state(&self) -> Vec<f64> {
        let mut y = self.spec.init.x[0].as_slice().to_vec();
        y.extend(self.spec.init.eta1.as_slice());
        y
    }
    fn derivative(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let (x, st) = self.state(y);
        let c = centralized_si_step(&x, t, &self.spec.objectives[0], &st)?;
        let mut dy = c.u.as_slice().to_vec();
        dy.extend(c.d_eta1.as_slice());
        Ok(dy)
    }
    fn positions(&self, y: &[f64]) -> Vec<Vector> {
        vec![vec_at(y, 0, self.m)]
    }
    fn estimate_labels(&self) -> Vec<String> {
        matrix_labels("eta1", self.m, self.p).collect()
    }
    fn estimates(&self, y: &[f64]) -> Vec<f64> {
        y[self.m..].to_vec()
    }
    fn diagnostics(&self, t: f64, y: &[f64]) -> Diagnostics {
        let (x, st) = self.state(y);
        Diagnostics {
            lyapunov_v: Some(centralized_si_v(&x, t, self.spec.objectives[0].oracle(), &st)),
            ..Default::default()
        }
    }
}

// single agent, double integrator: [x, v, η̂₁, η̂₂, η̂₃]
struct CentralizedDiLoop {
    spec: LoopSpec,
    m: usize,
    p: usize,
}

impl CentralizedDiLoop {
    fn new(spec: LoopSpec) -> Result<Self> {
        let (m, p) = require_single(&spec, "centralized_di")?;
        require_per_agent("initial velocities", &spec.init.v, 1)?;
        require_shape("eta1 initial", &spec.init.eta1, m, p)?;
        require_shape("eta2 initial", &spec.init.eta2, m, m)?;
        require_shape("eta3 initial", &spec.init.eta3, m, p)?;
        for (name, g) in [("gamma1", &spec.gains.gamma1), ("gamma2", &spec.gains.gamma2), ("gamma3", &spec.gains.gamma3)] {
            require_shape(name, g, m, m)?;
        }
        spec.plant.validate(1, m)?;
        Ok(Self { spec, m, p })
    }

    fn state(&self, y: &[f64]) -> (Vector, Vector, CentralizedDiState) {
        let (m, p) = (self.m, self.p);
        let g = &self.spec.gains;
        let st = CentralizedDiState {
            eta1_hat: mat_at(y, 2 * m, m, p),
            eta2_hat: mat_at(y, 2 * m + m * p, m, m),
            eta3_hat: mat_at(y, 2 * m + m * p + m * m, m, p),
            gamma1: g.gamma1.clone(),
            gamma2: g.gamma2.clone(),
            gamma3: g.gamma3.clone(),
        };
        (vec_at(y, 0, m), vec_at(y, m, m), st)
    }
}

impl ClosedLoop for CentralizedDiLoop {
    fn kind(&self) -> &'static str {
        "centralized_di"
    }
    fn objectives(&self) -> &[ObjectiveModel] {
        &self.spec.objectives
    }
    fn n_agents(&self) -> usize {
        1
    }
    fn dim(&self) -> usize {
        self.m
    }
    fn has_velocity(&self) -> bool {
        true
    }
    fn initial_state(&self) -> Vec<f64> {
        let i = &self.spec.init;
        let mut y = i.x[0].as_slice().to_vec();
        y.extend(i.v[0].as_slice());
        y.extend(i.eta1.as_slice());
        y.extend(i.eta2.as_slice());
        y.extend(i.eta3.as_slice());
        y
    }
    fn derivative(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let (x, v, st) = self.state(y);
        let c = centralized_di_step(&x, &v, t, &self.spec.objectives[0], &st)?;
        let mut dy = v.as_slice().to_vec();
        dy.extend(self.spec.plant.acceleration(0, &c.u, &v).as_slice());
        dy.extend(c.d_eta1.as_slice());
        dy.extend(c.d_eta2.as_slice());
        dy.extend(c.d_eta3.as_slice());
        Ok(dy)
    }
    fn positions(&self, y: &[f64]) -> Vec<Vector> {
        vec![vec_at(y, 0, self.m)]
    }
    fn velocities(&self, y: &[f64]) -> Option<Vec<Vector>> {
        Some(vec![vec_at(y, self.m, self.m)])
    }
    fn estimate_labels(&self) -> Vec<String> {
        let (m, p) = (self.m, self.p);
        matrix_labels("eta1", m, p)
            .chain(matrix_labels("eta2", m, m))
            .chain(matrix_labels("eta3", m, p))
            .collect()
    }
    fn estimates(&self, y: &[f64]) -> Vec<f64> {
        y[2 * self.m..].to_vec()
    }
    fn diagnostics(&self, t: f64, y: &[f64]) -> Diagnostics {
        let (x, v, st) = self.state(y);
        Diagnostics {
            lyapunov_v: Some(centralized_di_v(&x, &v, t, self.spec.objectives[0].oracle(), &st)),
            ..Default::default()
        }
    }
}

// single agent, nominal-parameter Newton flow: [x]
struct BaselineLoop {
    spec: LoopSpec,
    model: NominalModel,
    m: usize,
}

impl BaselineLoop {
    fn new(spec: LoopSpec) -> Result<Self> {
        let (m, p) = require_single(&spec, "newton_baseline")?;
        let model = spec
            .gains
            .baseline
            .clone()
            .ok_or_else(|| Error::Validation("newton_baseline needs nominal omega, a and gain".into()))?;
        require_shape("nominal omega", &model.omega, m, m)?;
        require_shape("nominal a", &model.a, m, p)?;
        Ok(Self { spec, model, m })
    }
}

impl ClosedLoop for BaselineLoop {
    fn kind(&self) -> &'static str {
        "newton_baseline"
    }
    fn objectives(&self) -> &[ObjectiveModel] {
        &self.spec.objectives
    }
    fn n_agents(&self) -> usize {
        1
    }
    fn dim(&self) -> usize {
        self.m
    }
    fn has_velocity(&self) -> bool {
        false
    }
    fn initial_state(&self) -> Vec<f64> {
        self.spec.init.x[0].as_slice().to_vec()
    }
    fn derivative(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let u = nominal_newton_step(&vec_at(y, 0, self.m), t, &self.spec.objectives[0], &self.model)?;
        Ok(u.as_slice().to_vec())
    }
    fn positions(&self, y: &[f64]) -> Vec<Vector> {
        vec![vec_at(y, 0, self.m)]
    }
    fn estimate_labels(&self) -> Vec<String> {
        Vec::new()
    }
    fn estimates(&self, _y: &[f64]) -> Vec<f64> {
        Vec::new()
    }
    fn diagnostics(&self, _t: f64, _y: &[f64]) -> Diagnostics {
        Diagnostics::default()
    }
}

/// Offsets of each agent's block in the flat state.
fn block_offsets(topo: &Topology, fixed: usize) -> Vec<usize> {
    let mut offs = Vec::with_capacity(topo.n_agents() + 1);
    let mut o = 0;
    for i in 0..topo.n_agents() {
        offs.push(o);
        o += fixed + topo.neighbors(i).len();
    }
    offs.push(o);
    offs
}

fn beta_map(topo: &Topology, i: usize, y: &[f64], off: usize) -> BTreeMap<usize, f64> {
    topo.neighbors(i).iter().enumerate().map(|(k, &j)| (j, y[off + k])).collect()
}

fn all_betas(topo: &Topology, offs: &[usize], fixed: usize, y: &[f64]) -> Vec<f64> {
    (0..topo.n_agents())
        .flat_map(|i| y[offs[i] + fixed..offs[i + 1]].iter().copied())
        .collect()
}

fn beta_labels(topo: &Topology, i: usize) -> impl Iterator<Item = String> + '_ {
    topo.neighbors(i).iter().map(move |j| format!("beta{}_{}", i + 1, j + 1))
}

// per agent: [x, σ, θ̂, β_ij for j ∈ N_i]
struct DistributedSiLoop {
    spec: LoopSpec,
    topo: Topology,
    m: usize,
    p: usize,
    offs: Vec<usize>,
}

impl DistributedSiLoop {
    fn new(spec: LoopSpec) -> Result<Self> {
        let (topo, m, p) = require_topology(&spec, "distributed_si")?;
        let n = topo.n_agents();
        require_per_agent("sigma initial", &spec.init.sigma, n)?;
        require_per_agent("theta initial", &spec.init.theta, n)?;
        require_per_agent("gamma_theta", &spec.gains.gamma_theta, n)?;
        for i in 0..n {
            require_shape("theta initial", &spec.init.theta[i], m, p)?;
            require_shape("gamma_theta", &spec.gains.gamma_theta[i], m, m)?;
        }
        let offs = block_offsets(&topo, self_fixed(m, p));
        Ok(Self { spec, topo, m, p, offs })
    }

    fn fixed(&self) -> usize {
        self_fixed(self.m, self.p)
    }

    fn agent(&self, i: usize, y: &[f64]) -> (Vector, DistributedSiAgentState) {
        let (m, p, o) = (self.m, self.p, self.offs[i]);
        let st = DistributedSiAgentState {
            sigma: vec_at(y, o + m, m),
            beta: beta_map(&self.topo, i, y, o + self.fixed()),
            theta_hat: mat_at(y, o + 2 * m, m, p),
            gamma_theta: self.spec.gains.gamma_theta[i].clone(),
            alpha_est: self.spec.gains.alpha_est,
        };
        (vec_at(y, o, m), st)
    }

    fn snapshot(&self, t: f64, y: &[f64]) -> (Vec<Vector>, Vec<DistributedSiAgentState>, Vec<Vector>) {
        let n = self.topo.n_agents();
        let (xs, sts): (Vec<_>, Vec<_>) = (0..n).map(|i| self.agent(i, y)).unzip();
        let xis = (0..n)
            .map(|i| sts[i].xi(&self.spec.objectives[i].grad(&xs[i], t)))
            .collect();
        (xs, sts, xis)
    }
}

fn self_fixed(m: usize, p: usize) -> usize {
    2 * m + m * p
}

impl ClosedLoop for DistributedSiLoop {
    fn kind(&self) -> &'static str {
        "distributed_si"
    }
    fn objectives(&self) -> &[ObjectiveModel] {
        &self.spec.objectives
    }
    fn n_agents(&self) -> usize {
        self.topo.n_agents()
    }
    fn dim(&self) -> usize {
        self.m
    }
    fn has_velocity(&self) -> bool {
        false
    }
    fn initial_state(&self) -> Vec<f64> {
        let init = &self.spec.init;
        let mut y = Vec::with_capacity(*self.offs.last().unwrap_or(&0));
        for i in 0..self.topo.n_agents() {
            y.extend(init.x[i].as_slice());
            y.extend(init.sigma[i].as_slice());
            y.extend(init.theta[i].as_slice());
            y.extend(std::iter::repeat_n(init.beta, self.topo.neighbors(i).len()));
        }
        y
    }
    fn derivative(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.topo.n_agents();
        let (xs, sts, xis) = self.snapshot(t, y);
        let mut dy = Vec::with_capacity(y.len());
        for i in 0..n {
            let nbrs = si_neighbors(&self.topo, i, &xs, &xis);
            let c = distributed_si_step(
                i,
                &xs[i],
                t,
                &self.spec.objectives[i],
                &sts[i],
                &nbrs,
                n,
                &self.spec.gains.smoothing,
            )?;
            dy.extend(c.u.as_slice());
            dy.extend(c.d_sigma.as_slice());
            dy.extend(c.d_theta.as_slice());
            dy.extend(self.topo.neighbors(i).iter().map(|j| c.d_beta[j]));
        }
        Ok(dy)
    }
    fn positions(&self, y: &[f64]) -> Vec<Vector> {
        (0..self.topo.n_agents()).map(|i| vec_at(y, self.offs[i], self.m)).collect()
    }
    fn estimate_labels(&self) -> Vec<String> {
        let (m, p) = (self.m, self.p);
        (0..self.topo.n_agents())
            .flat_map(|i| {
                let a = i + 1;
                (1..=m)
                    .map(move |k| format!("sigma{a}_{k}"))
                    .chain(matrix_labels(&format!("theta{a}"), m, p).collect::<Vec<_>>())
                    .chain(beta_labels(&self.topo, i))
            })
            .collect()
    }
    fn estimates(&self, y: &[f64]) -> Vec<f64> {
        (0..self.topo.n_agents())
            .flat_map(|i| y[self.offs[i] + self.m..self.offs[i + 1]].iter().copied())
            .collect()
    }
    fn diagnostics(&self, t: f64, y: &[f64]) -> Diagnostics {
        let n = self.topo.n_agents();
        let (xs, sts, xis) = self.snapshot(t, y);
        let zeta_n: Vector = (0..n).map(|i| self.spec.objectives[i].grad(&xs[i], t)).sum();
        let mean = zeta_n / n as f64;
        let est_err = xis.iter().map(|xi| (xi - &mean).norm()).fold(0.0, f64::max);
        let views: Vec<AgentView<'_>> = (0..n)
            .map(|i| AgentView {
                oracle: self.spec.objectives[i].oracle(),
                x: &xs[i],
                v: None,
                theta_hat: &sts[i].theta_hat,
                gamma_theta: &sts[i].gamma_theta,
                a_hat: None,
            })
            .collect();
        let betas = all_betas(&self.topo, &self.offs, self.fixed(), y);
        Diagnostics {
            estimator_error: Some(est_err),
            lyapunov_v: Some(distributed_si_v(&views, t)),
            lyapunov_w: Some(consensus_w_si(&xs, &betas, self.spec.gains.beta_bar)),
        }
    }
}

// per agent: [x, v, θ̂, Ω̂, Â, β_ij for j ∈ N_i]
struct DistributedDiLoop {
    spec: LoopSpec,
    topo: Topology,
    laplacian: Matrix,
    m: usize,
    p: usize,
    offs: Vec<usize>,
    aggregates: Vec<GlobalAggregates>,
}

impl DistributedDiLoop {
    fn new(spec: LoopSpec) -> Result<Self> {
        let (topo, m, p) = require_topology(&spec, "distributed_di")?;
        let n = topo.n_agents();
        if let Some((i, j)) = topo.uncovered_pair() {
            return Err(Error::UncoveredPair(i, j));
        }
        require_per_agent("initial velocities", &spec.init.v, n)?;
        require_per_agent("theta initial", &spec.init.theta, n)?;
        require_per_agent("a initial", &spec.init.a, n)?;
        require_per_agent("gamma_theta", &spec.gains.gamma_theta, n)?;
        require_per_agent("gamma_a", &spec.gains.gamma_a, n)?;
        require_shape("omega initial", &spec.init.omega, m, m)?;
        require_shape("gamma_omega", &spec.gains.gamma_omega, m, m)?;
        for i in 0..n {
            require_shape("theta initial", &spec.init.theta[i], m, p)?;
            require_shape("a initial", &spec.init.a[i], m, p)?;
            require_shape("gamma_theta", &spec.gains.gamma_theta[i], m, m)?;
            require_shape("gamma_a", &spec.gains.gamma_a[i], m, m)?;
        }
        spec.plant.validate(n, m)?;
        let offs = block_offsets(&topo, 2 * m + 2 * m * p + m * m);
        Ok(Self {
            laplacian: topo.laplacian(),
            spec,
            topo,
            m,
            p,
            offs,
            aggregates: Vec::new(),
        })
    }

    fn fixed(&self) -> usize {
        2 * self.m + 2 * self.m * self.p + self.m * self.m
    }

    fn agent(&self, i: usize, y: &[f64]) -> (Vector, Vector, DistributedDiAgentState) {
        let (m, p, o) = (self.m, self.p, self.offs[i]);
        let g = &self.spec.gains;
        let st = DistributedDiAgentState {
            beta: beta_map(&self.topo, i, y, o + self.fixed()),
            theta_hat: mat_at(y, o + 2 * m, m, p),
            omega_hat: mat_at(y, o + 2 * m + m * p, m, m),
            a_hat: mat_at(y, o + 2 * m + m * p + m * m, m, p),
            gamma_theta: g.gamma_theta[i].clone(),
            gamma_omega: g.gamma_omega.clone(),
            gamma_a: g.gamma_a[i].clone(),
            k1: g.k1,
            k2: g.k2,
        };
        (vec_at(y, o, m), vec_at(y, o + m, m), st)
    }
}

impl ClosedLoop for DistributedDiLoop {
    fn kind(&self) -> &'static str {
        "distributed_di"
    }
    fn objectives(&self) -> &[ObjectiveModel] {
        &self.spec.objectives
    }
    fn n_agents(&self) -> usize {
        self.topo.n_agents()
    }
    fn dim(&self) -> usize {
        self.m
    }
    fn has_velocity(&self) -> bool {
        true
    }
    fn initial_state(&self) -> Vec<f64> {
        let init = &self.spec.init;
        let mut y = Vec::with_capacity(*self.offs.last().unwrap_or(&0));
        for i in 0..self.topo.n_agents() {
            y.extend(init.x[i].as_slice());
            y.extend(init.v[i].as_slice());
            y.extend(init.theta[i].as_slice());
            y.extend(init.omega.as_slice());
            y.extend(init.a[i].as_slice());
            y.extend(std::iter::repeat_n(init.beta, self.topo.neighbors(i).len()));
        }
        y
    }

    /// Two summation rounds over `(∇f_i, h_i v_i, ∇f_i + h_i⁻¹ θ̂_i g_i + v_i)`.
    fn begin_step(&mut self, t: f64, y: &[f64]) -> Result<()> {
        let m = self.m;
        let mut local = Vec::with_capacity(self.topo.n_agents());
        for (i, obj) in self.spec.objectives.iter().enumerate() {
            let (x, v, st) = self.agent(i, y);
            let grad = obj.grad(&x, t);
            let h = obj.h(&x, t);
            let h_inv = checked_inverse(&h, "h_i", t, x.as_slice())?;
            let gap = &grad + h_inv * &st.theta_hat * obj.g(&x, t) + &v;
            let mut packed = Vector::zeros(3 * m);
            packed.rows_mut(0, m).copy_from(&grad);
            packed.rows_mut(m, m).copy_from(&(h * &v));
            packed.rows_mut(2 * m, m).copy_from(&gap);
            local.push(packed);
        }
        self.aggregates = distributed_summation(&local, &self.topo)?
            .into_iter()
            .map(|s| GlobalAggregates {
                zeta_n: s.rows(0, m).into_owned(),
                sum_hv: s.rows(m, m).into_owned(),
                zeta_g: s.rows(2 * m, m).into_owned(),
            })
            .collect();
        Ok(())
    }

    fn derivative(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.topo.n_agents();
        if self.aggregates.len() != n {
            return Err(Error::Dimension("aggregates requested before the step's summation rounds".into()));
        }
        let (xs, vs, sts): (Vec<_>, Vec<_>, Vec<_>) = (0..n).map(|i| self.agent(i, y)).fold(
            (Vec::new(), Vec::new(), Vec::new()),
            |(mut a, mut b, mut c), (x, v, s)| {
                a.push(x);
                b.push(v);
                c.push(s);
                (a, b, c)
            },
        );
        let mut dy = Vec::with_capacity(y.len());
        for i in 0..n {
            let nbrs = di_neighbors(&self.topo, i, &xs, &vs);
            let c = distributed_di_step(
                i,
                &xs[i],
                &vs[i],
                t,
                &self.spec.objectives[i],
                &sts[i],
                &nbrs,
                &self.aggregates[i],
                n,
                &self.spec.gains.smoothing,
            )?;
            dy.extend(vs[i].as_slice());
            dy.extend(self.spec.plant.acceleration(i, &c.u, &vs[i]).as_slice());
            dy.extend(c.d_theta.as_slice());
            dy.extend(c.d_omega.as_slice());
            dy.extend(c.d_a.as_slice());
            dy.extend(self.topo.neighbors(i).iter().map(|j| c.d_beta[j]));
        }
        Ok(dy)
    }
    fn positions(&self, y: &[f64]) -> Vec<Vector> {
        (0..self.topo.n_agents()).map(|i| vec_at(y, self.offs[i], self.m)).collect()
    }
    fn velocities(&self, y: &[f64]) -> Option<Vec<Vector>> {
        Some((0..self.topo.n_agents()).map(|i| vec_at(y, self.offs[i] + self.m, self.m)).collect())
    }
    fn estimate_labels(&self) -> Vec<String> {
        let (m, p) = (self.m, self.p);
        (0..self.topo.n_agents())
            .flat_map(|i| {
                let a = i + 1;
                matrix_labels(&format!("theta{a}"), m, p)
                    .chain(matrix_labels(&format!("omega{a}"), m, m))
                    .chain(matrix_labels(&format!("a{a}"), m, p))
                    .collect::<Vec<_>>()
                    .into_iter()
                    .chain(beta_labels(&self.topo, i))
            })
            .collect()
    }
    fn estimates(&self, y: &[f64]) -> Vec<f64> {
        (0..self.topo.n_agents())
            .flat_map(|i| y[self.offs[i] + 2 * self.m..self.offs[i + 1]].iter().copied())
            .collect()
    }
    fn diagnostics(&self, t: f64, y: &[f64]) -> Diagnostics {
        let n = self.topo.n_agents();
        let agents: Vec<_> = (0..n).map(|i| self.agent(i, y)).collect();
        let omega_mean: Matrix = agents.iter().map(|(_, _, s)| &s.omega_hat).sum::<Matrix>() / n as f64;
        let views: Vec<AgentView<'_>> = agents
            .iter()
            .enumerate()
            .map(|(i, (x, v, s))| AgentView {
                oracle: self.spec.objectives[i].oracle(),
                x,
                v: Some(v),
                theta_hat: &s.theta_hat,
                gamma_theta: &s.gamma_theta,
                a_hat: Some((&s.a_hat, &s.gamma_a)),
            })
            .collect();
        let xs: Vec<Vector> = agents.iter().map(|a| a.0.clone()).collect();
        let vs: Vec<Vector> = agents.iter().map(|a| a.1.clone()).collect();
        let g = &self.spec.gains;
        let betas = all_betas(&self.topo, &self.offs, self.fixed(), y);
        Diagnostics {
            estimator_error: None,
            lyapunov_v: Some(distributed_di_v(&views, t, &omega_mean, &g.gamma_omega)),
            lyapunov_w: Some(consensus_w_di(&xs, &vs, &self.laplacian, g.k1, g.k2, &betas, g.beta_bar)),
        }
    }
}

/// `‖(M ⊗ I) x‖₂` for a set of agent positions.
pub fn consensus_norm(xs: &[Vector]) -> f64 {
    stacked_norm(&consensus_error(xs))
}

//! Scenario files: parsing, validation at load time, and assembly into a
//! runnable closed loop.

mod builtins;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::{NominalModel, SmoothingParams};
use crate::error::{Error, Result};
use crate::graph::{build_spectral, consensus_gain_condition, Topology, TopologySpec};
use crate::linalg::{from_rows, require_spd, Matrix, MatrixSpec, Vector};
use crate::objective::{
    common_dim, validate_assumptions, Measurement, ObjectiveModel, ObjectiveSpec, SensorNoise, ValidationReport,
};
use crate::sim::{
    oracle_solve, simulate, ClosedLoop, ControllerRegistry, Gains, InitialState, IntegratorConfig, LoopSpec, Plant,
    RecordPolicy, Trace,
};

pub use builtins::{builtin, builtin_names, builtin_source_seek};

/// Prefix selecting a built-in scenario instead of a file.
pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// `centralized_si`, `distributed_si`, `centralized_di`, `distributed_di`
    /// or `newton_baseline`.
    pub controller: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySpec>,
    #[serde(default)]
    pub plant: Plant,
    #[serde(default)]
    pub gains: GainsConfig,
    #[serde(default)]
    pub initial: EstimatorInit,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub checks: CheckConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    pub agents: Vec<AgentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    /// Initial average-tracking state; the network total must be zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<Vec<f64>>,
    pub objective: ObjectiveSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsConfig {
    #[serde(default = "one")]
    pub gamma1: MatrixSpec,
    #[serde(default = "one")]
    pub gamma2: MatrixSpec,
    #[serde(default = "one")]
    pub gamma3: MatrixSpec,
    #[serde(default = "one")]
    pub gamma_theta: MatrixSpec,
    #[serde(default = "one")]
    pub gamma_omega: MatrixSpec,
    #[serde(default = "one")]
    pub gamma_a: MatrixSpec,
    #[serde(default = "default_k1")]
    pub k1: f64,
    #[serde(default = "default_k2")]
    pub k2: f64,
    #[serde(default = "default_alpha")]
    pub alpha_est: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_beta_bar")]
    pub beta_bar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineConfig>,
}

fn one() -> MatrixSpec {
    MatrixSpec::Scalar(1.0)
}
fn default_k1() -> f64 {
    1.0
}
fn default_k2() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    5.0
}
fn default_epsilon() -> f64 {
    SmoothingParams::default().epsilon
}
fn default_c() -> f64 {
    SmoothingParams::default().c
}
fn default_beta_bar() -> f64 {
    10.0
}

impl Default for GainsConfig {
    fn default() -> Self {
        Self {
            gamma1: one(),
            gamma2: one(),
            gamma3: one(),
            gamma_theta: one(),
            gamma_omega: one(),
            gamma_a: one(),
            k1: default_k1(),
            k2: default_k2(),
            alpha_est: default_alpha(),
            epsilon: default_epsilon(),
            c: default_c(),
            beta_bar: default_beta_bar(),
            baseline: None,
        }
    }
}

/// Nominal parameters for the known-parameter baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub omega: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    #[serde(default = "default_k1")]
    pub gain: f64,
}

/// Initial estimates, shared by every agent; absent means zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorInit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta1: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta2: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta3: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub binary: bool,
}

fn default_record_every() -> usize {
    RecordPolicy::default().every
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            record_every: default_record_every(),
            binary: false,
        }
    }
}

/// Sampling used by the load-time assumption checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Half-width of the sampling box around the initial positions.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Bound required of `‖∂∇f_i/∂t‖`.
    #[serde(default = "default_rate_bound")]
    pub rate_bound: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    32
}
fn default_radius() -> f64 {
    5.0
}
fn default_rate_bound() -> f64 {
    1e6
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            radius: default_radius(),
            rate_bound: default_rate_bound(),
            seed: 0,
        }
    }
}

/// Gradient measurement noise for randomized studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub magnitude: f64,
    #[serde(default)]
    pub seed: u64,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse scenario text. Syntax errors carry the 1-based line.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    if text.trim().is_empty() {
        return Err(Error::Parse {
            line: None,
            message: "empty scenario file".into(),
        });
    }
    toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })
}

/// Read, parse and fully validate a scenario file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_config(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// `builtin:<name>` or a path.
pub fn resolve(source: &str) -> Result<ScenarioConfig> {
    match source.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => builtin(name),
        None => load_config(source),
    }
}

fn matrix_or_zeros(rows: &Option<Vec<Vec<f64>>>, r: usize, c: usize, what: &str) -> Result<Matrix> {
    match rows {
        None => Ok(Matrix::zeros(r, c)),
        Some(rows) => {
            let m = from_rows(rows)?;
            if m.shape() != (r, c) {
                return Err(Error::Dimension(format!("{what} is {}x{}, expected {r}x{c}", m.nrows(), m.ncols())));
            }
            Ok(m)
        }
    }
}

fn is_distributed(kind: &str) -> bool {
    kind.starts_with("distributed")
}

fn is_double_integrator(kind: &str) -> bool {
    kind.ends_with("_di")
}

impl ScenarioConfig {
    /// Canonical text: every default filled in. Re-parses to an equal config.
    pub fn normalized_dump(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Validation(format!("cannot serialize scenario: {e}")))
    }

    pub fn objectives(&self) -> Result<Vec<ObjectiveModel>> {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let obj = a.objective.build()?;
                Ok(match &self.noise {
                    Some(n) if n.magnitude > 0.0 => obj.with_noise(SensorNoise {
                        magnitude: n.magnitude,
                        seed: n.seed.wrapping_add(i as u64),
                    }),
                    _ => obj,
                })
            })
            .collect()
    }

    pub fn topology(&self) -> Result<Option<Topology>> {
        self.topology.as_ref().map(TopologySpec::build).transpose()
    }

    fn dims(&self, objectives: &[ObjectiveModel]) -> Result<(usize, usize)> {
        let m = common_dim(objectives)?;
        Ok((m, objectives[0].param_dim()))
    }

    /// Every load-time check. Messages name the violated condition.
    pub fn validate(&self) -> Result<()> {
        let registry = ControllerRegistry::default();
        if !registry.contains(&self.controller) {
            return Err(Error::Unknown {
                kind: "controller",
                name: self.controller.clone(),
                known: registry.names().join(", "),
            });
        }
        if self.agents.is_empty() {
            return Err(Error::Validation("scenario lists no agents".into()));
        }
        self.integrator.validate()?;
        if self.output.record_every == 0 {
            return Err(Error::Validation("output.record_every must be at least 1".into()));
        }
        if let Some(n) = &self.noise {
            if !(n.magnitude >= 0.0) {
                return Err(Error::Validation(format!("noise magnitude {} must be nonnegative", n.magnitude)));
            }
        }
        let objectives = self.objectives()?;
        let (m, _) = self.dims(&objectives)?;
        for (i, a) in self.agents.iter().enumerate() {
            for (what, len) in [
                ("x0", Some(a.x0.len())),
                ("v0", a.v0.as_ref().map(Vec::len)),
                ("sigma0", a.sigma0.as_ref().map(Vec::len)),
            ] {
                if let Some(len) = len.filter(|&l| l != m) {
                    return Err(Error::Dimension(format!("agent {}: {what} has length {len}, expected {m}", i + 1)));
                }
            }
        }
        if !is_double_integrator(&self.controller) && self.plant != Plant::DoubleIntegrator {
            return Err(Error::Validation(format!(
                "plant `{:?}` needs a double-integrator controller, not {}",
                self.plant, self.controller
            )));
        }

        let g = &self.gains;
        for (name, spec) in [
            ("gamma1", &g.gamma1),
            ("gamma2", &g.gamma2),
            ("gamma3", &g.gamma3),
            ("gamma_theta", &g.gamma_theta),
            ("gamma_omega", &g.gamma_omega),
            ("gamma_a", &g.gamma_a),
        ] {
            require_spd(&spec.to_matrix(m)?, name)?;
        }
        for (name, v) in [("k1", g.k1), ("k2", g.k2), ("alpha_est", g.alpha_est), ("epsilon", g.epsilon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("gain {name} = {v} must be positive")));
            }
        }
        if !(g.c >= 0.0) {
            return Err(Error::Validation(format!("smoothing decay c = {} must be nonnegative", g.c)));
        }

        if is_distributed(&self.controller) {
            self.validate_network(&objectives)?;
        } else if self.agents.len() != 1 {
            return Err(Error::Validation(format!(
                "{} acts on the global objective and takes exactly one agent, got {}",
                self.controller,
                self.agents.len()
            )));
        }

        let failures = self.assumption_report()?.failures();
        if !failures.is_empty() {
            return Err(Error::Validation(failures.join("; ")));
        }

        // assembling the loop catches every remaining shape mismatch
        registry.build(&self.controller, self.loop_spec()?)?;
        Ok(())
    }

    fn validate_network(&self, objectives: &[ObjectiveModel]) -> Result<()> {
        let topo = self
            .topology()
            .map_err(|e| Error::Validation(format!("Assumption 4 (undirected connected graph) violated: {e}")))?
            .ok_or_else(|| Error::Validation(format!("{} needs a [topology] section", self.controller)))?;
        if topo.n_agents() != objectives.len() {
            return Err(Error::Validation(format!(
                "topology has {} agents but {} are listed",
                topo.n_agents(),
                objectives.len()
            )));
        }
        if !topo.is_connected() {
            return Err(Error::Validation(
                "Assumption 4 (undirected connected graph) violated: the topology is disconnected".into(),
            ));
        }
        if self.controller == "distributed_si" {
            let m = objectives[0].dim();
            let total = self
                .agents
                .iter()
                .filter_map(|a| a.sigma0.as_ref())
                .fold(Vector::zeros(m), |acc, s| acc + Vector::from_column_slice(s));
            if total.amax() > 1e-12 {
                return Err(Error::Validation(format!(
                    "initial average-tracking states must sum to zero, got {:?}",
                    total.as_slice()
                )));
            }
        }
        if self.controller == "distributed_di" {
            if let Some((i, j)) = topo.uncovered_pair() {
                return Err(Error::Validation(format!(
                    "Assumption 6 (two-hop cover) violated: agents {} and {} are neither neighbors nor share a neighbor",
                    i + 1,
                    j + 1
                )));
            }
            let lambda2 = build_spectral(&topo).lambda2;
            let (k1, k2) = (self.gains.k1, self.gains.k2);
            if !consensus_gain_condition(k1, k2, lambda2) {
                return Err(Error::Validation(format!(
                    "k1/(2k2²) = {:.2} ≥ λ₂ = {lambda2:.2}, violates Theorem 4 condition",
                    k1 / (2.0 * k2 * k2)
                )));
            }
        }
        Ok(())
    }

    /// Sampled assumption checks over the box around the initial positions.
    pub fn assumption_report(&self) -> Result<ValidationReport> {
        let objectives = self.objectives()?;
        let m = common_dim(&objectives)?;
        validate_assumptions(&objectives, &self.check_samples(m), self.checks.rate_bound)
    }

    fn check_samples(&self, m: usize) -> Vec<(Vector, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.checks.seed);
        let n = self.agents.len() as f64;
        let center = self
            .agents
            .iter()
            .fold(Vector::zeros(m), |acc, a| acc + Vector::from_column_slice(&a.x0))
            / n;
        let r = self.checks.radius;
        (0..self.checks.samples.max(1))
            .map(|_| {
                let x = center.map(|c| c + rng.gen_range(-r..=r));
                (x, rng.gen_range(0.0..=self.integrator.t_end))
            })
            .collect()
    }

    /// Resolved controller inputs.
    pub fn loop_spec(&self) -> Result<LoopSpec> {
        let objectives = self.objectives()?;
        let (m, p) = self.dims(&objectives)?;
        let n = self.agents.len();
        let g = &self.gains;
        let init = &self.initial;
        let baseline = g
            .baseline
            .as_ref()
            .map(|b| {
                Ok::<_, Error>(NominalModel {
                    omega: from_rows(&b.omega)?,
                    a: from_rows(&b.a)?,
                    gain: b.gain,
                })
            })
            .transpose()?;
        let gains = Gains {
            gamma1: g.gamma1.to_matrix(m)?,
            gamma2: g.gamma2.to_matrix(m)?,
            gamma3: g.gamma3.to_matrix(m)?,
            gamma_theta: vec![g.gamma_theta.to_matrix(m)?; n],
            gamma_omega: g.gamma_omega.to_matrix(m)?,
            gamma_a: vec![g.gamma_a.to_matrix(m)?; n],
            k1: g.k1,
            k2: g.k2,
            alpha_est: g.alpha_est,
            smoothing: SmoothingParams {
                epsilon: g.epsilon,
                c: g.c,
            },
            beta_bar: g.beta_bar,
            baseline,
        };
        let vec_or_zero = |v: &Option<Vec<f64>>| v.as_ref().map_or(Vector::zeros(m), |v| Vector::from_column_slice(v));
        let init_state = InitialState {
            x: self.agents.iter().map(|a| Vector::from_column_slice(&a.x0)).collect(),
            v: self.agents.iter().map(|a| vec_or_zero(&a.v0)).collect(),
            eta1: matrix_or_zeros(&init.eta1, m, p, "eta1")?,
            eta2: matrix_or_zeros(&init.eta2, m, m, "eta2")?,
            eta3: matrix_or_zeros(&init.eta3, m, p, "eta3")?,
            theta: vec![matrix_or_zeros(&init.theta, m, p, "theta")?; n],
            omega: matrix_or_zeros(&init.omega, m, m, "omega")?,
            a: vec![matrix_or_zeros(&init.a, m, p, "a")?; n],
            sigma: self.agents.iter().map(|a| vec_or_zero(&a.sigma0)).collect(),
            beta: init.beta,
        };
        Ok(LoopSpec {
            objectives,
            topology: if is_distributed(&self.controller) {
                self.topology()?
            } else {
                None
            },
            gains,
            init: init_state,
            plant: self.plant.clone(),
        })
    }

    pub fn closed_loop(&self) -> Result<Box<dyn ClosedLoop>> {
        ControllerRegistry::default().build(&self.controller, self.loop_spec()?)
    }

    pub fn simulate(&self) -> Result<Trace> {
        let mut lp = self.closed_loop()?;
        simulate(
            lp.as_mut(),
            &self.integrator,
            RecordPolicy {
                every: self.output.record_every,
            },
        )
    }

    /// `x*(t)` of the scenario's global objective.
    pub fn oracle(&self, t: f64) -> Result<Vector> {
        let objectives = self.objectives()?;
        let m = common_dim(&objectives)?;
        let guess = self
            .agents
            .iter()
            .fold(Vector::zeros(m), |acc, a| acc + Vector::from_column_slice(&a.x0))
            / self.agents.len() as f64;
        oracle_solve(&objectives, t, &guess)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_a_parse_error() {
        let err = parse_config("  \n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = "name = \"x\"\ncontroller = \"centralized_si\"\nagents = [\n  { x0 = [1.0, }\n]\n";
        match parse_config(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, Some(4)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn defaults_are_filled_and_dump_round_trips() {
        let text = r#"
name = "mini"
controller = "centralized_si"

[[agents]]
x0 = [0.5]
objective = { family = "quadratic_tracking", k = 1.0, signals = [{ kind = "sin" }] }
"#;
        let cfg = parse_config(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.integrator.method, "rk4");
        assert_eq!(cfg.integrator.step, 1e-3);
        assert_eq!(cfg.output.record_every, 10);
        let dump = cfg.normalized_dump().unwrap();
        assert!(dump.contains("t_end = 20.0"), "{dump}");
        assert_eq!(parse_config(&dump).unwrap(), cfg);
    }

    #[test]
    fn unknown_field_is_a_parse_error() {
        let text = "name = \"x\"\ncontroller = \"centralized_si\"\nbogus = 1\nagents = []\n";
        assert!(matches!(parse_config(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn centralized_needs_one_agent() {
        let mut cfg = builtin("quad_si_central").unwrap();
        cfg.agents.push(cfg.agents[0].clone());
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
    }

    #[test]
    fn distributed_si_rejects_nonzero_sigma_total() {
        let mut cfg = builtin("quad_si_dist").unwrap();
        cfg.agents[0].sigma0 = Some(vec![0.5]);
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("sum to zero"), "{err}");
    }

    #[test]
    fn large_k1_violates_gain_condition() {
        let mut cfg = builtin_source_seek();
        cfg.gains.k1 = 4.0;
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("1.65") && msg.contains("1.38") && msg.contains("Theorem 4"), "{msg}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn disconnected_topology_names_connectivity_assumption() {
        let mut cfg = builtin("quad_si_dist").unwrap();
        let mut adj = vec![vec![0.0; 5]; 5];
        for (i, j) in [(0, 1), (1, 2), (3, 4)] {
            adj[i][j] = 1.0;
            adj[j][i] = 1.0;
        }
        cfg.topology = Some(TopologySpec::Explicit { adjacency: adj });
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("Assumption 4"), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn path_graph_fails_two_hop_cover_for_double_integrators() {
        let mut cfg = builtin_source_seek();
        cfg.topology = Some(TopologySpec::Generated {
            generator: crate::graph::Generator::Path,
            size: 5,
        });
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("Assumption 6"), "{err}");
    }

    #[test]
    fn non_identical_hessians_are_rejected_for_networks() {
        let mut cfg = builtin("quad_si_dist").unwrap();
        cfg.agents[2].objective = ObjectiveSpec::QuadraticTracking {
            k: MatrixSpec::Scalar(3.0),
            b: None,
            signals: vec![crate::objective::Signal::sin()],
        };
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("Assumption 1"), "{err}");
    }
}

//! Built-in scenarios, one per closed loop, plus the known-parameter baseline.

use crate::error::{Error, Result};
use crate::graph::{Generator, TopologySpec};
use crate::linalg::MatrixSpec;
use crate::objective::{ObjectiveSpec, Signal};
use crate::sim::{IntegratorConfig, Plant};

use super::{AgentConfig, BaselineConfig, CheckConfig, EstimatorInit, GainsConfig, OutputConfig, ScenarioConfig};

const NAMES: [&str; 5] = [
    "quad_si_central",
    "quad_si_dist",
    "quad_di_central",
    "source_seek",
    "quad_newton_baseline",
];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    match name {
        "quad_si_central" => Ok(quad_si_central()),
        "quad_si_dist" => Ok(quad_si_dist()),
        "quad_di_central" => Ok(quad_di_central()),
        "source_seek" => Ok(builtin_source_seek()),
        "quad_newton_baseline" => Ok(quad_newton_baseline()),
        _ => Err(Error::Unknown {
            kind: "builtin scenario",
            name: name.to_string(),
            known: NAMES.join(", "),
        }),
    }
}

fn sinusoid(scale: f64) -> ObjectiveSpec {
    ObjectiveSpec::QuadraticTracking {
        k: MatrixSpec::Scalar(1.0),
        b: None,
        signals: vec![Signal::sin().scaled(scale)],
    }
}

fn base(name: &str, description: &str, controller: &str, agents: Vec<AgentConfig>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        description: description.into(),
        controller: controller.into(),
        topology: None,
        plant: Plant::DoubleIntegrator,
        gains: GainsConfig::default(),
        initial: EstimatorInit::default(),
        integrator: IntegratorConfig::default(),
        output: OutputConfig::default(),
        checks: CheckConfig::default(),
        noise: None,
        agents,
    }
}

fn agent(x0: Vec<f64>, objective: ObjectiveSpec) -> AgentConfig {
    AgentConfig {
        x0,
        v0: None,
        sigma0: None,
        objective,
    }
}

fn quad_si_central() -> ScenarioConfig {
    let mut cfg = base(
        "quad_si_central",
        "single integrator tracking sin t; the controller knows h = 1 and g = cos t only",
        "centralized_si",
        vec![agent(vec![0.5], sinusoid(1.0))],
    );
    cfg.gains.gamma1 = MatrixSpec::Scalar(2.0);
    cfg
}

fn quad_newton_baseline() -> ScenarioConfig {
    let mut cfg = base(
        "quad_newton_baseline",
        "known-parameter Newton flow on the quad_si_central objective with a 20% error in A",
        "newton_baseline",
        vec![agent(vec![0.5], sinusoid(1.0))],
    );
    cfg.gains.baseline = Some(BaselineConfig {
        omega: vec![vec![2.0]],
        a: vec![vec![-2.4]],
        gain: 1.0,
    });
    cfg
}

/// Per-agent amplitudes of the distributed single-integrator scenario.
pub const QUAD_SI_DIST_SCALES: [f64; 5] = [0.6, 0.8, 1.0, 1.2, 1.4];

fn quad_si_dist() -> ScenarioConfig {
    let x0 = [-1.0, 0.5, 2.0, -2.0, 1.5];
    let agents = QUAD_SI_DIST_SCALES
        .iter()
        .zip(x0)
        .map(|(&c, x)| agent(vec![x], sinusoid(c)))
        .collect();
    let mut cfg = base(
        "quad_si_dist",
        "five single integrators on a cycle tracking the minimizer of sum (x - c_i sin t)^2",
        "distributed_si",
        agents,
    );
    cfg.topology = Some(TopologySpec::Generated {
        generator: Generator::Cycle,
        size: 5,
    });
    cfg.gains.gamma_theta = MatrixSpec::Scalar(0.2);
    cfg.gains.alpha_est = 4.0;
    cfg.initial.beta = 5.0;
    cfg
}

fn quad_di_central() -> ScenarioConfig {
    let mut a = agent(vec![0.5], sinusoid(1.0));
    a.v0 = Some(vec![0.0]);
    let mut cfg = base(
        "quad_di_central",
        "double integrator tracking sin t with Omega and A unknown",
        "centralized_di",
        vec![a],
    );
    cfg.gains.gamma1 = MatrixSpec::Scalar(2.0);
    cfg.gains.gamma2 = MatrixSpec::Scalar(10.0);
    cfg.gains.gamma3 = MatrixSpec::Scalar(10.0);
    cfg
}

/// Five vehicles seeking a source moving along `(1.9 sin t, 2.1 cos t)`,
/// each also pulled toward the anchors it can see.
pub fn builtin_source_seek() -> ScenarioConfig {
    let anchors = [[-6.0, 6.0], [6.0, 6.0], [6.0, -6.0], [-6.0, -6.0]];
    let q = [
        [1.0, 1.0, 0.0, 0.0],
        [0.0, 1.0, 1.0, 0.0],
        [0.0, 0.0, 1.0, 1.0],
        [1.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0, 0.0],
    ];
    let x0 = [[4.0, 4.0], [-4.0, 4.0], [-4.0, -4.0], [4.0, -4.0], [1.0, 3.0]];
    let agents = (0..5)
        .map(|i| {
            let seen: Vec<usize> = (0..4).filter(|&j| q[i][j] != 0.0).collect();
            let mut a = agent(
                x0[i].to_vec(),
                ObjectiveSpec::SourceSeekLocal {
                    a: 0.9,
                    b: vec![vec![1.9, 0.0], vec![0.0, 2.1]],
                    signals: vec![Signal::sin(), Signal::cos()],
                    anchors: seen.iter().map(|&j| anchors[j].to_vec()).collect(),
                    weights: seen.iter().map(|&j| 0.1 * q[i][j]).collect(),
                },
            );
            a.v0 = Some(vec![0.0, 0.0]);
            a
        })
        .collect();
    let mut cfg = base(
        "source_seek",
        "five vehicles with mass and quadratic drag seeking a moving source over a 5-cycle",
        "distributed_di",
        agents,
    );
    cfg.topology = Some(TopologySpec::Explicit {
        adjacency: vec![
            vec![0.0, 1.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 1.0, 0.0],
        ],
    });
    cfg.plant = Plant::Vehicle {
        mass: vec![1.9, 2.0, 2.1, 2.2, 2.3],
        friction: vec![vec![0.6, 0.8], vec![0.7, 1.0], vec![0.8, 1.2], vec![0.9, 1.4], vec![1.0, 1.6]],
    };
    cfg.gains = GainsConfig {
        gamma_theta: MatrixSpec::Scalar(0.8),
        gamma_omega: MatrixSpec::Scalar(0.5),
        gamma_a: MatrixSpec::Scalar(1.0),
        k1: 3.12,
        k2: 1.1,
        epsilon: 0.1,
        c: 0.1,
        ..GainsConfig::default()
    };
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates() {
        for name in builtin_names() {
            builtin(name).unwrap().validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn source_seek_matches_published_setup() {
        let cfg = builtin_source_seek();
        assert_eq!(cfg.agents.len(), 5);
        let x0: Vec<_> = cfg.agents.iter().map(|a| a.x0.clone()).collect();
        assert_eq!(x0, vec![vec![4.0, 4.0], vec![-4.0, 4.0], vec![-4.0, -4.0], vec![4.0, -4.0], vec![1.0, 3.0]]);
        assert_eq!(cfg.initial, EstimatorInit::default());
        assert!(cfg.agents.iter().all(|a| a.v0 == Some(vec![0.0, 0.0])));
    }

    #[test]
    fn unknown_builtin() {
        assert!(matches!(builtin("nope"), Err(Error::Unknown { .. })));
    }
}

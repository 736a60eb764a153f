//! JSON descriptors for functions, networks, instances, and schedules.
//!
//! These are the on-disk formats consumed and produced by the command-line
//! tool. Field names are part of the contract.
//!
//! Function:
//!
//! ```json
//! {"type": "quadratic", "hessian": [[1.0, 0.0], [0.0, 100.0]], "minimizer": [0.5, 0.0]}
//! {"type": "rotated2d", "phi": 0.0997, "sign": -1, "minimizer": [-1.0, 0.0],
//!  "alpha": 1.0, "beta": 100.0}
//! ```
//!
//! Network (explicit adjacency, row-major, or a generator):
//!
//! ```json
//! {"adjacency": [[1.0, 1.0], [1.0, 1.0]]}
//! {"generator": {"kind": "erdos_renyi", "n": 10, "p": 0.4, "seed": 7}}
//! ```
//!
//! Instance (`eta` optional; when absent the contractive default
//! `1 / (beta + rho * lambda_n)` is used):
//!
//! ```json
//! {"functions": [...], "network": {...}, "rho": 2.0, "eta": 0.2}
//! ```
//!
//! Schedule:
//!
//! ```json
//! {"mode": "scripted", "events": [{"k": 10, "agent": 1, "function": {...}}]}
//! {"mode": "adversarial_random", "period": 1, "seed": 0}
//! {"mode": "adversarial_worst_effort", "period": 1}
//! {"mode": "alternating_swap", "agent": 1, "period": 1, "functions": [{...}, {...}]}
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{QuadraticFunction, RotatedQuadratic2D, RotationSign};
use crate::network::Network;
use crate::objective::ProblemInstance;
use crate::open_system::{EventSchedule, FunctionEvent};

/// A function in descriptor form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum FunctionDescriptor {
    #[serde(rename = "quadratic")]
    Quadratic {
        /// Row-major symmetric positive-definite matrix.
        hessian: Vec<Vec<f64>>,
        minimizer: Vec<f64>,
    },
    #[serde(rename = "rotated2d")]
    Rotated2d {
        phi: f64,
        /// `+1` or `-1`.
        sign: i8,
        minimizer: Vec<f64>,
        alpha: f64,
        beta: f64,
    },
}

impl FunctionDescriptor {
    pub fn build(&self) -> Result<QuadraticFunction> {
        match self {
            FunctionDescriptor::Quadratic { hessian, minimizer } => {
                let rows = hessian.len();
                if rows == 0 || hessian.iter().any(|r| r.len() != rows) {
                    return Err(Error::Descriptor(
                        "hessian must be a nonempty square matrix".into(),
                    ));
                }
                let flat: Vec<f64> = hessian.iter().flatten().copied().collect();
                QuadraticFunction::new(
                    DMatrix::from_row_slice(rows, rows, &flat),
                    DVector::from_vec(minimizer.clone()),
                )
            }
            FunctionDescriptor::Rotated2d { phi, sign, minimizer, alpha, beta } => {
                if minimizer.len() != 2 {
                    return Err(Error::Descriptor(
                        "rotated2d minimizer must have two coordinates".into(),
                    ));
                }
                let rotated = RotatedQuadratic2D::new(
                    *phi,
                    RotationSign::from_i8(*sign)?,
                    [minimizer[0], minimizer[1]],
                    *alpha,
                    *beta,
                )?;
                Ok(rotated.expand())
            }
        }
    }

    /// Dense descriptor form of a function.
    pub fn from_function(f: &QuadraticFunction) -> Self {
        let d = f.dimension();
        let hessian = (0..d)
            .map(|i| (0..d).map(|j| f.hessian()[(i, j)]).collect())
            .collect();
        FunctionDescriptor::Quadratic {
            hessian,
            minimizer: f.minimizer().iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Complete,
    Path,
    Cycle,
    ErdosRenyi,
}

fn default_weight() -> f64 {
    1.0
}

/// Parameters for a generated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDescriptor {
    pub kind: GeneratorKind,
    pub n: usize,
    #[serde(default = "default_weight")]
    pub edge_weight: f64,
    #[serde(default = "default_weight")]
    pub self_weight: f64,
    /// Edge probability; required for `erdos_renyi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Seed; required for `erdos_renyi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A network in descriptor form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum NetworkDescriptor {
    Adjacency { adjacency: Vec<Vec<f64>> },
    Generator { generator: GeneratorDescriptor },
}

impl NetworkDescriptor {
    pub fn build(&self) -> Result<Network> {
        match self {
            NetworkDescriptor::Adjacency { adjacency } => {
                let rows = adjacency.len();
                if rows == 0 || adjacency.iter().any(|r| r.len() != rows) {
                    return Err(Error::Descriptor(
                        "adjacency must be a nonempty square matrix".into(),
                    ));
                }
                let flat: Vec<f64> = adjacency.iter().flatten().copied().collect();
                Network::build(DMatrix::from_row_slice(rows, rows, &flat))
            }
            NetworkDescriptor::Generator { generator } => {
                let g = generator;
                match g.kind {
                    GeneratorKind::Complete => Network::complete(g.n, g.edge_weight, g.self_weight),
                    GeneratorKind::Path => Network::path(g.n, g.edge_weight, g.self_weight),
                    GeneratorKind::Cycle => Network::cycle(g.n, g.edge_weight, g.self_weight),
                    GeneratorKind::ErdosRenyi => {
                        let p = g.p.ok_or_else(|| {
                            Error::Descriptor("erdos_renyi generator needs \"p\"".into())
                        })?;
                        let seed = g.seed.ok_or_else(|| {
                            Error::Descriptor("erdos_renyi generator needs \"seed\"".into())
                        })?;
                        Network::erdos_renyi(g.n, p, g.edge_weight, g.self_weight, seed)
                    }
                }
            }
        }
    }

    pub fn from_network(net: &Network) -> Self {
        let n = net.agent_count();
        let adjacency = (0..n)
            .map(|i| (0..n).map(|j| net.adjacency()[(i, j)]).collect())
            .collect();
        NetworkDescriptor::Adjacency { adjacency }
    }
}

/// A problem instance in descriptor form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDescriptor {
    pub functions: Vec<FunctionDescriptor>,
    pub network: NetworkDescriptor,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl InstanceDescriptor {
    pub fn build(&self) -> Result<ProblemInstance> {
        let functions = self
            .functions
            .iter()
            .map(|f| f.build())
            .collect::<Result<Vec<_>>>()?;
        ProblemInstance::new(functions, self.network.build()?, self.rho, self.eta)
    }

    pub fn from_instance(inst: &ProblemInstance) -> Self {
        Self {
            functions: inst.functions().iter().map(FunctionDescriptor::from_function).collect(),
            network: NetworkDescriptor::from_network(inst.network()),
            rho: inst.rho(),
            eta: Some(inst.eta()),
        }
    }

    /// Canonical JSON for fingerprinting and round trips.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptors serialize")
    }
}

/// One scripted event in descriptor form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDescriptor {
    pub k: usize,
    pub agent: usize,
    pub function: FunctionDescriptor,
}

/// A schedule in descriptor form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", deny_unknown_fields)]
pub enum ScheduleDescriptor {
    #[serde(rename = "scripted")]
    Scripted { events: Vec<EventDescriptor> },
    #[serde(rename = "adversarial_random")]
    AdversarialRandom { period: usize, seed: u64 },
    #[serde(rename = "adversarial_worst_effort")]
    AdversarialWorstEffort { period: usize },
    /// Exactly two functions, cycled on one agent.
    #[serde(rename = "alternating_swap")]
    AlternatingSwap {
        agent: usize,
        period: usize,
        functions: Vec<FunctionDescriptor>,
    },
}

impl ScheduleDescriptor {
    pub fn build(&self) -> Result<EventSchedule> {
        match self {
            ScheduleDescriptor::Scripted { events } => {
                let events = events
                    .iter()
                    .map(|e| Ok(FunctionEvent::new(e.k, e.agent, e.function.build()?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(EventSchedule::scripted(events))
            }
            ScheduleDescriptor::AdversarialRandom { period, seed } => {
                Ok(EventSchedule::AdversarialRandom { period: *period, seed: *seed })
            }
            ScheduleDescriptor::AdversarialWorstEffort { period } => {
                Ok(EventSchedule::AdversarialWorstEffort { period: *period })
            }
            ScheduleDescriptor::AlternatingSwap { agent, period, functions } => {
                if functions.len() != 2 {
                    return Err(Error::Descriptor(
                        "alternating_swap needs exactly two functions".into(),
                    ));
                }
                Ok(EventSchedule::AlternatingSwap {
                    agent: *agent,
                    period: *period,
                    first: Box::new(functions[0].build()?),
                    second: Box::new(functions[1].build()?),
                })
            }
        }
    }
}

/// Parses an instance from JSON text.
pub fn instance_from_json(json: &str) -> Result<ProblemInstance> {
    let descriptor: InstanceDescriptor = serde_json::from_str(json)?;
    descriptor.build()
}

/// Parses a schedule from JSON text.
pub fn schedule_from_json(json: &str) -> Result<EventSchedule> {
    let descriptor: ScheduleDescriptor = serde_json::from_str(json)?;
    descriptor.build()
}

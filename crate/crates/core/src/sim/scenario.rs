//! Scenario documents: parsing and validation.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::interference::{InterferenceModel, DEFAULT_ENUMERATION_CAP};
use crate::optimizer::{SchedulePolicy, SolverParams};
use crate::topology::{validate_path, Flow, Network, NodeId};
use crate::trust::TrustState;

use super::SimError;

pub const SCENARIO_VERSION: u32 = 1;

/// On-disk layout of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub nodes: Vec<String>,
    pub links: Vec<LinkSpec>,
    pub flows: Vec<FlowSpec>,
    pub trust: TrustSpec,
    pub slots: u64,
    pub update_period: u64,
    #[serde(default)]
    pub interference: InterferenceModel,
    #[serde(default)]
    pub schedule_policy: SchedulePolicy,
    #[serde(default = "unit")]
    pub delay_scale: f64,
    /// Values of the per-flow maximum rate to run, each as a separate
    /// experiment. Empty means the rates given on the flows.
    #[serde(default)]
    pub rate_sweep: Vec<f64>,
    #[serde(default = "yes")]
    pub warm_start: bool,
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
    #[serde(default)]
    pub solver: SolverParams,
}

fn unit() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_cap() -> usize {
    DEFAULT_ENUMERATION_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub src: String,
    pub dst: String,
    /// kbps
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub name: String,
    pub source: String,
    pub destination: String,
    pub max_rate: f64,
    #[serde(default)]
    pub reliability_threshold: f64,
    pub delay_bound: f64,
    /// Each path as its node sequence.
    pub paths: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustSpec {
    pub alpha: f64,
    /// One row of fresh node trust samples per update period, in node
    /// order.
    pub schedule: Vec<Vec<f64>>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub network: Network,
    pub flows: Vec<Flow>,
    pub alpha: f64,
    pub trust_schedule: Vec<Vec<f64>>,
    pub slots: u64,
    pub update_period: u64,
    pub interference: InterferenceModel,
    pub schedule_policy: SchedulePolicy,
    pub kappa: f64,
    pub rate_sweep: Vec<f64>,
    pub warm_start: bool,
    pub enumeration_cap: usize,
    pub solver: SolverParams,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SimError {
    SimError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self, SimError> {
        if file.version != SCENARIO_VERSION {
            return Err(invalid(
                "version",
                format!("unsupported version {}", file.version),
            ));
        }
        let links: Vec<(&str, &str, f64)> = file
            .links
            .iter()
            .map(|l| (l.src.as_str(), l.dst.as_str(), l.capacity))
            .collect();
        let nodes: Vec<&str> = file.nodes.iter().map(String::as_str).collect();
        let network = Network::new(&nodes, &links).map_err(|e| invalid("links", e.to_string()))?;

        let mut flows = Vec::with_capacity(file.flows.len());
        for (i, f) in file.flows.iter().enumerate() {
            let field = |s: &str| format!("flows[{i}].{s}");
            let node = |name: &str, s: &str| -> Result<NodeId, SimError> {
                network
                    .node(name)
                    .map_err(|e| invalid(field(s), e.to_string()))
            };
            let source = node(&f.source, "source")?;
            let destination = node(&f.destination, "destination")?;
            let mut paths = Vec::with_capacity(f.paths.len());
            for (k, seq) in f.paths.iter().enumerate() {
                let pfield = field(&format!("paths[{k}]"));
                let ids = seq
                    .iter()
                    .map(|n| network.node(n))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| invalid(pfield.clone(), e.to_string()))?;
                let hops: Vec<_> = ids.windows(2).map(|w| (w[0], w[1])).collect();
                let p = validate_path(&network, &hops, source, destination)
                    .map_err(|e| invalid(pfield, e.to_string()))?;
                paths.push(p);
            }
            if paths.is_empty() {
                return Err(invalid(field("paths"), "at least one path is required"));
            }
            let flow = Flow::new(
                f.name.clone(),
                source,
                destination,
                paths,
                f.max_rate,
                f.reliability_threshold,
                f.delay_bound,
            )
            .map_err(|e| invalid(format!("flows[{i}]"), e.to_string()))?;
            flows.push(flow);
        }
        if flows.is_empty() {
            return Err(invalid("flows", "at least one flow is required"));
        }

        if !(0.0..=1.0).contains(&file.trust.alpha) {
            return Err(invalid(
                "trust.alpha",
                format!("{} is outside [0, 1]", file.trust.alpha),
            ));
        }
        if file.update_period == 0
            || file.slots == 0
            || !file.slots.is_multiple_of(file.update_period)
        {
            return Err(invalid(
                "update_period",
                format!(
                    "slots ({}) must be a positive multiple of update_period ({})",
                    file.slots, file.update_period
                ),
            ));
        }
        let periods = (file.slots / file.update_period) as usize;
        if file.trust.schedule.len() != periods {
            return Err(invalid(
                "trust.schedule",
                format!(
                    "expected {periods} rows (one per update period), found {}",
                    file.trust.schedule.len()
                ),
            ));
        }
        for (r, row) in file.trust.schedule.iter().enumerate() {
            if row.len() != network.node_count() {
                return Err(invalid(
                    format!("trust.schedule[{r}]"),
                    format!(
                        "expected {} values, found {}",
                        network.node_count(),
                        row.len()
                    ),
                ));
            }
            for (c, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(invalid(
                        format!("trust.schedule[{r}][{c}]"),
                        format!("{v} is outside [0, 1]"),
                    ));
                }
            }
        }
        if !(file.delay_scale > 0.0) {
            return Err(invalid("delay_scale", "must be positive"));
        }
        for (i, &r) in file.rate_sweep.iter().enumerate() {
            for f in &flows {
                if !(r >= f.reliability_threshold) {
                    return Err(invalid(
                        format!("rate_sweep[{i}]"),
                        format!("{r} is below the reliability threshold of flow {}", f.name),
                    ));
                }
            }
        }
        let mut solver = file.solver;
        solver.schedule = file.schedule_policy;
        solver
            .validate(&network)
            .map_err(|e| invalid("solver", e.to_string()))?;

        Ok(Scenario {
            name: file.name,
            network,
            flows,
            alpha: file.trust.alpha,
            trust_schedule: file.trust.schedule,
            slots: file.slots,
            update_period: file.update_period,
            interference: file.interference,
            schedule_policy: file.schedule_policy,
            kappa: file.delay_scale,
            rate_sweep: file.rate_sweep,
            warm_start: file.warm_start,
            enumeration_cap: file.enumeration_cap,
            solver,
        })
    }

    pub fn periods(&self) -> usize {
        self.trust_schedule.len()
    }

    /// Trust before the first update: the first row taken as is.
    pub fn initial_trust(&self) -> TrustState {
        TrustState::new(self.trust_schedule[0].clone(), self.alpha).expect("validated")
    }

    /// Copy with every flow's maximum rate set to `rate`.
    pub fn with_max_rate(&self, rate: f64) -> Result<Scenario, SimError> {
        let mut s = self.clone();
        for f in &mut s.flows {
            if !(rate >= f.reliability_threshold) {
                return Err(invalid(
                    "max_rate",
                    format!(
                        "{rate} is below the reliability threshold of flow {}",
                        f.name
                    ),
                ));
            }
            f.max_rate = rate;
        }
        s.rate_sweep = vec![rate];
        Ok(s)
    }

    /// One scenario per sweep value, or just this one when there is no
    /// sweep.
    pub fn variants(&self) -> Result<Vec<Scenario>, SimError> {
        if self.rate_sweep.len() <= 1 {
            return match self.rate_sweep.first() {
                Some(&r) => Ok(vec![self.with_max_rate(r)?]),
                None => Ok(vec![self.clone()]),
            };
        }
        self.rate_sweep
            .iter()
            .map(|&r| self.with_max_rate(r))
            .collect()
    }

    pub fn with_schedule(&self, policy: SchedulePolicy) -> Scenario {
        let mut s = self.clone();
        s.schedule_policy = policy;
        s.solver.schedule = policy;
        s
    }
}

pub fn load_scenario(path: impl AsRef<FsPath>) -> Result<Scenario, SimError> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_json(&text)
}

//! Experiment configuration and shipped presets.

use std::path::PathBuf;

use dronesense::baselines::GreedyView;
use dronesense::plangen::{Allocation, MobilityPolicy};
use dronesense::scenario::SyntheticTrafficParams;
use dronesense::{DroneSpec, Environment, MapParams, TimeStructure};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

/// Where the sensing maps come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioConfig {
    /// A fresh synthetic map per instance.
    Synthetic(MapParams),
    /// One fixed map read from JSON; instances differ only in plan seeds.
    MapFile { path: PathBuf },
    /// A corridor of cells with targets derived from vehicle counts.
    Traffic(TrafficConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrafficSource {
    Synthetic(SyntheticTrafficParams),
    /// `cell,time_unit,vehicle_type,count` rows.
    File { path: PathBuf, vehicle_types: Vec<String> },
}

/// Traffic scenario: the cells form a `columns`-wide lattice with `pitch`
/// meter spacing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub source: TrafficSource,
    pub cells: usize,
    pub columns: usize,
    pub pitch: f64,
    pub stations: usize,
    /// Target of the busiest cell.
    pub target_cap: f64,
    pub time: TimeStructure,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            source: TrafficSource::Synthetic(SyntheticTrafficParams::default()),
            cells: 10,
            columns: 5,
            pitch: 200.0,
            stations: 2,
            target_cap: 500.0,
            time: TimeStructure {
                periods: 20,
                units_per_period: 30,
                unit_length: 60.0,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSettings {
    pub plans: usize,
    pub delta: f64,
    pub allocation: Allocation,
    pub max_redraws: usize,
}

impl Default for PlanSettings {
    fn default() -> Self {
        Self {
            plans: 64,
            delta: 8.0,
            allocation: Allocation::Proportional,
            max_redraws: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoordinationSettings {
    pub iterations: usize,
    pub repetitions: usize,
}

impl Default for CoordinationSettings {
    fn default() -> Self {
        Self {
            iterations: 40,
            repetitions: 40,
        }
    }
}

/// A method to evaluate, with its own parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodSpec {
    Epos {
        label: String,
        policy: MobilityPolicy,
        beta: f64,
    },
    Greedy {
        label: String,
        view: GreedyView,
    },
    RoundRobin {
        label: String,
        cells_per_dispatch: usize,
    },
    /// Every agent keeps its cheapest plan.
    MinEnergy {
        label: String,
        policy: MobilityPolicy,
    },
}

impl MethodSpec {
    pub fn label(&self) -> &str {
        match self {
            MethodSpec::Epos { label, .. }
            | MethodSpec::Greedy { label, .. }
            | MethodSpec::RoundRobin { label, .. }
            | MethodSpec::MinEnergy { label, .. } => label,
        }
    }

    /// Policy whose plan sets the method consumes, if any.
    pub fn policy(&self) -> Option<&MobilityPolicy> {
        match self {
            MethodSpec::Epos { policy, .. } | MethodSpec::MinEnergy { policy, .. } => Some(policy),
            _ => None,
        }
    }

    pub fn epos(label: &str, policy: MobilityPolicy) -> Self {
        MethodSpec::Epos {
            label: label.into(),
            policy,
            beta: 0.0,
        }
    }
}

/// Parameters a sweep may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Dispatches,
    TotalTarget,
    Cells,
    Stations,
    Plans,
    Delta,
    Iterations,
    Repetitions,
    Maps,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 9] = [
        SweepParameter::Dispatches,
        SweepParameter::TotalTarget,
        SweepParameter::Cells,
        SweepParameter::Stations,
        SweepParameter::Plans,
        SweepParameter::Delta,
        SweepParameter::Iterations,
        SweepParameter::Repetitions,
        SweepParameter::Maps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Dispatches => "dispatches",
            SweepParameter::TotalTarget => "total_target",
            SweepParameter::Cells => "cells",
            SweepParameter::Stations => "stations",
            SweepParameter::Plans => "plans",
            SweepParameter::Delta => "delta",
            SweepParameter::Iterations => "iterations",
            SweepParameter::Repetitions => "repetitions",
            SweepParameter::Maps => "maps",
        }
    }

    pub fn parse(name: &str) -> Result<Self, HarnessError> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| HarnessError::config("sweep.parameter", format!("unknown parameter `{name}`")))
    }

    fn is_integer(self) -> bool {
        !matches!(self, SweepParameter::TotalTarget | SweepParameter::Delta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// Scenario instances.
    pub maps: usize,
    pub dispatches: usize,
    pub scenario: ScenarioConfig,
    pub drone: DroneSpec,
    pub environment: Environment,
    pub plans: PlanSettings,
    pub coordination: CoordinationSettings,
    pub methods: Vec<MethodSpec>,
    pub sweep: Vec<SweepAxis>,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    /// The basic synthetic scenario.
    fn default() -> Self {
        Self {
            name: "basic".into(),
            seed: 0,
            maps: 200,
            dispatches: 1000,
            scenario: ScenarioConfig::Synthetic(MapParams::default()),
            drone: DroneSpec::default(),
            environment: Environment::default(),
            plans: PlanSettings::default(),
            coordination: CoordinationSettings::default(),
            methods: default_methods(),
            sweep: Vec::new(),
            output: PathBuf::from("results"),
        }
    }
}

fn default_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::epos("EPOS-mismatch", MobilityPolicy::Mismatch),
        MethodSpec::epos("EPOS-inefficiency", MobilityPolicy::Inefficiency),
        MethodSpec::epos("EPOS-balance", MobilityPolicy::Balance),
        MethodSpec::Greedy {
            label: "Greedy-sensing".into(),
            view: GreedyView::Global,
        },
        MethodSpec::RoundRobin {
            label: "Round-robin".into(),
            cells_per_dispatch: 8,
        },
        MethodSpec::MinEnergy {
            label: "Min-energy".into(),
            policy: MobilityPolicy::Balance,
        },
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Basic,
    Desk,
    Traffic,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self, HarnessError> {
        match name {
            "basic" => Ok(Preset::Basic),
            "desk" => Ok(Preset::Desk),
            "traffic" => Ok(Preset::Traffic),
            other => Err(HarnessError::config("preset", format!("unknown preset `{other}`"))),
        }
    }

    pub fn config(self) -> ExperimentConfig {
        match self {
            Preset::Basic => ExperimentConfig::default(),
            Preset::Desk => desk(),
            Preset::Traffic => traffic(),
        }
    }
}

/// The basic map split into 16 cells with 2 stations; 200 dispatches, 20 maps.
fn desk() -> ExperimentConfig {
    let mut methods = default_methods();
    methods.push(MethodSpec::Greedy {
        label: "Greedy-local".into(),
        view: GreedyView::Local,
    });
    ExperimentConfig {
        name: "desk".into(),
        maps: 20,
        dispatches: 200,
        scenario: ScenarioConfig::Synthetic(MapParams {
            cells: 16,
            stations: 2,
            ..MapParams::default()
        }),
        plans: PlanSettings {
            plans: 32,
            ..PlanSettings::default()
        },
        coordination: CoordinationSettings {
            iterations: 20,
            repetitions: 10,
        },
        methods,
        ..ExperimentConfig::default()
    }
}

/// Ten corridor cells, 20 periods of 30 one-minute units, small batteries.
fn traffic() -> ExperimentConfig {
    ExperimentConfig {
        name: "traffic".into(),
        maps: 20,
        dispatches: 100,
        scenario: ScenarioConfig::Traffic(TrafficConfig::default()),
        drone: DroneSpec {
            battery_capacity: 100_000.0,
            ..DroneSpec::default()
        },
        plans: PlanSettings {
            plans: 32,
            ..PlanSettings::default()
        },
        coordination: CoordinationSettings {
            iterations: 20,
            repetitions: 10,
        },
        methods: vec![
            MethodSpec::epos("EPOS-balance", MobilityPolicy::Balance),
            MethodSpec::Greedy {
                label: "Greedy-sensing".into(),
                view: GreedyView::Global,
            },
        ],
        ..ExperimentConfig::default()
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |field: &str, msg: &str| Err(HarnessError::config(field, msg));
        if self.maps == 0 {
            return fail("maps", "must be at least 1");
        }
        if self.dispatches == 0 {
            return fail("dispatches", "must be at least 1");
        }
        if let Err(e) = self.drone.validate() {
            return Err(HarnessError::config("drone", e.to_string()));
        }
        if let Err(e) = self.environment.validate() {
            return Err(HarnessError::config("environment", e.to_string()));
        }
        if self.plans.plans == 0 {
            return fail("plans.plans", "must be at least 1");
        }
        if !(self.plans.delta > 0.0) {
            return fail("plans.delta", "must be positive");
        }
        if self.coordination.iterations == 0 {
            return fail("coordination.iterations", "must be at least 1");
        }
        if self.coordination.repetitions == 0 {
            return fail("coordination.repetitions", "must be at least 1");
        }
        if self.methods.is_empty() {
            return fail("methods", "list at least one method");
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].iter().any(|o| o.label() == m.label()) {
                return Err(HarnessError::config(
                    &format!("methods[{i}].label"),
                    format!("duplicate label `{}`", m.label()),
                ));
            }
            match m {
                MethodSpec::Epos { beta, .. } if !(0.0..=1.0).contains(beta) => {
                    return Err(HarnessError::config(
                        &format!("methods[{i}].beta"),
                        format!("{beta} is outside [0, 1]"),
                    ));
                }
                MethodSpec::RoundRobin { cells_per_dispatch: 0, .. } => {
                    return fail(&format!("methods[{i}].cells_per_dispatch"), "must be at least 1");
                }
                _ => {}
            }
        }
        match &self.scenario {
            ScenarioConfig::Synthetic(p) => {
                if p.cells == 0 || p.stations == 0 || p.stations > p.cells {
                    return fail("scenario.cells", "need at least one cell and 1..=cells stations");
                }
                if !(p.total_target > 0.0) {
                    return fail("scenario.total_target", "must be positive");
                }
            }
            ScenarioConfig::MapFile { .. } => {}
            ScenarioConfig::Traffic(t) => {
                if t.cells == 0 || t.columns == 0 || t.stations == 0 || t.stations > t.cells {
                    return fail("scenario.cells", "need cells, columns and 1..=cells stations");
                }
                if !(t.pitch > 0.0) || !(t.target_cap > 0.0) {
                    return fail("scenario.pitch", "pitch and target_cap must be positive");
                }
                if let TrafficSource::Synthetic(s) = &t.source {
                    if s.cells != t.cells {
                        return fail("scenario.source.cells", "must equal scenario.cells");
                    }
                    if s.time_units != t.time.total_units() {
                        return fail("scenario.source.time_units", "must equal periods * units_per_period");
                    }
                }
            }
        }
        for (i, axis) in self.sweep.iter().enumerate() {
            if axis.values.is_empty() {
                return fail(&format!("sweep[{i}].values"), "list at least one value");
            }
            for v in &axis.values {
                if !(v.is_finite() && *v > 0.0) || (axis.parameter.is_integer() && v.fract() != 0.0) {
                    return Err(HarnessError::config(
                        &format!("sweep[{i}].values"),
                        format!("{v} is not a valid {}", axis.parameter.name()),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Copy with one parameter replaced.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<Self, HarnessError> {
        let mut cfg = self.clone();
        let n = value as usize;
        let map_only = |field: &str| {
            HarnessError::config(
                &format!("sweep.{field}"),
                "only applies to synthetic scenarios",
            )
        };
        match parameter {
            SweepParameter::Dispatches => cfg.dispatches = n,
            SweepParameter::Maps => cfg.maps = n,
            SweepParameter::Plans => cfg.plans.plans = n,
            SweepParameter::Delta => cfg.plans.delta = value,
            SweepParameter::Iterations => cfg.coordination.iterations = n,
            SweepParameter::Repetitions => cfg.coordination.repetitions = n,
            SweepParameter::TotalTarget => match &mut cfg.scenario {
                ScenarioConfig::Synthetic(p) => p.total_target = value,
                ScenarioConfig::Traffic(t) => t.target_cap = value,
                ScenarioConfig::MapFile { .. } => return Err(map_only("total_target")),
            },
            SweepParameter::Cells => match &mut cfg.scenario {
                ScenarioConfig::Synthetic(p) => p.cells = n,
                _ => return Err(map_only("cells")),
            },
            SweepParameter::Stations => match &mut cfg.scenario {
                ScenarioConfig::Synthetic(p) => p.stations = n,
                ScenarioConfig::Traffic(t) => t.stations = n,
                ScenarioConfig::MapFile { .. } => return Err(map_only("stations")),
            },
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

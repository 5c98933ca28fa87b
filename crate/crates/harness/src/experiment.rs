//! Scenario instances, method runs and result records.

use std::fs;

use dronesense::baselines::{
    dispatch_period, dispatch_station, greedy_sensing, min_energy, round_robin, BaselineContext, Dispatch,
    LedgerScope,
};
use dronesense::coordination::{occupancy_conflicts, run_coordination, AgentState, CoordinationConfig};
use dronesense::metrics::{
    assign_combined_cost, observed_traffic, traffic_accuracy, traffic_efficiency, MetricRecord,
};
use dronesense::plangen::{generate_plans, DispatchContext, MobilityPolicy, Occupancy, PlanGenConfig};
use dronesense::rng::{child_rng, derive_seed, Stream};
use dronesense::scenario::{
    generate_synthetic_map, generate_synthetic_traffic, load_traffic_scenario, traffic_targets, Cell,
    TrafficDims, TrafficScenario,
};
use dronesense::{DispatchSchedule, Point, PowerProfile, SensingMap};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MethodSpec, ScenarioConfig, SweepParameter, TrafficConfig, TrafficSource};
use crate::HarnessError;

/// Relative tolerance of the energy audit.
pub const ENERGY_AUDIT_TOLERANCE: f64 = 1e-6;

/// One scenario instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub index: usize,
    pub seed: u64,
    pub map: SensingMap,
    pub traffic: Option<TrafficScenario>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub map: usize,
    pub method: String,
    pub iteration: usize,
    pub rss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficRecord {
    pub map: usize,
    pub seed: u64,
    pub method: String,
    /// A vehicle type label, or `all`.
    pub vehicle_type: String,
    pub accuracy: f64,
    pub efficiency: f64,
}

/// Everything one configuration produces.
#[derive(Clone, Debug, Default)]
pub struct ExperimentResult {
    pub records: Vec<MetricRecord<f64>>,
    pub traces: Vec<TraceRow>,
    pub traffic: Vec<TrafficRecord>,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub maps: usize,
    pub final_rss: f64,
    pub running_mean: f64,
    /// Change of the running mean from the previous row.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub scenario: String,
    pub map: usize,
    pub seed: u64,
    pub method: String,
    pub total_energy: f64,
    pub sensing_mismatch: f64,
    pub unit_rss: f64,
    pub mission_inefficiency: f64,
    pub combined_cost: f64,
    pub conflicts: usize,
}

pub fn instance_seed(cfg: &ExperimentConfig, index: usize) -> u64 {
    derive_seed(cfg.seed, Stream::Map, index as u64)
}

pub fn power_profile(cfg: &ExperimentConfig) -> Result<PowerProfile, HarnessError> {
    Ok(PowerProfile::new(&cfg.drone, &cfg.environment)?)
}

pub fn build_instance(cfg: &ExperimentConfig, index: usize) -> Result<Instance, HarnessError> {
    let seed = instance_seed(cfg, index);
    match &cfg.scenario {
        ScenarioConfig::Synthetic(params) => Ok(Instance {
            index,
            seed,
            map: generate_synthetic_map(params, seed)?,
            traffic: None,
        }),
        ScenarioConfig::MapFile { path } => {
            let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            Ok(Instance {
                index,
                seed,
                map: SensingMap::from_json(&text)?,
                traffic: None,
            })
        }
        ScenarioConfig::Traffic(t) => {
            let traffic = match &t.source {
                TrafficSource::Synthetic(p) => generate_synthetic_traffic(p, derive_seed(seed, Stream::Traffic, 0))?,
                TrafficSource::File { path, vehicle_types } => {
                    let file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
                    let dims = TrafficDims {
                        cells: t.cells,
                        time_units: t.time.total_units(),
                        vehicle_types: vehicle_types.clone(),
                    };
                    load_traffic_scenario(file, &dims)?
                }
            };
            let targets = traffic_targets(&traffic, t.target_cap)?;
            Ok(Instance {
                index,
                seed,
                map: corridor_map(t, &targets)?,
                traffic: Some(traffic),
            })
        }
    }
}

/// Cells on a `columns`-wide lattice, stations evenly spaced along the
/// middle row.
pub fn corridor_map(t: &TrafficConfig, targets: &[f64]) -> Result<SensingMap, HarnessError> {
    let rows = t.cells.div_ceil(t.columns);
    let width = t.columns as f64 * t.pitch;
    let height = rows as f64 * t.pitch;
    let cells = (0..t.cells)
        .map(|n| Cell {
            index: n,
            center: Point::new(
                ((n % t.columns) as f64 + 0.5) * t.pitch,
                ((n / t.columns) as f64 + 0.5) * t.pitch,
            ),
            target: targets[n],
        })
        .collect();
    let stations = (0..t.stations)
        .map(|s| Point::new((s as f64 + 0.5) * width / t.stations as f64, height / 2.0))
        .collect();
    Ok(SensingMap::new(width.max(height), cells, stations, t.time)?)
}

/// Plan sets of every dispatch under `policy`.
pub fn generate_agents(
    cfg: &ExperimentConfig,
    inst: &Instance,
    power: &PowerProfile,
    policy: &MobilityPolicy,
) -> Result<Vec<AgentState<f64>>, HarnessError> {
    let plan_cfg = PlanGenConfig {
        plans: cfg.plans.plans,
        delta: cfg.plans.delta,
        policy: policy.clone(),
        allocation: cfg.plans.allocation,
        max_redraws: cfg.plans.max_redraws,
    };
    (0..cfg.dispatches)
        .into_par_iter()
        .map(|u| {
            let mut rng = child_rng(inst.seed, Stream::Agent, u as u64);
            let station = &inst.map.stations[dispatch_station(u, inst.map.stations.len())];
            let ctx = DispatchContext {
                spec: &cfg.drone,
                power,
                map: &inst.map,
                station,
            };
            let plans = generate_plans(ctx, &plan_cfg, &mut rng)?;
            Ok(AgentState::new(u, plans)?)
        })
        .collect()
}

fn schedule_of(agents: &[AgentState<f64>], selections: &[usize], periods: usize) -> DispatchSchedule {
    let dispatches = agents
        .iter()
        .zip(selections)
        .map(|(a, &s)| {
            let plan = a.plans[s].clone();
            Dispatch {
                drone: a.id,
                station: plan.station,
                period: dispatch_period(a.id, agents.len(), periods),
                plan,
            }
        })
        .collect();
    DispatchSchedule { dispatches }
}

/// Outcome of one method on one instance.
#[derive(Clone, Debug)]
pub struct MethodRun {
    pub label: String,
    pub schedule: DispatchSchedule,
    pub trace: Vec<f64>,
}

/// Plans shared by the methods of one instance, generated once per policy.
struct PlanCache<'a> {
    cfg: &'a ExperimentConfig,
    inst: &'a Instance,
    power: &'a PowerProfile,
    sets: Vec<(MobilityPolicy, Vec<AgentState<f64>>)>,
}

impl PlanCache<'_> {
    fn agents(&mut self, policy: &MobilityPolicy) -> Result<&mut Vec<AgentState<f64>>, HarnessError> {
        if let Some(i) = self.sets.iter().position(|(p, _)| p == policy) {
            return Ok(&mut self.sets[i].1);
        }
        let agents = generate_agents(self.cfg, self.inst, self.power, policy)?;
        self.sets.push((policy.clone(), agents));
        Ok(&mut self.sets.last_mut().expect("just pushed").1)
    }
}

pub fn run_method(
    cfg: &ExperimentConfig,
    inst: &Instance,
    power: &PowerProfile,
    method: &MethodSpec,
) -> Result<MethodRun, HarnessError> {
    let mut cache = PlanCache {
        cfg,
        inst,
        power,
        sets: Vec::new(),
    };
    run_cached(&mut cache, method)
}

fn run_cached(cache: &mut PlanCache<'_>, method: &MethodSpec) -> Result<MethodRun, HarnessError> {
    let (cfg, inst, power) = (cache.cfg, cache.inst, cache.power);
    let ctx = BaselineContext {
        spec: &cfg.drone,
        power,
        map: &inst.map,
    };
    let periods = inst.map.time.periods;
    let scope = if inst.traffic.is_some() {
        LedgerScope::PerPeriod
    } else {
        LedgerScope::Horizon
    };
    let label = method.label().to_string();
    let run = match method {
        MethodSpec::Epos { policy, beta, .. } => {
            let target = inst.map.targets();
            let coord = CoordinationConfig {
                beta: *beta,
                iterations: cfg.coordination.iterations,
                repetitions: cfg.coordination.repetitions,
            };
            let seed = derive_seed(inst.seed, Stream::Repetition, 0);
            let agents = cache.agents(policy)?;
            let out = run_coordination(agents, &target, &coord, seed)?;
            MethodRun {
                label,
                schedule: schedule_of(agents, &out.selections, periods),
                trace: out.rss_trace,
            }
        }
        MethodSpec::MinEnergy { policy, .. } => {
            let agents = cache.agents(policy)?;
            let selections = min_energy(agents);
            MethodRun {
                label,
                schedule: schedule_of(agents, &selections, periods),
                trace: Vec::new(),
            }
        }
        MethodSpec::Greedy { view, .. } => MethodRun {
            label,
            schedule: greedy_sensing(ctx, cfg.dispatches, *view, scope)?.0,
            trace: Vec::new(),
        },
        MethodSpec::RoundRobin { cells_per_dispatch, .. } => MethodRun {
            label,
            schedule: round_robin(ctx, cfg.dispatches, *cells_per_dispatch)?.0,
            trace: Vec::new(),
        },
    };
    Ok(run)
}

/// Re-derives the total energy from per-dispatch flight and hover energy and
/// checks it against the summed plan costs.
pub fn audit_energy(run: &MethodRun, map: usize) -> Result<f64, HarnessError> {
    let total = run.schedule.total_energy();
    let parts: f64 = run
        .schedule
        .dispatches
        .iter()
        .map(|d| d.plan.flight_energy + d.plan.hover_energy)
        .sum();
    if (total - parts).abs() > ENERGY_AUDIT_TOLERANCE * total.abs().max(1.0) {
        return Err(HarnessError::EnergyAudit {
            method: run.label.clone(),
            map,
            reported: total,
            audited: parts,
        });
    }
    Ok(total)
}

/// Occupancies placed on the mission timeline, cut at its end.
fn clipped_occupancy(schedule: &DispatchSchedule, inst: &Instance, units: usize) -> Vec<(usize, Occupancy)> {
    schedule
        .placed_occupancy(&inst.map.time)
        .into_iter()
        .map(|(start, occ)| {
            let kept = (0..occ.horizon())
                .map(|m| if start + m < units { occ.cell_at(m) } else { None })
                .collect();
            (start, Occupancy::from_units(kept))
        })
        .collect()
}

fn traffic_records(
    inst: &Instance,
    traffic: &TrafficScenario,
    run: &MethodRun,
) -> Result<Vec<TrafficRecord>, HarnessError> {
    let placed = clipped_occupancy(&run.schedule, inst, traffic.time_units());
    let types = traffic.vehicle_types();
    let mut out = Vec::with_capacity(types.len() + 1);
    let choices = std::iter::once(None).chain((0..types.len()).map(Some));
    for vtype in choices {
        let (obs, act) = observed_traffic(placed.iter().map(|(s, o)| (*s, o)), traffic, vtype)?;
        // A vehicle type may be absent from a small scenario.
        if act.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        out.push(TrafficRecord {
            map: inst.index,
            seed: inst.seed,
            method: run.label.clone(),
            vehicle_type: vtype.map_or_else(|| "all".to_string(), |t| types[t].clone()),
            accuracy: traffic_accuracy(&obs, &act)?,
            efficiency: traffic_efficiency(&obs, &act)?,
        });
    }
    Ok(out)
}

/// All methods on one instance.
pub fn run_instance(cfg: &ExperimentConfig, index: usize) -> Result<ExperimentResult, HarnessError> {
    let inst = build_instance(cfg, index)?;
    let power = power_profile(cfg)?;
    let mut cache = PlanCache {
        cfg,
        inst: &inst,
        power: &power,
        sets: Vec::new(),
    };
    let target = inst.map.targets();
    let cells = inst.map.num_cells();
    let mut result = ExperimentResult {
        seeds: vec![inst.seed],
        ..ExperimentResult::default()
    };
    for method in &cfg.methods {
        let run = run_cached(&mut cache, method)?;
        let energy = audit_energy(&run, index)?;
        let conflicts = occupancy_conflicts(run.schedule.placed_occupancy(&inst.map.time)).count;
        let collected = run.schedule.collected(cells);
        result.records.push(MetricRecord::evaluate(
            &cfg.name, index, inst.seed, &run.label, energy, &collected, &target, conflicts,
        )?);
        result.traces.extend(run.trace.iter().enumerate().map(|(i, &rss)| TraceRow {
            map: index,
            method: run.label.clone(),
            iteration: i + 1,
            rss,
        }));
        if let Some(traffic) = &inst.traffic {
            result.traffic.extend(traffic_records(&inst, traffic, &run)?);
        }
    }
    assign_combined_cost(&mut result.records);
    Ok(result)
}

/// Every instance of the configuration, in instance order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let parts: Vec<ExperimentResult> = (0..cfg.maps)
        .into_par_iter()
        .map(|i| run_instance(cfg, i))
        .collect::<Result<_, _>>()?;
    let mut all = ExperimentResult::default();
    for p in parts {
        all.records.extend(p.records);
        all.traces.extend(p.traces);
        all.traffic.extend(p.traffic);
        all.seeds.extend(p.seeds);
    }
    Ok(all)
}

/// A file stem and the agents whose plans go in it.
pub type PlanSet = (String, Vec<AgentState<f64>>);

/// Plan sets per instance and policy.
pub fn export_plan_sets(cfg: &ExperimentConfig) -> Result<Vec<PlanSet>, HarnessError> {
    cfg.validate()?;
    let power = power_profile(cfg)?;
    let mut policies: Vec<&MobilityPolicy> = Vec::new();
    for p in cfg.methods.iter().filter_map(MethodSpec::policy) {
        if !policies.contains(&p) {
            policies.push(p);
        }
    }
    let per_map: Vec<Vec<PlanSet>> = (0..cfg.maps)
        .into_par_iter()
        .map(|i| {
            let inst = build_instance(cfg, i)?;
            policies
                .iter()
                .map(|p| Ok((format!("map{i:04}_{}", p.name()), generate_agents(cfg, &inst, &power, p)?)))
                .collect::<Result<Vec<_>, HarnessError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(per_map.into_iter().flatten().collect())
}

/// Running mean of the final global cost of the first coordinated method as
/// instances accumulate.
pub fn stability_curve(cfg: &ExperimentConfig, max_maps: usize) -> Result<Vec<StabilityRow>, HarnessError> {
    cfg.validate()?;
    if max_maps == 0 {
        return Err(HarnessError::config("max_maps", "must be at least 1"));
    }
    let method = cfg
        .methods
        .iter()
        .find(|m| matches!(m, MethodSpec::Epos { .. }))
        .ok_or_else(|| HarnessError::config("methods", "stability needs a coordinated method"))?;
    let power = power_profile(cfg)?;
    let finals: Vec<f64> = (0..max_maps)
        .into_par_iter()
        .map(|i| {
            let inst = build_instance(cfg, i)?;
            let run = run_method(cfg, &inst, &power, method)?;
            Ok(run.trace.last().copied().unwrap_or(f64::NAN))
        })
        .collect::<Result<_, HarnessError>>()?;
    let mut rows = Vec::with_capacity(finals.len());
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    for (i, &f) in finals.iter().enumerate() {
        sum += f;
        let mean = sum / (i + 1) as f64;
        rows.push(StabilityRow {
            maps: i + 1,
            final_rss: f,
            running_mean: mean,
            delta: if i == 0 { 0.0 } else { (mean - prev).abs() },
        });
        prev = mean;
    }
    Ok(rows)
}

/// One full experiment per value of each axis.
pub fn run_sweep(cfg: &ExperimentConfig, axes: &[(SweepParameter, Vec<f64>)]) -> Result<Vec<SweepRow>, HarnessError> {
    if axes.is_empty() {
        return Err(HarnessError::config("sweep", "no sweep axes given"));
    }
    let mut rows = Vec::new();
    for (parameter, values) in axes {
        for &value in values {
            let varied = cfg.with_parameter(*parameter, value)?;
            for r in run_experiment(&varied)?.records {
                rows.push(SweepRow {
                    parameter: parameter.name().to_string(),
                    value,
                    scenario: r.scenario,
                    map: r.map,
                    seed: r.seed,
                    method: r.method,
                    total_energy: r.total_energy,
                    sensing_mismatch: r.sensing_mismatch,
                    unit_rss: r.unit_rss,
                    mission_inefficiency: r.mission_inefficiency,
                    combined_cost: r.combined_cost,
                    conflicts: r.conflicts,
                });
            }
        }
    }
    Ok(rows)
}

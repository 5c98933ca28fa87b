//! Local plan generation: for one drone dispatch, `P` alternative plans each
//! made of a visited-cell tour, an energy budget, a per-cell sensing
//! allocation, an occupancy schedule and a cost.
//!
//! Plan `p` may spend at most `C * e(p)` joules, with
//! `e(p) = 1 - p / (delta * P)`. The tour's flight energy is paid first; the
//! remainder is spent hovering, and every `1 / f` seconds of hovering yields
//! one sensing value.

mod export;
mod occupancy;
mod path;

pub use export::{read_plans_csv, write_plans_csv, PlanRecord};
pub use occupancy::{build_occupancy, MissionSchedule, Occupancy, Segment};
pub use path::{select_visited_cells, shortest_tour, Tour};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::power::{DroneSpec, PowerError, PowerProfile};
use crate::scalar::{from_usize, lit, to_f64, Scalar};
use crate::scenario::{BaseStation, SensingMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("plan index {index} outside 1..={plans}")]
    PlanIndex { index: usize, plans: usize },
    #[error("energy utilization parameter must be at least 1, got {0}")]
    InvalidDelta(f64),
    #[error("energy utilization denominator is zero")]
    ZeroDenominator,
    #[error("station {station} has {available} cells in range, {requested} requested")]
    TooManyCells {
        requested: usize,
        available: usize,
        station: usize,
    },
    #[error("flight energy {flight:.1} J exceeds the budget {budget:.1} J")]
    InsufficientBudget { budget: f64, flight: f64 },
    #[error("mission of {duration:.1} s overruns the {horizon:.1} s schedule")]
    ScheduleOverrun { duration: f64, horizon: f64 },
    #[error("no feasible plan for station {station} after {attempts} draws")]
    NoFeasiblePlan { station: usize, attempts: usize },
    #[error("invalid plan generation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error("plan export: {0}")]
    Export(String),
}

/// Which numbers of visited cells a plan may use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityPolicy {
    /// One or two cells per plan.
    Mismatch,
    /// Three or four cells per plan.
    Inefficiency,
    /// One to four cells per plan.
    Balance,
    /// Exactly this many cells.
    Fixed(usize),
}

impl MobilityPolicy {
    pub fn visited_cell_choices(&self) -> Vec<usize> {
        match self {
            MobilityPolicy::Mismatch => vec![1, 2],
            MobilityPolicy::Inefficiency => vec![3, 4],
            MobilityPolicy::Balance => vec![1, 2, 3, 4],
            MobilityPolicy::Fixed(k) => vec![*k],
        }
    }

    pub fn name(&self) -> String {
        match self {
            MobilityPolicy::Mismatch => "mismatch".into(),
            MobilityPolicy::Inefficiency => "inefficiency".into(),
            MobilityPolicy::Balance => "balance".into(),
            MobilityPolicy::Fixed(k) => format!("fixed{k}"),
        }
    }
}

/// How a plan's sensing total is split over its visited cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Allocation {
    #[default]
    Proportional,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanGenConfig<S> {
    /// Plans per agent.
    pub plans: usize,
    /// Energy utilization parameter; larger keeps every plan closer to a
    /// full battery.
    pub delta: S,
    pub policy: MobilityPolicy,
    pub allocation: Allocation,
    /// Redraws of an infeasible cell selection before giving up.
    pub max_redraws: usize,
}

impl<S: Scalar> Default for PlanGenConfig<S> {
    fn default() -> Self {
        Self {
            plans: 64,
            delta: lit(8.0),
            policy: MobilityPolicy::Balance,
            allocation: Allocation::Proportional,
            max_redraws: 100,
        }
    }
}

/// One navigation and sensing alternative of a dispatch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan<S> {
    /// 1-based plan index `p`.
    pub index: usize,
    pub station: usize,
    /// Visited cells in selection order.
    pub visited: Vec<usize>,
    /// Visited cells in tour order.
    pub path: Vec<usize>,
    /// Flight time in seconds, hovering excluded.
    pub flight_time: S,
    /// Energy utilization ratio `e`.
    pub utilization: S,
    pub flight_energy: S,
    pub hover_energy: S,
    /// Sparse `(cell, values)` sorted by cell.
    pub sensing: Vec<(usize, S)>,
    pub occupancy: Occupancy,
    /// Energy cost `C * e` in joules.
    pub cost: S,
}

impl<S: Scalar> Plan<S> {
    pub fn total_sensing(&self) -> S {
        self.sensing.iter().map(|&(_, v)| v).sum()
    }

    pub fn sensing_at(&self, cell: usize) -> S {
        self.sensing
            .iter()
            .find(|&&(n, _)| n == cell)
            .map_or(S::zero(), |&(_, v)| v)
    }

    pub fn dense_sensing(&self, cells: usize) -> Vec<S> {
        let mut out = vec![S::zero(); cells];
        for &(n, v) in &self.sensing {
            out[n] += v;
        }
        out
    }

    /// Adds this plan's sensing values into `acc`, scaled by `sign`.
    pub fn accumulate_into(&self, acc: &mut [S], sign: S) {
        for &(n, v) in &self.sensing {
            acc[n] += sign * v;
        }
    }
}

/// `e = 1 - p / (delta * P)`.
pub fn energy_utilization_ratio<S: Scalar>(p: usize, plans: usize, delta: S) -> Result<S, PlanError> {
    let denom = delta * from_usize::<S>(plans);
    if denom == S::zero() {
        return Err(PlanError::ZeroDenominator);
    }
    if delta < S::one() {
        return Err(PlanError::InvalidDelta(to_f64(delta)));
    }
    if p == 0 || p > plans {
        return Err(PlanError::PlanIndex { index: p, plans });
    }
    Ok(S::one() - from_usize::<S>(p) / denom)
}

/// Hover budget `C * e - E_f`; negative budgets mean the tour alone does not
/// fit in the allowed energy.
pub fn hover_energy<S: Scalar>(capacity: S, utilization: S, flight_energy: S) -> Result<S, PlanError> {
    let budget = capacity * utilization;
    let hover = budget - flight_energy;
    if hover < S::zero() {
        return Err(PlanError::InsufficientBudget {
            budget: to_f64(budget),
            flight: to_f64(flight_energy),
        });
    }
    Ok(hover)
}

/// Sensing values `E_h / P_h * f` a hover budget buys.
pub fn total_sensing<S: Scalar>(hover_energy: S, hover_power: S, frequency: S) -> S {
    hover_energy / hover_power * frequency
}

/// Splits `total` over cells in proportion to their targets. Falls back to
/// an equal split when all targets are zero. The last share absorbs rounding
/// so the shares sum to `total`.
pub fn allocate_sensing<S: Scalar>(total: S, targets: &[S]) -> Vec<S> {
    let target_sum: S = targets.iter().copied().sum();
    if targets.is_empty() {
        return Vec::new();
    }
    if !(target_sum > S::zero()) {
        return mean_allocate(total, targets.len());
    }
    let mut shares: Vec<S> = targets.iter().map(|&t| total * (t / target_sum)).collect();
    conserve(&mut shares, total);
    shares
}

/// Equal split of `total` over `cells` cells.
pub fn mean_allocate<S: Scalar>(total: S, cells: usize) -> Vec<S> {
    if cells == 0 {
        return Vec::new();
    }
    let mut shares = vec![total / from_usize::<S>(cells); cells];
    conserve(&mut shares, total);
    shares
}

fn conserve<S: Scalar>(shares: &mut [S], total: S) {
    let (last, head) = shares.split_last_mut().expect("non-empty");
    let head_sum: S = head.iter().copied().sum();
    *last = (total - head_sum).max(S::zero());
}

/// Number of time units covering the longest mission the battery allows.
pub fn schedule_horizon<S: Scalar>(spec: &DroneSpec<S>, power: &PowerProfile<S>, unit_length: S) -> usize {
    let slowest_drain = power.flying_power.min(power.hover_power);
    let seconds = spec.battery_capacity / slowest_drain;
    (seconds / unit_length).ceil().to_usize().unwrap_or(0) + 1
}

/// Everything a single dispatch needs to generate its plans.
#[derive(Clone, Copy, Debug)]
pub struct DispatchContext<'a, S> {
    pub spec: &'a DroneSpec<S>,
    pub power: &'a PowerProfile<S>,
    pub map: &'a SensingMap<S>,
    pub station: &'a BaseStation<S>,
}

/// Generates `config.plans` plans for one dispatch.
pub fn generate_plans<S: Scalar, R: Rng + ?Sized>(
    ctx: DispatchContext<'_, S>,
    config: &PlanGenConfig<S>,
    rng: &mut R,
) -> Result<Vec<Plan<S>>, PlanError> {
    let DispatchContext {
        spec,
        power,
        map,
        station,
    } = ctx;
    if config.plans == 0 {
        return Err(PlanError::InvalidConfig("at least one plan is required".into()));
    }
    if !(spec.ground_speed > S::zero()) {
        return Err(PlanError::InvalidConfig("ground speed must be positive".into()));
    }
    let choices: Vec<usize> = config
        .policy
        .visited_cell_choices()
        .into_iter()
        .filter(|&k| k >= 1 && k <= station.range.len())
        .collect();
    if choices.is_empty() {
        return Err(PlanError::TooManyCells {
            requested: config.policy.visited_cell_choices().into_iter().min().unwrap_or(0),
            available: station.range.len(),
            station: station.index,
        });
    }
    let horizon = schedule_horizon(spec, power, map.time.unit_length);
    let targets = map.targets();

    let mut plans = Vec::with_capacity(config.plans);
    for p in 1..=config.plans {
        let utilization = energy_utilization_ratio(p, config.plans, config.delta)?;
        let mut drawn = None;
        for _ in 0..=config.max_redraws {
            let k = *choices.choose(rng).expect("non-empty choices");
            let visited = select_visited_cells(map, station, k, rng)?;
            let tour = shortest_tour(map, station.position, &visited, spec.ground_speed);
            let flight_energy = power.flying_power * tour.flight_time;
            if let Ok(hover) = hover_energy(spec.battery_capacity, utilization, flight_energy) {
                drawn = Some((visited, tour, flight_energy, hover));
                break;
            }
        }
        let (visited, tour, flight_energy, hover) = drawn.ok_or(PlanError::NoFeasiblePlan {
            station: station.index,
            attempts: config.max_redraws + 1,
        })?;

        let sensing_total = total_sensing(hover, power.hover_power, spec.sensing_frequency);
        let shares = match config.allocation {
            Allocation::Proportional => {
                let path_targets: Vec<S> = tour.order.iter().map(|&n| targets[n]).collect();
                allocate_sensing(sensing_total, &path_targets)
            }
            Allocation::Mean => mean_allocate(sensing_total, tour.order.len()),
        };
        let hover_secs: Vec<S> = shares.iter().map(|&s| s / spec.sensing_frequency).collect();
        let schedule = MissionSchedule::from_tour(
            map,
            station.position,
            &tour.order,
            &hover_secs,
            spec.ground_speed,
        );
        let occupancy = build_occupancy(&schedule, map.time.unit_length, horizon)?;
        let mut sensing: Vec<(usize, S)> = tour.order.iter().copied().zip(shares).collect();
        sensing.sort_by_key(|&(n, _)| n);

        plans.push(Plan {
            index: p,
            station: station.index,
            visited,
            path: tour.order,
            flight_time: tour.flight_time,
            utilization,
            flight_energy,
            hover_energy: hover,
            sensing,
            occupancy,
            cost: spec.battery_capacity * utilization,
        });
    }
    Ok(plans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::Environment;
    use crate::rng::rng_from_seed;
    use crate::scenario::{generate_synthetic_map, MapParams};
    use approx::assert_relative_eq;

    #[test]
    fn utilization_examples() {
        assert_eq!(energy_utilization_ratio(64, 64, 8.0).unwrap(), 0.875);
        assert_eq!(energy_utilization_ratio(64, 64, 1.0).unwrap(), 0.0);
        assert_eq!(energy_utilization_ratio(8, 64, 8.0).unwrap(), 0.984375);
    }

    #[test]
    fn utilization_errors() {
        assert_eq!(
            energy_utilization_ratio(1, 0, 8.0),
            Err(PlanError::ZeroDenominator)
        );
        assert_eq!(
            energy_utilization_ratio(1, 4, 0.0),
            Err(PlanError::ZeroDenominator)
        );
        assert_eq!(
            energy_utilization_ratio(5, 4, 8.0),
            Err(PlanError::PlanIndex { index: 5, plans: 4 })
        );
        assert!(matches!(
            energy_utilization_ratio(1, 4, 0.5),
            Err(PlanError::InvalidDelta(_))
        ));
    }

    #[test]
    fn utilization_strictly_decreasing() {
        let es: Vec<f64> = (1..=64)
            .map(|p| energy_utilization_ratio(p, 64, 8.0).unwrap())
            .collect();
        assert!(es.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn hover_energy_examples() {
        assert_eq!(hover_energy(275_000.0, 0.875, 57_840.0).unwrap(), 182_785.0);
        assert_eq!(hover_energy(1000.0, 0.5, 500.0).unwrap(), 0.0);
        assert!(matches!(
            hover_energy(1000.0, 0.5, 500.5),
            Err(PlanError::InsufficientBudget { .. })
        ));
    }

    #[test]
    fn total_sensing_examples() {
        assert_relative_eq!(
            total_sensing(182_785.0, 64.1, 1.0 / 60.0),
            47.526001040041606,
            max_relative = 1e-12
        );
        assert_eq!(total_sensing(0.0, 64.1, 1.0 / 60.0), 0.0);
        assert_relative_eq!(
            total_sensing(100.0, 64.1, 2.0 / 60.0),
            2.0 * total_sensing(100.0, 64.1, 1.0 / 60.0),
            max_relative = 1e-15
        );
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(allocate_sensing(30.0, &[100.0, 200.0]), vec![10.0, 20.0]);
        assert_eq!(allocate_sensing(30.0, &[7.0]), vec![30.0]);
        assert_eq!(allocate_sensing(30.0, &[0.0, 0.0]), vec![15.0, 15.0]);
        assert_eq!(mean_allocate(30.0, 3), vec![10.0, 10.0, 10.0]);
        assert_eq!(mean_allocate(30.0, 1), vec![30.0]);
        let shares = mean_allocate(1.0, 7);
        assert_eq!(shares.iter().sum::<f64>(), 1.0);
    }

    fn basic_plans(policy: MobilityPolicy, seed: u64) -> (SensingMap<f64>, Vec<Plan<f64>>) {
        let map = generate_synthetic_map(&MapParams::default(), 3).unwrap();
        let spec = DroneSpec::default();
        let power = PowerProfile::new(&spec, &Environment::default()).unwrap();
        let config = PlanGenConfig {
            policy,
            ..PlanGenConfig::default()
        };
        let ctx = DispatchContext {
            spec: &spec,
            power: &power,
            map: &map,
            station: &map.stations[1],
        };
        let plans = generate_plans(ctx, &config, &mut rng_from_seed(seed)).unwrap();
        (map, plans)
    }

    #[test]
    fn costs_follow_utilization_schedule() {
        let (_, plans) = basic_plans(MobilityPolicy::Balance, 1);
        assert_eq!(plans.len(), 64);
        for (i, plan) in plans.iter().enumerate() {
            let p = (i + 1) as f64;
            assert_relative_eq!(plan.cost, 275_000.0 * (1.0 - p / 512.0), max_relative = 1e-12);
        }
        assert!(plans.windows(2).all(|w| w[1].cost < w[0].cost));
    }

    #[test]
    fn mismatch_policy_uses_one_or_two_cells() {
        let (_, plans) = basic_plans(MobilityPolicy::Mismatch, 2);
        assert!(plans.iter().all(|p| matches!(p.path.len(), 1 | 2)));
        let (_, plans) = basic_plans(MobilityPolicy::Inefficiency, 2);
        assert!(plans.iter().all(|p| matches!(p.path.len(), 3 | 4)));
    }

    #[test]
    fn plan_sets_are_seeded() {
        assert_eq!(
            basic_plans(MobilityPolicy::Balance, 9).1,
            basic_plans(MobilityPolicy::Balance, 9).1
        );
    }

    #[test]
    fn plans_stay_in_station_range() {
        let (map, plans) = basic_plans(MobilityPolicy::Balance, 4);
        for plan in &plans {
            assert!(plan.path.iter().all(|n| map.stations[1].range.contains(n)));
            assert_eq!(plan.occupancy.horizon(), plans[0].occupancy.horizon());
            for (_, n) in plan.occupancy.occupied() {
                assert!(plan.path.contains(&n));
            }
        }
    }

    #[test]
    fn generation_reports_unreachable_station() {
        let map = generate_synthetic_map(&MapParams::default(), 3).unwrap();
        let spec = DroneSpec {
            battery_capacity: 1_000.0,
            ..DroneSpec::default()
        };
        let power = PowerProfile::new(&spec, &Environment::default()).unwrap();
        let ctx = DispatchContext {
            spec: &spec,
            power: &power,
            map: &map,
            station: &map.stations[2],
        };
        let err = generate_plans(ctx, &PlanGenConfig::default(), &mut rng_from_seed(1));
        assert_eq!(
            err,
            Err(PlanError::NoFeasiblePlan {
                station: 2,
                attempts: 101
            })
        );
    }
}

//! Comparison methods: centralized greedy sensing, round-robin and
//! uncoordinated minimum-energy selection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordination::AgentState;
use crate::plangen::{
    build_occupancy, mean_allocate, schedule_horizon, shortest_tour, MissionSchedule, Occupancy, Plan,
    PlanError,
};
use crate::power::{DroneSpec, PowerProfile};
use crate::scalar::{from_usize, Scalar};
use crate::scenario::{SensingMap, TimeStructure};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("cells per dispatch must be in 1..={cells}, got {k}")]
    InvalidCellsPerDispatch { k: usize, cells: usize },
    #[error("at least one dispatch is required")]
    NoDispatches,
    #[error("the map has no base stations")]
    NoStations,
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// One drone sortie and the plan it flies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dispatch<S> {
    pub drone: usize,
    pub station: usize,
    pub period: usize,
    pub plan: Plan<S>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DispatchSchedule<S> {
    pub dispatches: Vec<Dispatch<S>>,
}

impl<S: Scalar> DispatchSchedule<S> {
    /// Summed sensing per cell.
    pub fn collected(&self, cells: usize) -> Vec<S> {
        let mut acc = vec![S::zero(); cells];
        for d in &self.dispatches {
            d.plan.accumulate_into(&mut acc, S::one());
        }
        acc
    }

    pub fn total_energy(&self) -> S {
        self.dispatches.iter().map(|d| d.plan.cost).sum()
    }

    /// Occupancies with the global time unit at which each dispatch departs.
    pub fn placed_occupancy<'a>(&'a self, time: &TimeStructure<S>) -> Vec<(usize, &'a Occupancy)> {
        self.dispatches
            .iter()
            .map(|d| (d.period * time.units_per_period, &d.plan.occupancy))
            .collect()
    }
}

/// Period of dispatch `u` when `dispatches` sorties are spread evenly, in
/// order, over `periods` periods.
pub fn dispatch_period(u: usize, dispatches: usize, periods: usize) -> usize {
    let periods = periods.max(1);
    let per = dispatches.div_ceil(periods).max(1);
    (u / per).min(periods - 1)
}

/// Stations take dispatches in turn.
pub fn dispatch_station(u: usize, stations: usize) -> usize {
    u % stations.max(1)
}

/// Drone, power model and map shared by all dispatches of a run.
#[derive(Clone, Copy, Debug)]
pub struct BaselineContext<'a, S> {
    pub spec: &'a DroneSpec<S>,
    pub power: &'a PowerProfile<S>,
    pub map: &'a SensingMap<S>,
}

/// What a greedy drone knows about the remaining requirements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyView {
    /// One remaining-target ledger shared by every dispatch.
    Global,
    /// Every dispatch starts from the full targets.
    Local,
}

/// Horizon over which the greedy ledger applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedgerScope {
    /// Targets are totals for the whole mission.
    Horizon,
    /// Targets are spread evenly over the periods and the ledger is refilled
    /// at the start of each period.
    PerPeriod,
}

/// Each dispatch repeatedly flies to the nearest cell with a remaining
/// requirement, hovers until it is met or the battery (less the energy to
/// fly home) runs out, and moves on. Full battery, no energy held back.
pub fn greedy_sensing<S: Scalar>(
    ctx: BaselineContext<'_, S>,
    dispatches: usize,
    view: GreedyView,
    scope: LedgerScope,
) -> Result<(DispatchSchedule<S>, Vec<S>), BaselineError> {
    let BaselineContext { spec, power, map } = ctx;
    check(map, dispatches)?;
    let cells = map.num_cells();
    let periods = map.time.periods.max(1);
    let share = match scope {
        LedgerScope::Horizon => S::one(),
        LedgerScope::PerPeriod => S::one() / from_usize::<S>(periods),
    };
    let fresh: Vec<S> = map.targets().iter().map(|&t| t * share).collect();
    let horizon = schedule_horizon(spec, power, map.time.unit_length);
    let f = spec.sensing_frequency;
    let speed = spec.ground_speed;

    let mut ledger = fresh.clone();
    let mut ledger_period = 0;
    let mut schedule = DispatchSchedule::default();
    for u in 0..dispatches {
        let period = dispatch_period(u, dispatches, periods);
        let station = &map.stations[dispatch_station(u, map.stations.len())];
        if scope == LedgerScope::PerPeriod && period != ledger_period {
            ledger.clone_from(&fresh);
            ledger_period = period;
        }
        let mut own = fresh.clone();
        let remaining = match view {
            GreedyView::Global => &mut ledger,
            GreedyView::Local => &mut own,
        };

        let home = station.position;
        let mut here = home;
        let mut energy = spec.battery_capacity;
        let mut visited = Vec::new();
        let mut hover_secs = Vec::new();
        let mut flight_time = S::zero();
        let mut hover_energy = S::zero();
        loop {
            let mut best: Option<(usize, S)> = None;
            for n in 0..cells {
                if remaining[n] > S::zero() && !visited.contains(&n) {
                    let d = map.cell_center(n).distance(&here);
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((n, d));
                    }
                }
            }
            let Some((n, d)) = best else { break };
            let center = map.cell_center(n);
            let out = d / speed;
            let back = center.distance(&home) / speed;
            let budget = energy - power.flying_power * (out + back);
            if !(budget > S::zero()) {
                break;
            }
            let needed = remaining[n] / f;
            let affordable = budget / power.hover_power;
            let secs = needed.min(affordable);
            if needed <= affordable {
                remaining[n] = S::zero();
            } else {
                remaining[n] = (remaining[n] - secs * f).max(S::zero());
            }
            energy -= power.flying_power * out + power.hover_power * secs;
            flight_time += out;
            hover_energy += power.hover_power * secs;
            visited.push(n);
            hover_secs.push(secs);
            here = center;
        }
        flight_time += here.distance(&home) / speed;
        let plan = assemble(ctx, station.index, visited, hover_secs, flight_time, hover_energy, horizon)?;
        schedule.dispatches.push(Dispatch {
            drone: u,
            station: station.index,
            period,
            plan,
        });
    }
    let collected = schedule.collected(cells);
    Ok((schedule, collected))
}

/// Dispatch `u` visits cells `(u * k + j) mod N` for `j < k`, flying the
/// nearest-neighbour tour from its station and splitting the whole remaining
/// battery equally among them. Cells farthest from the station are dropped
/// while the tour alone would exhaust the battery.
pub fn round_robin<S: Scalar>(
    ctx: BaselineContext<'_, S>,
    dispatches: usize,
    k: usize,
) -> Result<(DispatchSchedule<S>, Vec<S>), BaselineError> {
    let BaselineContext { spec, power, map } = ctx;
    check(map, dispatches)?;
    let cells = map.num_cells();
    if k == 0 || k > cells {
        return Err(BaselineError::InvalidCellsPerDispatch { k, cells });
    }
    let horizon = schedule_horizon(spec, power, map.time.unit_length);
    let mut schedule = DispatchSchedule::default();
    for u in 0..dispatches {
        let station = &map.stations[dispatch_station(u, map.stations.len())];
        let mut chosen: Vec<usize> = (0..k).map(|j| (u * k + j) % cells).collect();
        let plan = loop {
            let tour = shortest_tour(map, station.position, &chosen, spec.ground_speed);
            let hover = spec.battery_capacity - power.flying_power * tour.flight_time;
            if hover > S::zero() || chosen.is_empty() {
                let hover = hover.max(S::zero());
                let per_cell = mean_allocate(hover / power.hover_power, tour.order.len());
                break assemble(
                    ctx,
                    station.index,
                    tour.order,
                    per_cell,
                    tour.flight_time,
                    hover,
                    horizon,
                )?;
            }
            let far = (0..chosen.len())
                .max_by(|&a, &b| {
                    let da = map.cell_center(chosen[a]).distance(&station.position);
                    let db = map.cell_center(chosen[b]).distance(&station.position);
                    da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty");
            chosen.remove(far);
        };
        schedule.dispatches.push(Dispatch {
            drone: u,
            station: station.index,
            period: dispatch_period(u, dispatches, map.time.periods),
            plan,
        });
    }
    let collected = schedule.collected(cells);
    Ok((schedule, collected))
}

/// Every agent picks its cheapest plan on its own.
pub fn min_energy<S: Scalar>(agents: &[AgentState<S>]) -> Vec<usize> {
    agents.iter().map(AgentState::min_cost_plan).collect()
}

fn check<S: Scalar>(map: &SensingMap<S>, dispatches: usize) -> Result<(), BaselineError> {
    if dispatches == 0 {
        return Err(BaselineError::NoDispatches);
    }
    if map.stations.is_empty() {
        return Err(BaselineError::NoStations);
    }
    Ok(())
}

/// Builds the plan record of a fixed route with per-cell hover times.
fn assemble<S: Scalar>(
    ctx: BaselineContext<'_, S>,
    station: usize,
    path: Vec<usize>,
    hover_secs: Vec<S>,
    flight_time: S,
    hover_energy: S,
    horizon: usize,
) -> Result<Plan<S>, BaselineError> {
    let BaselineContext { spec, power, map } = ctx;
    let schedule = MissionSchedule::from_tour(
        map,
        map.stations[station].position,
        &path,
        &hover_secs,
        spec.ground_speed,
    );
    let occupancy = build_occupancy(&schedule, map.time.unit_length, horizon)?;
    let mut sensing: Vec<(usize, S)> = Vec::with_capacity(path.len());
    for (&n, &secs) in path.iter().zip(&hover_secs) {
        let v = secs * spec.sensing_frequency;
        match sensing.iter_mut().find(|(c, _)| *c == n) {
            Some((_, acc)) => *acc += v,
            None => sensing.push((n, v)),
        }
    }
    sensing.sort_by_key(|&(n, _)| n);
    let flight_energy = power.flying_power * flight_time;
    let cost = flight_energy + hover_energy;
    Ok(Plan {
        index: 1,
        station,
        visited: path.clone(),
        path,
        flight_time,
        utilization: cost / spec.battery_capacity,
        flight_energy,
        hover_energy,
        sensing,
        occupancy,
        cost,
    })
}

use dronesense::baselines::{greedy_sensing, BaselineContext, GreedyView, LedgerScope};
use dronesense::coordination::{
    aggregate_of, build_balanced_tree, global_cost, run_repetition, AgentState, TreeTopology,
};
use dronesense::metrics::{mission_inefficiency, observed_traffic, traffic_efficiency};
use dronesense::plangen::{
    allocate_sensing, generate_plans, DispatchContext, MobilityPolicy, PlanGenConfig,
};
use dronesense::power::{DroneSpec, Environment, PowerProfile};
use dronesense::rng::{child_rng, Stream};
use dronesense::scenario::{
    generate_synthetic_map, nearest_station, MapParams, SensingMap, SyntheticTrafficParams,
};
use proptest::prelude::*;

fn power() -> (DroneSpec<f64>, PowerProfile<f64>) {
    let spec = DroneSpec::default();
    let power = PowerProfile::new(&spec, &Environment::default()).unwrap();
    (spec, power)
}

fn map(cells_side: usize, stations: usize, total: f64, seed: u64) -> SensingMap<f64> {
    let params = MapParams {
        cells: cells_side * cells_side,
        stations,
        total_target: total,
        side_length: 200.0 * cells_side as f64,
        ..MapParams::default()
    };
    generate_synthetic_map(&params, seed).unwrap()
}

fn agents(map: &SensingMap<f64>, count: usize, plans: usize, seed: u64) -> Vec<AgentState<f64>> {
    let (spec, power) = power();
    let cfg = PlanGenConfig {
        plans,
        ..PlanGenConfig::default()
    };
    (0..count)
        .map(|u| {
            let mut rng = child_rng(seed, Stream::Agent, u as u64);
            let ctx = DispatchContext {
                spec: &spec,
                power: &power,
                map,
                station: &map.stations[u % map.stations.len()],
            };
            AgentState::new(u, generate_plans(ctx, &cfg, &mut rng).unwrap()).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn plan_energy_closes(seed in any::<u64>(), side in 2usize..6, stations in 1usize..4, delta in 1.0f64..20.0, policy in 0usize..4) {
        let (spec, power) = power();
        let m = map(side, stations.min(side * side), 1000.0, seed);
        let policy = match policy {
            0 => MobilityPolicy::Mismatch,
            1 => MobilityPolicy::Inefficiency,
            2 => MobilityPolicy::Balance,
            _ => MobilityPolicy::Fixed(1),
        };
        let cfg = PlanGenConfig { plans: 16, delta, policy, ..PlanGenConfig::default() };
        for station in &m.stations {
            let mut rng = child_rng(seed, Stream::Agent, station.index as u64);
            let ctx = DispatchContext { spec: &spec, power: &power, map: &m, station };
            let Ok(plans) = generate_plans(ctx, &cfg, &mut rng) else { continue };
            for p in plans {
                let used = power.flying_power * p.flight_time
                    + p.total_sensing() / spec.sensing_frequency * power.hover_power;
                let budget = spec.battery_capacity * p.utilization;
                prop_assert!((used - budget).abs() <= 1e-6 * budget);
                prop_assert!(p.cost <= spec.battery_capacity);
                prop_assert!(p.visited.iter().all(|n| station.range.contains(n)));
                prop_assert!(p.occupancy.occupied().count() <= p.occupancy.horizon());
            }
        }
    }

    #[test]
    fn allocation_is_proportional(total in 0.0f64..1e4, targets in prop::collection::vec(0.01f64..500.0, 1..8)) {
        let shares = allocate_sensing(total, &targets);
        let sum: f64 = shares.iter().sum();
        prop_assert!((sum - total).abs() <= 1e-9 * total.max(1.0));
        let tsum: f64 = targets.iter().sum();
        for (s, t) in shares.iter().zip(&targets) {
            prop_assert!((s - total * t / tsum).abs() <= 1e-9 * total.max(1.0));
        }
    }

    #[test]
    fn station_ranges_partition_the_map(seed in any::<u64>(), side in 1usize..9, stations in 1usize..10) {
        let m = map(side, stations.min(side * side), 500.0, seed);
        let mut owner = vec![None; m.num_cells()];
        for s in &m.stations {
            for &n in &s.range {
                prop_assert!(owner[n].is_none());
                owner[n] = Some(s.index);
            }
        }
        for (n, o) in owner.iter().enumerate() {
            prop_assert_eq!(*o, Some(nearest_station(&m.stations, &m.cell_center(n))));
        }
        let total: f64 = m.targets().iter().sum();
        prop_assert!((total - 500.0).abs() < 1e-6);
    }

    #[test]
    fn trees_are_balanced(n in 1usize..500, seed in any::<u64>()) {
        let t = TreeTopology::balanced(n, seed);
        prop_assert!(t.depth() <= (n as f64).log2().ceil() as usize + 1);
        let ids: Vec<usize> = (100..100 + n).collect();
        let mut placed = build_balanced_tree(&ids, seed);
        placed.sort_unstable();
        prop_assert_eq!(placed, ids);
    }

    #[test]
    fn unit_scaling_ignores_positive_scale(v in prop::collection::vec(0.0f64..50.0, 2..10), c in 0.01f64..100.0) {
        prop_assume!(v.iter().any(|&x| x > 0.0));
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        prop_assert!(global_cost(&scaled, &v).unwrap().abs() < 1e-12);
    }

    #[test]
    fn inefficiency_of_a_scaled_target(t in prop::collection::vec(0.1f64..100.0, 1..10), alpha in 0.0f64..=1.0) {
        let c: Vec<f64> = t.iter().map(|x| alpha * x).collect();
        prop_assert!((mission_inefficiency(&c, &t).unwrap().value - (1.0 - alpha)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coordination_invariants(seed in any::<u64>(), beta in 0.0f64..=1.0, count in 1usize..24) {
        let m = map(4, 2, 2000.0, seed);
        let agents = agents(&m, count, 8, seed);
        let target = m.targets();
        let tree = TreeTopology::balanced(agents.len(), seed);
        let out = run_repetition(&agents, &tree, &target, beta, 6).unwrap();
        for w in out.rss_trace.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        let fresh = aggregate_of(&agents, &out.selections, target.len());
        for (a, b) in out.response.aggregate.iter().zip(&fresh) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
        let one = run_repetition(&agents, &tree, &target, 1.0, 6).unwrap();
        for (a, &s) in agents.iter().zip(&one.selections) {
            prop_assert_eq!(s, a.min_cost_plan());
        }
    }

    #[test]
    fn global_greedy_respects_targets(seed in any::<u64>(), dispatches in 1usize..80) {
        let (spec, power) = power();
        let m = map(4, 2, 3000.0, seed);
        let ctx = BaselineContext { spec: &spec, power: &power, map: &m };
        let (sched, collected) = greedy_sensing(ctx, dispatches, GreedyView::Global, LedgerScope::Horizon).unwrap();
        for (c, t) in collected.iter().zip(m.targets()) {
            prop_assert!(*c <= t * (1.0 + 1e-9));
        }
        for d in &sched.dispatches {
            prop_assert!(d.plan.cost <= spec.battery_capacity * (1.0 + 1e-12));
        }
    }

    #[test]
    fn traffic_efficiency_is_a_fraction(seed in any::<u64>(), dispatches in 1usize..40) {
        let (spec, power) = power();
        let traffic = dronesense::scenario::generate_synthetic_traffic(
            &SyntheticTrafficParams { cells: 4, time_units: 120, ..SyntheticTrafficParams::default() },
            seed,
        )
        .unwrap();
        let mut m = map(2, 1, 400.0, seed);
        m.time.periods = 4;
        m.time.units_per_period = 30;
        m.time.unit_length = 60.0;
        let spec = DroneSpec { battery_capacity: 100_000.0, ..spec };
        let ctx = BaselineContext { spec: &spec, power: &power, map: &m };
        let (sched, _) = greedy_sensing(ctx, dispatches, GreedyView::Global, LedgerScope::PerPeriod).unwrap();
        let placed = sched.placed_occupancy(&m.time);
        let (obs, act) = observed_traffic(placed, &traffic, None).unwrap();
        let e = traffic_efficiency(&obs, &act).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
    }
}

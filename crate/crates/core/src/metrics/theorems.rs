use rand::seq::index::sample;
use rayon::prelude::*;

use super::{mission_inefficiency, raw_rss, Correlation, MetricsError};
use crate::plangen::{allocate_sensing, shortest_tour};
use crate::power::{DroneSpec, PowerProfile};
use crate::rng::{child_rng, derive_seed, Stream};
use crate::scalar::{to_f64, Scalar};
use crate::scenario::SensingMap;

/// Minimum Monte-Carlo trials per visited-cell count.
pub const MIN_TRIALS: usize = 30;

/// Missions where every drone visits random cells anywhere on the map and
/// spends its whole battery.
#[derive(Clone, Copy, Debug)]
pub struct RandomMissionSetup<'a, S> {
    pub map: &'a SensingMap<S>,
    pub spec: &'a DroneSpec<S>,
    pub power: &'a PowerProfile<S>,
    pub dispatches: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Mean outcome of the trials at one visited-cell count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub cells: usize,
    pub mean_inefficiency: f64,
    /// Mean raw residual sum of squares.
    pub mean_rss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremOneResult {
    pub points: Vec<SweepPoint>,
    /// Correlation between visited cells and mean inefficiency.
    pub correlation: Correlation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremTwoResult {
    pub points: Vec<SweepPoint>,
    /// Whether the mean mismatch strictly decreases with visited cells;
    /// `None` when fewer than two points exist.
    pub decreasing: Option<bool>,
}

/// Collected sensing of one trial: `dispatches` drones, each from station
/// `u mod B`, visiting `k` distinct random cells on a nearest-neighbour tour
/// and allocating its sensing in proportion to the targets.
pub fn random_mission<S: Scalar>(setup: &RandomMissionSetup<'_, S>, k: usize, trial_seed: u64) -> Vec<S> {
    let map = setup.map;
    let cells = map.num_cells();
    let targets = map.targets();
    let mut collected = vec![S::zero(); cells];
    for u in 0..setup.dispatches {
        let mut rng = child_rng(trial_seed, Stream::Agent, u as u64);
        let station = &map.stations[u % map.stations.len()];
        let picks = sample(&mut rng, cells, k).into_vec();
        let tour = shortest_tour(map, station.position, &picks, setup.spec.ground_speed);
        let hover = setup.spec.battery_capacity - setup.power.flying_power * tour.flight_time;
        if !(hover > S::zero()) {
            continue;
        }
        let total = hover / setup.power.hover_power * setup.spec.sensing_frequency;
        let path_targets: Vec<S> = tour.order.iter().map(|&n| targets[n]).collect();
        for (&n, v) in tour.order.iter().zip(allocate_sensing(total, &path_targets)) {
            collected[n] += v;
        }
    }
    collected
}

fn sweep<S: Scalar>(setup: &RandomMissionSetup<'_, S>, counts: &[usize]) -> Result<Vec<SweepPoint>, MetricsError> {
    if setup.trials < MIN_TRIALS {
        return Err(MetricsError::TooFewTrials {
            needed: MIN_TRIALS,
            found: setup.trials,
        });
    }
    let cells = setup.map.num_cells();
    if setup.map.stations.is_empty() || setup.dispatches == 0 {
        return Err(MetricsError::EmptySweep);
    }
    let targets = setup.map.targets();
    counts
        .iter()
        .map(|&k| {
            if k == 0 || k > cells {
                return Err(MetricsError::InvalidCellCount { k, cells });
            }
            let stream = derive_seed(setup.seed, Stream::Trial, k as u64);
            let outcomes: Vec<Result<(f64, f64), MetricsError>> = (0..setup.trials)
                .into_par_iter()
                .map(|t| {
                    let collected = random_mission(setup, k, derive_seed(stream, Stream::Trial, t as u64));
                    let ineff = mission_inefficiency(&collected, &targets)?.value;
                    Ok((to_f64(ineff), to_f64(raw_rss(&collected, &targets)?)))
                })
                .collect();
            let mut sum = (0.0, 0.0);
            for o in outcomes {
                let (i, r) = o?;
                sum.0 += i;
                sum.1 += r;
            }
            let n = setup.trials as f64;
            Ok(SweepPoint {
                cells: k,
                mean_inefficiency: sum.0 / n,
                mean_rss: sum.1 / n,
            })
        })
        .collect()
}

/// Mean mission inefficiency per visited-cell count and its correlation with
/// the count.
pub fn theorem_one_sweep<S: Scalar>(
    setup: &RandomMissionSetup<'_, S>,
    counts: &[usize],
) -> Result<TheoremOneResult, MetricsError> {
    let mut distinct = counts.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(MetricsError::ZeroVariance);
    }
    let points = sweep(setup, counts)?;
    let xs: Vec<f64> = points.iter().map(|p| p.cells as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_inefficiency).collect();
    let correlation = super::pearson(&xs, &ys)?;
    Ok(TheoremOneResult { points, correlation })
}

/// Mean raw mismatch per visited-cell count, for increasing counts whose
/// consecutive pairs satisfy `|J| + |J'| < N`.
pub fn theorem_two_sweep<S: Scalar>(
    setup: &RandomMissionSetup<'_, S>,
    counts: &[usize],
) -> Result<TheoremTwoResult, MetricsError> {
    let cells = setup.map.num_cells();
    for w in counts.windows(2) {
        if w[1] <= w[0] {
            return Err(MetricsError::UnorderedCounts);
        }
        if w[0] + w[1] >= cells {
            return Err(MetricsError::ConditionViolated {
                j: w[0],
                j_prime: w[1],
                cells,
            });
        }
    }
    let points = sweep(setup, counts)?;
    let decreasing = (points.len() >= 2).then(|| points.windows(2).all(|w| w[1].mean_rss < w[0].mean_rss));
    Ok(TheoremTwoResult { points, decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::Environment;
    use crate::scenario::{generate_synthetic_map, MapParams};

    fn setup_parts() -> (SensingMap<f64>, DroneSpec<f64>, PowerProfile<f64>) {
        let map = generate_synthetic_map(&MapParams::default(), 3).unwrap();
        let spec = DroneSpec::default();
        let power = PowerProfile::new(&spec, &Environment::default()).unwrap();
        (map, spec, power)
    }

    #[test]
    fn preconditions() {
        let (map, spec, power) = setup_parts();
        let mut setup = RandomMissionSetup {
            map: &map,
            spec: &spec,
            power: &power,
            dispatches: 10,
            trials: 30,
            seed: 1,
        };
        assert!(matches!(
            theorem_two_sweep(&setup, &[30, 34]),
            Err(MetricsError::ConditionViolated { j: 30, j_prime: 34, cells: 64 })
        ));
        assert_eq!(theorem_one_sweep(&setup, &[3, 3]), Err(MetricsError::ZeroVariance));
        setup.trials = 29;
        assert!(matches!(theorem_one_sweep(&setup, &[1, 2]), Err(MetricsError::TooFewTrials { .. })));
    }

    #[test]
    fn single_point_has_no_trend() {
        let (map, spec, power) = setup_parts();
        let setup = RandomMissionSetup {
            map: &map,
            spec: &spec,
            power: &power,
            dispatches: 5,
            trials: 30,
            seed: 1,
        };
        let out = theorem_two_sweep(&setup, &[1]).unwrap();
        assert_eq!(out.decreasing, None);
        assert_eq!(out.points.len(), 1);
    }

    #[test]
    fn sweeps_are_seeded() {
        let (map, spec, power) = setup_parts();
        let setup = RandomMissionSetup {
            map: &map,
            spec: &spec,
            power: &power,
            dispatches: 20,
            trials: 30,
            seed: 9,
        };
        let a = theorem_one_sweep(&setup, &[1, 2, 3]).unwrap();
        let b = theorem_one_sweep(&setup, &[1, 2, 3]).unwrap();
        assert_eq!(a, b);
        assert!(a.points[0].mean_inefficiency < a.points[2].mean_inefficiency);
    }
}

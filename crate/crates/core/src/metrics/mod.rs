//! Evaluation measures, summary statistics and the visited-cell sweeps.

mod stats;
mod theorems;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordination::global_cost;
use crate::scalar::{lit, Scalar};
use crate::scenario::TrafficScenario;

pub use stats::{mann_whitney_u, pearson, Correlation, MannWhitney};
pub use theorems::{
    random_mission, theorem_one_sweep, theorem_two_sweep, RandomMissionSetup, SweepPoint, TheoremOneResult,
    TheoremTwoResult, MIN_TRIALS,
};

/// Floor applied to squared errors before taking logarithms.
pub const RSS_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("target vector sums to zero")]
    ZeroTarget,
    #[error("actual traffic sums to zero")]
    ZeroTraffic,
    #[error("input has zero variance")]
    ZeroVariance,
    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("need at least {needed} trials, got {found}")]
    TooFewTrials { needed: usize, found: usize },
    #[error("visited-cell count {k} outside 1..={cells}")]
    InvalidCellCount { k: usize, cells: usize },
    #[error("visited-cell counts {j} and {j_prime} reach the {cells} cells of the map")]
    ConditionViolated { j: usize, j_prime: usize, cells: usize },
    #[error("visited-cell counts must increase")]
    UnorderedCounts,
    #[error("sweep has no stations or no dispatches")]
    EmptySweep,
    #[error("occupancy reaches unit {unit} but traffic has {units} units")]
    OccupancyBeyondTraffic { unit: usize, units: usize },
    #[error("statistics: {0}")]
    Statistics(String),
}

fn same_len(a: usize, b: usize) -> Result<(), MetricsError> {
    if a == b {
        Ok(())
    } else {
        Err(MetricsError::DimensionMismatch { expected: b, found: a })
    }
}

/// `sum (T_n - collected_n)^2` on the unscaled vectors.
pub fn raw_rss<S: Scalar>(collected: &[S], target: &[S]) -> Result<S, MetricsError> {
    same_len(collected.len(), target.len())?;
    Ok(collected
        .iter()
        .zip(target)
        .map(|(&c, &t)| (t - c) * (t - c))
        .sum())
}

/// `log10` of the raw residual sum of squares, floored at [`RSS_FLOOR`].
pub fn sensing_mismatch<S: Scalar>(collected: &[S], target: &[S]) -> Result<S, MetricsError> {
    Ok(raw_rss(collected, target)?.max(lit(RSS_FLOOR)).log10())
}

/// Residual sum of squares between the unit-length scaled vectors, the
/// quantity coordination minimizes.
pub fn unit_scaled_rss<S: Scalar>(collected: &[S], target: &[S]) -> Result<S, MetricsError> {
    same_len(collected.len(), target.len())?;
    global_cost(collected, target).map_err(|_| MetricsError::ZeroTarget)
}

/// Fraction of the total target left uncollected.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inefficiency<S> {
    pub value: S,
    /// More was collected than required in total; `value` is negative.
    pub over_collected: bool,
}

pub fn mission_inefficiency<S: Scalar>(collected: &[S], target: &[S]) -> Result<Inefficiency<S>, MetricsError> {
    same_len(collected.len(), target.len())?;
    let total: S = target.iter().copied().sum();
    if !(total > S::zero()) {
        return Err(MetricsError::ZeroTarget);
    }
    let got: S = collected.iter().copied().sum();
    let value = S::one() - got / total;
    Ok(Inefficiency {
        value,
        over_collected: value < S::zero(),
    })
}

/// Per-method sum of the min-max normalized energy, mismatch and
/// inefficiency. A quantity on which all methods tie contributes zero.
pub fn combined_cost<S: Scalar>(rows: &[[S; 3]]) -> Vec<S> {
    let mut out = vec![S::zero(); rows.len()];
    for q in 0..3 {
        let lo = rows.iter().map(|r| r[q]).fold(S::infinity(), S::min);
        let hi = rows.iter().map(|r| r[q]).fold(S::neg_infinity(), S::max);
        let span = hi - lo;
        if span > S::zero() {
            for (o, r) in out.iter_mut().zip(rows) {
                *o += (r[q] - lo) / span;
            }
        }
    }
    out
}

/// `log10(1 / sum (observed_m - actual_m)^2)`, with the squared error
/// floored at [`RSS_FLOOR`].
pub fn traffic_accuracy<S: Scalar>(observed: &[S], actual: &[S]) -> Result<S, MetricsError> {
    let sq = raw_rss(observed, actual)?;
    Ok(-sq.max(lit(RSS_FLOOR)).log10())
}

/// Share of all vehicles that were observed.
pub fn traffic_efficiency<S: Scalar>(observed: &[S], actual: &[S]) -> Result<S, MetricsError> {
    same_len(observed.len(), actual.len())?;
    let total: S = actual.iter().copied().sum();
    if !(total > S::zero()) {
        return Err(MetricsError::ZeroTraffic);
    }
    Ok(observed.iter().copied().sum::<S>() / total)
}

/// Per time unit, the vehicles in cells covered by at least one drone and
/// the vehicles in all cells. Occupancies are `(start unit, occupancy)`;
/// `vtype` selects one vehicle type or all of them.
pub fn observed_traffic<'a, I>(
    placed: I,
    traffic: &TrafficScenario,
    vtype: Option<usize>,
) -> Result<(Vec<f64>, Vec<f64>), MetricsError>
where
    I: IntoIterator<Item = (usize, &'a crate::plangen::Occupancy)>,
{
    let units = traffic.time_units();
    let cells = traffic.cells();
    let mut covered = vec![false; units * cells];
    for (start, occ) in placed {
        for (m, n) in occ.occupied() {
            let unit = start + m;
            if unit >= units || n >= cells {
                return Err(MetricsError::OccupancyBeyondTraffic { unit, units });
            }
            covered[unit * cells + n] = true;
        }
    }
    let count = |n: usize, m: usize| match vtype {
        Some(t) => traffic.count(n, m, t),
        None => traffic.cell_unit_total(n, m),
    } as f64;
    let mut observed = vec![0.0; units];
    let mut actual = vec![0.0; units];
    for m in 0..units {
        for n in 0..cells {
            let v = count(n, m);
            actual[m] += v;
            if covered[m * cells + n] {
                observed[m] += v;
            }
        }
    }
    Ok((observed, actual))
}

/// One evaluated method on one scenario instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord<S> {
    pub scenario: String,
    pub map: usize,
    pub seed: u64,
    pub method: String,
    /// Joules.
    pub total_energy: S,
    /// `log10` of the raw residual sum of squares.
    pub sensing_mismatch: S,
    pub unit_rss: S,
    pub mission_inefficiency: S,
    pub combined_cost: S,
    /// Simultaneous occupancy of one cell by several drones.
    pub conflicts: usize,
}

impl<S: Scalar> MetricRecord<S> {
    /// Record for `collected` against `target` with the combined cost unset.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        scenario: &str,
        map: usize,
        seed: u64,
        method: &str,
        total_energy: S,
        collected: &[S],
        target: &[S],
        conflicts: usize,
    ) -> Result<Self, MetricsError> {
        Ok(Self {
            scenario: scenario.to_string(),
            map,
            seed,
            method: method.to_string(),
            total_energy,
            sensing_mismatch: sensing_mismatch(collected, target)?,
            unit_rss: unit_scaled_rss(collected, target)?,
            mission_inefficiency: mission_inefficiency(collected, target)?.value,
            combined_cost: S::zero(),
            conflicts,
        })
    }
}

/// Fills `combined_cost` across the given records (the methods compared on
/// one instance).
pub fn assign_combined_cost<S: Scalar>(records: &mut [MetricRecord<S>]) {
    let rows: Vec<[S; 3]> = records
        .iter()
        .map(|r| [r.total_energy, r.sensing_mismatch, r.mission_inefficiency])
        .collect();
    for (r, c) in records.iter_mut().zip(combined_cost(&rows)) {
        r.combined_cost = c;
    }
}

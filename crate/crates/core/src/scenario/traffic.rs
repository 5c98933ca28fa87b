use std::collections::HashMap;
use std::io::Read;

use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::rng::rng_from_seed;
use crate::scalar::{lit, to_f64, Scalar};

/// Declared dimensions of a traffic input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficDims {
    pub cells: usize,
    pub time_units: usize,
    /// Known vehicle types. When empty, types are taken from the input in
    /// order of first appearance.
    pub vehicle_types: Vec<String>,
}

/// Vehicle counts per cell, time unit and vehicle type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficScenario {
    cells: usize,
    time_units: usize,
    vehicle_types: Vec<String>,
    /// Flat `[cell][unit][type]`.
    counts: Vec<u64>,
}

#[derive(Debug, Deserialize)]
struct TrafficRow {
    cell: i64,
    time_unit: i64,
    vehicle_type: String,
    count: i64,
}

impl TrafficScenario {
    pub fn zeros(cells: usize, time_units: usize, vehicle_types: Vec<String>) -> Self {
        let len = cells * time_units * vehicle_types.len();
        Self {
            cells,
            time_units,
            vehicle_types,
            counts: vec![0; len],
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn time_units(&self) -> usize {
        self.time_units
    }

    pub fn vehicle_types(&self) -> &[String] {
        &self.vehicle_types
    }

    fn offset(&self, cell: usize, unit: usize, vtype: usize) -> usize {
        (cell * self.time_units + unit) * self.vehicle_types.len() + vtype
    }

    pub fn count(&self, cell: usize, unit: usize, vtype: usize) -> u64 {
        self.counts[self.offset(cell, unit, vtype)]
    }

    pub fn set_count(&mut self, cell: usize, unit: usize, vtype: usize, value: u64) {
        let i = self.offset(cell, unit, vtype);
        self.counts[i] = value;
    }

    /// Vehicles of all types in `cell` during `unit`.
    pub fn cell_unit_total(&self, cell: usize, unit: usize) -> u64 {
        let start = self.offset(cell, unit, 0);
        self.counts[start..start + self.vehicle_types.len()]
            .iter()
            .sum()
    }

    /// Per-cell totals over time and types.
    pub fn cell_totals(&self) -> Vec<u64> {
        (0..self.cells)
            .map(|n| (0..self.time_units).map(|m| self.cell_unit_total(n, m)).sum())
            .collect()
    }

    /// Count matrix `[cell][unit]` for one vehicle type, or all types when
    /// `vtype` is `None`.
    pub fn matrix(&self, vtype: Option<usize>) -> Vec<Vec<u64>> {
        (0..self.cells)
            .map(|n| {
                (0..self.time_units)
                    .map(|m| match vtype {
                        Some(t) => self.count(n, m, t),
                        None => self.cell_unit_total(n, m),
                    })
                    .collect()
            })
            .collect()
    }

    pub fn scaled(&self, factor: u64) -> Self {
        let mut out = self.clone();
        out.counts.iter_mut().for_each(|c| *c *= factor);
        out
    }
}

/// Reads `cell,time_unit,vehicle_type,count` rows (header required) into a
/// dense scenario. Missing entries are zero; duplicate keys are summed.
/// Row numbers in errors are 1-based file lines, the header being line 1.
pub fn load_traffic_scenario<R: Read>(
    source: R,
    dims: &TrafficDims,
) -> Result<TrafficScenario, ScenarioError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| ScenarioError::TrafficInput(e.to_string()))?
        .clone();
    let expected = ["cell", "time_unit", "vehicle_type", "count"];
    if !headers.is_empty() && headers.iter().ne(expected.iter().copied()) {
        return Err(ScenarioError::TrafficInput(format!(
            "expected header {}, found {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let fixed_types = !dims.vehicle_types.is_empty();
    let mut types = dims.vehicle_types.clone();
    let mut type_index: HashMap<String, usize> = types
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    let mut entries: Vec<(usize, usize, usize, u64)> = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| ScenarioError::TrafficRow {
            row: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line());
        let bad = |reason: String| ScenarioError::TrafficRow { row, reason };
        let parsed: TrafficRow = record
            .deserialize(Some(&headers))
            .map_err(|e| bad(format!("malformed row: {e}")))?;
        if parsed.cell < 0 || parsed.cell as usize >= dims.cells {
            return Err(bad(format!("unknown cell index {}", parsed.cell)));
        }
        if parsed.time_unit < 0 || parsed.time_unit as usize >= dims.time_units {
            return Err(bad(format!("time unit {} out of range", parsed.time_unit)));
        }
        if parsed.count < 0 {
            return Err(bad(format!("negative count {}", parsed.count)));
        }
        let vtype = match type_index.get(&parsed.vehicle_type) {
            Some(&i) => i,
            None if fixed_types => {
                return Err(bad(format!(
                    "unknown vehicle type `{}`",
                    parsed.vehicle_type
                )))
            }
            None => {
                types.push(parsed.vehicle_type.clone());
                type_index.insert(parsed.vehicle_type, types.len() - 1);
                types.len() - 1
            }
        };
        entries.push((
            parsed.cell as usize,
            parsed.time_unit as usize,
            vtype,
            parsed.count as u64,
        ));
    }

    let mut scenario = TrafficScenario::zeros(dims.cells, dims.time_units, types);
    for (n, m, t, c) in entries {
        let i = scenario.offset(n, m, t);
        scenario.counts[i] += c;
    }
    Ok(scenario)
}

/// Per-cell targets proportional to each cell's vehicle total, normalized so
/// the busiest cell receives `per_cell_cap`.
pub fn traffic_targets<S: Scalar>(
    traffic: &TrafficScenario,
    per_cell_cap: S,
) -> Result<Vec<S>, ScenarioError> {
    if !(per_cell_cap > S::zero()) {
        return Err(ScenarioError::NonPositiveCap(to_f64(per_cell_cap)));
    }
    let totals = traffic.cell_totals();
    let max = totals.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(ScenarioError::ZeroTraffic);
    }
    let max = lit::<S>(max as f64);
    Ok(totals
        .into_iter()
        .map(|t| per_cell_cap * (lit::<S>(t as f64) / max))
        .collect())
}

/// Synthetic non-uniform traffic: per-cell intensities are Gamma-distributed,
/// modulated by a daily profile over time units, with Poisson counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTrafficParams {
    pub cells: usize,
    pub time_units: usize,
    pub vehicle_types: Vec<String>,
    /// Mean vehicles per cell and unit, summed over types.
    pub mean_rate: f64,
    /// Gamma shape of the per-cell intensity; small values are more skewed.
    pub cell_shape: f64,
}

impl Default for SyntheticTrafficParams {
    fn default() -> Self {
        Self {
            cells: 10,
            time_units: 600,
            vehicle_types: ["car", "taxi", "bus", "medium_vehicle", "heavy_vehicle", "motorcycle"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            mean_rate: 20.0,
            cell_shape: 0.8,
        }
    }
}

pub fn generate_synthetic_traffic(
    params: &SyntheticTrafficParams,
    seed: u64,
) -> Result<TrafficScenario, ScenarioError> {
    if params.cells == 0 || params.time_units == 0 || params.vehicle_types.is_empty() {
        return Err(ScenarioError::Empty);
    }
    let bad = |what: &str| ScenarioError::TrafficInput(format!("invalid synthetic {what}"));
    let mut rng = rng_from_seed(seed);
    let gamma = Gamma::new(params.cell_shape, 1.0 / params.cell_shape).map_err(|_| bad("shape"))?;
    let cell_weight: Vec<f64> = (0..params.cells).map(|_| gamma.sample(&mut rng)).collect();
    // Type shares roughly follow a city mix: cars dominate.
    let raw_share: Vec<f64> = (0..params.vehicle_types.len())
        .map(|i| 1.0 / (1.0 + i as f64))
        .collect();
    let share_sum: f64 = raw_share.iter().sum();
    let mut scenario = TrafficScenario::zeros(
        params.cells,
        params.time_units,
        params.vehicle_types.clone(),
    );
    for n in 0..params.cells {
        for m in 0..params.time_units {
            let phase = m as f64 / params.time_units as f64 * std::f64::consts::TAU;
            let profile = 1.0 + 0.5 * (phase + n as f64).sin();
            for (t, share) in raw_share.iter().enumerate() {
                let lambda = params.mean_rate * cell_weight[n] * profile * share / share_sum;
                let count = if lambda > 0.0 {
                    Poisson::new(lambda).map_err(|_| bad("rate"))?.sample(&mut rng) as u64
                } else {
                    0
                };
                scenario.set_count(n, m, t, count);
            }
        }
    }
    Ok(scenario)
}

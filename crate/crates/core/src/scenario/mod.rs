//! Sensing scenarios: the grid map with per-cell targets, base stations and
//! their travel ranges, the period/time-unit structure, camera geometry and
//! traffic vehicle counts.

mod camera;
mod traffic;

pub use camera::CameraGeometry;
pub use traffic::{
    generate_synthetic_traffic, load_traffic_scenario, traffic_targets, SyntheticTrafficParams,
    TrafficDims, TrafficScenario,
};

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from_seed;
use crate::scalar::{from_usize, lit, to_f64, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("cell count {0} is not a perfect square")]
    NonSquareGrid(usize),
    #[error("at least one cell and one base station are required")]
    Empty,
    #[error("{stations} base stations exceed {cells} cells")]
    TooManyStations { stations: usize, cells: usize },
    #[error("total target must be positive, got {0}")]
    NonPositiveTarget(f64),
    #[error("beta shape parameters must be positive, got ({0}, {1})")]
    InvalidBetaShape(f64, f64),
    #[error("side length must be positive, got {0}")]
    NonPositiveSide(f64),
    #[error("camera parameter `{0}` must be strictly positive")]
    NonPositiveCamera(&'static str),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("traffic input row {row}: {reason}")]
    TrafficRow { row: u64, reason: String },
    #[error("traffic input: {0}")]
    TrafficInput(String),
    #[error("traffic counts are all zero")]
    ZeroTraffic,
    #[error("per-cell cap must be positive, got {0}")]
    NonPositiveCap(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point<S>) -> S {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn distance_sq(&self, other: &Point<S>) -> S {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell<S> {
    pub index: usize,
    pub center: Point<S>,
    /// Required sensing values per period.
    pub target: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseStation<S> {
    pub index: usize,
    pub position: Point<S>,
    /// Cell indices this station's drones may visit.
    pub range: Vec<usize>,
}

/// Periods, time units per period and the length of one unit in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeStructure<S> {
    pub periods: usize,
    pub units_per_period: usize,
    pub unit_length: S,
}

impl<S: Scalar> TimeStructure<S> {
    pub fn period_length(&self) -> S {
        from_usize::<S>(self.units_per_period) * self.unit_length
    }

    pub fn total_units(&self) -> usize {
        self.periods * self.units_per_period
    }
}

impl<S: Scalar> Default for TimeStructure<S> {
    /// One day of 48 half-hour periods, 12 units each.
    fn default() -> Self {
        Self {
            periods: 48,
            units_per_period: 12,
            unit_length: lit(150.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingMap<S> {
    pub side_length: S,
    pub cells: Vec<Cell<S>>,
    pub stations: Vec<BaseStation<S>>,
    pub time: TimeStructure<S>,
}

impl<S: Scalar> SensingMap<S> {
    /// Validates and assembles a map; station ranges are (re)assigned by
    /// nearest station.
    pub fn new(
        side_length: S,
        cells: Vec<Cell<S>>,
        station_positions: Vec<Point<S>>,
        time: TimeStructure<S>,
    ) -> Result<Self, ScenarioError> {
        if cells.is_empty() || station_positions.is_empty() {
            return Err(ScenarioError::Empty);
        }
        if !(side_length > S::zero()) {
            return Err(ScenarioError::NonPositiveSide(to_f64(side_length)));
        }
        for (i, cell) in cells.iter().enumerate() {
            if cell.index != i {
                return Err(ScenarioError::InvalidMap(format!(
                    "cell at position {i} has index {}",
                    cell.index
                )));
            }
            if !(cell.target >= S::zero()) || !cell.target.is_finite() {
                return Err(ScenarioError::InvalidMap(format!(
                    "cell {i} has invalid target {}",
                    cell.target
                )));
            }
            let inside = |v: S| v >= S::zero() && v <= side_length;
            if !inside(cell.center.x) || !inside(cell.center.y) {
                return Err(ScenarioError::InvalidMap(format!(
                    "cell {i} center lies outside the map"
                )));
            }
        }
        if time.units_per_period == 0 || !(time.unit_length > S::zero()) {
            return Err(ScenarioError::InvalidMap(
                "time units must be positive in count and length".into(),
            ));
        }
        let stations = station_positions
            .into_iter()
            .enumerate()
            .map(|(index, position)| BaseStation {
                index,
                position,
                range: Vec::new(),
            })
            .collect();
        let mut map = Self {
            side_length,
            cells,
            stations,
            time,
        };
        assign_station_ranges(&mut map);
        Ok(map)
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn targets(&self) -> Vec<S> {
        self.cells.iter().map(|c| c.target).collect()
    }

    pub fn total_target(&self) -> S {
        self.cells.iter().map(|c| c.target).sum()
    }

    pub fn cell_center(&self, n: usize) -> Point<S> {
        self.cells[n].center
    }

    /// Distance between adjacent lattice cells for a square grid map.
    pub fn cell_pitch(&self) -> S {
        self.side_length / from_usize::<S>(grid_side(self.cells.len()).unwrap_or(1))
    }

    /// Replaces the targets, keeping geometry and ranges.
    pub fn with_targets(mut self, targets: &[S]) -> Result<Self, ScenarioError> {
        if targets.len() != self.cells.len() {
            return Err(ScenarioError::InvalidMap(format!(
                "{} targets for {} cells",
                targets.len(),
                self.cells.len()
            )));
        }
        for (cell, &t) in self.cells.iter_mut().zip(targets) {
            if !(t >= S::zero()) {
                return Err(ScenarioError::InvalidMap(format!(
                    "cell {} has invalid target {t}",
                    cell.index
                )));
            }
            cell.target = t;
        }
        Ok(self)
    }

    pub fn to_json(&self) -> serde_json::Result<String>
    where
        S: Serialize,
    {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError>
    where
        S: for<'de> Deserialize<'de>,
    {
        let raw: Self =
            serde_json::from_str(text).map_err(|e| ScenarioError::InvalidMap(e.to_string()))?;
        let positions = raw.stations.iter().map(|s| s.position).collect();
        let map = Self::new(raw.side_length, raw.cells, positions, raw.time)?;
        // Explicit ranges in the document win over the nearest-station default,
        // provided they still partition the cells.
        if raw.stations.iter().any(|s| !s.range.is_empty()) {
            let mut map = map;
            for (dst, src) in map.stations.iter_mut().zip(&raw.stations) {
                dst.range = src.range.clone();
            }
            check_partition(&map)?;
            return Ok(map);
        }
        Ok(map)
    }
}

fn check_partition<S: Scalar>(map: &SensingMap<S>) -> Result<(), ScenarioError> {
    let mut owner = vec![None; map.cells.len()];
    for station in &map.stations {
        for &n in &station.range {
            match owner.get_mut(n) {
                None => {
                    return Err(ScenarioError::InvalidMap(format!(
                        "station {} lists unknown cell {n}",
                        station.index
                    )))
                }
                Some(Some(_)) => {
                    return Err(ScenarioError::InvalidMap(format!(
                        "cell {n} belongs to more than one station"
                    )))
                }
                Some(slot) => *slot = Some(station.index),
            }
        }
    }
    if let Some(n) = owner.iter().position(Option::is_none) {
        return Err(ScenarioError::InvalidMap(format!(
            "cell {n} belongs to no station"
        )));
    }
    Ok(())
}

/// Parameters of a synthetic map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapParams<S> {
    pub cells: usize,
    pub stations: usize,
    pub total_target: S,
    /// Shape `(a, b)` of the Beta distribution the raw targets are drawn from.
    pub beta_shape: (S, S),
    pub side_length: S,
    pub time: TimeStructure<S>,
}

impl<S: Scalar> Default for MapParams<S> {
    /// The basic synthetic scenario: 64 cells, 4 stations, 20000 values over
    /// a 1600 m square.
    fn default() -> Self {
        Self {
            cells: 64,
            stations: 4,
            total_target: lit(20_000.0),
            beta_shape: (lit(2.0), lit(2.0)),
            side_length: lit(1600.0),
            time: TimeStructure::default(),
        }
    }
}

fn grid_side(n: usize) -> Option<usize> {
    let k = (n as f64).sqrt().round() as usize;
    (k * k == n).then_some(k)
}

/// Centers of a `cols x rows` lattice of equal rectangles covering
/// `[0, width] x [0, height]`, in row-major order.
fn lattice<S: Scalar>(cols: usize, rows: usize, width: S, height: S) -> Vec<Point<S>> {
    let half = lit::<S>(0.5);
    let dx = width / from_usize::<S>(cols);
    let dy = height / from_usize::<S>(rows);
    (0..rows)
        .flat_map(|r| {
            (0..cols).map(move |c| {
                Point::new(
                    (from_usize::<S>(c) + half) * dx,
                    (from_usize::<S>(r) + half) * dy,
                )
            })
        })
        .collect()
}

/// Positions of `count` stations on a uniform sub-grid of the map.
pub fn station_grid<S: Scalar>(count: usize, side_length: S) -> Vec<Point<S>> {
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    let mut points = lattice(cols, rows, side_length, side_length);
    points.truncate(count);
    points
}

/// Generates a synthetic map: Beta-distributed targets scaled to the total,
/// cells on a square lattice and stations on a uniform sub-grid.
pub fn generate_synthetic_map<S: Scalar>(
    params: &MapParams<S>,
    seed: u64,
) -> Result<SensingMap<S>, ScenarioError> {
    let n = params.cells;
    if n == 0 || params.stations == 0 {
        return Err(ScenarioError::Empty);
    }
    let side = grid_side(n).ok_or(ScenarioError::NonSquareGrid(n))?;
    if params.stations > n {
        return Err(ScenarioError::TooManyStations {
            stations: params.stations,
            cells: n,
        });
    }
    if !(params.total_target > S::zero()) {
        return Err(ScenarioError::NonPositiveTarget(to_f64(params.total_target)));
    }
    let (a, b) = (to_f64(params.beta_shape.0), to_f64(params.beta_shape.1));
    let beta = Beta::new(a, b).map_err(|_| ScenarioError::InvalidBetaShape(a, b))?;

    let mut rng = rng_from_seed(seed);
    let raw: Vec<f64> = (0..n).map(|_| sample_positive(&beta, &mut rng)).collect();
    let raw_sum: f64 = raw.iter().sum();
    let total = params.total_target;
    let mut targets: Vec<S> = raw
        .iter()
        .map(|&x| lit::<S>(x / raw_sum) * total)
        .collect();
    // Put the rounding residue on the largest cell so the sum is the total.
    let residue = total - targets.iter().copied().sum::<S>();
    if let Some(max_i) = argmax(&targets) {
        targets[max_i] = (targets[max_i] + residue).max(S::zero());
    }

    let centers = lattice(side, side, params.side_length, params.side_length);
    let cells = centers
        .into_iter()
        .zip(targets)
        .enumerate()
        .map(|(index, (center, target))| Cell {
            index,
            center,
            target,
        })
        .collect();
    SensingMap::new(
        params.side_length,
        cells,
        station_grid(params.stations, params.side_length),
        params.time,
    )
}

fn sample_positive<R: Rng>(beta: &Beta<f64>, rng: &mut R) -> f64 {
    // A draw of exactly zero for every cell would leave nothing to scale.
    loop {
        let x = beta.sample(rng);
        if x > 0.0 {
            return x;
        }
    }
}

fn argmax<S: Scalar>(xs: &[S]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        if best.is_none_or(|b| x > xs[b]) {
            best = Some(i);
        }
    }
    best
}

/// Index of the station nearest to `p`; ties go to the lowest index.
pub fn nearest_station<S: Scalar>(stations: &[BaseStation<S>], p: &Point<S>) -> usize {
    let mut best = 0;
    let mut best_d = S::infinity();
    for (i, s) in stations.iter().enumerate() {
        let d = s.position.distance_sq(p);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Assigns every cell to its nearest station (Voronoi ranges).
pub fn assign_station_ranges<S: Scalar>(map: &mut SensingMap<S>) {
    for station in &mut map.stations {
        station.range.clear();
    }
    for cell in &map.cells {
        let owner = nearest_station(&map.stations, &cell.center);
        map.stations[owner].range.push(cell.index);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(cells: usize, stations: usize, total: f64) -> MapParams<f64> {
        MapParams {
            cells,
            stations,
            total_target: total,
            ..MapParams::default()
        }
    }

    #[test]
    fn basic_scenario_shape() {
        let map = generate_synthetic_map(&MapParams::<f64>::default(), 7).unwrap();
        assert_eq!(map.num_cells(), 64);
        assert_eq!(map.stations.len(), 4);
        assert!((map.total_target() - 20_000.0).abs() < 0.5);
        assert!((map.cell_pitch() - 200.0).abs() < 1e-9);
        assert!(map.stations.iter().all(|s| s.range.len() == 16));
    }

    #[test]
    fn single_cell_takes_whole_total() {
        let map = generate_synthetic_map(&params(1, 1, 100.0), 3).unwrap();
        assert_eq!(map.cells[0].target, 100.0);
        assert_eq!(map.stations[0].range, vec![0]);
    }

    #[test]
    fn same_seed_same_map() {
        let p = MapParams {
            beta_shape: (1.0, 1.0),
            ..params(4, 1, 50.0)
        };
        assert_eq!(
            generate_synthetic_map(&p, 11).unwrap(),
            generate_synthetic_map(&p, 11).unwrap()
        );
        assert_ne!(
            generate_synthetic_map(&p, 11).unwrap().targets(),
            generate_synthetic_map(&p, 12).unwrap().targets()
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(
            generate_synthetic_map(&params(10, 1, 1.0), 0),
            Err(ScenarioError::NonSquareGrid(10))
        );
        assert_eq!(
            generate_synthetic_map(&params(4, 5, 1.0), 0),
            Err(ScenarioError::TooManyStations {
                stations: 5,
                cells: 4
            })
        );
        assert!(matches!(
            generate_synthetic_map(&params(4, 1, 0.0), 0),
            Err(ScenarioError::NonPositiveTarget(_))
        ));
    }

    fn corner_map(stations: Vec<Point<f64>>) -> SensingMap<f64> {
        let cells = [(0.5, 0.5), (9.5, 0.5), (0.5, 9.5), (9.5, 9.5)]
            .iter()
            .enumerate()
            .map(|(index, &(x, y))| Cell {
                index,
                center: Point::new(x, y),
                target: 1.0,
            })
            .collect();
        SensingMap::new(10.0, cells, stations, TimeStructure::default()).unwrap()
    }

    #[test]
    fn single_station_owns_everything() {
        let map = corner_map(vec![Point::new(3.0, 7.0)]);
        assert_eq!(map.stations[0].range, vec![0, 1, 2, 3]);
    }

    #[test]
    fn opposite_corner_stations_split_by_distance() {
        let map = corner_map(vec![Point::new(0.0, 0.0), Point::new(10.0, 10.0)]);
        // Brute force: owner of each cell is the strictly nearer station; the
        // two off-diagonal cells are equidistant and go to station 0.
        for cell in &map.cells {
            let d0 = cell.center.distance(&map.stations[0].position);
            let d1 = cell.center.distance(&map.stations[1].position);
            let owner = if d1 < d0 { 1 } else { 0 };
            assert!(map.stations[owner].range.contains(&cell.index));
        }
        assert_eq!(map.stations[0].range, vec![0, 1, 2]);
        assert_eq!(map.stations[1].range, vec![3]);
    }

    #[test]
    fn two_stations_two_nearer_cells_each() {
        let map = corner_map(vec![Point::new(5.0, 0.0), Point::new(5.0, 10.0)]);
        assert_eq!(map.stations[0].range, vec![0, 1]);
        assert_eq!(map.stations[1].range, vec![2, 3]);
    }

    #[test]
    fn equidistant_cell_goes_to_lowest_station() {
        let cells = vec![Cell {
            index: 0,
            center: Point::new(5.0, 5.0),
            target: 1.0,
        }];
        let map = SensingMap::new(
            10.0,
            cells,
            vec![Point::new(0.0, 5.0), Point::new(10.0, 5.0)],
            TimeStructure::default(),
        )
        .unwrap();
        assert_eq!(map.stations[0].range, vec![0]);
        assert!(map.stations[1].range.is_empty());
    }

    #[test]
    fn station_sub_grid_layout() {
        let s = station_grid::<f64>(4, 1600.0);
        assert_eq!(
            s,
            vec![
                Point::new(400.0, 400.0),
                Point::new(1200.0, 400.0),
                Point::new(400.0, 1200.0),
                Point::new(1200.0, 1200.0)
            ]
        );
        assert_eq!(station_grid::<f64>(1, 10.0), vec![Point::new(5.0, 5.0)]);
        assert_eq!(station_grid::<f64>(2, 800.0).len(), 2);
    }

    #[test]
    fn json_round_trip_preserves_map() {
        let map = generate_synthetic_map(&params(16, 2, 500.0), 5).unwrap();
        let text = map.to_json().unwrap();
        assert_eq!(SensingMap::<f64>::from_json(&text).unwrap(), map);
    }

    #[test]
    fn json_rejects_overlapping_ranges() {
        let mut map = generate_synthetic_map(&params(4, 2, 10.0), 5).unwrap();
        let stolen = map.stations[0].range[0];
        map.stations[1].range.push(stolen);
        let text = map.to_json().unwrap();
        assert!(SensingMap::<f64>::from_json(&text).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let p = MapParams::<f32> {
            cells: 16,
            stations: 2,
            total_target: 1000.0,
            ..MapParams::default()
        };
        let map = generate_synthetic_map(&p, 9).unwrap();
        assert!((map.total_target() - 1000.0).abs() < 1e-2);
    }
}

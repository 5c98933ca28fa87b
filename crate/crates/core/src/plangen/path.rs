use rand::Rng;

use super::PlanError;
use crate::scalar::Scalar;
use crate::scenario::{BaseStation, Point, SensingMap};

/// Picks `k` cells of the station's range: the first uniformly at random,
/// then repeatedly the unvisited range cell nearest to the previous pick
/// (ties to the lowest cell index).
pub fn select_visited_cells<S: Scalar, R: Rng + ?Sized>(
    map: &SensingMap<S>,
    station: &BaseStation<S>,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>, PlanError> {
    let range = &station.range;
    if k == 0 || k > range.len() {
        return Err(PlanError::TooManyCells {
            requested: k,
            available: range.len(),
            station: station.index,
        });
    }
    let mut remaining: Vec<usize> = range.clone();
    remaining.sort_unstable();
    let first = remaining.remove(rng.random_range(0..remaining.len()));
    let mut picked = vec![first];
    while picked.len() < k {
        let last = map.cell_center(*picked.last().expect("non-empty"));
        let (pos, _) = nearest(&remaining, |n| map.cell_center(n).distance(&last));
        picked.push(remaining.remove(pos));
    }
    Ok(picked)
}

/// Position in `candidates` of the element minimizing `dist`; candidates are
/// scanned in order so ties resolve to the earliest (lowest index when
/// sorted).
fn nearest<S: Scalar>(candidates: &[usize], dist: impl Fn(usize) -> S) -> (usize, S) {
    let mut best = (0, S::infinity());
    for (i, &n) in candidates.iter().enumerate() {
        let d = dist(n);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// A closed tour from a base station through a set of cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Tour<S> {
    /// Cells in visiting order; the station is implicit at both ends.
    pub order: Vec<usize>,
    /// Meters.
    pub length: S,
    /// Seconds of flight, hovering excluded.
    pub flight_time: S,
}

/// Nearest-neighbour tour that starts and ends at `start`.
pub fn shortest_tour<S: Scalar>(
    map: &SensingMap<S>,
    start: Point<S>,
    cells: &[usize],
    speed: S,
) -> Tour<S> {
    let mut remaining: Vec<usize> = cells.to_vec();
    remaining.sort_unstable();
    remaining.dedup();
    let mut order = Vec::with_capacity(remaining.len());
    let mut here = start;
    let mut length = S::zero();
    while !remaining.is_empty() {
        let (pos, d) = nearest(&remaining, |n| map.cell_center(n).distance(&here));
        let n = remaining.remove(pos);
        length += d;
        here = map.cell_center(n);
        order.push(n);
    }
    length += here.distance(&start);
    Tour {
        order,
        length,
        flight_time: if length > S::zero() {
            length / speed
        } else {
            S::zero()
        },
    }
}

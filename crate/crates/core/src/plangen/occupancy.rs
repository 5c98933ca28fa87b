use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::scalar::{from_usize, to_f64, Scalar};
use crate::scenario::{Point, SensingMap};

/// One leg of a mission timeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment<S> {
    Travel { seconds: S },
    Hover { cell: usize, seconds: S },
}

impl<S: Scalar> Segment<S> {
    pub fn seconds(&self) -> S {
        match *self {
            Segment::Travel { seconds } | Segment::Hover { seconds, .. } => seconds,
        }
    }
}

/// Continuous mission timeline starting at time zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MissionSchedule<S> {
    pub segments: Vec<Segment<S>>,
}

impl<S: Scalar> MissionSchedule<S> {
    /// Tour from `start` through `path` and back, hovering `hover[i]` seconds
    /// at `path[i]` on arrival.
    pub fn from_tour(
        map: &SensingMap<S>,
        start: Point<S>,
        path: &[usize],
        hover: &[S],
        speed: S,
    ) -> Self {
        let mut segments = Vec::with_capacity(2 * path.len() + 1);
        let mut here = start;
        let leg = |a: &Point<S>, b: &Point<S>| {
            let d = a.distance(b);
            if d > S::zero() {
                d / speed
            } else {
                S::zero()
            }
        };
        for (&n, &h) in path.iter().zip(hover) {
            let next = map.cell_center(n);
            segments.push(Segment::Travel {
                seconds: leg(&here, &next),
            });
            segments.push(Segment::Hover {
                cell: n,
                seconds: h,
            });
            here = next;
        }
        segments.push(Segment::Travel {
            seconds: leg(&here, &start),
        });
        Self { segments }
    }

    pub fn duration(&self) -> S {
        self.segments.iter().map(Segment::seconds).sum()
    }
}

/// Binary `M x N` occupancy stored row-wise: the cell a drone occupies in
/// each time unit, if any. At most one cell per unit by construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occupancy {
    units: Vec<Option<usize>>,
}

impl Occupancy {
    pub fn empty(units: usize) -> Self {
        Self {
            units: vec![None; units],
        }
    }

    pub fn from_units(units: Vec<Option<usize>>) -> Self {
        Self { units }
    }

    pub fn horizon(&self) -> usize {
        self.units.len()
    }

    pub fn cell_at(&self, unit: usize) -> Option<usize> {
        self.units.get(unit).copied().flatten()
    }

    /// `(unit, cell)` pairs with `h[unit][cell] = 1`.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.units
            .iter()
            .enumerate()
            .filter_map(|(m, c)| c.map(|n| (m, n)))
    }

    pub fn occupied_units(&self) -> usize {
        self.units.iter().filter(|c| c.is_some()).count()
    }

    pub fn to_matrix(&self, cells: usize) -> Vec<Vec<u8>> {
        self.units
            .iter()
            .map(|c| {
                let mut row = vec![0u8; cells];
                if let Some(n) = c {
                    row[*n] = 1;
                }
                row
            })
            .collect()
    }
}

/// Discretizes a schedule into `horizon` units of `unit_length` seconds: a
/// unit is assigned the cell hovered over for the plurality of the unit,
/// where travel and idle time also compete; ties among cells go to the lowest
/// cell index and a cell must strictly beat travel and idle time.
pub fn build_occupancy<S: Scalar>(
    schedule: &MissionSchedule<S>,
    unit_length: S,
    horizon: usize,
) -> Result<Occupancy, PlanError> {
    let capacity = from_usize::<S>(horizon) * unit_length;
    let duration = schedule.duration();
    let slack = capacity * S::epsilon() * from_usize::<S>(16);
    if duration > capacity + slack {
        return Err(PlanError::ScheduleOverrun {
            duration: to_f64(duration),
            horizon: to_f64(capacity),
        });
    }

    let mut hover: Vec<Vec<(usize, S)>> = vec![Vec::new(); horizon];
    let mut travel: Vec<S> = vec![S::zero(); horizon];
    let mut t = S::zero();
    for seg in &schedule.segments {
        let end = t + seg.seconds();
        if seg.seconds() > S::zero() {
            let first = (t / unit_length).floor().to_usize().unwrap_or(0);
            let mut m = first;
            while m < horizon {
                let lo = from_usize::<S>(m) * unit_length;
                let hi = lo + unit_length;
                if lo >= end {
                    break;
                }
                let overlap = end.min(hi) - t.max(lo);
                if overlap > S::zero() {
                    match *seg {
                        Segment::Travel { .. } => travel[m] += overlap,
                        Segment::Hover { cell, .. } => {
                            match hover[m].iter_mut().find(|(c, _)| *c == cell) {
                                Some((_, acc)) => *acc += overlap,
                                None => hover[m].push((cell, overlap)),
                            }
                        }
                    }
                }
                m += 1;
            }
        }
        t = end;
    }

    let units = (0..horizon)
        .map(|m| {
            let mut best: Option<(usize, S)> = None;
            for &(cell, secs) in &hover[m] {
                let better = match best {
                    None => true,
                    Some((bc, bs)) => secs > bs || (secs == bs && cell < bc),
                };
                if better {
                    best = Some((cell, secs));
                }
            }
            let (cell, secs) = best?;
            let used: S = hover[m].iter().map(|&(_, s)| s).sum::<S>() + travel[m];
            let idle = (unit_length - used).max(S::zero());
            (secs > travel[m] && secs > idle).then_some(cell)
        })
        .collect();
    Ok(Occupancy { units })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hover(cell: usize, seconds: f64) -> Segment<f64> {
        Segment::Hover { cell, seconds }
    }

    fn travel(seconds: f64) -> Segment<f64> {
        Segment::Travel { seconds }
    }

    #[test]
    fn two_full_units_of_hover() {
        let s = MissionSchedule {
            segments: vec![travel(10.0), hover(3, 20.0), travel(10.0)],
        };
        let occ = build_occupancy(&s, 10.0, 4).unwrap();
        assert_eq!(occ.occupied().collect::<Vec<_>>(), vec![(1, 3), (2, 3)]);
        assert_eq!(occ.to_matrix(5)[1], vec![0, 0, 0, 1, 0]);
    }

    #[test]
    fn no_hover_no_occupancy() {
        let s = MissionSchedule {
            segments: vec![travel(25.0), hover(1, 0.0), travel(25.0)],
        };
        let occ = build_occupancy(&s, 10.0, 6).unwrap();
        assert_eq!(occ.occupied_units(), 0);
    }

    #[test]
    fn plurality_marks_partial_unit() {
        // 1.6 units of hover from a unit boundary, then the return flight.
        let s = MissionSchedule {
            segments: vec![travel(0.0), hover(2, 16.0), travel(4.0)],
        };
        let occ = build_occupancy(&s, 10.0, 2).unwrap();
        assert_eq!(occ.occupied().collect::<Vec<_>>(), vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn travel_plurality_marks_nothing() {
        let s = MissionSchedule {
            segments: vec![hover(0, 3.0), travel(7.0)],
        };
        let occ = build_occupancy(&s, 10.0, 1).unwrap();
        assert_eq!(occ.cell_at(0), None);
    }

    #[test]
    fn overrun_is_rejected() {
        let s = MissionSchedule {
            segments: vec![hover(0, 25.0)],
        };
        assert!(matches!(
            build_occupancy(&s, 10.0, 2),
            Err(PlanError::ScheduleOverrun { .. })
        ));
    }
}

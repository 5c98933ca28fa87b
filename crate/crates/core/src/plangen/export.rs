use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Plan, PlanError};
use crate::scalar::Scalar;

/// One exported plan: `agent,plan,visited,flight_time,sensing,cost`.
///
/// `visited` lists `J_u` in selection order as `n;n;...`; `sensing` is the
/// sparse sensing vector as `n:value;...` sorted by cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub agent: usize,
    pub plan: usize,
    pub visited: String,
    pub flight_time: f64,
    pub sensing: String,
    pub cost: f64,
}

impl PlanRecord {
    pub fn from_plan<S: Scalar>(agent: usize, plan: &Plan<S>) -> Self {
        let visited = plan
            .visited
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let sensing = plan
            .sensing
            .iter()
            .map(|(n, v)| format!("{n}:{}", v.to_f64().unwrap_or(f64::NAN)))
            .collect::<Vec<_>>()
            .join(";");
        Self {
            agent,
            plan: plan.index,
            visited,
            flight_time: plan.flight_time.to_f64().unwrap_or(f64::NAN),
            sensing,
            cost: plan.cost.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn visited_cells(&self) -> Result<Vec<usize>, PlanError> {
        if self.visited.is_empty() {
            return Ok(Vec::new());
        }
        self.visited
            .split(';')
            .map(|s| {
                s.parse()
                    .map_err(|_| PlanError::Export(format!("bad cell `{s}`")))
            })
            .collect()
    }

    pub fn sensing_entries(&self) -> Result<Vec<(usize, f64)>, PlanError> {
        if self.sensing.is_empty() {
            return Ok(Vec::new());
        }
        self.sensing
            .split(';')
            .map(|entry| {
                let bad = || PlanError::Export(format!("bad sensing entry `{entry}`"));
                let (n, v) = entry.split_once(':').ok_or_else(bad)?;
                Ok((n.parse().map_err(|_| bad())?, v.parse().map_err(|_| bad())?))
            })
            .collect()
    }
}

pub fn write_plans_csv<'a, W, S, I>(writer: W, rows: I) -> Result<(), PlanError>
where
    W: Write,
    S: Scalar,
    I: IntoIterator<Item = (usize, &'a Plan<S>)>,
{
    let mut out = csv::Writer::from_writer(writer);
    for (agent, plan) in rows {
        out.serialize(PlanRecord::from_plan(agent, plan))
            .map_err(|e| PlanError::Export(e.to_string()))?;
    }
    out.flush().map_err(|e| PlanError::Export(e.to_string()))
}

pub fn read_plans_csv<R: Read>(reader: R) -> Result<Vec<PlanRecord>, PlanError> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(|e| PlanError::Export(e.to_string())))
        .collect()
}

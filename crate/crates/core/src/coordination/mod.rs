//! Collective plan selection over a balanced binary tree of agents.

mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plangen::{Occupancy, Plan};
use crate::rng::{derive_seed, Stream};
use crate::scalar::{lit, Scalar};

pub use tree::{build_balanced_tree, TreeTopology};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoordinationError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("target vector is all zero")]
    ZeroTarget,
    #[error("beta must lie in [0, 1], got {0}")]
    InvalidBeta(f64),
    #[error("no agents")]
    NoAgents,
    #[error("agent {0} has no plans")]
    NoPlans(usize),
    #[error("iterations and repetitions must be at least 1")]
    InvalidIterations,
    #[error("plan of agent {agent} senses cell {cell} outside the map")]
    CellOutOfRange { agent: usize, cell: usize },
}

/// A drone's local agent: its candidate plans and their normalized costs.
#[derive(Clone, Debug)]
pub struct AgentState<S> {
    pub id: usize,
    pub plans: Vec<Plan<S>>,
    /// Plan costs min-max normalized over this agent's plans.
    pub local_costs: Vec<S>,
    /// Position in `plans` of the selected plan.
    pub selected: usize,
}

impl<S: Scalar> AgentState<S> {
    pub fn new(id: usize, plans: Vec<Plan<S>>) -> Result<Self, CoordinationError> {
        if plans.is_empty() {
            return Err(CoordinationError::NoPlans(id));
        }
        let local_costs = normalize_costs(&plans.iter().map(|p| p.cost).collect::<Vec<_>>());
        Ok(Self {
            id,
            plans,
            local_costs,
            selected: 0,
        })
    }

    pub fn selected_plan(&self) -> &Plan<S> {
        &self.plans[self.selected]
    }

    /// Position of the cheapest plan, lowest position on ties.
    pub fn min_cost_plan(&self) -> usize {
        argmin(self.local_costs.iter().copied())
    }
}

/// Min-max normalization to `[0, 1]`; constant inputs map to zeros.
pub fn normalize_costs<S: Scalar>(costs: &[S]) -> Vec<S> {
    let lo = costs.iter().copied().fold(S::infinity(), S::min);
    let hi = costs.iter().copied().fold(S::neg_infinity(), S::max);
    let span = hi - lo;
    costs
        .iter()
        .map(|&c| {
            if span > S::zero() {
                (c - lo) / span
            } else {
                S::zero()
            }
        })
        .collect()
}

fn argmin<S: Scalar>(values: impl Iterator<Item = S>) -> usize {
    let mut best = (0, S::infinity());
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// The aggregate all agents agree on after a top-down pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalResponse<S> {
    pub aggregate: Vec<S>,
    pub rss: S,
}

/// RSS between the unit-length scaled aggregate and target. An all-zero
/// aggregate is left as the zero vector, which scores 1.
pub fn global_cost<S: Scalar>(aggregate: &[S], target: &[S]) -> Result<S, CoordinationError> {
    if aggregate.len() != target.len() {
        return Err(CoordinationError::DimensionMismatch {
            expected: target.len(),
            found: aggregate.len(),
        });
    }
    let tn = l2(target);
    if tn <= S::zero() {
        return Err(CoordinationError::ZeroTarget);
    }
    let an = l2(aggregate);
    Ok(aggregate
        .iter()
        .zip(target)
        .map(|(&a, &t)| {
            let a = if an > S::zero() { a / an } else { S::zero() };
            let d = a - t / tn;
            d * d
        })
        .sum())
}

fn l2<S: Scalar>(v: &[S]) -> S {
    v.iter().map(|&x| x * x).sum::<S>().sqrt()
}

/// Unit target with precomputed plan statistics for fast evaluation of
/// `global_cost(others + plan)` from sparse plans.
struct Evaluator<S> {
    unit_target: Vec<S>,
    /// Per agent, per plan: (squared norm, dot with the unit target).
    stats: Vec<Vec<(S, S)>>,
}

impl<S: Scalar> Evaluator<S> {
    fn new(agents: &[AgentState<S>], target: &[S]) -> Result<Self, CoordinationError> {
        let tn = l2(target);
        if tn <= S::zero() {
            return Err(CoordinationError::ZeroTarget);
        }
        let unit_target: Vec<S> = target.iter().map(|&t| t / tn).collect();
        let mut stats = Vec::with_capacity(agents.len());
        for a in agents {
            let mut per = Vec::with_capacity(a.plans.len());
            for p in &a.plans {
                let mut sq = S::zero();
                let mut dot = S::zero();
                for &(n, v) in &p.sensing {
                    let t = *unit_target.get(n).ok_or(CoordinationError::CellOutOfRange {
                        agent: a.id,
                        cell: n,
                    })?;
                    sq += v * v;
                    dot += v * t;
                }
                per.push((sq, dot));
            }
            stats.push(per);
        }
        Ok(Self { unit_target, stats })
    }

    /// Squared norm and target dot product of a dense vector.
    fn moments(&self, v: &[S]) -> (S, S) {
        v.iter()
            .zip(&self.unit_target)
            .fold((S::zero(), S::zero()), |(sq, dot), (&x, &t)| {
                (sq + x * x, dot + x * t)
            })
    }

    /// Global cost of `others + plan` where `others` has the given moments.
    fn cost_with(&self, agent: usize, plan: &Plan<S>, idx: usize, others: &[S], om: (S, S)) -> S {
        let (psq, pdot) = self.stats[agent][idx];
        let cross: S = plan.sensing.iter().map(|&(n, v)| others[n] * v).sum();
        let sq = om.0 + lit::<S>(2.0) * cross + psq;
        cost_from_moments(sq, om.1 + pdot)
    }
}

/// `|a/|a| - t|^2 = 2 - 2 (a.t)/|a|` for unit `t`; 1 when `a = 0`.
fn cost_from_moments<S: Scalar>(sq: S, dot: S) -> S {
    if sq <= S::zero() {
        return S::one();
    }
    (lit::<S>(2.0) - lit::<S>(2.0) * dot / sq.sqrt()).max(S::zero())
}

fn check_beta<S: Scalar>(beta: S) -> Result<(), CoordinationError> {
    if beta >= S::zero() && beta <= S::one() {
        Ok(())
    } else {
        Err(CoordinationError::InvalidBeta(beta.to_f64().unwrap_or(f64::NAN)))
    }
}

/// Plan minimizing `(1 - beta) * global + beta * local` given the summed
/// sensing of all other agents; ties go to the lowest plan position.
pub fn select_plan<S: Scalar>(
    agent: &AgentState<S>,
    others_aggregate: &[S],
    target: &[S],
    beta: S,
) -> Result<usize, CoordinationError> {
    check_beta(beta)?;
    if others_aggregate.len() != target.len() {
        return Err(CoordinationError::DimensionMismatch {
            expected: target.len(),
            found: others_aggregate.len(),
        });
    }
    let eval = Evaluator::new(std::slice::from_ref(agent), target)?;
    let om = eval.moments(others_aggregate);
    Ok(best_plan(&eval, 0, agent, others_aggregate, om, beta).0)
}

/// Returns (position, blended cost, global cost) of the best plan.
fn best_plan<S: Scalar>(
    eval: &Evaluator<S>,
    slot: usize,
    agent: &AgentState<S>,
    others: &[S],
    om: (S, S),
    beta: S,
) -> (usize, S, S) {
    let mut best = (0, S::infinity(), S::infinity());
    for (i, plan) in agent.plans.iter().enumerate() {
        let g = eval.cost_with(slot, plan, i, others, om);
        let b = (S::one() - beta) * g + beta * agent.local_costs[i];
        if b < best.1 {
            best = (i, b, g);
        }
    }
    best
}

/// Result of one repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct RepetitionOutcome<S> {
    /// Selected plan position per agent (indexed like the agent slice).
    pub selections: Vec<usize>,
    /// Global cost after each iteration.
    pub rss_trace: Vec<S>,
    pub response: GlobalResponse<S>,
}

impl<S: Scalar> RepetitionOutcome<S> {
    pub fn final_rss(&self) -> S {
        self.response.rss
    }
}

fn validate<S: Scalar>(agents: &[AgentState<S>], target: &[S], beta: S, iterations: usize) -> Result<(), CoordinationError> {
    check_beta(beta)?;
    if agents.is_empty() {
        return Err(CoordinationError::NoAgents);
    }
    if iterations == 0 {
        return Err(CoordinationError::InvalidIterations);
    }
    for a in agents {
        if a.plans.is_empty() {
            return Err(CoordinationError::NoPlans(a.id));
        }
    }
    if l2(target) <= S::zero() {
        return Err(CoordinationError::ZeroTarget);
    }
    Ok(())
}

/// Exact sum of the selected plans' sensing vectors.
pub fn aggregate_of<S: Scalar>(agents: &[AgentState<S>], selections: &[usize], cells: usize) -> Vec<S> {
    let mut acc = vec![S::zero(); cells];
    for (a, &s) in agents.iter().zip(selections) {
        a.plans[s].accumulate_into(&mut acc, S::one());
    }
    acc
}

/// One repetition on a fixed tree.
///
/// The first iteration initializes bottom-up: each agent selects against the
/// summed selections of its subtree children. Every later iteration lets
/// agents, leaves first, re-select against the current aggregate of all other
/// agents; a switch happens only when it lowers both the blended and the
/// global cost. After each iteration the root recomputes the aggregate from
/// the selections and broadcasts it.
pub fn run_repetition<S: Scalar>(
    agents: &[AgentState<S>],
    tree: &TreeTopology,
    target: &[S],
    beta: S,
    iterations: usize,
) -> Result<RepetitionOutcome<S>, CoordinationError> {
    validate(agents, target, beta, iterations)?;
    if tree.len() != agents.len() {
        return Err(CoordinationError::DimensionMismatch {
            expected: agents.len(),
            found: tree.len(),
        });
    }
    let eval = Evaluator::new(agents, target)?;
    Ok(repetition(agents, &eval, tree, target, beta, iterations))
}

fn repetition<S: Scalar>(
    agents: &[AgentState<S>],
    eval: &Evaluator<S>,
    tree: &TreeTopology,
    target: &[S],
    beta: S,
    iterations: usize,
) -> RepetitionOutcome<S> {
    let cells = target.len();
    let tol = lit::<S>(1e-12).max(lit::<S>(4.0) * S::epsilon());
    let mut selections = vec![0usize; agents.len()];
    let mut trace = Vec::with_capacity(iterations);

    // Initialization: subtree summaries flow upward.
    let mut subtree: Vec<Vec<S>> = vec![Vec::new(); tree.len()];
    for pos in tree.bottom_up() {
        let mut acc = vec![S::zero(); cells];
        for c in tree.children(pos) {
            for (x, y) in acc.iter_mut().zip(&subtree[c]) {
                *x += *y;
            }
            subtree[c] = Vec::new();
        }
        let a = tree.agent_at(pos);
        let om = eval.moments(&acc);
        let (choice, _, _) = best_plan(eval, a, &agents[a], &acc, om, beta);
        selections[a] = choice;
        agents[a].plans[choice].accumulate_into(&mut acc, S::one());
        subtree[pos] = acc;
    }
    let mut aggregate = aggregate_of(agents, &selections, cells);
    let mut rss = exact_cost(eval, &aggregate);
    trace.push(rss);

    for _ in 1..iterations {
        if sweep(agents, eval, tree, beta, tol, &mut aggregate, &mut selections) {
            aggregate = aggregate_of(agents, &selections, cells);
            rss = exact_cost(eval, &aggregate);
        }
        trace.push(rss);
    }

    RepetitionOutcome {
        selections,
        rss_trace: trace,
        response: GlobalResponse { aggregate, rss },
    }
}

/// Leaves-first pass in which every agent re-selects against the current
/// aggregate of all others, switching only when both its blended cost and
/// the global cost drop by more than `tol`. Returns whether anything changed.
fn sweep<S: Scalar>(
    agents: &[AgentState<S>],
    eval: &Evaluator<S>,
    tree: &TreeTopology,
    beta: S,
    tol: S,
    aggregate: &mut [S],
    selections: &mut [usize],
) -> bool {
    let mut changed = false;
    let mut others = vec![S::zero(); aggregate.len()];
    for pos in tree.bottom_up() {
        let a = tree.agent_at(pos);
        let agent = &agents[a];
        let cur = selections[a];
        others.copy_from_slice(aggregate);
        agent.plans[cur].accumulate_into(&mut others, -S::one());
        let om = eval.moments(&others);
        let (choice, blended, global) = best_plan(eval, a, agent, &others, om, beta);
        if choice == cur {
            continue;
        }
        let cur_global = eval.cost_with(a, &agent.plans[cur], cur, &others, om);
        let cur_blended = (S::one() - beta) * cur_global + beta * agent.local_costs[cur];
        if blended < cur_blended - tol && global < cur_global - tol {
            selections[a] = choice;
            agent.plans[cur].accumulate_into(aggregate, -S::one());
            agent.plans[choice].accumulate_into(aggregate, S::one());
            changed = true;
        }
    }
    changed
}

fn exact_cost<S: Scalar>(eval: &Evaluator<S>, aggregate: &[S]) -> S {
    let (sq, dot) = eval.moments(aggregate);
    cost_from_moments(sq, dot)
}

/// Best of several repetitions.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinationOutcome<S> {
    pub selections: Vec<usize>,
    pub rss_trace: Vec<S>,
    pub response: GlobalResponse<S>,
    /// Repetition that produced the result (0-based).
    pub best_repetition: usize,
    /// Final global cost of every repetition.
    pub repetition_rss: Vec<S>,
}

impl<S: Scalar> CoordinationOutcome<S> {
    pub fn final_rss(&self) -> S {
        self.response.rss
    }
}

/// Parameters of a coordination run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinationConfig<S> {
    pub beta: S,
    pub iterations: usize,
    pub repetitions: usize,
}

impl<S: Scalar> Default for CoordinationConfig<S> {
    fn default() -> Self {
        Self {
            beta: S::zero(),
            iterations: 40,
            repetitions: 40,
        }
    }
}

/// Runs `repetitions` independent repetitions, each on a tree shuffled from
/// its own seed, and keeps the one with the lowest final global cost (lowest
/// repetition on ties). Writes the winning selections into `agents`.
pub fn run_coordination<S: Scalar>(
    agents: &mut [AgentState<S>],
    target: &[S],
    config: &CoordinationConfig<S>,
    seed: u64,
) -> Result<CoordinationOutcome<S>, CoordinationError> {
    validate(agents, target, config.beta, config.iterations)?;
    if config.repetitions == 0 {
        return Err(CoordinationError::InvalidIterations);
    }
    let eval = Evaluator::new(agents, target)?;
    let shared: &[AgentState<S>] = agents;
    let runs: Vec<RepetitionOutcome<S>> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            let tree = TreeTopology::balanced(shared.len(), derive_seed(seed, Stream::Tree, r as u64));
            repetition(shared, &eval, &tree, target, config.beta, config.iterations)
        })
        .collect();
    let repetition_rss: Vec<S> = runs.iter().map(|r| r.final_rss()).collect();
    let best = argmin(repetition_rss.iter().copied());
    let winner = runs.into_iter().nth(best).expect("at least one repetition");
    for (a, &s) in agents.iter_mut().zip(&winner.selections) {
        a.selected = s;
    }
    Ok(CoordinationOutcome {
        selections: winner.selections,
        rss_trace: winner.rss_trace,
        response: winner.response,
        best_repetition: best,
        repetition_rss,
    })
}

/// Simultaneous presence of more than one drone in a cell.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictReport {
    /// Number of `(unit, cell)` pairs with more than one drone.
    pub count: usize,
    /// `(unit, cell, drones)` for each conflict, sorted.
    pub conflicts: Vec<(usize, usize, usize)>,
}

/// Counts conflicts among occupancies placed on a shared timeline; each entry
/// is the global unit at which the occupancy starts.
pub fn occupancy_conflicts<'a, I>(placed: I) -> ConflictReport
where
    I: IntoIterator<Item = (usize, &'a Occupancy)>,
{
    let mut hits: std::collections::BTreeMap<(usize, usize), usize> = Default::default();
    for (start, occ) in placed {
        for (m, n) in occ.occupied() {
            *hits.entry((start + m, n)).or_default() += 1;
        }
    }
    let conflicts: Vec<_> = hits
        .into_iter()
        .filter(|&(_, c)| c > 1)
        .map(|((m, n), c)| (m, n, c))
        .collect();
    ConflictReport {
        count: conflicts.len(),
        conflicts,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn plan(index: usize, sensing: Vec<(usize, f64)>, cost: f64) -> Plan<f64> {
        Plan {
            index,
            station: 0,
            visited: sensing.iter().map(|&(n, _)| n).collect(),
            path: sensing.iter().map(|&(n, _)| n).collect(),
            flight_time: 0.0,
            utilization: 1.0,
            flight_energy: 0.0,
            hover_energy: 0.0,
            sensing,
            occupancy: Occupancy::empty(0),
            cost,
        }
    }

    fn agent(id: usize, plans: Vec<Plan<f64>>) -> AgentState<f64> {
        AgentState::new(id, plans).unwrap()
    }

    /// Exhaustive minimum of the global cost over all selection combinations.
    pub(crate) fn brute_force(agents: &[AgentState<f64>], target: &[f64]) -> (f64, Vec<usize>) {
        let mut best = (f64::INFINITY, Vec::new());
        let mut sel = vec![0usize; agents.len()];
        loop {
            let agg = aggregate_of(agents, &sel, target.len());
            let c = global_cost(&agg, target).unwrap();
            if c < best.0 {
                best = (c, sel.clone());
            }
            let mut i = 0;
            loop {
                if i == sel.len() {
                    return best;
                }
                sel[i] += 1;
                if sel[i] < agents[i].plans.len() {
                    break;
                }
                sel[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn scaled_target_costs_nothing() {
        let t = [3.0, 1.0, 2.0];
        let a: Vec<f64> = t.iter().map(|x| x * 7.5).collect();
        assert!(global_cost(&a, &t).unwrap().abs() < 1e-15);
        assert_eq!(global_cost(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_costs_two() {
        assert!((global_cost(&[0.0f64, 1.0], &[1.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_aggregate_costs_one() {
        assert_eq!(global_cost(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 1.0);
    }

    #[test]
    fn cost_errors() {
        assert!(matches!(
            global_cost(&[1.0], &[1.0, 2.0]),
            Err(CoordinationError::DimensionMismatch { .. })
        ));
        assert_eq!(global_cost(&[1.0, 2.0], &[0.0, 0.0]), Err(CoordinationError::ZeroTarget));
    }

    #[test]
    fn fast_cost_matches_dense() {
        let agents = vec![agent(0, vec![plan(1, vec![(0, 2.0), (2, 1.5)], 1.0)])];
        let target = [4.0, 1.0, 3.0];
        let others = [1.0, 0.5, 0.0];
        let eval = Evaluator::new(&agents, &target).unwrap();
        let fast = eval.cost_with(0, &agents[0].plans[0], 0, &others, eval.moments(&others));
        let dense = global_cost(&[3.0, 0.5, 1.5], &target).unwrap();
        assert!((fast - dense).abs() < 1e-14);
    }

    #[test]
    fn costs_normalized() {
        assert_eq!(normalize_costs(&[5.0, 1.0, 3.0]), vec![1.0, 0.0, 0.5]);
        assert_eq!(normalize_costs(&[2.0, 2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn beta_one_picks_cheapest() {
        let a = agent(
            0,
            vec![
                plan(1, vec![(0, 10.0)], 9.0),
                plan(2, vec![(1, 10.0)], 2.0),
                plan(3, vec![(0, 5.0)], 2.0),
            ],
        );
        assert_eq!(select_plan(&a, &[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap(), 1);
        assert_eq!(a.min_cost_plan(), 1);
    }

    #[test]
    fn beta_zero_completes_the_residual() {
        let a = agent(
            0,
            vec![plan(1, vec![(0, 3.0)], 0.0), plan(2, vec![(1, 2.0)], 5.0)],
        );
        // Others already cover cell 0 in proportion; cell 1 is missing.
        assert_eq!(select_plan(&a, &[4.0, 0.0], &[2.0, 1.0], 0.0).unwrap(), 1);
    }

    #[test]
    fn select_matches_enumeration() {
        let a = agent(
            0,
            vec![plan(1, vec![(0, 1.0)], 1.0), plan(2, vec![(1, 1.0)], 0.0)],
        );
        for others in [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [1.0, 1.0]] {
            let target = [1.0, 2.0];
            let costs: Vec<f64> = a
                .plans
                .iter()
                .map(|p| {
                    let mut agg = others.to_vec();
                    p.accumulate_into(&mut agg, 1.0);
                    global_cost(&agg, &target).unwrap()
                })
                .collect();
            let expected = if costs[1] < costs[0] { 1 } else { 0 };
            assert_eq!(select_plan(&a, &others, &target, 0.0).unwrap(), expected);
        }
    }

    #[test]
    fn invalid_beta() {
        let a = agent(0, vec![plan(1, vec![(0, 1.0)], 1.0)]);
        assert!(matches!(
            select_plan(&a, &[0.0], &[1.0], 1.5),
            Err(CoordinationError::InvalidBeta(_))
        ));
    }

    #[test]
    fn single_agent_single_iteration_is_one_selection() {
        let agents = vec![agent(
            0,
            vec![plan(1, vec![(0, 1.0)], 1.0), plan(2, vec![(0, 1.0), (1, 1.0)], 0.0)],
        )];
        let target = [1.0, 1.0];
        let tree = TreeTopology::balanced(1, 0);
        let out = run_repetition(&agents, &tree, &target, 0.0, 1).unwrap();
        let direct = select_plan(&agents[0], &[0.0, 0.0], &target, 0.0).unwrap();
        assert_eq!(out.selections, vec![direct]);
        assert_eq!(out.rss_trace.len(), 1);
    }

    fn random_instance(seed: u64, agents: usize, plans: usize, cells: usize) -> (Vec<AgentState<f64>>, Vec<f64>) {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(seed);
        let target: Vec<f64> = (0..cells).map(|_| rng.random_range(0.1..10.0)).collect();
        let agents = (0..agents)
            .map(|u| {
                let ps = (0..plans)
                    .map(|p| {
                        let k = rng.random_range(1..=cells.min(3));
                        let mut cells_used: Vec<usize> = (0..cells).collect();
                        use rand::seq::SliceRandom;
                        cells_used.shuffle(&mut rng);
                        let mut s: Vec<(usize, f64)> = cells_used[..k]
                            .iter()
                            .map(|&n| (n, rng.random_range(0.5..6.0)))
                            .collect();
                        s.sort_by_key(|e| e.0);
                        plan(p + 1, s, rng.random_range(0.0..100.0))
                    })
                    .collect();
                agent(u, ps)
            })
            .collect();
        (agents, target)
    }

    #[test]
    fn trace_never_increases() {
        for seed in 0..40 {
            let (agents, target) = random_instance(seed, 25, 8, 12);
            for beta in [0.0, 0.3, 0.8] {
                let tree = TreeTopology::balanced(agents.len(), seed);
                let out = run_repetition(&agents, &tree, &target, beta, 15).unwrap();
                for w in out.rss_trace.windows(2) {
                    assert!(w[1] <= w[0], "{:?}", out.rss_trace);
                }
            }
        }
    }

    #[test]
    fn aggregate_matches_selections() {
        let (agents, target) = random_instance(3, 30, 6, 10);
        let tree = TreeTopology::balanced(agents.len(), 9);
        let out = run_repetition(&agents, &tree, &target, 0.0, 10).unwrap();
        let fresh = aggregate_of(&agents, &out.selections, target.len());
        for (a, b) in out.response.aggregate.iter().zip(&fresh) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
        let rss = global_cost(&fresh, &target).unwrap();
        assert!((rss - out.final_rss()).abs() < 1e-12);
    }

    #[test]
    fn beta_one_selects_cheapest_everywhere() {
        let (mut agents, target) = random_instance(11, 12, 5, 6);
        let cfg = CoordinationConfig {
            beta: 1.0,
            iterations: 5,
            repetitions: 3,
        };
        let out = run_coordination(&mut agents, &target, &cfg, 4).unwrap();
        for (a, &s) in agents.iter().zip(&out.selections) {
            assert_eq!(s, a.min_cost_plan());
            assert_eq!(a.selected, s);
        }
    }

    #[test]
    fn tiny_instance_bounded_by_oracle() {
        let (agents, target) = random_instance(5, 4, 2, 3);
        let (opt, _) = brute_force(&agents, &target);
        let tree = TreeTopology::balanced(4, 1);
        let out = run_repetition(&agents, &tree, &target, 0.0, 10).unwrap();
        assert!(out.final_rss() >= opt - 1e-12);
        // Mean cost of uniformly random selections.
        let mut total = 0.0;
        let mut count = 0.0;
        for mask in 0..16usize {
            let sel: Vec<usize> = (0..4).map(|i| (mask >> i) & 1).collect();
            total += global_cost(&aggregate_of(&agents, &sel, 3), &target).unwrap();
            count += 1.0;
        }
        assert!(out.final_rss() <= total / count + 1e-12);
    }

    #[test]
    fn near_optimal_on_small_instances() {
        let mut good = 0;
        for seed in 0..100 {
            let (mut agents, target) = random_instance(1000 + seed, 4, 4, 4);
            let (opt, _) = brute_force(&agents, &target);
            let cfg = CoordinationConfig {
                beta: 0.0,
                iterations: 10,
                repetitions: 40,
            };
            let out = run_coordination(&mut agents, &target, &cfg, seed).unwrap();
            assert!(out.final_rss() >= opt - 1e-12);
            if out.final_rss() <= 1.5 * opt + 1e-9 {
                good += 1;
            }
        }
        assert!(good >= 90, "{good}");
    }

    #[test]
    fn best_of_repetitions_and_determinism() {
        let (mut agents, target) = random_instance(8, 20, 6, 8);
        let cfg = CoordinationConfig {
            beta: 0.2,
            iterations: 8,
            repetitions: 6,
        };
        let a = run_coordination(&mut agents, &target, &cfg, 77).unwrap();
        let b = run_coordination(&mut agents, &target, &cfg, 77).unwrap();
        assert_eq!(a, b);
        for &r in &a.repetition_rss {
            assert!(a.final_rss() <= r);
        }
        let single = CoordinationConfig { repetitions: 1, ..cfg };
        let one = run_coordination(&mut agents, &target, &single, 77).unwrap();
        let tree = TreeTopology::balanced(agents.len(), derive_seed(77, Stream::Tree, 0));
        let direct = run_repetition(&agents, &tree, &target, 0.2, 8).unwrap();
        assert_eq!(one.selections, direct.selections);
        assert_eq!(one.rss_trace, direct.rss_trace);
    }

    #[test]
    fn f32_agents_coordinate() {
        let mk = |i, s: Vec<(usize, f32)>, c| Plan {
            index: i,
            station: 0,
            visited: vec![],
            path: vec![],
            flight_time: 0.0f32,
            utilization: 1.0,
            flight_energy: 0.0,
            hover_energy: 0.0,
            sensing: s,
            occupancy: Occupancy::empty(0),
            cost: c,
        };
        let mut agents = vec![
            AgentState::new(0, vec![mk(1, vec![(0, 1.0)], 1.0), mk(2, vec![(1, 1.0)], 0.0)]).unwrap(),
            AgentState::new(1, vec![mk(1, vec![(0, 1.0)], 1.0), mk(2, vec![(1, 1.0)], 0.0)]).unwrap(),
        ];
        let out = run_coordination(&mut agents, &[1.0f32, 1.0], &CoordinationConfig::default(), 1).unwrap();
        assert!(out.final_rss() < 1e-6);
    }

    #[test]
    fn conflicts_counted() {
        let a = Occupancy::from_units(vec![Some(1), Some(1), None]);
        let b = Occupancy::from_units(vec![Some(1), Some(1), Some(2)]);
        assert_eq!(occupancy_conflicts([(0, &a)]).count, 0);
        let r = occupancy_conflicts([(0, &a), (0, &b)]);
        assert_eq!(r.count, 2);
        assert_eq!(r.conflicts, vec![(0, 1, 2), (1, 1, 2)]);
        assert_eq!(occupancy_conflicts([(0, &a), (3, &b)]).count, 0);
    }
}

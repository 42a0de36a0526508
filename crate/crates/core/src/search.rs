//! Time-dependent shortest-time search.
//!
//! Label-setting search where each edge is costed at the moment its tail
//! node is settled, i.e. at the earliest arrival time there. No waiting at
//! nodes. Optimal when edge costs are FIFO (leaving later never arrives
//! earlier); [`SearchOptions::fifo_probe`] turns on a sampling check that
//! counts violations without stopping the search.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::cost::{edge_cost, CostModel, ProfileEvaluator, SerialEvaluator};
use crate::engine::EngineError;
use crate::grid::{Graph, NodeId};
use crate::profiles::DiveProfile;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("graph has no {0} terminal")]
    MissingTerminal(&'static str),

    #[error("no feasible path from start to goal")]
    NoPath,

    #[error("start time must be finite, got {0}")]
    InvalidStartTime(f64),

    #[error("exhaustive search limited to {limit} nodes, graph has {nodes}")]
    GraphTooLarge { nodes: usize, limit: usize },

    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// One flown edge of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub from: NodeId,
    pub to: NodeId,
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub departure: f64,
    pub travel_time: f64,
    pub profile: DiveProfile,
}

impl Leg {
    pub fn arrival(&self) -> f64 {
        self.departure + self.travel_time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub t0: f64,
    pub legs: Vec<Leg>,
    pub arrival: f64,
}

impl PathResult {
    pub fn total_time(&self) -> f64 {
        self.arrival - self.t0
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        let mut out: Vec<_> = self.legs.iter().map(|l| l.from).collect();
        out.extend(self.legs.last().map(|l| l.to));
        out
    }

    /// `(t, x, y)` at every node along the path.
    pub fn waypoints(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.legs.len() + 1);
        if let Some(first) = self.legs.first() {
            out.push((first.departure, first.start[0], first.start[1]));
        }
        for leg in &self.legs {
            out.push((leg.arrival(), leg.end[0], leg.end[1]));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SearchOptions {
    /// When set, every edge is also costed this much later and FIFO
    /// violations are counted.
    pub fifo_probe: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub settled: usize,
    pub edge_evaluations: usize,
    pub fifo_violations: usize,
}

#[derive(Debug, Clone, Copy)]
struct QueueEntry {
    time: f64,
    node: NodeId,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.node.cmp(&other.node))
    }
}

fn terminals(graph: &Graph) -> Result<(NodeId, NodeId), SearchError> {
    let start = graph.start().ok_or(SearchError::MissingTerminal("start"))?;
    let goal = graph.goal().ok_or(SearchError::MissingTerminal("goal"))?;
    Ok((start, goal))
}

/// Earliest-arrival path from the start terminal to the goal terminal.
pub fn plan(
    graph: &Graph,
    t0: f64,
    model: &CostModel,
    evaluator: &mut dyn ProfileEvaluator,
) -> Result<PathResult, SearchError> {
    plan_with_options(graph, t0, model, evaluator, SearchOptions::default()).map(|(path, _)| path)
}

pub fn plan_with_options(
    graph: &Graph,
    t0: f64,
    model: &CostModel,
    evaluator: &mut dyn ProfileEvaluator,
    options: SearchOptions,
) -> Result<(PathResult, SearchStats), SearchError> {
    if !t0.is_finite() {
        return Err(SearchError::InvalidStartTime(t0));
    }
    let (start, goal) = terminals(graph)?;
    let n = graph.node_count();
    let mut arrival: Vec<Option<f64>> = vec![None; n];
    let mut via: Vec<Option<Leg>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut stats = SearchStats::default();
    let mut queue = BinaryHeap::new();

    arrival[start] = Some(t0);
    queue.push(Reverse(QueueEntry { time: t0, node: start }));

    while let Some(Reverse(QueueEntry { time, node })) = queue.pop() {
        if settled[node] || arrival[node] != Some(time) {
            continue;
        }
        settled[node] = true;
        stats.settled += 1;
        if node == goal {
            break;
        }

        for edge in graph.edges_from(node) {
            if settled[edge.to] {
                continue;
            }
            let segment = graph.segment(edge);
            let cost = edge_cost(&segment, time, model, evaluator)?;
            stats.edge_evaluations += 1;
            let Some(best) = cost.best else { continue };
            let reached = time + best.time;

            if let Some(probe) = options.fifo_probe {
                let later = edge_cost(&segment, time + probe, model, evaluator)?;
                stats.edge_evaluations += 1;
                if let Some(b) = later.best {
                    if time + probe + b.time < reached {
                        stats.fifo_violations += 1;
                    }
                }
            }

            if arrival[edge.to].is_none_or(|a| reached < a) {
                arrival[edge.to] = Some(reached);
                via[edge.to] = Some(Leg {
                    from: node,
                    to: edge.to,
                    start: segment.origin,
                    end: graph.position(edge.to),
                    departure: time,
                    travel_time: best.time,
                    profile: model.profiles[best.index],
                });
                queue.push(Reverse(QueueEntry {
                    time: reached,
                    node: edge.to,
                }));
            }
        }
    }

    if !settled[goal] {
        return Err(SearchError::NoPath);
    }
    let mut legs = Vec::new();
    let mut cursor = goal;
    while let Some(leg) = via[cursor] {
        legs.push(leg);
        cursor = leg.from;
    }
    legs.reverse();
    Ok((
        PathResult {
            t0,
            legs,
            arrival: arrival[goal].expect("goal settled"),
        },
        stats,
    ))
}

/// Node limit for [`brute_force_plan`].
pub const BRUTE_FORCE_NODE_LIMIT: usize = 20;

/// Exhaustive search over simple paths of at most `max_hops` edges, costing
/// edges in path order at their actual departure times. Branches whose
/// partial arrival already reaches the best complete arrival are pruned.
pub fn brute_force_plan(graph: &Graph, t0: f64, model: &CostModel, max_hops: usize) -> Result<PathResult, SearchError> {
    if graph.node_count() > BRUTE_FORCE_NODE_LIMIT {
        return Err(SearchError::GraphTooLarge {
            nodes: graph.node_count(),
            limit: BRUTE_FORCE_NODE_LIMIT,
        });
    }
    if !t0.is_finite() {
        return Err(SearchError::InvalidStartTime(t0));
    }
    let (start, goal) = terminals(graph)?;

    struct Dfs<'a> {
        graph: &'a Graph,
        model: &'a CostModel,
        goal: NodeId,
        max_hops: usize,
        on_path: Vec<bool>,
        legs: Vec<Leg>,
        best: Option<(f64, Vec<Leg>)>,
    }

    impl Dfs<'_> {
        fn visit(&mut self, node: NodeId, time: f64) -> Result<(), SearchError> {
            if self.best.as_ref().is_some_and(|(b, _)| time >= *b) {
                return Ok(());
            }
            if node == self.goal {
                self.best = Some((time, self.legs.clone()));
                return Ok(());
            }
            if self.legs.len() == self.max_hops {
                return Ok(());
            }
            self.on_path[node] = true;
            for edge in self.graph.edges_from(node) {
                if self.on_path[edge.to] {
                    continue;
                }
                let segment = self.graph.segment(edge);
                let cost = edge_cost(&segment, time, self.model, &mut SerialEvaluator)?;
                let Some(choice) = cost.best else { continue };
                self.legs.push(Leg {
                    from: node,
                    to: edge.to,
                    start: segment.origin,
                    end: self.graph.position(edge.to),
                    departure: time,
                    travel_time: choice.time,
                    profile: self.model.profiles[choice.index],
                });
                self.visit(edge.to, time + choice.time)?;
                self.legs.pop();
            }
            self.on_path[node] = false;
            Ok(())
        }
    }

    let mut dfs = Dfs {
        graph,
        model,
        goal,
        max_hops,
        on_path: vec![false; graph.node_count()],
        legs: Vec::new(),
        best: None,
    };
    dfs.visit(start, t0)?;
    match dfs.best {
        Some((arrival, legs)) => Ok(PathResult { t0, legs, arrival }),
        None => Err(SearchError::NoPath),
    }
}

//! Multi-floor routing over elevator shafts.

use std::collections::{BinaryHeap, HashMap};
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use super::grid::Cell;
use super::planner::{plan_floor, FloorPlan, StepCost};
use super::site::{GoalPose, SiteMap};
use super::NavError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub floor_id: String,
    pub waypoints: Vec<Cell>,
}

/// Elevator ride linking `segments[from_index]` to `segments[to_index]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub shaft_id: String,
    pub from_index: usize,
    pub to_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub segments: Vec<PathSegment>,
    pub transitions: Vec<Transition>,
    pub total_cost: f64,
}

/// Robot position: a floor and a cell on it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FloorCell {
    pub floor_id: String,
    pub cell: Cell,
}

impl FloorCell {
    pub fn new(floor_id: impl Into<String>, cell: Cell) -> Self {
        Self {
            floor_id: floor_id.into(),
            cell,
        }
    }
}

impl Path {
    pub fn waypoint_count(&self) -> usize {
        self.segments.iter().map(|s| s.waypoints.len()).sum()
    }

    pub fn first(&self) -> Option<FloorCell> {
        let seg = self.segments.first()?;
        Some(FloorCell::new(seg.floor_id.clone(), *seg.waypoints.first()?))
    }

    pub fn last(&self) -> Option<FloorCell> {
        let seg = self.segments.last()?;
        Some(FloorCell::new(seg.floor_id.clone(), *seg.waypoints.last()?))
    }

    /// All waypoints in travel order, with their floor.
    pub fn flatten(&self) -> Vec<FloorCell> {
        self.segments
            .iter()
            .flat_map(|s| s.waypoints.iter().map(|&c| FloorCell::new(s.floor_id.clone(), c)))
            .collect()
    }

    /// Checks every structural invariant of a planned path against `site`.
    pub fn validate(&self, site: &SiteMap) -> Result<(), NavError> {
        let bad = |reason: String| Err(NavError::InvalidPath(reason));
        if self.segments.is_empty() {
            return bad("path has no segments".into());
        }
        if self.transitions.len() + 1 != self.segments.len() {
            return bad(format!(
                "{} segments need {} transitions, found {}",
                self.segments.len(),
                self.segments.len() - 1,
                self.transitions.len()
            ));
        }
        let mut steps = StepCost::ZERO;
        for (si, seg) in self.segments.iter().enumerate() {
            let Some(grid) = site.floor(&seg.floor_id) else {
                return bad(format!("segment {si} on unknown floor {:?}", seg.floor_id));
            };
            if seg.waypoints.is_empty() {
                return bad(format!("segment {si} is empty"));
            }
            for &c in &seg.waypoints {
                if !grid.is_free(c) {
                    return bad(format!("segment {si} waypoint {c} is not a free cell"));
                }
            }
            for pair in seg.waypoints.windows(2) {
                if !grid.can_step(pair[0], pair[1]) {
                    return bad(format!("segment {si} step {} -> {} is not a legal move", pair[0], pair[1]));
                }
                steps = steps + StepCost::of_step(pair[0], pair[1]);
            }
        }
        for (ti, t) in self.transitions.iter().enumerate() {
            if t.from_index != ti || t.to_index != ti + 1 {
                return bad(format!(
                    "transition {ti} links {} -> {}, expected {ti} -> {}",
                    t.from_index,
                    t.to_index,
                    ti + 1
                ));
            }
            let Some(shaft) = site.shaft(&t.shaft_id) else {
                return bad(format!("transition {ti} uses unknown shaft {:?}", t.shaft_id));
            };
            let from = &self.segments[ti];
            let to = &self.segments[ti + 1];
            let leaves = shaft
                .stop_on(&from.floor_id)
                .is_some_and(|s| Some(&s.cell) == from.waypoints.last());
            let enters = shaft
                .stop_on(&to.floor_id)
                .is_some_and(|s| Some(&s.cell) == to.waypoints.first());
            if !leaves || !enters || from.floor_id == to.floor_id {
                return bad(format!(
                    "transition {ti} via shaft {:?} does not join the segment ends at its stops",
                    t.shaft_id
                ));
            }
        }
        let expected = steps.value() + self.transitions.len() as f64 * site.elevator_cost();
        if (expected - self.total_cost).abs() > 1e-9 {
            return bad(format!("total_cost {} but steps and rides sum to {expected}", self.total_cost));
        }
        Ok(())
    }
}

/// Cost-optimal route from `start` to `goal`, possibly through elevators.
///
/// Same-floor goals get a single segment. Otherwise a shortest path is found
/// over a graph whose nodes are the start, the goal and every shaft stop:
/// nodes on one floor are joined by their in-floor plan cost, stops of one
/// shaft by the site's elevator cost.
pub fn plan_path(site: &SiteMap, start: &FloorCell, goal: &GoalPose) -> Result<Path, NavError> {
    let start_grid = site.floor(&start.floor_id).ok_or_else(|| NavError::InvalidCell {
        floor: start.floor_id.clone(),
        cell: start.cell,
        reason: "unknown floor".into(),
    })?;
    let goal_grid = site.floor(&goal.floor_id).ok_or_else(|| NavError::InvalidCell {
        floor: goal.floor_id.clone(),
        cell: goal.cell,
        reason: "unknown floor".into(),
    })?;

    if start.floor_id == goal.floor_id {
        let plan = plan_floor(start_grid, start.cell, goal.cell)?;
        return Ok(Path {
            total_cost: plan.cost.value(),
            segments: vec![PathSegment {
                floor_id: start.floor_id.clone(),
                waypoints: plan.waypoints,
            }],
            transitions: Vec::new(),
        });
    }

    for (what, grid, cell) in [("start", start_grid, start.cell), ("goal", goal_grid, goal.cell)] {
        if !grid.is_free(cell) {
            return Err(NavError::InvalidCell {
                floor: grid.floor_id().to_string(),
                cell,
                reason: format!("{what} is out of bounds or occupied"),
            });
        }
    }

    RouteSearch::new(site, start, goal).run()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Edge {
    Walk,
    Ride(usize),
}

struct Node {
    floor: String,
    cell: Cell,
    shaft: Option<usize>,
}

struct RouteSearch<'a> {
    site: &'a SiteMap,
    nodes: Vec<Node>,
    legs: HashMap<(usize, usize), Option<FloorPlan>>,
}

const START: usize = 0;
const GOAL: usize = 1;

impl<'a> RouteSearch<'a> {
    fn new(site: &'a SiteMap, start: &FloorCell, goal: &GoalPose) -> Self {
        let mut nodes = vec![
            Node {
                floor: start.floor_id.clone(),
                cell: start.cell,
                shaft: None,
            },
            Node {
                floor: goal.floor_id.clone(),
                cell: goal.cell,
                shaft: None,
            },
        ];
        for (si, shaft) in site.shafts().iter().enumerate() {
            for stop in &shaft.stops {
                nodes.push(Node {
                    floor: stop.floor.clone(),
                    cell: stop.cell,
                    shaft: Some(si),
                });
            }
        }
        Self {
            site,
            nodes,
            legs: HashMap::new(),
        }
    }

    fn leg(&mut self, from: usize, to: usize) -> Option<&FloorPlan> {
        if !self.legs.contains_key(&(from, to)) {
            let (a, b) = (&self.nodes[from], &self.nodes[to]);
            let plan = self
                .site
                .floor(&a.floor)
                .and_then(|g| plan_floor(g, a.cell, b.cell).ok());
            self.legs.insert((from, to), plan);
        }
        self.legs[&(from, to)].as_ref()
    }

    fn run(mut self) -> Result<Path, NavError> {
        let n = self.nodes.len();
        let elevator = self.site.elevator_cost();
        let mut dist: Vec<Option<f64>> = vec![None; n];
        let mut prev: Vec<Option<(usize, Edge)>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[START] = Some(0.0);
        heap.push(Reverse((OrdF64(0.0), START)));

        while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if u == GOAL {
                break;
            }
            let mut edges = Vec::new();
            let open: Vec<usize> = (0..n).filter(|&v| v != u && v != START && !done[v]).collect();
            for v in open {
                if self.nodes[v].floor == self.nodes[u].floor {
                    if let Some(plan) = self.leg(u, v) {
                        edges.push((v, plan.cost.value(), Edge::Walk));
                    }
                } else if let (Some(su), Some(sv)) = (self.nodes[u].shaft, self.nodes[v].shaft) {
                    if su == sv {
                        edges.push((v, elevator, Edge::Ride(su)));
                    }
                }
            }
            for (v, w, edge) in edges {
                let candidate = d + w;
                if dist[v].is_none_or(|known| candidate < known) {
                    dist[v] = Some(candidate);
                    prev[v] = Some((u, edge));
                    heap.push(Reverse((OrdF64(candidate), v)));
                }
            }
        }

        if dist[GOAL].is_none() {
            return Err(NavError::Unreachable {
                reason: format!(
                    "no elevator route from floor {} to floor {}",
                    self.nodes[START].floor, self.nodes[GOAL].floor
                ),
            });
        }

        let mut hops = Vec::new();
        let mut cur = GOAL;
        while let Some((p, edge)) = prev[cur] {
            hops.push((p, cur, edge));
            cur = p;
        }
        hops.reverse();
        self.assemble(&hops)
    }

    fn assemble(&mut self, hops: &[(usize, usize, Edge)]) -> Result<Path, NavError> {
        let mut segments = vec![PathSegment {
            floor_id: self.nodes[START].floor.clone(),
            waypoints: vec![self.nodes[START].cell],
        }];
        let mut transitions = Vec::new();
        let mut steps = StepCost::ZERO;
        for &(u, v, edge) in hops {
            match edge {
                Edge::Walk => {
                    let plan = self.leg(u, v).cloned().ok_or_else(|| NavError::Unreachable {
                        reason: "leg vanished during assembly".into(),
                    })?;
                    steps = steps + plan.cost;
                    let seg = segments.last_mut().expect("at least one segment");
                    seg.waypoints.extend(plan.waypoints.into_iter().skip(1));
                }
                Edge::Ride(shaft) => {
                    transitions.push(Transition {
                        shaft_id: self.site.shafts()[shaft].id.clone(),
                        from_index: segments.len() - 1,
                        to_index: segments.len(),
                    });
                    segments.push(PathSegment {
                        floor_id: self.nodes[v].floor.clone(),
                        waypoints: vec![self.nodes[v].cell],
                    });
                }
            }
        }
        Ok(Path {
            total_cost: steps.value() + transitions.len() as f64 * self.site.elevator_cost(),
            segments,
            transitions,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

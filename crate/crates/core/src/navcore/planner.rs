//! Optimal 8-connected search over a single floor.
//!
//! Every path cost on the grid is `a + b·√2` for non-negative integers `a`
//! (straight steps) and `b` (diagonal steps). [`StepCost`] keeps that pair and
//! orders it exactly, so the search never compares rounded floats and equal
//! costs are equal bit for bit.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use super::grid::{Cell, FloorGrid};
use super::NavError;

/// Exact cost of a sequence of grid steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl StepCost {
    pub const ZERO: StepCost = StepCost {
        straight: 0,
        diagonal: 0,
    };
    pub const STRAIGHT: StepCost = StepCost {
        straight: 1,
        diagonal: 0,
    };
    pub const DIAGONAL: StepCost = StepCost {
        straight: 0,
        diagonal: 1,
    };

    pub fn value(&self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * SQRT_2
    }

    /// Cost of a single step between two 8-adjacent cells.
    pub fn of_step(from: Cell, to: Cell) -> StepCost {
        if from.col != to.col && from.row != to.row {
            Self::DIAGONAL
        } else {
            Self::STRAIGHT
        }
    }

    /// Octile distance: the exact cost between two cells on an obstacle-free grid.
    pub fn octile(a: Cell, b: Cell) -> StepCost {
        let dc = a.col.abs_diff(b.col);
        let dr = a.row.abs_diff(b.row);
        StepCost {
            straight: dc.max(dr) - dc.min(dr),
            diagonal: dc.min(dr),
        }
    }
}

impl Add for StepCost {
    type Output = StepCost;

    fn add(self, rhs: StepCost) -> StepCost {
        StepCost {
            straight: self.straight + rhs.straight,
            diagonal: self.diagonal + rhs.diagonal,
        }
    }
}

impl Ord for StepCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // sign of (s1 - s2) + (d1 - d2)·√2 = a - b·√2
        let a = self.straight as i128 - other.straight as i128;
        let b = other.diagonal as i128 - self.diagonal as i128;
        match (a.signum(), b.signum()) {
            (0, 0) => Ordering::Equal,
            (sa, sb) if sa >= 0 && sb <= 0 => Ordering::Greater,
            (sa, sb) if sa <= 0 && sb >= 0 => Ordering::Less,
            (1, 1) => (a * a).cmp(&(2 * b * b)),
            _ => (2 * b * b).cmp(&(a * a)),
        }
    }
}

impl PartialOrd for StepCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A single-floor plan: waypoints from start to goal inclusive.
#[derive(Clone, Debug, PartialEq)]
pub struct FloorPlan {
    pub waypoints: Vec<Cell>,
    pub cost: StepCost,
}

/// Cost-optimal path between two free cells of one floor.
///
/// A* with the octile heuristic, which is consistent for these moves. Open
/// nodes with equal priority pop in (row, col) order so the returned path is
/// reproducible.
pub fn plan_floor(grid: &FloorGrid, start: Cell, goal: Cell) -> Result<FloorPlan, NavError> {
    for (what, cell) in [("start", start), ("goal", goal)] {
        if !grid.is_free(cell) {
            return Err(NavError::InvalidCell {
                floor: grid.floor_id().to_string(),
                cell,
                reason: format!("{what} is out of bounds or occupied"),
            });
        }
    }

    let n = grid.cell_count();
    let mut best: Vec<Option<StepCost>> = vec![None; n];
    let mut parent: Vec<u32> = vec![u32::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();

    let start_i = grid.index(start);
    best[start_i] = Some(StepCost::ZERO);
    open.push(Reverse((StepCost::octile(start, goal), start.row, start.col)));

    while let Some(Reverse((_, row, col))) = open.pop() {
        let cell = Cell::new(col, row);
        let i = grid.index(cell);
        if closed[i] {
            continue;
        }
        closed[i] = true;
        if cell == goal {
            let mut waypoints = vec![cell];
            let mut cur = i;
            while cur != start_i {
                cur = parent[cur] as usize;
                waypoints.push(grid.cell_at(cur));
            }
            waypoints.reverse();
            return Ok(FloorPlan {
                waypoints,
                cost: best[i].unwrap_or_default(),
            });
        }
        let g = best[i].unwrap_or_default();
        for next in neighbours(grid, cell) {
            let j = grid.index(next);
            if closed[j] {
                continue;
            }
            let candidate = g + StepCost::of_step(cell, next);
            if best[j].is_none_or(|known| candidate < known) {
                best[j] = Some(candidate);
                parent[j] = i as u32;
                open.push(Reverse((candidate + StepCost::octile(next, goal), next.row, next.col)));
            }
        }
    }

    Err(NavError::Unreachable {
        reason: format!(
            "no path on floor {} from {start} to {goal}",
            grid.floor_id()
        ),
    })
}

/// Cells reachable in one step from `cell`, in (row, col) order.
pub(crate) fn neighbours(grid: &FloorGrid, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
    const OFFSETS: [(i64, i64); 8] = [
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, -1),
        (0, 1),
        (1, -1),
        (1, 0),
        (1, 1),
    ];
    OFFSETS.iter().filter_map(move |&(dr, dc)| {
        let row = cell.row as i64 + dr;
        let col = cell.col as i64 + dc;
        if row < 0 || col < 0 {
            return None;
        }
        let next = Cell::new(col as u32, row as u32);
        grid.can_step(cell, next).then_some(next)
    })
}

//! Shared fixtures and the brute-force reference planner.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;
use std::path::PathBuf;
use std::sync::Arc;

use guidebot::msgbus::Bus;
use guidebot::navcore::{load_site_map, Cell, FloorGrid, SiteMap};
use guidebot::simrobot::{SimConfig, SimStart, Session};
use guidebot::speechflow::{load_lexicon, LexiconFile};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SCENARIO: [&str; 3] = [
    "Hey A1, take me to the lab.",
    "Take me to the office.",
    "Hey A1, take me to the office.",
];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fixture_site() -> SiteMap {
    load_site_map(&read_data("site_two_floor.json")).expect("fixture map")
}

pub fn fixture_lexicon() -> LexiconFile {
    load_lexicon(&read_data("lexicon.json")).expect("fixture lexicon")
}

pub fn fixture_start() -> SimStart {
    SimStart {
        floor_id: "1".into(),
        cell: Cell::new(2, 2),
        heading_rad: 0.0,
    }
}

pub fn fixture_session() -> Session {
    let lex = fixture_lexicon();
    Session::new(
        Bus::new(),
        Arc::new(fixture_site()),
        lex.lexicon,
        lex.wake,
        SimConfig::new(fixture_start()),
    )
    .expect("fixture session")
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Uniform-cost search over the grid, written only against occupancy
/// queries. Straight steps cost 1, diagonal √2; a diagonal is refused when
/// both orthogonal cells it passes between are occupied.
pub fn oracle_cost(grid: &FloorGrid, start: Cell, goal: Cell) -> Option<f64> {
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let free = |c: i64, r: i64| c >= 0 && r >= 0 && c < w && r < h && grid.is_free(Cell::new(c as u32, r as u32));
    if !free(start.col as i64, start.row as i64) || !free(goal.col as i64, goal.row as i64) {
        return None;
    }
    let idx = |c: i64, r: i64| (r * w + c) as usize;
    let mut dist = vec![f64::INFINITY; (w * h) as usize];
    let mut heap = BinaryHeap::new();
    dist[idx(start.col as i64, start.row as i64)] = 0.0;
    heap.push(Entry(0.0, idx(start.col as i64, start.row as i64)));
    while let Some(Entry(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let (c, r) = (i as i64 % w, i as i64 / w);
        if (c, r) == (goal.col as i64, goal.row as i64) {
            return Some(d);
        }
        for dr in -1..=1 {
            for dc in -1..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nc, nr) = (c + dc, r + dr);
                if !free(nc, nr) {
                    continue;
                }
                let diagonal = dr != 0 && dc != 0;
                if diagonal && !free(nc, r) && !free(c, nr) {
                    continue;
                }
                let nd = d + if diagonal { SQRT_2 } else { 1.0 };
                let j = idx(nc, nr);
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Entry(nd, j));
                }
            }
        }
    }
    None
}

pub fn random_grid(seed: u64, width: u32, height: u32, density: f64) -> FloorGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let occupied: Vec<bool> = (0..width * height).map(|_| rng.random_bool(density)).collect();
        if let Ok(g) = FloorGrid::new("rand", width, height, 1.0, occupied) {
            return g;
        }
    }
}

pub fn random_free_cell(grid: &FloorGrid, rng: &mut impl Rng) -> Cell {
    loop {
        let c = Cell::new(rng.random_range(0..grid.width()), rng.random_range(0..grid.height()));
        if grid.is_free(c) {
            return c;
        }
    }
}

pub fn free_cells(grid: &FloorGrid) -> Vec<Cell> {
    (0..grid.height())
        .flat_map(|r| (0..grid.width()).map(move |c| Cell::new(c, r)))
        .filter(|&c| grid.is_free(c))
        .collect()
}

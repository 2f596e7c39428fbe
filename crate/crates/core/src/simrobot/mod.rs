//! Simulated robot: follows planned paths one tick at a time.

mod session;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

pub use session::{
    parse_script, replay, run_session, EventRecord, ReplayReport, ScriptLine, Session, SessionError,
    DEFAULT_SETTLE_LIMIT,
};

use crate::messages::{GoalMsg, Payload, SpeechOutMsg, StateMsg, StatusLabel, TOPIC_SAY, TOPIC_STATE};
use crate::msgbus::Bus;
use crate::navcore::{plan_path, Cell, FloorCell, GoalPose, Path, SiteMap};

#[derive(Clone, Debug, PartialEq)]
pub struct Navigation {
    pub location_id: String,
    pub display_name: String,
    pub goal: GoalPose,
    pub path: Path,
    route: Vec<FloorCell>,
    /// Index into the flattened waypoint list of the next cell to enter.
    pub next_waypoint_index: usize,
}

impl Navigation {
    pub fn waypoint_count(&self) -> usize {
        self.route.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Idle,
    Navigating(Box<Navigation>),
    Stopped,
}

impl Status {
    pub fn label(&self) -> StatusLabel {
        match self {
            Status::Idle => StatusLabel::Idle,
            Status::Navigating(_) => StatusLabel::Navigating,
            Status::Stopped => StatusLabel::Stopped,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotState {
    pub floor_id: String,
    pub cell: Cell,
    pub heading_rad: f64,
    pub status: Status,
}

impl RobotState {
    pub fn at(start: &SimStart) -> Self {
        Self {
            floor_id: start.floor_id.clone(),
            cell: start.cell,
            heading_rad: start.heading_rad,
            status: Status::Idle,
        }
    }

    pub fn position(&self) -> FloorCell {
        FloorCell::new(self.floor_id.clone(), self.cell)
    }

    pub fn is_navigating(&self) -> bool {
        matches!(self.status, Status::Navigating(_))
    }

    pub fn to_msg(&self) -> StateMsg {
        let nav = match &self.status {
            Status::Navigating(nav) => Some(nav),
            _ => None,
        };
        StateMsg {
            floor_id: self.floor_id.clone(),
            cell: self.cell,
            heading_rad: self.heading_rad,
            status: self.status.label(),
            goal_location_id: nav.map(|n| n.location_id.clone()),
            path: nav.map(|n| n.path.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimStart {
    pub floor_id: String,
    pub cell: Cell,
    #[serde(default)]
    pub heading_rad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub tick_ms: u64,
    pub cells_per_tick: u32,
    pub start: SimStart,
}

impl SimConfig {
    pub fn new(start: SimStart) -> Self {
        Self {
            tick_ms: 100,
            cells_per_tick: 1,
            start,
        }
    }

    pub fn validate(&self, site: &SiteMap) -> Result<(), String> {
        if self.tick_ms == 0 {
            return Err("tick must be > 0 ms".into());
        }
        if self.cells_per_tick == 0 {
            return Err("cells_per_tick must be > 0".into());
        }
        if !site.is_free(&self.start.floor_id, self.start.cell) {
            return Err(format!(
                "start cell {} on floor {:?} is not a free cell",
                self.start.cell, self.start.floor_id
            ));
        }
        Ok(())
    }
}

fn say(bus: &Bus, text: String) {
    if let Err(e) = bus.publish_to(TOPIC_SAY, Payload::SpeechOut(SpeechOutMsg { text })) {
        log::error!("cannot publish speech: {e}");
    }
}

/// Replans toward `goal` from the robot's current cell, replacing any active
/// path. An unreachable goal leaves the state unchanged and is announced.
pub fn on_goal(state: RobotState, goal: &GoalMsg, site: &SiteMap, bus: &Bus) -> RobotState {
    let display_name = site
        .display_name(&goal.location_id)
        .unwrap_or(&goal.location_id)
        .to_string();
    match plan_path(site, &state.position(), &goal.pose) {
        Ok(path) => {
            let route = path.flatten();
            RobotState {
                status: Status::Navigating(Box::new(Navigation {
                    location_id: goal.location_id.clone(),
                    display_name,
                    goal: goal.pose.clone(),
                    path,
                    route,
                    next_waypoint_index: 1,
                })),
                ..state
            }
        }
        Err(e) => {
            log::info!("goal {} rejected: {e}", goal.location_id);
            say(bus, format!("Sorry, I cannot reach the {display_name}."));
            state
        }
    }
}

/// Holds position. Valid from any status.
pub fn on_stop(state: RobotState) -> RobotState {
    RobotState {
        status: Status::Stopped,
        ..state
    }
}

fn heading_between(from: Cell, to: Cell) -> f64 {
    let dx = to.col as f64 - from.col as f64;
    let dy = to.row as f64 - from.row as f64;
    dy.atan2(dx).rem_euclid(TAU)
}

/// Advances one simulation tick and publishes the resulting state.
///
/// A navigating robot moves up to `cells_per_tick` cells. An elevator ride
/// takes a whole tick on its own: it only starts from the stop cell at the
/// beginning of a tick, so every observed floor change is stop to stop.
/// Heading follows the direction of the last step (atan2 of row and column
/// deltas).
pub fn tick(mut state: RobotState, cfg: &SimConfig, bus: &Bus) -> RobotState {
    if let Status::Navigating(nav) = &mut state.status {
        let mut budget = cfg.cells_per_tick;
        while let Some(next) = nav.route.get(nav.next_waypoint_index) {
            if next.floor_id != state.floor_id {
                if budget == cfg.cells_per_tick {
                    state.floor_id = next.floor_id.clone();
                    state.cell = next.cell;
                    nav.next_waypoint_index += 1;
                }
                break;
            }
            if budget == 0 {
                break;
            }
            if next.cell != state.cell {
                state.heading_rad = heading_between(state.cell, next.cell);
            }
            state.cell = next.cell;
            budget -= 1;
            nav.next_waypoint_index += 1;
        }
        if nav.next_waypoint_index >= nav.route.len() {
            state.heading_rad = nav.goal.heading_rad;
            let arrived = format!("You have arrived at the {}.", nav.display_name);
            state.status = Status::Idle;
            say(bus, arrived);
        }
    }
    if let Err(e) = bus.publish_to(TOPIC_STATE, Payload::State(state.to_msg())) {
        log::error!("cannot publish state: {e}");
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navcore::load_site_map;

    fn site() -> SiteMap {
        load_site_map(
            r#"{
            "floors": [
                {"id": "1", "width": 5, "height": 1, "resolution_m": 1.0, "occupied_rows": ["00000"]},
                {"id": "2", "width": 3, "height": 1, "resolution_m": 1.0, "occupied_rows": ["000"]},
                {"id": "3", "width": 2, "height": 1, "resolution_m": 1.0, "occupied_rows": ["00"]}
            ],
            "locations": [
                {"id": "end", "display_name": "end", "floor": "1", "cell": [4, 0], "heading_rad": 1.0},
                {"id": "up", "display_name": "upstairs", "floor": "2", "cell": [2, 0], "heading_rad": 0.5},
                {"id": "island", "display_name": "island", "floor": "3", "cell": [0, 0], "heading_rad": 0.0}
            ],
            "shafts": [{"id": "S", "stops": [{"floor": "1", "cell": [0, 0]}, {"floor": "2", "cell": [0, 0]}]}]
        }"#,
        )
        .unwrap()
    }

    fn start(col: u32) -> RobotState {
        RobotState::at(&SimStart {
            floor_id: "1".into(),
            cell: Cell::new(col, 0),
            heading_rad: 0.0,
        })
    }

    fn cfg() -> SimConfig {
        SimConfig::new(SimStart {
            floor_id: "1".into(),
            cell: Cell::new(0, 0),
            heading_rad: 0.0,
        })
    }

    fn goal(site: &SiteMap, id: &str) -> GoalMsg {
        GoalMsg {
            location_id: id.into(),
            pose: site.location(id).unwrap().pose.clone(),
        }
    }

    fn spoken(bus_mon: &crate::msgbus::Monitor) -> Vec<String> {
        bus_mon
            .drain()
            .into_iter()
            .filter_map(|e| match e.payload {
                Payload::SpeechOut(s) => Some(s.text),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn walks_to_goal_and_announces() {
        let s = site();
        let bus = Bus::with_standard_topics();
        let mon = bus.monitor();
        let mut st = on_goal(start(1), &goal(&s, "end"), &s, &bus);
        assert!(st.is_navigating());
        for expected in [2, 3] {
            st = tick(st, &cfg(), &bus);
            assert_eq!(st.cell, Cell::new(expected, 0));
            assert!(st.is_navigating());
        }
        st = tick(st, &cfg(), &bus);
        assert_eq!(st.cell, Cell::new(4, 0));
        assert_eq!(st.status, Status::Idle);
        assert_eq!(st.heading_rad, 1.0);
        assert_eq!(spoken(&mon), vec!["You have arrived at the end."]);
    }

    #[test]
    fn goal_at_current_cell_arrives_next_tick() {
        let s = site();
        let bus = Bus::with_standard_topics();
        let st = on_goal(start(4), &goal(&s, "end"), &s, &bus);
        match &st.status {
            Status::Navigating(nav) => assert_eq!(nav.waypoint_count(), 1),
            other => panic!("{other:?}"),
        }
        let st = tick(st, &cfg(), &bus);
        assert_eq!(st.status, Status::Idle);
        assert_eq!(st.cell, Cell::new(4, 0));
    }

    #[test]
    fn unreachable_goal_is_spoken_and_ignored() {
        let s = site();
        let bus = Bus::with_standard_topics();
        let mon = bus.monitor();
        let before = start(2);
        let after = on_goal(before.clone(), &goal(&s, "island"), &s, &bus);
        assert_eq!(before, after);
        assert_eq!(spoken(&mon), vec!["Sorry, I cannot reach the island."]);
    }

    #[test]
    fn elevator_ride_is_its_own_tick() {
        let s = site();
        let bus = Bus::with_standard_topics();
        let mut st = on_goal(start(1), &goal(&s, "up"), &s, &bus);
        st = tick(st, &cfg(), &bus);
        assert_eq!(st.position(), FloorCell::new("1", Cell::new(0, 0)));
        st = tick(st, &cfg(), &bus);
        assert_eq!(st.position(), FloorCell::new("2", Cell::new(0, 0)));
        st = tick(st, &cfg(), &bus);
        assert_eq!(st.cell, Cell::new(1, 0));
        st = tick(st, &cfg(), &bus);
        assert_eq!(st.position(), FloorCell::new("2", Cell::new(2, 0)));
        assert_eq!(st.status, Status::Idle);
        assert_eq!(st.heading_rad, 0.5);
    }

    #[test]
    fn fast_robot_stops_at_shaft_before_riding() {
        let s = site();
        let bus = Bus::with_standard_topics();
        let mut fast = cfg();
        fast.cells_per_tick = 4;
        let mut st = on_goal(start(3), &goal(&s, "up"), &s, &bus);
        st = tick(st, &fast, &bus);
        assert_eq!(st.position(), FloorCell::new("1", Cell::new(0, 0)));
        st = tick(st, &fast, &bus);
        assert_eq!(st.position(), FloorCell::new("2", Cell::new(0, 0)));
        st = tick(st, &fast, &bus);
        assert_eq!(st.position(), FloorCell::new("2", Cell::new(2, 0)));
        assert_eq!(st.status, Status::Idle);
    }

    #[test]
    fn stop_holds_position() {
        let s = site();
        let bus = Bus::with_standard_topics();
        let mut st = on_goal(start(0), &goal(&s, "end"), &s, &bus);
        st = tick(st, &cfg(), &bus);
        st = on_stop(st);
        let held = st.clone();
        let mon = bus.monitor();
        for _ in 0..100 {
            st = tick(st, &cfg(), &bus);
            assert_eq!(st, held);
        }
        let states: Vec<_> = mon.drain().into_iter().map(|e| e.payload).collect();
        assert_eq!(states.len(), 100);
        assert!(states.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(on_stop(on_stop(start(3))).status, Status::Stopped);
    }

    #[test]
    fn faster_robot_covers_more_cells() {
        let s = site();
        let bus = Bus::with_standard_topics();
        let mut fast = cfg();
        fast.cells_per_tick = 3;
        let st = on_goal(start(0), &goal(&s, "end"), &s, &bus);
        let st = tick(st, &fast, &bus);
        assert_eq!(st.cell, Cell::new(3, 0));
        let st = tick(st, &fast, &bus);
        assert_eq!(st.status, Status::Idle);
    }

    #[test]
    fn config_validation() {
        let s = site();
        assert!(cfg().validate(&s).is_ok());
        let mut bad = cfg();
        bad.tick_ms = 0;
        assert!(bad.validate(&s).is_err());
        let mut bad = cfg();
        bad.start.cell = Cell::new(9, 0);
        assert!(bad.validate(&s).is_err());
    }
}

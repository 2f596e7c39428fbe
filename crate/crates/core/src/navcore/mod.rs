//! Multi-floor site model and grid path planning.

mod grid;
mod planner;
mod route;
mod site;

use thiserror::Error;

pub use grid::{Cell, FloorGrid};
pub use planner::{plan_floor, FloorPlan, StepCost};
pub use route::{plan_path, FloorCell, Path, PathSegment, Transition};
pub use site::{
    load_site_map, resolve_location, ElevatorShaft, FloorDoc, GoalPose, Location, LocationDoc,
    MapDocument, ShaftStop, SiteMap, DEFAULT_ELEVATOR_COST,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NavError {
    #[error("map schema error: {0}")]
    Schema(String),
    #[error("map validation error{}: {reason}", floor.as_ref().map(|f| format!(" on floor {f:?}")).unwrap_or_default())]
    Validation { floor: Option<String>, reason: String },
    #[error("invalid cell {cell} on floor {floor:?}: {reason}")]
    InvalidCell {
        floor: String,
        cell: Cell,
        reason: String,
    },
    #[error("unreachable: {reason}")]
    Unreachable { reason: String },
    #[error("unknown location {0:?}")]
    UnknownLocation(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

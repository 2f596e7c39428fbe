use std::collections::{BTreeMap, HashSet};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::grid::{Cell, FloorGrid};
use super::NavError;

pub const DEFAULT_ELEVATOR_COST: f64 = 5.0;

/// Floor-qualified target pose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalPose {
    pub floor_id: String,
    pub cell: Cell,
    /// Radians in `[0, 2π)`.
    pub heading_rad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShaftStop {
    pub floor: String,
    pub cell: Cell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElevatorShaft {
    pub id: String,
    pub stops: Vec<ShaftStop>,
}

impl ElevatorShaft {
    pub fn stop_on(&self, floor: &str) -> Option<&ShaftStop> {
        self.stops.iter().find(|s| s.floor == floor)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Location {
    pub display_name: String,
    pub pose: GoalPose,
}

/// Validated multi-floor site. Immutable once loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteMap {
    floors: BTreeMap<String, FloorGrid>,
    locations: BTreeMap<String, Location>,
    shafts: Vec<ElevatorShaft>,
    elevator_cost: f64,
}

// Map file schema.

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub floors: Vec<FloorDoc>,
    #[serde(default)]
    pub locations: Vec<LocationDoc>,
    #[serde(default)]
    pub shafts: Vec<ElevatorShaft>,
    #[serde(default = "default_elevator_cost")]
    pub elevator_cost: f64,
}

fn default_elevator_cost() -> f64 {
    DEFAULT_ELEVATOR_COST
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloorDoc {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub resolution_m: f64,
    pub occupied_rows: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationDoc {
    pub id: String,
    pub display_name: String,
    pub floor: String,
    pub cell: Cell,
    #[serde(default)]
    pub heading_rad: f64,
}

/// Parses and validates a map document.
pub fn load_site_map(document: &str) -> Result<SiteMap, NavError> {
    let doc: MapDocument =
        serde_json::from_str(document).map_err(|e| NavError::Schema(e.to_string()))?;
    SiteMap::from_document(doc)
}

impl SiteMap {
    pub fn from_document(doc: MapDocument) -> Result<Self, NavError> {
        let mut floors = BTreeMap::new();
        for (i, f) in doc.floors.into_iter().enumerate() {
            if f.id.is_empty() {
                return Err(NavError::Validation {
                    floor: None,
                    reason: format!("floors[{i}].id is empty"),
                });
            }
            if f.occupied_rows.len() as u32 != f.height {
                return Err(NavError::Validation {
                    floor: Some(f.id),
                    reason: format!(
                        "occupied_rows has {} rows, height is {}",
                        f.occupied_rows.len(),
                        f.height
                    ),
                });
            }
            let grid = FloorGrid::from_rows(f.id.clone(), f.resolution_m, &f.occupied_rows)?;
            if grid.width() != f.width {
                return Err(NavError::Validation {
                    floor: Some(f.id),
                    reason: format!("occupied_rows width is {}, width is {}", grid.width(), f.width),
                });
            }
            if floors.insert(f.id.clone(), grid).is_some() {
                return Err(NavError::Validation {
                    floor: Some(f.id),
                    reason: "duplicate floor id".into(),
                });
            }
        }
        if floors.is_empty() {
            return Err(NavError::Validation {
                floor: None,
                reason: "map has no floors".into(),
            });
        }

        let mut locations = BTreeMap::new();
        for loc in doc.locations {
            if !(0.0..TAU).contains(&loc.heading_rad) {
                return Err(NavError::Validation {
                    floor: Some(loc.floor),
                    reason: format!(
                        "location {:?} heading_rad {} outside [0, 2π)",
                        loc.id, loc.heading_rad
                    ),
                });
            }
            check_free(&floors, &loc.floor, loc.cell, &format!("location {:?}", loc.id))?;
            let entry = Location {
                display_name: loc.display_name,
                pose: GoalPose {
                    floor_id: loc.floor.clone(),
                    cell: loc.cell,
                    heading_rad: loc.heading_rad,
                },
            };
            if locations.insert(loc.id.clone(), entry).is_some() {
                return Err(NavError::Validation {
                    floor: Some(loc.floor),
                    reason: format!("duplicate location id {:?}", loc.id),
                });
            }
        }

        let mut shaft_ids = HashSet::new();
        for shaft in &doc.shafts {
            if !shaft_ids.insert(shaft.id.as_str()) {
                return Err(NavError::Validation {
                    floor: None,
                    reason: format!("duplicate shaft id {:?}", shaft.id),
                });
            }
            if shaft.stops.len() < 2 {
                return Err(NavError::Validation {
                    floor: None,
                    reason: format!(
                        "shaft {:?} has {} stop(s), needs at least 2",
                        shaft.id,
                        shaft.stops.len()
                    ),
                });
            }
            let mut served = HashSet::new();
            for stop in &shaft.stops {
                if !served.insert(stop.floor.as_str()) {
                    return Err(NavError::Validation {
                        floor: Some(stop.floor.clone()),
                        reason: format!("shaft {:?} has more than one stop on this floor", shaft.id),
                    });
                }
                check_free(&floors, &stop.floor, stop.cell, &format!("shaft {:?} stop", shaft.id))?;
            }
        }

        if !(doc.elevator_cost >= 0.0 && doc.elevator_cost.is_finite()) {
            return Err(NavError::Validation {
                floor: None,
                reason: format!("elevator_cost must be a non-negative number, got {}", doc.elevator_cost),
            });
        }

        Ok(Self {
            floors,
            locations,
            shafts: doc.shafts,
            elevator_cost: doc.elevator_cost,
        })
    }

    /// Renders the site back into the map-file schema.
    pub fn to_document(&self) -> MapDocument {
        MapDocument {
            floors: self
                .floors
                .values()
                .map(|g| FloorDoc {
                    id: g.floor_id().to_string(),
                    width: g.width(),
                    height: g.height(),
                    resolution_m: g.resolution(),
                    occupied_rows: g.rows(),
                })
                .collect(),
            locations: self
                .locations
                .iter()
                .map(|(id, l)| LocationDoc {
                    id: id.clone(),
                    display_name: l.display_name.clone(),
                    floor: l.pose.floor_id.clone(),
                    cell: l.pose.cell,
                    heading_rad: l.pose.heading_rad,
                })
                .collect(),
            shafts: self.shafts.clone(),
            elevator_cost: self.elevator_cost,
        }
    }

    pub fn floor(&self, floor_id: &str) -> Option<&FloorGrid> {
        self.floors.get(floor_id)
    }

    pub fn floors(&self) -> impl Iterator<Item = &FloorGrid> {
        self.floors.values()
    }

    pub fn location(&self, location_id: &str) -> Option<&Location> {
        self.locations.get(location_id)
    }

    pub fn locations(&self) -> impl Iterator<Item = (&str, &Location)> {
        self.locations.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn shafts(&self) -> &[ElevatorShaft] {
        &self.shafts
    }

    pub fn shaft(&self, shaft_id: &str) -> Option<&ElevatorShaft> {
        self.shafts.iter().find(|s| s.id == shaft_id)
    }

    pub fn elevator_cost(&self) -> f64 {
        self.elevator_cost
    }

    /// True when `(floor, cell)` is a free, in-bounds cell of an existing floor.
    pub fn is_free(&self, floor_id: &str, cell: Cell) -> bool {
        self.floor(floor_id).is_some_and(|g| g.is_free(cell))
    }

    /// Copy of this site with every shaft removed.
    pub fn without_shafts(&self) -> SiteMap {
        SiteMap {
            shafts: Vec::new(),
            ..self.clone()
        }
    }

    pub fn display_name(&self, location_id: &str) -> Option<&str> {
        self.location(location_id).map(|l| l.display_name.as_str())
    }
}

/// Stored pose of a named location. Ids match exactly, including case.
pub fn resolve_location(site: &SiteMap, location_id: &str) -> Result<GoalPose, NavError> {
    site.location(location_id)
        .map(|l| l.pose.clone())
        .ok_or_else(|| NavError::UnknownLocation(location_id.to_string()))
}

fn check_free(
    floors: &BTreeMap<String, FloorGrid>,
    floor: &str,
    cell: Cell,
    what: &str,
) -> Result<(), NavError> {
    let grid = floors.get(floor).ok_or_else(|| NavError::Validation {
        floor: Some(floor.to_string()),
        reason: format!("{what} references unknown floor"),
    })?;
    if !grid.in_bounds(cell) {
        return Err(NavError::Validation {
            floor: Some(floor.to_string()),
            reason: format!("{what} cell {cell} is out of bounds"),
        });
    }
    if grid.is_occupied(cell) {
        return Err(NavError::Validation {
            floor: Some(floor.to_string()),
            reason: format!("{what} cell {cell} is occupied"),
        });
    }
    Ok(())
}

use std::fmt;

use serde::{Deserialize, Serialize};

use super::NavError;

/// A grid cell addressed by column and row. Serialized as `[col, row]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Cell {
    pub col: u32,
    pub row: u32,
}

impl Cell {
    pub const fn new(col: u32, row: u32) -> Self {
        Self { col, row }
    }

    /// True when `other` is one of the eight neighbours of `self`.
    pub fn is_adjacent8(&self, other: &Cell) -> bool {
        let dc = self.col.abs_diff(other.col);
        let dr = self.row.abs_diff(other.row);
        dc <= 1 && dr <= 1 && (dc, dr) != (0, 0)
    }
}

impl From<[u32; 2]> for Cell {
    fn from([col, row]: [u32; 2]) -> Self {
        Self { col, row }
    }
}

impl From<Cell> for [u32; 2] {
    fn from(c: Cell) -> Self {
        [c.col, c.row]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// Occupancy raster for one floor. Row 0 is the first row of the map file.
#[derive(Clone, Debug, PartialEq)]
pub struct FloorGrid {
    floor_id: String,
    width: u32,
    height: u32,
    resolution: f64,
    occupied: Vec<bool>,
}

impl FloorGrid {
    pub fn new(
        floor_id: impl Into<String>,
        width: u32,
        height: u32,
        resolution: f64,
        occupied: Vec<bool>,
    ) -> Result<Self, NavError> {
        let floor_id = floor_id.into();
        let invalid = |reason: String| NavError::Validation {
            floor: Some(floor_id.clone()),
            reason,
        };
        if width == 0 || height == 0 {
            return Err(invalid(format!("grid must be non-empty, got {width}x{height}")));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(invalid(format!("resolution_m must be > 0, got {resolution}")));
        }
        if occupied.len() != (width as usize) * (height as usize) {
            return Err(invalid(format!(
                "expected {} cells, got {}",
                width as usize * height as usize,
                occupied.len()
            )));
        }
        if occupied.iter().all(|&o| o) {
            return Err(invalid("grid has no free cell".into()));
        }
        Ok(Self {
            floor_id,
            width,
            height,
            resolution,
            occupied,
        })
    }

    /// Builds a grid from rows of `'0'`/`'1'` characters.
    pub fn from_rows<S: AsRef<str>>(
        floor_id: impl Into<String>,
        resolution: f64,
        rows: &[S],
    ) -> Result<Self, NavError> {
        let floor_id = floor_id.into();
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.as_ref().chars().count()) as u32;
        let mut occupied = Vec::with_capacity(width as usize * height as usize);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.chars().count() as u32 != width {
                return Err(NavError::Validation {
                    floor: Some(floor_id),
                    reason: format!("occupied_rows[{r}] has length {}, expected {width}", row.len()),
                });
            }
            for (c, ch) in row.chars().enumerate() {
                match ch {
                    '0' => occupied.push(false),
                    '1' => occupied.push(true),
                    other => {
                        return Err(NavError::Validation {
                            floor: Some(floor_id),
                            reason: format!("occupied_rows[{r}][{c}] is {other:?}, expected '0' or '1'"),
                        })
                    }
                }
            }
        }
        Self::new(floor_id, width, height, resolution, occupied)
    }

    pub fn floor_id(&self) -> &str {
        &self.floor_id
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    /// In bounds and not occupied.
    pub fn is_free(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && !self.occupied[self.index(cell)]
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        !self.is_free(cell)
    }

    pub fn set_occupied(&mut self, cell: Cell, occupied: bool) {
        let i = self.index(cell);
        self.occupied[i] = occupied;
    }

    pub(crate) fn index(&self, cell: Cell) -> usize {
        cell.row as usize * self.width as usize + cell.col as usize
    }

    pub(crate) fn cell_at(&self, index: usize) -> Cell {
        Cell::new(
            (index % self.width as usize) as u32,
            (index / self.width as usize) as u32,
        )
    }

    pub fn cell_count(&self) -> usize {
        self.occupied.len()
    }

    /// Whether the robot may step directly from `from` to the neighbouring cell `to`.
    ///
    /// Diagonal steps are refused only when both orthogonal cells they pass
    /// between are occupied.
    pub fn can_step(&self, from: Cell, to: Cell) -> bool {
        if !from.is_adjacent8(&to) || !self.is_free(from) || !self.is_free(to) {
            return false;
        }
        if from.col != to.col && from.row != to.row {
            let side_a = Cell::new(to.col, from.row);
            let side_b = Cell::new(from.col, to.row);
            if self.is_occupied(side_a) && self.is_occupied(side_b) {
                return false;
            }
        }
        true
    }

    /// Rows rendered back to the `'0'`/`'1'` map-file form.
    pub fn rows(&self) -> Vec<String> {
        self.occupied
            .chunks(self.width as usize)
            .map(|row| row.iter().map(|&o| if o { '1' } else { '0' }).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let rows = ["010", "000"];
        let g = FloorGrid::from_rows("1", 0.5, &rows).unwrap();
        assert_eq!(g.width(), 3);
        assert_eq!(g.height(), 2);
        assert!(g.is_occupied(Cell::new(1, 0)));
        assert!(g.is_free(Cell::new(1, 1)));
        assert!(!g.is_free(Cell::new(3, 0)));
        assert_eq!(g.rows(), rows);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(FloorGrid::from_rows("1", 1.0, &["01", "0"]).is_err());
        assert!(FloorGrid::from_rows("1", 1.0, &["0x"]).is_err());
        assert!(FloorGrid::from_rows("1", 1.0, &["11", "11"]).is_err());
        assert!(FloorGrid::from_rows("1", 0.0, &["00"]).is_err());
    }

    #[test]
    fn corner_cutting_needs_both_sides_blocked() {
        let g = FloorGrid::from_rows("1", 1.0, &["01", "10"]).unwrap();
        assert!(!g.can_step(Cell::new(0, 0), Cell::new(1, 1)));
        let g = FloorGrid::from_rows("1", 1.0, &["01", "00"]).unwrap();
        assert!(g.can_step(Cell::new(0, 0), Cell::new(1, 1)));
    }
}

//! Loading and cross-checking the session inputs.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use guidebot::navcore::{load_site_map, Cell, SiteMap};
use guidebot::simrobot::SimStart;
use guidebot::speechflow::{load_lexicon, LexiconFile, WakeConfig};

/// Map and lexicon as loaded from disk, lexicon checked against the map.
pub struct Inputs {
    pub site: SiteMap,
    pub lexicon: LexiconFile,
}

fn read(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {what} file {}", path.display()))
}

/// Loads both files. Validation is structural: schemas, grid bounds and
/// lexicon references. Reachability is left to runtime.
pub fn load_inputs(map: &Path, lexicon: &Path, wake: Option<&str>) -> Result<Inputs> {
    let site = load_site_map(&read(map, "map")?).with_context(|| format!("map {}", map.display()))?;
    let mut lex =
        load_lexicon(&read(lexicon, "lexicon")?).with_context(|| format!("lexicon {}", lexicon.display()))?;
    lex.lexicon
        .validate_against(&site)
        .with_context(|| format!("lexicon {} against map {}", lexicon.display(), map.display()))?;
    if let Some(phrase) = wake {
        lex.wake = WakeConfig::new(phrase).context("--wake")?;
    }
    Ok(Inputs { site, lexicon: lex })
}

/// Parses `FLOOR:COL,ROW`.
pub fn parse_start(raw: &str) -> Result<SimStart> {
    let Some((floor, cell)) = raw.rsplit_once(':') else {
        bail!("start {raw:?}: expected FLOOR:COL,ROW");
    };
    let Some((col, row)) = cell.split_once(',') else {
        bail!("start {raw:?}: expected FLOOR:COL,ROW");
    };
    let col = col.trim().parse().with_context(|| format!("start {raw:?}: bad column"))?;
    let row = row.trim().parse().with_context(|| format!("start {raw:?}: bad row"))?;
    Ok(SimStart {
        floor_id: floor.to_string(),
        cell: Cell::new(col, row),
        heading_rad: 0.0,
    })
}

/// First free cell in row-major order, trying floors in id order.
pub fn default_start(site: &SiteMap) -> Result<SimStart> {
    for grid in site.floors() {
        for row in 0..grid.height() {
            for col in 0..grid.width() {
                let cell = Cell::new(col, row);
                if grid.is_free(cell) {
                    return Ok(SimStart {
                        floor_id: grid.floor_id().to_string(),
                        cell,
                        heading_rad: 0.0,
                    });
                }
            }
        }
    }
    bail!("map has no free cell to start on")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_syntax() {
        let s = parse_start("2:3,4").unwrap();
        assert_eq!((s.floor_id.as_str(), s.cell), ("2", Cell::new(3, 4)));
        let s = parse_start("east:wing:0, 7").unwrap();
        assert_eq!((s.floor_id.as_str(), s.cell), ("east:wing", Cell::new(0, 7)));
        assert!(parse_start("2").is_err());
        assert!(parse_start("2:3").is_err());
        assert!(parse_start("2:-1,0").is_err());
    }
}

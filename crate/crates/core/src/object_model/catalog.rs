//! Built-in synthetic objects: reconfigurable block shapes plus a hammer and a
//! wrench. Parameter values are plausible aluminum/steel settings, not
//! measurements.

use super::{build_grid_model, GroupMaps, Object, ObjectParams};
use crate::error::{Error, Result};

pub const CATALOG: [&str; 8] = ["I1", "I2", "L1", "L2", "F1", "F2", "hammer", "wrench"];

/// Block pitch (m).
const SPACING: f64 = 0.05;
const BLOCK_MASSES: [f64; 2] = [0.34, 0.98];
const PADS: [f64; 2] = [0.3, 0.45];

// Cell legend: lowercase touches the table, uppercase is raised.
//   a/A  light material, pad 0     s/S  heavy material, pad 0
//   b    light material, pad 1     t    heavy material, pad 1
fn legend(c: char) -> Option<(usize, Option<usize>)> {
    Some(match c {
        'a' => (0, Some(0)),
        'A' => (0, None),
        's' => (1, Some(0)),
        'S' => (1, None),
        'b' => (0, Some(1)),
        't' => (1, Some(1)),
        _ => return None,
    })
}

fn layout(name: &str) -> Option<(&'static [&'static str], [f64; 2])> {
    Some(match name {
        "I1" => (&["aaass", "aaass"], BLOCK_MASSES),
        "I2" => (&["bbssaa", "bbssaa"], BLOCK_MASSES),
        "L1" => (&["a..", "a..", "a..", "ass"], BLOCK_MASSES),
        "L2" => (&["aAAa", "s...", "t..."], BLOCK_MASSES),
        "F1" => (&["sss", "a..", "aa.", "a.."], BLOCK_MASSES),
        "F2" => (&["aab", "s..", "st.", "s.."], BLOCK_MASSES),
        "hammer" => (&["sss.....", "sssAAAAa", "sss....."], [0.15, 0.9]),
        "wrench" => (&["s.....t", "sAAAAAt", "s.....t"], [0.2, 0.5]),
        _ => return None,
    })
}

/// Mass group and optional friction group of one grid cell.
type Cell = (usize, Option<usize>);

/// Look up a catalog object by name.
pub fn builtin_object(name: &str) -> Result<Object> {
    let (rows, masses) = layout(name).ok_or_else(|| Error::UnknownObject(name.to_string()))?;
    let cells: Vec<Vec<Option<Cell>>> = rows
        .iter()
        .map(|r| r.chars().map(legend).collect())
        .collect();
    let mask: Vec<Vec<bool>> = cells
        .iter()
        .map(|r| r.iter().map(Option::is_some).collect())
        .collect();
    let contact: Vec<Vec<bool>> = cells
        .iter()
        .map(|r| r.iter().map(|c| matches!(c, Some((_, Some(_))))).collect())
        .collect();
    let model = build_grid_model(&mask, SPACING, &contact, &mask)?;
    let groups: Vec<(usize, Option<usize>)> = model
        .cells
        .iter()
        .map(|&(r, c)| cells[r][c].expect("occupied"))
        .collect();
    let maps = GroupMaps::new(
        groups.iter().map(|g| g.0).collect(),
        groups.iter().map(|g| g.1).collect(),
    )?;
    let params = ObjectParams {
        masses: masses.to_vec(),
        mus: PADS[..maps.n_friction].to_vec(),
    };
    maps.validate(&model)?;
    params.validate(&maps)?;
    Ok(Object {
        name: name.to_string(),
        model,
        maps,
        params,
    })
}

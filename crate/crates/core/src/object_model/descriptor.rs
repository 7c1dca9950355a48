use serde::{Deserialize, Serialize};

use super::{build_grid_model, Grid, GroupMaps, Object, ObjectParams};
use crate::error::{Error, Result};

/// JSON object descriptor: grids are row-major, `-1` marks an empty cell
/// (mass groups) or a cell without friction (friction groups).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub spacing: f64,
    pub occupancy: Grid<u8>,
    pub contact: Grid<u8>,
    pub graspable: Grid<u8>,
    pub mass_groups: Grid<i64>,
    pub friction_groups: Grid<i64>,
    pub masses: Vec<f64>,
    pub mus: Vec<f64>,
}

fn to_bool(g: &Grid<u8>) -> Grid<bool> {
    g.iter()
        .map(|r| r.iter().map(|&v| v != 0).collect())
        .collect()
}

impl ObjectDescriptor {
    pub fn from_object(obj: &Object) -> Self {
        let (rows, cols) = obj.model.grid_shape;
        let mut occupancy = vec![vec![0u8; cols]; rows];
        let mut contact = occupancy.clone();
        let mut graspable = occupancy.clone();
        let mut mass_groups = vec![vec![-1i64; cols]; rows];
        let mut friction_groups = mass_groups.clone();
        for (i, &(r, c)) in obj.model.cells.iter().enumerate() {
            occupancy[r][c] = 1;
            contact[r][c] = obj.model.contact[i] as u8;
            graspable[r][c] = obj.model.graspable[i] as u8;
            mass_groups[r][c] = obj.maps.mass[i] as i64;
            friction_groups[r][c] = obj.maps.friction[i].map_or(-1, |f| f as i64);
        }
        Self {
            name: Some(obj.name.clone()),
            spacing: obj.model.spacing,
            occupancy,
            contact,
            graspable,
            mass_groups,
            friction_groups,
            masses: obj.params.masses.clone(),
            mus: obj.params.mus.clone(),
        }
    }

    pub fn to_object(&self) -> Result<Object> {
        let mask = to_bool(&self.occupancy);
        let model = build_grid_model(
            &mask,
            self.spacing,
            &to_bool(&self.contact),
            &to_bool(&self.graspable),
        )?;
        let lookup = |g: &Grid<i64>, r: usize, c: usize| -> Result<i64> {
            g.get(r)
                .and_then(|row| row.get(c))
                .copied()
                .ok_or_else(|| Error::InvalidDescriptor("group grid shape mismatch".into()))
        };
        let mut mass = Vec::with_capacity(model.len());
        let mut friction = Vec::with_capacity(model.len());
        for (i, &(r, c)) in model.cells.iter().enumerate() {
            let m = lookup(&self.mass_groups, r, c)?;
            if m < 0 {
                return Err(Error::InvalidDescriptor(format!(
                    "occupied cell ({r},{c}) has no mass group"
                )));
            }
            mass.push(m as usize);
            let f = lookup(&self.friction_groups, r, c)?;
            if (f >= 0) != model.contact[i] {
                return Err(Error::InvalidDescriptor(format!(
                    "cell ({r},{c}): friction group must be set exactly on contact cells"
                )));
            }
            friction.push((f >= 0).then_some(f as usize));
        }
        let maps = GroupMaps::new(mass, friction)?;
        let params = ObjectParams {
            masses: self.masses.clone(),
            mus: self.mus.clone(),
        };
        params.validate(&maps)?;
        Ok(Object {
            name: self.name.clone().unwrap_or_else(|| "object".into()),
            model,
            maps,
            params,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::object_model::{builtin_object, CATALOG};

    #[test]
    fn catalog_round_trips_bit_exactly() {
        for name in CATALOG {
            let obj = builtin_object(name).unwrap();
            let json = ObjectDescriptor::from_object(&obj).to_json().unwrap();
            let back = ObjectDescriptor::from_json(&json)
                .unwrap()
                .to_object()
                .unwrap();
            assert_eq!(back, obj, "{name}");
            let again = ObjectDescriptor::from_object(&back).to_json().unwrap();
            assert_eq!(again, json);
        }
    }

    #[test]
    fn friction_on_raised_cell_is_rejected() {
        let obj = builtin_object("L2").unwrap();
        let mut d = ObjectDescriptor::from_object(&obj);
        d.friction_groups[0][1] = 0;
        assert!(d.to_object().is_err());
    }
}

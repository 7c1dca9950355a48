//! Particle models of planar objects, parameter grouping and the Hidden
//! States derived from per-group masses and friction coefficients.

mod catalog;
mod descriptor;

pub use catalog::{builtin_object, CATALOG};
pub use descriptor::ObjectDescriptor;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const DEFAULT_GRAVITY: f64 = 9.81;

/// Boolean occupancy grid, indexed `[row][col]`.
pub type Grid<T> = Vec<Vec<T>>;

/// Grid-partitioned rigid object: one particle per occupied cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleModel {
    /// Body-frame particle positions (m). The first occupied cell in row-major
    /// order sits at the origin.
    pub positions: Vec<Vec2>,
    /// Grid pitch (m).
    pub spacing: f64,
    /// Particle touches the table.
    pub contact: Vec<bool>,
    /// Particle can be grasped by the gripper.
    pub graspable: Vec<bool>,
    /// `(row, col)` of each particle in the source grid.
    pub cells: Vec<(usize, usize)>,
    /// `(rows, cols)` of the source grid.
    pub grid_shape: (usize, usize),
}

/// Build a particle model with one particle at each occupied cell center.
pub fn build_grid_model(
    mask: &Grid<bool>,
    spacing: f64,
    contact: &Grid<bool>,
    graspable: &Grid<bool>,
) -> Result<ParticleModel> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidShape(format!("grid spacing {spacing}")));
    }
    let rows = mask.len();
    let cols = mask.first().map_or(0, Vec::len);
    let same_shape = |g: &Grid<bool>| g.len() == rows && g.iter().all(|r| r.len() == cols);
    if !mask.iter().all(|r| r.len() == cols) {
        return Err(Error::InvalidShape("ragged occupancy grid".into()));
    }
    if !same_shape(contact) || !same_shape(graspable) {
        return Err(Error::InvalidShape(
            "contact/graspable grids must match the occupancy grid".into(),
        ));
    }

    let cells: Vec<(usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .filter(|&(r, c)| mask[r][c])
        .collect();
    if cells.len() < 2 {
        return Err(Error::InvalidShape(format!(
            "need at least 2 occupied cells, found {}",
            cells.len()
        )));
    }
    let (r0, c0) = cells[0];
    let positions = cells
        .iter()
        .map(|&(r, c)| {
            Vec2::new(
                (c as f64 - c0 as f64) * spacing,
                (r as f64 - r0 as f64) * spacing,
            )
        })
        .collect();
    Ok(ParticleModel {
        positions,
        spacing,
        contact: cells.iter().map(|&(r, c)| contact[r][c]).collect(),
        graspable: cells.iter().map(|&(r, c)| graspable[r][c]).collect(),
        cells,
        grid_shape: (rows, cols),
    })
}

impl ParticleModel {
    /// Model from explicit body-frame positions, every particle in contact and graspable.
    /// Positions must lie on a grid of pitch `spacing` anchored at the first particle.
    pub fn from_positions(positions: Vec<Vec2>, spacing: f64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidShape("need at least 2 particles".into()));
        }
        let origin = positions[0];
        let mut cells = Vec::with_capacity(positions.len());
        for p in &positions {
            let d = (p - origin) / spacing;
            let (cx, cy) = (d.x.round(), d.y.round());
            if (d.x - cx).abs() * spacing > 1e-12 || (d.y - cy).abs() * spacing > 1e-12 {
                return Err(Error::InvalidShape(format!("position {p:?} is off-grid")));
            }
            cells.push((cy, cx));
        }
        let min_r = cells.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let min_c = cells.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let cells: Vec<(usize, usize)> = cells
            .iter()
            .map(|&(r, c)| ((r - min_r) as usize, (c - min_c) as usize))
            .collect();
        let mut seen = std::collections::HashSet::new();
        if !cells.iter().all(|c| seen.insert(*c)) {
            return Err(Error::InvalidShape("duplicate particle positions".into()));
        }
        let rows = cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
        let cols = cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
        let n = positions.len();
        Ok(Self {
            positions,
            spacing,
            contact: vec![true; n],
            graspable: vec![true; n],
            cells,
            grid_shape: (rows, cols),
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn graspable_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.graspable
            .iter()
            .enumerate()
            .filter_map(|(i, &g)| g.then_some(i))
    }

    /// Mean of the particle positions.
    pub fn centroid(&self) -> Vec2 {
        self.positions.iter().sum::<Vec2>() / self.len() as f64
    }
}

/// Assignment of particles to mass, friction and friction-force groups.
///
/// Column `i` of the implied matrices `G_m`, `G_μ`, `G_s` is the standard basis
/// vector of particle `i`'s group, or zero for non-contact particles in `G_μ`, `G_s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMaps {
    pub mass: Vec<usize>,
    pub friction: Vec<Option<usize>>,
    pub contact: Vec<Option<usize>>,
    pub n_mass: usize,
    pub n_friction: usize,
    pub n_contact: usize,
}

fn group_count(ids: impl Iterator<Item = usize> + Clone, what: &str) -> Result<usize> {
    let n = ids.clone().max().map_or(0, |m| m + 1);
    let mut used = vec![false; n];
    for id in ids {
        used[id] = true;
    }
    if let Some(k) = used.iter().position(|u| !u) {
        return Err(Error::InconsistentGrouping(format!(
            "{what} group {k} has no particles"
        )));
    }
    Ok(n)
}

impl GroupMaps {
    /// Derive contact groups as the distinct (friction, mass) group pairs in
    /// particle order, so each friction-force group shares one mass and one
    /// friction coefficient.
    pub fn new(mass: Vec<usize>, friction: Vec<Option<usize>>) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let contact = friction
            .iter()
            .zip(&mass)
            .map(|(f, &m)| {
                f.map(|f| {
                    pairs.iter().position(|&p| p == (f, m)).unwrap_or_else(|| {
                        pairs.push((f, m));
                        pairs.len() - 1
                    })
                })
            })
            .collect();
        Self::with_contact(mass, friction, contact)
    }

    /// Explicit friction-force grouping; every contact group must sit inside a
    /// single mass group and a single friction group.
    pub fn with_contact(
        mass: Vec<usize>,
        friction: Vec<Option<usize>>,
        contact: Vec<Option<usize>>,
    ) -> Result<Self> {
        if friction.len() != mass.len() || contact.len() != mass.len() {
            return Err(Error::InconsistentGrouping(
                "group vectors differ in length".into(),
            ));
        }
        let n_mass = group_count(mass.iter().copied(), "mass")?;
        let n_friction = group_count(friction.iter().flatten().copied(), "friction")?;
        let n_contact = group_count(contact.iter().flatten().copied(), "contact")?;
        for (i, (f, s)) in friction.iter().zip(&contact).enumerate() {
            if f.is_some() != s.is_some() {
                return Err(Error::InconsistentGrouping(format!(
                    "particle {i}: friction and contact assignment disagree"
                )));
            }
        }
        let maps = Self {
            mass,
            friction,
            contact,
            n_mass,
            n_friction,
            n_contact,
        };
        for k in 0..n_contact {
            maps.contact_mass_group(k)?;
            maps.contact_friction_group(k)?;
        }
        Ok(maps)
    }

    /// Single mass group `maps` for `n` particles, all in one contact group.
    pub fn uniform(n: usize) -> Self {
        Self::new(vec![0; n], vec![Some(0); n]).expect("uniform grouping is consistent")
    }

    fn unique_over<T: Copy + PartialEq>(
        &self,
        k: usize,
        f: impl Fn(usize) -> T,
        what: &str,
    ) -> Result<T> {
        let mut it = self
            .contact
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Some(k))
            .map(|(i, _)| f(i));
        let first = it
            .next()
            .ok_or_else(|| Error::InconsistentGrouping(format!("contact group {k} is empty")))?;
        if it.any(|v| v != first) {
            return Err(Error::InconsistentGrouping(format!(
                "contact group {k} spans multiple {what} groups"
            )));
        }
        Ok(first)
    }

    /// Mass group shared by all particles of contact group `k`.
    pub fn contact_mass_group(&self, k: usize) -> Result<usize> {
        self.unique_over(k, |i| self.mass[i], "mass")
    }

    /// Friction group shared by all particles of contact group `k`.
    pub fn contact_friction_group(&self, k: usize) -> Result<usize> {
        self.unique_over(
            k,
            |i| self.friction[i].expect("contact implies friction"),
            "friction",
        )
    }

    pub fn mass_group_sizes(&self) -> Vec<usize> {
        let mut n = vec![0; self.n_mass];
        for &g in &self.mass {
            n[g] += 1;
        }
        n
    }

    pub fn contact_group_sizes(&self) -> Vec<usize> {
        let mut n = vec![0; self.n_contact];
        for g in self.contact.iter().flatten() {
            n[*g] += 1;
        }
        n
    }

    /// Dense `G_m` (n_m × n_p).
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n_mass, self.mass.len());
        for (i, &k) in self.mass.iter().enumerate() {
            g[(k, i)] = 1.0;
        }
        g
    }

    /// Dense `G_s` (n_s × n_p).
    pub fn contact_matrix(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n_contact, self.contact.len());
        for (i, k) in self.contact.iter().enumerate() {
            if let Some(k) = k {
                g[(*k, i)] = 1.0;
            }
        }
        g
    }

    /// Check the maps against a particle model.
    pub fn validate(&self, model: &ParticleModel) -> Result<()> {
        if self.mass.len() != model.len() {
            return Err(Error::InconsistentGrouping(format!(
                "maps cover {} particles, model has {}",
                self.mass.len(),
                model.len()
            )));
        }
        for (i, (&c, f)) in model.contact.iter().zip(&self.friction).enumerate() {
            if !c && f.is_some() {
                return Err(Error::InconsistentGrouping(format!(
                    "particle {i} has friction but no table contact"
                )));
            }
        }
        Ok(())
    }
}

/// Per-group masses (kg) and sliding friction coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectParams {
    pub masses: Vec<f64>,
    pub mus: Vec<f64>,
}

impl ObjectParams {
    pub fn validate(&self, maps: &GroupMaps) -> Result<()> {
        if self.masses.len() != maps.n_mass || self.mus.len() != maps.n_friction {
            return Err(Error::InconsistentGrouping(format!(
                "expected {} masses and {} friction coefficients, got {} and {}",
                maps.n_mass,
                maps.n_friction,
                self.masses.len(),
                self.mus.len()
            )));
        }
        if self.masses.iter().any(|&m| !(m > 0.0)) || self.mus.iter().any(|&u| !(u >= 0.0)) {
            return Err(Error::InvalidDescriptor(
                "masses must be positive and friction coefficients non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Per-particle masses.
    pub fn particle_masses(&self, maps: &GroupMaps) -> Vec<f64> {
        maps.mass.iter().map(|&g| self.masses[g]).collect()
    }

    /// Joint parameter vector `[m..., mu...]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.masses.iter().chain(&self.mus).copied().collect()
    }

    pub fn from_slice(theta: &[f64], n_mass: usize) -> Self {
        Self {
            masses: theta[..n_mass].to_vec(),
            mus: theta[n_mass..].to_vec(),
        }
    }
}

/// Derived parameters that make the dynamics linear in the friction terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenStates {
    /// Total inertial mass `M` (kg).
    pub total_mass: f64,
    /// Planar moment of inertia about the center of mass (kg·m²).
    pub inertia_cm: f64,
    /// Center of mass in the body frame (m).
    pub com: Vec2,
    /// Friction-force magnitude `μ m g` per contact group (N).
    pub s: Vec<f64>,
}

impl HiddenStates {
    pub fn object_level(&self) -> ObjectLevel {
        ObjectLevel {
            total_mass: self.total_mass,
            inertia_cm: self.inertia_cm,
            com: self.com,
        }
    }
}

/// The part of the Hidden States that does not involve friction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectLevel {
    pub total_mass: f64,
    pub inertia_cm: f64,
    pub com: Vec2,
}

impl ObjectLevel {
    pub fn with_s(&self, s: Vec<f64>) -> HiddenStates {
        HiddenStates {
            total_mass: self.total_mass,
            inertia_cm: self.inertia_cm,
            com: self.com,
            s,
        }
    }
}

/// A named object: geometry, grouping and ground-truth parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Object {
    pub name: String,
    pub model: ParticleModel,
    pub maps: GroupMaps,
    pub params: ObjectParams,
}

impl Object {
    pub fn hidden_states(&self, gravity: f64) -> Result<HiddenStates> {
        hidden_states_of(&self.model, &self.maps, &self.params, gravity)
    }
}

/// Sum particle masses into `M`, `c`, `I_cm` and per-contact-group `s`.
pub fn hidden_states_of(
    model: &ParticleModel,
    maps: &GroupMaps,
    params: &ObjectParams,
    gravity: f64,
) -> Result<HiddenStates> {
    maps.validate(model)?;
    params.validate(maps)?;
    let m = params.particle_masses(maps);
    let total_mass: f64 = m.iter().sum();
    let com = model
        .positions
        .iter()
        .zip(&m)
        .map(|(p, mi)| p * *mi)
        .sum::<Vec2>()
        / total_mass;
    let inertia_cm = model
        .positions
        .iter()
        .zip(&m)
        .map(|(p, mi)| mi * (p - com).norm_squared())
        .sum();
    let s = (0..maps.n_contact)
        .map(|k| {
            let mg = maps.contact_mass_group(k)?;
            let fg = maps.contact_friction_group(k)?;
            Ok(params.mus[fg] * params.masses[mg] * gravity)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HiddenStates {
        total_mass,
        inertia_cm,
        com,
        s,
    })
}

/// Number of Hidden-State coordinates ahead of `s` in [`hidden_jacobian`] rows.
pub const OBJECT_LEVEL_DIM: usize = 4;

/// Jacobian of `[M, c_x, c_y, I_cm, s...]` with respect to `[m..., mu...]`.
pub fn hidden_jacobian(
    model: &ParticleModel,
    maps: &GroupMaps,
    params: &ObjectParams,
    gravity: f64,
) -> Result<DMatrix<f64>> {
    let h = hidden_states_of(model, maps, params, gravity)?;
    let (n_m, n_mu, n_s) = (maps.n_mass, maps.n_friction, maps.n_contact);
    let mut j = DMatrix::zeros(OBJECT_LEVEL_DIM + n_s, n_m + n_mu);
    let sizes = maps.mass_group_sizes();
    for g in 0..n_m {
        let members = || {
            maps.mass
                .iter()
                .zip(&model.positions)
                .filter(move |(k, _)| **k == g)
                .map(|(_, p)| p)
        };
        let pos_sum: Vec2 = members().sum();
        let dc = (pos_sum - h.com * sizes[g] as f64) / h.total_mass;
        j[(0, g)] = sizes[g] as f64;
        j[(1, g)] = dc.x;
        j[(2, g)] = dc.y;
        j[(3, g)] = members().map(|p| (p - h.com).norm_squared()).sum();
    }
    for k in 0..n_s {
        let mg = maps.contact_mass_group(k)?;
        let fg = maps.contact_friction_group(k)?;
        j[(OBJECT_LEVEL_DIM + k, mg)] = params.mus[fg] * gravity;
        j[(OBJECT_LEVEL_DIM + k, n_m + fg)] = params.masses[mg] * gravity;
    }
    Ok(j)
}

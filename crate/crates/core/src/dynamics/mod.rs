//! Forward dynamics of a grasped object sliding on a table.
//!
//! The state tracks the pose and velocity of the body-frame origin. Forces
//! and torques act on the center of mass: applied wrench plus Coulomb sliding
//! friction `s` opposing each particle's velocity. The generalized
//! acceleration about the center of mass is transferred to the origin before
//! the explicit Euler update, so free rotation happens about the center of
//! mass whatever the origin.

mod features;
mod trajectory_csv;

pub use features::StepFeatures;
pub use trajectory_csv::{read_trajectories_csv, write_trajectories_csv};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cross, rotation, spin, Vec2};
use crate::object_model::{GroupMaps, HiddenStates, ParticleModel, DEFAULT_GRAVITY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Time step (s).
    pub dt: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Particles slower than this (m/s) feel no friction.
    pub velocity_epsilon: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            gravity: DEFAULT_GRAVITY,
            velocity_epsilon: 1e-3,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.velocity_epsilon >= 0.0) || !(self.gravity >= 0.0) {
            return Err(Error::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Pose `[x, y, w]` and velocity `[vx, vy, vw]` of the body-frame origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub pose: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl Default for ObjectState {
    fn default() -> Self {
        Self::at_rest(Vector3::zeros())
    }
}

impl ObjectState {
    pub fn new(pose: Vector3<f64>, velocity: Vector3<f64>) -> Self {
        Self { pose, velocity }
    }

    pub fn at_rest(pose: Vector3<f64>) -> Self {
        Self::new(pose, Vector3::zeros())
    }

    pub fn position(&self) -> Vec2 {
        self.pose.xy()
    }

    pub fn angle(&self) -> f64 {
        self.pose.z
    }

    pub fn linear_velocity(&self) -> Vec2 {
        self.velocity.xy()
    }

    pub fn angular_velocity(&self) -> f64 {
        self.velocity.z
    }

    /// World position of a body-frame point.
    pub fn to_world(&self, body: &Vec2) -> Vec2 {
        rotation(self.angle()) * body + self.position()
    }

    /// World velocity of a body-frame point.
    pub fn velocity_of(&self, body: &Vec2) -> Vec2 {
        self.linear_velocity() + spin(self.angular_velocity(), &(rotation(self.angle()) * body))
    }

    pub fn is_finite(&self) -> bool {
        self.pose
            .iter()
            .chain(self.velocity.iter())
            .all(|v| v.is_finite())
    }
}

/// Wrench `[ux, uy, uw]` applied at a single grasped particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrenchInput {
    pub particle: usize,
    pub u: Vector3<f64>,
}

impl WrenchInput {
    pub fn new(particle: usize, u: Vector3<f64>) -> Self {
        Self { particle, u }
    }

    pub fn zero(particle: usize) -> Self {
        Self::new(particle, Vector3::zeros())
    }

    pub fn force(&self) -> Vec2 {
        self.u.xy()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: SimConfig,
    /// `T + 1` states.
    pub states: Vec<ObjectState>,
    /// `T` inputs; `inputs[t]` drives `states[t] -> states[t + 1]`.
    pub inputs: Vec<WrenchInput>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }

    pub fn final_state(&self) -> &ObjectState {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.len() != self.inputs.len() + 1 {
            return Err(Error::IncompatibleTrajectories(format!(
                "{} states for {} inputs",
                self.states.len(),
                self.inputs.len()
            )));
        }
        Ok(())
    }
}

/// World-frame particle positions and velocities.
pub fn world_kinematics(model: &ParticleModel, state: &ObjectState) -> Vec<(Vec2, Vec2)> {
    let rot = rotation(state.angle());
    let origin = state.position();
    model
        .positions
        .iter()
        .map(|b| {
            let arm = rot * b;
            (
                arm + origin,
                state.linear_velocity() + spin(state.angular_velocity(), &arm),
            )
        })
        .collect()
}

/// Unit sliding direction, or `None` when the particle is below the friction threshold.
#[inline]
pub(crate) fn sliding_direction(v: &Vec2, epsilon: f64) -> Option<Vec2> {
    let n = v.norm();
    (n > epsilon && n > 0.0).then(|| v / n)
}

/// Generalized acceleration about the center of mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accel {
    /// Center-of-mass acceleration (m/s²).
    pub linear: Vec2,
    /// Angular acceleration (rad/s²).
    pub angular: f64,
}

impl Accel {
    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.linear.x, self.linear.y, self.angular)
    }

    /// Acceleration of the state's reference point (the body origin), given
    /// the world offset `com_offset = c - origin`.
    pub fn at_origin(&self, state: &ObjectState, com_offset: &Vec2) -> Vector3<f64> {
        let w = state.angular_velocity();
        let r = -com_offset;
        let a = self.linear + spin(self.angular, &r) - r * (w * w);
        Vector3::new(a.x, a.y, self.angular)
    }
}

fn check_inertia(h: &HiddenStates, torque: f64) -> Result<()> {
    if !(h.total_mass > 0.0) || (torque != 0.0 && !(h.inertia_cm > 0.0)) {
        return Err(Error::SingularInertia {
            mass: h.total_mass,
            inertia: h.inertia_cm,
        });
    }
    Ok(())
}

/// Per-particle friction forces at `state`.
fn friction_forces(
    model: &ParticleModel,
    maps: &GroupMaps,
    h: &HiddenStates,
    kin: &[(Vec2, Vec2)],
    config: &SimConfig,
) -> Vec<Vec2> {
    let _ = model;
    kin.iter()
        .zip(&maps.contact)
        .map(
            |((_, v), group)| match (group, sliding_direction(v, config.velocity_epsilon)) {
                (Some(k), Some(dir)) => -dir * h.s[*k],
                _ => Vec2::zeros(),
            },
        )
        .collect()
}

/// Net force and torque about the world center of mass, summed particle by particle.
fn net_wrench(
    model: &ParticleModel,
    maps: &GroupMaps,
    h: &HiddenStates,
    state: &ObjectState,
    input: &WrenchInput,
    config: &SimConfig,
) -> Result<(Vec2, f64, Vec2)> {
    if input.particle >= model.len() {
        return Err(Error::InvalidAction(format!(
            "grasp particle {} out of range",
            input.particle
        )));
    }
    let kin = world_kinematics(model, state);
    let com = state.to_world(&h.com);
    let friction = friction_forces(model, maps, h, &kin, config);
    let mut force = input.force();
    let mut torque = input.u.z + cross(&input.force(), &(kin[input.particle].0 - com));
    for ((p, _), f) in kin.iter().zip(&friction) {
        force += f;
        torque += cross(f, &(p - com));
    }
    Ok((force, torque, com))
}

/// Generalized acceleration `diag(M, M, I_cm)^-1 Σ (f_u + f_f)`.
pub fn compute_accel(
    model: &ParticleModel,
    maps: &GroupMaps,
    h: &HiddenStates,
    state: &ObjectState,
    input: &WrenchInput,
    config: &SimConfig,
) -> Result<Accel> {
    let (force, torque, _) = net_wrench(model, maps, h, state, input, config)?;
    check_inertia(h, torque)?;
    Ok(Accel {
        linear: force / h.total_mass,
        angular: if torque == 0.0 {
            0.0
        } else {
            torque / h.inertia_cm
        },
    })
}

/// Acceleration of the state coordinates (origin linear acceleration and angular acceleration).
pub fn state_accel(
    model: &ParticleModel,
    maps: &GroupMaps,
    h: &HiddenStates,
    state: &ObjectState,
    input: &WrenchInput,
    config: &SimConfig,
) -> Result<Vector3<f64>> {
    let acc = compute_accel(model, maps, h, state, input, config)?;
    let offset = rotation(state.angle()) * h.com;
    Ok(acc.at_origin(state, &offset))
}

/// Explicit Euler: pose advances with the current velocity, then velocity with `accel`.
pub fn step(state: &ObjectState, accel: &Vector3<f64>, dt: f64) -> ObjectState {
    ObjectState {
        pose: state.pose + state.velocity * dt,
        velocity: state.velocity + accel * dt,
    }
}

pub fn simulate(
    model: &ParticleModel,
    maps: &GroupMaps,
    h: &HiddenStates,
    initial: ObjectState,
    inputs: &[WrenchInput],
    config: &SimConfig,
) -> Result<Trajectory> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(Error::InsufficientData("no inputs to simulate".into()));
    }
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(initial);
    let mut state = initial;
    for (t, input) in inputs.iter().enumerate() {
        let a = state_accel(model, maps, h, &state, input, config)?;
        state = step(&state, &a, config.dt);
        if !state.is_finite() {
            return Err(Error::Divergence { step: t });
        }
        states.push(state);
    }
    Ok(Trajectory {
        config: *config,
        states,
        inputs: inputs.to_vec(),
    })
}

/// Spectral radius of the velocity update `I + dt·∂a/∂v` at `state`, by central
/// differences. Above 1 a perturbation grows each step; stiff friction near a
/// slow pivot can push it well past 1 at the default step size.
pub fn step_amplification(
    model: &ParticleModel,
    maps: &GroupMaps,
    h: &HiddenStates,
    state: &ObjectState,
    input: &WrenchInput,
    config: &SimConfig,
) -> Result<f64> {
    let eps = 1e-7;
    let mut jac = Matrix3::zeros();
    for k in 0..3 {
        let (mut plus, mut minus) = (*state, *state);
        plus.velocity[k] += eps;
        minus.velocity[k] -= eps;
        let d = state_accel(model, maps, h, &plus, input, config)?
            - state_accel(model, maps, h, &minus, input, config)?;
        jac.set_column(k, &(d / (2.0 * eps)));
    }
    let update = Matrix3::identity() + jac * config.dt;
    Ok(update
        .complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max))
}

/// Largest `dt` for which an unforced step cannot raise `kinetic_energy` to
/// first order in the transfer terms: `2|P| / (M|a_c|² + I_cm α²)`, with `P`
/// the friction power. Infinite when nothing decelerates.
pub fn dissipation_step_bound(
    model: &ParticleModel,
    maps: &GroupMaps,
    h: &HiddenStates,
    state: &ObjectState,
    config: &SimConfig,
) -> Result<f64> {
    let acc = compute_accel(model, maps, h, state, &WrenchInput::zero(0), config)?;
    let vc = state.velocity_of(&h.com);
    let w = state.angular_velocity();
    let power = h.total_mass * acc.linear.dot(&vc) + h.inertia_cm * acc.angular * w;
    let curvature =
        h.total_mass * acc.linear.norm_squared() + h.inertia_cm * acc.angular * acc.angular;
    Ok(if curvature > 0.0 {
        2.0 * power.abs() / curvature
    } else {
        f64::INFINITY
    })
}

/// Kinetic energy `½ M |v_c|² + ½ I_cm w²`.
pub fn kinetic_energy(h: &HiddenStates, state: &ObjectState) -> f64 {
    let vc = state.velocity_of(&h.com);
    let w = state.angular_velocity();
    0.5 * h.total_mass * vc.norm_squared() + 0.5 * h.inertia_cm * w * w
}

/// Rotation about a particle held fixed by the gripper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotResponse {
    /// Angular acceleration (rad/s²).
    pub angular: f64,
    /// Force the gripper exerts to keep the pivot in place (N).
    pub holding_force: Vec2,
    /// Moment of inertia about the pivot (kg·m²).
    pub pivot_inertia: f64,
    /// Friction torque about the pivot (N·m).
    pub friction_torque: f64,
}

/// Angular response to torque `torque` while particle `pivot` is held fixed.
///
/// The holding force is whatever makes the center of mass follow the circle
/// about the pivot; eliminating it leaves `I_j a_w = torque + τ_friction,j`.
pub fn pivot_response(
    model: &ParticleModel,
    maps: &GroupMaps,
    h: &HiddenStates,
    state: &ObjectState,
    pivot: usize,
    torque: f64,
    config: &SimConfig,
) -> Result<PivotResponse> {
    let kin = world_kinematics(model, state);
    let com = state.to_world(&h.com);
    let p = kin
        .get(pivot)
        .ok_or_else(|| Error::InvalidAction(format!("pivot {pivot} out of range")))?
        .0;
    let friction = friction_forces(model, maps, h, &kin, config);
    let friction_force: Vec2 = friction.iter().sum();
    let friction_torque: f64 = kin
        .iter()
        .zip(&friction)
        .map(|((q, _), f)| cross(f, &(q - p)))
        .sum();
    let d = com - p;
    let pivot_inertia = h.inertia_cm + h.total_mass * d.norm_squared();
    check_inertia(h, 1.0)?;
    let angular = (torque + friction_torque) / pivot_inertia;
    let w = state.angular_velocity();
    let com_accel = spin(angular, &d) - d * (w * w);
    Ok(PivotResponse {
        angular,
        holding_force: com_accel * h.total_mass - friction_force,
        pivot_inertia,
        friction_torque,
    })
}

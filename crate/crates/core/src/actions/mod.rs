//! Grasp-and-slide / grasp-and-rotate actions, their kinematics, and the
//! wrench a wrist sensor would read while executing them.

mod filter;
mod regression;

pub use filter::filter_feedback;
pub use regression::{
    block_from_features, build_q, particle_block, q_block, rank_q, regression_block,
    sample_actions, RegressionBlock, SamplingConfig, DEFAULT_RANK_TOL,
};

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ObjectState, SimConfig, StepFeatures, WrenchInput};
use crate::error::{Error, Result};
use crate::geometry::{cross, direction, rotation, Vec2};
use crate::object_model::{GroupMaps, HiddenStates, ParticleModel};

pub const DEFAULT_SLIDE_SPEED: f64 = 0.05;
pub const DEFAULT_SLIDE_DURATION: f64 = 4.0;
pub const DEFAULT_ROTATE_RATE: f64 = 10.0 * PI / 180.0;
pub const DEFAULT_ROTATE_DURATION: f64 = 18.0;
pub const DEFAULT_SLIDE_DIRECTIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionKind {
    /// Constant-velocity translation.
    Slide { direction: Vec2, speed: f64 },
    /// Constant-rate rotation about the grasped particle.
    Rotate { angular_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    #[serde(flatten)]
    pub kind: ActionKind,
    pub grasp_particle: usize,
    /// Seconds.
    pub duration: f64,
}

impl ActionSpec {
    pub fn slide(grasp_particle: usize, heading: f64, speed: f64, duration: f64) -> Self {
        Self {
            kind: ActionKind::Slide {
                direction: direction(heading),
                speed,
            },
            grasp_particle,
            duration,
        }
    }

    pub fn rotate(grasp_particle: usize, angular_rate: f64, duration: f64) -> Self {
        Self {
            kind: ActionKind::Rotate { angular_rate },
            grasp_particle,
            duration,
        }
    }

    pub fn is_rotate(&self) -> bool {
        matches!(self.kind, ActionKind::Rotate { .. })
    }

    /// Number of integration steps at `dt`.
    pub fn steps(&self, dt: f64) -> usize {
        (self.duration / dt).round() as usize
    }

    pub fn validate(&self, model: &ParticleModel) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidAction(msg));
        match model.graspable.get(self.grasp_particle) {
            None => {
                return bad(format!(
                    "grasp particle {} out of range",
                    self.grasp_particle
                ))
            }
            Some(false) => {
                return bad(format!("particle {} is not graspable", self.grasp_particle))
            }
            Some(true) => {}
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration {} must be positive", self.duration));
        }
        match self.kind {
            ActionKind::Slide { direction, speed } => {
                if (direction.norm() - 1.0).abs() > 1e-12 {
                    return bad(format!("slide direction {direction:?} is not unit length"));
                }
                if !(speed > 0.0 && speed.is_finite()) {
                    return bad(format!("slide speed {speed} must be positive"));
                }
            }
            ActionKind::Rotate { angular_rate } => {
                if angular_rate == 0.0 || !angular_rate.is_finite() {
                    return bad(format!("angular rate {angular_rate} must be nonzero"));
                }
            }
        }
        Ok(())
    }

    /// Short human-readable tag, e.g. `rotate@3+` or `slide@0:90`.
    pub fn label(&self) -> String {
        match self.kind {
            ActionKind::Rotate { angular_rate } => format!(
                "rotate@{}{}",
                self.grasp_particle,
                if angular_rate > 0.0 { '+' } else { '-' }
            ),
            ActionKind::Slide { direction, .. } => format!(
                "slide@{}:{:.0}",
                self.grasp_particle,
                direction
                    .y
                    .atan2(direction.x)
                    .to_degrees()
                    .rem_euclid(360.0)
            ),
        }
    }
}

/// Both rotation senses and `slide_directions` evenly spaced slides for every graspable particle.
pub fn enumerate_actions(
    model: &ParticleModel,
    slide_directions: usize,
) -> Result<Vec<ActionSpec>> {
    let mut out = Vec::new();
    for i in model.graspable_indices() {
        for rate in [DEFAULT_ROTATE_RATE, -DEFAULT_ROTATE_RATE] {
            out.push(ActionSpec::rotate(i, rate, DEFAULT_ROTATE_DURATION));
        }
        for d in 0..slide_directions {
            let heading = 2.0 * PI * d as f64 / slide_directions as f64;
            out.push(ActionSpec::slide(
                i,
                heading,
                DEFAULT_SLIDE_SPEED,
                DEFAULT_SLIDE_DURATION,
            ));
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyActionSet);
    }
    Ok(out)
}

/// Pose after `time` seconds of the commanded motion.
fn commanded_pose(
    action: &ActionSpec,
    model: &ParticleModel,
    initial: &Vector3<f64>,
    time: f64,
) -> Vector3<f64> {
    match action.kind {
        ActionKind::Slide { direction, speed } => {
            let d = direction * (speed * time);
            initial + Vector3::new(d.x, d.y, 0.0)
        }
        ActionKind::Rotate { angular_rate } => {
            let b = model.positions[action.grasp_particle];
            let pivot = rotation(initial.z) * b + initial.xy();
            let angle = initial.z + angular_rate * time;
            let origin = pivot - rotation(angle) * b;
            Vector3::new(origin.x, origin.y, angle)
        }
    }
}

/// States `0..=T` of the commanded motion.
///
/// Velocities are forward differences of consecutive commanded poses, so the
/// explicit Euler pose update reproduces the commanded poses exactly. For a
/// rotation this leaves the pivot with a residual speed of order
/// `ω² dt r / 2`, well below the default friction threshold.
pub fn kinematic_trajectory(
    action: &ActionSpec,
    model: &ParticleModel,
    initial_pose: &Vector3<f64>,
    config: &SimConfig,
) -> Result<Vec<ObjectState>> {
    action.validate(model)?;
    config.validate()?;
    let steps = action.steps(config.dt);
    if steps == 0 {
        return Err(Error::InvalidAction(format!(
            "duration {} is shorter than one step",
            action.duration
        )));
    }
    if let ActionKind::Slide { direction, speed } = action.kind {
        let v = direction * speed;
        let vel = Vector3::new(v.x, v.y, 0.0);
        return Ok((0..=steps)
            .map(|t| {
                ObjectState::new(
                    commanded_pose(action, model, initial_pose, t as f64 * config.dt),
                    vel,
                )
            })
            .collect());
    }
    let poses: Vec<_> = (0..=steps + 1)
        .map(|t| commanded_pose(action, model, initial_pose, t as f64 * config.dt))
        .collect();
    Ok(poses
        .windows(2)
        .map(|w| ObjectState::new(w[0], (w[1] - w[0]) / config.dt))
        .collect())
}

/// Wrench at `grasp_particle` that makes the dynamics follow `traj`.
///
/// Accelerations are forward differences of the velocities, so feeding the
/// result to `simulate` from `traj[0]` reproduces every state.
pub fn inverse_dynamics_wrench(
    traj: &[ObjectState],
    model: &ParticleModel,
    maps: &GroupMaps,
    h: &HiddenStates,
    grasp_particle: usize,
    config: &SimConfig,
) -> Result<Vec<WrenchInput>> {
    if traj.len() < 2 {
        return Err(Error::InsufficientData(
            "trajectory needs two states".into(),
        ));
    }
    if !(h.total_mass > 0.0) {
        return Err(Error::SingularInertia {
            mass: h.total_mass,
            inertia: h.inertia_cm,
        });
    }
    traj.windows(2)
        .map(|w| {
            let (state, next) = (&w[0], &w[1]);
            let accel = (next.velocity - state.velocity) / config.dt;
            let zero = WrenchInput::zero(grasp_particle);
            let f = StepFeatures::new(model, maps, state, &zero, config)?;
            let c = f.rotation * h.com;
            let (friction, friction_torque) = f.wrench(h, &c);
            let w2 = state.angular_velocity() * state.angular_velocity();
            let ang = accel.z;
            let com_accel = Vec2::new(
                accel.x + ang * c.y - w2 * c.x,
                accel.y - ang * c.x - w2 * c.y,
            );
            let force = com_accel * h.total_mass - friction;
            let torque =
                h.inertia_cm * ang - cross(&force, &(f.grasp_offset - c)) - friction_torque;
            if ang != 0.0 && !(h.inertia_cm > 0.0) {
                return Err(Error::SingularInertia {
                    mass: h.total_mass,
                    inertia: h.inertia_cm,
                });
            }
            Ok(WrenchInput::new(
                grasp_particle,
                Vector3::new(force.x, force.y, torque),
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, world_kinematics};
    use crate::object_model::builtin_object;
    use approx::assert_relative_eq;

    #[test]
    fn l_object_counts() {
        let obj = builtin_object("L1").unwrap();
        let mut model = obj.model.clone();
        // keep four graspable particles
        for (i, g) in model.graspable.iter_mut().enumerate() {
            *g = i < 4;
        }
        let set = enumerate_actions(&model, 4).unwrap();
        assert_eq!(set.iter().filter(|a| a.is_rotate()).count(), 8);
        assert_eq!(set.iter().filter(|a| !a.is_rotate()).count(), 16);
    }

    #[test]
    fn no_graspable_particles_is_an_error() {
        let mut model = builtin_object("I1").unwrap().model;
        model.graspable.iter_mut().for_each(|g| *g = false);
        assert!(matches!(
            enumerate_actions(&model, 4),
            Err(Error::EmptyActionSet)
        ));
    }

    #[test]
    fn defaults() {
        let model = builtin_object("I1").unwrap().model;
        let set = enumerate_actions(&model, 4).unwrap();
        let slide = set.iter().find(|a| !a.is_rotate()).unwrap();
        assert!(matches!(slide.kind, ActionKind::Slide { speed, .. } if speed == 0.05));
        assert_eq!(slide.duration, 4.0);
        let rot = set.iter().find(|a| a.is_rotate()).unwrap();
        if let ActionKind::Rotate { angular_rate } = rot.kind {
            assert_relative_eq!(angular_rate * rot.duration, PI, epsilon = 1e-15);
        }
    }

    #[test]
    fn json_round_trip() {
        let acts = vec![
            ActionSpec::slide(3, 0.5, 0.05, 4.0),
            ActionSpec::rotate(1, -0.1, 18.0),
        ];
        let text = serde_json::to_string(&acts).unwrap();
        assert!(text.contains("\"kind\":\"slide\""));
        let back: Vec<ActionSpec> = serde_json::from_str(&text).unwrap();
        assert_eq!(acts, back);
    }

    #[test]
    fn slide_displacement() {
        let model = builtin_object("I1").unwrap().model;
        let traj = kinematic_trajectory(
            &ActionSpec::slide(0, 0.0, 0.05, 4.0),
            &model,
            &Vector3::zeros(),
            &SimConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.len(), 401);
        assert_relative_eq!(traj[400].pose, Vector3::new(0.2, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn rotate_half_turn_keeps_pivot_fixed() {
        let model = builtin_object("L1").unwrap().model;
        let pivot = 4;
        let init = Vector3::new(0.1, -0.05, 0.3);
        let traj = kinematic_trajectory(
            &ActionSpec::rotate(pivot, DEFAULT_ROTATE_RATE, DEFAULT_ROTATE_DURATION),
            &model,
            &init,
            &SimConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.len(), 1801);
        assert_relative_eq!(traj[1800].pose.z - init.z, PI, epsilon = 1e-12);
        let p0 = traj[0].to_world(&model.positions[pivot]);
        let w = DEFAULT_ROTATE_RATE;
        let dt = 0.01;
        for s in &traj {
            assert!((s.to_world(&model.positions[pivot]) - p0).norm() < 1e-9);
            let v = world_kinematics(&model, s)[pivot].1;
            let r = model.positions[pivot].norm();
            assert!(v.norm() <= 0.5 * w * w * dt * r * (1.0 + 1e-6) + 1e-15);
        }
    }

    #[test]
    fn zero_friction_slide_needs_no_wrench() {
        let mut obj = builtin_object("F1").unwrap();
        obj.params.mus.iter_mut().for_each(|m| *m = 0.0);
        let cfg = SimConfig::default();
        let h = obj.hidden_states(cfg.gravity).unwrap();
        let traj = kinematic_trajectory(
            &ActionSpec::slide(2, 1.0, 0.05, 4.0),
            &obj.model,
            &Vector3::zeros(),
            &cfg,
        )
        .unwrap();
        let u = inverse_dynamics_wrench(&traj, &obj.model, &obj.maps, &h, 2, &cfg).unwrap();
        for w in u {
            assert!(w.u.norm() < 1e-12);
        }
    }

    #[test]
    fn slide_wrench_is_total_friction() {
        let obj = builtin_object("F2").unwrap();
        let cfg = SimConfig::default();
        let h = obj.hidden_states(cfg.gravity).unwrap();
        let heading = 0.7;
        let traj = kinematic_trajectory(
            &ActionSpec::slide(1, heading, 0.05, 4.0),
            &obj.model,
            &Vector3::zeros(),
            &cfg,
        )
        .unwrap();
        let u = inverse_dynamics_wrench(&traj, &obj.model, &obj.maps, &h, 1, &cfg).unwrap();
        let total: f64 = obj.maps.contact.iter().flatten().map(|k| h.s[*k]).sum();
        for w in &u {
            assert_relative_eq!(w.force(), direction(heading) * total, epsilon = 1e-10);
            assert_relative_eq!(w.u.z, u[0].u.z, epsilon = 1e-12);
        }
        let sim = simulate(&obj.model, &obj.maps, &h, traj[0], &u, &cfg).unwrap();
        for (a, b) in sim.states.iter().zip(&traj) {
            assert!((a.velocity - b.velocity).norm() < 1e-9);
        }
    }

    #[test]
    fn rotate_wrench_has_constant_torque_and_sinusoidal_force() {
        let obj = builtin_object("L2").unwrap();
        let cfg = SimConfig::default();
        let h = obj.hidden_states(cfg.gravity).unwrap();
        let act = ActionSpec::rotate(0, DEFAULT_ROTATE_RATE, DEFAULT_ROTATE_DURATION);
        let traj = kinematic_trajectory(&act, &obj.model, &Vector3::zeros(), &cfg).unwrap();
        let u = inverse_dynamics_wrench(&traj, &obj.model, &obj.maps, &h, 0, &cfg).unwrap();
        let mag = u[0].force().norm();
        for (t, w) in u.iter().enumerate() {
            assert_relative_eq!(w.u.z, u[0].u.z, epsilon = 1e-9);
            assert_relative_eq!(w.force().norm(), mag, epsilon = 1e-9);
            // force turns with the body
            let turned = rotation(DEFAULT_ROTATE_RATE * t as f64 * cfg.dt) * u[0].force();
            assert_relative_eq!(w.force(), turned, epsilon = 1e-9);
        }
    }
}

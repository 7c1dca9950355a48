//! Simulated robot: commanded motions, the wrench needed to execute them,
//! sensor noise and the same filtering a real pipeline would apply.

use nalgebra::{DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::NoiseModel;
use crate::actions::{
    filter_feedback, inverse_dynamics_wrench, kinematic_trajectory, ActionKind, ActionSpec,
};
use crate::dynamics::{pivot_response, ObjectState, SimConfig, Trajectory, WrenchInput};
use crate::error::{Error, Result};
use crate::estimation::{ObservationSource, PivotSweep};
use crate::geometry::{rotation, spin, Vec2};
use crate::linalg::polyfit;
use crate::object_model::{HiddenStates, Object};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Angular rate when the torque is applied (rad/s).
    pub initial_rate: f64,
    /// Seconds.
    pub duration: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            initial_rate: 10f64.to_radians(),
            duration: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSource {
    pub object: Object,
    pub truth: HiddenStates,
    pub config: SimConfig,
    pub noise: NoiseModel,
    pub sweep: SweepConfig,
    pub seed: u64,
}

/// FNV-1a, used to derive a stream per request from the run seed.
fn stream_seed(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn gaussian(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma.max(0.0)).expect("non-negative sigma")
}

impl SyntheticSource {
    pub fn new(object: Object, noise: NoiseModel, seed: u64, config: SimConfig) -> Result<Self> {
        noise.validate()?;
        let truth = object.hidden_states(config.gravity)?;
        Ok(Self {
            object,
            truth,
            config,
            noise,
            sweep: SweepConfig::default(),
            seed,
        })
    }

    fn rng(&self, key: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(stream_seed(self.seed, key))
    }

    /// Noiseless execution of `action`: commanded states and the exact wrench.
    pub fn ground_truth(&self, action: &ActionSpec) -> Result<Trajectory> {
        let obj = &self.object;
        let states = kinematic_trajectory(action, &obj.model, &Vector3::zeros(), &self.config)?;
        let inputs = inverse_dynamics_wrench(
            &states,
            &obj.model,
            &obj.maps,
            &self.truth,
            action.grasp_particle,
            &self.config,
        )?;
        Ok(Trajectory {
            config: self.config,
            states,
            inputs,
        })
    }

    /// Refit noisy poses to the commanded motion family and regenerate the states.
    fn smooth_poses(
        &self,
        action: &ActionSpec,
        poses: &[Vector3<f64>],
    ) -> Result<Vec<ObjectState>> {
        let dt = self.config.dt;
        let t: Vec<f64> = (0..poses.len()).map(|i| i as f64 * dt).collect();
        let channel = |c: usize| poses.iter().map(|p| p[c]).collect::<Vec<_>>();
        let model = &self.object.model;
        match action.kind {
            ActionKind::Slide { .. } => {
                let (fx, _) = polyfit(&t, &channel(0), 1);
                let (fy, _) = polyfit(&t, &channel(1), 1);
                let angle = DVector::from_vec(channel(2)).mean();
                let v = Vec2::new(fx[1], fy[1]);
                let fitted = ActionSpec {
                    kind: ActionKind::Slide {
                        direction: v / v.norm(),
                        speed: v.norm(),
                    },
                    ..*action
                };
                kinematic_trajectory(
                    &fitted,
                    model,
                    &Vector3::new(fx[0], fy[0], angle),
                    &self.config,
                )
            }
            ActionKind::Rotate { .. } => {
                let (fw, _) = polyfit(&t, &channel(2), 1);
                let b = model.positions[action.grasp_particle];
                let pivot = poses
                    .iter()
                    .zip(&t)
                    .map(|(p, ti)| p.xy() + rotation(fw[0] + fw[1] * ti) * b)
                    .sum::<Vec2>()
                    / poses.len() as f64;
                let origin = pivot - rotation(fw[0]) * b;
                let fitted = ActionSpec {
                    kind: ActionKind::Rotate {
                        angular_rate: fw[1],
                    },
                    ..*action
                };
                kinematic_trajectory(
                    &fitted,
                    model,
                    &Vector3::new(origin.x, origin.y, fw[0]),
                    &self.config,
                )
            }
        }
    }
}

impl ObservationSource for SyntheticSource {
    fn sim_config(&self) -> SimConfig {
        self.config
    }

    fn weigh(&self) -> Result<f64> {
        let mut rng = self.rng("weigh");
        Ok(self.truth.total_mass + gaussian(self.noise.scale).sample(&mut rng))
    }

    fn observe(&self, action: &ActionSpec) -> Result<Trajectory> {
        let truth = self.ground_truth(action)?;
        let mut rng = self.rng(&format!("observe {action:?}"));
        let n = &self.noise;
        let (fx, tq) = (gaussian(n.wrench_force), gaussian(n.wrench_torque));
        let noisy: Vec<WrenchInput> = truth
            .inputs
            .iter()
            .map(|w| {
                let e = Vector3::new(
                    fx.sample(&mut rng),
                    fx.sample(&mut rng),
                    tq.sample(&mut rng),
                );
                WrenchInput::new(w.particle, w.u + e)
            })
            .collect();
        let inputs = filter_feedback(&noisy, &action.kind, self.config.dt)?;
        let states = if n.pose_position > 0.0 || n.pose_angle > 0.0 {
            let (px, pw) = (gaussian(n.pose_position), gaussian(n.pose_angle));
            let poses: Vec<Vector3<f64>> = truth
                .states
                .iter()
                .map(|s| {
                    s.pose
                        + Vector3::new(
                            px.sample(&mut rng),
                            px.sample(&mut rng),
                            pw.sample(&mut rng),
                        )
                })
                .collect();
            self.smooth_poses(action, &poses)?
        } else {
            truth.states
        };
        Ok(Trajectory {
            config: self.config,
            states,
            inputs,
        })
    }

    fn pivot_sweep(&self, pivot: usize, target_accel: f64) -> Result<PivotSweep> {
        let obj = &self.object;
        let b = *obj
            .model
            .positions
            .get(pivot)
            .ok_or_else(|| Error::InvalidAction(format!("pivot {pivot} out of range")))?;
        let dt = self.config.dt;
        let steps = (self.sweep.duration / dt).round() as usize;
        let state_at = |angle: f64, rate: f64| {
            let arm = rotation(angle) * b;
            let origin = -arm;
            let v = -spin(rate, &arm);
            ObjectState::new(
                Vector3::new(origin.x, origin.y, angle),
                Vector3::new(v.x, v.y, rate),
            )
        };
        // The gripper's controller picks the torque that yields the requested acceleration.
        let probe = pivot_response(
            &obj.model,
            &obj.maps,
            &self.truth,
            &state_at(0.0, self.sweep.initial_rate),
            pivot,
            0.0,
            &self.config,
        )?;
        let torque = probe.pivot_inertia * target_accel - probe.friction_torque;
        let (mut angle, mut rate) = (0.0, self.sweep.initial_rate);
        let mut angles = Vec::with_capacity(steps + 1);
        angles.push(angle);
        for _ in 0..steps {
            let resp = pivot_response(
                &obj.model,
                &obj.maps,
                &self.truth,
                &state_at(angle, rate),
                pivot,
                torque,
                &self.config,
            )?;
            angle += rate * dt;
            rate += resp.angular * dt;
            angles.push(angle);
        }
        let mut rng = self.rng(&format!("sweep {pivot} {:016x}", target_accel.to_bits()));
        let (pw, tq) = (
            gaussian(self.noise.pose_angle),
            gaussian(self.noise.wrench_torque),
        );
        angles.iter_mut().for_each(|a| *a += pw.sample(&mut rng));
        let torques = (0..steps).map(|_| torque + tq.sample(&mut rng)).collect();
        Ok(PivotSweep {
            pivot,
            dt,
            angles,
            torques,
        })
    }
}

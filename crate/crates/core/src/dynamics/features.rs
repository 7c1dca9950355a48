//! Per-step sufficient statistics for the friction terms.
//!
//! At fixed state the sliding directions do not depend on any mass or
//! friction parameter, so each contact group collapses to two sums and the
//! acceleration becomes cheap to evaluate for many candidate parameters.

use nalgebra::{DMatrix, Matrix2, Vector3};

use super::{sliding_direction, world_kinematics, ObjectState, SimConfig, WrenchInput};
use crate::error::{Error, Result};
use crate::geometry::{cross, rotation, Vec2};
use crate::object_model::{GroupMaps, HiddenStates, ParticleModel};

#[derive(Debug, Clone, PartialEq)]
pub struct StepFeatures {
    pub rotation: Matrix2<f64>,
    pub omega: f64,
    pub u: Vector3<f64>,
    /// Grasp particle relative to the origin, world frame.
    pub grasp_offset: Vec2,
    /// Per contact group, Σ v̂_i.
    pub v_sum: Vec<Vec2>,
    /// Per contact group, Σ v̂_i ⊗ (p_i − x).
    pub torque_sum: Vec<f64>,
}

impl StepFeatures {
    pub fn new(
        model: &ParticleModel,
        maps: &GroupMaps,
        state: &ObjectState,
        input: &WrenchInput,
        config: &SimConfig,
    ) -> Result<Self> {
        if input.particle >= model.len() {
            return Err(Error::InvalidAction(format!(
                "grasp particle {} out of range",
                input.particle
            )));
        }
        let kin = world_kinematics(model, state);
        let origin = state.position();
        let mut v_sum = vec![Vec2::zeros(); maps.n_contact];
        let mut torque_sum = vec![0.0; maps.n_contact];
        for ((p, v), group) in kin.iter().zip(&maps.contact) {
            if let (Some(k), Some(dir)) = (group, sliding_direction(v, config.velocity_epsilon)) {
                v_sum[*k] += dir;
                torque_sum[*k] += cross(&dir, &(p - origin));
            }
        }
        Ok(Self {
            rotation: rotation(state.angle()),
            omega: state.angular_velocity(),
            u: input.u,
            grasp_offset: kin[input.particle].0 - origin,
            v_sum,
            torque_sum,
        })
    }

    pub fn n_contact(&self) -> usize {
        self.v_sum.len()
    }

    /// Net force and torque about the center of mass, given its world offset.
    pub fn wrench(&self, h: &HiddenStates, com_offset: &Vec2) -> (Vec2, f64) {
        let mut force = self.u.xy();
        let mut torque = self.u.z + cross(&self.u.xy(), &(self.grasp_offset - com_offset));
        for k in 0..self.n_contact() {
            force -= self.v_sum[k] * h.s[k];
            torque -= h.s[k] * (self.torque_sum[k] - cross(&self.v_sum[k], com_offset));
        }
        (force, torque)
    }

    /// State-coordinate acceleration, identical to `state_accel` at the same step.
    pub fn accel(&self, h: &HiddenStates) -> Result<Vector3<f64>> {
        let c = self.rotation * h.com;
        let (force, torque) = self.wrench(h, &c);
        let (lin, ang) = self.com_accel(h, force, torque)?;
        let w2 = self.omega * self.omega;
        Ok(Vector3::new(
            lin.x - ang * c.y + w2 * c.x,
            lin.y + ang * c.x + w2 * c.y,
            ang,
        ))
    }

    fn com_accel(&self, h: &HiddenStates, force: Vec2, torque: f64) -> Result<(Vec2, f64)> {
        if !(h.total_mass > 0.0) || (torque != 0.0 && !(h.inertia_cm > 0.0)) {
            return Err(Error::SingularInertia {
                mass: h.total_mass,
                inertia: h.inertia_cm,
            });
        }
        let ang = if torque == 0.0 {
            0.0
        } else {
            torque / h.inertia_cm
        };
        Ok((force / h.total_mass, ang))
    }

    /// Acceleration and its Jacobian with respect to `[M, c_bx, c_by, I_cm, s_1..s_n]`.
    pub fn accel_jacobian(&self, h: &HiddenStates) -> Result<(Vector3<f64>, DMatrix<f64>)> {
        if !(h.total_mass > 0.0 && h.inertia_cm > 0.0) {
            return Err(Error::SingularInertia {
                mass: h.total_mass,
                inertia: h.inertia_cm,
            });
        }
        let m = h.total_mass;
        let i = h.inertia_cm;
        let c = self.rotation * h.com;
        let (force, torque) = self.wrench(h, &c);
        let ang = torque / i;
        let w2 = self.omega * self.omega;
        let acc = Vector3::new(
            force.x / m - ang * c.y + w2 * c.x,
            force.y / m + ang * c.x + w2 * c.y,
            ang,
        );
        let n = self.n_contact();
        let mut jac = DMatrix::zeros(3, 4 + n);
        // total mass
        jac[(0, 0)] = -force.x / (m * m);
        jac[(1, 0)] = -force.y / (m * m);
        // center of mass, world offset first: dτ/dc = (F_y, −F_x)
        let dang = Vec2::new(force.y, -force.x) / i;
        let dc = Matrix2::new(
            -c.y * dang.x + w2,
            -c.y * dang.y - ang,
            c.x * dang.x + ang,
            c.x * dang.y + w2,
        );
        let dcb = dc * self.rotation;
        let dang_b = dang.transpose() * self.rotation;
        for col in 0..2 {
            jac[(0, 1 + col)] = dcb[(0, col)];
            jac[(1, 1 + col)] = dcb[(1, col)];
            jac[(2, 1 + col)] = dang_b[col];
        }
        // inertia
        let di = -ang / i;
        jac[(0, 3)] = -c.y * di;
        jac[(1, 3)] = c.x * di;
        jac[(2, 3)] = di;
        // friction magnitudes
        for k in 0..n {
            let df = -self.v_sum[k] / m;
            let da = -(self.torque_sum[k] - cross(&self.v_sum[k], &c)) / i;
            jac[(0, 4 + k)] = df.x - c.y * da;
            jac[(1, 4 + k)] = df.y + c.x * da;
            jac[(2, 4 + k)] = da;
        }
        Ok((acc, jac))
    }
}

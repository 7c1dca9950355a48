//! Pivot inertias from torque sweeps, then center of mass and central inertia
//! through the parallel-axis relation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::linalg::{lstsq, polyfit, rank};

/// Angle record of one constant-torque sweep with particle `pivot` held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotSweep {
    pub pivot: usize,
    pub dt: f64,
    /// Object angle at each sample (rad).
    pub angles: Vec<f64>,
    /// Torque read at the gripper during each step (N·m).
    pub torques: Vec<f64>,
}

impl PivotSweep {
    /// Mean torque and angular acceleration from a quadratic fit of the angle.
    pub fn torque_and_accel(&self) -> Result<(f64, f64, f64)> {
        if self.angles.len() < 4 || self.torques.is_empty() {
            return Err(Error::InsufficientData(format!(
                "pivot {} sweep has {} samples",
                self.pivot,
                self.angles.len()
            )));
        }
        let t: Vec<f64> = (0..self.angles.len()).map(|i| i as f64 * self.dt).collect();
        let (coef, rms) = polyfit(&t, &self.angles, 2);
        let torque = self.torques.iter().sum::<f64>() / self.torques.len() as f64;
        Ok((torque, 2.0 * coef[2], rms))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PivotInertiaSample {
    pub pivot: usize,
    /// Pivot position in the body frame (m).
    pub position: Vec2,
    /// Moment of inertia about the pivot (kg·m²).
    pub inertia: f64,
    /// RMS residual of the linear fit (rad/s²).
    pub residual: f64,
}

/// Fit `a_w = u_w / I_j + b` over `(u_w, a_w)` pairs; the intercept absorbs
/// the friction torque about the pivot.
pub fn fit_pivot_inertia(
    pivot: usize,
    position: Vec2,
    samples: &[(f64, f64)],
) -> Result<PivotInertiaSample> {
    let scale = samples.iter().fold(0.0f64, |m, (u, _)| m.max(u.abs()));
    let distinct = samples
        .iter()
        .any(|(u, _)| (u - samples[0].0).abs() > 1e-9 * scale.max(f64::MIN_POSITIVE));
    if samples.len() < 2 || !distinct {
        return Err(Error::InsufficientExcitation(format!(
            "pivot {pivot}: need at least two distinct torque levels"
        )));
    }
    let u: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let a: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (coef, rms) = polyfit(&u, &a, 1);
    let slope = coef[1];
    if !(slope > 0.0) {
        return Err(Error::NonPhysicalInertia { pivot, slope });
    }
    Ok(PivotInertiaSample {
        pivot,
        position,
        inertia: 1.0 / slope,
        residual: rms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComInertiaFit {
    pub com: Vec2,
    pub inertia_cm: f64,
    /// RMS residual of the linearized system (kg·m²).
    pub residual: f64,
}

/// Solve `I_j − M|p_j|² = α − 2M p_j·c` for `(α, c)` and return `I_cm = α − M|c|²`.
pub fn solve_com_inertia(samples: &[PivotInertiaSample], total_mass: f64) -> Result<ComInertiaFit> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} pivot samples, need at least 3",
            samples.len()
        )));
    }
    let n = samples.len();
    let geometry = DMatrix::from_fn(n, 3, |r, k| match k {
        0 => 1.0,
        1 => samples[r].position.x,
        _ => samples[r].position.y,
    });
    if rank(&geometry, 1e-9) < 3 {
        return Err(Error::DegenerateGeometry(
            "pivots are collinear; the center of mass is unobservable across the line".into(),
        ));
    }
    let a = DMatrix::from_fn(n, 3, |r, k| match k {
        0 => 1.0,
        1 => -2.0 * total_mass * samples[r].position.x,
        _ => -2.0 * total_mass * samples[r].position.y,
    });
    let b = DVector::from_iterator(
        n,
        samples
            .iter()
            .map(|s| s.inertia - total_mass * s.position.norm_squared()),
    );
    let x = lstsq(&a, &b, 1e-14);
    let residual = ((&a * &x - &b).norm_squared() / n as f64).sqrt();
    let com = Vec2::new(x[1], x[2]);
    let inertia_cm = x[0] - total_mass * com.norm_squared();
    if !(inertia_cm > 0.0) {
        return Err(Error::InconsistentSamples(inertia_cm));
    }
    Ok(ComInertiaFit {
        com,
        inertia_cm,
        residual,
    })
}

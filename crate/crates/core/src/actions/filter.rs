use nalgebra::{DMatrix, DVector, Vector3};

use super::ActionKind;
use crate::dynamics::WrenchInput;
use crate::error::{Error, Result};
use crate::linalg::lstsq;

/// Replace the measured wrench by its best fit within the action's motion family.
///
/// Slides keep every channel constant. Rotations keep the torque constant and
/// fit each force channel with `a + b cos(ωt) + c sin(ωt)` at the commanded rate.
pub fn filter_feedback(
    raw: &[WrenchInput],
    kind: &ActionKind,
    dt: f64,
) -> Result<Vec<WrenchInput>> {
    if raw.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} feedback samples, need at least 3",
            raw.len()
        )));
    }
    let n = raw.len();
    let particle = raw[0].particle;
    let channel = |c: usize| DVector::from_iterator(n, raw.iter().map(|w| w.u[c]));
    let mean = |c: usize| channel(c).mean();
    let fitted: Vec<Vector3<f64>> = match *kind {
        ActionKind::Slide { .. } => {
            let u = Vector3::new(mean(0), mean(1), mean(2));
            vec![u; n]
        }
        ActionKind::Rotate { angular_rate } => {
            let basis = DMatrix::from_fn(n, 3, |t, k| {
                let phase = angular_rate * t as f64 * dt;
                match k {
                    0 => 1.0,
                    1 => phase.cos(),
                    _ => phase.sin(),
                }
            });
            let fx = &basis * lstsq(&basis, &channel(0), 1e-12);
            let fy = &basis * lstsq(&basis, &channel(1), 1e-12);
            let torque = mean(2);
            (0..n).map(|t| Vector3::new(fx[t], fy[t], torque)).collect()
        }
    };
    Ok(fitted
        .into_iter()
        .map(|u| WrenchInput::new(particle, u))
        .collect())
}

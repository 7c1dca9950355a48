//! Per-group masses from the Hidden States.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{condition_number, lstsq, rank};
use crate::object_model::{GroupMaps, HiddenStates, ParticleModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassRecovery {
    pub masses: Vec<f64>,
    /// RMS residual of the (scaled) linear system.
    pub residual: f64,
    pub condition_number: f64,
    /// Rows contributed by friction ratios between groups that share a material.
    pub ratio_rows: usize,
    /// Groups clamped to zero mass.
    pub clamped: Vec<usize>,
}

/// Contact-group pairs with the same friction group but different mass groups.
///
/// For such a pair `s_k / m_a = s_l / m_b`, a constraint linear in `m`.
fn ratio_rows(h: &HiddenStates, maps: &GroupMaps) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for k in 0..maps.n_contact {
        for l in k + 1..maps.n_contact {
            let (fk, fl) = (
                maps.contact_friction_group(k)?,
                maps.contact_friction_group(l)?,
            );
            let (ma, mb) = (maps.contact_mass_group(k)?, maps.contact_mass_group(l)?);
            let norm = (h.s[k].powi(2) + h.s[l].powi(2)).sqrt();
            if fk != fl || ma == mb || norm == 0.0 {
                continue;
            }
            let mut row = vec![0.0; maps.n_mass];
            row[ma] = h.s[l] / norm;
            row[mb] = -h.s[k] / norm;
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Solve total mass, first moment and second moment equations for the group masses.
pub fn recover_m(
    h: &HiddenStates,
    model: &ParticleModel,
    maps: &GroupMaps,
) -> Result<MassRecovery> {
    maps.validate(model)?;
    let n_m = maps.n_mass;
    if n_m == 1 {
        return Ok(MassRecovery {
            masses: vec![h.total_mass / model.len() as f64],
            residual: 0.0,
            condition_number: 1.0,
            ratio_rows: 0,
            clamped: vec![],
        });
    }
    let length = model
        .positions
        .iter()
        .map(|p| (p - h.com).norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut moment = vec![vec![0.0; n_m]; 4];
    for (p, g) in model.positions.iter().zip(&maps.mass) {
        let d = p - h.com;
        moment[0][*g] += 1.0;
        moment[1][*g] += d.x / length;
        moment[2][*g] += d.y / length;
        moment[3][*g] += d.norm_squared() / (length * length);
    }
    let rhs = [h.total_mass, 0.0, 0.0, h.inertia_cm / (length * length)];
    for (row, b) in moment.into_iter().zip(rhs) {
        rows.push((row, b));
    }
    let ratios = ratio_rows(h, maps)?;
    let ratio_count = ratios.len();
    rows.extend(ratios.into_iter().map(|r| (r, 0.0)));

    let a = DMatrix::from_fn(rows.len(), n_m, |r, c| rows[r].0[c]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let achieved = rank(&a, 1e-10);
    if achieved < n_m {
        return Err(Error::UnidentifiableMass {
            null_dim: n_m - achieved,
        });
    }
    // Active set: drop the most negative group until all masses are non-negative.
    let mut active: Vec<usize> = (0..n_m).collect();
    let mut clamped = Vec::new();
    let masses = loop {
        let sub = DMatrix::from_fn(a.nrows(), active.len(), |r, c| a[(r, active[c])]);
        let x = lstsq(&sub, &b, 1e-14);
        let worst = (0..active.len())
            .filter(|&i| x[i] < 0.0)
            .min_by(|&i, &j| x[i].total_cmp(&x[j]));
        match worst {
            Some(i) if active.len() > 1 => {
                clamped.push(active.remove(i));
            }
            _ => {
                let mut m = vec![0.0; n_m];
                for (i, g) in active.iter().enumerate() {
                    m[*g] = x[i].max(0.0);
                }
                break m;
            }
        }
    };
    let res = &a * DVector::from_column_slice(&masses) - &b;
    clamped.sort_unstable();
    Ok(MassRecovery {
        masses,
        residual: (res.norm_squared() / a.nrows() as f64).sqrt(),
        condition_number: condition_number(&a),
        ratio_rows: ratio_count,
        clamped,
    })
}

//! Small dense least-squares helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

/// Numerical rank: singular values above `rel_tol * sigma_max` count.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.singular_values();
    let max = sv.max();
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Ratio of extreme singular values; infinite when rank deficient.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Minimum-norm least-squares solution via SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let max = svd.singular_values.max();
    svd.solve(b, rel_tol * max.max(f64::MIN_POSITIVE))
        .expect("SVD computed with both factors")
}

/// Fit `y ≈ c0 + c1 x + ... + c_deg x^deg`, returning coefficients and RMS residual.
pub fn polyfit(x: &[f64], y: &[f64], deg: usize) -> (Vec<f64>, f64) {
    let n = x.len();
    let a = DMatrix::from_fn(n, deg + 1, |r, c| x[r].powi(c as i32));
    let b = DVector::from_column_slice(y);
    let coef = lstsq(&a, &b, 1e-14);
    let res = &a * &coef - &b;
    let rms = (res.norm_squared() / n.max(1) as f64).sqrt();
    (coef.iter().copied().collect(), rms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyfit_recovers_quadratic() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 - 2.0 * t + 0.25 * t * t).collect();
        let (c, rms) = polyfit(&x, &y, 2);
        assert!((c[0] - 1.0).abs() < 1e-10);
        assert!((c[1] + 2.0).abs() < 1e-10);
        assert!((c[2] - 0.25).abs() < 1e-10);
        assert!(rms < 1e-10);
    }

    #[test]
    fn rank_of_outer_product_is_one() {
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let v = DVector::from_vec(vec![4.0, -1.0]);
        assert_eq!(rank(&(&u * v.transpose()), 1e-8), 1);
    }
}

use nalgebra::{DMatrix, DVector};

use super::IndexError;

/// Updates are refused when `|1 + q^T A^{-1} p|` falls below this.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// `(A + p q^T)^{-1} = A^{-1} - (A^{-1} p)(q^T A^{-1}) / (1 + q^T A^{-1} p)`.
pub fn sherman_morrison_update(
    inverse: &DMatrix<f64>,
    p: &DVector<f64>,
    q: &DVector<f64>,
) -> Result<DMatrix<f64>, IndexError> {
    let mut out = inverse.clone();
    sherman_morrison_in_place(&mut out, p, q)?;
    Ok(out)
}

/// In-place form of [`sherman_morrison_update`]. On error `inverse` is left
/// untouched.
pub fn sherman_morrison_in_place(
    inverse: &mut DMatrix<f64>,
    p: &DVector<f64>,
    q: &DVector<f64>,
) -> Result<(), IndexError> {
    let kp = &*inverse * p;
    let denom = 1.0 + q.dot(&kp);
    if denom.is_nan() || denom.abs() < DEGENERACY_THRESHOLD {
        return Err(IndexError::DegenerateUpdate(denom));
    }
    let qk = inverse.tr_mul(q);
    inverse.ger(-1.0 / denom, &kp, &qk, 1.0);
    Ok(())
}

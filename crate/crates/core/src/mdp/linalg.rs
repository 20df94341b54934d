//! Dense LU solves with an explicit degeneracy check.

use nalgebra::{DMatrix, DVector};

use super::MdpError;

/// Smallest accepted ratio between the smallest and largest LU pivot.
const PIVOT_RATIO: f64 = 1e-13;

fn checked_lu(a: DMatrix<f64>) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, MdpError> {
    let lu = a.lu();
    let u = lu.u();
    let diag = u.diagonal();
    let max = diag.amax();
    let min = diag.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if !(max.is_finite() && max > 0.0 && min > PIVOT_RATIO * max) {
        return Err(MdpError::SingularSystem);
    }
    Ok(lu)
}

pub fn solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, MdpError> {
    let x = checked_lu(a)?.solve(b).ok_or(MdpError::SingularSystem)?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(MdpError::SingularSystem)
    }
}

pub fn inverse(a: DMatrix<f64>) -> Result<DMatrix<f64>, MdpError> {
    checked_lu(a)?.try_inverse().ok_or(MdpError::SingularSystem)
}

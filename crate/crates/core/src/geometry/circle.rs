//! Circle backend: S^1 embedded in R^2, points (cos t, sin t).
//!
//! The signed angle from x to y is recovered with atan2 of the cross and
//! dot products, which stays fully conditioned for nearby points where
//! acos of the dot product would lose half the significant digits. The
//! canonical basis vector at x is the counterclockwise unit tangent
//! (-x2, x1), so the single tangent coordinate is that signed angle.

use crate::error::{Error, Result};
use crate::geometry::CUT_LOCUS_TOL;

/// Signed angle from x to y in (-pi, pi].
fn signed_angle(x: &[f64], y: &[f64]) -> f64 {
    let cross = x[0] * y[1] - x[1] * y[0];
    let dot = x[0] * y[0] + x[1] * y[1];
    cross.atan2(dot)
}

pub fn dist(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(signed_angle(x, y).abs())
}

pub fn is_antipodal(x: &[f64], y: &[f64]) -> bool {
    let dot = x[0] * y[0] + x[1] * y[1];
    dot <= -1.0 + CUT_LOCUS_TOL
}

pub fn exp(x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
    // Rotate x by the angle v[0]; rotation is exact on the constraint up to
    // rounding, the final renormalization removes that drift.
    let (s, c) = v[0].sin_cos();
    out[0] = c * x[0] - s * x[1];
    out[1] = s * x[0] + c * x[1];
    crate::manifold::Manifold::Circle.project(out);
    Ok(())
}

pub fn log(x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
    if is_antipodal(x, y) {
        return Err(Error::CutLocus { item: 0, component: 0 });
    }
    out[0] = signed_angle(x, y);
    Ok(())
}

pub fn tangent_basis(x: &[f64], out: &mut [f64]) -> Result<()> {
    out[0] = -x[1];
    out[1] = x[0];
    Ok(())
}

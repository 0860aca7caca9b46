//! Open probability simplex backend: points (x1, x2) with xi > 0 and
//! x1 + x2 = 1, carrying the Fisher-Rao metric.
//!
//! The square-root map z = (sqrt(x1), sqrt(x2)) sends the simplex onto the
//! open quarter arc of the unit circle and scales the metric by 1/4, so
//! geodesics are circle arcs and all maps reduce to arithmetic on the angle
//! q = atan2(sqrt(x2), sqrt(x1)) in (0, pi/2). Geodesic distance is
//! 2 |q_x - q_y|, making the total diameter pi. The manifold is not
//! complete: geodesics reach the corners in finite time, so exp is only
//! defined while the angle stays strictly inside the arc.

use crate::error::{Error, Result};
use crate::geometry::CUT_LOCUS_TOL;
use crate::manifold::Manifold;
use std::f64::consts::FRAC_PI_2;

/// Quarter-arc angle of a simplex point, in (0, pi/2).
fn angle(x: &[f64]) -> f64 {
    x[1].sqrt().atan2(x[0].sqrt())
}

pub fn dist(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(2.0 * (angle(x) - angle(y)).abs())
}

/// Two interior points are never separated by a cut locus: the only
/// candidate (an arc of length pi, hitting both corners) cannot occur with
/// both endpoints strictly inside. The check is kept literal anyway so the
/// predicate stays meaningful for near-boundary data.
pub fn is_cut_locus(x: &[f64], y: &[f64]) -> bool {
    let dot = (x[0] * y[0]).sqrt() + (x[1] * y[1]).sqrt();
    dot <= CUT_LOCUS_TOL
}

/// The orthonormal basis vector at x is sqrt(x1 x2) * (1, -1); a positive
/// coordinate moves toward larger x1 (smaller angle).
pub fn tangent_basis(x: &[f64], out: &mut [f64]) -> Result<()> {
    let g = (x[0] * x[1]).sqrt();
    out[0] = g;
    out[1] = -g;
    Ok(())
}

pub fn exp(x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
    let q = angle(x) - 0.5 * v[0];
    if q <= 0.0 || q >= FRAC_PI_2 {
        return Err(Error::Domain(format!(
            "exp leaves the open simplex (target arc angle {q})"
        )));
    }
    let (s, c) = q.sin_cos();
    out[0] = c * c;
    out[1] = s * s;
    Manifold::Simplex1.project(out);
    Ok(())
}

pub fn log(x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
    out[0] = 2.0 * (angle(x) - angle(y));
    Ok(())
}

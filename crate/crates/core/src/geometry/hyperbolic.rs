//! Hyperbolic plane backend: the upper hyperboloid sheet
//! {x in R^3 : x1^2 + x2^2 - x3^2 = -1, x3 > 0} with the Minkowski
//! bilinear form <u, v> = u1 v1 + u2 v2 - u3 v3.
//!
//! Distance is computed from the Minkowski norm of the coordinate
//! difference, d = 2 asinh(|x - y|_H / 2), which avoids the catastrophic
//! cancellation acosh(-<x, y>) suffers near 1. The tangent basis at x
//! projects the first two coordinate axes onto the tangent plane and
//! orthonormalizes them under the (there positive definite) Minkowski form;
//! the projections never degenerate because the axes are spacelike while x
//! is timelike.

use crate::error::{Error, Result};
use crate::geometry::CLAMP_SLACK;
use crate::manifold::Manifold;

fn mink(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

pub fn dist(x: &[f64], y: &[f64]) -> Result<f64> {
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let q = mink(&d, &d);
    if q < -CLAMP_SLACK {
        return Err(Error::Domain(format!(
            "points not on a common hyperboloid sheet (difference norm {q})"
        )));
    }
    Ok(2.0 * (0.5 * q.max(0.0).sqrt()).asinh())
}

pub fn exp(x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
    let mut basis = [0.0; 6];
    tangent_basis(x, &mut basis)?;
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let (ch, sh) = (n.cosh(), n.sinh());
    for k in 0..3 {
        let t = v[0] * basis[k] + v[1] * basis[3 + k];
        out[k] = ch * x[k] + sh * t / n;
    }
    Manifold::Hyperbolic2.project(out);
    Ok(())
}

pub fn log(x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
    let c = -mink(x, y);
    if c < 1.0 - CLAMP_SLACK {
        return Err(Error::Domain(format!(
            "points not on a common hyperboloid sheet (form value {c})"
        )));
    }
    // u = y - c x is the tangential part of y at x; its Minkowski norm is
    // sinh(d), so scaling u to length d gives the log.
    let c = c.max(1.0);
    let u = [y[0] - c * x[0], y[1] - c * x[1], y[2] - c * x[2]];
    let un = mink(&u, &u).max(0.0).sqrt();
    if un == 0.0 {
        out.fill(0.0);
        return Ok(());
    }
    let d = dist(x, y)?;
    let scale = d / un;
    let mut basis = [0.0; 6];
    tangent_basis(x, &mut basis)?;
    out[0] = scale * mink(&u, &basis[0..3]);
    out[1] = scale * mink(&u, &basis[3..6]);
    Ok(())
}

pub fn tangent_basis(x: &[f64], out: &mut [f64]) -> Result<()> {
    // Project axis k onto the tangent plane: a + <a, x> x (note <x, x> = -1).
    let mut e1 = [x[0] * x[0], x[0] * x[1], x[0] * x[2]];
    e1[0] += 1.0;
    let n1 = mink(&e1, &e1).sqrt();
    e1.iter_mut().for_each(|v| *v /= n1);

    let mut e2 = [x[1] * x[0], x[1] * x[1], x[1] * x[2]];
    e2[1] += 1.0;
    let c = mink(&e2, &e1);
    for k in 0..3 {
        e2[k] -= c * e1[k];
    }
    let n2 = mink(&e2, &e2).sqrt();
    e2.iter_mut().for_each(|v| *v /= n2);

    out[..3].copy_from_slice(&e1);
    out[3..6].copy_from_slice(&e2);
    Ok(())
}

//! Sphere backend: unit S^2 in R^3.
//!
//! Distance uses atan2 of the cross product norm against the dot product
//! instead of acos, which keeps full precision for nearby points and is
//! bitwise symmetric in its arguments. The canonical basis at x
//! projects the two coordinate axes least aligned with x and orthonormalizes
//! them in axis order, so the basis is deterministic in x alone.

use crate::error::{Error, Result};
use crate::geometry::CUT_LOCUS_TOL;
use crate::manifold::Manifold;

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

/// Component of y orthogonal to x, i.e. y - <x,y> x.
fn tangential(x: &[f64], y: &[f64], c: f64) -> [f64; 3] {
    [y[0] - c * x[0], y[1] - c * x[1], y[2] - c * x[2]]
}

pub fn dist(x: &[f64], y: &[f64]) -> Result<f64> {
    // atan2 of the cross product norm against the dot product. Swapping the
    // arguments negates each cross component exactly and leaves the dot
    // unchanged, so the distance is bitwise symmetric, which the
    // deterministic patch search relies on.
    let cx = x[1] * y[2] - x[2] * y[1];
    let cy = x[2] * y[0] - x[0] * y[2];
    let cz = x[0] * y[1] - x[1] * y[0];
    let s = (cx * cx + cy * cy + cz * cz).sqrt();
    Ok(s.atan2(dot(x, y)))
}

pub fn is_antipodal(x: &[f64], y: &[f64]) -> bool {
    dot(x, y) <= -1.0 + CUT_LOCUS_TOL
}

pub fn exp(x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
    let mut basis = [0.0; 6];
    tangent_basis(x, &mut basis)?;
    // Ambient tangent vector from basis coordinates; orthonormality makes
    // its ambient norm equal the coordinate norm.
    let mut amb = [0.0; 3];
    for k in 0..3 {
        amb[k] = v[0] * basis[k] + v[1] * basis[3 + k];
    }
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let (sn, cn) = n.sin_cos();
    for k in 0..3 {
        out[k] = x[k] * cn + amb[k] / n * sn;
    }
    Manifold::Sphere2.project(out);
    Ok(())
}

pub fn log(x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
    if is_antipodal(x, y) {
        return Err(Error::CutLocus { item: 0, component: 0 });
    }
    let c = dot(x, y);
    let t = tangential(x, y, c);
    let tn = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
    let d = tn.atan2(c);
    let mut basis = [0.0; 6];
    tangent_basis(x, &mut basis)?;
    if tn == 0.0 {
        // y == x up to rounding with no tangential part to point along.
        out[0] = 0.0;
        out[1] = 0.0;
        return Ok(());
    }
    let scale = d / tn;
    for (i, row) in [&basis[0..3], &basis[3..6]].iter().enumerate() {
        out[i] = scale * (t[0] * row[0] + t[1] * row[1] + t[2] * row[2]);
    }
    Ok(())
}

/// Basis rows are the two coordinate axes with smallest |<axis, x>| (ties
/// broken toward the lower index), projected to the tangent plane at x and
/// Gram-Schmidt orthonormalized in ascending axis order.
pub fn tangent_basis(x: &[f64], out: &mut [f64]) -> Result<()> {
    let mut idx = [0usize, 1, 2];
    // Stable selection of the two smallest |x_i|.
    idx.sort_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()).then(a.cmp(&b)));
    let (mut i1, mut i2) = (idx[0], idx[1]);
    if i1 > i2 {
        std::mem::swap(&mut i1, &mut i2);
    }

    let mut e1 = [0.0; 3];
    e1[i1] = 1.0;
    let c = x[i1];
    for k in 0..3 {
        e1[k] -= c * x[k];
    }
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|v| *v /= n1);

    let mut e2 = [0.0; 3];
    e2[i2] = 1.0;
    let cx = x[i2];
    let ce = e1[i2];
    for k in 0..3 {
        e2[k] -= cx * x[k] + ce * e1[k];
    }
    let n2 = (e2[0] * e2[0] + e2[1] * e2[1] + e2[2] * e2[2]).sqrt();
    e2.iter_mut().for_each(|v| *v /= n2);

    out[..3].copy_from_slice(&e1);
    out[3..6].copy_from_slice(&e2);
    Ok(())
}

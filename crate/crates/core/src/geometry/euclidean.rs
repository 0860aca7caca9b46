//! Flat backend: R^d with the identity chart.
//!
//! exp and log are vector addition and subtraction, and the canonical basis
//! at every point is the standard basis, so tangent coordinates coincide
//! with ambient differences. This is what makes the manifold-generic
//! denoiser collapse to its flat counterpart without a special case.

use crate::error::Result;

pub fn dist(x: &[f64], y: &[f64]) -> Result<f64> {
    let s: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s.sqrt())
}

pub fn exp(x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
    for ((o, a), b) in out.iter_mut().zip(x).zip(v) {
        *o = a + b;
    }
    Ok(())
}

pub fn log(x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
    for ((o, a), b) in out.iter_mut().zip(y).zip(x) {
        *o = a - b;
    }
    Ok(())
}

pub fn tangent_basis(d: usize, out: &mut [f64]) -> Result<()> {
    out.fill(0.0);
    for i in 0..d {
        out[i * d + i] = 1.0;
    }
    Ok(())
}

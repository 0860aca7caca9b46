//! Closed-form densities of the tangent Gaussian law on the one and two
//! dimensional manifolds.
//!
//! Each density is stated with respect to the natural manifold measure, not
//! the Lebesgue measure of the parametrization; mixing the two conventions
//! is the classic bug in this area, so every function documents its
//! reference measure and the log-normal case exposes both variants.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Default truncation for the wrapped sums: with |j| <= 10 the neglected
/// tail is below e^{-(2 pi 10)^2 / (8 sigma^2)}, which is < 1e-80 for
/// sigma <= 1.
pub const DEFAULT_WRAP_TERMS: usize = 10;

fn gaussian_norm(sigma_sq: f64) -> f64 {
    1.0 / (2.0 * PI * sigma_sq).sqrt()
}

/// Wrapped Gaussian density on the circle, w.r.t. arc length dt on
/// (-pi, pi]: sum over j of the Gaussian images at t_mu + 2 pi j, truncated
/// at |j| <= terms (truncation error < e^{-(2 pi terms)^2/(8 sigma^2)}).
///
/// The offset t - t_mu is reduced to the principal range (-pi, pi] before
/// summing. Offsets already in range pass through untouched and the images
/// are accumulated in +-j pairs, so negating the offset permutes only the
/// arguments within commutative additions: pdf(t_mu + a) and pdf(t_mu - a)
/// are bitwise equal. Out-of-range offsets reduce through fmod, which IEEE
/// defines exactly, so shifting t by a representable multiple of 2 pi
/// reproduces the identical value.
pub fn wrapped_gaussian_pdf_s1(t: f64, t_mu: f64, sigma_sq: f64, terms: usize) -> Result<f64> {
    if !(sigma_sq > 0.0) {
        return Err(Error::Domain(format!("sigma^2 = {sigma_sq} must be positive")));
    }
    let two_pi = 2.0 * PI;
    let raw = t - t_mu;
    let delta = if raw > -PI && raw <= PI {
        raw
    } else {
        let r = raw.rem_euclid(two_pi);
        if r > PI {
            r - two_pi
        } else {
            r
        }
    };
    let mut sum = (-delta * delta / (2.0 * sigma_sq)).exp();
    for j in 1..=terms as i64 {
        let shift = two_pi * j as f64;
        let a = delta + shift;
        let b = delta - shift;
        sum += (-a * a / (2.0 * sigma_sq)).exp() + (-b * b / (2.0 * sigma_sq)).exp();
    }
    Ok(gaussian_norm(sigma_sq) * sum)
}

/// Log-normal density on the positive reals w.r.t. the scale-invariant
/// measure dx/x (the Riemannian volume of the log metric):
/// (1/sqrt(2 pi sigma^2)) e^{-(ln x - ln mu)^2 / (2 sigma^2)}.
pub fn lognormal_pdf(x: f64, mu: f64, sigma_sq: f64) -> Result<f64> {
    if !(x > 0.0) || !(mu > 0.0) {
        return Err(Error::Domain(format!("lognormal arguments x={x}, mu={mu} must be positive")));
    }
    if !(sigma_sq > 0.0) {
        return Err(Error::Domain(format!("sigma^2 = {sigma_sq} must be positive")));
    }
    let u = x.ln() - mu.ln();
    Ok(gaussian_norm(sigma_sq) * (-u * u / (2.0 * sigma_sq)).exp())
}

/// The same law as a Lebesgue density (divided by x), for comparison with
/// standard references.
pub fn lognormal_pdf_lebesgue(x: f64, mu: f64, sigma_sq: f64) -> Result<f64> {
    Ok(lognormal_pdf(x, mu, sigma_sq)? / x)
}

/// Density of the noisy geodesic coordinate on the 1-simplex, w.r.t. dt on
/// the unit-speed parametrization t in (0, pi): an even-shifted wrapped
/// Gaussian with image points at both +t_mu and -t_mu,
/// (1/sqrt(2 pi sigma^2)) sum_j [e^{-(t + t_mu + 2 pi j)^2/(2 sigma^2)}
///                             + e^{-(t - t_mu + 2 pi j)^2/(2 sigma^2)}],
/// truncated at |j| <= terms. The reflection images make the density
/// Neumann at the two corners.
pub fn simplex_pdf_delta1(t: f64, t_mu: f64, sigma_sq: f64, terms: usize) -> Result<f64> {
    if !(t > 0.0 && t < PI) || !(t_mu > 0.0 && t_mu < PI) {
        return Err(Error::Domain(format!(
            "simplex coordinates t={t}, t_mu={t_mu} must lie strictly inside (0, pi)"
        )));
    }
    if !(sigma_sq > 0.0) {
        return Err(Error::Domain(format!("sigma^2 = {sigma_sq} must be positive")));
    }
    let mut sum = 0.0;
    let jt = terms as i64;
    for j in -jt..=jt {
        let shift = 2.0 * PI * j as f64;
        let a = t + t_mu + shift;
        let b = t - t_mu + shift;
        sum += (-a * a / (2.0 * sigma_sq)).exp() + (-b * b / (2.0 * sigma_sq)).exp();
    }
    Ok(gaussian_norm(sigma_sq) * sum)
}

/// Radial density of the isotropic tangent Gaussian on the hyperbolic
/// plane, w.r.t. the hyperbolic area element sinh(r) dalpha dr:
/// (1/(2 pi sigma^2)) e^{-r^2/(2 sigma^2)} r / sinh(r). The removable
/// singularity at r = 0 evaluates to the Euclidean value 1/(2 pi sigma^2).
/// Integrating out the angle leaves (r/sigma^2) e^{-r^2/(2 sigma^2)}, a
/// Rayleigh density, which is how samples are checked against it.
pub fn h2_radial_pdf(r: f64, sigma: f64) -> f64 {
    let sigma_sq = sigma * sigma;
    let ratio = if r == 0.0 { 1.0 } else { r / r.sinh() };
    (-r * r / (2.0 * sigma_sq)).exp() * ratio / (2.0 * PI * sigma_sq)
}

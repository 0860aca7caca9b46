//! Acceptance-rejection sampler for the isotropic eigenvalue-density law on
//! SPD matrices.
//!
//! The law factorizes over a Haar-uniform orthogonal frame u and the vector
//! rho of log-eigenvalues, whose unnormalized density is
//!
//!   f(rho) = exp(-|rho|^2 / (2 sigma^2)) * prod_{i<j} sinh(|rho_i - rho_j| / 2).
//!
//! The sinh factors are dominated by exponentials, which folds into a wider
//! Gaussian proposal g(rho) = exp(-|rho|^2 / (2 sigma_tilde^2)) with
//! sigma_tilde^2 = sigma^2 / (1 - (r-1) sigma^2); this requires
//! sigma^2 < 1/(r-1). The resulting ratio
//!
//!   f/g = exp(-(r-1) |rho|^2 / 2) * prod_{i<j} sinh(|rho_i - rho_j| / 2)
//!
//! is independent of sigma and bounded by C = e^{r(r-1)/8} 2^{-r(r-1)/2}
//! (each sinh(z) <= e^z / 2, then the exponent is maximized in closed
//! form), which is the acceptance constant. A sample centered at mu is the
//! identity-centered sample conjugated by mu^{1/2}.

use crate::error::{Error, Result};
use crate::geometry::spd;
use crate::manifold::Manifold;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Hard cap on rejection rounds per sample; the acceptance rate at the
/// admissible parameters stays far above the reciprocal of this.
pub const MAX_PROPOSALS: usize = 10_000;

/// Proposal variance sigma_tilde^2; fails for sigma^2 outside
/// (0, 1/(r-1)), where the dominating Gaussian does not exist.
pub fn proposal_sigma_sq(r: usize, sigma_sq: f64) -> Result<f64> {
    if !(sigma_sq > 0.0) {
        return Err(Error::Domain(format!("sigma^2 = {sigma_sq} must be positive")));
    }
    let limit = 1.0 / (r - 1) as f64;
    if sigma_sq >= limit {
        return Err(Error::Domain(format!(
            "sigma^2 = {sigma_sq} must be below 1/(r-1) = {limit} for the rejection sampler"
        )));
    }
    Ok(sigma_sq / (1.0 - (r - 1) as f64 * sigma_sq))
}

/// The acceptance constant C = e^{r(r-1)/8} 2^{-r(r-1)/2} bounding f/g.
pub fn rejection_bound(r: usize) -> f64 {
    let p = (r * (r - 1)) as f64;
    (p / 8.0).exp() * 2.0_f64.powf(-p / 2.0)
}

/// Unnormalized target density of the log-eigenvalues.
pub fn eigenvalue_density(r: usize, sigma_sq: f64, rho: &[f64]) -> f64 {
    debug_assert_eq!(rho.len(), r);
    let norm_sq: f64 = rho.iter().map(|v| v * v).sum();
    let mut prod = 1.0;
    for i in 0..r {
        for j in (i + 1)..r {
            prod *= ((rho[i] - rho[j]).abs() / 2.0).sinh();
        }
    }
    (-norm_sq / (2.0 * sigma_sq)).exp() * prod
}

/// Unnormalized proposal density, a centered Gaussian of variance
/// sigma_tilde^2 per coordinate.
pub fn proposal_density(r: usize, sigma_sq: f64, rho: &[f64]) -> Result<f64> {
    let st2 = proposal_sigma_sq(r, sigma_sq)?;
    let norm_sq: f64 = rho.iter().map(|v| v * v).sum();
    Ok((-norm_sq / (2.0 * st2)).exp())
}

/// The sigma-free ratio f/g evaluated directly; always < rejection_bound.
pub fn f_over_g(r: usize, rho: &[f64]) -> f64 {
    let norm_sq: f64 = rho.iter().map(|v| v * v).sum();
    let mut prod = 1.0;
    for i in 0..r {
        for j in (i + 1)..r {
            prod *= ((rho[i] - rho[j]).abs() / 2.0).sinh();
        }
    }
    (-((r - 1) as f64) * norm_sq / 2.0).exp() * prod
}

/// Haar-uniform orthogonal matrix: QR of an i.i.d. standard normal matrix
/// with the sign convention diag(R) > 0, without which the factorization is
/// not unique and the law not uniform.
fn haar_orthogonal(r: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(r, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let rr = qr.r();
    let mut q = qr.q();
    for j in 0..r {
        if rr[(j, j)] < 0.0 {
            for i in 0..r {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// One sample of the law centered at `mu` (row-major SPD coordinates) with
/// dispersion sigma^2 < 1/(r-1).
pub fn sample_said_spd(r: usize, mu: &[f64], sigma_sq: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    sample_said_spd_counted(r, mu, sigma_sq, rng).map(|(x, _)| x)
}

/// Same as [`sample_said_spd`] but also reports how many proposals the
/// rejection loop consumed, which measures the empirical acceptance rate.
pub fn sample_said_spd_counted(
    r: usize,
    mu: &[f64],
    sigma_sq: f64,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, usize)> {
    Manifold::Spd(r).check_supported()?;
    let st2 = proposal_sigma_sq(r, sigma_sq)?;
    let st = st2.sqrt();
    let c = rejection_bound(r);

    let mut rho = vec![0.0; r];
    let mut proposals = 0usize;
    let mut accepted = false;
    while proposals < MAX_PROPOSALS {
        proposals += 1;
        for v in rho.iter_mut() {
            *v = st * rng.sample::<f64, _>(StandardNormal);
        }
        let ratio = f_over_g(r, &rho) / c;
        if rng.random::<f64>() < ratio {
            accepted = true;
            break;
        }
    }
    if !accepted {
        return Err(Error::Domain(format!(
            "rejection sampler exhausted {MAX_PROPOSALS} proposals"
        )));
    }

    let u = haar_orthogonal(r, rng);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(r, rho.iter().map(|&v| v.exp())));
    let x = &u * d * u.transpose();

    let mut root = vec![0.0; r * r];
    spd::sqrt(r, mu, &mut root)?;
    let s = DMatrix::from_row_slice(r, r, &root);
    let y = &s * x * &s;

    let mut out = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            out[i * r + j] = y[(i, j)];
        }
    }
    Manifold::Spd(r).project(&mut out);
    Ok((out, proposals))
}

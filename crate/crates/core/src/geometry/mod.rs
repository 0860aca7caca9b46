//! Geodesic calculus for the supported manifolds.
//!
//! Every operation dispatches on [`Manifold`] and works on raw ambient
//! coordinate slices; the typed wrappers in [`crate::manifold`] forward here.
//! Tangent vectors cross these APIs only as coordinate vectors with respect
//! to the canonical orthonormal basis at the base point, never in ambient
//! form, so downstream statistics (covariances, Gaussian draws) are plain
//! linear algebra on length-`dim` vectors.
//!
//! Conventions shared by all backends:
//!
//! * `dist(x, x)` with bitwise-equal inputs returns exactly 0.0.
//! * `exp(x, 0)` returns `x` bit-exactly.
//! * After evaluating a closed-form exponential, the result is re-projected
//!   onto the constraint set (normalized, symmetrized, renormalized sum) so
//!   that constraint drift cannot compound across iterations.
//! * Inverse trigonometric arguments may exceed their domain by at most
//!   1e-12 from rounding; such values are clamped. Larger excursions are
//!   domain errors, not clamps.
//! * Points within 1e-12 of the cut locus (antipodes, simplex corners) make
//!   `log` fail with [`Error::CutLocus`] rather than return garbage.

use crate::error::{Error, Result};
use crate::manifold::Manifold;

pub mod circle;
pub mod euclidean;
pub mod hyperbolic;
pub mod simplex;
pub mod spd;
pub mod sphere;

/// Slack allowed past the boundary of acos/acosh domains before the input
/// is considered genuinely invalid rather than rounded.
pub const CLAMP_SLACK: f64 = 1e-12;

/// Inner-product threshold for declaring two sphere points antipodal.
pub const CUT_LOCUS_TOL: f64 = 1e-12;

/// arccos with tolerance for arguments that rounded slightly outside
/// [-1, 1]. Distance computations prefer atan2 forms where possible; this
/// helper backs the places where the inner product is the natural input.
pub fn clamped_acos(c: f64) -> Result<f64> {
    if c > 1.0 + CLAMP_SLACK || c < -1.0 - CLAMP_SLACK {
        return Err(Error::Domain(format!("acos argument {c} outside [-1, 1]")));
    }
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// arcosh with the same boundary tolerance below 1.
pub fn clamped_acosh(c: f64) -> Result<f64> {
    if c < 1.0 - CLAMP_SLACK {
        return Err(Error::Domain(format!("acosh argument {c} below 1")));
    }
    Ok(c.max(1.0).acosh())
}

impl Manifold {
    /// Geodesic distance between two points in ambient coordinates.
    pub fn dist(self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x == y {
            return Ok(0.0);
        }
        match self {
            Manifold::Euclidean(_) => euclidean::dist(x, y),
            Manifold::Circle => circle::dist(x, y),
            Manifold::Sphere2 => sphere::dist(x, y),
            Manifold::Spd(r) => spd::dist(r, x, y),
            Manifold::Simplex1 => simplex::dist(x, y),
            Manifold::Hyperbolic2 => hyperbolic::dist(x, y),
        }
    }

    /// Squared geodesic distance.
    pub fn dist_sq(self, x: &[f64], y: &[f64]) -> Result<f64> {
        let d = self.dist(x, y)?;
        Ok(d * d)
    }

    /// Exponential map. `v` holds tangent coordinates of length
    /// [`Manifold::dim`] in the canonical basis at `x`; `out` receives the
    /// ambient coordinates of exp_x(v). A zero tangent vector copies `x`
    /// verbatim.
    pub fn exp(self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(v.len(), self.dim());
        debug_assert_eq!(out.len(), self.ambient_len());
        if v.iter().all(|&c| c == 0.0) {
            out.copy_from_slice(x);
            return Ok(());
        }
        match self {
            Manifold::Euclidean(_) => euclidean::exp(x, v, out),
            Manifold::Circle => circle::exp(x, v, out),
            Manifold::Sphere2 => sphere::exp(x, v, out),
            Manifold::Spd(r) => spd::exp(r, x, v, out),
            Manifold::Simplex1 => simplex::exp(x, v, out),
            Manifold::Hyperbolic2 => hyperbolic::exp(x, v, out),
        }
    }

    /// Logarithmic map. Writes the tangent coordinates of log_x(y) in the
    /// canonical basis at `x` into `out` (length [`Manifold::dim`]).
    /// Bitwise-equal inputs yield an exact zero vector. Fails with
    /// [`Error::CutLocus`] when `y` lies at (or within 1e-12 of) the cut
    /// locus of `x`.
    pub fn log(self, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.dim());
        if x == y {
            out.fill(0.0);
            return Ok(());
        }
        match self {
            Manifold::Euclidean(_) => euclidean::log(x, y, out),
            Manifold::Circle => circle::log(x, y, out),
            Manifold::Sphere2 => sphere::log(x, y, out),
            Manifold::Spd(r) => spd::log(r, x, y, out),
            Manifold::Simplex1 => simplex::log(x, y, out),
            Manifold::Hyperbolic2 => hyperbolic::log(x, y, out),
        }
    }

    /// Canonical orthonormal tangent basis at `x` in ambient form, written
    /// as `dim` concatenated rows of `ambient_len` reals. Deterministic in
    /// `x`. Exposed mainly for tests and rendering; the denoiser works in
    /// basis coordinates throughout and never needs the ambient rows.
    pub fn tangent_basis(self, x: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.dim() * self.ambient_len());
        match self {
            Manifold::Euclidean(d) => euclidean::tangent_basis(d, out),
            Manifold::Circle => circle::tangent_basis(x, out),
            Manifold::Sphere2 => sphere::tangent_basis(x, out),
            Manifold::Spd(r) => spd::tangent_basis(r, x, out),
            Manifold::Simplex1 => simplex::tangent_basis(x, out),
            Manifold::Hyperbolic2 => hyperbolic::tangent_basis(x, out),
        }
    }

    /// True iff `y` lies on (or within tolerance of) the cut locus of `x`,
    /// i.e. `log(x, y)` would fail. Only Circle, Sphere2 and Simplex1 have
    /// nonempty cut loci here; for Simplex1 interior points the condition is
    /// unreachable and this always returns false.
    pub fn is_cut_locus(self, x: &[f64], y: &[f64]) -> bool {
        match self {
            Manifold::Circle => circle::is_antipodal(x, y),
            Manifold::Sphere2 => sphere::is_antipodal(x, y),
            Manifold::Simplex1 => simplex::is_cut_locus(x, y),
            _ => false,
        }
    }

    /// Re-projects ambient coordinates onto the constraint set, fixing
    /// small drift (normalization, symmetrization, sum renormalization,
    /// hyperboloid sheet). Backends call this after every exponential;
    /// exposed for direct use on deserialized data.
    pub fn project(self, coords: &mut [f64]) {
        match self {
            Manifold::Euclidean(_) => {}
            Manifold::Circle | Manifold::Sphere2 => {
                let n: f64 = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
                if n > 0.0 && n.is_finite() {
                    coords.iter_mut().for_each(|c| *c /= n);
                }
            }
            Manifold::Spd(r) => {
                for i in 0..r {
                    for j in (i + 1)..r {
                        let s = 0.5 * (coords[i * r + j] + coords[j * r + i]);
                        coords[i * r + j] = s;
                        coords[j * r + i] = s;
                    }
                }
            }
            Manifold::Simplex1 => {
                let s = coords[0] + coords[1];
                if s > 0.0 && s.is_finite() {
                    coords[0] /= s;
                    coords[1] /= s;
                }
            }
            Manifold::Hyperbolic2 => {
                // Lift (x1, x2) back onto the upper sheet.
                let r2 = coords[0] * coords[0] + coords[1] * coords[1];
                coords[2] = (1.0 + r2).sqrt();
            }
        }
    }
}

//! Intrinsic Gaussian noise: tangent-space sampling, the closed-form
//! densities it induces on the one and two dimensional manifolds, and the
//! eigenvalue-based SPD sampler (see [`said`]).
//!
//! Randomness is counter-style and fully keyed: every consumer derives an
//! independent ChaCha12 stream from (seed, purpose, 64-bit index), so
//! parallel generation order cannot influence results and any single pixel
//! or draw can be reproduced in isolation.

use crate::error::{Error, Result};
use crate::image::ManifoldImage;
use crate::manifold::{product_exp, Manifold};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub mod density;
pub mod said;

/// Fixed salt occupying the last key quadrant, separating this crate's
/// streams from any other ChaCha user with coinciding seeds.
const KEY_SALT: u64 = 0x6d76_695f_726e_6731;

/// How many times a rejected draw (exponential leaving the open simplex)
/// is retried before giving up. The escape set has probability well below
/// one per draw at the noise levels of interest, so the budget is cosmetic.
pub const RESAMPLE_BUDGET: usize = 100;

/// Stream purposes; the discriminant is baked into the stream key.
#[derive(Clone, Copy, Debug)]
pub enum StreamKind {
    /// Per-pixel noise; index = linear pixel index.
    PixelNoise = 0,
    /// Synthetic image construction; index chosen by the generator.
    Synthesis = 1,
    /// Free-standing draws (samplers in tests, rejection chains).
    Scalar = 2,
}

/// Root of all randomness: a single 64-bit seed from which independent,
/// platform-stable streams are derived by key construction rather than by
/// sequential splitting. Identical (seed, kind, index) always yields the
/// identical stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState { seed }
    }

    /// Derives the ChaCha12 stream for (kind, index). The 32-byte key is
    /// the little-endian concatenation [seed | index | kind | salt].
    pub fn stream(&self, kind: StreamKind, index: u64) -> ChaCha12Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&index.to_le_bytes());
        key[16..24].copy_from_slice(&(kind as u64).to_le_bytes());
        key[24..32].copy_from_slice(&KEY_SALT.to_le_bytes());
        ChaCha12Rng::from_seed(key)
    }
}

/// Which noise law to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseModel {
    /// exp_mu of a Gaussian tangent vector; every manifold.
    TangentGaussian,
    /// The eigenvalue-density SPD law of [`said`]; SPD images only.
    SaidSpd,
}

/// Noise description attached to an image-level operation.
#[derive(Clone, Debug)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    /// Noise standard deviation (per tangent dimension for the tangent
    /// model; dispersion parameter for the SPD model).
    pub sigma: f64,
    /// Full tangent covariance, tangent model only; None means sigma^2 I.
    pub covariance: Option<DMatrix<f64>>,
}

impl NoiseSpec {
    pub fn isotropic(model: NoiseModel, sigma: f64) -> Self {
        NoiseSpec { model, sigma, covariance: None }
    }
}

enum Factor {
    Iso(f64),
    Dense(DMatrix<f64>),
}

/// Reusable sampler for exp_mu(A z) with z standard normal: the covariance
/// factor A is computed once, then drawn against any mean. `count` > 1
/// samples on the product manifold M^count with component-major tangent
/// layout.
pub struct TangentGaussian {
    m: Manifold,
    count: usize,
    factor: Factor,
}

impl TangentGaussian {
    /// Isotropic covariance sigma^2 I without any factorization work.
    pub fn isotropic(m: Manifold, count: usize, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::Domain(format!("noise sigma {sigma} must be >= 0")));
        }
        Ok(TangentGaussian { m, count, factor: Factor::Iso(sigma) })
    }

    /// General symmetric PSD covariance. Prefers the Cholesky factor; for
    /// singular PSD inputs (a zero covariance is legitimate and must map to
    /// "no noise") falls back to the eigenvalue square root U sqrt(L),
    /// which draws from the same law. Indefinite or non-symmetric input is
    /// a shape error.
    pub fn with_covariance(m: Manifold, count: usize, cov: &DMatrix<f64>) -> Result<Self> {
        let n = count * m.dim();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Shape(format!(
                "covariance is {}x{}, tangent dimension is {}",
                cov.nrows(),
                cov.ncols(),
                n
            )));
        }
        let scale = cov.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        for a in 0..n {
            for b in (a + 1)..n {
                if (cov[(a, b)] - cov[(b, a)]).abs() > 1e-9 * (1.0 + scale) {
                    return Err(Error::Shape("covariance must be symmetric".into()));
                }
            }
        }
        if let Some(chol) = cov.clone().cholesky() {
            return Ok(TangentGaussian { m, count, factor: Factor::Dense(chol.unpack()) });
        }
        let eig = cov.clone().symmetric_eigen();
        let tol = 1e-12 * (1.0 + scale);
        if eig.eigenvalues.iter().any(|&l| l < -tol) {
            return Err(Error::Shape("covariance factorization failed: not PSD".into()));
        }
        let roots = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()));
        let a = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(TangentGaussian { m, count, factor: Factor::Dense(a) })
    }

    /// One draw centered at `mu` (a product point of `count` components).
    /// The zero-covariance case returns `mu` exactly. Draws whose
    /// exponential leaves an incomplete manifold (open simplex) are
    /// resampled up to [`RESAMPLE_BUDGET`] times.
    pub fn draw(&self, mu: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>> {
        let n = self.count * self.m.dim();
        let mut z = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut out = vec![0.0; self.count * self.m.ambient_len()];
        let retriable = self.m == Manifold::Simplex1;
        for _ in 0..RESAMPLE_BUDGET {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            match &self.factor {
                Factor::Iso(sigma) => {
                    for (vi, zi) in v.iter_mut().zip(&z) {
                        *vi = sigma * zi;
                    }
                }
                Factor::Dense(a) => {
                    for (i, vi) in v.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (j, zj) in z.iter().enumerate() {
                            acc += a[(i, j)] * zj;
                        }
                        *vi = acc;
                    }
                }
            }
            match product_exp(self.m, self.count, mu, &v, &mut out) {
                Ok(()) => return Ok(out),
                Err(Error::Domain(_)) if retriable => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Domain(format!(
            "draw left the open simplex {RESAMPLE_BUDGET} times in a row"
        )))
    }
}

/// One-shot draw of exp_mu(A z) against an explicit covariance, for callers
/// that do not reuse the factor.
pub fn sample_tangent_gaussian(
    m: Manifold,
    count: usize,
    mu: &[f64],
    cov: &DMatrix<f64>,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    TangentGaussian::with_covariance(m, count, cov)?.draw(mu, rng)
}

/// Corrupts every pixel independently, using the pixel's clean value as the
/// mean. Pixel i draws from the stream (seed, PixelNoise, i), so the result
/// is byte-identical regardless of evaluation order or thread count.
pub fn add_noise(image: &ManifoldImage, spec: &NoiseSpec, seed: u64) -> Result<ManifoldImage> {
    let state = RngState::new(seed);
    let alen = image.manifold.ambient_len();
    let mut data = vec![0.0; image.data.len()];
    match spec.model {
        NoiseModel::TangentGaussian => {
            let sampler = match &spec.covariance {
                None => TangentGaussian::isotropic(image.manifold, 1, spec.sigma)?,
                Some(cov) => TangentGaussian::with_covariance(image.manifold, 1, cov)?,
            };
            for i in 0..image.pixel_count() {
                let mut rng = state.stream(StreamKind::PixelNoise, i as u64);
                let px = sampler.draw(image.pixel(i), &mut rng)?;
                data[i * alen..(i + 1) * alen].copy_from_slice(&px);
            }
        }
        NoiseModel::SaidSpd => {
            let r = match image.manifold {
                Manifold::Spd(r) => r,
                other => {
                    return Err(Error::Shape(format!(
                        "the SPD noise model cannot corrupt {} pixels",
                        other.tag()
                    )))
                }
            };
            let sigma_sq = spec.sigma * spec.sigma;
            for i in 0..image.pixel_count() {
                let mut rng = state.stream(StreamKind::PixelNoise, i as u64);
                let px = said::sample_said_spd(r, image.pixel(i), sigma_sq, &mut rng)?;
                data[i * alen..(i + 1) * alen].copy_from_slice(&px);
            }
        }
    }
    ManifoldImage::new(image.manifold, image.rows, image.cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{karcher_mean, KarcherConfig};
    use crate::testutil::ks_statistic;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn bits(v: &[f64]) -> Vec<u64> {
        v.iter().map(|x| x.to_bits()).collect()
    }

    /// Piecewise-linear CDF from cumulative trapezoids of `pdf` on
    /// [lo, hi], dense enough that interpolation error is far below the
    /// KS resolution of 1e4 samples.
    fn numeric_cdf(pdf: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> impl Fn(f64) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut prev = pdf(lo);
        let mut acc = 0.0;
        for i in 1..=n {
            let cur = pdf(lo + i as f64 * h);
            acc += 0.5 * (prev + cur) * h;
            cum.push(acc);
            prev = cur;
        }
        move |x: f64| {
            let u = (x - lo) / h;
            if u <= 0.0 {
                return 0.0;
            }
            if u >= n as f64 {
                return cum[n];
            }
            let k = u.floor() as usize;
            let frac = u - k as f64;
            cum[k] + frac * (cum[k + 1] - cum[k])
        }
    }

    #[test]
    fn streams_are_keyed_by_seed_kind_and_index() {
        let draw = |seed: u64, kind: StreamKind, index: u64| {
            let mut rng = RngState::new(seed).stream(kind, index);
            (0..4).map(|_| rng.random::<u64>()).collect::<Vec<_>>()
        };
        let base = draw(7, StreamKind::PixelNoise, 3);
        assert_eq!(base, draw(7, StreamKind::PixelNoise, 3));
        assert_ne!(base, draw(8, StreamKind::PixelNoise, 3));
        assert_ne!(base, draw(7, StreamKind::Synthesis, 3));
        assert_ne!(base, draw(7, StreamKind::Scalar, 3));
        assert_ne!(base, draw(7, StreamKind::PixelNoise, 4));
    }

    #[test]
    fn isotropic_rejects_negative_sigma() {
        assert!(matches!(
            TangentGaussian::isotropic(Manifold::Circle, 1, -0.1),
            Err(Error::Domain(_))
        ));
        assert!(TangentGaussian::isotropic(Manifold::Circle, 1, 0.0).is_ok());
    }

    #[test]
    fn zero_noise_returns_the_mean_verbatim() {
        let mu = [0.6, -0.8];
        let mut rng = RngState::new(1).stream(StreamKind::Scalar, 0);
        let iso = TangentGaussian::isotropic(Manifold::Circle, 1, 0.0).unwrap();
        assert_eq!(bits(&iso.draw(&mu, &mut rng).unwrap()), bits(&mu));
        let zero_cov = DMatrix::zeros(1, 1);
        let dense = TangentGaussian::with_covariance(Manifold::Circle, 1, &zero_cov).unwrap();
        assert_eq!(bits(&dense.draw(&mu, &mut rng).unwrap()), bits(&mu));
    }

    #[test]
    fn covariance_must_be_square_symmetric_psd() {
        let m = Manifold::Sphere2;
        let bad_shape = DMatrix::zeros(3, 3);
        assert!(matches!(
            TangentGaussian::with_covariance(m, 1, &bad_shape),
            Err(Error::Shape(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(matches!(TangentGaussian::with_covariance(m, 1, &asym), Err(Error::Shape(_))));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(
            TangentGaussian::with_covariance(m, 1, &indefinite),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn dense_factor_reproduces_the_requested_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[0.04, 0.024, 0.024, 0.04]);
        let g = TangentGaussian::with_covariance(Manifold::Euclidean(2), 1, &cov).unwrap();
        let mu = [0.0, 0.0];
        let mut rng = RngState::new(5).stream(StreamKind::Scalar, 0);
        let n = 4000;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let p = g.draw(&mu, &mut rng).unwrap();
            sxx += p[0] * p[0];
            sxy += p[0] * p[1];
            syy += p[1] * p[1];
        }
        let nf = n as f64;
        assert!((sxx / nf - 0.04).abs() < 5e-3, "xx {}", sxx / nf);
        assert!((syy / nf - 0.04).abs() < 5e-3, "yy {}", syy / nf);
        assert!((sxy / nf - 0.024).abs() < 5e-3, "xy {}", sxy / nf);
    }

    #[test]
    fn circle_noise_follows_the_wrapped_density() {
        let sigma = 0.2;
        let g = TangentGaussian::isotropic(Manifold::Circle, 1, sigma).unwrap();
        let mu = [1.0, 0.0];
        let mut rng = RngState::new(12).stream(StreamKind::Scalar, 0);
        let mut angles: Vec<f64> = (0..10_000)
            .map(|_| {
                let p = g.draw(&mu, &mut rng).unwrap();
                p[1].atan2(p[0])
            })
            .collect();
        let cdf = numeric_cdf(
            |t| {
                density::wrapped_gaussian_pdf_s1(t, 0.0, sigma * sigma, density::DEFAULT_WRAP_TERMS)
                    .unwrap()
            },
            -PI,
            PI,
            8192,
        );
        let d = ks_statistic(&mut angles, cdf);
        assert!(d < 0.02, "KS distance {d}");
    }

    #[test]
    fn log_metric_noise_follows_the_lognormal_density() {
        // The scalar positive cone carries the log metric, where the
        // tangent draw exponentiates to mu e^{sigma z}; the closed-form
        // density must reproduce that law.
        let (mu, sigma) = (2.0, 0.5);
        let mut rng = RngState::new(21).stream(StreamKind::Scalar, 0);
        let mut xs: Vec<f64> = (0..10_000)
            .map(|_| mu * (sigma * rng.sample::<f64, _>(StandardNormal)).exp())
            .collect();
        let lo = mu * (-6.0 * sigma).exp();
        let hi = mu * (6.0 * sigma).exp();
        let cdf = numeric_cdf(
            |x| density::lognormal_pdf_lebesgue(x, mu, sigma * sigma).unwrap(),
            lo,
            hi,
            16384,
        );
        let d = ks_statistic(&mut xs, cdf);
        assert!(d < 0.02, "KS distance {d}");
    }

    #[test]
    fn hyperbolic_radii_are_rayleigh() {
        let sigma = 0.3;
        let g = TangentGaussian::isotropic(Manifold::Hyperbolic2, 1, sigma).unwrap();
        let mu = [0.0, 0.0, 1.0];
        let mut rng = RngState::new(33).stream(StreamKind::Scalar, 0);
        let mut radii: Vec<f64> = (0..10_000)
            .map(|_| {
                let p = g.draw(&mu, &mut rng).unwrap();
                Manifold::Hyperbolic2.dist(&mu, &p).unwrap()
            })
            .collect();
        let s2 = sigma * sigma;
        let d = ks_statistic(&mut radii, |r| 1.0 - (-r * r / (2.0 * s2)).exp());
        assert!(d < 0.02, "KS distance {d}");
    }

    #[test]
    fn sample_mean_gradient_obeys_the_clt_scale() {
        // The pull of 1e4 draws, measured at the true center, shrinks like
        // sigma/sqrt(K); the Karcher mean correspondingly lands next to it.
        let (sigma, k) = (0.2, 10_000usize);
        let m = Manifold::Sphere2;
        let mu = [0.0, 0.0, 1.0];
        let g = TangentGaussian::isotropic(m, 1, sigma).unwrap();
        let mut rng = RngState::new(40).stream(StreamKind::Scalar, 0);
        let mut samples = Vec::with_capacity(3 * k);
        for _ in 0..k {
            samples.extend(g.draw(&mu, &mut rng).unwrap());
        }
        let mut grad = [0.0, 0.0];
        let mut coords = [0.0, 0.0];
        for i in 0..k {
            m.log(&mu, &samples[3 * i..3 * (i + 1)], &mut coords).unwrap();
            grad[0] += coords[0];
            grad[1] += coords[1];
        }
        let bound = 3.0 * sigma / (k as f64).sqrt();
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt() / k as f64;
        assert!(norm <= bound, "gradient at the center {norm} exceeds {bound}");
        let mean = karcher_mean(m, 1, &samples, None, &KarcherConfig::default()).unwrap();
        assert!(m.dist(&mu, &mean).unwrap() <= 1.5 * bound);
    }

    #[test]
    fn simplex_draws_stay_inside_the_open_domain() {
        let g = TangentGaussian::isotropic(Manifold::Simplex1, 1, 0.8).unwrap();
        let mu = [0.02, 0.98];
        let mut rng = RngState::new(50).stream(StreamKind::Scalar, 0);
        for _ in 0..500 {
            let p = g.draw(&mu, &mut rng).unwrap();
            assert!(Manifold::Simplex1.validate(&p), "invalid draw {p:?}");
        }
    }

    #[test]
    fn zero_sigma_add_noise_is_the_identity() {
        let img =
            ManifoldImage::constant(Manifold::Sphere2, 8, 9, &[0.0, 0.6, 0.8]).unwrap();
        let spec = NoiseSpec::isotropic(NoiseModel::TangentGaussian, 0.0);
        let out = add_noise(&img, &spec, 99).unwrap();
        assert_eq!(bits(&img.data), bits(&out.data));
    }

    #[test]
    fn add_noise_is_deterministic_and_seed_sensitive() {
        let img = ManifoldImage::constant(Manifold::Spd(2), 4, 4, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        for model in [NoiseModel::TangentGaussian, NoiseModel::SaidSpd] {
            let spec = NoiseSpec::isotropic(model, 0.3);
            let a = add_noise(&img, &spec, 7).unwrap();
            let b = add_noise(&img, &spec, 7).unwrap();
            let c = add_noise(&img, &spec, 8).unwrap();
            assert_eq!(bits(&a.data), bits(&b.data), "{model:?}");
            assert_ne!(bits(&a.data), bits(&c.data), "{model:?}");
        }
    }

    #[test]
    fn circle_noise_mse_matches_the_variance() {
        let img = ManifoldImage::constant(Manifold::Circle, 64, 64, &[1.0, 0.0]).unwrap();
        let spec = NoiseSpec::isotropic(NoiseModel::TangentGaussian, 0.3);
        let noisy = add_noise(&img, &spec, 424242).unwrap();
        let eps = noisy.mse(&img).unwrap();
        assert_relative_eq!(eps, 0.09, max_relative = 0.1);
    }

    #[test]
    fn spd3_noise_mse_matches_six_variances() {
        let eye3 = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let img = ManifoldImage::constant(Manifold::Spd(3), 64, 64, &eye3).unwrap();
        let spec = NoiseSpec::isotropic(NoiseModel::TangentGaussian, 0.125);
        let noisy = add_noise(&img, &spec, 1234).unwrap();
        let eps = noisy.mse(&img).unwrap();
        assert_relative_eq!(eps, 6.0 * 0.125 * 0.125, max_relative = 0.1);
    }

    #[test]
    fn said_noise_requires_spd_pixels() {
        let img = ManifoldImage::constant(Manifold::Circle, 4, 4, &[1.0, 0.0]).unwrap();
        let spec = NoiseSpec::isotropic(NoiseModel::SaidSpd, 0.3);
        assert!(matches!(add_noise(&img, &spec, 1), Err(Error::Shape(_))));
    }
}

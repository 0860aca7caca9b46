//! Intrinsic first and second order statistics: Karcher means, empirical
//! tangent covariances, pooled variance, and the MMSE eigen-shrinkage.

use crate::error::{Error, Result};
use crate::manifold::{product_exp, product_log, Manifold};
use nalgebra::{DMatrix, DVector};

/// Gradient-descent settings for Karcher mean computation.
#[derive(Clone, Copy, Debug)]
pub struct KarcherConfig {
    /// Maximum number of update steps before giving up.
    pub max_iters: usize,
    /// Convergence threshold on the gradient norm, relative to the total
    /// weight: stop once ||sum_k w_k log_m(x_k)||_2 <= grad_tol * sum_k w_k.
    pub grad_tol: f64,
    /// Step size of the tangent update. 1.0 is exact in the flat case and
    /// converges for the concentrated samples arising from patch groups.
    pub step: f64,
}

impl Default for KarcherConfig {
    fn default() -> Self {
        KarcherConfig { max_iters: 50, grad_tol: 1e-10, step: 1.0 }
    }
}

/// Weighted Karcher mean of points on the product manifold M^count.
///
/// `points` holds the samples as concatenated product points (stride
/// count * ambient_len); `weights` defaults to all ones. Iteration starts
/// from the first sample and repeats m <- exp_m(step * g / W) with
/// g = sum_k w_k log_m(x_k) and W the total weight, checking convergence
/// before every step so already-converged configurations (single sample,
/// identical samples) never move. Accumulation order over samples is fixed,
/// making the result independent of caller parallelism.
///
/// Cut-locus failures are reported with `item` = the sample index and
/// `component` = the product component, so callers can drop the offending
/// sample and retry.
pub fn karcher_mean(
    m: Manifold,
    count: usize,
    points: &[f64],
    weights: Option<&[f64]>,
    cfg: &KarcherConfig,
) -> Result<Vec<f64>> {
    let stride = count * m.ambient_len();
    let n = count * m.dim();
    if stride == 0 || points.len() % stride != 0 || points.is_empty() {
        return Err(Error::Shape(format!(
            "sample buffer of {} reals is not a multiple of the product point size {}",
            points.len(),
            stride
        )));
    }
    let k = points.len() / stride;
    if let Some(w) = weights {
        if w.len() != k {
            return Err(Error::Shape(format!("{} weights for {} samples", w.len(), k)));
        }
    }
    let wsum: f64 = match weights {
        Some(w) => w.iter().sum(),
        None => k as f64,
    };
    if !(wsum > 0.0) {
        return Err(Error::Shape("total weight must be positive".into()));
    }

    let mut mean = points[..stride].to_vec();
    let mut logbuf = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut next = vec![0.0; stride];
    let mut last_norm = f64::INFINITY;
    for iter in 0..=cfg.max_iters {
        grad.fill(0.0);
        for j in 0..k {
            product_log(m, count, &mean, &points[j * stride..(j + 1) * stride], &mut logbuf)
                .map_err(|e| match e {
                    Error::CutLocus { component, .. } => Error::CutLocus { item: j, component },
                    other => other,
                })?;
            let w = weights.map_or(1.0, |w| w[j]);
            for (g, l) in grad.iter_mut().zip(&logbuf) {
                *g += w * l;
            }
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= cfg.grad_tol * wsum {
            return Ok(mean);
        }
        last_norm = gnorm;
        if iter == cfg.max_iters {
            break;
        }
        let scale = cfg.step / wsum;
        for g in grad.iter_mut() {
            *g *= scale;
        }
        product_exp(m, count, &mean, &grad, &mut next)?;
        mean.copy_from_slice(&next);
    }
    Err(Error::NonConvergence { iters: cfg.max_iters, grad_norm: last_norm })
}

/// Biased empirical covariance (1/K normalization) of the samples' logs at
/// `mean`, in component-major tangent coordinates. Also returns the K x n
/// row-major log matrix, which restoration reuses.
pub fn empirical_covariance(
    m: Manifold,
    count: usize,
    mean: &[f64],
    points: &[f64],
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let stride = count * m.ambient_len();
    let n = count * m.dim();
    debug_assert!(!points.is_empty() && points.len() % stride == 0);
    let k = points.len() / stride;
    let mut logs = vec![0.0; k * n];
    for j in 0..k {
        let row = &mut logs[j * n..(j + 1) * n];
        product_log(m, count, mean, &points[j * stride..(j + 1) * stride], row).map_err(|e| {
            match e {
                Error::CutLocus { component, .. } => Error::CutLocus { item: j, component },
                other => other,
            }
        })?;
    }
    let mut cov = DMatrix::zeros(n, n);
    for j in 0..k {
        let row = &logs[j * n..(j + 1) * n];
        for a in 0..n {
            let ra = row[a];
            for b in a..n {
                cov[(a, b)] += ra * row[b];
            }
        }
    }
    let kf = k as f64;
    for a in 0..n {
        for b in a..n {
            let v = cov[(a, b)] / kf;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok((cov, logs))
}

/// Pooled variance of single points around a common mean: the average
/// squared distance divided by the intrinsic dimension, so that for an
/// isotropic tangent Gaussian the result estimates sigma^2 regardless of d.
/// `pixels` holds the samples as concatenated single points.
pub fn pooled_variance(m: Manifold, mean: &[f64], pixels: &[f64]) -> Result<f64> {
    let alen = m.ambient_len();
    debug_assert!(!pixels.is_empty() && pixels.len() % alen == 0);
    let count = pixels.len() / alen;
    let mut total = 0.0;
    for px in pixels.chunks_exact(alen) {
        total += m.dist_sq(mean, px)?;
    }
    Ok(total / (m.dim() as f64 * count as f64))
}

/// The MMSE shrinkage operator (Sigma - sigma^2 I) Sigma^{-1}, realized
/// through the eigendecomposition Sigma = Q diag(lambda) Q^T as
/// Q diag(D) Q^T with D_i = max(lambda_i - sigma^2, floor) / max(lambda_i,
/// floor). The floor clips negative shrunk eigenvalues to a small positive
/// value and simultaneously guards the division against near-singular
/// covariances; it is scale-relative, floor = 1e-10 * max(sigma^2,
/// trace(Sigma)/n), because an absolute floor breaks under image rescaling.
#[derive(Clone, Debug)]
pub struct Shrinkage {
    matrix: DMatrix<f64>,
}

impl Shrinkage {
    pub fn new(cov: &DMatrix<f64>, sigma_sq: f64) -> Result<Self> {
        let n = cov.nrows();
        if cov.ncols() != n {
            return Err(Error::Shape("covariance must be square".into()));
        }
        for a in 0..n {
            for b in (a + 1)..n {
                if (cov[(a, b)] - cov[(b, a)]).abs() > 1e-9 * (1.0 + cov[(a, a)].abs() + cov[(b, b)].abs()) {
                    return Err(Error::Shape("covariance must be symmetric".into()));
                }
            }
        }
        let eig = cov.clone().symmetric_eigen();
        let floor = 1e-10 * sigma_sq.max(cov.trace() / n as f64);
        let mult = DVector::from_iterator(
            n,
            eig.eigenvalues.iter().map(|&lam| {
                let denom = lam.max(floor);
                if denom <= 0.0 {
                    // Fully degenerate direction with sigma = 0: nothing to
                    // shrink, pass through.
                    1.0
                } else {
                    (lam - sigma_sq).max(floor) / denom
                }
            }),
        );
        let q = &eig.eigenvectors;
        let matrix = q * DMatrix::from_diagonal(&mult) * q.transpose();
        Ok(Shrinkage { matrix })
    }

    /// Applies the shrinkage to one tangent coordinate vector.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.matrix.nrows();
        debug_assert_eq!(v.len(), n);
        debug_assert_eq!(out.len(), n);
        for (a, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (b, vb) in v.iter().enumerate() {
                acc += self.matrix[(a, b)] * vb;
            }
            *slot = acc;
        }
    }

    /// The dense operator Q D Q^T, exposed for direct inspection in tests.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::TangentGaussian;
    use crate::testutil::{all_manifolds, random_point, random_tangent};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn cfg() -> KarcherConfig {
        KarcherConfig::default()
    }

    #[test]
    fn default_config_values() {
        let c = KarcherConfig::default();
        assert_eq!(c.max_iters, 50);
        assert_eq!(c.grad_tol, 1e-10);
        assert_eq!(c.step, 1.0);
    }

    #[test]
    fn mean_of_a_single_sample_is_the_sample_verbatim() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for m in all_manifolds() {
            let x = random_point(m, &mut rng);
            let mean = karcher_mean(m, 1, &x, None, &cfg()).unwrap();
            assert_eq!(mean, x, "the convergence check must fire before any step on {m:?}");
        }
    }

    #[test]
    fn flat_mean_is_the_arithmetic_mean() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let m = Manifold::Euclidean(3);
        let k = 17;
        let points: Vec<f64> = (0..k).flat_map(|_| random_point(m, &mut rng)).collect();
        let mean = karcher_mean(m, 1, &points, None, &cfg()).unwrap();
        for c in 0..3 {
            let direct: f64 = (0..k).map(|j| points[j * 3 + c]).sum::<f64>() / k as f64;
            assert!((mean[c] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_flat_mean_matches_direct_average() {
        let m = Manifold::Euclidean(2);
        let points = [0.0, 0.0, 4.0, 8.0];
        let weights = [3.0, 1.0];
        let mean = karcher_mean(m, 1, &points, Some(&weights), &cfg()).unwrap();
        assert!((mean[0] - 1.0).abs() < 1e-12);
        assert!((mean[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_mean_of_two_points_is_the_geodesic_midpoint() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let m = Manifold::Sphere2;
        for _ in 0..20 {
            let x = random_point(m, &mut rng);
            let y = random_point(m, &mut rng);
            if m.dist(&x, &y).unwrap() > 2.5 {
                continue;
            }
            let mut v = [0.0; 2];
            m.log(&x, &y, &mut v).unwrap();
            let mut mid = [0.0; 3];
            m.exp(&x, &[0.5 * v[0], 0.5 * v[1]], &mut mid).unwrap();

            let mut both = x.clone();
            both.extend_from_slice(&y);
            let mean = karcher_mean(m, 1, &both, None, &cfg()).unwrap();
            let err = m.dist(&mean, &mid).unwrap();
            assert!(err < 1e-8, "midpoint error {err}");
        }
    }

    #[test]
    fn mean_works_on_product_points() {
        // Two 2-component circle samples; each component mean is the
        // midpoint arc.
        let a45 = std::f64::consts::FRAC_PI_4;
        let p0 = [1.0, 0.0, a45.cos(), a45.sin()];
        let p1 = [0.0, 1.0, a45.cos(), -(a45.sin())];
        let mut points = p0.to_vec();
        points.extend_from_slice(&p1);
        let mean = karcher_mean(Manifold::Circle, 2, &points, None, &cfg()).unwrap();
        assert!((mean[0] - a45.cos()).abs() < 1e-9);
        assert!((mean[1] - a45.sin()).abs() < 1e-9);
        assert!((mean[2] - 1.0).abs() < 1e-9);
        assert!(mean[3].abs() < 1e-9);
    }

    #[test]
    fn mean_reports_the_offending_sample_on_cut_locus() {
        let points = [1.0, 0.0, 0.0, 1.0, -1.0, 0.0];
        let err = karcher_mean(Manifold::Circle, 1, &points, None, &cfg()).unwrap_err();
        assert!(matches!(err, Error::CutLocus { item: 2, component: 0 }), "got {err:?}");
    }

    #[test]
    fn mean_shape_errors() {
        assert!(karcher_mean(Manifold::Circle, 1, &[], None, &cfg()).is_err());
        assert!(karcher_mean(Manifold::Circle, 1, &[1.0, 0.0, 0.0], None, &cfg()).is_err());
        assert!(karcher_mean(Manifold::Circle, 1, &[1.0, 0.0], Some(&[1.0, 2.0]), &cfg()).is_err());
        assert!(karcher_mean(Manifold::Circle, 1, &[1.0, 0.0], Some(&[0.0]), &cfg()).is_err());
    }

    #[test]
    fn exhausted_iterations_surface_as_nonconvergence() {
        let points = [1.0, 0.0, 0.0, 1.0];
        let tight = KarcherConfig { max_iters: 0, ..KarcherConfig::default() };
        let err = karcher_mean(Manifold::Circle, 1, &points, None, &tight).unwrap_err();
        match err {
            Error::NonConvergence { iters, grad_norm } => {
                assert_eq!(iters, 0);
                assert!(grad_norm > 0.0);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn covariance_of_one_sample_is_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        for m in all_manifolds() {
            let x = random_point(m, &mut rng);
            let (cov, logs) = empirical_covariance(m, 1, &x, &x).unwrap();
            assert!(cov.iter().all(|&v| v == 0.0));
            assert!(logs.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn flat_covariance_matches_direct_computation() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let m = Manifold::Euclidean(2);
        let k = 40;
        let points: Vec<f64> = (0..k).flat_map(|_| random_point(m, &mut rng)).collect();
        let mean = karcher_mean(m, 1, &points, None, &cfg()).unwrap();
        let (cov, _) = empirical_covariance(m, 1, &mean, &points).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let direct: f64 = (0..k)
                    .map(|j| (points[j * 2 + a] - mean[a]) * (points[j * 2 + b] - mean[b]))
                    .sum::<f64>()
                    / k as f64;
                assert!((cov[(a, b)] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn covariance_trace_is_the_mean_squared_distance() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        for m in all_manifolds() {
            let base = random_point(m, &mut rng);
            let mut points = Vec::new();
            let k = 12;
            for _ in 0..k {
                let v = random_tangent(m, 0.2, &mut rng);
                let mut y = vec![0.0; m.ambient_len()];
                m.exp(&base, &v, &mut y).unwrap();
                points.extend(y);
            }
            let (cov, _) = empirical_covariance(m, 1, &base, &points).unwrap();
            let msd: f64 = (0..k)
                .map(|j| {
                    let alen = m.ambient_len();
                    m.dist_sq(&base, &points[j * alen..(j + 1) * alen]).unwrap()
                })
                .sum::<f64>()
                / k as f64;
            assert!((cov.trace() - msd).abs() < 1e-9, "trace identity on {m:?}");
        }
    }

    #[test]
    fn covariance_reports_the_offending_sample_on_cut_locus() {
        let mean = [1.0, 0.0];
        let points = [0.0, 1.0, -1.0, 0.0];
        let err = empirical_covariance(Manifold::Circle, 1, &mean, &points).unwrap_err();
        assert!(matches!(err, Error::CutLocus { item: 1, component: 0 }), "got {err:?}");
    }

    #[test]
    fn pooled_variance_of_identical_pixels_is_zero() {
        let x = [0.0, 0.0, 1.0];
        let pixels = x.repeat(5);
        assert_eq!(pooled_variance(Manifold::Sphere2, &x, &pixels).unwrap(), 0.0);
    }

    #[test]
    fn pooled_variance_matches_flat_second_moment() {
        let m = Manifold::Euclidean(1);
        let mean = [2.0];
        let pixels = [1.0, 2.0, 3.0, 4.0];
        let direct = (1.0 + 0.0 + 1.0 + 4.0) / 4.0;
        let got = pooled_variance(m, &mean, &pixels).unwrap();
        assert!((got - direct).abs() < 1e-12);
    }

    #[test]
    fn pooled_variance_recovers_sigma_on_spd() {
        // Radial isometry makes E dist^2 = d sigma^2 exact for tangent
        // draws, so the pooled estimate concentrates at sigma^2.
        let m = Manifold::Spd(2);
        let mu = [1.0, 0.0, 0.0, 1.0];
        let sigma = 0.5;
        let sampler = TangentGaussian::isotropic(m, 1, sigma).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let k = 10_000;
        let mut pixels = Vec::with_capacity(k * 4);
        for _ in 0..k {
            pixels.extend(sampler.draw(&mu, &mut rng).unwrap());
        }
        let got = pooled_variance(m, &mu, &pixels).unwrap();
        assert!((got - 0.25).abs() < 0.01, "pooled variance {got}");
    }

    #[test]
    fn sampled_spd_covariance_concentrates_on_isotropy() {
        let m = Manifold::Spd(2);
        let mu = [1.0, 0.0, 0.0, 1.0];
        let sigma = 0.5;
        let sampler = TangentGaussian::isotropic(m, 1, sigma).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let k = 10_000;
        let mut pixels = Vec::with_capacity(k * 4);
        for _ in 0..k {
            pixels.extend(sampler.draw(&mu, &mut rng).unwrap());
        }
        let mean = karcher_mean(m, 1, &pixels, None, &cfg()).unwrap();
        let (cov, _) = empirical_covariance(m, 1, &mean, &pixels).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                if a == b {
                    assert!((cov[(a, a)] - 0.25).abs() < 0.01, "diagonal {}", cov[(a, a)]);
                } else {
                    assert!(cov[(a, b)].abs() < 0.01, "off-diagonal {}", cov[(a, b)]);
                }
            }
        }
    }

    #[test]
    fn zero_noise_shrinkage_is_the_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let n = 5;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let cov = &a * a.transpose();
        let w = Shrinkage::new(&cov, 0.0).unwrap();
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut out = vec![0.0; n];
        w.apply(&v, &mut out);
        for (o, vi) in out.iter().zip(&v) {
            assert!((o - vi).abs() < 1e-10);
        }
    }

    #[test]
    fn pure_noise_shrinkage_annihilates() {
        // Sigma = sigma^2 I means everything is noise; the multipliers
        // collapse to the floor ratio 1e-10.
        let n = 4;
        let sigma_sq = 0.09;
        let cov = DMatrix::from_diagonal_element(n, n, sigma_sq);
        let w = Shrinkage::new(&cov, sigma_sq).unwrap();
        let v = vec![1.0; n];
        let mut out = vec![0.0; n];
        w.apply(&v, &mut out);
        let vn = (n as f64).sqrt();
        let on = out.iter().map(|o| o * o).sum::<f64>().sqrt();
        assert!(on <= 1e-8 * vn, "norm ratio {}", on / vn);
    }

    #[test]
    fn well_conditioned_shrinkage_matches_dense_solve() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let n = 6;
        let sigma_sq = 0.04;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        // Lift well above sigma^2 so no eigenvalue is clipped.
        let cov = &a * a.transpose() + DMatrix::from_diagonal_element(n, n, 3.0 * sigma_sq);
        let w = Shrinkage::new(&cov, sigma_sq).unwrap();

        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut out = vec![0.0; n];
        w.apply(&v, &mut out);

        // (Sigma - sigma^2 I) Sigma^{-1} v by LU solve.
        let rhs = DVector::from_column_slice(&v);
        let x = cov.clone().lu().solve(&rhs).unwrap();
        let want = (&cov - DMatrix::from_diagonal_element(n, n, sigma_sq)) * x;
        for (o, wv) in out.iter().zip(want.iter()) {
            assert!((o - wv).abs() < 1e-9, "{o} vs {wv}");
        }
    }

    #[test]
    fn shrinkage_is_linear_and_contracts_above_the_noise_floor() {
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        let n = 4;
        let sigma_sq = 0.25;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let cov = &a * a.transpose() + DMatrix::from_diagonal_element(n, n, sigma_sq);
        let w = Shrinkage::new(&cov, sigma_sq).unwrap();

        let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let combo: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let mut wu = vec![0.0; n];
        let mut wv = vec![0.0; n];
        let mut wc = vec![0.0; n];
        w.apply(&u, &mut wu);
        w.apply(&v, &mut wv);
        w.apply(&combo, &mut wc);
        for i in 0..n {
            assert!((wc[i] - (2.0 * wu[i] - 3.0 * wv[i])).abs() < 1e-10);
        }

        // All eigenvalues >= sigma^2, so the operator cannot expand.
        let vn = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let on = wv.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(on <= vn * (1.0 + 1e-12));
    }

    #[test]
    fn shrinkage_rejects_bad_covariances() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.1, 1.0]);
        assert!(matches!(Shrinkage::new(&asym, 0.1), Err(Error::Shape(_))));

        let rect = DMatrix::from_row_slice(1, 2, &[1.0, 0.5]);
        assert!(matches!(Shrinkage::new(&rect, 0.1), Err(Error::Shape(_))));
    }
}

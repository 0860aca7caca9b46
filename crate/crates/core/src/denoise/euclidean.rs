//! Standalone flat (vector-space) version of the two-step denoiser.
//!
//! Implements the same pipeline as [`super::nlmmse`] with plain linear
//! algebra: arithmetic means instead of Karcher means, vector differences
//! instead of logarithms, and vector addition instead of the exponential.
//! Patch search reuses [`super::find_similar`] verbatim so both pipelines
//! group exactly the same patches; shrinkage reuses [`Shrinkage`] so both
//! treat degenerate covariances with the same eigenvalue floors. On
//! Euclidean images the generic pipeline must match this one to high
//! accuracy, which pins down the geometric plumbing.

use crate::error::{Error, Result};
use crate::image::ManifoldImage;
use crate::manifold::Manifold;
use crate::stats::Shrinkage;
use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{find_similar, DenoiseParams, PatchGroup, RestoredGroup};

fn flat_mean(points: &[f64], n: usize) -> Vec<f64> {
    let k = points.len() / n;
    let mut mean = vec![0.0; n];
    for row in points.chunks_exact(n) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= k as f64;
    }
    mean
}

/// Flat flatness test over all K s^2 pixel values of the group.
fn homogeneous_flat(group: &PatchGroup, d: usize, gamma: f64, sigma_sq: f64) -> (bool, Vec<f64>) {
    let mean = flat_mean(&group.patches, d);
    let mut total = 0.0;
    for px in group.patches.chunks_exact(d) {
        for (a, b) in px.iter().zip(&mean) {
            let diff = a - b;
            total += diff * diff;
        }
    }
    // Denominator d * K s^2 equals the total number of reals in the group.
    let var = total / group.patches.len() as f64;
    (var <= gamma * sigma_sq, mean)
}

/// Biased covariance of the rows of `points` around `mean`.
fn flat_covariance(points: &[f64], mean: &[f64], n: usize) -> DMatrix<f64> {
    let k = points.len() / n;
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for row in points.chunks_exact(n) {
        for i in 0..n {
            let di = row[i] - mean[i];
            for j in i..n {
                cov[(i, j)] += di * (row[j] - mean[j]);
            }
        }
    }
    let scale = 1.0 / k as f64;
    for i in 0..n {
        for j in i..n {
            let v = cov[(i, j)] * scale;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

fn restore_flat(
    members: Vec<(usize, usize)>,
    patches: &[f64],
    mean: &[f64],
    shrink: &Shrinkage,
    n: usize,
) -> RestoredGroup {
    let k = patches.len() / n;
    let mut dev = vec![0.0; n];
    let mut shrunk = vec![0.0; n];
    let mut out = vec![0.0; k * n];
    for (j, row) in patches.chunks_exact(n).enumerate() {
        for ((d, a), b) in dev.iter_mut().zip(row).zip(mean) {
            *d = a - b;
        }
        shrink.apply(&dev, &mut shrunk);
        for ((o, m), s) in out[j * n..(j + 1) * n].iter_mut().zip(mean).zip(&shrunk) {
            *o = m + s;
        }
    }
    RestoredGroup { members, patches: out, dropped: 0 }
}

fn process_reference_flat(
    noisy: &ManifoldImage,
    guide: Option<&ManifoldImage>,
    row: usize,
    col: usize,
    s: usize,
    w: usize,
    k: usize,
    gamma: f64,
    sigma_sq: f64,
) -> Result<RestoredGroup> {
    let d = noisy.manifold.ambient_len();
    let n = s * s * d;

    let searched = find_similar(guide.unwrap_or(noisy), row, col, s, w, k)?;
    let (group, oracle_patches) = match guide {
        None => (searched, None),
        Some(_) => {
            let mut g = searched;
            let mut noisy_patches = vec![0.0; g.len() * n];
            for (j, &(r, c)) in g.members.iter().enumerate() {
                super::copy_patch(noisy, r, c, s, &mut noisy_patches[j * n..(j + 1) * n]);
            }
            let oracle = std::mem::replace(&mut g.patches, noisy_patches);
            (g, Some(oracle))
        }
    };

    let (flat, pixel_mean) = homogeneous_flat(&group, d, gamma, sigma_sq);
    if flat {
        let mut patches = vec![0.0; group.len() * n];
        for patch in patches.chunks_exact_mut(n) {
            for px in patch.chunks_exact_mut(d) {
                px.copy_from_slice(&pixel_mean);
            }
        }
        return Ok(RestoredGroup { members: group.members, patches, dropped: 0 });
    }

    let mean = flat_mean(&group.patches, n);
    let cov = match &oracle_patches {
        None => flat_covariance(&group.patches, &mean, n),
        Some(oracle) => {
            let mut cov = flat_covariance(oracle, &mean, n);
            for i in 0..n {
                cov[(i, i)] += sigma_sq;
            }
            cov
        }
    };
    let shrink = Shrinkage::new(&cov, sigma_sq)?;
    Ok(restore_flat(group.members, &group.patches, &mean, &shrink, n))
}

fn pass_flat(
    noisy: &ManifoldImage,
    guide: Option<&ManifoldImage>,
    s: usize,
    w: usize,
    k: usize,
    gamma: f64,
    sigma_sq: f64,
    accelerate: bool,
) -> Result<ManifoldImage> {
    let (rows, cols) = (noisy.rows, noisy.cols);
    let d = noisy.manifold.ambient_len();
    let h = s / 2;

    let mut centers = Vec::with_capacity((rows - 2 * h) * (cols - 2 * h));
    for c in h..cols - h {
        for r in h..rows - h {
            centers.push((r, c));
        }
    }

    let mut agg = super::Aggregator::new(rows * cols, d);
    if accelerate {
        let mut covered = vec![false; rows * cols];
        for &(r, c) in &centers {
            if covered[r * cols + c] {
                continue;
            }
            let rg = process_reference_flat(noisy, guide, r, c, s, w, k, gamma, sigma_sq)?;
            agg.scatter(cols, s, &rg);
            for &(mr, mc) in &rg.members {
                covered[mr * cols + mc] = true;
            }
        }
    } else {
        for chunk in centers.chunks(super::SCAN_CHUNK) {
            let results: Vec<Result<RestoredGroup>> = chunk
                .par_iter()
                .map(|&(r, c)| process_reference_flat(noisy, guide, r, c, s, w, k, gamma, sigma_sq))
                .collect();
            for rg in results {
                agg.scatter(cols, s, &rg?);
            }
        }
    }

    let mut data = vec![0.0; rows * cols * d];
    for (i, out) in data.chunks_exact_mut(d).enumerate() {
        let est = &agg.estimates[i];
        if est.is_empty() {
            return Err(Error::InvalidPixel {
                index: i,
                detail: "pixel received no restored patch".into(),
            });
        }
        out.copy_from_slice(&flat_mean(est, d));
    }
    ManifoldImage::new(noisy.manifold, rows, cols, data)
}

/// Flat two-step pipeline; the input must live on a Euclidean manifold.
pub fn nlmmse_flat(
    image: &ManifoldImage,
    params: &DenoiseParams,
) -> Result<(ManifoldImage, ManifoldImage)> {
    if !matches!(image.manifold, Manifold::Euclidean(_)) {
        return Err(Error::Shape(format!(
            "flat pipeline requires a Euclidean image, got {:?}",
            image.manifold
        )));
    }
    params.validate()?;
    for (name, w) in [("first", params.w1), ("second", params.w2)] {
        if image.rows < w || image.cols < w {
            return Err(Error::Shape(format!(
                "image {}x{} is smaller than the {name}-pass search window {w}",
                image.rows, image.cols
            )));
        }
    }
    let sigma_sq = params.sigma * params.sigma;
    let oracle = pass_flat(
        image,
        None,
        params.s1,
        params.w1,
        params.k1,
        params.gamma,
        sigma_sq,
        params.accelerate,
    )?;
    let last = pass_flat(
        image,
        Some(&oracle),
        params.s2,
        params.w2,
        params.k2,
        params.gamma,
        sigma_sq,
        params.accelerate,
    )?;
    Ok((oracle, last))
}

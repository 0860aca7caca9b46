//! Nonlocal-means baseline for manifold-valued images.
//!
//! Each pixel is replaced by a weighted Karcher mean of the center values
//! of its most similar patches. Patch similarity is a spatially weighted
//! sum of squared pixel distances, with a Gaussian kernel of width `delta`
//! over the patch offsets, and similarity is turned into weights through a
//! Gaussian of bandwidth `tau`. Unlike the MMSE pipeline there is no
//! second pass and no covariance model; this is the comparison baseline.

use crate::error::{Error, Result};
use crate::image::ManifoldImage;
use crate::stats::{karcher_mean, KarcherConfig};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug)]
pub struct NlMeansParams {
    /// Patch side (odd).
    pub s: usize,
    /// Search window side (odd, > s).
    pub w: usize,
    /// Patches kept per pixel.
    pub k: usize,
    /// Width of the spatial kernel over patch offsets.
    pub delta: f64,
    /// Similarity bandwidth: weights are exp(-dist^2 / (2 tau^2)).
    pub tau: f64,
}

impl NlMeansParams {
    pub fn validate(&self) -> Result<()> {
        if self.s % 2 == 0 || self.w % 2 == 0 {
            return Err(Error::Shape("patch and window sides must be odd".into()));
        }
        if self.w <= self.s {
            return Err(Error::Shape("window must exceed the patch side".into()));
        }
        if self.k == 0 {
            return Err(Error::Shape("patch count must be >= 1".into()));
        }
        if !(self.delta > 0.0) || !(self.tau > 0.0) {
            return Err(Error::Shape("delta and tau must be positive".into()));
        }
        Ok(())
    }
}

/// Spatially weighted squared patch distance, column-major offset order.
fn weighted_patch_dist_sq(
    image: &ManifoldImage,
    a: (usize, usize),
    b: (usize, usize),
    s: usize,
    kernel: &[f64],
) -> Result<f64> {
    let h = s / 2;
    let m = image.manifold;
    let mut total = 0.0;
    let mut pos = 0;
    for dc in 0..s {
        for dr in 0..s {
            let pa = image.pixel_at(a.0 + dr - h, a.1 + dc - h);
            let pb = image.pixel_at(b.0 + dr - h, b.1 + dc - h);
            let d = m.dist(pa, pb)?;
            total += kernel[pos] * d * d;
            pos += 1;
        }
    }
    Ok(total)
}

fn restore_pixel(
    image: &ManifoldImage,
    row: usize,
    col: usize,
    p: &NlMeansParams,
    kernel: &[f64],
) -> Result<Vec<f64>> {
    let m = image.manifold;
    let alen = m.ambient_len();
    let h = p.s / 2;
    let v = p.w / 2;
    let r_lo = row.saturating_sub(v).max(h);
    let r_hi = (row + v).min(image.rows - 1 - h);
    let c_lo = col.saturating_sub(v).max(h);
    let c_hi = (col + v).min(image.cols - 1 - h);

    // Rank candidates by weighted distance, reference pinned first and
    // ties broken by column-major window order.
    let mut ranked: Vec<(f64, usize, (usize, usize))> = Vec::new();
    let mut rank = 0;
    for c in c_lo..=c_hi {
        for r in r_lo..=r_hi {
            rank += 1;
            if (r, c) == (row, col) {
                continue;
            }
            let d2 = weighted_patch_dist_sq(image, (row, col), (r, c), p.s, kernel)?;
            ranked.push((d2, rank, (r, c)));
        }
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.truncate(p.k.saturating_sub(1));

    // Gaussian similarity weights; the reference weighs as much as its
    // best neighbor, or 1 when it stands alone.
    let inv = 1.0 / (2.0 * p.tau * p.tau);
    let mut weights = Vec::with_capacity(ranked.len() + 1);
    weights.push(0.0);
    let mut best = 0.0_f64;
    for &(d2, _, _) in &ranked {
        let w = (-d2 * inv).exp();
        best = best.max(w);
        weights.push(w);
    }
    weights[0] = if ranked.is_empty() { 1.0 } else { best };

    let mut values = Vec::with_capacity((ranked.len() + 1) * alen);
    values.extend_from_slice(image.pixel_at(row, col));
    for &(_, _, (r, c)) in &ranked {
        values.extend_from_slice(image.pixel_at(r, c));
    }
    karcher_mean(m, 1, &values, Some(&weights), &KarcherConfig::default())
}

/// Denoises the image by nonlocal means. Pixels too close to the border to
/// carry a full patch are copied unchanged.
pub fn nlmeans(image: &ManifoldImage, params: &NlMeansParams) -> Result<ManifoldImage> {
    params.validate()?;
    if image.rows < params.w || image.cols < params.w {
        return Err(Error::Shape(format!(
            "image {}x{} is smaller than the search window {}",
            image.rows, image.cols, params.w
        )));
    }
    let m = image.manifold;
    let alen = m.ambient_len();
    let (rows, cols) = (image.rows, image.cols);
    let h = params.s / 2;

    let mut kernel = vec![0.0; params.s * params.s];
    let inv = 1.0 / (2.0 * params.delta * params.delta);
    let mut pos = 0;
    for dc in 0..params.s {
        for dr in 0..params.s {
            let (fr, fc) = (dr as f64 - h as f64, dc as f64 - h as f64);
            kernel[pos] = (-(fr * fr + fc * fc) * inv).exp();
            pos += 1;
        }
    }

    let mut data = vec![0.0; rows * cols * alen];
    let slots: Vec<(usize, &mut [f64])> = data.chunks_exact_mut(alen).enumerate().collect();
    slots
        .into_par_iter()
        .map(|(i, out)| -> Result<()> {
            let (r, c) = (i / cols, i % cols);
            if r < h || c < h || r + h >= rows || c + h >= cols {
                out.copy_from_slice(image.pixel_at(r, c));
            } else {
                let restored = restore_pixel(image, r, c, params, &kernel)
                    .map_err(|e| Error::Domain(format!("pixel ({r}, {c}): {e}")))?;
                out.copy_from_slice(&restored);
            }
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;

    ManifoldImage::new(m, rows, cols, data)
}

//! Two-step nonlocal MMSE denoising of manifold-valued images, plus its
//! standalone flat counterpart ([`euclidean`]) and the nonlocal-means
//! baseline ([`nlmeans`]).
//!
//! One pass works group by group: around each reference pixel the K most
//! similar patches in a search window are collected, flat groups are
//! detected by a pooled-variance test and restored by their common mean,
//! and the rest get tangent-space MMSE shrinkage at the group's Karcher
//! mean. The first pass runs on the noisy image alone and produces the
//! oracle; the second pass selects patches and estimates signal covariance
//! on the oracle while still restoring the original noisy values. Every
//! pixel ends up covered by several restored patches and takes their
//! unweighted Karcher mean.

use crate::error::{Error, Result};
use crate::image::ManifoldImage;
use crate::manifold::{product_exp, product_log, Manifold, ProductPoint};
use crate::stats::{empirical_covariance, karcher_mean, pooled_variance, KarcherConfig, Shrinkage};
use rayon::prelude::*;

pub mod euclidean;
pub mod nlmeans;

/// References processed per parallel batch in the non-accelerated scan;
/// bounds the transient memory for restored-patch buffers.
const SCAN_CHUNK: usize = 256;

/// All knobs of the two-step denoiser.
#[derive(Clone, Copy, Debug)]
pub struct DenoiseParams {
    /// Patch side of the first pass (odd).
    pub s1: usize,
    /// Patch side of the second pass (odd).
    pub s2: usize,
    /// Search window side of the first pass (odd, > s1).
    pub w1: usize,
    /// Search window side of the second pass (odd, > s2).
    pub w2: usize,
    /// Similar patches kept per group in the first pass.
    pub k1: usize,
    /// Similar patches kept per group in the second pass.
    pub k2: usize,
    /// Homogeneous-area threshold factor: a group with pooled variance
    /// <= gamma * sigma^2 is restored by its mean alone.
    pub gamma: f64,
    /// Noise standard deviation the image is assumed to carry.
    pub sigma: f64,
    /// Skip reference pixels whose patch was already restored as a member
    /// of an earlier group. Large speedup, marginal quality cost, and the
    /// scan becomes inherently serial.
    pub accelerate: bool,
}

impl DenoiseParams {
    pub fn validate(&self) -> Result<()> {
        for (name, s, w) in [("first", self.s1, self.w1), ("second", self.s2, self.w2)] {
            if s % 2 == 0 || w % 2 == 0 {
                return Err(Error::Shape(format!("{name}-pass patch and window sides must be odd")));
            }
            if w <= s {
                return Err(Error::Shape(format!("{name}-pass window must exceed the patch side")));
            }
        }
        if self.k1 == 0 || self.k2 == 0 {
            return Err(Error::Shape("patch counts must be >= 1".into()));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::Shape(format!("gamma = {} must be >= 0", self.gamma)));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Shape(format!("sigma = {} must be >= 0", self.sigma)));
        }
        Ok(())
    }

    /// Desk-scale defaults per manifold, sized for 64x64 images on modest
    /// hardware; window sides are clamped to the image. Patch sides grow
    /// with how smooth each manifold's test content tends to be, while K
    /// stays well below the K = 3 s^2 d rule of thumb to keep group
    /// statistics affordable at this scale (the eigenvalue floor absorbs
    /// the resulting covariance rank deficiency).
    pub fn defaults_for(m: Manifold, rows: usize, cols: usize) -> Self {
        let (s1, s2, w, k1, k2, gamma) = match m {
            Manifold::Circle => (7, 7, 21, 80, 80, 1.0),
            Manifold::Sphere2 => (3, 5, 21, 60, 60, 1.0),
            Manifold::Spd(_) => (3, 3, 17, 60, 60, 0.8),
            Manifold::Simplex1 => (5, 5, 17, 60, 60, 1.0),
            Manifold::Hyperbolic2 => (3, 3, 17, 60, 60, 1.0),
            Manifold::Euclidean(_) => (3, 3, 13, 40, 40, 1.0),
        };
        let cap = rows.min(cols);
        let clamp_odd = |v: usize, lo: usize| -> usize {
            let mut v = v.min(cap);
            if v % 2 == 0 {
                v -= 1;
            }
            v.max(lo)
        };
        let w1 = clamp_odd(w, s1 + 2);
        let w2 = clamp_odd(w, s2 + 2);
        DenoiseParams { s1, s2, w1, w2, k1, k2, gamma, sigma: 0.0, accelerate: true }
    }
}

/// A reference patch together with its K most similar neighbors.
#[derive(Clone, Debug)]
pub struct PatchGroup {
    pub manifold: Manifold,
    /// Patch side.
    pub s: usize,
    /// Grid position (row, col) of the reference center.
    pub reference: (usize, usize),
    /// Member centers in selection order; the reference is always first.
    pub members: Vec<(usize, usize)>,
    /// Member patches, concatenated product points (component-major).
    pub patches: Vec<f64>,
    /// True when the window held fewer than the requested K candidates.
    pub reduced: bool,
}

impl PatchGroup {
    /// Number of members currently in the group.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Reals per member patch.
    fn stride(&self) -> usize {
        self.s * self.s * self.manifold.ambient_len()
    }

    fn remove_member(&mut self, j: usize) {
        let stride = self.stride();
        self.members.remove(j);
        self.patches.drain(j * stride..(j + 1) * stride);
    }
}

/// Copies the s x s patch centered at (row, col) into `out` using the fixed
/// column-major component order: component (dc + h) * s + (dr + h) holds the
/// pixel at (row + dr, col + dc), h = s/2. Caller guarantees the patch lies
/// inside the image.
fn copy_patch(image: &ManifoldImage, row: usize, col: usize, s: usize, out: &mut [f64]) {
    let h = s / 2;
    let alen = image.manifold.ambient_len();
    let mut pos = 0;
    for c in (col - h)..=(col + h) {
        for r in (row - h)..=(row + h) {
            out[pos..pos + alen].copy_from_slice(image.pixel_at(r, c));
            pos += alen;
        }
    }
}

/// Extracts the patch at (row, col) as a product point, column-major.
pub fn extract_patch(image: &ManifoldImage, row: usize, col: usize, s: usize) -> Result<ProductPoint> {
    if s % 2 == 0 {
        return Err(Error::Shape(format!("patch side {s} must be odd")));
    }
    let h = s / 2;
    if row < h || col < h || row + h >= image.rows || col + h >= image.cols {
        return Err(Error::Domain(format!(
            "patch of side {s} at ({row}, {col}) crosses the image boundary"
        )));
    }
    let mut coords = vec![0.0; s * s * image.manifold.ambient_len()];
    copy_patch(image, row, col, s, &mut coords);
    Ok(ProductPoint { manifold: image.manifold, count: s * s, coords })
}

/// Squared product distance between the patches at `a` and `b`, accumulated
/// in the same column-major component order as [`extract_patch`], so it is
/// bitwise identical to extracting both patches and measuring them.
fn patch_dist_sq(
    image: &ManifoldImage,
    a: (usize, usize),
    b: (usize, usize),
    s: usize,
) -> Result<f64> {
    let h = s / 2;
    let m = image.manifold;
    let mut total = 0.0;
    for dc in 0..s {
        for dr in 0..s {
            let pa = image.pixel_at(a.0 + dr - h, a.1 + dc - h);
            let pb = image.pixel_at(b.0 + dr - h, b.1 + dc - h);
            let d = m.dist(pa, pb)?;
            total += d * d;
        }
    }
    Ok(total)
}

/// Selects the K nearest patches to the one at (row, col) within a w x w
/// window (clipped at image borders), by product geodesic distance.
///
/// The reference itself is always the first member; remaining candidates
/// are ordered by distance with ties broken by column-major window order.
/// Windows holding fewer than K valid candidates return everything found
/// and set `reduced`.
pub fn find_similar(
    image: &ManifoldImage,
    row: usize,
    col: usize,
    s: usize,
    w: usize,
    k: usize,
) -> Result<PatchGroup> {
    if w % 2 == 0 || w <= s {
        return Err(Error::Shape(format!("window side {w} must be odd and exceed the patch side {s}")));
    }
    if k == 0 {
        return Err(Error::Shape("requested patch count must be >= 1".into()));
    }
    let h = s / 2;
    if row < h || col < h || row + h >= image.rows || col + h >= image.cols {
        return Err(Error::Domain(format!(
            "reference patch of side {s} at ({row}, {col}) crosses the image boundary"
        )));
    }
    let v = w / 2;
    let r_lo = row.saturating_sub(v).max(h);
    let r_hi = (row + v).min(image.rows - 1 - h);
    let c_lo = col.saturating_sub(v).max(h);
    let c_hi = (col + v).min(image.cols - 1 - h);

    // (distance^2, column-major rank, center) for everything except the
    // reference, which is pinned to the front regardless of ties at zero.
    let mut ranked: Vec<(f64, usize, (usize, usize))> = Vec::with_capacity(w * w);
    let mut rank = 0;
    for c in c_lo..=c_hi {
        for r in r_lo..=r_hi {
            rank += 1;
            if (r, c) == (row, col) {
                continue;
            }
            let d2 = patch_dist_sq(image, (row, col), (r, c), s)?;
            ranked.push((d2, rank, (r, c)));
        }
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let take = (k - 1).min(ranked.len());
    let reduced = ranked.len() + 1 < k;
    let mut members = Vec::with_capacity(take + 1);
    members.push((row, col));
    members.extend(ranked[..take].iter().map(|e| e.2));

    let stride = s * s * image.manifold.ambient_len();
    let mut patches = vec![0.0; members.len() * stride];
    for (j, &(r, c)) in members.iter().enumerate() {
        copy_patch(image, r, c, s, &mut patches[j * stride..(j + 1) * stride]);
    }
    Ok(PatchGroup { manifold: image.manifold, s, reference: (row, col), members, patches, reduced })
}

/// Pooled-variance flatness test: m is the Karcher mean of all K s^2 pixel
/// values in the group, and the group is flat iff the average squared
/// distance to m, divided by d K s^2, is <= gamma sigma^2 (inclusive).
/// Returns the decision and m. Cut-locus failures carry the pixel index
/// within the group's pixel sequence in `item`.
pub fn homogeneous_test(group: &PatchGroup, gamma: f64, sigma_sq: f64) -> Result<(bool, Vec<f64>)> {
    let m = group.manifold;
    let mean = karcher_mean(m, 1, &group.patches, None, &KarcherConfig::default())?;
    let var = pooled_variance(m, &mean, &group.patches)?;
    Ok((var <= gamma * sigma_sq, mean))
}

/// Restoration output of one group: surviving members and their restored
/// patches, in member order.
#[derive(Clone, Debug)]
pub struct RestoredGroup {
    pub members: Vec<(usize, usize)>,
    pub patches: Vec<f64>,
    /// Members excluded because a logarithm hit the cut locus.
    pub dropped: usize,
}

/// Computes the log rows of each member patch at `mean`, K x n row-major,
/// mapping cut-locus failures to the member index.
fn member_logs(m: Manifold, count: usize, mean: &[f64], patches: &[f64]) -> Result<Vec<f64>> {
    let stride = count * m.ambient_len();
    let n = count * m.dim();
    let k = patches.len() / stride;
    let mut logs = vec![0.0; k * n];
    for j in 0..k {
        product_log(m, count, mean, &patches[j * stride..(j + 1) * stride], &mut logs[j * n..(j + 1) * n])
            .map_err(|e| match e {
                Error::CutLocus { component, .. } => Error::CutLocus { item: j, component },
                other => other,
            })?;
    }
    Ok(logs)
}

fn restore_members(
    m: Manifold,
    count: usize,
    mean: &[f64],
    shrink: &Shrinkage,
    logs: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    let n = count * m.dim();
    let stride = count * m.ambient_len();
    let mut shrunk = vec![0.0; n];
    let mut out = vec![0.0; k * stride];
    for j in 0..k {
        shrink.apply(&logs[j * n..(j + 1) * n], &mut shrunk);
        product_exp(m, count, mean, &shrunk, &mut out[j * stride..(j + 1) * stride])?;
    }
    Ok(out)
}

/// First-pass restoration of a non-flat group: Karcher mean of the noisy
/// patches, biased covariance of their logs, and the shrinkage
/// exp_mu(S log_mu(y_j)) with S = (Sigma - sigma^2 I) Sigma^{-1} in
/// eigenform. Members whose logarithm hits the cut locus are dropped and
/// the remaining group is reprocessed.
pub fn denoise_group_step1(group: &PatchGroup, sigma_sq: f64) -> Result<RestoredGroup> {
    let m = group.manifold;
    let count = group.s * group.s;
    let mut g = group.clone();
    let mut dropped = 0;
    loop {
        let attempt = (|| -> Result<Vec<f64>> {
            let mean = karcher_mean(m, count, &g.patches, None, &KarcherConfig::default())?;
            let (cov, logs) = empirical_covariance(m, count, &mean, &g.patches)?;
            let shrink = Shrinkage::new(&cov, sigma_sq)?;
            restore_members(m, count, &mean, &shrink, &logs, g.len())
        })();
        match attempt {
            Ok(patches) => {
                return Ok(RestoredGroup { members: g.members, patches, dropped });
            }
            Err(Error::CutLocus { item, .. }) if g.len() > 1 => {
                g.remove_member(item);
                dropped += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Second-pass restoration: the mean comes from the noisy patches, the
/// covariance from the oracle patches (as a signal covariance, re-inflated
/// by + sigma^2 I), and the shrinkage is applied to logs of the noisy
/// patches. `oracle_patches` must hold the same members in the same order.
pub fn denoise_group_step2(
    group: &PatchGroup,
    oracle_patches: &[f64],
    sigma_sq: f64,
) -> Result<RestoredGroup> {
    let m = group.manifold;
    let count = group.s * group.s;
    let stride = count * m.ambient_len();
    if oracle_patches.len() != group.patches.len() {
        return Err(Error::Shape("oracle patch buffer does not match the group".into()));
    }
    let mut g = group.clone();
    let mut oracle = oracle_patches.to_vec();
    let mut dropped = 0;
    loop {
        let attempt = (|| -> Result<Vec<f64>> {
            let mean = karcher_mean(m, count, &g.patches, None, &KarcherConfig::default())?;
            let (mut cov, _) = empirical_covariance(m, count, &mean, &oracle)?;
            for i in 0..cov.nrows() {
                cov[(i, i)] += sigma_sq;
            }
            let logs = member_logs(m, count, &mean, &g.patches)?;
            let shrink = Shrinkage::new(&cov, sigma_sq)?;
            restore_members(m, count, &mean, &shrink, &logs, g.len())
        })();
        match attempt {
            Ok(patches) => {
                return Ok(RestoredGroup { members: g.members, patches, dropped });
            }
            Err(Error::CutLocus { item, .. }) if g.len() > 1 => {
                g.remove_member(item);
                oracle.drain(item * stride..(item + 1) * stride);
                dropped += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Full group treatment for one reference center: similarity search on the
/// guide image (the noisy image itself in pass 1, the oracle in pass 2),
/// the flatness diversion, then the pass-specific restoration.
fn process_reference(
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
    let m = noisy.manifold;
    let count = s * s;
    let stride = count * m.ambient_len();

    let searched = find_similar(guide.unwrap_or(noisy), row, col, s, w, k)?;
    let (mut group, mut oracle_patches) = match guide {
        None => (searched, None),
        Some(_) => {
            // Member patches must come from the noisy image; the searched
            // patches (from the oracle) become the covariance source.
            let mut g = searched;
            let mut noisy_patches = vec![0.0; g.len() * stride];
            for (j, &(r, c)) in g.members.iter().enumerate() {
                copy_patch(noisy, r, c, s, &mut noisy_patches[j * stride..(j + 1) * stride]);
            }
            let oracle = std::mem::replace(&mut g.patches, noisy_patches);
            (g, Some(oracle))
        }
    };

    // The flatness test itself can hit a cut locus; drop the offending
    // member (pixel index -> member index) and retest.
    let mut dropped = 0;
    loop {
        match homogeneous_test(&group, gamma, sigma_sq) {
            Ok((true, mean)) => {
                let mut patches = vec![0.0; group.len() * stride];
                for patch in patches.chunks_exact_mut(stride) {
                    for px in patch.chunks_exact_mut(m.ambient_len()) {
                        px.copy_from_slice(&mean);
                    }
                }
                return Ok(RestoredGroup { members: group.members, patches, dropped });
            }
            Ok((false, _)) => {
                let mut restored = match &oracle_patches {
                    None => denoise_group_step1(&group, sigma_sq)?,
                    Some(oracle) => denoise_group_step2(&group, oracle, sigma_sq)?,
                };
                restored.dropped += dropped;
                return Ok(restored);
            }
            Err(Error::CutLocus { item, .. }) if group.len() > 1 => {
                let member = item / count;
                group.remove_member(member);
                if let Some(oracle) = oracle_patches.as_mut() {
                    oracle.drain(member * stride..(member + 1) * stride);
                }
                dropped += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Per-pixel estimate store for one pass.
struct Aggregator {
    alen: usize,
    estimates: Vec<Vec<f64>>,
}

impl Aggregator {
    fn new(pixels: usize, alen: usize) -> Self {
        Aggregator { alen, estimates: vec![Vec::new(); pixels] }
    }

    /// Scatters a group's restored patches to the pixels they cover. Must
    /// be called in scan order: the per-pixel lists then end up sorted by
    /// originating group, which fixes the aggregation order.
    fn scatter(&mut self, image_cols: usize, s: usize, rg: &RestoredGroup) {
        let h = s / 2;
        let alen = self.alen;
        let stride = s * s * alen;
        for (j, &(row, col)) in rg.members.iter().enumerate() {
            let patch = &rg.patches[j * stride..(j + 1) * stride];
            let mut pos = 0;
            for c in (col - h)..=(col + h) {
                for r in (row - h)..=(row + h) {
                    self.estimates[r * image_cols + c].extend_from_slice(&patch[pos..pos + alen]);
                    pos += alen;
                }
            }
        }
    }
}

/// One full pass over the image (either step of the pipeline).
fn denoise_pass(
    noisy: &ManifoldImage,
    guide: Option<&ManifoldImage>,
    s: usize,
    w: usize,
    k: usize,
    gamma: f64,
    sigma_sq: f64,
    accelerate: bool,
) -> Result<ManifoldImage> {
    let m = noisy.manifold;
    let (rows, cols) = (noisy.rows, noisy.cols);
    let h = s / 2;

    // Column-major scan of valid reference centers.
    let mut centers = Vec::with_capacity((rows - 2 * h) * (cols - 2 * h));
    for c in h..cols - h {
        for r in h..rows - h {
            centers.push((r, c));
        }
    }

    let mut agg = Aggregator::new(rows * cols, m.ambient_len());
    let wrap_err = |(r, c): (usize, usize), e: Error| -> Error {
        match e {
            e @ Error::Io(_) => e,
            e => Error::Domain(format!("group centered at ({r}, {c}): {e}")),
        }
    };

    if accelerate {
        let mut covered = vec![false; rows * cols];
        for &(r, c) in &centers {
            if covered[r * cols + c] {
                continue;
            }
            let rg = process_reference(noisy, guide, r, c, s, w, k, gamma, sigma_sq)
                .map_err(|e| wrap_err((r, c), e))?;
            agg.scatter(cols, s, &rg);
            for &(mr, mc) in &rg.members {
                covered[mr * cols + mc] = true;
            }
        }
    } else {
        for chunk in centers.chunks(SCAN_CHUNK) {
            let results: Vec<Result<RestoredGroup>> = chunk
                .par_iter()
                .map(|&(r, c)| {
                    process_reference(noisy, guide, r, c, s, w, k, gamma, sigma_sq)
                        .map_err(|e| wrap_err((r, c), e))
                })
                .collect();
            for rg in results {
                agg.scatter(cols, s, &rg?);
            }
        }
    }

    // Aggregate: unweighted Karcher mean of every pixel's estimates.
    let alen = m.ambient_len();
    let cfg = KarcherConfig::default();
    let mut data = vec![0.0; rows * cols * alen];
    let slots: Vec<(usize, &mut [f64])> = data.chunks_exact_mut(alen).enumerate().collect();
    slots
        .into_par_iter()
        .map(|(i, out)| -> Result<()> {
            let est = &agg.estimates[i];
            if est.is_empty() {
                return Err(Error::InvalidPixel {
                    index: i,
                    detail: "pixel received no restored patch".into(),
                });
            }
            out.copy_from_slice(&karcher_mean(m, 1, est, None, &cfg)?);
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;

    ManifoldImage::new(m, rows, cols, data)
}

/// The two-step denoiser. Returns (oracle, final): the first-pass output
/// that the second pass uses for patch matching and covariance estimation,
/// and the final restoration of the noisy input.
pub fn nlmmse(image: &ManifoldImage, params: &DenoiseParams) -> Result<(ManifoldImage, ManifoldImage)> {
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
    let oracle = denoise_pass(
        image,
        None,
        params.s1,
        params.w1,
        params.k1,
        params.gamma,
        sigma_sq,
        params.accelerate,
    )?;
    let last = denoise_pass(
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

/// Mean squared geodesic error between two images of identical shape.
pub fn mse(a: &ManifoldImage, b: &ManifoldImage) -> Result<f64> {
    a.mse(b)
}

//! Seeded synthetic test images: piecewise-constant regions, ramps, and
//! smooth backgrounds on each supported manifold.
//!
//! Every generator is a pure function of (name, dims, seed). Region
//! positions and values are jittered from the seed's synthesis stream, so
//! different seeds give genuinely different images while identical calls
//! are bit-reproducible.

use crate::error::{Error, Result};
use crate::image::ManifoldImage;
use crate::manifold::Manifold;
use crate::noise::{RngState, StreamKind};
use rand::Rng;
use std::f64::consts::PI;

/// Minimal side length a generator accepts; below this the structural
/// elements (blocks, disks, ramps) degenerate.
const MIN_SIDE: usize = 16;

/// Names understood by [`generate`].
pub const GENERATORS: [&str; 5] = ["s1-shapes", "s2-vortex", "spd2-blocks", "spd3-blocks", "eucl-ramps"];

/// Builds the named synthetic image.
pub fn generate(name: &str, rows: usize, cols: usize, seed: u64) -> Result<ManifoldImage> {
    if rows < MIN_SIDE || cols < MIN_SIDE {
        return Err(Error::Shape(format!(
            "generators need at least {MIN_SIDE}x{MIN_SIDE} pixels, got {rows}x{cols}"
        )));
    }
    match name {
        "s1-shapes" => Ok(s1_shapes(rows, cols, seed)),
        "s2-vortex" => Ok(s2_vortex(rows, cols, seed)),
        "spd2-blocks" => Ok(spd2_blocks(rows, cols, seed)),
        "spd3-blocks" => Ok(spd3_blocks(rows, cols, seed)),
        "eucl-ramps" => Ok(eucl_ramps(rows, cols, seed)),
        other => Err(Error::UnknownGenerator(other.to_string())),
    }
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Circle-valued image: smooth background with a paraboloid bowl, a linear
/// ramp band that winds around the circle, and two exactly-constant
/// regions (a disk and a rectangle) of at least 100 pixels each at 64x64.
fn s1_shapes(rows: usize, cols: usize, seed: u64) -> ManifoldImage {
    let mut rng = RngState::new(seed).stream(StreamKind::Synthesis, 0);
    let p1 = uniform(&mut rng, 0.0, 2.0 * PI);
    let p2 = uniform(&mut rng, 0.0, 2.0 * PI);
    let disk_val = uniform(&mut rng, -PI, PI);
    let rect_val = uniform(&mut rng, -PI, PI);
    let ramp_rate = uniform(&mut rng, 1.0, 1.4);
    let bowl_amp = uniform(&mut rng, 1.2, 1.8);

    let (rf, cf) = (rows as f64, cols as f64);
    // Fractional anchors keep the layout stable across sizes; jitter moves
    // each feature by a few pixels.
    let jit = |rng: &mut rand_chacha::ChaCha12Rng| uniform(rng, -2.0, 2.0);
    let disk_c = (0.27 * rf + jit(&mut rng), 0.25 * cf + jit(&mut rng));
    let disk_rad = (rows.min(cols) as f64 / 9.0).max(3.0);
    let rect_r0 = (0.12 * rf + jit(&mut rng)) as usize;
    let rect_c0 = (0.60 * cf + jit(&mut rng)) as usize;
    let (rect_h, rect_w) = (rows / 6, cols / 5);
    let bowl_c = (0.68 * rf + jit(&mut rng), 0.40 * cf + jit(&mut rng));
    let bowl_rad = rows.min(cols) as f64 / 5.0;
    let ramp_r0 = (0.78 * rf) as usize;
    let ramp_r1 = (0.95 * rf) as usize;

    let mut theta = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let (x, y) = (r as f64, c as f64);
            let mut t = 1.1 * (2.0 * PI * x / rf + p1).sin() * (2.0 * PI * y / cf + p2).cos();
            let db = ((x - bowl_c.0).powi(2) + (y - bowl_c.1).powi(2)).sqrt();
            if db < bowl_rad {
                let u = db / bowl_rad;
                t += bowl_amp * (1.0 - u * u);
            }
            if r >= ramp_r0 && r < ramp_r1 {
                t = -PI + ramp_rate * 2.0 * PI * y / cf;
            }
            let dd = ((x - disk_c.0).powi(2) + (y - disk_c.1).powi(2)).sqrt();
            if dd <= disk_rad {
                t = disk_val;
            }
            if r >= rect_r0 && r < rect_r0 + rect_h && c >= rect_c0 && c < (rect_c0 + rect_w).min(cols) {
                t = rect_val;
            }
            theta[r * cols + c] = t;
        }
    }

    let mut data = vec![0.0; rows * cols * 2];
    for (i, t) in theta.iter().enumerate() {
        data[2 * i] = t.cos();
        data[2 * i + 1] = t.sin();
    }
    ManifoldImage::new(Manifold::Circle, rows, cols, data).expect("constructed on the circle")
}

/// Vortex core positions used by the "s2-vortex" generator, exposed so
/// the smoothness of the generated field can be checked away from them.
pub fn vortex_centers(rows: usize, cols: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = RngState::new(seed).stream(StreamKind::Synthesis, 1);
    let anchors = [(0.30, 0.30), (0.62, 0.68), (0.26, 0.74)];
    anchors
        .iter()
        .map(|&(ar, ac)| {
            (
                ar * rows as f64 + uniform(&mut rng, -3.0, 3.0),
                ac * cols as f64 + uniform(&mut rng, -3.0, 3.0),
            )
        })
        .collect()
}

/// Sphere-valued image: a slowly drifting direction field with Gaussian
/// swirl bumps of seeded size and orientation at the vortex centers. The
/// amplitudes are sized so 4-neighbor geodesic steps stay below 0.2 rad
/// once pixels within 3 of a core are excluded.
fn s2_vortex(rows: usize, cols: usize, seed: u64) -> ManifoldImage {
    let centers = vortex_centers(rows, cols, seed);
    let mut rng = RngState::new(seed).stream(StreamKind::Synthesis, 0);
    let p0 = uniform(&mut rng, 0.0, 2.0 * PI);
    let vortices: Vec<(f64, f64, f64, f64)> = (0..centers.len())
        .map(|_| {
            let amp_phi = uniform(&mut rng, 0.7, 1.0) * if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            let amp_psi = uniform(&mut rng, 0.3, 0.45) * if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            let width = uniform(&mut rng, 5.0, 7.0);
            let dir = uniform(&mut rng, 0.0, 2.0 * PI);
            (amp_phi, amp_psi, width, dir)
        })
        .collect();

    let (rf, cf) = (rows as f64, cols as f64);
    let mut data = vec![0.0; rows * cols * 3];
    for r in 0..rows {
        for c in 0..cols {
            let (x, y) = (r as f64, c as f64);
            let mut phi = 0.6 * PI * y / cf + 0.4 * PI * x / rf + p0;
            let mut psi = PI * (0.35 + 0.30 * x / rf);
            for (k, &(vr, vc)) in centers.iter().enumerate() {
                let (amp_phi, amp_psi, width, dir) = vortices[k];
                let (dr, dc) = (x - vr, y - vc);
                let g = (-(dr * dr + dc * dc) / (2.0 * width * width)).exp();
                phi += amp_phi * g;
                psi += amp_psi * g * (dc * dir.cos() + dr * dir.sin()) / width;
            }
            let i = 3 * (r * cols + c);
            data[i] = psi.sin() * phi.cos();
            data[i + 1] = psi.sin() * phi.sin();
            data[i + 2] = psi.cos();
        }
    }
    ManifoldImage::new(Manifold::Sphere2, rows, cols, data).expect("constructed on the sphere")
}

/// Writes R(theta) diag(a, b) R(theta)^T into `out` (row-major 2x2).
fn rot_diag2(theta: f64, a: f64, b: f64, out: &mut [f64]) {
    let (s, co) = theta.sin_cos();
    out[0] = co * co * a + s * s * b;
    out[1] = co * s * (a - b);
    out[2] = out[1];
    out[3] = s * s * a + co * co * b;
}

/// SPD(2) image: smooth rotating anisotropy plus three constant blocks.
/// All eigenvalues stay within [0.5, 1.7].
fn spd2_blocks(rows: usize, cols: usize, seed: u64) -> ManifoldImage {
    let mut rng = RngState::new(seed).stream(StreamKind::Synthesis, 0);
    let p1 = uniform(&mut rng, 0.0, 2.0 * PI);
    let p2 = uniform(&mut rng, 0.0, 2.0 * PI);

    let (rf, cf) = (rows as f64, cols as f64);
    let mut blocks: Vec<(usize, usize, usize, usize, [f64; 4])> = Vec::new();
    for &(ar, ac) in &[(0.12, 0.10), (0.55, 0.55), (0.15, 0.62)] {
        let r0 = (ar * rf + uniform(&mut rng, 0.0, 3.0)) as usize;
        let c0 = (ac * cf + uniform(&mut rng, 0.0, 3.0)) as usize;
        let h = rows / 5;
        let w = cols / 5 + 2;
        let theta = uniform(&mut rng, 0.0, PI);
        let a = uniform(&mut rng, 1.2, 1.7);
        let b = uniform(&mut rng, 0.5, 0.8);
        let mut m = [0.0; 4];
        rot_diag2(theta, a, b, &mut m);
        blocks.push((r0, c0, h, w, m));
    }

    let mut data = vec![0.0; rows * cols * 4];
    for r in 0..rows {
        for c in 0..cols {
            let (x, y) = (r as f64, c as f64);
            let theta = 0.5 * PI * x / rf + 0.3 * PI * y / cf;
            let a = 1.15 + 0.35 * (2.0 * PI * y / cf + p1).sin();
            let b = 0.85 + 0.25 * (2.0 * PI * x / rf + p2).cos();
            let mut m = [0.0; 4];
            rot_diag2(theta, a, b, &mut m);
            for (r0, c0, h, w, bm) in &blocks {
                if r >= *r0 && r < r0 + h && c >= *c0 && c < (c0 + w).min(cols) {
                    m = *bm;
                }
            }
            data[4 * (r * cols + c)..4 * (r * cols + c) + 4].copy_from_slice(&m);
        }
    }
    ManifoldImage::new(Manifold::Spd(2), rows, cols, data).expect("constructed SPD")
}

/// Writes Rz(alpha) Rx(beta) diag(d) (Rz Rx)^T into `out` (row-major 3x3).
fn rot_diag3(alpha: f64, beta: f64, d: [f64; 3], out: &mut [f64]) {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    // Columns of R = Rz(alpha) * Rx(beta).
    let r = [
        [ca, -sa * cb, sa * sb],
        [sa, ca * cb, -ca * sb],
        [0.0, sb, cb],
    ];
    for i in 0..3 {
        for j in 0..3 {
            let mut v = 0.0;
            for (k, dk) in d.iter().enumerate() {
                v += r[i][k] * dk * r[j][k];
            }
            out[3 * i + j] = v;
        }
    }
}

/// SPD(3) image: smoothly rotating anisotropic tensors plus three constant
/// blocks. All eigenvalues stay within [0.5, 1.7].
fn spd3_blocks(rows: usize, cols: usize, seed: u64) -> ManifoldImage {
    let mut rng = RngState::new(seed).stream(StreamKind::Synthesis, 0);
    let p1 = uniform(&mut rng, 0.0, 2.0 * PI);
    let p2 = uniform(&mut rng, 0.0, 2.0 * PI);

    let (rf, cf) = (rows as f64, cols as f64);
    let mut blocks: Vec<(usize, usize, usize, usize, [f64; 9])> = Vec::new();
    for &(ar, ac) in &[(0.10, 0.12), (0.58, 0.52), (0.18, 0.64)] {
        let r0 = (ar * rf + uniform(&mut rng, 0.0, 3.0)) as usize;
        let c0 = (ac * cf + uniform(&mut rng, 0.0, 3.0)) as usize;
        let h = rows / 5;
        let w = cols / 5 + 2;
        let alpha = uniform(&mut rng, 0.0, PI);
        let beta = uniform(&mut rng, 0.0, PI / 2.0);
        let d = [
            uniform(&mut rng, 1.25, 1.65),
            uniform(&mut rng, 0.85, 1.15),
            uniform(&mut rng, 0.55, 0.80),
        ];
        let mut m = [0.0; 9];
        rot_diag3(alpha, beta, d, &mut m);
        blocks.push((r0, c0, h, w, m));
    }

    let mut data = vec![0.0; rows * cols * 9];
    for r in 0..rows {
        for c in 0..cols {
            let (x, y) = (r as f64, c as f64);
            let alpha = 0.5 * PI * x / rf + 0.25 * PI * y / cf;
            let beta = 0.35 * PI * y / cf;
            let d = [
                1.30 + 0.30 * (2.0 * PI * y / cf + p1).sin(),
                1.0,
                0.70 + 0.20 * (2.0 * PI * x / rf + p2).cos(),
            ];
            let mut m = [0.0; 9];
            rot_diag3(alpha, beta, d, &mut m);
            for (r0, c0, h, w, bm) in &blocks {
                if r >= *r0 && r < r0 + h && c >= *c0 && c < (c0 + w).min(cols) {
                    m = *bm;
                }
            }
            data[9 * (r * cols + c)..9 * (r * cols + c) + 9].copy_from_slice(&m);
        }
    }
    ManifoldImage::new(Manifold::Spd(3), rows, cols, data).expect("constructed SPD")
}

/// Scalar image: smooth background, a linear ramp band, a paraboloid bump,
/// and one constant rectangle.
fn eucl_ramps(rows: usize, cols: usize, seed: u64) -> ManifoldImage {
    let mut rng = RngState::new(seed).stream(StreamKind::Synthesis, 0);
    let p1 = uniform(&mut rng, 0.0, 2.0 * PI);
    let level = uniform(&mut rng, 1.0, 2.0);
    let slope = uniform(&mut rng, 2.0, 3.0);

    let (rf, cf) = (rows as f64, cols as f64);
    let rect_r0 = (0.15 * rf) as usize;
    let rect_c0 = (0.58 * cf) as usize;
    let (rect_h, rect_w) = (rows / 6, cols / 5);
    let bowl_c = (0.65 * rf, 0.35 * cf);
    let bowl_rad = rows.min(cols) as f64 / 4.5;
    let ramp_r0 = (0.80 * rf) as usize;

    let mut data = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let (x, y) = (r as f64, c as f64);
            let mut v = 0.6 * (2.0 * PI * x / rf + p1).sin() * (2.0 * PI * y / cf).cos();
            let db = ((x - bowl_c.0).powi(2) + (y - bowl_c.1).powi(2)).sqrt();
            if db < bowl_rad {
                let u = db / bowl_rad;
                v += 1.5 * (1.0 - u * u);
            }
            if r >= ramp_r0 {
                v = slope * y / cf;
            }
            if r >= rect_r0 && r < rect_r0 + rect_h && c >= rect_c0 && c < (rect_c0 + rect_w).min(cols) {
                v = level;
            }
            data[r * cols + c] = v;
        }
    }
    ManifoldImage::new(Manifold::Euclidean(1), rows, cols, data).expect("constructed scalar image")
}

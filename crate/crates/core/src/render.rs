//! Deterministic figure output: SVG glyph grids for SPD images, binary
//! PPM rasters for everything else.
//!
//! SPD(2) pixels become ellipses whose axes follow the eigenvectors and
//! whose semi-axis lengths are the eigenvalues; SPD(3) pixels become the
//! orthographic shadow of the analogous ellipsoid, which is the ellipse
//! of the top-left 2x2 block of x^2 with semi-axes the square roots of
//! its eigenvalues. Glyphs share one global scale so relative size is
//! preserved; identical inputs give identical bytes.
//!
//! Raster mappings: S1 -> hue wheel, S2 -> RGB as (coords+1)/2. The
//! remaining manifolds get simple conventions of ours: Euclidean images
//! are normalized grayscale/RGB from the leading coordinates, simplex
//! pixels show their first weight as gray, and hyperbolic pixels are
//! placed in the Poincare disk whose coordinates drive red and green.

use crate::error::{Error, Result};
use crate::image::ManifoldImage;
use crate::manifold::Manifold;
use std::fmt::Write as _;
use std::path::Path;

/// Glyph cell size in SVG user units.
const CELL: f64 = 10.0;
/// Largest glyph semi-axis as a fraction of the cell.
const FILL: f64 = 0.45;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderStyle {
    /// Pick the mapping from the manifold (the only style, at present).
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Svg,
    Ppm,
}

impl RenderFormat {
    pub fn extension(self) -> &'static str {
        match self {
            RenderFormat::Svg => "svg",
            RenderFormat::Ppm => "ppm",
        }
    }
}

/// A rendered figure and the format its bytes are in.
#[derive(Clone, Debug)]
pub struct Rendering {
    pub format: RenderFormat,
    pub bytes: Vec<u8>,
}

/// Eigen decomposition of a symmetric 2x2 [[a, b], [b, c]]: returns
/// (lambda_max, lambda_min, angle of the leading eigenvector).
fn eigen2(a: f64, b: f64, c: f64) -> (f64, f64, f64) {
    let half_trace = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let angle = 0.5 * (2.0 * b).atan2(a - c);
    (half_trace + disc, half_trace - disc, angle)
}

/// Per-pixel glyph geometry (rx, ry, rotation in radians), unscaled.
fn spd_glyph(m: Manifold, px: &[f64]) -> (f64, f64, f64) {
    match m {
        Manifold::Spd(2) => {
            let (l1, l2, ang) = eigen2(px[0], px[1], px[3]);
            (l1, l2, ang)
        }
        Manifold::Spd(3) => {
            // Top-left 2x2 block of x^2; the shadow ellipse has semi-axes
            // sqrt of its eigenvalues.
            let sq = |i: usize, j: usize| {
                px[3 * i] * px[3 * j] + px[3 * i + 1] * px[3 * j + 1] + px[3 * i + 2] * px[3 * j + 2]
            };
            let (l1, l2, ang) = eigen2(sq(0, 0), sq(0, 1), sq(1, 1));
            (l1.max(0.0).sqrt(), l2.max(0.0).sqrt(), ang)
        }
        _ => unreachable!("glyph rendering is SPD-only"),
    }
}

fn render_spd_svg(image: &ManifoldImage) -> Vec<u8> {
    let alen = image.manifold.ambient_len();
    let glyphs: Vec<(f64, f64, f64)> = image
        .data
        .chunks_exact(alen)
        .map(|px| spd_glyph(image.manifold, px))
        .collect();
    let largest = glyphs.iter().map(|g| g.0).fold(0.0_f64, f64::max);
    let scale = if largest > 0.0 { FILL * CELL / largest } else { 1.0 };

    let width = image.cols as f64 * CELL;
    let height = image.rows as f64 * CELL;
    let mut svg = String::with_capacity(glyphs.len() * 96 + 256);
    let _ = write!(
        svg,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
         width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n\
         <rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>\n"
    );
    for r in 0..image.rows {
        for c in 0..image.cols {
            let (rx, ry, ang) = glyphs[r * image.cols + c];
            let cx = (c as f64 + 0.5) * CELL;
            let cy = (r as f64 + 0.5) * CELL;
            let deg = ang.to_degrees();
            let _ = writeln!(
                svg,
                "<ellipse cx=\"{cx:.2}\" cy=\"{cy:.2}\" rx=\"{:.4}\" ry=\"{:.4}\" \
                 transform=\"rotate({deg:.4} {cx:.2} {cy:.2})\" fill=\"#3b6ea5\"/>",
                rx * scale,
                ry * scale,
            );
        }
    }
    svg.push_str("</svg>\n");
    svg.into_bytes()
}

fn byte(t: f64) -> u8 {
    (255.0 * t.clamp(0.0, 1.0)).round() as u8
}

/// Hue wheel color for an angle in (-pi, pi], full saturation and value.
fn hue_rgb(theta: f64) -> [u8; 3] {
    let mut h = (theta + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * 6.0;
    if !(0.0..6.0).contains(&h) {
        h = 0.0;
    }
    let x = 1.0 - ((h % 2.0) - 1.0).abs();
    let (r, g, b) = match h as usize {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [byte(r), byte(g), byte(b)]
}

/// Per-channel min/max normalization for Euclidean images; constant
/// channels map to mid-gray.
fn channel_ranges(image: &ManifoldImage, channels: usize) -> Vec<(f64, f64)> {
    let alen = image.manifold.ambient_len();
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); channels];
    for px in image.data.chunks_exact(alen) {
        for (ch, range) in ranges.iter_mut().enumerate() {
            range.0 = range.0.min(px[ch]);
            range.1 = range.1.max(px[ch]);
        }
    }
    ranges
}

fn normalize(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

fn render_ppm(image: &ManifoldImage) -> Vec<u8> {
    let alen = image.manifold.ambient_len();
    let mut out = format!("P6\n{} {}\n255\n", image.cols, image.rows).into_bytes();
    match image.manifold {
        Manifold::Circle => {
            for px in image.data.chunks_exact(alen) {
                out.extend_from_slice(&hue_rgb(px[1].atan2(px[0])));
            }
        }
        Manifold::Sphere2 => {
            for px in image.data.chunks_exact(alen) {
                for v in px {
                    out.push(byte((v + 1.0) / 2.0));
                }
            }
        }
        Manifold::Euclidean(d) => {
            let shown = d.min(3);
            let ranges = channel_ranges(image, shown);
            for px in image.data.chunks_exact(alen) {
                match shown {
                    1 => {
                        let g = byte(normalize(px[0], ranges[0]));
                        out.extend_from_slice(&[g, g, g]);
                    }
                    2 => {
                        let r = byte(normalize(px[0], ranges[0]));
                        let g = byte(normalize(px[1], ranges[1]));
                        out.extend_from_slice(&[r, g, 128]);
                    }
                    _ => {
                        for ch in 0..3 {
                            out.push(byte(normalize(px[ch], ranges[ch])));
                        }
                    }
                }
            }
        }
        Manifold::Simplex1 => {
            for px in image.data.chunks_exact(alen) {
                let g = byte(px[0]);
                out.extend_from_slice(&[g, g, g]);
            }
        }
        Manifold::Hyperbolic2 => {
            for px in image.data.chunks_exact(alen) {
                let u = px[0] / (1.0 + px[2]);
                let v = px[1] / (1.0 + px[2]);
                out.extend_from_slice(&[byte((u + 1.0) / 2.0), byte((v + 1.0) / 2.0), 128]);
            }
        }
        Manifold::Spd(_) => unreachable!("SPD images render to SVG"),
    }
    out
}

/// Renders the image to bytes; the format follows the manifold.
pub fn render(image: &ManifoldImage, _style: RenderStyle) -> Result<Rendering> {
    let rendering = match image.manifold {
        Manifold::Spd(_) => Rendering { format: RenderFormat::Svg, bytes: render_spd_svg(image) },
        _ => Rendering { format: RenderFormat::Ppm, bytes: render_ppm(image) },
    };
    Ok(rendering)
}

/// Renders and writes the figure to `path`.
pub fn render_to_file(image: &ManifoldImage, style: RenderStyle, path: impl AsRef<Path>) -> Result<()> {
    let rendering = render(image, style)?;
    std::fs::write(path, rendering.bytes).map_err(Error::Io)?;
    Ok(())
}

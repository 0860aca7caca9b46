//! Command-line driver around [`mvi_core`]: synthesize test images, add
//! seeded noise, denoise, score, and draw `.mvi` files.
//!
//! Exit codes: 0 on success, 1 on a usage error (bad flags or arguments),
//! 2 when an input file or parameter fails validation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use mvi_core::io::{read_mvi, write_mvi};
use mvi_core::render::{render, RenderStyle};
use mvi_core::synth::generate;
use mvi_core::{
    add_noise, mse, nlmeans, nlmmse, DenoiseParams, Error, NlMeansParams, NoiseModel, NoiseSpec,
    Result,
};

#[derive(Parser)]
#[command(
    name = "mvi",
    version,
    about = "Toolkit for images whose pixels live on a curved manifold",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    /// Gaussian step in the tangent space at each pixel (any manifold).
    Tangent,
    /// Eigenvalue-density law for symmetric positive definite pixels.
    Said,
}

impl From<ModelArg> for NoiseModel {
    fn from(m: ModelArg) -> NoiseModel {
        match m {
            ModelArg::Tangent => NoiseModel::TangentGaussian,
            ModelArg::Said => NoiseModel::SaidSpd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StyleArg {
    /// Pick the drawing convention from the image's manifold.
    Auto,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic test image
    Generate {
        /// Generator name: s1-shapes, s2-vortex, spd2-blocks, spd3-blocks, eucl-ramps
        name: String,
        /// Image size as height and width in pixels
        #[arg(long, num_args = 2, value_names = ["ROWS", "COLS"], required = true)]
        dims: Vec<usize>,
        /// Random seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output .mvi file
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Add seeded random noise to an image
    Noise {
        /// Input .mvi file
        #[arg(short, long, value_name = "FILE")]
        input: PathBuf,
        /// Noise law
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Noise standard deviation
        #[arg(long)]
        sigma: f64,
        /// Random seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output .mvi file
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Restore a noisy image with the two-pass patch denoiser
    Denoise {
        /// Input .mvi file
        #[arg(short, long, value_name = "FILE")]
        input: PathBuf,
        /// Noise standard deviation the input is assumed to carry
        #[arg(long)]
        sigma: f64,
        /// First-pass patch side (odd); default depends on the manifold
        #[arg(long)]
        s1: Option<usize>,
        /// Second-pass patch side (odd)
        #[arg(long)]
        s2: Option<usize>,
        /// First-pass search window side (odd, larger than the patch)
        #[arg(long)]
        w1: Option<usize>,
        /// Second-pass search window side (odd, larger than the patch)
        #[arg(long)]
        w2: Option<usize>,
        /// Similar patches kept per group in the first pass
        #[arg(long)]
        k1: Option<usize>,
        /// Similar patches kept per group in the second pass
        #[arg(long)]
        k2: Option<usize>,
        /// Flat-area threshold factor on the pooled patch variance
        #[arg(long)]
        gamma: Option<f64>,
        /// Restore every reference patch instead of skipping pixels
        /// already covered by an earlier group (slower, slightly finer)
        #[arg(long)]
        no_accel: bool,
        /// Also write the first-pass (pilot) image here
        #[arg(long, value_name = "FILE")]
        oracle_out: Option<PathBuf>,
        /// Output .mvi file
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Restore a noisy image with the nonlocal-means baseline
    Nlmeans {
        /// Input .mvi file
        #[arg(short, long, value_name = "FILE")]
        input: PathBuf,
        /// Noise standard deviation (sets the default similarity bandwidth)
        #[arg(long)]
        sigma: f64,
        /// Patch side (odd); default matches the denoise defaults
        #[arg(long)]
        s: Option<usize>,
        /// Search window side (odd, larger than the patch)
        #[arg(long)]
        w: Option<usize>,
        /// Patches averaged per pixel
        #[arg(long)]
        k: Option<usize>,
        /// Spatial kernel width over patch offsets; default (s - 1) / 2
        #[arg(long)]
        delta: Option<f64>,
        /// Similarity bandwidth; default scales with sigma, the pixel
        /// dimension, and the kernel mass
        #[arg(long)]
        tau: Option<f64>,
        /// Output .mvi file
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Print the mean squared geodesic distance between two images
    Mse {
        /// First .mvi file
        #[arg(short, value_name = "FILE")]
        a: PathBuf,
        /// Second .mvi file
        #[arg(short, value_name = "FILE")]
        b: PathBuf,
    },
    /// Draw an image as an SVG glyph grid (tensors) or a PPM raster
    Render {
        /// Input .mvi file
        #[arg(short, long, value_name = "FILE")]
        input: PathBuf,
        /// Drawing convention
        #[arg(long, value_enum, default_value_t = StyleArg::Auto)]
        style: StyleArg,
        /// Output file; the extension must match the format the
        /// manifold renders to (.svg for tensors, .ppm otherwise)
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Generate { name, dims, seed, output } => {
            let img = generate(&name, dims[0], dims[1], seed)?;
            write_mvi(&img, output)
        }
        Cmd::Noise { input, model, sigma, seed, output } => {
            let img = read_mvi(input)?;
            let spec = NoiseSpec::isotropic(model.into(), sigma);
            write_mvi(&add_noise(&img, &spec, seed)?, output)
        }
        Cmd::Denoise {
            input,
            sigma,
            s1,
            s2,
            w1,
            w2,
            k1,
            k2,
            gamma,
            no_accel,
            oracle_out,
            output,
        } => {
            let img = read_mvi(input)?;
            let mut p = DenoiseParams::defaults_for(img.manifold, img.rows, img.cols);
            p.sigma = sigma;
            p.accelerate = !no_accel;
            if let Some(v) = s1 {
                p.s1 = v;
            }
            if let Some(v) = s2 {
                p.s2 = v;
            }
            if let Some(v) = w1 {
                p.w1 = v;
            }
            if let Some(v) = w2 {
                p.w2 = v;
            }
            if let Some(v) = k1 {
                p.k1 = v;
            }
            if let Some(v) = k2 {
                p.k2 = v;
            }
            if let Some(v) = gamma {
                p.gamma = v;
            }
            let (pilot, restored) = nlmmse(&img, &p)?;
            if let Some(path) = oracle_out {
                write_mvi(&pilot, path)?;
            }
            write_mvi(&restored, output)
        }
        Cmd::Nlmeans { input, sigma, s, w, k, delta, tau, output } => {
            let img = read_mvi(input)?;
            let d = DenoiseParams::defaults_for(img.manifold, img.rows, img.cols);
            let s = s.unwrap_or(d.s1);
            let delta = delta.unwrap_or_else(|| (s.saturating_sub(1) / 2).max(1) as f64);
            let tau = match tau {
                Some(t) => t,
                None => default_tau(img.manifold.dim(), s, delta, sigma)?,
            };
            let p = NlMeansParams { s, w: w.unwrap_or(d.w1), k: k.unwrap_or(d.k1), delta, tau };
            write_mvi(&nlmeans(&img, &p)?, output)
        }
        Cmd::Mse { a, b } => {
            let x = read_mvi(a)?;
            let y = read_mvi(b)?;
            println!("{}", six_significant(mse(&x, &y)?));
            Ok(())
        }
        Cmd::Render { input, style: StyleArg::Auto, output } => {
            let img = read_mvi(input)?;
            let rendering = render(&img, RenderStyle::Auto)?;
            check_extension(&output, rendering.format.extension(), &img.manifold.tag())?;
            std::fs::write(&output, &rendering.bytes)?;
            Ok(())
        }
    }
}

/// Default similarity bandwidth for the nonlocal-means baseline.
///
/// Two noisy copies of the same patch differ by about 2 d sigma^2 per
/// pixel in squared distance, so the kernel-weighted patch distance
/// concentrates near 2 d sigma^2 W with W the total kernel mass. Setting
/// tau^2 = 1.5 d sigma^2 W gives such pairs a weight around e^{-2/3}
/// while suppressing genuinely different patches.
fn default_tau(dim: usize, s: usize, delta: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "sigma = {sigma} gives no usable default bandwidth; pass an explicit --tau"
        )));
    }
    let h = (s / 2) as f64;
    let inv = 1.0 / (2.0 * delta * delta);
    let mut mass = 0.0;
    for dr in 0..s {
        for dc in 0..s {
            let (fr, fc) = (dr as f64 - h, dc as f64 - h);
            mass += (-(fr * fr + fc * fc) * inv).exp();
        }
    }
    Ok((1.5 * dim as f64 * sigma * sigma * mass).sqrt())
}

fn check_extension(path: &Path, want: &str, tag: &str) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case(want) => Ok(()),
        other => Err(Error::Shape(format!(
            "'{tag}' images render to .{want}, not {}",
            other.map_or("a bare path".to_string(), |e| format!(".{e}"))
        ))),
    }
}

/// Formats a nonnegative error to six significant digits, except that an
/// exact zero prints as "0.000000".
fn six_significant(v: f64) -> String {
    if v == 0.0 {
        return "0.000000".to_string();
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (5 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::six_significant;

    #[test]
    fn zero_prints_in_the_fixed_form() {
        assert_eq!(six_significant(0.0), "0.000000");
    }

    #[test]
    fn six_digits_survive_across_magnitudes() {
        assert_eq!(six_significant(2.5e-3), "0.00250000");
        assert_eq!(six_significant(0.0123456789), "0.0123457");
        assert_eq!(six_significant(1.23456789), "1.23457");
        assert_eq!(six_significant(123.456789), "123.457");
        assert_eq!(six_significant(123456.7), "123457");
    }
}

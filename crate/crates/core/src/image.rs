//! Manifold-valued images: a rows x cols grid of points sharing one
//! manifold, stored as row-major pixels of `ambient_len` reals each.

use crate::error::{Error, Result};
use crate::manifold::Manifold;

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldImage {
    pub manifold: Manifold,
    pub rows: usize,
    pub cols: usize,
    /// rows * cols * ambient_len reals, row-major pixels, each pixel in the
    /// manifold's ambient layout.
    pub data: Vec<f64>,
}

impl ManifoldImage {
    /// Builds an image and validates every pixel.
    pub fn new(manifold: Manifold, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        manifold.check_supported()?;
        let alen = manifold.ambient_len();
        if data.len() != rows * cols * alen {
            return Err(Error::Shape(format!(
                "image payload holds {} reals, expected {} ({}x{} pixels of {})",
                data.len(),
                rows * cols * alen,
                rows,
                cols,
                alen
            )));
        }
        let img = ManifoldImage { manifold, rows, cols, data };
        img.validate_pixels()?;
        Ok(img)
    }

    /// Checks every pixel against the manifold constraints.
    pub fn validate_pixels(&self) -> Result<()> {
        let alen = self.manifold.ambient_len();
        for (i, px) in self.data.chunks_exact(alen).enumerate() {
            self.manifold
                .validate_detail(px)
                .map_err(|detail| Error::InvalidPixel { index: i, detail })?;
        }
        Ok(())
    }

    /// Image filled with copies of one pixel.
    pub fn constant(manifold: Manifold, rows: usize, cols: usize, pixel: &[f64]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols * pixel.len());
        for _ in 0..rows * cols {
            data.extend_from_slice(pixel);
        }
        Self::new(manifold, rows, cols, data)
    }

    pub fn pixel_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Linear index of pixel (row, col).
    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    /// Ambient coordinates of the pixel at linear index `i`.
    #[inline]
    pub fn pixel(&self, i: usize) -> &[f64] {
        let alen = self.manifold.ambient_len();
        &self.data[i * alen..(i + 1) * alen]
    }

    #[inline]
    pub fn pixel_mut(&mut self, i: usize) -> &mut [f64] {
        let alen = self.manifold.ambient_len();
        &mut self.data[i * alen..(i + 1) * alen]
    }

    #[inline]
    pub fn pixel_at(&self, row: usize, col: usize) -> &[f64] {
        self.pixel(self.index(row, col))
    }

    fn check_same_shape(&self, other: &ManifoldImage) -> Result<()> {
        if self.manifold != other.manifold || self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "image mismatch: {}x{} {} vs {}x{} {}",
                self.rows,
                self.cols,
                self.manifold.tag(),
                other.rows,
                other.cols,
                other.manifold.tag()
            )));
        }
        Ok(())
    }

    /// Mean squared geodesic error (1/N) sum_i dist(a_i, b_i)^2, the
    /// performance measure used throughout; pixel order is fixed so the
    /// result is deterministic.
    pub fn mse(&self, other: &ManifoldImage) -> Result<f64> {
        self.check_same_shape(other)?;
        let mut total = 0.0;
        for i in 0..self.pixel_count() {
            total += self.manifold.dist_sq(self.pixel(i), other.pixel(i))?;
        }
        Ok(total / self.pixel_count() as f64)
    }
}

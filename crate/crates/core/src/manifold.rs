//! Manifold descriptors, point containers, and product-manifold operations.
//!
//! Points are stored in ambient coordinates (unit vectors, full symmetric
//! matrices in row-major order, simplex weight vectors) so that the manifold
//! constraints are directly checkable. Tangent vectors never appear in
//! ambient form in public APIs; they are always coordinate vectors with
//! respect to the canonical orthonormal basis at their base point (see
//! [`crate::geometry`]), of length [`Manifold::dim`] per component.

use crate::error::{Error, Result};

/// Tolerance for algebraic point constraints (unit norm, symmetry, sum one).
pub const POINT_TOL: f64 = 1e-12;

/// Looser tolerance for the hyperboloid constraint, which accumulates more
/// rounding through cosh/sinh arithmetic.
pub const HYPERBOLOID_TOL: f64 = 1e-10;

/// The supported pixel manifolds.
///
/// `dim` is the intrinsic dimension (length of tangent coordinate vectors),
/// `ambient_len` the number of stored reals per point:
///
/// | kind          | ambient storage                  | dim        | ambient_len |
/// |---------------|----------------------------------|------------|-------------|
/// | Euclidean(d)  | the vector itself                | d          | d           |
/// | Circle        | unit vector (cos t, sin t)       | 1          | 2           |
/// | Sphere2       | unit vector in R^3               | 2          | 3           |
/// | Spd(r)        | symmetric pos. def. r x r matrix | r(r+1)/2   | r^2         |
/// | Simplex1      | (x1, x2), xi > 0, x1 + x2 = 1    | 1          | 2           |
/// | Hyperbolic2   | hyperboloid sheet in R^3         | 2          | 3           |
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Manifold {
    /// Flat R^d with the Euclidean metric; the reduction target for oracle
    /// comparisons against the flat two-step denoiser.
    Euclidean(usize),
    /// Unit circle S^1, points stored as (cos t, sin t).
    Circle,
    /// Unit sphere S^2 in R^3.
    Sphere2,
    /// Symmetric positive definite r x r matrices (r in {2, 3}) with the
    /// affine invariant metric, stored row-major.
    Spd(usize),
    /// Open probability simplex in R^2 with the Fisher-Rao metric.
    Simplex1,
    /// Hyperbolic plane, hyperboloid model in R^3 with the Minkowski form.
    Hyperbolic2,
}

impl Manifold {
    /// Intrinsic dimension d (length of tangent coordinate vectors).
    pub fn dim(self) -> usize {
        match self {
            Manifold::Euclidean(d) => d,
            Manifold::Circle => 1,
            Manifold::Sphere2 => 2,
            Manifold::Spd(r) => r * (r + 1) / 2,
            Manifold::Simplex1 => 1,
            Manifold::Hyperbolic2 => 2,
        }
    }

    /// Number of stored reals per point.
    pub fn ambient_len(self) -> usize {
        match self {
            Manifold::Euclidean(d) => d,
            Manifold::Circle => 2,
            Manifold::Sphere2 => 3,
            Manifold::Spd(r) => r * r,
            Manifold::Simplex1 => 2,
            Manifold::Hyperbolic2 => 3,
        }
    }

    /// Checks that the descriptor itself is supported (Spd r in {2, 3},
    /// Euclidean d >= 1).
    pub fn check_supported(self) -> Result<()> {
        match self {
            Manifold::Euclidean(0) => Err(Error::Shape("Euclidean dimension must be >= 1".into())),
            Manifold::Spd(r) if !(2..=3).contains(&r) => {
                Err(Error::Shape(format!("Spd({r}) unsupported, r must be 2 or 3")))
            }
            _ => Ok(()),
        }
    }

    /// ASCII tag used in the binary image format and CLI output.
    pub fn tag(self) -> String {
        match self {
            Manifold::Euclidean(d) => format!("eucl:{d}"),
            Manifold::Circle => "s1".into(),
            Manifold::Sphere2 => "s2".into(),
            Manifold::Spd(r) => format!("spd:{r}"),
            Manifold::Simplex1 => "simplex:1".into(),
            Manifold::Hyperbolic2 => "h2".into(),
        }
    }

    /// Parses a tag produced by [`Manifold::tag`].
    pub fn from_tag(tag: &str) -> Result<Self> {
        let m = match tag {
            "s1" => Manifold::Circle,
            "s2" => Manifold::Sphere2,
            "simplex:1" => Manifold::Simplex1,
            "h2" => Manifold::Hyperbolic2,
            _ => {
                if let Some(d) = tag.strip_prefix("eucl:") {
                    let d: usize = d
                        .parse()
                        .map_err(|_| Error::Shape(format!("bad manifold tag '{tag}'")))?;
                    Manifold::Euclidean(d)
                } else if let Some(r) = tag.strip_prefix("spd:") {
                    let r: usize = r
                        .parse()
                        .map_err(|_| Error::Shape(format!("bad manifold tag '{tag}'")))?;
                    Manifold::Spd(r)
                } else {
                    return Err(Error::Shape(format!("bad manifold tag '{tag}'")));
                }
            }
        };
        m.check_supported()?;
        Ok(m)
    }

    /// True iff `coords` satisfies all point constraints of this manifold:
    /// unit norm for Circle/Sphere2 (within 1e-12), symmetry plus positive
    /// eigenvalues for Spd, positive entries summing to one for Simplex1, and
    /// the hyperboloid equation with positive last coordinate (within 1e-10)
    /// for Hyperbolic2. Pure predicate, never errors.
    pub fn validate(self, coords: &[f64]) -> bool {
        self.validate_detail(coords).is_ok()
    }

    /// Like [`Manifold::validate`] but reports which constraint failed.
    pub fn validate_detail(self, coords: &[f64]) -> std::result::Result<(), String> {
        if coords.len() != self.ambient_len() {
            return Err(format!(
                "expected {} coordinates, got {}",
                self.ambient_len(),
                coords.len()
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err("non-finite coordinate".into());
        }
        match self {
            Manifold::Euclidean(_) => Ok(()),
            Manifold::Circle | Manifold::Sphere2 => {
                let n2: f64 = coords.iter().map(|c| c * c).sum();
                if (n2.sqrt() - 1.0).abs() <= POINT_TOL {
                    Ok(())
                } else {
                    Err(format!("norm {} not 1", n2.sqrt()))
                }
            }
            Manifold::Spd(r) => {
                for i in 0..r {
                    for j in (i + 1)..r {
                        if (coords[i * r + j] - coords[j * r + i]).abs() > POINT_TOL {
                            return Err(format!("asymmetric at ({i},{j})"));
                        }
                    }
                }
                let eigs = crate::geometry::spd::eigenvalues(r, coords);
                if eigs.iter().all(|&l| l > 0.0) {
                    Ok(())
                } else {
                    Err(format!("non-positive eigenvalue {:?}", eigs))
                }
            }
            Manifold::Simplex1 => {
                if coords[0] <= 0.0 || coords[1] <= 0.0 {
                    Err("non-positive entry".into())
                } else if (coords[0] + coords[1] - 1.0).abs() > POINT_TOL {
                    Err(format!("sum {} not 1", coords[0] + coords[1]))
                } else {
                    Ok(())
                }
            }
            Manifold::Hyperbolic2 => {
                let q = coords[0] * coords[0] + coords[1] * coords[1] - coords[2] * coords[2];
                if (q + 1.0).abs() > HYPERBOLOID_TOL {
                    Err(format!("hyperboloid residual {}", q + 1.0))
                } else if coords[2] <= 0.0 {
                    Err("non-positive sheet coordinate".into())
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// A single point on a manifold, in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub manifold: Manifold,
    pub coords: Vec<f64>,
}

impl Point {
    /// Wraps coordinates after checking every manifold constraint.
    pub fn new(manifold: Manifold, coords: Vec<f64>) -> Result<Self> {
        manifold.check_supported()?;
        manifold.validate_detail(&coords).map_err(|detail| Error::InvalidPixel {
            index: 0,
            detail,
        })?;
        Ok(Point { manifold, coords })
    }

    /// Geodesic distance to another point of the same manifold.
    pub fn dist(&self, other: &Point) -> Result<f64> {
        if self.manifold != other.manifold {
            return Err(Error::Shape("distance between different manifolds".into()));
        }
        self.manifold.dist(&self.coords, &other.coords)
    }
}

/// A point on the product manifold M^count, stored as `count` concatenated
/// ambient coordinate blocks. Patches of images are product points with
/// count = s^2.
///
/// Tangent coordinate vectors for product points are component-major: the
/// `dim` coordinates of component 0 come first, then component 1, and so on
/// (total length n = count * dim). This fixed layout makes covariance
/// matrices over patches block-structured by pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint {
    pub manifold: Manifold,
    pub count: usize,
    pub coords: Vec<f64>,
}

impl ProductPoint {
    /// Wraps `count` concatenated ambient blocks, validating each component.
    pub fn new(manifold: Manifold, count: usize, coords: Vec<f64>) -> Result<Self> {
        manifold.check_supported()?;
        let a = manifold.ambient_len();
        if coords.len() != count * a {
            return Err(Error::Shape(format!(
                "product point needs {} coords, got {}",
                count * a,
                coords.len()
            )));
        }
        for (j, block) in coords.chunks_exact(a).enumerate() {
            manifold
                .validate_detail(block)
                .map_err(|detail| Error::InvalidPixel { index: j, detail })?;
        }
        Ok(ProductPoint { manifold, count, coords })
    }

    /// Ambient coordinates of component `j`.
    pub fn component(&self, j: usize) -> &[f64] {
        let a = self.manifold.ambient_len();
        &self.coords[j * a..(j + 1) * a]
    }

    fn check_shape(&self, other: &ProductPoint) -> Result<()> {
        if self.manifold != other.manifold || self.count != other.count {
            return Err(Error::Shape("mismatched product points".into()));
        }
        Ok(())
    }

    /// Product geodesic distance, the square root of the sum of squared
    /// per-component distances.
    pub fn dist(&self, other: &ProductPoint) -> Result<f64> {
        self.check_shape(other)?;
        product_dist(self.manifold, self.count, &self.coords, &other.coords)
    }

    /// Componentwise exponential map with component-major tangent
    /// coordinates `v` of length count * dim.
    pub fn exp(&self, v: &[f64]) -> Result<ProductPoint> {
        let mut coords = vec![0.0; self.coords.len()];
        product_exp(self.manifold, self.count, &self.coords, v, &mut coords)?;
        Ok(ProductPoint { manifold: self.manifold, count: self.count, coords })
    }

    /// Componentwise logarithmic map, returning component-major tangent
    /// coordinates.
    pub fn log(&self, other: &ProductPoint) -> Result<Vec<f64>> {
        self.check_shape(other)?;
        let mut v = vec![0.0; self.count * self.manifold.dim()];
        product_log(self.manifold, self.count, &self.coords, &other.coords, &mut v)?;
        Ok(v)
    }
}

/// Squared product distance over `count` concatenated ambient blocks.
///
/// Accumulation order is fixed (component 0 first), so the result is
/// bitwise identical regardless of caller or thread count.
pub fn product_dist_sq(m: Manifold, count: usize, a: &[f64], b: &[f64]) -> Result<f64> {
    let alen = m.ambient_len();
    debug_assert_eq!(a.len(), count * alen);
    debug_assert_eq!(b.len(), count * alen);
    let mut total = 0.0;
    for j in 0..count {
        let d = m.dist(&a[j * alen..(j + 1) * alen], &b[j * alen..(j + 1) * alen])?;
        total += d * d;
    }
    Ok(total)
}

/// Product geodesic distance sqrt(sum_j dist(a_j, b_j)^2).
pub fn product_dist(m: Manifold, count: usize, a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(product_dist_sq(m, count, a, b)?.sqrt())
}

/// Componentwise exponential map. `v` holds component-major tangent
/// coordinates (count * dim), `out` receives count * ambient_len reals.
pub fn product_exp(m: Manifold, count: usize, base: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
    let alen = m.ambient_len();
    let d = m.dim();
    if v.len() != count * d {
        return Err(Error::Shape(format!(
            "tangent length {} does not match {} components of dim {}",
            v.len(),
            count,
            d
        )));
    }
    debug_assert_eq!(base.len(), count * alen);
    debug_assert_eq!(out.len(), count * alen);
    for j in 0..count {
        m.exp(&base[j * alen..(j + 1) * alen], &v[j * d..(j + 1) * d], &mut out[j * alen..(j + 1) * alen])
            .map_err(|e| remap_component(e, j))?;
    }
    Ok(())
}

/// Componentwise logarithmic map into component-major tangent coordinates.
/// Cut-locus failures carry the offending component index.
pub fn product_log(m: Manifold, count: usize, base: &[f64], target: &[f64], out: &mut [f64]) -> Result<()> {
    let alen = m.ambient_len();
    let d = m.dim();
    debug_assert_eq!(base.len(), count * alen);
    debug_assert_eq!(target.len(), count * alen);
    if out.len() != count * d {
        return Err(Error::Shape(format!(
            "tangent buffer length {} does not match {} components of dim {}",
            out.len(),
            count,
            d
        )));
    }
    for j in 0..count {
        m.log(&base[j * alen..(j + 1) * alen], &target[j * alen..(j + 1) * alen], &mut out[j * d..(j + 1) * d])
            .map_err(|e| remap_component(e, j))?;
    }
    Ok(())
}

fn remap_component(e: Error, j: usize) -> Error {
    match e {
        Error::CutLocus { item, .. } => Error::CutLocus { item, component: j },
        other => other,
    }
}

//! Symmetric positive definite backend with the affine invariant metric,
//! r in {2, 3}, matrices stored row-major.
//!
//! All maps route through symmetric eigendecompositions of statically sized
//! nalgebra matrices (one code path per r, stamped out by macro), which keeps
//! the hot loops allocation-free. Tangent coordinates use the basis
//! x^{1/2} B_ij x^{1/2}, where B_ii is the unit diagonal matrix and B_ij
//! (i < j) the symmetrized unit pair scaled by 1/sqrt(2); diagonal
//! directions come first, then off-diagonal pairs in row order. Under the
//! affine invariant metric this basis is orthonormal, and coordinates of
//! x^{1/2} A x^{1/2} are simply the flat coordinates of A, so no Gram matrix
//! ever appears.

use crate::error::{Error, Result};
use crate::manifold::Manifold;
use std::cmp::Ordering;
use std::f64::consts::SQRT_2;

/// Eigenvalues this close to zero (or below) make matrix logarithms
/// meaningless; inputs that reach them are rejected as domain errors.
pub const EIG_FLOOR: f64 = 1e-14;

macro_rules! spd_backend {
    ($name:ident, $mat:ty, $r:expr) => {
        mod $name {
            use super::*;
            use nalgebra::SymmetricEigen;

            pub fn mat(s: &[f64]) -> $mat {
                <$mat>::from_row_slice(s)
            }

            fn store(m: &$mat, out: &mut [f64]) {
                for i in 0..$r {
                    for j in 0..$r {
                        out[i * $r + j] = m[(i, j)];
                    }
                }
            }

            /// x^{1/2} and x^{-1/2} from one eigendecomposition.
            fn sqrt_pair(x: &$mat) -> Result<($mat, $mat)> {
                let e = SymmetricEigen::new(*x);
                if e.eigenvalues.iter().any(|&l| l < EIG_FLOOR) {
                    return Err(Error::Domain(format!(
                        "eigenvalue below {EIG_FLOOR:e} in matrix square root"
                    )));
                }
                let sq = e.eigenvalues.map(f64::sqrt);
                let isq = sq.map(|l| 1.0 / l);
                let u = &e.eigenvectors;
                Ok((
                    u * <$mat>::from_diagonal(&sq) * u.transpose(),
                    u * <$mat>::from_diagonal(&isq) * u.transpose(),
                ))
            }

            /// Frobenius norm of Log(x^{-1/2} y x^{-1/2}) via a Cholesky
            /// whitening, which needs one factorization instead of a full
            /// eigendecomposition of x. The whitened matrices L^{-1} y L^{-T}
            /// and x^{-1/2} y x^{-1/2} are similar, so their eigenvalues and
            /// hence the distance agree.
            pub fn dist(x: &[f64], y: &[f64]) -> Result<f64> {
                let xm = mat(x);
                let ym = mat(y);
                let chol = nalgebra::Cholesky::new(xm)
                    .ok_or_else(|| Error::Domain("matrix not positive definite".into()))?;
                let l = chol.l();
                let a = l
                    .solve_lower_triangular(&ym)
                    .ok_or_else(|| Error::Domain("singular Cholesky factor".into()))?;
                let m = l
                    .solve_lower_triangular(&a.transpose())
                    .ok_or_else(|| Error::Domain("singular Cholesky factor".into()))?;
                let msym = (m + m.transpose()) * 0.5;
                let e = SymmetricEigen::new(msym);
                let mut total = 0.0;
                for &lam in e.eigenvalues.iter() {
                    if lam < EIG_FLOOR {
                        return Err(Error::Domain(format!(
                            "eigenvalue below {EIG_FLOOR:e} in matrix logarithm"
                        )));
                    }
                    let t = lam.ln();
                    total += t * t;
                }
                Ok(total.sqrt())
            }

            pub fn log(x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
                let (_, si) = sqrt_pair(&mat(x))?;
                let m = si * mat(y) * si;
                let msym = (m + m.transpose()) * 0.5;
                let e = SymmetricEigen::new(msym);
                if e.eigenvalues.iter().any(|&l| l < EIG_FLOOR) {
                    return Err(Error::Domain(format!(
                        "eigenvalue below {EIG_FLOOR:e} in matrix logarithm"
                    )));
                }
                let lnv = e.eigenvalues.map(f64::ln);
                let a = e.eigenvectors * <$mat>::from_diagonal(&lnv) * e.eigenvectors.transpose();
                for i in 0..$r {
                    out[i] = a[(i, i)];
                }
                let mut k = $r;
                for i in 0..$r {
                    for j in (i + 1)..$r {
                        // a is symmetric up to rounding; averaging removes
                        // the dependence on multiplication order.
                        out[k] = SQRT_2 * 0.5 * (a[(i, j)] + a[(j, i)]);
                        k += 1;
                    }
                }
                Ok(())
            }

            pub fn exp(x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
                let mut a = <$mat>::zeros();
                for i in 0..$r {
                    a[(i, i)] = v[i];
                }
                let mut k = $r;
                for i in 0..$r {
                    for j in (i + 1)..$r {
                        let t = v[k] / SQRT_2;
                        a[(i, j)] = t;
                        a[(j, i)] = t;
                        k += 1;
                    }
                }
                let e = SymmetricEigen::new(a);
                let ev = e.eigenvalues.map(f64::exp);
                let ea = e.eigenvectors * <$mat>::from_diagonal(&ev) * e.eigenvectors.transpose();
                let (s, _) = sqrt_pair(&mat(x))?;
                let res = s * ea * s;
                store(&res, out);
                Manifold::Spd($r).project(out);
                Ok(())
            }

            pub fn eigenvalues(coords: &[f64]) -> Vec<f64> {
                SymmetricEigen::new(mat(coords)).eigenvalues.iter().copied().collect()
            }

            pub fn sqrt(x: &[f64], out: &mut [f64]) -> Result<()> {
                let (s, _) = sqrt_pair(&mat(x))?;
                store(&s, out);
                Ok(())
            }

            pub fn tangent_basis(x: &[f64], out: &mut [f64]) -> Result<()> {
                let (s, _) = sqrt_pair(&mat(x))?;
                let alen = $r * $r;
                let mut row = 0;
                for i in 0..$r {
                    let mut e = <$mat>::zeros();
                    e[(i, i)] = 1.0;
                    let b = s * e * s;
                    store(&b, &mut out[row * alen..(row + 1) * alen]);
                    row += 1;
                }
                for i in 0..$r {
                    for j in (i + 1)..$r {
                        let mut e = <$mat>::zeros();
                        let t = 1.0 / SQRT_2;
                        e[(i, j)] = t;
                        e[(j, i)] = t;
                        let b = s * e * s;
                        store(&b, &mut out[row * alen..(row + 1) * alen]);
                        row += 1;
                    }
                }
                Ok(())
            }
        }
    };
}

spd_backend!(d2, nalgebra::Matrix2<f64>, 2);
spd_backend!(d3, nalgebra::Matrix3<f64>, 3);

/// True iff `a` precedes or equals `b` in coordinatewise total order.
fn lex_le(a: &[f64], b: &[f64]) -> bool {
    for (p, q) in a.iter().zip(b) {
        match p.total_cmp(q) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    true
}

pub fn dist(r: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    // The affine invariant distance is symmetric, but the two evaluation
    // orders round differently. Canonicalizing the argument order makes
    // dist(x, y) and dist(y, x) bitwise identical, which the deterministic
    // patch search relies on.
    let (a, b) = if lex_le(x, y) { (x, y) } else { (y, x) };
    match r {
        2 => d2::dist(a, b),
        3 => d3::dist(a, b),
        _ => unreachable!("Spd dimension checked at construction"),
    }
}

pub fn log(r: usize, x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
    match r {
        2 => d2::log(x, y, out),
        3 => d3::log(x, y, out),
        _ => unreachable!("Spd dimension checked at construction"),
    }
}

pub fn exp(r: usize, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
    match r {
        2 => d2::exp(x, v, out),
        3 => d3::exp(x, v, out),
        _ => unreachable!("Spd dimension checked at construction"),
    }
}

pub fn eigenvalues(r: usize, coords: &[f64]) -> Vec<f64> {
    match r {
        2 => d2::eigenvalues(coords),
        3 => d3::eigenvalues(coords),
        _ => unreachable!("Spd dimension checked at construction"),
    }
}

/// Symmetric square root of an SPD matrix, row-major in and out.
pub fn sqrt(r: usize, x: &[f64], out: &mut [f64]) -> Result<()> {
    match r {
        2 => d2::sqrt(x, out),
        3 => d3::sqrt(x, out),
        _ => unreachable!("Spd dimension checked at construction"),
    }
}

pub fn tangent_basis(r: usize, x: &[f64], out: &mut [f64]) -> Result<()> {
    match r {
        2 => d2::tangent_basis(x, out),
        3 => d3::tangent_basis(x, out),
        _ => unreachable!("Spd dimension checked at construction"),
    }
}

//! Helpers shared by the unit tests: quadrature, KS statistics, and seeded
//! random points on each manifold.

use crate::manifold::Manifold;
use rand::Rng;
use rand_distr::StandardNormal;

/// Composite Simpson rule with `nodes` subintervals (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, nodes: usize) -> f64 {
    let n = if nodes % 2 == 0 { nodes } else { nodes + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Kolmogorov-Smirnov statistic of `samples` against the CDF `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in samples.iter().enumerate() {
        let c = cdf(x);
        d = d.max((c - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - c).abs());
    }
    d
}

/// A valid random point on the manifold, built from the rng's stream.
pub fn random_point(m: Manifold, rng: &mut impl Rng) -> Vec<f64> {
    match m {
        Manifold::Euclidean(d) => (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
        Manifold::Circle => {
            let t = rng.random::<f64>() * 2.0 * std::f64::consts::PI - std::f64::consts::PI;
            vec![t.cos(), t.sin()]
        }
        Manifold::Sphere2 => {
            let v: Vec<f64> = (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / norm).collect()
        }
        Manifold::Spd(r) => {
            // Exponential of random tangent coordinates at the identity.
            let eye: Vec<f64> = (0..r * r).map(|i| if i % (r + 1) == 0 { 1.0 } else { 0.0 }).collect();
            let coords: Vec<f64> =
                (0..m.dim()).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
            let mut out = vec![0.0; r * r];
            m.exp(&eye, &coords, &mut out).expect("exp at identity");
            out
        }
        Manifold::Simplex1 => {
            let x1 = 0.05 + 0.9 * rng.random::<f64>();
            vec![x1, 1.0 - x1]
        }
        Manifold::Hyperbolic2 => {
            let x1 = rng.sample::<f64, _>(StandardNormal);
            let x2 = rng.sample::<f64, _>(StandardNormal);
            vec![x1, x2, (1.0 + x1 * x1 + x2 * x2).sqrt()]
        }
    }
}

/// Random tangent coordinates of the given scale.
pub fn random_tangent(m: Manifold, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..m.dim()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// All supported manifolds, one representative of each family.
pub fn all_manifolds() -> Vec<Manifold> {
    vec![
        Manifold::Euclidean(1),
        Manifold::Euclidean(3),
        Manifold::Circle,
        Manifold::Sphere2,
        Manifold::Spd(2),
        Manifold::Spd(3),
        Manifold::Simplex1,
        Manifold::Hyperbolic2,
    ]
}

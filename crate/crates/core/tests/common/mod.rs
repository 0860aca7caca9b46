//! Shared helpers for the integration suite: quadrature, a two-sided
//! Kolmogorov-Smirnov statistic, seeded point/tangent samplers built on the
//! public API, and the metric inner products needed to check basis Gram
//! matrices.

use mvi_core::{Manifold, RngState, StreamKind};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// One criterion's checklist. Failures accumulate so a single run reports
/// everything that went wrong, and `finish` prints exactly one PASS or
/// FAIL line before panicking on failure.
pub struct Criterion {
    number: usize,
    name: &'static str,
    failures: Vec<String>,
}

impl Criterion {
    pub fn new(number: usize, name: &'static str) -> Self {
        Criterion { number, name, failures: Vec::new() }
    }

    pub fn check(&mut self, ok: bool, detail: String) {
        if !ok {
            self.failures.push(detail);
        }
    }

    pub fn finish(self) {
        let verdict = if self.failures.is_empty() {
            format!("acceptance {} ({}): PASS\n", self.number, self.name)
        } else {
            format!(
                "acceptance {} ({}): FAIL [{}]\n",
                self.number,
                self.name,
                self.failures.join("; ")
            )
        };
        // The harness captures println! from passing tests; write to the
        // real stdout so one verdict line per criterion always shows up.
        use std::io::Write;
        std::io::stdout().write_all(verdict.as_bytes()).and_then(|()| std::io::stdout().flush()).unwrap();
        if !self.failures.is_empty() {
            panic!("criterion {} failed: {}", self.number, self.failures.join("; "));
        }
    }
}

/// Composite Simpson rule; `nodes` is rounded up to the next even count.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, nodes: usize) -> f64 {
    let n = nodes + nodes % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Two-sided KS statistic between the samples and a CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut worst = 0.0_f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        worst = worst.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    worst
}

/// CDF of a density by cumulative trapezoid integration on a uniform grid,
/// linearly interpolated between nodes. Deliberately not renormalized, so
/// a density that fails to integrate to 1 shows up in the KS statistic.
pub fn numeric_cdf(pdf: impl Fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> impl Fn(f64) -> f64 {
    let h = (hi - lo) / cells as f64;
    let values: Vec<f64> = (0..=cells).map(|i| pdf(lo + i as f64 * h)).collect();
    let mut cum = Vec::with_capacity(cells + 1);
    let mut total = 0.0;
    cum.push(0.0);
    for i in 0..cells {
        total += 0.5 * h * (values[i] + values[i + 1]);
        cum.push(total);
    }
    move |x: f64| {
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return cum[cells];
        }
        let t = (x - lo) / h;
        let i = (t as usize).min(cells - 1);
        cum[i] + (t - i as f64) * (cum[i + 1] - cum[i])
    }
}

pub fn scalar_stream(seed: u64, index: u64) -> impl Rng {
    RngState::new(seed).stream(StreamKind::Scalar, index)
}

fn normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// A random point, kept away from boundaries and coordinate singularities
/// so that tangent sampling around it is well posed.
pub fn random_point(m: Manifold, rng: &mut impl Rng) -> Vec<f64> {
    match m {
        Manifold::Euclidean(d) => normals(rng, d),
        Manifold::Circle => {
            let t = std::f64::consts::PI * (2.0 * rng.random::<f64>() - 1.0);
            vec![t.cos(), t.sin()]
        }
        Manifold::Sphere2 => loop {
            let v = normals(rng, 3);
            let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if n > 1e-3 {
                break v.iter().map(|c| c / n).collect();
            }
        },
        Manifold::Spd(r) => {
            let eye: Vec<f64> =
                (0..r * r).map(|i| if i % (r + 1) == 0 { 1.0 } else { 0.0 }).collect();
            let v: Vec<f64> = normals(rng, m.dim()).iter().map(|c| 0.7 * c).collect();
            let mut out = vec![0.0; r * r];
            m.exp(&eye, &v, &mut out).expect("SPD exp is global");
            out
        }
        Manifold::Simplex1 => {
            // Quarter-arc angle in (0.2, 1.35), clear of both corners.
            let q = 0.2 + 1.15 * rng.random::<f64>();
            let (s, c) = q.sin_cos();
            vec![c * c, s * s]
        }
        Manifold::Hyperbolic2 => {
            let v: Vec<f64> = normals(rng, 2).iter().map(|c| 0.9 * c).collect();
            let mut out = vec![0.0; 3];
            m.exp(&[0.0, 0.0, 1.0], &v, &mut out).expect("hyperbolic exp is global");
            out
        }
    }
}

/// A tangent vector at `x` small enough that exp stays within the
/// injectivity radius (and inside the open simplex for Delta_1).
pub fn random_tangent(m: Manifold, x: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let mut v = normals(rng, m.dim());
    let scale = match m {
        Manifold::Circle | Manifold::Sphere2 => 0.8,
        _ => 0.7,
    };
    for c in &mut v {
        *c *= scale;
    }
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut cap = match m {
        Manifold::Circle | Manifold::Sphere2 => 2.9,
        _ => f64::INFINITY,
    };
    if m == Manifold::Simplex1 {
        // exp moves the arc angle q by -v/2; keep the target inside
        // (0, pi/2) with a safety margin.
        let q = x[1].sqrt().atan2(x[0].sqrt());
        cap = 1.8 * q.min(std::f64::consts::FRAC_PI_2 - q);
    }
    if norm > cap {
        for c in &mut v {
            *c *= cap / norm;
        }
    }
    v
}

/// Inner product of two ambient tangent vectors at `x` under the manifold
/// metric each backend uses.
pub fn metric_inner(m: Manifold, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
    match m {
        Manifold::Euclidean(_) | Manifold::Circle | Manifold::Sphere2 => {
            u.iter().zip(v).map(|(a, b)| a * b).sum()
        }
        Manifold::Simplex1 => u.iter().zip(v).zip(x).map(|((a, b), xi)| a * b / xi).sum(),
        Manifold::Hyperbolic2 => u[0] * v[0] + u[1] * v[1] - u[2] * v[2],
        Manifold::Spd(r) => {
            let xi = DMatrix::from_row_slice(r, r, x).try_inverse().expect("SPD is invertible");
            let um = DMatrix::from_row_slice(r, r, u);
            let vm = DMatrix::from_row_slice(r, r, v);
            (&xi * um * &xi * vm).trace()
        }
    }
}

pub fn all_manifolds() -> [Manifold; 8] {
    [
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

//! Microbenchmarks of the pointwise geometry kernels that dominate the
//! denoiser's inner loops: exponential and logarithmic maps, geodesic
//! distance, and the iterative Karcher mean.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mvi_core::{karcher_mean, KarcherConfig, Manifold};

/// Deterministic spread of unit sphere points along a spiral.
fn sphere_points(n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let polar = 0.4 + 2.2 * t;
            let azimuth = 11.0 * t;
            [
                polar.sin() * azimuth.cos(),
                polar.sin() * azimuth.sin(),
                polar.cos(),
            ]
        })
        .collect()
}

/// SPD(3) matrices exp(I, s) for small symmetric s, flattened row-major.
fn spd3_points(n: usize) -> Vec<[f64; 9]> {
    let m = Manifold::Spd(3);
    let eye = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    (0..n)
        .map(|i| {
            let t = i as f64 + 1.0;
            let (a, b, c) = ((0.31 * t).sin() * 0.5, (0.17 * t).cos() * 0.4, (0.07 * t).sin() * 0.3);
            let v = [a, b, c, b, -0.2 * a, 0.5 * c, c, 0.5 * c, 0.3 * a];
            let mut out = [0.0; 9];
            m.exp(&eye, &v, &mut out).expect("SPD exp is defined everywhere");
            out
        })
        .collect()
}

fn pairs<const N: usize>(points: &[[f64; N]]) -> Vec<([f64; N], [f64; N])> {
    points
        .iter()
        .zip(points.iter().cycle().skip(1))
        .map(|(a, b)| (*a, *b))
        .collect()
}

fn bench_maps(c: &mut Criterion) {
    let sphere = Manifold::Sphere2;
    let spd = Manifold::Spd(3);
    let sphere_pairs = pairs(&sphere_points(512));
    let spd_pairs = pairs(&spd3_points(512));

    c.bench_function("sphere2/log", |b| {
        let mut v = [0.0; 3];
        b.iter(|| {
            for (x, y) in &sphere_pairs {
                sphere.log(x, y, &mut v).unwrap();
                black_box(&v);
            }
        })
    });
    c.bench_function("sphere2/exp", |b| {
        let mut tangents = Vec::with_capacity(sphere_pairs.len());
        for (x, y) in &sphere_pairs {
            let mut v = [0.0; 3];
            sphere.log(x, y, &mut v).unwrap();
            tangents.push((*x, v));
        }
        let mut out = [0.0; 3];
        b.iter(|| {
            for (x, v) in &tangents {
                sphere.exp(x, v, &mut out).unwrap();
                black_box(&out);
            }
        })
    });
    c.bench_function("sphere2/dist", |b| {
        b.iter(|| {
            for (x, y) in &sphere_pairs {
                black_box(sphere.dist(x, y).unwrap());
            }
        })
    });

    c.bench_function("spd3/log", |b| {
        let mut v = [0.0; 9];
        b.iter(|| {
            for (x, y) in &spd_pairs {
                spd.log(x, y, &mut v).unwrap();
                black_box(&v);
            }
        })
    });
    c.bench_function("spd3/dist", |b| {
        b.iter(|| {
            for (x, y) in &spd_pairs {
                black_box(spd.dist(x, y).unwrap());
            }
        })
    });
}

fn bench_karcher(c: &mut Criterion) {
    let m = Manifold::Spd(3);
    let points = spd3_points(64);
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    let cfg = KarcherConfig::default();

    c.bench_function("karcher-mean/spd3-64pts", |b| {
        b.iter(|| black_box(karcher_mean(m, 1, &flat, None, &cfg).unwrap()))
    });
}

criterion_group!(benches, bench_maps, bench_karcher);
criterion_main!(benches);

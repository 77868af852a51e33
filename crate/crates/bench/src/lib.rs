//! Criterion benchmarks for the linear-algebra kernels and the R0 pipelines.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use ngm_core::minorlimit::{default_schedule, limit_minor_inverse, spectral_limit};
use ngm_core::relapse::{build_coupled_ngm, r0_coupled_closed};
use ngm_core::{eigenvalues, DiagonalRay, HostParams, Matrix, VectorParams};

/// Deterministic, diagonally dominant test matrix.
pub fn test_matrix(n: usize) -> Matrix {
    let data = (0..n * n)
        .map(|k| {
            let (r, c) = (k / n, k % n);
            if r == c {
                n as f64 + 1.0
            } else {
                ((r * 7 + c * 13) % 11) as f64 / 11.0 - 0.5
            }
        })
        .collect();
    Matrix::new(n, n, data).expect("valid size")
}

pub fn test_host(stages: usize) -> HostParams {
    let alpha = (0..=stages).map(|l| 1.0 + 0.3 * l as f64).collect();
    let mu = (0..stages).map(|l| 0.2 + 0.05 * l as f64).collect();
    HostParams::new(0.7, 1.3, alpha, mu).expect("positive rates")
}

pub fn test_vector() -> VectorParams {
    VectorParams {
        f: 0.6,
        c_v: 0.9,
        s_v_bar: 2.5,
        mu_tilde: 0.35,
    }
}

fn determinants(c: &mut Criterion) {
    let mut group = c.benchmark_group("determinant");
    for n in [4, 6, 8] {
        let a = test_matrix(n);
        group.bench_with_input(BenchmarkId::new("lu", n), &a, |b, a| {
            b.iter(|| black_box(a).determinant())
        });
        group.bench_with_input(BenchmarkId::new("cofactor", n), &a, |b, a| {
            b.iter(|| black_box(a).cofactor_det())
        });
    }
    group.finish();
}

fn dense_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense");
    for n in [5, 10, 20] {
        let a = test_matrix(n);
        group.bench_with_input(BenchmarkId::new("inverse", n), &a, |b, a| {
            b.iter(|| black_box(a).inverse())
        });
        group.bench_with_input(BenchmarkId::new("eigenvalues", n), &a, |b, a| {
            b.iter(|| eigenvalues(black_box(a)))
        });
    }
    group.finish();
}

fn limits(c: &mut Criterion) {
    let a = test_matrix(8);
    let ray = DiagonalRay::new(a.clone(), 3).expect("valid index");
    let schedule = default_schedule(&a);
    c.bench_function("limit_minor_inverse/8", |b| {
        b.iter(|| limit_minor_inverse(black_box(&ray), &schedule))
    });
    let f = test_matrix(8).scale(0.1);
    c.bench_function("spectral_limit/8", |b| {
        b.iter(|| spectral_limit(black_box(&f), &ray, &schedule))
    });
}

fn relapse(c: &mut Criterion) {
    let (h1, h2, vector) = (test_host(6), test_host(6), test_vector());
    c.bench_function("r0/coupled_closed_form", |b| {
        b.iter(|| r0_coupled_closed(black_box(&h1), &h2, &vector, 6, 6))
    });
    c.bench_function("r0/coupled_spectral", |b| {
        b.iter(|| {
            let pair = build_coupled_ngm(black_box(&h1), &h2, &vector, 6, 6)?;
            ngm_core::ngm::r0(&pair)
        })
    });
}

pub fn benchmarks(c: &mut Criterion) {
    determinants(c);
    dense_kernels(c);
    limits(c);
    relapse(c);
}

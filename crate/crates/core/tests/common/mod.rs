//! Test-side oracles written without the library's transforms.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use quasiflow::{RealField, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn grid(n: usize) -> TorusGrid {
    TorusGrid::new(n).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn node(n: usize, j: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

/// `c_k = (1/N) Σ_j u_j e^{-ik x_j}` by direct summation.
pub fn naive_coeff(u: &[f64], k: i64) -> Complex64 {
    let n = u.len();
    u.iter()
        .enumerate()
        .map(|(j, &v)| v * Complex64::from_polar(1.0, -(k as f64) * node(n, j)))
        .sum::<Complex64>()
        / n as f64
}

pub fn naive_complex_coeff(u: &[Complex64], k: i64) -> Complex64 {
    let n = u.len();
    u.iter()
        .enumerate()
        .map(|(j, &v)| v * Complex64::from_polar(1.0, -(k as f64) * node(n, j)))
        .sum::<Complex64>()
        / n as f64
}

/// Random real trigonometric polynomial `Σ_{1<=|k|<=kmax} …` plus a mean.
pub fn random_trig(g: TorusGrid, kmax: i64, seed: u64) -> RealField {
    let mut r = rng(seed);
    let terms: Vec<(f64, f64, f64)> = (0..=kmax)
        .map(|k| (k as f64, r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
        .collect();
    RealField::from_fn(g, |x| terms.iter().map(|&(k, a, b)| a * (k * x).cos() + b * (k * x).sin()).sum())
}

/// Same, with coefficients scaled by `(1+k)^{-decay}`.
pub fn random_smooth(g: TorusGrid, kmax: i64, decay: f64, seed: u64) -> RealField {
    let mut r = rng(seed);
    let terms: Vec<(f64, f64, f64)> = (0..=kmax)
        .map(|k| {
            let w = (1.0 + k as f64).powf(-decay);
            (k as f64, w * r.gen_range(-1.0..1.0), w * r.gen_range(-1.0..1.0))
        })
        .collect();
    RealField::from_fn(g, |x| terms.iter().map(|&(k, a, b)| a * (k * x).cos() + b * (k * x).sin()).sum())
}

pub fn max_diff(a: &RealField, b: &RealField) -> f64 {
    a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `sqrt(2π/N Σ u_j²)`.
pub fn l2(u: &[f64]) -> f64 {
    (2.0 * PI / u.len() as f64 * u.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

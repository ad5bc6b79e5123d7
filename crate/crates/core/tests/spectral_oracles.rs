mod common;

use common::*;
use num_complex::Complex64;
use quasiflow::norms::{sobolev_norm, l2_norm_sq_spectrum};
use quasiflow::spectral::{
    apply_to_field, evaluate_offgrid, forward_transform, inverse_transform, make_multiplier, DispersiveKind,
    Multiplier, MultiplierKind,
};
use quasiflow::RealField;
use rand::Rng;

type SymbolFn = Box<dyn Fn(i64) -> Complex64>;

#[test]
fn forward_transform_matches_direct_sum() {
    for &n in &[8usize, 30, 64, 96] {
        let g = grid(n);
        let mut r = rng(n as u64);
        let u = RealField::new(g, (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let s = forward_transform(&u);
        for i in 0..n {
            let k = g.mode(i);
            let d = (s.coeffs()[i] - naive_coeff(u.samples(), k)).norm();
            assert!(d < 1e-14, "n={n} k={k} d={d:e}");
        }
    }
}

#[test]
fn inverse_transform_of_direct_coefficients_recovers_samples() {
    let g = grid(48);
    let u = random_trig(g, 15, 3);
    // the mirror modes are filled in by conjugation
    let coeffs: Vec<(i64, Complex64)> = (0..=23).map(|k| (k, naive_coeff(u.samples(), k))).collect();
    let back = inverse_transform(&quasiflow::Spectrum::from_modes(g, &coeffs)).unwrap();
    assert!(max_diff(&back, &u) < 1e-13);
}

#[test]
fn parseval_identity() {
    let g = grid(128);
    let mut r = rng(5);
    let u = RealField::new(g, (0..128).map(|_| r.gen_range(-2.0..2.0)).collect()).unwrap();
    let spec = l2_norm_sq_spectrum(&forward_transform(&u)).sqrt();
    let direct = l2(u.samples());
    assert!((spec - direct).abs() < 1e-13 * direct);
    assert!((u.l2_norm() - direct).abs() < 1e-13 * direct);
    assert!((sobolev_norm(&u, 0.0) - direct).abs() < 1e-13 * direct);
}

#[test]
fn bernstein_inequality_for_band_limited_fields() {
    let g = grid(256);
    for kmax in [3i64, 10, 40, 80] {
        let u = random_trig(g, kmax, kmax as u64);
        let du = u.derivative(1);
        assert!(du.l2_norm() <= kmax as f64 * u.l2_norm() * (1.0 + 1e-12));
        // the top mode alone attains the constant
        let top = RealField::from_fn(g, |x| (kmax as f64 * x).sin());
        let ratio = top.derivative(1).l2_norm() / top.l2_norm();
        assert!((ratio - kmax as f64).abs() < 1e-10 * kmax as f64);
    }
}

#[test]
fn multipliers_match_pointwise_symbols() {
    let g = grid(64);
    let u = random_trig(g, 20, 9);
    let cases: Vec<(Multiplier, SymbolFn)> = vec![
        (make_multiplier(MultiplierKind::Hilbert).unwrap(), Box::new(|k: i64| Complex64::new(0.0, -(k.signum() as f64)))),
        (make_multiplier(MultiplierKind::FracAbs { alpha: 0.7 }).unwrap(), Box::new(|k: i64| (k.abs() as f64).powf(0.7).into())),
        (
            make_multiplier(MultiplierKind::Bessel { s: -1.3 }).unwrap(),
            Box::new(|k: i64| (1.0 + (k * k) as f64).powf(-0.65).into()),
        ),
        (
            make_multiplier(MultiplierKind::Dispersion { alpha: 1.5, kind: DispersiveKind::Homogeneous }).unwrap(),
            Box::new(|k: i64| Complex64::new(0.0, -(k.signum() as f64) * (k.abs() as f64).powf(1.5))),
        ),
    ];
    for (m, sym) in cases {
        let got = forward_transform(&apply_to_field(&u, &m));
        for k in -20i64..=20 {
            let want = sym(k) * naive_coeff(u.samples(), k);
            assert!((got.coeff(k) - want).norm() < 1e-12, "{:?} k={k}", m.kind());
        }
    }
}

#[test]
fn offgrid_evaluation_matches_trigonometric_sum() {
    let g = grid(64);
    let mut r = rng(21);
    let terms: Vec<(f64, f64, f64)> = (0..=20).map(|k| (k as f64, r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
    let f = |x: f64| terms.iter().map(|&(k, a, b)| a * (k * x).cos() + b * (k * x).sin()).sum::<f64>();
    let s = forward_transform(&RealField::from_fn(g, f));
    for _ in 0..50 {
        let x = r.gen_range(-10.0..10.0);
        assert!((evaluate_offgrid(&s, x) - f(x)).abs() < 1e-12);
    }
}

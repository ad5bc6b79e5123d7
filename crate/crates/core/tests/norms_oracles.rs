mod common;

use common::*;
use quasiflow::norms::{dyadic_decompose, dyadic_sobolev_norm, holder_norm, sobolev_norm};
use quasiflow::RealField;

/// On block `q >= 1`, `2^{2(q-1)} < 1 + k² <= 1 + 2^{2q}`, so the two norms
/// agree within `2^{|s|}` (block 0 needs `2^{|s|}` too: `1 <= 1+k² <= 2`).
#[test]
fn dyadic_and_multiplier_norms_are_equivalent() {
    let g = grid(512);
    for seed in 0..6 {
        let u = random_smooth(g, 160, 0.5, seed);
        let b = dyadic_decompose(&u);
        for s in [-1.0, 0.0, 0.5, 1.0, 2.6] {
            let r = dyadic_sobolev_norm(&b, s) / sobolev_norm(&u, s);
            let c = 2f64.powf(f64::abs(s)) * 1.0000001;
            assert!(r <= c && r >= 1.0 / c, "seed {seed} s {s} ratio {r}");
        }
    }
}

#[test]
fn dyadic_blocks_are_orthogonal_and_sum_to_the_field() {
    let g = grid(256);
    let u = random_trig(g, 80, 4);
    let b = dyadic_decompose(&u);
    let sum_sq: f64 = b.blocks().iter().map(|f| f.l2_norm().powi(2)).sum();
    assert!((sum_sq - u.l2_norm().powi(2)).abs() < 1e-12 * sum_sq);
    assert!(max_diff(&b.reconstruct(), &u) < 1e-13);
}

/// Kato–Ponce with the explicit constant `2^{s}` that the Leibniz rule gives
/// for integer `s` on trigonometric polynomials: `‖fg‖_{H^s} <= 2^s (‖f‖_∞ ‖g‖_{H^s} + ‖f‖_{H^s} ‖g‖_∞)`.
#[test]
fn kato_ponce_product_estimate() {
    let g = grid(512);
    let mut worst: f64 = 0.0;
    for seed in 0..8 {
        let f = random_smooth(g, 40, 1.0, 100 + seed);
        let h = random_smooth(g, 40, 1.0, 200 + seed);
        let fh = f.mul(&h).unwrap();
        for s in [1.0, 2.0, 3.0] {
            let rhs = f.max_abs() * sobolev_norm(&h, s) + sobolev_norm(&f, s) * h.max_abs();
            let r = sobolev_norm(&fh, s) / rhs;
            worst = worst.max(r / 2f64.powf(s));
        }
    }
    assert!(worst <= 1.0, "worst normalized ratio {worst}");
}

#[test]
fn holder_norm_of_trigonometric_polynomial() {
    let g = grid(128);
    let u = RealField::from_fn(g, |x| (3.0 * x).sin() + 0.25 * (5.0 * x).cos());
    // sup|u''| <= 9 + 6.25, attained where both terms align at x = π/2 + ...
    let h2 = holder_norm(&u, 2);
    let direct = RealField::from_fn(g, |x| -9.0 * (3.0 * x).sin() - 6.25 * (5.0 * x).cos()).max_abs();
    assert!((h2 - direct).abs() < 1e-10 * direct);
    assert!(holder_norm(&u, 0) == u.max_abs());
}

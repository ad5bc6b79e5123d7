mod common;

use common::*;
use quasiflow::characteristics::{integrate_flow, integrate_grid_flow, invert_flow};
use quasiflow::evolve::{solve_burgers, SolverConfig, Trajectory};
use quasiflow::RealField;

fn burgers(n: usize, t: f64) -> Trajectory {
    let cfg = SolverConfig { dt_max: 0.01, ..SolverConfig::default() };
    solve_burgers(&RealField::from_fn(grid(n), |x| 0.1 * x.sin()), t, &cfg).unwrap()
}

fn seeds() -> Vec<f64> {
    (0..17).map(|i| -3.0 + 0.37 * i as f64).collect()
}

/// Burgers characteristics are straight lines `x + t u0(x)`.
#[test]
fn burgers_characteristics_are_straight() {
    let tr = burgers(256, 1.0);
    let s = seeds();
    let fm = integrate_flow(&tr, 0.0, 1.0, &s).unwrap();
    for (&x, &y) in s.iter().zip(fm.positions()) {
        assert!((y - (x + 0.1 * x.sin())).abs() < 1e-9, "x={x}");
    }
    for (&x, &j) in s.iter().zip(fm.jacobian()) {
        assert!((j - (1.0 + 0.1 * x.cos())).abs() < 1e-8);
    }
}

#[test]
fn flows_compose() {
    let tr = burgers(128, 1.0);
    let s = seeds();
    let a = integrate_flow(&tr, 0.0, 0.4, &s).unwrap();
    let b = integrate_flow(&tr, 0.4, 1.0, a.positions()).unwrap();
    let c = integrate_flow(&tr, 0.0, 1.0, &s).unwrap();
    for (p, q) in b.positions().iter().zip(c.positions()) {
        assert!((p - q).abs() < 1e-10);
    }
    for ((ja, jb), jc) in a.jacobian().iter().zip(b.jacobian()).zip(c.jacobian()) {
        assert!((ja * jb - jc).abs() < 1e-9);
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let tr = burgers(128, 1.0);
    let h = 1e-5;
    for x in [-2.0, 0.3, 1.7] {
        let fm = integrate_flow(&tr, 0.0, 1.0, &[x - h, x, x + h]).unwrap();
        let p = fm.positions();
        let fd = (p[2] - p[0]) / (2.0 * h);
        assert!((fd - fm.jacobian()[1]).abs() < 1e-7);
    }
}

#[test]
fn grid_flow_agrees_with_seeded_flow_and_inverts() {
    let tr = burgers(128, 1.0);
    let gfm = integrate_grid_flow(&tr, 0.0, 1.0).unwrap();
    let sfm = integrate_flow(&tr, 0.0, 1.0, gfm.seeds()).unwrap();
    for (a, b) in gfm.positions().iter().zip(sfm.positions()) {
        assert!((a - b).abs() < 1e-12);
    }
    for (a, b) in gfm.jacobian().iter().zip(sfm.jacobian()) {
        assert!((a - b).abs() < 1e-8);
    }
    let back = invert_flow(&gfm, &tr).unwrap();
    for (a, b) in back.positions().iter().zip(gfm.seeds()) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!(gfm.min_jacobian() > 0.0);
}

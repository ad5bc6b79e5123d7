mod common;

use common::*;
use num_complex::Complex64;
use quasiflow::characteristics::FlowMap;
use quasiflow::evolve::{
    linear_propagate_with, solve_burgers, solve_dispersive_burgers, solve_pulled_back, solve_symmetrized_system,
    SolverConfig, VelocityRule,
};
use quasiflow::paradiff::GridSymbol;
use quasiflow::spectral::{forward_transform, inverse_transform, DispersiveKind};
use quasiflow::RealField;

fn cfg(dt: f64) -> SolverConfig {
    SolverConfig { dt_max: dt, cfl: 1e6, ..SolverConfig::default() }
}

#[test]
fn self_convergence_is_fourth_order() {
    let g = grid(64);
    let u0 = RealField::from_fn(g, |x| 0.2 * x.cos() + 0.1 * (2.0 * x).sin());
    for alpha in [0.5, 1.5] {
        let run = |dt: f64| solve_dispersive_burgers(&u0, alpha, 0.4, &cfg(dt)).unwrap().final_state().clone();
        let (a, b, c) = (run(0.04), run(0.02), run(0.01));
        let ratio = max_diff(&a, &b) / max_diff(&b, &c);
        assert!((12.0..=20.0).contains(&ratio), "alpha {alpha}: ratio {ratio}");
    }
}

#[test]
fn solution_operator_is_a_semigroup() {
    let g = grid(128);
    let u0 = random_smooth(g, 12, 2.0, 4).scale(0.2);
    let c = cfg(0.01);
    let whole = solve_dispersive_burgers(&u0, 1.0, 0.5, &c).unwrap();
    let first = solve_dispersive_burgers(&u0, 1.0, 0.2, &c).unwrap();
    let second = solve_dispersive_burgers(first.final_state(), 1.0, 0.3, &c).unwrap();
    assert!(max_diff(whole.final_state(), second.final_state()) < 1e-12);
}

/// Before the shock, `u(t, x + t u0(x)) = u0(x)`; solve `x = y - t u0(x)` by Newton.
#[test]
fn burgers_matches_the_implicit_solution() {
    let g = grid(256);
    let u0 = |x: f64| 0.1 * x.sin();
    let t = 1.0;
    let tr = solve_burgers(&RealField::from_fn(g, u0), t, &cfg(0.01)).unwrap();
    let exact = RealField::from_fn(g, |y| {
        let mut x = y;
        for _ in 0..50 {
            x -= (x + t * u0(x) - y) / (1.0 + t * 0.1 * x.cos());
        }
        u0(x)
    });
    let e = max_diff(tr.final_state(), &exact);
    assert!(e < 1e-8, "error {e:e}");
}

#[test]
fn linear_flow_rotates_every_mode() {
    let g = grid(64);
    let terms = [(1.0, 0.3, -0.2), (3.0, -0.5, 0.1), (7.0, 0.25, 0.4), (15.0, 0.1, -0.3)];
    let u0 = RealField::from_fn(g, |x| terms.iter().map(|&(k, a, b)| a * (k * x).cos() + b * (k * x).sin()).sum());
    for (kind, w) in [
        (DispersiveKind::Homogeneous, (|k: f64, a: f64| k.powf(a)) as fn(f64, f64) -> f64),
        (DispersiveKind::Inhomogeneous, |k: f64, a: f64| (1.0 + k * k).powf(a / 2.0)),
    ] {
        for alpha in [0.3, 1.0, 1.7] {
            let t = 0.9;
            let got = linear_propagate_with(&u0, alpha, t, kind).unwrap();
            let want = RealField::from_fn(g, |x| {
                terms.iter().map(|&(k, a, b)| {
                    let ph = k * x + w(k, alpha) * t;
                    a * ph.cos() + b * ph.sin()
                }).sum()
            });
            assert!(max_diff(&got, &want) < 1e-12, "{kind:?} alpha {alpha}");
        }
    }
}

#[test]
fn small_data_keeps_l2_norm() {
    let g = grid(256);
    let u0 = random_smooth(g, 10, 2.0, 7).scale(0.05);
    let tr = solve_dispersive_burgers(&u0, 1.0, 0.5, &cfg(0.005)).unwrap();
    let drift = (tr.final_state().l2_norm() - u0.l2_norm()).abs() / u0.l2_norm();
    assert!(drift < 1e-8, "drift {drift:e}");
}

#[test]
fn system_energy_is_conserved_with_variable_gamma() {
    let g = grid(128);
    let c = RealField::from_fn(g, |x| 1.0 + 0.2 * x.cos());
    let gamma = GridSymbol::from_fields(g, 1.5, vec![c], |c, xi| Complex64::new(c[0] * xi.abs().powf(1.5), 0.0)).unwrap();
    let p1 = random_smooth(g, 8, 2.0, 11).scale(0.1);
    let p2 = random_smooth(g, 8, 2.0, 12).scale(0.1);
    // ψ removes |k| <= 1 from the dynamics, so measure only what the system evolves
    let passed = |u: &RealField| inverse_transform(&forward_transform(u).filter(|k| k.abs() > 1)).unwrap();
    let energy = |a: &RealField, b: &RealField| passed(a).l2_norm().powi(2) + passed(b).l2_norm().powi(2);
    let e0 = energy(&p1, &p2);
    let tr = solve_symmetrized_system(&p1, &p2, &VelocityRule::FirstComponent, &gamma, 0.2, &cfg(0.0005)).unwrap();
    let fin = tr.final_components();
    let e1 = energy(&fin[0], &fin[1]);
    assert!((e1 - e0).abs() < 1e-6 * e0, "relative drift {:e}", (e1 - e0).abs() / e0);
}

#[test]
fn transport_symbol_on_identity_path_translates() {
    let g = grid(64);
    let speed = 0.7;
    let a = GridSymbol::fourier_multiplier(g, 1.0, move |xi| Complex64::new(0.0, speed * xi)).unwrap();
    let u0 = RealField::from_fn(g, |x| (4.0 * x).cos() + 0.5 * (9.0 * x).sin());
    let t = 0.3;
    let sol = solve_pulled_back(&u0, &a, &FlowMap::identity(g), t, &cfg(0.001), 1.0).unwrap();
    let want = RealField::from_fn(g, |x| (4.0 * (x - speed * t)).cos() + 0.5 * (9.0 * (x - speed * t)).sin());
    assert!(max_diff(sol.trajectory.final_state(), &want) < 1e-9);
    assert!(sol.growth.holds());
    assert!((sol.growth.growth_factor - 1.0).abs() < 1e-9);
}

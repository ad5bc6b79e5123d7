//! Maps a validated [`RunConfig`] onto the library pipelines.

use std::fmt::Write as _;
use std::path::PathBuf;

use num_complex::Complex64;
use quasiflow::ansatz::{feasible_exponents, make_bump, Feasibility};
use quasiflow::characteristics::FlowMap;
use quasiflow::evolve::{solve_dispersive_burgers, SolverConfig};
use quasiflow::experiments::{
    export_records, record_file_name, run_separation, run_system_separation, write_atomic, ExperimentConfig,
    SeparationRecord,
};
use quasiflow::paradiff::{
    bony_remainder, paracompose, paradiff_apply, paraproduct, paraproduct_summands, pullback_symbol, CutoffConfig,
    GridSymbol,
};
use quasiflow::spectral::{evaluate_offgrid, forward_transform};
use quasiflow::wwsymbols::{grid_frequencies, st_symbols, verify_commutation, SurfaceState};
use quasiflow::{RealField, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CliError, Command, GridSize, InitialPreset, RunConfig};
use crate::svg::{emit_svg, Plot};

pub const FEASIBILITY_ALPHAS: [f64; 6] = [0.0, 0.5, 1.0, 1.5, 1.9, 2.0];

/// Caps worker threads; unset or unparsable means machine parallelism.
pub const THREADS_VAR: &str = "QUASIFLOW_THREADS";

fn env_threads() -> Option<usize> {
    std::env::var(THREADS_VAR).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs the command and returns the process exit code.
pub fn dispatch(cfg: &RunConfig) -> Result<i32, CliError> {
    dispatch_to(cfg, &mut std::io::stdout().lock())
}

/// [`dispatch`] with the summary lines sent to `out`.
pub fn dispatch_to(cfg: &RunConfig, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    cfg.validate()?;
    let mut text = String::new();
    let code = match cfg.command {
        Command::Solve => solve(cfg, &mut text)?,
        Command::Separation | Command::SystemSeparation => separation(cfg, &mut text)?,
        Command::Feasibility => feasibility(cfg, &mut text)?,
        Command::WwSymbols => ww_symbols(cfg, &mut text)?,
        Command::ParadiffCheck => paradiff_check(cfg, &mut text)?,
    };
    out.write_all(text.as_bytes()).map_err(quasiflow::Error::from)?;
    Ok(code)
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn grid(n: usize) -> Result<TorusGrid, CliError> {
    Ok(TorusGrid::new(n)?)
}

fn field_csv(grid: TorusGrid, cols: &[(&str, &RealField)]) -> String {
    let mut s = String::from("x");
    for (name, _) in cols {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for j in 0..grid.n_points() {
        let _ = write!(s, "{:.16e}", grid.node(j));
        for (_, f) in cols {
            let _ = write!(s, ",{:.16e}", f.samples()[j]);
        }
        s.push('\n');
    }
    s
}

fn solve(cfg: &RunConfig, out: &mut String) -> Result<i32, CliError> {
    let g = grid(cfg.grid_n.or(256))?;
    let amp = cfg.amplitude.unwrap_or(1.0);
    let u0 = match cfg.u0 {
        InitialPreset::Cos => RealField::from_fn(g, |x| amp * x.cos()),
        InitialPreset::Sin => RealField::from_fn(g, |x| amp * x.sin()),
        InitialPreset::Bump => make_bump().sample(g, 1.0).scale(amp),
    };
    let solver = SolverConfig { nonlinear: !cfg.linear, ..SolverConfig::default() };
    let tr = solve_dispersive_burgers(&u0, cfg.alpha, cfg.t, &solver)?;
    let u = tr.final_state();
    let n0 = u0.l2_norm();
    let drift = if n0 > 0.0 { (u.l2_norm() - n0).abs() / n0 } else { u.l2_norm() };
    let _ = write!(
        out,
        "solve u0={:?} alpha={} t={} N={} linear={} l2_drift={drift:.3e} max_abs={:.6e}",
        cfg.u0,
        cfg.alpha,
        cfg.t,
        g.n_points(),
        cfg.linear,
        u.max_abs()
    );
    // single-mode data travels at speed 1 under either dispersive order
    let exact = match cfg.u0 {
        InitialPreset::Cos if cfg.linear => Some(RealField::from_fn(g, |x| amp * (x + cfg.t).cos())),
        InitialPreset::Sin if cfg.linear => Some(RealField::from_fn(g, |x| amp * (x + cfg.t).sin())),
        _ => None,
    };
    if let Some(e) = exact {
        let _ = write!(out, " max_err_exact={:.3e}", u.sub(&e)?.max_abs());
    }
    out.push('\n');
    let stem = format!("solve__alpha{:?}", cfg.alpha);
    write_atomic(&out_path(cfg, &format!("{stem}.csv")), field_csv(g, &[("u0", &u0), ("u", u)]).as_bytes())?;
    if cfg.emit_svg {
        emit_svg(&Plot::Field(u), &out_path(cfg, &format!("{stem}.svg")))?;
    }
    Ok(0)
}

fn separation(cfg: &RunConfig, out: &mut String) -> Result<i32, CliError> {
    let regime = match feasible_exponents(cfg.alpha, cfg.eps_prime, cfg.c1_regime)? {
        Feasibility::Feasible(r) => r,
        Feasibility::Infeasible => {
            return Err(CliError::Usage(format!(
                "no admissible regime at alpha = {}, eps_prime = {}, c1_regime = {}",
                cfg.alpha, cfg.eps_prime, cfg.c1_regime
            )))
        }
    };
    let mut ecfg = ExperimentConfig { threads: env_threads(), ..ExperimentConfig::default() };
    if let GridSize::Points(n) = cfg.grid_n {
        ecfg.min_grid = n;
    }
    let (name, recs) = if cfg.command == Command::Separation {
        ("separation", run_separation(cfg.alpha, cfg.s, &regime, cfg.n_lo, cfg.n_hi, &ecfg)?)
    } else {
        ("system-separation", run_system_separation(cfg.s, &regime, cfg.alpha, cfg.n_lo, cfg.n_hi, &ecfg)?)
    };
    let _ = writeln!(out, "{name} alpha={} s={} regime delta1={:.4} delta2={:.4}", cfg.alpha, cfg.s, regime.delta1, regime.delta2);
    for r in &recs {
        out.push_str(&record_line(r));
        out.push('\n');
    }
    let file = record_file_name(name, cfg.alpha, cfg.s, cfg.format);
    export_records(&recs, &out_path(cfg, &file), cfg.format)?;
    if cfg.emit_svg {
        let stem = file.rsplit_once('.').map_or(file.as_str(), |(a, _)| a);
        emit_svg(&Plot::Records(&recs), &out_path(cfg, &format!("{stem}.svg")))?;
    }
    Ok(if recs.iter().all(SeparationRecord::is_ok) { 0 } else { 1 })
}

fn record_line(r: &SeparationRecord) -> String {
    match &r.error {
        Some(e) => format!("n={} lambda={} grid={} ERROR {e}", r.n, r.lambda, r.grid_n),
        None => format!(
            "n={} lambda={} eps={:.4e} tau={:.4e} d0={:.4e} d_tau={:.4e} weak_ratio={:.4e} gap*lambda={:.4} grid={} {:.2}s",
            r.n, r.lambda, r.epsilon, r.tau, r.d0, r.d_tau, r.weak_ratio, r.gap_times_lambda, r.grid_n, r.wall_time_s
        ),
    }
}

fn feasibility(cfg: &RunConfig, out: &mut String) -> Result<i32, CliError> {
    let mut csv = String::from("alpha,eps_prime,c1_regime,status,delta1,delta2\n");
    for alpha in FEASIBILITY_ALPHAS {
        let f = feasible_exponents(alpha, cfg.eps_prime, cfg.c1_regime)?;
        let (status, d1, d2) = match f.exponents() {
            Some(r) => ("Feasible", r.delta1, r.delta2),
            None => ("Infeasible", f64::NAN, f64::NAN),
        };
        let _ = writeln!(out, "alpha={alpha:<4} {status:<10} delta1={d1:.4} delta2={d2:.4}");
        let _ = writeln!(csv, "{alpha},{},{},{status},{d1:.16e},{d2:.16e}", cfg.eps_prime, cfg.c1_regime);
    }
    write_atomic(&out_path(cfg, "feasibility.csv"), csv.as_bytes())?;
    Ok(0)
}

/// Surface `Σ_{m≤3} (a_m cos mx + b_m sin mx)` with `|a_m|, |b_m| <= amp / m`.
fn random_surface(g: TorusGrid, amp: f64, seed: u64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefs: Vec<(f64, f64)> = (1..=3)
        .map(|m| {
            let c = amp / m as f64;
            (rng.gen_range(-c..=c), rng.gen_range(-c..=c))
        })
        .collect();
    RealField::from_fn(g, |x| {
        coefs.iter().enumerate().map(|(i, (a, b))| {
            let m = (i + 1) as f64;
            a * (m * x).cos() + b * (m * x).sin()
        }).sum()
    })
}

fn ww_symbols(cfg: &RunConfig, out: &mut String) -> Result<i32, CliError> {
    let g = grid(cfg.grid_n.or(256))?;
    let eta = random_surface(g, cfg.amplitude.unwrap_or(0.05), cfg.seed);
    let state = SurfaceState::line(eta.clone());
    let table = st_symbols(&state, &grid_frequencies(&state)?)?;
    let mut ident: f64 = 0.0;
    for p in 0..table.n_positions() {
        for (f, xi) in table.frequencies.iter().enumerate() {
            ident = ident.max((table.at(&table.lambda1, p, f).re - xi[0].abs()).abs());
        }
    }
    let _ = writeln!(
        out,
        "ww-symbols N={} seed={} max|eta|={:.4e} ellipticity={:.10} lambda1_identity_error={ident:.1e}",
        g.n_points(),
        cfg.seed,
        eta.max_abs(),
        table.ellipticity
    );
    let cut = CutoffConfig::default();
    let reach = (1.0 + cut.epsilon1).powi(2);
    let probes: Vec<i64> =
        (3..).map(|e| 1i64 << e).take_while(|&k| (k as f64) * reach < g.nyquist() as f64).collect();
    if !probes.is_empty() {
        let rep = verify_commutation(&eta, &probes, &cut)?;
        for (i, k) in rep.probes.iter().enumerate() {
            let _ = writeln!(
                out,
                "probe k={k} dn_pair={:.4e} tension_pair={:.4e} printed_pair={:.4e}",
                rep.dn_pair[i], rep.tension_pair[i], rep.printed_pair[i]
            );
        }
    }
    table.export_csv(&out_path(cfg, &format!("ww_symbols__seed{}.csv", cfg.seed)))?;
    if cfg.emit_svg {
        emit_svg(&Plot::Field(&eta), &out_path(cfg, &format!("ww_surface__seed{}.svg", cfg.seed)))?;
    }
    Ok(0)
}

fn paradiff_check(cfg: &RunConfig, out: &mut String) -> Result<i32, CliError> {
    let g = grid(cfg.grid_n.or(128))?;
    let cut = CutoffConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut all_ok = true;
    let mut report = |name: &str, ok: bool, detail: String| {
        all_ok &= ok;
        let _ = writeln!(out, "check {name}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    };
    let max_diff = |a: &RealField, b: &RealField| a.sub(b).map(|d| d.max_abs());

    // random data on the high modes plus a mean
    let hi = g.dealias_cutoff();
    let modes: Vec<(i64, f64, f64)> =
        (0..4).map(|_| (rng.gen_range(2..=hi), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let wave = |x: f64| modes.iter().map(|&(k, a, b)| a * (k as f64 * x).cos() + b * (k as f64 * x).sin()).sum::<f64>();
    let u = RealField::from_fn(g, |x| 1.0 + wave(x));
    let high = RealField::from_fn(g, wave);

    let one = GridSymbol::fourier_multiplier(g, 0.0, |_| Complex64::new(1.0, 0.0))?;
    let e = max_diff(&paradiff_apply(&one, &u, &cut)?, &high)?
        .max(max_diff(&paraproduct(&RealField::constant(g, 1.0), &u)?, &high)?);
    report("constant symbol", e < 1e-12, format!("error {e:.1e}"));

    let noise = RealField::new(g, (0..g.n_points()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let a = RealField::from_fn(g, |x| x.sin() + 0.3 * (3.0 * x).cos());
    let mut leak: f64 = 0.0;
    for (q, s) in paraproduct_summands(&a, &noise)? {
        let lo = (1i64 << (q - 1)) - (1i64 << q.saturating_sub(3)).max(1);
        let top = (1i64 << q) + (1i64 << q.saturating_sub(3));
        for i in 0..g.n_points() {
            let k = g.mode(i).abs();
            if k < lo.max(0) || k > top {
                leak = leak.max(s.coeffs()[i].norm());
            }
        }
    }
    report("summand localization", leak < 1e-12, format!("leakage {leak:.1e}"));

    let c = RealField::from_fn(g, f64::cos);
    let e = max_diff(&bony_remainder(&c, &c)?, &RealField::from_fn(g, |x| 0.5 * (1.0 + (2.0 * x).cos())))?;
    report("remainder of cos*cos", e < 1e-13, format!("error {e:.1e}"));

    let chi = FlowMap::from_map(g, |x| 2.0 * x + 0.3, |_| 2.0)?;
    let low: Vec<(i64, f64, f64)> =
        (0..3).map(|_| (rng.gen_range(2..=hi / 2), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let low_wave = |x: f64| low.iter().map(|&(k, a, b)| a * (k as f64 * x).cos() + b * (k as f64 * x).sin()).sum::<f64>();
    let half = RealField::from_fn(g, low_wave);
    let moved = RealField::from_fn(g, |y| low_wave(2.0 * y + 0.3));
    let e = max_diff(&paracompose(&half, &chi, None)?, &moved)?;
    report("affine paracomposition", e <= 1e-10, format!("error {e:.1e}"));

    // the probes need room above them, so this check runs on at least 1024 points
    let g = grid(g.n_points().max(1024))?;
    let hi = g.dealias_cutoff();
    let chi = FlowMap::from_map(g, |x| x + 0.1 * x.sin(), |x| 1.0 + 0.1 * x.cos())?;
    let abs = GridSymbol::fourier_multiplier(g, 1.0, |xi| Complex64::new(xi.abs(), 0.0))?;
    let astar = pullback_symbol(&abs, &chi)?;
    let mut ratios = Vec::new();
    let mut k = 8.0;
    while k * 4.0 <= hi as f64 {
        let w = RealField::from_fn(g, |x| (k * x).cos());
        let aw = forward_transform(&paradiff_apply(&abs, &w, &cut)?);
        let lhs = RealField::new(g, chi.positions().iter().map(|&y| evaluate_offgrid(&aw, y)).collect())?;
        let wc = RealField::new(g, chi.positions().iter().map(|&y| (k * y).cos()).collect())?;
        let rhs = paradiff_apply(&astar, &wc, &cut)?;
        ratios.push(lhs.sub(&rhs)?.l2_norm() / (k * w.l2_norm()));
        k *= 2.0;
    }
    let ok = ratios.len() >= 2 && ratios.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3e}")).collect();
    report("pullback order reduction", ok, format!("ratios [{}]", shown.join(", ")));
    Ok(if all_ok { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: Command, dir: &std::path::Path) -> RunConfig {
        RunConfig { command, out_dir: dir.to_path_buf(), ..RunConfig::default() }
    }

    fn run(c: &RunConfig) -> (i32, String) {
        let mut buf = Vec::new();
        let code = dispatch_to(c, &mut buf).unwrap();
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn feasibility_table_is_infeasible_only_at_two() {
        let dir = tempfile::tempdir().unwrap();
        let (code, text) = run(&cfg(Command::Feasibility, dir.path()));
        assert_eq!(code, 0);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), FEASIBILITY_ALPHAS.len());
        for (l, a) in lines.iter().zip(FEASIBILITY_ALPHAS) {
            assert_eq!(l.contains("Infeasible"), a == 2.0, "{l}");
        }
        assert!(dir.path().join("feasibility.csv").exists());
    }

    #[test]
    fn linear_solve_matches_translation() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig { linear: true, emit_svg: true, ..cfg(Command::Solve, dir.path()) };
        let (code, text) = run(&c);
        assert_eq!(code, 0);
        let field = |name: &str| -> f64 {
            let v = text.split_whitespace().find_map(|w| w.strip_prefix(&format!("{name}="))).unwrap();
            v.parse().unwrap()
        };
        assert!(field("max_err_exact") < 1e-10, "{text}");
        assert!(field("l2_drift") <= 1e-8, "{text}");
        assert!(dir.path().join("solve__alpha1.0.svg").exists());
    }

    #[test]
    fn paradiff_check_passes() {
        let dir = tempfile::tempdir().unwrap();
        let (code, text) = run(&cfg(Command::ParadiffCheck, dir.path()));
        assert_eq!(code, 0, "{text}");
        assert_eq!(text.lines().filter(|l| l.contains("PASS")).count(), 5);
    }

    #[test]
    fn infeasible_regime_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig { eps_prime: 0.0, ..cfg(Command::Separation, dir.path()) };
        assert_eq!(dispatch_to(&c, &mut Vec::new()).unwrap_err().exit_code(), 2);
    }
}

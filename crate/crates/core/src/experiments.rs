//! Separation experiments on the ansatz family and record export.
//!
//! For every schedule entry the pipeline builds `(u⁰, v⁰)`, pulls both back
//! through the linear flow over `[0, τ]`, evolves the results nonlinearly to
//! `τ` and measures how far apart the two solutions end up.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};

use crate::ansatz::{make_ansatz_pair, schedule, AnsatzParams, RegimeExponents};
use crate::characteristics::integrate_flow;
use crate::error::{Error, Result};
use crate::evolve::{
    linear_propagate_with, solve_dispersive_burgers, solve_symmetrized_system, system_linear_propagate,
    SolverConfig, Trajectory, VelocityRule,
};
use crate::norms::sobolev_norm;
use crate::paradiff::GridSymbol;
use crate::spectral::{RealField, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub solver: SolverConfig,
    /// Each record uses at least this many time steps over `[0, τ]`.
    pub steps_per_tau: usize,
    /// Floor on the grid size. Any floor above `grid_factor · λ` changes the
    /// resolution of the bump between records, so the default is none.
    pub min_grid: usize,
    /// Grid points per unit of `λ`.
    pub grid_factor: f64,
    /// Sign of `ε'` in the weak exponent `s - 1 + (α-1)⁺ ± ε'`.
    pub weak_sign: f64,
    /// Runs the pipeline with `v⁰ = u⁰`.
    pub force_zero_epsilon: bool,
    /// Worker threads; `None` uses the machine's parallelism.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            steps_per_tau: 64,
            min_grid: 0,
            grid_factor: 32.0,
            weak_sign: 1.0,
            force_zero_epsilon: false,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.steps_per_tau == 0 {
            return Err(Error::InvalidParameter("steps_per_tau must be positive".into()));
        }
        if !(self.grid_factor > 0.0 && self.grid_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid_factor = {}", self.grid_factor)));
        }
        if !matches!(self.threads, None | Some(1..)) {
            return Err(Error::InvalidParameter("threads must be positive".into()));
        }
        Ok(())
    }

    /// `max(min_grid, grid_factor · λ)`, rounded up to a power of two.
    pub fn grid_points(&self, lambda: f64) -> usize {
        let want = (self.grid_factor * lambda).ceil() as usize;
        want.max(self.min_grid).max(8).next_power_of_two()
    }

    fn record_solver(&self, tau: f64) -> SolverConfig {
        let mut c = self.solver;
        c.dt_max = c.dt_max.min(tau / self.steps_per_tau as f64);
        c
    }

    fn n_threads(&self, jobs: usize) -> usize {
        let machine = std::thread::available_parallelism().map_or(1, |n| n.get());
        self.threads.unwrap_or(machine).clamp(1, jobs.max(1))
    }
}

fn nan_as_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// One row of a separation run. Numeric fields are NaN when `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationRecord {
    pub n: u32,
    #[serde(deserialize_with = "nan_as_null")]
    pub lambda: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub epsilon: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub tau: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub d0: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub d_tau: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub d_tau_weak: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub weak_ratio: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub support_gap: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub gap_times_lambda: f64,
    pub grid_n: usize,
    #[serde(deserialize_with = "nan_as_null")]
    pub wall_time_s: f64,
    pub error: Option<String>,
}

impl SeparationRecord {
    fn failed(n: u32, p: Option<&AnsatzParams>, grid_n: usize, wall: f64, e: &Error) -> Self {
        let nan = f64::NAN;
        SeparationRecord {
            n,
            lambda: p.map_or(nan, |p| p.lambda),
            epsilon: p.map_or(nan, |p| p.epsilon),
            tau: p.map_or(nan, |p| p.tau),
            d0: nan,
            d_tau: nan,
            d_tau_weak: nan,
            weak_ratio: nan,
            support_gap: nan,
            gap_times_lambda: nan,
            grid_n,
            wall_time_s: wall,
            error: Some(e.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Per-record quantities that are not part of the exported schema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationDiagnostics {
    /// Weak ratio with the opposite sign of `ε'`.
    pub weak_ratio_alt: f64,
    /// Weak ratio at `s - 1 + (α-1)⁺` exactly.
    pub weak_ratio_sharp: f64,
    /// The displacement law's prediction `ε τ ω(0)`.
    pub predicted_gap: f64,
}

/// Gap between the characteristics of two solutions launched from the bump center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportGap {
    pub gap: f64,
    pub gap_times_lambda: f64,
    /// Gaps at the plateau edges `±1/(2λ)`.
    pub edge_gaps: [f64; 2],
    pub predicted: f64,
}

impl SupportGap {
    /// Whether the center gap is within the relative tolerance of `ε τ ω(0)`.
    pub fn within_law(&self, tol: f64) -> bool {
        (self.gap - self.predicted).abs() <= tol * self.predicted
    }
}

pub fn support_gap(traj_u: &Trajectory, traj_v: &Trajectory, p: &AnsatzParams) -> Result<SupportGap> {
    traj_u.grid().check_same(&traj_v.grid())?;
    let h = 0.5 / p.lambda;
    let seeds = [-h, 0.0, h];
    let t0 = traj_u.t_start().max(traj_v.t_start());
    let t1 = traj_u.t_end().min(traj_v.t_end());
    let fu = integrate_flow(traj_u, t0, t1, &seeds)?;
    let fv = integrate_flow(traj_v, t0, t1, &seeds)?;
    let d: Vec<f64> = fu.positions().iter().zip(fv.positions()).map(|(a, b)| (a - b).abs()).collect();
    Ok(SupportGap {
        gap: d[1],
        gap_times_lambda: d[1] * p.lambda,
        edge_gaps: [d[0], d[2]],
        predicted: p.epsilon * (t1 - t0) * crate::ansatz::make_bump().eval(0.0),
    })
}

/// The equation that a separation run drives.
#[derive(Clone)]
enum Pipeline {
    Scalar { alpha: f64 },
    System { gamma_order: f64 },
}

struct Measured {
    record: SeparationRecord,
    diagnostics: SeparationDiagnostics,
}

fn pair_norm(a: &[RealField], b: &[RealField], s: f64) -> Result<f64> {
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        sum += sobolev_norm(&x.sub(y)?, s).powi(2);
    }
    Ok(sum.sqrt())
}

fn run_one(
    pipe: &Pipeline,
    regime: &RegimeExponents,
    n: u32,
    params: AnsatzParams,
    cfg: &ExperimentConfig,
) -> std::result::Result<Measured, (usize, Error)> {
    let lambda = params.lambda;
    let grid_n = cfg.grid_points(lambda);
    let fail = |e: Error| (grid_n, e);
    let grid = TorusGrid::new(grid_n).map_err(fail)?;
    let (u0, v0) = make_ansatz_pair(&params, grid).map_err(fail)?;
    let solver = cfg.record_solver(params.tau);
    let tau = params.tau;
    let s = params.s;

    let (u1, v1, traj_u, traj_v): (Vec<RealField>, Vec<RealField>, Trajectory, Trajectory) = match pipe {
        Pipeline::Scalar { alpha } => {
            let kind = solver.dispersive_kind;
            let u1 = linear_propagate_with(&u0, *alpha, -tau, kind).map_err(fail)?;
            let v1 = linear_propagate_with(&v0, *alpha, -tau, kind).map_err(fail)?;
            let tu = solve_dispersive_burgers(&u1, *alpha, tau, &solver).map_err(fail)?;
            let tv = solve_dispersive_burgers(&v1, *alpha, tau, &solver).map_err(fail)?;
            (vec![u1], vec![v1], tu, tv)
        }
        Pipeline::System { gamma_order } => {
            let order = *gamma_order;
            let gamma = GridSymbol::fourier_multiplier(grid, order, move |xi| xi.abs().powf(order).into()).map_err(fail)?;
            let zero = RealField::zeros(grid);
            let c = solver.cutoff;
            let (u1, u2) = system_linear_propagate(&u0, &zero, &gamma, -tau, &c).map_err(fail)?;
            let (v1, v2) = system_linear_propagate(&v0, &zero, &gamma, -tau, &c).map_err(fail)?;
            let rule = VelocityRule::FirstComponent;
            let tu = solve_symmetrized_system(&u1, &u2, &rule, &gamma, tau, &solver).map_err(fail)?;
            let tv = solve_symmetrized_system(&v1, &v2, &rule, &gamma, tau, &solver).map_err(fail)?;
            (vec![u1, u2], vec![v1, v2], tu, tv)
        }
    };

    let d0 = pair_norm(&u1, &v1, s).map_err(fail)?;
    let ut = traj_u.final_components();
    let vt = traj_v.final_components();
    let d_tau = pair_norm(ut, vt, s).map_err(fail)?;
    let ratio = |sign: f64| -> Result<(f64, f64)> {
        let weak = pair_norm(ut, vt, regime.weak_exponent(s, sign))?;
        Ok((weak, if d0 > 0.0 { weak / d0 } else { 0.0 }))
    };
    let (d_tau_weak, weak_ratio) = ratio(cfg.weak_sign).map_err(fail)?;
    let (_, weak_ratio_alt) = ratio(-cfg.weak_sign).map_err(fail)?;
    let (_, weak_ratio_sharp) = ratio(0.0).map_err(fail)?;
    let gap = support_gap(&traj_u, &traj_v, &params).map_err(fail)?;

    Ok(Measured {
        record: SeparationRecord {
            n,
            lambda,
            epsilon: params.epsilon,
            tau,
            d0,
            d_tau,
            d_tau_weak,
            weak_ratio,
            support_gap: gap.gap,
            gap_times_lambda: gap.gap_times_lambda,
            grid_n,
            wall_time_s: 0.0,
            error: None,
        },
        diagnostics: SeparationDiagnostics { weak_ratio_alt, weak_ratio_sharp, predicted_gap: gap.predicted },
    })
}

type DetailedRecord = (SeparationRecord, Option<SeparationDiagnostics>);

fn run_pipeline(
    pipe: Pipeline,
    regime: &RegimeExponents,
    s: f64,
    n_lo: u32,
    n_hi: u32,
    cfg: &ExperimentConfig,
) -> Result<Vec<(SeparationRecord, Option<SeparationDiagnostics>)>> {
    cfg.validate()?;
    if !(s > 2.5) {
        return Err(Error::InvalidParameter(format!("s = {s} (need > 5/2)")));
    }
    let mut entries = schedule(regime, s, n_lo, n_hi)?;
    if cfg.force_zero_epsilon {
        for e in &mut entries {
            e.params.epsilon = 0.0;
        }
    }
    let jobs = entries.len();
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<DetailedRecord>>> = Mutex::new(vec![None; jobs]);
    std::thread::scope(|scope| {
        for _ in 0..cfg.n_threads(jobs) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs {
                    break;
                }
                let e = &entries[i];
                let start = Instant::now();
                let res = run_one(&pipe, regime, e.n, e.params, cfg);
                let wall = start.elapsed().as_secs_f64();
                let row = match res {
                    Ok(mut m) => {
                        m.record.wall_time_s = wall;
                        (m.record, Some(m.diagnostics))
                    }
                    Err((grid_n, err)) => (SeparationRecord::failed(e.n, Some(&e.params), grid_n, wall, &err), None),
                };
                out.lock().expect("no worker panics while holding the lock")[i] = Some(row);
            });
        }
    });
    Ok(out.into_inner().expect("workers joined").into_iter().map(|r| r.expect("every job ran")).collect())
}

fn check_alpha(regime: &RegimeExponents, alpha: f64) -> Result<()> {
    if (regime.alpha - alpha).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "regime computed for alpha = {} but the run uses {alpha}",
            regime.alpha
        )));
    }
    if !(0.0..2.0).contains(&alpha) {
        return Err(Error::InvalidOrder(alpha));
    }
    Ok(())
}

/// Separation run for the dispersive Burgers equation, records sorted by `n`.
pub fn run_separation(
    alpha: f64,
    s: f64,
    regime: &RegimeExponents,
    n_lo: u32,
    n_hi: u32,
    cfg: &ExperimentConfig,
) -> Result<Vec<SeparationRecord>> {
    Ok(run_separation_detailed(alpha, s, regime, n_lo, n_hi, cfg)?.into_iter().map(|(r, _)| r).collect())
}

pub fn run_separation_detailed(
    alpha: f64,
    s: f64,
    regime: &RegimeExponents,
    n_lo: u32,
    n_hi: u32,
    cfg: &ExperimentConfig,
) -> Result<Vec<(SeparationRecord, Option<SeparationDiagnostics>)>> {
    check_alpha(regime, alpha)?;
    run_pipeline(Pipeline::Scalar { alpha }, regime, s, n_lo, n_hi, cfg)
}

/// Separation run for the symmetrized system with `γ = |ξ|^{order}`, the
/// ansatz in the first component and velocity equal to the first component.
pub fn run_system_separation(
    s: f64,
    regime: &RegimeExponents,
    gamma_order: f64,
    n_lo: u32,
    n_hi: u32,
    cfg: &ExperimentConfig,
) -> Result<Vec<SeparationRecord>> {
    Ok(run_system_separation_detailed(s, regime, gamma_order, n_lo, n_hi, cfg)?.into_iter().map(|(r, _)| r).collect())
}

pub fn run_system_separation_detailed(
    s: f64,
    regime: &RegimeExponents,
    gamma_order: f64,
    n_lo: u32,
    n_hi: u32,
    cfg: &ExperimentConfig,
) -> Result<Vec<(SeparationRecord, Option<SeparationDiagnostics>)>> {
    check_alpha(regime, gamma_order)?;
    run_pipeline(Pipeline::System { gamma_order }, regime, s, n_lo, n_hi, cfg)
}

pub const CSV_COLUMNS: [&str; 13] = [
    "n",
    "lambda",
    "epsilon",
    "tau",
    "d0",
    "d_tau",
    "d_tau_weak",
    "weak_ratio",
    "support_gap",
    "gap_times_lambda",
    "grid_n",
    "wall_time_s",
    "error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Csv,
    Jsonl,
}

impl RecordFormat {
    pub fn extension(self) -> &'static str {
        match self {
            RecordFormat::Csv => "csv",
            RecordFormat::Jsonl => "jsonl",
        }
    }
}

/// `<experiment>__alpha<α>__s<s>.<ext>`.
pub fn record_file_name(experiment: &str, alpha: f64, s: f64, format: RecordFormat) -> String {
    format!("{experiment}__alpha{alpha:?}__s{s:?}.{}", format.extension())
}

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn records_to_csv(records: &[SeparationRecord]) -> Result<Vec<u8>> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            f(r.lambda),
            f(r.epsilon),
            f(r.tau),
            f(r.d0),
            f(r.d_tau),
            f(r.d_tau_weak),
            f(r.weak_ratio),
            f(r.support_gap),
            f(r.gap_times_lambda),
            r.grid_n.to_string(),
            f(r.wall_time_s),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn records_from_csv(bytes: &[u8]) -> Result<Vec<SeparationRecord>> {
    let mut rd = csv::Reader::from_reader(bytes);
    let header = rd.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::Io(format!("unexpected CSV header {header:?}")));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| Error::Io(e.to_string()))?;
        let num = |i: usize| -> Result<f64> { row[i].parse().map_err(|_| Error::Io(format!("bad number {:?}", &row[i]))) };
        let int = |i: usize| -> Result<u64> { row[i].parse().map_err(|_| Error::Io(format!("bad integer {:?}", &row[i]))) };
        out.push(SeparationRecord {
            n: int(0)? as u32,
            lambda: num(1)?,
            epsilon: num(2)?,
            tau: num(3)?,
            d0: num(4)?,
            d_tau: num(5)?,
            d_tau_weak: num(6)?,
            weak_ratio: num(7)?,
            support_gap: num(8)?,
            gap_times_lambda: num(9)?,
            grid_n: int(10)? as usize,
            wall_time_s: num(11)?,
            error: (!row[12].is_empty()).then(|| row[12].to_string()),
        });
    }
    Ok(out)
}

/// One JSON object per line; NaN is written as `null`.
pub fn records_to_jsonl(records: &[SeparationRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Io(e.to_string()))?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn records_from_jsonl(bytes: &[u8]) -> Result<Vec<SeparationRecord>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Io(e.to_string())))
        .collect()
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp: PathBuf = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let res = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

pub fn export_records(records: &[SeparationRecord], path: &Path, format: RecordFormat) -> Result<()> {
    let bytes = match format {
        RecordFormat::Csv => records_to_csv(records)?,
        RecordFormat::Jsonl => records_to_jsonl(records)?,
    };
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::feasible_exponents;

    fn sample(n: u32) -> SeparationRecord {
        SeparationRecord {
            n,
            lambda: 2f64.powi(n as i32),
            epsilon: 0.1 / 3.0,
            tau: 0.2,
            d0: 1.0 / 7.0,
            d_tau: 0.3,
            d_tau_weak: 1e-3,
            weak_ratio: 7e-3,
            support_gap: 6.6e-3,
            gap_times_lambda: 0.1,
            grid_n: 1024,
            wall_time_s: 0.25,
            error: None,
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let text = String::from_utf8(records_to_csv(&[]).unwrap()).unwrap();
        assert_eq!(text, CSV_COLUMNS.join(",") + "\n");
    }

    #[test]
    fn csv_and_jsonl_round_trip() {
        let mut recs = vec![sample(4), sample(5)];
        recs[1].error = Some("shock suspected".into());
        recs[1].d0 = f64::NAN;
        let back = records_from_csv(&records_to_csv(&recs).unwrap()).unwrap();
        assert_eq!(back[0], recs[0]);
        assert!(back[1].d0.is_nan());
        assert_eq!(back[1].error, recs[1].error);
        let jl = records_to_jsonl(&recs).unwrap();
        assert!(String::from_utf8(jl.clone()).unwrap().contains("\"d0\":null"));
        let back = records_from_jsonl(&jl).unwrap();
        assert_eq!(back[0], recs[0]);
        assert!(back[1].d0.is_nan());
    }

    #[test]
    fn file_name_pattern() {
        assert_eq!(record_file_name("separation", 1.0, 2.6, RecordFormat::Csv), "separation__alpha1.0__s2.6.csv");
    }

    #[test]
    fn grid_policy() {
        let c = ExperimentConfig::default();
        assert_eq!(c.grid_points(16.0), 512);
        assert_eq!(c.grid_points(128.0), 4096);
        let floored = ExperimentConfig { min_grid: 1024, ..c };
        assert_eq!(floored.grid_points(16.0), 1024);
    }

    #[test]
    fn null_run_has_no_separation() {
        let r = feasible_exponents(1.0, 0.5, true).unwrap().exponents().unwrap();
        let cfg = ExperimentConfig { force_zero_epsilon: true, min_grid: 128, ..Default::default() };
        let recs = run_separation(1.0, 2.6, &r, 2, 3, &cfg).unwrap();
        for rec in recs {
            assert!(rec.is_ok(), "{:?}", rec.error);
            assert_eq!(rec.d0, 0.0);
            assert!(rec.d_tau <= 1e-12);
            assert_eq!(rec.weak_ratio, 0.0);
            assert!(rec.support_gap <= 1e-12);
        }
    }

    #[test]
    fn mismatched_regime_is_rejected() {
        let r = feasible_exponents(1.0, 0.5, true).unwrap().exponents().unwrap();
        assert!(run_separation(0.5, 2.6, &r, 3, 4, &ExperimentConfig::default()).is_err());
    }
}

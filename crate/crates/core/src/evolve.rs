//! Time integration: exact linear propagation, integrating-factor RK4 for
//! dispersive Burgers, the symmetrized 2×2 paradifferential system, and
//! pulled-back linear equations.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characteristics::FlowMap;
use crate::error::{Error, Result};
use crate::norms::sobolev_norm_spectrum;
use crate::paradiff::{
    paradiff_adjoint_spectrum, paradiff_apply_spectrum, pullback_symbol, CutoffConfig, GridSymbol,
    LowParts,
};
use crate::spectral::{
    dealias, forward_transform, inverse_real, DispersiveKind, RealField, Spectrum, TorusGrid,
};

/// Solver settings shared by every integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt_max: f64,
    pub cfl: f64,
    pub dealias: bool,
    /// Checkpoint every `store_every` steps (the final state is always kept).
    pub store_every: usize,
    pub dispersive_kind: DispersiveKind,
    /// When false the quadratic term is dropped and only the linear flow runs.
    pub nonlinear: bool,
    /// Growth of `sup|u_x|` over its initial value that counts as a shock.
    pub shock_factor: f64,
    /// Lower bound on `|γ(x,k)| / |k|^order` for the system solver.
    pub ellipticity_floor: f64,
    pub cutoff: CutoffConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_max: 1e-2,
            cfl: 0.4,
            dealias: true,
            store_every: 1,
            dispersive_kind: DispersiveKind::Homogeneous,
            nonlinear: true,
            shock_factor: 50.0,
            ellipticity_floor: 1e-6,
            cutoff: CutoffConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt_max = {}", self.dt_max)));
        }
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(Error::InvalidParameter(format!("cfl = {}", self.cfl)));
        }
        if self.store_every == 0 {
            return Err(Error::InvalidParameter("store_every must be positive".into()));
        }
        if !(self.shock_factor > 1.0) {
            return Err(Error::InvalidParameter(format!("shock_factor = {}", self.shock_factor)));
        }
        Ok(())
    }

    /// `min(dt_max, cfl Δx / max(1e-12, speed))`.
    pub fn time_step(&self, grid: TorusGrid, speed: f64) -> f64 {
        self.dt_max.min(self.cfl * grid.dx() / speed.max(1e-12))
    }
}

/// Uniform time grid: `ceil(t_end / dt0)` steps of equal length.
fn time_grid(t_end: f64, dt0: f64) -> (usize, f64) {
    let steps = ((t_end / dt0) - 1e-9).ceil().max(1.0) as usize;
    (steps, t_end / steps as f64)
}

/// Checkpointed solution of a scalar equation or a 2×2 system.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: TorusGrid,
    times: Vec<f64>,
    states: Vec<Vec<RealField>>,
    /// The integrator's own spectral state at each checkpoint.
    spectra: Vec<Vec<Spectrum>>,
    rates: Vec<Vec<RealField>>,
    /// Transport velocity and its time derivative when it is not the first component.
    velocity: Option<(Vec<RealField>, Vec<RealField>)>,
    config: SolverConfig,
    dt: f64,
}

impl Trajectory {
    /// Assembles a trajectory from checkpoints, e.g. for a prescribed velocity.
    /// Each checkpoint holds one field per component and the matching time derivatives.
    pub fn from_checkpoints(
        times: Vec<f64>,
        states: Vec<Vec<RealField>>,
        rates: Vec<Vec<RealField>>,
        config: SolverConfig,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() || times.len() != rates.len() {
            return Err(Error::InvalidParameter("checkpoint arrays must be non-empty and aligned".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("checkpoint times must increase strictly".into()));
        }
        let grid = states[0]
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty checkpoint".into()))?
            .grid();
        let width = states[0].len();
        for (s, r) in states.iter().zip(&rates) {
            if s.len() != width || r.len() != width {
                return Err(Error::InvalidParameter("component count varies between checkpoints".into()));
            }
            for f in s.iter().chain(r) {
                grid.check_same(&f.grid())?;
            }
        }
        let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        let spectra = states.iter().map(|s| s.iter().map(forward_transform).collect()).collect();
        Ok(Self { grid, times, states, spectra, rates, velocity: None, config, dt })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Time step used by the integrator.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_components(&self) -> usize {
        self.states[0].len()
    }

    /// First component at checkpoint `i`.
    pub fn state(&self, i: usize) -> &RealField {
        &self.states[i][0]
    }

    pub fn components(&self, i: usize) -> &[RealField] {
        &self.states[i]
    }

    /// Spectrum of the first component as held by the integrator, free of
    /// the roundoff a transform round trip would add.
    pub fn spectrum(&self, i: usize) -> &Spectrum {
        &self.spectra[i][0]
    }

    pub fn spectra(&self, i: usize) -> &[Spectrum] {
        &self.spectra[i]
    }

    pub fn rate(&self, i: usize) -> &RealField {
        &self.rates[i][0]
    }

    pub fn rates(&self, i: usize) -> &[RealField] {
        &self.rates[i]
    }

    pub fn final_state(&self) -> &RealField {
        self.state(self.len() - 1)
    }

    pub fn final_components(&self) -> &[RealField] {
        self.components(self.len() - 1)
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectories are non-empty")
    }

    /// Transport velocity at checkpoint `i`.
    pub fn velocity(&self, i: usize) -> &RealField {
        match &self.velocity {
            Some((v, _)) => &v[i],
            None => self.state(i),
        }
    }

    /// Time derivative of the transport velocity at checkpoint `i`.
    pub fn velocity_rate(&self, i: usize) -> &RealField {
        match &self.velocity {
            Some((_, r)) => &r[i],
            None => self.rate(i),
        }
    }
}

/// `∂_t w + H|D|^α w = 0` solved exactly; `t` may be negative.
pub fn linear_propagate(u0: &RealField, alpha: f64, t: f64) -> Result<RealField> {
    linear_propagate_with(u0, alpha, t, DispersiveKind::Homogeneous)
}

pub fn linear_propagate_with(u0: &RealField, alpha: f64, t: f64, kind: DispersiveKind) -> Result<RealField> {
    check_alpha(alpha)?;
    let s = forward_transform(u0);
    let grid = u0.grid();
    let lam = dispersion_rates(grid, alpha, kind);
    let mut out = s;
    for (c, l) in out.coeffs_mut().iter_mut().zip(&lam) {
        *c *= (l * t).exp();
    }
    Ok(inverse_real(&out))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::InvalidOrder(alpha));
    }
    Ok(())
}

/// `i sign(k) w(k)`: Fourier rate of `-H|D|^α` (or `-H⟨D⟩^α`).
fn dispersion_rates(grid: TorusGrid, alpha: f64, kind: DispersiveKind) -> Vec<Complex64> {
    (0..grid.n_points())
        .map(|i| {
            let k = grid.mode(i);
            Complex64::new(0.0, grid.sign(k) * kind.weight(k as f64, alpha))
        })
        .collect()
}

type State = Vec<Spectrum>;

enum LinearPart {
    /// Diagonal rates per FFT index.
    Diagonal(Vec<Complex64>),
    /// `(Φ₁, Φ₂)' = (g Φ₂, -g Φ₁)` per mode.
    Rotation(Vec<f64>),
    None,
}

enum Factors {
    Diagonal(Vec<Complex64>),
    Rotation(Vec<(f64, f64)>),
    None,
}

impl LinearPart {
    fn factors(&self, h: f64) -> Factors {
        match self {
            LinearPart::Diagonal(l) => Factors::Diagonal(l.iter().map(|z| (z * h).exp()).collect()),
            LinearPart::Rotation(g) => Factors::Rotation(g.iter().map(|v| ((v * h).cos(), (v * h).sin())).collect()),
            LinearPart::None => Factors::None,
        }
    }

    fn rate(&self, x: &State) -> State {
        match self {
            LinearPart::Diagonal(l) => {
                let mut out = x[0].clone();
                for (c, z) in out.coeffs_mut().iter_mut().zip(l) {
                    *c *= z;
                }
                vec![out]
            }
            LinearPart::Rotation(g) => {
                let mut a = x[1].clone();
                let mut b = x[0].clone();
                for (c, v) in a.coeffs_mut().iter_mut().zip(g) {
                    *c *= *v;
                }
                for (c, v) in b.coeffs_mut().iter_mut().zip(g) {
                    *c *= -*v;
                }
                vec![a, b]
            }
            LinearPart::None => x.iter().map(|s| Spectrum::zeros(s.grid())).collect(),
        }
    }
}

impl Factors {
    fn apply(&self, x: &State) -> State {
        match self {
            Factors::Diagonal(e) => {
                let mut out = x[0].clone();
                for (c, z) in out.coeffs_mut().iter_mut().zip(e) {
                    *c *= z;
                }
                vec![out]
            }
            Factors::Rotation(cs) => {
                let mut p1 = x[0].clone();
                let mut p2 = x[1].clone();
                for (i, &(c, s)) in cs.iter().enumerate() {
                    let a = x[0].coeffs()[i];
                    let b = x[1].coeffs()[i];
                    p1.coeffs_mut()[i] = a * c + b * s;
                    p2.coeffs_mut()[i] = b * c - a * s;
                }
                vec![p1, p2]
            }
            Factors::None => x.clone(),
        }
    }
}

fn combine(terms: &[(f64, &State)]) -> State {
    let (c0, first) = terms[0];
    let mut out: State = first.iter().map(|s| s.scale(c0)).collect();
    for &(c, x) in &terms[1..] {
        for (o, s) in out.iter_mut().zip(x.iter()) {
            for (a, b) in o.coeffs_mut().iter_mut().zip(s.coeffs()) {
                *a += b * c;
            }
        }
    }
    out
}

fn all_finite(x: &State) -> bool {
    x.iter().all(|s| s.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()))
}

/// One integrating-factor RK4 step of `X' = L X + N(t, X)`.
fn if_rk4_step(
    t: f64,
    h: f64,
    x: &State,
    half: &Factors,
    full: &Factors,
    nl: &mut dyn FnMut(f64, &State) -> Result<State>,
) -> Result<State> {
    let n1 = nl(t, x)?;
    let ex = full.apply(x);
    let e2x = half.apply(x);
    let a = half.apply(&combine(&[(1.0, x), (0.5 * h, &n1)]));
    let n2 = nl(t + 0.5 * h, &a)?;
    let b = combine(&[(1.0, &e2x), (0.5 * h, &n2)]);
    let n3 = nl(t + 0.5 * h, &b)?;
    let e2n3 = half.apply(&n3);
    let c = combine(&[(1.0, &ex), (h, &e2n3)]);
    let n4 = nl(t + h, &c)?;
    let en1 = full.apply(&n1);
    let e2n2 = half.apply(&n2);
    Ok(combine(&[
        (1.0, &ex),
        (h / 6.0, &en1),
        (h / 3.0, &e2n2),
        (h / 3.0, &e2n3),
        (h / 6.0, &n4),
    ]))
}

fn ik_times(s: &Spectrum) -> Spectrum {
    let grid = s.grid();
    let mut out = s.clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        let k = grid.mode(i);
        *c *= if k == grid.nyquist() { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k as f64) };
    }
    out
}

/// `-(1/2) ∂_x (P(P u)²)` in Fourier variables.
fn burgers_term(s: &Spectrum, dealiased: bool) -> Spectrum {
    let p = if dealiased { dealias(s) } else { s.clone() };
    let u = inverse_real(&p);
    let sq = forward_transform(&u.map(|v| v * v));
    let sq = if dealiased { dealias(&sq) } else { sq };
    ik_times(&sq).scale(-0.5)
}

fn solve_scalar(u0: &RealField, alpha: Option<f64>, t_end: f64, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end = {t_end}")));
    }
    if let Some(a) = alpha {
        check_alpha(a)?;
    }
    if !u0.is_finite() {
        return Err(Error::NonFinite);
    }
    let grid = u0.grid();
    let linear = match alpha {
        Some(a) => LinearPart::Diagonal(dispersion_rates(grid, a, cfg.dispersive_kind)),
        None => LinearPart::None,
    };
    let (steps, h) = time_grid(t_end, cfg.time_step(grid, u0.max_abs()));
    let half = linear.factors(0.5 * h);
    let full = linear.factors(h);
    let nonlinear = cfg.nonlinear;
    let dealiased = cfg.dealias;
    let mut nl = move |_t: f64, x: &State| -> Result<State> {
        Ok(vec![if nonlinear { burgers_term(&x[0], dealiased) } else { Spectrum::zeros(x[0].grid()) }])
    };

    let slope = |s: &Spectrum| inverse_real(&ik_times(s)).max_abs();
    let mut x: State = vec![forward_transform(u0)];
    let grad0 = slope(&x[0]).max(1e-6);
    let mut traj = Trajectory {
        grid,
        times: Vec::new(),
        states: Vec::new(),
        spectra: Vec::new(),
        rates: Vec::new(),
        velocity: None,
        config: *cfg,
        dt: h,
    };
    let record = |t: f64, x: &State, traj: &mut Trajectory, nl: &mut dyn FnMut(f64, &State) -> Result<State>| -> Result<()> {
        let rate = combine(&[(1.0, &linear.rate(x)), (1.0, &nl(t, x)?)]);
        traj.times.push(t);
        traj.states.push(vec![inverse_real(&x[0])]);
        traj.spectra.push(x.clone());
        traj.rates.push(vec![inverse_real(&rate[0])]);
        Ok(())
    };
    record(0.0, &x, &mut traj, &mut nl)?;
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * h;
        x = if_rk4_step(t0, h, &x, &half, &full, &mut nl)?;
        let t = step as f64 * h;
        if !all_finite(&x) {
            return Err(Error::StepUnstable { t });
        }
        if nonlinear {
            let g = slope(&x[0]);
            if g > cfg.shock_factor * grad0 {
                return Err(Error::ShockSuspected { t, growth: g / grad0 });
            }
        }
        if step % cfg.store_every == 0 || step == steps {
            record(t, &x, &mut traj, &mut nl)?;
        }
    }
    Ok(traj)
}

/// `∂_t u + u ∂_x u + H|D|^α u = 0` by integrating-factor RK4.
pub fn solve_dispersive_burgers(u0: &RealField, alpha: f64, t_end: f64, cfg: &SolverConfig) -> Result<Trajectory> {
    check_alpha(alpha)?;
    solve_scalar(u0, Some(alpha), t_end, cfg)
}

/// Inviscid Burgers `∂_t u + u ∂_x u = 0` (plain RK4).
pub fn solve_burgers(u0: &RealField, t_end: f64, cfg: &SolverConfig) -> Result<Trajectory> {
    solve_scalar(u0, None, t_end, cfg)
}

/// Closure computing the transport velocity from `(t, Φ₁, Φ₂)`.
pub type VelocityFn = Arc<dyn Fn(f64, &RealField, &RealField) -> RealField + Send + Sync>;

/// Velocity closure of the system solver.
#[derive(Clone)]
pub enum VelocityRule {
    /// `V = Φ₁`.
    FirstComponent,
    /// A prescribed, time-independent velocity.
    Given(RealField),
    Custom(VelocityFn),
}

impl fmt::Debug for VelocityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityRule::FirstComponent => write!(f, "FirstComponent"),
            VelocityRule::Given(_) => write!(f, "Given"),
            VelocityRule::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl VelocityRule {
    pub fn custom(f: impl Fn(f64, &RealField, &RealField) -> RealField + Send + Sync + 'static) -> Self {
        VelocityRule::Custom(Arc::new(f))
    }

    pub fn velocity(&self, t: f64, phi1: &RealField, phi2: &RealField) -> RealField {
        match self {
            VelocityRule::FirstComponent => phi1.clone(),
            VelocityRule::Given(v) => v.clone(),
            VelocityRule::Custom(f) => f(t, phi1, phi2),
        }
    }
}

/// `Re mean_x γ(x, k)` on modes passed by ψ, zero elsewhere.
fn frozen_gamma(gamma: &GridSymbol, cutoff: &CutoffConfig) -> Vec<f64> {
    let grid = gamma.grid();
    let n = grid.n_points();
    (0..n)
        .map(|i| {
            let k = grid.mode(i);
            if k == grid.nyquist() || !cutoff.psi(k) {
                return 0.0;
            }
            if gamma.is_x_independent() {
                gamma.value(0, k).re
            } else {
                gamma.column(k).iter().map(|c| c.re).sum::<f64>() / n as f64
            }
        })
        .collect()
}

fn check_ellipticity(gamma: &GridSymbol, floor: f64) -> Result<()> {
    let grid = gamma.grid();
    let n = grid.n_points();
    let nodes = if gamma.is_x_independent() { 1 } else { n };
    let mut measured = f64::INFINITY;
    for k in 2..=grid.dealias_cutoff() {
        let w = (k as f64).powf(gamma.order());
        for kk in [k, -k] {
            let col = gamma.column(kk);
            for c in col.iter().take(nodes) {
                measured = measured.min(c.norm() / w);
            }
        }
    }
    if measured < floor {
        return Err(Error::EllipticityViolated { measured, floor });
    }
    Ok(())
}

/// Exact linear part of the system: rotation of `Φ₁ + iΦ₂` by `e^{-i γ̄(k) t}`,
/// with `γ̄` the x-average of `γ` on ψ-passed modes.
pub fn system_linear_propagate(
    phi1: &RealField,
    phi2: &RealField,
    gamma: &GridSymbol,
    t: f64,
    cutoff: &CutoffConfig,
) -> Result<(RealField, RealField)> {
    phi1.grid().check_same(&phi2.grid())?;
    phi1.grid().check_same(&gamma.grid())?;
    let lin = LinearPart::Rotation(frozen_gamma(gamma, cutoff));
    let out = lin.factors(t).apply(&vec![forward_transform(phi1), forward_transform(phi2)]);
    Ok((inverse_real(&out[0]), inverse_real(&out[1])))
}

/// Skew transport `(T_V ∂_x φ + ∂_x T_V^⊤ φ) / 2`.
fn skew_transport(low: &LowParts, s: &Spectrum) -> Spectrum {
    let a = low.apply(&ik_times(s));
    let b = ik_times(&low.adjoint(s));
    let mut out = a;
    for (o, v) in out.coeffs_mut().iter_mut().zip(b.coeffs()) {
        *o = 0.5 * (*o + v);
    }
    out
}

/// `∂_t Φ₁ + T_V ∂_x Φ₁ - T_γ Φ₂ = 0`, `∂_t Φ₂ + T_V ∂_x Φ₂ + T_γ Φ₁ = 0`.
///
/// Transport uses the skew part of `T_V ∂_x` and `γ` is quantized by the
/// symmetric part `(T_γ + T_γ^⊤)/2`, so `‖Φ₁‖² + ‖Φ₂‖²` is conserved by the
/// semi-discrete system. The x-averaged part of `γ` is integrated exactly.
pub fn solve_symmetrized_system(
    phi1_0: &RealField,
    phi2_0: &RealField,
    rule: &VelocityRule,
    gamma: &GridSymbol,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = phi1_0.grid();
    grid.check_same(&phi2_0.grid())?;
    grid.check_same(&gamma.grid())?;
    if !(0.0..2.0).contains(&gamma.order()) {
        return Err(Error::InvalidOrder(gamma.order()));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end = {t_end}")));
    }
    check_ellipticity(gamma, cfg.ellipticity_floor)?;
    let cutoff = cfg.cutoff;
    let gbar = frozen_gamma(gamma, &cutoff);
    let exact_rotation = gamma.is_x_independent()
        && (0..grid.n_points()).all(|i| gamma.value(0, grid.mode(i)).im == 0.0);
    let linear = LinearPart::Rotation(gbar.clone());

    let v0 = rule.velocity(0.0, phi1_0, phi2_0);
    let (steps, h) = time_grid(t_end, cfg.time_step(grid, v0.max_abs()));
    let half = linear.factors(0.5 * h);
    let full = linear.factors(h);
    let transport = cfg.nonlinear || !matches!(rule, VelocityRule::FirstComponent);

    let mut nl = |t: f64, x: &State| -> Result<State> {
        let mut r1 = Spectrum::zeros(grid);
        let mut r2 = Spectrum::zeros(grid);
        if transport {
            let p1 = inverse_real(&x[0]);
            let p2 = inverse_real(&x[1]);
            let v = rule.velocity(t, &p1, &p2);
            let low = LowParts::new(&forward_transform(&v));
            r1 = skew_transport(&low, &x[0]).scale(-1.0);
            r2 = skew_transport(&low, &x[1]).scale(-1.0);
        }
        if !exact_rotation {
            // (T_γ + T_γ^⊤)/2 minus its frozen average
            for (src, dst, sign) in [(&x[1], &mut r1, 1.0), (&x[0], &mut r2, -1.0)] {
                let a = paradiff_apply_spectrum(gamma, src, &cutoff)?;
                let b = paradiff_adjoint_spectrum(gamma, src, &cutoff)?;
                for (i, o) in dst.coeffs_mut().iter_mut().enumerate() {
                    let sym = 0.5 * (a.coeffs()[i] + b.coeffs()[i]) - gbar[i] * src.coeffs()[i];
                    *o += sym * sign;
                }
            }
        }
        Ok(vec![r1, r2])
    };

    let custom_velocity = !matches!(rule, VelocityRule::FirstComponent);
    let mut traj = Trajectory {
        grid,
        times: Vec::new(),
        states: Vec::new(),
        spectra: Vec::new(),
        rates: Vec::new(),
        velocity: if custom_velocity { Some((Vec::new(), Vec::new())) } else { None },
        config: *cfg,
        dt: h,
    };
    let record = |t: f64, x: &State, traj: &mut Trajectory, nl: &mut dyn FnMut(f64, &State) -> Result<State>| -> Result<()> {
        let rate = combine(&[(1.0, &linear.rate(x)), (1.0, &nl(t, x)?)]);
        let p: Vec<RealField> = x.iter().map(inverse_real).collect();
        let r: Vec<RealField> = rate.iter().map(inverse_real).collect();
        if let Some((vs, vr)) = traj.velocity.as_mut() {
            // dV/dt by a centered difference along the solution
            let eps = 1e-6;
            let shift = |sgn: f64| -> (RealField, RealField) {
                let a = p[0].add(&r[0].scale(sgn * eps)).expect("same grid");
                let b = p[1].add(&r[1].scale(sgn * eps)).expect("same grid");
                (a, b)
            };
            let (a_plus, b_plus) = shift(1.0);
            let (a_minus, b_minus) = shift(-1.0);
            let vp = rule.velocity(t + eps, &a_plus, &b_plus);
            let vm = rule.velocity(t - eps, &a_minus, &b_minus);
            vs.push(rule.velocity(t, &p[0], &p[1]));
            vr.push(vp.sub(&vm)?.scale(0.5 / eps));
        }
        traj.times.push(t);
        traj.states.push(p);
        traj.spectra.push(x.clone());
        traj.rates.push(r);
        Ok(())
    };

    let mut x: State = vec![forward_transform(phi1_0), forward_transform(phi2_0)];
    record(0.0, &x, &mut traj, &mut nl)?;
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * h;
        x = if_rk4_step(t0, h, &x, &half, &full, &mut nl)?;
        let t = step as f64 * h;
        if !all_finite(&x) {
            return Err(Error::StepUnstable { t });
        }
        if step % cfg.store_every == 0 || step == steps {
            record(t, &x, &mut traj, &mut nl)?;
        }
    }
    Ok(traj)
}

/// A time-dependent family of grid diffeomorphisms.
pub trait FlowPath {
    fn flow_at(&self, t: f64) -> Result<FlowMap>;
}

impl FlowPath for FlowMap {
    fn flow_at(&self, _t: f64) -> Result<FlowMap> {
        Ok(self.clone())
    }
}

impl<F> FlowPath for F
where
    F: Fn(f64) -> Result<FlowMap>,
{
    fn flow_at(&self, t: f64) -> Result<FlowMap> {
        self(t)
    }
}

/// Measured `H^s` growth against the exponential bound `e^{C t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthReport {
    pub sobolev_index: f64,
    /// `max_t ‖u(t)‖_{H^s} / ‖u_0‖_{H^s}`.
    pub growth_factor: f64,
    /// `sup |Re a*|` over checkpoints, on ψ-passed modes.
    pub re_bound: f64,
    /// `sup_{x,k} |∂_x a*(x,k)| (1+|k|)^{-m}` over checkpoints.
    pub x_lipschitz: f64,
    /// `C = re_bound + (|s| + 1) x_lipschitz`.
    pub constant: f64,
    /// `e^{C t_end}`.
    pub bound: f64,
}

impl GrowthReport {
    pub fn holds(&self) -> bool {
        self.growth_factor <= self.bound
    }
}

#[derive(Debug, Clone)]
pub struct PulledBackSolution {
    pub trajectory: Trajectory,
    pub growth: GrowthReport,
}

fn symbol_bounds(a: &GridSymbol, cutoff: &CutoffConfig) -> (f64, f64, f64) {
    let grid = a.grid();
    let n = grid.n_points();
    let dx = grid.dx();
    let mut re: f64 = 0.0;
    let mut lip: f64 = 0.0;
    let mut top: f64 = 0.0;
    for i in 0..n {
        let k = grid.mode(i);
        if k == grid.nyquist() || !cutoff.psi(k) {
            continue;
        }
        let col = a.column(k);
        let w = (1.0 + k.abs() as f64).powf(-a.order());
        for j in 0..n {
            re = re.max(col[j].re.abs());
            top = top.max(col[j].norm());
            let d = (col[(j + 1) % n] - col[j]).norm() / dx;
            lip = lip.max(d * w);
        }
    }
    (re, lip, top)
}

/// `∂_t u + T_{a*} u = 0` where `a*` is `a` pulled back along `χ(t)` at every stage.
pub fn solve_pulled_back(
    u0: &RealField,
    a: &GridSymbol,
    chi: &dyn FlowPath,
    t_end: f64,
    cfg: &SolverConfig,
    s: f64,
) -> Result<PulledBackSolution> {
    cfg.validate()?;
    let grid = u0.grid();
    grid.check_same(&a.grid())?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end = {t_end}")));
    }
    let cutoff = cfg.cutoff;
    let a0 = pullback_symbol(a, &chi.flow_at(0.0)?)?;
    let (_, _, top) = symbol_bounds(&a0, &cutoff);
    let dt0 = cfg.dt_max.min(cfg.cfl * std::f64::consts::PI / top.max(1e-12));
    let (steps, h) = time_grid(t_end, dt0);

    let rhs = |t: f64, x: &Spectrum| -> Result<(Spectrum, GridSymbol)> {
        let sym = pullback_symbol(a, &chi.flow_at(t)?)?;
        Ok((paradiff_apply_spectrum(&sym, x, &cutoff)?.scale(-1.0), sym))
    };
    let real_part = |z: Spectrum| -> Spectrum { forward_transform(&inverse_real(&z)) };

    let norm0 = sobolev_norm_spectrum(&forward_transform(u0), s);
    let mut x = forward_transform(u0);
    let mut times = vec![0.0];
    let mut states = vec![vec![u0.clone()]];
    let mut spectra = vec![vec![x.clone()]];
    let (r0, sym0) = rhs(0.0, &x)?;
    let mut rates = vec![vec![inverse_real(&r0)]];
    let (mut re_bound, mut lip, _) = symbol_bounds(&sym0, &cutoff);
    let mut growth: f64 = 1.0;
    for step in 1..=steps {
        let t = (step - 1) as f64 * h;
        let (k1, _) = rhs(t, &x)?;
        let (k2, _) = rhs(t + 0.5 * h, &x.add(&k1.scale(0.5 * h))?)?;
        let (k3, _) = rhs(t + 0.5 * h, &x.add(&k2.scale(0.5 * h))?)?;
        let (k4, _) = rhs(t + h, &x.add(&k3.scale(h))?)?;
        let incr = k1.add(&k2.scale(2.0))?.add(&k3.scale(2.0))?.add(&k4)?.scale(h / 6.0);
        x = real_part(x.add(&incr)?);
        let tn = step as f64 * h;
        if !x.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::StepUnstable { t: tn });
        }
        if norm0 > 0.0 {
            growth = growth.max(sobolev_norm_spectrum(&x, s) / norm0);
        }
        if step % cfg.store_every == 0 || step == steps {
            let (r, sym) = rhs(tn, &x)?;
            let (re_b, lip_b, _) = symbol_bounds(&sym, &cutoff);
            re_bound = re_bound.max(re_b);
            lip = lip.max(lip_b);
            times.push(tn);
            states.push(vec![inverse_real(&x)]);
            spectra.push(vec![x.clone()]);
            rates.push(vec![inverse_real(&r)]);
        }
    }
    let constant = re_bound + (s.abs() + 1.0) * lip;
    let growth = GrowthReport {
        sobolev_index: s,
        growth_factor: growth,
        re_bound,
        x_lipschitz: lip,
        constant,
        bound: (constant * t_end).exp(),
    };
    let trajectory = Trajectory { grid, times, states, spectra, rates, velocity: None, config: *cfg, dt: h };
    Ok(PulledBackSolution { trajectory, growth })
}

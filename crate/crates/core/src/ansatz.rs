//! Bump profile, the two-parameter initial data family, admissible regime
//! exponents and the velocity-hypothesis check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::VelocityRule;
use crate::spectral::{wrap_to_pi, RealField, TorusGrid};

fn g(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, `σ(1/2) = 1/2`.
pub fn smooth_step(t: f64) -> f64 {
    let a = g(t);
    let b = g(1.0 - t);
    a / (a + b)
}

/// Even `C^∞` bump: 1 on `|x| <= 1/2`, 0 on `|x| >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    pub plateau_halfwidth: f64,
    pub support_halfwidth: f64,
}

pub fn make_bump() -> BumpProfile {
    BumpProfile { plateau_halfwidth: 0.5, support_halfwidth: 1.0 }
}

impl Default for BumpProfile {
    fn default() -> Self {
        make_bump()
    }
}

impl BumpProfile {
    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        if a <= self.plateau_halfwidth {
            1.0
        } else if a >= self.support_halfwidth {
            0.0
        } else {
            let w = self.support_halfwidth - self.plateau_halfwidth;
            smooth_step((self.support_halfwidth - a) / w)
        }
    }

    /// The bump placed at the origin of the torus, `x ↦ ω(c · x_wrapped)`.
    pub fn sample(&self, grid: TorusGrid, scale: f64) -> RealField {
        RealField::from_fn(grid, |x| self.eval(scale * wrap_to_pi(x)))
    }
}

/// One member `(λ, ε, τ, s, α)` of the ansatz family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub lambda: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub s: f64,
    pub alpha: f64,
}

impl AnsatzParams {
    /// `ε = 0` is accepted so that null runs can reuse the pipeline.
    pub fn new(lambda: f64, epsilon: f64, tau: f64, s: f64, alpha: f64) -> Result<Self> {
        let p = Self { lambda, epsilon, tau, s, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.lambda >= 4.0 && self.lambda.is_finite()) {
            return bad(format!("lambda = {} (need >= 4)", self.lambda));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon = {}", self.epsilon));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau = {}", self.tau));
        }
        if !(self.s > 2.5) {
            return bad(format!("s = {} (need > 5/2)", self.s));
        }
        if !(0.0..2.0).contains(&self.alpha) {
            return Err(Error::InvalidOrder(self.alpha));
        }
        Ok(())
    }

    /// Smallest grid that resolves the concentrated bump.
    pub fn required_points(&self) -> usize {
        (32.0 * self.lambda).ceil() as usize
    }
}

/// `u⁰ = λ^{1/2-s} ω(λx)` and `v⁰ = u⁰ + ε ω(x)` on the torus.
pub fn make_ansatz_pair(p: &AnsatzParams, grid: TorusGrid) -> Result<(RealField, RealField)> {
    p.validate()?;
    let required = p.required_points();
    if grid.n_points() < required {
        return Err(Error::UnderResolved { n_points: grid.n_points(), lambda: p.lambda, required });
    }
    let omega = make_bump();
    let amp = p.lambda.powf(0.5 - p.s);
    let u0 = RealField::from_fn(grid, |x| amp * omega.eval(p.lambda * wrap_to_pi(x)));
    let v0 = RealField::from_fn(grid, |x| {
        let xw = wrap_to_pi(x);
        amp * omega.eval(p.lambda * xw) + p.epsilon * omega.eval(xw)
    });
    Ok((u0, v0))
}

/// Power-law exponents: `ε = λ^{-δ₁}`, `τ = λ^{-δ₂}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeExponents {
    pub delta1: f64,
    pub delta2: f64,
    pub alpha: f64,
    pub eps_prime: f64,
    pub want_c1_ratio: bool,
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Constraints written as `a · (δ₁, δ₂) > b`.
fn constraints(alpha: f64, eps_prime: f64, want_c1: bool) -> Vec<([f64; 2], f64)> {
    let p = pos(alpha - 1.0);
    let mut c = vec![
        ([1.0, 0.0], 0.0),
        ([0.0, 1.0], p),
        ([-1.0, -1.0], -1.0),
        ([1.0, 2.0], alpha),
    ];
    if want_c1 {
        c.push(([1.0, 0.0], 1.0 - p - eps_prime));
    }
    c
}

impl RegimeExponents {
    /// Unchecked constructor; see [`RegimeExponents::slacks`].
    pub fn new(delta1: f64, delta2: f64, alpha: f64, eps_prime: f64, want_c1_ratio: bool) -> Self {
        Self { delta1, delta2, alpha, eps_prime, want_c1_ratio }
    }

    /// Slack of every admissibility inequality; all must be positive.
    pub fn slacks(&self) -> Vec<f64> {
        constraints(self.alpha, self.eps_prime, self.want_c1_ratio)
            .iter()
            .map(|(a, b)| a[0] * self.delta1 + a[1] * self.delta2 - b)
            .collect()
    }

    pub fn is_admissible(&self) -> bool {
        self.slacks().iter().all(|&s| s > 0.0)
    }

    /// `s - 1 + (α-1)⁺ + sign · ε'`.
    pub fn weak_exponent(&self, s: f64, sign: f64) -> f64 {
        s - 1.0 + pos(self.alpha - 1.0) + sign * self.eps_prime
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    Feasible(RegimeExponents),
    Infeasible,
}

impl Feasibility {
    pub fn exponents(&self) -> Option<RegimeExponents> {
        match self {
            Feasibility::Feasible(r) => Some(*r),
            Feasibility::Infeasible => None,
        }
    }
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d.abs() < 1e-14 {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][c] = r[row];
        }
        *o = det(&mc) / d;
    }
    Some(out)
}

/// Finds admissible `(δ₁, δ₂)` at the analytic center of the feasible polygon.
pub fn feasible_exponents(alpha: f64, eps_prime: f64, want_c1_ratio: bool) -> Result<Feasibility> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidParameter(format!("alpha = {alpha}")));
    }
    if !(eps_prime >= 0.0 && eps_prime.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps_prime = {eps_prime}")));
    }
    let cons = constraints(alpha, eps_prime, want_c1_ratio);
    let norms: Vec<f64> = cons.iter().map(|(a, _)| (a[0] * a[0] + a[1] * a[1]).sqrt()).collect();

    // Chebyshev center: maximize t subject to a·δ - b >= t‖a‖, by vertex enumeration.
    let mut best: Option<[f64; 3]> = None;
    let m = cons.len();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let rows = [i, j, k].map(|c| [cons[c].0[0], cons[c].0[1], -norms[c]]);
                let rhs = [i, j, k].map(|c| cons[c].1);
                let Some(v) = solve3(rows, rhs) else { continue };
                let ok = cons
                    .iter()
                    .zip(&norms)
                    .all(|((a, b), n)| a[0] * v[0] + a[1] * v[1] - b - v[2] * n >= -1e-12);
                if ok && best.is_none_or(|b| v[2] > b[2]) {
                    best = Some(v);
                }
            }
        }
    }
    let Some(start) = best else { return Ok(Feasibility::Infeasible) };
    if start[2] <= 1e-12 {
        return Ok(Feasibility::Infeasible);
    }

    // Newton on the log barrier, started from the Chebyshev center.
    let slack = |d: [f64; 2]| -> Vec<f64> { cons.iter().map(|(a, b)| a[0] * d[0] + a[1] * d[1] - b).collect() };
    let barrier = |d: [f64; 2]| -> f64 {
        let s = slack(d);
        if s.iter().any(|&v| v <= 0.0) {
            f64::NEG_INFINITY
        } else {
            s.iter().map(|v| v.ln()).sum()
        }
    };
    let mut d = [start[0], start[1]];
    for _ in 0..100 {
        let s = slack(d);
        let mut grad = [0.0; 2];
        let mut hess = [[0.0; 2]; 2];
        for ((a, _), sv) in cons.iter().zip(&s) {
            for r in 0..2 {
                grad[r] += a[r] / sv;
                for c in 0..2 {
                    hess[r][c] += a[r] * a[c] / (sv * sv);
                }
            }
        }
        let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
        let step = [
            (hess[1][1] * grad[0] - hess[0][1] * grad[1]) / det,
            (-hess[1][0] * grad[0] + hess[0][0] * grad[1]) / det,
        ];
        let f0 = barrier(d);
        let mut t = 1.0;
        while t > 1e-12 {
            let trial = [d[0] + t * step[0], d[1] + t * step[1]];
            if barrier(trial) >= f0 {
                d = trial;
                break;
            }
            t *= 0.5;
        }
        if (step[0].abs() + step[1].abs()) * t < 1e-14 {
            break;
        }
    }
    let r = RegimeExponents::new(d[0], d[1], alpha, eps_prime, want_c1_ratio);
    if !r.is_admissible() {
        return Ok(Feasibility::Infeasible);
    }
    Ok(Feasibility::Feasible(r))
}

/// One scheduled ansatz with its regime diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub n: u32,
    pub params: AnsatzParams,
    /// `λ ε τ`, which must grow.
    pub lambda_eps_tau: f64,
    /// `λ^α ε τ²`, which must shrink.
    pub dispersion_budget: f64,
    /// `τ λ^{(α-1)⁺}`, which must shrink.
    pub transport_budget: f64,
}

/// `λ_n = 2^n`, `ε_n = λ_n^{-δ₁}`, `τ_n = λ_n^{-δ₂}` for `n_lo <= n <= n_hi`.
pub fn schedule(r: &RegimeExponents, s: f64, n_lo: u32, n_hi: u32) -> Result<Vec<ScheduleEntry>> {
    if !(2 <= n_lo && n_lo < n_hi && n_hi <= 8) {
        return Err(Error::InvalidParameter(format!("schedule range [{n_lo}, {n_hi}] outside 2 <= lo < hi <= 8")));
    }
    if !r.is_admissible() {
        return Err(Error::InvalidParameter("regime exponents violate the admissibility inequalities".into()));
    }
    let p = pos(r.alpha - 1.0);
    let entries: Vec<ScheduleEntry> = (n_lo..=n_hi)
        .map(|n| {
            let lambda = 2f64.powi(n as i32);
            let epsilon = lambda.powf(-r.delta1);
            let tau = lambda.powf(-r.delta2);
            let params = AnsatzParams::new(lambda, epsilon, tau, s, r.alpha)?;
            Ok(ScheduleEntry {
                n,
                params,
                lambda_eps_tau: lambda * epsilon * tau,
                dispersion_budget: lambda.powf(r.alpha) * epsilon * tau * tau,
                transport_budget: tau * lambda.powf(p),
            })
        })
        .collect::<Result<_>>()?;
    for w in entries.windows(2) {
        let ok = w[1].lambda_eps_tau > w[0].lambda_eps_tau
            && w[1].dispersion_budget < w[0].dispersion_budget
            && (p == 0.0 || w[1].transport_budget < w[0].transport_budget);
        if !ok {
            return Err(Error::InvalidParameter(format!("regime trends fail between n = {} and {}", w[0].n, w[1].n)));
        }
    }
    Ok(entries)
}

/// Bounds `(min, max)` of `|∫₀^t D_uV(s, 0)[ω] ds| / t` over the plateau nodes.
pub fn check_h1(rule: &VelocityRule, omega: &BumpProfile, t: f64, grid: TorusGrid) -> Result<(f64, f64)> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t}")));
    }
    const STEP: f64 = 1e-6;
    const PANELS: usize = 16;
    let zero = RealField::zeros(grid);
    let dir = omega.sample(grid, 1.0);
    let probe = dir.scale(STEP);
    let derivative = |s: f64| -> Result<RealField> {
        let hi = rule.velocity(s, &probe, &zero);
        let lo = rule.velocity(s, &zero, &zero);
        Ok(hi.sub(&lo)?.scale(1.0 / STEP))
    };
    // composite Simpson
    let h = t / PANELS as f64;
    let mut integral = vec![0.0; grid.n_points()];
    for i in 0..=PANELS {
        let w = if i == 0 || i == PANELS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let d = derivative(i as f64 * h)?;
        for (acc, v) in integral.iter_mut().zip(d.samples()) {
            *acc += w * v * h / 3.0;
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (j, v) in integral.iter().enumerate() {
        if wrap_to_pi(grid.node(j)).abs() <= omega.plateau_halfwidth {
            let c = v.abs() / t;
            lo = lo.min(c);
            hi = hi.max(c);
        }
    }
    Ok((lo, hi))
}

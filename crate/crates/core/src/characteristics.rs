//! Characteristic flows `dχ/dt = u(t, χ)` of a computed trajectory.
//!
//! Velocities are evaluated by trigonometric interpolation in space and by
//! cubic Hermite interpolation in time, using the stored states and their
//! time derivatives. Positions are kept as lifts to the real line.

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::norms::sobolev_norm;
use crate::spectral::{
    evaluate_offgrid, evaluate_offgrid_with_derivative, forward_transform, RealField, Spectrum,
    TorusGrid,
};

const TIME_SLACK: f64 = 1e-12;
const DEFAULT_SUBSTEPS: usize = 8;

/// Sampled characteristic map `x ↦ χ(t_to, t_from, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    t_from: f64,
    t_to: f64,
    seeds: Vec<f64>,
    positions: Vec<f64>,
    jacobian: Vec<f64>,
    /// Set when the seeds are exactly the nodes of this grid.
    grid: Option<TorusGrid>,
}

impl FlowMap {
    pub fn identity(grid: TorusGrid) -> Self {
        let nodes = grid.nodes();
        Self {
            t_from: 0.0,
            t_to: 0.0,
            positions: nodes.clone(),
            seeds: nodes,
            jacobian: vec![1.0; grid.n_points()],
            grid: Some(grid),
        }
    }

    /// Samples a given map and its derivative at the grid nodes.
    pub fn from_map(grid: TorusGrid, map: impl Fn(f64) -> f64, dmap: impl Fn(f64) -> f64) -> Result<Self> {
        let seeds = grid.nodes();
        let positions: Vec<f64> = seeds.iter().map(|&x| map(x)).collect();
        let jacobian: Vec<f64> = seeds.iter().map(|&x| dmap(x)).collect();
        Self::checked(seeds, positions, jacobian, Some(grid), 0.0, 0.0, true)
    }

    /// `χ(x) = x + d(x)` with a periodic displacement `d`.
    pub fn from_displacement(d: &RealField) -> Result<Self> {
        let grid = d.grid();
        let seeds = grid.nodes();
        let positions = seeds.iter().zip(d.samples()).map(|(x, v)| x + v).collect();
        let jacobian = d.derivative(1).samples().iter().map(|v| 1.0 + v).collect();
        Self::checked(seeds, positions, jacobian, Some(grid), 0.0, 0.0, true)
    }

    fn checked(
        seeds: Vec<f64>,
        positions: Vec<f64>,
        jacobian: Vec<f64>,
        grid: Option<TorusGrid>,
        t_from: f64,
        t_to: f64,
        given_map: bool,
    ) -> Result<Self> {
        if positions.iter().chain(&jacobian).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let fm = Self { t_from, t_to, seeds, positions, jacobian, grid };
        let m = fm.min_jacobian();
        if !(m > 0.0) {
            return Err(if given_map {
                Error::NotDiffeomorphism { min_jacobian: m }
            } else {
                Error::FlowDegenerate { min_jacobian: m }
            });
        }
        Ok(fm)
    }

    pub fn t_from(&self) -> f64 {
        self.t_from
    }

    pub fn t_to(&self) -> f64 {
        self.t_to
    }

    pub fn seeds(&self) -> &[f64] {
        &self.seeds
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn jacobian(&self) -> &[f64] {
        &self.jacobian
    }

    pub fn grid(&self) -> Option<TorusGrid> {
        self.grid
    }

    pub fn min_jacobian(&self) -> f64 {
        self.jacobian.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_jacobian(&self) -> f64 {
        self.jacobian.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Periodic displacement `χ(x_j) - x_j` as a grid field.
    pub fn displacement(&self) -> Option<RealField> {
        let grid = self.grid?;
        let d = self.positions.iter().zip(&self.seeds).map(|(p, s)| p - s).collect();
        Some(RealField::from_vec_unchecked(grid, d))
    }
}

/// Space-time interpolant of the transport velocity of a trajectory.
struct VelocityField<'a> {
    times: &'a [f64],
    values: Vec<Spectrum>,
    rates: Vec<Spectrum>,
}

impl<'a> VelocityField<'a> {
    fn new(traj: &'a Trajectory) -> Self {
        let n = traj.len();
        Self {
            times: traj.times(),
            values: (0..n).map(|i| forward_transform(traj.velocity(i))).collect(),
            rates: (0..n).map(|i| forward_transform(traj.velocity_rate(i))).collect(),
        }
    }

    /// `(u, u_x)` at `(t, x)`.
    fn eval(&self, t: f64, x: f64) -> (f64, f64) {
        let n = self.times.len();
        if n == 1 {
            return evaluate_offgrid_with_derivative(&self.values[0], x);
        }
        let i = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.times[i + 1] - self.times[i];
        let s = (t - self.times[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = (s3 - 2.0 * s2 + s) * h;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = (s3 - s2) * h;
        let (u0, d0) = evaluate_offgrid_with_derivative(&self.values[i], x);
        let (r0, e0) = evaluate_offgrid_with_derivative(&self.rates[i], x);
        let (u1, d1) = evaluate_offgrid_with_derivative(&self.values[i + 1], x);
        let (r1, e1) = evaluate_offgrid_with_derivative(&self.rates[i + 1], x);
        (
            h00 * u0 + h10 * r0 + h01 * u1 + h11 * r1,
            h00 * d0 + h10 * e0 + h01 * d1 + h11 * e1,
        )
    }
}

fn check_time(traj: &Trajectory, t: f64) -> Result<()> {
    let (start, end) = (traj.t_start(), traj.t_end());
    if !(t >= start - TIME_SLACK && t <= end + TIME_SLACK) {
        return Err(Error::TimeOutOfRange { t, start, end });
    }
    Ok(())
}

/// Breakpoints from `t_from` to `t_to` (either direction) through the checkpoints.
fn breakpoints(times: &[f64], t_from: f64, t_to: f64) -> Vec<f64> {
    let (lo, hi) = if t_from <= t_to { (t_from, t_to) } else { (t_to, t_from) };
    let mut pts = vec![t_from];
    let inner: Vec<f64> = times.iter().copied().filter(|&t| t > lo + TIME_SLACK && t < hi - TIME_SLACK).collect();
    if t_from <= t_to {
        pts.extend(inner);
    } else {
        pts.extend(inner.into_iter().rev());
    }
    pts.push(t_to);
    pts
}

/// RK4 for position and, optionally, the variational jacobian.
fn integrate_seed(vel: &VelocityField, pts: &[f64], substeps: usize, x0: f64, with_jacobian: bool) -> (f64, f64) {
    let mut x = x0;
    let mut j = 1.0;
    for w in pts.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        if h == 0.0 {
            continue;
        }
        for m in 0..substeps {
            let t = w[0] + m as f64 * h;
            let (u1, g1) = vel.eval(t, x);
            let (u2, g2) = vel.eval(t + 0.5 * h, x + 0.5 * h * u1);
            let (u3, g3) = vel.eval(t + 0.5 * h, x + 0.5 * h * u2);
            let (u4, g4) = vel.eval(t + h, x + h * u3);
            if with_jacobian {
                let k1 = g1 * j;
                let k2 = g2 * (j + 0.5 * h * k1);
                let k3 = g3 * (j + 0.5 * h * k2);
                let k4 = g4 * (j + h * k3);
                j += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            x += h / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4);
        }
    }
    (x, j)
}

/// Flow from arbitrary seeds; the jacobian solves `dJ/dt = u_x(t, χ) J`.
pub fn integrate_flow(traj: &Trajectory, t_from: f64, t_to: f64, seeds: &[f64]) -> Result<FlowMap> {
    integrate_flow_with(traj, t_from, t_to, seeds, DEFAULT_SUBSTEPS)
}

/// As [`integrate_flow`] with an explicit number of RK4 substeps per checkpoint interval.
pub fn integrate_flow_with(
    traj: &Trajectory,
    t_from: f64,
    t_to: f64,
    seeds: &[f64],
    substeps: usize,
) -> Result<FlowMap> {
    check_time(traj, t_from)?;
    check_time(traj, t_to)?;
    let substeps = substeps.max(1);
    if t_from == t_to {
        return FlowMap::checked(seeds.to_vec(), seeds.to_vec(), vec![1.0; seeds.len()], None, t_from, t_to, false);
    }
    let vel = VelocityField::new(traj);
    let pts = breakpoints(traj.times(), t_from, t_to);
    let (positions, jacobian) = seeds.iter().map(|&x| integrate_seed(&vel, &pts, substeps, x, true)).unzip();
    FlowMap::checked(seeds.to_vec(), positions, jacobian, None, t_from, t_to, false)
}

/// Flow seeded at the grid nodes; the jacobian is the spectral derivative
/// of the periodic displacement.
pub fn integrate_grid_flow(traj: &Trajectory, t_from: f64, t_to: f64) -> Result<FlowMap> {
    let grid = traj.grid();
    check_time(traj, t_from)?;
    check_time(traj, t_to)?;
    let seeds = grid.nodes();
    if t_from == t_to {
        let mut id = FlowMap::identity(grid);
        id.t_from = t_from;
        id.t_to = t_to;
        return Ok(id);
    }
    let vel = VelocityField::new(traj);
    let pts = breakpoints(traj.times(), t_from, t_to);
    let positions: Vec<f64> =
        seeds.iter().map(|&x| integrate_seed(&vel, &pts, DEFAULT_SUBSTEPS, x, false).0).collect();
    let disp = RealField::from_vec_unchecked(grid, positions.iter().zip(&seeds).map(|(p, s)| p - s).collect());
    let jacobian = disp.derivative(1).samples().iter().map(|v| 1.0 + v).collect();
    FlowMap::checked(seeds, positions, jacobian, Some(grid), t_from, t_to, false)
}

/// Integrates back from `t_to` to `t_from`, starting at the mapped positions.
pub fn invert_flow(fm: &FlowMap, traj: &Trajectory) -> Result<FlowMap> {
    integrate_flow(traj, fm.t_to, fm.t_from, &fm.positions)
}

/// `(‖h∘χ‖_{H^s} / ‖h‖_{H^s}, its reciprocal)` for a grid-seeded flow.
pub fn compose_norm_ratio(h: &RealField, fm: &FlowMap, s: f64) -> Result<(f64, f64)> {
    let grid = fm
        .grid
        .ok_or_else(|| Error::InvalidParameter("composition needs a flow seeded at the grid nodes".into()))?;
    grid.check_same(&h.grid())?;
    let base = sobolev_norm(h, s);
    if base == 0.0 {
        return Err(Error::ZeroField);
    }
    let sh = forward_transform(h);
    let composed = RealField::from_vec_unchecked(grid, fm.positions.iter().map(|&y| evaluate_offgrid(&sh, y)).collect());
    let r = sobolev_norm(&composed, s) / base;
    Ok((r, 1.0 / r))
}

/// `max_x |u(t_end, χ(t_end, 0, x)) - u(0, x)|` for a pure transport trajectory.
pub fn transport_check(traj: &Trajectory, seeds: &[f64]) -> Result<f64> {
    let fm = integrate_flow(traj, traj.t_start(), traj.t_end(), seeds)?;
    let s0 = forward_transform(traj.state(0));
    let s1 = forward_transform(traj.final_state());
    Ok(seeds
        .iter()
        .zip(fm.positions())
        .map(|(&x, &y)| (evaluate_offgrid(&s1, y) - evaluate_offgrid(&s0, x)).abs())
        .fold(0.0, f64::max))
}

//! Torus grids, discrete Fourier transforms and Fourier multipliers.
//!
//! Coefficients follow the Fourier-series normalization
//! `coeff(k) = (1/N) Σ_j u(x_j) e^{-i k x_j}`, so a multiplier with symbol
//! `m(k)` acts literally as `coeff(k) -> m(k) coeff(k)`. Spectra are stored
//! in FFT order: index `i` holds mode `i` for `i <= N/2` and mode `i - N`
//! otherwise. The Nyquist mode `N/2` is its own mirror image; built-in
//! multipliers treat `sign(N/2) = 0` there so that real fields stay real.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-8;

/// Uniform grid on the torus `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    n_points: usize,
}

impl TorusGrid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 8 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "need an even number of points >= 8, got {n_points}"
            )));
        }
        Ok(Self { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn period(&self) -> f64 {
        2.0 * PI
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.n_points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_points as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// Largest mode kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n_points / 3) as i64
    }

    pub fn nyquist(&self) -> i64 {
        (self.n_points / 2) as i64
    }

    /// Mode number stored at FFT index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        if i <= self.n_points / 2 {
            i as i64
        } else {
            i as i64 - self.n_points as i64
        }
    }

    /// FFT index of mode `k`, for `k` in `(-N/2, N/2]`.
    pub fn index(&self, k: i64) -> usize {
        debug_assert!(k > -self.nyquist() && k <= self.nyquist(), "mode {k} out of range");
        k.rem_euclid(self.n_points as i64) as usize
    }

    pub fn contains_mode(&self, k: i64) -> bool {
        k > -self.nyquist() && k <= self.nyquist()
    }

    /// Sign convention shared by the built-in multipliers: `sign(0) = 0` and
    /// the Nyquist mode is treated as even.
    pub fn sign(&self, k: i64) -> f64 {
        if k == self.nyquist() {
            0.0
        } else {
            k.signum() as f64
        }
    }

    pub(crate) fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch { left: self.n_points, right: other.n_points });
        }
        Ok(())
    }
}

/// Real grid function on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: TorusGrid,
    samples: Vec<f64>,
}

impl RealField {
    pub fn new(grid: TorusGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.n_points()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, samples })
    }

    pub(crate) fn from_vec_unchecked(grid: TorusGrid, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.n_points());
        Self { grid, samples }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..grid.n_points()).map(|j| f(grid.node(j))).collect();
        Self { grid, samples }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, samples: vec![0.0; grid.n_points()] }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self { grid, samples: vec![c; grid.n_points()] }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L² norm, `(Σ_j |u_j|² Δx)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, samples })
    }

    pub fn add(&self, other: &RealField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RealField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &RealField) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `j`-th spectral derivative (odd derivatives annihilate the Nyquist mode).
    pub fn derivative(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        let m = Multiplier::derivative(order);
        let s = apply_multiplier(&forward_transform(self), &m);
        inverse_real(&s)
    }
}

/// Discrete Fourier coefficients of a grid function.
#[derive(Clone, PartialEq)]
pub struct Spectrum {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectrum").field("n_points", &self.grid.n_points()).finish()
    }
}

impl Spectrum {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.n_points()] }
    }

    /// Wraps coefficients given in FFT order.
    pub fn from_fft_order(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "{} coefficients for a grid of {} points",
                coeffs.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    /// Builds a spectrum from `(mode, coefficient)` pairs; the mirror mode is
    /// filled with the conjugate so the result represents a real field.
    pub fn from_modes(grid: TorusGrid, modes: &[(i64, Complex64)]) -> Self {
        let mut s = Self::zeros(grid);
        for &(k, c) in modes {
            if k == 0 {
                s.coeffs[0] += Complex64::new(c.re, 0.0);
            } else if k.abs() == grid.nyquist() {
                s.coeffs[grid.index(grid.nyquist())] += Complex64::new(c.re, 0.0);
            } else {
                s.coeffs[grid.index(k)] += c;
                s.coeffs[grid.index(-k)] += c.conj();
            }
        }
        s
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if self.grid.contains_mode(k) {
            self.coeffs[self.grid.index(k)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn set_coeff(&mut self, k: i64, c: Complex64) {
        let i = self.grid.index(k);
        self.coeffs[i] = c;
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Largest violation of `coeff(-k) = conj(coeff(k))`, including the
    /// imaginary parts of the self-conjugate modes 0 and N/2.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n_points();
        let mut defect = self.coeffs[0].im.abs().max(self.coeffs[n / 2].im.abs());
        for i in 1..n / 2 {
            defect = defect.max((self.coeffs[n - i] - self.coeffs[i].conj()).norm());
        }
        defect
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn add(&self, other: &Spectrum) -> Result<Spectrum> {
        self.grid.check_same(&other.grid)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Spectrum { grid: self.grid, coeffs })
    }

    pub fn sub(&self, other: &Spectrum) -> Result<Spectrum> {
        self.grid.check_same(&other.grid)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Spectrum { grid: self.grid, coeffs })
    }

    pub fn scale(&self, c: f64) -> Spectrum {
        Spectrum { grid: self.grid, coeffs: self.coeffs.iter().map(|z| z * c).collect() }
    }

    /// Keeps only modes accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(i64) -> bool) -> Spectrum {
        let grid = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if keep(grid.mode(i)) { c } else { Complex64::new(0.0, 0.0) })
            .collect();
        Spectrum { grid, coeffs }
    }
}

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, PlanPair>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plans(n: usize) -> PlanPair {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        if let Some(p) = cache.get(&n) {
            return p.clone();
        }
        let pair = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
        cache.insert(n, pair.clone());
        pair
    })
}

/// Forward transform with `1/N` normalization.
pub fn forward_transform(u: &RealField) -> Spectrum {
    let n = u.grid.n_points();
    let mut buf: Vec<Complex64> = u.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plans(n).0.process(&mut buf);
    let inv = 1.0 / n as f64;
    for c in &mut buf {
        *c *= inv;
    }
    Spectrum { grid: u.grid, coeffs: buf }
}

/// Inverse transform; fails if the spectrum does not represent a real field.
pub fn inverse_transform(s: &Spectrum) -> Result<RealField> {
    let scale = s.max_abs();
    if scale > 0.0 {
        let defect = s.hermitian_defect();
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::NonHermitianSpectrum { defect });
        }
    }
    Ok(inverse_real(s))
}

/// Inverse transform that keeps the real part without checking symmetry.
/// Used internally where symmetry holds by construction.
pub(crate) fn inverse_real(s: &Spectrum) -> RealField {
    let mut buf = s.coeffs.clone();
    plans(s.grid.n_points()).1.process(&mut buf);
    RealField { grid: s.grid, samples: buf.into_iter().map(|c| c.re).collect() }
}

/// Inverse transform of an arbitrary (not necessarily Hermitian) spectrum.
pub(crate) fn inverse_complex(s: &Spectrum) -> Vec<Complex64> {
    let mut buf = s.coeffs.clone();
    plans(s.grid.n_points()).1.process(&mut buf);
    buf
}

/// Forward transform of complex samples with `1/N` normalization.
pub(crate) fn forward_complex(grid: TorusGrid, samples: &[Complex64]) -> Spectrum {
    let n = grid.n_points();
    let mut buf = samples.to_vec();
    plans(n).0.process(&mut buf);
    let inv = 1.0 / n as f64;
    for c in &mut buf {
        *c *= inv;
    }
    Spectrum { grid, coeffs: buf }
}

/// Homogeneous `|D|^α` or inhomogeneous `⟨D⟩^α` weight in the dispersive term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersiveKind {
    #[default]
    Homogeneous,
    Inhomogeneous,
}

impl DispersiveKind {
    pub fn weight(self, k: f64, alpha: f64) -> f64 {
        match self {
            DispersiveKind::Homogeneous => k.abs().powf(alpha),
            DispersiveKind::Inhomogeneous => (1.0 + k * k).powf(alpha / 2.0),
        }
    }
}

/// Requested multiplier family.
#[derive(Clone)]
pub enum MultiplierKind {
    Identity,
    /// `-i sign(k)`.
    Hilbert,
    /// `|k|^α`.
    FracAbs { alpha: f64 },
    /// `(1 + k²)^{s/2}`.
    Bessel { s: f64 },
    /// `-i sign(k) w(k)` with `w = |k|^α` or `⟨k⟩^α`: the dispersive operator `H|D|^α`.
    Dispersion { alpha: f64, kind: DispersiveKind },
    /// `exp(i sign(k) w(k) t)`: the exact flow of `∂_t w + H|D|^α w = 0`.
    LinearPhase { alpha: f64, t: f64, kind: DispersiveKind },
    /// `(ik)^n`.
    Derivative { order: u32 },
    Custom { order: f64, symbol: Arc<dyn Fn(i64) -> Complex64 + Send + Sync> },
}

impl fmt::Debug for MultiplierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiplierKind::Identity => write!(f, "Identity"),
            MultiplierKind::Hilbert => write!(f, "Hilbert"),
            MultiplierKind::FracAbs { alpha } => write!(f, "FracAbs({alpha})"),
            MultiplierKind::Bessel { s } => write!(f, "Bessel({s})"),
            MultiplierKind::Dispersion { alpha, kind } => write!(f, "Dispersion({alpha}, {kind:?})"),
            MultiplierKind::LinearPhase { alpha, t, kind } => {
                write!(f, "LinearPhase({alpha}, {t}, {kind:?})")
            }
            MultiplierKind::Derivative { order } => write!(f, "Derivative({order})"),
            MultiplierKind::Custom { order, .. } => write!(f, "Custom(order {order})"),
        }
    }
}

/// Fourier multiplier with declared order `m` and a recorded constant `C`
/// such that `|symbol(k)| <= C (1 + |k|)^m`.
#[derive(Debug, Clone)]
pub struct Multiplier {
    kind: MultiplierKind,
    order: f64,
    bound: f64,
}

fn check_dispersive_order(alpha: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::InvalidOrder(alpha));
    }
    Ok(())
}

/// Builds a multiplier, validating the dispersive order where it applies.
pub fn make_multiplier(kind: MultiplierKind) -> Result<Multiplier> {
    let (order, bound) = match &kind {
        MultiplierKind::Identity | MultiplierKind::Hilbert => (0.0, 1.0),
        MultiplierKind::FracAbs { alpha } | MultiplierKind::Dispersion { alpha, .. } => {
            check_dispersive_order(*alpha)?;
            // (1+k^2)^{α/2} <= 2^{α/2} (1+|k|)^α covers both weights
            (*alpha, 2f64.powf(alpha / 2.0))
        }
        MultiplierKind::LinearPhase { alpha, .. } => {
            check_dispersive_order(*alpha)?;
            (0.0, 1.0)
        }
        MultiplierKind::Bessel { s } => (*s, if *s >= 0.0 { 1.0 } else { 2f64.powf(-s / 2.0) }),
        MultiplierKind::Derivative { order } => (*order as f64, 1.0),
        MultiplierKind::Custom { order, .. } => (*order, f64::INFINITY),
    };
    Ok(Multiplier { kind, order, bound })
}

impl Multiplier {
    pub fn identity() -> Self {
        Multiplier { kind: MultiplierKind::Identity, order: 0.0, bound: 1.0 }
    }

    pub fn derivative(order: u32) -> Self {
        Multiplier { kind: MultiplierKind::Derivative { order }, order: order as f64, bound: 1.0 }
    }

    pub fn bessel(s: f64) -> Self {
        make_multiplier(MultiplierKind::Bessel { s }).expect("bessel multipliers are total")
    }

    pub fn hilbert() -> Self {
        Multiplier { kind: MultiplierKind::Hilbert, order: 0.0, bound: 1.0 }
    }

    /// Custom symbol; its bound is measured on `grid`.
    pub fn custom(
        grid: TorusGrid,
        order: f64,
        symbol: impl Fn(i64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        let symbol: Arc<dyn Fn(i64) -> Complex64 + Send + Sync> = Arc::new(symbol);
        let mut m = Multiplier { kind: MultiplierKind::Custom { order, symbol }, order, bound: 0.0 };
        m.bound = m.measured_bound(grid);
        m
    }

    pub fn kind(&self) -> &MultiplierKind {
        &self.kind
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `sup_k |symbol(k)| (1 + |k|)^{-order}` over the grid's modes.
    pub fn measured_bound(&self, grid: TorusGrid) -> f64 {
        (0..grid.n_points())
            .map(|i| {
                let k = grid.mode(i);
                self.symbol(grid, k).norm() * (1.0 + k.abs() as f64).powf(-self.order)
            })
            .fold(0.0, f64::max)
    }

    /// Symbol value at mode `k` on `grid`.
    pub fn symbol(&self, grid: TorusGrid, k: i64) -> Complex64 {
        let sgn = grid.sign(k);
        let kf = k as f64;
        let i = Complex64::new(0.0, 1.0);
        match &self.kind {
            MultiplierKind::Identity => Complex64::new(1.0, 0.0),
            MultiplierKind::Hilbert => -i * sgn,
            MultiplierKind::FracAbs { alpha } => Complex64::new(kf.abs().powf(*alpha), 0.0),
            MultiplierKind::Bessel { s } => Complex64::new((1.0 + kf * kf).powf(s / 2.0), 0.0),
            MultiplierKind::Dispersion { alpha, kind } => -i * sgn * kind.weight(kf, *alpha),
            MultiplierKind::LinearPhase { alpha, t, kind } => {
                Complex64::from_polar(1.0, sgn * kind.weight(kf, *alpha) * t)
            }
            MultiplierKind::Derivative { order } => {
                if order % 2 == 1 && k == grid.nyquist() {
                    Complex64::new(0.0, 0.0)
                } else {
                    (i * kf).powu(*order)
                }
            }
            MultiplierKind::Custom { symbol, .. } => {
                if k == grid.nyquist() {
                    // average of the two aliases, real part keeps the field real
                    let c = 0.5 * (symbol(k) + symbol(-k));
                    Complex64::new(c.re, 0.0)
                } else {
                    symbol(k)
                }
            }
        }
    }
}

/// `coeff(k) -> symbol(k) coeff(k)`.
pub fn apply_multiplier(s: &Spectrum, m: &Multiplier) -> Spectrum {
    let grid = s.grid;
    let coeffs = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| m.symbol(grid, grid.mode(i)) * c)
        .collect();
    Spectrum { grid, coeffs }
}

/// Applies a multiplier to a real field.
pub fn apply_to_field(u: &RealField, m: &Multiplier) -> RealField {
    inverse_real(&apply_multiplier(&forward_transform(u), m))
}

/// Zeroes every mode above the 2/3-rule cutoff.
pub fn dealias(s: &Spectrum) -> Spectrum {
    let cut = s.grid.dealias_cutoff();
    s.filter(|k| k.abs() <= cut)
}

/// Trigonometric interpolant `Σ_k coeff(k) e^{ikx}` at an arbitrary point.
///
/// Only the non-negative modes are read, so the spectrum is taken to be
/// Hermitian. The Nyquist coefficient contributes `Re(c) cos(N x / 2)`, which
/// keeps the interpolant real and exact at the nodes.
pub fn evaluate_offgrid(s: &Spectrum, x: f64) -> f64 {
    let n = s.grid.n_points();
    let half = n / 2;
    let z = Complex64::from_polar(1.0, x);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in (1..half).rev() {
        acc = acc * z + s.coeffs[i];
    }
    acc *= z;
    s.coeffs[0].re + 2.0 * acc.re + s.coeffs[half].re * (half as f64 * x).cos()
}

/// Off-grid evaluation at many points.
pub fn evaluate_offgrid_many(s: &Spectrum, xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| evaluate_offgrid(s, x)).collect()
}

/// Evaluates the interpolant and its first derivative at `x`.
pub(crate) fn evaluate_offgrid_with_derivative(s: &Spectrum, x: f64) -> (f64, f64) {
    let n = s.grid.n_points();
    let half = n / 2;
    let z = Complex64::from_polar(1.0, x);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut dacc = Complex64::new(0.0, 0.0);
    for i in (1..half).rev() {
        acc = acc * z + s.coeffs[i];
        dacc = dacc * z + s.coeffs[i] * Complex64::new(0.0, i as f64);
    }
    acc *= z;
    dacc *= z;
    let hx = half as f64 * x;
    let value = s.coeffs[0].re + 2.0 * acc.re + s.coeffs[half].re * hx.cos();
    let deriv = 2.0 * dacc.re - s.coeffs[half].re * half as f64 * hx.sin();
    (value, deriv)
}

/// Smallest representative of `x` in `[-π, π)`.
pub fn wrap_to_pi(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = (x + PI).rem_euclid(two_pi) - PI;
    if y >= PI {
        y -= two_pi;
    }
    y
}

//! Paralinearization symbols of the water-waves system, good unknowns and the
//! symmetrizer commutation check.
//!
//! In one dimension every symbol is an explicit function of `η'`, `η''` and
//! `ξ`, so the full table (principal and subprincipal parts) is available and
//! can be quantized. In two dimensions only the principal parts are evaluated,
//! pointwise, from sampled gradients.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::experiments::write_atomic;
use crate::norms::sobolev_norm_spectrum;
use crate::paradiff::{paradiff_apply_spectrum, paraproduct, CutoffConfig, GridSymbol};
use crate::spectral::{apply_to_field, make_multiplier, MultiplierKind, RealField, Spectrum};

/// Free-surface elevation: a grid field on the circle, or sampled gradients
/// `∇η` at arbitrary points of the plane.
#[derive(Debug, Clone)]
pub enum Elevation {
    Line(RealField),
    Plane { points: Vec<[f64; 2]>, gradient: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaylorCoefficient {
    Constant(f64),
    /// One value per elevation sample.
    Samples(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SurfaceState {
    pub elevation: Elevation,
    pub gravity_g: f64,
    pub surface_tension: bool,
    pub taylor_a: TaylorCoefficient,
}

impl SurfaceState {
    /// Capillary state on the circle with `g = 1`, `a = 1`.
    pub fn line(eta: RealField) -> Self {
        Self { elevation: Elevation::Line(eta), gravity_g: 1.0, surface_tension: true, taylor_a: TaylorCoefficient::Constant(1.0) }
    }

    pub fn plane(points: Vec<[f64; 2]>, gradient: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() != gradient.len() {
            return Err(Error::InvalidParameter(format!(
                "{} points but {} gradient samples",
                points.len(),
                gradient.len()
            )));
        }
        if gradient.iter().chain(&points).flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            elevation: Elevation::Plane { points, gradient },
            gravity_g: 1.0,
            surface_tension: true,
            taylor_a: TaylorCoefficient::Constant(1.0),
        })
    }

    /// Switches to the pure-gravity problem with Taylor coefficient `a`.
    pub fn gravity(mut self, taylor_a: TaylorCoefficient) -> Self {
        self.surface_tension = false;
        self.taylor_a = taylor_a;
        self
    }

    pub fn dimension(&self) -> usize {
        match self.elevation {
            Elevation::Line(_) => 1,
            Elevation::Plane { .. } => 2,
        }
    }

    fn n_samples(&self) -> usize {
        match &self.elevation {
            Elevation::Line(eta) => eta.grid().n_points(),
            Elevation::Plane { points, .. } => points.len(),
        }
    }

    fn positions(&self) -> Vec<Vec<f64>> {
        match &self.elevation {
            Elevation::Line(eta) => eta.grid().nodes().into_iter().map(|x| vec![x]).collect(),
            Elevation::Plane { points, .. } => points.iter().map(|p| p.to_vec()).collect(),
        }
    }

    fn gradients(&self) -> Vec<Vec<f64>> {
        match &self.elevation {
            Elevation::Line(eta) => eta.derivative(1).samples().iter().map(|&g| vec![g]).collect(),
            Elevation::Plane { gradient, .. } => gradient.iter().map(|g| g.to_vec()).collect(),
        }
    }

    fn taylor_samples(&self) -> Result<Vec<f64>> {
        let n = self.n_samples();
        let a = match &self.taylor_a {
            TaylorCoefficient::Constant(c) => vec![*c; n],
            TaylorCoefficient::Samples(v) if v.len() == n => v.clone(),
            TaylorCoefficient::Samples(v) => {
                return Err(Error::InvalidParameter(format!("{} Taylor samples for {n} points", v.len())))
            }
        };
        let min_a = a.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min_a > 0.0) {
            return Err(Error::TaylorSignViolation { min_a });
        }
        Ok(a)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_frequency(state: &SurfaceState, xi: &[f64]) -> Result<()> {
    if xi.len() != state.dimension() {
        return Err(Error::InvalidParameter(format!(
            "frequency of dimension {} for a {}-dimensional surface",
            xi.len(),
            state.dimension()
        )));
    }
    if xi.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroFrequency);
    }
    Ok(())
}

fn principal_lambda(grad: &[f64], xi: &[f64]) -> f64 {
    let g2 = dot(grad, grad);
    let x2 = dot(xi, xi);
    let gx = dot(grad, xi);
    ((1.0 + g2) * x2 - gx * gx).max(0.0).sqrt()
}

/// Principal Dirichlet–Neumann symbol at every sample point.
pub fn dn_principal(state: &SurfaceState, xi: &[f64]) -> Result<Vec<f64>> {
    check_frequency(state, xi)?;
    Ok(state.gradients().iter().map(|g| principal_lambda(g, xi)).collect())
}

/// Every symbol at one point, for the one-dimensional surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSymbols {
    pub lambda1: Complex64,
    pub lambda0: Complex64,
    pub alpha1: Complex64,
    pub l2: Complex64,
    pub l1: Complex64,
    pub q: Complex64,
    pub p_half: Complex64,
    pub p_mhalf: Complex64,
    pub gamma32: Complex64,
    pub gamma12: Complex64,
}

impl LineSymbols {
    pub fn lambda(&self) -> Complex64 {
        self.lambda1 + self.lambda0
    }

    pub fn l(&self) -> Complex64 {
        self.l2 + self.l1
    }

    pub fn p(&self) -> Complex64 {
        self.p_half + self.p_mhalf
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma32 + self.gamma12
    }
}

/// Closed forms in terms of `e1 = η'`, `e2 = η''`. At `ξ = 0` every symbol is
/// set to zero; that mode is never passed by the frequency cutoff.
pub fn line_symbols(e1: f64, e2: f64, xi: f64) -> LineSymbols {
    let zero = Complex64::new(0.0, 0.0);
    if xi == 0.0 {
        return LineSymbols {
            lambda1: zero,
            lambda0: zero,
            alpha1: zero,
            l2: zero,
            l1: zero,
            q: Complex64::new(1.0, 0.0),
            p_half: zero,
            p_mhalf: zero,
            gamma32: zero,
            gamma12: zero,
        };
    }
    let i = Complex64::i();
    let a = xi.abs();
    let sg = xi.signum();
    let w = 1.0 + e1 * e1;
    let sa = a.sqrt();

    let lambda1 = a;
    let alpha1 = (a + i * e1 * xi) * w.powf(-0.5);
    let dx_alpha1 = e2 * (i * xi * w.powf(-0.5) - (a + i * e1 * xi) * e1 * w.powf(-1.5));
    let lambda0 = w / (2.0 * a) * (e1 * dx_alpha1 + alpha1 * e2 + i * sg * dx_alpha1);

    let l2 = xi * xi * w.powf(-1.5);
    let l1 = 3.0 * i * xi * e1 * e2 * w.powf(-2.5);
    let q = w.powf(-0.5);
    let p_half = w.powf(-1.25) * sa;
    let gamma32 = a.powf(1.5) * w.powf(-0.75);
    let gamma12 = sa * w.powf(-0.75) * lambda0.re / 2.0 - 0.5 * i * (-2.25 * sg * sa * e1 * e2 * w.powf(-1.75));
    let dxi_gamma32 = 1.5 * sg * sa * w.powf(-0.75);
    let dx_p_half = -2.5 * sa * e1 * e2 * w.powf(-2.25);
    let p_mhalf = (q * l1 - gamma12 * p_half + i * dxi_gamma32 * dx_p_half) / gamma32;

    LineSymbols {
        lambda1: lambda1.into(),
        lambda0,
        alpha1,
        l2: l2.into(),
        l1,
        q: q.into(),
        p_half: p_half.into(),
        p_mhalf,
        gamma32: gamma32.into(),
        gamma12,
    }
}

/// Symbols tabulated over `(sample point, frequency)`, row-major in the point.
/// Subprincipal parts are only present for one-dimensional surfaces.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    pub positions: Vec<Vec<f64>>,
    pub frequencies: Vec<Vec<f64>>,
    pub lambda1: Vec<Complex64>,
    pub l2: Vec<Complex64>,
    pub q: Vec<Complex64>,
    pub p_half: Vec<Complex64>,
    pub gamma32: Vec<Complex64>,
    pub lambda0: Option<Vec<Complex64>>,
    pub alpha1: Option<Vec<Complex64>>,
    pub l1: Option<Vec<Complex64>>,
    pub p_mhalf: Option<Vec<Complex64>>,
    pub gamma12: Option<Vec<Complex64>>,
    /// `min γ^{(3/2)} / |ξ|^{3/2}` over the table.
    pub ellipticity: f64,
}

impl SymbolTable {
    pub fn n_positions(&self) -> usize {
        self.positions.len()
    }

    pub fn n_frequencies(&self) -> usize {
        self.frequencies.len()
    }

    pub fn at(&self, field: &[Complex64], point: usize, freq: usize) -> Complex64 {
        field[point * self.frequencies.len() + freq]
    }

    fn columns(&self) -> Vec<(&'static str, &[Complex64])> {
        let mut cols: Vec<(&'static str, &[Complex64])> = vec![
            ("lambda1", &self.lambda1),
            ("l2", &self.l2),
            ("q", &self.q),
            ("p_half", &self.p_half),
            ("gamma32", &self.gamma32),
        ];
        let optional = [
            ("lambda0", &self.lambda0),
            ("alpha1", &self.alpha1),
            ("l1", &self.l1),
            ("p_mhalf", &self.p_mhalf),
            ("gamma12", &self.gamma12),
        ];
        for (name, v) in optional {
            if let Some(v) = v {
                cols.push((name, v));
            }
        }
        cols
    }

    /// One row per `(point, frequency)`; complex fields split into `_re`/`_im`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let d = self.positions.first().map_or(1, |p| p.len());
        let mut header: Vec<String> = Vec::new();
        if d == 1 {
            header.extend(["x".to_string(), "xi".to_string()]);
        } else {
            header.extend(["x1", "x2", "xi1", "xi2"].map(String::from));
        }
        let cols = self.columns();
        for (name, _) in &cols {
            header.push(format!("{name}_re"));
            header.push(format!("{name}_im"));
        }
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for (pi, p) in self.positions.iter().enumerate() {
            for (fi, f) in self.frequencies.iter().enumerate() {
                let mut row: Vec<String> = p.iter().chain(f).map(|v| format!("{v:.16e}")).collect();
                for (_, v) in &cols {
                    let c = self.at(v, pi, fi);
                    row.push(format!("{:.16e}", c.re));
                    row.push(format!("{:.16e}", c.im));
                }
                w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
            }
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn export_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv()?)
    }
}

/// Nonzero modes `±1, …, ±N/3` of the elevation grid, as frequency samples.
pub fn grid_frequencies(state: &SurfaceState) -> Result<Vec<Vec<f64>>> {
    match &state.elevation {
        Elevation::Line(eta) => {
            let c = eta.grid().dealias_cutoff();
            Ok((-c..=c).filter(|&k| k != 0).map(|k| vec![k as f64]).collect())
        }
        Elevation::Plane { .. } => Err(Error::InvalidParameter("planar surfaces need explicit frequencies".into())),
    }
}

/// Surface-tension symbol table at the given frequencies.
pub fn st_symbols(state: &SurfaceState, frequencies: &[Vec<f64>]) -> Result<SymbolTable> {
    if !state.surface_tension {
        return Err(Error::InvalidParameter("surface-tension symbols need a capillary state".into()));
    }
    for xi in frequencies {
        check_frequency(state, xi)?;
    }
    let positions = state.positions();
    let grads = state.gradients();
    let cap = positions.len() * frequencies.len();
    let mut t = SymbolTable {
        positions,
        frequencies: frequencies.to_vec(),
        lambda1: Vec::with_capacity(cap),
        l2: Vec::with_capacity(cap),
        q: Vec::with_capacity(cap),
        p_half: Vec::with_capacity(cap),
        gamma32: Vec::with_capacity(cap),
        lambda0: None,
        alpha1: None,
        l1: None,
        p_mhalf: None,
        gamma12: None,
        ellipticity: f64::INFINITY,
    };
    match &state.elevation {
        Elevation::Line(eta) => {
            let e2 = eta.derivative(2);
            let mut lambda0 = Vec::with_capacity(cap);
            let mut alpha1 = Vec::with_capacity(cap);
            let mut l1 = Vec::with_capacity(cap);
            let mut p_mhalf = Vec::with_capacity(cap);
            let mut gamma12 = Vec::with_capacity(cap);
            for (g, &h) in grads.iter().zip(e2.samples()) {
                for xi in frequencies {
                    let s = line_symbols(g[0], h, xi[0]);
                    t.lambda1.push(s.lambda1);
                    t.l2.push(s.l2);
                    t.q.push(s.q);
                    t.p_half.push(s.p_half);
                    t.gamma32.push(s.gamma32);
                    lambda0.push(s.lambda0);
                    alpha1.push(s.alpha1);
                    l1.push(s.l1);
                    p_mhalf.push(s.p_mhalf);
                    gamma12.push(s.gamma12);
                    t.ellipticity = t.ellipticity.min(s.gamma32.re / xi[0].abs().powf(1.5));
                }
            }
            t.lambda0 = Some(lambda0);
            t.alpha1 = Some(alpha1);
            t.l1 = Some(l1);
            t.p_mhalf = Some(p_mhalf);
            t.gamma12 = Some(gamma12);
        }
        Elevation::Plane { .. } => {
            for g in &grads {
                let w = 1.0 + dot(g, g);
                for xi in frequencies {
                    let lam = principal_lambda(g, xi);
                    let gx = dot(g, xi);
                    let l2 = w.powf(-0.5) * (dot(xi, xi) - gx * gx / w);
                    let gamma = (l2 * lam).sqrt();
                    t.lambda1.push(lam.into());
                    t.l2.push(l2.into());
                    t.q.push(w.powf(-0.5).into());
                    t.p_half.push((w.powf(-1.25) * lam.sqrt()).into());
                    t.gamma32.push(gamma.into());
                    t.ellipticity = t.ellipticity.min(gamma / dot(xi, xi).sqrt().powf(1.5));
                }
            }
        }
    }
    Ok(t)
}

/// Gravity-problem symbols `λ = λ^{(1)}`, `γ = √(aλ)`, `q = √(a/λ)`.
#[derive(Debug, Clone)]
pub struct GravitySymbols {
    pub positions: Vec<Vec<f64>>,
    pub frequencies: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub q: Vec<f64>,
}

pub fn gravity_symbols(state: &SurfaceState, frequencies: &[Vec<f64>]) -> Result<GravitySymbols> {
    if state.surface_tension {
        return Err(Error::InvalidParameter("gravity symbols need a state without surface tension".into()));
    }
    for xi in frequencies {
        check_frequency(state, xi)?;
    }
    let a = state.taylor_samples()?;
    let grads = state.gradients();
    let cap = grads.len() * frequencies.len();
    let mut out = GravitySymbols {
        positions: state.positions(),
        frequencies: frequencies.to_vec(),
        lambda: Vec::with_capacity(cap),
        gamma: Vec::with_capacity(cap),
        q: Vec::with_capacity(cap),
    };
    for (g, &aj) in grads.iter().zip(&a) {
        for xi in frequencies {
            let lam = principal_lambda(g, xi);
            out.lambda.push(lam);
            out.gamma.push((aj * lam).sqrt());
            out.q.push((aj / lam).sqrt());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoodUnknownForm {
    /// `U = ψ − T_B η`.
    SurfaceTension,
    /// `U = V + T_{η'} B`, with `V` passed in place of `ψ`.
    Gravity,
}

pub fn good_unknown(psi: &RealField, eta: &RealField, b: &RealField, form: GoodUnknownForm) -> Result<RealField> {
    psi.grid().check_same(&eta.grid())?;
    psi.grid().check_same(&b.grid())?;
    match form {
        GoodUnknownForm::SurfaceTension => psi.sub(&paraproduct(b, eta)?),
        GoodUnknownForm::Gravity => psi.add(&paraproduct(&eta.derivative(1), b)?),
    }
}

/// Vertical and horizontal velocity traces with the Dirichlet–Neumann
/// operator replaced by `|D|`, which is exact only for a flat surface.
pub fn linearized_traces(eta: &RealField, psi: &RealField) -> Result<(RealField, RealField)> {
    eta.grid().check_same(&psi.grid())?;
    let e1 = eta.derivative(1);
    let p1 = psi.derivative(1);
    let dpsi = apply_to_field(psi, &make_multiplier(MultiplierKind::FracAbs { alpha: 1.0 })?);
    let b: Vec<f64> = e1
        .samples()
        .iter()
        .zip(p1.samples())
        .zip(dpsi.samples())
        .map(|((g, p), d)| (g * p + d) / (1.0 + g * g))
        .collect();
    let b = RealField::new(eta.grid(), b)?;
    let v = p1.sub(&b.mul(&e1)?)?;
    Ok((b, v))
}

/// Residual ratios of the symmetrizer relations at each probe frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutationReport {
    pub probes: Vec<i64>,
    /// `‖(T_p T_λ − T_γ T_q) u‖_{L²} / ‖u‖_{L²}`.
    pub dn_pair: Vec<f64>,
    /// `‖(T_q T_l − T_γ T_p) u‖_{H^{-1/2}} / ‖u‖_{L²}`.
    pub tension_pair: Vec<f64>,
    /// `‖(T_q T_λ − T_γ T_q) u‖_{L²} / ‖u‖_{L²}`, orders 1 and 3/2.
    pub printed_pair: Vec<f64>,
}

impl CommutationReport {
    pub fn dn_envelope(&self) -> f64 {
        self.dn_pair.iter().cloned().fold(0.0, f64::max)
    }

    pub fn tension_envelope(&self) -> f64 {
        self.tension_pair.iter().cloned().fold(0.0, f64::max)
    }
}

fn line_symbol(
    eta: &RealField,
    order: f64,
    pick: impl Fn(&LineSymbols) -> Complex64 + Send + Sync + 'static,
) -> Result<GridSymbol> {
    let fields = vec![eta.derivative(1), eta.derivative(2)];
    GridSymbol::from_fields(eta.grid(), order, fields, move |c, xi| pick(&line_symbols(c[0], c[1], xi)))
}

/// Quantizes both sides of each relation and applies them to `cos(kx)`.
pub fn verify_commutation(eta: &RealField, probes: &[i64], cutoff: &CutoffConfig) -> Result<CommutationReport> {
    let grid = eta.grid();
    let reach = (1.0 + cutoff.epsilon1).powi(2);
    for &k in probes {
        if k < 2 || (k as f64) * reach >= grid.nyquist() as f64 {
            return Err(Error::InvalidParameter(format!("probe {k} does not fit on N = {}", grid.n_points())));
        }
    }
    let lambda = line_symbol(eta, 1.0, |s| s.lambda())?;
    let l = line_symbol(eta, 2.0, |s| s.l())?;
    let q = line_symbol(eta, 0.0, |s| s.q)?;
    let p = line_symbol(eta, 0.5, |s| s.p())?;
    let gamma = line_symbol(eta, 1.5, |s| s.gamma())?;
    let compose = |a: &GridSymbol, b: &GridSymbol, u: &Spectrum| -> Result<Spectrum> {
        paradiff_apply_spectrum(a, &paradiff_apply_spectrum(b, u, cutoff)?, cutoff)
    };
    let mut report = CommutationReport { probes: probes.to_vec(), dn_pair: vec![], tension_pair: vec![], printed_pair: vec![] };
    for &k in probes {
        let u = Spectrum::from_modes(grid, &[(k, Complex64::new(0.5, 0.0))]);
        let un = sobolev_norm_spectrum(&u, 0.0);
        let gq = compose(&gamma, &q, &u)?;
        let d1 = compose(&p, &lambda, &u)?.sub(&gq)?;
        let d2 = compose(&q, &l, &u)?.sub(&compose(&gamma, &p, &u)?)?;
        let d3 = compose(&q, &lambda, &u)?.sub(&gq)?;
        report.dn_pair.push(sobolev_norm_spectrum(&d1, 0.0) / un);
        report.tension_pair.push(sobolev_norm_spectrum(&d2, -0.5) / un);
        report.printed_pair.push(sobolev_norm_spectrum(&d3, 0.0) / un);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn dn_principal_examples() {
        let g = TorusGrid::new(32).unwrap();
        let st = SurfaceState::line(RealField::from_fn(g, |x| 0.3 * (2.0 * x).sin()));
        for v in dn_principal(&st, &[3.0]).unwrap() {
            assert!((v - 3.0).abs() < 1e-14);
        }
        assert_eq!(dn_principal(&st, &[0.0]).unwrap_err(), Error::ZeroFrequency);
        let flat = SurfaceState::plane(vec![[0.0, 0.0]], vec![[0.0, 0.0]]).unwrap();
        assert!((dn_principal(&flat, &[3.0, 4.0]).unwrap()[0] - 5.0).abs() < 1e-14);
        let tilted = SurfaceState::plane(vec![[0.0, 0.0]], vec![[1.0, 0.0]]).unwrap();
        assert!((dn_principal(&tilted, &[0.0, 1.0]).unwrap()[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn flat_surface_collapse() {
        for xi in [-7.0, 1.0, 5.0] {
            let s = line_symbols(0.0, 0.0, xi);
            let a: f64 = f64::abs(xi);
            assert_eq!(s.q, c(1.0));
            assert_eq!(s.p(), c(a.sqrt()));
            assert_eq!(s.gamma(), c(a.powf(1.5)));
            assert_eq!(s.lambda0, c(0.0));
            assert_eq!(s.l1, c(0.0));
            assert_eq!(s.p_mhalf, c(0.0));
        }
    }

    #[test]
    fn l2_at_tilted_point() {
        let g = TorusGrid::new(64).unwrap();
        let st = SurfaceState::line(RealField::from_fn(g, |x| 0.1 * x.sin()));
        let t = st_symbols(&st, &[vec![4.0]]).unwrap();
        let expect = 16.0 * 1.01f64.powf(-1.5);
        assert!((t.at(&t.l2, 0, 0).re - expect).abs() < 1e-12);
    }

    #[test]
    fn gravity_examples() {
        let g = TorusGrid::new(16).unwrap();
        let freqs = vec![vec![4.0]];
        let st = SurfaceState::line(RealField::zeros(g)).gravity(TaylorCoefficient::Constant(1.0));
        let s1 = gravity_symbols(&st, &freqs).unwrap();
        assert!((s1.gamma[0] - 2.0).abs() < 1e-15 && (s1.q[0] - 0.5).abs() < 1e-15);
        let st4 = SurfaceState::line(RealField::zeros(g)).gravity(TaylorCoefficient::Constant(4.0));
        let s4 = gravity_symbols(&st4, &freqs).unwrap();
        assert!((s4.gamma[0] - 2.0 * s1.gamma[0]).abs() < 1e-15);
        assert!((s4.q[0] * s4.gamma[0] - 4.0).abs() < 1e-14);
        let bad = SurfaceState::line(RealField::zeros(g)).gravity(TaylorCoefficient::Constant(-0.5));
        assert_eq!(gravity_symbols(&bad, &freqs).unwrap_err(), Error::TaylorSignViolation { min_a: -0.5 });
    }

    #[test]
    fn traces_on_flat_surface() {
        let g = TorusGrid::new(32).unwrap();
        let (b, v) = linearized_traces(&RealField::zeros(g), &RealField::from_fn(g, |x| x.cos())).unwrap();
        for j in 0..32 {
            let x = g.node(j);
            assert!((b.samples()[j] - x.cos()).abs() < 1e-13);
            assert!((v.samples()[j] + x.sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn good_unknown_trivial_cases() {
        let g = TorusGrid::new(32).unwrap();
        let psi = RealField::from_fn(g, |x| (3.0 * x).sin());
        let eta = RealField::from_fn(g, |x| (8.0 * x).cos());
        let zero = RealField::zeros(g);
        let u = good_unknown(&psi, &eta, &zero, GoodUnknownForm::SurfaceTension).unwrap();
        assert_eq!(u.samples(), psi.samples());
        let u = good_unknown(&psi, &zero, &eta, GoodUnknownForm::SurfaceTension).unwrap();
        assert_eq!(u.samples(), psi.samples());
    }

    #[test]
    fn flat_commutation_vanishes() {
        let g = TorusGrid::new(256).unwrap();
        let r = verify_commutation(&RealField::zeros(g), &[8, 16, 32], &CutoffConfig::default()).unwrap();
        assert!(r.dn_envelope() < 1e-12);
        assert!(r.tension_envelope() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = TorusGrid::new(8).unwrap();
        let st = SurfaceState::line(RealField::zeros(g));
        let t = st_symbols(&st, &[vec![1.0], vec![2.0]]).unwrap();
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 16);
        assert!(lines[0].starts_with("x,xi,lambda1_re,lambda1_im"));
    }
}

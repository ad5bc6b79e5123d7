//! Paraproducts, paradifferential quantization, Bony remainders,
//! paracomposition and pulled-back symbols.
//!
//! Quantization of a symbol `a(x, ξ)` follows
//! `(T_a u)^(ξ) = Σ_η θ(ξ-η, η) ψ(η) â(ξ-η, η) û(η)` with the sharp cutoffs
//! `θ(ζ, η) = 1_{|ζ| <= ε₁|η|}` and `ψ(η) = 1_{|η| > psi_threshold}`.
//! Output modes that fall outside `(-N/2, N/2)` are dropped, as is the
//! Nyquist mode on input and output.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::characteristics::FlowMap;
use crate::error::{Error, Result};
use crate::norms::{block_of, block_projection, dyadic_decompose, low_pass, max_block, sobolev_norm_spectrum};
use crate::spectral::{
    dealias, evaluate_offgrid, forward_complex, forward_transform, inverse_complex, inverse_real,
    RealField, Spectrum, TorusGrid,
};

/// Pointwise symbol formula: coefficient values at a point and a frequency.
pub type SymbolFormula = Arc<dyn Fn(&[f64], f64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Values {
    /// x-independent: one value per FFT index.
    Uniform(Vec<Complex64>),
    /// x-dependent, computed on demand from coefficient fields.
    Fields,
    /// Row-major `(node j, FFT index i)` table with no continuous evaluator.
    Table(Vec<Complex64>),
}

/// A symbol sampled at grid nodes and integer modes.
///
/// Symbols built from coefficient fields (`x ↦ c_i(x)`) and a formula can be
/// evaluated anywhere, which is what pulling back along a diffeomorphism
/// needs. Table-only symbols are exact on the grid but not off it.
#[derive(Clone)]
pub struct GridSymbol {
    grid: TorusGrid,
    order: f64,
    seminorm: f64,
    values: Values,
    fields: Vec<RealField>,
    field_spectra: Vec<Spectrum>,
    formula: Option<SymbolFormula>,
}

impl fmt::Debug for GridSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.values {
            Values::Uniform(_) => "uniform",
            Values::Fields => "fields",
            Values::Table(_) => "table",
        };
        f.debug_struct("GridSymbol")
            .field("n_points", &self.grid.n_points())
            .field("order", &self.order)
            .field("seminorm", &self.seminorm)
            .field("kind", &kind)
            .finish()
    }
}

impl GridSymbol {
    /// x-independent symbol `a(ξ)`.
    pub fn fourier_multiplier(
        grid: TorusGrid,
        order: f64,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let values: Vec<Complex64> = (0..grid.n_points()).map(|i| f(grid.mode(i) as f64)).collect();
        let formula: SymbolFormula = Arc::new(move |_: &[f64], xi: f64| f(xi));
        Self::finish(grid, order, Values::Uniform(values), vec![], Some(formula))
    }

    /// `a(x, ξ) = formula(c_1(x), …, c_m(x); ξ)`.
    pub fn from_fields(
        grid: TorusGrid,
        order: f64,
        fields: Vec<RealField>,
        formula: impl Fn(&[f64], f64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        for c in &fields {
            grid.check_same(&c.grid())?;
        }
        let formula: SymbolFormula = Arc::new(formula);
        if fields.is_empty() {
            let values = (0..grid.n_points()).map(|i| formula(&[], grid.mode(i) as f64)).collect();
            return Self::finish(grid, order, Values::Uniform(values), vec![], Some(formula));
        }
        Self::finish(grid, order, Values::Fields, fields, Some(formula))
    }

    /// Symbol given only by its samples, row-major in `(node, FFT index)`.
    pub fn from_table(grid: TorusGrid, order: f64, table: Vec<Complex64>) -> Result<Self> {
        let n = grid.n_points();
        if table.len() != n * n {
            return Err(Error::InvalidGrid(format!("symbol table of length {} for N = {n}", table.len())));
        }
        Self::finish(grid, order, Values::Table(table), vec![], None)
    }

    fn finish(
        grid: TorusGrid,
        order: f64,
        values: Values,
        fields: Vec<RealField>,
        formula: Option<SymbolFormula>,
    ) -> Result<Self> {
        let field_spectra = fields.iter().map(forward_transform).collect();
        let mut sym = GridSymbol { grid, order, seminorm: 0.0, values, fields, field_spectra, formula };
        let n = grid.n_points();
        let mut m: f64 = 0.0;
        let mut cs = Vec::new();
        for j in 0..n {
            if matches!(sym.values, Values::Uniform(_)) && j > 0 {
                break;
            }
            sym.coefficients_at_node(j, &mut cs);
            for i in 0..n {
                let v = sym.value_with(j, i, &cs);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite);
                }
                let k = grid.mode(i) as f64;
                m = m.max(v.norm() * (1.0 + k.abs()).powf(-order));
            }
        }
        sym.seminorm = m;
        Ok(sym)
    }

    fn coefficients_at_node(&self, j: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.fields.iter().map(|f| f.samples()[j]));
    }

    fn value_with(&self, j: usize, i: usize, cs: &[f64]) -> Complex64 {
        match &self.values {
            Values::Uniform(v) => v[i],
            Values::Table(t) => t[j * self.grid.n_points() + i],
            Values::Fields => {
                (self.formula.as_ref().expect("field symbols carry a formula"))(cs, self.grid.mode(i) as f64)
            }
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    /// `sup_k (1+|k|)^{-m} max_j |a(x_j, k)|`.
    pub fn seminorm(&self) -> f64 {
        self.seminorm
    }

    pub fn is_x_independent(&self) -> bool {
        matches!(self.values, Values::Uniform(_))
    }

    pub fn has_evaluator(&self) -> bool {
        self.formula.is_some()
    }

    pub fn fields(&self) -> &[RealField] {
        &self.fields
    }

    /// `a(x_j, k)`.
    pub fn value(&self, j: usize, k: i64) -> Complex64 {
        let mut cs = Vec::with_capacity(self.fields.len());
        self.coefficients_at_node(j, &mut cs);
        self.value_with(j, self.grid.index(k), &cs)
    }

    /// `x_j ↦ a(x_j, k)` for all nodes.
    pub fn column(&self, k: i64) -> Vec<Complex64> {
        let n = self.grid.n_points();
        let i = self.grid.index(k);
        match &self.values {
            Values::Uniform(v) => vec![v[i]; n],
            Values::Table(t) => (0..n).map(|j| t[j * n + i]).collect(),
            Values::Fields => {
                let f = self.formula.as_ref().expect("field symbols carry a formula");
                let mut cs = Vec::with_capacity(self.fields.len());
                (0..n)
                    .map(|j| {
                        self.coefficients_at_node(j, &mut cs);
                        f(&cs, k as f64)
                    })
                    .collect()
            }
        }
    }

    /// Dense row-major `(node, FFT index)` table.
    pub fn table(&self) -> Vec<Complex64> {
        let n = self.grid.n_points();
        let mut out = Vec::with_capacity(n * n);
        let mut cs = Vec::new();
        for j in 0..n {
            self.coefficients_at_node(j, &mut cs);
            out.extend((0..n).map(|i| self.value_with(j, i, &cs)));
        }
        out
    }

    /// `a(x, ξ)` at an arbitrary point and real frequency.
    pub fn evaluate(&self, x: f64, xi: f64) -> Result<Complex64> {
        let f = self.formula.as_ref().ok_or(Error::SymbolNotContinuous)?;
        let cs: Vec<f64> = self.field_spectra.iter().map(|s| evaluate_offgrid(s, x)).collect();
        Ok(f(&cs, xi))
    }
}

/// Cutoff constants of the quantization.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CutoffConfig {
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub psi_threshold: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self { epsilon1: 0.125, epsilon2: 0.25, psi_threshold: 1.0 }
    }
}

impl CutoffConfig {
    pub fn new(epsilon1: f64, epsilon2: f64, psi_threshold: f64) -> Result<Self> {
        if !(epsilon1 > 0.0 && epsilon1 < epsilon2 && epsilon2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff constants must satisfy 0 < eps1 < eps2 < 1, got ({epsilon1}, {epsilon2})"
            )));
        }
        if !(psi_threshold >= 1.0) {
            return Err(Error::InvalidParameter(format!("psi threshold {psi_threshold} < 1")));
        }
        Ok(Self { epsilon1, epsilon2, psi_threshold })
    }

    pub fn psi(&self, eta: i64) -> bool {
        (eta.abs() as f64) > self.psi_threshold
    }

    pub fn theta(&self, zeta: i64, eta: i64) -> bool {
        (zeta.abs() as f64) <= self.epsilon1 * eta.abs() as f64
    }
}

fn product_physical(a: &Spectrum, b: &Spectrum) -> Vec<f64> {
    let fa = inverse_real(a);
    let fb = inverse_real(b);
    fa.samples().iter().zip(fb.samples()).map(|(x, y)| x * y).collect()
}

/// Individual summands `S_{q-3}(a) Δ_q u`, before dealiasing.
pub fn paraproduct_summands(a: &RealField, u: &RealField) -> Result<Vec<(usize, Spectrum)>> {
    a.grid().check_same(&u.grid())?;
    let sa = forward_transform(a);
    let su = forward_transform(u);
    let grid = a.grid();
    let mut out = Vec::new();
    for q in 2..=max_block(grid) {
        let du = block_projection(&su, q);
        let prod = product_physical(&low_pass(&sa, q as i64 - 3), &du);
        out.push((q, forward_transform(&RealField::from_vec_unchecked(grid, prod))));
    }
    Ok(out)
}

/// Physical-space low-frequency parts `S_{q-3}(a)` for every block `q >= 2`,
/// shared by the paraproduct and its transpose.
pub(crate) struct LowParts {
    grid: TorusGrid,
    parts: Vec<(usize, Vec<f64>)>,
}

impl LowParts {
    pub(crate) fn new(sa: &Spectrum) -> Self {
        let grid = sa.grid();
        let parts = (2..=max_block(grid))
            .map(|q| (q, inverse_real(&low_pass(sa, q as i64 - 3)).into_samples()))
            .collect();
        Self { grid, parts }
    }

    /// `P Σ_q S_{q-3}(a) Δ_q u`.
    pub(crate) fn apply(&self, su: &Spectrum) -> Spectrum {
        let mut acc = vec![0.0; self.grid.n_points()];
        for (q, low) in &self.parts {
            let du = block_projection(su, *q);
            if du.max_abs() == 0.0 {
                continue;
            }
            let fu = inverse_real(&du);
            for ((o, l), v) in acc.iter_mut().zip(low).zip(fu.samples()) {
                *o += l * v;
            }
        }
        dealias(&forward_transform(&RealField::from_vec_unchecked(self.grid, acc)))
    }

    /// `Σ_q Δ_q(S_{q-3}(a) · P w)`.
    pub(crate) fn adjoint(&self, sw: &Spectrum) -> Spectrum {
        let pw = inverse_real(&dealias(sw));
        let mut out = Spectrum::zeros(self.grid);
        for (q, low) in &self.parts {
            let prod: Vec<f64> = low.iter().zip(pw.samples()).map(|(l, v)| l * v).collect();
            let blk = block_projection(&forward_transform(&RealField::from_vec_unchecked(self.grid, prod)), *q);
            for (o, b) in out.coeffs_mut().iter_mut().zip(blk.coeffs()) {
                *o += b;
            }
        }
        out
    }
}

/// `T_a u = P Σ_{q>=2} S_{q-3}(a) Δ_q u` with `P` the 2/3-rule projection.
pub fn paraproduct(a: &RealField, u: &RealField) -> Result<RealField> {
    a.grid().check_same(&u.grid())?;
    Ok(inverse_real(&LowParts::new(&forward_transform(a)).apply(&forward_transform(u))))
}

/// Exact transpose of [`paraproduct`] in the grid inner product:
/// `T_a^⊤ w = Σ_q Δ_q(S_{q-3}(a) · P w)`.
pub fn paraproduct_adjoint(a: &RealField, w: &RealField) -> Result<RealField> {
    a.grid().check_same(&w.grid())?;
    Ok(inverse_real(&LowParts::new(&forward_transform(a)).adjoint(&forward_transform(w))))
}

/// Quantization acting on a spectrum; the result may be non-Hermitian when
/// the symbol does not satisfy `a(x, -ξ) = conj a(x, ξ)`.
pub fn paradiff_apply_spectrum(a: &GridSymbol, su: &Spectrum, c: &CutoffConfig) -> Result<Spectrum> {
    a.grid.check_same(&su.grid())?;
    let grid = a.grid;
    let n = grid.n_points();
    let nyq = grid.nyquist();
    let mut out = Spectrum::zeros(grid);
    if let Values::Uniform(v) = &a.values {
        for (i, (o, (vi, ui))) in out.coeffs_mut().iter_mut().zip(v.iter().zip(su.coeffs())).enumerate() {
            let k = grid.mode(i);
            if k != nyq && c.psi(k) {
                *o = vi * ui;
            }
        }
        return Ok(out);
    }
    for i in 0..n {
        let eta = grid.mode(i);
        let ue = su.coeffs()[i];
        if eta == nyq || !c.psi(eta) || ue == Complex64::new(0.0, 0.0) {
            continue;
        }
        let ahat = forward_complex(grid, &a.column(eta));
        let zmax = (c.epsilon1 * eta.abs() as f64).floor() as i64;
        for zeta in -zmax..=zmax {
            let xi = zeta + eta;
            if xi <= -nyq || xi >= nyq {
                continue;
            }
            let oi = grid.index(xi);
            out.coeffs_mut()[oi] += ahat.coeffs()[grid.index(zeta)] * ue;
        }
    }
    Ok(out)
}

/// Conjugate transpose of the quantization kernel.
pub fn paradiff_adjoint_spectrum(a: &GridSymbol, sw: &Spectrum, c: &CutoffConfig) -> Result<Spectrum> {
    a.grid.check_same(&sw.grid())?;
    let grid = a.grid;
    let n = grid.n_points();
    let nyq = grid.nyquist();
    let mut out = Spectrum::zeros(grid);
    if let Values::Uniform(v) = &a.values {
        for (i, (o, (vi, wi))) in out.coeffs_mut().iter_mut().zip(v.iter().zip(sw.coeffs())).enumerate() {
            let k = grid.mode(i);
            if k != nyq && c.psi(k) {
                *o = vi.conj() * wi;
            }
        }
        return Ok(out);
    }
    for i in 0..n {
        let eta = grid.mode(i);
        if eta == nyq || !c.psi(eta) {
            continue;
        }
        let ahat = forward_complex(grid, &a.column(eta));
        let zmax = (c.epsilon1 * eta.abs() as f64).floor() as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for zeta in -zmax..=zmax {
            let xi = zeta + eta;
            if xi <= -nyq || xi >= nyq {
                continue;
            }
            acc += ahat.coeffs()[grid.index(zeta)].conj() * sw.coeffs()[grid.index(xi)];
        }
        out.coeffs_mut()[i] = acc;
    }
    Ok(out)
}

/// `T_a u`; the real part of the inverse transform is returned.
pub fn paradiff_apply(a: &GridSymbol, u: &RealField, c: &CutoffConfig) -> Result<RealField> {
    a.grid.check_same(&u.grid())?;
    Ok(inverse_real(&paradiff_apply_spectrum(a, &forward_transform(u), c)?))
}

/// `(T_a)^⊤ w` for real-to-real quantizations.
pub fn paradiff_apply_adjoint(a: &GridSymbol, w: &RealField, c: &CutoffConfig) -> Result<RealField> {
    a.grid.check_same(&w.grid())?;
    Ok(inverse_real(&paradiff_adjoint_spectrum(a, &forward_transform(w), c)?))
}

/// `ab - T_a b - T_b a`, with the product dealiased.
pub fn bony_remainder(a: &RealField, b: &RealField) -> Result<RealField> {
    a.grid().check_same(&b.grid())?;
    let sa = forward_transform(a);
    let sb = forward_transform(b);
    let prod = dealias(&forward_transform(&a.mul(b)?));
    let r = prod.sub(&LowParts::new(&sa).apply(&sb))?.sub(&LowParts::new(&sb).apply(&sa))?;
    Ok(inverse_real(&r))
}

fn grid_flow_checks(grid: TorusGrid, chi: &FlowMap) -> Result<()> {
    match chi.grid() {
        Some(g) => grid.check_same(&g)?,
        None => {
            return Err(Error::InvalidParameter(
                "diffeomorphism must be sampled at the grid nodes".into(),
            ))
        }
    }
    let min_j = chi.min_jacobian();
    if !(min_j > 0.0) {
        return Err(Error::NotDiffeomorphism { min_jacobian: min_j });
    }
    Ok(())
}

/// Smallest `N >= 1` with `2^N > max(sup Dχ, sup 1/Dχ) + 1`.
pub fn default_paracompose_width(chi: &FlowMap) -> usize {
    let m = chi.max_jacobian().max(1.0 / chi.min_jacobian()) + 1.0;
    let mut n = 1;
    while ((1u64 << n) as f64) <= m {
        n += 1;
    }
    n
}

/// `χ*u = Σ_k Σ_{|l-k|<=N} P_l (u_k ∘ χ)` with `u_k` the dyadic blocks of `u`.
pub fn paracompose(u: &RealField, chi: &FlowMap, n_width: Option<usize>) -> Result<RealField> {
    let grid = u.grid();
    grid_flow_checks(grid, chi)?;
    let width = n_width.unwrap_or_else(|| default_paracompose_width(chi)) as i64;
    let blocks = dyadic_decompose(u);
    let mut acc = Spectrum::zeros(grid);
    for (k, sk) in blocks.spectra().iter().enumerate() {
        if sk.max_abs() == 0.0 {
            continue;
        }
        let composed: Vec<f64> = chi.positions().iter().map(|&y| evaluate_offgrid(sk, y)).collect();
        let sc = forward_transform(&RealField::from_vec_unchecked(grid, composed));
        let kept = sc.filter(|m| (block_of(m) as i64 - k as i64).abs() <= width);
        acc = acc.add(&kept)?;
    }
    Ok(inverse_real(&acc))
}

/// Leading pulled-back symbol `a*(x, ξ) = a(χ(x), ξ / Dχ(x))`.
pub fn pullback_symbol(a: &GridSymbol, chi: &FlowMap) -> Result<GridSymbol> {
    let grid = a.grid;
    grid_flow_checks(grid, chi)?;
    let old = a.formula.clone().ok_or(Error::SymbolNotContinuous)?;
    let mut fields: Vec<RealField> = a
        .field_spectra
        .iter()
        .map(|s| {
            let v = chi.positions().iter().map(|&y| evaluate_offgrid(s, y)).collect();
            RealField::from_vec_unchecked(grid, v)
        })
        .collect();
    let m = fields.len();
    fields.push(RealField::from_vec_unchecked(grid, chi.jacobian().to_vec()));
    GridSymbol::from_fields(grid, a.order, fields, move |cs: &[f64], xi: f64| old(&cs[..m], xi / cs[m]))
}

/// Outcome of a composition-residual measurement.
#[derive(Debug, Clone)]
pub struct ComposeResidual {
    /// `a#b` as a sampled symbol of order `m + m'`.
    pub sharp: GridSymbol,
    /// `(probe frequency, ‖(T_aT_b - T_{a#b})u‖_{H^{μ-m-m'+ρ}} / ‖u‖_{H^μ})`.
    pub ratios: Vec<(i64, f64)>,
}

impl ComposeResidual {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().fold(0.0, |m, r| m.max(r.1))
    }
}

fn centered_xi_derivative(grid: TorusGrid, table: &[Complex64], j: usize, k: i64) -> Complex64 {
    let n = grid.n_points();
    let lo = -grid.nyquist() + 1;
    let hi = grid.nyquist();
    let at = |kk: i64| table[j * n + grid.index(kk)];
    if k == lo {
        at(k + 1) - at(k)
    } else if k == hi {
        at(k) - at(k - 1)
    } else {
        (at(k + 1) - at(k - 1)) * 0.5
    }
}

/// Builds `a#b = Σ_{α<ρ} (1/(i^α α!)) ∂_ξ^α a ∂_x^α b` (terms up to `α = 1`)
/// and measures `T_aT_b - T_{a#b}` on probes `cos(kx)`.
pub fn compose_residual(
    a: &GridSymbol,
    b: &GridSymbol,
    rho: f64,
    probes: &[i64],
    mu: f64,
    cutoff: &CutoffConfig,
) -> Result<ComposeResidual> {
    a.grid.check_same(&b.grid)?;
    let grid = a.grid;
    let n = grid.n_points();
    let ta = a.table();
    let tb = b.table();
    let mut sharp: Vec<Complex64> = ta.iter().zip(&tb).map(|(x, y)| x * y).collect();
    if rho > 1.0 {
        // -i ∂_ξ a ∂_x b
        let mut dxb = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let col: Vec<Complex64> = (0..n).map(|j| tb[j * n + i]).collect();
            let mut s = forward_complex(grid, &col);
            for (ii, c) in s.coeffs_mut().iter_mut().enumerate() {
                let m = grid.mode(ii);
                *c *= if m == grid.nyquist() { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, m as f64) };
            }
            for (j, v) in inverse_complex(&s).into_iter().enumerate() {
                dxb[j * n + i] = v;
            }
        }
        for j in 0..n {
            for i in 0..n {
                let k = grid.mode(i);
                let dxa = centered_xi_derivative(grid, &ta, j, k);
                sharp[j * n + i] += Complex64::new(0.0, -1.0) * dxa * dxb[j * n + i];
            }
        }
    }
    let sharp = GridSymbol::from_table(grid, a.order + b.order, sharp)?;
    let target = mu - a.order - b.order + rho;
    let mut ratios = Vec::with_capacity(probes.len());
    for &k in probes {
        let u = RealField::from_fn(grid, |x| (k as f64 * x).cos());
        let su = forward_transform(&u);
        let lhs = paradiff_apply_spectrum(a, &paradiff_apply_spectrum(b, &su, cutoff)?, cutoff)?;
        let rhs = paradiff_apply_spectrum(&sharp, &su, cutoff)?;
        let r = lhs.sub(&rhs)?;
        ratios.push((k, sobolev_norm_spectrum(&r, target) / sobolev_norm_spectrum(&su, mu)));
    }
    Ok(ComposeResidual { sharp, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(n).unwrap()
    }

    fn close(a: &RealField, b: &RealField, tol: f64) {
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x - y).abs() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn constant_paraproduct_passes_high_modes_and_kills_the_mean() {
        let g = grid(64);
        let one = RealField::constant(g, 1.0);
        let u = RealField::from_fn(g, |x| (8.0 * x).cos());
        close(&paraproduct(&one, &u).unwrap(), &u, 1e-13);
        assert!(paraproduct(&one, &one).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn paraproduct_convolution_support() {
        let g = grid(64);
        let a = RealField::from_fn(g, |x| x.cos());
        let u = RealField::from_fn(g, |x| (8.0 * x).cos());
        let s = forward_transform(&paraproduct(&a, &u).unwrap());
        for i in 0..64 {
            let k = g.mode(i).abs();
            if k != 7 && k != 9 {
                assert!(s.coeffs()[i].norm() < 1e-14);
            }
        }
        assert!((s.coeff(7).re - 0.25).abs() < 1e-13);
    }

    #[test]
    fn paraproduct_mismatched_grids() {
        let a = RealField::zeros(grid(32));
        let u = RealField::zeros(grid(64));
        assert_eq!(paraproduct(&a, &u).unwrap_err(), Error::GridMismatch { left: 32, right: 64 });
    }

    #[test]
    fn paraproduct_adjoint_is_transpose() {
        let g = grid(64);
        let a = RealField::from_fn(g, |x| 1.0 + 0.3 * x.sin() + 0.1 * (2.0 * x).cos());
        let u = RealField::from_fn(g, |x| (x.cos()).exp() * (5.0 * x).sin());
        let w = RealField::from_fn(g, |x| (2.0 * x.sin()).exp());
        let lhs: f64 = paraproduct(&a, &u).unwrap().samples().iter().zip(w.samples()).map(|(p, q)| p * q).sum();
        let rhs: f64 =
            u.samples().iter().zip(paraproduct_adjoint(&a, &w).unwrap().samples()).map(|(p, q)| p * q).sum();
        assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0));
    }

    #[test]
    fn bony_remainder_on_cosines() {
        let g = grid(64);
        let a = RealField::from_fn(g, |x| x.cos());
        let r = bony_remainder(&a, &a).unwrap();
        close(&r, &RealField::from_fn(g, |x| 0.5 * (1.0 + (2.0 * x).cos())), 1e-14);
        let z = bony_remainder(&RealField::zeros(g), &a).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn unit_symbol_keeps_passed_modes() {
        let g = grid(64);
        let one = GridSymbol::fourier_multiplier(g, 0.0, |_| Complex64::new(1.0, 0.0)).unwrap();
        let u = RealField::from_fn(g, |x| 1.0 + x.cos() + (2.0 * x).cos() + (9.0 * x).sin());
        let out = paradiff_apply(&one, &u, &CutoffConfig::default()).unwrap();
        close(&out, &RealField::from_fn(g, |x| (2.0 * x).cos() + (9.0 * x).sin()), 1e-13);
    }

    #[test]
    fn abs_symbol_is_a_multiplier() {
        let g = grid(64);
        let a = GridSymbol::fourier_multiplier(g, 1.0, |xi| Complex64::new(xi.abs(), 0.0)).unwrap();
        let u = RealField::from_fn(g, |x| (8.0 * x).cos());
        close(&paradiff_apply(&a, &u, &CutoffConfig::default()).unwrap(), &u.scale(8.0), 1e-12);
        assert!((a.seminorm() - 32.0 / 33.0).abs() < 1e-12);
    }

    #[test]
    fn field_symbol_matches_uniform_symbol_when_constant() {
        let g = grid(32);
        let c = RealField::constant(g, 2.0);
        let a = GridSymbol::from_fields(g, 1.0, vec![c], |cs, xi| Complex64::new(cs[0] * xi.abs(), 0.0)).unwrap();
        let u = RealField::from_fn(g, |x| (3.0 * x).cos() + (5.0 * x).sin());
        let out = paradiff_apply(&a, &u, &CutoffConfig::default()).unwrap();
        let expect = RealField::from_fn(g, |x| 6.0 * (3.0 * x).cos() + 10.0 * (5.0 * x).sin());
        close(&out, &expect, 1e-12);
    }

    #[test]
    fn table_symbols_have_no_evaluator() {
        let g = grid(16);
        let a = GridSymbol::from_table(g, 0.0, vec![Complex64::new(1.0, 0.0); 256]).unwrap();
        assert_eq!(a.evaluate(0.3, 2.0).unwrap_err(), Error::SymbolNotContinuous);
        let id = FlowMap::identity(g);
        assert_eq!(pullback_symbol(&a, &id).unwrap_err(), Error::SymbolNotContinuous);
    }

    #[test]
    fn adjoint_quantization_is_conjugate_transpose() {
        let g = grid(64);
        let c = RealField::from_fn(g, |x| 1.0 + 0.2 * x.cos());
        let a = GridSymbol::from_fields(g, 1.5, vec![c], |cs, xi| {
            Complex64::new(cs[0] * xi.abs().powf(1.5), 0.0)
        })
        .unwrap();
        let u = RealField::from_fn(g, |x| (x.sin()).exp() * (12.0 * x).cos());
        let w = RealField::from_fn(g, |x| (x.cos() * 2.0).exp() * (10.0 * x).sin());
        let cut = CutoffConfig::default();
        let tu = paradiff_apply(&a, &u, &cut).unwrap();
        let tw = paradiff_apply_adjoint(&a, &w, &cut).unwrap();
        let lhs: f64 = tu.samples().iter().zip(w.samples()).map(|(p, q)| p * q).sum();
        let rhs: f64 = u.samples().iter().zip(tw.samples()).map(|(p, q)| p * q).sum();
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn paracompose_identity_and_shift() {
        let g = grid(128);
        let u = RealField::from_fn(g, |x| (x.sin()).exp() + 0.1 * (20.0 * x).cos());
        let id = FlowMap::identity(g);
        close(&paracompose(&u, &id, None).unwrap(), &u, 1e-10);
        let c = 0.37;
        let shift = FlowMap::from_map(g, move |x| x + c, |_| 1.0).unwrap();
        let expect = RealField::from_fn(g, |x| ((x + c).sin()).exp() + 0.1 * (20.0 * (x + c)).cos());
        close(&paracompose(&u, &shift, None).unwrap(), &expect, 1e-10);
    }

    #[test]
    fn pullback_of_identity_and_shift() {
        let g = grid(32);
        let c = RealField::from_fn(g, |x| 1.0 + 0.5 * x.cos());
        let a = GridSymbol::from_fields(g, 1.0, vec![c], |cs, xi| Complex64::new(cs[0] * xi.abs(), 0.0)).unwrap();
        let same = pullback_symbol(&a, &FlowMap::identity(g)).unwrap();
        for j in 0..32 {
            for k in [-5, 0, 3, 16] {
                assert!((same.value(j, k) - a.value(j, k)).norm() < 1e-12);
            }
        }
        let s = 0.4;
        let shifted = pullback_symbol(&a, &FlowMap::from_map(g, move |x| x + s, |_| 1.0).unwrap()).unwrap();
        for j in 0..32 {
            let x = g.node(j);
            let expect = (1.0 + 0.5 * (x + s).cos()) * 7.0;
            assert!((shifted.value(j, 7).re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn folded_maps_are_not_diffeomorphisms() {
        let g = grid(32);
        let fold = FlowMap::from_map(g, |x| x + 1.5 * x.sin(), |x| 1.0 + 1.5 * x.cos());
        assert!(matches!(fold, Err(Error::NotDiffeomorphism { .. })));
    }

    #[test]
    fn compose_residual_vanishes_for_multipliers_and_zero() {
        let g = grid(64);
        let a = GridSymbol::fourier_multiplier(g, 1.0, |xi| Complex64::new(xi.abs(), 0.0)).unwrap();
        let b = GridSymbol::fourier_multiplier(g, 0.5, |xi| Complex64::new(xi.abs().sqrt(), 0.0)).unwrap();
        let cut = CutoffConfig::default();
        let r = compose_residual(&a, &b, 1.0, &[4, 8, 16], 0.0, &cut).unwrap();
        assert!(r.max_ratio() < 1e-13);
        let zero = GridSymbol::fourier_multiplier(g, 0.0, |_| Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(compose_residual(&a, &zero, 2.0, &[8], 0.0, &cut).unwrap().max_ratio(), 0.0);
    }
}

//! Fixtures shared by the benchmarks.

use num_complex::Complex64;
use quasiflow::paradiff::GridSymbol;
use quasiflow::{RealField, TorusGrid};

pub fn grid(n: usize) -> TorusGrid {
    TorusGrid::new(n).expect("benchmark grid")
}

/// Smooth test field with content in every dyadic block.
pub fn test_field(g: TorusGrid) -> RealField {
    let top = g.dealias_cutoff() as f64;
    RealField::from_fn(g, |x| {
        let mut k = 1.0;
        let mut acc = 0.0;
        while k <= top {
            acc += (k * x + 0.3 * k).sin() / k;
            k *= 2.0;
        }
        acc
    })
}

/// `(1 + 0.3 cos x) iξ`, an x-dependent first-order symbol.
pub fn transport_symbol(g: TorusGrid) -> GridSymbol {
    let c = RealField::from_fn(g, |x| 1.0 + 0.3 * x.cos());
    GridSymbol::from_fields(g, 1.0, vec![c], |c, xi| Complex64::new(0.0, c[0] * xi)).expect("benchmark symbol")
}

//! Profile evaluation over a τ grid for quantities of the form
//! `Σ_d term(ω^(τ)(d), d)`.
//!
//! Each τ splits the distances into three zones: `d <= ⌊τ/2⌋` (ω = 1),
//! the shell `⌊τ/2⌋ < d < τ`, and `d >= τ` (ω = 0). The first and last
//! zones come from prefix/suffix tables built once; only the shell is
//! recomputed per τ, and for banding it is always empty.
//!
//! [`value_at`] evaluates a single τ from scratch with the same summation
//! order, so it agrees bit-for-bit with [`Sweep::profile`].

use crate::estimate::WeightScheme;

pub(crate) struct Sweep<F> {
    term: F,
    /// `ones[k] = Σ_{d < k} term(1, d)`, accumulated left to right.
    ones: Vec<f64>,
    /// `zeros[k] = Σ_{d >= k} term(0, d)`, accumulated right to left.
    zeros: Vec<f64>,
}

impl<F: Fn(f64, usize) -> f64> Sweep<F> {
    pub(crate) fn new(p: usize, term: F) -> Self {
        let mut ones = vec![0.0; p + 1];
        for d in 0..p {
            ones[d + 1] = ones[d] + term(1.0, d);
        }
        let mut zeros = vec![0.0; p + 1];
        for d in (0..p).rev() {
            zeros[d] = term(0.0, d) + zeros[d + 1];
        }
        Self { term, ones, zeros }
    }

    fn p(&self) -> usize {
        self.ones.len() - 1
    }

    pub(crate) fn value(&self, scheme: &WeightScheme, tau: usize) -> f64 {
        let p = self.p();
        let (inner, outer) = zone_bounds(scheme, tau, p);
        let mut acc = self.ones[inner];
        for d in inner..outer {
            acc += (self.term)(scheme.weight(tau, d), d);
        }
        acc + self.zeros[outer]
    }

    pub(crate) fn profile(&self, scheme: &WeightScheme, grid: &[usize]) -> Vec<f64> {
        grid.iter().map(|&tau| self.value(scheme, tau)).collect()
    }
}

/// `[0, inner)` has ω = 1, `[inner, outer)` is the shell, `[outer, p)` has
/// ω = 0.
fn zone_bounds(scheme: &WeightScheme, tau: usize, p: usize) -> (usize, usize) {
    let outer = tau.min(p);
    let inner = match scheme {
        WeightScheme::Banding => outer,
        _ => (tau / 2 + 1).min(outer),
    };
    (inner, outer)
}

/// From-scratch evaluation at one τ with the sweep's summation order.
pub(crate) fn value_at(p: usize, scheme: &WeightScheme, tau: usize, term: impl Fn(f64, usize) -> f64) -> f64 {
    let (inner, outer) = zone_bounds(scheme, tau, p);
    let mut acc = (0..inner).fold(0.0, |s, d| s + term(1.0, d));
    for d in inner..outer {
        acc += term(scheme.weight(tau, d), d);
    }
    acc + (outer..p).rev().fold(0.0, |s, d| term(0.0, d) + s)
}

/// Smallest grid point attaining the minimum; NaNs never win.
pub(crate) fn argmin_first(grid: &[usize], values: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..values.len() {
        if values[k] < values[best] || values[best].is_nan() {
            best = k;
        }
    }
    grid[best]
}

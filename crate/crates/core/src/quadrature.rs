//! Composite Gauss-Legendre integration over piecewise-smooth integrands.
//!
//! Intensities are constant on unit periods, so every integrand we meet is
//! smooth between consecutive integers. The composite rule always splits at
//! integer boundaries and then subdivides each piece.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

#[derive(Debug, Clone)]
pub struct CompositeRule {
    rule: GaussLegendre,
    pieces_per_unit: usize,
}

impl CompositeRule {
    /// `degree` nodes on each of `pieces_per_unit` sub-intervals of every unit cell.
    pub fn new(degree: usize, pieces_per_unit: usize) -> Self {
        let degree = NonZeroUsize::new(degree.max(1)).expect("degree is at least one");
        Self {
            rule: GaussLegendre::new(degree),
            pieces_per_unit: pieces_per_unit.max(1),
        }
    }

    /// Integrate `f` over `[a, b]`, splitting at every integer in between.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut left = a;
        while left < b {
            let next_int = left.floor() + 1.0;
            let right = next_int.min(b);
            let width = (right - left) / self.pieces_per_unit as f64;
            for p in 0..self.pieces_per_unit {
                let lo = left + p as f64 * width;
                let hi = if p + 1 == self.pieces_per_unit { right } else { lo + width };
                total += self.rule.integrate(lo, hi, &mut f);
            }
            left = right;
        }
        total
    }
}

impl Default for CompositeRule {
    fn default() -> Self {
        Self::new(16, 4)
    }
}

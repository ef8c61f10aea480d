//! Normal contractions: pointwise maps `C` with `|C(r)| <= |r|` and
//! `|C(r) - C(s)| <= |r - s|`. Composing a function with any of these never
//! increases its energy; the fixed family below is the testable surrogate
//! for that quantifier.

use crate::error::{Error, Result};
use crate::function::VertexFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalContraction {
    Identity,
    AbsoluteValue,
    /// `(0 ∨ r) ∧ 1`
    UnitInterval,
    /// `(r ∨ lo) ∧ hi` with `lo <= 0 <= hi`
    Clamp { lo: f64, hi: f64 },
    /// `(r ∧ level) ∨ (-level)` with `level >= 0`
    Truncate { level: f64 },
}

impl NormalContraction {
    pub fn clamp(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= 0.0 && 0.0 <= hi) {
            return Err(Error::Invariant(format!(
                "clamp bounds must satisfy lo <= 0 <= hi, got [{lo}, {hi}]"
            )));
        }
        Ok(NormalContraction::Clamp { lo, hi })
    }

    pub fn truncate(level: f64) -> Result<Self> {
        if !(level >= 0.0) {
            return Err(Error::Invariant(format!(
                "truncation level must be nonnegative, got {level}"
            )));
        }
        Ok(NormalContraction::Truncate { level })
    }

    pub fn apply(&self, r: f64) -> f64 {
        match *self {
            NormalContraction::Identity => r,
            NormalContraction::AbsoluteValue => r.abs(),
            NormalContraction::UnitInterval => r.max(0.0).min(1.0),
            NormalContraction::Clamp { lo, hi } => r.max(lo).min(hi),
            NormalContraction::Truncate { level } => r.min(level).max(-level),
        }
    }

    /// The five-member family used by every Markov suite.
    pub fn library() -> Vec<NormalContraction> {
        vec![
            NormalContraction::Identity,
            NormalContraction::AbsoluteValue,
            NormalContraction::UnitInterval,
            NormalContraction::Clamp { lo: -1.0, hi: 1.0 },
            NormalContraction::Truncate { level: 2.0 },
        ]
    }

    pub fn name(&self) -> String {
        match *self {
            NormalContraction::Identity => "identity".into(),
            NormalContraction::AbsoluteValue => "abs".into(),
            NormalContraction::UnitInterval => "unit".into(),
            NormalContraction::Clamp { lo, hi } => format!("clamp[{lo},{hi}]"),
            NormalContraction::Truncate { level } => format!("truncate[{level}]"),
        }
    }

    /// Spot-checks the defining inequalities on a grid of pairs.
    pub fn spot_check(&self, grid: &[f64]) -> bool {
        for &r in grid {
            if self.apply(r).abs() > r.abs() + 1e-15 {
                return false;
            }
            for &s in grid {
                if (self.apply(r) - self.apply(s)).abs() > (r - s).abs() + 1e-15 {
                    return false;
                }
            }
        }
        true
    }
}

/// Pointwise composition `C ∘ f`; the tail rule is transformed consistently
/// (zero tails stay zero since every normal contraction fixes 0).
pub fn apply_contraction(c: &NormalContraction, f: &VertexFunction) -> VertexFunction {
    f.map(|v| c.apply(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Tail;
    use proptest::prelude::*;

    #[test]
    fn library_passes_spot_check() {
        let grid: Vec<f64> = (-20..=20).map(|i| i as f64 / 4.0).collect();
        for c in NormalContraction::library() {
            assert!(c.spot_check(&grid), "{} failed", c.name());
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(NormalContraction::clamp(0.5, 1.0).is_err());
        assert!(NormalContraction::truncate(-1.0).is_err());
    }

    #[test]
    fn unit_contraction_by_definition() {
        let f = VertexFunction::from_values(vec![-1.0, 0.5, 2.0], Tail::Zero);
        let g = apply_contraction(&NormalContraction::UnitInterval, &f);
        assert_eq!(g.values(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn identity_leaves_function_unchanged() {
        let f = VertexFunction::from_values(vec![1.0, -2.0], Tail::Constant(3.0));
        assert_eq!(apply_contraction(&NormalContraction::Identity, &f), f);
    }

    #[test]
    fn tails_are_contracted_too() {
        let f = VertexFunction::from_values(vec![0.0], Tail::PerRegion(vec![-2.0, 0.25]));
        let g = apply_contraction(&NormalContraction::UnitInterval, &f);
        assert_eq!(g.tail_value(0), 0.0);
        assert_eq!(g.tail_value(1), 0.25);
    }

    proptest! {
        #[test]
        fn contraction_inequalities_hold(r in -1e6f64..1e6, s in -1e6f64..1e6) {
            for c in NormalContraction::library() {
                prop_assert!(c.apply(r).abs() <= r.abs());
                prop_assert!((c.apply(r) - c.apply(s)).abs() <= (r - s).abs() + 1e-9 * (r - s).abs());
            }
        }
    }
}

//! Real-valued functions on the active truncation.
//!
//! A function stores one value per active vertex plus a *tail rule* fixing
//! its values beyond the truncation. `Tail::Zero` is the representation of
//! finitely supported functions.

/// Behaviour of a function beyond the active truncation.
#[derive(Debug, Clone, PartialEq)]
pub enum Tail {
    /// Vanishes outside the truncation (finitely supported).
    Zero,
    /// Takes one constant value outside the truncation.
    Constant(f64),
    /// One constant per tail region (per ray on star graphs).
    PerRegion(Vec<f64>),
}

impl Tail {
    pub fn value(&self, region: usize) -> f64 {
        match self {
            Tail::Zero => 0.0,
            Tail::Constant(c) => *c,
            Tail::PerRegion(v) => v[region],
        }
    }

    fn combine(&self, other: &Tail, op: impl Fn(f64, f64) -> f64) -> Tail {
        match (self, other) {
            (Tail::PerRegion(a), Tail::PerRegion(b)) => {
                assert_eq!(a.len(), b.len(), "mismatched tail regions");
                Tail::PerRegion(a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect())
            }
            (Tail::PerRegion(a), _) => {
                Tail::PerRegion(a.iter().map(|&x| op(x, other.value(0))).collect())
            }
            (_, Tail::PerRegion(b)) => {
                Tail::PerRegion(b.iter().map(|&y| op(self.value(0), y)).collect())
            }
            (Tail::Zero, Tail::Zero) => Tail::Zero,
            _ => Tail::Constant(op(self.value(0), other.value(0))),
        }
    }

    fn map(&self, op: impl Fn(f64) -> f64) -> Tail {
        match self {
            // any admissible pointwise map used here fixes 0
            Tail::Zero => Tail::Zero,
            Tail::Constant(c) => Tail::Constant(op(*c)),
            Tail::PerRegion(v) => Tail::PerRegion(v.iter().map(|&x| op(x)).collect()),
        }
    }
}

/// A function on the vertices of a truncated weighted graph.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: Vec<f64>,
    tail: Tail,
}

impl VertexFunction {
    pub fn from_values(values: Vec<f64>, tail: Tail) -> Self {
        VertexFunction { values, tail }
    }

    /// The zero function (finitely supported).
    pub fn zero(n: usize) -> Self {
        VertexFunction {
            values: vec![0.0; n],
            tail: Tail::Zero,
        }
    }

    /// The constant function, extended constantly beyond the truncation.
    pub fn constant(n: usize, c: f64) -> Self {
        VertexFunction {
            values: vec![c; n],
            tail: Tail::Constant(c),
        }
    }

    /// Indicator of a single vertex.
    pub fn delta(n: usize, x: usize) -> Self {
        let mut values = vec![0.0; n];
        values[x] = 1.0;
        VertexFunction {
            values,
            tail: Tail::Zero,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn set_value(&mut self, x: usize, v: f64) {
        self.values[x] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn tail_value(&self, region: usize) -> f64 {
        self.tail.value(region)
    }

    pub fn per_region_len(&self) -> Option<usize> {
        match &self.tail {
            Tail::PerRegion(v) => Some(v.len()),
            _ => None,
        }
    }

    /// True when the function vanishes beyond the truncation, i.e. it is
    /// finitely supported.
    pub fn is_finitely_supported(&self) -> bool {
        match &self.tail {
            Tail::Zero => true,
            Tail::Constant(c) => *c == 0.0,
            Tail::PerRegion(v) => v.iter().all(|&x| x == 0.0),
        }
    }

    /// The single tail constant if the tail is constant across regions.
    pub fn constant_tail(&self) -> Option<f64> {
        match &self.tail {
            Tail::Zero => Some(0.0),
            Tail::Constant(c) => Some(*c),
            Tail::PerRegion(v) => {
                let first = *v.first()?;
                v.iter().all(|&x| x == first).then_some(first)
            }
        }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&x| self.values[x] != 0.0)
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        let inner = self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let tail = match &self.tail {
            Tail::Zero => 0.0,
            Tail::Constant(c) => c.abs(),
            Tail::PerRegion(v) => v.iter().fold(0.0f64, |m, &x| m.max(x.abs())),
        };
        inner.max(tail)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
            && match &self.tail {
                Tail::Zero => true,
                Tail::Constant(c) => c.is_finite(),
                Tail::PerRegion(v) => v.iter().all(|x| x.is_finite()),
            }
    }

    fn zip(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "mismatched function lengths");
        VertexFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
            tail: self.tail.combine(&other.tail, op),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        VertexFunction {
            values: self.values.iter().map(|&v| s * v).collect(),
            tail: self.tail.map(|v| s * v),
        }
    }

    pub fn squared(&self) -> Self {
        self.mul(self)
    }

    /// Applies a pointwise map fixing 0 to values and tail alike.
    pub fn map(&self, op: impl Fn(f64) -> f64) -> Self {
        VertexFunction {
            values: self.values.iter().map(|&v| op(v)).collect(),
            tail: self.tail.map(op),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_support_detection() {
        assert!(VertexFunction::zero(3).is_finitely_supported());
        assert!(VertexFunction::delta(3, 1).is_finitely_supported());
        assert!(!VertexFunction::constant(3, 2.0).is_finitely_supported());
        let f = VertexFunction::from_values(vec![1.0], Tail::PerRegion(vec![0.0, 0.0]));
        assert!(f.is_finitely_supported());
    }

    #[test]
    fn constant_tail_resolution() {
        assert_eq!(VertexFunction::zero(2).constant_tail(), Some(0.0));
        let f = VertexFunction::from_values(vec![0.0], Tail::PerRegion(vec![2.0, 2.0]));
        assert_eq!(f.constant_tail(), Some(2.0));
        let g = VertexFunction::from_values(vec![0.0], Tail::PerRegion(vec![1.0, 2.0]));
        assert_eq!(g.constant_tail(), None);
    }

    #[test]
    fn tail_arithmetic() {
        let f = VertexFunction::from_values(vec![1.0], Tail::PerRegion(vec![1.0, -1.0]));
        let g = VertexFunction::constant(1, 2.0);
        let h = f.add(&g);
        assert_eq!(h.tail_value(0), 3.0);
        assert_eq!(h.tail_value(1), 1.0);
        let p = f.mul(&f);
        assert_eq!(p.tail_value(1), 1.0);
        let z = VertexFunction::zero(1).add(&VertexFunction::zero(1));
        assert_eq!(*z.tail(), Tail::Zero);
    }

    #[test]
    fn support_and_norms() {
        let f = VertexFunction::from_values(vec![0.0, -3.0, 1.0], Tail::Zero);
        assert_eq!(f.support(), vec![1, 2]);
        assert_eq!(f.sup_norm(), 3.0);
    }
}

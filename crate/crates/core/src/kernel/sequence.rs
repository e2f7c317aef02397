use num_complex::Complex64;

use super::harmonic;

/// A scalar function on the index set, addressed by zero-based position.
/// Position `i` corresponds to the natural number `n = i + 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Sequence {
    /// Finitely supported; zero past the last listed value.
    Explicit(Vec<Complex64>),
    /// `u(n) = n^{-alpha}`.
    Power { alpha: f64 },
    Constant(Complex64),
    /// `u(n) = a_n = 1 / sqrt((n+1) H_n H_{n+1})`.
    HarmonicCoefficients,
    /// Pointwise product of two sequences.
    Product(Box<Sequence>, Box<Sequence>),
}

impl Sequence {
    pub fn explicit_real(values: &[f64]) -> Self {
        Sequence::Explicit(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn value(&self, i: usize) -> Complex64 {
        match self {
            Sequence::Explicit(v) => v.get(i).copied().unwrap_or_default(),
            Sequence::Power { alpha } => Complex64::new(((i + 1) as f64).powf(-alpha), 0.0),
            Sequence::Constant(c) => *c,
            Sequence::HarmonicCoefficients => Complex64::new(harmonic::coefficient(i as u64 + 1), 0.0),
            Sequence::Product(a, b) => a.value(i) * b.value(i),
        }
    }

    pub fn values(&self, len: usize) -> Vec<Complex64> {
        (0..len).map(|i| self.value(i)).collect()
    }

    /// Length of the support when it is finite.
    pub fn support_len(&self) -> Option<usize> {
        match self {
            Sequence::Explicit(v) => Some(v.iter().rposition(|z| *z != Complex64::default()).map_or(0, |p| p + 1)),
            Sequence::Constant(c) if *c == Complex64::default() => Some(0),
            Sequence::Product(a, b) => match (a.support_len(), b.support_len()) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            },
            _ => None,
        }
    }

    /// Upper bound on `sum_{i >= start} |u_i|^2`, or `None` if not square summable.
    pub fn square_tail(&self, start: usize) -> Option<f64> {
        match self {
            Sequence::Explicit(v) => Some(v.iter().skip(start).map(|z| z.norm_sqr()).sum()),
            Sequence::Constant(c) => (c.norm_sqr() == 0.0).then_some(0.0),
            Sequence::Power { alpha } => {
                let s = 2.0 * alpha;
                if s <= 1.0 {
                    return None;
                }
                // sum_{n > N} n^{-s} <= N^{1-s} / (s-1), and the n = 1 term is 1
                Some(if start == 0 {
                    1.0 + 1.0 / (s - 1.0)
                } else {
                    (start as f64).powf(1.0 - s) / (s - 1.0)
                })
            }
            Sequence::HarmonicCoefficients => Some(harmonic::square_tail(start as u64)),
            Sequence::Product(a, b) => {
                if self.support_len().is_some_and(|len| len <= start) {
                    return Some(0.0);
                }
                let via_a = a.square_tail(start).zip(b.sup_abs_from(start)).map(|(t, s)| t * s * s);
                let via_b = b.square_tail(start).zip(a.sup_abs_from(start)).map(|(t, s)| t * s * s);
                match (via_a, via_b) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Upper bound on `sup_{i >= start} |u_i|`, or `None` if unbounded.
    pub fn sup_abs_from(&self, start: usize) -> Option<f64> {
        match self {
            Sequence::Explicit(v) => Some(v.iter().skip(start).map(|z| z.norm()).fold(0.0, f64::max)),
            Sequence::Constant(c) => Some(c.norm()),
            Sequence::Power { alpha } => (*alpha >= 0.0).then(|| ((start + 1) as f64).powf(-alpha)),
            Sequence::HarmonicCoefficients => Some(harmonic::coefficient(start as u64 + 1)),
            Sequence::Product(a, b) => Some(a.sup_abs_from(start)? * b.sup_abs_from(start)?),
        }
    }

    /// Pointwise product, kept in closed form where one exists.
    pub fn product(&self, other: &Sequence) -> Sequence {
        match (self, other) {
            (Sequence::Constant(a), Sequence::Constant(b)) => Sequence::Constant(a * b),
            (Sequence::Power { alpha: a }, Sequence::Power { alpha: b }) => Sequence::Power { alpha: a + b },
            (Sequence::Explicit(v), s) | (s, Sequence::Explicit(v)) => {
                Sequence::Explicit(v.iter().enumerate().map(|(i, z)| z * s.value(i)).collect())
            }
            _ => Sequence::Product(Box::new(self.clone()), Box::new(other.clone())),
        }
    }
}

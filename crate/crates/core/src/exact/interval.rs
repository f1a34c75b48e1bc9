//! Closed intervals with endpoints in any [`Scalar`].
//!
//! With `Rational` endpoints there is no rounding, so enclosures are exact
//! supersets of the true range.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

impl<T: Scalar> Interval<T> {
    /// Panics when `lo > hi`.
    pub fn new(lo: T, hi: T) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: {lo} > {hi}");
        Interval { lo, hi }
    }

    pub fn point(v: T) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    pub fn zero() -> Self {
        Self::point(T::zero())
    }

    pub fn lo(&self) -> &T {
        &self.lo
    }

    pub fn hi(&self) -> &T {
        &self.hi
    }

    pub fn into_bounds(self) -> (T, T) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> T {
        self.hi.clone() - self.lo.clone()
    }

    pub fn mid(&self) -> T {
        (self.lo.clone() + self.hi.clone()) / T::from_int(2)
    }

    pub fn contains(&self, v: &T) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval<T>) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn hull(&self, other: &Interval<T>) -> Interval<T> {
        Interval { lo: T::min_of(self.lo.clone(), other.lo.clone()), hi: T::max_of(self.hi.clone(), other.hi.clone()) }
    }

    pub fn intersect(&self, other: &Interval<T>) -> Option<Interval<T>> {
        let lo = T::max_of(self.lo.clone(), other.lo.clone());
        let hi = T::min_of(self.hi.clone(), other.hi.clone());
        (lo <= hi).then(|| Interval { lo, hi })
    }

    pub fn scale(&self, c: &T) -> Interval<T> {
        let a = self.lo.clone() * c.clone();
        let b = self.hi.clone() * c.clone();
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    /// Tight enclosure of `x^e`; even powers of a zero-straddling interval start at 0.
    pub fn powi(&self, e: u32) -> Interval<T> {
        if e == 0 {
            return Interval::point(T::one());
        }
        let pow = |v: &T| {
            let mut acc = T::one();
            for _ in 0..e {
                acc = acc * v.clone();
            }
            acc
        };
        let a = pow(&self.lo);
        let b = pow(&self.hi);
        if e % 2 == 1 || self.lo >= T::zero() {
            Interval { lo: a, hi: b }
        } else if self.hi <= T::zero() {
            Interval { lo: b, hi: a }
        } else {
            Interval { lo: T::zero(), hi: T::max_of(a, b) }
        }
    }

    /// Splits at the midpoint.
    pub fn bisect(&self) -> (Interval<T>, Interval<T>) {
        let m = self.mid();
        (Interval { lo: self.lo.clone(), hi: m.clone() }, Interval { lo: m, hi: self.hi.clone() })
    }
}

impl<T: Scalar> Add for &Interval<T> {
    type Output = Interval<T>;
    fn add(self, rhs: &Interval<T>) -> Interval<T> {
        Interval { lo: self.lo.clone() + rhs.lo.clone(), hi: self.hi.clone() + rhs.hi.clone() }
    }
}

impl<T: Scalar> Sub for &Interval<T> {
    type Output = Interval<T>;
    fn sub(self, rhs: &Interval<T>) -> Interval<T> {
        Interval { lo: self.lo.clone() - rhs.hi.clone(), hi: self.hi.clone() - rhs.lo.clone() }
    }
}

impl<T: Scalar> Mul for &Interval<T> {
    type Output = Interval<T>;
    fn mul(self, rhs: &Interval<T>) -> Interval<T> {
        let cands = [
            self.lo.clone() * rhs.lo.clone(),
            self.lo.clone() * rhs.hi.clone(),
            self.hi.clone() * rhs.lo.clone(),
            self.hi.clone() * rhs.hi.clone(),
        ];
        let mut lo = cands[0].clone();
        let mut hi = cands[0].clone();
        for c in &cands[1..] {
            if c < &lo {
                lo = c.clone();
            }
            if c > &hi {
                hi = c.clone();
            }
        }
        Interval { lo, hi }
    }
}

impl<T: Scalar> Neg for &Interval<T> {
    type Output = Interval<T>;
    fn neg(self) -> Interval<T> {
        Interval { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }
}

impl<T: Scalar> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Axis-aligned box in up to three variables.
pub type Box3<T> = [Interval<T>; 3];

pub fn box_contains<T: Scalar>(outer: &Box3<T>, inner: &Box3<T>) -> bool {
    outer.iter().zip(inner).all(|(o, i)| o.contains_interval(i))
}

#[cfg(test)]
mod tests {
    use crate::scalar::q;
    use crate::QInterval;

    #[test]
    fn arithmetic_encloses() {
        let a = QInterval::new(q(-1, 1), q(2, 1));
        let b = QInterval::new(q(-3, 1), q(1, 2));
        let p = &a * &b;
        assert_eq!(p, QInterval::new(q(-6, 1), q(3, 1)));
        assert_eq!(&a - &b, QInterval::new(q(-3, 2), q(5, 1)));
        assert_eq!(a.powi(2), QInterval::new(q(0, 1), q(4, 1)));
        assert_eq!(b.powi(3), QInterval::new(q(-27, 1), q(1, 8)));
        assert_eq!(QInterval::new(q(-3, 1), q(-1, 1)).powi(2), QInterval::new(q(1, 1), q(9, 1)));
    }

    #[test]
    #[should_panic]
    fn rejects_reversed_endpoints() {
        let _ = QInterval::new(q(1, 1), q(0, 1));
    }
}

//! Scalar abstraction shared by the exact (rational) and floating-point paths.
//!
//! Every generic container in this crate (`UniPoly`, `Matrix`, `TriPoly`,
//! `Interval`, ...) is parameterised over [`Scalar`]. Certification code is
//! instantiated with [`Rational`]; sampling and solver-facing code uses `f64`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::Rational;

/// Ordered field element usable by the generic algorithms.
pub trait Scalar: Clone + fmt::Debug + fmt::Display + PartialOrd + Signed + FromPrimitive + Send + Sync + 'static {
    /// `true` for exact arithmetic; pivoting and zero tests are then literal.
    const EXACT: bool;

    fn from_rational(q: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact rational value (floats convert bit-exactly).
    fn to_rational(&self) -> Rational;

    /// Whether elimination routines should treat the value as zero.
    fn is_negligible(&self) -> bool;

    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer fits scalar")
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Rational {
        f64_to_rational(*self)
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-12
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
}

/// `num/den` as a rational. Panics on a zero denominator.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Conversion that stays accurate when numerator and denominator overflow `f64`.
pub fn rational_to_f64(q: &Rational) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(q) {
        if v.is_finite() {
            return v;
        }
    }
    let nbits = q.numer().bits() as i64;
    let dbits = q.denom().bits() as i64;
    let shift = nbits.max(dbits) - 60;
    let (n, d) =
        if shift > 0 { (q.numer() >> shift as usize, q.denom() >> shift as usize) } else { (q.numer().clone(), q.denom().clone()) };
    let d = if d.is_zero() { BigInt::one() } else { d };
    n.to_f64().unwrap_or(0.0) / d.to_f64().unwrap_or(1.0)
}

/// Exact rational value of a finite `f64`.
pub fn f64_to_rational(v: f64) -> Rational {
    Rational::from_float(v).expect("finite float")
}

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"-0.25"`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(Rational::from_integer(n));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.')?;
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().ok()?;
    let d = num_traits::pow(BigInt::from(10), frac_part.len());
    let v = Rational::new(n, d);
    Some(if neg { -v } else { v })
}

/// Canonical `"p/q"` rendering (`"p"` for integers).
pub fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Exact square root when `q` is the square of a rational.
pub fn rational_sqrt_exact(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// Best rational approximation with denominator at most `max_den`
/// (continued-fraction convergents plus the admissible semiconvergent).
pub fn best_rational(v: f64, max_den: u64) -> Rational {
    best_rational_exact(&f64_to_rational(v), &BigInt::from(max_den))
}

pub fn best_rational_exact(v: &Rational, max_den: &BigInt) -> Rational {
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut x = v.clone();
    loop {
        let a = x.floor().to_integer();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if &q2 > max_den {
            // semiconvergent p0 + k p1 / q0 + k q1 with the largest admissible k
            let k = (max_den - &q0).div_floor(&q1);
            let cand_semi = Rational::new(&p0 + &k * &p1, &q0 + &k * &q1);
            let cand_conv = Rational::new(p1.clone(), q1.clone());
            let d_semi = (&cand_semi - v).abs();
            let d_conv = (&cand_conv - v).abs();
            return if d_semi < d_conv { cand_semi } else { cand_conv };
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let frac = &x - Rational::from_integer(a);
        if frac.is_zero() {
            return Rational::new(p1, q1);
        }
        x = frac.recip();
    }
}

/// Simplest rational (smallest denominator) in the closed interval `[lo, hi]`.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    assert!(lo <= hi);
    if lo.is_negative() && hi.is_positive() || lo.is_zero() || hi.is_zero() {
        return Rational::zero();
    }
    if hi.is_negative() {
        return -simplest_between(&-hi.clone(), &-lo.clone());
    }
    let fl = lo.floor();
    if &fl == lo {
        return fl;
    }
    if fl.clone() + Rational::one() <= *hi {
        return fl + Rational::one();
    }
    // lo and hi share the integer part; recurse on reciprocals of fractional parts
    let a = fl.clone();
    let inner = simplest_between(&(hi - &a).recip(), &(lo - &a).recip());
    a + inner.recip()
}

/// Serde adapters rendering rationals as `"p/q"` strings.
pub mod serde_q {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{fmt_rational, parse_rational};
    use crate::Rational;

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| D::Error::custom(format!("invalid rational {s:?}")))
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(r) => s.serialize_some(&fmt_rational(r)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| parse_rational(&s).ok_or_else(|| D::Error::custom(format!("invalid rational {s:?}"))))
                .transpose()
        }
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(fmt_rational))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            Vec::<String>::deserialize(d)?
                .into_iter()
                .map(|s| parse_rational(&s).ok_or_else(|| D::Error::custom(format!("invalid rational {s:?}"))))
                .collect()
        }
    }

    pub mod opt_vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<Vec<Rational>>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(r) => s.serialize_some(&r.iter().map(fmt_rational).collect::<Vec<_>>()),
                None => s.serialize_none(),
            }
        }
    }

    pub mod vec_vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|r| r.iter().map(fmt_rational).collect::<Vec<_>>()))
        }
    }

    pub mod matrix {
        use super::*;
        use crate::QMatrix;

        pub fn serialize<S: Serializer>(m: &QMatrix, s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(m.to_rows().iter().map(|r| r.iter().map(fmt_rational).collect::<Vec<_>>()))
        }
    }
}

//! Sparse polynomials in three variables `x, y, z`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::interval::{Box3, Interval};
use super::poly::UniPoly;
use crate::scalar::Scalar;

/// Exponent triple `(a, b, c)` of `x^a y^b z^c`.
pub type Exps = [u32; 3];

/// The six permutations of three coordinates.
pub const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

#[derive(Clone, Debug, PartialEq)]
pub struct TriPoly<T> {
    terms: BTreeMap<Exps, T>,
}

impl<T: Scalar> TriPoly<T> {
    pub fn zero() -> Self {
        TriPoly { terms: BTreeMap::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::monomial([0, 0, 0], c)
    }

    pub fn monomial(e: Exps, c: T) -> Self {
        let mut p = Self::zero();
        p.add_term(e, c);
        p
    }

    /// The coordinate function for variable `i` (0, 1, 2 = x, y, z).
    pub fn var(i: usize) -> Self {
        let mut e = [0; 3];
        e[i] = 1;
        Self::monomial(e, T::one())
    }

    pub fn add_term(&mut self, e: Exps, c: T) {
        if c.is_zero() {
            return;
        }
        let v = match self.terms.remove(&e) {
            Some(old) => old + c,
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(e, v);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &Exps) -> T {
        self.terms.get(e).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e[0] + e[1] + e[2]).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self::zero();
        for (e, v) in &self.terms {
            out.add_term(*e, v.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(T::one());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, p: &[T; 3]) -> T {
        let deg = self.terms.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0) as usize;
        let powers: Vec<Vec<T>> = p
            .iter()
            .map(|v| {
                let mut row = Vec::with_capacity(deg + 1);
                row.push(T::one());
                for i in 0..deg {
                    let next = row[i].clone() * v.clone();
                    row.push(next);
                }
                row
            })
            .collect();
        self.terms.iter().fold(T::zero(), |acc, (e, c)| {
            acc + c.clone() * powers[0][e[0] as usize].clone() * powers[1][e[1] as usize].clone() * powers[2][e[2] as usize].clone()
        })
    }

    /// Enclosure of the range over a box, by monomial-wise interval products.
    pub fn interval_eval(&self, bx: &Box3<T>) -> Interval<T> {
        let deg = self.terms.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0);
        let powers: Vec<Vec<Interval<T>>> = bx.iter().map(|iv| (0..=deg).map(|k| iv.powi(k)).collect()).collect();
        let mut acc = Interval::zero();
        for (e, c) in &self.terms {
            let m = &(&powers[0][e[0] as usize] * &powers[1][e[1] as usize]) * &powers[2][e[2] as usize];
            acc = &acc + &m.scale(c);
        }
        acc
    }

    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut f = *e;
            f[var] -= 1;
            out.add_term(f, c.clone() * T::from_int(e[var] as i64));
        }
        out
    }

    /// Substitutes `(x, y, z) -> (v[perm[0]], v[perm[1]], v[perm[2]])`.
    pub fn permute(&self, perm: [usize; 3]) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let mut f = [0; 3];
            for i in 0..3 {
                f[perm[i]] += e[i];
            }
            out.add_term(f, c.clone());
        }
        out
    }

    /// Average over the six variable permutations.
    pub fn symmetrize(&self) -> Self {
        let mut out = Self::zero();
        for perm in PERMUTATIONS {
            out = &out + &self.permute(perm);
        }
        out.scale(&(T::one() / T::from_int(6)))
    }

    pub fn is_symmetric(&self) -> bool {
        PERMUTATIONS.iter().all(|&p| self.permute(p) == *self)
    }

    /// `p(x, x, z0)` as a univariate polynomial in `x`.
    pub fn diagonal(&self, z0: &T) -> UniPoly<T> {
        let deg = self.terms.keys().map(|e| e[0] + e[1]).max().unwrap_or(0) as usize;
        let mut coeffs = vec![T::zero(); deg + 1];
        for (e, c) in &self.terms {
            let mut v = c.clone();
            for _ in 0..e[2] {
                v = v * z0.clone();
            }
            let i = (e[0] + e[1]) as usize;
            coeffs[i] = coeffs[i].clone() + v;
        }
        UniPoly::new(coeffs)
    }

    /// Univariate restriction along one coordinate with the other two fixed.
    pub fn along(&self, var: usize, fixed: &[T; 3]) -> UniPoly<T> {
        let deg = self.terms.keys().map(|e| e[var]).max().unwrap_or(0) as usize;
        let mut coeffs = vec![T::zero(); deg + 1];
        for (e, c) in &self.terms {
            let mut v = c.clone();
            for (i, val) in fixed.iter().enumerate() {
                if i != var {
                    for _ in 0..e[i] {
                        v = v * val.clone();
                    }
                }
            }
            let i = e[var] as usize;
            coeffs[i] = coeffs[i].clone() + v;
        }
        UniPoly::new(coeffs)
    }

    /// Re-expansion in shifted coordinates: returns `q` with `q(u) = p(center + u)`.
    pub fn shift(&self, center: &[T; 3]) -> Self {
        let mut out = Self::zero();
        let binom = |n: u32, k: u32| -> i64 {
            let mut r = 1i64;
            for i in 0..k {
                r = r * (n - i) as i64 / (i + 1) as i64;
            }
            r
        };
        let cpow = |v: &T, k: u32| {
            let mut r = T::one();
            for _ in 0..k {
                r = r * v.clone();
            }
            r
        };
        for (e, c) in &self.terms {
            for a in 0..=e[0] {
                let fa = T::from_int(binom(e[0], a)) * cpow(&center[0], e[0] - a);
                for b in 0..=e[1] {
                    let fb = T::from_int(binom(e[1], b)) * cpow(&center[1], e[1] - b);
                    for d in 0..=e[2] {
                        let fd = T::from_int(binom(e[2], d)) * cpow(&center[2], e[2] - d);
                        out.add_term([a, b, d], c.clone() * fa.clone() * fb.clone() * fd);
                    }
                }
            }
        }
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> TriPoly<U> {
        let mut out = TriPoly::zero();
        for (e, c) in &self.terms {
            out.add_term(*e, f(c));
        }
        out
    }
}

impl<T: Scalar> Add for &TriPoly<T> {
    type Output = TriPoly<T>;
    fn add(self, rhs: &TriPoly<T>) -> TriPoly<T> {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl<T: Scalar> Sub for &TriPoly<T> {
    type Output = TriPoly<T>;
    fn sub(self, rhs: &TriPoly<T>) -> TriPoly<T> {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl<T: Scalar> Mul for &TriPoly<T> {
    type Output = TriPoly<T>;
    fn mul(self, rhs: &TriPoly<T>) -> TriPoly<T> {
        let mut out = TriPoly::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                out.add_term([a[0] + b[0], a[1] + b[1], a[2] + b[2]], ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<T: Scalar> Neg for &TriPoly<T> {
    type Output = TriPoly<T>;
    fn neg(self) -> TriPoly<T> {
        self.scale(&-T::one())
    }
}

impl<T: Scalar> fmt::Display for TriPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(e, c)| {
                let mut s = format!("({c})");
                for (name, k) in ["x", "y", "z"].iter().zip(e) {
                    match k {
                        0 => {}
                        1 => s.push_str(name),
                        _ => s.push_str(&format!("{name}^{k}")),
                    }
                }
                s
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `1 + 2xyz - x^2 - y^2 - z^2`, nonnegative exactly on realisable inner-product triples.
pub fn gram_determinant<T: Scalar>() -> TriPoly<T> {
    let mut p = TriPoly::constant(T::one());
    p.add_term([1, 1, 1], T::from_int(2));
    for i in 0..3 {
        let mut e = [0; 3];
        e[i] = 2;
        p.add_term(e, -T::one());
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};
    use crate::{QInterval, QTriPoly};

    #[test]
    fn degenerate_box_gives_point_value() {
        let p: QTriPoly = gram_determinant();
        let s = QInterval::point(q(1, 6));
        let v = p.interval_eval(&[s.clone(), s.clone(), s]);
        assert_eq!(v, QInterval::point(q(25, 27)));
    }

    #[test]
    fn simple_enclosures() {
        let x = QTriPoly::var(0);
        let bx = [QInterval::new(qi(-1), qi(0)), QInterval::point(qi(0)), QInterval::point(qi(0))];
        assert_eq!(x.interval_eval(&bx), QInterval::new(qi(-1), qi(0)));
        let xy = &QTriPoly::var(0) * &QTriPoly::var(1);
        let u = QInterval::new(qi(-1), qi(1));
        let e = xy.interval_eval(&[u.clone(), u.clone(), u]);
        assert!(e.contains_interval(&QInterval::new(qi(-1), qi(1))));
    }

    #[test]
    fn shift_is_translation() {
        let p: QTriPoly = gram_determinant();
        let c = [q(-2, 3), q(1, 6), q(1, 6)];
        let s = p.shift(&c);
        let u = [q(1, 7), q(-3, 5), q(2, 9)];
        let moved = [&c[0] + &u[0], &c[1] + &u[1], &c[2] + &u[2]];
        assert_eq!(s.eval(&u), p.eval(&moved));
    }

    #[test]
    fn symmetrization_and_restrictions() {
        let m = QTriPoly::monomial([1, 2, 3], qi(1)).symmetrize();
        assert!(m.is_symmetric());
        assert_eq!(m.eval(&[qi(1), qi(2), qi(3)]), qi(48));
        let g: QTriPoly = gram_determinant();
        // 1 + 2x^2 - 2x^2 - 1 = 0 on (x, x, 1)
        assert!(g.diagonal(&qi(1)).is_zero());
        assert_eq!(g.partial(0).eval(&[qi(0), qi(1), qi(1)]), qi(2));
    }
}

//! Gegenbauer polynomials normalised to take the value 1 at `x = 1`.

use std::collections::BTreeMap;
use std::sync::RwLock;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::gram::GramMatrix;
use crate::scalar::{f64_to_rational, q, qi, rational_to_f64, Scalar};
use crate::{QPoly, Rational};

#[derive(Debug, Error, PartialEq)]
pub enum GegenbauerError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(i64),
}

/// Normalised Gegenbauer polynomial with parameter `lambda >= 0` (`lambda = 0`
/// gives Chebyshev polynomials of the first kind).
pub fn gegenbauer_lambda(lambda: &Rational, k: usize) -> QPoly {
    assert!(!lambda.is_negative(), "negative Gegenbauer parameter");
    gegenbauer_table(lambda, k).pop().unwrap()
}

/// All normalised polynomials of degree `0..=k`.
fn gegenbauer_table(lambda: &Rational, k: usize) -> Vec<QPoly> {
    let two = qi(2);
    let mut raw: Vec<QPoly> = vec![QPoly::constant(qi(1))];
    if k >= 1 {
        let c1 = if lambda.is_zero() { qi(1) } else { &two * lambda };
        raw.push(QPoly::new(vec![qi(0), c1]));
    }
    for m in 1..k {
        let mr = qi(m as i64);
        let xp = &QPoly::x() * &raw[m];
        let next = if lambda.is_zero() {
            &xp.scale(&two) - &raw[m - 1]
        } else {
            let a = &two * &(&mr + lambda);
            let b = &mr + &two * lambda - qi(1);
            (&xp.scale(&a) - &raw[m - 1].scale(&b)).scale(&(qi(1) / (&mr + qi(1))))
        };
        raw.push(next);
    }
    raw.into_iter()
        .map(|p| {
            let v = p.eval(&qi(1));
            p.scale(&(qi(1) / v))
        })
        .collect()
}

/// Parameter `n/2 - 1` of the dimension-`n` zonal polynomials.
pub fn lambda_for_dimension(n: i64) -> Result<Rational, GegenbauerError> {
    if n < 2 {
        return Err(GegenbauerError::DimensionTooSmall(n));
    }
    Ok(q(n - 2, 2))
}

/// `C^{n/2-1}_k` normalised at 1.
pub fn gegenbauer(n: i64, k: usize) -> Result<QPoly, GegenbauerError> {
    Ok(gegenbauer_lambda(&lambda_for_dimension(n)?, k))
}

pub fn eval(n: i64, k: usize, x: &Rational) -> Result<Rational, GegenbauerError> {
    Ok(gegenbauer(n, k)?.eval(x))
}

/// Per-dimension cache of normalised Gegenbauer polynomials.
#[derive(Debug)]
pub struct GegenbauerBasis {
    n: i64,
    lambda: Rational,
    cache: RwLock<Vec<QPoly>>,
}

impl GegenbauerBasis {
    pub fn new(n: i64) -> Result<Self, GegenbauerError> {
        let lambda = lambda_for_dimension(n)?;
        Ok(GegenbauerBasis { n, lambda, cache: RwLock::new(Vec::new()) })
    }

    pub fn dimension(&self) -> i64 {
        self.n
    }

    pub fn get(&self, k: usize) -> QPoly {
        if let Some(p) = self.cache.read().unwrap().get(k) {
            return p.clone();
        }
        let mut cache = self.cache.write().unwrap();
        if cache.len() <= k {
            *cache = gegenbauer_table(&self.lambda, k);
        }
        cache[k].clone()
    }

    /// `sum_k coeffs[k] C_k` as a polynomial in the monomial basis.
    pub fn combine(&self, coeffs: &[Rational]) -> QPoly {
        coeffs.iter().enumerate().fold(QPoly::zero(), |acc, (k, c)| &acc + &self.get(k).scale(c))
    }
}

/// `sum_{i,j} C_k(G_ij)` over all ordered pairs, diagonal included.
pub fn pair_sum<T: Scalar>(n: i64, k: usize, gram: &GramMatrix<T>) -> Result<T, GegenbauerError> {
    let p = gegenbauer(n, k)?.map(T::from_rational);
    let len = gram.len();
    let mut acc = T::zero();
    for i in 0..len {
        for j in 0..len {
            acc = acc + p.eval(gram.get(i, j));
        }
    }
    Ok(acc)
}

/// Exact `pair_sum` grouping equal inner products.
pub fn pair_sum_exact(n: i64, k: usize, gram: &GramMatrix<Rational>) -> Result<Rational, GegenbauerError> {
    let p = gegenbauer(n, k)?;
    let mut counts: BTreeMap<Rational, usize> = gram.ordered_pair_counts();
    *counts.entry(qi(1)).or_insert(0) += gram.len();
    Ok(counts.iter().fold(Rational::zero(), |acc, (v, c)| acc + p.eval(v) * qi(*c as i64)))
}

/// Result of [`cosine_identity_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct CosineCheck {
    pub max_error: f64,
    pub identity_holds: bool,
    /// Rational sample points at which the tail inequality was verified exactly.
    pub tail_points: Vec<Rational>,
    pub tail_holds: bool,
}

impl CosineCheck {
    pub fn passed(&self) -> bool {
        self.identity_holds && self.tail_holds
    }
}

/// Checks `C^1_k(cos t) = (1/(k+1)) sum_j cos((k-2j)t)` at the sample angles
/// (tolerance 1e-12), and the consequence `|C^1_k(x)| <= 1/((k+1) sqrt(1-x^2))`
/// exactly at the rational points `xs` (squared form, no radicals).
pub fn cosine_identity_check(k: usize, thetas: &[f64], xs: &[Rational]) -> CosineCheck {
    let p = gegenbauer_lambda(&qi(1), k);
    let mut max_error = 0.0f64;
    for &t in thetas {
        let lhs = rational_to_f64(&p.eval(&f64_to_rational(t.cos())));
        let rhs = (0..=k).map(|j| ((k as f64 - 2.0 * j as f64) * t).cos()).sum::<f64>() / (k as f64 + 1.0);
        max_error = max_error.max((lhs - rhs).abs());
    }
    let kk = qi(k as i64 + 1);
    let tail_holds = xs.iter().all(|x| {
        let v = p.eval(x);
        let one_minus = qi(1) - x * x;
        one_minus.is_positive() && &v * &v * &kk * &kk * one_minus <= qi(1)
    });
    CosineCheck { max_error, identity_holds: max_error <= 1e-12, tail_points: xs.to_vec(), tail_holds }
}

/// Verifies `r >= 1/sqrt(1 - x^2)` exactly, i.e. `r > 0` and `r^2 (1 - x^2) >= 1`.
pub fn is_inverse_sqrt_upper_bound(x: &Rational, r: &Rational) -> bool {
    let one_minus = Rational::one() - x * x;
    r.is_positive() && one_minus.is_positive() && r * r * one_minus >= Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::matrix::qmatrix;
    use crate::QGram;

    #[test]
    fn low_degree_forms() {
        assert_eq!(gegenbauer(4, 1).unwrap(), QPoly::x());
        assert_eq!(gegenbauer(4, 2).unwrap(), QPoly::new(vec![q(-1, 3), qi(0), q(4, 3)]));
        assert_eq!(gegenbauer(4, 3).unwrap(), QPoly::new(vec![qi(0), qi(-1), qi(0), qi(2)]));
        assert_eq!(gegenbauer(2, 2).unwrap(), QPoly::new(vec![qi(-1), qi(0), qi(2)]));
        assert_eq!(gegenbauer(3, 2).unwrap(), QPoly::new(vec![q(-1, 2), qi(0), q(3, 2)]));
        assert_eq!(gegenbauer(1, 2), Err(GegenbauerError::DimensionTooSmall(1)));
    }

    #[test]
    fn values() {
        assert_eq!(eval(4, 2, &q(-2, 3)).unwrap(), q(7, 27));
        assert_eq!(eval(4, 3, &q(1, 6)).unwrap(), q(-17, 108));
        for k in 0..12 {
            assert_eq!(eval(4, k, &qi(1)).unwrap(), qi(1));
        }
    }

    #[test]
    fn basis_cache_matches_direct() {
        let b = GegenbauerBasis::new(5).unwrap();
        assert_eq!(b.get(6), gegenbauer(5, 6).unwrap());
        assert_eq!(b.get(2), gegenbauer(5, 2).unwrap());
    }

    #[test]
    fn cosine_identity() {
        let c = cosine_identity_check(1, &[std::f64::consts::FRAC_PI_3], &[]);
        assert!(c.passed());
        let c = cosine_identity_check(2, &[], &[q(-2, 3)]);
        assert!(c.tail_holds);
        assert!(is_inverse_sqrt_upper_bound(&q(-2, 3), &q(1342, 1000)));
        assert!(!is_inverse_sqrt_upper_bound(&q(-2, 3), &q(1341, 1000)));
    }

    #[test]
    fn simplex_pair_sum() {
        let g = QGram::new(qmatrix(&[&["1", "-1/2", "-1/2"], &["-1/2", "1", "-1/2"], &["-1/2", "-1/2", "1"]])).unwrap();
        assert_eq!(pair_sum(2, 1, &g).unwrap(), qi(0));
        assert_eq!(pair_sum(2, 0, &g).unwrap(), qi(9));
        assert_eq!(pair_sum_exact(2, 1, &g).unwrap(), qi(0));
    }
}

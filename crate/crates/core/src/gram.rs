//! Gram matrices of finite point sets on the unit sphere.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::exact::matrix::{dot, Matrix};
use crate::scalar::Scalar;
use crate::Rational;

#[derive(Debug, Error, PartialEq)]
pub enum GramError {
    #[error("Gram matrix is not square and symmetric")]
    NotSymmetric,
    #[error("diagonal entry {0} is not 1")]
    DiagonalNotOne(usize),
}

/// Symmetric matrix of pairwise inner products with unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix<T> {
    m: Matrix<T>,
}

pub type QGram = GramMatrix<Rational>;
pub type FGram = GramMatrix<f64>;

impl<T: Scalar> GramMatrix<T> {
    pub fn new(m: Matrix<T>) -> Result<Self, GramError> {
        if !m.is_symmetric() {
            return Err(GramError::NotSymmetric);
        }
        for i in 0..m.rows() {
            if !(m[(i, i)].clone() - T::one()).is_negligible() {
                return Err(GramError::DiagonalNotOne(i));
            }
        }
        Ok(GramMatrix { m })
    }

    /// Gram matrix of the given (unit) vectors.
    pub fn from_points(points: &[Vec<T>]) -> Result<Self, GramError> {
        let n = points.len();
        Self::new(Matrix::from_fn(n, n, |i, j| dot(&points[i], &points[j])))
    }

    pub fn len(&self) -> usize {
        self.m.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.m.rows() == 0
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.m[(i, j)]
    }

    /// Largest off-diagonal entry, `None` for fewer than two points.
    pub fn max_inner_product(&self) -> Option<T> {
        let n = self.len();
        let mut best: Option<T> = None;
        for i in 0..n {
            for j in i + 1..n {
                let v = self.m[(i, j)].clone();
                best = Some(match best {
                    Some(b) => T::max_of(b, v),
                    None => v,
                });
            }
        }
        best
    }
}

impl QGram {
    /// Multiplicities of each inner-product value over ordered pairs `(i, j)`, `i != j`.
    pub fn ordered_pair_counts(&self) -> BTreeMap<Rational, usize> {
        let mut out = BTreeMap::new();
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    *out.entry(self.m[(i, j)].clone()).or_insert(0) += 1;
                }
            }
        }
        out
    }
}

/// `count` independent uniform points on the unit sphere in `dim` dimensions.
pub fn random_sphere_points<R: Rng>(rng: &mut R, dim: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-9 {
                break v.into_iter().map(|a| a / norm).collect();
            }
        })
        .collect()
}

/// Gram matrix of `count` random unit vectors, with the diagonal set to exactly 1.
pub fn random_gram<R: Rng>(rng: &mut R, dim: usize, count: usize) -> FGram {
    let pts = random_sphere_points(rng, dim, count);
    let m = Matrix::from_fn(count, count, |i, j| if i == j { 1.0 } else { dot(&pts[i], &pts[j]) });
    GramMatrix::new(m).expect("unit vectors")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::matrix::qmatrix;
    use rand::SeedableRng;

    #[test]
    fn validation() {
        assert_eq!(QGram::new(qmatrix(&[&["1", "0"], &["0", "2"]])), Err(GramError::DiagonalNotOne(1)));
        assert_eq!(QGram::new(qmatrix(&[&["1", "1/2"], &["0", "1"]])), Err(GramError::NotSymmetric));
        let g = QGram::new(qmatrix(&[&["1", "-1/2"], &["-1/2", "1"]])).unwrap();
        assert_eq!(g.max_inner_product(), Some(crate::scalar::q(-1, 2)));
    }

    #[test]
    fn random_points_are_unit() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for p in random_sphere_points(&mut rng, 4, 5) {
            assert!((dot(&p, &p) - 1.0).abs() < 1e-12);
        }
    }
}

//! Exact linear algebra: fraction-free elimination, solving, null spaces and
//! a pivoted LDL^T semidefiniteness test that produces a witness on failure.

use num_traits::One;
use thiserror::Error;

use super::matrix::{dot, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Result of `ldlt_psd`.
#[derive(Clone, Debug, PartialEq)]
pub enum PsdVerdict<T> {
    /// `P M P^T = L D L^T` with `D >= 0`; `perm[i]` is the original index of row `i`.
    Psd { perm: Vec<usize>, l: Matrix<T>, d: Vec<T> },
    /// `witness^T M witness = value < 0`.
    NotPsd { witness: Vec<T>, value: T },
}

impl<T: Scalar> PsdVerdict<T> {
    pub fn is_psd(&self) -> bool {
        matches!(self, PsdVerdict::Psd { .. })
    }

    /// PSD with every pivot strictly positive.
    pub fn is_positive_definite(&self) -> bool {
        match self {
            PsdVerdict::Psd { d, .. } => d.iter().all(|v| v.is_positive() && !v.is_negligible()),
            PsdVerdict::NotPsd { .. } => false,
        }
    }
}

/// Symmetric-pivoted LDL^T. A zero pivot is accepted only when its whole
/// remaining row and column vanish; otherwise a negative direction is returned.
pub fn ldlt_psd<T: Scalar>(m: &Matrix<T>) -> Result<PsdVerdict<T>, LinalgError> {
    if !m.is_symmetric() {
        return Err(LinalgError::NotSymmetric);
    }
    let n = m.rows();
    let mut s = m.clone();
    let mut l = Matrix::<T>::identity(n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut d: Vec<T> = Vec::with_capacity(n);

    for k in 0..n {
        // a negative diagonal entry in the Schur complement is an immediate witness
        if let Some(i) = (k..n).find(|&i| s[(i, i)].is_negative() && !s[(i, i)].is_negligible()) {
            let mut w = vec![T::zero(); n - k];
            w[i - k] = T::one();
            return Ok(witness_from_schur(m, &l, &perm, k, w));
        }
        let mut p = k;
        for i in k + 1..n {
            if s[(i, i)] > s[(p, p)] {
                p = i;
            }
        }
        if s[(p, p)].is_negligible() {
            for i in k..n {
                for j in k..i {
                    if !s[(i, j)].is_negligible() {
                        let mut w = vec![T::zero(); n - k];
                        w[i - k] = T::one();
                        w[j - k] = if s[(i, j)].is_positive() { -T::one() } else { T::one() };
                        return Ok(witness_from_schur(m, &l, &perm, k, w));
                    }
                }
            }
            d.extend((k..n).map(|_| T::zero()));
            return Ok(PsdVerdict::Psd { perm, l, d });
        }
        if p != k {
            swap_sym(&mut s, p, k);
            for j in 0..k {
                let a = l[(p, j)].clone();
                l[(p, j)] = l[(k, j)].clone();
                l[(k, j)] = a;
            }
            perm.swap(p, k);
        }
        let pivot = s[(k, k)].clone();
        for i in k + 1..n {
            l[(i, k)] = s[(i, k)].clone() / pivot.clone();
        }
        for i in k + 1..n {
            if l[(i, k)].is_zero() {
                continue;
            }
            for j in k + 1..=i {
                let v = s[(i, j)].clone() - l[(i, k)].clone() * s[(k, j)].clone();
                s[(i, j)] = v.clone();
                s[(j, i)] = v;
            }
        }
        for i in k + 1..n {
            s[(i, k)] = T::zero();
            s[(k, i)] = T::zero();
        }
        d.push(pivot);
    }
    Ok(PsdVerdict::Psd { perm, l, d })
}

fn swap_sym<T: Scalar>(s: &mut Matrix<T>, a: usize, b: usize) {
    let n = s.rows();
    for j in 0..n {
        let t = s[(a, j)].clone();
        s[(a, j)] = s[(b, j)].clone();
        s[(b, j)] = t;
    }
    for i in 0..n {
        let t = s[(i, a)].clone();
        s[(i, a)] = s[(i, b)].clone();
        s[(i, b)] = t;
    }
}

/// Lifts a negative direction of the trailing Schur complement to the original coordinates.
fn witness_from_schur<T: Scalar>(m: &Matrix<T>, l: &Matrix<T>, perm: &[usize], k: usize, w: Vec<T>) -> PsdVerdict<T> {
    let n = m.rows();
    let mut u = vec![T::zero(); n];
    for (i, wi) in w.into_iter().enumerate() {
        u[k + i] = wi;
    }
    for i in (0..k).rev() {
        let mut acc = T::zero();
        for j in i + 1..n {
            acc = acc + l[(j, i)].clone() * u[j].clone();
        }
        u[i] = -acc;
    }
    let mut v = vec![T::zero(); n];
    for (i, ui) in u.into_iter().enumerate() {
        v[perm[i]] = ui;
    }
    let value = m.quadratic_form(&v);
    if T::EXACT {
        assert!(value.is_negative(), "LDL^T witness failed to certify (value {value})");
    }
    PsdVerdict::NotPsd { witness: v, value }
}

/// Fraction-free (Bareiss) forward elimination in place. Returns pivot columns.
fn bareiss_echelon<T: Scalar>(a: &mut Matrix<T>) -> Vec<usize> {
    let (rows, cols) = (a.rows(), a.cols());
    let mut prev = T::one();
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..cols {
        if r == rows {
            break;
        }
        let pick = if T::EXACT {
            (r..rows).find(|&i| !a[(i, c)].is_zero())
        } else {
            (r..rows).filter(|&i| !a[(i, c)].is_negligible()).max_by(|&i, &j| a[(i, c)].abs().partial_cmp(&a[(j, c)].abs()).unwrap())
        };
        let Some(p) = pick else { continue };
        if p != r {
            for j in 0..cols {
                let t = a[(p, j)].clone();
                a[(p, j)] = a[(r, j)].clone();
                a[(r, j)] = t;
            }
        }
        let piv = a[(r, c)].clone();
        for i in r + 1..rows {
            let f = a[(i, c)].clone();
            for j in c + 1..cols {
                let v = (piv.clone() * a[(i, j)].clone() - f.clone() * a[(r, j)].clone()) / prev.clone();
                a[(i, j)] = v;
            }
            a[(i, c)] = T::zero();
        }
        if T::EXACT {
            prev = piv;
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Scales every row of an exact matrix to integer entries (row space unchanged).
fn integerize_rows(a: &mut crate::QMatrix) {
    use num_integer::Integer;
    for i in 0..a.rows() {
        let mut l = num_bigint::BigInt::one();
        for j in 0..a.cols() {
            l = l.lcm(a[(i, j)].denom());
        }
        if !l.is_one() {
            let f = crate::Rational::from_integer(l);
            for j in 0..a.cols() {
                a[(i, j)] = a[(i, j)].clone() * f.clone();
            }
        }
    }
}

fn prepare<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let mut w = a.clone();
    if T::EXACT {
        let mut q = w.map(|v| v.to_rational());
        integerize_rows(&mut q);
        w = q.map(T::from_rational);
    }
    w
}

/// Exact rank by fraction-free elimination.
pub fn rank<T: Scalar>(m: &Matrix<T>) -> usize {
    let mut w = prepare(m);
    bareiss_echelon(&mut w).len()
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolutionReport<T> {
    Unique(Vec<T>),
    /// `particular + span(directions)`.
    Affine {
        particular: Vec<T>,
        directions: Vec<Vec<T>>,
    },
    /// `certificate^T A = 0` while `certificate^T b != 0`.
    Inconsistent {
        certificate: Vec<T>,
    },
}

impl<T: Scalar> SolutionReport<T> {
    pub fn unique(&self) -> Option<&[T]> {
        match self {
            SolutionReport::Unique(x) => Some(x),
            _ => None,
        }
    }
}

/// Reduced row echelon form of `[A | b]` and its pivot columns.
fn rref<T: Scalar>(aug: &Matrix<T>) -> (Matrix<T>, Vec<usize>) {
    let mut w = prepare(aug);
    let pivots = bareiss_echelon(&mut w);
    let cols = w.cols();
    for (r, &c) in pivots.iter().enumerate().rev() {
        let piv = w[(r, c)].clone();
        for j in c..cols {
            w[(r, j)] = w[(r, j)].clone() / piv.clone();
        }
        for i in 0..r {
            let f = w[(i, c)].clone();
            if f.is_negligible() {
                continue;
            }
            for j in c..cols {
                let v = w[(i, j)].clone() - f.clone() * w[(r, j)].clone();
                w[(i, j)] = v;
            }
        }
    }
    (w, pivots)
}

/// Solves `A x = b` exactly.
pub fn solve_linear<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<SolutionReport<T>, LinalgError> {
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch(format!("{} equations but {} right-hand sides", a.rows(), b.len())));
    }
    let n = a.cols();
    let aug = Matrix::from_fn(a.rows(), n + 1, |i, j| if j < n { a[(i, j)].clone() } else { b[i].clone() });
    let (r, pivots) = rref(&aug);
    if pivots.last() == Some(&n) {
        let certificate = left_null_certificate(a, b);
        return Ok(SolutionReport::Inconsistent { certificate });
    }
    let mut x = vec![T::zero(); n];
    for (row, &c) in pivots.iter().enumerate() {
        x[c] = r[(row, n)].clone();
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    if free.is_empty() {
        return Ok(SolutionReport::Unique(x));
    }
    let directions = free
        .iter()
        .map(|&f| {
            let mut v = vec![T::zero(); n];
            v[f] = T::one();
            for (row, &c) in pivots.iter().enumerate() {
                v[c] = -r[(row, f)].clone();
            }
            v
        })
        .collect();
    Ok(SolutionReport::Affine { particular: x, directions })
}

fn left_null_certificate<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Vec<T> {
    nullspace(&a.transpose()).into_iter().find(|y| !dot(y, b).is_negligible()).unwrap_or_default()
}

/// Basis of `{x : M x = 0}`.
pub fn nullspace<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<T>> {
    let zeros = vec![T::zero(); m.rows()];
    match solve_linear(m, &zeros).expect("shapes agree") {
        SolutionReport::Unique(_) => Vec::new(),
        SolutionReport::Affine { directions, .. } => directions,
        SolutionReport::Inconsistent { .. } => unreachable!("homogeneous systems are consistent"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::matrix::qmatrix;
    use crate::scalar::{q, qi};
    use crate::QMatrix;

    #[test]
    fn identity_is_psd_with_unit_pivots() {
        match ldlt_psd(&QMatrix::identity(3)).unwrap() {
            PsdVerdict::Psd { d, .. } => assert_eq!(d, vec![qi(1), qi(1), qi(1)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sign_case_witness() {
        let m = qmatrix(&[&["1", "0"], &["0", "-1"]]);
        match ldlt_psd(&m).unwrap() {
            PsdVerdict::NotPsd { witness, value } => {
                assert_eq!(witness, vec![qi(0), qi(1)]);
                assert_eq!(value, qi(-1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singular_psd_block_with_zero_row() {
        let f1 = qmatrix(&[&["0", "0", "0"], &["0", "3588", "-4536"], &["0", "-4536", "11664"]]);
        let v = ldlt_psd(&f1).unwrap();
        assert!(v.is_psd());
        assert!(!v.is_positive_definite());
    }

    #[test]
    fn zero_diagonal_with_coupling_is_not_psd() {
        let m = qmatrix(&[&["0", "1"], &["1", "5"]]);
        match ldlt_psd(&m).unwrap() {
            PsdVerdict::NotPsd { witness, value } => {
                assert!(value < qi(0));
                assert_eq!(m.quadratic_form(&witness), value);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_symmetric_rejected() {
        let m = qmatrix(&[&["1", "2"], &["3", "4"]]);
        assert_eq!(ldlt_psd(&m), Err(LinalgError::NotSymmetric));
    }

    #[test]
    fn ranks() {
        assert_eq!(rank(&QMatrix::zeros(4, 4)), 0);
        assert_eq!(rank(&QMatrix::identity(10)), 10);
        assert_eq!(rank(&qmatrix(&[&["1", "2"], &["2", "4"]])), 1);
    }

    #[test]
    fn solve_cases() {
        let r = solve_linear(&QMatrix::identity(2), &[qi(1), qi(2)]).unwrap();
        assert_eq!(r, SolutionReport::Unique(vec![qi(1), qi(2)]));
        let r = solve_linear(&qmatrix(&[&["0"]]), &[qi(1)]).unwrap();
        match r {
            SolutionReport::Inconsistent { certificate } => assert_eq!(certificate.len(), 1),
            other => panic!("{other:?}"),
        }
        let r = solve_linear(&qmatrix(&[&["1", "1"]]), &[q(1, 2)]).unwrap();
        match r {
            SolutionReport::Affine { particular, directions } => {
                assert_eq!(particular, vec![q(1, 2), qi(0)]);
                assert_eq!(directions, vec![vec![qi(-1), qi(1)]]);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(solve_linear(&QMatrix::identity(2), &[qi(1)]), Err(LinalgError::DimensionMismatch(_))));
    }

    #[test]
    fn float_elimination_agrees() {
        let m = Matrix::<f64>::from_rows(vec![vec![2.0, 1.0], vec![1.0, 3.0]]);
        assert_eq!(rank(&m), 2);
        let r = solve_linear(&m, &[3.0, 5.0]).unwrap();
        let x = r.unique().unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
    }
}

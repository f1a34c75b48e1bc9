//! Dense tableau simplex for `max c^T y  s.t.  A y <= b, y >= 0` with `b >= 0`.

use crate::exact::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum LpStatus {
    Optimal,
    Unbounded { column: usize },
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub y: Vec<T>,
    /// Shadow prices of the `A y <= b` rows (optimal solution of the dual).
    pub duals: Vec<T>,
    pub objective: T,
    pub pivots: usize,
}

fn positive<T: Scalar>(v: &T) -> bool {
    v.is_positive() && !v.is_negligible()
}

/// Dantzig pricing, switching to Bland's rule after a run of degenerate pivots.
pub fn maximize<T: Scalar>(a: &Matrix<T>, b: &[T], c: &[T], max_pivots: usize) -> LpSolution<T> {
    let (m, n) = (a.rows(), a.cols());
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), n);
    assert!(b.iter().all(|v| !v.is_negative()), "origin must be feasible");
    let width = n + m + 1;
    let mut tab = Matrix::<T>::zeros(m + 1, width);
    for i in 0..m {
        for j in 0..n {
            tab[(i, j)] = a[(i, j)].clone();
        }
        tab[(i, n + i)] = T::one();
        tab[(i, width - 1)] = b[i].clone();
    }
    for j in 0..n {
        tab[(m, j)] = -c[j].clone();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut pivots = 0;
    let mut degenerate_run = 0;
    let status = loop {
        if pivots >= max_pivots {
            break LpStatus::IterationLimit;
        }
        let bland = degenerate_run > 50;
        let mut enter = None;
        for j in 0..width - 1 {
            let r = &tab[(m, j)];
            if r.is_negative() && !r.is_negligible() {
                match enter {
                    None => enter = Some(j),
                    Some(e) if !bland && r < &tab[(m, e)] => enter = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
        }
        let Some(e) = enter else { break LpStatus::Optimal };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if !positive(&tab[(i, e)]) {
                continue;
            }
            let ratio = tab[(i, width - 1)].clone() / tab[(i, e)].clone();
            leave = match leave {
                None => Some(i),
                Some(l) => {
                    let best = tab[(l, width - 1)].clone() / tab[(l, e)].clone();
                    if ratio < best || (ratio == best && basis[i] < basis[l]) {
                        Some(i)
                    } else {
                        Some(l)
                    }
                }
            };
        }
        let Some(l) = leave else { break LpStatus::Unbounded { column: e } };
        if tab[(l, width - 1)].is_negligible() {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        pivot(&mut tab, l, e);
        basis[l] = e;
        pivots += 1;
    };
    let mut y = vec![T::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            y[bv] = tab[(i, width - 1)].clone();
        }
    }
    let duals = (0..m).map(|i| tab[(m, n + i)].clone()).collect();
    LpSolution { status, y, duals, objective: tab[(m, width - 1)].clone(), pivots }
}

fn pivot<T: Scalar>(tab: &mut Matrix<T>, r: usize, c: usize) {
    let (rows, cols) = (tab.rows(), tab.cols());
    let p = tab[(r, c)].clone();
    for j in 0..cols {
        tab[(r, j)] = tab[(r, j)].clone() / p.clone();
    }
    for i in 0..rows {
        if i == r {
            continue;
        }
        let f = tab[(i, c)].clone();
        if f.is_zero() {
            continue;
        }
        for j in 0..cols {
            let v = tab[(i, j)].clone() - f.clone() * tab[(r, j)].clone();
            tab[(i, j)] = v;
        }
        tab[(i, c)] = T::zero();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::matrix::qmatrix;
    use crate::scalar::{q, qi};

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let a = qmatrix(&[&["1", "0"], &["0", "2"], &["3", "2"]]);
        let s = maximize(&a, &[qi(4), qi(12), qi(18)], &[qi(3), qi(5)], 100);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.y, vec![qi(2), qi(6)]);
        assert_eq!(s.objective, qi(36));
        // dual: (0, 3/2, 1)
        assert_eq!(s.duals, vec![qi(0), q(3, 2), qi(1)]);
    }

    #[test]
    fn unbounded_detected() {
        let a = qmatrix(&[&["-1", "1"]]);
        let s = maximize(&a, &[qi(1)], &[qi(1), qi(0)], 100);
        assert!(matches!(s.status, LpStatus::Unbounded { .. }));
    }

    #[test]
    fn float_agrees() {
        let a = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]]);
        let s = maximize(&a, &[4.0, 12.0, 18.0], &[3.0, 5.0], 100);
        assert!((s.objective - 36.0).abs() < 1e-12);
    }
}

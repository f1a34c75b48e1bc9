//! Linear-programming bounds: exact verification of a Gegenbauer-expanded
//! polynomial, grid-plus-cutting-plane optimisation, and the obstruction
//! showing that the LP bound cannot be tight for the ten-point code.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::linalg::{solve_linear, SolutionReport};
use crate::exact::matrix::Matrix;
use crate::exact::sturm::{max_upper_bound, sturm_max_on, SignVerdict};
use crate::gegenbauer::{cosine_identity_check, is_inverse_sqrt_upper_bound, pair_sum_exact, GegenbauerBasis, GegenbauerError};
use crate::gram::QGram;
use crate::scalar::{best_rational, fmt_rational, q, qi, serde_q, simplest_between};
use crate::simplex::{maximize, LpStatus};
use crate::{QMatrix, QPoly, Rational};

#[derive(Debug, Error)]
pub enum LpError {
    #[error(transparent)]
    Gegenbauer(#[from] GegenbauerError),
    #[error("degree must be at least 1")]
    DegreeTooSmall,
    #[error("t must lie in [-1, 1), got {0}")]
    BadThreshold(String),
    #[error("the discretised LP is infeasible: no polynomial of degree {d} with nonnegative coefficients is <= 0 at grid point {point}")]
    Infeasible { d: usize, point: f64 },
    #[error("cutting planes did not converge after {rounds} rounds (max violation {violation:e})")]
    NotConverged { rounds: usize, violation: f64, best: LpPolynomial },
}

/// `F = sum_k f_k C_k` in dimension `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpPolynomial {
    pub n: i64,
    #[serde(with = "serde_q::vec")]
    pub f: Vec<Rational>,
}

impl LpPolynomial {
    pub fn new(n: i64, f: Vec<Rational>) -> Self {
        LpPolynomial { n, f }
    }

    pub fn degree(&self) -> usize {
        self.f.len().saturating_sub(1)
    }

    pub fn to_poly(&self) -> Result<QPoly, GegenbauerError> {
        Ok(GegenbauerBasis::new(self.n)?.combine(&self.f))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpReport {
    pub feasible: bool,
    /// `F(1) / f_0` when every condition holds.
    #[serde(with = "serde_q::opt")]
    pub bound: Option<Rational>,
    /// Point of `[-1, t]` where `F > 0`, when condition (c) fails.
    #[serde(with = "serde_q::opt")]
    pub witness: Option<Rational>,
    pub failures: Vec<String>,
}

/// Checks nonnegative coefficients, `f_0 > 0` and `F <= 0` on `[-1, t]`.
pub fn verify_lp(f: &LpPolynomial, t: &Rational) -> Result<LpReport, LpError> {
    let mut failures = Vec::new();
    for (k, c) in f.f.iter().enumerate().skip(1) {
        if c.is_negative() {
            failures.push(format!("coefficient f_{k} = {} is negative", fmt_rational(c)));
        }
    }
    let f0 = f.f.first().cloned().unwrap_or_else(Rational::zero);
    if !f0.is_positive() {
        failures.push(format!("f_0 = {} is not positive", fmt_rational(&f0)));
    }
    let p = f.to_poly()?;
    let witness = match sturm_max_on(&p, &qi(-1), t) {
        SignVerdict::NonPositive => None,
        SignVerdict::PositiveWitness(x) => {
            failures.push(format!("F({}) = {} > 0", fmt_rational(&x), fmt_rational(&p.eval(&x))));
            Some(x)
        }
    };
    let feasible = failures.is_empty();
    let bound = feasible.then(|| p.eval(&qi(1)) / f0);
    Ok(LpReport { feasible, bound, witness, failures })
}

/// How the exact certificate was obtained from the numeric LP solution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Certification {
    /// Touching points recognised as rationals and the tight system solved exactly.
    Polished,
    /// Rounded coefficients with `f_0` lowered by a certified upper bound on `max F`.
    Restored,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpOutcome {
    pub polynomial: LpPolynomial,
    pub report: LpReport,
    pub certification: Certification,
    pub rounds: usize,
    pub numeric_bound: f64,
}

/// Chebyshev extrema on `[a, b]`, endpoints included.
pub fn chebyshev_grid(a: f64, b: f64, size: usize) -> Vec<f64> {
    if size < 2 {
        return vec![b];
    }
    let mut g: Vec<f64> = (0..size)
        .map(|i| {
            let th = std::f64::consts::PI * i as f64 / (size - 1) as f64;
            0.5 * (a + b) + 0.5 * (b - a) * th.cos()
        })
        .collect();
    g.sort_by(|x, y| x.partial_cmp(y).unwrap());
    g[0] = a;
    g[size - 1] = b;
    g
}

fn eval_f64(coeffs: &[Vec<f64>], f: &[f64], x: f64) -> f64 {
    f.iter().zip(coeffs).map(|(fk, ck)| fk * ck.iter().rev().fold(0.0, |acc, c| acc * x + c)).sum()
}

/// Numeric maximum of `F` on `[a, b]`: dense scan plus golden-section refinement.
fn numeric_max(coeffs: &[Vec<f64>], f: &[f64], a: f64, b: f64) -> (f64, f64) {
    let samples = 4000;
    let xs: Vec<f64> = (0..=samples).map(|i| a + (b - a) * i as f64 / samples as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| eval_f64(coeffs, f, x)).collect();
    let mut best = (xs[0], vals[0]);
    for i in 0..=samples {
        let is_local = (i == 0 || vals[i] >= vals[i - 1]) && (i == samples || vals[i] >= vals[i + 1]);
        if !is_local {
            continue;
        }
        let (mut lo, mut hi) = (xs[i.saturating_sub(1)], xs[(i + 1).min(samples)]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let m1 = hi - g * (hi - lo);
            let m2 = lo + g * (hi - lo);
            if eval_f64(coeffs, f, m1) < eval_f64(coeffs, f, m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        for x in [0.5 * (lo + hi), xs[i]] {
            let v = eval_f64(coeffs, f, x);
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    best
}

/// Minimises `F(1)/f_0` over degree-`d` polynomials with `f_0 = 1`, nonnegative
/// coefficients and `F <= 0` on `[-1, t]`, then certifies the result exactly.
pub fn optimize_lp(n: i64, t: &Rational, d: usize, grid_size: usize) -> Result<LpOutcome, LpError> {
    if d < 1 {
        return Err(LpError::DegreeTooSmall);
    }
    if t < &qi(-1) || t >= &qi(1) {
        return Err(LpError::BadThreshold(fmt_rational(t)));
    }
    let basis = GegenbauerBasis::new(n)?;
    let coeffs: Vec<Vec<f64>> = (0..=d).map(|k| basis.get(k).coeffs().iter().map(crate::scalar::rational_to_f64).collect()).collect();
    let tf = crate::scalar::rational_to_f64(t);
    let mut grid = chebyshev_grid(-1.0, tf, grid_size);
    let max_rounds = 50;
    let mut rounds = 0;
    let (f, y) = loop {
        rounds += 1;
        // dual of: min sum f_k  s.t.  -sum_k f_k C_k(x_j) >= 1, f >= 0
        let a = Matrix::from_fn(d, grid.len(), |k, j| -eval_f64(&coeffs[k + 1..k + 2], &[1.0], grid[j]));
        let sol = maximize(&a, &vec![1.0; d], &vec![1.0; grid.len()], 100_000);
        match sol.status {
            LpStatus::Unbounded { column } => return Err(LpError::Infeasible { d, point: grid[column.min(grid.len() - 1)] }),
            LpStatus::IterationLimit => {
                return Err(LpError::NotConverged { rounds, violation: f64::NAN, best: LpPolynomial::new(n, vec![qi(1)]) })
            }
            LpStatus::Optimal => {}
        }
        let mut f = vec![1.0];
        f.extend(sol.duals.iter().map(|v| v.max(0.0)));
        let (xmax, vmax) = numeric_max(&coeffs, &f, -1.0, tf);
        if vmax <= 1e-10 || rounds >= max_rounds {
            if vmax > 1e-6 {
                let best = LpPolynomial::new(n, f.iter().map(|v| best_rational(*v, 1_000_000_000)).collect());
                return Err(LpError::NotConverged { rounds, violation: vmax, best });
            }
            break (f, (sol.y, grid.clone()));
        }
        grid.push(xmax);
        grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    };
    let numeric_bound = f.iter().sum::<f64>();
    if let Some(poly) = polish(n, t, &basis, &f, &y.0, &y.1)? {
        let report = verify_lp(&poly, t)?;
        return Ok(LpOutcome { polynomial: poly, report, certification: Certification::Polished, rounds, numeric_bound });
    }
    let poly = restore(n, t, &basis, &f)?;
    let report = verify_lp(&poly, t)?;
    Ok(LpOutcome { polynomial: poly, report, certification: Certification::Restored, rounds, numeric_bound })
}

/// Clusters of active grid points (positive dual weight), as weighted centres.
fn touching_points(weights: &[f64], grid: &[f64]) -> Vec<f64> {
    let mut active: Vec<(f64, f64)> = weights.iter().zip(grid).filter(|(w, _)| **w > 1e-12).map(|(w, x)| (*x, *w)).collect();
    active.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out = Vec::new();
    let mut cluster: Vec<(f64, f64)> = Vec::new();
    for p in active {
        if let Some(last) = cluster.last() {
            if p.0 - last.0 > 1e-2 {
                let wsum: f64 = cluster.iter().map(|c| c.1).sum();
                out.push(cluster.iter().map(|c| c.0 * c.1).sum::<f64>() / wsum);
                cluster.clear();
            }
        }
        cluster.push(p);
    }
    if !cluster.is_empty() {
        let wsum: f64 = cluster.iter().map(|c| c.1).sum();
        out.push(cluster.iter().map(|c| c.0 * c.1).sum::<f64>() / wsum);
    }
    out
}

/// Recognises touching points as simple rationals and solves the tight system exactly.
fn polish(
    n: i64,
    t: &Rational,
    basis: &GegenbauerBasis,
    f: &[f64],
    weights: &[f64],
    grid: &[f64],
) -> Result<Option<LpPolynomial>, LpError> {
    let d = f.len() - 1;
    let points = touching_points(weights, grid);
    let tf = crate::scalar::rational_to_f64(t);
    let polys: Vec<QPoly> = (0..=d).map(|k| basis.get(k)).collect();
    let derivs: Vec<QPoly> = polys.iter().map(|p| p.derivative()).collect();
    for window in [1e-7, 1e-6, 1e-5, 1e-4, 1e-3] {
        let mut rows: Vec<Vec<Rational>> = Vec::new();
        let mut rhs: Vec<Rational> = Vec::new();
        for &x in &points {
            let (r, interior) = if (x + 1.0).abs() < window {
                (qi(-1), false)
            } else if (x - tf).abs() < window {
                (t.clone(), false)
            } else {
                let lo = crate::scalar::f64_to_rational(x - window);
                let hi = crate::scalar::f64_to_rational(x + window);
                (simplest_between(&lo, &hi), true)
            };
            rows.push(polys[1..].iter().map(|p| p.eval(&r)).collect());
            rhs.push(-polys[0].eval(&r));
            if interior {
                rows.push(derivs[1..].iter().map(|p| p.eval(&r)).collect());
                rhs.push(Rational::zero());
            }
        }
        for (k, v) in f.iter().enumerate().skip(1) {
            if *v < 1e-9 {
                let mut row = vec![Rational::zero(); d];
                row[k - 1] = Rational::one();
                rows.push(row);
                rhs.push(Rational::zero());
            }
        }
        if rows.is_empty() {
            continue;
        }
        let a = QMatrix::from_rows(rows);
        if let Ok(SolutionReport::Unique(sol)) = solve_linear(&a, &rhs) {
            let mut coeffs = vec![Rational::one()];
            coeffs.extend(sol);
            let cand = LpPolynomial::new(n, coeffs);
            if verify_lp(&cand, t)?.feasible {
                return Ok(Some(cand));
            }
        }
    }
    Ok(None)
}

/// Rounds the coefficients and lowers `f_0` by a certified bound on the maximum of `F`.
fn restore(n: i64, t: &Rational, basis: &GegenbauerBasis, f: &[f64]) -> Result<LpPolynomial, LpError> {
    let mut coeffs: Vec<Rational> = f.iter().map(|v| best_rational(v.max(0.0), 1_000_000_000_000)).collect();
    coeffs[0] = Rational::one();
    let p = basis.combine(&coeffs);
    let delta = max_upper_bound(&p, &qi(-1), t, &q(1, 1_000_000_000_000_000_000));
    if delta.is_positive() {
        coeffs[0] = Rational::one() - delta;
    }
    Ok(LpPolynomial::new(n, coeffs))
}

/// Result of [`lp_tightness_obstruction`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObstructionReport {
    /// `e_k = sum over ordered pairs of C_k(c.c')`, `k = 1..=K`.
    #[serde(with = "serde_q::vec")]
    pub pair_sums: Vec<Rational>,
    pub zero_set: BTreeSet<usize>,
    /// `k` beyond which the tail inequality proves `e_k != 0`.
    pub tail_cutoff: usize,
    /// Rational over-approximation of `sum_x count(x) / sqrt(1 - x^2)` used in the tail bound.
    #[serde(with = "serde_q")]
    pub tail_constant: Rational,
    pub tail_certified: bool,
    /// Coefficients `(f_0, f_1, f_2)` forced by the tightness equalities in degree 2, if any.
    #[serde(serialize_with = "serde_q::opt_vec::serialize")]
    pub degree_two_candidate: Option<Vec<Rational>>,
    /// Point in `[-1, t]` where that candidate is positive.
    #[serde(with = "serde_q::opt")]
    pub degree_two_witness: Option<Rational>,
    pub passed: bool,
}

/// Over-approximations of `1/sqrt(1 - x^2)` for the two inner products of the ten-point code.
const TAIL_RADICALS: [(i64, i64, i64, i64); 2] = [(-2, 3, 1342, 1000), (1, 6, 1015, 1000)];

/// Shows that the pair sums vanish only for `k = 1, 2`, and that no degree-2
/// polynomial meets the tightness equalities together with `F <= 0` on `[-1, t]`.
pub fn lp_tightness_obstruction(gram: &QGram, n: i64, t: &Rational, max_k: usize) -> Result<ObstructionReport, LpError> {
    let size = gram.len() as i64;
    let pair_sums: Vec<Rational> = (1..=max_k).map(|k| pair_sum_exact(n, k, gram)).collect::<Result<_, _>>()?;
    let zero_set: BTreeSet<usize> = pair_sums.iter().enumerate().filter(|(_, v)| v.is_zero()).map(|(i, _)| i + 1).collect();

    // |e_k - N| <= sum_x count(x) |C_k(x)| <= tail_constant / (k + 1)
    let counts = gram.ordered_pair_counts();
    let mut tail_constant = Rational::zero();
    let mut radicals_ok = n == 4;
    for (x, c) in &counts {
        match TAIL_RADICALS.iter().find(|r| &q(r.0, r.1) == x) {
            Some(r) => {
                let bound = q(r.2, r.3);
                radicals_ok &= is_inverse_sqrt_upper_bound(x, &bound);
                tail_constant += bound * qi(*c as i64);
            }
            None => radicals_ok = false,
        }
    }
    let tail_constant = tail_constant.ceil();
    let nn = qi(size);
    // smallest K0 with tail_constant / (k + 1) < N for all k > K0
    let tail_cutoff = (tail_constant.clone() / nn.clone()).ceil().to_integer().try_into().unwrap_or(usize::MAX).saturating_sub(1);
    let sample_thetas: Vec<f64> = (0..100).map(|i| 0.031 * i as f64 + 0.01).collect();
    let identity_ok = (1..=max_k.min(40)).all(|k| {
        let xs: Vec<Rational> = counts.keys().cloned().collect();
        cosine_identity_check(k, &sample_thetas, &xs).passed()
    });
    let tail_certified = radicals_ok && identity_ok && max_k >= tail_cutoff;

    let (degree_two_candidate, degree_two_witness) = degree_two_check(n, t, size, &counts.keys().cloned().collect::<Vec<_>>())?;
    let passed = tail_certified && zero_set == BTreeSet::from([1, 2]) && (degree_two_candidate.is_none() || degree_two_witness.is_some());
    Ok(ObstructionReport {
        pair_sums,
        zero_set,
        tail_cutoff,
        tail_constant,
        tail_certified,
        degree_two_candidate,
        degree_two_witness,
        passed,
    })
}

/// Solves `F(1) = N`, `F(x) = 0` at the inner products, with `f_0 = 1` in degree 2,
/// and checks the solution against `F <= 0` on `[-1, t]`.
fn degree_two_check(n: i64, t: &Rational, size: i64, roots: &[Rational]) -> Result<(Option<Vec<Rational>>, Option<Rational>), LpError> {
    let basis = GegenbauerBasis::new(n)?;
    let mut rows = vec![vec![qi(1), qi(1)]];
    let mut rhs = vec![qi(size - 1)];
    for r in roots {
        rows.push(vec![basis.get(1).eval(r), basis.get(2).eval(r)]);
        rhs.push(-qi(1));
    }
    match solve_linear(&QMatrix::from_rows(rows), &rhs) {
        Ok(SolutionReport::Unique(sol)) => {
            let mut f = vec![qi(1)];
            f.extend(sol);
            let p = basis.combine(&f);
            let w = match sturm_max_on(&p, &qi(-1), t) {
                SignVerdict::PositiveWitness(x) => Some(x),
                SignVerdict::NonPositive => None,
            };
            Ok((Some(f), w))
        }
        _ => Ok((None, None)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> LpPolynomial {
        LpPolynomial::new(4, vec![qi(1), q(2270, 680), q(2775, 680), q(1500, 680)])
    }

    #[test]
    fn reference_polynomial_certifies() {
        let r = verify_lp(&reference(), &q(1, 6)).unwrap();
        assert!(r.feasible);
        assert_eq!(r.bound, Some(q(7225, 680)));
        let p = reference().to_poly().unwrap().scale(&qi(680));
        assert_eq!(p, QPoly::new(vec![qi(-245), qi(770), qi(3700), qi(3000)]));
    }

    #[test]
    fn simple_cases() {
        let r = verify_lp(&LpPolynomial::new(4, vec![qi(1), qi(1)]), &q(-1, 2)).unwrap();
        assert!(!r.feasible);
        let w = r.witness.unwrap();
        assert!(w >= qi(-1) && w <= q(-1, 2));
        let r = verify_lp(&LpPolynomial::new(4, vec![qi(1)]), &q(1, 6)).unwrap();
        assert!(!r.feasible, "constant 1 is positive everywhere");
    }

    #[test]
    fn grid_has_endpoints() {
        let g = chebyshev_grid(-1.0, 1.0 / 6.0, 11);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[10], 1.0 / 6.0);
        assert!(g.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn degree_one_is_infeasible() {
        assert!(matches!(optimize_lp(4, &q(1, 6), 1, 201), Err(LpError::Infeasible { .. })));
    }
}

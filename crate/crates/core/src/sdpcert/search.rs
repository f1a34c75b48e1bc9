//! Recovering the affine family of candidate polynomials from the tightness
//! equalities, and searching it for positive semidefinite block representations.

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use super::{reference, SdpCertificate};
use crate::exact::linalg::{ldlt_psd, nullspace, rank, solve_linear, SolutionReport};
use crate::exact::multipoly::{gram_determinant, Exps};
use crate::gram::QGram;
use crate::scalar::{f64_to_rational, fmt_rational, qi, rational_to_f64, serde_q, simplest_between};
use crate::threepoint::{m_sym, triple_multiplicities, BlockCache, QSymPoly, QTuple, ThreePointError};
use crate::{FMatrix, QMatrix, QTriPoly, Rational};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    ThreePoint(#[from] ThreePointError),
    #[error("block-level condition on block {0} is not expressible on the polynomial")]
    BlockCondition(usize),
    #[error("expected a one-parameter family, found dimension {0}")]
    FamilyDimension(usize),
    #[error("reference data disagrees with the computed family: {0}")]
    Reference(String),
}

/// What a code attaining the bound forces on a certificate: its inner
/// products, the triples of distinct points and the triple sums of the blocks.
#[derive(Clone, Debug, Serialize)]
pub struct TightnessData {
    pub n: i64,
    pub code_size: usize,
    #[serde(with = "serde_q")]
    pub t: Rational,
    pub sizes: Vec<usize>,
    #[serde(with = "serde_q::vec")]
    pub inner_products: Vec<Rational>,
    /// Sorted representatives of the triples realised by three distinct points.
    #[serde(serialize_with = "serialize_triples")]
    pub distinct_triples: Vec<[Rational; 3]>,
    #[serde(skip)]
    pub multiplicities: Vec<([Rational; 3], usize)>,
    #[serde(skip)]
    pub triple_sums: QTuple,
}

fn serialize_triples<S: serde::Serializer>(v: &[[Rational; 3]], s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<Rational>> = v.iter().map(|t| t.to_vec()).collect();
    serde_q::vec_vec::serialize(&rows, s)
}

impl TightnessData {
    pub fn from_gram(gram: &QGram, n: i64, sizes: &[usize]) -> Result<Self, ThreePointError> {
        let cache = BlockCache::new(n, sizes)?;
        let len = gram.len();
        let mut inner_products: Vec<Rational> =
            (0..len).flat_map(|i| (0..len).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| gram.get(i, j).clone()).collect();
        inner_products.sort();
        inner_products.dedup();
        let mut distinct_triples = Vec::new();
        for a in 0..len {
            for b in a + 1..len {
                for c in b + 1..len {
                    let mut t = [gram.get(a, b).clone(), gram.get(a, c).clone(), gram.get(b, c).clone()];
                    t.sort();
                    distinct_triples.push(t);
                }
            }
        }
        distinct_triples.sort();
        distinct_triples.dedup();
        let t = inner_products.last().cloned().unwrap_or_else(|| qi(-1));
        let triple_sums = QTuple::new((0..sizes.len()).map(|k| cache.triple_sum(gram, k)).collect());
        Ok(TightnessData {
            n,
            code_size: len,
            t,
            sizes: sizes.to_vec(),
            inner_products,
            distinct_triples,
            multiplicities: triple_multiplicities(gram),
            triple_sums,
        })
    }

    pub fn petersen() -> Self {
        Self::from_gram(&crate::uniqueness::petersen_gram(), 4, &[4, 3, 1]).expect("valid sizes")
    }
}

/// Monomials spanning the polynomials searched over.
pub fn search_monomials() -> Vec<Exps> {
    vec![[3, 2, 0], [2, 2, 1], [2, 2, 0], [2, 1, 1], [2, 1, 0], [1, 1, 1], [1, 1, 0], [1, 0, 0], [0, 0, 0]]
}

/// Linear system on `(c_1..c_m, B, f_0)` with one labelled row per equality.
#[derive(Clone, Debug)]
pub struct TightnessSystem {
    pub monomials: Vec<Exps>,
    pub labels: Vec<String>,
    pub matrix: QMatrix,
}

fn label(p: &[Rational; 3]) -> String {
    format!("({})", p.iter().map(fmt_rational).collect::<Vec<_>>().join(", "))
}

/// First-order conditions at interior zeros and at interior diagonal roots,
/// vanishing on the distinct triples, `F(x, x, 1) = B` on the inner
/// products, the bound identity and the trace condition on block 0.
pub fn tightness_system(data: &TightnessData, monomials: &[Exps]) -> Result<TightnessSystem, SearchError> {
    for (k, m) in data.triple_sums.blocks.iter().enumerate().skip(1) {
        if !m.is_zero() {
            return Err(SearchError::BlockCondition(k));
        }
    }
    let m = monomials.len();
    let (col_b, col_f0) = (m, m + 1);
    let polys: Vec<QTriPoly> = monomials.iter().map(|e| m_sym::<Rational>(e[0], e[1], e[2]).to_tripoly()).collect();
    let partials: Vec<QTriPoly> = polys.iter().map(|p| p.partial(0)).collect();
    let det = gram_determinant::<Rational>();
    let one = qi(1);
    let nn = qi(data.code_size as i64);
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut labels = Vec::new();
    let eval_row = |ps: &[QTriPoly], p: &[Rational; 3]| -> Vec<Rational> {
        let mut r: Vec<Rational> = ps.iter().map(|f| f.eval(p)).collect();
        r.extend([qi(0), qi(0)]);
        r
    };

    let diagonal_points: Vec<[Rational; 3]> = data.inner_products.iter().map(|x| [x.clone(), x.clone(), one.clone()]).collect();
    for p in data.distinct_triples.iter().chain(&diagonal_points) {
        let interior_d = p[2] == one || det.eval(p).is_positive();
        if !interior_d {
            continue;
        }
        let mut seen: Vec<&Rational> = Vec::new();
        for (i, v) in p.iter().enumerate() {
            if seen.contains(&v) || *v <= qi(-1) || *v >= data.t {
                continue;
            }
            seen.push(v);
            let rest: Vec<Rational> = (0..3).filter(|&j| j != i).map(|j| p[j].clone()).collect();
            let q = [v.clone(), rest[0].clone(), rest[1].clone()];
            rows.push(eval_row(&partials, &q));
            labels.push(format!("dF/dx{} = 0", label(&q)));
        }
    }
    for p in &data.distinct_triples {
        rows.push(eval_row(&polys, p));
        labels.push(format!("F{} = 0", label(p)));
    }
    for p in &diagonal_points {
        let mut r = eval_row(&polys, p);
        r[col_b] = qi(-1);
        rows.push(r);
        labels.push(format!("F{} = B", label(p)));
    }
    let ones = [one.clone(), one.clone(), one.clone()];
    let mut r: Vec<Rational> = eval_row(&polys, &ones).into_iter().map(|v| -v).collect();
    r[col_b] = -qi(3) * (&nn - qi(1));
    r[col_f0] = &nn * &nn;
    rows.push(r);
    labels.push("N^2 f_0 - F(1,1,1) - 3(N-1) B = 0".into());
    let mut r = vec![qi(0); m + 2];
    for (p, mult) in &data.multiplicities {
        let w = qi(*mult as i64);
        for (c, f) in polys.iter().enumerate() {
            r[c] += f.eval(p) * &w;
        }
    }
    r[col_f0] = -(&nn * &nn * &nn);
    rows.push(r);
    labels.push("<F_0, T_0> - N^3 f_0 = 0".into());
    Ok(TightnessSystem { monomials: monomials.to_vec(), labels, matrix: QMatrix::from_rows(rows) })
}

/// Candidate polynomials `A + gamma B'` with their block representations and
/// the kernel tuples that leave the polynomial unchanged.
#[derive(Clone, Debug)]
pub struct SearchSpace {
    pub tightness: TightnessData,
    pub system: TightnessSystem,
    pub constraint_rank: usize,
    pub family_dim: usize,
    pub base: QTuple,
    pub direction: QTuple,
    pub base_polynomial: QSymPoly,
    pub direction_polynomial: QSymPoly,
    /// `(B, f_0)` carried by the base and by the direction.
    pub base_values: (Rational, Rational),
    pub direction_values: (Rational, Rational),
    pub kernel: Vec<QTuple>,
}

fn coefficient_vector(p: &QSymPoly, monomials: &[Exps]) -> Option<Vec<Rational>> {
    let canon = |e: &Exps| {
        let mut e = *e;
        e.sort_unstable();
        e
    };
    if p.terms().any(|(e, _)| !monomials.iter().any(|m| canon(m) == canon(e))) {
        return None;
    }
    Some(monomials.iter().map(|e| p.coeff(*e)).collect())
}

/// Finds the member of `span(null)` whose monomial part is `p`, returning its `(B, f_0)`.
fn locate(null: &[Vec<Rational>], p: &QSymPoly, monomials: &[Exps]) -> Result<(Rational, Rational), SearchError> {
    let m = monomials.len();
    let target = coefficient_vector(p, monomials).ok_or_else(|| SearchError::Reference("monomial outside the span".into()))?;
    let a = QMatrix::from_fn(m, null.len(), |i, j| null[j][i].clone());
    let lambda = match solve_linear(&a, &target).expect("shapes agree") {
        SolutionReport::Unique(l) => l,
        _ => return Err(SearchError::Reference("polynomial is not a unique member of the family".into())),
    };
    let pick = |idx: usize| null.iter().zip(&lambda).fold(qi(0), |acc, (v, l)| acc + &v[idx] * l);
    Ok((pick(m), pick(m + 1)))
}

/// Solves the tightness system for the reference code, confirms that the
/// one-parameter solution family is spanned by the reference base and
/// direction, and that the reference tuples represent them.
pub fn build_search_space() -> Result<SearchSpace, SearchError> {
    let tightness = TightnessData::petersen();
    let system = tightness_system(&tightness, &search_monomials())?;
    let null = nullspace(&system.matrix);
    if null.len() < 2 {
        return Err(SearchError::FamilyDimension(null.len().saturating_sub(1)));
    }
    let family_dim = null.len() - 1;
    if family_dim != 1 {
        return Err(SearchError::FamilyDimension(family_dim));
    }
    let base_polynomial = reference::family_base_polynomial();
    let direction_polynomial = reference::family_direction_polynomial();
    let base_values = locate(&null, &base_polynomial, &system.monomials)?;
    let direction_values = locate(&null, &direction_polynomial, &system.monomials)?;
    let independent = {
        let a = coefficient_vector(&base_polynomial, &system.monomials).unwrap();
        let b = coefficient_vector(&direction_polynomial, &system.monomials).unwrap();
        rank(&QMatrix::from_rows(vec![a, b])) == 2
    };
    if !independent {
        return Err(SearchError::Reference("base and direction are proportional".into()));
    }
    let cache = BlockCache::new(tightness.n, &tightness.sizes)?;
    let base = reference::family_base_tuple();
    let direction = reference::family_direction_tuple();
    if cache.expand(&base)? != base_polynomial {
        return Err(SearchError::Reference("base tuple does not expand to the base polynomial".into()));
    }
    if cache.expand(&direction)? != direction_polynomial {
        return Err(SearchError::Reference("direction tuple does not expand to the direction polynomial".into()));
    }
    let kernel = reference::kernel_tuples();
    let computed_dim = cache.kernel_basis().len();
    for (i, k) in kernel.iter().enumerate() {
        if !cache.expand(k)?.is_zero() {
            return Err(SearchError::Reference(format!("kernel tuple {} does not expand to zero", i + 1)));
        }
    }
    if tuple_rank(&kernel) != computed_dim {
        return Err(SearchError::Reference(format!(
            "kernel tuples span dimension {} but the kernel has dimension {computed_dim}",
            tuple_rank(&kernel)
        )));
    }
    let constraint_rank = rank(&system.matrix);
    Ok(SearchSpace {
        tightness,
        system,
        constraint_rank,
        family_dim,
        base,
        direction,
        base_polynomial,
        direction_polynomial,
        base_values,
        direction_values,
        kernel,
    })
}

fn tuple_coordinates(t: &QTuple) -> Vec<Rational> {
    t.blocks.iter().flat_map(|b| b.to_rows().into_iter().flatten()).collect()
}

fn tuple_rank(ts: &[QTuple]) -> usize {
    if ts.is_empty() {
        return 0;
    }
    rank(&QMatrix::from_rows(ts.iter().map(tuple_coordinates).collect()))
}

impl SearchSpace {
    pub fn polynomial_at(&self, gamma: &Rational) -> QSymPoly {
        self.base_polynomial.add(&self.direction_polynomial.scale(gamma))
    }

    pub fn diagonal_bound_at(&self, gamma: &Rational) -> Rational {
        &self.base_values.0 + gamma * &self.direction_values.0
    }

    pub fn f0_at(&self, gamma: &Rational) -> Rational {
        &self.base_values.1 + gamma * &self.direction_values.1
    }

    /// `A + gamma B' + sum_i beta_i K_i`.
    pub fn blocks_at(&self, gamma: &Rational, beta: &[Rational]) -> QTuple {
        let mut t = self.base.add(&self.direction.scale(gamma));
        for (k, b) in self.kernel.iter().zip(beta) {
            if !b.is_zero() {
                t = t.add(&k.scale(b));
            }
        }
        t
    }

    pub fn certificate_at(&self, gamma: &Rational, beta: &[Rational]) -> SdpCertificate {
        SdpCertificate::new(
            self.tightness.n,
            self.tightness.t.clone(),
            self.blocks_at(gamma, beta),
            self.diagonal_bound_at(gamma),
            self.f0_at(gamma),
        )
        .expect("family certificates are well formed")
        .with_expansion(self.polynomial_at(gamma))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityTarget {
    /// Every block positive semidefinite.
    BlocksPsd,
    /// Additionally `F_0 - f_0 E_0` positive semidefinite, which forces it to
    /// annihilate the range of the block-0 triple sum.
    Full,
}

#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityOutcome {
    #[serde(with = "serde_q")]
    pub gamma: Rational,
    pub target: FeasibilityTarget,
    #[serde(with = "serde_q::opt_vec")]
    pub beta: Option<Vec<Rational>>,
    #[serde(skip)]
    pub certificate: Option<SdpCertificate>,
    /// Largest smallest eigenvalue of the reduced blocks found numerically.
    pub best_min_eigenvalue: f64,
    pub diagnostic: String,
}

/// Blocks affine in the free parameters, after deleting rows and columns
/// that vanish for every parameter value.
struct ReducedProblem {
    fixed: Vec<FMatrix>,
    dirs: Vec<Vec<FMatrix>>,
}

impl ReducedProblem {
    fn objective(&self, w: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for (k, f) in self.fixed.iter().enumerate() {
            if f.rows() == 0 {
                continue;
            }
            let mut m = f.clone();
            for (d, wj) in self.dirs[k].iter().zip(w) {
                for i in 0..m.rows() {
                    for j in 0..m.cols() {
                        m[(i, j)] += wj * d[(i, j)];
                    }
                }
            }
            best = best.min(m.min_eigenvalue_f64());
        }
        best
    }
}

fn nonzero_indices(ms: &[&QMatrix]) -> Vec<usize> {
    let n = ms[0].rows();
    (0..n).filter(|&i| ms.iter().any(|m| (0..n).any(|j| !m[(i, j)].is_zero()))).collect()
}

fn congruence(m: &QMatrix, q: &QMatrix) -> QMatrix {
    &(&q.transpose() * m) * q
}

fn columns(vs: &[Vec<Rational>], n: usize) -> QMatrix {
    QMatrix::from_fn(n, vs.len(), |i, j| vs[j][i].clone())
}

/// Maximises a function of `x` by the Nelder–Mead simplex method.
pub fn nelder_mead_max(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 {
        return (Vec::new(), f(x0));
    }
    let g = |x: &[f64]| -f(x);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), g(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = g(&x);
        simplex.push((x, v));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let size = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= 1e-13 * (1.0 + best.abs()) && size <= 1e-9 * (1.0 + step) {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n].0[j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let vr = g(&xr);
        if vr < simplex[0].1 {
            let xe = along(-2.0);
            let ve = g(&xe);
            simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
        } else if vr < simplex[n - 1].1 {
            simplex[n] = (xr, vr);
        } else {
            let (xc, vc) = if vr < worst {
                let x = along(-0.5);
                let v = g(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = g(&x);
                (x, v)
            };
            if vc < worst.min(vr) {
                simplex[n] = (xc, vc);
            } else {
                let x0 = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = s.0.iter().zip(&x0).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    s.1 = g(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (x, -v)
}

fn maximise(obj: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64) -> (Vec<f64>, f64) {
    let (mut x, mut v) = nelder_mead_max(obj, x0, step, 4000);
    // restarts with shrinking steps escape early collapse on the nonsmooth ridge
    let mut s = step;
    for _ in 0..4 {
        s /= 4.0;
        let (x2, v2) = nelder_mead_max(obj, &x, s, 4000);
        if v2 > v {
            x = x2;
            v = v2;
        }
    }
    (x, v)
}

/// Interval of `x_j` around the current point on which `obj >= 0`.
fn feasible_interval(obj: &dyn Fn(&[f64]) -> f64, x: &[f64], j: usize, scale: f64) -> Option<(f64, f64)> {
    let at = |v: f64| {
        let mut y = x.to_vec();
        y[j] = v;
        obj(&y)
    };
    if at(x[j]) < 0.0 {
        return None;
    }
    let edge = |dir: f64| -> Option<f64> {
        let mut inside = x[j];
        let mut h = scale.max(1e-12);
        let mut outside = None;
        for _ in 0..80 {
            let v = inside + dir * h;
            if at(v) >= 0.0 {
                inside = v;
                h *= 2.0;
            } else {
                outside = Some(v);
                break;
            }
        }
        let mut out = outside?;
        for _ in 0..100 {
            let mid = 0.5 * (inside + out);
            if at(mid) >= 0.0 {
                inside = mid;
            } else {
                out = mid;
            }
        }
        Some(inside)
    };
    Some((edge(-1.0)?, edge(1.0)?))
}

/// The multiple of the largest power of ten inside `[lo, hi]` closest to the
/// midpoint, or the simplest rational in between if no power fits.
pub fn round_in_interval(lo: f64, hi: f64) -> Rational {
    let mid = 0.5 * (lo + hi);
    for p in (-9..=9).rev() {
        let unit = 10f64.powi(p);
        let m = (mid / unit).round();
        let v = m * unit;
        if v >= lo && v <= hi {
            let unit_q =
                if p >= 0 { qi(10i64.pow(p as u32)) } else { Rational::new(1.into(), num_bigint::BigInt::from(10).pow((-p) as u32)) };
            return f64_to_rational(m) * unit_q;
        }
    }
    simplest_between(&f64_to_rational(lo), &f64_to_rational(hi))
}

fn subsets_by_size(n: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (0..1usize << n).map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect()).collect();
    all.sort_by_key(|s: &Vec<usize>| (s.len(), s.clone()));
    all
}

fn max_abs(ms: &[QMatrix]) -> f64 {
    ms.iter().flat_map(|m| m.to_rows().into_iter().flatten()).map(|v| rational_to_f64(&v).abs()).fold(0.0, f64::max)
}

/// Per block, a basis of the complement of the triple-sum range (as
/// columns) and the equalities `M v = 0` on the kernel shifts for `v` in the
/// range. Only the full target constrains the range.
fn range_conditions(
    space: &SearchSpace,
    fixed: &[QMatrix],
    target: FeasibilityTarget,
) -> (Vec<QMatrix>, Vec<Vec<Rational>>, Vec<Rational>) {
    let kdim = space.kernel.len();
    let mut projections = Vec::with_capacity(fixed.len());
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut rhs: Vec<Rational> = Vec::new();
    for (k, m) in fixed.iter().enumerate() {
        let size = m.rows();
        let t = &space.tightness.triple_sums.blocks[k];
        if target == FeasibilityTarget::Full && !t.is_zero() {
            let null = nullspace(t);
            let range = nullspace(&QMatrix::from_rows(null.clone()));
            projections.push(columns(&null, size));
            for v in &range {
                let mv = m.mul_vec(v);
                let kv: Vec<Vec<Rational>> = space.kernel.iter().map(|kt| kt.blocks[k].mul_vec(v)).collect();
                for i in 0..size {
                    rows.push((0..kdim).map(|j| kv[j][i].clone()).collect());
                    rhs.push(-mv[i].clone());
                }
            }
        } else {
            projections.push(QMatrix::identity(size));
        }
    }
    (projections, rows, rhs)
}

fn shifted_fixed(space: &SearchSpace, gamma: &Rational) -> Vec<QMatrix> {
    let mut fixed = space.base.add(&space.direction.scale(gamma)).blocks;
    fixed[0][(0, 0)] = &fixed[0][(0, 0)] - &space.f0_at(gamma);
    fixed
}

/// Family parameters at which some kernel shift makes `F_0 - f_0 E_0`
/// annihilate the block-0 triple-sum range.
#[derive(Clone, Debug, PartialEq)]
pub enum ParameterSet {
    All,
    Only(Rational),
    Empty,
}

/// Solves exactly for the parameters where the range equalities of the full
/// target are consistent: they are linear in `gamma` with a fixed matrix.
pub fn full_target_parameters(space: &SearchSpace) -> ParameterSet {
    let (_, rows, rhs0) = range_conditions(space, &shifted_fixed(space, &qi(0)), FeasibilityTarget::Full);
    if rows.is_empty() {
        return ParameterSet::All;
    }
    let (_, _, rhs1) = range_conditions(space, &shifted_fixed(space, &qi(1)), FeasibilityTarget::Full);
    let slope: Vec<Rational> = rhs1.iter().zip(&rhs0).map(|(a, b)| a - b).collect();
    let mut gamma: Option<Rational> = None;
    for y in nullspace(&QMatrix::from_rows(rows).transpose()) {
        let a = crate::exact::matrix::dot(&y, &rhs0);
        let b = crate::exact::matrix::dot(&y, &slope);
        if b.is_zero() {
            if !a.is_zero() {
                return ParameterSet::Empty;
            }
            continue;
        }
        let g = -a / b;
        match &gamma {
            Some(prev) if *prev != g => return ParameterSet::Empty,
            _ => gamma = Some(g),
        }
    }
    match gamma {
        Some(g) => ParameterSet::Only(g),
        None => ParameterSet::All,
    }
}

/// Searches the kernel shifts at a fixed family parameter for a
/// representation meeting `target`, numerically first, then rounds the
/// shifts to short decimals and certifies the blocks exactly.
pub fn feasibility_solve(space: &SearchSpace, gamma: &Rational, target: FeasibilityTarget) -> FeasibilityOutcome {
    let kdim = space.kernel.len();
    let nblocks = space.base.blocks.len();
    let fixed = match target {
        FeasibilityTarget::Full => shifted_fixed(space, gamma),
        FeasibilityTarget::BlocksPsd => space.base.add(&space.direction.scale(gamma)).blocks,
    };
    let outcome = |beta: Option<Vec<Rational>>, certificate, best: f64, diagnostic: String| FeasibilityOutcome {
        gamma: gamma.clone(),
        target,
        beta,
        certificate,
        best_min_eigenvalue: best,
        diagnostic,
    };

    let (projections, eq_rows, eq_rhs) = range_conditions(space, &fixed, target);
    let (particular, free_dirs) = if eq_rows.is_empty() {
        (vec![qi(0); kdim], (0..kdim).map(|i| (0..kdim).map(|j| if i == j { qi(1) } else { qi(0) }).collect()).collect())
    } else {
        match solve_linear(&QMatrix::from_rows(eq_rows), &eq_rhs).expect("shapes agree") {
            SolutionReport::Unique(x) => (x, Vec::new()),
            SolutionReport::Affine { particular, directions } => (particular, directions),
            SolutionReport::Inconsistent { .. } => {
                return outcome(None, None, f64::NEG_INFINITY, "the block-0 range condition has no kernel shift solving it".into())
            }
        }
    };
    let nfree = free_dirs.len();
    let shift_of = |w: &[Rational]| -> Vec<Rational> {
        let mut beta = particular.clone();
        for (d, wj) in free_dirs.iter().zip(w) {
            for i in 0..kdim {
                beta[i] += &d[i] * wj;
            }
        }
        beta
    };
    let dir_tuple = |d: &[Rational]| -> Vec<QMatrix> {
        (0..nblocks)
            .map(|k| {
                space.kernel.iter().zip(d).fold(QMatrix::zeros(fixed[k].rows(), fixed[k].rows()), |acc, (kt, c)| {
                    if c.is_zero() {
                        acc
                    } else {
                        &acc + &kt.blocks[k].scale(c)
                    }
                })
            })
            .collect()
    };
    let start: Vec<QMatrix> = {
        let p = dir_tuple(&particular);
        (0..nblocks).map(|k| congruence(&(&fixed[k] + &p[k]), &projections[k])).collect()
    };
    let free_blocks: Vec<Vec<QMatrix>> =
        free_dirs.iter().map(|d| dir_tuple(d).iter().zip(&projections).map(|(m, q)| congruence(m, q)).collect()).collect();

    let exact_check = |w: &[Rational]| -> Option<(Vec<Rational>, SdpCertificate)> {
        let beta = shift_of(w);
        let cert = space.certificate_at(gamma, &beta);
        let blocks_ok = cert.blocks.blocks.iter().all(|m| ldlt_psd(m).map(|v| v.is_psd()).unwrap_or(false));
        let shifted_ok = target == FeasibilityTarget::BlocksPsd || {
            let mut m0 = cert.blocks.blocks[0].clone();
            m0[(0, 0)] = &m0[(0, 0)] - &cert.f0;
            ldlt_psd(&m0).map(|v| v.is_psd()).unwrap_or(false)
        };
        (blocks_ok && shifted_ok).then_some((beta, cert))
    };

    let mut best_overall = f64::NEG_INFINITY;
    for support in subsets_by_size(nfree) {
        let mut fixed_f = Vec::with_capacity(nblocks);
        let mut dirs_f: Vec<Vec<FMatrix>> = Vec::with_capacity(nblocks);
        for k in 0..nblocks {
            let mut parts: Vec<&QMatrix> = vec![&start[k]];
            parts.extend(support.iter().map(|&j| &free_blocks[j][k]));
            let keep = nonzero_indices(&parts);
            fixed_f.push(start[k].submatrix(&keep, &keep).to_f64());
            dirs_f.push(support.iter().map(|&j| free_blocks[j][k].submatrix(&keep, &keep).to_f64()).collect());
        }
        let problem = ReducedProblem { fixed: fixed_f, dirs: dirs_f };
        let scale = max_abs(&start) / support.iter().map(|&j| max_abs(&free_blocks[j])).fold(1e-300, f64::max);
        let obj = |w: &[f64]| problem.objective(w);
        let (mut w, best) = maximise(&obj, &vec![0.0; support.len()], scale);
        best_overall = best_overall.max(best);
        if best <= 0.0 {
            continue;
        }
        let mut exact: Vec<Rational> = Vec::with_capacity(support.len());
        let mut ok = true;
        for j in 0..support.len() {
            let Some((lo, hi)) = feasible_interval(&obj, &w, j, scale.min(1.0 + w[j].abs())) else {
                ok = false;
                break;
            };
            let r = round_in_interval(lo, hi);
            w[j] = rational_to_f64(&r);
            exact.push(r);
            if j + 1 < support.len() {
                // re-centre the remaining coordinates with the rounded ones held fixed
                let head: Vec<f64> = w[..=j].to_vec();
                let sub = |tail: &[f64]| {
                    let mut y = head.clone();
                    y.extend_from_slice(tail);
                    obj(&y)
                };
                let (tail, _) = maximise(&sub, &w[j + 1..], scale);
                w.truncate(j + 1);
                w.extend(tail);
            }
        }
        if !ok {
            continue;
        }
        let mut full_w = vec![qi(0); nfree];
        for (&j, v) in support.iter().zip(exact) {
            full_w[j] = v;
        }
        if let Some((beta, cert)) = exact_check(&full_w) {
            let desc = beta.iter().map(fmt_rational).collect::<Vec<_>>().join(", ");
            return outcome(Some(beta), Some(cert), best, format!("kernel shifts ({desc}) certified exactly"));
        }
    }
    outcome(
        None,
        None,
        best_overall,
        format!("no certified representation; most negative eigenvalue at the best point found is {best_overall:.6e}"),
    )
}

/// Smallest eigenvalue over the blocks at given shifts, the diagnostic for
/// an infeasible point.
pub fn min_eigenvalue_at(space: &SearchSpace, gamma: &Rational, beta: &[Rational]) -> f64 {
    space.blocks_at(gamma, beta).blocks.iter().map(|m| m.min_eigenvalue_f64()).fold(f64::INFINITY, f64::min)
}

//! Symmetrised three-point matrices, symmetric monomials and the expansion map
//! from matrix tuples to symmetric polynomials.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::exact::linalg::nullspace;
use crate::exact::matrix::Matrix;
use crate::exact::multipoly::{Exps, TriPoly};
use crate::gegenbauer::gegenbauer_lambda;
use crate::gram::{random_gram, GramMatrix};
use crate::scalar::{fmt_rational, parse_rational, q, qi, Scalar};
use crate::{QMatrix, QTriPoly, Rational};

#[derive(Debug, Error, PartialEq)]
pub enum ThreePointError {
    #[error("three-point matrices need dimension n >= 3, got {0}")]
    DimensionTooSmall(i64),
    #[error("polynomial is not symmetric under permutations of x, y, z")]
    NotSymmetric,
    #[error("tuple has {got} blocks of sizes {sizes:?}, expected sizes {expected:?}")]
    ShapeMismatch { got: usize, sizes: Vec<usize>, expected: Vec<usize> },
}

/// Symmetric polynomial in the basis `m_ijk`, keys sorted `i <= j <= k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymPoly3<T> {
    coeffs: BTreeMap<Exps, T>,
}

pub type QSymPoly = SymPoly3<Rational>;

fn sorted(mut e: Exps) -> Exps {
    e.sort_unstable();
    e
}

/// Number of distinct permutations of an exponent triple.
fn orbit_size(e: &Exps) -> i64 {
    let s = sorted(*e);
    if s[0] == s[2] {
        1
    } else if s[0] == s[1] || s[1] == s[2] {
        3
    } else {
        6
    }
}

impl<T: Scalar> SymPoly3<T> {
    pub fn zero() -> Self {
        SymPoly3 { coeffs: BTreeMap::new() }
    }

    pub fn constant(c: T) -> Self {
        let mut p = Self::zero();
        p.add_term([0, 0, 0], c);
        p
    }

    /// Adds `c * m_e`; the exponent triple may be given in any order.
    pub fn add_term(&mut self, e: Exps, c: T) {
        if c.is_zero() {
            return;
        }
        let key = sorted(e);
        let v = match self.coeffs.remove(&key) {
            Some(old) => old + c,
            None => c,
        };
        if !v.is_zero() {
            self.coeffs.insert(key, v);
        }
    }

    /// Coefficient of `m_e` (any order of `e`).
    pub fn coeff(&self, e: Exps) -> T {
        self.coeffs.get(&sorted(e)).cloned().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &T)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self::zero();
        for (e, v) in &self.coeffs {
            out.add_term(*e, v.clone() * c.clone());
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, v) in &other.coeffs {
            out.add_term(*e, v.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-T::one()))
    }

    /// Expansion in ordinary monomials.
    pub fn to_tripoly(&self) -> TriPoly<T> {
        let mut out = TriPoly::zero();
        for (e, c) in &self.coeffs {
            out = &out + &m_monomials::<T>(*e).scale(c);
        }
        out
    }

    /// Inverse of [`to_tripoly`](Self::to_tripoly); rejects non-symmetric input.
    pub fn from_tripoly(p: &TriPoly<T>) -> Result<Self, ThreePointError> {
        if !p.is_symmetric() {
            return Err(ThreePointError::NotSymmetric);
        }
        let mut out = Self::zero();
        for (e, c) in p.terms() {
            if sorted(*e) == *e {
                out.add_term(*e, c.clone() * T::from_int(orbit_size(e)));
            }
        }
        Ok(out)
    }

    pub fn eval(&self, p: &[T; 3]) -> T {
        self.to_tripoly().eval(p)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SymPoly3<U> {
        let mut out = SymPoly3::zero();
        for (e, c) in &self.coeffs {
            out.add_term(*e, f(c));
        }
        out
    }
}

/// Label `m_kji` of a sorted exponent triple (comma-separated if any exponent exceeds 9).
pub fn monomial_label(e: &Exps) -> String {
    let s = sorted(*e);
    if s[2] > 9 {
        format!("m_{},{},{}", s[2], s[1], s[0])
    } else {
        format!("m_{}{}{}", s[2], s[1], s[0])
    }
}

pub fn parse_monomial_label(label: &str) -> Option<Exps> {
    let body = label.strip_prefix("m_")?;
    let parts: Vec<u32> = if body.contains(',') {
        body.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?
    } else {
        body.chars().map(|c| c.to_digit(10)).collect::<Option<_>>()?
    };
    (parts.len() == 3).then(|| sorted([parts[0], parts[1], parts[2]]))
}

impl QSymPoly {
    /// Coefficients keyed by monomial label, values as `"p/q"`.
    pub fn to_labelled(&self) -> BTreeMap<String, String> {
        self.coeffs.iter().map(|(e, c)| (monomial_label(e), fmt_rational(c))).collect()
    }

    pub fn from_labelled(map: &BTreeMap<String, String>) -> Result<Self, String> {
        let mut out = Self::zero();
        for (k, v) in map {
            let e = parse_monomial_label(k).ok_or_else(|| format!("invalid monomial label {k:?}"))?;
            let c = parse_rational(v).ok_or_else(|| format!("invalid rational {v:?}"))?;
            out.add_term(e, c);
        }
        Ok(out)
    }
}

impl Serialize for QSymPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_labelled().serialize(s)
    }
}

impl<T: Scalar> fmt::Display for SymPoly3<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .rev()
            .map(|(e, c)| if *e == [0, 0, 0] { format!("{c}") } else { format!("({c})m_{}{}{}", e[2], e[1], e[0]) })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `m_ijk` as an ordinary polynomial: the average of the six permuted monomials.
fn m_monomials<T: Scalar>(e: Exps) -> TriPoly<T> {
    TriPoly::monomial(e, T::one()).symmetrize()
}

/// The basis element `m_ijk` (indices in any order).
pub fn m_sym<T: Scalar>(i: u32, j: u32, k: u32) -> SymPoly3<T> {
    let mut p = SymPoly3::zero();
    p.add_term([i, j, k], T::one());
    p
}

/// Parameter of the Gegenbauer family inside the three-point kernels.
fn ynk_lambda(n: i64) -> Result<Rational, ThreePointError> {
    if n < 3 {
        return Err(ThreePointError::DimensionTooSmall(n));
    }
    Ok(q(n - 3, 2))
}

/// `x^i y^j ((1-x^2)(1-y^2))^{k/2} C_k((z - xy) / sqrt((1-x^2)(1-y^2)))`, expanded exactly.
pub fn ynk_entry(n: i64, k: usize, i: u32, j: u32) -> Result<QTriPoly, ThreePointError> {
    let c = gegenbauer_lambda(&ynk_lambda(n)?, k);
    let x = QTriPoly::var(0);
    let y = QTriPoly::var(1);
    let z = QTriPoly::var(2);
    let one = QTriPoly::constant(qi(1));
    let u = &z - &(&x * &y);
    let w = &(&one - &(&x * &x)) * &(&one - &(&y * &y));
    let mut acc = QTriPoly::zero();
    for (l, a) in c.coeffs().iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        assert!((k - l).is_multiple_of(2), "odd power of the radical survives in degree {k}");
        acc = &acc + &(&u.pow(l as u32) * &w.pow(((k - l) / 2) as u32)).scale(a);
    }
    Ok(&QTriPoly::monomial([i, j, 0], qi(1)) * &acc)
}

/// Symmetrised block `S^n_k` truncated to `size x size`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreePointBlock {
    pub n: i64,
    pub k: usize,
    pub size: usize,
    entries: Vec<Vec<QSymPoly>>,
}

impl ThreePointBlock {
    pub fn entry(&self, i: usize, j: usize) -> &QSymPoly {
        &self.entries[i][j]
    }

    /// Numeric matrix `S^n_k(x, y, z)`.
    pub fn eval<T: Scalar>(&self, p: &[T; 3]) -> Matrix<T> {
        let polys: Vec<Vec<TriPoly<T>>> =
            self.entries.iter().map(|row| row.iter().map(|e| e.to_tripoly().map(T::from_rational)).collect()).collect();
        Matrix::from_fn(self.size, self.size, |i, j| polys[i][j].eval(p))
    }
}

pub fn snk_matrix(n: i64, k: usize, size: usize) -> Result<ThreePointBlock, ThreePointError> {
    let mut entries = vec![vec![QSymPoly::zero(); size]; size];
    for i in 0..size {
        for j in i..size {
            let sym = ynk_entry(n, k, i as u32, j as u32)?.symmetrize();
            let s = SymPoly3::from_tripoly(&sym).expect("symmetrised entry");
            entries[i][j] = s.clone();
            entries[j][i] = s;
        }
    }
    Ok(ThreePointBlock { n, k, size, entries })
}

/// Blocks `(F_0, ..., F_d)` paired with `S^n_0, ..., S^n_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTuple<T> {
    pub blocks: Vec<Matrix<T>>,
}

pub type QTuple = MatrixTuple<Rational>;

impl<T: Scalar> MatrixTuple<T> {
    pub fn new(blocks: Vec<Matrix<T>>) -> Self {
        MatrixTuple { blocks }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        MatrixTuple { blocks: sizes.iter().map(|&s| Matrix::zeros(s, s)).collect() }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.rows()).collect()
    }

    pub fn degree(&self) -> usize {
        self.blocks.len().saturating_sub(1)
    }

    pub fn is_symmetric(&self) -> bool {
        self.blocks.iter().all(|b| b.is_symmetric())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.sizes(), other.sizes(), "tuple shapes differ");
        MatrixTuple { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, c: &T) -> Self {
        MatrixTuple { blocks: self.blocks.iter().map(|b| b.scale(c)).collect() }
    }

    /// `self + sum_i coeffs[i] * others[i]`.
    pub fn shifted(&self, others: &[Self], coeffs: &[T]) -> Self {
        others.iter().zip(coeffs).fold(self.clone(), |acc, (o, c)| acc.add(&o.scale(c)))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U + Copy) -> MatrixTuple<U> {
        MatrixTuple { blocks: self.blocks.iter().map(|b| b.map(f)).collect() }
    }
}

/// Sizes used by the reference configuration: `d + 2 - k` for `k < d` and 1 for `k = d`.
pub fn default_sizes(d: usize) -> Vec<usize> {
    (0..=d).map(|k| if k < d { d + 2 - k } else { 1 }).collect()
}

/// Cache of symmetrised blocks for one dimension.
#[derive(Clone, Debug)]
pub struct BlockCache {
    n: i64,
    blocks: Vec<Arc<ThreePointBlock>>,
}

impl BlockCache {
    pub fn new(n: i64, sizes: &[usize]) -> Result<Self, ThreePointError> {
        let blocks = sizes.iter().enumerate().map(|(k, &s)| snk_matrix(n, k, s).map(Arc::new)).collect::<Result<_, _>>()?;
        Ok(BlockCache { n, blocks })
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.size).collect()
    }

    pub fn block(&self, k: usize) -> &ThreePointBlock {
        &self.blocks[k]
    }

    /// `sum_k <F_k, S^n_k>` as a symmetric polynomial.
    pub fn expand(&self, tuple: &QTuple) -> Result<QSymPoly, ThreePointError> {
        let sizes = tuple.sizes();
        if sizes.len() > self.blocks.len() || sizes.iter().zip(&self.blocks).any(|(s, b)| *s > b.size) {
            return Err(ThreePointError::ShapeMismatch { got: sizes.len(), sizes, expected: self.sizes() });
        }
        let mut out = QSymPoly::zero();
        for (f, s) in tuple.blocks.iter().zip(&self.blocks) {
            for i in 0..f.rows() {
                for j in 0..f.cols() {
                    if !f[(i, j)].is_zero() {
                        out = out.add(&s.entry(i, j).scale(&f[(i, j)]));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matrix of the expansion map on symmetric tuples, with the coordinate
    /// order `(k, i, j), i <= j` and the row order of `keys`.
    fn expansion_map(&self) -> (Vec<Exps>, Vec<(usize, usize, usize)>, QMatrix) {
        let mut vars = Vec::new();
        let mut images = Vec::new();
        for (k, b) in self.blocks.iter().enumerate() {
            for i in 0..b.size {
                for j in i..b.size {
                    vars.push((k, i, j));
                    let factor = if i == j { qi(1) } else { qi(2) };
                    images.push(b.entry(i, j).scale(&factor));
                }
            }
        }
        let mut keys: Vec<Exps> = images.iter().flat_map(|p| p.terms().map(|(e, _)| *e)).collect();
        keys.sort_unstable();
        keys.dedup();
        let m = QMatrix::from_fn(keys.len(), vars.len(), |r, c| images[c].coeff(keys[r]));
        (keys, vars, m)
    }

    /// Basis of the tuples that expand to the zero polynomial.
    pub fn kernel_basis(&self) -> Vec<QTuple> {
        let (_, vars, m) = self.expansion_map();
        let sizes = self.sizes();
        nullspace(&m)
            .into_iter()
            .map(|v| {
                let mut t = QTuple::zeros(&sizes);
                for ((k, i, j), c) in vars.iter().zip(v) {
                    t.blocks[*k][(*i, *j)] = c.clone();
                    t.blocks[*k][(*j, *i)] = c;
                }
                t
            })
            .collect()
    }

    /// `sum over ordered triples of S^n_k(c.c', c.c'', c'.c'')` from the Gram matrix alone.
    pub fn triple_sum<T: Scalar>(&self, gram: &GramMatrix<T>, k: usize) -> Matrix<T> {
        triple_sum_block(self.block(k), gram)
    }
}

pub fn expand(tuple: &QTuple, n: i64) -> Result<QSymPoly, ThreePointError> {
    BlockCache::new(n, &tuple.sizes())?.expand(tuple)
}

pub fn kernel_basis(n: i64, sizes: &[usize]) -> Result<Vec<QTuple>, ThreePointError> {
    Ok(BlockCache::new(n, sizes)?.kernel_basis())
}

/// Inner-product triples of all ordered triples of points, with multiplicities.
pub fn triple_multiplicities<T: Scalar>(gram: &GramMatrix<T>) -> Vec<([T; 3], usize)> {
    let n = gram.len();
    let mut out: Vec<([T; 3], usize)> = Vec::new();
    let mut exact: BTreeMap<[Rational; 3], usize> = BTreeMap::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let t = [gram.get(a, b).clone(), gram.get(a, c).clone(), gram.get(b, c).clone()];
                if T::EXACT {
                    *exact.entry([t[0].to_rational(), t[1].to_rational(), t[2].to_rational()]).or_insert(0) += 1;
                } else {
                    out.push((t, 1));
                }
            }
        }
    }
    if T::EXACT {
        out = exact.into_iter().map(|(t, m)| ([T::from_rational(&t[0]), T::from_rational(&t[1]), T::from_rational(&t[2])], m)).collect();
    }
    out
}

fn triple_sum_block<T: Scalar>(block: &ThreePointBlock, gram: &GramMatrix<T>) -> Matrix<T> {
    let polys: Vec<Vec<TriPoly<T>>> =
        block.entries.iter().map(|row| row.iter().map(|e| e.to_tripoly().map(T::from_rational)).collect()).collect();
    let s = block.size;
    let mut acc = Matrix::<T>::zeros(s, s);
    for (t, m) in triple_multiplicities(gram) {
        let w = T::from_int(m as i64);
        for i in 0..s {
            for j in i..s {
                let v = acc[(i, j)].clone() + polys[i][j].eval(&t) * w.clone();
                acc[(i, j)] = v.clone();
                acc[(j, i)] = v;
            }
        }
    }
    acc
}

pub fn triple_sum<T: Scalar>(gram: &GramMatrix<T>, n: i64, k: usize, size: usize) -> Result<Matrix<T>, ThreePointError> {
    Ok(triple_sum_block(&snk_matrix(n, k, size)?, gram))
}

/// Outcome of [`psd_sample_test`].
#[derive(Clone, Debug, PartialEq)]
pub struct SampleVerdict {
    pub trials: usize,
    pub min_eigenvalue: f64,
    pub passed: bool,
}

/// Smallest eigenvalue of the triple sums over random codes of 2 to 8 points.
pub fn psd_sample_test<R: Rng>(rng: &mut R, n: i64, k: usize, size: usize, trials: usize) -> Result<SampleVerdict, ThreePointError> {
    let block = snk_matrix(n, k, size)?;
    let mut min_eigenvalue = f64::INFINITY;
    for _ in 0..trials {
        let count = rng.random_range(2..=8);
        let g = random_gram(rng, n as usize, count);
        let m = triple_sum_block(&block, &g);
        min_eigenvalue = min_eigenvalue.min(m.min_eigenvalue_f64());
    }
    Ok(SampleVerdict { trials, min_eigenvalue, passed: min_eigenvalue >= -1e-8 })
}

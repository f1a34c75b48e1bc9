//! The ten-point code in dimension four and the chain showing it is the only
//! code of its size: three-point distance distribution, strongly regular
//! graph parameters, graph enumeration and Gram reconstruction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::exact::linalg::{ldlt_psd, rank, solve_linear, SolutionReport};
use crate::exact::matrix::Matrix;
use crate::gegenbauer::{pair_sum_exact, GegenbauerError};
use crate::gram::QGram;
use crate::scalar::{fmt_rational, q, qi};
use crate::sdpcert::{compute_bound, diagonal_polynomial, factor_rational_roots, BoundValue, SdpCertificate};
use crate::threepoint::{BlockCache, ThreePointError};
use crate::verdict::{Status, Verdict, Witness};
use crate::{QMatrix, Rational};

#[derive(Debug, Error)]
pub enum UniquenessError {
    #[error(transparent)]
    ThreePoint(#[from] ThreePointError),
    #[error(transparent)]
    Gegenbauer(#[from] GegenbauerError),
    #[error("no constraint named {0:?}")]
    UnknownConstraint(String),
    #[error(transparent)]
    Bound(#[from] crate::sdpcert::VerifyError),
    #[error("graphs are limited to {max} vertices, got {got}")]
    TooManyVertices { got: usize, max: usize },
}

/// Points `e_i + e_j` (`i < j` in `0..5`) minus their centroid, in 5-space,
/// with the Gram matrix of the normalised points.
pub fn petersen_code() -> (Vec<Vec<Rational>>, QGram) {
    let pairs = two_subsets(5);
    let points: Vec<Vec<Rational>> =
        pairs.iter().map(|&(i, j)| (0..5).map(|k| if k == i || k == j { q(3, 5) } else { q(-2, 5) }).collect()).collect();
    // every centred point has squared norm 6/5
    let norm = q(6, 5);
    let n = points.len();
    let m = Matrix::from_fn(n, n, |a, b| points[a].iter().zip(&points[b]).fold(qi(0), |acc, (x, y)| acc + x * y) / &norm);
    (points, QGram::new(m).expect("unit diagonal"))
}

pub fn petersen_gram() -> QGram {
    petersen_code().1
}

fn two_subsets(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Largest `m <= max_m` with vanishing Gegenbauer pair sums for `1 <= k <= m`.
pub fn design_strength(gram: &QGram, n: i64, max_m: usize) -> Result<usize, UniquenessError> {
    for k in 1..=max_m {
        if !pair_sum_exact(n, k, gram)?.is_zero() {
            return Ok(k - 1);
        }
    }
    Ok(max_m)
}

/// `alpha` on ordered triples, stored on sorted representatives.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreePointDistribution {
    pub code_size: usize,
    values: BTreeMap<[Rational; 3], Rational>,
}

fn sorted3(p: &[Rational; 3]) -> [Rational; 3] {
    let mut s = p.clone();
    s.sort();
    s
}

/// Number of distinct orderings of a triple.
pub fn orbit_size(p: &[Rational; 3]) -> usize {
    let s = sorted3(p);
    match (s[0] == s[1], s[1] == s[2]) {
        (true, true) => 1,
        (false, false) => 6,
        _ => 3,
    }
}

impl ThreePointDistribution {
    pub fn get(&self, p: &[Rational; 3]) -> Rational {
        self.values.get(&sorted3(p)).cloned().unwrap_or_else(|| qi(0))
    }

    pub fn support(&self) -> impl Iterator<Item = (&[Rational; 3], &Rational)> {
        self.values.iter().filter(|(_, v)| !v.is_zero())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[Rational; 3], &Rational)> {
        self.values.iter()
    }

    /// `sum_{y, z} alpha(x, y, z)`: ordered pairs with inner product `x`.
    pub fn pair_count(&self, x: &Rational) -> Rational {
        let mut total = qi(0);
        for (rep, v) in &self.values {
            let perms: BTreeSet<[Rational; 3]> =
                crate::exact::multipoly::PERMUTATIONS.iter().map(|p| [rep[p[0]].clone(), rep[p[1]].clone(), rep[p[2]].clone()]).collect();
            total += v * qi(perms.iter().filter(|p| p[0] == *x).count() as i64);
        }
        total
    }
}

impl Serialize for ThreePointDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let m: BTreeMap<String, String> = self
            .values
            .iter()
            .map(|(k, v)| (format!("({})", k.iter().map(fmt_rational).collect::<Vec<_>>().join(", ")), fmt_rational(v)))
            .collect();
        m.serialize(s)
    }
}

/// Named group of linear equations on the unknown `alpha` values.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaConstraint {
    pub name: String,
    pub rows: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
}

/// Unknown `alpha` on every sorted triple over `roots` and on `(x, x, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSystem {
    pub code_size: usize,
    pub unknowns: Vec<[Rational; 3]>,
    pub constraints: Vec<AlphaConstraint>,
}

fn unknown_triples(roots: &[Rational]) -> Vec<[Rational; 3]> {
    let one = qi(1);
    let mut out = vec![[one.clone(), one.clone(), one.clone()]];
    let mut rs = roots.to_vec();
    rs.sort();
    for x in &rs {
        out.push(sorted3(&[x.clone(), x.clone(), one.clone()]));
    }
    for i in 0..rs.len() {
        for j in i..rs.len() {
            for k in j..rs.len() {
                out.push([rs[i].clone(), rs[j].clone(), rs[k].clone()]);
            }
        }
    }
    out
}

impl AlphaSystem {
    /// Normalisation, the total and diagonal counts, `F_k T_k(alpha) = 0`
    /// for `k >= 1` and `<F_0, T_0(alpha)> = N^3 f_0`, where `T_k(alpha)` is
    /// the triple sum of block `k` written through `alpha`.
    pub fn build(cert: &SdpCertificate, roots: &[Rational], code_size: usize) -> Result<Self, UniquenessError> {
        let unknowns = unknown_triples(roots);
        let u = unknowns.len();
        let nn = qi(code_size as i64);
        let one = qi(1);
        let cache = BlockCache::new(cert.n, &cert.blocks.sizes())?;
        let unit = |i: usize| -> Vec<Rational> { (0..u).map(|j| if i == j { qi(1) } else { qi(0) }).collect() };
        let mut constraints = vec![
            AlphaConstraint { name: "normalisation".into(), rows: vec![unit(0)], rhs: vec![qi(1)] },
            AlphaConstraint {
                name: "total".into(),
                rows: vec![unknowns.iter().map(|p| qi(orbit_size(p) as i64)).collect()],
                rhs: vec![&nn * &nn],
            },
            AlphaConstraint {
                name: "diagonal".into(),
                rows: vec![unknowns
                    .iter()
                    .map(|p| if p[2] == one && p[0] == p[1] || p.iter().all(|v| *v == one) { qi(1) } else { qi(0) })
                    .collect()],
                rhs: vec![nn.clone()],
            },
        ];
        // T_k(alpha) = N sum_o |o| alpha_o S_k(o): entry (i, j) is linear in alpha
        let per_unknown: Vec<Vec<QMatrix>> = (0..cert.blocks.blocks.len())
            .map(|k| unknowns.iter().map(|p| cache.block(k).eval(p).scale(&(&nn * qi(orbit_size(p) as i64)))).collect())
            .collect();
        for (k, f) in cert.blocks.blocks.iter().enumerate().skip(1) {
            let s = f.rows();
            let products: Vec<QMatrix> = per_unknown[k].iter().map(|t| f * t).collect();
            let mut rows = Vec::new();
            for i in 0..s {
                for j in 0..s {
                    rows.push(products.iter().map(|m| m[(i, j)].clone()).collect());
                }
            }
            let rhs = vec![qi(0); rows.len()];
            constraints.push(AlphaConstraint { name: format!("block_{k}"), rows, rhs });
        }
        if let Some(f0_block) = cert.blocks.blocks.first() {
            constraints.push(AlphaConstraint {
                name: "trace_0".into(),
                rows: vec![per_unknown[0].iter().map(|t| f0_block.inner(t)).collect()],
                rhs: vec![&nn * &nn * &nn * &cert.f0],
            });
        }
        Ok(AlphaSystem { code_size, unknowns, constraints })
    }

    pub fn constraint_names(&self) -> Vec<&str> {
        self.constraints.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn without(&self, name: &str) -> Result<Self, UniquenessError> {
        if !self.constraints.iter().any(|c| c.name == name) {
            return Err(UniquenessError::UnknownConstraint(name.to_string()));
        }
        let mut s = self.clone();
        s.constraints.retain(|c| c.name != name);
        Ok(s)
    }

    fn stacked(&self) -> (QMatrix, Vec<Rational>) {
        let rows: Vec<Vec<Rational>> = self.constraints.iter().flat_map(|c| c.rows.iter().cloned()).collect();
        let rhs: Vec<Rational> = self.constraints.iter().flat_map(|c| c.rhs.iter().cloned()).collect();
        (QMatrix::from_rows(rows), rhs)
    }

    /// Solves exactly; the verdict fails unless the solution is unique and nonnegative.
    pub fn solve(&self) -> AlphaReport {
        let (a, b) = self.stacked();
        let report = solve_linear(&a, &b).expect("shapes agree");
        let fail = |detail: String, witness| AlphaReport {
            verdict: Verdict::fail("alpha", detail, witness),
            distribution: None,
            residuals_zero: false,
        };
        let x = match report {
            SolutionReport::Unique(x) => x,
            SolutionReport::Affine { particular, directions } => {
                return fail(
                    format!("alpha is not determined: {} free directions", directions.len()),
                    Some(Witness::Ambiguity { solution: particular, direction: directions[0].clone() }),
                )
            }
            SolutionReport::Inconsistent { certificate } => {
                return fail(
                    "the alpha system is inconsistent".into(),
                    Some(Witness::Message {
                        text: format!("left null vector {:?}", certificate.iter().map(fmt_rational).collect::<Vec<_>>()),
                    }),
                )
            }
        };
        let residuals_zero = a.mul_vec(&x) == b;
        let values: BTreeMap<[Rational; 3], Rational> = self.unknowns.iter().cloned().zip(x.iter().cloned()).collect();
        let dist = ThreePointDistribution { code_size: self.code_size, values };
        if let Some((p, v)) = dist.values.iter().find(|(_, v)| v.is_negative()) {
            return AlphaReport {
                verdict: Verdict::fail("alpha", "alpha has a negative value", Some(Witness::Point { point: p.to_vec(), value: v.clone() })),
                distribution: Some(dist),
                residuals_zero,
            };
        }
        let shown: Vec<String> = dist
            .support()
            .map(|(p, v)| format!("({}) -> {}", p.iter().map(fmt_rational).collect::<Vec<_>>().join(", "), fmt_rational(v)))
            .collect();
        AlphaReport {
            verdict: Verdict::pass("alpha", format!("unique nonnegative solution: {}", shown.join("; "))),
            distribution: Some(dist),
            residuals_zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaReport {
    pub verdict: Verdict,
    pub distribution: Option<ThreePointDistribution>,
    pub residuals_zero: bool,
}

/// Distance distribution of a code of size `code_size` attaining the bound of `cert`,
/// whose inner products are `roots`.
pub fn solve_alpha(cert: &SdpCertificate, roots: &[Rational], code_size: usize) -> Result<AlphaReport, UniquenessError> {
    Ok(AlphaSystem::build(cert, roots, code_size)?.solve())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SrgParams {
    pub v: usize,
    pub k: usize,
    pub lambda: usize,
    pub mu: usize,
}

impl SrgParams {
    pub fn new(v: usize, k: usize, lambda: usize, mu: usize) -> Self {
        SrgParams { v, k, lambda, mu }
    }

    /// `k (k - lambda - 1) = (v - k - 1) mu`.
    pub fn satisfies_identity(&self) -> bool {
        let (v, k, l, m) = (self.v as i64, self.k as i64, self.lambda as i64, self.mu as i64);
        k < v && k * (k - l - 1) == (v - k - 1) * m
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SrgError {
    #[error("alpha is missing a value for {0}")]
    Missing(String),
    #[error("{0} is not a nonnegative integer")]
    NotIntegral(String),
}

fn as_count(v: &Rational, what: &str) -> Result<usize, SrgError> {
    if v.is_integer() && !v.is_negative() {
        Ok(v.to_integer().try_into().map_err(|_| SrgError::NotIntegral(what.into()))?)
    } else {
        Err(SrgError::NotIntegral(format!("{what} = {}", fmt_rational(v))))
    }
}

/// Graph parameters on the code with adjacency at inner product `adjacent`
/// and non-adjacency at `other`.
pub fn srg_from_alpha(alpha: &ThreePointDistribution, adjacent: &Rational, other: &Rational) -> Result<SrgParams, SrgError> {
    let one = qi(1);
    let v = alpha.code_size;
    let nn = qi(v as i64);
    let k = as_count(&alpha.get(&[adjacent.clone(), adjacent.clone(), one]), "k")?;
    let adjacent_pairs = qi((v * k) as i64);
    let other_pairs = qi((v * (v - 1 - k)) as i64);
    if adjacent_pairs.is_zero() || other_pairs.is_zero() {
        return Err(SrgError::Missing("adjacent or non-adjacent pairs".into()));
    }
    let lambda = as_count(&(alpha.get(&[adjacent.clone(), adjacent.clone(), adjacent.clone()]) * &nn / adjacent_pairs), "lambda")?;
    let mu = as_count(&(alpha.get(&[adjacent.clone(), adjacent.clone(), other.clone()]) * &nn / other_pairs), "mu")?;
    Ok(SrgParams { v, k, lambda, mu })
}

pub const MAX_VERTICES: usize = 16;

/// Simple undirected graph on at most 32 vertices as adjacency bit rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Graph {
    n: usize,
    adj: Vec<u32>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        assert!(n <= 32);
        Graph { n, adj: vec![0; n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Graph::empty(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    /// Vertices are the 2-subsets of a 5-set, adjacent when disjoint.
    pub fn petersen() -> Self {
        let pairs = two_subsets(5);
        let mut edges = Vec::new();
        for a in 0..pairs.len() {
            for b in a + 1..pairs.len() {
                let (p, q) = (pairs[a], pairs[b]);
                if p.0 != q.0 && p.0 != q.1 && p.1 != q.0 && p.1 != q.1 {
                    edges.push((a, b));
                }
            }
        }
        Graph::from_edges(10, &edges)
    }

    pub fn complete(n: usize) -> Self {
        Graph::from_edges(n, &two_subsets(n))
    }

    pub fn cycle(n: usize) -> Self {
        Graph::from_edges(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a != b && a < self.n && b < self.n);
        self.adj[a] |= 1 << b;
        self.adj[b] |= 1 << a;
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones() as usize).sum::<usize>() / 2
    }

    fn common(&self, a: usize, b: usize) -> usize {
        (self.adj[a] & self.adj[b]).count_ones() as usize
    }

    /// Checks regularity and the common-neighbour counts.
    pub fn is_srg(&self, p: &SrgParams) -> bool {
        self.n == p.v
            && (0..self.n).all(|v| self.degree(v) == p.k)
            && (0..self.n).all(|a| (a + 1..self.n).all(|b| self.common(a, b) == if self.has_edge(a, b) { p.lambda } else { p.mu }))
    }

    /// Length of a shortest cycle, `None` for forests.
    pub fn girth(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for s in 0..self.n {
            let mut dist = vec![usize::MAX; self.n];
            let mut parent = vec![usize::MAX; self.n];
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for w in 0..self.n {
                    if !self.has_edge(u, w) {
                        continue;
                    }
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        queue.push_back(w);
                    } else if parent[u] != w {
                        let c = dist[u] + dist[w] + 1;
                        best = Some(best.map_or(c, |b| b.min(c)));
                    }
                }
            }
        }
        best
    }

    pub fn permuted(&self, perm: &[usize]) -> Graph {
        let mut g = Graph::empty(self.n);
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.has_edge(a, b) {
                    g.add_edge(perm[a], perm[b]);
                }
            }
        }
        g
    }

    /// Upper-triangle bits in column order: `(0,1), (0,2), (1,2), (0,3), ...`.
    fn column_bits(&self, order: &[usize]) -> Vec<bool> {
        let mut bits = Vec::with_capacity(self.n * (self.n.saturating_sub(1)) / 2);
        for j in 1..self.n {
            for i in 0..j {
                bits.push(self.has_edge(order[i], order[j]));
            }
        }
        bits
    }

    /// The lexicographically largest column-order adjacency string over all
    /// relabellings, with the number of relabellings attaining it.
    fn canonical_search(&self) -> (Vec<bool>, Vec<usize>, usize) {
        struct State<'a> {
            g: &'a Graph,
            best: Option<Vec<bool>>,
            best_order: Vec<usize>,
            hits: usize,
        }
        fn rec(st: &mut State, order: &mut Vec<usize>, used: u32, prefix: &mut Vec<bool>) {
            let n = st.g.n;
            if order.len() == n {
                match &st.best {
                    Some(b) if *b == *prefix => st.hits += 1,
                    _ => {
                        st.best = Some(prefix.clone());
                        st.best_order = order.clone();
                        st.hits = 1;
                    }
                }
                return;
            }
            let j = order.len();
            let mut candidates: Vec<(Vec<bool>, usize)> =
                (0..n).filter(|v| used >> v & 1 == 0).map(|v| (order.iter().map(|&u| st.g.has_edge(u, v)).collect(), v)).collect();
            let top = candidates.iter().map(|c| c.0.clone()).max().unwrap_or_default();
            candidates.retain(|c| c.0 == top);
            let start = j * j.saturating_sub(1) / 2;
            if let Some(b) = &st.best {
                let cmp = prefix.iter().chain(&top).cmp(b[..start + j].iter());
                if cmp == std::cmp::Ordering::Less {
                    return;
                }
                if cmp == std::cmp::Ordering::Greater {
                    st.best = None;
                }
            }
            for (_, v) in candidates {
                order.push(v);
                prefix.extend(&top);
                rec(st, order, used | 1 << v, prefix);
                prefix.truncate(start);
                order.pop();
            }
        }
        let mut st = State { g: self, best: None, best_order: Vec::new(), hits: 0 };
        rec(&mut st, &mut Vec::new(), 0, &mut Vec::new());
        (st.best.unwrap_or_default(), st.best_order, st.hits)
    }

    /// Canonical relabelling: isomorphic graphs have equal canonical forms.
    pub fn canonical_form(&self) -> Graph {
        let (_, order, _) = self.canonical_search();
        let mut perm = vec![0; self.n];
        for (pos, &v) in order.iter().enumerate() {
            perm[v] = pos;
        }
        self.permuted(&perm)
    }

    /// Order of the automorphism group, from the canonical search.
    pub fn automorphism_count(&self) -> usize {
        self.canonical_search().2
    }

    /// Order of the automorphism group by extending partial maps vertex by vertex.
    pub fn automorphism_count_brute_force(&self) -> usize {
        fn rec(g: &Graph, image: &mut Vec<usize>, used: u32) -> usize {
            let i = image.len();
            if i == g.n {
                return 1;
            }
            let mut total = 0;
            for v in 0..g.n {
                if used >> v & 1 == 1 || g.degree(v) != g.degree(i) {
                    continue;
                }
                if (0..i).all(|u| g.has_edge(u, i) == g.has_edge(image[u], v)) {
                    image.push(v);
                    total += rec(g, image, used | 1 << v);
                    image.pop();
                }
            }
            total
        }
        rec(self, &mut Vec::new(), 0)
    }

    pub fn is_vertex_transitive(&self) -> bool {
        // the orbit of vertex 0 under automorphisms covers every vertex
        fn rec(g: &Graph, image: &mut Vec<usize>, used: u32, reached: &mut u32) {
            let i = image.len();
            if i == g.n {
                *reached |= 1 << image[0];
                return;
            }
            for v in 0..g.n {
                if used >> v & 1 == 1 || (i == 0 && *reached >> v & 1 == 1) {
                    continue;
                }
                if (0..i).all(|u| g.has_edge(u, i) == g.has_edge(image[u], v)) {
                    image.push(v);
                    rec(g, image, used | 1 << v, reached);
                    image.pop();
                    if i > 0 && *reached >> image[0] & 1 == 1 {
                        return;
                    }
                }
            }
        }
        let mut reached = 0u32;
        rec(self, &mut Vec::new(), 0, &mut reached);
        reached.count_ones() as usize == self.n
    }

    /// graph6 encoding (vertex counts up to 62).
    pub fn to_graph6(&self) -> String {
        let order: Vec<usize> = (0..self.n).collect();
        let bits = self.column_bits(&order);
        let mut out = String::new();
        out.push((self.n as u8 + 63) as char);
        for chunk in bits.chunks(6) {
            let mut v = 0u8;
            for (i, b) in chunk.iter().enumerate() {
                if *b {
                    v |= 1 << (5 - i);
                }
            }
            out.push((v + 63) as char);
        }
        out
    }

    pub fn from_graph6(s: &str) -> Option<Graph> {
        let bytes = s.trim().as_bytes();
        let n = (*bytes.first()? as usize).checked_sub(63)?;
        if n > 32 {
            return None;
        }
        let mut bits = Vec::new();
        for &c in &bytes[1..] {
            let v = (c as usize).checked_sub(63)?;
            if v > 63 {
                return None;
            }
            bits.extend((0..6).rev().map(|i| v >> i & 1 == 1));
        }
        let mut g = Graph::empty(n);
        let mut idx = 0;
        for j in 1..n {
            for i in 0..j {
                if *bits.get(idx)? {
                    g.add_edge(i, j);
                }
                idx += 1;
            }
        }
        Some(g)
    }
}

impl Serialize for Graph {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_graph6())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SrgEnumeration {
    pub params: SrgParams,
    /// One canonical representative per isomorphism class.
    pub graphs: Vec<Graph>,
    /// Labelled graphs reached by the search before isomorph rejection.
    pub labelled: usize,
    pub diagnostic: Option<String>,
}

/// All strongly regular graphs with the given parameters up to isomorphism.
/// Vertex 0 is adjacent to `1..=k` without loss of generality; pairs are
/// decided in row order with degree and common-neighbour pruning.
pub fn enumerate_srg(params: SrgParams) -> Result<SrgEnumeration, UniquenessError> {
    let SrgParams { v, k, lambda, mu } = params;
    if v > MAX_VERTICES {
        return Err(UniquenessError::TooManyVertices { got: v, max: MAX_VERTICES });
    }
    if !params.satisfies_identity() {
        return Ok(SrgEnumeration {
            params,
            graphs: Vec::new(),
            labelled: 0,
            diagnostic: Some(format!(
                "k(k - lambda - 1) = {} but (v - k - 1) mu = {}",
                k as i64 * (k as i64 - lambda as i64 - 1),
                (v as i64 - k as i64 - 1) * mu as i64
            )),
        });
    }
    struct Search {
        v: usize,
        k: usize,
        lambda: usize,
        mu: usize,
        found: BTreeSet<Graph>,
        labelled: usize,
    }
    impl Search {
        fn pair_ok(&self, g: &Graph, a: usize, b: usize) -> bool {
            g.common(a, b) == if g.has_edge(a, b) { self.lambda } else { self.mu }
        }
        // decide pair (i, j), i < j, in row order
        fn rec(&mut self, g: &mut Graph, i: usize, j: usize) {
            if i + 1 == self.v {
                if (0..self.v).all(|a| g.degree(a) == self.k) && (0..self.v).all(|a| (a + 1..self.v).all(|b| self.pair_ok(g, a, b))) {
                    self.labelled += 1;
                    self.found.insert(g.canonical_form());
                }
                return;
            }
            if j == self.v {
                // row i is complete
                if g.degree(i) != self.k {
                    return;
                }
                if !(0..i).all(|a| self.pair_ok(g, a, i)) {
                    return;
                }
                self.rec(g, i + 1, i + 2);
                return;
            }
            let remaining = self.v - j;
            if g.degree(i) + remaining < self.k {
                return;
            }
            // a common-neighbour count with a completed row may not overshoot
            let within = |g: &Graph| (0..i).all(|a| g.common(a, i) <= if g.has_edge(a, i) { self.lambda } else { self.mu });
            if g.degree(i) < self.k && g.degree(j) < self.k {
                g.add_edge(i, j);
                if within(g) {
                    self.rec(g, i, j + 1);
                }
                g.adj[i] &= !(1 << j);
                g.adj[j] &= !(1 << i);
            }
            self.rec(g, i, j + 1);
        }
    }
    let mut g = Graph::empty(v);
    for w in 1..=k.min(v.saturating_sub(1)) {
        g.add_edge(0, w);
    }
    let mut s = Search { v, k, lambda, mu, found: BTreeSet::new(), labelled: 0 };
    if v <= 1 {
        if k == 0 {
            s.found.insert(g.clone());
            s.labelled = 1;
        }
    } else {
        s.rec(&mut g, 1, 2);
    }
    Ok(SrgEnumeration { params, graphs: s.found.into_iter().collect(), labelled: s.labelled, diagnostic: None })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramReconstruction {
    pub gram: QMatrix,
    pub psd: bool,
    pub rank: usize,
}

/// Unit diagonal, `adjacent` on edges and `other` elsewhere.
pub fn gram_from_graph(g: &Graph, adjacent: &Rational, other: &Rational) -> GramReconstruction {
    let n = g.vertex_count();
    let gram = QMatrix::from_fn(n, n, |a, b| {
        if a == b {
            qi(1)
        } else if g.has_edge(a, b) {
            adjacent.clone()
        } else {
            other.clone()
        }
    });
    let psd = ldlt_psd(&gram).map(|v| v.is_psd()).unwrap_or(false);
    let rank = rank(&gram);
    GramReconstruction { gram, psd, rank }
}

/// Rational roots of `F(x, x, 1) - B` in `[-1, t]`: the admissible inner
/// products of a code attaining the bound.
pub fn diagonal_roots(cert: &SdpCertificate) -> Result<Vec<Rational>, UniquenessError> {
    let g = diagonal_polynomial(&cert.polynomial()?, &cert.b);
    if g.is_zero() {
        return Ok(Vec::new());
    }
    let f = factor_rational_roots(&g);
    let mut roots: Vec<Rational> = f
        .factors
        .iter()
        .filter(|(p, _)| p.degree() == Some(1))
        .map(|(p, _)| -p.coeff(0) / p.coeff(1))
        .filter(|r| *r >= qi(-1) && *r <= cert.t)
        .collect();
    roots.sort();
    roots.dedup();
    Ok(roots)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GramSummary {
    pub psd: bool,
    pub rank: usize,
}

/// Every step from a certificate to the unique code.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    #[serde(with = "crate::scalar::serde_q::vec")]
    pub inner_products: Vec<Rational>,
    pub code_size: Option<usize>,
    pub alpha: Option<AlphaReport>,
    pub srg: Option<SrgParams>,
    pub srg_verdict: Verdict,
    pub enumeration: Option<SrgEnumeration>,
    pub enumeration_verdict: Verdict,
    pub automorphisms: Option<usize>,
    pub gram: Option<GramSummary>,
    pub gram_verdict: Verdict,
    pub overall: Status,
}

impl UniquenessReport {
    pub fn verdicts(&self) -> Vec<&Verdict> {
        let mut v: Vec<&Verdict> = self.alpha.iter().map(|a| &a.verdict).collect();
        v.extend([&self.srg_verdict, &self.enumeration_verdict, &self.gram_verdict]);
        v
    }
}

/// Distance distribution, graph parameters, enumeration and Gram
/// reconstruction for a code attaining the exact bound of `cert`.
pub fn uniqueness_chain(cert: &SdpCertificate) -> Result<UniquenessReport, UniquenessError> {
    let roots = diagonal_roots(cert)?;
    let skipped = |why: &str| Verdict::fail("skipped", why, None);
    let mut report = UniquenessReport {
        inner_products: roots.clone(),
        code_size: None,
        alpha: None,
        srg: None,
        srg_verdict: skipped("no distance distribution"),
        enumeration: None,
        enumeration_verdict: skipped("no graph parameters"),
        automorphisms: None,
        gram: None,
        gram_verdict: skipped("no graph"),
        overall: Status::Fail,
    };
    let size = compute_bound(cert).ok().and_then(|b| match b {
        BoundValue::Exact { value } if value.is_integer() && value.is_positive() => value.to_integer().try_into().ok(),
        _ => None,
    });
    let Some(size) = size else {
        report.srg_verdict = Verdict::fail("srg", "the bound is not an integer", None);
        return Ok(report);
    };
    report.code_size = Some(size);
    if roots.len() != 2 {
        report.srg_verdict = Verdict::fail("srg", format!("expected two inner products, found {}", roots.len()), None);
        return Ok(report);
    }
    let alpha = solve_alpha(cert, &roots, size)?;
    let dist = alpha.distribution.clone();
    let passed = alpha.verdict.passed();
    report.alpha = Some(alpha);
    let Some(dist) = dist.filter(|_| passed) else {
        return Ok(report);
    };
    // adjacency at the smaller inner product
    let (adjacent, other) = (&roots[0], &roots[1]);
    let params = match srg_from_alpha(&dist, adjacent, other) {
        Ok(p) => p,
        Err(e) => {
            report.srg_verdict = Verdict::fail("srg", e.to_string(), None);
            return Ok(report);
        }
    };
    report.srg = Some(params);
    report.srg_verdict = if params.satisfies_identity() {
        Verdict::pass("srg", format!("({}, {}, {}, {})", params.v, params.k, params.lambda, params.mu))
    } else {
        Verdict::fail("srg", "parameters violate k(k - lambda - 1) = (v - k - 1) mu", None)
    };
    let enumeration = enumerate_srg(params)?;
    report.enumeration_verdict = match enumeration.graphs.as_slice() {
        [g] => {
            let aut = g.automorphism_count();
            let brute = g.automorphism_count_brute_force();
            report.automorphisms = Some(aut);
            if aut == brute {
                Verdict::pass(
                    "enumeration",
                    format!("one class: {} edges, {} automorphisms, graph6 {}", g.edge_count(), aut, g.to_graph6()),
                )
            } else {
                Verdict::fail("enumeration", format!("automorphism counts disagree: {aut} vs {brute}"), None)
            }
        }
        gs => Verdict::fail("enumeration", format!("{} isomorphism classes", gs.len()), None),
    };
    if let [g] = enumeration.graphs.as_slice() {
        let r = gram_from_graph(g, adjacent, other);
        report.gram_verdict = if r.psd && r.rank as i64 <= cert.n {
            Verdict::pass("gram", format!("positive semidefinite of rank {}", r.rank))
        } else {
            Verdict::fail("gram", format!("psd = {}, rank {} in dimension {}", r.psd, r.rank, cert.n), None)
        };
        report.gram = Some(GramSummary { psd: r.psd, rank: r.rank });
    }
    report.enumeration = Some(enumeration);
    report.overall = if report.verdicts().iter().all(|v| v.passed()) { Status::Pass } else { Status::Fail };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdpcert::{builtin_certificate, tight_certificate};

    fn roots() -> Vec<Rational> {
        vec![q(-2, 3), q(1, 6)]
    }

    #[test]
    fn petersen_inner_products() {
        let (pts, g) = petersen_code();
        assert_eq!(pts.len(), 10);
        assert!(pts.iter().all(|p| p.iter().fold(qi(0), |a, x| a + x).is_zero()));
        let counts = g.ordered_pair_counts();
        assert_eq!(counts[&q(-2, 3)], 30);
        assert_eq!(counts[&q(1, 6)], 60);
    }

    #[test]
    fn design_strengths() {
        assert_eq!(design_strength(&petersen_gram(), 4, 5).unwrap(), 2);
        let single = QGram::new(QMatrix::identity(1)).unwrap();
        assert_eq!(design_strength(&single, 4, 5).unwrap(), 0);
        let simplex = QGram::new(QMatrix::from_fn(5, 5, |i, j| if i == j { qi(1) } else { q(-1, 4) })).unwrap();
        assert!(design_strength(&simplex, 4, 5).unwrap() >= 1);
    }

    #[test]
    fn alpha_of_reference_certificate() {
        for cert in [builtin_certificate(), tight_certificate()] {
            let r = solve_alpha(&cert, &roots(), 10).unwrap();
            assert!(r.verdict.passed(), "{:?}", r.verdict);
            assert!(r.residuals_zero);
            let a = r.distribution.unwrap();
            let (x, y) = (q(-2, 3), q(1, 6));
            assert_eq!(a.get(&[x.clone(), x.clone(), y.clone()]), qi(6));
            assert_eq!(a.get(&[x.clone(), x.clone(), qi(1)]), qi(3));
            assert_eq!(a.get(&[x.clone(), y.clone(), y.clone()]), qi(12));
            assert_eq!(a.get(&[y.clone(), y.clone(), y.clone()]), qi(18));
            assert_eq!(a.get(&[y.clone(), y.clone(), qi(1)]), qi(6));
            assert_eq!(a.get(&[qi(1), qi(1), qi(1)]), qi(1));
            assert_eq!(a.get(&[x.clone(), x.clone(), x.clone()]), qi(0));
            assert_eq!(a.pair_count(&x), qi(30));
            assert_eq!(a.pair_count(&y), qi(60));
        }
    }

    #[test]
    fn dropping_block_one_leaves_alpha_undetermined() {
        let sys = AlphaSystem::build(&builtin_certificate(), &roots(), 10).unwrap();
        let r = sys.without("block_1").unwrap().solve();
        assert!(!r.verdict.passed());
        assert!(matches!(r.verdict.witness, Some(Witness::Ambiguity { .. })));
        assert!(sys.without("nonexistent").is_err());
    }

    #[test]
    fn srg_parameters() {
        let a = solve_alpha(&builtin_certificate(), &roots(), 10).unwrap().distribution.unwrap();
        let p = srg_from_alpha(&a, &q(-2, 3), &q(1, 6)).unwrap();
        assert_eq!(p, SrgParams::new(10, 3, 0, 1));
        assert!(p.satisfies_identity());
    }

    #[test]
    fn petersen_is_the_unique_srg() {
        let e = enumerate_srg(SrgParams::new(10, 3, 0, 1)).unwrap();
        assert_eq!(e.graphs.len(), 1);
        let g = &e.graphs[0];
        assert_eq!(g.edge_count(), 15);
        assert_eq!(g.girth(), Some(5));
        assert_eq!(*g, Graph::petersen().canonical_form());
        assert_eq!(g.automorphism_count(), 120);
        assert_eq!(g.automorphism_count_brute_force(), 120);
        assert!(g.is_vertex_transitive());
    }

    #[test]
    fn small_srg_cases() {
        let c5 = enumerate_srg(SrgParams::new(5, 2, 0, 1)).unwrap();
        assert_eq!(c5.graphs.len(), 1);
        assert_eq!(c5.graphs[0], Graph::cycle(5).canonical_form());
        for bad in [SrgParams::new(5, 2, 1, 1), SrgParams::new(10, 3, 1, 1)] {
            let e = enumerate_srg(bad).unwrap();
            assert!(e.graphs.is_empty() && e.diagnostic.is_some());
        }
        assert!(enumerate_srg(SrgParams::new(17, 8, 3, 4)).is_err());
    }

    #[test]
    fn graph6_roundtrip() {
        let g = Graph::petersen();
        let s = g.to_graph6();
        assert_eq!(Graph::from_graph6(&s).unwrap(), g);
        assert_eq!(Graph::cycle(5).to_graph6(), "Dhc");
        assert_eq!(Graph::from_graph6("A_").unwrap(), Graph::complete(2));
    }

    #[test]
    fn gram_reconstruction() {
        let r = gram_from_graph(&Graph::petersen(), &q(-2, 3), &q(1, 6));
        assert!(r.psd);
        assert_eq!(r.rank, 4);
        let k10 = gram_from_graph(&Graph::complete(10), &q(-1, 9), &q(1, 6));
        assert!(k10.psd);
        assert_eq!(k10.rank, 9);
        // the Petersen Gram matrix from the graph is the code's Gram matrix up to relabelling
        assert_eq!(r.gram, *petersen_gram().matrix());
    }

    #[test]
    fn chain_on_both_certificates() {
        for cert in [builtin_certificate(), tight_certificate()] {
            let r = uniqueness_chain(&cert).unwrap();
            assert_eq!(r.inner_products, roots());
            assert_eq!(r.code_size, Some(10));
            assert_eq!(r.overall, Status::Pass, "{:?}", r.verdicts());
            assert_eq!(r.automorphisms, Some(120));
        }
    }
}

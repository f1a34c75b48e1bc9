//! Discretised three-point bound instances in SDPA sparse format, solver
//! output parsing and rounding of numeric solutions to exact certificates.
//!
//! Variables are the upper-triangle entries of `F_0, ..., F_d` in block and
//! row-major order followed by `B`. The instance fixes `f_0 = 1` and, for a
//! trial bound `N`, minimises `F(1,1,1) + 3(N - 1) B`; the bound of the
//! solution is at most `N` exactly when that minimum is at most `N^2`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::linalg::{nullspace, rank, solve_linear, SolutionReport};
use crate::exact::multipoly::gram_determinant;
use crate::lpbound::chebyshev_grid;
use crate::scalar::{best_rational, f64_to_rational, fmt_rational, qi, rational_to_f64};
use crate::sdpcert::{verify_full, verify_psd, SdpCertificate, SearchSpace, VerificationReport, VerifyError, VerifyOptions};
use crate::threepoint::{BlockCache, ThreePointError};
use crate::verdict::Witness;
use crate::{FMatrix, Matrix, QMatrix, QTuple, Rational};

#[derive(Debug, Error)]
pub enum SdpioError {
    #[error(transparent)]
    ThreePoint(#[from] ThreePointError),
    #[error("sample point {0} lies outside the domain")]
    OutsideDomain(String),
    #[error("expected {expected} block sizes for degree {degree}, got {got}")]
    Sizes { degree: usize, expected: usize, got: usize },
    #[error("grids need at least two points per axis")]
    Grid,
}

/// Sample grids for the discretised conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    /// Chebyshev-Lobatto nodes per axis of `[-1, t]^3` before filtering.
    pub cube: usize,
    /// Chebyshev-Lobatto nodes on `[-1, t]` for `F(x, x, 1) <= B`.
    pub segment: usize,
    /// Additional points of the domain, checked exactly.
    pub extra: Vec<[Rational; 3]>,
    /// Denominator bound for the rational node approximations.
    pub node_denominator: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { cube: 21, segment: 101, extra: Vec::new(), node_denominator: 10_000 }
    }
}

/// Chebyshev-Lobatto nodes on `[-1, t]` with exact endpoints, ascending.
pub fn lobatto_nodes(t: &Rational, count: usize, max_den: u64) -> Vec<Rational> {
    let mut nodes: Vec<Rational> = chebyshev_grid(-1.0, rational_to_f64(t), count).iter().map(|v| best_rational(*v, max_den)).collect();
    nodes.retain(|v| *v > qi(-1) && v < t);
    nodes.push(qi(-1));
    nodes.push(t.clone());
    nodes.sort();
    nodes.dedup();
    nodes
}

/// `x, y, z` in `[-1, t]` with `1 + 2xyz - x^2 - y^2 - z^2 >= 0`.
pub fn in_domain(p: &[Rational; 3], t: &Rational) -> bool {
    p.iter().all(|v| *v >= qi(-1) && v <= t) && !gram_determinant::<Rational>().eval(p).is_negative()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variable {
    Entry { block: usize, row: usize, col: usize },
    B,
}

/// Variable list for the given block sizes.
pub fn variables(sizes: &[usize]) -> Vec<Variable> {
    let mut vars = Vec::new();
    for (block, &s) in sizes.iter().enumerate() {
        for row in 0..s {
            for col in row..s {
                vars.push(Variable::Entry { block, row, col });
            }
        }
    }
    vars.push(Variable::B);
    vars
}

/// One nonzero of a constraint matrix, 1-based as in the file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdpaEntry {
    pub matrix: usize,
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Minimise `c^T x` subject to `sum_i F_i x_i - F_0 >= 0`, block diagonal;
/// negative sizes mark diagonal blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpaProblem {
    pub block_sizes: Vec<i64>,
    pub objective: Vec<f64>,
    pub entries: Vec<SdpaEntry>,
}

impl SdpaProblem {
    pub fn variable_count(&self) -> usize {
        self.objective.len()
    }

    /// Sorts and merges entries, dropping zeros.
    fn normalise(&mut self) {
        self.entries.sort_by_key(|e| (e.matrix, e.block, e.row, e.col));
        let mut merged: Vec<SdpaEntry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match merged.last_mut() {
                Some(last) if (last.matrix, last.block, last.row, last.col) == (e.matrix, e.block, e.row, e.col) => last.value += e.value,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);
        self.entries = merged;
    }

    /// Every entry addresses a declared matrix, block and upper-triangle position.
    pub fn validate(&self) -> Result<(), SdpaError> {
        for (line, e) in self.entries.iter().enumerate() {
            let size = self.block_sizes.get(e.block.wrapping_sub(1)).map(|s| s.unsigned_abs() as usize);
            let ok = e.matrix <= self.variable_count()
                && size.is_some_and(|s| e.row >= 1 && e.row <= e.col && e.col <= s)
                && (self.block_sizes[e.block - 1] > 0 || e.row == e.col);
            if !ok {
                return Err(SdpaError::Index { line: line + 5 });
            }
        }
        Ok(())
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// SDPA sparse text: counts, block sizes, objective, then one
/// `matrix block row col value` line per nonzero.
pub fn write_sdpa(p: &SdpaProblem) -> String {
    let mut out = String::new();
    writeln!(out, "{}", p.variable_count()).unwrap();
    writeln!(out, "{}", p.block_sizes.len()).unwrap();
    writeln!(out, "{}", p.block_sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")).unwrap();
    writeln!(out, "{}", p.objective.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")).unwrap();
    for e in &p.entries {
        writeln!(out, "{} {} {} {} {}", e.matrix, e.block, e.row, e.col, fmt_f64(e.value)).unwrap();
    }
    out
}

#[derive(Debug, Error, PartialEq)]
pub enum SdpaError {
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("line {line}: {token:?} is not a number")]
    NotNumeric { line: usize, token: String },
    #[error("line {line}: index out of range")]
    Index { line: usize },
}

fn is_comment(line: &str) -> bool {
    matches!(line.trim_start().chars().next(), Some('"') | Some('*') | Some('#'))
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || ",{}()".contains(c)).filter(|s| !s.is_empty())
}

fn num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T, SdpaError> {
    tok.parse().map_err(|_| SdpaError::NotNumeric { line, token: tok.to_string() })
}

/// Reads SDPA sparse text; comment lines start with `"`, `*` or `#`.
pub fn parse_sdpa(text: &str) -> Result<SdpaProblem, SdpaError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !is_comment(l) && !l.trim().is_empty()).map(|(i, l)| (i + 1, l));
    let mut header = |what: &'static str| lines.next().ok_or(SdpaError::Missing(what));
    let (ln, l) = header("constraint count")?;
    let m: usize = num(ln, tokens(l).next().ok_or(SdpaError::Missing("constraint count"))?)?;
    let (ln, l) = header("block count")?;
    let nb: usize = num(ln, tokens(l).next().ok_or(SdpaError::Missing("block count"))?)?;
    let (ln, l) = header("block sizes")?;
    let block_sizes = tokens(l).take(nb).map(|t| num(ln, t)).collect::<Result<Vec<i64>, _>>()?;
    if block_sizes.len() < nb {
        return Err(SdpaError::Missing("block sizes"));
    }
    let (ln, l) = header("objective")?;
    let objective = tokens(l).take(m).map(|t| num(ln, t)).collect::<Result<Vec<f64>, _>>()?;
    if objective.len() < m {
        return Err(SdpaError::Missing("objective coefficients"));
    }
    let mut entries = Vec::new();
    for (ln, l) in lines {
        let t: Vec<&str> = tokens(l).take(5).collect();
        if t.len() < 5 {
            return Err(SdpaError::Missing("entry fields"));
        }
        let e =
            SdpaEntry { matrix: num(ln, t[0])?, block: num(ln, t[1])?, row: num(ln, t[2])?, col: num(ln, t[3])?, value: num(ln, t[4])? };
        let size = block_sizes.get(e.block.wrapping_sub(1)).map(|s| s.unsigned_abs() as usize);
        if e.matrix > m || !size.is_some_and(|s| e.row >= 1 && e.row <= s && e.col >= 1 && e.col <= s) {
            return Err(SdpaError::Index { line: ln });
        }
        entries.push(e);
    }
    Ok(SdpaProblem { block_sizes, objective, entries })
}

/// Discretised instance with its sample points.
#[derive(Clone, Debug)]
pub struct SdpInstance {
    pub n: i64,
    pub t: Rational,
    pub degree: usize,
    pub sizes: Vec<usize>,
    pub trial_bound: Rational,
    /// Sorted triples `x <= y <= z` where `F <= 0` is imposed.
    pub cube_points: Vec<[Rational; 3]>,
    /// Values `x` where `F(x, x, 1) <= B` is imposed.
    pub segment_points: Vec<Rational>,
    pub variables: Vec<Variable>,
    pub problem: SdpaProblem,
}

impl SdpInstance {
    /// Rows of the diagonal block, one per sample point.
    pub fn constraint_count(&self) -> usize {
        self.cube_points.len() + self.segment_points.len()
    }

    pub fn grid_size(&self) -> usize {
        self.constraint_count()
    }

    /// Same instance with the objective weight of `B` set for another trial bound.
    pub fn with_trial_bound(&self, trial: &Rational) -> SdpInstance {
        let mut inst = self.clone();
        let last = inst.problem.objective.len() - 1;
        inst.problem.objective[last] = rational_to_f64(&(qi(3) * (trial - qi(1))));
        inst.trial_bound = trial.clone();
        inst
    }

    /// Numeric blocks, `B` and `f_0 = 1` from a solution vector.
    pub fn numeric_certificate(&self, x: &[f64]) -> NumericCertificate {
        numeric_certificate(self.n, &self.t, &self.sizes, x)
    }

    /// Values of the variables at an exact certificate, scaled to `f_0 = 1`.
    pub fn point_of(&self, cert: &SdpCertificate) -> Vec<Rational> {
        let scale = cert.f0.recip();
        self.variables
            .iter()
            .map(|v| match *v {
                Variable::Entry { block, row, col } => &cert.blocks.blocks[block][(row, col)] * &scale,
                Variable::B => &cert.b * &scale,
            })
            .collect()
    }

    /// Smallest slack over the diagonal block, evaluated exactly at `x`.
    pub fn min_linear_slack(&self, x: &[Rational]) -> Rational {
        let lp = self.problem.block_sizes.len();
        let rows = self.constraint_count();
        let mut slack = vec![qi(0); rows];
        for e in self.problem.entries.iter().filter(|e| e.block == lp) {
            let v = f64_to_rational(e.value);
            if e.matrix == 0 {
                slack[e.row - 1] -= v;
            } else {
                slack[e.row - 1] += v * &x[e.matrix - 1];
            }
        }
        slack.into_iter().min().unwrap_or_else(|| qi(0))
    }
}

/// `F(p) <= 0` on the cube grid, `F(x, x, 1) <= B` on the segment grid,
/// `F_0 - E_0 >= 0` and `F_k >= 0`; objective `F(1,1,1) + 3(N - 1) B`.
pub fn assemble(
    n: i64,
    t: &Rational,
    degree: usize,
    sizes: &[usize],
    grid: &GridSpec,
    trial_bound: &Rational,
) -> Result<SdpInstance, SdpioError> {
    if sizes.len() != degree + 1 {
        return Err(SdpioError::Sizes { degree, expected: degree + 1, got: sizes.len() });
    }
    if grid.cube < 2 || grid.segment < 2 {
        return Err(SdpioError::Grid);
    }
    for p in &grid.extra {
        if !in_domain(p, t) {
            return Err(SdpioError::OutsideDomain(format!("({})", p.iter().map(fmt_rational).collect::<Vec<_>>().join(", "))));
        }
    }
    let cache = BlockCache::new(n, sizes)?;
    let nodes = lobatto_nodes(t, grid.cube, grid.node_denominator);
    let mut cube: BTreeSet<[Rational; 3]> = BTreeSet::new();
    for i in 0..nodes.len() {
        for j in i..nodes.len() {
            for k in j..nodes.len() {
                let p = [nodes[i].clone(), nodes[j].clone(), nodes[k].clone()];
                if in_domain(&p, t) {
                    cube.insert(p);
                }
            }
        }
    }
    for p in &grid.extra {
        let mut s = p.clone();
        s.sort();
        cube.insert(s);
    }
    let cube_points: Vec<[Rational; 3]> = cube.into_iter().collect();
    let segment_points = lobatto_nodes(t, grid.segment, grid.node_denominator);
    let vars = variables(sizes);
    let m = vars.len();
    let lp_block = sizes.len() + 1;
    let one = qi(1);

    // coefficient of each entry variable in F(p)
    let row_of = |p: &[Rational; 3]| -> Vec<f64> {
        let blocks: Vec<QMatrix> = (0..sizes.len()).map(|k| cache.block(k).eval(p)).collect();
        vars.iter()
            .map(|v| match *v {
                Variable::Entry { block, row, col } => {
                    let c = &blocks[block][(row, col)];
                    rational_to_f64(&if row == col { c.clone() } else { c * qi(2) })
                }
                Variable::B => 0.0,
            })
            .collect()
    };
    let diagonal: Vec<[Rational; 3]> = segment_points.iter().map(|x| [x.clone(), x.clone(), one.clone()]).collect();
    let all_points: Vec<&[Rational; 3]> = cube_points.iter().chain(&diagonal).collect();
    let workers = crate::sdpcert::default_workers().max(1);
    let chunk = all_points.len().div_ceil(workers).max(1);
    let rows: Vec<Vec<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = all_points.chunks(chunk).map(|c| s.spawn(|| c.iter().map(|p| row_of(p)).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("assembly worker")).collect()
    });

    let mut objective = row_of(&[one.clone(), one.clone(), one.clone()]);
    objective[m - 1] = rational_to_f64(&(qi(3) * (trial_bound - qi(1))));
    let mut entries = Vec::new();
    for (idx, v) in vars.iter().enumerate() {
        if let Variable::Entry { block, row, col } = *v {
            entries.push(SdpaEntry { matrix: idx + 1, block: block + 1, row: row + 1, col: col + 1, value: 1.0 });
        }
    }
    entries.push(SdpaEntry { matrix: 0, block: 1, row: 1, col: 1, value: 1.0 });
    for (r, row) in rows.iter().enumerate() {
        let on_segment = r >= cube_points.len();
        for (idx, c) in row.iter().enumerate() {
            entries.push(SdpaEntry { matrix: idx + 1, block: lp_block, row: r + 1, col: r + 1, value: -c });
        }
        if on_segment {
            entries.push(SdpaEntry { matrix: m, block: lp_block, row: r + 1, col: r + 1, value: 1.0 });
        }
    }
    let mut block_sizes: Vec<i64> = sizes.iter().map(|&s| s as i64).collect();
    block_sizes.push(-(rows.len() as i64));
    let mut problem = SdpaProblem { block_sizes, objective, entries };
    problem.normalise();
    Ok(SdpInstance {
        n,
        t: t.clone(),
        degree,
        sizes: sizes.to_vec(),
        trial_bound: trial_bound.clone(),
        cube_points,
        segment_points,
        variables: vars,
        problem,
    })
}

/// Smallest trial bound in `[lo, hi]` (to `tolerance`) whose optimum is at
/// most its square; `solve` returns the optimal objective or `None`.
pub fn bisect_trial_bound(
    inst: &SdpInstance,
    mut lo: f64,
    mut hi: f64,
    tolerance: f64,
    mut solve: impl FnMut(&SdpaProblem) -> Option<f64>,
) -> Option<f64> {
    let mut accepts = |n: f64| {
        let trial = f64_to_rational(n);
        solve(&inst.with_trial_bound(&trial).problem).is_some_and(|v| v <= n * n)
    };
    if !accepts(hi) {
        return None;
    }
    while hi - lo > tolerance {
        let mid = (lo + hi) / 2.0;
        if accepts(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Numeric solution in SDPA output layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpaSolution {
    pub objective: Option<f64>,
    pub x: Vec<f64>,
    /// Slack matrices; diagonal blocks are stored as their diagonals.
    pub x_mat: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SolutionError {
    #[error("missing section {0}")]
    MissingSection(&'static str),
    #[error("line {line}: {token:?} is not a number")]
    NotNumeric { line: usize, token: String },
    #[error("expected {expected} blocks, found {found}")]
    MissingBlock { expected: usize, found: usize },
    #[error("block {block}: expected size {expected}, found {found}")]
    WrongSize { block: usize, expected: usize, found: String },
    #[error("solution vector has {found} entries, expected {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("unbalanced braces")]
    Braces,
}

#[derive(Debug)]
enum Node {
    Num(f64),
    List(Vec<Node>),
}

#[derive(Debug)]
enum Tok {
    Open,
    Close,
    Word(usize, String),
}

fn lex(text: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if is_comment(line) {
            continue;
        }
        let mut word = String::new();
        let flush = |w: &mut String, out: &mut Vec<Tok>| {
            if !w.is_empty() {
                out.push(Tok::Word(i + 1, std::mem::take(w)));
            }
        };
        for c in line.chars() {
            match c {
                '{' => {
                    flush(&mut word, &mut out);
                    out.push(Tok::Open);
                }
                '}' => {
                    flush(&mut word, &mut out);
                    out.push(Tok::Close);
                }
                c if c.is_whitespace() || c == ',' || c == '=' => flush(&mut word, &mut out),
                c => word.push(c),
            }
        }
        flush(&mut word, &mut out);
    }
    out
}

fn parse_node(toks: &[Tok], pos: &mut usize) -> Result<Node, SolutionError> {
    match toks.get(*pos) {
        Some(Tok::Open) => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                match toks.get(*pos) {
                    Some(Tok::Close) => {
                        *pos += 1;
                        return Ok(Node::List(items));
                    }
                    None => return Err(SolutionError::Braces),
                    _ => items.push(parse_node(toks, pos)?),
                }
            }
        }
        Some(Tok::Word(line, w)) => {
            *pos += 1;
            w.parse().map(Node::Num).map_err(|_| SolutionError::NotNumeric { line: *line, token: w.clone() })
        }
        Some(Tok::Close) | None => Err(SolutionError::Braces),
    }
}

fn section(toks: &[Tok], name: &'static str) -> Result<Option<Node>, SolutionError> {
    let Some(at) = toks.iter().position(|t| matches!(t, Tok::Word(_, w) if w == name)) else {
        return Ok(None);
    };
    let mut pos = at + 1;
    parse_node(toks, &mut pos).map(Some)
}

fn numbers(node: &Node) -> Option<Vec<f64>> {
    match node {
        Node::List(items) => items.iter().map(|n| if let Node::Num(v) = n { Some(*v) } else { None }).collect(),
        Node::Num(_) => None,
    }
}

/// Reads `objValPrimal`, `xVec` and `xMat` and checks them against the problem shape.
pub fn parse_solution(text: &str, problem: &SdpaProblem) -> Result<SdpaSolution, SolutionError> {
    let toks = lex(text);
    let objective = match toks.iter().position(|t| matches!(t, Tok::Word(_, w) if w == "objValPrimal")) {
        Some(at) => match toks.get(at + 1) {
            Some(Tok::Word(line, w)) => Some(w.parse().map_err(|_| SolutionError::NotNumeric { line: *line, token: w.clone() })?),
            _ => return Err(SolutionError::MissingSection("objValPrimal value")),
        },
        None => None,
    };
    let x_node = section(&toks, "xVec")?.ok_or(SolutionError::MissingSection("xVec"))?;
    let x = numbers(&x_node).ok_or(SolutionError::MissingSection("xVec entries"))?;
    if x.len() != problem.variable_count() {
        return Err(SolutionError::WrongLength { expected: problem.variable_count(), found: x.len() });
    }
    let Node::List(blocks) = section(&toks, "xMat")?.ok_or(SolutionError::MissingSection("xMat"))? else {
        return Err(SolutionError::MissingSection("xMat"));
    };
    if blocks.len() != problem.block_sizes.len() {
        return Err(SolutionError::MissingBlock { expected: problem.block_sizes.len(), found: blocks.len() });
    }
    let mut x_mat = Vec::new();
    for (b, (node, &size)) in blocks.iter().zip(&problem.block_sizes).enumerate() {
        let expected = size.unsigned_abs() as usize;
        let rows: Vec<Vec<f64>> = if size < 0 {
            let d = numbers(node).ok_or_else(|| SolutionError::WrongSize { block: b + 1, expected, found: "a matrix".into() })?;
            vec![d]
        } else {
            let Node::List(items) = node else { unreachable!("blocks are lists") };
            items
                .iter()
                .map(|r| numbers(r).ok_or_else(|| SolutionError::WrongSize { block: b + 1, expected, found: "a vector".into() }))
                .collect::<Result<_, _>>()?
        };
        let shape_ok =
            if size < 0 { rows[0].len() == expected } else { rows.len() == expected && rows.iter().all(|r| r.len() == expected) };
        if !shape_ok {
            let found =
                if size < 0 { rows[0].len().to_string() } else { format!("{}x{}", rows.len(), rows.first().map_or(0, |r| r.len())) };
            return Err(SolutionError::WrongSize { block: b + 1, expected, found });
        }
        x_mat.push(rows);
    }
    Ok(SdpaSolution { objective, x, x_mat })
}

/// Writes a solution in the layout read by [`parse_solution`].
pub fn write_solution(sol: &SdpaSolution) -> String {
    let list = |v: &[f64]| format!("{{{}}}", v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","));
    let mut out = String::new();
    if let Some(v) = sol.objective {
        writeln!(out, "objValPrimal = {}", fmt_f64(v)).unwrap();
    }
    writeln!(out, "xVec = \n{}", list(&sol.x)).unwrap();
    writeln!(out, "xMat = \n{{").unwrap();
    for b in &sol.x_mat {
        if b.len() == 1 && sol.x_mat.len() > 1 && b[0].len() != 1 {
            writeln!(out, "{}", list(&b[0])).unwrap();
        } else {
            writeln!(out, "{{ {} }}", b.iter().map(|r| list(r)).collect::<Vec<_>>().join(", ")).unwrap();
        }
    }
    writeln!(out, "}}").unwrap();
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericCertificate {
    pub n: i64,
    pub t: Rational,
    pub blocks: Vec<FMatrix>,
    pub b: f64,
    pub f0: f64,
}

impl NumericCertificate {
    pub fn from_exact(cert: &SdpCertificate) -> Self {
        NumericCertificate {
            n: cert.n,
            t: cert.t.clone(),
            blocks: cert.blocks.blocks.iter().map(|m| m.to_f64()).collect(),
            b: rational_to_f64(&cert.b),
            f0: rational_to_f64(&cert.f0),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|m| m.rows()).collect()
    }
}

/// Numeric blocks, `B` and `f_0 = 1` from a solution vector in variable order.
pub fn numeric_certificate(n: i64, t: &Rational, sizes: &[usize], x: &[f64]) -> NumericCertificate {
    let mut blocks: Vec<FMatrix> = sizes.iter().map(|&s| Matrix::zeros(s, s)).collect();
    let mut b = 0.0;
    for (v, val) in variables(sizes).iter().zip(x) {
        match *v {
            Variable::Entry { block, row, col } => {
                blocks[block][(row, col)] = *val;
                blocks[block][(col, row)] = *val;
            }
            Variable::B => b = *val,
        }
    }
    NumericCertificate { n, t: t.clone(), blocks, b, f0: 1.0 }
}

/// Sizes of the semidefinite blocks of a problem written by [`assemble`].
pub fn block_sizes_of(problem: &SdpaProblem) -> Vec<usize> {
    problem.block_sizes.iter().filter(|&&s| s > 0).map(|&s| s as usize).collect()
}

/// Best approximation of each value with denominator at most `max_den`.
pub fn round_entries(values: &[f64], max_den: u64) -> Vec<Rational> {
    values.iter().map(|v| best_rational(*v, max_den)).collect()
}

/// Exact linear conditions that a tight certificate satisfies, over the
/// variables followed by `f_0`.
#[derive(Clone, Debug)]
pub struct LinearConditions {
    pub labels: Vec<String>,
    pub matrix: QMatrix,
}

/// Tightness rows of the search space written in the entries of the blocks,
/// vanishing of monomials outside its span, and `(F_k - f_0 E_0 [k = 0]) v = 0`
/// for `v` in the range of each nonzero triple sum.
pub fn tightness_conditions(space: &SearchSpace, n: i64) -> Result<LinearConditions, SdpioError> {
    let sizes = space.tightness.sizes.clone();
    let cache = BlockCache::new(n, &sizes)?;
    let vars = variables(&sizes);
    let nv = vars.len() + 1;
    let (col_b, col_f0) = (nv - 2, nv - 1);
    let expansions = vars
        .iter()
        .map(|v| match *v {
            Variable::Entry { block, row, col } => {
                let mut t = QTuple::zeros(&sizes);
                t.blocks[block][(row, col)] = qi(1);
                t.blocks[block][(col, row)] = qi(1);
                cache.expand(&t).map(Some)
            }
            Variable::B => Ok(None),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sorted = |e: &[u32; 3]| {
        let mut s = *e;
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    };
    let span: BTreeSet<[u32; 3]> = space.system.monomials.iter().map(sorted).collect();
    let outside: BTreeSet<[u32; 3]> = expansions
        .iter()
        .flatten()
        .flat_map(|p| p.terms().map(|(e, _)| sorted(e)).collect::<Vec<_>>())
        .filter(|e| !span.contains(e))
        .collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let sys = &space.system;
    let nm = sys.monomials.len();
    for (r, label) in sys.labels.iter().enumerate() {
        let mut row = vec![qi(0); nv];
        for (idx, p) in expansions.iter().enumerate() {
            if let Some(p) = p {
                row[idx] = (0..nm).fold(qi(0), |acc, m| acc + &sys.matrix[(r, m)] * p.coeff(sys.monomials[m]));
            }
        }
        row[col_b] = sys.matrix[(r, nm)].clone();
        row[col_f0] = sys.matrix[(r, nm + 1)].clone();
        rows.push(row);
        labels.push(label.clone());
    }
    for e in &outside {
        let mut row = vec![qi(0); nv];
        for (idx, p) in expansions.iter().enumerate() {
            if let Some(p) = p {
                row[idx] = p.coeff(*e);
            }
        }
        rows.push(row);
        labels.push(format!("coefficient of {} = 0", crate::threepoint::monomial_label(e)));
    }
    for (k, t) in space.tightness.triple_sums.blocks.iter().enumerate() {
        if t.is_zero() {
            continue;
        }
        let null = nullspace(t);
        let range = nullspace(&QMatrix::from_rows(null));
        for (vi, v) in range.iter().enumerate() {
            for i in 0..sizes[k] {
                let mut row = vec![qi(0); nv];
                for (idx, var) in vars.iter().enumerate() {
                    if let Variable::Entry { block, row: a, col: b } = *var {
                        if block != k {
                            continue;
                        }
                        if a == i {
                            row[idx] += &v[b];
                        }
                        if b == i && a != b {
                            row[idx] += &v[a];
                        }
                    }
                }
                if k == 0 && i == 0 {
                    row[col_f0] = -v[0].clone();
                }
                rows.push(row);
                labels.push(format!("block {k} annihilates range vector {vi}, row {i}"));
            }
        }
    }
    Ok(LinearConditions { labels, matrix: QMatrix::from_rows(rows) })
}

/// Least-norm change of the variables (with `f_0` held fixed) that satisfies
/// every condition: `delta = A^T (A A^T)^+ r`.
pub fn project(point: &[Rational], conditions: &LinearConditions) -> Option<Vec<Rational>> {
    let a = &conditions.matrix;
    let nv = a.cols();
    let free = nv - 1;
    let residual: Vec<Rational> = a.mul_vec(point).into_iter().map(|v| -v).collect();
    let af = a.submatrix(&(0..a.rows()).collect::<Vec<_>>(), &(0..free).collect::<Vec<_>>());
    let gram = &af * &af.transpose();
    let z = match solve_linear(&gram, &residual).ok()? {
        SolutionReport::Unique(z) => z,
        SolutionReport::Affine { particular, .. } => particular,
        SolutionReport::Inconsistent { .. } => return None,
    };
    let delta = af.transpose().mul_vec(&z);
    let mut out = point.to_vec();
    for (o, d) in out.iter_mut().zip(delta) {
        *o += d;
    }
    (a.mul_vec(&out).iter().all(|v| v.is_zero())).then_some(out)
}

/// Keeps the free coordinates of `point` (pivots chosen left to right) and
/// solves the conditions exactly for the remaining ones, `f_0` held fixed.
pub fn complete_from_free(point: &[Rational], conditions: &LinearConditions) -> Option<Vec<Rational>> {
    let a = &conditions.matrix;
    let nv = a.cols();
    let all_rows: Vec<usize> = (0..a.rows()).collect();
    let mut pivots: Vec<usize> = Vec::new();
    for c in 0..nv - 1 {
        let mut trial = pivots.clone();
        trial.push(c);
        if rank(&a.submatrix(&all_rows, &trial)) == trial.len() {
            pivots = trial;
        }
    }
    let free: Vec<usize> = (0..nv).filter(|c| !pivots.contains(c)).collect();
    let fixed: Vec<Rational> = free.iter().map(|&c| point[c].clone()).collect();
    let rhs: Vec<Rational> = a.submatrix(&all_rows, &free).mul_vec(&fixed).into_iter().map(|v| -v).collect();
    let SolutionReport::Unique(x) = solve_linear(&a.submatrix(&all_rows, &pivots), &rhs).ok()? else {
        return None;
    };
    let mut out = point.to_vec();
    for (&c, v) in pivots.iter().zip(x) {
        out[c] = v;
    }
    Some(out)
}

#[derive(Clone, Debug, Default)]
pub struct RoundOptions<'a> {
    pub max_denominator: u64,
    /// Project onto the exact tightness conditions of this search space.
    pub target: Option<&'a SearchSpace>,
    pub verify: VerifyOptions,
}

#[derive(Clone, Debug)]
pub struct RoundedCertificate {
    pub certificate: SdpCertificate,
    pub report: VerificationReport,
    pub projected: bool,
}

#[derive(Debug, Error)]
pub enum RoundingError {
    #[error("numeric certificate has sizes {found:?}, target expects {expected:?}")]
    Shape { expected: Vec<usize>, found: Vec<usize> },
    #[error("the rounded point cannot be projected onto the tightness conditions")]
    Projection,
    #[error("invalid rounded certificate: {0}")]
    Invalid(String),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("rounded certificate fails verification; worst violation: {worst}")]
    Certification { worst: String, report: Box<VerificationReport> },
}

fn witness_size(w: &Witness) -> Option<Rational> {
    match w {
        Witness::Vector { value, .. } | Witness::Point { value, .. } => Some(value.abs()),
        Witness::Coefficient { expected, found, .. } => Some((expected - found).abs()),
        _ => None,
    }
}

fn worst_violation(report: &VerificationReport) -> String {
    let failed: Vec<_> = report.verdicts().into_iter().filter(|v| !v.passed()).collect();
    let scored = failed.iter().filter_map(|v| v.witness.as_ref().and_then(witness_size).map(|s| (s, *v))).max_by(|a, b| a.0.cmp(&b.0));
    match (scored, failed.first()) {
        (Some((size, v)), _) => format!("{}: {} (magnitude {})", v.check, v.detail, fmt_rational(&size)),
        (None, Some(v)) => format!("{}: {}", v.check, v.detail),
        (None, None) => "none".into(),
    }
}

fn assemble_certificate(numeric: &NumericCertificate, vars: &[Variable], point: &[Rational]) -> Result<SdpCertificate, RoundingError> {
    let mut blocks = QTuple::zeros(&numeric.sizes());
    for (v, val) in vars.iter().zip(point) {
        if let Variable::Entry { block, row, col } = *v {
            blocks.blocks[block][(row, col)] = val.clone();
            blocks.blocks[block][(col, row)] = val.clone();
        }
    }
    let b = point[vars.len() - 1].clone();
    let f0 = point[vars.len()].clone();
    SdpCertificate::new(numeric.n, numeric.t.clone(), blocks, b, f0).map_err(|e| RoundingError::Invalid(e.to_string()))
}

/// Denominator bounds tried in order: powers of ten below `max`, then `max`.
pub fn denominator_ladder(max: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(10u64), |d| d.checked_mul(10)).take_while(|d| *d < max).collect();
    out.push(max.max(1));
    out
}

/// Continued-fraction rounding of every entry, optional completion onto the
/// tightness conditions, then full verification. Denominator bounds are
/// tried from small to `max_denominator`; the first rounding whose blocks
/// pass the positivity checks is verified in full.
pub fn round_certificate(numeric: &NumericCertificate, opts: &RoundOptions) -> Result<RoundedCertificate, RoundingError> {
    let sizes = numeric.sizes();
    let vars = variables(&sizes);
    let mut values: Vec<f64> = vars
        .iter()
        .map(|v| match *v {
            Variable::Entry { block, row, col } => numeric.blocks[block][(row, col)],
            Variable::B => numeric.b,
        })
        .collect();
    values.push(numeric.f0);
    let conditions = match opts.target {
        Some(space) if space.tightness.sizes != sizes => {
            return Err(RoundingError::Shape { expected: space.tightness.sizes.clone(), found: sizes })
        }
        Some(space) => Some(tightness_conditions(space, numeric.n).map_err(|e| RoundingError::Invalid(e.to_string()))?),
        None => None,
    };
    let mut last = None;
    for den in denominator_ladder(opts.max_denominator) {
        let mut point = round_entries(&values, den);
        let mut projected = false;
        if let Some(c) = &conditions {
            if !c.matrix.mul_vec(&point).iter().all(|v| v.is_zero()) {
                match complete_from_free(&point, c).or_else(|| project(&point, c)) {
                    Some(p) => point = p,
                    None => continue,
                }
                projected = true;
            }
        }
        let Ok(certificate) = assemble_certificate(numeric, &vars, &point) else { continue };
        let psd_ok = verify_psd(&certificate).status().is_pass();
        last = Some((certificate, projected));
        if psd_ok {
            break;
        }
    }
    let (certificate, projected) = last.ok_or(RoundingError::Projection)?;
    let report = verify_full(&certificate, &opts.verify)?;
    if !report.overall.is_pass() {
        return Err(RoundingError::Certification { worst: worst_violation(&report), report: Box::new(report) });
    }
    Ok(RoundedCertificate { certificate, report, projected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;
    use crate::sdpcert::{builtin_certificate, tight_certificate};

    fn toy() -> SdpaProblem {
        SdpaProblem {
            block_sizes: vec![-1],
            objective: vec![1.0],
            entries: vec![
                SdpaEntry { matrix: 0, block: 1, row: 1, col: 1, value: 2.0 },
                SdpaEntry { matrix: 1, block: 1, row: 1, col: 1, value: 1.0 },
            ],
        }
    }

    #[test]
    fn toy_text() {
        assert_eq!(write_sdpa(&toy()), "1\n1\n-1\n1.0000000000000000e0\n0 1 1 1 2.0000000000000000e0\n1 1 1 1 1.0000000000000000e0\n");
        assert_eq!(parse_sdpa(&write_sdpa(&toy())).unwrap(), toy());
    }

    #[test]
    fn parse_tolerates_comments_and_braces() {
        let text = "\"toy problem\n* comment\n1 = mDIM\n1\n{-1}\n{1.0}\n0 1 1 1 2\n1 1 1 1 1\n";
        assert_eq!(parse_sdpa(text).unwrap(), toy());
        assert_eq!(parse_sdpa("1\n1\n-1\nx\n"), Err(SdpaError::NotNumeric { line: 4, token: "x".into() }));
        assert_eq!(parse_sdpa("1\n1\n-1\n1\n1 2 1 1 1\n"), Err(SdpaError::Index { line: 5 }));
    }

    #[test]
    fn nodes_and_domain() {
        let nodes = lobatto_nodes(&q(1, 6), 21, 10_000);
        assert_eq!(nodes.len(), 21);
        assert_eq!(nodes[0], qi(-1));
        assert_eq!(nodes[20], q(1, 6));
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(in_domain(&[q(-2, 3), q(-2, 3), q(1, 6)], &q(1, 6)));
        assert!(!in_domain(&[qi(-1), qi(-1), qi(-1)], &q(1, 6)));
        assert!(!in_domain(&[q(1, 2), qi(0), qi(0)], &q(1, 6)));
    }

    #[test]
    fn small_instance_counts() {
        let grid = GridSpec { cube: 5, segment: 7, ..Default::default() };
        let inst = assemble(3, &q(1, 2), 2, &[4, 3, 1], &grid, &qi(10)).unwrap();
        assert_eq!(inst.problem.block_sizes, vec![4, 3, 1, -(inst.grid_size() as i64)]);
        assert_eq!(inst.problem.variable_count(), 10 + 6 + 1 + 1);
        assert!(inst.cube_points.iter().all(|p| in_domain(p, &q(1, 2))));
        inst.problem.validate().unwrap();
        let bad = GridSpec { extra: vec![[q(1, 2), q(1, 2), qi(-1)]], ..grid };
        assert!(matches!(assemble(3, &q(1, 2), 2, &[4, 3, 1], &bad, &qi(10)), Err(SdpioError::OutsideDomain(_))));
    }

    #[test]
    fn certificates_satisfy_every_sample_constraint() {
        let grid = GridSpec { cube: 9, segment: 17, ..Default::default() };
        let inst = assemble(4, &q(1, 6), 2, &[4, 3, 1], &grid, &qi(10)).unwrap();
        for cert in [builtin_certificate(), tight_certificate()] {
            let x = inst.point_of(&cert);
            assert!(inst.min_linear_slack(&x) > q(-1, 1_000_000_000));
        }
    }

    #[test]
    fn solution_errors() {
        let p = toy();
        let good = "objValPrimal = 3\nxVec = \n{1.5}\nxMat = \n{\n{1.5}\n}\n";
        let s = parse_solution(good, &p).unwrap();
        assert_eq!(s.x, vec![1.5]);
        assert_eq!(s.objective, Some(3.0));
        assert_eq!(parse_solution("xVec = {1.5}\nxMat = {\n}\n", &p), Err(SolutionError::MissingBlock { expected: 1, found: 0 }));
        assert!(matches!(parse_solution("xVec = {1.5}\nxMat = {\n{1.5, 2}\n}\n", &p), Err(SolutionError::WrongSize { .. })));
        assert_eq!(
            parse_solution("xVec = {abc}\nxMat = {\n{1.5}\n}\n", &p),
            Err(SolutionError::NotNumeric { line: 1, token: "abc".into() })
        );
    }

    #[test]
    fn continued_fraction_rounding() {
        assert_eq!(round_entries(&[0.333333333], 10), vec![q(1, 3)]);
        assert_eq!(round_entries(&[-2.0 / 3.0 + 1e-9, 3588.0], 10_000), vec![q(-2, 3), qi(3588)]);
    }

    #[test]
    fn tight_certificate_satisfies_the_conditions() {
        let space = crate::sdpcert::build_search_space().unwrap();
        let cond = tightness_conditions(&space, 4).unwrap();
        let inst_vars = variables(&[4, 3, 1]);
        let cert = tight_certificate();
        let mut x: Vec<Rational> = inst_vars
            .iter()
            .map(|v| match *v {
                Variable::Entry { block, row, col } => cert.blocks.blocks[block][(row, col)].clone(),
                Variable::B => cert.b.clone(),
            })
            .collect();
        x.push(cert.f0.clone());
        assert!(cond.matrix.mul_vec(&x).iter().all(|v| v.is_zero()));
        let builtin = builtin_certificate();
        let mut y: Vec<Rational> = inst_vars
            .iter()
            .map(|v| match *v {
                Variable::Entry { block, row, col } => builtin.blocks.blocks[block][(row, col)].clone(),
                Variable::B => builtin.b.clone(),
            })
            .collect();
        y.push(builtin.f0.clone());
        assert!(!cond.matrix.mul_vec(&y).iter().all(|v| v.is_zero()));
    }
}

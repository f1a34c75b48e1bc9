//! Three-point certificates: exact verification of block positivity, the
//! expanded polynomial, both sign conditions, and the resulting size bound.

mod domain;
pub mod reference;
mod search;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::linalg::{ldlt_psd, solve_linear, PsdVerdict, SolutionReport};
use crate::exact::sturm::{isolate_roots, refine_root, sturm_max_on, SignVerdict};
use crate::scalar::{fmt_rational, parse_rational, q, qi, rational_sqrt_exact, serde_q, simplest_between};
use crate::threepoint::{expand, QSymPoly, QTuple, ThreePointError};
use crate::verdict::{Status, Verdict, Witness};
use crate::{QMatrix, QPoly, Rational};

pub use domain::{
    candidate_zeros, default_workers, local_certificate, verify_condition_c, CheckMode, ConditionCOptions, ConditionCReport, Domain,
    LocalCertificate,
};
pub use search::{
    build_search_space, feasibility_solve, full_target_parameters, min_eigenvalue_at, nelder_mead_max, round_in_interval, search_monomials,
    tightness_system, FeasibilityOutcome, FeasibilityTarget, ParameterSet, SearchError, SearchSpace, TightnessData, TightnessSystem,
};

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("invalid certificate JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid rational {0:?}")]
    Rational(String),
    #[error("block {0} is not square")]
    NotSquare(usize),
    #[error("block {block} is not symmetric at ({row}, {col})")]
    NotSymmetric { block: usize, row: usize, col: usize },
    #[error("f0 must be positive, got {0}")]
    NonPositiveF0(String),
    #[error("t must lie in [-1, 1), got {0}")]
    BadThreshold(String),
    #[error("invalid expansion: {0}")]
    Expansion(String),
    #[error(transparent)]
    ThreePoint(#[from] ThreePointError),
}

/// Blocks `F_0, ..., F_d` with the constants `B` and `f_0`, optionally carrying
/// the polynomial the blocks are claimed to expand to.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpCertificate {
    pub n: i64,
    pub t: Rational,
    pub blocks: QTuple,
    pub b: Rational,
    pub f0: Rational,
    pub expansion: Option<QSymPoly>,
}

#[derive(Serialize, Deserialize)]
struct CertificateWire {
    n: i64,
    t: String,
    blocks: Vec<Vec<Vec<String>>>,
    #[serde(rename = "B")]
    b: String,
    f0: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expansion: Option<BTreeMap<String, String>>,
}

fn parse_q(s: &str) -> Result<Rational, CertificateError> {
    parse_rational(s).ok_or_else(|| CertificateError::Rational(s.to_string()))
}

impl SdpCertificate {
    pub fn new(n: i64, t: Rational, blocks: QTuple, b: Rational, f0: Rational) -> Result<Self, CertificateError> {
        let cert = SdpCertificate { n, t, blocks, b, f0, expansion: None };
        cert.validate()?;
        Ok(cert)
    }

    pub fn with_expansion(mut self, p: QSymPoly) -> Self {
        self.expansion = Some(p);
        self
    }

    pub fn validate(&self) -> Result<(), CertificateError> {
        if self.t < qi(-1) || self.t >= qi(1) {
            return Err(CertificateError::BadThreshold(fmt_rational(&self.t)));
        }
        if !self.f0.is_positive() {
            return Err(CertificateError::NonPositiveF0(fmt_rational(&self.f0)));
        }
        for (k, m) in self.blocks.blocks.iter().enumerate() {
            if !m.is_square() {
                return Err(CertificateError::NotSquare(k));
            }
            if let Some((row, col)) = asymmetry(m) {
                return Err(CertificateError::NotSymmetric { block: k, row, col });
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.blocks.degree()
    }

    /// `sum_k <F_k, S^n_k>`.
    pub fn polynomial(&self) -> Result<QSymPoly, ThreePointError> {
        expand(&self.blocks, self.n)
    }

    /// Multiplies blocks, `B` and `f_0` (and the claimed expansion) by `c > 0`.
    pub fn scaled(&self, c: &Rational) -> Self {
        SdpCertificate {
            n: self.n,
            t: self.t.clone(),
            blocks: self.blocks.scale(c),
            b: &self.b * c,
            f0: &self.f0 * c,
            expansion: self.expansion.as_ref().map(|p| p.scale(c)),
        }
    }

    pub fn to_json(&self) -> String {
        let wire = CertificateWire {
            n: self.n,
            t: fmt_rational(&self.t),
            blocks: self.blocks.blocks.iter().map(|m| m.to_rows().iter().map(|r| r.iter().map(fmt_rational).collect()).collect()).collect(),
            b: fmt_rational(&self.b),
            f0: fmt_rational(&self.f0),
            expansion: self.expansion.as_ref().map(QSymPoly::to_labelled),
        };
        let mut s = serde_json::to_string_pretty(&wire).expect("certificate serialises");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, CertificateError> {
        let wire: CertificateWire = serde_json::from_str(s)?;
        let mut blocks = Vec::with_capacity(wire.blocks.len());
        for (k, rows) in wire.blocks.iter().enumerate() {
            let parsed: Vec<Vec<Rational>> =
                rows.iter().map(|r| r.iter().map(|v| parse_q(v)).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
            if parsed.iter().any(|r| r.len() != parsed.len()) {
                return Err(CertificateError::NotSquare(k));
            }
            blocks.push(QMatrix::from_rows(parsed));
        }
        let expansion = wire.expansion.as_ref().map(|m| QSymPoly::from_labelled(m).map_err(CertificateError::Expansion)).transpose()?;
        let cert = SdpCertificate {
            n: wire.n,
            t: parse_q(&wire.t)?,
            blocks: QTuple::new(blocks),
            b: parse_q(&wire.b)?,
            f0: parse_q(&wire.f0)?,
            expansion,
        };
        cert.validate()?;
        Ok(cert)
    }
}

fn asymmetry(m: &QMatrix) -> Option<(usize, usize)> {
    for i in 0..m.rows() {
        for j in i + 1..m.cols() {
            if m[(i, j)] != m[(j, i)] {
                return Some((i, j));
            }
        }
    }
    None
}

/// The reference certificate for ten points in dimension four at `t = 1/6`,
/// together with its claimed expansion.
pub fn builtin_certificate() -> SdpCertificate {
    SdpCertificate::new(4, q(1, 6), reference::certificate_blocks(), reference::diagonal_bound(), reference::f0())
        .expect("reference certificate is well formed")
        .with_expansion(reference::expansion())
}

/// The certificate `A + (1/2) B + 720 K_1 + 1800 K_2` of the same family,
/// which satisfies every condition including `F_0 - f_0 E_0 >= 0`.
pub fn tight_certificate() -> SdpCertificate {
    SdpCertificate::from_json(include_str!("../../data/tight_certificate.json")).expect("bundled certificate parses")
}

/// Results of the positivity conditions on the blocks and on `F_0 - f_0 E_0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsdReport {
    pub blocks: Verdict,
    pub shifted: Verdict,
    /// Largest `f` with `F_0 - f E_0 >= 0`, when `F_0 >= 0`.
    #[serde(with = "serde_q::opt")]
    pub max_admissible_f0: Option<Rational>,
}

impl PsdReport {
    pub fn status(&self) -> Status {
        self.blocks.status.and(self.shifted.status)
    }
}

fn psd_verdict(check: &str, label: &str, block: usize, m: &QMatrix) -> Verdict {
    if let Some((row, col)) = asymmetry(m) {
        return Verdict::fail(check, format!("{label} is not symmetric"), Some(Witness::Asymmetry { block, row, col }));
    }
    match ldlt_psd(m).expect("symmetric input") {
        PsdVerdict::Psd { d, .. } => {
            let zeros = d.iter().filter(|v| v.is_zero()).count();
            Verdict::pass(check, format!("{label}: exact LDL^T with {} positive and {zeros} zero pivots", d.len() - zeros))
        }
        PsdVerdict::NotPsd { witness, value } => Verdict::fail(
            check,
            format!("{label} is not positive semidefinite: v^T M v = {}", fmt_rational(&value)),
            Some(Witness::Vector { block, vector: witness, value }),
        ),
    }
}

/// Largest `f` such that `F_0 - f E_0` is positive semidefinite.
pub fn max_admissible_f0(f0_block: &QMatrix) -> Option<Rational> {
    if !ldlt_psd(f0_block).ok()?.is_psd() {
        return None;
    }
    let n = f0_block.rows();
    if n == 1 {
        return Some(f0_block[(0, 0)].clone());
    }
    let rest: Vec<usize> = (1..n).collect();
    let inner = f0_block.submatrix(&rest, &rest);
    let coupling: Vec<Rational> = rest.iter().map(|&i| f0_block[(i, 0)].clone()).collect();
    let w = match solve_linear(&inner, &coupling).ok()? {
        SolutionReport::Unique(w) => w,
        SolutionReport::Affine { particular, .. } => particular,
        SolutionReport::Inconsistent { .. } => return None,
    };
    let correction = coupling.iter().zip(&w).fold(Rational::zero(), |acc, (a, b)| acc + a * b);
    Some(&f0_block[(0, 0)] - correction)
}

pub fn verify_psd(cert: &SdpCertificate) -> PsdReport {
    let mut blocks = Verdict::pass("psd_blocks", "");
    let mut details = Vec::new();
    for (k, m) in cert.blocks.blocks.iter().enumerate() {
        let v = psd_verdict("psd_blocks", &format!("F_{k}"), k, m);
        if !v.passed() {
            blocks = v;
            details.clear();
            break;
        }
        details.push(v.detail);
    }
    if blocks.passed() {
        blocks.detail = details.join("; ");
    }
    let (shifted, max_f0) = match cert.blocks.blocks.first() {
        Some(f0_block) => {
            let mut m = f0_block.clone();
            m[(0, 0)] = &m[(0, 0)] - &cert.f0;
            let mut v = psd_verdict("psd_shifted", "F_0 - f_0 E_0", 0, &m);
            let max = max_admissible_f0(f0_block);
            if let Some(mx) = &max {
                v.detail = format!("{}; largest admissible f_0 is {}", v.detail, fmt_rational(mx));
            }
            (v, max)
        }
        None => (Verdict::fail("psd_shifted", "certificate has no blocks", None), None),
    };
    PsdReport { blocks, shifted, max_admissible_f0: max_f0 }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub verdict: Verdict,
    pub polynomial: QSymPoly,
    #[serde(with = "serde_q")]
    pub value_at_one: Rational,
}

/// Expands the blocks and compares with the claimed polynomial, if any.
pub fn verify_expansion(cert: &SdpCertificate) -> Result<ExpansionReport, ThreePointError> {
    let poly = cert.polynomial()?;
    let one = qi(1);
    let value_at_one = poly.eval(&[one.clone(), one.clone(), one]);
    let verdict = match &cert.expansion {
        None => Verdict::pass("expansion", "no claimed expansion; computed polynomial reported"),
        Some(claim) => {
            let diff = poly.sub(claim);
            let first = diff.terms().next().map(|(e, _)| *e);
            match first {
                None => Verdict::pass(
                    "expansion",
                    format!("{} coefficients match exactly; F(1,1,1) = {}", claim.terms().count(), fmt_rational(&value_at_one)),
                ),
                Some(e) => {
                    let label = crate::threepoint::monomial_label(&e);
                    Verdict::fail(
                        "expansion",
                        format!("coefficient of {label} differs from the claimed expansion"),
                        Some(Witness::Coefficient { monomial: label, expected: claim.coeff(e), found: poly.coeff(e) }),
                    )
                }
            }
        }
    };
    Ok(ExpansionReport { verdict, polynomial: poly, value_at_one })
}

/// Constant times a product of powers of monic factors.
#[derive(Clone, Debug, PartialEq)]
pub struct Factorization {
    pub constant: Rational,
    pub factors: Vec<(QPoly, u32)>,
}

impl Factorization {
    pub fn product(&self) -> QPoly {
        self.factors.iter().fold(QPoly::constant(self.constant.clone()), |acc, (f, m)| &acc * &f.pow(*m))
    }

    fn describe(&self) -> String {
        let mut parts = vec![fmt_rational(&self.constant)];
        for (f, m) in &self.factors {
            parts.push(if *m == 1 { format!("({f})") } else { format!("({f})^{m}") });
        }
        parts.join(" * ")
    }
}

impl Serialize for Factorization {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Factor {
            #[serde(with = "serde_q::vec")]
            coefficients: Vec<Rational>,
            multiplicity: u32,
        }
        #[derive(Serialize)]
        struct Wire {
            #[serde(with = "serde_q")]
            constant: Rational,
            factors: Vec<Factor>,
        }
        Wire {
            constant: self.constant.clone(),
            factors: self.factors.iter().map(|(f, m)| Factor { coefficients: f.coeffs().to_vec(), multiplicity: *m }).collect(),
        }
        .serialize(s)
    }
}

fn cauchy_bound(p: &QPoly) -> Rational {
    let lead = p.leading().expect("nonzero").abs();
    let d = p.degree().unwrap_or(0);
    let m = p.coeffs()[..d].iter().map(|c| c.abs() / &lead).fold(Rational::zero(), |a, b| if b > a { b } else { a });
    m + qi(1)
}

/// Splits off all rational roots: `p = c * prod (x - r)^m * residual`, residual monic.
pub fn factor_rational_roots(p: &QPoly) -> Factorization {
    assert!(!p.is_zero(), "zero polynomial");
    let sf = p.square_free();
    let bound = cauchy_bound(&sf);
    let tiny = Rational::new(BigInt::one(), BigInt::from(10u32).pow(40));
    let mut roots = Vec::new();
    for iso in isolate_roots(&sf, &-&bound, &bound) {
        let candidate = match iso.exact() {
            Some(r) => r.clone(),
            None => {
                let r = refine_root(&sf, &iso, &tiny);
                simplest_between(&r.lo, &r.hi)
            }
        };
        if sf.eval(&candidate).is_zero() {
            roots.push(candidate);
        }
    }
    let mut rest = p.clone();
    let mut factors = Vec::new();
    for r in roots {
        let lin = QPoly::linear_root(r);
        let mut m = 0;
        loop {
            let (quo, rem) = rest.div_rem(&lin);
            if !rem.is_zero() {
                break;
            }
            rest = quo;
            m += 1;
        }
        factors.push((lin, m));
    }
    let constant = rest.leading().expect("nonzero").clone();
    let residual = rest.scale(&(qi(1) / &constant));
    if residual.degree().unwrap_or(0) > 0 {
        factors.push((residual, 1));
    }
    Factorization { constant, factors }
}

fn sign(v: &Rational) -> i32 {
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

/// Sign of the factored product at `x`, computed factor by factor.
fn factored_sign(f: &Factorization, x: &Rational) -> i32 {
    f.factors.iter().fold(sign(&f.constant), |acc, (p, m)| {
        let s = sign(&p.eval(x));
        acc * if m % 2 == 0 { s * s } else { s }
    })
}

/// Sign of one factor over `[lo, hi]`, as a short description.
fn factor_sign_note(p: &QPoly, m: u32, lo: &Rational, hi: &Rational) -> String {
    let name = format!("({p})");
    if m.is_multiple_of(2) {
        return format!("{name}^{m} >= 0");
    }
    match p.degree() {
        Some(1) => {
            let r = -p.coeff(0);
            if &r >= hi {
                format!("{name} <= 0 on the interval (root {} at or right of it)", fmt_rational(&r))
            } else if &r <= lo {
                format!("{name} >= 0 on the interval (root {} at or left of it)", fmt_rational(&r))
            } else {
                format!("{name} changes sign at {}", fmt_rational(&r))
            }
        }
        Some(2) => {
            let disc = p.coeff(1) * p.coeff(1) - qi(4) * p.coeff(2) * p.coeff(0);
            if disc.is_negative() {
                format!("{name} > 0 everywhere (discriminant {} < 0, positive leading coefficient)", fmt_rational(&disc))
            } else {
                format!("{name} has real roots (discriminant {})", fmt_rational(&disc))
            }
        }
        _ => {
            let n = isolate_roots(&p.square_free(), lo, hi).len() + usize::from(p.eval(lo).is_zero());
            format!("{name} has {n} roots in the interval")
        }
    }
}

/// Certifies `f <= 0` on `[lo, hi]` from the factored form: collects every root
/// in the interval (rational roots exactly, the others by isolation), and
/// evaluates the sign of the product factor by factor between consecutive roots.
pub fn factor_sign_check(f: &Factorization, lo: &Rational, hi: &Rational) -> (SignVerdict, Vec<String>) {
    let notes: Vec<String> = f.factors.iter().map(|(p, m)| factor_sign_note(p, *m, lo, hi)).collect();
    // disjoint root enclosures [a, b] in increasing order
    let mut marks: Vec<(Rational, Rational)> = Vec::new();
    let tiny = Rational::new(BigInt::one(), BigInt::from(10u32).pow(30));
    for (p, _) in &f.factors {
        if p.degree() == Some(1) {
            let r = -p.coeff(0);
            if &r >= lo && &r <= hi {
                marks.push((r.clone(), r));
            }
            continue;
        }
        let sf = p.square_free();
        if sf.eval(lo).is_zero() {
            marks.push((lo.clone(), lo.clone()));
        }
        for iso in isolate_roots(&sf, lo, hi) {
            match iso.exact() {
                Some(r) => marks.push((r.clone(), r.clone())),
                None => {
                    let r = refine_root(&sf, &iso, &tiny);
                    marks.push((r.lo.clone(), r.hi.clone()));
                }
            }
        }
    }
    marks.sort();
    marks.dedup();
    let mut tests = vec![lo.clone(), hi.clone()];
    for (a, b) in &marks {
        if a != b {
            tests.push(a.clone());
            tests.push(b.clone());
        }
    }
    for w in marks.windows(2) {
        let (left, right) = (&w[0].1, &w[1].0);
        if left < right {
            tests.push((left + right) / qi(2));
        }
    }
    tests.sort();
    for x in tests {
        if x >= *lo && x <= *hi && factored_sign(f, &x) > 0 {
            return (SignVerdict::PositiveWitness(x), notes);
        }
    }
    (SignVerdict::NonPositive, notes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionDReport {
    pub verdict: Verdict,
    /// Coefficients of `F(x, x, 1) - B`, lowest degree first.
    #[serde(with = "serde_q::vec")]
    pub diagonal: Vec<Rational>,
    pub factorization: Option<Factorization>,
    pub factor_notes: Vec<String>,
    pub factor_path_nonpositive: bool,
    pub sturm_path_nonpositive: bool,
    /// Whether the diagonal equals the expected factored product, if one was supplied.
    pub matches_expected: Option<bool>,
}

/// `F(x, x, 1) - B` as a univariate polynomial.
pub fn diagonal_polynomial(poly: &QSymPoly, b: &Rational) -> QPoly {
    &poly.to_tripoly().diagonal(&qi(1)) - &QPoly::constant(b.clone())
}

/// Certifies `F(x, x, 1) <= B` on `[-1, t]` along two independent routes.
pub fn verify_condition_d(cert: &SdpCertificate, expected: Option<&Factorization>) -> Result<ConditionDReport, ThreePointError> {
    let g = diagonal_polynomial(&cert.polynomial()?, &cert.b);
    let (lo, hi) = (qi(-1), cert.t.clone());
    let matches_expected = expected.map(|e| e.product() == g);
    if g.is_zero() {
        return Ok(ConditionDReport {
            verdict: Verdict::pass("condition_d", "F(x,x,1) - B vanishes identically"),
            diagonal: vec![],
            factorization: None,
            factor_notes: vec![],
            factor_path_nonpositive: true,
            sturm_path_nonpositive: true,
            matches_expected,
        });
    }
    let fact = factor_rational_roots(&g);
    debug_assert_eq!(fact.product(), g);
    let (factor_path, notes) = factor_sign_check(&fact, &lo, &hi);
    let sturm_path = sturm_max_on(&g, &lo, &hi);
    let witness_of = |v: &SignVerdict| match v {
        SignVerdict::PositiveWitness(x) => Some(Witness::Point { point: vec![x.clone()], value: g.eval(x) }),
        SignVerdict::NonPositive => None,
    };
    let verdict = if factor_path.is_nonpositive() != sturm_path.is_nonpositive() {
        Verdict::fail("condition_d", "factor-sign and Sturm routes disagree", witness_of(&factor_path).or_else(|| witness_of(&sturm_path)))
    } else if !factor_path.is_nonpositive() {
        Verdict::fail("condition_d", "F(x,x,1) > B somewhere on [-1, t]", witness_of(&factor_path))
    } else if matches_expected == Some(false) {
        Verdict::fail("condition_d", format!("F(x,x,1) - B = {} differs from the expected factorization", fact.describe()), None)
    } else {
        Verdict::pass(
            "condition_d",
            format!("F(x,x,1) - B = {} <= 0 on [-1, {}] (factor signs and Sturm sequence agree)", fact.describe(), fmt_rational(&hi)),
        )
    };
    Ok(ConditionDReport {
        verdict,
        diagonal: g.coeffs().to_vec(),
        factorization: Some(fact),
        factor_notes: notes,
        factor_path_nonpositive: factor_path.is_nonpositive(),
        sturm_path_nonpositive: sturm_path.is_nonpositive(),
        matches_expected,
    })
}

/// Exact bound, or a rational enclosure when the radicand is not a square.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundValue {
    Exact {
        #[serde(with = "serde_q")]
        value: Rational,
    },
    Enclosure {
        #[serde(with = "serde_q")]
        lo: Rational,
        #[serde(with = "serde_q")]
        hi: Rational,
    },
}

impl BoundValue {
    pub fn lower(&self) -> &Rational {
        match self {
            BoundValue::Exact { value } => value,
            BoundValue::Enclosure { lo, .. } => lo,
        }
    }

    pub fn upper(&self) -> &Rational {
        match self {
            BoundValue::Exact { value } => value,
            BoundValue::Enclosure { hi, .. } => hi,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            BoundValue::Exact { value } => Some(value),
            BoundValue::Enclosure { .. } => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        crate::scalar::rational_to_f64(&((self.lower() + self.upper()) / qi(2)))
    }

    /// True when every code admitted by the bound has at most this many points,
    /// i.e. the size `n` does not exceed the upper end.
    pub fn admits(&self, n: usize) -> bool {
        qi(n as i64) <= *self.upper()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("f0 must be positive")]
    NonPositiveF0,
    #[error("negative radicand {0}")]
    NegativeRadicand(String),
}

/// `9 B^2 + 4 f_0 (F(1,1,1) - 3B)`.
pub fn bound_radicand(b: &Rational, f0: &Rational, value_at_one: &Rational) -> Rational {
    qi(9) * b * b + qi(4) * f0 * (value_at_one - qi(3) * b)
}

/// Rational `lo <= sqrt(r) <= hi` with `hi - lo <= 10^-digits / den(r)`.
pub fn sqrt_enclosure(r: &Rational, digits: u32) -> (Rational, Rational) {
    assert!(!r.is_negative());
    let scale = BigInt::from(10u32).pow(digits);
    let (p, d) = (r.numer(), r.denom());
    let s = (p * d * &scale * &scale).sqrt();
    let den = d * &scale;
    (Rational::new(s.clone(), den.clone()), Rational::new(s + 1, den))
}

/// `(3B + sqrt(9B^2 + 4 f_0 (F(1,1,1) - 3B))) / (2 f_0)`.
pub fn bound_from_values(b: &Rational, f0: &Rational, value_at_one: &Rational) -> Result<BoundValue, BoundError> {
    if !f0.is_positive() {
        return Err(BoundError::NonPositiveF0);
    }
    let rad = bound_radicand(b, f0, value_at_one);
    if rad.is_negative() {
        return Err(BoundError::NegativeRadicand(fmt_rational(&rad)));
    }
    let denom = qi(2) * f0;
    if let Some(root) = rational_sqrt_exact(&rad) {
        return Ok(BoundValue::Exact { value: (qi(3) * b + root) / &denom });
    }
    let target = Rational::new(BigInt::one(), BigInt::from(10u32).pow(30));
    let mut digits = 31;
    loop {
        let (lo, hi) = sqrt_enclosure(&rad, digits);
        let (blo, bhi) = ((qi(3) * b + lo) / &denom, (qi(3) * b + hi) / &denom);
        if &bhi - &blo <= target {
            return Ok(BoundValue::Enclosure { lo: blo, hi: bhi });
        }
        digits += 4;
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    ThreePoint(#[from] ThreePointError),
    #[error(transparent)]
    Bound(#[from] BoundError),
}

pub fn compute_bound(cert: &SdpCertificate) -> Result<BoundValue, VerifyError> {
    let p = cert.polynomial()?;
    let one = qi(1);
    Ok(bound_from_values(&cert.b, &cert.f0, &p.eval(&[one.clone(), one.clone(), one]))?)
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub condition_c: ConditionCOptions,
    /// Expected factorization of `F(x, x, 1) - B`.
    pub expected_diagonal: Option<Factorization>,
}

impl VerifyOptions {
    /// Options for the reference certificate: expects the reference factorization.
    pub fn reference() -> Self {
        let (constant, factors) = reference::diagonal_factorization();
        VerifyOptions { expected_diagonal: Some(Factorization { constant, factors }), ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub n: i64,
    #[serde(with = "serde_q")]
    pub t: Rational,
    pub psd: PsdReport,
    pub expansion: ExpansionReport,
    pub condition_c: ConditionCReport,
    pub condition_d: ConditionDReport,
    #[serde(with = "serde_q")]
    pub radicand: Rational,
    pub bound: Option<BoundValue>,
    /// Bound obtained with the largest admissible `f_0`, when it differs.
    pub bound_at_max_f0: Option<BoundValue>,
    pub overall: Status,
}

impl VerificationReport {
    pub fn verdicts(&self) -> Vec<&Verdict> {
        vec![&self.psd.blocks, &self.psd.shifted, &self.expansion.verdict, &self.condition_c.verdict, &self.condition_d.verdict]
    }
}

/// Runs every check and aggregates: overall `PASS` iff each condition passes.
pub fn verify_full(cert: &SdpCertificate, opts: &VerifyOptions) -> Result<VerificationReport, VerifyError> {
    let psd = verify_psd(cert);
    let expansion = verify_expansion(cert)?;
    let condition_d = verify_condition_d(cert, opts.expected_diagonal.as_ref())?;
    let condition_c = verify_condition_c(cert, &opts.condition_c)?;
    let radicand = bound_radicand(&cert.b, &cert.f0, &expansion.value_at_one);
    let bound = bound_from_values(&cert.b, &cert.f0, &expansion.value_at_one).ok();
    let bound_at_max_f0 = psd
        .max_admissible_f0
        .as_ref()
        .filter(|m| **m < cert.f0 && m.is_positive())
        .and_then(|m| bound_from_values(&cert.b, m, &expansion.value_at_one).ok());
    let mut overall = psd.status().and(expansion.verdict.status).and(condition_c.verdict.status).and(condition_d.verdict.status);
    if bound.is_none() {
        overall = Status::Fail;
    }
    Ok(VerificationReport {
        n: cert.n,
        t: cert.t.clone(),
        psd,
        expansion,
        condition_c,
        condition_d,
        radicand,
        bound,
        bound_at_max_f0,
        overall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::matrix::qmatrix;

    #[test]
    fn builtin_entries() {
        let c = builtin_certificate();
        assert_eq!(c.blocks.blocks[0][(0, 0)], q(2882, 3));
        assert_eq!(c.blocks.blocks[1][(1, 2)], qi(-4536));
        assert_eq!(c.blocks.blocks[2][(0, 0)], qi(2000));
        assert_eq!((c.b.clone(), c.f0.clone()), (qi(250), q(800, 3)));
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let c = builtin_certificate();
        let s = c.to_json();
        let back = SdpCertificate::from_json(&s).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), s);
        assert!(s.contains("\"2882/3\"") && s.contains("\"B\": \"250\""));
    }

    #[test]
    fn json_rejects_bad_input() {
        let s = builtin_certificate().to_json().replace("\"-4536\"", "\"oops\"");
        assert!(matches!(SdpCertificate::from_json(&s), Err(CertificateError::Rational(_))));
        let s = builtin_certificate().to_json().replacen("\"-4536\"", "\"-4535\"", 1);
        assert!(matches!(SdpCertificate::from_json(&s), Err(CertificateError::NotSymmetric { block: 1, .. })));
        let s = builtin_certificate().to_json().replace("\"f0\": \"800/3\"", "\"f0\": \"0\"");
        assert!(matches!(SdpCertificate::from_json(&s), Err(CertificateError::NonPositiveF0(_))));
    }

    #[test]
    fn expansion_and_value_at_one() {
        let r = verify_expansion(&builtin_certificate()).unwrap();
        assert!(r.verdict.passed());
        assert_eq!(r.polynomial.coeff([0, 2, 3]), qi(11664));
        assert_eq!(r.polynomial.coeff([0, 0, 0]), q(-118, 3));
        assert_eq!(r.value_at_one, q(59750, 3));
    }

    #[test]
    fn bound_is_exactly_ten() {
        let c = builtin_certificate();
        assert_eq!(bound_radicand(&c.b, &c.f0, &q(59750, 3)), q(13750 * 13750, 9));
        assert_eq!(compute_bound(&c).unwrap(), BoundValue::Exact { value: qi(10) });
        assert_eq!(bound_from_values(&qi(0), &qi(1), &qi(1)).unwrap(), BoundValue::Exact { value: qi(1) });
    }

    #[test]
    fn irrational_bound_enclosure() {
        let b = bound_from_values(&qi(0), &qi(1), &qi(2)).unwrap();
        let (lo, hi) = (b.lower().clone(), b.upper().clone());
        assert!(&hi - &lo <= Rational::new(BigInt::one(), BigInt::from(10u32).pow(30)));
        // bound = sqrt(8)/2 = sqrt(2)
        assert!(&lo * &lo <= qi(2) && &hi * &hi >= qi(2));
    }

    #[test]
    fn psd_conditions_of_reference_certificate() {
        let r = verify_psd(&builtin_certificate());
        assert!(r.blocks.passed());
        assert!(!r.shifted.passed());
        assert_eq!(r.max_admissible_f0, Some(q(51551, 387)));
        match &r.shifted.witness {
            Some(Witness::Vector { value, .. }) => assert!(value.is_negative()),
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn condition_d_reference() {
        let r = verify_condition_d(&builtin_certificate(), VerifyOptions::reference().expected_diagonal.as_ref()).unwrap();
        assert!(r.verdict.passed(), "{:?}", r.verdict);
        assert_eq!(r.matches_expected, Some(true));
        let g = QPoly::new(r.diagonal.clone());
        assert!(g.eval(&q(-2, 3)).is_zero() && g.eval(&q(1, 6)).is_zero());
        assert_eq!(g.eval(&qi(-1)), q(-1960, 3));
        let f = r.factorization.unwrap();
        assert_eq!(f.constant, qi(3888));
        assert_eq!(f.factors[0], (QPoly::linear_root(q(-2, 3)), 2));
    }

    #[test]
    fn condition_d_lowered_bound_fails_with_witness() {
        let mut c = builtin_certificate();
        c.b = qi(249);
        let r = verify_condition_d(&c, None).unwrap();
        assert_eq!(r.verdict.status, Status::Fail);
        assert!(!r.factor_path_nonpositive && !r.sturm_path_nonpositive);
        match r.verdict.witness {
            Some(Witness::Point { value, .. }) => assert!(value.is_positive()),
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn factor_sign_route_on_small_cases() {
        let p = QPoly::new(vec![qi(0), qi(1)]);
        let f = factor_rational_roots(&p);
        assert_eq!(factor_sign_check(&f, &qi(-1), &q(1, 6)).0, SignVerdict::PositiveWitness(q(1, 6)));
        // -(x^2 - 2) is positive near 0, with irrational roots
        let p = QPoly::new(vec![qi(2), qi(0), qi(-1)]);
        let f = factor_rational_roots(&p);
        assert_eq!(f.factors.len(), 1);
        assert!(!factor_sign_check(&f, &qi(-3), &qi(3)).0.is_nonpositive());
        assert!(factor_sign_check(&f, &qi(2), &qi(3)).0.is_nonpositive());
    }

    #[test]
    fn single_entry_block() {
        let c = SdpCertificate::new(4, q(1, 6), QTuple::new(vec![qmatrix(&[&["1"]])]), qi(0), qi(1)).unwrap();
        assert_eq!(compute_bound(&c).unwrap(), BoundValue::Exact { value: qi(1) });
    }
}

//! The sign condition `F <= 0` on the region of admissible inner-product
//! triples: certified branch and bound with local certificates at the zeros,
//! and a dense-grid preflight.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::sync::{Mutex, PoisonError};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{diagonal_polynomial, factor_rational_roots, SdpCertificate};
use crate::exact::interval::{box_contains, Box3, Interval};
use crate::exact::linalg::ldlt_psd;
use crate::exact::multipoly::{gram_determinant, PERMUTATIONS};
use crate::scalar::{fmt_rational, q, qi, rational_to_f64, serde_q};
use crate::threepoint::{QSymPoly, ThreePointError};
use crate::verdict::{Status, Verdict, Witness};
use crate::{QInterval, QMatrix, QTriPoly, Rational};

/// Triples `(x, y, z)` with `-1 <= x, y, z <= t` and `1 + 2xyz - x^2 - y^2 - z^2 >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub t: Rational,
}

impl Domain {
    pub fn new(t: Rational) -> Self {
        assert!(t >= qi(-1) && t < qi(1), "t must lie in [-1, 1)");
        Domain { t }
    }

    pub fn contains(&self, p: &[Rational; 3]) -> bool {
        p.iter().all(|v| *v >= qi(-1) && *v <= self.t) && !gram_determinant::<Rational>().eval(p).is_negative()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    Certified,
    Sampled,
}

impl FromStr for CheckMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "certified" => Ok(CheckMode::Certified),
            "sampled" => Ok(CheckMode::Sampled),
            other => Err(format!("unknown mode {other:?} (expected certified or sampled)")),
        }
    }
}

/// Worker count from `SPHBOUND_WORKERS`, default 1.
pub fn default_workers() -> usize {
    std::env::var("SPHBOUND_WORKERS").ok().and_then(|v| v.parse().ok()).filter(|&w| w > 0).unwrap_or(1)
}

#[derive(Clone, Debug)]
pub struct ConditionCOptions {
    pub mode: CheckMode,
    /// Boxes narrower than `(1 + t) / 2^depth_cap` in every coordinate are not split.
    pub depth_cap: u32,
    pub sample_step: Rational,
    pub sample_tolerance: f64,
    /// Zeros to certify locally in addition to those found automatically.
    pub extra_zeros: Vec<[Rational; 3]>,
    pub workers: usize,
    pub max_boxes: usize,
}

impl Default for ConditionCOptions {
    fn default() -> Self {
        ConditionCOptions {
            mode: CheckMode::Certified,
            depth_cap: 20,
            sample_step: q(1, 200),
            sample_tolerance: 1e-12,
            extra_zeros: Vec::new(),
            workers: default_workers(),
            max_boxes: 20_000_000,
        }
    }
}

/// `F <= 0` on `zero + box` with equality only at `zero`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalCertificate {
    #[serde(with = "serde_q::vec")]
    pub point: Vec<Rational>,
    #[serde(with = "serde_q")]
    pub radius: Rational,
    #[serde(skip)]
    pub region: Box3<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSummary {
    pub points: usize,
    pub max_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionCReport {
    pub verdict: Verdict,
    pub mode: CheckMode,
    /// Zeros of `F` on the region, as full permutation orbits.
    #[serde(with = "serde_q::vec_vec")]
    pub zero_set: Vec<Vec<Rational>>,
    pub local_certificates: Vec<LocalCertificate>,
    pub boxes: usize,
    pub sample: Option<SampleSummary>,
}

fn orbit(p: &[Rational; 3]) -> Vec<[Rational; 3]> {
    let set: BTreeSet<[Rational; 3]> =
        PERMUTATIONS.iter().map(|perm| [p[perm[0]].clone(), p[perm[1]].clone(), p[perm[2]].clone()]).collect();
    set.into_iter().collect()
}

/// Triples built from the rational roots of `F(x, x, 1) - B` in `[-1, t]` at
/// which `F` vanishes inside the region, closed under permutation.
pub fn candidate_zeros(poly: &QSymPoly, b: &Rational, domain: &Domain) -> Vec<[Rational; 3]> {
    let g = diagonal_polynomial(poly, b);
    if g.is_zero() {
        return Vec::new();
    }
    let fact = factor_rational_roots(&g);
    let roots: Vec<Rational> = fact
        .factors
        .iter()
        .filter(|(p, _)| p.degree() == Some(1))
        .map(|(p, _)| -p.coeff(0))
        .filter(|r| *r >= qi(-1) && *r <= domain.t)
        .collect();
    let f = poly.to_tripoly();
    let mut out = BTreeSet::new();
    for a in &roots {
        for b in &roots {
            for c in &roots {
                let p = [a.clone(), b.clone(), c.clone()];
                if domain.contains(&p) && f.eval(&p).is_zero() {
                    out.insert(p);
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Tries to certify that `zero` is a strict local maximum of `f` on the cube
/// `[-1, t]^3` within `radius`. Coordinates at the cube boundary must have a
/// first-order decrease into the cube; the remaining ones a negative definite
/// second-order part, both certified by interval enclosures on the whole box.
pub fn local_certificate(f: &QTriPoly, zero: &[Rational; 3], t: &Rational, radius: &Rational) -> Option<LocalCertificate> {
    if !f.eval(zero).is_zero() {
        return None;
    }
    let h = f.shift(zero);
    // face sign: -1 at the upper face (u <= 0), +1 at the lower face (u >= 0)
    let face: Vec<Option<i32>> = zero
        .iter()
        .map(|v| {
            if v == t {
                Some(-1)
            } else if *v == qi(-1) {
                Some(1)
            } else {
                None
            }
        })
        .collect();
    let ubox: Box3<Rational> = std::array::from_fn(|i| match face[i] {
        Some(-1) => Interval::new(-radius.clone(), qi(0)),
        Some(_) => Interval::new(qi(0), radius.clone()),
        None => {
            let lo = std::cmp::max(-radius.clone(), qi(-1) - &zero[i]);
            let hi = std::cmp::min(radius.clone(), t - &zero[i]);
            Interval::new(lo, hi)
        }
    });
    let interior: Vec<usize> = (0..3).filter(|&i| face[i].is_none()).collect();
    let mut linear_parts: [QTriPoly; 3] = std::array::from_fn(|_| QTriPoly::zero());
    let k = interior.len();
    let mut quad: Vec<Vec<QTriPoly>> = vec![vec![QTriPoly::zero(); k]; k];
    for (e, c) in h.terms() {
        if *e == [0, 0, 0] {
            continue;
        }
        if let Some(i) = (0..3).find(|&i| face[i].is_some() && e[i] > 0) {
            let mut r = *e;
            r[i] -= 1;
            linear_parts[i].add_term(r, c.clone());
            continue;
        }
        let vars: Vec<usize> = interior.iter().flat_map(|&i| std::iter::repeat_n(i, e[i] as usize)).collect();
        if vars.len() < 2 {
            return None;
        }
        let (a, b) = (vars[0], vars[1]);
        let mut r = *e;
        r[a] -= 1;
        r[b] -= 1;
        let (ia, ib) = (interior.iter().position(|&v| v == a).unwrap(), interior.iter().position(|&v| v == b).unwrap());
        if ia == ib {
            quad[ia][ia].add_term(r, c.clone());
        } else {
            let half = c / qi(2);
            quad[ia][ib].add_term(r, half.clone());
            quad[ib][ia].add_term(r, half);
        }
    }
    for i in 0..3 {
        if let Some(s) = face[i] {
            let enc = linear_parts[i].interval_eval(&ubox);
            let ok = if s < 0 { enc.lo().is_positive() } else { enc.hi().is_negative() };
            if !ok {
                return None;
            }
        }
    }
    if k > 0 {
        let encs: Vec<Vec<QInterval>> = quad.iter().map(|row| row.iter().map(|p| p.interval_eval(&ubox)).collect()).collect();
        let spread = (0..k).map(|i| (0..k).fold(qi(0), |acc, j| acc + (encs[i][j].hi() - encs[i][j].lo()) / qi(2))).max().unwrap();
        let neg = QMatrix::from_fn(k, k, |i, j| {
            let mid = -encs[i][j].mid();
            if i == j {
                mid - &spread
            } else {
                mid
            }
        });
        if !ldlt_psd(&neg).ok()?.is_positive_definite() {
            return None;
        }
    }
    let region: Box3<Rational> = std::array::from_fn(|i| Interval::new(&zero[i] + ubox[i].lo(), &zero[i] + ubox[i].hi()));
    Some(LocalCertificate { point: zero.to_vec(), radius: radius.clone(), region })
}

fn best_local_certificate(f: &QTriPoly, zero: &[Rational; 3], t: &Rational) -> Option<LocalCertificate> {
    let width = qi(1) + t;
    (2..=16).find_map(|k| local_certificate(f, zero, t, &(&width / qi(1i64 << k))))
}

/// `[lo, hi]` enclosure from the Taylor expansion about the box centre.
fn centered_enclosure(f: &QTriPoly, bx: &Box3<Rational>) -> (Rational, Rational) {
    let center: [Rational; 3] = std::array::from_fn(|i| bx[i].mid());
    let radius: [Rational; 3] = std::array::from_fn(|i| bx[i].width() / qi(2));
    let s = f.shift(&center);
    let c0 = s.coeff(&[0, 0, 0]);
    let (mut lo, mut hi) = (c0.clone(), c0);
    let deg = s.terms().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0) as usize;
    let pw: Vec<Vec<Rational>> = radius
        .iter()
        .map(|r| {
            let mut v = vec![qi(1)];
            for i in 0..deg {
                let next = &v[i] * r;
                v.push(next);
            }
            v
        })
        .collect();
    for (e, a) in s.terms() {
        if *e == [0, 0, 0] {
            continue;
        }
        let m = &pw[0][e[0] as usize] * &pw[1][e[1] as usize] * &pw[2][e[2] as usize];
        let t = a * &m;
        if e.iter().all(|x| x % 2 == 0) {
            if t.is_positive() {
                hi += t;
            } else {
                lo += t;
            }
        } else {
            let t = t.abs();
            hi += &t;
            lo -= t;
        }
    }
    (lo, hi)
}

enum Step {
    Discard,
    Violation([Rational; 3], Rational),
    Unresolved(Box3<Rational>),
    Split(Box3<Rational>, Box3<Rational>),
}

struct Engine<'a> {
    f: &'a QTriPoly,
    det: QTriPoly,
    locals: &'a [LocalCertificate],
    min_width: Rational,
}

impl Engine<'_> {
    fn step(&self, bx: &Box3<Rational>) -> Step {
        // only boxes meeting x <= y <= z matter, by symmetry
        if bx[0].lo() > bx[1].hi() || bx[1].lo() > bx[2].hi() {
            return Step::Discard;
        }
        if self.det.interval_eval(bx).hi().is_negative() {
            return Step::Discard;
        }
        if self.locals.iter().any(|l| box_contains(&l.region, bx)) {
            return Step::Discard;
        }
        if !self.f.interval_eval(bx).hi().is_positive() {
            return Step::Discard;
        }
        let (_, hi) = centered_enclosure(self.f, bx);
        if !hi.is_positive() {
            return Step::Discard;
        }
        let mid: [Rational; 3] = std::array::from_fn(|i| bx[i].mid());
        if !self.det.eval(&mid).is_negative() {
            let v = self.f.eval(&mid);
            if v.is_positive() {
                return Step::Violation(mid, v);
            }
        }
        let widest = (0..3).max_by(|&a, &b| bx[a].width().cmp(&bx[b].width())).unwrap();
        if bx[widest].width() < self.min_width {
            return Step::Unresolved(bx.clone());
        }
        let (l, r) = bx[widest].bisect();
        let mut a = bx.clone();
        let mut b = bx.clone();
        a[widest] = l;
        b[widest] = r;
        Step::Split(a, b)
    }
}

struct Shared {
    stack: Vec<Box3<Rational>>,
    active: usize,
    boxes: usize,
    violation: Option<([Rational; 3], Rational)>,
    unresolved: Vec<Box3<Rational>>,
    exhausted: bool,
}

const UNRESOLVED_LIMIT: usize = 16;

fn branch_and_bound(engine: &Engine, root: Box3<Rational>, workers: usize, max_boxes: usize) -> Shared {
    let shared = Mutex::new(Shared { stack: vec![root], active: 0, boxes: 0, violation: None, unresolved: Vec::new(), exhausted: false });
    let work = || loop {
        let job = {
            let mut s = shared.lock().unwrap_or_else(PoisonError::into_inner);
            let done = s.violation.is_some() || s.unresolved.len() >= UNRESOLVED_LIMIT || s.exhausted;
            if done {
                return;
            }
            match s.stack.pop() {
                Some(b) => {
                    s.active += 1;
                    s.boxes += 1;
                    if s.boxes > max_boxes {
                        s.exhausted = true;
                    }
                    Some(b)
                }
                None if s.active == 0 => return,
                None => None,
            }
        };
        let Some(bx) = job else {
            std::thread::yield_now();
            continue;
        };
        let step = engine.step(&bx);
        let mut s = shared.lock().unwrap_or_else(PoisonError::into_inner);
        s.active -= 1;
        match step {
            Step::Discard => {}
            Step::Violation(p, v) => {
                s.violation.get_or_insert((p, v));
            }
            Step::Unresolved(b) => s.unresolved.push(b),
            Step::Split(a, b) => {
                s.stack.push(a);
                s.stack.push(b);
            }
        }
    };
    if workers <= 1 {
        work();
    } else {
        std::thread::scope(|sc| {
            for _ in 0..workers {
                sc.spawn(work);
            }
        });
    }
    shared.into_inner().unwrap_or_else(PoisonError::into_inner)
}

struct SampleOutcome {
    summary: SampleSummary,
    violation: Option<([Rational; 3], Rational)>,
}

/// Dense grid `-1 + i * step` (plus `t`) restricted to `x <= y <= z` and the
/// region; values near zero or above are re-evaluated exactly.
fn sample(f: &QTriPoly, domain: &Domain, step: &Rational, tolerance: f64) -> SampleOutcome {
    let mut grid = Vec::new();
    let mut v = qi(-1);
    while v <= domain.t {
        grid.push(v.clone());
        v += step;
    }
    if grid.last() != Some(&domain.t) {
        grid.push(domain.t.clone());
    }
    let gf: Vec<f64> = grid.iter().map(rational_to_f64).collect();
    let deg = f.terms().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0) as usize;
    let pw: Vec<Vec<f64>> = gf.iter().map(|x| (0..=deg).map(|k| x.powi(k as i32)).collect()).collect();
    let terms: Vec<([usize; 3], f64)> =
        f.terms().map(|(e, c)| ([e[0] as usize, e[1] as usize, e[2] as usize], rational_to_f64(c))).collect();
    let det = gram_determinant::<Rational>();
    let tol_q = crate::scalar::f64_to_rational(tolerance);
    let mut points = 0;
    let mut max_value = f64::NEG_INFINITY;
    let n = grid.len();
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let (x, y, z) = (gf[i], gf[j], gf[k]);
                let d = 1.0 + 2.0 * x * y * z - x * x - y * y - z * z;
                if d < -1e-9 {
                    continue;
                }
                let exact_point = || [grid[i].clone(), grid[j].clone(), grid[k].clone()];
                if d < 1e-9 && det.eval(&exact_point()).is_negative() {
                    continue;
                }
                points += 1;
                let val: f64 = terms.iter().map(|(e, c)| c * pw[i][e[0]] * pw[j][e[1]] * pw[k][e[2]]).sum();
                if val > -1e-9 {
                    let p = exact_point();
                    let exact = f.eval(&p);
                    let ev = rational_to_f64(&exact);
                    max_value = max_value.max(ev);
                    if exact > tol_q {
                        return SampleOutcome { summary: SampleSummary { points, max_value }, violation: Some((p, exact)) };
                    }
                } else {
                    max_value = max_value.max(val);
                }
            }
        }
    }
    SampleOutcome { summary: SampleSummary { points, max_value }, violation: None }
}

fn point_witness(p: [Rational; 3], v: Rational) -> Witness {
    Witness::Point { point: p.to_vec(), value: v }
}

/// Certifies `F <= 0` on the region (certified mode) or checks it on a grid
/// (sampled mode). A certified run that cannot resolve some box falls back to
/// the grid and reports `SAMPLED-ONLY` with that box.
pub fn verify_condition_c(cert: &SdpCertificate, opts: &ConditionCOptions) -> Result<ConditionCReport, ThreePointError> {
    let poly = cert.polynomial()?;
    let f = poly.to_tripoly();
    let domain = Domain::new(cert.t.clone());
    let mut zeros = candidate_zeros(&poly, &cert.b, &domain);
    for z in &opts.extra_zeros {
        if domain.contains(z) && f.eval(z).is_zero() {
            zeros.extend(orbit(z));
        }
    }
    zeros.sort();
    zeros.dedup();
    let zero_set: Vec<Vec<Rational>> = zeros.iter().map(|z| z.to_vec()).collect();
    let report = |verdict, locals, boxes, sample| ConditionCReport {
        verdict,
        mode: opts.mode,
        zero_set: zero_set.clone(),
        local_certificates: locals,
        boxes,
        sample,
    };
    if opts.mode == CheckMode::Sampled {
        let s = sample(&f, &domain, &opts.sample_step, opts.sample_tolerance);
        let verdict = match s.violation {
            Some((p, v)) => Verdict::fail("condition_c", "F > 0 at a grid point of the region", Some(point_witness(p, v))),
            None => Verdict::pass(
                "condition_c",
                format!(
                    "sampled: F <= {:e} at {} grid points (step {}); max {:e}",
                    opts.sample_tolerance,
                    s.summary.points,
                    fmt_rational(&opts.sample_step),
                    s.summary.max_value
                ),
            ),
        };
        return Ok(report(verdict, Vec::new(), 0, Some(s.summary)));
    }
    let mut locals = Vec::new();
    for z in &zeros {
        if let Some(l) = best_local_certificate(&f, z, &domain.t) {
            locals.push(l);
        }
    }
    let root: Box3<Rational> = std::array::from_fn(|_| Interval::new(qi(-1), domain.t.clone()));
    let engine =
        Engine { f: &f, det: gram_determinant(), locals: &locals, min_width: (qi(1) + &domain.t) / qi(1i64 << opts.depth_cap.min(62)) };
    let out = branch_and_bound(&engine, root, opts.workers.max(1), opts.max_boxes);
    if let Some((p, v)) = out.violation {
        let verdict = Verdict::fail("condition_c", "F > 0 at a point of the region", Some(point_witness(p, v)));
        return Ok(report(verdict, locals, out.boxes, None));
    }
    if out.unresolved.is_empty() && !out.exhausted {
        let verdict = Verdict::pass(
            "condition_c",
            format!("certified: F <= 0 on the region ({} boxes, {} zeros with local certificates)", out.boxes, locals.len()),
        );
        return Ok(report(verdict, locals, out.boxes, None));
    }
    let s = sample(&f, &domain, &opts.sample_step, opts.sample_tolerance);
    let verdict = match s.violation {
        Some((p, v)) => Verdict::fail("condition_c", "F > 0 at a grid point of the region", Some(point_witness(p, v))),
        None => {
            let (detail, witness) = match out.unresolved.first() {
                Some(b) => (
                    "branch and bound left a box unresolved at the depth cap; grid check passed".to_string(),
                    Some(Witness::Region {
                        lo: b.iter().map(|iv| iv.lo().clone()).collect(),
                        hi: b.iter().map(|iv| iv.hi().clone()).collect(),
                    }),
                ),
                None => (format!("box budget of {} exhausted; grid check passed", opts.max_boxes), None),
            };
            Verdict { check: "condition_c".into(), status: Status::SampledOnly, detail, witness }
        }
    };
    Ok(report(verdict, locals, out.boxes, Some(s.summary)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdpcert::builtin_certificate;

    #[test]
    fn domain_membership() {
        let d = Domain::new(q(1, 6));
        assert!(d.contains(&[q(1, 6), q(1, 6), q(1, 6)]));
        assert!(d.contains(&[q(-2, 3), q(-2, 3), q(1, 6)]));
        assert!(!d.contains(&[qi(-1), qi(-1), qi(-1)]));
        assert!(!d.contains(&[q(1, 5), qi(0), qi(0)]));
    }

    #[test]
    fn zero_candidates_of_reference() {
        let c = builtin_certificate();
        let p = c.polynomial().unwrap();
        let z = candidate_zeros(&p, &c.b, &Domain::new(c.t.clone()));
        assert_eq!(z.len(), 7);
        let f = p.to_tripoly();
        assert!(f.eval(&[qi(0), qi(0), qi(0)]) == q(-118, 3));
        for pt in &z {
            assert!(f.eval(pt).is_zero());
        }
    }

    #[test]
    fn local_certificates_at_reference_zeros() {
        let c = builtin_certificate();
        let f = c.polynomial().unwrap().to_tripoly();
        for z in [[q(-2, 3), q(-2, 3), q(1, 6)], [q(-2, 3), q(1, 6), q(1, 6)], [q(1, 6), q(1, 6), q(1, 6)]] {
            assert!(best_local_certificate(&f, &z, &c.t).is_some(), "{z:?}");
        }
        // not a zero
        assert!(local_certificate(&f, &[qi(0), qi(0), qi(0)], &c.t, &q(1, 10)).is_none());
    }

    #[test]
    fn centered_form_encloses() {
        let f = builtin_certificate().polynomial().unwrap().to_tripoly();
        let bx: Box3<Rational> = [Interval::new(q(-1, 2), q(-1, 4)), Interval::new(qi(0), q(1, 8)), Interval::new(q(-1, 8), q(1, 8))];
        let (lo, hi) = centered_enclosure(&f, &bx);
        for p in [[q(-1, 2), qi(0), q(-1, 8)], [q(-1, 4), q(1, 8), q(1, 8)], [q(-3, 8), q(1, 16), qi(0)]] {
            let v = f.eval(&p);
            assert!(lo <= v && v <= hi);
        }
    }

    #[test]
    fn sampled_mode_on_reference() {
        let c = builtin_certificate();
        let opts = ConditionCOptions { mode: CheckMode::Sampled, sample_step: q(1, 40), ..Default::default() };
        let r = verify_condition_c(&c, &opts).unwrap();
        assert!(r.verdict.passed(), "{:?}", r.verdict);
        assert_eq!(r.zero_set.len(), 7);
    }
}

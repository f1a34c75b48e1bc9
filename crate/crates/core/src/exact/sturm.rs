//! Sturm sequences, real-root isolation and certified sign checks on intervals.

use num_traits::{Signed, Zero};

use super::interval::Interval;
use crate::{QInterval, QPoly, Rational};

/// Outcome of [`sturm_max_on`].
#[derive(Clone, Debug, PartialEq)]
pub enum SignVerdict {
    NonPositive,
    PositiveWitness(Rational),
}

impl SignVerdict {
    pub fn is_nonpositive(&self) -> bool {
        matches!(self, SignVerdict::NonPositive)
    }
}

/// Sturm chain `p, p', -rem(p, p'), ...` of a nonzero polynomial.
pub fn sturm_sequence(p: &QPoly) -> Vec<QPoly> {
    let mut seq = vec![p.clone()];
    if p.degree().unwrap_or(0) == 0 {
        return seq;
    }
    seq.push(p.derivative());
    loop {
        let n = seq.len();
        let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
        if r.is_zero() {
            break;
        }
        seq.push(-&r);
    }
    seq
}

fn sign_changes(seq: &[QPoly], x: &Rational) -> usize {
    let mut last = 0i8;
    let mut changes = 0;
    for p in seq {
        let v = p.eval(x);
        let s = if v.is_positive() {
            1
        } else if v.is_negative() {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                changes += 1;
            }
            last = s;
        }
    }
    changes
}

/// Number of distinct real roots in the half-open interval `(a, b]`.
pub fn count_roots(seq: &[QPoly], a: &Rational, b: &Rational) -> usize {
    sign_changes(seq, a) - sign_changes(seq, b)
}

/// A root isolated in `(lo, hi]`, or known exactly when `lo == hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsolatedRoot {
    pub lo: Rational,
    pub hi: Rational,
}

impl IsolatedRoot {
    pub fn exact(&self) -> Option<&Rational> {
        (self.lo == self.hi).then_some(&self.hi)
    }
}

/// Isolates the distinct real roots of `p` in the closed interval `[lo, hi]`,
/// sorted increasingly.
pub fn isolate_roots(p: &QPoly, lo: &Rational, hi: &Rational) -> Vec<IsolatedRoot> {
    assert!(lo <= hi);
    if p.is_zero() || p.degree() == Some(0) {
        return Vec::new();
    }
    let sf = p.square_free();
    let seq = sturm_sequence(&sf);
    let mut out = Vec::new();
    if sf.eval(lo).is_zero() {
        out.push(IsolatedRoot { lo: lo.clone(), hi: lo.clone() });
    }
    isolate_rec(&sf, &seq, lo.clone(), hi.clone(), &mut out);
    out
}

fn isolate_rec(sf: &QPoly, seq: &[QPoly], a: Rational, b: Rational, out: &mut Vec<IsolatedRoot>) {
    let n = count_roots(seq, &a, &b);
    if n == 0 {
        return;
    }
    if sf.eval(&b).is_zero() && n == 1 {
        out.push(IsolatedRoot { lo: b.clone(), hi: b });
        return;
    }
    if n == 1 {
        out.push(IsolatedRoot { lo: a, hi: b });
        return;
    }
    let m = (&a + &b) / Rational::from_integer(2.into());
    isolate_rec(sf, seq, a, m.clone(), out);
    isolate_rec(sf, seq, m, b, out);
}

/// Shrinks an isolating interval of a square-free polynomial until its width is at most `width`.
pub fn refine_root(sf: &QPoly, root: &IsolatedRoot, width: &Rational) -> IsolatedRoot {
    let seq = sturm_sequence(sf);
    let mut r = root.clone();
    while r.lo != r.hi && &(&r.hi - &r.lo) > width {
        r = bisect_root(sf, &seq, &r);
    }
    r
}

fn bisect_root(sf: &QPoly, seq: &[QPoly], r: &IsolatedRoot) -> IsolatedRoot {
    let m = (&r.lo + &r.hi) / Rational::from_integer(2.into());
    if sf.eval(&m).is_zero() {
        return IsolatedRoot { lo: m.clone(), hi: m };
    }
    if count_roots(seq, &r.lo, &m) == 1 {
        IsolatedRoot { lo: r.lo.clone(), hi: m }
    } else {
        IsolatedRoot { lo: m, hi: r.hi.clone() }
    }
}

/// Certifies `p <= 0` on `[lo, hi]` (roots allowed) or returns a rational point where `p > 0`.
///
/// Endpoints are checked directly; interior maxima sit at roots of `p'`, which
/// are isolated and either recognised as common roots with `p` (value zero) or
/// refined until an interval evaluation of `p` decides the sign.
pub fn sturm_max_on(p: &QPoly, lo: &Rational, hi: &Rational) -> SignVerdict {
    assert!(lo <= hi, "empty interval");
    if p.is_zero() {
        return SignVerdict::NonPositive;
    }
    for x in [lo, hi] {
        if p.eval(x).is_positive() {
            return SignVerdict::PositiveWitness(x.clone());
        }
    }
    let dp = p.derivative();
    if dp.is_zero() {
        return SignVerdict::NonPositive;
    }
    let common = p.gcd(&dp);
    let common_seq = sturm_sequence(&common);
    let dsf = dp.square_free();
    let dseq = sturm_sequence(&dsf);
    for root in isolate_roots(&dp, lo, hi) {
        if let Some(c) = root.exact() {
            if p.eval(c).is_positive() {
                return SignVerdict::PositiveWitness(c.clone());
            }
            continue;
        }
        if common.degree().unwrap_or(0) > 0 && count_roots(&common_seq, &root.lo, &root.hi) > 0 {
            // the unique critical point here is a multiple root of p
            continue;
        }
        let mut r = root;
        loop {
            let enc = p.eval_interval(&QInterval::new(r.lo.clone(), r.hi.clone()));
            if !enc.hi().is_positive() {
                break;
            }
            if enc.lo().is_positive() {
                return SignVerdict::PositiveWitness(r.hi.clone());
            }
            r = bisect_root(&dsf, &dseq, &r);
            if let Some(c) = r.exact() {
                if p.eval(c).is_positive() {
                    return SignVerdict::PositiveWitness(c.clone());
                }
                break;
            }
        }
    }
    SignVerdict::NonPositive
}

/// Rational upper bound `U >= max_{[lo,hi]} p` with `U - max <= tol`.
pub fn max_upper_bound(p: &QPoly, lo: &Rational, hi: &Rational, tol: &Rational) -> Rational {
    let mut best = std::cmp::max(p.eval(lo), p.eval(hi));
    let dp = p.derivative();
    if dp.is_zero() {
        return best;
    }
    let dsf = dp.square_free();
    let dseq = sturm_sequence(&dsf);
    for root in isolate_roots(&dp, lo, hi) {
        let mut r = root;
        let v = loop {
            if let Some(c) = r.exact() {
                break p.eval(c);
            }
            let enc = p.eval_interval(&Interval::new(r.lo.clone(), r.hi.clone()));
            if &enc.width() <= tol || enc.hi() <= &best {
                break enc.hi().clone();
            }
            r = bisect_root(&dsf, &dseq, &r);
        };
        best = std::cmp::max(best, v);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    fn p(cs: &[Rational]) -> QPoly {
        QPoly::new(cs.to_vec())
    }

    #[test]
    fn negative_square() {
        let f = p(&[qi(0), qi(0), qi(-1)]);
        assert_eq!(sturm_max_on(&f, &qi(-1), &qi(1)), SignVerdict::NonPositive);
    }

    #[test]
    fn identity_has_witness_at_right_end() {
        let f = QPoly::x();
        assert_eq!(sturm_max_on(&f, &qi(-1), &q(1, 6)), SignVerdict::PositiveWitness(q(1, 6)));
    }

    #[test]
    fn interior_bump_found() {
        // -(x - 1/3)^2 + 1/100: positive near 1/3 only
        let f = &(&QPoly::linear_root(q(1, 3)).pow(2) * &QPoly::constant(qi(-1))) + &QPoly::constant(q(1, 100));
        match sturm_max_on(&f, &qi(-1), &qi(1)) {
            SignVerdict::PositiveWitness(x) => assert!(f.eval(&x) > qi(0)),
            v => panic!("{v:?}"),
        }
        assert_eq!(sturm_max_on(&f, &qi(-1), &qi(0)), SignVerdict::NonPositive);
    }

    #[test]
    fn isolation_counts_and_exact_roots() {
        let f = &(&QPoly::linear_root(q(-2, 3)).pow(2) * &QPoly::linear_root(q(1, 6))) * &QPoly::linear_root(qi(3));
        let roots = isolate_roots(&f, &qi(-1), &q(1, 6));
        assert_eq!(roots.len(), 2);
        assert_eq!(roots[1].exact(), Some(&q(1, 6)));
    }

    #[test]
    fn upper_bound_is_close() {
        let f = &QPoly::new(vec![qi(0), qi(3), qi(0), qi(-1)]) + &QPoly::zero(); // 3x - x^3, max 2 at 1
        let u = max_upper_bound(&f, &qi(-2), &q(3, 2), &q(1, 1_000_000));
        assert!(u >= qi(2) && u - qi(2) <= q(1, 1_000_000));
    }
}

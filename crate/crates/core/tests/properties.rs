use proptest::prelude::*;
use sphbound_core::exact::multipoly::PERMUTATIONS;
use sphbound_core::exact::poly::UniPoly;
use sphbound_core::exact::sturm::sturm_max_on;
use sphbound_core::scalar::{q, qi};
use sphbound_core::sdpcert::{
    builtin_certificate, compute_bound, factor_rational_roots, factor_sign_check, tight_certificate, verify_condition_c, verify_psd,
    CheckMode, ConditionCOptions, Domain,
};
use sphbound_core::sdpio::{parse_sdpa, write_sdpa, SdpaEntry, SdpaProblem};
use sphbound_core::threepoint::{expand, kernel_basis, snk_matrix};
use sphbound_core::uniqueness::Graph;
use sphbound_core::verdict::Status;
use sphbound_core::{QPoly, Rational};

fn rational(max_num: i64, max_den: i64) -> impl Strategy<Value = Rational> {
    (-max_num..=max_num, 1..=max_den).prop_map(|(a, b)| q(a, b))
}

fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i64..=500, 1i64..=50).prop_map(|(a, b)| q(a, b))
}

/// Rational points of `[-1, t]^3`; membership in the region is tested separately.
fn cube_point(t: Rational) -> impl Strategy<Value = [Rational; 3]> {
    let coord = (0i64..=600).prop_map(move |i| qi(-1) + (t.clone() + qi(1)) * q(i, 600));
    [coord.clone(), coord.clone(), coord]
}

fn random_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        proptest::collection::vec(any::<bool>(), pairs.len()).prop_map(move |keep| {
            let edges: Vec<(usize, usize)> = pairs.iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| *p).collect();
            Graph::from_edges(n, &edges)
        })
    })
}

fn sdpa_problem() -> impl Strategy<Value = SdpaProblem> {
    (1usize..=4, proptest::collection::vec(prop_oneof![(1i64..=4), (-6i64..=-1)], 1..=3)).prop_flat_map(|(m, sizes)| {
        let entry = {
            let sizes = sizes.clone();
            (0..=m, 0..sizes.len(), any::<u16>(), any::<u16>(), -1e6f64..1e6).prop_map(move |(matrix, b, r, c, value)| {
                let s = sizes[b].unsigned_abs() as usize;
                let (mut row, mut col) = (r as usize % s + 1, c as usize % s + 1);
                if row > col {
                    std::mem::swap(&mut row, &mut col);
                }
                if sizes[b] < 0 {
                    col = row;
                }
                SdpaEntry { matrix, block: b + 1, row, col, value }
            })
        };
        (proptest::collection::vec(-1e3f64..1e3, m), proptest::collection::vec(entry, 0..20))
            .prop_map(move |(objective, entries)| SdpaProblem { block_sizes: sizes.clone(), objective, entries })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn kernel_shift_keeps_polynomial(beta in proptest::collection::vec(rational(10_000, 60), 4)) {
        let cert = builtin_certificate();
        let kernel = kernel_basis(4, &cert.blocks.sizes()).unwrap();
        let shifted = cert.blocks.shifted(&kernel, &beta);
        prop_assert_eq!(expand(&shifted, 4).unwrap(), cert.polynomial().unwrap());
    }

    #[test]
    fn scaling_keeps_bound_and_positivity(c in positive_rational()) {
        for cert in [builtin_certificate(), tight_certificate()] {
            let scaled = cert.scaled(&c);
            prop_assert_eq!(compute_bound(&scaled).unwrap(), compute_bound(&cert).unwrap());
            let (a, b) = (verify_psd(&cert), verify_psd(&scaled));
            prop_assert_eq!(a.blocks.status, b.blocks.status);
            prop_assert_eq!(a.shifted.status, b.shifted.status);
        }
    }

    #[test]
    fn factor_route_matches_sturm(
        roots in proptest::collection::vec(rational(12, 6), 1..=4),
        mults in proptest::collection::vec(1u32..=3, 4),
        quad in proptest::option::of((rational(4, 3), positive_rational())),
        negate in any::<bool>(),
        (lo, width) in (rational(3, 4), positive_rational()),
    ) {
        let mut p = QPoly::constant(if negate { qi(-1) } else { qi(1) });
        for (r, m) in roots.iter().zip(&mults) {
            p = &p * &UniPoly::linear_root(r.clone()).pow(*m);
        }
        if let Some((s, c)) = quad {
            // (x - s)^2 + c has no real roots
            let shifted = UniPoly::linear_root(s);
            p = &p * &(&(&shifted * &shifted) + &QPoly::constant(c));
        }
        let hi = &lo + &width;
        let fact = factor_rational_roots(&p);
        prop_assert_eq!(fact.product(), p.clone());
        let (by_factors, _) = factor_sign_check(&fact, &lo, &hi);
        prop_assert_eq!(by_factors.is_nonpositive(), sturm_max_on(&p, &lo, &hi).is_nonpositive());
    }

    #[test]
    fn passing_certificate_is_nonpositive_on_the_region(p in cube_point(q(1, 6))) {
        let domain = Domain::new(q(1, 6));
        prop_assume!(domain.contains(&p));
        let f = tight_certificate().polynomial().unwrap();
        prop_assert!(f.eval(&p) <= qi(0));
        let f = builtin_certificate().polynomial().unwrap();
        prop_assert!(f.eval(&p) <= qi(0));
    }

    #[test]
    fn block_entries_invariant_under_permutation(n in 3i64..=6, k in 0usize..=3, p in cube_point(q(1, 2))) {
        let block = snk_matrix(n, k, 3).unwrap();
        let base = block.eval(&p);
        for perm in PERMUTATIONS {
            let moved = [p[perm[0]].clone(), p[perm[1]].clone(), p[perm[2]].clone()];
            prop_assert_eq!(block.eval(&moved), base.clone());
        }
    }

    #[test]
    fn sdpa_round_trip(problem in sdpa_problem()) {
        let text = write_sdpa(&problem);
        prop_assert_eq!(parse_sdpa(&text).unwrap(), problem);
    }

    #[test]
    fn canonical_form_ignores_labels(g in random_graph(9), seed in any::<u64>()) {
        let n = g.vertex_count();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let h = g.permuted(&perm);
        prop_assert_eq!(h.canonical_form(), g.canonical_form());
        prop_assert_eq!(Graph::from_graph6(&g.to_graph6()).unwrap(), g.clone());
        prop_assert_eq!(h.edge_count(), g.edge_count());
    }

    #[test]
    fn automorphism_routes_agree(g in random_graph(7)) {
        prop_assert_eq!(g.automorphism_count(), g.automorphism_count_brute_force());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 3, ..ProptestConfig::default() })]

    #[test]
    fn certified_and_sampled_modes_agree(c in positive_rational(), bump in proptest::option::of((1i64..=20, 1i64..=1000))) {
        let mut cert = tight_certificate().scaled(&c);
        if let Some((a, b)) = bump {
            // raises F by a positive constant, so both modes must find a violation
            cert.blocks.blocks[0][(0, 0)] = &cert.blocks.blocks[0][(0, 0)] + q(a, b);
        }
        let certified = verify_condition_c(&cert, &ConditionCOptions::default()).unwrap();
        let sampled = verify_condition_c(
            &cert,
            &ConditionCOptions { mode: CheckMode::Sampled, sample_step: q(1, 40), ..Default::default() },
        )
        .unwrap();
        let expect = if bump.is_some() { Status::Fail } else { Status::Pass };
        prop_assert_eq!(certified.verdict.status, expect);
        prop_assert_eq!(sampled.verdict.status, expect);
    }
}

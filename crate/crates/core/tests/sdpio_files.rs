use sphbound_core::scalar::{q, qi};
use sphbound_core::sdpcert::{builtin_certificate, tight_certificate, CheckMode, ConditionCOptions, VerifyOptions};
use sphbound_core::sdpio::{
    assemble, parse_sdpa, parse_solution, round_certificate, write_sdpa, GridSpec, NumericCertificate, RoundOptions, RoundingError,
    SdpaEntry, SdpaProblem, SolutionError,
};

const TOY: &str = include_str!("data/toy.dat-s");
const LP_BLOCK: &str = include_str!("data/lp_block.dat-s");

fn entry(matrix: usize, block: usize, row: usize, col: usize, value: f64) -> SdpaEntry {
    SdpaEntry { matrix, block, row, col, value }
}

#[test]
fn toy_golden() {
    let p = SdpaProblem { block_sizes: vec![-1], objective: vec![1.0], entries: vec![entry(0, 1, 1, 1, 2.0), entry(1, 1, 1, 1, 1.0)] };
    assert_eq!(write_sdpa(&p), TOY);
    assert_eq!(parse_sdpa(TOY).unwrap(), p);
}

#[test]
fn diagonal_block_golden() {
    let p = SdpaProblem {
        block_sizes: vec![2, -2],
        objective: vec![1.0, 3.0],
        entries: vec![
            entry(0, 1, 1, 1, 1.0),
            entry(1, 1, 1, 1, 1.0),
            entry(1, 1, 1, 2, 0.5),
            entry(1, 2, 1, 1, -1.0),
            entry(2, 1, 2, 2, 1.0),
            entry(2, 2, 2, 2, 1.0),
        ],
    };
    assert_eq!(write_sdpa(&p), LP_BLOCK);
    assert_eq!(parse_sdpa(LP_BLOCK).unwrap(), p);
    p.validate().unwrap();
}

#[test]
fn degree_two_instance_round_trips() {
    let inst = assemble(4, &q(1, 6), 2, &[4, 3, 1], &GridSpec::default(), &qi(10)).unwrap();
    let text = write_sdpa(&inst.problem);
    assert_eq!(parse_sdpa(&text).unwrap(), inst.problem);
    assert_eq!(inst.problem.block_sizes.last(), Some(&-(inst.constraint_count() as i64)));
}

#[test]
fn malformed_solutions() {
    let p = parse_sdpa(LP_BLOCK).unwrap();
    let ok = "xVec = {1, 2}\nxMat = {\n{ {1, 0}, {0, 1} }\n{3, 4}\n}\n";
    assert_eq!(parse_solution(ok, &p).unwrap().x_mat[1], vec![vec![3.0, 4.0]]);
    let missing = "xVec = {1, 2}\nxMat = {\n{ {1, 0}, {0, 1} }\n}\n";
    assert_eq!(parse_solution(missing, &p), Err(SolutionError::MissingBlock { expected: 2, found: 1 }));
    let wrong = "xVec = {1, 2}\nxMat = {\n{ {1, 0, 0}, {0, 1, 0} }\n{3, 4}\n}\n";
    assert!(matches!(parse_solution(wrong, &p), Err(SolutionError::WrongSize { block: 1, expected: 2, .. })));
    let token = "xVec = {1, 2}\nxMat = {\n{ {1, 0}, {0, 1} }\n{3, four}\n}\n";
    assert_eq!(parse_solution(token, &p), Err(SolutionError::NotNumeric { line: 4, token: "four".into() }));
    let commented = "* solver output\nxVec = {1, 2}\n\" note\nxMat = {\n{ {1, 0}, {0, 1} }\n{3, 4}\n}\n";
    assert!(parse_solution(commented, &p).is_ok());
}

fn perturbed(cert: &sphbound_core::sdpcert::SdpCertificate) -> NumericCertificate {
    let mut numeric = NumericCertificate::from_exact(cert);
    let mut sign = 1.0;
    for m in numeric.blocks.iter_mut() {
        let n = m.rows();
        for i in 0..n {
            for j in i..n {
                let v = m[(i, j)] + sign * 1e-9;
                m[(i, j)] = v;
                m[(j, i)] = v;
                sign = -sign;
            }
        }
    }
    numeric.b += 1e-9;
    numeric.f0 -= 1e-9;
    numeric
}

fn sampled() -> VerifyOptions {
    VerifyOptions {
        condition_c: ConditionCOptions { mode: CheckMode::Sampled, sample_step: q(1, 40), ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn perturbed_certificates_round_back() {
    let tight = tight_certificate();
    let rounded =
        round_certificate(&perturbed(&tight), &RoundOptions { max_denominator: 10_000, target: None, verify: VerifyOptions::default() })
            .unwrap();
    assert_eq!(rounded.certificate.blocks, tight.blocks);
    assert_eq!((rounded.certificate.b, rounded.certificate.f0), (tight.b, tight.f0));
    assert!(!rounded.projected);

    // the printed certificate is recovered entry by entry but fails the shifted positivity check
    let builtin = builtin_certificate();
    match round_certificate(&perturbed(&builtin), &RoundOptions { max_denominator: 10_000, target: None, verify: sampled() }) {
        Err(RoundingError::Certification { worst, report }) => {
            assert!(worst.starts_with("psd_shifted"), "{worst}");
            assert!(!report.psd.shifted.passed());
            assert!(report.expansion.verdict.passed());
        }
        other => panic!("{other:?}"),
    }
}

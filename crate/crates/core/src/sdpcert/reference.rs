//! Reference data for the ten-point code in dimension four: certificate
//! blocks, expanded polynomial, diagonal factorization, the affine search
//! family and a basis of the expansion kernel.

use crate::exact::matrix::qmatrix;
use crate::scalar::{q, qi};
use crate::threepoint::{QSymPoly, QTuple};
use crate::{QPoly, Rational};

pub fn certificate_blocks() -> QTuple {
    QTuple::new(vec![
        qmatrix(&[
            &["2882/3", "114", "-2500", "0"],
            &["114", "324", "216", "0"],
            &["-2500", "216", "8716", "1296"],
            &["0", "0", "1296", "11664"],
        ]),
        qmatrix(&[&["0", "0", "0"], &["0", "3588", "-4536"], &["0", "-4536", "11664"]]),
        qmatrix(&[&["2000"]]),
    ])
}

pub fn diagonal_bound() -> Rational {
    qi(250)
}

pub fn f0() -> Rational {
    q(800, 3)
}

fn sym(terms: &[([u32; 3], Rational)]) -> QSymPoly {
    let mut p = QSymPoly::zero();
    for (e, c) in terms {
        p.add_term(*e, c.clone());
    }
    p
}

/// The nine-term expansion of the certificate polynomial in the `m_ijk` basis.
pub fn expansion() -> QSymPoly {
    sym(&[
        ([3, 2, 0], qi(11664)),
        ([2, 2, 1], qi(11664)),
        ([2, 2, 0], qi(7128)),
        ([2, 1, 1], qi(-9072)),
        ([2, 1, 0], qi(432)),
        ([1, 1, 1], qi(-2412)),
        ([1, 1, 0], qi(324)),
        ([1, 0, 0], qi(228)),
        ([0, 0, 0], q(-118, 3)),
    ])
}

/// Value of the certificate polynomial at `(1, 1, 1)`.
pub fn value_at_one() -> Rational {
    q(59750, 3)
}

/// `F(x, x, 1) - B` as a constant times factors with multiplicities.
pub fn diagonal_factorization() -> (Rational, Vec<(QPoly, u32)>) {
    (qi(3888), vec![(QPoly::linear_root(q(-2, 3)), 2), (QPoly::linear_root(q(1, 6)), 1), (QPoly::new(vec![q(20, 27), q(4, 9), qi(1)]), 1)])
}

/// Base part of the one-parameter family.
pub fn family_base_polynomial() -> QSymPoly {
    sym(&[
        ([3, 2, 0], qi(11664)),
        ([2, 2, 0], qi(9720)),
        ([2, 1, 0], qi(-1296)),
        ([1, 1, 1], qi(-6480)),
        ([1, 1, 0], qi(2268)),
        ([1, 0, 0], qi(-108)),
        ([0, 0, 0], qi(-18)),
    ])
}

/// Direction of the one-parameter family.
pub fn family_direction_polynomial() -> QSymPoly {
    sym(&[
        ([2, 2, 1], qi(34992)),
        ([2, 2, 0], qi(-7776)),
        ([2, 1, 1], qi(-27216)),
        ([2, 1, 0], qi(5184)),
        ([1, 1, 1], qi(12204)),
        ([1, 1, 0], qi(-5832)),
        ([1, 0, 0], qi(1008)),
        ([0, 0, 0], qi(-64)),
    ])
}

pub fn family_base_tuple() -> QTuple {
    QTuple::new(vec![
        qmatrix(&[&["-18", "-54", "0", "0"], &["-54", "2268", "-648", "0"], &["0", "-648", "3240", "5832"], &["0", "0", "5832", "0"]]),
        qmatrix(&[&["0", "0", "0"], &["0", "-6480", "0"], &["0", "0", "0"]]),
        qmatrix(&[&["0"]]),
    ])
}

pub fn family_direction_tuple() -> QTuple {
    QTuple::new(vec![
        qmatrix(&[
            &["-64", "504", "0", "0"],
            &["504", "-5832", "2592", "0"],
            &["0", "2592", "4428", "-13608"],
            &["0", "0", "-13608", "34992"],
        ]),
        qmatrix(&[&["0", "0", "0"], &["0", "12204", "-13608"], &["0", "-13608", "34992"]]),
        qmatrix(&[&["0"]]),
    ])
}

/// Four reference tuples for the kernel of the expansion map at sizes
/// `(4, 3, 1)`, entry for entry. The fourth expands to `m_100 - m_110`, not zero.
pub fn reference_kernel_tuples() -> Vec<QTuple> {
    vec![
        QTuple::new(vec![
            qmatrix(&[&["0", "-1/2", "0", "0"], &["-1/2", "1", "0", "0"], &["0", "0", "0", "0"], &["0", "0", "0", "0"]]),
            qmatrix(&[&["1", "0", "0"], &["0", "0", "0"], &["0", "0", "0"]]),
            qmatrix(&[&["0"]]),
        ]),
        QTuple::new(vec![
            qmatrix(&[&["1/2", "0", "-5/4", "0"], &["0", "0", "0", "0"], &["-5/4", "0", "2", "0"], &["0", "0", "0", "0"]]),
            qmatrix(&[&["0", "0", "0"], &["0", "3", "0"], &["0", "0", "0"]]),
            qmatrix(&[&["1"]]),
        ]),
        QTuple::new(vec![
            qmatrix(&[&["0", "0", "0", "0"], &["0", "-1", "1/2", "0"], &["0", "1/2", "0", "0"], &["0", "0", "0", "0"]]),
            qmatrix(&[&["0", "1/2", "0"], &["1/2", "0", "0"], &["0", "0", "0"]]),
            qmatrix(&[&["0"]]),
        ]),
        QTuple::new(vec![
            qmatrix(&[&["0", "0", "0", "0"], &["0", "0", "-1/2", "1/2"], &["0", "-1/2", "0", "0"], &["0", "1/2", "0", "0"]]),
            qmatrix(&[&["1", "0", "1/2"], &["0", "0", "0"], &["1/2", "0", "0"]]),
            qmatrix(&[&["0"]]),
        ]),
    ]
}

/// Family parameter and kernel coefficients that reproduce the certificate blocks.
pub fn family_parameters() -> (Rational, [Rational; 4]) {
    (q(1, 3), [qi(0), qi(2000), qi(0), qi(0)])
}

/// Triple sums of the three-point blocks over the ten-point code.
pub fn triple_sums() -> QTuple {
    QTuple::new(vec![
        qmatrix(&[
            &["1000", "0", "250", "125/9"],
            &["0", "0", "0", "0"],
            &["250", "0", "125/2", "125/36"],
            &["125/9", "0", "125/36", "125/648"],
        ]),
        qmatrix(&[&["0", "0", "0"], &["0", "0", "0"], &["0", "0", "0"]]),
        qmatrix(&[&["0"]]),
    ])
}

/// The reference kernel tuples with the unit at `(0, 0)` of block 1 removed
/// from the fourth, which makes all four expand to zero.
pub fn kernel_tuples() -> Vec<QTuple> {
    let mut ks = reference_kernel_tuples();
    ks[3].blocks[1][(0, 0)] = qi(0);
    ks
}

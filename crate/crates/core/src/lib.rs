//! Linear-programming and three-point semidefinite bounds for spherical codes,
//! with exact rational certification.
//!
//! Generic containers are parameterised over [`Scalar`]; the aliases below fix
//! the exact (`Rational`) and floating (`f64`) instantiations.

pub mod exact;
pub mod gegenbauer;
pub mod gram;
pub mod lpbound;
pub mod scalar;
pub mod sdpcert;
pub mod sdpio;
pub mod simplex;
pub mod threepoint;
pub mod uniqueness;
pub mod verdict;

pub use exact::interval::{Box3, Interval};
pub use exact::linalg::{ldlt_psd, nullspace, rank, solve_linear, LinalgError, PsdVerdict, SolutionReport};
pub use exact::matrix::Matrix;
pub use exact::multipoly::TriPoly;
pub use exact::poly::UniPoly;
pub use exact::sturm::{sturm_max_on, SignVerdict};
pub use gram::{FGram, GramMatrix, QGram};
pub use scalar::Scalar;
pub use sdpcert::{verify_full, SdpCertificate, VerificationReport, VerifyOptions};
pub use sdpio::{SdpInstance, SdpaProblem};
pub use threepoint::{MatrixTuple, QSymPoly, QTuple, SymPoly3};
pub use uniqueness::{uniqueness_chain, Graph, SrgParams, UniquenessReport};
pub use verdict::{Status, Verdict, Witness};

pub type Rational = num_rational::BigRational;
pub type QInterval = Interval<Rational>;
pub type QPoly = UniPoly<Rational>;
pub type QMatrix = Matrix<Rational>;
pub type QTriPoly = TriPoly<Rational>;
pub type FPoly = UniPoly<f64>;
pub type FMatrix = Matrix<f64>;
pub type FTriPoly = TriPoly<f64>;

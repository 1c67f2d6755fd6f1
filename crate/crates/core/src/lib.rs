//! Exact classification engine for representations of decorated bunches of
//! chains over a discrete valuation ring, together with generators for
//! Cohen-Macaulay module presentations and matrix factorizations over
//! degenerate-cusp surface singularities.
//!
//! The crate is organized along the problem's layers:
//!
//! - [`scalars`]: exact base fields k (Q or F_p) and the valued field
//!   K = k(z) with its valuation ring D.
//! - [`polys`]: univariate polynomial factorization over k, needed to split
//!   Frobenius blocks into irreducible pieces.
//! - [`linalg`]: exact matrix algebra over k, K and D (Smith form, rational
//!   canonical form, Fitting decomposition, companion lifts).
//! - [`bunch`]: the combinatorial datum {E, F, ~, -, <=, <|} and its derived
//!   coefficient rings.
//! - [`words`]: words and cycles over a bunch, their equivalences, shifts
//!   and canonical forms.
//! - [`reps`]: block-matrix representations, morphism verification and the
//!   admissible transformations T1/T2.
//! - [`canon`]: string and band canonical representations.
//! - [`reduce`]: the reduction algorithm and the decomposition driver.
//! - [`cusps`]: cyclic-quotient combinatorics and bunch constructors for
//!   degenerate cusps, plus the equation catalog.
//! - [`modgen`]: multivariate polynomials, module generator matrices and
//!   matrix-factorization verification.

pub mod error;
pub mod scalars;
pub mod polys;
pub mod linalg;
pub mod bunch;
pub mod words;
pub mod reps;
// pub mod canon;
// pub mod reduce;
// pub mod cusps;
// pub mod modgen;

pub use error::DbcError;
pub use scalars::{ArithOp, BaseScalar, ExtendedInt, Field, FieldElement, UniPoly};

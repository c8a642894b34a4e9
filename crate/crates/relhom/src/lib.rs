//! Exact-arithmetic workbench for the integral homology of finite groups
//! given by finite presentations.
//!
//! The pipeline: enumerate the group from a presentation, build the free
//! resolution data attached to the presentation (relation module, Magnus
//! embedding), and read even/odd homology off integer lattice computations
//! on tensor-power coinvariants. Everything is exact; there is no floating
//! point anywhere in this crate.

pub mod freelie;
pub mod foxmagnus;
pub mod homology;
pub mod intlattice;
pub mod prescat;
pub mod presentations;
pub mod zgmod;

pub(crate) mod rng;

use num_bigint::BigInt;

/// Errors surfaced by the workbench. Variants marked "hard failure" signal
/// facts that are mathematically impossible for valid inputs; seeing one
/// means either corrupted input data or a defect worth a bug report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("coset enumeration exceeded the limit of {limit} cosets")]
    EnumerationLimit { limit: usize },

    #[error("size budget exceeded: computation needs {needed} ambient columns, budget is {budget}")]
    Budget { needed: usize, budget: usize },

    #[error("operands live over different groups")]
    GroupMismatch,

    #[error("word does not lie in the kernel of the quotient map (evaluates to element {element})")]
    NotARelation { element: usize },

    #[error("group table is invalid: {0}")]
    BadGroupTable(String),

    #[error("quotient map is invalid: {0}")]
    BadQuotientMap(String),

    #[error("module action is invalid: {0}")]
    BadModuleAction(String),

    #[error("map is not equivariant: action of element {element} fails on column {column}")]
    NotEquivariant { element: usize, column: usize },

    #[error("map does not descend to coinvariants: relation row {row} is not carried into the target lattice")]
    NotWellDefined { row: usize },

    #[error("hard failure: {0}")]
    Internal(String),

    #[error("presentation morphism is invalid: {0}")]
    BadMorphism(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no solution in the lattice where one is guaranteed: {0}")]
    LatticeSolve(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand used pervasively in tests and small constructions.
pub fn bi(x: i64) -> BigInt {
    BigInt::from(x)
}

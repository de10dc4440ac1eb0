//! Finite-dimensional models of directed contractive systems of Hilbert
//! spaces and the objects they generate: the conjugate dual pair
//! `(D, D^x)` obtained as projective and inductive limit, the central
//! Hilbert space `H_0` of the induced rigged Hilbert space, the canonical
//! operator family reconstructing the system, and the partial *-algebra of
//! inductive-limit operators `L(D, D^x)`.

pub mod cli;
pub mod error;
pub mod format;
pub mod generators;
pub mod hspace;
pub mod jtl;
pub mod ofamily;
pub mod opalg;
pub mod poset;
pub mod report;
pub mod rhs;
pub mod sample;
pub mod system;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use hspace::{CMat, CVec, LinMap, MetricSpace, C64};
pub use jtl::{DElement, DxElement};
pub use ofamily::OFamily;
pub use opalg::LimOperator;
pub use poset::IndexPoset;
pub use system::{validate_system, ContractiveSystem, Link, Provenance, ValidationReport};
pub use tolerance::Tolerances;

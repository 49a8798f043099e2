//! Decision tools for two-answer nonlocal games.
//!
//! A game poses one question to each of two players, who answer one bit
//! each without communicating; a referee's table marks which answer pairs
//! lose. This crate decides whether a game can be won with certainty and
//! produces machine-checkable evidence either way:
//!
//! * classical search and strategy enumeration over deterministic answers,
//! * extraction of a deterministic strategy from any finite-dimensional
//!   commuting-projector strategy that wins with certainty,
//! * moment-relaxation solving whose infeasibility side yields an algebraic
//!   certificate (a sum-of-squares identity over the game's word algebra)
//!   that no winning strategy exists in any dimension,
//! * verification of such certificates in floating point and in exact
//!   rational arithmetic.

pub mod certificate;
pub mod element;
pub mod error;
pub mod exact;
pub mod game;
pub mod gns;
pub mod io;
pub mod moment;
pub mod scalar;
pub mod solver;
pub mod strategy;
pub mod word;

pub use certificate::{
    archimedean_witness, extract_certificate, ExactCertificate, FloatVerification, Multiplier,
    SosCertificate, SosWitness,
};
pub use element::{AlgebraElement, Party};
pub use error::{Error, Result};
pub use game::{ClassicalStrategy, GameSpec};
pub use gns::{truncated_gns, GnsReport, GnsResult};
pub use moment::{MomentCheck, MomentProblem, MomentVector};
pub use scalar::{Coefficient, Exact};
pub use solver::{solve, DualRay, SolveOptions, SolveResult, SolveStatus};
pub use strategy::{
    complete_basis, extract_classical, generate_perfect_strategy, Extraction, ExtractionOptions,
    FiniteStrategy, ValidationReport,
};
pub use word::{words_up_to, Alphabet, GroupWord, PartyWord};

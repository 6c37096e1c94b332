//! Simulation of single-prover post hoc verification of quantum
//! computation.
//!
//! A circuit is turned into a Feynman-Kitaev clock Hamiltonian written as
//! weighted X/Z Pauli strings. The prover sends a witness state; the
//! verifier draws one term with probability proportional to `|d_S|`,
//! measures its support qubit by qubit in the X or Z basis and accepts when
//! the product of outcomes equals `-sign(d_S)`.

pub mod circuit;
pub mod error;
pub mod hamiltonian;
pub mod oracle;
pub mod pauli;
pub mod pipeline;
pub mod protocol;
pub mod statevector;

pub use error::{Error, ParseError, ParseErrorKind, Result};

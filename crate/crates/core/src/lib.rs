//! Quantum context-sensitive word embeddings on a dense statevector
//! simulator.
//!
//! A window of context words is turned into a matrix (or vector) of angles,
//! loaded into an `m`-qubit register by layers of RX/RZ rotations with CNOT
//! cascades, passed through a trainable RX/RZ/CRZ ansatz and read out as
//! per-qubit probabilities `P(|1⟩_q)`. Training fits those probabilities to
//! the binary code of the center word.
//!
//! Modules:
//! - [`qsim`]: statevector simulator
//! - [`context`]: the five context encodings and layer schedules
//! - [`corpus`]: vocabulary, pairs, targets, synthetic corpora
//! - [`model`]: circuit assembly, forward pass, gate counting
//! - [`train`]: loss, gradients, optimisation, accuracy
//! - [`baseline`]: classical CBOW
//! - [`experiment`]: runs, sweeps and artifacts

pub mod baseline;
pub mod context;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod model;
pub mod optim;
pub mod qsim;
pub mod train;

pub use error::{Error, Result};

//! Open-system dynamical entropy of a qubit collisionally coupled to a
//! classical stationary Markov chain.
//!
//! The crate is organised bottom-up:
//!
//! - [`qmat`]: dense complex linear algebra (Hermitian spectra, entropies,
//!   tensor products, partial traces, purifications).
//! - [`pauli`]: the algebra of qubit Pauli conjugation maps.
//! - [`env_chain`]: the four-symbol stationary Markov environment.
//! - [`collision`]: POVMs, operator words and coarse-grained density matrices,
//!   both by brute force and in closed form for the reference POVM.
//! - [`alf`]: entropy sequences, rate estimators and the bounds that sandwich
//!   the optimised entropy rate.
//! - [`divisibility`]: propagators, CP/P-divisibility verdicts, block
//!   positivity searches and trace-distance revivals.
//!
//! All entropies are in nats unless a [`LogBase`] says otherwise.

#![allow(clippy::needless_range_loop)]

pub mod alf;
pub mod collision;
pub mod divisibility;
pub mod env_chain;
pub mod pauli;
pub mod qmat;

mod error;

pub use error::{Error, Result};
pub use qmat::{ComplexMatrix, LogBase, StateVector};

pub use num_complex::Complex64;

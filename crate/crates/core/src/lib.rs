//! Exact diagonalization of the Bose-Hubbard chain in its number-theoretic
//! implementation.
//!
//! The bosonic Fock space of a chain of sites is realized as `l2(N)`: the
//! basis state `delta_n` is identified with the multi-particle configuration
//! read off the prime factorization of `n`. Each prime is a lattice site and
//! its exponent the occupation number, so creation and annihilation act by
//! multiplying and dividing indices by primes. Restricting to indices
//! `n <= N` gives a finite subspace `F_N` on which every Hamiltonian matrix
//! entry is a rational multiple of a square root of an integer and can be
//! produced without rounding.
//!
//! The crate is organized around that pipeline:
//!
//! - [`arith`] — prime sieves, factorizations, and the arithmetic functions
//!   that drive every operator action;
//! - [`fock`] — the truncated Fock space and the ladder operators on it;
//! - [`hamiltonian`] — entry-exact sparse assembly of the Bose-Hubbard
//!   Hamiltonian and its single-particle block;
//! - [`spectral`] — dense and iterative symmetric eigensolvers plus derived
//!   observables (gaps, particle-number expectations);
//! - [`thermo`] — grand-canonical partition functions, phase-diagram grids,
//!   and singularity detection on them;
//! - [`dual`] — the circle-dual ladder algebra, diagonal unitary flows, and
//!   the anisotropic-spin-chain parameter map;
//! - [`io`] — MatrixMarket, CSV, JSON-sidecar, and gnuplot output formats.

pub mod arith;
pub mod dual;
pub mod fock;
pub mod hamiltonian;
pub mod io;
pub mod spectral;
pub mod thermo;

#[doc(hidden)]
pub mod book;

mod error;

pub use error::{Error, Result};

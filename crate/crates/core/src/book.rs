//! Doc-test anchors for the guide.
//!
//! Each chapter of `book/src` becomes the documentation of an empty module,
//! so `cargo test --doc` compiles and runs every code snippet in the book
//! against the current API. The rendered book and the tested examples can
//! never drift apart.

macro_rules! chapter {
    ($name:ident, $path:literal) => {
        #[doc = include_str!($path)]
        pub mod $name {}
    };
}

chapter!(introduction, "../../../book/src/introduction.md");
chapter!(arithmetic, "../../../book/src/arithmetic.md");
chapter!(fock_space, "../../../book/src/fock-space.md");
chapter!(hamiltonian, "../../../book/src/hamiltonian.md");
chapter!(spectra, "../../../book/src/spectra.md");
chapter!(thermodynamics, "../../../book/src/thermodynamics.md");
chapter!(duality, "../../../book/src/duality.md");
chapter!(spin_chains, "../../../book/src/spin-chains.md");
chapter!(cli, "../../../book/src/cli.md");

//! The circle-dual side of the ladder algebra, diagonal unitary flows on
//! `F_N`, and the anisotropic-spin-chain parameter map.
//!
//! A single site's occupation ladder lives in the space of non-negative
//! Fourier coefficients `(f_0, f_1, ...)` of a circle function. On that
//! sequence space three self-adjoint operators generate the oscillator
//! algebra:
//!
//! ```text
//! K0 f_n = (n + 1/2) f_n ,
//! K+ = K1 + i K2 : (f_0, f_1, ...) -> (0, f_0, 2 f_1, 3 f_2, ...) ,
//! K- = K1 - i K2 : (f_0, f_1, ...) -> (f_1, 2 f_2, 3 f_3, ...) ,
//! ```
//!
//! and the bosonic ladder is recovered as `a = (K0 + 1/2)^{-1/2} K-`,
//! `a+ = K+ (K0 + 1/2)^{-1/2}`. Sequences are truncated at a depth `M` with
//! the same compression semantics as the number-theoretic side, so the
//! commutation relations hold on the interior (indices up to `M - 2`).
//!
//! Completely multiplicative phase characters give one-parameter diagonal
//! unitaries on `F_N` ("flows"): `delta_n` picks up the phase
//! `prod_p p^(i a_p(n) theta_p tau)`. Conjugating the Hamiltonian by a flow
//! keeps its sparsity pattern, diagonal, spectrum, and every particle-number
//! sector fixed; only off-diagonal phases drift.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::fock::{FockSpace, StateVector};
use crate::hamiltonian::{build_hamiltonian, HamiltonianParams};
use crate::spectral::symmetric_eigen_dense;
use crate::{Error, Result};

/// Default truncation depth for algebra checks.
pub const DEFAULT_DEPTH: usize = 32;

/// Fourier-coefficient sequence of one site, truncated at depth `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSequence {
    coeff: Vec<Complex64>,
}

impl SiteSequence {
    pub fn zero(depth: usize) -> Self {
        SiteSequence {
            coeff: vec![Complex64::new(0.0, 0.0); depth],
        }
    }

    /// Basis sequence `e_j` at the given depth.
    pub fn basis(depth: usize, j: usize) -> Result<Self> {
        if j >= depth {
            return Err(Error::IndexOutOfRange(j as u64, depth as u64));
        }
        let mut s = SiteSequence::zero(depth);
        s.coeff[j] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_coefficients(coeff: Vec<Complex64>) -> Self {
        SiteSequence { coeff }
    }

    /// Truncation depth `M`.
    pub fn depth(&self) -> usize {
        self.coeff.len()
    }

    pub fn get(&self, j: usize) -> Complex64 {
        self.coeff[j]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeff
    }

    pub fn inner(&self, other: &SiteSequence) -> Complex64 {
        self.coeff
            .iter()
            .zip(&other.coeff)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn map_indexed(&self, f: impl Fn(usize, Complex64) -> Complex64) -> SiteSequence {
        SiteSequence {
            coeff: self
                .coeff
                .iter()
                .enumerate()
                .map(|(j, &z)| f(j, z))
                .collect(),
        }
    }
}

/// `K0`: diagonal with entries `n + 1/2`.
pub fn k0(seq: &SiteSequence) -> SiteSequence {
    seq.map_indexed(|n, z| z * (n as f64 + 0.5))
}

/// `K+`: `(K+ f)_n = n f_{n-1}`.
pub fn k_plus(seq: &SiteSequence) -> SiteSequence {
    let m = seq.depth();
    let mut out = SiteSequence::zero(m);
    for n in 1..m {
        out.coeff[n] = seq.coeff[n - 1] * n as f64;
    }
    out
}

/// `K-`: `(K- f)_n = (n + 1) f_{n+1}` (the coefficient beyond the depth is
/// dropped).
pub fn k_minus(seq: &SiteSequence) -> SiteSequence {
    let m = seq.depth();
    let mut out = SiteSequence::zero(m);
    for n in 0..m.saturating_sub(1) {
        out.coeff[n] = seq.coeff[n + 1] * (n as f64 + 1.0);
    }
    out
}

/// `K1 = (K+ + K-) / 2`.
pub fn k1(seq: &SiteSequence) -> SiteSequence {
    let plus = k_plus(seq);
    let minus = k_minus(seq);
    SiteSequence {
        coeff: plus
            .coeff
            .iter()
            .zip(&minus.coeff)
            .map(|(a, b)| (a + b) * 0.5)
            .collect(),
    }
}

/// `K2 = (K+ - K-) / (2 i)`.
pub fn k2(seq: &SiteSequence) -> SiteSequence {
    let plus = k_plus(seq);
    let minus = k_minus(seq);
    let half_over_i = Complex64::new(0.0, -0.5); // 1 / (2 i)
    SiteSequence {
        coeff: plus
            .coeff
            .iter()
            .zip(&minus.coeff)
            .map(|(a, b)| (a - b) * half_over_i)
            .collect(),
    }
}

/// Standard ladder annihilation on coordinates: `(a f)_n = sqrt(n+1) f_{n+1}`.
pub fn ladder_annihilate(seq: &SiteSequence) -> SiteSequence {
    let m = seq.depth();
    let mut out = SiteSequence::zero(m);
    for n in 0..m.saturating_sub(1) {
        out.coeff[n] = seq.coeff[n + 1] * (n as f64 + 1.0).sqrt();
    }
    out
}

/// Standard ladder creation on coordinates: `(a+ f)_n = sqrt(n) f_{n-1}`.
pub fn ladder_create(seq: &SiteSequence) -> SiteSequence {
    let m = seq.depth();
    let mut out = SiteSequence::zero(m);
    for n in 1..m {
        out.coeff[n] = seq.coeff[n - 1] * (n as f64).sqrt();
    }
    out
}

/// Reconstruct the ladder pair from the oscillator generators:
/// `a = (K0 + 1/2)^{-1/2} K-` and `a+ = K+ (K0 + 1/2)^{-1/2}`.
pub fn reconstruct_ladder(seq: &SiteSequence) -> (SiteSequence, SiteSequence) {
    // (K0 + 1/2) is diagonal with entries n + 1
    let scale_in = seq.map_indexed(|n, z| z / (n as f64 + 1.0).sqrt());
    let annihilated = k_minus(seq).map_indexed(|n, z| z / (n as f64 + 1.0).sqrt());
    let created = k_plus(&scale_in);
    (annihilated, created)
}

/// The inverse relations `K- = (N + 1)^{1/2} a` and `K+ = a+ (N + 1)^{1/2}`,
/// built from the standard ladder.
pub fn holstein_primakoff_inverse(seq: &SiteSequence) -> (SiteSequence, SiteSequence) {
    let minus = ladder_annihilate(seq).map_indexed(|n, z| z * (n as f64 + 1.0).sqrt());
    let plus = ladder_create(&seq.map_indexed(|n, z| z * (n as f64 + 1.0).sqrt()));
    (minus, plus)
}

/// Dense matrix of an operator on the depth-`M` sequence space (column `j`
/// is the image of `e_j`); test and verification helper.
pub fn operator_matrix(
    depth: usize,
    op: impl Fn(&SiteSequence) -> SiteSequence,
) -> Vec<Complex64> {
    let mut a = vec![Complex64::new(0.0, 0.0); depth * depth];
    for j in 0..depth {
        let col = op(&SiteSequence::basis(depth, j).unwrap());
        for i in 0..depth {
            a[i * depth + j] = col.get(i);
        }
    }
    a
}

/// A diagonal unitary flow: one angle per prime site and a time parameter.
///
/// The character value at a prime is `chi(p) = p^(i theta_p)`, extended
/// completely multiplicatively; the flow multiplies `delta_n` by
/// `chi(n)^tau = exp(i tau sum_p a_p(n) theta_p ln p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    angles: BTreeMap<u64, f64>,
    tau: f64,
}

impl FlowSpec {
    pub fn new(angles: BTreeMap<u64, f64>, tau: f64) -> Result<Self> {
        if !tau.is_finite() || angles.values().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter(
                "flow angles and time must be finite".into(),
            ));
        }
        Ok(FlowSpec { angles, tau })
    }

    /// The same angle on every prime up to `bound`.
    pub fn constant(space: &FockSpace, theta: f64, tau: f64) -> Result<Self> {
        let angles = space
            .primes()
            .primes()
            .iter()
            .take_while(|&&p| p <= space.n_max())
            .map(|&p| (p, theta))
            .collect();
        FlowSpec::new(angles, tau)
    }

    /// Deterministic pseudo-random angles in `[0, 2 pi)` per prime.
    pub fn seeded(space: &FockSpace, seed: u64, tau: f64) -> Result<Self> {
        let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let angles = space
            .primes()
            .primes()
            .iter()
            .take_while(|&&p| p <= space.n_max())
            .map(|&p| (p, next() * std::f64::consts::TAU))
            .collect();
        FlowSpec::new(angles, tau)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn angle(&self, p: u64) -> Option<f64> {
        self.angles.get(&p).copied()
    }

    /// Flow phase of the basis state `delta_n`, reduced modulo `2 pi` before
    /// exponentiation.
    pub fn phase(&self, space: &FockSpace, n: u64) -> Result<Complex64> {
        let f = space.sieve().factorize(n)?;
        let mut arg = 0.0f64;
        for &(p, a) in f.factors() {
            let theta = self.angles.get(&p).ok_or(Error::NotPrime(p))?;
            arg += f64::from(a) * theta * (p as f64).ln();
        }
        arg = (self.tau * arg).rem_euclid(std::f64::consts::TAU);
        Ok(Complex64::from_polar(1.0, arg))
    }

    fn check_covers(&self, space: &FockSpace) -> Result<()> {
        for &p in space.primes().primes() {
            if p > space.n_max() {
                break;
            }
            if !self.angles.contains_key(&p) {
                return Err(Error::InvalidParameter(format!(
                    "flow spec is missing an angle for prime {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Apply the diagonal unitary `sigma_tau` to a state.
pub fn flow_apply(space: &FockSpace, spec: &FlowSpec, v: &StateVector) -> Result<StateVector> {
    if v.dim() != space.n_max() {
        return Err(Error::DimensionMismatch(format!(
            "state has dim {}, space has N = {}",
            v.dim(),
            space.n_max()
        )));
    }
    spec.check_covers(space)?;
    let mut out = v.clone();
    for n in 1..=space.n_max() {
        out.set(n, v.get(n) * spec.phase(space, n)?);
    }
    Ok(out)
}

/// Sparse Hermitian matrix stored as upper-triangle triplets with implicit
/// conjugate-transpose completion.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitianMatrix {
    dim: usize,
    entries: Vec<(u32, u32, Complex64)>,
}

impl SparseHermitianMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, u32, Complex64)] {
        &self.entries
    }

    /// Eigenvalues through the real symmetric embedding
    /// `[[Re H, -Im H], [Im H, Re H]]`, whose spectrum is that of `H` with
    /// every multiplicity doubled.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.dim;
        let m = 2 * n;
        let embed = self.embedding();
        let (vals, _) = symmetric_eigen_dense(embed, m, false)?;
        Ok(vals.into_iter().step_by(2).collect())
    }

    /// Ground eigenpair: energy and a unit complex eigenvector.
    pub fn ground_state(&self) -> Result<(f64, Vec<Complex64>)> {
        let n = self.dim;
        let m = 2 * n;
        let (vals, vecs) = symmetric_eigen_dense(self.embedding(), m, true)?;
        let vecs = vecs.expect("vectors requested");
        let energy = vals[0];
        let mut state: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(vecs[i * m], vecs[(i + n) * m]))
            .collect();
        let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut state {
            *z /= norm;
        }
        Ok((energy, state))
    }

    fn embedding(&self) -> Vec<f64> {
        let n = self.dim;
        let m = 2 * n;
        let mut a = vec![0.0; m * m];
        let mut put = |i: usize, j: usize, z: Complex64| {
            a[i * m + j] = z.re;
            a[i * m + j + n] = -z.im;
            a[(i + n) * m + j] = z.im;
            a[(i + n) * m + j + n] = z.re;
        };
        for &(r, c, z) in &self.entries {
            put(r as usize, c as usize, z);
            if r != c {
                put(c as usize, r as usize, z.conj());
            }
        }
        a
    }
}

/// Conjugate the Hamiltonian by the flow: `H_tau = sigma_tau^+ H sigma_tau`.
///
/// The structural pattern and the diagonal are carried over untouched; each
/// off-diagonal entry is rotated by `conj(phase(m)) * phase(n)`, so its
/// magnitude is preserved exactly.
pub fn conjugated_hamiltonian(
    space: &FockSpace,
    spec: &FlowSpec,
    params: &HamiltonianParams,
) -> Result<SparseHermitianMatrix> {
    spec.check_covers(space)?;
    let h = build_hamiltonian(space, params)?;
    let mut entries = Vec::with_capacity(h.entries().len());
    for &(r, c, v) in h.entries() {
        if r == c {
            entries.push((r, c, Complex64::new(v, 0.0)));
        } else {
            let pm = spec.phase(space, u64::from(r) + 1)?;
            let pn = spec.phase(space, u64::from(c) + 1)?;
            entries.push((r, c, pm.conj() * pn * v));
        }
    }
    Ok(SparseHermitianMatrix {
        dim: h.dim(),
        entries,
    })
}

/// Heisenberg coupling, local anisotropy, and spin amplitude of a spin
/// chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinParams {
    pub j: f64,
    pub d: f64,
    pub s: f64,
}

impl SpinParams {
    pub fn new(j: f64, d: f64, s: f64) -> Result<Self> {
        if !(j.is_finite() && d.is_finite() && s.is_finite()) || s <= 0.0 {
            return Err(Error::InvalidParameter(
                "spin parameters must be finite with s > 0".into(),
            ));
        }
        Ok(SpinParams { j, d, s })
    }
}

/// Bose-Hubbard knobs without a truncation size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappedParams {
    pub u: f64,
    pub mu: f64,
    pub t: f64,
}

impl MappedParams {
    pub fn with_truncation(&self, n_max: u64) -> Result<HamiltonianParams> {
        HamiltonianParams::new(self.u, self.mu, self.t, n_max)
    }
}

/// Map an anisotropic spin chain onto Bose-Hubbard parameters:
/// `U = -2 (J + D)`, `mu = -(2S - 1)(J + D)`, `t = S J`.
pub fn map_spin_chain(spin: &SpinParams) -> MappedParams {
    let jd = spin.j + spin.d;
    MappedParams {
        u: -2.0 * jd,
        mu: -(2.0 * spin.s - 1.0) * jd,
        t: spin.s * spin.j,
    }
}

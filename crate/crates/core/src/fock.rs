//! The truncated Fock space `F_N = span{delta_n : n <= N}` inside `l2(N)`
//! and the number-theoretic ladder operators on it.
//!
//! A basis state `delta_n` encodes one bosonic configuration: site `p`
//! (a prime) holds `a_p(n)` quanta. The annihilation operator divides the
//! index by `p` and the creation operator multiplies by `p`,
//!
//! ```text
//! a_p  delta_n = sqrt(a_p(n))     delta_{n/p}   (zero when p does not divide n)
//! a_p+ delta_n = sqrt(a_p(n) + 1) delta_{n p}
//! ```
//!
//! Every operator here is the compression `P_N O P_N` of its infinite
//! counterpart: amplitudes that would land on an index above the truncation
//! are dropped. The canonical commutation relations therefore hold exactly
//! on the interior (indices whose images stay inside `F_N`) and only there.

use num_complex::Complex64;

use crate::arith::{PrimeTable, SpfSieve};
use crate::{Error, Result};

/// A vector in `F_N`, indexed by the physical label `n = 1..=N`.
///
/// Amplitudes are complex throughout: the Hamiltonian is real symmetric but
/// the diagonal unitary flows are not.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amp: Vec<Complex64>,
}

impl StateVector {
    /// The zero vector of dimension `n_max`.
    pub fn zero(n_max: u64) -> Self {
        StateVector {
            amp: vec![Complex64::new(0.0, 0.0); n_max as usize],
        }
    }

    /// The basis state `delta_n`.
    pub fn basis(n_max: u64, n: u64) -> Result<Self> {
        if n == 0 || n > n_max {
            return Err(Error::IndexOutOfRange(n, n_max));
        }
        let mut v = StateVector::zero(n_max);
        v.amp[(n - 1) as usize] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// Build from amplitudes listed for `n = 1..=len`.
    pub fn from_amplitudes(amp: Vec<Complex64>) -> Self {
        StateVector { amp }
    }

    /// Truncation size `N`.
    pub fn dim(&self) -> u64 {
        self.amp.len() as u64
    }

    /// Amplitude `z_n` (1-based physical index).
    pub fn get(&self, n: u64) -> Complex64 {
        self.amp[(n - 1) as usize]
    }

    pub fn set(&mut self, n: u64, z: Complex64) {
        self.amp[(n - 1) as usize] = z;
    }

    /// Raw amplitude slice, `amp[i] = z_{i+1}`.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amp
    }

    /// Squared norm `sum |z_n|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product `<self|other> = sum conj(z_n) w_n`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Rescale to unit norm; errors on the zero vector.
    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidParameter(
                "cannot normalize the zero vector".into(),
            ));
        }
        Ok(StateVector {
            amp: self.amp.iter().map(|z| z / n).collect(),
        })
    }
}

/// A lattice site: a prime together with its 1-based ordinal in the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteIndex {
    pub prime: u64,
    pub ordinal: usize,
}

/// The truncated Fock space with its arithmetic tables.
///
/// Construction sieves primes and smallest factors up to `2N` so that every
/// prime dividing an index `n <= N` has its consecutive successor available
/// (Bertrand's postulate puts it below `2N`).
#[derive(Debug, Clone)]
pub struct FockSpace {
    n_max: u64,
    sieve: SpfSieve,
    primes: PrimeTable,
    omega: Vec<u32>,
    qsum: Vec<u64>,
}

impl FockSpace {
    pub fn new(n_max: u64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter("truncation must be >= 1".into()));
        }
        let table_bound = n_max
            .checked_mul(2)
            .ok_or(Error::Overflow("prime table bound 2N"))?;
        let sieve = SpfSieve::up_to(table_bound)?;
        let primes = PrimeTable::up_to(table_bound)?;
        let len = n_max as usize;
        let mut omega = vec![0u32; len + 1];
        let mut qsum = vec![0u64; len + 1];
        for n in 2..=len {
            let p = sieve.smallest_factor(n as u64)? as usize;
            let mut m = n;
            let mut a = 0u32;
            while m.is_multiple_of(p) {
                m /= p;
                a += 1;
            }
            omega[n] = omega[m] + a;
            qsum[n] = qsum[m] + u64::from(a) * u64::from(a);
        }
        Ok(FockSpace {
            n_max,
            sieve,
            primes,
            omega,
            qsum,
        })
    }

    /// Truncation size `N`.
    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    /// The prime/site table (sieved to `2N`).
    pub fn primes(&self) -> &PrimeTable {
        &self.primes
    }

    /// The smallest-prime-factor sieve (to `2N`).
    pub fn sieve(&self) -> &SpfSieve {
        &self.sieve
    }

    /// Resolve a prime to a site, rejecting non-primes.
    pub fn site(&self, p: u64) -> Result<SiteIndex> {
        match self.primes.site_index(p) {
            Some(ordinal) => Ok(SiteIndex { prime: p, ordinal }),
            None => Err(Error::NotPrime(p)),
        }
    }

    /// Total particle number `Omega(n)` of the basis index `n <= N`.
    pub fn omega(&self, n: u64) -> u32 {
        self.omega[n as usize]
    }

    /// Interaction weight `Q(n)` of the basis index `n <= N`.
    pub fn q(&self, n: u64) -> u64 {
        self.qsum[n as usize]
    }

    /// Occupation `a_p(n)` of site `p` in the configuration `n`.
    pub fn occupation(&self, p: u64, n: u64) -> u32 {
        let mut m = n;
        let mut a = 0;
        while m.is_multiple_of(p) {
            m /= p;
            a += 1;
        }
        a
    }

    fn check_dim(&self, v: &StateVector) -> Result<()> {
        if v.dim() != self.n_max {
            return Err(Error::DimensionMismatch(format!(
                "state has dim {}, space has N = {}",
                v.dim(),
                self.n_max
            )));
        }
        Ok(())
    }

    /// Apply the annihilation operator of site `p`:
    /// `(a_p v)_m = sqrt(a_p(m p)) z_{m p}` for `m p <= N`, else 0.
    pub fn annihilate(&self, site: SiteIndex, v: &StateVector) -> Result<StateVector> {
        self.check_dim(v)?;
        let p = site.prime;
        let mut out = StateVector::zero(self.n_max);
        let mut src = p;
        let mut m = 1u64;
        while src <= self.n_max {
            let z = v.get(src);
            if z != Complex64::new(0.0, 0.0) {
                let a = self.occupation(p, src);
                out.set(m, z * (f64::from(a)).sqrt());
            }
            m += 1;
            src += p;
        }
        Ok(out)
    }

    /// Apply the creation operator of site `p`:
    /// `a_p+ delta_n = sqrt(a_p(n) + 1) delta_{n p}`, truncated above `N`.
    pub fn create(&self, site: SiteIndex, v: &StateVector) -> Result<StateVector> {
        self.check_dim(v)?;
        let p = site.prime;
        let mut out = StateVector::zero(self.n_max);
        let mut dst = p;
        while dst <= self.n_max {
            let z = v.get(dst / p);
            if z != Complex64::new(0.0, 0.0) {
                let a = self.occupation(p, dst);
                out.set(dst, z * f64::from(a).sqrt());
            }
            dst += p;
        }
        Ok(out)
    }

    /// Apply the site number operator `N_p`: diagonal with entries `a_p(n)`.
    pub fn number_op(&self, site: SiteIndex, v: &StateVector) -> Result<StateVector> {
        self.check_dim(v)?;
        let p = site.prime;
        let mut out = v.clone();
        for n in 1..=self.n_max {
            let a = self.occupation(p, n);
            out.set(n, v.get(n) * f64::from(a));
        }
        Ok(out)
    }

    /// Apply the total number operator: diagonal with entries `Omega(n)`.
    pub fn total_number(&self, v: &StateVector) -> Result<StateVector> {
        self.check_dim(v)?;
        let mut out = v.clone();
        for n in 1..=self.n_max {
            out.set(n, v.get(n) * f64::from(self.omega(n)));
        }
        Ok(out)
    }

    /// All indices `n <= N` with `Omega(n) = k`, increasing: the basis of the
    /// `k`-particle block.
    pub fn k_particle_indices(&self, k: u32) -> Vec<u64> {
        (1..=self.n_max)
            .filter(|&n| self.omega(n) == k)
            .collect()
    }

    /// Largest particle number present in `F_N` (floor of log2(N)).
    pub fn max_particle_number(&self) -> u32 {
        (1..=self.n_max).map(|n| self.omega(n)).max().unwrap_or(0)
    }

    /// Expectation `<v|total number|v> = sum Omega(n) |z_n|^2`.
    ///
    /// Callers wanting a physical expectation should pass a unit vector.
    pub fn expected_particle_number(&self, v: &StateVector) -> Result<f64> {
        self.check_dim(v)?;
        Ok((1..=self.n_max)
            .map(|n| f64::from(self.omega(n)) * v.get(n).norm_sqr())
            .sum())
    }
}

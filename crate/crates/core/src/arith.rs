//! Prime sieves, exact factorizations, and the arithmetic functions that
//! drive every operator action.
//!
//! Everything downstream reads occupation numbers off prime exponents, so
//! this module is the ground truth of the crate: `a_p(n)` (the multiplicity
//! of `p` in `n`), the completely additive `Omega(n) = sum_p a_p(n)`, the
//! interaction weight `Q(n) = sum_p a_p(n)^2`, and the distinct-prime count
//! `omega(n)`. Factorization is amortized into a single linear sieve pass
//! (smallest prime factor for every `n` up to a bound) so that per-index
//! queries cost `O(log n)`.

use crate::{Error, Result};

/// Exact prime decomposition of a positive integer.
///
/// `factors` lists `(p, a_p)` pairs with strictly increasing primes and
/// exponents at least 1; it is empty exactly when `n = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// The integer this factorization decomposes.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// The `(prime, exponent)` pairs in increasing prime order.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Multiplicity `a_p(n)` of the prime `p` in `n`.
    pub fn multiplicity(&self, p: u64) -> u32 {
        self.factors
            .binary_search_by_key(&p, |&(q, _)| q)
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    /// Total number of prime factors counted with multiplicity (Omega).
    pub fn omega_total(&self) -> u32 {
        self.factors.iter().map(|&(_, a)| a).sum()
    }

    /// Sum of squared exponents (Q).
    pub fn q_sum(&self) -> u64 {
        self.factors.iter().map(|&(_, a)| u64::from(a) * u64::from(a)).sum()
    }

    /// Number of distinct prime factors (little omega).
    pub fn omega_distinct(&self) -> u32 {
        self.factors.len() as u32
    }

    /// Recompose the product of `p^a_p`, failing on overflow.
    pub fn recompose(&self) -> Result<u64> {
        let mut acc: u64 = 1;
        for &(p, a) in &self.factors {
            for _ in 0..a {
                acc = acc
                    .checked_mul(p)
                    .ok_or(Error::Overflow("prime-power product"))?;
            }
        }
        Ok(acc)
    }
}

/// The consecutive primes `p_1 < p_2 < ...` up to a bound, with site lookups.
///
/// Site ordinals are 1-based: `p_1 = 2`. Neighbor queries (`successor`,
/// `predecessor`) implement the nearest-neighbor geometry of the chain.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    bound: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    /// Sieve of Eratosthenes: every prime `<= bound` and nothing else.
    pub fn up_to(bound: u64) -> Result<Self> {
        if bound < 1 {
            return Err(Error::InvalidParameter(
                "prime table bound must be >= 1".into(),
            ));
        }
        let limit = usize::try_from(bound).map_err(|_| Error::Overflow("sieve bound"))?;
        let mut is_prime = vec![true; limit + 1];
        is_prime[0] = false;
        if limit >= 1 {
            is_prime[1] = false;
        }
        let mut p = 2usize;
        while p * p <= limit {
            if is_prime[p] {
                let mut m = p * p;
                while m <= limit {
                    is_prime[m] = false;
                    m += p;
                }
            }
            p += 1;
        }
        let primes = (2..=limit).filter(|&i| is_prime[i]).map(|i| i as u64).collect();
        Ok(PrimeTable { bound, primes })
    }

    /// Upper bound the table was sieved to.
    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// All primes in the table, increasing.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Number of primes in the table (the prime-counting function at the bound).
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// 1-based site ordinal `k` with `p = p_k`, if `p` is in the table.
    pub fn site_index(&self, p: u64) -> Option<usize> {
        self.primes.binary_search(&p).ok().map(|i| i + 1)
    }

    /// Whether `p` is a prime recorded in the table.
    pub fn contains(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }

    /// The next prime after `p`, if present in the table.
    pub fn successor(&self, p: u64) -> Option<u64> {
        match self.primes.binary_search(&p) {
            Ok(i) => self.primes.get(i + 1).copied(),
            Err(_) => None,
        }
    }

    /// The prime preceding `p`; `None` for `p = 2` or unknown `p`.
    pub fn predecessor(&self, p: u64) -> Option<u64> {
        match self.primes.binary_search(&p) {
            Ok(0) => None,
            Ok(i) => Some(self.primes[i - 1]),
            Err(_) => None,
        }
    }
}

/// Convenience constructor matching the table type.
pub fn primes_up_to(bound: u64) -> Result<PrimeTable> {
    PrimeTable::up_to(bound)
}

/// Smallest-prime-factor sieve: one linear pass amortizes factorization of
/// every `n` up to the limit into `O(log n)` per query.
#[derive(Debug, Clone)]
pub struct SpfSieve {
    limit: u64,
    spf: Vec<u32>,
}

impl SpfSieve {
    /// Build the table for all `1 <= n <= limit`.
    pub fn up_to(limit: u64) -> Result<Self> {
        if limit < 1 {
            return Err(Error::InvalidParameter("sieve limit must be >= 1".into()));
        }
        let len = usize::try_from(limit).map_err(|_| Error::Overflow("sieve limit"))?;
        if limit > u64::from(u32::MAX) {
            return Err(Error::Overflow("sieve limit exceeds u32 factor storage"));
        }
        let mut spf: Vec<u32> = vec![0; len + 1];
        for x in (2..=len).step_by(2) {
            spf[x] = 2;
        }
        let mut x = 3usize;
        while x * x <= len {
            if spf[x] == 0 {
                let mut m = x * x;
                while m <= len {
                    if spf[m] == 0 {
                        spf[m] = x as u32;
                    }
                    m += 2 * x;
                }
            }
            x += 2;
        }
        for x in (3..=len).step_by(2) {
            if spf[x] == 0 {
                spf[x] = x as u32;
            }
        }
        Ok(SpfSieve { limit, spf })
    }

    /// Largest index the sieve can factor.
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Exact prime decomposition of `n`. Rejects `n = 0` and `n > limit`.
    pub fn factorize(&self, n: u64) -> Result<Factorization> {
        if n == 0 {
            return Err(Error::IndexOutOfRange(0, self.limit));
        }
        if n > self.limit {
            return Err(Error::IndexOutOfRange(n, self.limit));
        }
        let mut factors = Vec::new();
        let mut m = n as usize;
        while m > 1 {
            let p = self.spf[m];
            let mut a = 0u32;
            while self.spf[m] == p {
                m /= p as usize;
                a += 1;
                if m == 1 {
                    break;
                }
            }
            factors.push((u64::from(p), a));
        }
        Ok(Factorization { n, factors })
    }

    /// Smallest prime factor of `n >= 2`.
    pub fn smallest_factor(&self, n: u64) -> Result<u64> {
        if n < 2 || n > self.limit {
            return Err(Error::IndexOutOfRange(n, self.limit));
        }
        Ok(u64::from(self.spf[n as usize]))
    }

    /// Multiplicity `a_p(n)` without materializing the full factorization.
    pub fn multiplicity(&self, p: u64, n: u64) -> Result<u32> {
        if n == 0 || n > self.limit {
            return Err(Error::IndexOutOfRange(n, self.limit));
        }
        let mut m = n;
        let mut a = 0;
        while m.is_multiple_of(p) {
            m /= p;
            a += 1;
        }
        Ok(a)
    }

    /// Omega: total prime factors of `n` with multiplicity.
    pub fn omega_total(&self, n: u64) -> Result<u32> {
        Ok(self.factorize(n)?.omega_total())
    }

    /// Q: sum of squared exponents of `n`.
    pub fn q_sum(&self, n: u64) -> Result<u64> {
        Ok(self.factorize(n)?.q_sum())
    }

    /// Little omega: distinct prime factors of `n`.
    pub fn omega_distinct(&self, n: u64) -> Result<u32> {
        Ok(self.factorize(n)?.omega_distinct())
    }
}

//! Entry-exact construction of the Bose-Hubbard Hamiltonian on `F_N`.
//!
//! In the number-theoretic basis the interaction and chemical-potential
//! terms are diagonal,
//!
//! ```text
//! H_order delta_n = [ (U/2) Q(n) - (U/2 + mu) Omega(n) ] delta_n ,
//! ```
//!
//! while hopping moves one quantum between consecutive prime sites: row `m`
//! couples to `m p_{k+1} / p_k` (and back) whenever the source prime divides
//! `m`. Every off-diagonal magnitude is the square root of a product of
//! occupation integers, so rows are generated exactly as `(column, radicand)`
//! pairs and the amplitude `-t * sqrt(radicand)` is only applied at assembly.
//! That keeps the structural pattern parameter-free and reusable across
//! `(mu, t)` sweeps.

use crate::fock::FockSpace;
use crate::{Error, Result};

/// Physics knobs of the chain plus the truncation size.
///
/// `u` is the on-site Coulomb energy, `mu` the chemical potential, `t` the
/// hopping amplitude, `n_max` the dimension of `F_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParams {
    pub u: f64,
    pub mu: f64,
    pub t: f64,
    pub n_max: u64,
}

impl HamiltonianParams {
    pub fn new(u: f64, mu: f64, t: f64, n_max: u64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter("truncation must be >= 1".into()));
        }
        if !(u.is_finite() && mu.is_finite() && t.is_finite()) {
            return Err(Error::InvalidParameter(
                "Hamiltonian parameters must be finite".into(),
            ));
        }
        Ok(HamiltonianParams { u, mu, t, n_max })
    }
}

/// One structural hopping target of a row: column index and the integer whose
/// square root is the (positive) coupling magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopTerm {
    pub col: u64,
    pub radicand: u64,
}

impl HopTerm {
    /// The hopping coefficient `sqrt(radicand)` (no `-t` factor).
    pub fn coefficient(&self) -> f64 {
        (self.radicand as f64).sqrt()
    }
}

/// Sparse symmetric matrix stored as upper-triangle triplets.
///
/// Entries keep `row <= col` (0-based; basis index `n` sits at `n - 1`) and
/// are sorted row-major with no duplicates; the lower triangle is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricMatrix {
    dim: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl SparseSymmetricMatrix {
    /// Build from upper-triangle triplets; validates ordering, range, and
    /// duplicate-freeness.
    pub fn from_upper_triplets(dim: usize, entries: Vec<(u32, u32, f64)>) -> Result<Self> {
        for &(r, c, v) in &entries {
            if r > c || c as usize >= dim {
                return Err(Error::DimensionMismatch(format!(
                    "triplet ({r},{c}) outside upper triangle of dim {dim}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite value at ({r},{c})"
                )));
            }
        }
        for w in entries.windows(2) {
            if (w[0].0, w[0].1) >= (w[1].0, w[1].1) {
                return Err(Error::InvalidParameter(
                    "triplets must be sorted row-major and unique".into(),
                ));
            }
        }
        Ok(SparseSymmetricMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored (upper-triangle) triplets, sorted row-major.
    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    /// Number of stored triplets.
    pub fn nnz_stored(&self) -> usize {
        self.entries.len()
    }

    /// Structural nonzeros of the full symmetric matrix (mirrored entries
    /// counted on both sides).
    pub fn nnz_symmetric(&self) -> usize {
        let diag = self.entries.iter().filter(|&&(r, c, _)| r == c).count();
        2 * (self.entries.len() - diag) + diag
    }

    /// Dense row-major copy (small matrices only).
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = vec![0.0; n * n];
        for &(r, c, v) in &self.entries {
            a[r as usize * n + c as usize] += v;
            if r != c {
                a[c as usize * n + r as usize] += v;
            }
        }
        a
    }

    /// y = A x with implicit symmetric completion.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "matvec dimension mismatch");
        let mut y = vec![0.0; self.dim];
        for &(r, c, v) in &self.entries {
            let (r, c) = (r as usize, c as usize);
            y[r] += v * x[c];
            if r != c {
                y[c] += v * x[r];
            }
        }
        y
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> f64 {
        self.entries
            .iter()
            .filter(|&&(r, c, _)| r == c)
            .map(|&(_, _, v)| v)
            .sum()
    }

    /// Infinity norm (max absolute row sum) of the completed matrix.
    pub fn norm_inf(&self) -> f64 {
        let mut row_sum = vec![0.0f64; self.dim];
        for &(r, c, v) in &self.entries {
            row_sum[r as usize] += v.abs();
            if r != c {
                row_sum[c as usize] += v.abs();
            }
        }
        row_sum.into_iter().fold(0.0, f64::max)
    }
}

/// Symmetric tridiagonal matrix (the single-particle block is one).
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }
}

/// Diagonal entry `(U/2) Q(n) - (U/2 + mu) Omega(n)` of row `n`.
pub fn diagonal_entry(space: &FockSpace, n: u64, params: &HamiltonianParams) -> f64 {
    let q = space.q(n) as f64;
    let omega = f64::from(space.omega(n));
    0.5 * params.u * q - (0.5 * params.u + params.mu) * omega
}

/// All structural hopping targets of row `m` with no truncation applied.
///
/// For each prime `p | m` there is an upward move to `(m/p) * succ(p)` and,
/// when `p > 2`, a downward move to `(m/p) * pred(p)`; the radicand is
/// `(a_dest(m) + 1) * a_p(m)`. Targets are sorted by column.
pub fn hopping_targets(space: &FockSpace, m: u64) -> Result<Vec<HopTerm>> {
    if m == 0 || m > space.n_max() {
        return Err(Error::IndexOutOfRange(m, space.n_max()));
    }
    let f = space.sieve().factorize(m)?;
    let mut out = Vec::with_capacity(2 * f.factors().len());
    for &(p, a_p) in f.factors() {
        let base = m / p;
        let succ = space
            .primes()
            .successor(p)
            .ok_or(Error::Overflow("prime successor beyond table"))?;
        let col = base
            .checked_mul(succ)
            .ok_or(Error::Overflow("hopping column index"))?;
        let a_dest = space.occupation(succ, m);
        out.push(HopTerm {
            col,
            radicand: u64::from(a_dest + 1) * u64::from(a_p),
        });
        if let Some(pred) = space.primes().predecessor(p) {
            let col = base
                .checked_mul(pred)
                .ok_or(Error::Overflow("hopping column index"))?;
            let a_dest = space.occupation(pred, m);
            out.push(HopTerm {
                col,
                radicand: u64::from(a_dest + 1) * u64::from(a_p),
            });
        }
    }
    out.sort_by_key(|t| t.col);
    Ok(out)
}

/// Structural hopping row of `m` within `F_N`: targets with column `> n_max`
/// dropped by the compression.
pub fn hopping_row(space: &FockSpace, m: u64, n_max: u64) -> Result<Vec<HopTerm>> {
    Ok(hopping_targets(space, m)?
        .into_iter()
        .filter(|t| t.col <= n_max)
        .collect())
}

/// Assemble `H = H_order - t * H_hop` on `F_N` as a sparse symmetric matrix.
///
/// `extra_diag(n)` is added to the diagonal of row `n`; it is how the
/// grand-canonical shift `-mu * Omega(n)` enters without touching the
/// structural pattern.
fn build_with_extra_diag(
    space: &FockSpace,
    params: &HamiltonianParams,
    extra_diag: impl Fn(u64) -> f64,
) -> Result<SparseSymmetricMatrix> {
    let n_max = params.n_max;
    if n_max > space.n_max() {
        return Err(Error::DimensionMismatch(format!(
            "params.n_max = {} exceeds space N = {}",
            n_max,
            space.n_max()
        )));
    }
    let dim = n_max as usize;
    let mut entries: Vec<(u32, u32, f64)> = Vec::with_capacity(4 * dim);
    let mut row_buf: Vec<(u32, f64)> = Vec::new();
    for m in 1..=n_max {
        let r = (m - 1) as u32;
        row_buf.clear();
        row_buf.push((r, diagonal_entry(space, m, params) + extra_diag(m)));
        if params.t != 0.0 {
            for term in hopping_row(space, m, n_max)? {
                if term.col > m {
                    row_buf.push(((term.col - 1) as u32, -params.t * term.coefficient()));
                }
            }
        }
        row_buf.sort_by_key(|&(c, _)| c);
        // merge any duplicate columns (distinct consecutive-prime moves never
        // collide, but accumulation is the safe semantics)
        for &(c, v) in row_buf.iter() {
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }
    }
    SparseSymmetricMatrix::from_upper_triplets(dim, entries)
}

/// The Bose-Hubbard Hamiltonian `H|_{F_N}`.
pub fn build_hamiltonian(
    space: &FockSpace,
    params: &HamiltonianParams,
) -> Result<SparseSymmetricMatrix> {
    build_with_extra_diag(space, params, |_| 0.0)
}

/// The grand-canonical combination `H - mu * N_hat` on `F_N`.
///
/// `H` already carries `-mu * Omega(n)` on its diagonal; the ensemble
/// subtracts the number operator once more, so the effective chemical
/// potential on the diagonal is `2 mu`.
pub fn build_grand_hamiltonian(
    space: &FockSpace,
    params: &HamiltonianParams,
) -> Result<SparseSymmetricMatrix> {
    build_with_extra_diag(space, params, |n| -params.mu * f64::from(space.omega(n)))
}

/// Compression of `H` to the single-particle block `span{delta_p : p <= N}`:
/// `-mu` on the diagonal and `-t` between consecutive primes.
pub fn single_particle_block(space: &FockSpace, params: &HamiltonianParams) -> TridiagonalMatrix {
    let n_sites = space
        .primes()
        .primes()
        .iter()
        .take_while(|&&p| p <= params.n_max)
        .count();
    TridiagonalMatrix {
        diag: vec![-params.mu; n_sites],
        off: vec![-params.t; n_sites.saturating_sub(1)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: u64) -> FockSpace {
        FockSpace::new(n).unwrap()
    }

    #[test]
    fn diagonal_entry_examples() {
        let sp = space(20);
        let params = HamiltonianParams::new(3.7, 1.2, 0.4, 20).unwrap();
        assert_eq!(diagonal_entry(&sp, 1, &params), 0.0);
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19] {
            assert!((diagonal_entry(&sp, p, &params) - (-1.2)).abs() < 1e-15);
        }
        let params = HamiltonianParams::new(10.0, 0.0, 0.0, 20).unwrap();
        assert!((diagonal_entry(&sp, 4, &params) - 10.0).abs() < 1e-15);
    }

    #[test]
    fn hopping_rows_match_the_two_site_moves() {
        let sp = space(20);
        let expect: [(u64, &[(u64, u64)]); 8] = [
            (1, &[]),
            (2, &[(3, 1)]),
            (3, &[(2, 1), (5, 1)]),
            (4, &[(6, 2)]),
            (5, &[(3, 1), (7, 1)]),
            (6, &[(4, 2), (9, 2), (10, 1)]),
            (7, &[(5, 1), (11, 1)]),
            (8, &[(12, 3)]),
        ];
        for (m, terms) in expect {
            let row = hopping_targets(&sp, m).unwrap();
            let got: Vec<(u64, u64)> = row.iter().map(|t| (t.col, t.radicand)).collect();
            assert_eq!(got.as_slice(), terms, "m={m}");
        }
    }

    #[test]
    fn hopping_row_truncates() {
        let sp = space(8);
        let row = hopping_row(&sp, 8, 8).unwrap();
        assert!(row.is_empty(), "8 -> 12 must be dropped at N=8");
        let row = hopping_row(&sp, 6, 8).unwrap();
        let got: Vec<(u64, u64)> = row.iter().map(|t| (t.col, t.radicand)).collect();
        assert_eq!(got, vec![(4, 2)]);
    }

    #[test]
    fn build_small_dense_example() {
        let sp = space(3);
        let params = HamiltonianParams::new(10.0, 0.0, 1.0, 3).unwrap();
        let h = build_hamiltonian(&sp, &params).unwrap();
        let d = h.to_dense();
        let expect = [0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, -1.0, 0.0];
        for (a, b) in d.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn build_n1_is_zero() {
        let sp = space(1);
        let params = HamiltonianParams::new(10.0, 2.0, 1.0, 1).unwrap();
        let h = build_hamiltonian(&sp, &params).unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.to_dense(), vec![0.0]);
    }

    #[test]
    fn row8_has_no_off_diagonal_at_n8() {
        let sp = space(8);
        let params = HamiltonianParams::new(10.0, 0.5, 1.0, 8).unwrap();
        let h = build_hamiltonian(&sp, &params).unwrap();
        let row7: Vec<_> = h
            .entries()
            .iter()
            .filter(|&&(r, c, _)| r == 7 || c == 7)
            .collect();
        assert_eq!(row7.len(), 1, "only the diagonal survives");
        // Omega(8) = Q(8)^(1/2)... structurally: (U/2)*9 - (U/2+mu)*3
        let expect = 0.5 * 10.0 * 9.0 - (0.5 * 10.0 + 0.5) * 3.0;
        assert!((row7[0].2 - expect).abs() < 1e-12);
    }

    #[test]
    fn structural_pattern_is_parameter_free() {
        let sp = space(60);
        let a = build_hamiltonian(&sp, &HamiltonianParams::new(7.0, -2.0, 0.3, 60).unwrap())
            .unwrap();
        let b = build_hamiltonian(&sp, &HamiltonianParams::new(-1.0, 5.0, -9.0, 60).unwrap())
            .unwrap();
        let pa: Vec<(u32, u32)> = a.entries().iter().map(|&(r, c, _)| (r, c)).collect();
        let pb: Vec<(u32, u32)> = b.entries().iter().map(|&(r, c, _)| (r, c)).collect();
        assert_eq!(pa, pb);
    }

    #[test]
    fn hopping_connects_equal_particle_numbers() {
        let sp = space(300);
        let params = HamiltonianParams::new(4.0, 1.0, 0.7, 300).unwrap();
        let h = build_hamiltonian(&sp, &params).unwrap();
        for &(r, c, _) in h.entries() {
            let (n, m) = (u64::from(r) + 1, u64::from(c) + 1);
            assert_eq!(sp.omega(n), sp.omega(m), "entry ({n},{m})");
        }
    }

    #[test]
    fn row_counts_lie_in_the_omega_window() {
        let sp = space(2000);
        for m in 1..=2000u64 {
            let w = sp.sieve().omega_distinct(m).unwrap() as usize;
            let targets = hopping_targets(&sp, m).unwrap();
            let count = targets.len() + 1; // diagonal is structural
            assert!(
                count > w && count <= 2 * w + 1,
                "m={m} count={count} omega={w}"
            );
        }
    }

    #[test]
    fn assembled_matrix_is_exactly_symmetric() {
        // every stored coupling must equal the one recomputed from the
        // partner row's own hopping terms
        let sp = space(400);
        let params = HamiltonianParams::new(3.0, -1.0, 2.0, 400).unwrap();
        let h = build_hamiltonian(&sp, &params).unwrap();
        for &(r, c, v) in h.entries() {
            if r == c {
                continue;
            }
            let (m, n) = (u64::from(r) + 1, u64::from(c) + 1);
            let back = hopping_row(&sp, n, 400)
                .unwrap()
                .into_iter()
                .find(|term| term.col == m)
                .expect("partner row must couple back");
            let vb = -params.t * back.coefficient();
            assert_eq!(v.to_bits(), vb.to_bits(), "({m},{n}) vs ({n},{m})");
        }
    }

    #[test]
    fn single_particle_block_examples() {
        let sp = space(10);
        let params = HamiltonianParams::new(5.0, 0.0, 1.0, 10).unwrap();
        let block = single_particle_block(&sp, &params);
        assert_eq!(block.diag, vec![0.0; 4]);
        assert_eq!(block.off, vec![-1.0; 3]);

        let sp2 = space(2);
        let params = HamiltonianParams::new(5.0, 3.0, 1.0, 2).unwrap();
        let block = single_particle_block(&sp2, &params);
        assert_eq!(block.diag, vec![-3.0]);
        assert!(block.off.is_empty());

        let params = HamiltonianParams::new(5.0, 2.0, 0.0, 10).unwrap();
        let block = single_particle_block(&sp, &params);
        assert_eq!(block.diag, vec![-2.0; 4]);
        assert_eq!(block.off, vec![0.0; 3]);
    }

    #[test]
    fn single_particle_block_is_the_prime_compression() {
        let sp = space(50);
        let params = HamiltonianParams::new(9.0, 1.5, 0.8, 50).unwrap();
        let h = build_hamiltonian(&sp, &params).unwrap();
        let dense = h.to_dense();
        let block = single_particle_block(&sp, &params);
        let primes: Vec<u64> = sp
            .primes()
            .primes()
            .iter()
            .copied()
            .take_while(|&p| p <= 50)
            .collect();
        assert_eq!(block.dim(), primes.len());
        for (i, &p) in primes.iter().enumerate() {
            for (j, &q) in primes.iter().enumerate() {
                let full = dense[(p as usize - 1) * 50 + (q as usize - 1)];
                let compressed = if i == j {
                    block.diag[i]
                } else if j == i + 1 {
                    block.off[i]
                } else if i == j + 1 {
                    block.off[j]
                } else {
                    0.0
                };
                assert!((full - compressed).abs() < 1e-15, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn grand_hamiltonian_shifts_the_diagonal_only() {
        let sp = space(40);
        let params = HamiltonianParams::new(6.0, 1.3, 0.4, 40).unwrap();
        let h = build_hamiltonian(&sp, &params).unwrap();
        let k = build_grand_hamiltonian(&sp, &params).unwrap();
        for (&(r1, c1, v1), &(r2, c2, v2)) in h.entries().iter().zip(k.entries()) {
            assert_eq!((r1, c1), (r2, c2));
            if r1 == c1 {
                let expect = v1 - params.mu * f64::from(sp.omega(u64::from(r1) + 1));
                assert!((v2 - expect).abs() < 1e-12);
            } else {
                assert_eq!(v1.to_bits(), v2.to_bits());
            }
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let sp = space(30);
        let params = HamiltonianParams::new(2.0, 0.7, 1.1, 30).unwrap();
        let h = build_hamiltonian(&sp, &params).unwrap();
        let dense = h.to_dense();
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = h.matvec(&x);
        for r in 0..30 {
            let mut acc = 0.0;
            for c in 0..30 {
                acc += dense[r * 30 + c] * x[c];
            }
            assert!((y[r] - acc).abs() < 1e-12);
        }
    }
}

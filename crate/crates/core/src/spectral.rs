//! Symmetric eigendecomposition of `H|_{F_N}` and derived observables.
//!
//! Two solver regimes cover the sizes that matter here: a dense Householder
//! tridiagonalization followed by implicit-shift QL for full spectra up to a
//! few thousand rows, and Lanczos with full reorthogonalization when only a
//! handful of extreme eigenpairs of a larger sparse matrix are needed.
//!
//! The single-particle block of the chain is a symmetric tridiagonal Toeplitz
//! matrix whose spectrum is known in closed form,
//!
//! ```text
//! E_k = -mu - 2 t cos(k pi / (S + 1)),   k = 1..S,   S = pi(N),
//! ```
//!
//! which doubles as an independent cross-check of the solvers.

mod dense;
mod lanczos;

pub use dense::{symmetric_eigen_dense, tridiagonal_eigen};
pub use lanczos::{lanczos_smallest, LanczosOptions};

use num_complex::Complex64;

use crate::fock::{FockSpace, StateVector};
use crate::hamiltonian::{
    build_hamiltonian, HamiltonianParams, SparseSymmetricMatrix, TridiagonalMatrix,
};
use crate::{Error, Result};

/// Matrix dimension up to which full dense solves are the default strategy.
pub const DENSE_LIMIT: usize = 2000;

/// Relative gap below which two levels are reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// How many eigenpairs to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenCount {
    All,
    Smallest(usize),
}

/// Ascending eigenpairs with their residual norms.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<StateVector>,
    residuals: Vec<f64>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors aligned with [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &[StateVector] {
        &self.eigenvectors
    }

    /// Residual norms `|| H v - E v ||` per pair.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, &b| a.max(b))
    }
}

/// Fix the overall sign so the largest-magnitude component is positive.
fn sign_fix(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn to_state(v: &[f64]) -> StateVector {
    StateVector::from_amplitudes(v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
}

fn spectrum_from_real(
    h: &SparseSymmetricMatrix,
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
) -> SpectrumResult {
    let mut eigenvectors = Vec::with_capacity(vectors.len());
    let mut residuals = Vec::with_capacity(vectors.len());
    for (value, mut vec) in values.iter().zip(vectors) {
        sign_fix(&mut vec);
        let hv = h.matvec(&vec);
        let res = hv
            .iter()
            .zip(vec.iter())
            .map(|(a, b)| (a - value * b) * (a - value * b))
            .sum::<f64>()
            .sqrt();
        residuals.push(res);
        eigenvectors.push(to_state(&vec));
    }
    SpectrumResult {
        eigenvalues: values,
        eigenvectors,
        residuals,
    }
}

/// Solve for eigenpairs of a sparse symmetric matrix.
///
/// `All` (and small matrices generally) take the dense route; `Smallest(k)`
/// above [`DENSE_LIMIT`] switches to Lanczos.
pub fn eigensolve(h: &SparseSymmetricMatrix, count: EigenCount) -> Result<SpectrumResult> {
    let dim = h.dim();
    match count {
        EigenCount::All => {
            let (values, vectors) = symmetric_eigen_dense(h.to_dense(), dim, true)?;
            let vectors = columns_of(vectors.expect("vectors requested"), dim);
            Ok(spectrum_from_real(h, values, vectors))
        }
        EigenCount::Smallest(k) => {
            let k = k.min(dim);
            if dim <= DENSE_LIMIT || k == dim {
                let (values, vectors) = symmetric_eigen_dense(h.to_dense(), dim, true)?;
                let vectors = columns_of(vectors.expect("vectors requested"), dim);
                let values = values[..k].to_vec();
                let vectors = vectors[..k].to_vec();
                Ok(spectrum_from_real(h, values, vectors))
            } else {
                let (values, vectors, _iters) =
                    lanczos_smallest(h, k, &LanczosOptions::default())?;
                Ok(spectrum_from_real(h, values, vectors))
            }
        }
    }
}

/// All eigenvalues, ascending, without accumulating eigenvectors.
pub fn eigenvalues(h: &SparseSymmetricMatrix) -> Result<Vec<f64>> {
    let (values, _) = symmetric_eigen_dense(h.to_dense(), h.dim(), false)?;
    Ok(values)
}

/// Eigenvalues of a symmetric tridiagonal matrix, ascending.
pub fn tridiagonal_eigenvalues(t: &TridiagonalMatrix) -> Result<Vec<f64>> {
    let (values, _) = tridiagonal_eigen(&t.diag, &t.off, false)?;
    Ok(values)
}

fn columns_of(z: Vec<f64>, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| (0..n).map(|i| z[i * n + k]).collect())
        .collect()
}

/// Energy gap `E_1 - E_0` of the assembled Hamiltonian.
pub fn gap(space: &FockSpace, params: &HamiltonianParams) -> Result<f64> {
    if params.n_max < 2 {
        return Err(Error::InvalidParameter(
            "gap needs a space of dimension >= 2".into(),
        ));
    }
    let h = build_hamiltonian(space, params)?;
    let ev = eigenvalues(&h)?;
    Ok(ev[1] - ev[0])
}

/// Closed-form spectrum of the single-particle block, ascending.
pub fn single_particle_spectrum(space: &FockSpace, params: &HamiltonianParams) -> Vec<f64> {
    let s = space
        .primes()
        .primes()
        .iter()
        .take_while(|&&p| p <= params.n_max)
        .count();
    let mut out: Vec<f64> = (1..=s)
        .map(|k| {
            let angle = std::f64::consts::PI * k as f64 / (s as f64 + 1.0);
            -params.mu - 2.0 * params.t * angle.cos()
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Ground-state energy and particle-number expectation.
#[derive(Debug, Clone)]
pub struct GroundState {
    /// `E_0`.
    pub energy: f64,
    /// `<N>` of the reported ground eigenvector.
    pub expected_n: f64,
    /// Whether `E_1 - E_0` fell below the degeneracy tolerance.
    pub degenerate: bool,
    /// `<N>` of every state inside the degenerate eigenspace (length 1 when
    /// the ground state is simple).
    pub eigenspace_expected_n: Vec<f64>,
}

/// Ground-state observables of `H` built from `params`.
///
/// Degenerate ground spaces (relative gap below [`DEGENERACY_TOL`]) are not
/// silently resolved: the expectation of every member state is reported and
/// the degeneracy flagged.
pub fn ground_state_observable(
    space: &FockSpace,
    params: &HamiltonianParams,
) -> Result<GroundState> {
    let h = build_hamiltonian(space, params)?;
    let spectrum = if h.dim() <= DENSE_LIMIT {
        eigensolve(&h, EigenCount::All)?
    } else {
        eigensolve(&h, EigenCount::Smallest(8))?
    };
    ground_state_from_spectrum(space, &spectrum)
}

/// Extract the ground-state report from an already computed spectrum.
pub fn ground_state_from_spectrum(
    space: &FockSpace,
    spectrum: &SpectrumResult,
) -> Result<GroundState> {
    if spectrum.is_empty() {
        return Err(Error::InvalidParameter("empty spectrum".into()));
    }
    let e0 = spectrum.eigenvalues()[0];
    let tol = DEGENERACY_TOL * e0.abs().max(1.0);
    let mut eigenspace_expected_n = Vec::new();
    for (i, value) in spectrum.eigenvalues().iter().enumerate() {
        if value - e0 < tol {
            eigenspace_expected_n
                .push(space.expected_particle_number(&spectrum.eigenvectors()[i])?);
        } else {
            break;
        }
    }
    Ok(GroundState {
        energy: e0,
        expected_n: eigenspace_expected_n[0],
        degenerate: eigenspace_expected_n.len() > 1,
        eigenspace_expected_n,
    })
}

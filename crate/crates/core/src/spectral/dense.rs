//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by the implicit-shift QL iteration, optionally accumulating the
//! orthogonal transforms into eigenvectors.

use crate::{Error, Result};

/// Householder reduction of a symmetric matrix (row-major, length `n * n`)
/// to tridiagonal form.
///
/// On exit `d` holds the diagonal and `e[1..]` the subdiagonal
/// (`e[i]` couples rows `i - 1` and `i`). With `with_vectors` the matrix is
/// overwritten by the accumulated orthogonal transform `Q`, so that
/// `Q^T A Q` is tridiagonal.
fn householder_tridiag(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64], with_vectors: bool) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    if with_vectors {
                        a[j * n + i] = a[i * n + j] / h;
                    }
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g_acc += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let fj = a[i * n + j];
                    let gj = e[j] - hh * fj;
                    e[j] = gj;
                    for k in 0..=j {
                        a[j * n + k] -= fj * e[k] + gj * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    e[0] = 0.0;
    if with_vectors {
        d[0] = 0.0;
        for i in 0..n {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += a[i * n + k] * a[k * n + j];
                    }
                    for k in 0..i {
                        a[k * n + j] -= g * a[k * n + i];
                    }
                }
            }
            d[i] = a[i * n + i];
            a[i * n + i] = 1.0;
            for j in 0..i {
                a[j * n + i] = 0.0;
                a[i * n + j] = 0.0;
            }
        }
    } else {
        for i in 0..n {
            d[i] = a[i * n + i];
        }
    }
}

/// Implicit-shift QL iteration on a tridiagonal matrix.
///
/// Input: `d` diagonal, `e[i]` couples rows `i - 1` and `i` (`e[0]` unused).
/// `z`, when present, is an `n * n` matrix whose columns are rotated along;
/// pass the identity to get tridiagonal eigenvectors or the Householder `Q`
/// to get eigenvectors of the original dense matrix.
fn ql_implicit(d: &mut [f64], e: &mut [f64], n: usize, mut z: Option<&mut [f64]>) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = g + if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        f = z[k * n + i + 1];
                        z[k * n + i + 1] = s * z[k * n + i] + c * f;
                        z[k * n + i] = c * z[k * n + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn sort_pairs(d: &mut [f64], z: Option<&mut Vec<f64>>, n: usize) {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    d.copy_from_slice(&sorted);
    if let Some(z) = z {
        let old = z.clone();
        for (new_col, &old_col) in order.iter().enumerate() {
            for row in 0..n {
                z[row * n + new_col] = old[row * n + old_col];
            }
        }
    }
}

/// Full eigendecomposition of a dense symmetric matrix (row-major).
///
/// Returns ascending eigenvalues and, when requested, the matrix whose
/// column `k` is the eigenvector of the `k`-th eigenvalue.
pub fn symmetric_eigen_dense(
    mut a: Vec<f64>,
    n: usize,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    assert_eq!(a.len(), n * n, "matrix buffer must be n*n");
    if n == 0 {
        return Ok((Vec::new(), if want_vectors { Some(Vec::new()) } else { None }));
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiag(&mut a, n, &mut d, &mut e, want_vectors);
    if want_vectors {
        ql_implicit(&mut d, &mut e, n, Some(&mut a))?;
        sort_pairs(&mut d, Some(&mut a), n);
        Ok((d, Some(a)))
    } else {
        ql_implicit(&mut d, &mut e, n, None)?;
        sort_pairs(&mut d, None, n);
        Ok((d, None))
    }
}

/// Eigendecomposition of a symmetric tridiagonal matrix given by its
/// diagonal and subdiagonal.
pub fn tridiagonal_eigen(
    diag: &[f64],
    off: &[f64],
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let n = diag.len();
    assert!(
        n == 0 || off.len() == n - 1,
        "off-diagonal must have n - 1 entries"
    );
    if n == 0 {
        return Ok((Vec::new(), if want_vectors { Some(Vec::new()) } else { None }));
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[1..].copy_from_slice(off);
    if want_vectors {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        ql_implicit(&mut d, &mut e, n, Some(&mut z))?;
        sort_pairs(&mut d, Some(&mut z), n);
        Ok((d, Some(z)))
    } else {
        ql_implicit(&mut d, &mut e, n, None)?;
        sort_pairs(&mut d, None, n);
        Ok((d, None))
    }
}

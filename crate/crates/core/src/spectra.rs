//! Spectral primitives: full symmetric eigendecomposition, eigenvalue
//! counting, resolvent rows, and norm queries.
//!
//! The eigensolver reduces a dense symmetric matrix to tridiagonal form by
//! Householder reflections and diagonalizes the tridiagonal matrix with the
//! implicit-shift QL iteration. Matrices that are already tridiagonal
//! (symbols of bandwidth ≤ 1, which includes every `a + b·cos k` model)
//! skip the reduction entirely, turning the `O(n³)` decomposition into
//! `O(n²)` — the dominant cost saving of the whole Monte Carlo pipeline.
//!
//! Resolvent rows `u = (A − z)⁻¹ e_source` are computed by complex Gaussian
//! elimination with partial pivoting, again with a tridiagonal fast path,
//! and every solve is verified against the explicit residual contract
//! before being returned.

use num_complex::Complex64;

use crate::operators::SymmetricMatrix;
use crate::{Error, Result};

/// Eigenvalues in ascending order, with optional orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Row `j` of the stored matrix is the eigenvector for `eigenvalues[j]`.
    vectors: Option<Vec<f64>>,
    dim: usize,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_vectors(&self) -> bool {
        self.vectors.is_some()
    }

    /// Eigenvector for `eigenvalues[j]`.
    pub fn vector(&self, j: usize) -> &[f64] {
        let v = self.vectors.as_ref().expect("decomposition was computed without vectors");
        &v[j * self.dim..(j + 1) * self.dim]
    }

    /// Test/diagnostic constructor from a bare spectrum.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let dim = eigenvalues.len();
        SpectralDecomposition { eigenvalues, vectors: None, dim }
    }
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Backward-stable: each returned value is an exact eigenvalue of `A + E`
/// with `‖E‖ = O(dim · ε · ‖A‖)`. Non-finite entries and asymmetry beyond
/// tolerance are rejected.
pub fn eigh(a: &SymmetricMatrix, want_vectors: bool) -> Result<SpectralDecomposition> {
    a.validate()?;
    let n = a.dim();
    if n == 0 {
        return Ok(SpectralDecomposition { eigenvalues: vec![], vectors: None, dim: 0 });
    }

    let mut d;
    let mut e;
    let mut vt: Option<Vec<f64>>;
    if a.half_bandwidth() <= 1 {
        d = (0..n).map(|i| a.get(i, i)).collect::<Vec<_>>();
        e = vec![0.0; n];
        for i in 1..n {
            e[i] = a.get(i, i - 1);
        }
        vt = want_vectors.then(|| identity_rows(n));
    } else {
        let mut work = a.data().to_vec();
        d = vec![0.0; n];
        e = vec![0.0; n];
        tred2(&mut work, n, &mut d, &mut e, want_vectors);
        vt = want_vectors.then(|| transpose(&work, n));
    }

    tql2(&mut d, &mut e, vt.as_deref_mut(), n)?;

    // Ascending sort, permuting eigenvector rows along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = vt.map(|rows| {
        let mut sorted = vec![0.0; n * n];
        for (dst, &src) in order.iter().enumerate() {
            sorted[dst * n..(dst + 1) * n].copy_from_slice(&rows[src * n..(src + 1) * n]);
        }
        sorted
    });
    Ok(SpectralDecomposition { eigenvalues, vectors, dim: n })
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(a: &SymmetricMatrix) -> Result<Vec<f64>> {
    Ok(eigh(a, false)?.eigenvalues)
}

/// Number of eigenvalues strictly above `lambda` (ties excluded).
pub fn count_above(lambda: f64, dec: &SpectralDecomposition) -> usize {
    let idx = dec.eigenvalues.partition_point(|&v| v <= lambda);
    dec.eigenvalues.len() - idx
}

/// Largest eigenvalue.
pub fn top_eigenvalue(a: &SymmetricMatrix) -> Result<f64> {
    let vals = eigenvalues(a)?;
    vals.last().copied().ok_or_else(|| Error::Validation("empty matrix".into()))
}

/// Spectral norm `max |λ|`.
pub fn operator_norm(a: &SymmetricMatrix) -> Result<f64> {
    let vals = eigenvalues(a)?;
    match (vals.first(), vals.last()) {
        (Some(lo), Some(hi)) => Ok(lo.abs().max(hi.abs())),
        _ => Err(Error::Validation("empty matrix".into())),
    }
}

/// Solves `(A − z)u = e_source` for `Im z > 0` and returns `u`, so that
/// `u[m]` is the resolvent entry from `source` to `m`.
///
/// The solution is accepted only if the residual satisfies
/// `‖(A−z)u − e‖ ≤ 1e−10 · (1 + ‖A‖/Im z)` (with the row-sum norm standing
/// in for `‖A‖`); otherwise the solver reports breakdown.
pub fn resolvent_row(
    a: &SymmetricMatrix,
    z: Complex64,
    source: usize,
) -> Result<Vec<Complex64>> {
    if !(z.im > 0.0) {
        return Err(Error::Validation(format!("spectral parameter must have Im z > 0, got {z}")));
    }
    let n = a.dim();
    if source >= n {
        return Err(Error::Validation(format!("source index {source} out of range for dim {n}")));
    }
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    rhs[source] = Complex64::new(1.0, 0.0);

    let u = if a.half_bandwidth() <= 1 {
        let dd: Vec<Complex64> = (0..n).map(|i| Complex64::new(a.get(i, i), 0.0) - z).collect();
        let off: Vec<f64> = (1..n).map(|i| a.get(i, i - 1)).collect();
        solve_tridiag_complex(&dd, &off, rhs)?
    } else {
        let mut m = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = Complex64::new(a.get(i, j), 0.0);
            }
            m[i * n + i] -= z;
        }
        lu_solve_complex(&mut m, n, rhs)?
    };

    // Residual contract.
    let mut resid2 = 0.0;
    for i in 0..n {
        let mut acc = -u[i] * z;
        let row = a.row(i);
        for (j, &aij) in row.iter().enumerate() {
            if aij != 0.0 {
                acc += aij * u[j];
            }
        }
        if i == source {
            acc -= Complex64::new(1.0, 0.0);
        }
        resid2 += acc.norm_sqr();
    }
    let row_sum_norm = (0..n)
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let allowed = 1e-10 * (1.0 + row_sum_norm / z.im);
    if resid2.sqrt() > allowed {
        return Err(Error::Numeric(format!(
            "resolvent solve residual {:.3e} exceeds contract {:.3e}",
            resid2.sqrt(),
            allowed
        )));
    }
    Ok(u)
}

fn identity_rows(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    v
}

fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

/// Householder reduction of a symmetric matrix (row-major in `a`) to
/// tridiagonal form; diagonal in `d`, subdiagonal in `e[1..]`.
///
/// When `want_vectors` is set, `a` is overwritten with the accumulated
/// orthogonal transform (columns are the basis change). The symmetric
/// matrix–vector product in the inner loop walks only the lower triangle
/// row by row, which keeps the eigenvalue-only reduction cache-friendly at
/// dimensions in the thousands.
fn tred2(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64], want_vectors: bool) {
    let mut p = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i; // active block is 0..l
        let mut h = 0.0;
        if l > 1 {
            let scale: f64 = a[i * n..i * n + l].iter().map(|v| v.abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l - 1];
            } else {
                for k in 0..l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l - 1];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l - 1] = f - g;

                // p = A·u over the active block, accumulated from the lower
                // triangle in a single row sweep.
                p[..l].fill(0.0);
                for j in 0..l {
                    let uj = a[i * n + j];
                    if want_vectors {
                        a[j * n + i] = uj / h;
                    }
                    let mut acc = 0.0;
                    let row = &a[j * n..j * n + j + 1];
                    for k in 0..j {
                        acc += row[k] * a[i * n + k];
                        p[k] += row[k] * uj;
                    }
                    p[j] += acc + row[j] * uj;
                }
                let mut f_acc = 0.0;
                for j in 0..l {
                    e[j] = p[j] / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..l {
                    e[j] -= hh * a[i * n + j];
                }
                for j in 0..l {
                    let fj = a[i * n + j];
                    let gj = e[j];
                    for k in 0..=j {
                        a[j * n + k] -= fj * e[k] + gj * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l - 1];
        }
        d[i] = h;
    }

    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if want_vectors {
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
        } else {
            d[i] = a[i * n + i];
        }
    }
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix
/// (`d` diagonal, `e[1..]` subdiagonal). If `vt` is given, its rows are
/// rotated along, so on exit row `j` of `vt` is the eigenvector of `d[j]`.
fn tql2(d: &mut [f64], e: &mut [f64], mut vt: Option<&mut [f64]>, n: usize) -> Result<()> {
    if n <= 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    // Deflation threshold against the whole tridiagonal norm (not just the
    // local 2×2 scale): spectra with eigenvalue clusters spanning many
    // orders of magnitude (plateau symbols) otherwise stall the shift
    // strategy chasing subdiagonals far below the backward-error level.
    let anorm = (0..n)
        .map(|i| {
            d[i].abs()
                + if i > 0 { e[i - 1].abs() } else { 0.0 }
                + if i < n - 1 { e[i].abs() } else { 0.0 }
        })
        .fold(0.0f64, f64::max);
    let deflate = f64::EPSILON * anorm.max(f64::MIN_POSITIVE);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= deflate {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 80 {
                return Err(Error::Numeric(format!(
                    "QL iteration failed to converge at index {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
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
                if let Some(rows) = vt.as_deref_mut() {
                    let (lo, hi) = rows.split_at_mut((i + 1) * n);
                    let row_i = &mut lo[i * n..(i + 1) * n];
                    let row_i1 = &mut hi[..n];
                    for k in 0..n {
                        f = row_i1[k];
                        row_i1[k] = s * row_i[k] + c * f;
                        row_i[k] = c * row_i[k] - s * f;
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

/// Gaussian elimination with partial pivoting for a complex tridiagonal
/// system. `dd` is the (already shifted) diagonal, `off` the symmetric
/// off-diagonal; pivoting introduces one extra superdiagonal of fill-in.
fn solve_tridiag_complex(
    dd: &[Complex64],
    off: &[f64],
    mut b: Vec<Complex64>,
) -> Result<Vec<Complex64>> {
    let n = dd.len();
    if n == 1 {
        if dd[0].norm() == 0.0 {
            return Err(Error::Numeric("singular 1x1 system".into()));
        }
        b[0] /= dd[0];
        return Ok(b);
    }
    let zero = Complex64::new(0.0, 0.0);
    let dl: Vec<Complex64> = off.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut du = dl.clone();
    let mut d: Vec<Complex64> = dd.to_vec();
    let mut du2 = vec![zero; n.saturating_sub(2)];

    for i in 0..n - 1 {
        if dl[i].norm() == 0.0 && d[i].norm() == 0.0 {
            return Err(Error::Numeric(format!("singular tridiagonal pivot at {i}")));
        }
        if d[i].norm() >= dl[i].norm() {
            if d[i].norm() == 0.0 {
                return Err(Error::Numeric(format!("zero pivot at {i}")));
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            let bi = b[i];
            b[i + 1] -= fact * bi;
            if i < n - 2 {
                du2[i] = zero;
            }
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i < n - 2 {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            b.swap(i, i + 1);
            let bi = b[i];
            b[i + 1] -= fact * bi;
        }
    }
    if d[n - 1].norm() == 0.0 {
        return Err(Error::Numeric("singular trailing pivot".into()));
    }
    let mut x = vec![zero; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    if n >= 2 {
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    Ok(x)
}

/// Complex dense LU solve with partial pivoting. `a` (row-major) is
/// consumed as workspace.
pub(crate) fn lu_solve_complex(
    a: &mut [Complex64],
    n: usize,
    mut b: Vec<Complex64>,
) -> Result<Vec<Complex64>> {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm();
        for r in col + 1..n {
            let v = a[r * n + col].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return Err(Error::Numeric(format!("singular matrix at column {col}")));
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            a[r * n + col] = factor;
            for j in col + 1..n {
                let v = a[col * n + j];
                a[r * n + j] -= factor * v;
            }
            let bc = b[col];
            b[r] -= factor * bc;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= a[i * n + j] * x[j];
        }
        x[i] = acc / a[i * n + i];
    }
    Ok(x)
}

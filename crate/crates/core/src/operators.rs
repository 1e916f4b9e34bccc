//! Finite matrix models.
//!
//! Two kinds of finite model are built from a symbol `φ` and a coupling
//! window `κ`:
//!
//! - **Truncations**: the `(2N+1) × (2N+1)` matrix
//!   `Q = {√κ_n φ̂_{n−m} √κ_m}` over the lattice window `[−N, N]`, whose
//!   normalized eigenvalue counting measures converge to the IDS. The Gram
//!   truncation is the special case `κ ≡ 1`.
//! - **Circulant pairs**: periodic stand-ins where the algebra
//!   `C_θ² = C_φ` holds exactly, so the trace, moment-transfer, resolvent
//!   and shift-covariance identities can be checked to rounding rather than
//!   asymptotically. `C_φ`, `C_θ` are circulants whose eigenvalues are the
//!   symbol samples `φ(2πl/M)`, `√φ(2πl/M)`.
//!
//! Index convention, used everywhere: the lattice window `[−N, N]` maps to
//! matrix indices `0..2N`, so the center index `N` is lattice site `0`.
//!
//! The spectral-edge analysis additionally uses `L × L` blocks with
//! Neumann/Dirichlet-type boundary corners that bracket the periodic
//! operator from below and above.

use std::io::Write;

use crate::symbols::Symbol;
use crate::util::inverse_dft_real;
use crate::{Error, Result};

/// Relative symmetry tolerance for [`SymmetricMatrix::validate`].
const SYMMETRY_TOL: f64 = 1e-14;

/// Dense real symmetric matrix, row-major full storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix { dim, data: vec![0.0; dim * dim] }
    }

    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle and
    /// mirroring, so the result is symmetric by construction.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymmetricMatrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = SymmetricMatrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest `|i − j|` with a nonzero entry. Solvers use this to pick
    /// banded fast paths; off-band entries of the builders below are exact
    /// zeros, so the scan is reliable.
    pub fn half_bandwidth(&self) -> usize {
        let mut b = 0;
        for i in 0..self.dim {
            for j in (i + b + 1)..self.dim {
                if self.data[i * self.dim + j] != 0.0 {
                    b = j - i;
                }
            }
        }
        b
    }

    /// Checks finiteness and symmetry to relative tolerance.
    pub fn validate(&self) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        let scale = self.max_abs();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let d = (self.data[i * self.dim + j] - self.data[j * self.dim + i]).abs();
                if d > SYMMETRY_TOL * scale.max(1.0) {
                    return Err(Error::Validation(format!(
                        "asymmetry {d:.3e} at ({i},{j}) exceeds tolerance"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let row = self.row(i);
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Plain-text dump `dim\nrow col value\n...` of the nonzero entries.
    pub fn write_market(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.dim)?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.get(i, j);
                if v != 0.0 {
                    writeln!(w, "{i} {j} {v:.17e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Dense product of two equally sized square matrices (row-major slices).
pub(crate) fn mat_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            let crow = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                crow[j] += aik * brow[j];
            }
        }
    }
    c
}

/// Trace of the `m`-th power.
pub fn trace_power(mat: &SymmetricMatrix, m: usize) -> f64 {
    let n = mat.dim();
    assert!(m >= 1);
    let mut acc = mat.data().to_vec();
    for _ in 1..m {
        acc = mat_mul(n, &acc, mat.data());
    }
    (0..n).map(|i| acc[i * n + i]).sum()
}

fn require_positive_couplings(kappa: &[f64]) -> Result<()> {
    if kappa.is_empty() {
        return Err(Error::Validation("empty coupling window".into()));
    }
    if let Some(bad) = kappa.iter().find(|&&k| !(k > 0.0) || !k.is_finite()) {
        return Err(Error::Validation(format!(
            "couplings must be strictly positive and finite, got {bad}"
        )));
    }
    Ok(())
}

fn require_real_coeffs(sym: &Symbol) -> Result<()> {
    if !sym.has_real_coeffs() {
        return Err(Error::Validation(
            "matrix builders require real Fourier coefficients (even symbol)".into(),
        ));
    }
    Ok(())
}

/// The coupled truncation `{√κ_i φ̂_{i−j} √κ_j}` over a window of
/// `kappa.len()` lattice sites.
///
/// Off-band entries (`|i−j|` beyond the symbol bandwidth) are exact zeros.
pub fn build_q(sym: &Symbol, kappa: &[f64]) -> Result<SymmetricMatrix> {
    require_real_coeffs(sym)?;
    require_positive_couplings(kappa)?;
    let dim = kappa.len();
    let sqrt_k: Vec<f64> = kappa.iter().map(|k| k.sqrt()).collect();
    let mut m = SymmetricMatrix::zeros(dim);
    let band = sym.bandwidth().min(dim.saturating_sub(1));
    for i in 0..dim {
        // Diagonal as κ_i·φ̂_0 directly: exact, and it keeps the finite
        // first-moment identity Tr Q = φ̂_0 Σ κ_n free of rounding.
        let c0 = sym.coeff(0).re;
        if c0 != 0.0 {
            m.set(i, i, kappa[i] * c0);
        }
        for j in (i + 1)..(i + band + 1).min(dim) {
            let c = sym.coeff((j - i) as i64).re;
            if c != 0.0 {
                m.set(i, j, sqrt_k[i] * c * sqrt_k[j]);
            }
        }
    }
    Ok(m)
}

/// The Gram truncation over `2N+1` sites: [`build_q`] with `κ ≡ 1`.
pub fn build_gram(sym: &Symbol, half_width: usize) -> Result<SymmetricMatrix> {
    build_q(sym, &vec![1.0; 2 * half_width + 1])
}

/// Exact periodic realizations of the coupled operator.
///
/// `c_phi` and `c_theta` are circulants sampled from `φ` and `√φ` at the
/// `M`-th roots of unity, so `c_theta² = c_phi` to rounding. The pair
/// carries both products:
///
/// ```text
///     P = C_θ · diag(κ) · C_θ        (sum-of-projections side)
///     Q = diag(√κ) · C_φ · diag(√κ)  (multiplicative-perturbation side)
/// ```
#[derive(Debug, Clone)]
pub struct CirculantPair {
    pub size: usize,
    pub p_mat: SymmetricMatrix,
    pub q_mat: SymmetricMatrix,
    pub kappa: Vec<f64>,
    pub c_phi: SymmetricMatrix,
    pub c_theta: SymmetricMatrix,
}

impl CirculantPair {
    /// Max-norm residual of the defining identity `C_θ² = C_φ`.
    pub fn theta_squared_residual(&self) -> f64 {
        let n = self.size;
        let sq = mat_mul(n, self.c_theta.data(), self.c_theta.data());
        let mut r: f64 = 0.0;
        for (a, b) in sq.iter().zip(self.c_phi.data()) {
            r = r.max((a - b).abs());
        }
        r
    }

    /// The vector `ψ_n = C_θ δ_n` (column `n` of `C_θ`).
    pub fn psi(&self, n: usize) -> Vec<f64> {
        (0..self.size).map(|i| self.c_theta.get(i, n)).collect()
    }
}

/// Builds a circulant from the symmetric first row `row`.
fn circulant_from_row(row: &[f64]) -> SymmetricMatrix {
    let m = row.len();
    SymmetricMatrix::from_fn(m, |i, j| row[(j + m - i) % m])
}

/// Symmetrizes a circulant row in place: `row[j] = row[M−j]`.
fn symmetrize_row(row: &mut [f64]) {
    let m = row.len();
    for j in 1..=(m / 2) {
        let avg = 0.5 * (row[j] + row[m - j]);
        row[j] = avg;
        row[m - j] = avg;
    }
}

/// Samples `φ` and `√φ` at the `M`-th roots of unity (`M = kappa.len()`,
/// a power of two at least `4·bandwidth`) and assembles the circulant pair.
///
/// Small negative samples (at most `1e−6` in magnitude, truncation
/// undershoot) are clipped to zero before the square root; anything more
/// negative is rejected.
pub fn build_circulant_pair(sym: &Symbol, kappa: &[f64]) -> Result<CirculantPair> {
    require_real_coeffs(sym)?;
    require_positive_couplings(kappa)?;
    let m = kappa.len();
    if !m.is_power_of_two() || m < 4 || m < 4 * sym.bandwidth() {
        return Err(Error::Validation(format!(
            "circulant size must be a power of two >= max(4, 4*bandwidth), got M = {m} \
             for bandwidth {}",
            sym.bandwidth()
        )));
    }
    let mut phi_samples = Vec::with_capacity(m);
    for l in 0..m {
        let k = 2.0 * std::f64::consts::PI * l as f64 / m as f64;
        let v = sym.evaluate(k);
        if v < -1e-6 {
            return Err(Error::Validation(format!(
                "symbol is negative ({v}) on the circulant grid"
            )));
        }
        phi_samples.push(v.max(0.0));
    }
    let theta_samples: Vec<f64> = phi_samples.iter().map(|v| v.sqrt()).collect();

    let mut phi_row = inverse_dft_real(&phi_samples);
    let mut theta_row = inverse_dft_real(&theta_samples);
    symmetrize_row(&mut phi_row);
    symmetrize_row(&mut theta_row);
    let c_phi = circulant_from_row(&phi_row);
    let c_theta = circulant_from_row(&theta_row);

    let sqrt_k: Vec<f64> = kappa.iter().map(|k| k.sqrt()).collect();
    // P = C_θ κ C_θ
    let mut scaled = c_theta.data().to_vec();
    for row in scaled.chunks_mut(m) {
        for (j, v) in row.iter_mut().enumerate() {
            *v *= kappa[j];
        }
    }
    let p_raw = mat_mul(m, &scaled, c_theta.data());
    let p_mat = SymmetricMatrix::from_fn(m, |i, j| 0.5 * (p_raw[i * m + j] + p_raw[j * m + i]));
    // Q = √κ C_φ √κ
    let q_mat = SymmetricMatrix::from_fn(m, |i, j| sqrt_k[i] * c_phi.get(i, j) * sqrt_k[j]);

    Ok(CirculantPair { size: m, p_mat, q_mat, kappa: kappa.to_vec(), c_phi, c_theta })
}

/// Boundary condition of a bracketing block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Neumann,
    Dirichlet,
}

/// The `L × L` Jacobi blocks with sub/super-diagonal 1 and corner diagonal
/// entries `∓1`:
///
/// ```text
///     J_N: diag −1, 0, …, 0, −1      J_D: diag 1, 0, …, 0, 1
/// ```
///
/// Their spectra are `−2cos(πk/L)` (Dirichlet, `k = 1..L`) and
/// `−2cos(π(k−1)/L)` (Neumann), and `J_D − J_N = diag(2, 0, …, 0, 2) ⪰ 0`.
pub fn build_jacobi_blocks(block_size: usize) -> Result<(SymmetricMatrix, SymmetricMatrix)> {
    if block_size < 2 {
        return Err(Error::Validation(format!(
            "bracketing blocks need size >= 2, got {block_size}"
        )));
    }
    let l = block_size;
    let mut jn = SymmetricMatrix::zeros(l);
    let mut jd = SymmetricMatrix::zeros(l);
    for i in 0..l - 1 {
        jn.set(i, i + 1, 1.0);
        jd.set(i, i + 1, 1.0);
    }
    jn.set(0, 0, -1.0);
    jn.set(l - 1, l - 1, -1.0);
    jd.set(0, 0, 1.0);
    jd.set(l - 1, l - 1, 1.0);
    Ok((jn, jd))
}

/// The coupled bracketing block `a·diag(κ) + diag(√κ)·J_#·diag(√κ)`.
pub fn build_bracketing_block(a: f64, kappa: &[f64], which: Boundary) -> Result<SymmetricMatrix> {
    require_positive_couplings(kappa)?;
    let (jn, jd) = build_jacobi_blocks(kappa.len())?;
    let j = match which {
        Boundary::Neumann => jn,
        Boundary::Dirichlet => jd,
    };
    let sqrt_k: Vec<f64> = kappa.iter().map(|k| k.sqrt()).collect();
    Ok(SymmetricMatrix::from_fn(kappa.len(), |i, jx| {
        let mut v = sqrt_k[i] * j.get(i, jx) * sqrt_k[jx];
        if i == jx {
            v += a * kappa[i];
        }
        v
    }))
}

/// Residual of the ergodic shift covariance in the circulant model: the
/// matrix for the cyclically shifted window must equal the conjugation of
/// the original matrix by the corresponding cyclic permutation,
/// `Q(Tˢκ)_{ij} = Q(κ)_{i+s, j+s (mod M)}`. Returns the max-norm difference.
pub fn shift_covariance_check(sym: &Symbol, kappa: &[f64], shift: usize) -> Result<f64> {
    let m = kappa.len();
    let pair = build_circulant_pair(sym, kappa)?;
    let shifted: Vec<f64> = (0..m).map(|i| kappa[(i + shift) % m]).collect();
    let pair_shifted = build_circulant_pair(sym, &shifted)?;
    let mut r: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let conj = pair.q_mat.get((i + shift) % m, (j + shift) % m);
            r = r.max((pair_shifted.q_mat.get(i, j) - conj).abs());
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{CouplingDistribution, SeededStream};

    fn model(a: f64, b: f64) -> Symbol {
        Symbol::model(a, b).unwrap()
    }

    #[test]
    fn orthogonal_q_is_diagonal() {
        let q = build_q(&Symbol::orthogonal(), &[3.0, 5.0]).unwrap();
        assert_eq!(q.get(0, 0), 3.0);
        assert_eq!(q.get(1, 1), 5.0);
        assert_eq!(q.get(0, 1), 0.0);
    }

    #[test]
    fn one_plus_cos_window_of_three() {
        let q = build_q(&model(1.0, 1.0), &[1.0, 1.0, 1.0]).unwrap();
        let expect = [[1.0, 0.5, 0.0], [0.5, 1.0, 0.5], [0.0, 0.5, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((q.get(i, j) - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn scaled_couplings_enter_as_square_roots() {
        let q = build_q(&model(1.0, 1.0), &[4.0, 1.0, 4.0]).unwrap();
        assert_eq!(q.get(0, 2), 0.0);
        assert!((q.get(0, 1) - 1.0).abs() < 1e-15); // ½·√4·√1
        assert!((q.get(0, 0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn q_rejects_bad_inputs() {
        assert!(build_q(&model(1.0, 1.0), &[1.0, 0.0, 1.0]).is_err());
        assert!(build_q(&model(1.0, 1.0), &[]).is_err());
        let complex_coeff = Symbol::from_coeffs(
            [
                (0, num_complex::Complex64::new(1.0, 0.0)),
                (1, num_complex::Complex64::new(0.0, 0.5)),
                (-1, num_complex::Complex64::new(0.0, -0.5)),
            ],
            true,
        )
        .unwrap();
        assert!(build_q(&complex_coeff, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn gram_of_orthogonal_is_identity() {
        let g = build_gram(&Symbol::orthogonal(), 2).unwrap();
        assert_eq!(g.dim(), 5);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(g.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn gram_of_pure_cos_symbol() {
        let g = build_gram(&model(0.0, 2.0), 1).unwrap();
        let expect = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((g.get(i, j) - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn circulant_of_constant_symbol_is_diagonal() {
        let kappa = [1.5, 2.0, 0.5, 1.0];
        let pair = build_circulant_pair(&Symbol::orthogonal(), &kappa).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { kappa[i] } else { 0.0 };
                assert!((pair.p_mat.get(i, j) - expect).abs() < 1e-12);
                assert!((pair.q_mat.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_couplings_collapse_both_sides() {
        let c = 1.7;
        let kappa = vec![c; 16];
        let pair = build_circulant_pair(&model(1.0, 1.0), &kappa).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let expect = c * pair.c_phi.get(i, j);
                assert!((pair.p_mat.get(i, j) - expect).abs() < 1e-12);
                assert!((pair.q_mat.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn theta_squared_is_phi() {
        let dist = CouplingDistribution::uniform(1.0, 2.0).unwrap();
        let kappa = dist.sample_window(SeededStream::new(11, 0), 64);
        let pair = build_circulant_pair(&model(1.0, 1.0), &kappa).unwrap();
        assert!(pair.theta_squared_residual() < 1e-12);
    }

    #[test]
    fn trace_identity_between_realizations() {
        let dist = CouplingDistribution::uniform(1.0, 2.0).unwrap();
        let kappa = dist.sample_window(SeededStream::new(42, 0), 64);
        let pair = build_circulant_pair(&model(1.0, 1.0), &kappa).unwrap();
        for m in 1..=5 {
            let tp = trace_power(&pair.p_mat, m);
            let tq = trace_power(&pair.q_mat, m);
            assert!(
                (tp - tq).abs() <= 1e-9 * tq.abs().max(1.0),
                "m = {m}: Tr P^m = {tp}, Tr Q^m = {tq}"
            );
        }
    }

    #[test]
    fn jacobi_block_closed_forms_small() {
        let (jn, jd) = build_jacobi_blocks(2).unwrap();
        assert_eq!(jd.get(0, 0), 1.0);
        assert_eq!(jd.get(0, 1), 1.0);
        assert_eq!(jn.get(0, 0), -1.0);
        // J_D − J_N = diag(2, 0, …, 0, 2)
        let (jn, jd) = build_jacobi_blocks(6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let d = jd.get(i, j) - jn.get(i, j);
                let expect = if (i == 0 && j == 0) || (i == 5 && j == 5) { 2.0 } else { 0.0 };
                assert_eq!(d, expect);
            }
        }
    }

    #[test]
    fn bracketing_block_with_unit_couplings() {
        let block = build_bracketing_block(0.7, &[1.0; 5], Boundary::Neumann).unwrap();
        let (jn, _) = build_jacobi_blocks(5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = jn.get(i, j) + if i == j { 0.7 } else { 0.0 };
                assert!((block.get(i, j) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dirichlet_dominates_neumann_after_coupling() {
        // diag(√κ)(J_D − J_N)diag(√κ) is PSD; check the quadratic form on a
        // sweep of vectors.
        let dist = CouplingDistribution::uniform(1.0, 2.0).unwrap();
        let kappa = dist.sample_window(SeededStream::new(3, 0), 8);
        let n = build_bracketing_block(0.5, &kappa, Boundary::Neumann).unwrap();
        let d = build_bracketing_block(0.5, &kappa, Boundary::Dirichlet).unwrap();
        let mut rng_state = 1u64;
        for _ in 0..50 {
            let x: Vec<f64> = (0..8)
                .map(|_| {
                    rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    ((rng_state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                })
                .collect();
            let qn: f64 = n.matvec(&x).iter().zip(&x).map(|(a, b)| a * b).sum();
            let qd: f64 = d.matvec(&x).iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!(qd + 1e-12 >= qn);
        }
    }

    #[test]
    fn shift_covariance_residuals() {
        let dist = CouplingDistribution::uniform(1.0, 2.0).unwrap();
        let kappa = dist.sample_window(SeededStream::new(8, 2), 32);
        assert_eq!(shift_covariance_check(&model(1.0, 1.0), &kappa, 0).unwrap(), 0.0);
        let constant = vec![1.3; 32];
        assert!(shift_covariance_check(&model(1.0, 1.0), &constant, 7).unwrap() < 1e-12);
        assert!(shift_covariance_check(&model(1.0, 1.0), &kappa, 5).unwrap() < 1e-12);
    }

    #[test]
    fn market_dump_starts_with_dimension() {
        let q = build_q(&Symbol::orthogonal(), &[2.0]).unwrap();
        let mut buf = Vec::new();
        q.write_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("1\n0 0 2"));
    }

    #[test]
    fn circulant_rejects_bad_sizes_and_negative_symbols() {
        assert!(build_circulant_pair(&model(1.0, 1.0), &[1.0, 1.0, 1.0]).is_err()); // not 2^k
        assert!(build_circulant_pair(&model(0.0, 2.0), &[1.0; 16]).is_err()); // φ < 0
    }
}

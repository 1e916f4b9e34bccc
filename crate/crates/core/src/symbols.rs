//! The symbol `φ` of the Gram matrix.
//!
//! A sequence of unit vectors `ψ_n` with shift-invariant inner products is
//! described, up to unitary equivalence, by the function
//!
//! ```text
//!     φ(k) = Σ_n ⟨ψ_n, ψ_0⟩ e^{ink},   k ∈ [−π, π],
//! ```
//!
//! whose Fourier coefficients `φ̂_n = ⟨ψ_n, ψ_0⟩` fill the diagonals of the
//! Gram matrix. Hermitian symmetry `φ̂_{−n} = conj(φ̂_n)` makes `φ` real;
//! a Gram matrix of unit vectors has `φ̂_0 = 1`.
//!
//! Symbols here are finite-bandwidth by construction: symbols of infinite
//! support (plateau profiles, square roots) are truncated at a configurable
//! bandwidth `B`, with the discarded tail mass reported in the symbol
//! metadata.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::util::inverse_dft_real;
use crate::{Error, Result};

/// Hermitian symmetry and realness tolerances for stored coefficients.
const HERMITIAN_TOL: f64 = 1e-12;
/// A symbol is rejected as "significantly negative" below this level.
const NEGATIVITY_TOL: f64 = -1e-6;

/// Plateau profile metadata carried by [`Symbol::plateau`] constructions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauInfo {
    /// Half-length `a` of the arc `{|k| ≤ a}` where the profile equals `hi`.
    pub half_arc: f64,
    /// Profile value on the arc (after any normalization).
    pub hi: f64,
    /// Profile value off the arc (after any normalization).
    pub lo: f64,
}

/// A real-valued symbol on the unit circle, stored through its finitely many
/// nonzero Fourier coefficients.
#[derive(Debug, Clone)]
pub struct Symbol {
    coeffs: BTreeMap<i64, Complex64>,
    bandwidth: usize,
    normalized: bool,
    plateau: Option<PlateauInfo>,
    truncation_tail: Option<f64>,
    sqrt_residual: Option<f64>,
}

/// Extremes of a symbol over an evaluation grid.
#[derive(Debug, Clone, Copy)]
pub struct SymbolRange {
    pub phi_min: f64,
    pub phi_max: f64,
    /// A grid point attaining `phi_max`, in `[−π, π]`.
    pub argmax: f64,
    pub grid_size: usize,
}

impl Symbol {
    /// Builds a symbol from `(n, value)` coefficient pairs.
    ///
    /// Validates Hermitian symmetry `φ̂_{−n} = conj(φ̂_n)` (which forces a
    /// real-valued `φ`) and, if the `normalized` flag is requested,
    /// `φ̂_0 = 1`.
    pub fn from_coeffs<I>(pairs: I, normalized: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut coeffs = BTreeMap::new();
        for (n, v) in pairs {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Validation(format!("coefficient {n} is not finite")));
            }
            coeffs.insert(n, v);
        }
        for (&n, &v) in &coeffs {
            let mirror = coeffs.get(&-n).copied().unwrap_or(Complex64::new(0.0, 0.0));
            if (mirror - v.conj()).norm() > HERMITIAN_TOL {
                return Err(Error::Validation(format!(
                    "Hermitian symmetry violated at n = {n}: coeff({}) != conj(coeff({n}))",
                    -n
                )));
            }
        }
        if normalized {
            let c0 = coeffs.get(&0).copied().unwrap_or(Complex64::new(0.0, 0.0));
            if (c0 - Complex64::new(1.0, 0.0)).norm() > HERMITIAN_TOL {
                return Err(Error::Validation(format!(
                    "normalized symbol requires phi_hat(0) = 1, got {c0}"
                )));
            }
        }
        let bandwidth = coeffs.keys().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0);
        Ok(Symbol {
            coeffs,
            bandwidth,
            normalized,
            plateau: None,
            truncation_tail: None,
            sqrt_residual: None,
        })
    }

    /// The symbol of an orthonormal sequence: `φ ≡ 1`.
    pub fn orthogonal() -> Self {
        Symbol::from_coeffs([(0, Complex64::new(1.0, 0.0))], true).expect("constant symbol")
    }

    /// The model symbol `φ(k) = a + b·cos k`, i.e. coefficients
    /// `{−1: b/2, 0: a, 1: b/2}`.
    ///
    /// `a − b` may be negative: the spectral-edge analysis uses model symbols
    /// without a sign restriction.
    pub fn model(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::Validation(format!("model symbol requires b > 0, got b = {b}")));
        }
        let half = Complex64::new(b / 2.0, 0.0);
        Symbol::from_coeffs(
            [(-1, half), (0, Complex64::new(a, 0.0)), (1, half)],
            a == 1.0,
        )
    }

    /// A plateau symbol: the piecewise-constant profile equal to `hi` on the
    /// arc `{|k| ≤ a}` and `lo` elsewhere, truncated at bandwidth `B`.
    ///
    /// Closed-form coefficients: `φ̂_0 = (a·hi + (π−a)·lo)/π` and
    /// `φ̂_n = (hi−lo)·sin(n a)/(π n)` for `n ≠ 0`.
    ///
    /// Truncation makes the stored symbol oscillate around the ideal profile;
    /// the discarded tail mass `Σ_{|n|>B} |φ̂_n|` (estimated by partial
    /// summation) is recorded in the symbol metadata. Spectral computations
    /// that must see exact coefficients up to lag `L` should request
    /// `B ≥ L`.
    pub fn plateau(a: f64, hi: f64, lo: f64, bandwidth: usize) -> Result<Self> {
        if !(a > 0.0 && a < std::f64::consts::PI) {
            return Err(Error::Validation(format!(
                "plateau arc half-length must lie strictly inside (0, π), got {a}"
            )));
        }
        if !(hi > lo && lo >= 0.0) {
            return Err(Error::Validation(format!(
                "plateau profile requires hi > lo >= 0, got hi = {hi}, lo = {lo}"
            )));
        }
        let pi = std::f64::consts::PI;
        let mut pairs = vec![(0i64, Complex64::new((a * hi + (pi - a) * lo) / pi, 0.0))];
        for n in 1..=bandwidth as i64 {
            let c = (hi - lo) * (n as f64 * a).sin() / (pi * n as f64);
            pairs.push((n, Complex64::new(c, 0.0)));
            pairs.push((-n, Complex64::new(c, 0.0)));
        }
        let mut sym = Symbol::from_coeffs(pairs, false)?;
        // Tail mass beyond the truncation, summed far enough out that the
        // remainder is negligible at double precision.
        let mut tail = 0.0;
        for n in (bandwidth as i64 + 1)..=(bandwidth as i64 + 1_000_000) {
            tail += ((hi - lo) * (n as f64 * a).sin() / (pi * n as f64)).abs();
        }
        sym.plateau = Some(PlateauInfo { half_arc: a, hi, lo });
        sym.truncation_tail = Some(tail);
        Ok(sym)
    }

    /// Rescales the symbol so that `φ̂_0 = 1` and sets the normalized flag.
    pub fn normalized(&self) -> Result<Self> {
        let c0 = self.coeff(0).re;
        if c0.abs() < 1e-300 {
            return Err(Error::Validation("cannot normalize: phi_hat(0) = 0".into()));
        }
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v /= c0;
        }
        out.normalized = true;
        if let Some(p) = out.plateau.as_mut() {
            p.hi /= c0;
            p.lo /= c0;
        }
        Ok(out)
    }

    /// The coefficient `φ̂_n` (zero when absent).
    pub fn coeff(&self, n: i64) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Iterator over the stored `(n, φ̂_n)` pairs in ascending `n`.
    pub fn coeffs(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&n, &v)| (n, v))
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn plateau_info(&self) -> Option<PlateauInfo> {
        self.plateau
    }

    /// Discarded tail mass `Σ_{|n|>B} |φ̂_n|` for truncated constructions.
    pub fn truncation_tail(&self) -> Option<f64> {
        self.truncation_tail
    }

    /// Max-norm residual `max_k |θ(k)² − φ(k)|` recorded by [`Symbol::sqrt`].
    pub fn sqrt_residual(&self) -> Option<f64> {
        self.sqrt_residual
    }

    /// True when every stored coefficient is real (even symbol).
    pub fn has_real_coeffs(&self) -> bool {
        self.coeffs.values().all(|v| v.im.abs() <= HERMITIAN_TOL)
    }

    /// Evaluates `φ(k) = Σ_n φ̂_n e^{ink}`.
    ///
    /// Hermitian symmetry of the coefficients (validated at construction)
    /// makes the sum real; the imaginary rounding residual is checked in
    /// debug builds and discarded.
    pub fn evaluate(&self, k: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&n, &c) in &self.coeffs {
            acc += c * Complex64::from_polar(1.0, n as f64 * k);
        }
        debug_assert!(
            acc.im.abs() < 1e-12 * (1.0 + acc.re.abs()),
            "imaginary residual {} at k = {k}",
            acc.im
        );
        acc.re
    }

    /// Evaluates the symbol on the uniform grid `k_j = −π + 2πj/m`,
    /// `j = 0..m`.
    pub fn evaluate_on_grid(&self, m: usize) -> Vec<f64> {
        (0..m)
            .map(|j| {
                let k = -std::f64::consts::PI
                    + 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                self.evaluate(k)
            })
            .collect()
    }

    /// Minimum and maximum of the symbol over a uniform grid.
    ///
    /// The grid is oversampled relative to the bandwidth: fewer than
    /// `16·bandwidth` requested points are topped up to that level.
    pub fn range_bounds(&self, grid_size: usize) -> SymbolRange {
        let grid_size = grid_size.max(16 * self.bandwidth).max(2);
        let values = self.evaluate_on_grid(grid_size);
        let mut phi_min = f64::INFINITY;
        let mut phi_max = f64::NEG_INFINITY;
        let mut argmax = 0.0;
        for (j, &v) in values.iter().enumerate() {
            if v < phi_min {
                phi_min = v;
            }
            if v > phi_max {
                phi_max = v;
                argmax = -std::f64::consts::PI
                    + 2.0 * std::f64::consts::PI * j as f64 / grid_size as f64;
            }
        }
        SymbolRange { phi_min, phi_max, argmax, grid_size }
    }

    /// The square-root symbol `θ = √φ`, computed by pointwise square root on
    /// a size-`fft_size` uniform grid followed by an inverse FFT.
    ///
    /// Grid values in `[−1e−6, 0)` (truncation-induced undershoot) are
    /// clipped to zero before the root; values below `−1e−6` are rejected.
    /// The result has bandwidth `fft_size/2`, and the max-norm residual
    /// `max_k |θ(k)² − φ(k)|` over a doubly fine grid is recorded in the
    /// result metadata.
    pub fn sqrt(&self, fft_size: usize) -> Result<Symbol> {
        if fft_size < 4 || !fft_size.is_power_of_two() {
            return Err(Error::Validation(format!(
                "fft_size must be a power of two >= 4, got {fft_size}"
            )));
        }
        let samples = sample_on_fft_grid(self, fft_size);
        let mut theta = Vec::with_capacity(fft_size);
        for &v in &samples {
            if v < NEGATIVITY_TOL {
                return Err(Error::Validation(format!(
                    "symbol is significantly negative on the grid (min sample {v}); \
                     square root requires a nonnegative symbol"
                )));
            }
            theta.push(v.max(0.0).sqrt());
        }
        let coeff_row = inverse_dft_real(&theta);
        let half = fft_size / 2;
        let mut pairs = vec![(0i64, Complex64::new(coeff_row[0], 0.0))];
        for n in 1..=half {
            // Real even samples give a real symmetric coefficient row; fold
            // index M−n onto −n and average away rounding asymmetry.
            let c = 0.5 * (coeff_row[n] + coeff_row[fft_size - n]);
            let c = if n == half { 0.5 * c } else { c };
            pairs.push((n as i64, Complex64::new(c, 0.0)));
            pairs.push((-(n as i64), Complex64::new(c, 0.0)));
        }
        let mut out = Symbol::from_coeffs(pairs, false)?;
        // Self-consistency residual on a 2x oversampled grid (on the original
        // grid the inverse/forward transform pair is exact by construction).
        let fine = 2 * fft_size;
        let mut residual: f64 = 0.0;
        for j in 0..fine {
            let k = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / fine as f64;
            let t = out.evaluate(k);
            residual = residual.max((t * t - self.evaluate(k)).abs());
        }
        out.sqrt_residual = Some(residual);
        out.normalized = false;
        Ok(out)
    }

    /// Off-diagonal coupling size `Σ_{n≠0} |φ̂_n|^s`.
    ///
    /// Small values of this sum (for `s` below half the Hölder exponent of
    /// the coupling distribution) are the regime where the localization
    /// diagnostics are expected to show exponential resolvent decay.
    pub fn perturbation_size(&self, exponent: f64) -> f64 {
        self.coeffs
            .iter()
            .filter(|(&n, _)| n != 0)
            .map(|(_, v)| v.norm().powf(exponent))
            .sum()
    }
}

/// Samples the symbol at the FFT grid `k_l = 2πl/M`, `l = 0..M`.
fn sample_on_fft_grid(sym: &Symbol, m: usize) -> Vec<f64> {
    (0..m)
        .map(|l| sym.evaluate(2.0 * std::f64::consts::PI * l as f64 / m as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    /// Midpoint-rule Fourier coefficient `(1/2π)∫ f(k) e^{−ink} dk`,
    /// independent of the Symbol evaluation path.
    fn fourier_coeff_quadrature(f: impl Fn(f64) -> f64, n: i64, points: usize) -> f64 {
        let mut acc = 0.0;
        for j in 0..points {
            let k = -PI + 2.0 * PI * (j as f64 + 0.5) / points as f64;
            acc += f(k) * (n as f64 * k).cos();
        }
        acc / points as f64
    }

    #[test]
    fn identity_symbol_evaluates_to_one() {
        let sym = Symbol::orthogonal();
        for &k in &[-PI, -1.0, 0.0, 0.5, PI] {
            assert_eq!(sym.evaluate(k), 1.0);
        }
    }

    #[test]
    fn one_plus_cos_vanishes_at_pi() {
        let sym = Symbol::model(1.0, 1.0).unwrap();
        assert!(sym.evaluate(PI).abs() < 1e-15);
        assert!((sym.evaluate(0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn model_symbol_peak_value() {
        let sym = Symbol::model(0.0, 2.0).unwrap();
        assert!((sym.evaluate(0.0) - 2.0).abs() < 1e-15);
        assert_eq!(sym.coeff(1), Complex64::new(1.0, 0.0));
        assert_eq!(sym.coeff(-1), Complex64::new(1.0, 0.0));
        assert_eq!(sym.coeff(0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn model_symbol_rejects_nonpositive_b() {
        assert!(Symbol::model(1.0, 0.0).is_err());
        assert!(Symbol::model(1.0, -1.0).is_err());
    }

    #[test]
    fn model_range() {
        let sym = Symbol::model(2.0, 2.0).unwrap();
        let r = sym.range_bounds(4096);
        assert!((r.phi_min - 0.0).abs() < 1e-6);
        assert!((r.phi_max - 4.0).abs() < 1e-6);
    }

    #[test]
    fn constant_symbol_range_is_flat() {
        let r = Symbol::orthogonal().range_bounds(64);
        assert_eq!(r.phi_min, 1.0);
        assert_eq!(r.phi_max, 1.0);
    }

    #[test]
    fn one_plus_cos_range_on_grid() {
        let sym = Symbol::model(1.0, 1.0).unwrap();
        let r = sym.range_bounds(4096);
        assert!(r.phi_min.abs() < 1e-6);
        assert!((r.phi_max - 2.0).abs() < 1e-6);
        assert!(r.argmax.abs() < 2.0 * PI / 4096.0 + 1e-12);
    }

    #[test]
    fn plateau_max_carries_gibbs_overshoot() {
        // Truncating the square profile overshoots the plateau level by the
        // universal factor (Si(π)/π − ½) ≈ 0.08949 of the jump; the direct
        // evaluation oracle at B = 256 gives 2.089492…
        let sym = Symbol::plateau(PI / 2.0, 2.0, 1.0, 256).unwrap();
        let r = sym.range_bounds(4096);
        assert!(
            (r.phi_max - 2.08949).abs() < 1e-3,
            "phi_max = {} should carry the Gibbs overshoot",
            r.phi_max
        );
        assert!(sym.truncation_tail().unwrap() > 0.0);
    }

    #[test]
    fn plateau_zeroth_coefficient_is_profile_mean() {
        let sym = Symbol::plateau(PI / 2.0, 1.0, 0.0, 8).unwrap();
        assert!((sym.coeff(0).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn plateau_first_coefficient_matches_quadrature() {
        let sym = Symbol::plateau(PI / 2.0, 1.0, 0.0, 8).unwrap();
        // closed form sin(π/2)/π = 1/π
        assert!((sym.coeff(1).re - 1.0 / PI).abs() < 1e-15);
        let a = PI / 2.0;
        let oracle = fourier_coeff_quadrature(
            |k| if k.abs() <= a { 1.0 } else { 0.0 },
            1,
            2_000_000,
        );
        assert!(
            (sym.coeff(1).re - oracle).abs() < 1e-5,
            "coeff {} vs quadrature {}",
            sym.coeff(1).re,
            oracle
        );
    }

    #[test]
    fn plateau_near_full_circle_is_nearly_constant() {
        let sym = Symbol::plateau(PI - 1e-9, 2.0, 0.0, 32).unwrap();
        assert!((sym.coeff(0).re - 2.0).abs() < 1e-8);
        for n in 1..=32 {
            assert!(sym.coeff(n).norm() < 1e-8);
        }
    }

    #[test]
    fn plateau_rejects_degenerate_arcs() {
        assert!(Symbol::plateau(0.0, 1.0, 0.0, 8).is_err());
        assert!(Symbol::plateau(PI, 1.0, 0.0, 8).is_err());
        assert!(Symbol::plateau(1.0, 0.5, 0.5, 8).is_err());
    }

    #[test]
    fn sqrt_of_constant_is_constant() {
        let theta = Symbol::orthogonal().sqrt(64).unwrap();
        assert!((theta.coeff(0).re - 1.0).abs() < 1e-12);
        for n in 1..=32 {
            assert!(theta.coeff(n).norm() < 1e-12, "n = {n}: {}", theta.coeff(n));
        }
    }

    #[test]
    fn sqrt_zeroth_coefficient_matches_quadrature_oracle() {
        // θ(k) = √(1+cos k) = √2 |cos(k/2)|, mean 2√2/π ≈ 0.9003
        let theta = Symbol::model(1.0, 1.0).unwrap().sqrt(4096).unwrap();
        let closed_form = 2.0 * 2.0f64.sqrt() / PI;
        let oracle =
            fourier_coeff_quadrature(|k| (1.0 + k.cos()).max(0.0).sqrt(), 0, 1_000_000);
        assert!((oracle - closed_form).abs() < 1e-9, "quadrature sanity");
        assert!(
            (theta.coeff(0).re - closed_form).abs() < 1e-4,
            "theta_0 = {}, expected {}",
            theta.coeff(0).re,
            closed_form
        );
    }

    #[test]
    fn sqrt_self_consistency_residual() {
        let theta = Symbol::model(1.0, 1.0).unwrap().sqrt(4096).unwrap();
        let res = theta.sqrt_residual().unwrap();
        assert!(res <= 1e-3, "residual {res}");
    }

    #[test]
    fn sqrt_rejects_negative_symbols() {
        // φ = 2 cos k dips to −2.
        let sym = Symbol::model(0.0, 2.0).unwrap();
        assert!(sym.sqrt(256).is_err());
    }

    #[test]
    fn perturbation_size_examples() {
        assert_eq!(Symbol::orthogonal().perturbation_size(0.25), 0.0);

        let eps = 0.02;
        let sym = Symbol::from_coeffs(
            [
                (-1, Complex64::new(eps, 0.0)),
                (0, Complex64::new(1.0, 0.0)),
                (1, Complex64::new(eps, 0.0)),
            ],
            true,
        )
        .unwrap();
        assert!((sym.perturbation_size(0.25) - 2.0 * eps.powf(0.25)).abs() < 1e-12);

        let sym = Symbol::model(1.0, 1.0).unwrap();
        assert!((sym.perturbation_size(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hermitian_violation_is_rejected() {
        let bad = Symbol::from_coeffs(
            [
                (0, Complex64::new(1.0, 0.0)),
                (1, Complex64::new(0.5, 0.1)),
                (-1, Complex64::new(0.5, 0.1)), // should be the conjugate
            ],
            true,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn builtins_evaluate_real_at_random_points() {
        // Complex-sum evaluation must leave only rounding in the imaginary
        // part; checked here by summing with the conjugate-pair structure
        // broken out explicitly.
        let builtins: Vec<Symbol> = vec![
            Symbol::orthogonal(),
            Symbol::model(1.0, 1.0).unwrap(),
            Symbol::model(0.0, 2.0).unwrap(),
            Symbol::plateau(PI / 2.0, 2.0, 1.0, 256).unwrap(),
            Symbol::model(1.0, 1.0).unwrap().sqrt(1024).unwrap(),
        ];
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for sym in &builtins {
            for _ in 0..10_000 {
                let k = -PI + 2.0 * PI * next();
                let mut acc = Complex64::new(0.0, 0.0);
                for (n, c) in sym.coeffs() {
                    acc += c * Complex64::from_polar(1.0, n as f64 * k);
                }
                assert!(
                    acc.im.abs() < 1e-12,
                    "imaginary residual {} at k = {k}",
                    acc.im
                );
            }
        }
    }

    #[test]
    fn range_bounds_monotone_under_refinement() {
        let syms = vec![
            Symbol::model(1.0, 1.0).unwrap(),
            Symbol::plateau(PI / 3.0, 2.0, 0.5, 64).unwrap(),
        ];
        for sym in syms {
            let coarse = sym.range_bounds(1024);
            let fine = sym.range_bounds(2048);
            assert!(fine.phi_max >= coarse.phi_max - 1e-12);
            assert!(fine.phi_min <= coarse.phi_min + 1e-12);
        }
    }

    #[test]
    fn normalization_rescales_plateau() {
        let sym = Symbol::plateau(PI / 2.0, 1.0, 0.0, 32).unwrap().normalized().unwrap();
        assert!((sym.coeff(0).re - 1.0).abs() < 1e-15);
        assert!(sym.is_normalized());
        let info = sym.plateau_info().unwrap();
        assert!((info.hi - 2.0).abs() < 1e-12);
    }
}

//! Single-site coupling distributions and reproducible sampling.
//!
//! The couplings `κ_n` are i.i.d. draws from a compactly supported
//! distribution on `(0, ∞)`. Three families are built in, each chosen to
//! activate a different part of the verification suite:
//!
//! - `Uniform(lo, hi)` — bounded density, so the Wegner estimate and the
//!   Hölder hypothesis of the localization diagnostics apply;
//! - `TwoPoint(v1, v2, p)` — an atom at the top of the support, for the
//!   point-mass dichotomy;
//! - `AtomPlusUniform(atom, mass, lo, hi)` — an atom riding on a density.
//!
//! Sampling is driven by counter-based ChaCha streams: a master seed picks
//! the key and the realization index picks the stream, so a window of draws
//! is a pure function of `(master_seed, stream_index)` independent of
//! threading or platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Identifies one reproducible draw stream.
///
/// Identical `(master_seed, stream_index)` pairs yield identical sample
/// sequences; distinct stream indices yield statistically independent
/// streams under the same master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeededStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        SeededStream { master_seed, stream_index }
    }

    /// Instantiates the RNG for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// A compactly supported coupling distribution on `(0, ∞)` with exact
/// moments and edge probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingDistribution {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// `v2` with probability `p`, `v1` with probability `1 − p`; `v1 ≤ v2`.
    TwoPoint { v1: f64, v2: f64, p: f64 },
    /// Atom at `atom_value` with mass `atom_mass`, plus `Uniform(lo, hi)`
    /// carrying the remaining mass.
    AtomPlusUniform { atom_value: f64, atom_mass: f64, lo: f64, hi: f64 },
}

impl CouplingDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = CouplingDistribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn two_point(v1: f64, v2: f64, p: f64) -> Result<Self> {
        let d = CouplingDistribution::TwoPoint { v1, v2, p };
        d.validate()?;
        Ok(d)
    }

    pub fn atom_plus_uniform(atom_value: f64, atom_mass: f64, lo: f64, hi: f64) -> Result<Self> {
        let d = CouplingDistribution::AtomPlusUniform { atom_value, atom_mass, lo, hi };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CouplingDistribution::Uniform { lo, hi } => lo > 0.0 && hi > lo,
            CouplingDistribution::TwoPoint { v1, v2, p } => {
                v1 > 0.0 && v2 >= v1 && (0.0..=1.0).contains(&p)
            }
            CouplingDistribution::AtomPlusUniform { atom_value, atom_mass, lo, hi } => {
                atom_value > 0.0 && lo > 0.0 && hi > lo && (0.0..=1.0).contains(&atom_mass)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "coupling distribution must be supported inside (0, ∞) with \
                 probabilities in [0,1]: {self:?}"
            )))
        }
    }

    /// Infimum of the support.
    pub fn kappa_min(&self) -> f64 {
        match *self {
            CouplingDistribution::Uniform { lo, .. } => lo,
            CouplingDistribution::TwoPoint { v1, v2, p } => {
                if p >= 1.0 {
                    v2
                } else {
                    v1
                }
            }
            CouplingDistribution::AtomPlusUniform { atom_value, atom_mass, lo, .. } => {
                if atom_mass >= 1.0 {
                    atom_value
                } else {
                    lo.min(atom_value)
                }
            }
        }
    }

    /// Supremum of the support.
    pub fn kappa_max(&self) -> f64 {
        match *self {
            CouplingDistribution::Uniform { hi, .. } => hi,
            CouplingDistribution::TwoPoint { v1, v2, p } => {
                if p <= 0.0 {
                    v1
                } else {
                    v2
                }
            }
            CouplingDistribution::AtomPlusUniform { atom_value, atom_mass, hi, .. } => {
                if atom_mass >= 1.0 {
                    atom_value
                } else {
                    hi.max(atom_value)
                }
            }
        }
    }

    /// Exact first moment.
    pub fn mean(&self) -> f64 {
        match *self {
            CouplingDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            CouplingDistribution::TwoPoint { v1, v2, p } => (1.0 - p) * v1 + p * v2,
            CouplingDistribution::AtomPlusUniform { atom_value, atom_mass, lo, hi } => {
                atom_mass * atom_value + (1.0 - atom_mass) * 0.5 * (lo + hi)
            }
        }
    }

    /// Exact variance.
    pub fn variance(&self) -> f64 {
        match *self {
            CouplingDistribution::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            CouplingDistribution::TwoPoint { v1, v2, p } => {
                p * (1.0 - p) * (v2 - v1) * (v2 - v1)
            }
            CouplingDistribution::AtomPlusUniform { atom_value, atom_mass, lo, hi } => {
                let m = self.mean();
                let second = atom_mass * atom_value * atom_value
                    + (1.0 - atom_mass) * (lo * lo + lo * hi + hi * hi) / 3.0;
                second - m * m
            }
        }
    }

    /// Exact mass of the top edge window `(κ_max − eps, κ_max]`.
    ///
    /// Formulated without ever forming `κ_max − eps`, so the result stays
    /// exact down to `eps` near the underflow threshold (the analytic
    /// Lifshitz curve probes widths as small as `1e−300`).
    pub fn edge_probability(&self, eps: f64) -> f64 {
        assert!(eps > 0.0, "edge window must have positive width");
        match *self {
            CouplingDistribution::Uniform { lo, hi } => (eps / (hi - lo)).clamp(0.0, 1.0),
            CouplingDistribution::TwoPoint { v1, v2, p } => {
                if v1 == v2 {
                    return 1.0;
                }
                // κ_max = v2; v1 enters once the window spans the gap.
                let mut mass = p;
                if eps > v2 - v1 {
                    mass += 1.0 - p;
                }
                mass
            }
            CouplingDistribution::AtomPlusUniform { atom_value, atom_mass, lo, hi } => {
                if atom_mass >= 1.0 {
                    return 1.0;
                }
                let q = atom_mass;
                if atom_value >= hi {
                    // κ_max is the atom; the uniform part sits eps−(atom−hi)
                    // below the window top (zero overlap until the window
                    // spans the gap).
                    let overlap = ((eps - (atom_value - hi)) / (hi - lo)).clamp(0.0, 1.0);
                    q + (1.0 - q) * overlap
                } else {
                    // κ_max = hi; the atom enters once eps exceeds hi − atom.
                    let mut mass = (1.0 - q) * (eps / (hi - lo)).clamp(0.0, 1.0);
                    if eps > hi - atom_value {
                        mass += q;
                    }
                    mass
                }
            }
        }
    }

    /// Mass of the atom at the top of the support, `P₀({κ_max})`.
    pub fn top_atom_mass(&self) -> f64 {
        match *self {
            CouplingDistribution::Uniform { .. } => 0.0,
            CouplingDistribution::TwoPoint { v1, v2, p } => {
                if v1 == v2 {
                    1.0
                } else {
                    p
                }
            }
            CouplingDistribution::AtomPlusUniform { atom_value, atom_mass, hi, .. } => {
                if atom_value >= hi {
                    atom_mass
                } else {
                    0.0
                }
            }
        }
    }

    /// Cumulative distribution function `P₀((−∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            CouplingDistribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            CouplingDistribution::TwoPoint { v1, v2, p } => {
                let mut acc = 0.0;
                if x >= v1 {
                    acc += 1.0 - p;
                }
                if x >= v2 {
                    acc += p;
                }
                acc
            }
            CouplingDistribution::AtomPlusUniform { atom_value, atom_mass, lo, hi } => {
                let mut acc = (1.0 - atom_mass) * ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
                if x >= atom_value {
                    acc += atom_mass;
                }
                acc
            }
        }
    }

    /// Uniform Hölder parameters `(τ, C)` with
    /// `P₀([x−δ, x+δ]) ≤ C δ^τ` for all `x` in the support, or `None`
    /// when the distribution has an atom (the hypothesis fails).
    pub fn holder_parameters(&self) -> Option<(f64, f64)> {
        match *self {
            CouplingDistribution::Uniform { lo, hi } => Some((1.0, 2.0 / (hi - lo))),
            _ => None,
        }
    }

    /// Density bound `ρ_max` for absolutely continuous distributions.
    pub fn density_bound(&self) -> Option<f64> {
        match *self {
            CouplingDistribution::Uniform { lo, hi } => Some(1.0 / (hi - lo)),
            _ => None,
        }
    }

    /// Draws one sample.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            CouplingDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            CouplingDistribution::TwoPoint { v1, v2, p } => {
                if rng.random::<f64>() < p {
                    v2
                } else {
                    v1
                }
            }
            CouplingDistribution::AtomPlusUniform { atom_value, atom_mass, lo, hi } => {
                if rng.random::<f64>() < atom_mass {
                    atom_value
                } else {
                    lo + (hi - lo) * rng.random::<f64>()
                }
            }
        }
    }

    /// An i.i.d. window of `length` draws from the given stream.
    pub fn sample_window(&self, stream: SeededStream, length: usize) -> Vec<f64> {
        let mut rng = stream.rng();
        (0..length).map(|_| self.sample(&mut rng)).collect()
    }

    /// Draws one sample conditioned on the edge event
    /// `κ > κ_max − eps`, by inverse transform on the restricted law.
    pub fn sample_edge_conditioned(&self, eps: f64, rng: &mut ChaCha8Rng) -> f64 {
        let kmax = self.kappa_max();
        let cut = kmax - eps;
        match *self {
            CouplingDistribution::Uniform { lo, .. } => {
                let a = cut.max(lo);
                kmax - (kmax - a) * rng.random::<f64>()
            }
            CouplingDistribution::TwoPoint { v1, v2, p } => {
                let w2 = if v2 > cut { p } else { 0.0 };
                let w1 = if v1 > cut { 1.0 - p } else { 0.0 };
                debug_assert!(w1 + w2 > 0.0);
                if rng.random::<f64>() * (w1 + w2) < w2 {
                    v2
                } else {
                    v1
                }
            }
            CouplingDistribution::AtomPlusUniform { atom_value, atom_mass, lo, hi } => {
                let w_atom = if atom_value > cut { atom_mass } else { 0.0 };
                let a = cut.max(lo).min(hi);
                let w_unif = (1.0 - atom_mass) * (hi - a) / (hi - lo);
                debug_assert!(w_atom + w_unif > 0.0);
                if rng.random::<f64>() * (w_atom + w_unif) < w_atom {
                    atom_value
                } else {
                    hi - (hi - a) * rng.random::<f64>()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_two_point_is_constant() {
        let d = CouplingDistribution::two_point(1.0, 1.0, 0.3).unwrap();
        let w = d.sample_window(SeededStream::new(7, 0), 5);
        assert_eq!(w, vec![1.0; 5]);
    }

    #[test]
    fn uniform_sample_mean_within_three_sigma() {
        let d = CouplingDistribution::uniform(1.0, 2.0).unwrap();
        let n = 100_000;
        let w = d.sample_window(SeededStream::new(12345, 3), n);
        let mean = w.iter().sum::<f64>() / n as f64;
        let sigma = (d.variance() / n as f64).sqrt();
        assert!((mean - 1.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn identical_streams_reproduce() {
        let d = CouplingDistribution::uniform(1.0, 2.0).unwrap();
        let a = d.sample_window(SeededStream::new(7, 0), 100);
        let b = d.sample_window(SeededStream::new(7, 0), 100);
        assert_eq!(a, b);
        let c = d.sample_window(SeededStream::new(7, 1), 100);
        assert_ne!(a, c);
    }

    #[test]
    fn closed_form_moments() {
        let u = CouplingDistribution::uniform(1.0, 2.0).unwrap();
        assert!((u.mean() - 1.5).abs() < 1e-15);
        assert!((u.variance() - 1.0 / 12.0).abs() < 1e-15);

        let t = CouplingDistribution::two_point(1.0, 2.0, 0.5).unwrap();
        assert!((t.mean() - 1.5).abs() < 1e-15);
        assert!((t.variance() - 0.25).abs() < 1e-15);

        let a = CouplingDistribution::atom_plus_uniform(2.0, 0.9, 1.0, 2.0).unwrap();
        assert!((a.mean() - 1.95).abs() < 1e-15);
    }

    #[test]
    fn empirical_moments_match_exact() {
        let dists = [
            CouplingDistribution::uniform(1.0, 2.0).unwrap(),
            CouplingDistribution::two_point(1.0, 2.0, 0.25).unwrap(),
            CouplingDistribution::atom_plus_uniform(2.0, 0.5, 0.5, 1.5).unwrap(),
        ];
        let n = 1_000_000;
        for d in dists {
            let w = d.sample_window(SeededStream::new(99, 0), n);
            let (lo, hi) = (d.kappa_min(), d.kappa_max());
            assert!(w.iter().all(|&x| (lo..=hi).contains(&x)));
            let mean = w.iter().sum::<f64>() / n as f64;
            let var = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            let se_mean = (d.variance() / n as f64).sqrt();
            assert!((mean - d.mean()).abs() < 5.0 * se_mean, "{d:?}: mean {mean}");
            // Crude but adequate error bar for the sample variance.
            let se_var = d.variance() * (2.0 / n as f64).sqrt() * 3.0;
            assert!((var - d.variance()).abs() < 5.0 * se_var.max(1e-4), "{d:?}: var {var}");
        }
    }

    #[test]
    fn edge_probability_examples() {
        let u = CouplingDistribution::uniform(1.0, 2.0).unwrap();
        assert!((u.edge_probability(0.25) - 0.25).abs() < 1e-15);
        assert_eq!(u.edge_probability(5.0), 1.0);

        let a = CouplingDistribution::atom_plus_uniform(2.0, 0.9, 1.0, 2.0).unwrap();
        assert!((a.edge_probability(1e-12) - 0.9).abs() < 1e-9);
    }

    #[test]
    fn edge_probability_monotone_and_saturating() {
        let dists = [
            CouplingDistribution::uniform(1.0, 2.0).unwrap(),
            CouplingDistribution::two_point(1.0, 2.0, 0.3).unwrap(),
            CouplingDistribution::atom_plus_uniform(2.0, 0.4, 1.0, 2.0).unwrap(),
        ];
        for d in dists {
            let mut prev = 0.0;
            for i in 1..=40 {
                let eps = 0.05 * i as f64;
                let p = d.edge_probability(eps);
                assert!(p + 1e-15 >= prev, "{d:?} not monotone at eps {eps}");
                prev = p;
            }
            let span = d.kappa_max() - d.kappa_min();
            assert_eq!(d.edge_probability(span + 1e-9), 1.0);
        }
    }

    #[test]
    fn holder_parameters_gate_atoms() {
        let u = CouplingDistribution::uniform(1.0, 2.0).unwrap();
        assert_eq!(u.holder_parameters(), Some((1.0, 2.0)));
        let u = CouplingDistribution::uniform(0.5, 2.5).unwrap();
        assert_eq!(u.holder_parameters(), Some((1.0, 1.0)));
        assert_eq!(
            CouplingDistribution::two_point(1.0, 2.0, 0.5).unwrap().holder_parameters(),
            None
        );
    }

    #[test]
    fn holder_bound_against_direct_integration() {
        // P([x−δ, x+δ]) for Uniform(lo, hi) is at most 2δ/(hi−lo).
        let u = CouplingDistribution::uniform(1.0, 2.0).unwrap();
        let (tau, c) = u.holder_parameters().unwrap();
        for i in 0..50 {
            let x = 1.0 + 0.02 * i as f64;
            for &delta in &[1e-3, 1e-2, 0.1] {
                let mass = ((x + delta).min(2.0) - (x - delta).max(1.0)).max(0.0);
                assert!(mass <= c * delta.powf(tau) + 1e-15);
            }
        }
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(CouplingDistribution::uniform(-1.0, 2.0).is_err());
        assert!(CouplingDistribution::uniform(2.0, 1.0).is_err());
        assert!(CouplingDistribution::two_point(0.0, 1.0, 0.5).is_err());
        assert!(CouplingDistribution::two_point(1.0, 2.0, 1.5).is_err());
        assert!(CouplingDistribution::atom_plus_uniform(2.0, -0.1, 1.0, 2.0).is_err());
    }

    #[test]
    fn edge_conditioned_samples_stay_in_window() {
        let dists = [
            CouplingDistribution::uniform(1.0, 2.0).unwrap(),
            CouplingDistribution::atom_plus_uniform(2.0, 0.5, 1.0, 2.0).unwrap(),
        ];
        for d in dists {
            let eps = 0.01;
            let mut rng = SeededStream::new(5, 0).rng();
            for _ in 0..1000 {
                let x = d.sample_edge_conditioned(eps, &mut rng);
                assert!(x > d.kappa_max() - eps - 1e-12 && x <= d.kappa_max());
            }
        }
    }
}

//! Cross-module invariants: the exact identities of the circulant testbed
//! across many random windows, bracketing order, and end-to-end
//! determinism of the Monte Carlo estimators.

use ergoproj_core::couplings::{CouplingDistribution, SeededStream};
use ergoproj_core::edges::{bracket_tail_mc, mu_l};
use ergoproj_core::ids::estimate_ids;
use ergoproj_core::localization::resolvent_connection_residual;
use ergoproj_core::operators::{
    build_bracketing_block, build_circulant_pair, shift_covariance_check, trace_power, Boundary,
};
use ergoproj_core::spectra::{count_above, eigh, top_eigenvalue};
use ergoproj_core::symbols::Symbol;
use num_complex::Complex64;

fn uniform12() -> CouplingDistribution {
    CouplingDistribution::uniform(1.0, 2.0).unwrap()
}

#[test]
fn circulant_identities_across_seeds() {
    let sym = Symbol::model(1.0, 1.0).unwrap();
    let dist = uniform12();
    for seed in 0..10u64 {
        let kappa = dist.sample_window(SeededStream::new(seed, 0), 64);
        let pair = build_circulant_pair(&sym, &kappa).unwrap();
        assert!(pair.theta_squared_residual() < 1e-12, "seed {seed}");
        for m in 1..=6 {
            let tp = trace_power(&pair.p_mat, m);
            let tq = trace_power(&pair.q_mat, m);
            assert!(
                (tp - tq).abs() <= 1e-9 * tq.abs().max(1.0),
                "seed {seed}, m {m}: {tp} vs {tq}"
            );
        }
        let r = resolvent_connection_residual(&pair, Complex64::new(1.0, 1.0)).unwrap();
        assert!(r <= 1e-8, "seed {seed}: resolvent connection residual {r}");
        let s = shift_covariance_check(&sym, &kappa, (seed as usize * 7) % 64).unwrap();
        assert!(s <= 1e-12, "seed {seed}: covariance residual {s}");
    }
}

#[test]
fn matched_windows_order_neumann_below_dirichlet() {
    let dist = uniform12();
    for seed in 0..20u64 {
        let kappa = dist.sample_window(SeededStream::new(seed, 1), 24);
        let n = build_bracketing_block(0.0, &kappa, Boundary::Neumann).unwrap();
        let d = build_bracketing_block(0.0, &kappa, Boundary::Dirichlet).unwrap();
        let dec_n = eigh(&n, false).unwrap();
        let dec_d = eigh(&d, false).unwrap();
        for lambda in [-2.0, 0.0, 1.0, 2.5, 3.5] {
            assert!(
                count_above(lambda, &dec_n) <= count_above(lambda, &dec_d),
                "seed {seed}, λ {lambda}"
            );
        }
        // Weyl pairing on the matched window.
        for k in 0..24 {
            assert!(dec_n.eigenvalues[k] <= dec_d.eigenvalues[k] + 1e-10);
        }
    }
}

#[test]
fn bracket_bounds_and_block_gap_scale() {
    let b = bracket_tail_mc(0.0, 2.0, &uniform12(), 16, 3.0, 200, 5).unwrap();
    assert!(b.lower <= b.upper);
    // μ_L is the gap between the top two block eigenvalues for κ ≡ 1.
    let (l, gap) = (16usize, mu_l(16));
    let ones = vec![1.0; l];
    let d = build_bracketing_block(0.0, &ones, Boundary::Dirichlet).unwrap();
    let dec = eigh(&d, false).unwrap();
    let top = dec.eigenvalues[l - 1];
    let second = dec.eigenvalues[l - 2];
    assert!((top - 2.0).abs() < 1e-10);
    assert!(((top - second) - gap).abs() < 1e-10);
}

#[test]
fn estimates_are_bit_reproducible() {
    let sym = Symbol::model(1.0, 1.0).unwrap();
    let dist = uniform12();
    let a = estimate_ids(&sym, &dist, 60, 10, 2024, 64).unwrap();
    let b = estimate_ids(&sym, &dist, 60, 10, 2024, 64).unwrap();
    assert_eq!(a.pooled, b.pooled);
    let bits_a: Vec<u64> = a.pooled.iter().map(|v| v.to_bits()).collect();
    let bits_b: Vec<u64> = b.pooled.iter().map(|v| v.to_bits()).collect();
    assert_eq!(bits_a, bits_b);
}

#[test]
fn conditioned_top_eigenvalue_variational_floor() {
    // On the conditioned edge event the Neumann top eigenvalue is at least
    // (min κ)(a + 2 − μ_L); spot-check the variational inequality used by
    // the edge-event argument.
    let dist = uniform12();
    let eps = 0.005;
    for seed in 0..5u64 {
        let mut rng = SeededStream::new(seed, 0).rng();
        let kappa: Vec<f64> = (0..40).map(|_| dist.sample_edge_conditioned(eps, &mut rng)).collect();
        let block = build_bracketing_block(0.0, &kappa, Boundary::Neumann).unwrap();
        let top = top_eigenvalue(&block).unwrap();
        let min_k = kappa.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(top >= min_k * (2.0 - mu_l(40)) - 1e-12);
    }
}

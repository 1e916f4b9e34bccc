//! Browser bindings for the interactive demo page.
//!
//! Three operations are exposed, each returning a JSON payload the page
//! renders on a canvas:
//!
//! - [`symbol_curve`]: a symbol evaluated on a grid, with its range and
//!   off-diagonal coupling size;
//! - [`ids_histogram`]: a seeded Monte Carlo estimate of the integrated
//!   density of states at browser-friendly window sizes, with moment
//!   targets and (for `κ ≡ 1`) the pushforward reference;
//! - [`lifshitz_tail_curve`]: the analytic lower-bound tail curve in
//!   double-log coordinates with its fitted slope per window.
//!
//! Everything is deterministic in the seed, so a page reload reproduces
//! the same picture.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ergoproj_core::couplings::CouplingDistribution;
use ergoproj_core::edges::{analytic_lower_curve, tail_slope};
use ergoproj_core::ids::{estimate_ids, ids_moment, szego_pushforward};
use ergoproj_core::symbols::Symbol;

fn err_json(msg: impl std::fmt::Display) -> String {
    serde_json::to_string(&serde_json::json!({ "error": msg.to_string() })).unwrap()
}

fn build_symbol(kind: &str, a: f64, b: f64, hi: f64, lo: f64, bandwidth: u32) -> Result<Symbol, String> {
    match kind {
        "orthogonal" => Ok(Symbol::orthogonal()),
        "model" => Symbol::model(a, b).map_err(|e| e.to_string()),
        "nearly_orthogonal" => Symbol::model(1.0, 2.0 * b).map_err(|e| e.to_string()),
        "plateau" => {
            let sym = Symbol::plateau(a, hi, lo, bandwidth as usize).map_err(|e| e.to_string())?;
            sym.normalized().map_err(|e| e.to_string())
        }
        other => Err(format!("unknown symbol kind `{other}`")),
    }
}

/// Symbol values on a uniform grid over `[−π, π]`, plus range information.
#[wasm_bindgen]
pub fn symbol_curve(kind: &str, a: f64, b: f64, hi: f64, lo: f64, bandwidth: u32, grid: u32) -> String {
    #[derive(Serialize)]
    struct Payload {
        k: Vec<f64>,
        phi: Vec<f64>,
        phi_min: f64,
        phi_max: f64,
        bandwidth: usize,
        perturbation_quarter: f64,
    }
    let sym = match build_symbol(kind, a, b, hi, lo, bandwidth) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let grid = (grid as usize).clamp(16, 16384);
    let k: Vec<f64> = (0..=grid)
        .map(|j| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / grid as f64)
        .collect();
    let phi: Vec<f64> = k.iter().map(|&x| sym.evaluate(x)).collect();
    let range = sym.range_bounds(grid.max(16 * sym.bandwidth()));
    let payload = Payload {
        k,
        phi,
        phi_min: range.phi_min,
        phi_max: range.phi_max,
        bandwidth: sym.bandwidth(),
        perturbation_quarter: sym.perturbation_size(0.25),
    };
    serde_json::to_string(&payload).unwrap()
}

/// Seeded IDS Monte Carlo at demo scale. For `two_point(1,1)` couplings the
/// pushforward reference values are included for overlay.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn ids_histogram(
    symbol_kind: &str,
    a: f64,
    b: f64,
    dist_kind: &str,
    lo: f64,
    hi: f64,
    p: f64,
    half_width: u32,
    realizations: u32,
    seed: u32,
    bins: u32,
) -> String {
    #[derive(Serialize)]
    struct Payload {
        edges: Vec<f64>,
        masses: Vec<f64>,
        first_moment: f64,
        first_moment_target: f64,
        second_moment: f64,
        second_moment_target: f64,
        min_eigenvalue: f64,
        max_eigenvalue: f64,
        sigma_max: f64,
        reference: Option<Vec<f64>>,
    }
    let sym = match build_symbol(symbol_kind, a, b, 0.0, 0.0, 0) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let dist = match dist_kind {
        "uniform" => CouplingDistribution::uniform(lo, hi),
        "two_point" => CouplingDistribution::two_point(lo, hi, p),
        "atom_plus_uniform" => CouplingDistribution::atom_plus_uniform(hi, p, lo, hi),
        other => return err_json(format!("unknown distribution kind `{other}`")),
    };
    let dist = match dist {
        Ok(d) => d,
        Err(e) => return err_json(e),
    };
    let half_width = (half_width as usize).clamp(4, 400);
    let realizations = (realizations as usize).clamp(1, 200);
    let est = match estimate_ids(&sym, &dist, half_width, realizations, seed as u64, (bins as usize).clamp(8, 512)) {
        Ok(e) => e,
        Err(e) => return err_json(e),
    };
    let coeff_square_sum: f64 = sym.coeffs().map(|(_, c)| c.norm_sqr()).sum();
    let mean = dist.mean();
    let constant_couplings = dist.kappa_max() == dist.kappa_min();
    let range = sym.range_bounds(4096);
    let payload = Payload {
        edges: est.histogram.edges.clone(),
        masses: est.histogram.masses.clone(),
        first_moment: ids_moment(&est, 1),
        first_moment_target: mean,
        second_moment: ids_moment(&est, 2),
        second_moment_target: dist.variance() + mean * mean * coeff_square_sum,
        min_eigenvalue: est.min_eigenvalue(),
        max_eigenvalue: est.max_eigenvalue(),
        sigma_max: dist.kappa_max() * range.phi_max,
        reference: constant_couplings.then(|| {
            szego_pushforward(&sym, 2048).iter().map(|v| v * dist.kappa_max()).collect()
        }),
    };
    serde_json::to_string(&payload).unwrap()
}

/// The analytic Lifshitz lower-bound curve over log-spaced `δ`, with the
/// least-squares slope of `log(−log ν)` against `log δ` for the whole
/// window and for its lower/upper halves.
#[wasm_bindgen]
pub fn lifshitz_tail_curve(
    dist_kind: &str,
    lo: f64,
    hi: f64,
    p: f64,
    a: f64,
    log10_delta_from: f64,
    log10_delta_to: f64,
    points: u32,
) -> String {
    #[derive(Serialize)]
    struct Payload {
        log10_deltas: Vec<f64>,
        log_neg_log: Vec<f64>,
        block_sizes: Vec<f64>,
        slope: f64,
        slope_low_half: f64,
        slope_high_half: f64,
        degenerate: bool,
    }
    let dist = match dist_kind {
        "uniform" => CouplingDistribution::uniform(lo, hi),
        "two_point" => CouplingDistribution::two_point(lo, hi, p),
        "atom_plus_uniform" => CouplingDistribution::atom_plus_uniform(hi, p, lo, hi),
        other => return err_json(format!("unknown distribution kind `{other}`")),
    };
    let dist = match dist {
        Ok(d) => d,
        Err(e) => return err_json(e),
    };
    let points = (points as usize).clamp(5, 200);
    let (top, bottom) = if log10_delta_from > log10_delta_to {
        (log10_delta_from, log10_delta_to)
    } else {
        (log10_delta_to, log10_delta_from)
    };
    let deltas: Vec<f64> = (0..points)
        .map(|i| 10f64.powf(top + (bottom - top) * i as f64 / (points - 1) as f64))
        .collect();
    let curve = match analytic_lower_curve(&dist, a, &deltas) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let slope = match tail_slope(&curve) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let half = points / 2;
    let low = analytic_lower_curve(&dist, a, &deltas[half..]).and_then(|c| tail_slope(&c));
    let high = analytic_lower_curve(&dist, a, &deltas[..=half]).and_then(|c| tail_slope(&c));
    let payload = Payload {
        log10_deltas: deltas.iter().map(|d| d.log10()).collect(),
        log_neg_log: curve.log_neg_log_values.clone(),
        block_sizes: curve.block_sizes.clone(),
        slope,
        slope_low_half: low.unwrap_or(f64::NAN),
        slope_high_half: high.unwrap_or(f64::NAN),
        degenerate: curve.degenerate,
    };
    serde_json::to_string(&payload).unwrap()
}

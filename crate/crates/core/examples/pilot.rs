use ergoproj_core::couplings::CouplingDistribution;
use ergoproj_core::edges::{bracket_tail_mc, point_mass_experiment};
use ergoproj_core::ids::{direct_tail_estimate, estimate_ids, ids_moment, szego_pushforward};
use ergoproj_core::localization::{fractional_moment_profile, ipr_profile};
use ergoproj_core::symbols::Symbol;
use num_complex::Complex64;
use std::time::Instant;

fn main() {
    let dist = CouplingDistribution::uniform(1.0, 2.0).unwrap();
    let one_cos = Symbol::model(1.0, 1.0).unwrap();

    // C8 moments at stated sizes
    let t = Instant::now();
    let est = estimate_ids(&one_cos, &dist, 500, 100, 8, 256).unwrap();
    println!(
        "C8 moments: m1={:.6} (1.5 ±0.5%), m2={:.6} (3.458333 ±1%)  [{:?}]",
        ids_moment(&est, 1),
        ids_moment(&est, 2),
        t.elapsed()
    );

    // C9 szego
    let t = Instant::now();
    let ones = CouplingDistribution::two_point(1.0, 1.0, 0.5).unwrap();
    let gram = estimate_ids(&one_cos, &ones, 1000, 1, 9, 256).unwrap();
    let reference = szego_pushforward(&one_cos, 8192);
    println!("C9 szego KS = {:.5} (≤0.02)  [{:?}]", gram.ks_against_sample(&reference), t.elapsed());

    // C11 wegner worst ratio at stated sizes
    let t = Instant::now();
    let est10 = estimate_ids(&one_cos, &dist, 1000, 20, 10, 256).unwrap();
    let wegner = ergoproj_core::ids::wegner_check(&est10, &dist, 0.5).unwrap();
    println!(
        "C10 max={:.4}; C11 wegner worst ratio = {:.4} (≤1.25), bins={}  [{:?}]",
        est10.max_eigenvalue(),
        wegner.worst_ratio,
        wegner.bins_checked,
        t.elapsed()
    );

    // C12 bracket vs direct
    let t = Instant::now();
    let model02 = Symbol::model(0.0, 2.0).unwrap();
    let b = bracket_tail_mc(0.0, 2.0, &dist, 32, 3.5, 20_000, 11).unwrap();
    let (direct, dse) = direct_tail_estimate(&model02, &dist, 1500, 12, 12, 3.5).unwrap();
    println!(
        "C12: lower={:.6e}±{:.1e} upper={:.6e}±{:.1e} direct={:.6e}±{:.1e}  [{:?}]",
        b.lower, b.lower_se, b.upper, b.upper_se, direct, dse, t.elapsed()
    );

    // C15 point-mass trends
    for p in [0.9, 0.2] {
        let t = Instant::now();
        let plateau = Symbol::plateau(std::f64::consts::PI / 2.0, 1.0, 0.0, 1600)
            .unwrap()
            .normalized()
            .unwrap();
        let atom = CouplingDistribution::atom_plus_uniform(2.0, p, 1.0, 2.0).unwrap();
        let rep = point_mass_experiment(&plateau, &atom, &[200, 400, 800], 20, 1e-3, 13).unwrap();
        println!(
            "C15 p={p}: w = {:?} trend={}  [{:?}]",
            rep.fractions,
            rep.trend.as_str(),
            t.elapsed()
        );
    }

    // C16 localization contrast
    let t = Instant::now();
    let z = Complex64::new(1.5, 0.05);
    let weak = fractional_moment_profile(&Symbol::model(1.0, 0.04).unwrap(), &dist, z, 0.25, 400, 400, 14).unwrap();
    let strong = fractional_moment_profile(&Symbol::model(1.0, 0.6).unwrap(), &dist, z, 0.25, 400, 400, 14).unwrap();
    println!(
        "C16 rates: eps=0.02 → {:.3}, eps=0.3 → {:.3} (ratio {:.2}, ≥2 needed)  [{:?}]",
        weak.fitted_decay_rate().unwrap(),
        strong.fitted_decay_rate().unwrap(),
        weak.fitted_decay_rate().unwrap() / strong.fitted_decay_rate().unwrap(),
        t.elapsed()
    );
    let t = Instant::now();
    let ipr_w = ipr_profile(&Symbol::model(1.0, 0.04).unwrap(), &dist, 400, 12, 15).unwrap();
    let ipr_ext = ipr_profile(&one_cos, &ones, 400, 1, 15).unwrap();
    println!(
        "C16 IPR: localized median={:.4} (≥0.5), extended={:.6} (≤{:.4})  [{:?}]",
        ipr_w.median,
        ipr_ext.median,
        10.0 / 400.0,
        t.elapsed()
    );
}

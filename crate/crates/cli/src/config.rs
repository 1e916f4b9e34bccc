//! Declarative experiment configuration.
//!
//! Configs are TOML with strict key checking; semantic validation collects
//! every violation rather than stopping at the first. The same structure is
//! echoed back into the run manifest.

use serde::{Deserialize, Serialize};

use ergoproj_core::couplings::CouplingDistribution;
use ergoproj_core::symbols::Symbol;

/// Experiment selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Ids,
    Wegner,
    Szego,
    EdgesLifshitz,
    EdgesPointmass,
    Localization,
    Checks,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Ids => "ids",
            Experiment::Wegner => "wegner",
            Experiment::Szego => "szego",
            Experiment::EdgesLifshitz => "edges_lifshitz",
            Experiment::EdgesPointmass => "edges_pointmass",
            Experiment::Localization => "localization",
            Experiment::Checks => "checks",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub kind: String,
    /// `model`: the constant term; `plateau`: the arc half-length.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub bandwidth: Option<usize>,
    #[serde(default)]
    pub normalized: Option<bool>,
    /// `custom`: `(n, re, im)` coefficient triples.
    #[serde(default)]
    pub coeffs: Option<Vec<(i64, f64, f64)>>,
}

impl SymbolSpec {
    pub fn build(&self) -> Result<Symbol, String> {
        match self.kind.as_str() {
            "orthogonal" => Ok(Symbol::orthogonal()),
            "model" => {
                let a = self.a.ok_or("model symbol needs `a`")?;
                let b = self.b.ok_or("model symbol needs `b`")?;
                Symbol::model(a, b).map_err(|e| e.to_string())
            }
            "plateau" => {
                let a = self.a.ok_or("plateau symbol needs `a` (arc half-length)")?;
                let hi = self.hi.ok_or("plateau symbol needs `hi`")?;
                let lo = self.lo.ok_or("plateau symbol needs `lo`")?;
                let bw = self.bandwidth.ok_or("plateau symbol needs `bandwidth`")?;
                let sym = Symbol::plateau(a, hi, lo, bw).map_err(|e| e.to_string())?;
                if self.normalized.unwrap_or(false) {
                    sym.normalized().map_err(|e| e.to_string())
                } else {
                    Ok(sym)
                }
            }
            "custom" => {
                let coeffs = self.coeffs.as_ref().ok_or("custom symbol needs `coeffs`")?;
                let pairs = coeffs
                    .iter()
                    .map(|&(n, re, im)| (n, num_complex::Complex64::new(re, im)));
                Symbol::from_coeffs(pairs, self.normalized.unwrap_or(false))
                    .map_err(|e| e.to_string())
            }
            other => Err(format!(
                "unknown symbol kind `{other}` (expected orthogonal|model|plateau|custom)"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub kind: String,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
    #[serde(default)]
    pub v1: Option<f64>,
    #[serde(default)]
    pub v2: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub atom_value: Option<f64>,
    #[serde(default)]
    pub atom_mass: Option<f64>,
}

impl DistributionSpec {
    pub fn build(&self) -> Result<CouplingDistribution, String> {
        match self.kind.as_str() {
            "uniform" => {
                let lo = self.lo.ok_or("uniform distribution needs `lo`")?;
                let hi = self.hi.ok_or("uniform distribution needs `hi`")?;
                CouplingDistribution::uniform(lo, hi).map_err(|e| e.to_string())
            }
            "two_point" => {
                let v1 = self.v1.ok_or("two_point distribution needs `v1`")?;
                let v2 = self.v2.ok_or("two_point distribution needs `v2`")?;
                let p = self.p.ok_or("two_point distribution needs `p`")?;
                CouplingDistribution::two_point(v1, v2, p).map_err(|e| e.to_string())
            }
            "atom_plus_uniform" => {
                let atom_value =
                    self.atom_value.ok_or("atom_plus_uniform needs `atom_value`")?;
                let atom_mass = self.atom_mass.ok_or("atom_plus_uniform needs `atom_mass`")?;
                let lo = self.lo.ok_or("atom_plus_uniform needs `lo`")?;
                let hi = self.hi.ok_or("atom_plus_uniform needs `hi`")?;
                CouplingDistribution::atom_plus_uniform(atom_value, atom_mass, lo, hi)
                    .map_err(|e| e.to_string())
            }
            other => Err(format!(
                "unknown distribution kind `{other}` \
                 (expected uniform|two_point|atom_plus_uniform)"
            )),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizesSpec {
    /// Window half-width `N` (matrices are `2N+1` dimensional).
    #[serde(default)]
    pub half_width: Option<usize>,
    /// Monte Carlo realization count `R`.
    #[serde(default)]
    pub realizations: Option<usize>,
    #[serde(default)]
    pub bins: Option<usize>,
    /// Bracketing block size `L`.
    #[serde(default)]
    pub block_size: Option<usize>,
    /// Block sample count for the bracketing Monte Carlo.
    #[serde(default)]
    pub samples: Option<usize>,
    /// Window sweep for the point-mass experiment.
    #[serde(default)]
    pub half_widths: Option<Vec<usize>>,
    /// Grid size for pushforward references.
    #[serde(default)]
    pub grid_size: Option<usize>,
    /// Realization count for eigenvector (participation) statistics.
    #[serde(default)]
    pub ipr_realizations: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSpec {
    /// Spectral parameter as `[re, im]`.
    #[serde(default)]
    pub z: Option<[f64; 2]>,
    /// Fractional moment exponent.
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub lambda_floor: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub eps_window: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
    /// Off-diagonal symbol sizes for the localization sweep.
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default)]
    pub trials: Option<usize>,
    /// Imaginary parts for the moment-sum grid.
    #[serde(default)]
    pub etas: Option<Vec<f64>>,
    /// Optional assertion target for the point-mass trend
    /// (`persistent` | `vanishing`).
    #[serde(default)]
    pub expected_trend: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub master_seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub symbol: Option<SymbolSpec>,
    #[serde(default)]
    pub distribution: Option<DistributionSpec>,
    #[serde(default)]
    pub sizes: SizesSpec,
    #[serde(default)]
    pub spectral: SpectralSpec,
    /// Output directory; overridable on the command line.
    #[serde(default)]
    pub out: Option<String>,
    /// Dump every constructed matrix in plain-text `dim\nrow col value`
    /// form (debugging only; large).
    #[serde(default)]
    pub dump_matrices: bool,
}

/// Parses and validates a config file, reporting every violation found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| vec![format!("TOML parse error: {e}")])?;
    let violations = validate(&cfg);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(violations)
    }
}

/// Semantic validation: collects all violations.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut errs = Vec::new();

    let dist = match (&cfg.distribution, cfg.experiment) {
        (Some(spec), _) => match spec.build() {
            Ok(d) => Some(d),
            Err(e) => {
                errs.push(format!("distribution: {e}"));
                None
            }
        },
        (None, Experiment::Checks) | (None, Experiment::Szego) => None,
        (None, _) => {
            errs.push("distribution: required for this experiment".into());
            None
        }
    };

    let symbol = match (&cfg.symbol, cfg.experiment) {
        (Some(spec), _) => match spec.build() {
            Ok(s) => Some(s),
            Err(e) => {
                errs.push(format!("symbol: {e}"));
                None
            }
        },
        (None, Experiment::Checks) | (None, Experiment::Localization) => None,
        (None, _) => {
            errs.push("symbol: required for this experiment".into());
            None
        }
    };

    let need = |errs: &mut Vec<String>, cond: bool, what: &str| {
        if !cond {
            errs.push(what.to_string());
        }
    };

    match cfg.experiment {
        Experiment::Ids | Experiment::Wegner => {
            need(&mut errs, cfg.sizes.half_width.is_some(), "sizes.half_width: required");
            need(&mut errs, cfg.sizes.realizations.is_some(), "sizes.realizations: required");
            if cfg.experiment == Experiment::Wegner {
                if let Some(d) = &dist {
                    if d.density_bound().is_none() {
                        errs.push(
                            "distribution: wegner experiment needs a bounded density \
                             (uniform); distributions with atoms violate the hypothesis"
                                .into(),
                        );
                    }
                }
                need(
                    &mut errs,
                    cfg.spectral.lambda_floor.map(|v| v > 0.0).unwrap_or(false),
                    "spectral.lambda_floor: required and positive",
                );
            }
        }
        Experiment::Szego => {
            need(&mut errs, cfg.sizes.half_width.is_some(), "sizes.half_width: required");
        }
        Experiment::EdgesLifshitz => {
            if let Some(spec) = &cfg.symbol {
                if spec.kind != "model" {
                    errs.push(
                        "symbol: spectral-edge analysis supports only the model kind \
                         a + b·cos k"
                            .into(),
                    );
                }
            }
            need(&mut errs, cfg.sizes.block_size.is_some(), "sizes.block_size: required");
            need(&mut errs, cfg.sizes.samples.is_some(), "sizes.samples: required");
            need(&mut errs, cfg.spectral.lambda.is_some(), "spectral.lambda: required");
            need(&mut errs, cfg.spectral.delta.is_some(), "spectral.delta: required");
            need(&mut errs, cfg.spectral.deltas.is_some(), "spectral.deltas: required");
            need(
                &mut errs,
                cfg.spectral.gamma.map(|g| g > 0.0 && g < 1.0).unwrap_or(false),
                "spectral.gamma: required, in (0, 1)",
            );
            need(&mut errs, cfg.spectral.trials.is_some(), "spectral.trials: required");
            need(&mut errs, cfg.sizes.half_width.is_some(), "sizes.half_width: required");
            need(&mut errs, cfg.sizes.realizations.is_some(), "sizes.realizations: required");
        }
        Experiment::EdgesPointmass => {
            if let Some(spec) = &cfg.symbol {
                if spec.kind != "plateau" {
                    errs.push("symbol: point-mass experiment needs a plateau symbol".into());
                }
            }
            need(&mut errs, cfg.sizes.half_widths.is_some(), "sizes.half_widths: required");
            need(&mut errs, cfg.sizes.realizations.is_some(), "sizes.realizations: required");
            need(
                &mut errs,
                cfg.spectral.eps_window.map(|v| v > 0.0).unwrap_or(false),
                "spectral.eps_window: required and positive",
            );
            if let (Some(sym), Some(widths)) =
                (symbol.as_ref(), cfg.sizes.half_widths.as_ref())
            {
                if let Some(&max_n) = widths.iter().max() {
                    if sym.bandwidth() < 2 * max_n {
                        errs.push(format!(
                            "symbol.bandwidth: must be at least 2*max(half_widths) = {} so \
                             matrices see exact plateau coefficients",
                            2 * max_n
                        ));
                    }
                }
            }
        }
        Experiment::Localization => {
            need(&mut errs, cfg.sizes.half_width.is_some(), "sizes.half_width: required");
            need(&mut errs, cfg.sizes.realizations.is_some(), "sizes.realizations: required");
            need(&mut errs, cfg.spectral.z.is_some(), "spectral.z: required");
            need(&mut errs, cfg.spectral.epsilons.is_some(), "spectral.epsilons: required");
            if let Some(z) = cfg.spectral.z {
                if !(z[1] > 0.0) {
                    errs.push("spectral.z: imaginary part must be positive".into());
                }
            }
            match (cfg.spectral.s, &dist) {
                (Some(s), Some(d)) => match d.holder_parameters() {
                    Some((tau, _)) => {
                        if !(s > 0.0 && s < tau / 2.0) {
                            errs.push(format!(
                                "spectral.s: must lie in (0, τ/2) = (0, {}); got {s}",
                                tau / 2.0
                            ));
                        }
                    }
                    None => errs.push(
                        "distribution: localization needs a uniformly Hölder distribution \
                         (uniform); atoms violate the hypothesis"
                            .into(),
                    ),
                },
                (None, _) => errs.push("spectral.s: required".into()),
                _ => {}
            }
        }
        Experiment::Checks => {}
    }

    errs
}

/// The built-in symbol and distribution catalog, for `--list-builtins`.
pub fn builtins_catalog() -> String {
    let mut s = String::new();
    s.push_str("symbols:\n");
    s.push_str("  orthogonal                      phi = 1 (orthonormal sequence)\n");
    s.push_str("  model(a, b)                     phi(k) = a + b cos k\n");
    s.push_str("  plateau(a, hi, lo, bandwidth)   hi on |k|<=a, lo elsewhere, truncated\n");
    s.push_str("  custom(coeffs = [[n,re,im],..]) explicit Hermitian coefficients\n");
    s.push_str("distributions:\n");
    s.push_str("  uniform(lo, hi)\n");
    s.push_str("  two_point(v1, v2, p)            value v2 with probability p\n");
    s.push_str("  atom_plus_uniform(atom_value, atom_mass, lo, hi)\n");
    s.push_str("experiments:\n");
    s.push_str("  ids wegner szego edges_lifshitz edges_pointmass localization checks\n");
    s
}

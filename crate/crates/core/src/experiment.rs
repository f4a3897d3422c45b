//! Contraction-rate experiments and the divergence-bound sweep.
//!
//! A rate experiment simulates datasets of increasing size from a fixed true
//! intensity, fits the posterior for each, and regresses the log median
//! posterior Hellinger radius on log n. Rates are defined only up to
//! constants, so the fitted slope (not the level) is the quantity of
//! interest.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::divergence::lemma1_bound_check;
use crate::error::{Error, Result};
use crate::field::IntensityField;
use crate::gp_prior::{sample_latent, GpPriorSpec};
use crate::grid::{make_grid, GridSpec};
use crate::link::{LinkKind, LinkSpec};
use crate::mcmc::{fit_posterior, posterior_summary, McmcConfig, PosteriorSummary};
use crate::point_process::simulate_ppp;
use crate::scalar::Scalar;
use crate::stats::{mix_seed, ols};

// Sub-stream tags for per-cell seed derivation.
const STREAM_DATA: u64 = 2;
const STREAM_CHAIN: u64 = 3;
const STREAM_SWEEP_W: u64 = 4;
const STREAM_SWEEP_V: u64 = 5;

/// Recipe for the true intensity of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSpec<S> {
    Constant { level: S },
    /// `offset + amplitude·sin(2π x₀)`, smooth on every grid.
    Sine { offset: S, amplitude: S },
    /// Explicit node values (one per grid node).
    Values(Vec<S>),
}

impl<S: Scalar> TruthSpec<S> {
    /// Materializes the truth on the grid and verifies it sits inside the
    /// link range, before any data are simulated.
    pub fn realize(&self, grid: &Arc<GridSpec<S>>, link: &LinkSpec<S>) -> Result<IntensityField<S>> {
        let values: Vec<S> = match self {
            TruthSpec::Constant { level } => vec![*level; grid.n_nodes()],
            TruthSpec::Sine { offset, amplitude } => (0..grid.n_nodes())
                .map(|i| {
                    let x = grid.node_coord(i, 0);
                    *offset + *amplitude * (S::of(2.0) * S::PI() * x).sin()
                })
                .collect(),
            TruthSpec::Values(v) => v.clone(),
        };
        if link.kind == LinkKind::LogisticVariant {
            for (node, &v) in values.iter().enumerate() {
                if !link.contains(v) {
                    return Err(Error::OutsideLinkRange {
                        node,
                        value: v.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        IntensityField::new(grid.clone(), values, link.kappa)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateExperimentConfig<S> {
    pub grid_dim: usize,
    pub grid_points_per_axis: usize,
    pub truth: TruthSpec<S>,
    pub n_grid: Vec<usize>,
    pub replicates_per_n: usize,
    pub prior: GpPriorSpec<S>,
    pub link: LinkSpec<S>,
    pub mcmc: McmcConfig<S>,
    /// Theoretical log-log slope the run is compared against.
    pub expected_exponent: S,
    pub seed: u64,
}

impl<S: Scalar> RateExperimentConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.len() < 4 {
            return Err(Error::InvalidConfig("n_grid needs at least 4 sizes".into()));
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig(
                "n_grid must be strictly increasing".into(),
            ));
        }
        if self.n_grid[0] == 0 {
            return Err(Error::InvalidConfig("sample sizes must be positive".into()));
        }
        if self.replicates_per_n == 0 {
            return Err(Error::InvalidConfig(
                "replicates_per_n must be at least 1".into(),
            ));
        }
        self.prior.validate()?;
        self.link.validate()?;
        self.mcmc.validate()
    }

    fn hash(&self) -> Result<String> {
        let blob = serde_json::to_vec(self)?;
        let mut hasher = Sha256::new();
        hasher.update(&blob);
        Ok(format!("{:x}", hasher.finalize()))
    }
}

/// One `(n, replicate)` cell of the experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateCell<S> {
    pub n: usize,
    pub replicate: usize,
    pub data_seed: u64,
    pub mcmc_seed: u64,
    pub median_rho: S,
    pub median_l2: S,
    pub acceptance_rate: S,
    pub pcn_step_final: S,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport<S> {
    pub cells: Vec<RateCell<S>>,
    /// OLS slope of `log median ρ` on `log n`, pooling replicates.
    pub slope: S,
    pub slope_std_error: S,
    pub intercept: S,
    pub expected_exponent: S,
    pub n_grid: Vec<usize>,
    pub replicates_per_n: usize,
    pub base_seed: u64,
    pub config_hash: String,
    /// Wall-clock time; excluded from determinism comparisons.
    pub runtime_seconds: f64,
}

/// Report plus the per-cell posterior summaries (aligned with
/// `report.cells`).
#[derive(Debug)]
pub struct RateExperimentRun<S> {
    pub report: RateReport<S>,
    pub summaries: Vec<PosteriorSummary<S>>,
}

pub fn run_rate_experiment<S: Scalar>(cfg: &RateExperimentConfig<S>) -> Result<RateExperimentRun<S>> {
    cfg.validate()?;
    let started = Instant::now();
    let grid = make_grid::<S>(cfg.grid_dim, cfg.grid_points_per_axis)?;
    let truth = cfg.truth.realize(&grid, &cfg.link)?;
    let config_hash = cfg.hash()?;

    let cells: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replicates_per_n).map(move |r| (n, r)))
        .collect();

    let results: Vec<(RateCell<S>, PosteriorSummary<S>)> = cells
        .par_iter()
        .enumerate()
        .map(|(cell_idx, &(n, replicate))| -> Result<_> {
            let data_seed = mix_seed(cfg.seed, cell_idx as u64, STREAM_DATA);
            let mcmc_seed = mix_seed(cfg.seed, cell_idx as u64, STREAM_CHAIN);
            let data = simulate_ppp(&truth, n, data_seed)?;
            let chain_cfg = McmcConfig {
                seed: mcmc_seed,
                ..cfg.mcmc
            };
            let draws = fit_posterior(&cfg.prior, &cfg.link, &data, &grid, &chain_cfg)?;
            let summary = posterior_summary(&draws, Some(&truth), &[])?;
            let median_rho = summary.rho_median.expect("truth supplied");
            let median_l2 = summary.l2_median.expect("truth supplied");
            if !median_rho.is_finite() || median_rho <= S::zero() {
                return Err(Error::NonFinite {
                    context: "median posterior radius",
                });
            }
            Ok((
                RateCell {
                    n,
                    replicate,
                    data_seed,
                    mcmc_seed,
                    median_rho,
                    median_l2,
                    acceptance_rate: draws.acceptance_rate,
                    pcn_step_final: draws.pcn_step_final,
                },
                summary,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let (cells, summaries): (Vec<RateCell<S>>, Vec<PosteriorSummary<S>>) =
        results.into_iter().unzip();

    let log_n: Vec<S> = cells.iter().map(|c| S::of_usize(c.n).ln()).collect();
    let log_rho: Vec<S> = cells.iter().map(|c| c.median_rho.ln()).collect();
    let fit = ols(&log_n, &log_rho);

    Ok(RateExperimentRun {
        report: RateReport {
            cells,
            slope: fit.slope,
            slope_std_error: fit.slope_std_error,
            intercept: fit.intercept,
            expected_exponent: cfg.expected_exponent,
            n_grid: cfg.n_grid.clone(),
            replicates_per_n: cfg.replicates_per_n,
            base_seed: cfg.seed,
            config_hash,
            runtime_seconds: started.elapsed().as_secs_f64(),
        },
        summaries,
    })
}

/// Median posterior radius per sample size, pooling replicates.
pub fn median_rho_by_n<S: Scalar>(report: &RateReport<S>) -> Vec<(usize, S)> {
    report
        .n_grid
        .iter()
        .map(|&n| {
            let rhos: Vec<S> = report
                .cells
                .iter()
                .filter(|c| c.n == n)
                .map(|c| c.median_rho)
                .collect();
            (n, crate::stats::median(&rhos))
        })
        .collect()
}

/// Outcome of checking the divergence bounds over many prior-path pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma1Sweep<S> {
    pub pairs: usize,
    /// Pairs violating any of the three sup-norm bounds (expected 0).
    pub violations: usize,
    /// Pairs violating `h² ≤ KL` (expected 0).
    pub h_squared_violations: usize,
    pub min_margin_hellinger: S,
    pub min_margin_kl: S,
    pub min_margin_v: S,
}

pub fn run_lemma1_sweep<S: Scalar>(
    prior: &GpPriorSpec<S>,
    link: &LinkSpec<S>,
    grid: &Arc<GridSpec<S>>,
    pairs: usize,
    seed: u64,
) -> Result<Lemma1Sweep<S>> {
    if pairs == 0 {
        return Err(Error::InvalidConfig("sweep needs at least one pair".into()));
    }
    let reports = (0..pairs)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let w = sample_latent(prior, grid, mix_seed(seed, i as u64, STREAM_SWEEP_W))?;
            let v = sample_latent(prior, grid, mix_seed(seed, i as u64, STREAM_SWEEP_V))?;
            lemma1_bound_check(&w, &v, link)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sweep = Lemma1Sweep {
        pairs,
        violations: 0,
        h_squared_violations: 0,
        min_margin_hellinger: S::infinity(),
        min_margin_kl: S::infinity(),
        min_margin_v: S::infinity(),
    };
    for r in &reports {
        if !(r.hellinger.satisfied() && r.kl.satisfied() && r.v.satisfied()) {
            sweep.violations += 1;
        }
        if !r.h_squared_vs_kl.satisfied() {
            sweep.h_squared_violations += 1;
        }
        sweep.min_margin_hellinger = sweep.min_margin_hellinger.min(r.hellinger.relative_margin());
        sweep.min_margin_kl = sweep.min_margin_kl.min(r.kl.relative_margin());
        sweep.min_margin_v = sweep.min_margin_v.min(r.v.relative_margin());
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridField;

    fn tiny_config() -> RateExperimentConfig<f64> {
        RateExperimentConfig {
            grid_dim: 1,
            grid_points_per_axis: 16,
            truth: TruthSpec::Sine {
                offset: 2.0,
                amplitude: 1.0,
            },
            n_grid: vec![4, 8, 16, 32],
            replicates_per_n: 1,
            prior: GpPriorSpec::riemann_liouville(1.0).unwrap(),
            link: LinkSpec::logistic(0.1, 10.0).unwrap(),
            mcmc: McmcConfig {
                iterations: 1_200,
                burn_in: 400,
                thin: 4,
                seed: 0,
                ..McmcConfig::default()
            },
            expected_exponent: -1.0 / 3.0,
            seed: 7,
        }
    }

    #[test]
    fn config_validation_catches_degenerate_grids() {
        let mut cfg = tiny_config();
        cfg.n_grid = vec![8, 8, 16, 32];
        assert!(cfg.validate().is_err());
        cfg.n_grid = vec![8, 16, 32];
        assert!(cfg.validate().is_err());
        cfg.n_grid = vec![8, 16, 32, 64];
        cfg.replicates_per_n = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn truth_outside_link_range_fails_before_simulation() {
        let mut cfg = tiny_config();
        cfg.truth = TruthSpec::Constant { level: 15.0 }; // above kappa + g_star
        let err = run_rate_experiment(&cfg).unwrap_err();
        assert!(matches!(err, Error::OutsideLinkRange { .. }));
    }

    #[test]
    fn truth_realization_honors_recipes() {
        let grid = make_grid::<f64>(1, 8).unwrap();
        let link = LinkSpec::logistic(0.1, 10.0).unwrap();
        let sine = TruthSpec::Sine {
            offset: 2.0,
            amplitude: 1.0,
        }
        .realize(&grid, &link)
        .unwrap();
        let x0 = grid.node_coord(0, 0);
        let expect = 2.0 + (2.0 * std::f64::consts::PI * x0).sin();
        assert!((sine.values()[0] - expect).abs() < 1e-12);

        let flat = TruthSpec::Constant { level: 2.0 }
            .realize(&grid, &link)
            .unwrap();
        assert_eq!(flat.values(), vec![2.0; 8].as_slice());

        // below kappa is rejected by the floor
        assert!(TruthSpec::Constant { level: 0.05 }.realize(&grid, &link).is_err());
    }

    #[test]
    fn small_rate_experiment_produces_finite_fit_and_is_deterministic() {
        let cfg = tiny_config();
        let run1 = run_rate_experiment(&cfg).unwrap();
        assert_eq!(run1.report.cells.len(), 4);
        assert!(run1.report.slope.is_finite());
        assert_eq!(run1.summaries.len(), run1.report.cells.len());

        let run2 = run_rate_experiment(&cfg).unwrap();
        let mut a = serde_json::to_value(&run1.report).unwrap();
        let mut b = serde_json::to_value(&run2.report).unwrap();
        a["runtime_seconds"] = 0.into();
        b["runtime_seconds"] = 0.into();
        assert_eq!(a, b);
    }

    #[test]
    fn lemma1_sweep_finds_no_violations() {
        let grid = make_grid::<f64>(1, 16).unwrap();
        let prior = GpPriorSpec::riemann_liouville(1.0).unwrap();
        for link in [
            LinkSpec::logistic(0.1, 4.0).unwrap(),
            LinkSpec::shifted_abs(0.1).unwrap(),
        ] {
            let sweep = run_lemma1_sweep(&prior, &link, &grid, 100, 15).unwrap();
            assert_eq!(sweep.violations, 0, "link {:?}", link.kind);
            assert_eq!(sweep.h_squared_violations, 0);
            assert!(sweep.min_margin_kl > 0.0);
        }
    }
}

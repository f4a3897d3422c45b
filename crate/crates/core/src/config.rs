//! The sectioned key-value configuration file (TOML syntax) shared by the
//! CLI subcommands: `[grid]`, `[prior]`, `[link]`, `[mcmc]`, `[experiment]`.
//!
//! Every key has a default, so a minimal run needs only the keys it wants to
//! change. Unknown keys are rejected.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{RateExperimentConfig, TruthSpec};
use crate::field::GridField;
use crate::gp_prior::{GpPriorKind, GpPriorSpec};
use crate::grid::{make_grid, GridSpec};
use crate::link::{LinkKind, LinkSpec};
use crate::mcmc::McmcConfig;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub grid: GridSection,
    pub prior: PriorSection,
    pub link: LinkSection,
    pub mcmc: McmcSection,
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub points_per_axis: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dim: 1,
            points_per_axis: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub kind: GpPriorKind,
    pub beta: f64,
    pub base_kernel_scale: f64,
    pub gamma_shape: f64,
    pub gamma_rate: f64,
    pub integration_substeps: usize,
}

impl Default for PriorSection {
    fn default() -> Self {
        PriorSection {
            kind: GpPriorKind::RiemannLiouville,
            beta: 1.0,
            base_kernel_scale: 1.0,
            gamma_shape: 1.0,
            gamma_rate: 1.0,
            integration_substeps: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub kind: LinkKind,
    pub kappa: f64,
    pub g_star: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        LinkSection {
            kind: LinkKind::LogisticVariant,
            kappa: 0.1,
            g_star: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSection {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub pcn_step: f64,
    pub adapt_target_acceptance: f64,
    pub seed: u64,
    pub a_update_every: usize,
}

impl Default for McmcSection {
    fn default() -> Self {
        McmcSection {
            iterations: 20_000,
            burn_in: 5_000,
            thin: 10,
            pcn_step: 0.5,
            adapt_target_acceptance: 0.25,
            seed: 0,
            a_update_every: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// `"sine"`, `"constant"` or `"csv"`.
    pub truth_kind: String,
    pub truth_level: f64,
    pub truth_offset: f64,
    pub truth_amplitude: f64,
    pub truth_csv: Option<String>,
    /// Sample size for `simulate`.
    pub n: usize,
    pub n_grid: Vec<usize>,
    pub replicates_per_n: usize,
    pub expected_exponent: f64,
    pub seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            truth_kind: "sine".into(),
            truth_level: 2.0,
            truth_offset: 2.0,
            truth_amplitude: 1.0,
            truth_csv: None,
            n: 100,
            n_grid: vec![8, 16, 32, 64, 128, 256, 512],
            replicates_per_n: 4,
            expected_exponent: -1.0 / 3.0,
            seed: 0,
        }
    }
}

impl FileConfig {
    pub fn from_toml_str(raw: &str) -> Result<Self> {
        Ok(toml::from_str(raw)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        FileConfig::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self)
            .map_err(|e| Error::InvalidConfig(format!("config serialization failed: {e}")))
    }

    pub fn grid(&self) -> Result<Arc<GridSpec<f64>>> {
        make_grid(self.grid.dim, self.grid.points_per_axis)
    }

    pub fn prior_spec(&self) -> Result<GpPriorSpec<f64>> {
        let spec = GpPriorSpec {
            kind: self.prior.kind,
            hurst_beta: self.prior.beta,
            base_kernel_scale: self.prior.base_kernel_scale,
            gamma_shape: self.prior.gamma_shape,
            gamma_rate: self.prior.gamma_rate,
            integration_substeps: self.prior.integration_substeps,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn link_spec(&self) -> Result<LinkSpec<f64>> {
        let spec = LinkSpec {
            kind: self.link.kind,
            kappa: self.link.kappa,
            g_star: self.link.g_star,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn mcmc_config(&self) -> Result<McmcConfig<f64>> {
        let cfg = McmcConfig {
            iterations: self.mcmc.iterations,
            burn_in: self.mcmc.burn_in,
            thin: self.mcmc.thin,
            pcn_step: self.mcmc.pcn_step,
            adapt_target_acceptance: self.mcmc.adapt_target_acceptance,
            seed: self.mcmc.seed,
            a_update_every: self.mcmc.a_update_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolves the truth recipe; CSV truths are loaded relative to
    /// `base_dir` and must live on the configured grid.
    pub fn truth_spec(&self, base_dir: &Path) -> Result<TruthSpec<f64>> {
        match self.experiment.truth_kind.as_str() {
            "constant" => Ok(TruthSpec::Constant {
                level: self.experiment.truth_level,
            }),
            "sine" => Ok(TruthSpec::Sine {
                offset: self.experiment.truth_offset,
                amplitude: self.experiment.truth_amplitude,
            }),
            "csv" => {
                let rel = self.experiment.truth_csv.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("truth_kind = \"csv\" requires truth_csv".into())
                })?;
                let field = crate::io::read_field_csv::<f64>(&base_dir.join(rel))?;
                let expected = self.grid()?;
                if !field.grid().compatible(&expected) {
                    return Err(Error::GridMismatch);
                }
                Ok(TruthSpec::Values(field.values().to_vec()))
            }
            other => Err(Error::InvalidConfig(format!("unknown truth_kind '{other}'"))),
        }
    }

    pub fn rate_experiment_config(&self, base_dir: &Path) -> Result<RateExperimentConfig<f64>> {
        let cfg = RateExperimentConfig {
            grid_dim: self.grid.dim,
            grid_points_per_axis: self.grid.points_per_axis,
            truth: self.truth_spec(base_dir)?,
            n_grid: self.experiment.n_grid.clone(),
            replicates_per_n: self.experiment.replicates_per_n,
            prior: self.prior_spec()?,
            link: self.link_spec()?,
            mcmc: self.mcmc_config()?,
            expected_exponent: self.experiment.expected_exponent,
            seed: self.experiment.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_config() {
        let cfg = FileConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.grid.points_per_axis, 64);
        assert_eq!(cfg.mcmc.iterations, 20_000);
        assert!(cfg.grid().is_ok());
        assert!(cfg.prior_spec().is_ok());
        assert!(cfg.link_spec().is_ok());
        assert!(cfg.mcmc_config().is_ok());
        let rate = cfg.rate_experiment_config(Path::new(".")).unwrap();
        assert_eq!(rate.n_grid, vec![8, 16, 32, 64, 128, 256, 512]);
        assert_eq!(rate.replicates_per_n, 4);
    }

    #[test]
    fn sections_override_defaults() {
        let raw = r#"
            [grid]
            dim = 1
            points_per_axis = 32

            [prior]
            kind = "rescaled_field"
            gamma_shape = 2.0

            [link]
            kappa = 0.2

            [mcmc]
            iterations = 1000
            burn_in = 200
            seed = 9

            [experiment]
            truth_kind = "constant"
            truth_level = 3.0
            n_grid = [4, 8, 16, 32]
        "#;
        let cfg = FileConfig::from_toml_str(raw).unwrap();
        assert_eq!(cfg.prior.kind, GpPriorKind::RescaledField);
        assert_eq!(cfg.link.kappa, 0.2);
        assert_eq!(cfg.mcmc.seed, 9);
        let rate = cfg.rate_experiment_config(Path::new(".")).unwrap();
        assert_eq!(
            rate.truth,
            TruthSpec::Constant { level: 3.0 }
        );
        assert_eq!(rate.n_grid, vec![4, 8, 16, 32]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(FileConfig::from_toml_str("[grid]\nnodes = 3\n").is_err());
        assert!(FileConfig::from_toml_str("[typo]\nx = 1\n").is_err());
    }

    #[test]
    fn invalid_values_are_reported() {
        let cfg = FileConfig::from_toml_str("[link]\nkappa = -1.0\n").unwrap();
        assert!(cfg.link_spec().is_err());
        let cfg = FileConfig::from_toml_str("[mcmc]\nburn_in = 99999\n").unwrap();
        assert!(cfg.mcmc_config().is_err());
        let cfg = FileConfig::from_toml_str("[experiment]\ntruth_kind = \"csv\"\n").unwrap();
        assert!(cfg.truth_spec(Path::new(".")).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = FileConfig::default();
        let raw = cfg.to_toml_string().unwrap();
        let back = FileConfig::from_toml_str(&raw).unwrap();
        assert_eq!(back.experiment.n_grid, cfg.experiment.n_grid);
    }
}

//! `ppp` — simulate Poisson point processes, evaluate likelihoods and
//! divergences, fit transformed-Gaussian-process posteriors, and run the
//! contraction-rate experiments.
//!
//! Exit codes: 0 success, 1 validation error (bad flags, config, or input
//! files), 2 runtime failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use ppp_core::config::FileConfig;
use ppp_core::divergence::{divergence_report, McOracleConfig};
use ppp_core::experiment::{run_lemma1_sweep, run_rate_experiment};
use ppp_core::io;
use ppp_core::mcmc::{fit_posterior, posterior_summary};
use ppp_core::point_process::log_likelihood;
use ppp_core::Error;

#[derive(Parser)]
#[command(name = "ppp", version, about = "Poisson point process intensity estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate i.i.d. patterns from the configured true intensity
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the [experiment] seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Override a config key, e.g. --set mcmc.seed=7
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Log-likelihood of a dataset under an intensity field CSV
    Loglik {
        #[arg(long)]
        lambda: PathBuf,
        /// Directory holding patterns.csv and dataset.json
        #[arg(long)]
        data: PathBuf,
    },
    /// Divergence report between two intensity field CSVs
    Divergence {
        #[arg(long)]
        lambda1: PathBuf,
        #[arg(long)]
        lambda2: PathBuf,
        /// Also run the Monte Carlo oracles
        #[arg(long)]
        mc_oracle: bool,
        #[arg(long, default_value_t = 50_000)]
        mc_patterns: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the posterior over intensities for a dataset
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Cap on full draws written to draws.csv
        #[arg(long, default_value_t = 200)]
        max_draws: usize,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Contraction-rate experiment over the configured n-grid
    RateExperiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check the divergence bounds on random prior-path pairs
    Lemma1Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1_000)]
        pairs: usize,
        /// Overrides the [experiment] seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

/// Parses the config file and applies `--set key=value` overrides by merging
/// each assignment as a TOML fragment (bare strings are auto-quoted).
fn load_config(path: &Path, overrides: &[String]) -> Result<FileConfig, Error> {
    let raw = fs::read_to_string(path)?;
    let mut table: toml::Table = raw
        .parse()
        .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
    for assignment in overrides {
        let fragment = parse_override(assignment)?;
        merge_tables(&mut table, fragment);
    }
    let merged = toml::to_string(&table)
        .map_err(|e| Error::InvalidConfig(format!("override merge failed: {e}")))?;
    FileConfig::from_toml_str(&merged)
}

fn parse_override(assignment: &str) -> Result<toml::Table, Error> {
    let invalid = || {
        Error::InvalidConfig(format!(
            "override '{assignment}' is not of the form section.key=value"
        ))
    };
    let (key, value) = assignment.split_once('=').ok_or_else(invalid)?;
    let key = key.trim();
    let value = value.trim();
    if key.is_empty() || value.is_empty() {
        return Err(invalid());
    }
    let direct = format!("{key} = {value}");
    if let Ok(table) = direct.parse::<toml::Table>() {
        return Ok(table);
    }
    // bare strings such as --set prior.kind=rescaled_field
    let quoted = format!("{key} = \"{value}\"");
    quoted.parse::<toml::Table>().map_err(|_| invalid())
}

fn merge_tables(base: &mut toml::Table, patch: toml::Table) {
    for (key, value) in patch {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => merge_tables(dst, src),
            (slot, value) => {
                if let Some(slot) = slot {
                    *slot = value;
                } else {
                    base.insert(key, value);
                }
            }
        }
    }
}

fn write_manifest(
    out: &Path,
    command: &str,
    config: Option<&FileConfig>,
    seeds: serde_json::Value,
) -> Result<(), Error> {
    let manifest = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seeds": seeds,
        "config": config.map(serde_json::to_value).transpose()?,
    });
    fs::create_dir_all(out)?;
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let seed = seed.unwrap_or(cfg.experiment.seed);
            let grid = cfg.grid()?;
            let link = cfg.link_spec()?;
            let base = config.parent().unwrap_or(Path::new("."));
            let truth = cfg.truth_spec(base)?.realize(&grid, &link)?;
            let data = ppp_core::point_process::simulate_ppp(&truth, cfg.experiment.n, seed)?;
            fs::create_dir_all(&out)?;
            io::write_dataset(&data, &out)?;
            io::write_field_csv(&truth, &out.join("truth.csv"))?;
            io::write_grid_json(&grid, &out.join("grid.json"))?;
            write_manifest(&out, "simulate", Some(&cfg), serde_json::json!({ "seed": seed }))?;
            println!(
                "wrote {} patterns ({} points) to {}",
                data.n_patterns(),
                data.total_points(),
                out.display()
            );
            Ok(())
        }

        Command::Loglik { lambda, data } => {
            let field = io::read_field_csv::<f64>(&lambda)?;
            let dataset = io::read_dataset::<f64>(&data)?;
            let ll = log_likelihood(&field, &dataset)?;
            println!("{ll:?}");
            Ok(())
        }

        Command::Divergence {
            lambda1,
            lambda2,
            mc_oracle,
            mc_patterns,
            seed,
            out,
        } => {
            let l1 = io::read_field_csv::<f64>(&lambda1)?;
            let l2 = io::read_field_csv::<f64>(&lambda2)?;
            let mc = mc_oracle.then_some(McOracleConfig {
                n_patterns: mc_patterns,
                seed,
            });
            let report = divergence_report(&l1, &l2, mc.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(out) = out {
                fs::create_dir_all(&out)?;
                io::write_json_pretty(&report, &out.join("divergence_report.json"))?;
                write_manifest(
                    &out,
                    "divergence",
                    None,
                    serde_json::json!({ "mc_seed": mc.map(|c| c.seed) }),
                )?;
            }
            Ok(())
        }

        Command::Fit {
            data,
            config,
            out,
            max_draws,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let grid = cfg.grid()?;
            let prior = cfg.prior_spec()?;
            let link = cfg.link_spec()?;
            let mcmc = cfg.mcmc_config()?;
            let dataset = io::read_dataset::<f64>(&data)?;
            let started = Instant::now();
            let draws = fit_posterior(&prior, &link, &dataset, &grid, &mcmc)?;
            let runtime = started.elapsed().as_secs_f64();
            let summary = posterior_summary(&draws, None, &[])?;
            fs::create_dir_all(&out)?;
            io::write_summary_csv(&grid, &summary, &out.join("summary.csv"))?;
            io::write_draws_csv(&draws, max_draws, &out.join("draws.csv"))?;
            io::write_json_pretty(
                &serde_json::json!({
                    "acceptance_rate": draws.acceptance_rate,
                    "s_final": draws.pcn_step_final,
                    "runtime_seconds": runtime,
                    "retained_draws": draws.len(),
                }),
                &out.join("diagnostics.json"),
            )?;
            write_manifest(
                &out,
                "fit",
                Some(&cfg),
                serde_json::json!({ "mcmc_seed": mcmc.seed }),
            )?;
            println!(
                "retained {} draws (acceptance {:.3}) in {:.1}s -> {}",
                draws.len(),
                draws.acceptance_rate,
                runtime,
                out.display()
            );
            Ok(())
        }

        Command::RateExperiment {
            config,
            out,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let rate_cfg = cfg.rate_experiment_config(base)?;
            let grid = cfg.grid()?;
            let run = run_rate_experiment(&rate_cfg)?;
            fs::create_dir_all(&out)?;
            io::write_json_pretty(&run.report, &out.join("rate_report.json"))?;
            write_cells_csv(&run.report, &out.join("cells.csv"))?;
            for (cell, summary) in run.report.cells.iter().zip(&run.summaries) {
                let name = format!("summary_n{}_rep{}.csv", cell.n, cell.replicate);
                io::write_summary_csv(&grid, summary, &out.join(name))?;
            }
            write_manifest(
                &out,
                "rate-experiment",
                Some(&cfg),
                serde_json::json!({
                    "experiment_seed": rate_cfg.seed,
                    "mcmc_seed": rate_cfg.mcmc.seed,
                }),
            )?;
            println!(
                "slope {:.4} ± {:.4} (expected exponent {:.4}) -> {}",
                run.report.slope,
                run.report.slope_std_error,
                run.report.expected_exponent,
                out.display()
            );
            Ok(())
        }

        Command::Lemma1Sweep {
            config,
            pairs,
            seed,
            out,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let seed = seed.unwrap_or(cfg.experiment.seed);
            let grid = cfg.grid()?;
            let prior = cfg.prior_spec()?;
            let link = cfg.link_spec()?;
            let sweep = run_lemma1_sweep(&prior, &link, &grid, pairs, seed)?;
            println!("{}", serde_json::to_string_pretty(&sweep)?);
            if let Some(out) = out {
                fs::create_dir_all(&out)?;
                io::write_json_pretty(&sweep, &out.join("lemma1_sweep.json"))?;
                write_manifest(&out, "lemma1-sweep", Some(&cfg), serde_json::json!({ "seed": seed }))?;
            }
            Ok(())
        }
    }
}

fn write_cells_csv(report: &ppp_core::RateReport64, path: &Path) -> Result<(), Error> {
    let mut body = String::from(
        "n,replicate,data_seed,mcmc_seed,median_rho,median_l2,acceptance_rate,pcn_step_final\n",
    );
    for c in &report.cells {
        body.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.n,
            c.replicate,
            c.data_seed,
            c.mcmc_seed,
            c.median_rho,
            c.median_l2,
            c.acceptance_rate,
            c.pcn_step_final
        ));
    }
    fs::write(path, body)?;
    Ok(())
}

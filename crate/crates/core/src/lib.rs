//! Nonparametric Bayesian estimation of Poisson point process intensities on
//! `[0,1]^d` under transformed-Gaussian-process priors.
//!
//! The pieces, bottom to top:
//!
//! - [`grid`]: the discretized domain with its uniform dominating measure and
//!   midpoint quadrature;
//! - [`field`]: intensity and latent functions as node values;
//! - [`point_process`]: process simulation and the observation likelihood;
//! - [`link`]: Lipschitz maps from latent paths to valid intensities;
//! - [`gp_prior`]: the Riemann–Liouville and rescaled-field priors;
//! - [`divergence`]: Hellinger/KL/V between process laws, Monte Carlo
//!   oracles, and the sup-norm bound checks;
//! - [`mcmc`]: prior-reversible posterior sampling on the latent path;
//! - [`experiment`]: contraction-rate runs and the bound sweep;
//! - [`config`], [`io`]: the file formats behind the CLI.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below are the default precision used by the CLI.

pub mod config;
pub mod divergence;
pub mod error;
pub mod experiment;
pub mod field;
pub mod gp_prior;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod link;
pub mod mcmc;
pub mod point_process;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use field::{GridField, IntensityField, LatentField};
pub use grid::{make_grid, GridSpec};
pub use scalar::Scalar;

pub type GridSpec64 = grid::GridSpec<f64>;
pub type IntensityField64 = field::IntensityField<f64>;
pub type LatentField64 = field::LatentField<f64>;
pub type PointPattern64 = point_process::PointPattern<f64>;
pub type Dataset64 = point_process::Dataset<f64>;
pub type LinkSpec64 = link::LinkSpec<f64>;
pub type GpPriorSpec64 = gp_prior::GpPriorSpec<f64>;
pub type McmcConfig64 = mcmc::McmcConfig<f64>;
pub type PosteriorDraws64 = mcmc::PosteriorDraws<f64>;
pub type PosteriorSummary64 = mcmc::PosteriorSummary<f64>;
pub type DivergenceReport64 = divergence::DivergenceReport<f64>;
pub type RateReport64 = experiment::RateReport<f64>;
pub type RateExperimentConfig64 = experiment::RateExperimentConfig<f64>;

//! Posterior sampling over intensity fields by Metropolis–Hastings on the
//! latent Gaussian path.
//!
//! The walk proposes `w' = √(1−s²)·w + s·ξ` with `ξ` a fresh prior draw, a
//! preconditioned Crank–Nicolson move whose prior-reversibility reduces the
//! acceptance ratio to the likelihood ratio `exp(ℓ(g(w')) − ℓ(g(w)))`. The
//! step size `s` is adapted by Robbins–Monro on `log s` during burn-in only,
//! then frozen. For the rescaled-field prior the length factor `A` is kept
//! fixed within blocks and refreshed by a log-random-walk move accepted with
//! the joint prior ratio (the data likelihood does not depend on `A` given
//! `w`, so it cancels).

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridField, IntensityField, LatentField};
use crate::gp_prior::{
    draw_length_factor, GpPriorKind, GpPriorSpec, RescaledFieldSampler, RiemannLiouvilleSampler,
};
use crate::grid::GridSpec;
use crate::link::{LinkKind, LinkSpec};
use crate::point_process::{log_likelihood_from_counts, node_counts, Dataset};
use crate::scalar::Scalar;
use crate::stats::{mean, quantile};

/// Scale of the log-random-walk proposal on the length factor `A`.
const A_PROPOSAL_SCALE: f64 = 0.3;
/// Bounds on the adapted step size.
const MIN_PCN_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McmcConfig<S> {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Initial proposal step `s ∈ (0, 1]`.
    pub pcn_step: S,
    pub adapt_target_acceptance: S,
    pub seed: u64,
    /// Refresh period of the length-factor move (rescaled-field prior only);
    /// 0 disables the move.
    pub a_update_every: usize,
}

impl<S: Scalar> Default for McmcConfig<S> {
    fn default() -> Self {
        McmcConfig {
            iterations: 20_000,
            burn_in: 5_000,
            thin: 10,
            pcn_step: S::of(0.5),
            adapt_target_acceptance: S::of(0.25),
            seed: 0,
            a_update_every: 5,
        }
    }
}

impl<S: Scalar> McmcConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidConfig("burn_in must be below iterations".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        if self.retained() == 0 {
            return Err(Error::InvalidConfig(
                "no draws retained: shrink thin or extend iterations".into(),
            ));
        }
        if !(self.pcn_step > S::zero() && self.pcn_step <= S::one()) {
            return Err(Error::InvalidConfig("pcn_step must lie in (0, 1]".into()));
        }
        if !(self.adapt_target_acceptance > S::zero() && self.adapt_target_acceptance < S::one()) {
            return Err(Error::InvalidConfig(
                "adapt_target_acceptance must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Retained posterior draws and chain diagnostics.
#[derive(Debug, Clone)]
pub struct PosteriorDraws<S> {
    pub grid: Arc<GridSpec<S>>,
    pub latent_draws: Vec<LatentField<S>>,
    pub intensity_draws: Vec<IntensityField<S>>,
    /// Length-factor trace; present only for the rescaled-field prior.
    pub a_draws: Option<Vec<S>>,
    /// Post-burn-in acceptance rate of the path move.
    pub acceptance_rate: S,
    pub log_likelihood_trace: Vec<S>,
    /// Step size after adaptation froze.
    pub pcn_step_final: S,
}

impl<S> PosteriorDraws<S> {
    pub fn len(&self) -> usize {
        self.latent_draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latent_draws.is_empty()
    }
}

enum PriorState<S: Scalar> {
    RiemannLiouville(RiemannLiouvilleSampler<S>),
    RescaledField {
        spec: GpPriorSpec<S>,
        grid: Arc<GridSpec<S>>,
        sampler: RescaledFieldSampler<S>,
    },
}

impl<S: Scalar> PriorState<S> {
    fn prepare<R: Rng + ?Sized>(
        prior: &GpPriorSpec<S>,
        grid: &Arc<GridSpec<S>>,
        rng: &mut R,
    ) -> Result<Self> {
        match prior.kind {
            GpPriorKind::RiemannLiouville => Ok(PriorState::RiemannLiouville(
                RiemannLiouvilleSampler::for_grid(prior, grid)?,
            )),
            GpPriorKind::RescaledField => {
                let a = draw_length_factor(prior, grid.dim(), rng);
                Ok(PriorState::RescaledField {
                    spec: *prior,
                    grid: grid.clone(),
                    sampler: RescaledFieldSampler::with_fixed_a(prior, grid, a)?,
                })
            }
        }
    }

    fn fresh_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<S> {
        match self {
            PriorState::RiemannLiouville(s) => s.sample(rng),
            PriorState::RescaledField { sampler, .. } => sampler.sample(rng),
        }
    }

    fn length_factor(&self) -> Option<S> {
        match self {
            PriorState::RiemannLiouville(_) => None,
            PriorState::RescaledField { sampler, .. } => Some(sampler.a()),
        }
    }
}

/// Unnormalized log prior density of the length factor: `A^d` is
/// Gamma(shape, rate), transformed to `A`.
fn length_factor_log_prior<S: Scalar>(spec: &GpPriorSpec<S>, dim: usize, a: S) -> S {
    let d = S::of_usize(dim);
    (spec.gamma_shape * d - S::one()) * a.ln() - spec.gamma_rate * a.powf(d)
}

/// Runs the chain against an arbitrary log-likelihood functional, starting
/// from `init`. This is the engine behind [`fit_posterior`]; tests use it to
/// hook flat or shifted likelihoods.
pub fn fit_posterior_with_loglik<S, F>(
    prior: &GpPriorSpec<S>,
    link: &LinkSpec<S>,
    grid: &Arc<GridSpec<S>>,
    init: LatentField<S>,
    mut loglik: F,
    cfg: &McmcConfig<S>,
) -> Result<PosteriorDraws<S>>
where
    S: Scalar,
    F: FnMut(&IntensityField<S>) -> Result<S>,
{
    cfg.validate()?;
    prior.validate()?;
    link.validate()?;
    if !init.grid().compatible(grid) {
        return Err(Error::GridMismatch);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut prior_state = PriorState::prepare(prior, grid, &mut rng)?;

    let mut w: Vec<S> = init.values().to_vec();
    let mut current_ll = loglik(&link.apply(&init))?;
    if !current_ll.is_finite() {
        return Err(Error::NonFinite {
            context: "log-likelihood at initialization",
        });
    }

    let retained = cfg.retained();
    let mut latent_draws = Vec::with_capacity(retained);
    let mut intensity_draws = Vec::with_capacity(retained);
    let mut ll_trace = Vec::with_capacity(retained);
    let mut a_trace: Option<Vec<S>> = prior_state.length_factor().map(|_| Vec::with_capacity(retained));

    let mut log_s = cfg.pcn_step.ln();
    let mut s = cfg.pcn_step;
    let mut accepted_post = 0usize;
    let mut proposals_post = 0usize;

    for t in 0..cfg.iterations {
        let xi = prior_state.fresh_draw(&mut rng);
        let damp = (S::one() - s * s).max(S::zero()).sqrt();
        let proposal: Vec<S> = w
            .iter()
            .zip(&xi)
            .map(|(&cur, &fresh)| damp * cur + s * fresh)
            .collect();
        let proposal_field = LatentField::new(grid.clone(), proposal)?;
        let proposal_ll = loglik(&link.apply(&proposal_field))?;

        let delta = proposal_ll - current_ll;
        let alpha = if delta >= S::zero() {
            S::one()
        } else {
            delta.exp()
        };
        let accepted = S::uniform_01(&mut rng) < alpha;
        if accepted {
            w = proposal_field.values().to_vec();
            current_ll = proposal_ll;
            if t >= cfg.burn_in {
                accepted_post += 1;
            }
        }
        if t >= cfg.burn_in {
            proposals_post += 1;
        }

        if t < cfg.burn_in {
            // Robbins–Monro on log s toward the target acceptance, frozen
            // after burn-in so the invariant law is untouched. The binary
            // accept indicator (not alpha) drives the update, keeping the
            // trajectory invariant under constant likelihood offsets.
            let gamma = S::of(((t + 1) as f64).powf(-0.6));
            let indicator = if accepted { S::one() } else { S::zero() };
            log_s += gamma * (indicator - cfg.adapt_target_acceptance);
            s = log_s.exp().max(S::of(MIN_PCN_STEP)).min(S::one());
            log_s = s.ln();
        }

        if cfg.a_update_every > 0 && (t + 1) % cfg.a_update_every == 0 {
            if let PriorState::RescaledField {
                spec,
                grid: pgrid,
                sampler,
            } = &mut prior_state
            {
                let a = sampler.a();
                let a_new = a * (S::of(A_PROPOSAL_SCALE) * S::standard_normal(&mut rng)).exp();
                let candidate = RescaledFieldSampler::with_fixed_a(spec, pgrid, a_new)?;
                let current_dens = {
                    let f = sampler.factor();
                    -(f.quadratic_form(&w) + f.log_det()) / S::of(2.0)
                };
                let candidate_dens = {
                    let f = candidate.factor();
                    -(f.quadratic_form(&w) + f.log_det()) / S::of(2.0)
                };
                // log-random-walk Jacobian contributes log(a_new / a)
                let log_ratio = length_factor_log_prior(spec, pgrid.dim(), a_new)
                    - length_factor_log_prior(spec, pgrid.dim(), a)
                    + candidate_dens
                    - current_dens
                    + (a_new / a).ln();
                let accept = if log_ratio >= S::zero() {
                    true
                } else {
                    S::uniform_01(&mut rng) < log_ratio.exp()
                };
                if accept {
                    *sampler = candidate;
                }
            }
        }

        if t >= cfg.burn_in && (t - cfg.burn_in) % cfg.thin == cfg.thin - 1 {
            let latent = LatentField::new(grid.clone(), w.clone())?;
            intensity_draws.push(link.apply(&latent));
            latent_draws.push(latent);
            ll_trace.push(current_ll);
            if let (Some(trace), Some(a)) = (a_trace.as_mut(), prior_state.length_factor()) {
                trace.push(a);
            }
        }
    }

    Ok(PosteriorDraws {
        grid: grid.clone(),
        latent_draws,
        intensity_draws,
        a_draws: a_trace,
        acceptance_rate: S::of_usize(accepted_post) / S::of_usize(proposals_post.max(1)),
        log_likelihood_trace: ll_trace,
        pcn_step_final: s,
    })
}

/// Samples the posterior over intensities given i.i.d. point patterns.
///
/// Initialization inverts the link at the observed average point count
/// (clamped to the middle 10%–90% of the link range), so the link must be
/// invertible.
pub fn fit_posterior<S: Scalar>(
    prior: &GpPriorSpec<S>,
    link: &LinkSpec<S>,
    data: &Dataset<S>,
    grid: &Arc<GridSpec<S>>,
    cfg: &McmcConfig<S>,
) -> Result<PosteriorDraws<S>> {
    if link.kind != LinkKind::LogisticVariant {
        return Err(Error::LinkNotInvertible {
            kind: link.kind.name(),
        });
    }
    link.validate()?;
    let counts = node_counts(grid, data)?;

    let observed_mean = S::of_usize(data.total_points()) / S::of_usize(data.n_patterns());
    let lo = link.kappa + S::of(0.1) * link.g_star;
    let hi = link.kappa + S::of(0.9) * link.g_star;
    let anchored = observed_mean.max(lo).min(hi);
    let init = LatentField::constant(grid.clone(), link.invert_scalar(anchored)?)?;

    fit_posterior_with_loglik(
        prior,
        link,
        grid,
        init,
        |lambda| log_likelihood_from_counts(lambda, &counts),
        cfg,
    )
}

/// Fraction of posterior mass outside a Hellinger ball of the given radius.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RadiusMass<S> {
    pub radius: S,
    pub mass_outside: S,
}

/// Node-wise posterior summary with optional distances to a known truth.
#[derive(Debug, Clone)]
pub struct PosteriorSummary<S> {
    pub node_mean: Vec<S>,
    /// 5% posterior quantile per node.
    pub band_lower: Vec<S>,
    /// 95% posterior quantile per node.
    pub band_upper: Vec<S>,
    pub rho_draws: Option<Vec<S>>,
    pub rho_median: Option<S>,
    pub l2_draws: Option<Vec<S>>,
    pub l2_median: Option<S>,
    pub mass_outside: Vec<RadiusMass<S>>,
}

/// Summarizes retained draws; when `truth` is given, also reports the
/// Hellinger pseudo-distance and `L₂(μ)` distance of every draw to it and the
/// posterior mass outside `{ρ ≤ r}` for each requested radius.
pub fn posterior_summary<S: Scalar>(
    draws: &PosteriorDraws<S>,
    truth: Option<&IntensityField<S>>,
    radii: &[S],
) -> Result<PosteriorSummary<S>> {
    if draws.is_empty() {
        return Err(Error::InvalidConfig("no retained draws to summarize".into()));
    }
    let n_nodes = draws.grid.n_nodes();
    let mut node_mean = Vec::with_capacity(n_nodes);
    let mut band_lower = Vec::with_capacity(n_nodes);
    let mut band_upper = Vec::with_capacity(n_nodes);
    let mut column = vec![S::zero(); draws.len()];
    for node in 0..n_nodes {
        for (k, draw) in draws.intensity_draws.iter().enumerate() {
            column[k] = draw.values()[node];
        }
        node_mean.push(mean(&column));
        band_lower.push(quantile(&column, 0.05));
        band_upper.push(quantile(&column, 0.95));
    }

    let (mut rho_draws, mut rho_median, mut l2_draws, mut l2_median) = (None, None, None, None);
    let mut mass_outside = Vec::new();
    if let Some(lambda0) = truth {
        let mut rho = Vec::with_capacity(draws.len());
        let mut l2 = Vec::with_capacity(draws.len());
        for draw in &draws.intensity_draws {
            rho.push(crate::divergence::hellinger_distance(lambda0, draw)?);
            l2.push(crate::field::l2_distance(lambda0, draw)?);
        }
        rho_median = Some(quantile(&rho, 0.5));
        l2_median = Some(quantile(&l2, 0.5));
        for &radius in radii {
            let outside = rho.iter().filter(|&&r| r > radius).count();
            mass_outside.push(RadiusMass {
                radius,
                mass_outside: S::of_usize(outside) / S::of_usize(rho.len()),
            });
        }
        rho_draws = Some(rho);
        l2_draws = Some(l2);
    }

    Ok(PosteriorSummary {
        node_mean,
        band_lower,
        band_upper,
        rho_draws,
        rho_median,
        l2_draws,
        l2_median,
        mass_outside,
    })
}

//! Discrepancies between Poisson process laws, computed from their intensity
//! functions.
//!
//! For intensities bounded away from zero the process laws are equivalent and
//! the discrepancies reduce to μ-integrals:
//!
//! * `KL(P₁, P₂) = ∫ λ₁ log(λ₁/λ₂) dμ − ∫ (λ₁/λ₂ − 1) λ₂ dμ`
//! * `V(P₁, P₂)  = ∫ λ₁ log²(λ₁/λ₂) dμ`
//! * `h(P₁, P₂)  = sqrt(2 − 2·exp(−½ ∫ (√λ₁ − √λ₂)² dμ))`
//!
//! The Hellinger form goes through the affinity `E_sp[√(p₁ p₂)]` of the two
//! densities relative to the standard process; a Monte Carlo affinity oracle
//! guards that identity, and log-likelihood-ratio oracles guard KL and V.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sup_distance, GridField, IntensityField, LatentField};
use crate::link::LinkSpec;
use crate::point_process::simulate_one_pattern;
use crate::scalar::Scalar;
use crate::stats::{mix_seed, pairwise_sum};

fn check_pair<S: Scalar>(l1: &IntensityField<S>, l2: &IntensityField<S>) -> Result<()> {
    if !l1.grid().compatible(l2.grid()) {
        return Err(Error::GridMismatch);
    }
    for field in [l1, l2] {
        for (node, &v) in field.values().iter().enumerate() {
            if v <= S::zero() {
                return Err(Error::NonPositiveIntensity { node });
            }
        }
    }
    Ok(())
}

fn quadrature<S: Scalar>(
    l1: &IntensityField<S>,
    l2: &IntensityField<S>,
    f: impl Fn(S, S) -> S,
) -> S {
    let integrand: Vec<S> = l1
        .values()
        .iter()
        .zip(l2.values())
        .map(|(&a, &b)| f(a, b))
        .collect();
    l1.grid().weight() * pairwise_sum(&integrand)
}

/// Kullback–Leibler divergence `KL(P_{λ1}, P_{λ2})`.
pub fn kl_divergence<S: Scalar>(
    l1: &IntensityField<S>,
    l2: &IntensityField<S>,
) -> Result<S> {
    check_pair(l1, l2)?;
    Ok(quadrature(l1, l2, |a, b| a * (a / b).ln() - (a - b)))
}

/// The discrepancy `V(P_{λ1}, P_{λ2}) = ∫ λ₁ log²(λ₁/λ₂) dμ`.
pub fn v_discrepancy<S: Scalar>(
    l1: &IntensityField<S>,
    l2: &IntensityField<S>,
) -> Result<S> {
    check_pair(l1, l2)?;
    Ok(quadrature(l1, l2, |a, b| {
        let lr = (a / b).ln();
        a * lr * lr
    }))
}

/// Hellinger affinity `E_sp[√(p₁ p₂)] = exp(−½ ∫ (√λ₁ − √λ₂)² dμ)`.
pub fn hellinger_affinity<S: Scalar>(
    l1: &IntensityField<S>,
    l2: &IntensityField<S>,
) -> Result<S> {
    check_pair(l1, l2)?;
    let q = quadrature(l1, l2, |a, b| {
        let d = a.sqrt() - b.sqrt();
        d * d
    });
    Ok((-q / S::of(2.0)).exp())
}

/// Hellinger distance between the process laws, in `[0, √2]`.
pub fn hellinger_distance<S: Scalar>(
    l1: &IntensityField<S>,
    l2: &IntensityField<S>,
) -> Result<S> {
    let affinity = hellinger_affinity(l1, l2)?;
    Ok((S::of(2.0) - S::of(2.0) * affinity).max(S::zero()).sqrt())
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate<S> {
    pub value: S,
    pub std_error: S,
    pub n_patterns: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McOracleConfig {
    pub n_patterns: usize,
    pub seed: u64,
}

impl Default for McOracleConfig {
    fn default() -> Self {
        McOracleConfig {
            n_patterns: 50_000,
            seed: 0,
        }
    }
}

// Sub-stream tags for oracle pattern generation.
const STREAM_LOG_RATIO: u64 = 10;
const STREAM_AFFINITY: u64 = 11;

/// Log density `log p_λ(ξ)` of one pattern relative to the standard process,
/// using precomputed per-node `log λ` and `∫(λ−1)dμ`.
fn pattern_log_density<S: Scalar>(
    pattern: &crate::point_process::PointPattern<S>,
    grid: &crate::grid::GridSpec<S>,
    log_values: &[S],
    integral: S,
) -> S {
    let mut acc = S::zero();
    for point in pattern.points() {
        acc += log_values[grid.nearest_node(point).expect("simulated point in domain")];
    }
    acc - integral
}

/// Monte Carlo oracle for KL and V: moments of the log-likelihood ratio under
/// patterns simulated from `λ₁`.
pub fn mc_log_ratio_oracle<S: Scalar>(
    l1: &IntensityField<S>,
    l2: &IntensityField<S>,
    cfg: &McOracleConfig,
) -> Result<(McEstimate<S>, McEstimate<S>)> {
    check_pair(l1, l2)?;
    if cfg.n_patterns < 2 {
        return Err(Error::InvalidConfig("oracle needs at least 2 patterns".into()));
    }
    let grid = l1.grid().clone();
    let log_ratio: Vec<S> = l1
        .values()
        .iter()
        .zip(l2.values())
        .map(|(&a, &b)| (a / b).ln())
        .collect();
    let centered: Vec<S> = l1
        .values()
        .iter()
        .zip(l2.values())
        .map(|(&a, &b)| a - b)
        .collect();
    let delta_integral = grid.weight() * pairwise_sum(&centered);
    let total_mass = l1.integrate();
    let bound = l1.max_value();

    let draws: Vec<S> = (0..cfg.n_patterns)
        .into_par_iter()
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, i as u64, STREAM_LOG_RATIO));
            let pattern = simulate_one_pattern(l1, total_mass, bound, &mut rng);
            let mut acc = S::zero();
            for point in pattern.points() {
                acc += log_ratio[grid.nearest_node(point).expect("point in domain")];
            }
            acc - delta_integral
        })
        .collect();

    let n = S::of_usize(draws.len());
    let mean = pairwise_sum(&draws) / n;
    let dev2: Vec<S> = draws.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let m2 = pairwise_sum(&dev2) / n;
    let dev4: Vec<S> = dev2.iter().map(|&d| d * d).collect();
    let m4 = pairwise_sum(&dev4) / n;

    let kl = McEstimate {
        value: mean,
        std_error: (m2 / n).sqrt(),
        n_patterns: cfg.n_patterns,
    };
    // V is estimated by the second central moment; its standard error comes
    // from the delta method, Var(m₂) ≈ (m₄ − m₂²)/n.
    let v = McEstimate {
        value: m2,
        std_error: ((m4 - m2 * m2).max(S::zero()) / n).sqrt(),
        n_patterns: cfg.n_patterns,
    };
    Ok((kl, v))
}

/// Monte Carlo oracle for the Hellinger affinity: the sample mean of
/// `√(p₁ p₂)` over patterns from the standard process.
pub fn mc_affinity_oracle<S: Scalar>(
    l1: &IntensityField<S>,
    l2: &IntensityField<S>,
    cfg: &McOracleConfig,
) -> Result<McEstimate<S>> {
    check_pair(l1, l2)?;
    if cfg.n_patterns < 2 {
        return Err(Error::InvalidConfig("oracle needs at least 2 patterns".into()));
    }
    let grid = l1.grid().clone();
    let unit = IntensityField::constant(grid.clone(), S::one())?;
    let log1: Vec<S> = l1.values().iter().map(|&a| a.ln()).collect();
    let log2: Vec<S> = l2.values().iter().map(|&a| a.ln()).collect();
    let centered1: Vec<S> = l1.values().iter().map(|&a| a - S::one()).collect();
    let centered2: Vec<S> = l2.values().iter().map(|&a| a - S::one()).collect();
    let int1 = grid.weight() * pairwise_sum(&centered1);
    let int2 = grid.weight() * pairwise_sum(&centered2);

    let draws: Vec<S> = (0..cfg.n_patterns)
        .into_par_iter()
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, i as u64, STREAM_AFFINITY));
            let pattern = simulate_one_pattern(&unit, S::one(), S::one(), &mut rng);
            let lp1 = pattern_log_density(&pattern, &grid, &log1, int1);
            let lp2 = pattern_log_density(&pattern, &grid, &log2, int2);
            ((lp1 + lp2) / S::of(2.0)).exp()
        })
        .collect();

    let n = S::of_usize(draws.len());
    let mean = pairwise_sum(&draws) / n;
    let dev2: Vec<S> = draws.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let sd = (pairwise_sum(&dev2) / (n - S::one())).sqrt();
    Ok(McEstimate {
        value: mean,
        std_error: sd / n.sqrt(),
        n_patterns: cfg.n_patterns,
    })
}

/// Closed-form discrepancies between two intensity fields, with optional
/// Monte Carlo cross-checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceReport<S> {
    pub hellinger: S,
    pub kl: S,
    pub v: S,
    /// `L₂(μ)` distance between the intensities themselves.
    pub l2_mu: S,
    /// Closed-form Hellinger affinity, the quantity the MC oracle estimates.
    pub affinity: S,
    pub mc_kl_estimate: Option<McEstimate<S>>,
    pub mc_v_estimate: Option<McEstimate<S>>,
    pub mc_affinity_estimate: Option<McEstimate<S>>,
}

pub fn divergence_report<S: Scalar>(
    l1: &IntensityField<S>,
    l2: &IntensityField<S>,
    mc: Option<&McOracleConfig>,
) -> Result<DivergenceReport<S>> {
    let hellinger = hellinger_distance(l1, l2)?;
    let kl = kl_divergence(l1, l2)?;
    let v = v_discrepancy(l1, l2)?;
    let l2_mu = crate::field::l2_distance(l1, l2)?;
    let affinity = hellinger_affinity(l1, l2)?;
    let (mc_kl_estimate, mc_v_estimate, mc_affinity_estimate) = match mc {
        Some(cfg) => {
            let (kl_est, v_est) = mc_log_ratio_oracle(l1, l2, cfg)?;
            let aff = mc_affinity_oracle(l1, l2, cfg)?;
            (Some(kl_est), Some(v_est), Some(aff))
        }
        None => (None, None, None),
    };
    Ok(DivergenceReport {
        hellinger,
        kl,
        v,
        l2_mu,
        affinity,
        mc_kl_estimate,
        mc_v_estimate,
        mc_affinity_estimate,
    })
}

/// One side-by-side comparison `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundCheck<S> {
    pub lhs: S,
    pub rhs: S,
}

impl<S: Scalar> BoundCheck<S> {
    pub fn satisfied(&self) -> bool {
        self.lhs <= self.rhs
    }

    /// `(rhs − lhs)/rhs`; defined as 1 when both sides are zero.
    pub fn relative_margin(&self) -> S {
        if self.rhs > S::zero() {
            (self.rhs - self.lhs) / self.rhs
        } else if self.lhs <= self.rhs {
            S::one()
        } else {
            S::neg_infinity()
        }
    }
}

/// Divergences between `g(w)` and `g(v)` against their sup-norm bounds
/// `h ≤ (ḡ/√κ)s`, `KL ≤ (ḡ²/κ)s²`, `V ≤ (ḡ²/κ)s²(1 + (ḡ/κ)s)` with
/// `s = ‖w − v‖_∞`, plus the `h² ≤ KL` comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma1Report<S> {
    pub sup_distance: S,
    pub hellinger: BoundCheck<S>,
    pub kl: BoundCheck<S>,
    pub v: BoundCheck<S>,
    pub h_squared_vs_kl: BoundCheck<S>,
}

impl<S: Scalar> Lemma1Report<S> {
    pub fn all_satisfied(&self) -> bool {
        self.hellinger.satisfied()
            && self.kl.satisfied()
            && self.v.satisfied()
            && self.h_squared_vs_kl.satisfied()
    }
}

/// Evaluates the divergence bounds for one pair of latent paths. A violated
/// bound is reported, not raised.
pub fn lemma1_bound_check<S: Scalar>(
    w: &LatentField<S>,
    v: &LatentField<S>,
    link: &LinkSpec<S>,
) -> Result<Lemma1Report<S>> {
    link.validate()?;
    if link.kappa <= S::zero() {
        return Err(Error::InvalidConfig(
            "bound checks require a strictly positive kappa".into(),
        ));
    }
    let l1 = link.apply(w);
    let l2 = link.apply(v);
    let s = sup_distance(w, v)?;
    let gbar = link.lipschitz_constant();
    let kappa = link.kappa;

    let h = hellinger_distance(&l1, &l2)?;
    let kl = kl_divergence(&l1, &l2)?;
    let vd = v_discrepancy(&l1, &l2)?;

    let kl_bound = gbar * gbar / kappa * s * s;
    Ok(Lemma1Report {
        sup_distance: s,
        hellinger: BoundCheck {
            lhs: h,
            rhs: gbar / kappa.sqrt() * s,
        },
        kl: BoundCheck {
            lhs: kl,
            rhs: kl_bound,
        },
        v: BoundCheck {
            lhs: vd,
            rhs: kl_bound * (S::one() + gbar / kappa * s),
        },
        h_squared_vs_kl: BoundCheck { lhs: h * h, rhs: kl },
    })
}

//! Poisson point process simulation and the observation likelihood.
//!
//! A pattern is one realisation `ξ = Σ δ_{x_i}` on `[0,1]^d`; a dataset is `n`
//! i.i.d. patterns. Simulation draws the total count from `Poisson(Λ)` with
//! `Λ = ∫ λ dμ`, then places points by rejection from uniform proposals, with
//! the intensity read off the nearest grid node. That piecewise-constant
//! reading keeps simulation and likelihood mutually consistent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{GridField, IntensityField};
use crate::grid::GridSpec;
use crate::scalar::Scalar;
use crate::stats::{mix_seed, pairwise_sum};

use std::sync::Arc;

// Sub-stream tags for per-pattern RNG derivation.
const STREAM_SIMULATE: u64 = 0;
const STREAM_AUGMENT: u64 = 1;

/// One realisation of the process: a finite (possibly empty) set of points in
/// `[0,1]^d`, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern<S> {
    dim: usize,
    coords: Vec<S>,
}

impl<S: Scalar> PointPattern<S> {
    pub fn new(dim: usize, coords: Vec<S>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("pattern dim must be positive".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coords.len(),
            });
        }
        for (i, chunk) in coords.chunks(dim).enumerate() {
            for &c in chunk {
                if !c.is_finite() || c < S::zero() || c > S::one() {
                    return Err(Error::PointOutOfDomain { index: i });
                }
            }
        }
        Ok(PointPattern { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        PointPattern {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &[S] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[S]> + '_ {
        self.coords.chunks(self.dim)
    }

    fn push(&mut self, point: &[S]) {
        self.coords.extend_from_slice(point);
    }
}

/// Record of how a dataset was generated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedProvenance {
    Seeded(u64),
    External,
}

/// `n ≥ 1` i.i.d. patterns sharing a dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S> {
    patterns: Vec<PointPattern<S>>,
    seed_provenance: SeedProvenance,
}

impl<S: Scalar> Dataset<S> {
    pub fn new(patterns: Vec<PointPattern<S>>, seed_provenance: SeedProvenance) -> Result<Self> {
        let dim = patterns.first().ok_or(Error::EmptyDataset)?.dim;
        for p in &patterns {
            if p.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim,
                });
            }
        }
        Ok(Dataset {
            patterns,
            seed_provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.patterns[0].dim
    }

    pub fn n_patterns(&self) -> usize {
        self.patterns.len()
    }

    pub fn patterns(&self) -> &[PointPattern<S>] {
        &self.patterns
    }

    pub fn counts(&self) -> Vec<usize> {
        self.patterns.iter().map(|p| p.n_points()).collect()
    }

    pub fn total_points(&self) -> usize {
        self.patterns.iter().map(|p| p.n_points()).sum()
    }

    pub fn seed_provenance(&self) -> &SeedProvenance {
        &self.seed_provenance
    }
}

pub(crate) fn simulate_one_pattern<S: Scalar, R: Rng + ?Sized>(
    field: &IntensityField<S>,
    total_mass: S,
    bound: S,
    rng: &mut R,
) -> PointPattern<S> {
    let grid = field.grid();
    let dim = grid.dim();
    let count = S::poisson_count(total_mass, rng);
    let mut pattern = PointPattern::empty(dim);
    let mut point = vec![S::zero(); dim];
    for _ in 0..count {
        loop {
            for c in point.iter_mut() {
                *c = S::uniform_01(rng);
            }
            let lambda = field.values()[grid
                .nearest_node(&point)
                .expect("uniform proposal lies in the domain")];
            if S::uniform_01(rng) * bound < lambda {
                pattern.push(&point);
                break;
            }
        }
    }
    pattern
}

/// Draws `n` i.i.d. patterns from the process with intensity `field`.
///
/// Each pattern uses its own RNG stream derived from `(seed, index)`, so the
/// result does not depend on scheduling order.
pub fn simulate_ppp<S: Scalar>(
    field: &IntensityField<S>,
    n: usize,
    seed: u64,
) -> Result<Dataset<S>> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let total_mass = field.integrate();
    let bound = field.max_value();
    if !total_mass.is_finite() || !bound.is_finite() {
        return Err(Error::NonFinite {
            context: "intensity mass",
        });
    }
    let patterns: Vec<PointPattern<S>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64, STREAM_SIMULATE));
            simulate_one_pattern(field, total_mass, bound, &mut rng)
        })
        .collect();
    Dataset::new(patterns, SeedProvenance::Seeded(seed))
}

/// Superposes an independent homogeneous process with intensity `κμ` onto
/// every pattern, so the augmented data target `κ + λ_0`.
pub fn augment_with_standard_ppp<S: Scalar>(
    data: &Dataset<S>,
    kappa: S,
    seed: u64,
) -> Result<Dataset<S>> {
    if !kappa.is_finite() || kappa <= S::zero() {
        return Err(Error::InvalidConfig("augmentation kappa must be positive".into()));
    }
    let dim = data.dim();
    let patterns: Vec<PointPattern<S>> = data
        .patterns
        .par_iter()
        .enumerate()
        .map(|(i, existing)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64, STREAM_AUGMENT));
            let mut merged = existing.clone();
            let extra = S::poisson_count(kappa, &mut rng);
            let mut point = vec![S::zero(); dim];
            for _ in 0..extra {
                for c in point.iter_mut() {
                    *c = S::uniform_01(&mut rng);
                }
                merged.push(&point);
            }
            merged
        })
        .collect();
    Dataset::new(patterns, SeedProvenance::Seeded(seed))
}

/// Per-node point tallies of a dataset, the sufficient statistic for the
/// likelihood under the piecewise-constant intensity reading.
#[derive(Debug, Clone)]
pub struct NodeCounts {
    dim: usize,
    points_per_axis: usize,
    counts: Vec<u64>,
    n_patterns: usize,
}

impl NodeCounts {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n_patterns(&self) -> usize {
        self.n_patterns
    }
}

pub fn node_counts<S: Scalar>(grid: &Arc<GridSpec<S>>, data: &Dataset<S>) -> Result<NodeCounts> {
    if data.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: data.dim(),
        });
    }
    let mut counts = vec![0u64; grid.n_nodes()];
    for pattern in data.patterns() {
        for point in pattern.points() {
            counts[grid.nearest_node(point)?] += 1;
        }
    }
    Ok(NodeCounts {
        dim: grid.dim(),
        points_per_axis: grid.points_per_axis(),
        counts,
        n_patterns: data.n_patterns(),
    })
}

/// Log-likelihood from precomputed node counts:
/// `Σ_j c_j log λ_j − n ∫ (λ − 1) dμ`.
pub fn log_likelihood_from_counts<S: Scalar>(
    field: &IntensityField<S>,
    counts: &NodeCounts,
) -> Result<S> {
    let grid = field.grid();
    if counts.dim != grid.dim() || counts.points_per_axis != grid.points_per_axis() {
        return Err(Error::GridMismatch);
    }
    let values = field.values();
    let mut point_terms = vec![S::zero(); values.len()];
    for (node, (&c, &lambda)) in counts.counts.iter().zip(values).enumerate() {
        if c == 0 {
            continue;
        }
        if lambda <= S::zero() {
            return Err(Error::NonPositiveIntensity { node });
        }
        point_terms[node] = S::of(c as f64) * lambda.ln();
    }
    // Integrate λ − 1 node-wise so a unit intensity gives exactly zero.
    let centered: Vec<S> = values.iter().map(|&v| v - S::one()).collect();
    let integral = grid.weight() * pairwise_sum(&centered);
    Ok(pairwise_sum(&point_terms) - S::of_usize(counts.n_patterns) * integral)
}

/// Log-likelihood of `data` under `field`, per the product-form density of
/// the observation model.
pub fn log_likelihood<S: Scalar>(field: &IntensityField<S>, data: &Dataset<S>) -> Result<S> {
    let counts = node_counts(field.grid(), data)?;
    log_likelihood_from_counts(field, &counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::stats::{mean, sample_variance};

    #[test]
    fn constant_intensity_counts_have_poisson_moments() {
        let g = make_grid::<f64>(1, 8).unwrap();
        let field = IntensityField::constant(g, 2.0).unwrap();
        let data = simulate_ppp(&field, 10_000, 7).unwrap();
        let counts: Vec<f64> = data.counts().iter().map(|&c| c as f64).collect();
        let m = mean(&counts);
        let v = sample_variance(&counts);
        // SE(mean) ~ 0.014, SE(var) ~ 0.032
        assert!((m - 2.0).abs() < 0.045, "mean {m}");
        assert!((v - 2.0).abs() < 0.1, "variance {v}");
    }

    #[test]
    fn small_constant_intensity_mean_count() {
        let g = make_grid::<f64>(1, 8).unwrap();
        let field = IntensityField::constant(g, 0.5).unwrap();
        let data = simulate_ppp(&field, 10_000, 11).unwrap();
        let counts: Vec<f64> = data.counts().iter().map(|&c| c as f64).collect();
        assert!((mean(&counts) - 0.5).abs() < 0.025);
    }

    #[test]
    fn linear_intensity_spatial_fraction() {
        // λ(x) = 1 + x: direct integration gives Λ([0,1/2]) = 5/8 and
        // Λ([1/2,1]) = 7/8 over a total mass of 3/2.
        let g = make_grid::<f64>(1, 64).unwrap();
        let field = IntensityField::from_fn(g, 1.0, |x| 1.0 + x[0]).unwrap();
        let data = simulate_ppp(&field, 20_000, 3).unwrap();
        let mut upper = 0usize;
        let mut total = 0usize;
        for p in data.patterns() {
            for pt in p.points() {
                total += 1;
                if pt[0] >= 0.5 {
                    upper += 1;
                }
            }
        }
        let upper_frac = upper as f64 / total as f64;
        let lower_frac = 1.0 - upper_frac;
        let expect_upper = (7.0 / 8.0) / 1.5;
        let expect_lower = (5.0 / 8.0) / 1.5;
        let se = (expect_upper * (1.0 - expect_upper) / total as f64).sqrt();
        assert!(
            (upper_frac - expect_upper).abs() < 3.0 * se,
            "upper fraction {upper_frac} vs {expect_upper} (3se = {})",
            3.0 * se
        );
        assert!(
            (lower_frac - expect_lower).abs() < 3.0 * se,
            "lower fraction {lower_frac} vs {expect_lower}"
        );
    }

    #[test]
    fn unit_intensity_log_likelihood_is_exactly_zero() {
        for m in [3usize, 8, 17] {
            let g = make_grid::<f64>(1, m).unwrap();
            let field = IntensityField::constant(g, 1.0).unwrap();
            let data = simulate_ppp(&field, 13, 5).unwrap();
            assert_eq!(log_likelihood(&field, &data).unwrap(), 0.0);
        }
    }

    #[test]
    fn log_likelihood_closed_forms() {
        let g = make_grid::<f64>(1, 16).unwrap();
        let field = IntensityField::constant(g.clone(), 2.0).unwrap();

        let empty = Dataset::new(vec![PointPattern::empty(1)], SeedProvenance::External).unwrap();
        let ll = log_likelihood(&field, &empty).unwrap();
        assert!((ll + 1.0).abs() < 1e-12, "empty pattern: {ll}");

        let three = Dataset::new(
            vec![PointPattern::new(1, vec![0.1, 0.5, 0.9]).unwrap()],
            SeedProvenance::External,
        )
        .unwrap();
        let ll3 = log_likelihood(&field, &three).unwrap();
        assert!((ll3 - (3.0 * 2.0f64.ln() - 1.0)).abs() < 1e-12, "{ll3}");
    }

    #[test]
    fn log_likelihood_ratio_identity() {
        let g = make_grid::<f64>(1, 16).unwrap();
        let l1 = IntensityField::from_fn(g.clone(), 0.2, |x| 0.5 + 2.0 * x[0] * x[0] + 0.2)
            .unwrap();
        let l2 = IntensityField::from_fn(g.clone(), 0.2, |x| 1.5 - x[0] + 0.2).unwrap();
        let data = simulate_ppp(&l1, 25, 99).unwrap();

        let lhs = log_likelihood(&l1, &data).unwrap() - log_likelihood(&l2, &data).unwrap();

        let mut point_sum = 0.0;
        for p in data.patterns() {
            for pt in p.points() {
                point_sum += (l1.value_at(pt).unwrap() / l2.value_at(pt).unwrap()).ln();
            }
        }
        let diff = IntensityField::new(
            g,
            l1.values()
                .iter()
                .zip(l2.values())
                .map(|(&a, &b)| a - b + 10.0)
                .collect(),
            0.0,
        )
        .unwrap();
        let integral = diff.integrate() - 10.0;
        let rhs = point_sum - data.n_patterns() as f64 * integral;
        assert!((lhs - rhs).abs() < 1e-9, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn log_likelihood_rejects_zero_intensity_at_observed_point() {
        let g = make_grid::<f64>(1, 4).unwrap();
        let field = IntensityField::new(g, vec![0.0, 1.0, 1.0, 1.0], 0.0).unwrap();
        let data = Dataset::new(
            vec![PointPattern::new(1, vec![0.1]).unwrap()],
            SeedProvenance::External,
        )
        .unwrap();
        assert!(matches!(
            log_likelihood(&field, &data),
            Err(Error::NonPositiveIntensity { node: 0 })
        ));
    }

    #[test]
    fn simulation_is_reproducible() {
        let g = make_grid::<f64>(2, 5).unwrap();
        let field = IntensityField::from_fn(g, 0.5, |x| 0.5 + x[0] + x[1]).unwrap();
        let a = simulate_ppp(&field, 50, 1234).unwrap();
        let b = simulate_ppp(&field, 50, 1234).unwrap();
        assert_eq!(a, b);
        let c = simulate_ppp(&field, 50, 1235).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn augmentation_with_tiny_kappa_adds_nothing() {
        let g = make_grid::<f64>(1, 8).unwrap();
        let field = IntensityField::constant(g, 1.0).unwrap();
        let data = simulate_ppp(&field, 100, 2).unwrap();
        let augmented = augment_with_standard_ppp(&data, 1e-9, 77).unwrap();
        assert_eq!(data.counts(), augmented.counts());
        assert!(augment_with_standard_ppp(&data, 0.0, 77).is_err());
    }

    #[test]
    fn augmentation_of_empty_patterns_is_standard_poisson() {
        let empties = Dataset::new(
            vec![PointPattern::empty(1); 10_000],
            SeedProvenance::External,
        )
        .unwrap();
        let augmented = augment_with_standard_ppp(&empties, 2.0, 8).unwrap();
        let counts: Vec<f64> = augmented.counts().iter().map(|&c| c as f64).collect();
        assert!((mean(&counts) - 2.0).abs() < 0.045);
        assert!((sample_variance(&counts) - 2.0).abs() < 0.1);
    }

    #[test]
    fn augmentation_superposes_independent_processes() {
        // λ_0 ≡ 1 plus κ = 1 gives Poisson(2) counts.
        let g = make_grid::<f64>(1, 8).unwrap();
        let field = IntensityField::constant(g, 1.0).unwrap();
        let data = simulate_ppp(&field, 10_000, 21).unwrap();
        let augmented = augment_with_standard_ppp(&data, 1.0, 22).unwrap();
        let counts: Vec<f64> = augmented.counts().iter().map(|&c| c as f64).collect();
        assert!((mean(&counts) - 2.0).abs() < 0.045);
        assert!((sample_variance(&counts) - 2.0).abs() < 0.1);
    }

    #[test]
    fn pattern_validation() {
        assert!(PointPattern::new(1, vec![0.0, 0.5, 1.0]).is_ok());
        assert!(matches!(
            PointPattern::new(1, vec![0.5, 1.5]),
            Err(Error::PointOutOfDomain { index: 1 })
        ));
        assert!(PointPattern::new(2, vec![0.5, 0.5, 0.1]).is_err());
        assert!(Dataset::<f64>::new(vec![], SeedProvenance::External).is_err());
    }
}

//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible under `--nocapture`).
//!
//! Criteria:
//!  1. divergence closed forms for constant intensities, to 1e-6;
//!  2. closed forms agree with the Monte Carlo oracles on 20 random smooth
//!     pairs within 3 standard errors;
//!  3. the sup-norm divergence bounds hold on 1000 prior-path pairs per link
//!     kind, with `h² ≤ KL` everywhere;
//!  4. simulated counts pass Poisson goodness-of-fit and disjoint cells are
//!     uncorrelated;
//!  5. prior sampler moments match their closed forms;
//!  6. the flat-likelihood chain reproduces prior marginals (KS, level 0.01);
//!  7. Example-1 contraction trend: slope in [−0.50, −0.17] and the median
//!     radius halves from n = 8 to n = 512;
//!  8. Example-2 contraction trend: same envelope (the log factor of the
//!     theoretical rate is folded into it — not separable at this scale);
//!  9. fixed seeds reproduce identical outputs across the pipeline.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

use ppp_core::divergence::{
    divergence_report, hellinger_distance, kl_divergence, lemma1_bound_check, mc_affinity_oracle,
    mc_log_ratio_oracle, v_discrepancy, McOracleConfig,
};
use ppp_core::experiment::{
    median_rho_by_n, run_lemma1_sweep, run_rate_experiment, RateExperimentConfig, TruthSpec,
};
use ppp_core::field::{GridField, IntensityField, LatentField};
use ppp_core::gp_prior::{
    sample_latent, GpPriorSpec, RescaledFieldSampler, RiemannLiouvilleSampler,
};
use ppp_core::grid::{make_grid, GridSpec};
use ppp_core::link::LinkSpec;
use ppp_core::mcmc::{fit_posterior, fit_posterior_with_loglik, McmcConfig};
use ppp_core::point_process::{simulate_ppp, Dataset};
use ppp_core::stats::{ks_critical_value, mix_seed, two_sample_ks_statistic};
use ppp_core::Scalar;

fn pass(criterion: u32, what: &str) {
    println!("[acceptance] criterion {criterion} ({what}): PASS");
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn criterion_1_divergence_closed_forms() {
    let grid = make_grid::<f64>(1, 32).unwrap();
    let l1 = IntensityField::constant(grid.clone(), 2.0).unwrap();
    let l2 = IntensityField::constant(grid, 1.0).unwrap();

    let kl = kl_divergence(&l1, &l2).unwrap();
    let v = v_discrepancy(&l1, &l2).unwrap();
    let h = hellinger_distance(&l1, &l2).unwrap();

    let kl_expect = 2.0 * 2.0f64.ln() - 1.0;
    let v_expect = 2.0 * 2.0f64.ln().powi(2);
    // evaluated from the affinity identity: exp(−(√2−1)²/2) = 0.9177903…,
    // giving h = 0.4054854…
    let h_expect = (2.0 - 2.0 * (-(2.0f64.sqrt() - 1.0).powi(2) / 2.0).exp()).sqrt();

    assert!((kl - kl_expect).abs() < 1e-6, "KL {kl} vs {kl_expect}");
    assert!((v - v_expect).abs() < 1e-6, "V {v} vs {v_expect}");
    assert!((h - h_expect).abs() < 1e-6, "h {h} vs {h_expect}");
    assert!((h - 0.405485).abs() < 1e-5, "h {h} digits");
    pass(1, "divergence closed forms");
}

// ---------------------------------------------------------------- criterion 2

fn random_smooth_field(grid: &Arc<GridSpec<f64>>, rng: &mut ChaCha8Rng) -> IntensityField<f64> {
    let base = 1.0 + 2.0 * f64::uniform_01(rng);
    let a1 = 0.8 * (2.0 * f64::uniform_01(rng) - 1.0);
    let a2 = 0.5 * (2.0 * f64::uniform_01(rng) - 1.0);
    let phase = std::f64::consts::TAU * f64::uniform_01(rng);
    IntensityField::from_fn(grid.clone(), 0.1, |x| {
        (base + a1 * (std::f64::consts::TAU * x[0] + phase).sin()
            + a2 * (2.0 * std::f64::consts::TAU * x[0]).cos())
        .max(0.3)
    })
    .unwrap()
}

#[test]
fn criterion_2_oracle_equivalence() {
    let grid = make_grid::<f64>(1, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(24_601);
    for pair in 0..20 {
        let l1 = random_smooth_field(&grid, &mut rng);
        let l2 = random_smooth_field(&grid, &mut rng);
        let cfg = McOracleConfig {
            n_patterns: 50_000,
            seed: mix_seed(600, pair, 0),
        };

        let (kl_mc, v_mc) = mc_log_ratio_oracle(&l1, &l2, &cfg).unwrap();
        let kl = kl_divergence(&l1, &l2).unwrap();
        let v = v_discrepancy(&l1, &l2).unwrap();
        assert!(
            (kl - kl_mc.value).abs() <= 3.0 * kl_mc.std_error,
            "pair {pair}: KL {kl} vs MC {} ± {}",
            kl_mc.value,
            kl_mc.std_error
        );
        assert!(
            (v - v_mc.value).abs() <= 3.0 * v_mc.std_error,
            "pair {pair}: V {v} vs MC {} ± {}",
            v_mc.value,
            v_mc.std_error
        );

        let aff_mc = mc_affinity_oracle(&l1, &l2, &cfg).unwrap();
        let h = hellinger_distance(&l1, &l2).unwrap();
        let h_mc = (2.0 - 2.0 * aff_mc.value).max(0.0).sqrt();
        // delta method: dh/d(affinity) = −1/h
        let h_se = aff_mc.std_error / h_mc.max(1e-12);
        assert!(
            (h - h_mc).abs() <= 3.0 * h_se,
            "pair {pair}: h {h} vs MC {h_mc} ± {h_se}"
        );
    }
    pass(2, "oracle equivalence on 20 random pairs");
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn criterion_3_lemma1_sweep() {
    let grid = make_grid::<f64>(1, 32).unwrap();
    let prior = GpPriorSpec::riemann_liouville(1.0).unwrap();
    for link in [
        LinkSpec::logistic(0.1, 10.0).unwrap(),
        LinkSpec::shifted_abs(0.1).unwrap(),
    ] {
        let sweep = run_lemma1_sweep(&prior, &link, &grid, 1_000, 99).unwrap();
        assert_eq!(sweep.pairs, 1_000);
        assert_eq!(
            sweep.violations, 0,
            "{:?}: sup-norm bound violations",
            link.kind
        );
        assert_eq!(
            sweep.h_squared_violations, 0,
            "{:?}: h² ≤ KL violations",
            link.kind
        );
    }
    pass(3, "1000-pair bound sweep per link kind");
}

// ---------------------------------------------------------------- criterion 4

/// Chi-square goodness-of-fit of observed counts against Poisson(mean),
/// pooling the tail so every bin expects at least five observations.
fn poisson_gof_statistic(counts: &[usize], mean: f64) -> (f64, usize) {
    let n = counts.len() as f64;
    let pmf = Poisson::new(mean).unwrap();
    let mut bins: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut k = 0u64;
    let mut cum = 0.0;
    loop {
        let expect = n * pmf.pmf(k);
        if expect < 5.0 && !bins.is_empty() {
            break;
        }
        let observed = counts.iter().filter(|&&c| c as u64 == k).count() as f64;
        bins.push((observed, expect));
        cum += expect;
        k += 1;
    }
    // pooled tail
    let tail_expect = n - cum;
    let tail_observed = counts.iter().filter(|&&c| c as u64 >= k).count() as f64;
    if tail_expect > 0.0 {
        bins.push((tail_observed, tail_expect));
    }
    let stat = bins
        .iter()
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum::<f64>();
    (stat, bins.len() - 1)
}

fn cell_counts(data: &Dataset<f64>, lo: f64, hi: f64) -> Vec<usize> {
    data.patterns()
        .iter()
        .map(|p| p.points().filter(|pt| pt[0] >= lo && pt[0] < hi).count())
        .collect()
}

#[test]
fn criterion_4_simulator_law() {
    let grid = make_grid::<f64>(1, 64).unwrap();
    let constant = IntensityField::constant(grid.clone(), 2.0).unwrap();
    let linear = IntensityField::from_fn(grid, 1.0, |x| 1.0 + x[0]).unwrap();

    // (field, cell, Λ(cell)) with Λ from direct integration
    let cases: [(&IntensityField<f64>, (f64, f64), f64); 4] = [
        (&constant, (0.0, 0.25), 0.5),
        (&constant, (0.5, 0.75), 0.5),
        (&linear, (0.0, 0.25), 0.25 + 0.03125),
        (&linear, (0.5, 0.75), 0.25 + 0.15625),
    ];
    for (i, (field, (lo, hi), mass)) in cases.iter().enumerate() {
        let data = simulate_ppp(field, 10_000, 4_000 + i as u64).unwrap();
        let counts = cell_counts(&data, *lo, *hi);
        let (stat, dof) = poisson_gof_statistic(&counts, *mass);
        let crit = ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.99);
        assert!(
            stat < crit,
            "case {i}: chi-square {stat:.2} vs critical {crit:.2} (dof {dof})"
        );
    }

    // disjoint-cell covariance within 3 SE of zero
    for (i, field) in [&constant, &linear].into_iter().enumerate() {
        let data = simulate_ppp(field, 10_000, 4_100 + i as u64).unwrap();
        let a = cell_counts(&data, 0.0, 0.25);
        let b = cell_counts(&data, 0.5, 0.75);
        let n = a.len() as f64;
        let ma = a.iter().sum::<usize>() as f64 / n;
        let mb = b.iter().sum::<usize>() as f64 / n;
        let products: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| (x as f64 - ma) * (y as f64 - mb))
            .collect();
        let cov = products.iter().sum::<f64>() / (n - 1.0);
        let var_prod = products.iter().map(|p| (p - cov).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var_prod / n).sqrt();
        assert!(
            cov.abs() < 3.0 * se,
            "field {i}: covariance {cov} vs 3se {}",
            3.0 * se
        );
    }
    pass(4, "Poisson counts and independence across cells");
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn criterion_5_prior_sampler_moments() {
    // Riemann–Liouville integral-part variances against the Itô isometry.
    let n = 20_000;
    for (beta, coord, var_expect) in [(0.5f64, 0.5f64, 0.5f64), (1.5, 1.0, 1.0 / 3.0)] {
        let sampler = RiemannLiouvilleSampler::new(beta, vec![coord], 512).unwrap();
        let draws: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(700, i, 0));
                sampler.sample_parts(&mut rng).1[0]
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = var_expect * (2.0 / n as f64).sqrt();
        assert!(
            (var - var_expect).abs() < 4.0 * se,
            "beta {beta}: var {var} vs {var_expect} (4se {})",
            4.0 * se
        );
    }

    // Rescaled-field empirical covariance against exp(−A²r²/ℓ²) at fixed A.
    let spec = GpPriorSpec::rescaled_field(1.0, 1.0, 1.0).unwrap();
    let grid = make_grid::<f64>(1, 6).unwrap();
    let a = 1.3;
    let sampler = RescaledFieldSampler::with_fixed_a(&spec, &grid, a).unwrap();
    let samples: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(701, i, 0));
            sampler.sample(&mut rng)
        })
        .collect();
    let nf = n as f64;
    for i in 0..grid.n_nodes() {
        for j in 0..=i {
            let mi = samples.iter().map(|s| s[i]).sum::<f64>() / nf;
            let mj = samples.iter().map(|s| s[j]).sum::<f64>() / nf;
            let cov = samples
                .iter()
                .map(|s| (s[i] - mi) * (s[j] - mj))
                .sum::<f64>()
                / (nf - 1.0);
            let r = grid.node_coord(i, 0) - grid.node_coord(j, 0);
            let expect = (-a * a * r * r).exp();
            let se = ((expect * expect + 1.0) / nf).sqrt();
            assert!(
                (cov - expect).abs() < 4.0 * se,
                "entry ({i},{j}): {cov} vs {expect} (4se {})",
                4.0 * se
            );
        }
    }
    pass(5, "prior sampler moment checks");
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn criterion_6_flat_likelihood_reproduces_prior() {
    let grid = make_grid::<f64>(1, 16).unwrap();
    let prior = GpPriorSpec::riemann_liouville(1.0).unwrap();
    let link = LinkSpec::logistic(0.1, 10.0).unwrap();
    let cfg = McmcConfig {
        iterations: 20_000,
        burn_in: 2_000,
        thin: 2,
        seed: 606,
        ..McmcConfig::default()
    };
    let init = LatentField::constant(grid.clone(), 0.0).unwrap();
    let draws = fit_posterior_with_loglik(&prior, &link, &grid, init, |_| Ok(0.0), &cfg).unwrap();

    let sampler = RiemannLiouvilleSampler::for_grid(&prior, &grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let n_ref = 9_000;
    let reference: Vec<Vec<f64>> = (0..n_ref).map(|_| sampler.sample(&mut rng)).collect();

    for &node in &[0usize, 4, 8, 12, 15] {
        let chain: Vec<f64> = draws
            .latent_draws
            .iter()
            .map(|w| w.values()[node])
            .collect();
        let refs: Vec<f64> = reference.iter().map(|w| w[node]).collect();
        let d = two_sample_ks_statistic(&chain, &refs);
        let crit: f64 = ks_critical_value(chain.len(), refs.len(), 0.01);
        assert!(d < crit, "node {node}: KS {d:.4} vs critical {crit:.4}");
    }
    pass(6, "flat-likelihood chain matches prior marginals");
}

// ------------------------------------------------------------- criteria 7 & 8

fn contraction_config(example2: bool) -> RateExperimentConfig<f64> {
    RateExperimentConfig {
        grid_dim: 1,
        grid_points_per_axis: 64,
        truth: TruthSpec::Sine {
            offset: 2.0,
            amplitude: 1.0,
        },
        n_grid: vec![8, 16, 32, 64, 128, 256, 512],
        replicates_per_n: 4,
        prior: if example2 {
            GpPriorSpec::rescaled_field(1.0, 1.0, 1.0).unwrap()
        } else {
            GpPriorSpec::riemann_liouville(1.0).unwrap()
        },
        link: LinkSpec::logistic(0.1, 10.0).unwrap(),
        mcmc: McmcConfig {
            seed: 0,
            ..McmcConfig::default()
        },
        expected_exponent: -1.0 / 3.0,
        seed: if example2 { 2 } else { 1 },
    }
}

fn check_contraction(report: &ppp_core::RateReport64, label: &str) {
    assert!(
        report.slope < 0.0,
        "{label}: slope {} is not negative",
        report.slope
    );
    assert!(
        (-0.50..=-0.17).contains(&report.slope),
        "{label}: slope {} outside [-0.50, -0.17]",
        report.slope
    );
    let by_n = median_rho_by_n(report);
    let first = by_n.first().unwrap().1;
    let last = by_n.last().unwrap().1;
    assert!(
        last < first / 2.0,
        "{label}: median rho {last} at n={} is not below half of {first} at n={}",
        by_n.last().unwrap().0,
        by_n.first().unwrap().0
    );
    // trend check: at most two upticks along consecutive n medians
    let upticks = by_n.windows(2).filter(|w| w[1].1 > w[0].1).count();
    assert!(upticks <= 2, "{label}: {upticks} upticks in the median trend");
}

#[test]
fn criterion_7_contraction_riemann_liouville() {
    let run = run_rate_experiment(&contraction_config(false)).unwrap();
    check_contraction(&run.report, "example 1");
    pass(
        7,
        "Riemann-Liouville contraction trend (slope within envelope)",
    );
}

#[test]
fn criterion_8_contraction_rescaled_field() {
    let run = run_rate_experiment(&contraction_config(true)).unwrap();
    check_contraction(&run.report, "example 2");
    // The theoretical rate carries a (log n)^{5/3} factor; over n ≤ 512 it is
    // not separable from constants, so only the polynomial envelope is
    // asserted.
    pass(8, "rescaled-field contraction trend (slope within envelope)");
}

// ---------------------------------------------------------------- criterion 9

#[test]
fn criterion_9_determinism() {
    // simulation
    let grid = make_grid::<f64>(1, 32).unwrap();
    let field = IntensityField::from_fn(grid.clone(), 0.5, |x| 1.5 + x[0]).unwrap();
    let d1 = simulate_ppp(&field, 100, 42).unwrap();
    let d2 = simulate_ppp(&field, 100, 42).unwrap();
    assert_eq!(d1, d2, "simulation must be seed-deterministic");

    // prior draws
    let prior = GpPriorSpec::riemann_liouville(1.0).unwrap();
    let w1 = sample_latent(&prior, &grid, 7).unwrap();
    let w2 = sample_latent(&prior, &grid, 7).unwrap();
    assert_eq!(w1.values(), w2.values());

    // divergence report with Monte Carlo oracles
    let other = IntensityField::constant(grid.clone(), 2.0).unwrap();
    let mc = McOracleConfig {
        n_patterns: 5_000,
        seed: 11,
    };
    let r1 = divergence_report(&field, &other, Some(&mc)).unwrap();
    let r2 = divergence_report(&field, &other, Some(&mc)).unwrap();
    assert_eq!(
        serde_json::to_string(&r1).unwrap(),
        serde_json::to_string(&r2).unwrap()
    );

    // posterior chain
    let link = LinkSpec::logistic(0.1, 10.0).unwrap();
    let cfg = McmcConfig {
        iterations: 2_000,
        burn_in: 500,
        thin: 5,
        seed: 3,
        ..McmcConfig::default()
    };
    let data = simulate_ppp(&other, 30, 9).unwrap();
    let f1 = fit_posterior(&prior, &link, &data, &grid, &cfg).unwrap();
    let f2 = fit_posterior(&prior, &link, &data, &grid, &cfg).unwrap();
    for (a, b) in f1.latent_draws.iter().zip(&f2.latent_draws) {
        assert_eq!(a.values(), b.values());
    }

    // rate experiment, identical up to runtime metadata
    let mut cfg = contraction_config(false);
    cfg.grid_points_per_axis = 16;
    cfg.n_grid = vec![4, 8, 16, 32];
    cfg.replicates_per_n = 1;
    cfg.mcmc.iterations = 1_500;
    cfg.mcmc.burn_in = 500;
    let run1 = run_rate_experiment(&cfg).unwrap();
    let run2 = run_rate_experiment(&cfg).unwrap();
    let mut j1 = serde_json::to_value(&run1.report).unwrap();
    let mut j2 = serde_json::to_value(&run2.report).unwrap();
    j1["runtime_seconds"] = 0.into();
    j2["runtime_seconds"] = 0.into();
    assert_eq!(j1, j2);

    pass(9, "fixed seeds give identical outputs across the pipeline");
}

// A paired-pair check used by the sweep criteria: seeding both paths of one
// pair identically must give a zero-distance report with all bounds tight.
#[test]
fn lemma1_identical_seed_pair_is_degenerate() {
    let grid = make_grid::<f64>(1, 16).unwrap();
    let prior = GpPriorSpec::riemann_liouville(1.0).unwrap();
    let link = LinkSpec::logistic(0.1, 4.0).unwrap();
    let w = sample_latent(&prior, &grid, 5).unwrap();
    let v = sample_latent(&prior, &grid, 5).unwrap();
    let report = lemma1_bound_check(&w, &v, &link).unwrap();
    assert_eq!(report.sup_distance, 0.0);
    assert!(report.all_satisfied());
}

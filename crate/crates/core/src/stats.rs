//! Small numeric helpers: stable summation, moments, quantiles, least squares.

use crate::scalar::Scalar;

/// Pairwise summation. Deterministic for a fixed element order and much more
/// accurate than a running sum on long Monte Carlo accumulations.
pub fn pairwise_sum<S: Scalar>(xs: &[S]) -> S {
    if xs.len() <= 32 {
        let mut acc = S::zero();
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean<S: Scalar>(xs: &[S]) -> S {
    assert!(!xs.is_empty(), "mean of empty slice");
    pairwise_sum(xs) / S::of_usize(xs.len())
}

/// Unbiased sample variance.
pub fn sample_variance<S: Scalar>(xs: &[S]) -> S {
    assert!(xs.len() >= 2, "variance needs at least two samples");
    let m = mean(xs);
    let sq: Vec<S> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / S::of_usize(xs.len() - 1)
}

/// Standard error of the sample mean.
pub fn standard_error<S: Scalar>(xs: &[S]) -> S {
    (sample_variance(xs) / S::of_usize(xs.len())).sqrt()
}

/// Quantile by linear interpolation between order statistics; `q` in `[0,1]`.
pub fn quantile<S: Scalar>(xs: &[S], q: f64) -> S {
    assert!(!xs.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&q));
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let frac = S::of(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn median<S: Scalar>(xs: &[S]) -> S {
    quantile(xs, 0.5)
}

/// Ordinary least squares fit of `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy)]
pub struct OlsFit<S> {
    pub slope: S,
    pub intercept: S,
    pub slope_std_error: S,
}

pub fn ols<S: Scalar>(x: &[S], y: &[S]) -> OlsFit<S> {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 3, "need at least 3 points for a slope with an SE");
    let n = S::of_usize(x.len());
    let mx = mean(x);
    let my = mean(y);
    let sxx: Vec<S> = x.iter().map(|&v| (v - mx) * (v - mx)).collect();
    let sxy: Vec<S> = x
        .iter()
        .zip(y.iter())
        .map(|(&a, &b)| (a - mx) * (b - my))
        .collect();
    let sxx = pairwise_sum(&sxx);
    let sxy = pairwise_sum(&sxy);
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals_sq: Vec<S> = x
        .iter()
        .zip(y.iter())
        .map(|(&a, &b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .collect();
    let rss = pairwise_sum(&residuals_sq);
    let sigma2 = rss / (n - S::of(2.0));
    OlsFit {
        slope,
        intercept,
        slope_std_error: (sigma2 / sxx).sqrt(),
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_t |F_a(t) − F_b(t)|`.
pub fn two_sample_ks_statistic<S: Scalar>(a: &[S], b: &[S]) -> S {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("finite values"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("finite values"));
    let (na, nb) = (S::of_usize(xs.len()), S::of_usize(ys.len()));
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = S::zero();
    while i < xs.len() && j < ys.len() {
        if xs[i] <= ys[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = S::of_usize(i) / na;
        let fb = S::of_usize(j) / nb;
        d = d.max((fa - fb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_critical_value<S: Scalar>(n_a: usize, n_b: usize, alpha: f64) -> S {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    S::of(c) * (S::of_usize(n_a + n_b) / (S::of_usize(n_a) * S::of_usize(n_b))).sqrt()
}

/// Deterministic seed derivation for independent sub-streams
/// (splitmix64 finalizer over a mixed key).
pub fn mix_seed(base: u64, stream: u64, substream: u64) -> u64 {
    let mut z = base
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ substream.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Dense symmetric factorization for the random-field sampler.
//!
//! Squared-exponential Gram matrices are severely ill-conditioned, so the
//! factorization adds a diagonal jitter scaled to the mean diagonal entry and
//! escalates it geometrically before giving up.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// First jitter level, relative to `trace / n`.
pub const JITTER_BASE_REL: f64 = 1e-10;
/// Largest jitter level tried before failing, relative to `trace / n`.
pub const JITTER_MAX_REL: f64 = 1e-4;
const JITTER_GROWTH: f64 = 10.0;

/// Lower-triangular factor `L` with `L Lᵀ = K + jitter·I`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor<S> {
    n: usize,
    lower: Vec<S>,
    jitter: S,
}

impl<S: Scalar> CholeskyFactor<S> {
    pub fn size(&self) -> usize {
        self.n
    }

    /// Jitter that was actually added to the diagonal.
    pub fn jitter(&self) -> S {
        self.jitter
    }

    /// One zero-mean draw with covariance `L Lᵀ`, i.e. `L z` for `z` standard
    /// normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<S> {
        let z: Vec<S> = (0..self.n).map(|_| S::standard_normal(rng)).collect();
        (0..self.n)
            .map(|i| {
                let row = &self.lower[i * self.n..i * self.n + i + 1];
                let mut acc = S::zero();
                for (l, &zj) in row.iter().zip(&z) {
                    acc += *l * zj;
                }
                acc
            })
            .collect()
    }

    /// `log det (K + jitter·I)`.
    pub fn log_det(&self) -> S {
        let mut acc = S::zero();
        for i in 0..self.n {
            acc += self.lower[i * self.n + i].ln();
        }
        acc + acc
    }

    /// Quadratic form `wᵀ (K + jitter·I)^{-1} w = ‖L^{-1} w‖²` by forward
    /// substitution.
    pub fn quadratic_form(&self, w: &[S]) -> S {
        assert_eq!(w.len(), self.n);
        let mut y = vec![S::zero(); self.n];
        let mut acc = S::zero();
        for i in 0..self.n {
            let mut s = w[i];
            for (j, &yj) in y.iter().enumerate().take(i) {
                s -= self.lower[i * self.n + j] * yj;
            }
            let yi = s / self.lower[i * self.n + i];
            y[i] = yi;
            acc += yi * yi;
        }
        acc
    }
}

fn try_factorize<S: Scalar>(matrix: &[S], n: usize, jitter: S) -> Option<Vec<S>> {
    let mut lower = vec![S::zero(); n * n];
    for j in 0..n {
        let mut d = matrix[j * n + j] + jitter;
        for k in 0..j {
            let l = lower[j * n + k];
            d -= l * l;
        }
        if !d.is_finite() || d <= S::zero() {
            return None;
        }
        let diag = d.sqrt();
        lower[j * n + j] = diag;
        for i in (j + 1)..n {
            let mut s = matrix[i * n + j];
            for k in 0..j {
                s -= lower[i * n + k] * lower[j * n + k];
            }
            lower[i * n + j] = s / diag;
        }
    }
    Some(lower)
}

/// Factorizes the symmetric matrix (row-major, `n × n`), escalating the
/// diagonal jitter from [`JITTER_BASE_REL`] to [`JITTER_MAX_REL`] times the
/// mean diagonal entry.
pub fn cholesky_with_jitter<S: Scalar>(matrix: &[S], n: usize) -> Result<CholeskyFactor<S>> {
    assert_eq!(matrix.len(), n * n);
    let mut trace = S::zero();
    for i in 0..n {
        trace += matrix[i * n + i];
    }
    let unit = trace / S::of_usize(n);
    let mut rel = JITTER_BASE_REL;
    while rel <= JITTER_MAX_REL * (1.0 + 1e-12) {
        let jitter = unit * S::of(rel);
        if let Some(lower) = try_factorize(matrix, n, jitter) {
            return Ok(CholeskyFactor { n, lower, jitter });
        }
        rel *= JITTER_GROWTH;
    }
    Err(Error::CholeskyFailed { size: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reconstruct(f: &CholeskyFactor<f64>) -> Vec<f64> {
        let n = f.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += f.lower[i * n + k] * f.lower[j * n + k];
                }
                out[i * n + j] = s;
            }
        }
        out
    }

    #[test]
    fn factorization_reconstructs_spd_matrix() {
        let k = vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let f = cholesky_with_jitter::<f64>(&k, 3).unwrap();
        let back = reconstruct(&f);
        for (a, b) in k.iter().zip(&back) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        // log det of the 3x3 above, from the exact determinant
        let det: f64 = 4.0 * (5.0 * 3.0 - 1.0) - 2.0 * (2.0 * 3.0 - 0.6) + 0.6 * (2.0 - 5.0 * 0.6);
        assert!((f.log_det() - det.ln()).abs() < 1e-6);
    }

    #[test]
    fn quadratic_form_matches_direct_solve() {
        let k = vec![2.0, 0.5, 0.5, 1.0];
        let f = cholesky_with_jitter::<f64>(&k, 2).unwrap();
        // inverse of [[2, .5], [.5, 1]] is [[1, -.5], [-.5, 2]] / 1.75
        let w = [1.0, 2.0];
        let expect = (1.0 * 1.0 - 0.5 * 2.0 * 2.0 + 2.0 * 4.0) / 1.75;
        assert!((f.quadratic_form(&w) - expect).abs() < 1e-6);
    }

    #[test]
    fn rank_deficient_matrix_needs_jitter_but_succeeds() {
        // all-ones matrix is PSD with rank 1
        let n = 6;
        let k = vec![1.0f64; n * n];
        let f = cholesky_with_jitter(&k, n).unwrap();
        assert!(f.jitter() > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = f.sample(&mut rng);
        let spread = s.iter().cloned().fold(f64::MIN, f64::max)
            - s.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-3, "rank-1 sample should be nearly constant: {spread}");
    }

    #[test]
    fn indefinite_matrix_fails() {
        let k = vec![1.0, 2.0, 2.0, 1.0];
        assert!(matches!(
            cholesky_with_jitter::<f64>(&k, 2),
            Err(Error::CholeskyFailed { size: 2 })
        ));
    }

    #[test]
    fn samples_have_requested_covariance() {
        let k = vec![1.0, 0.6, 0.6, 1.0];
        let f = cholesky_with_jitter::<f64>(&k, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 40_000;
        let (mut v0, mut v1, mut c01) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let s = f.sample(&mut rng);
            v0 += s[0] * s[0];
            v1 += s[1] * s[1];
            c01 += s[0] * s[1];
        }
        let nf = n as f64;
        assert!((v0 / nf - 1.0).abs() < 0.03);
        assert!((v1 / nf - 1.0).abs() < 0.03);
        assert!((c01 / nf - 0.6).abs() < 0.03);
    }
}

//! Floating-point scalar abstraction.
//!
//! All numeric code in this crate is generic over [`Scalar`], implemented for
//! `f32` and `f64`. Random-sampling hooks live on the trait so that generic
//! callers never have to thread `rand_distr` bounds through their signatures.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Scalar element type: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw from `[0, 1)`.
    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Poisson count with the given mean. A zero mean yields zero.
    fn poisson_count<R: Rng + ?Sized>(mean: Self, rng: &mut R) -> u64;

    /// Gamma draw parameterized by shape and *rate*.
    fn gamma_sample<R: Rng + ?Sized>(shape: Self, rate: Self, rng: &mut R) -> Self;

    /// Conversion from `f64` literals and derived quantities.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to scalar")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to scalar")
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }

    fn poisson_count<R: Rng + ?Sized>(mean: Self, rng: &mut R) -> u64 {
        if mean == 0.0 {
            return 0;
        }
        let draw: f64 = Poisson::new(mean)
            .expect("Poisson mean must be positive and finite")
            .sample(rng);
        draw as u64
    }

    fn gamma_sample<R: Rng + ?Sized>(shape: Self, rate: Self, rng: &mut R) -> Self {
        Gamma::new(shape, 1.0 / rate)
            .expect("Gamma shape and rate must be positive")
            .sample(rng)
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }

    fn poisson_count<R: Rng + ?Sized>(mean: Self, rng: &mut R) -> u64 {
        // Sample in f64 so large means keep their count resolution.
        f64::poisson_count(mean as f64, rng)
    }

    fn gamma_sample<R: Rng + ?Sized>(shape: Self, rate: Self, rng: &mut R) -> Self {
        f64::gamma_sample(shape as f64, rate as f64, rng) as f32
    }
}

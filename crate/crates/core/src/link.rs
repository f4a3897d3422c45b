//! Link functions `g: ℝ → [κ, ∞)` that turn latent Gaussian paths into
//! intensity functions.
//!
//! Only Lipschitz links are admitted; the exponential map of log-Gaussian Cox
//! models is deliberately absent because it has no global Lipschitz constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridField, IntensityField, LatentField};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    /// `g(x) = κ + g*/(1 + e^{-x})`, invertible, range `(κ, κ + g*)`,
    /// Lipschitz constant `g*/4`.
    LogisticVariant,
    /// `g(x) = κ + |x|`, Lipschitz constant 1, not invertible.
    ShiftedAbs,
}

impl LinkKind {
    /// Every supported link. Kept explicit so tests can assert the registry
    /// stays closed.
    pub const ALL: [LinkKind; 2] = [LinkKind::LogisticVariant, LinkKind::ShiftedAbs];

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::LogisticVariant => "logistic_variant",
            LinkKind::ShiftedAbs => "shifted_abs",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinkSpec<S> {
    pub kind: LinkKind,
    pub kappa: S,
    /// Saturation level of the logistic variant; unused by `shifted_abs`.
    pub g_star: S,
}

impl<S: Scalar> LinkSpec<S> {
    pub fn logistic(kappa: S, g_star: S) -> Result<Self> {
        let spec = LinkSpec {
            kind: LinkKind::LogisticVariant,
            kappa,
            g_star,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn shifted_abs(kappa: S) -> Result<Self> {
        let spec = LinkSpec {
            kind: LinkKind::ShiftedAbs,
            kappa,
            g_star: S::one(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kappa.is_finite() || self.kappa < S::zero() {
            return Err(Error::InvalidConfig(
                "link kappa must be finite and nonnegative".into(),
            ));
        }
        if self.kind == LinkKind::LogisticVariant
            && (!self.g_star.is_finite() || self.g_star <= S::zero())
        {
            return Err(Error::InvalidConfig("link g_star must be positive".into()));
        }
        Ok(())
    }

    /// The analytic Lipschitz constant ḡ of the link.
    pub fn lipschitz_constant(&self) -> S {
        match self.kind {
            LinkKind::LogisticVariant => self.g_star / S::of(4.0),
            LinkKind::ShiftedAbs => S::one(),
        }
    }

    /// `(lower, upper)` of the link's range; the upper bound is open and
    /// absent for `shifted_abs`.
    pub fn range(&self) -> (S, Option<S>) {
        match self.kind {
            LinkKind::LogisticVariant => (self.kappa, Some(self.kappa + self.g_star)),
            LinkKind::ShiftedAbs => (self.kappa, None),
        }
    }

    /// True when `y` lies strictly inside the open range of the link (the
    /// domain of `g^{-1}` for the invertible kind).
    pub fn contains(&self, y: S) -> bool {
        match self.range() {
            (lo, Some(hi)) => y > lo && y < hi,
            (lo, None) => y >= lo,
        }
    }

    pub fn apply_scalar(&self, x: S) -> S {
        match self.kind {
            LinkKind::LogisticVariant => self.kappa + self.g_star * sigmoid(x),
            LinkKind::ShiftedAbs => self.kappa + x.abs(),
        }
    }

    pub fn invert_scalar(&self, y: S) -> Result<S> {
        match self.kind {
            LinkKind::ShiftedAbs => Err(Error::LinkNotInvertible {
                kind: self.kind.name(),
            }),
            LinkKind::LogisticVariant => {
                if !self.contains(y) {
                    return Err(Error::OutsideLinkRange {
                        node: 0,
                        value: y.to_f64().unwrap_or(f64::NAN),
                    });
                }
                Ok(((y - self.kappa) / (self.kappa + self.g_star - y)).ln())
            }
        }
    }

    /// Node-wise `g(w)`; the result carries `kappa` as its intensity floor.
    pub fn apply(&self, w: &LatentField<S>) -> IntensityField<S> {
        let values = w.values().iter().map(|&x| self.apply_scalar(x)).collect();
        IntensityField::new(w.grid().clone(), values, self.kappa)
            .expect("link output is finite and at least kappa")
    }

    /// Node-wise `g^{-1}(λ)`; every value must lie strictly inside the range.
    pub fn invert(&self, f: &IntensityField<S>) -> Result<LatentField<S>> {
        if self.kind == LinkKind::ShiftedAbs {
            return Err(Error::LinkNotInvertible {
                kind: self.kind.name(),
            });
        }
        let mut values = Vec::with_capacity(f.values().len());
        for (node, &y) in f.values().iter().enumerate() {
            if !self.contains(y) {
                return Err(Error::OutsideLinkRange {
                    node,
                    value: y.to_f64().unwrap_or(f64::NAN),
                });
            }
            values.push(((y - self.kappa) / (self.kappa + self.g_star - y)).ln());
        }
        LatentField::new(f.grid().clone(), values)
    }
}

fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

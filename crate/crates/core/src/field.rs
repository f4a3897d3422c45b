//! Functions on the grid: latent Gaussian paths and intensity functions.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::Scalar;
use crate::stats::pairwise_sum;

/// Anything represented by one value per grid node.
pub trait GridField<S: Scalar> {
    fn grid(&self) -> &Arc<GridSpec<S>>;
    fn values(&self) -> &[S];

    /// Midpoint-rule quadrature `∫ f dμ = Σ_i f_i w_i`.
    fn integrate(&self) -> S {
        self.grid().weight() * pairwise_sum(self.values())
    }
}

/// An intensity function `λ ≥ kappa_floor ≥ 0` on the grid, in points per
/// unit μ-mass.
#[derive(Debug, Clone)]
pub struct IntensityField<S> {
    grid: Arc<GridSpec<S>>,
    values: Vec<S>,
    kappa_floor: S,
}

impl<S: Scalar> IntensityField<S> {
    pub fn new(grid: Arc<GridSpec<S>>, values: Vec<S>, kappa_floor: S) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_nodes(),
                got: values.len(),
            });
        }
        if !kappa_floor.is_finite() || kappa_floor < S::zero() {
            return Err(Error::InvalidConfig(
                "kappa_floor must be finite and nonnegative".into(),
            ));
        }
        for (node, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "intensity value",
                });
            }
            if v < kappa_floor {
                return Err(Error::BelowFloor {
                    node,
                    value: v.to_f64().unwrap_or(f64::NAN),
                    floor: kappa_floor.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(IntensityField {
            grid,
            values,
            kappa_floor,
        })
    }

    pub fn constant(grid: Arc<GridSpec<S>>, value: S) -> Result<Self> {
        let values = vec![value; grid.n_nodes()];
        IntensityField::new(grid, values, value)
    }

    pub fn from_fn(
        grid: Arc<GridSpec<S>>,
        kappa_floor: S,
        mut f: impl FnMut(&[S]) -> S,
    ) -> Result<Self> {
        let mut buf = vec![S::zero(); grid.dim()];
        let values = (0..grid.n_nodes())
            .map(|i| {
                grid.write_node(i, &mut buf);
                f(&buf)
            })
            .collect();
        IntensityField::new(grid, values, kappa_floor)
    }

    pub fn kappa_floor(&self) -> S {
        self.kappa_floor
    }

    /// Nearest-node (piecewise-constant) evaluation at an arbitrary point.
    pub fn value_at(&self, point: &[S]) -> Result<S> {
        Ok(self.values[self.grid.nearest_node(point)?])
    }

    pub fn max_value(&self) -> S {
        self.values.iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn min_value(&self) -> S {
        self.values.iter().copied().fold(S::infinity(), S::min)
    }
}

impl<S: Scalar> GridField<S> for IntensityField<S> {
    fn grid(&self) -> &Arc<GridSpec<S>> {
        &self.grid
    }

    fn values(&self) -> &[S] {
        &self.values
    }
}

/// A realisation of the latent Gaussian process on the grid.
#[derive(Debug, Clone)]
pub struct LatentField<S> {
    grid: Arc<GridSpec<S>>,
    values: Vec<S>,
}

impl<S: Scalar> LatentField<S> {
    pub fn new(grid: Arc<GridSpec<S>>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_nodes(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "latent value",
            });
        }
        Ok(LatentField { grid, values })
    }

    pub fn constant(grid: Arc<GridSpec<S>>, value: S) -> Result<Self> {
        let values = vec![value; grid.n_nodes()];
        LatentField::new(grid, values)
    }
}

impl<S: Scalar> GridField<S> for LatentField<S> {
    fn grid(&self) -> &Arc<GridSpec<S>> {
        &self.grid
    }

    fn values(&self) -> &[S] {
        &self.values
    }
}

fn check_same_grid<S: Scalar>(
    a: &impl GridField<S>,
    b: &impl GridField<S>,
) -> Result<()> {
    if a.grid().compatible(b.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Grid approximation of the sup-norm distance `‖f − g‖_∞`.
pub fn sup_distance<S: Scalar>(
    a: &impl GridField<S>,
    b: &impl GridField<S>,
) -> Result<S> {
    check_same_grid(a, b)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| (x - y).abs())
        .fold(S::zero(), S::max))
}

/// `L_2(μ)` distance between two fields on the same grid.
pub fn l2_distance<S: Scalar>(
    a: &impl GridField<S>,
    b: &impl GridField<S>,
) -> Result<S> {
    check_same_grid(a, b)?;
    let sq: Vec<S> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| (x - y) * (x - y))
        .collect();
    Ok((a.grid().weight() * pairwise_sum(&sq)).sqrt())
}

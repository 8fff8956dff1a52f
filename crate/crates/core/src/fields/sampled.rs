use std::sync::Arc;

use rayon::prelude::*;

use super::{GradedGrid, Mat3, Vec3};
use crate::error::{Error, Result};

/// Values a sampled field can carry.
pub trait FieldValue: Copy + Send + Sync + std::fmt::Debug {
    fn zero() -> Self;
    /// Euclidean (Frobenius for tensors) magnitude.
    fn magnitude(&self) -> f64;
    fn scaled(&self, s: f64) -> Self;
    fn plus(&self, other: &Self) -> Self;

    fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(-1.0))
    }
}

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

impl FieldValue for Vec3 {
    fn zero() -> Self {
        Vec3::zeros()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

impl FieldValue for Mat3 {
    fn zero() -> Self {
        Mat3::zeros()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

/// Result of [`SampledField::weighted_sup_norm`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WeightedNorm {
    /// Larger of the node maximum and the tail bound at `r_max`.
    pub value: f64,
    pub node_max: f64,
    /// Supremum of `(1+r)^α C r^{-τ}` over `r ≥ r_max`, or its value at `r_max` when unbounded.
    pub tail_bound: f64,
    /// False when the tail decays slower than the weight grows.
    pub bounded: bool,
}

/// Field values on the nodes of a [`GradedGrid`], with a power-law tail model
/// `|v(x)| ≤ C |x|^{-τ}` beyond the grid.
#[derive(Debug, Clone)]
pub struct SampledField<T: FieldValue> {
    grid: Arc<GradedGrid>,
    values: Vec<T>,
    tail_exponent: f64,
    tail_constant: f64,
}

pub type SampledVectorField = SampledField<Vec3>;
pub type SampledScalarField = SampledField<f64>;
pub type SampledTensorField = SampledField<Mat3>;

impl<T: FieldValue> SampledField<T> {
    pub fn new(grid: Arc<GradedGrid>, values: Vec<T>, tail_exponent: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        let mut field = SampledField { grid, values, tail_exponent, tail_constant: 0.0 };
        field.tail_constant = field.outer_tail_constant(tail_exponent);
        Ok(field)
    }

    pub fn zeros(grid: Arc<GradedGrid>, tail_exponent: f64) -> Self {
        let values = vec![T::zero(); grid.len()];
        SampledField { grid, values, tail_exponent, tail_constant: 0.0 }
    }

    /// Samples `f` at every node (in parallel; the result does not depend on the thread count).
    pub fn from_fn<F>(grid: Arc<GradedGrid>, tail_exponent: f64, f: F) -> Self
    where
        F: Fn(Vec3) -> T + Sync,
    {
        let values: Vec<T> = grid.points().par_iter().map(|x| f(*x)).collect();
        Self::new(grid, values, tail_exponent).expect("length matches by construction")
    }

    pub fn grid(&self) -> &Arc<GradedGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }

    /// Replaces the assumed tail exponent and recomputes the constant from the outer layer.
    pub fn with_tail_exponent(mut self, tail_exponent: f64) -> Self {
        self.tail_exponent = tail_exponent;
        self.tail_constant = self.outer_tail_constant(tail_exponent);
        self
    }

    fn outer_tail_constant(&self, tau: f64) -> f64 {
        let pts = self.grid.points();
        self.grid
            .outer_layer()
            .map(|i| self.values[i].magnitude() * pts[i].norm().powf(tau))
            .fold(0.0, f64::max)
    }

    pub fn map<U: FieldValue, F: Fn(Vec3, &T) -> U + Sync>(&self, tail_exponent: f64, f: F) -> SampledField<U> {
        let values: Vec<U> = self
            .grid
            .points()
            .par_iter()
            .zip(self.values.par_iter())
            .map(|(x, v)| f(*x, v))
            .collect();
        SampledField::new(self.grid.clone(), values, tail_exponent).expect("same grid")
    }

    fn check_same_grid<U: FieldValue>(&self, other: &SampledField<U>) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.points() == other.grid.points() {
            Ok(())
        } else {
            Err(Error::InvalidInput("fields live on different grids".into()))
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        SampledField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.scaled(s)).collect(),
            tail_exponent: self.tail_exponent,
            tail_constant: self.tail_constant * s.abs(),
        }
    }

    /// `self + s * other`; the tail exponent is the slower of the two.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.plus(&b.scaled(s))).collect();
        Self::new(self.grid.clone(), values, self.tail_exponent.min(other.tail_exponent))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// `∫ v` over the grid region.
    pub fn integral(&self) -> T {
        self.values
            .iter()
            .zip(self.grid.weights())
            .fold(T::zero(), |acc, (v, w)| acc.plus(&v.scaled(*w)))
    }

    /// `∫ |v|` over the grid region.
    pub fn l1(&self) -> f64 {
        self.values.iter().zip(self.grid.weights()).map(|(v, w)| w * v.magnitude()).sum()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.values.iter().map(|v| v.magnitude()).fold(0.0, f64::max)
    }

    /// The weighted decay norm `sup (1+|x|)^α |v(x)|`, nodes plus tail model.
    pub fn weighted_sup_norm(&self, alpha: f64) -> Result<WeightedNorm> {
        if self.is_empty() {
            return Err(Error::InvalidInput("weighted norm of an empty field".into()));
        }
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::InvalidInput(format!("weight exponent must lie in (1, 2], got {alpha}")));
        }
        let node_max = self
            .grid
            .points()
            .iter()
            .zip(&self.values)
            .map(|(x, v)| (1.0 + x.norm()).powf(alpha) * v.magnitude())
            .fold(0.0, f64::max);
        let r = self.grid.r_max();
        let tail_bound = (1.0 + r).powf(alpha) * self.tail_constant * r.powf(-self.tail_exponent);
        let bounded = self.tail_constant == 0.0 || self.tail_exponent >= alpha;
        Ok(WeightedNorm { value: node_max.max(tail_bound), node_max, tail_bound, bounded })
    }
}

impl SampledField<Vec3> {
    /// Zero-extended samples of one Cartesian component.
    pub fn component(&self, k: usize) -> SampledScalarField {
        self.map(self.tail_exponent, |_, v| v[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_graded_grid;

    fn grid() -> Arc<GradedGrid> {
        Arc::new(make_graded_grid(0.5, 64.0, 1.5, 8, 8).unwrap())
    }

    #[test]
    fn norm_of_weight_reciprocal_is_one() {
        let f = SampledVectorField::from_fn(grid(), 1.5, |x| Vec3::x() * (1.0 + x.norm()).powf(-1.5));
        let n = f.weighted_sup_norm(1.5).unwrap();
        assert!((n.value - 1.0).abs() < 1e-12, "{n:?}");
        assert!(n.bounded);
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let f = SampledVectorField::zeros(grid(), 2.0);
        assert_eq!(f.weighted_sup_norm(1.5).unwrap().value, 0.0);
    }

    #[test]
    fn constant_field_is_flagged_unbounded() {
        let g = grid();
        let rmax = g.r_max();
        let f = SampledVectorField::from_fn(g, 0.0, |_| Vec3::x());
        let n = f.weighted_sup_norm(1.5).unwrap();
        assert!(!n.bounded);
        assert!((n.value - (1.0 + rmax).powf(1.5)).abs() < 1e-9 * n.value);
        assert!(n.node_max < n.value);
    }

    #[test]
    fn empty_and_out_of_range() {
        let f = SampledVectorField::zeros(grid(), 2.0);
        assert!(matches!(f.weighted_sup_norm(0.5), Err(Error::InvalidInput(_))));
        assert!(matches!(
            SampledVectorField::new(grid(), vec![], 2.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn tail_constant_dominates_outer_layer() {
        let f = SampledScalarField::from_fn(grid(), 2.0, |x| 3.0 / x.norm_squared());
        assert!((f.tail_constant() - 3.0).abs() < 1e-12);
    }
}

//! Grids, quadrature rules, sampled fields and the weighted decay norm.

mod csv_io;
pub mod fd;
mod grid;
mod interp;
pub mod quadrature;
mod sampled;

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub use csv_io::{read_points_csv, read_table_csv, write_scalar_csv, write_vector_csv, Table};
pub use grid::{make_graded_grid, GradedGrid, GridSpec, CORE_RADIAL_NODES};
pub use interp::SphericalAxes;
pub use sampled::{
    FieldValue, SampledField, SampledScalarField, SampledTensorField, SampledVectorField,
    WeightedNorm,
};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Polar coordinates `x = r (sinθ cosφ, sinθ sinφ, cosθ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalPoint {
    pub fn from_cartesian(x: Vec3) -> Result<Self> {
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::Singularity);
        }
        let theta = (x.z / r).clamp(-1.0, 1.0).acos();
        let mut phi = x.y.atan2(x.x);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        if phi >= 2.0 * PI {
            phi = 0.0;
        }
        Ok(SphericalPoint { r, theta, phi })
    }

    pub fn to_cartesian(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vec3::new(self.r * st * cp, self.r * st * sp, self.r * ct)
    }

    /// Unit vectors `(e_r, e_θ, e_φ)`.
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        (
            Vec3::new(st * cp, st * sp, ct),
            Vec3::new(ct * cp, ct * sp, -st),
            Vec3::new(-sp, cp, 0.0),
        )
    }
}

/// A vector field that can be evaluated pointwise.
pub trait VectorEvaluator: Sync {
    fn vector_at(&self, x: Vec3) -> Vec3;

    /// Exact Jacobian `J[(i, j)] = ∂u_i/∂x_j`, when the field knows it.
    fn jacobian_at(&self, _x: Vec3) -> Option<Mat3> {
        None
    }
}

/// A scalar field that can be evaluated pointwise.
pub trait ScalarEvaluator: Sync {
    fn scalar_at(&self, x: Vec3) -> f64;

    fn gradient_at(&self, _x: Vec3) -> Option<Vec3> {
        None
    }
}

impl<T: VectorEvaluator + ?Sized> VectorEvaluator for &T {
    fn vector_at(&self, x: Vec3) -> Vec3 {
        (**self).vector_at(x)
    }
    fn jacobian_at(&self, x: Vec3) -> Option<Mat3> {
        (**self).jacobian_at(x)
    }
}

impl<T: ScalarEvaluator + ?Sized> ScalarEvaluator for &T {
    fn scalar_at(&self, x: Vec3) -> f64 {
        (**self).scalar_at(x)
    }
    fn gradient_at(&self, x: Vec3) -> Option<Vec3> {
        (**self).gradient_at(x)
    }
}

impl<T: VectorEvaluator + ?Sized> VectorEvaluator for Box<T> {
    fn vector_at(&self, x: Vec3) -> Vec3 {
        (**self).vector_at(x)
    }
    fn jacobian_at(&self, x: Vec3) -> Option<Mat3> {
        (**self).jacobian_at(x)
    }
}

impl<T: ScalarEvaluator + ?Sized> ScalarEvaluator for Box<T> {
    fn scalar_at(&self, x: Vec3) -> f64 {
        (**self).scalar_at(x)
    }
    fn gradient_at(&self, x: Vec3) -> Option<Vec3> {
        (**self).gradient_at(x)
    }
}

/// Adapts a closure to [`VectorEvaluator`].
pub struct FnVector<F>(pub F);

impl<F: Fn(Vec3) -> Vec3 + Sync> VectorEvaluator for FnVector<F> {
    fn vector_at(&self, x: Vec3) -> Vec3 {
        (self.0)(x)
    }
}

/// Adapts a closure to [`ScalarEvaluator`].
pub struct FnScalar<F>(pub F);

impl<F: Fn(Vec3) -> f64 + Sync> ScalarEvaluator for FnScalar<F> {
    fn scalar_at(&self, x: Vec3) -> f64 {
        (self.0)(x)
    }
}

/// The zero vector/scalar field.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl VectorEvaluator for Zero {
    fn vector_at(&self, _x: Vec3) -> Vec3 {
        Vec3::zeros()
    }
    fn jacobian_at(&self, _x: Vec3) -> Option<Mat3> {
        Some(Mat3::zeros())
    }
}

impl ScalarEvaluator for Zero {
    fn scalar_at(&self, _x: Vec3) -> f64 {
        0.0
    }
    fn gradient_at(&self, _x: Vec3) -> Option<Vec3> {
        Some(Vec3::zeros())
    }
}

/// Tensor product `a ⊗ b`, i.e. `M[(j, k)] = a_j b_k`.
#[inline]
pub fn outer(a: &Vec3, b: &Vec3) -> Mat3 {
    a * b.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spherical_round_trip() {
        for x in [
            Vec3::new(1.0, 2.0, -0.5),
            Vec3::new(-3.0, 0.1, 4.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 2.0),
        ] {
            let s = SphericalPoint::from_cartesian(x).unwrap();
            assert!(s.theta >= 0.0 && s.theta <= PI);
            assert!(s.phi >= 0.0 && s.phi < 2.0 * PI);
            assert!((s.to_cartesian() - x).norm() < 1e-14 * x.norm());
        }
        assert!(matches!(SphericalPoint::from_cartesian(Vec3::zeros()), Err(Error::Singularity)));
    }

    #[test]
    fn basis_is_orthonormal() {
        let s = SphericalPoint { r: 1.0, theta: 0.7, phi: 2.1 };
        let (er, et, ep) = s.basis();
        assert!((er.cross(&et) - ep).norm() < 1e-15);
        assert!((er - s.to_cartesian()).norm() < 1e-15);
    }
}

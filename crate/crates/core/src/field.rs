//! Vector fields on R^8 used as SDE coefficients.

use std::sync::Arc;

use crate::linalg::{fd_jacobian, Mat8, Vec8};

/// Default central-difference step for derivatives of fields and coefficients.
pub const FD_STEP: f64 = 1e-5;

/// A vector field evaluated in ambient coordinates.
pub trait VectorField: Send + Sync {
    fn eval(&self, z: &Vec8) -> Vec8;

    /// Ambient Jacobian `J[i][k] = dV^i/dz^k`.
    fn jacobian(&self, z: &Vec8) -> Mat8 {
        fd_jacobian(|x| self.eval(x), z, FD_STEP)
    }

    /// The constant matrix `K` when the field is exactly `z -> K z`.
    fn generator(&self) -> Option<Mat8> {
        None
    }
}

pub type SharedField = Arc<dyn VectorField>;

/// The linear field `z -> K z`.
#[derive(Debug, Clone)]
pub struct LinearField(pub Mat8);

impl VectorField for LinearField {
    fn eval(&self, z: &Vec8) -> Vec8 {
        self.0 * z
    }
    fn jacobian(&self, _z: &Vec8) -> Mat8 {
        self.0
    }
    fn generator(&self) -> Option<Mat8> {
        Some(self.0)
    }
}

/// The zero field.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl VectorField for ZeroField {
    fn eval(&self, _z: &Vec8) -> Vec8 {
        Vec8::zeros()
    }
    fn jacobian(&self, _z: &Vec8) -> Mat8 {
        Mat8::zeros()
    }
    fn generator(&self) -> Option<Mat8> {
        Some(Mat8::zeros())
    }
}

/// Closure-backed field; the Jacobian falls back to central differences.
pub struct FnField<F>(pub F);

impl<F> VectorField for FnField<F>
where
    F: Fn(&Vec8) -> Vec8 + Send + Sync,
{
    fn eval(&self, z: &Vec8) -> Vec8 {
        (self.0)(z)
    }
}

/// `-V`; used for time-reversed flows.
#[derive(Clone)]
pub struct NegatedField(pub SharedField);

impl VectorField for NegatedField {
    fn eval(&self, z: &Vec8) -> Vec8 {
        -self.0.eval(z)
    }
    fn jacobian(&self, z: &Vec8) -> Mat8 {
        -self.0.jacobian(z)
    }
    fn generator(&self) -> Option<Mat8> {
        self.0.generator().map(|k| -k)
    }
}

/// Sum of several fields driven by one channel.
#[derive(Clone)]
pub struct SumField(pub Vec<SharedField>);

impl VectorField for SumField {
    fn eval(&self, z: &Vec8) -> Vec8 {
        self.0.iter().map(|f| f.eval(z)).sum()
    }
    fn jacobian(&self, z: &Vec8) -> Mat8 {
        self.0.iter().map(|f| f.jacobian(z)).sum()
    }
    fn generator(&self) -> Option<Mat8> {
        self.0.iter().map(|f| f.generator()).sum()
    }
}

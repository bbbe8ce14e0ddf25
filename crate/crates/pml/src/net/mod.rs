//! Minimal neural-net stack: tensors, layers with hand-derived gradients,
//! an adaptive-moment optimizer, and a binary parameter store.
//!
//! Everything is generic over the float width. Production paths run `f32`
//! for speed; gradient-check tests run the identical code at `f64`, where
//! central finite differences are trustworthy.

pub mod adam;
pub mod gemm;
pub mod layers;
pub mod store;
pub mod tensor;

pub use adam::Adam;
pub use store::{ParamEntry, ParamStore};
pub use tensor::Tensor;

/// Float width the net code is generic over.
///
/// `num_traits::Float` supplies the arithmetic; the two conversions anchor
/// losses, metrics, and file formats, which are always `f64`/`f32`
/// respectively regardless of the compute width.
pub trait Scalar:
    num_traits::Float + num_traits::NumAssignOps + std::fmt::Debug + Default + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }
}

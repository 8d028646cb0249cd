use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar used by the clustering code: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Exact conversion from the `f32` storage format of embedding files.
    fn widen_f32(v: f32) -> Self;
}

impl Scalar for f32 {
    fn widen_f32(v: f32) -> Self {
        v
    }
}

impl Scalar for f64 {
    fn widen_f32(v: f32) -> Self {
        v as f64
    }
}

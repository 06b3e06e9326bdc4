use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the metrics and regression code: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Newton iterations stop once the log-likelihood moves less than this.
    fn loglik_tolerance() -> Self;

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits a float")
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 fits a float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float fits f64")
    }
}

impl Scalar for f32 {
    fn loglik_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn loglik_tolerance() -> Self {
        1e-10
    }
}

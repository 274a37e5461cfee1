//! Scalar abstraction for the numeric kernels.
//!
//! All estimators and policies are generic over [`Scalar`] so the same code
//! runs in `f32` or `f64`. Concrete aliases for the common `f64` instantiation
//! live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts from `f64`, the type used for random draws and config values.
    fn cast(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in any Scalar")
    }

    /// Widens to `f64` for reporting and serial formats.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar is representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

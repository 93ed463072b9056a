//! Minimal reverse-mode differentiation over `time x channels` sequences.
//!
//! A [`Graph`] records every operation in construction order; that order is a
//! valid topological order, so [`Graph::backward`] simply walks the node list
//! in reverse. Values are dense [`ndarray::Array2`] matrices. The engine is
//! generic over [`Real`] so gradient checks can run in `f64` while training
//! runs in `f32`.

mod graph;
mod kernels;
mod loss;
mod tensor;

pub use graph::{Graph, Var};
pub use kernels::ConvGeometry;
pub use loss::{inverse_frequency_weights, smooth_l1_value, PROB_EPS};
pub use tensor::{Activation, ConvSpec, Padding, SeqTensor};

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::Float;

/// Floating point element type accepted by the engine (`f32` or `f64`).
pub trait Real:
    Float
    + LinalgScalar
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Real;
use crate::error::{MggError, Result};

/// A `time x channels` matrix plus its gradient slot.
#[derive(Clone, Debug)]
pub struct SeqTensor<F> {
    data: Array2<F>,
    requires_grad: bool,
    grad: Option<Array2<F>>,
}

impl<F: Real> SeqTensor<F> {
    pub fn new(data: Array2<F>, requires_grad: bool) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(MggError::shape(
                "SeqTensor::new",
                format!("time and channels must be >= 1, got {}x{}", data.nrows(), data.ncols()),
            ));
        }
        Ok(SeqTensor { data, requires_grad, grad: None })
    }

    pub fn data(&self) -> &Array2<F> {
        &self.data
    }

    pub fn grad(&self) -> Option<&Array2<F>> {
        self.grad.as_ref()
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn time(&self) -> usize {
        self.data.nrows()
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    pub(crate) fn set_grad(&mut self, grad: Array2<F>) {
        debug_assert_eq!(grad.dim(), self.data.dim());
        self.grad = Some(grad);
    }

    pub(crate) fn clear_grad(&mut self) {
        self.grad = None;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Sigmoid,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Padding {
    /// Zero padding so that `out = ceil(time / stride)`.
    Same,
    Valid,
}

/// `Conv(n_f, n_k, activation)` with stride and padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub activation: Activation,
    pub padding: Padding,
}

impl ConvSpec {
    pub fn new(filters: usize, kernel: usize, activation: Activation) -> Self {
        ConvSpec { filters, kernel, stride: 1, activation, padding: Padding::Same }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.filters == 0 || self.stride == 0 {
            return Err(MggError::Invalid(format!("ConvSpec needs filters and stride >= 1: {self:?}")));
        }
        if self.kernel % 2 == 0 {
            return Err(MggError::Invalid(format!("conv kernel must be odd, got {}", self.kernel)));
        }
        Ok(())
    }

    /// Number of weight scalars for `in_channels` inputs (bias excluded).
    pub fn weight_shape(&self, in_channels: usize) -> (usize, usize) {
        (self.filters, self.kernel * in_channels)
    }
}

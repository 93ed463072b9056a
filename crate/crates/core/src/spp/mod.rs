//! Segment proposal producer: a contracting stack, a U-shaped feature
//! pyramid with lateral connections, per-level anchor heads, anchor label
//! assignment and the classification + regression objective.

mod anchors;
mod labels;
mod loss;
mod offsets;
mod pyramid;
mod sampling;

pub use anchors::{generate_anchors, Anchor, AnchorGrid};
pub use labels::{assign_labels, AnchorClass, AnchorLabel, LabelAssignment, NEGATIVE_BELOW, POSITIVE_AT};
pub use loss::{regression_targets, spp_loss, SppLoss, SPP_REGRESSION_WEIGHT};
pub use offsets::{decode_offsets, encode_offsets, OffsetPair};
pub use pyramid::{AnchorHead, HeadOutputs, SppNet};
pub use sampling::{sample_minibatch, Minibatch};

use serde::{Deserialize, Serialize};

use crate::error::{MggError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PyramidConfig {
    /// `M`.
    pub levels: usize,
    /// Temporal stride of level 0 relative to the input.
    pub base_stride: usize,
    /// Anchor lengths per location as multiples of the level stride; `rho = len`.
    pub scales: Vec<f64>,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        PyramidConfig { levels: 3, base_stride: 8, scales: vec![1.0, 1.5, 2.0] }
    }
}

impl PyramidConfig {
    pub fn anchors_per_location(&self) -> usize {
        self.scales.len()
    }

    pub fn level_stride(&self, level: usize) -> usize {
        self.base_stride << level
    }

    /// Input lengths must be a multiple of this.
    pub fn required_multiple(&self) -> usize {
        self.level_stride(self.levels.saturating_sub(1))
    }

    pub fn level_lengths(&self, l_s: usize) -> Result<Vec<usize>> {
        self.validate()?;
        if l_s == 0 || l_s % self.required_multiple() != 0 {
            return Err(MggError::shape(
                "pyramid",
                format!("length {l_s} is not a positive multiple of {}", self.required_multiple()),
            ));
        }
        Ok((0..self.levels).map(|n| l_s / self.level_stride(n)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.scales.is_empty() {
            return Err(MggError::Config("pyramid needs >= 1 level and >= 1 anchor scale".into()));
        }
        if self.base_stride != 8 {
            return Err(MggError::Config(format!(
                "the contracting stack downsamples by 8; base_stride {} is unsupported",
                self.base_stride
            )));
        }
        if self.scales.iter().any(|s| !(*s > 0.0)) {
            return Err(MggError::Config("anchor scales must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SppConfig {
    pub pyramid: PyramidConfig,
    /// Width of every pyramid feature map.
    pub channels: usize,
    pub kernel: usize,
    pub head_kernel: usize,
    pub share_heads: bool,
}

impl Default for SppConfig {
    fn default() -> Self {
        SppConfig { pyramid: PyramidConfig::default(), channels: 64, kernel: 3, head_kernel: 3, share_heads: false }
    }
}

//! Shared trunk: two stacked temporal convolutions and factorized bilinear
//! matching between their outputs.
//!
//! For every output channel `i` the matching projects both conv outputs with
//! the same `W_i` (`d_h x g`) and `b_i` (`1 x g`) and takes the inner product:
//! `T_i^n = (H1^n W_i + b_i) . (H2^n W_i + b_i)`. All `W_i` are stored side by
//! side in one `d_h x (d_h * g)` matrix so the projection is a single matmul.

use serde::{Deserialize, Serialize};

use crate::error::{MggError, Result};
use crate::params::{Binding, ConvLayer, ParamInit, ParamStore};
use crate::seqgrad::{Activation, ConvSpec, Graph, Real, Var};

pub const BILINEAR_WEIGHT: &str = "basenet.bilinear.weight";
pub const BILINEAR_BIAS: &str = "basenet.bilinear.bias";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaseNetConfig {
    /// `d_h`: filters of both convolutions and width of `T`.
    pub hidden: usize,
    pub kernel: usize,
    /// `g`: rank of each bilinear projection.
    pub rank: usize,
}

impl Default for BaseNetConfig {
    fn default() -> Self {
        BaseNetConfig { hidden: 64, kernel: 5, rank: 16 }
    }
}

#[derive(Clone, Debug)]
pub struct BaseNet {
    pub conv1: ConvLayer,
    pub conv2: ConvLayer,
    pub hidden: usize,
    pub rank: usize,
    /// `false` feeds `H2` straight to the heads.
    pub bilinear: bool,
}

impl BaseNet {
    pub fn new(in_channels: usize, cfg: &BaseNetConfig, bilinear: bool) -> Result<Self> {
        if bilinear && cfg.rank >= cfg.hidden {
            return Err(MggError::Config(format!(
                "bilinear rank g = {} must be smaller than d_h = {}",
                cfg.rank, cfg.hidden
            )));
        }
        let spec = ConvSpec::new(cfg.hidden, cfg.kernel, Activation::Relu);
        Ok(BaseNet {
            conv1: ConvLayer::conv("basenet.conv1", in_channels, spec),
            conv2: ConvLayer::conv("basenet.conv2", cfg.hidden, spec),
            hidden: cfg.hidden,
            rank: cfg.rank,
            bilinear,
        })
    }

    pub fn register<F: Real>(&self, store: &mut ParamStore<F>, init: &mut ParamInit) -> Result<()> {
        self.conv1.register(store, init)?;
        self.conv2.register(store, init)?;
        if self.bilinear {
            let width = self.hidden * self.rank;
            store.insert(BILINEAR_WEIGHT, init.fan_in_uniform((self.hidden, width), width))?;
            store.insert(BILINEAR_BIAS, ndarray::Array2::zeros((1, width)))?;
        }
        Ok(())
    }

    pub fn output_channels(&self) -> usize {
        self.hidden
    }

    /// `H1`, `H2`.
    pub fn convs<F: Real>(&self, graph: &mut Graph<F>, binding: &mut Binding<'_, F>, l: Var) -> Result<(Var, Var)> {
        let h1 = self.conv1.forward(graph, binding, l)?;
        let h2 = self.conv2.forward(graph, binding, h1)?;
        Ok((h1, h2))
    }

    pub fn forward<F: Real>(&self, graph: &mut Graph<F>, binding: &mut Binding<'_, F>, l: Var) -> Result<Var> {
        if self.bilinear {
            self.forward_full(graph, binding, l)
        } else {
            self.forward_ablated(graph, binding, l)
        }
    }

    pub fn forward_full<F: Real>(
        &self,
        graph: &mut Graph<F>,
        binding: &mut Binding<'_, F>,
        l: Var,
    ) -> Result<Var> {
        let (h1, h2) = self.convs(graph, binding, l)?;
        let w = binding.var(graph, BILINEAR_WEIGHT)?;
        let b = binding.var(graph, BILINEAR_BIAS)?;
        let p1 = graph.matmul(h1, w)?;
        let p1 = graph.add_row(p1, b)?;
        let p2 = graph.matmul(h2, w)?;
        let p2 = graph.add_row(p2, b)?;
        graph.group_dot(p1, p2, self.rank)
    }

    /// `conv2(conv1(L))`, same conv weights as the full path.
    pub fn forward_ablated<F: Real>(
        &self,
        graph: &mut Graph<F>,
        binding: &mut Binding<'_, F>,
        l: Var,
    ) -> Result<Var> {
        Ok(self.convs(graph, binding, l)?.1)
    }
}

/// `d_h * (d_h * g + g)`.
pub fn bilinear_param_count(hidden: usize, rank: usize) -> usize {
    hidden * (hidden * rank + rank)
}

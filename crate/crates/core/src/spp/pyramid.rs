use super::SppConfig;
use crate::error::{MggError, Result};
use crate::params::{Binding, ConvLayer, ParamInit, ParamStore};
use crate::seqgrad::{Activation, ConvSpec, Graph, Real, Var};

/// Classification and regression branches for one pyramid level.
#[derive(Clone, Debug)]
pub struct AnchorHead {
    pub cls: [ConvLayer; 2],
    pub reg: [ConvLayer; 2],
}

impl AnchorHead {
    fn new(prefix: &str, channels: usize, kernel: usize, rho: usize) -> Self {
        let hidden = ConvSpec::new(channels, kernel, Activation::Relu);
        AnchorHead {
            cls: [
                ConvLayer::conv(format!("{prefix}.cls1"), channels, hidden),
                ConvLayer::conv(format!("{prefix}.cls2"), channels, ConvSpec::new(rho, kernel, Activation::Sigmoid)),
            ],
            reg: [
                ConvLayer::conv(format!("{prefix}.reg1"), channels, hidden),
                ConvLayer::conv(format!("{prefix}.reg2"), channels, ConvSpec::new(2 * rho, kernel, Activation::None)),
            ],
        }
    }

    fn layers(&self) -> impl Iterator<Item = &ConvLayer> {
        self.cls.iter().chain(&self.reg)
    }

    /// Per-level `(scores L x rho, offsets L x 2rho)`.
    pub fn forward<F: Real>(&self, graph: &mut Graph<F>, binding: &mut Binding<'_, F>, f: Var) -> Result<(Var, Var)> {
        let c = self.cls[0].forward(graph, binding, f)?;
        let c = self.cls[1].forward(graph, binding, c)?;
        let r = self.reg[0].forward(graph, binding, f)?;
        let r = self.reg[1].forward(graph, binding, r)?;
        Ok((c, r))
    }
}

/// Concatenated outputs over all levels, in anchor order.
#[derive(Clone, Debug)]
pub struct HeadOutputs {
    /// `N x 1` anchor scores in `(0, 1)`.
    pub scores: Var,
    /// `2N x 1` `(t_c, t_l)` pairs.
    pub offsets: Var,
}

#[derive(Clone, Debug)]
pub struct SppNet {
    pub config: SppConfig,
    pub lateral: bool,
    pub contract: ConvLayer,
    /// Stride-2 convs producing contracting levels `1..M`.
    pub down: Vec<ConvLayer>,
    /// Deconv into level `n` from level `n + 1`, for `n < M - 1`.
    pub up: Vec<ConvLayer>,
    /// 1x1 lateral conv on contracting level `n`, for `n < M - 1`.
    pub lateral_convs: Vec<ConvLayer>,
    pub heads: Vec<AnchorHead>,
}

impl SppNet {
    pub fn new(in_channels: usize, config: &SppConfig, lateral: bool) -> Result<Self> {
        config.pyramid.validate()?;
        let c = config.channels;
        let k = config.kernel;
        let levels = config.pyramid.levels;
        let rho = config.pyramid.anchors_per_location();
        let contract =
            ConvLayer::conv("spp.contract", in_channels, ConvSpec::new(c, k, Activation::Relu).with_stride(2));
        let down = (1..levels)
            .map(|n| ConvLayer::conv(format!("spp.down{n}"), c, ConvSpec::new(c, k, Activation::Relu).with_stride(2)))
            .collect();
        let (up, lateral_convs) = if lateral {
            (
                (0..levels - 1)
                    .map(|n| {
                        ConvLayer::deconv(format!("spp.up{n}"), c, ConvSpec::new(c, k, Activation::None).with_stride(2))
                    })
                    .collect(),
                (0..levels - 1)
                    .map(|n| ConvLayer::conv(format!("spp.lateral{n}"), c, ConvSpec::new(c, 1, Activation::None)))
                    .collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        let heads = if config.share_heads {
            vec![AnchorHead::new("spp.head", c, config.head_kernel, rho)]
        } else {
            (0..levels).map(|n| AnchorHead::new(&format!("spp.head{n}"), c, config.head_kernel, rho)).collect()
        };
        Ok(SppNet { config: config.clone(), lateral, contract, down, up, lateral_convs, heads })
    }

    pub fn register<F: Real>(&self, store: &mut ParamStore<F>, init: &mut ParamInit) -> Result<()> {
        let layers = std::iter::once(&self.contract)
            .chain(&self.down)
            .chain(&self.up)
            .chain(&self.lateral_convs)
            .chain(self.heads.iter().flat_map(AnchorHead::layers));
        for layer in layers {
            layer.register(store, init)?;
        }
        Ok(())
    }

    fn head(&self, level: usize) -> &AnchorHead {
        if self.config.share_heads {
            &self.heads[0]
        } else {
            &self.heads[level]
        }
    }

    /// Contracting features `F_L`, finest first.
    pub fn contracting<F: Real>(&self, graph: &mut Graph<F>, binding: &mut Binding<'_, F>, t: Var) -> Result<Vec<Var>> {
        let len = graph.value(t).nrows();
        let multiple = self.config.pyramid.required_multiple();
        if len % multiple != 0 {
            return Err(MggError::shape(
                "build_pyramid",
                format!("sequence length {len} must be a multiple of {multiple}; pad the input"),
            ));
        }
        let x = self.contract.forward(graph, binding, t)?;
        let x = graph.maxpool1d(x, 2, 2)?;
        let mut level = graph.maxpool1d(x, 2, 2)?;
        let mut out = vec![level];
        for conv in &self.down {
            level = conv.forward(graph, binding, level)?;
            out.push(level);
        }
        Ok(out)
    }

    /// Fused pyramid `F_H` with lengths `l_s / (8 * 2^n)`, finest first.
    /// Without lateral connections this is the contracting pyramid itself.
    pub fn build_pyramid<F: Real>(
        &self,
        graph: &mut Graph<F>,
        binding: &mut Binding<'_, F>,
        t: Var,
    ) -> Result<Vec<Var>> {
        let low = self.contracting(graph, binding, t)?;
        if !self.lateral {
            return Ok(low);
        }
        let levels = low.len();
        let mut high = vec![low[levels - 1]; levels];
        for n in (0..levels - 1).rev() {
            let up = self.up[n].forward(graph, binding, high[n + 1])?;
            let side = self.lateral_convs[n].forward(graph, binding, low[n])?;
            let sum = graph.add(up, side)?;
            high[n] = graph.relu(sum)?;
        }
        Ok(high)
    }

    pub fn predict_heads<F: Real>(
        &self,
        graph: &mut Graph<F>,
        binding: &mut Binding<'_, F>,
        levels: &[Var],
    ) -> Result<HeadOutputs> {
        let mut scores = Vec::with_capacity(levels.len());
        let mut offsets = Vec::with_capacity(levels.len());
        for (n, f) in levels.iter().enumerate() {
            let (s, o) = self.head(n).forward(graph, binding, *f)?;
            scores.push(graph.flatten(s)?);
            offsets.push(graph.flatten(o)?);
        }
        Ok(HeadOutputs { scores: graph.concat_rows(&scores)?, offsets: graph.concat_rows(&offsets)? })
    }

    pub fn forward<F: Real>(&self, graph: &mut Graph<F>, binding: &mut Binding<'_, F>, t: Var) -> Result<HeadOutputs> {
        let levels = self.build_pyramid(graph, binding, t)?;
        self.predict_heads(graph, binding, &levels)
    }
}

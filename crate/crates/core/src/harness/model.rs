//! The assembled network: trunk (BaseNet), SPP pyramid and FAP heads.

use ndarray::{s, Array2, ArrayView2};

use super::config::{ArchFlags, ModelConfig};
use crate::basenet::BaseNet;
use crate::embed::representation;
use crate::error::{MggError, Result};
use crate::fap::{ActionnessVars, FapNet};
use crate::params::{Binding, ParamInit, ParamStore};
use crate::seqgrad::{Graph, Real, Var};
use crate::spp::{generate_anchors, AnchorGrid, HeadOutputs, SppNet};

/// Which branches to evaluate on top of the trunk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Branches {
    pub spp: bool,
    pub fap: bool,
}

impl Branches {
    pub const BOTH: Branches = Branches { spp: true, fap: true };
}

#[derive(Clone, Debug)]
pub struct ModelOutputs {
    pub trunk: Var,
    pub spp: Option<HeadOutputs>,
    pub fap: Option<ActionnessVars>,
}

#[derive(Clone, Debug)]
pub struct MggModel {
    pub config: ModelConfig,
    pub arch: ArchFlags,
    pub basenet: BaseNet,
    pub spp: SppNet,
    pub fap: FapNet,
}

impl MggModel {
    pub fn new(config: &ModelConfig, arch: ArchFlags) -> Result<Self> {
        config.validate()?;
        let in_channels = config.feature_dim + if arch.position { config.position_dim } else { 0 };
        let basenet = BaseNet::new(in_channels, &config.basenet, arch.bilinear)?;
        let width = basenet.output_channels();
        Ok(MggModel {
            config: config.clone(),
            arch,
            spp: SppNet::new(width, &config.spp, arch.lateral)?,
            fap: FapNet::new(width, &config.fap),
            basenet,
        })
    }

    pub fn init_params<F: Real>(&self, seed: u64) -> Result<ParamStore<F>> {
        let mut store = ParamStore::new();
        let mut init = ParamInit::new(seed);
        self.basenet.register(&mut store, &mut init)?;
        self.spp.register(&mut store, &mut init)?;
        self.fap.register(&mut store, &mut init)?;
        Ok(store)
    }

    /// Same names and shapes as a fresh initialization.
    pub fn check_params<F: Real>(&self, store: &ParamStore<F>) -> Result<()> {
        let reference = self.init_params::<f32>(0)?;
        if reference.len() != store.len() {
            return Err(MggError::Format(format!(
                "expected {} parameter tensors, found {}",
                reference.len(),
                store.len()
            )));
        }
        for (name, value) in reference.iter() {
            match store.get(name) {
                Some(v) if v.dim() == value.dim() => {}
                Some(v) => {
                    return Err(MggError::Format(format!("{name}: shape {:?}, expected {:?}", v.dim(), value.dim())))
                }
                None => return Err(MggError::Format(format!("missing parameter {name}"))),
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.init_params::<f32>(0)?.scalar_count())
    }

    /// Smallest admissible network length `>= len`.
    pub fn padded_len(&self, len: usize) -> usize {
        let m = self.config.spp.pyramid.required_multiple();
        len.max(1).div_ceil(m) * m
    }

    /// Zero-pads the features to [`Self::padded_len`] and appends position
    /// embeddings when enabled.
    pub fn prepare_input<F: Real>(&self, features: ArrayView2<'_, f32>) -> Result<Array2<F>> {
        let (len, d_f) = features.dim();
        if d_f != self.config.feature_dim {
            return Err(MggError::shape("prepare_input", format!("{d_f} feature channels, model expects {}", self.config.feature_dim)));
        }
        let mut padded = Array2::<F>::zeros((self.padded_len(len), d_f));
        padded.slice_mut(s![..len, ..]).assign(&features.mapv(|x| F::from_f64(x as f64)));
        Ok(representation(padded.view(), self.config.position_dim, self.arch.position)?.data)
    }

    pub fn anchors(&self, padded_len: usize) -> Result<AnchorGrid> {
        generate_anchors(&self.config.spp.pyramid, padded_len)
    }

    pub fn forward<F: Real>(
        &self,
        graph: &mut Graph<F>,
        binding: &mut Binding<'_, F>,
        input: Array2<F>,
        branches: Branches,
    ) -> Result<ModelOutputs> {
        let x = graph.input(input)?;
        let trunk = self.basenet.forward(graph, binding, x)?;
        let spp = if branches.spp { Some(self.spp.forward(graph, binding, trunk)?) } else { None };
        let fap = if branches.fap { Some(self.fap.forward(graph, binding, trunk)?) } else { None };
        Ok(ModelOutputs { trunk, spp, fap })
    }
}

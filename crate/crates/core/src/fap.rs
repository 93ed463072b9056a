//! Frame actionness producer: three independent two-layer conv heads giving
//! per-frame start, end and middle probabilities, with their labels and
//! class-balanced loss.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{MggError, Result};
use crate::params::{Binding, ConvLayer, ParamInit, ParamStore};
use crate::segment::Segment;
use crate::seqgrad::{inverse_frequency_weights, Activation, ConvSpec, Graph, Real, Var};

/// Boundary regions are `t +- duration / eta`.
pub const DEFAULT_ETA: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FapConfig {
    pub hidden: usize,
    pub kernel: usize,
}

impl Default for FapConfig {
    fn default() -> Self {
        FapConfig { hidden: 64, kernel: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Actionness {
    Start,
    End,
    Middle,
}

impl Actionness {
    pub const ALL: [Actionness; 3] = [Actionness::Start, Actionness::End, Actionness::Middle];

    pub fn name(self) -> &'static str {
        match self {
            Actionness::Start => "start",
            Actionness::End => "end",
            Actionness::Middle => "middle",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FapNet {
    pub heads: [[ConvLayer; 2]; 3],
}

/// Graph handles of the three `l_s x 1` probability sequences.
#[derive(Clone, Copy, Debug)]
pub struct ActionnessVars {
    pub start: Var,
    pub end: Var,
    pub middle: Var,
}

impl ActionnessVars {
    pub fn get(&self, kind: Actionness) -> Var {
        match kind {
            Actionness::Start => self.start,
            Actionness::End => self.end,
            Actionness::Middle => self.middle,
        }
    }

    pub fn values<F: Real>(&self, graph: &Graph<F>) -> ActionnessTriple {
        let read = |v: Var| graph.value(v).iter().map(|x| x.as_f64()).collect();
        ActionnessTriple { start: read(self.start), end: read(self.end), middle: read(self.middle) }
    }
}

/// `P_s`, `P_e`, `P_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionnessTriple {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub middle: Vec<f64>,
}

impl ActionnessTriple {
    pub fn truncate(&mut self, len: usize) {
        self.start.truncate(len);
        self.end.truncate(len);
        self.middle.truncate(len);
    }
}

impl FapNet {
    pub fn new(in_channels: usize, cfg: &FapConfig) -> Self {
        let head = |kind: Actionness| {
            [
                ConvLayer::conv(
                    format!("fap.{}.conv1", kind.name()),
                    in_channels,
                    ConvSpec::new(cfg.hidden, cfg.kernel, Activation::Relu),
                ),
                ConvLayer::conv(
                    format!("fap.{}.conv2", kind.name()),
                    cfg.hidden,
                    ConvSpec::new(1, cfg.kernel, Activation::Sigmoid),
                ),
            ]
        };
        FapNet { heads: Actionness::ALL.map(head) }
    }

    pub fn register<F: Real>(&self, store: &mut ParamStore<F>, init: &mut ParamInit) -> Result<()> {
        for layer in self.heads.iter().flatten() {
            layer.register(store, init)?;
        }
        Ok(())
    }

    pub fn forward<F: Real>(&self, graph: &mut Graph<F>, binding: &mut Binding<'_, F>, t: Var) -> Result<ActionnessVars> {
        let mut out = [t; 3];
        for (slot, [c1, c2]) in out.iter_mut().zip(&self.heads) {
            let h = c1.forward(graph, binding, t)?;
            *slot = c2.forward(graph, binding, h)?;
        }
        Ok(ActionnessVars { start: out[0], end: out[1], middle: out[2] })
    }
}

/// Binary per-frame targets `G_s`, `G_e`, `G_m` and the validity mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameLabels {
    pub start: Vec<bool>,
    pub end: Vec<bool>,
    pub middle: Vec<bool>,
    pub valid: Vec<bool>,
}

impl FrameLabels {
    pub fn get(&self, kind: Actionness) -> &[bool] {
        match kind {
            Actionness::Start => &self.start,
            Actionness::End => &self.end,
            Actionness::Middle => &self.middle,
        }
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }
}

/// Frame `n` sits at time `n`. It is a start (end) frame when
/// `|n - t_s| <= d / eta` (`|n - t_e| <= d / eta`) for some instance of
/// duration `d`, and a middle frame when `t_s <= n < t_e`. The first
/// `valid_len` frames are valid; the rest are padding.
pub fn assign_frame_labels(gt: &[Segment], l_s: usize, valid_len: usize, eta: f64) -> FrameLabels {
    let mut labels = FrameLabels {
        start: vec![false; l_s],
        end: vec![false; l_s],
        middle: vec![false; l_s],
        valid: (0..l_s).map(|n| n < valid_len).collect(),
    };
    let mark = |flags: &mut [bool], lo: f64, hi: f64, closed_hi: bool| {
        let first = lo.max(0.0).ceil() as usize;
        for (n, flag) in flags.iter_mut().enumerate().skip(first) {
            let t = n as f64;
            if t > hi || (!closed_hi && t >= hi) {
                break;
            }
            *flag = true;
        }
    };
    for g in gt {
        let r = g.duration() / eta;
        mark(&mut labels.start, g.t_s - r, g.t_s + r, true);
        mark(&mut labels.end, g.t_e - r, g.t_e + r, true);
        mark(&mut labels.middle, g.t_s, g.t_e, false);
    }
    labels
}

#[derive(Clone, Copy, Debug)]
pub struct FapLoss {
    pub total: Var,
    pub start: Var,
    pub end: Var,
    pub middle: Var,
}

/// `L_s + L_e + L_m`, each an inverse-frequency weighted BCE over valid frames.
pub fn fap_loss<F: Real>(graph: &mut Graph<F>, probs: &ActionnessVars, labels: &FrameLabels) -> Result<FapLoss> {
    let l_s = labels.len();
    let mask = Array2::from_shape_fn((l_s, 1), |(n, _)| if labels.valid[n] { F::one() } else { F::zero() });
    let mut terms = [probs.start; 3];
    for (slot, kind) in terms.iter_mut().zip(Actionness::ALL) {
        let var = probs.get(kind);
        if graph.value(var).dim() != (l_s, 1) {
            return Err(MggError::shape("fap_loss", format!("{:?} vs {l_s} labels", graph.value(var).dim())));
        }
        let flags = labels.get(kind);
        let (w_pos, w_neg) = inverse_frequency_weights(flags, &labels.valid);
        let target = Array2::from_shape_fn((l_s, 1), |(n, _)| if flags[n] { F::one() } else { F::zero() });
        *slot = graph.weighted_bce(var, &target, F::from_f64(w_pos), F::from_f64(w_neg), Some(&mask))?;
    }
    let partial = graph.add(terms[0], terms[1])?;
    let total = graph.add(partial, terms[2])?;
    Ok(FapLoss { total, start: terms[0], end: terms[1], middle: terms[2] })
}

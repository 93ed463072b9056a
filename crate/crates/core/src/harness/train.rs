//! Mini-batch training of the joint objective with Adam.

use indexmap::IndexMap;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::{Checkpoint, Fingerprint};
use super::config::{AblationFlags, ModelConfig, Objective, TrainConfig};
use super::dataset::{Dataset, Video};
use super::model::{Branches, MggModel};
use crate::error::{MggError, Result};
use crate::fap::{assign_frame_labels, fap_loss, FapLoss, FrameLabels};
use crate::params::{Binding, Gradients, ParamStore};
use crate::seqgrad::{Graph, Real, Var};
use crate::spp::{assign_labels, regression_targets, sample_minibatch, spp_loss, AnchorGrid, LabelAssignment, Minibatch, SppLoss};

/// Per-video targets, computed once before training.
#[derive(Clone, Debug)]
pub struct TrainingSample {
    pub id: String,
    /// Padded network input.
    pub input: Array2<f32>,
    pub grid: AnchorGrid,
    pub labels: LabelAssignment,
    pub targets: Array2<f64>,
    pub frames: FrameLabels,
}

pub fn prepare_sample(model: &MggModel, video: &Video, eta: f64) -> Result<TrainingSample> {
    let input = model.prepare_input::<f32>(video.features.view())?;
    let padded = input.nrows();
    let grid = model.anchors(padded)?;
    let labels = assign_labels(&grid, &video.annotations);
    let targets = regression_targets(&grid, &labels)?;
    Ok(TrainingSample {
        id: video.id.clone(),
        input,
        frames: assign_frame_labels(&video.annotations, padded, video.len(), eta),
        grid,
        labels,
        targets,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub total: Var,
    pub spp: Option<SppLoss>,
    pub fap: Option<FapLoss>,
}

/// Forward pass plus the objective on one video.
#[allow(clippy::too_many_arguments)]
pub fn build_loss<F: Real>(
    model: &MggModel,
    graph: &mut Graph<F>,
    binding: &mut Binding<'_, F>,
    input: Array2<F>,
    sample: &TrainingSample,
    batch: &Minibatch,
    cfg: &TrainConfig,
    objective: Objective,
) -> Result<LossVars> {
    let branches = Branches { spp: objective.uses_spp(), fap: objective.uses_fap() };
    let out = model.forward(graph, binding, input, branches)?;
    let spp = match &out.spp {
        Some(h) => Some(spp_loss(graph, h.scores, h.offsets, &sample.targets, batch, cfg.gamma)?),
        None => None,
    };
    let fap = match &out.fap {
        Some(p) => Some(fap_loss(graph, p, &sample.frames)?),
        None => None,
    };
    let total = match (spp, fap) {
        (Some(s), Some(f)) => {
            let weighted = graph.scale(f.total, F::from_f64(cfg.beta))?;
            graph.add(s.total, weighted)?
        }
        (Some(s), None) => s.total,
        (None, Some(f)) => f.total,
        (None, None) => unreachable!("every objective uses a branch"),
    };
    Ok(LossVars { total, spp, fap })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossValues {
    pub total: f64,
    pub spp: f64,
    pub fap: f64,
}

impl LossValues {
    fn accumulate(&mut self, other: LossValues) {
        self.total += other.total;
        self.spp += other.spp;
        self.fap += other.fap;
    }

    fn scaled(self, k: f64) -> Self {
        LossValues { total: self.total * k, spp: self.spp * k, fap: self.fap * k }
    }
}

fn loss_values<F: Real>(graph: &Graph<F>, vars: &LossVars) -> LossValues {
    LossValues {
        total: graph.scalar(vars.total).as_f64(),
        spp: vars.spp.map_or(0.0, |s| graph.scalar(s.total).as_f64()),
        fap: vars.fap.map_or(0.0, |f| graph.scalar(f.total).as_f64()),
    }
}

/// Loss and parameter gradients on one video.
pub fn sample_gradients(
    model: &MggModel,
    params: &ParamStore<f32>,
    sample: &TrainingSample,
    batch: &Minibatch,
    cfg: &TrainConfig,
    objective: Objective,
) -> Result<(LossValues, Gradients<f32>)> {
    let mut graph = Graph::new();
    let mut binding = Binding::new(params);
    let vars = build_loss(model, &mut graph, &mut binding, sample.input.clone(), sample, batch, cfg, objective)?;
    let values = loss_values(&graph, &vars);
    graph.backward(vars.total)?;
    Ok((values, binding.gradients(&graph)))
}

pub fn sample_loss(
    model: &MggModel,
    params: &ParamStore<f32>,
    sample: &TrainingSample,
    batch: &Minibatch,
    cfg: &TrainConfig,
    objective: Objective,
) -> Result<LossValues> {
    let mut graph = Graph::new();
    let mut binding = Binding::frozen(params);
    let vars = build_loss(model, &mut graph, &mut binding, sample.input.clone(), sample, batch, cfg, objective)?;
    Ok(loss_values(&graph, &vars))
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: IndexMap<String, Array2<f32>>,
    v: IndexMap<String, Array2<f32>>,
}

impl Adam {
    pub fn new(cfg: &TrainConfig) -> Self {
        Adam {
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
            step: 0,
            m: IndexMap::new(),
            v: IndexMap::new(),
        }
    }

    pub fn update(&mut self, params: &mut ParamStore<f32>, grads: &Gradients<f32>) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2) = (self.beta1 as f32, self.beta2 as f32);
        let step = (self.lr * c2.sqrt() / c1) as f32;
        let eps = (self.eps * c2.sqrt()) as f32;
        for (name, p) in params.iter_mut() {
            let Some(g) = grads.get(name) else { continue };
            let m = self.m.entry(name.clone()).or_insert_with(|| Array2::zeros(p.dim()));
            let v = self.v.entry(name.clone()).or_insert_with(|| Array2::zeros(p.dim()));
            ndarray::Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= step * *m / (v.sqrt() + eps);
            });
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Means over the videos of the epoch, taken before each update.
    pub loss: LossValues,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean loss of the initial parameters over the training set.
    pub initial: LossValues,
    pub epochs: Vec<EpochLog>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss.total)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub report: TrainReport,
}

/// SplitMix64 finalizer, used to derive independent RNG streams.
fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(seed: u64, epoch: u64, video: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(seed, epoch), video))
}

const INIT_STREAM: u64 = u64::MAX;

pub fn prepare_samples(model: &MggModel, dataset: &Dataset, eta: f64) -> Result<Vec<TrainingSample>> {
    dataset.videos.iter().map(|v| prepare_sample(model, v, eta)).collect()
}

pub fn train(
    dataset: &Dataset,
    model_cfg: &ModelConfig,
    flags: &AblationFlags,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_progress(dataset, model_cfg, flags, cfg, |_| {})
}

/// Trains from a fresh initialization; `on_epoch` sees every epoch's losses.
pub fn train_with_progress(
    dataset: &Dataset,
    model_cfg: &ModelConfig,
    flags: &AblationFlags,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    flags.validate()?;
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(MggError::Dataset("cannot train on an empty dataset".into()));
    }
    let objective = Objective::from_flags(flags);
    let model = MggModel::new(model_cfg, flags.arch())?;
    let samples = prepare_samples(&model, dataset, cfg.eta)?;
    let mut params = model.init_params::<f32>(mix(cfg.seed, INIT_STREAM))?;

    let mut initial = LossValues::default();
    for (i, sample) in samples.iter().enumerate() {
        let batch = sample_minibatch(&sample.labels, &mut stream(cfg.seed, INIT_STREAM, i as u64));
        initial.accumulate(sample_loss(&model, &params, sample, &batch, cfg, objective)?);
    }
    let initial = initial.scaled(1.0 / samples.len() as f64);
    log::info!("initial loss {:.5} (spp {:.5}, fap {:.5})", initial.total, initial.spp, initial.fap);

    let mut adam = Adam::new(cfg);
    let mut report = TrainReport { initial, epochs: Vec::with_capacity(cfg.epochs) };
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut stream(cfg.seed, epoch as u64, INIT_STREAM));
        let mut sum = LossValues::default();
        for chunk in order.chunks(cfg.batch_size) {
            let mut acc: Option<Gradients<f32>> = None;
            for &i in chunk {
                let sample = &samples[i];
                let batch = sample_minibatch(&sample.labels, &mut stream(cfg.seed, epoch as u64, i as u64));
                let (values, grads) = sample_gradients(&model, &params, sample, &batch, cfg, objective)?;
                if !values.total.is_finite() {
                    return Err(MggError::Diverged { epoch, video: sample.id.clone(), loss: values.total });
                }
                sum.accumulate(values);
                match &mut acc {
                    None => acc = Some(grads),
                    Some(a) => {
                        for (name, g) in grads {
                            if let Some(t) = a.get_mut(&name) {
                                *t += &g;
                            }
                        }
                    }
                }
            }
            let mut grads = acc.expect("chunks are non-empty");
            let k = 1.0 / chunk.len() as f32;
            for g in grads.values_mut() {
                g.mapv_inplace(|x| x * k);
            }
            adam.update(&mut params, &grads);
        }
        let log = EpochLog { epoch: epoch + 1, loss: sum.scaled(1.0 / samples.len() as f64) };
        log::info!(
            "epoch {:>3}: loss {:.5} (spp {:.5}, fap {:.5})",
            log.epoch,
            log.loss.total,
            log.loss.spp,
            log.loss.fap
        );
        on_epoch(&log);
        report.epochs.push(log);
    }
    let fingerprint = Fingerprint::new(model_cfg, flags.arch(), objective, cfg.seed);
    Ok(TrainOutcome { checkpoint: Checkpoint { fingerprint, params }, report })
}

/// Separate SPP-only and FAP-only runs, each with its own trunk.
pub fn train_stagewise(
    dataset: &Dataset,
    model_cfg: &ModelConfig,
    flags: &AblationFlags,
    cfg: &TrainConfig,
) -> Result<(TrainOutcome, TrainOutcome)> {
    let base = AblationFlags { spp_only: false, fap_only: false, ..*flags };
    let spp = train(dataset, model_cfg, &AblationFlags { spp_only: true, ..base }, cfg)?;
    let fap = train(dataset, model_cfg, &AblationFlags { fap_only: true, ..base }, cfg)?;
    Ok((spp, fap))
}

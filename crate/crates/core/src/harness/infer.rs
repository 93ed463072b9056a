//! Proposal generation: SPP decoding, NMS and temporal boundary adjustment.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::config::Objective;
use super::dataset::{Dataset, Video};
use super::model::{Branches, MggModel};
use crate::error::{MggError, Result};
use crate::fap::ActionnessTriple;
use crate::params::{Binding, ParamStore};
use crate::segment::{sort_by_score_desc, Segment};
use crate::seqgrad::Graph;
use crate::spp::{decode_offsets, OffsetPair};
use crate::tba::{nms, stage1_adjust, stage2_fuse, tag_group, TbaConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalPath {
    /// SPP, NMS, then boundary adjustment from FAP.
    Full,
    /// SPP and NMS only.
    SppOnly,
    /// Grouped middle actionness only.
    FapOnly,
}

impl ProposalPath {
    pub fn for_objective(objective: Objective) -> Self {
        match objective {
            Objective::Joint => ProposalPath::Full,
            Objective::SppOnly => ProposalPath::SppOnly,
            Objective::FapOnly => ProposalPath::FapOnly,
        }
    }

    fn branches(self) -> Branches {
        match self {
            ProposalPath::Full => Branches::BOTH,
            ProposalPath::SppOnly => Branches { spp: true, fap: false },
            ProposalPath::FapOnly => Branches { spp: false, fap: true },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferOptions {
    pub path: ProposalPath,
    /// Only used by the full path.
    pub stage1: bool,
    pub stage2: bool,
}

impl InferOptions {
    pub fn new(path: ProposalPath) -> Self {
        InferOptions { path, stage1: true, stage2: true }
    }
}

/// Network outputs of one video, before any post-processing.
#[derive(Clone, Debug, PartialEq)]
pub struct RawPrediction {
    pub video_id: String,
    /// Unpadded length.
    pub len: usize,
    /// Decoded anchors clamped to `[0, len]`, degenerate ones dropped, in
    /// anchor order.
    pub candidates: Option<Vec<Segment>>,
    pub actionness: Option<ActionnessTriple>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoProposals {
    pub video_id: String,
    /// Best first.
    pub proposals: Vec<Segment>,
}

/// A model and its parameters, ready for forward passes.
#[derive(Clone, Debug)]
pub struct Predictor {
    pub model: MggModel,
    pub params: ParamStore<f32>,
}

impl Predictor {
    pub fn new(checkpoint: &Checkpoint) -> Result<Self> {
        Ok(Predictor { model: checkpoint.model()?, params: checkpoint.params.clone() })
    }

    pub fn predict(&self, video: &Video, branches: Branches) -> Result<RawPrediction> {
        let input = self.model.prepare_input::<f32>(video.features.view())?;
        let padded = input.nrows();
        let mut graph = Graph::new();
        let mut binding = Binding::frozen(&self.params);
        let out = self.model.forward(&mut graph, &mut binding, input, branches)?;
        let len = video.len();
        let candidates = match &out.spp {
            Some(h) => {
                let grid = self.model.anchors(padded)?;
                let scores = graph.value(h.scores);
                let offsets = graph.value(h.offsets);
                let mut c = Vec::with_capacity(grid.len());
                for (i, anchor) in grid.anchors.iter().enumerate() {
                    let pair = OffsetPair { t_c: offsets[[2 * i, 0]] as f64, t_l: offsets[[2 * i + 1, 0]] as f64 };
                    let seg = decode_offsets(anchor, pair, len as f64, scores[[i, 0]] as f64);
                    if seg.t_e > seg.t_s {
                        c.push(seg);
                    }
                }
                Some(c)
            }
            None => None,
        };
        let actionness = out.fap.map(|p| {
            let mut t = p.values(&graph);
            t.truncate(len);
            t
        });
        Ok(RawPrediction { video_id: video.id.clone(), len, candidates, actionness })
    }
}

fn missing(what: &str, id: &str) -> MggError {
    MggError::Invalid(format!("video {id}: prediction lacks {what} outputs"))
}

/// Adjusted segments that collapse keep their previous boundaries.
fn keep_valid(before: &[Segment], after: Vec<Segment>, len: f64) -> Vec<Segment> {
    before.iter().zip(after).map(|(b, a)| if a.is_valid_within(len) { a } else { *b }).collect()
}

/// Post-processing for one video; the result is sorted best first.
pub fn assemble(raw: &RawPrediction, tba: &TbaConfig, opts: &InferOptions) -> Result<Vec<Segment>> {
    let len = raw.len as f64;
    let mut out = match opts.path {
        ProposalPath::FapOnly => {
            let a = raw.actionness.as_ref().ok_or_else(|| missing("FAP", &raw.video_id))?;
            tag_group(&a.middle, &tba.group_thresholds, tba.gap_tolerance)
        }
        ProposalPath::SppOnly | ProposalPath::Full => {
            let cands = raw.candidates.as_ref().ok_or_else(|| missing("SPP", &raw.video_id))?;
            let mut segs = nms(cands, tba.nms_tiou);
            if opts.path == ProposalPath::Full && (opts.stage1 || opts.stage2) {
                let a = raw.actionness.as_ref().ok_or_else(|| missing("FAP", &raw.video_id))?;
                if opts.stage1 {
                    let adjusted = stage1_adjust(&segs, &a.start, &a.end, tba);
                    segs = keep_valid(&segs, adjusted, len);
                }
                if opts.stage2 {
                    let groups = tag_group(&a.middle, &tba.group_thresholds, tba.gap_tolerance);
                    segs = stage2_fuse(&segs, &groups, tba.stage2_tiou);
                }
            }
            segs
        }
    };
    sort_by_score_desc(&mut out);
    Ok(out)
}

pub fn predict_dataset(predictor: &Predictor, dataset: &Dataset, branches: Branches) -> Result<Vec<RawPrediction>> {
    dataset.videos.iter().map(|v| predictor.predict(v, branches)).collect()
}

/// SPP outputs from one predictor and FAP outputs from another, as in
/// stagewise training.
pub fn predict_dataset_split(spp: &Predictor, fap: &Predictor, dataset: &Dataset) -> Result<Vec<RawPrediction>> {
    dataset
        .videos
        .iter()
        .map(|v| {
            let mut raw = spp.predict(v, Branches { spp: true, fap: false })?;
            raw.actionness = fap.predict(v, Branches { spp: false, fap: true })?.actionness;
            Ok(raw)
        })
        .collect()
}

pub fn assemble_all(raw: &[RawPrediction], tba: &TbaConfig, opts: &InferOptions) -> Result<Vec<VideoProposals>> {
    raw.iter()
        .map(|r| Ok(VideoProposals { video_id: r.video_id.clone(), proposals: assemble(r, tba, opts)? }))
        .collect()
}

pub fn infer(
    checkpoint: &Checkpoint,
    dataset: &Dataset,
    tba: &TbaConfig,
    opts: &InferOptions,
) -> Result<Vec<VideoProposals>> {
    tba.validate()?;
    let predictor = Predictor::new(checkpoint)?;
    if let Some(d_f) = dataset.feature_dim() {
        if d_f != predictor.model.config.feature_dim {
            return Err(MggError::Dataset(format!(
                "dataset has {d_f} feature channels, checkpoint expects {}",
                predictor.model.config.feature_dim
            )));
        }
    }
    assemble_all(&predict_dataset(&predictor, dataset, opts.path.branches())?, tba, opts)
}

#[derive(Serialize, Deserialize)]
struct ProposalRecord {
    video_id: String,
    t_s: f64,
    t_e: f64,
    score: f64,
}

pub fn write_proposals(path: &Path, proposals: &[VideoProposals]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for v in proposals {
        for p in &v.proposals {
            let rec = ProposalRecord { video_id: v.video_id.clone(), t_s: p.t_s, t_e: p.t_e, score: p.score };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Groups records by video in order of first appearance; within a video the
/// file order is kept.
pub fn read_proposals(path: &Path) -> Result<Vec<VideoProposals>> {
    let mut out: Vec<VideoProposals> = Vec::new();
    let mut index = HashMap::new();
    for (lineno, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ProposalRecord = serde_json::from_str(&line)
            .map_err(|e| MggError::Dataset(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        let slot = *index.entry(rec.video_id.clone()).or_insert_with(|| {
            out.push(VideoProposals { video_id: rec.video_id.clone(), proposals: Vec::new() });
            out.len() - 1
        });
        out[slot].proposals.push(Segment::new(rec.t_s, rec.t_e, rec.score));
    }
    Ok(out)
}

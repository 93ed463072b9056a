//! Synthetic untrimmed "videos": feature sequences with planted action
//! instances on a noisy background.
//!
//! Channels are split into three groups. Onset channels fire at the start of
//! every instance and offset channels at its end; body channels carry a
//! class signature over the whole instance. Optional holes weaken the body
//! signal inside an instance, and distractors are body-like bursts without
//! onset or offset cues.

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Video};
use crate::error::{MggError, Result};
use crate::segment::Segment;

/// Class signatures are shared by every split.
const SIGNATURE_SEED: u64 = 0x5167_0a7e;
/// Added to the training seed for the validation split.
const VAL_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationDistribution {
    Uniform,
    LogUniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalPattern {
    /// Flat blocks: onset/offset markers over the edge frames, constant body.
    Blocks,
    /// Markers decay away from the boundary and the body fades in and out.
    Ramps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub video_count: usize,
    pub l_s: usize,
    pub feature_dim: usize,
    pub min_instances: usize,
    pub max_instances: usize,
    /// Instance durations in frames, inclusive.
    pub min_duration: usize,
    pub max_duration: usize,
    pub durations: DurationDistribution,
    pub pattern: SignalPattern,
    pub classes: usize,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
    /// Minimum number of background frames between instances.
    pub min_gap: usize,
    /// Edge width as a fraction of the duration, at least one frame.
    pub edge_fraction: f64,
    /// Probability that an instance of 16+ frames gets a weakened stretch.
    pub hole_probability: f64,
    /// Hole length as a fraction of the duration.
    pub hole_fraction: f64,
    /// Body amplitude inside a hole.
    pub hole_strength: f64,
    /// Expected distractor bursts per video.
    pub distractors: f64,
    /// Distractor lengths in frames, inclusive.
    pub distractor_min_len: usize,
    pub distractor_max_len: usize,
    pub distractor_strength: f64,
    pub seed: u64,
    pub id_prefix: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            video_count: 200,
            l_s: 256,
            feature_dim: 16,
            min_instances: 1,
            max_instances: 4,
            min_duration: 8,
            max_duration: 64,
            durations: DurationDistribution::Uniform,
            pattern: SignalPattern::Ramps,
            classes: 4,
            noise: 0.7,
            min_gap: 2,
            edge_fraction: 0.25,
            hole_probability: 1.0,
            hole_fraction: 0.4,
            hole_strength: 0.3,
            distractors: 1.0,
            distractor_min_len: 4,
            distractor_max_len: 16,
            distractor_strength: 1.0,
            seed: 7,
            id_prefix: "train".into(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MggError::Config(format!("synth: {msg}")));
        if self.feature_dim < 3 {
            return bad(format!("feature_dim {} leaves no room for onset, offset and body channels", self.feature_dim));
        }
        if self.min_instances > self.max_instances || self.min_duration == 0 || self.min_duration > self.max_duration
        {
            return bad("instance count and duration ranges must be non-empty".into());
        }
        if self.distractor_min_len == 0 || self.distractor_min_len > self.distractor_max_len {
            return bad("distractor length range must be non-empty and positive".into());
        }
        if self.classes == 0 {
            return bad("need at least one class".into());
        }
        if !(self.noise >= 0.0) || !(self.distractors >= 0.0) || !(0.0..=1.0).contains(&self.hole_probability) {
            return bad("noise, distractors and hole_probability must be non-negative".into());
        }
        let needed = self.min_instances * self.min_duration + self.min_instances.saturating_sub(1) * self.min_gap;
        if needed > self.l_s {
            return bad(format!(
                "{} instances of {}+ frames with gaps of {} cannot be packed into {} frames",
                self.min_instances, self.min_duration, self.min_gap, self.l_s
            ));
        }
        Ok(())
    }

    /// Same generator, fresh seed and ids for a validation split.
    pub fn validation_split(&self, video_count: usize) -> SynthConfig {
        SynthConfig {
            video_count,
            seed: self.seed.wrapping_add(VAL_SEED_OFFSET),
            id_prefix: "val".into(),
            ..self.clone()
        }
    }

    fn channel_groups(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>, std::ops::Range<usize>) {
        let q = (self.feature_dim / 8).max(1);
        (0..q, q..2 * q, 2 * q..self.feature_dim)
    }

    fn edge_width(&self, duration: usize) -> usize {
        ((duration as f64 * self.edge_fraction).round() as usize).clamp(1, duration.div_ceil(2))
    }
}

/// One non-negative body pattern per class; every class lights up at least a
/// third of the body channels.
pub fn class_signatures(classes: usize, body_channels: usize) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SIGNATURE_SEED);
    let min_active = body_channels.div_ceil(3).max(1);
    (0..classes)
        .map(|_| loop {
            let sig: Vec<f32> = (0..body_channels).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
            if sig.iter().filter(|v| **v > 0.0).count() >= min_active {
                break sig;
            }
        })
        .collect()
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let (_, _, body) = cfg.channel_groups();
    let signatures = class_signatures(cfg.classes, body.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = if cfg.noise > 0.0 {
        Some(Normal::new(0.0, cfg.noise).map_err(|e| MggError::Config(e.to_string()))?)
    } else {
        None
    };
    let videos = (0..cfg.video_count)
        .map(|i| {
            let mut video = synth_video(cfg, &signatures, &mut rng, format!("{}-{i:04}", cfg.id_prefix));
            if let Some(dist) = &noise {
                video.features.mapv_inplace(|x| x + dist.sample(&mut rng) as f32);
            }
            video
        })
        .collect();
    Ok(Dataset { videos })
}

fn sample_duration(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> usize {
    let (lo, hi) = (cfg.min_duration, cfg.max_duration);
    match cfg.durations {
        DurationDistribution::Uniform => rng.random_range(lo..=hi),
        DurationDistribution::LogUniform => {
            let x = rng.random_range((lo as f64).ln()..=((hi as f64) + 0.999).ln());
            (x.exp().floor() as usize).clamp(lo, hi)
        }
    }
}

/// Sorted, non-overlapping `(start, duration)` pairs.
fn place_instances(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut count = rng.random_range(cfg.min_instances..=cfg.max_instances);
    let durations = 'outer: loop {
        for _ in 0..64 {
            let d: Vec<usize> = (0..count).map(|_| sample_duration(cfg, rng)).collect();
            if d.iter().sum::<usize>() + count.saturating_sub(1) * cfg.min_gap <= cfg.l_s {
                break 'outer d;
            }
        }
        if count > cfg.min_instances {
            count -= 1;
        } else {
            break vec![cfg.min_duration; count];
        }
    };
    let used = durations.iter().sum::<usize>() + count.saturating_sub(1) * cfg.min_gap;
    let free = cfg.l_s - used;
    let mut cuts: Vec<usize> = (0..count).map(|_| rng.random_range(0..=free)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(count);
    let mut cursor = 0;
    let mut prev_cut = 0;
    for (k, (d, cut)) in durations.iter().zip(cuts).enumerate() {
        cursor += cut - prev_cut + if k > 0 { cfg.min_gap } else { 0 };
        prev_cut = cut;
        out.push((cursor, *d));
        cursor += d;
    }
    out
}

fn synth_video(cfg: &SynthConfig, signatures: &[Vec<f32>], rng: &mut ChaCha8Rng, id: String) -> Video {
    let (onset, offset, body) = cfg.channel_groups();
    let mut x = Array2::<f32>::zeros((cfg.l_s, cfg.feature_dim));
    let instances = place_instances(cfg, rng);
    for &(start, d) in &instances {
        let sig = &signatures[rng.random_range(0..signatures.len())];
        let edge = cfg.edge_width(d);
        for t in 0..d {
            let (on, off, level) = match cfg.pattern {
                SignalPattern::Blocks => ((t < edge) as u8 as f32, (t >= d - edge) as u8 as f32, 1.0),
                SignalPattern::Ramps => {
                    let ramp = |k: usize| if k < edge { 1.0 - k as f32 / edge as f32 } else { 0.0 };
                    let fade = ((t.min(d - 1 - t) + 1) as f32 / edge as f32).min(1.0);
                    (ramp(t), ramp(d - 1 - t), fade)
                }
            };
            let mut row = x.row_mut(start + t);
            row.slice_mut(s![onset.clone()]).fill(on);
            row.slice_mut(s![offset.clone()]).fill(off);
            for (v, w) in row.slice_mut(s![body.clone()]).iter_mut().zip(sig) {
                *v = level * w;
            }
        }
        if d >= 16 && rng.random_bool(cfg.hole_probability) {
            let len = ((d as f64 * cfg.hole_fraction) as usize).max(1);
            let lo = start + edge + 1;
            let hi = (start + d).saturating_sub(edge + 1 + len);
            if lo <= hi {
                let at = rng.random_range(lo..=hi);
                x.slice_mut(s![at..at + len, body.clone()]).mapv_inplace(|v| v * cfg.hole_strength as f32);
            }
        }
    }
    add_distractors(cfg, signatures, rng, &instances, &mut x);
    Video {
        id,
        features: x,
        annotations: instances.iter().map(|&(s, d)| Segment::span(s as f64, (s + d) as f64)).collect(),
    }
}

/// Bursts placed in background stretches, one frame clear of any instance.
fn add_distractors(
    cfg: &SynthConfig,
    signatures: &[Vec<f32>],
    rng: &mut ChaCha8Rng,
    instances: &[(usize, usize)],
    x: &mut Array2<f32>,
) {
    let (_, _, body) = cfg.channel_groups();
    let whole = cfg.distractors.floor() as usize;
    let count = whole + rng.random_bool(cfg.distractors - whole as f64) as usize;
    let mut busy: Vec<(usize, usize)> = instances.iter().map(|&(s, d)| (s.saturating_sub(1), s + d + 1)).collect();
    for _ in 0..count {
        let len = rng.random_range(cfg.distractor_min_len..=cfg.distractor_max_len);
        let mut starts = Vec::new();
        for t in 0..=cfg.l_s.saturating_sub(len) {
            if busy.iter().all(|&(a, b)| t + len <= a || t >= b) {
                starts.push(t);
            }
        }
        if starts.is_empty() {
            continue;
        }
        let t0 = starts[rng.random_range(0..starts.len())];
        let sig = &signatures[rng.random_range(0..signatures.len())];
        for t in t0..t0 + len {
            for (v, w) in x.slice_mut(s![t, body.clone()]).iter_mut().zip(sig) {
                *v = cfg.distractor_strength as f32 * w;
            }
        }
        busy.push((t0.saturating_sub(1), t0 + len + 1));
    }
}

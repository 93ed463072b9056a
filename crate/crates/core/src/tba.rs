//! Temporal boundary adjustment: NMS over segment proposals, boundary
//! refinement from start/end actionness (stage I), and snapping to grouped
//! middle-actionness regions (stage II).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{MggError, Result};
pub use crate::segment::Segment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TbaConfig {
    pub nms_tiou: f64,
    /// Search spaces are `t +- duration / epsilon`.
    pub epsilon: f64,
    /// Minimum boundary probability that triggers an adjustment.
    pub sigma: f64,
    /// Weight of the actionness peak in the adjusted boundary.
    pub delta: f64,
    pub group_thresholds: Vec<f64>,
    /// Runs separated by at most this many frames are merged.
    pub gap_tolerance: usize,
    pub stage2_tiou: f64,
}

impl Default for TbaConfig {
    fn default() -> Self {
        TbaConfig {
            nms_tiou: 0.7,
            epsilon: 5.0,
            sigma: 0.5,
            delta: 0.5,
            group_thresholds: (3..=9).map(|k| k as f64 / 10.0).collect(),
            gap_tolerance: 1,
            stage2_tiou: 0.8,
        }
    }
}

impl TbaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(MggError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(MggError::Config(format!("delta must lie in [0, 1], got {}", self.delta)));
        }
        if self.sigma < 0.0 {
            return Err(MggError::Config(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Greedy NMS: keep the best remaining segment, drop everything whose tIoU
/// with it exceeds `threshold`. Ties rank earlier `t_s`, then input order.
pub fn nms(segments: &[Segment], threshold: f64) -> Vec<Segment> {
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&segments[a], &segments[b]);
        sb.score.total_cmp(&sa.score).then(sa.t_s.total_cmp(&sb.t_s)).then(a.cmp(&b))
    });
    let mut kept: Vec<Segment> = Vec::new();
    for i in order {
        let cand = segments[i];
        if kept.iter().all(|k| k.tiou(&cand) <= threshold) {
            kept.push(cand);
        }
    }
    kept
}

/// Start and end search spaces, clipped to `[0, l_s]`.
pub fn search_spaces(seg: &Segment, epsilon: f64, l_s: f64) -> ((f64, f64), (f64, f64)) {
    let r = seg.duration() / epsilon;
    let clip = |lo: f64, hi: f64| (lo.max(0.0), hi.min(l_s));
    (clip(seg.t_s - r, seg.t_s + r), clip(seg.t_e - r, seg.t_e + r))
}

/// Earliest frame with the highest probability among frames inside `[lo, hi]`.
fn peak(probs: &[f64], (lo, hi): (f64, f64)) -> Option<(usize, f64)> {
    if hi < lo || probs.is_empty() {
        return None;
    }
    let first = lo.ceil().max(0.0) as usize;
    let last = (hi.floor() as usize).min(probs.len() - 1);
    (first..=last).fold(None, |best, n| match best {
        Some((_, v)) if v >= probs[n] => best,
        _ => Some((n, probs[n])),
    })
}

/// Moves each boundary toward the strongest start (end) frame in its search
/// space when that probability exceeds `sigma`:
/// `t <- delta * t_max + (1 - delta) * t`. Scores are untouched.
pub fn stage1_adjust(segments: &[Segment], start: &[f64], end: &[f64], cfg: &TbaConfig) -> Vec<Segment> {
    let l_s = start.len().min(end.len()) as f64;
    segments
        .iter()
        .map(|seg| {
            let (ws, we) = search_spaces(seg, cfg.epsilon, l_s);
            let mut out = *seg;
            if let Some((n, c)) = peak(start, ws) {
                if c > cfg.sigma {
                    out.t_s = cfg.delta * n as f64 + (1.0 - cfg.delta) * seg.t_s;
                }
            }
            if let Some((n, c)) = peak(end, we) {
                if c > cfg.sigma {
                    out.t_e = cfg.delta * n as f64 + (1.0 - cfg.delta) * seg.t_e;
                }
            }
            out
        })
        .collect()
}

/// Runs of frames with `p >= threshold`, merging runs whose gap is at most
/// `gap_tolerance` frames, as half-open frame ranges.
pub fn threshold_runs(probs: &[f64], threshold: f64, gap_tolerance: usize) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut n = 0;
    while n < probs.len() {
        if probs[n] < threshold {
            n += 1;
            continue;
        }
        let start = n;
        while n < probs.len() && probs[n] >= threshold {
            n += 1;
        }
        match runs.last_mut() {
            Some(last) if start - last.1 <= gap_tolerance => last.1 = n,
            _ => runs.push((start, n)),
        }
    }
    runs
}

/// Candidate segments from thresholding the middle probabilities at every
/// threshold; scored by mean probability over the span, deduplicated by span.
pub fn tag_group(middle: &[f64], thresholds: &[f64], gap_tolerance: usize) -> Vec<Segment> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &tau in thresholds {
        for (s, e) in threshold_runs(middle, tau, gap_tolerance) {
            if seen.insert((s, e)) {
                let mean = middle[s..e].iter().sum::<f64>() / (e - s) as f64;
                out.push(Segment::new(s as f64, e as f64, mean));
            }
        }
    }
    out
}

/// Replaces a segment's boundaries with those of its best-overlapping group
/// when that tIoU exceeds `threshold`; the segment keeps its own score.
pub fn stage2_fuse(segments: &[Segment], groups: &[Segment], threshold: f64) -> Vec<Segment> {
    segments
        .iter()
        .map(|seg| {
            let best = groups
                .iter()
                .map(|g| (g, seg.tiou(g)))
                .fold(None::<(&Segment, f64)>, |acc, (g, o)| match acc {
                    Some((_, bo)) if bo >= o => acc,
                    _ => Some((g, o)),
                });
            match best {
                Some((g, o)) if o > threshold => Segment::new(g.t_s, g.t_e, seg.score),
                _ => *seg,
            }
        })
        .collect()
}

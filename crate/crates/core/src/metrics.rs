//! Proposal evaluation: tIoU, recall with one-to-one greedy matching,
//! AR@AN, the area under the AR-AN curve, recall-vs-tIoU curves and recall
//! split by ground-truth duration.
//!
//! Recall is pooled over the corpus: matched ground truths over all ground
//! truths, so videos without annotations contribute nothing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use crate::segment::Segment;

pub fn tiou(a: &Segment, b: &Segment) -> f64 {
    a.tiou(b)
}

/// Standard tIoU threshold sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TiouGrid {
    /// 0.5 to 1.0 in steps of 0.05.
    Thumos,
    /// 0.5 to 0.95 in steps of 0.05.
    ActivityNet,
}

impl TiouGrid {
    pub fn thresholds(self) -> Vec<f64> {
        let last = match self {
            TiouGrid::Thumos => 10,
            TiouGrid::ActivityNet => 9,
        };
        (0..=last).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
    }
}

/// Ranked proposals and ground truth of one video.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoEval {
    /// Best first.
    pub proposals: Vec<Segment>,
    pub gt: Vec<Segment>,
}

/// For each ground truth, the 0-based rank of the proposal that claims it,
/// if any. Proposals are visited best first; each takes the unclaimed ground
/// truth with the highest tIoU `>= theta` (earliest on ties). Recall with the
/// top `k` proposals is the number of ranks `< k`.
pub fn match_ranks(proposals: &[Segment], gt: &[Segment], theta: f64) -> Vec<Option<usize>> {
    let mut ranks = vec![None; gt.len()];
    let mut open = gt.len();
    for (r, p) in proposals.iter().enumerate() {
        if open == 0 {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gt.iter().enumerate() {
            if ranks[j].is_some() {
                continue;
            }
            let o = p.tiou(g);
            if o >= theta && best.is_none_or(|(_, bo)| o > bo) {
                best = Some((j, o));
            }
        }
        if let Some((j, _)) = best {
            ranks[j] = Some(r);
            open -= 1;
        }
    }
    ranks
}

fn total_gt(videos: &[VideoEval]) -> usize {
    videos.iter().map(|v| v.gt.len()).sum()
}

/// Pooled recall at every `an` for one threshold.
fn recall_curve(videos: &[VideoEval], ans: &[usize], theta: f64) -> Vec<f64> {
    let total = total_gt(videos);
    if total == 0 {
        return vec![0.0; ans.len()];
    }
    let ranks: Vec<usize> = videos
        .iter()
        .flat_map(|v| match_ranks(&v.proposals, &v.gt, theta))
        .flatten()
        .collect();
    ans.iter().map(|&an| ranks.iter().filter(|&&r| r < an).count() as f64 / total as f64).collect()
}

pub fn recall(videos: &[VideoEval], an: usize, theta: f64) -> f64 {
    recall_curve(videos, &[an], theta)[0]
}

/// Recall averaged over `thresholds`, using the top `an` proposals per video.
pub fn average_recall(videos: &[VideoEval], an: usize, thresholds: &[f64]) -> f64 {
    ar_an_curve(videos, &[an], thresholds)[0]
}

pub fn ar_an_curve(videos: &[VideoEval], ans: &[usize], thresholds: &[f64]) -> Vec<f64> {
    let mut sum = vec![0.0; ans.len()];
    for &theta in thresholds {
        for (s, r) in sum.iter_mut().zip(recall_curve(videos, ans, theta)) {
            *s += r;
        }
    }
    sum.into_iter().map(|s| s / thresholds.len() as f64).collect()
}

/// AN grid used for the AUC.
pub const AUC_MAX_AN: usize = 100;

pub fn auc_grid() -> Vec<usize> {
    (1..=AUC_MAX_AN).collect()
}

/// Trapezoidal area under AR(AN) over the integer grid `1..=100`, as a
/// percentage of the `[1, 100] x [0, 1]` box.
pub fn auc_ar_an(videos: &[VideoEval], thresholds: &[f64]) -> f64 {
    let grid = auc_grid();
    auc_from_curve(&grid, &ar_an_curve(videos, &grid, thresholds))
}

pub fn auc_from_curve(ans: &[usize], ar: &[f64]) -> f64 {
    let width = (ans[ans.len() - 1] - ans[0]) as f64;
    let area: f64 = ans
        .windows(2)
        .zip(ar.windows(2))
        .map(|(x, y)| (x[1] - x[0]) as f64 * 0.5 * (y[0] + y[1]))
        .sum();
    100.0 * area / width
}

/// Half-open duration range `[min, max)` in frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationBucket {
    pub label: String,
    pub min: f64,
    pub max: f64,
}

impl DurationBucket {
    pub fn new(label: &str, min: f64, max: f64) -> Self {
        DurationBucket { label: label.to_string(), min, max }
    }

    pub fn contains(&self, duration: f64) -> bool {
        self.min <= duration && duration < self.max
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketRecall {
    pub label: String,
    pub min: f64,
    pub max: f64,
    pub gt_count: usize,
    pub matched: usize,
    pub recall: f64,
}

/// Matching runs over all ground truth; the matched ones are then counted per
/// bucket. Buckets holding no ground truth are omitted.
pub fn recall_by_duration(
    videos: &[VideoEval],
    an: usize,
    theta: f64,
    buckets: &[DurationBucket],
) -> Vec<BucketRecall> {
    let mut counts = vec![(0usize, 0usize); buckets.len()];
    for v in videos {
        let ranks = match_ranks(&v.proposals, &v.gt, theta);
        for (g, rank) in v.gt.iter().zip(ranks) {
            if let Some(b) = buckets.iter().position(|b| b.contains(g.duration())) {
                counts[b].0 += 1;
                counts[b].1 += rank.is_some_and(|r| r < an) as usize;
            }
        }
    }
    buckets
        .iter()
        .zip(counts)
        .filter(|(_, (n, _))| *n > 0)
        .map(|(b, (n, m))| BucketRecall {
            label: b.label.clone(),
            min: b.min,
            max: b.max,
            gt_count: n,
            matched: m,
            recall: m as f64 / n as f64,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub grid: TiouGrid,
    /// ANs reported as AR@AN.
    pub report_ans: Vec<usize>,
    /// ANs for which recall-vs-tIoU curves are emitted.
    pub curve_ans: Vec<usize>,
    pub curve_thresholds: Vec<f64>,
    pub duration_an: usize,
    pub duration_tiou: f64,
    pub duration_buckets: Vec<DurationBucket>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            grid: TiouGrid::ActivityNet,
            report_ans: vec![1, 5, 10, 20, 50, 100, 200, 500, 1000],
            curve_ans: vec![10, 100],
            curve_thresholds: (0..=20).map(|k| k as f64 / 20.0).collect(),
            duration_an: 100,
            duration_tiou: 0.75,
            duration_buckets: vec![
                DurationBucket::new("short", 0.0, 24.0),
                DurationBucket::new("medium", 24.0, 48.0),
                DurationBucket::new("long", 48.0, f64::INFINITY),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallPoint {
    pub an: usize,
    pub tiou: f64,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub videos: usize,
    pub gt_instances: usize,
    pub tiou_thresholds: Vec<f64>,
    pub ar_at_an: BTreeMap<usize, f64>,
    pub auc: f64,
    /// AR on the AUC grid `1..=100`.
    pub ar_an_curve: Vec<f64>,
    pub recall_curves: Vec<RecallPoint>,
    pub duration_recall: Vec<BucketRecall>,
}

impl EvalReport {
    pub fn compute(videos: &[VideoEval], cfg: &EvalConfig) -> Self {
        let thresholds = cfg.grid.thresholds();
        let grid = auc_grid();
        let curve = ar_an_curve(videos, &grid, &thresholds);
        let ar_at_an = cfg
            .report_ans
            .iter()
            .zip(ar_an_curve(videos, &cfg.report_ans, &thresholds))
            .map(|(an, ar)| (*an, ar))
            .collect();
        let recall_curves = cfg
            .curve_thresholds
            .iter()
            .flat_map(|&theta| {
                cfg.curve_ans
                    .iter()
                    .zip(recall_curve(videos, &cfg.curve_ans, theta))
                    .map(move |(an, recall)| RecallPoint { an: *an, tiou: theta, recall })
            })
            .collect();
        EvalReport {
            videos: videos.len(),
            gt_instances: total_gt(videos),
            tiou_thresholds: thresholds,
            ar_at_an,
            auc: auc_from_curve(&grid, &curve),
            ar_an_curve: curve,
            recall_curves,
            duration_recall: recall_by_duration(videos, cfg.duration_an, cfg.duration_tiou, &cfg.duration_buckets),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(a: f64, b: f64) -> Segment {
        Segment::span(a, b)
    }

    #[test]
    fn tiou_cases() {
        assert_eq!(tiou(&s(0.0, 10.0), &s(0.0, 10.0)), 1.0);
        assert!((tiou(&s(0.0, 10.0), &s(5.0, 15.0)) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(tiou(&s(0.0, 5.0), &s(5.0, 10.0)), 0.0);
    }

    #[test]
    fn grids() {
        assert_eq!(TiouGrid::Thumos.thresholds().len(), 11);
        assert_eq!(TiouGrid::Thumos.thresholds()[10], 1.0);
        assert_eq!(TiouGrid::ActivityNet.thresholds().last(), Some(&0.95));
    }

    #[test]
    fn perfect_and_empty() {
        let gt = vec![s(0.0, 10.0), s(20.0, 40.0)];
        let perfect = vec![VideoEval { proposals: gt.clone(), gt: gt.clone() }];
        let th = TiouGrid::Thumos.thresholds();
        assert_eq!(average_recall(&perfect, 2, &th), 1.0);
        assert_eq!(average_recall(&perfect, 1, &th), 0.5);
        let none = vec![VideoEval { proposals: vec![], gt }];
        assert_eq!(average_recall(&none, 100, &th), 0.0);
    }

    #[test]
    fn one_proposal_claims_one_gt() {
        let gt = vec![s(0.0, 10.0), s(0.0, 10.0)];
        let v = vec![VideoEval { proposals: vec![s(0.0, 10.0)], gt }];
        assert_eq!(recall(&v, 10, 0.5), 0.5);
    }

    #[test]
    fn constant_curves() {
        let grid = auc_grid();
        assert!((auc_from_curve(&grid, &vec![1.0; grid.len()]) - 100.0).abs() < 1e-12);
        assert_eq!(auc_from_curve(&grid, &vec![0.0; grid.len()]), 0.0);
    }

    #[test]
    fn empty_gt_videos_do_not_count() {
        let a = VideoEval { proposals: vec![s(0.0, 10.0)], gt: vec![s(0.0, 10.0)] };
        let b = VideoEval { proposals: vec![s(0.0, 10.0)], gt: vec![] };
        assert_eq!(recall(&[a.clone(), b], 1, 0.5), recall(&[a], 1, 0.5));
    }

    #[test]
    fn singleton_bucket() {
        let v = vec![VideoEval { proposals: vec![s(0.0, 10.0)], gt: vec![s(0.0, 10.0)] }];
        let r = recall_by_duration(&v, 100, 0.75, &EvalConfig::default().duration_buckets);
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].label.as_str(), r[0].recall), ("short", 1.0));
    }
}

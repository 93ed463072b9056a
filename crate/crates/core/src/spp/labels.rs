use super::AnchorGrid;
use crate::segment::Segment;

/// Anchors with max tIoU at or above this are positive.
pub const POSITIVE_AT: f64 = 0.7;
/// Anchors with max tIoU below this (and not positive) are negative.
pub const NEGATIVE_BELOW: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnchorClass {
    Positive,
    Negative,
    Ignored,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnchorLabel {
    pub class: AnchorClass,
    /// Ground truth the anchor regresses toward; set for positives only.
    pub matched_gt: Option<Segment>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelAssignment {
    pub labels: Vec<AnchorLabel>,
    /// No ground truth was given; every anchor is negative.
    pub empty_gt: bool,
}

impl LabelAssignment {
    pub fn count(&self, class: AnchorClass) -> usize {
        self.labels.iter().filter(|l| l.class == class).count()
    }
}

/// Positive if the anchor's best tIoU reaches [`POSITIVE_AT`] or it attains
/// the highest tIoU of some ground truth (all tied anchors count); negative
/// if its best tIoU is below [`NEGATIVE_BELOW`]; ignored otherwise.
pub fn assign_labels(grid: &AnchorGrid, gt: &[Segment]) -> LabelAssignment {
    let negative = AnchorLabel { class: AnchorClass::Negative, matched_gt: None };
    if gt.is_empty() {
        log::warn!("label assignment without ground truth: all {} anchors negative", grid.len());
        return LabelAssignment { labels: vec![negative; grid.len()], empty_gt: true };
    }

    let segments = grid.segments();
    let overlaps: Vec<Vec<f64>> = segments.iter().map(|a| gt.iter().map(|g| a.tiou(g)).collect()).collect();

    let mut best_for_gt = vec![0.0f64; gt.len()];
    for row in &overlaps {
        for (j, &o) in row.iter().enumerate() {
            best_for_gt[j] = best_for_gt[j].max(o);
        }
    }

    let labels = overlaps
        .iter()
        .map(|row| {
            let (best_j, best) = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (j, &o)| if o > acc.1 { (j, o) } else { acc });
            let is_argmax = row.iter().zip(&best_for_gt).any(|(&o, &m)| m > 0.0 && o == m);
            if best >= POSITIVE_AT || is_argmax {
                AnchorLabel { class: AnchorClass::Positive, matched_gt: Some(gt[best_j]) }
            } else if best < NEGATIVE_BELOW {
                negative
            } else {
                AnchorLabel { class: AnchorClass::Ignored, matched_gt: None }
            }
        })
        .collect();
    LabelAssignment { labels, empty_gt: false }
}

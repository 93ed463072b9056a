use rand::seq::index;
use rand::Rng;

use super::{AnchorClass, LabelAssignment};

/// Anchor indices contributing to one SPP loss evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Minibatch {
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
    /// Set when there were no positives to balance against.
    pub no_positives: bool,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All positives plus an equal number of negatives drawn uniformly without
/// replacement. If negatives run short all of them are used; with no
/// positives every negative is used.
pub fn sample_minibatch<R: Rng + ?Sized>(labels: &LabelAssignment, rng: &mut R) -> Minibatch {
    let of = |class| -> Vec<usize> {
        labels.labels.iter().enumerate().filter(|(_, l)| l.class == class).map(|(i, _)| i).collect()
    };
    let positives = of(AnchorClass::Positive);
    let all_negatives = of(AnchorClass::Negative);
    if positives.is_empty() {
        log::warn!("no positive anchors; minibatch falls back to {} negatives", all_negatives.len());
        return Minibatch { positives, negatives: all_negatives, no_positives: true };
    }
    let negatives = if all_negatives.len() <= positives.len() {
        all_negatives
    } else {
        let mut picked: Vec<usize> =
            index::sample(rng, all_negatives.len(), positives.len()).into_iter().map(|i| all_negatives[i]).collect();
        picked.sort_unstable();
        picked
    };
    Minibatch { positives, negatives, no_positives: false }
}

use serde::{Deserialize, Serialize};

/// Half-open temporal interval `[t_s, t_e)` in frame units with a confidence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_s: f64,
    pub t_e: f64,
    pub score: f64,
}

impl Segment {
    pub fn new(t_s: f64, t_e: f64, score: f64) -> Self {
        Segment { t_s, t_e, score }
    }

    /// Ground-truth style segment with unit score.
    pub fn span(t_s: f64, t_e: f64) -> Self {
        Segment { t_s, t_e, score: 1.0 }
    }

    pub fn duration(&self) -> f64 {
        self.t_e - self.t_s
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.t_s + self.t_e)
    }

    pub fn is_valid_within(&self, l_s: f64) -> bool {
        0.0 <= self.t_s && self.t_s < self.t_e && self.t_e <= l_s
    }

    /// Temporal intersection over union; 0 for disjoint or touching spans.
    pub fn tiou(&self, other: &Segment) -> f64 {
        let inter = (self.t_e.min(other.t_e) - self.t_s.max(other.t_s)).max(0.0);
        if inter <= 0.0 {
            return 0.0;
        }
        let union = self.duration() + other.duration() - inter;
        inter / union
    }
}

/// Stable sort by descending score.
pub fn sort_by_score_desc(segments: &mut [Segment]) {
    segments.sort_by(|a, b| b.score.total_cmp(&a.score));
}

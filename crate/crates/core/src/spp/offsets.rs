use super::Anchor;
use crate::error::{MggError, Result};
use crate::segment::Segment;

/// Regression target relative to an anchor: centre shift in anchor lengths
/// and log length ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OffsetPair {
    pub t_c: f64,
    pub t_l: f64,
}

pub fn encode_offsets(anchor: &Anchor, gt: &Segment) -> Result<OffsetPair> {
    if !(anchor.length > 0.0) || !(gt.duration() > 0.0) {
        return Err(MggError::Invalid(format!(
            "offset encoding needs positive lengths, got anchor {} and target {}",
            anchor.length,
            gt.duration()
        )));
    }
    Ok(OffsetPair { t_c: (gt.center() - anchor.center) / anchor.length, t_l: (gt.duration() / anchor.length).ln() })
}

/// Inverse of [`encode_offsets`], clamped to `[0, l_s]`. Carries `score`.
pub fn decode_offsets(anchor: &Anchor, offsets: OffsetPair, l_s: f64, score: f64) -> Segment {
    let center = anchor.center + offsets.t_c * anchor.length;
    let half = 0.5 * anchor.length * offsets.t_l.exp();
    Segment::new((center - half).clamp(0.0, l_s), (center + half).clamp(0.0, l_s), score)
}

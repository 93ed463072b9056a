//! Brute-force references over integer-endpoint segments.

use mgg::Segment;

/// tIoU by counting covered unit cells.
pub fn cell_tiou(a: (i64, i64), b: (i64, i64)) -> f64 {
    let lo = a.0.min(b.0);
    let hi = a.1.max(b.1);
    let (mut inter, mut union) = (0, 0);
    for c in lo..hi {
        let (ia, ib) = (a.0 <= c && c < a.1, b.0 <= c && c < b.1);
        inter += (ia && ib) as i32;
        union += (ia || ib) as i32;
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn key(s: &Segment) -> (i64, i64) {
    (s.t_s as i64, s.t_e as i64)
}

pub fn to_segments(v: &[(i64, i64)]) -> Vec<Segment> {
    v.iter().map(|&(s, e)| Segment::span(s as f64, e as f64)).collect()
}

/// Take the best, discard its heavy overlaps, repeat.
pub fn nms(segments: &[Segment], threshold: f64) -> Vec<Segment> {
    fn go(mut pool: Vec<(usize, Segment)>, threshold: f64) -> Vec<Segment> {
        if pool.is_empty() {
            return Vec::new();
        }
        let mut best = 0;
        for i in 1..pool.len() {
            let (bi, b) = pool[best];
            let (ci, c) = pool[i];
            if c.score > b.score || (c.score == b.score && (c.t_s < b.t_s || (c.t_s == b.t_s && ci < bi))) {
                best = i;
            }
        }
        let (_, top) = pool.remove(best);
        let rest = pool.into_iter().filter(|(_, s)| cell_tiou(key(s), key(&top)) <= threshold).collect();
        let mut out = vec![top];
        out.extend(go(rest, threshold));
        out
    }
    go(segments.iter().copied().enumerate().collect(), threshold)
}

/// Frames with `p >= tau`, false gaps of at most `tol` frames between true
/// frames filled, as maximal runs.
pub fn runs(p: &[f64], tau: f64, tol: usize) -> Vec<(usize, usize)> {
    let mut mask: Vec<bool> = p.iter().map(|v| *v >= tau).collect();
    let on: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    for w in on.windows(2) {
        if w[1] - w[0] - 1 <= tol {
            for m in &mut mask[w[0]..w[1]] {
                *m = true;
            }
        }
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if mask[i] {
            let s = i;
            while i < mask.len() && mask[i] {
                i += 1;
            }
            out.push((s, i));
        } else {
            i += 1;
        }
    }
    out
}

/// Distinct runs over all thresholds in first-seen order, scored by the mean.
pub fn tag_group(p: &[f64], thresholds: &[f64], tol: usize) -> Vec<Segment> {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for &tau in thresholds {
        for r in runs(p, tau, tol) {
            if !spans.contains(&r) {
                spans.push(r);
            }
        }
    }
    spans
        .into_iter()
        .map(|(a, b)| Segment::new(a as f64, b as f64, p[a..b].iter().sum::<f64>() / (b - a) as f64))
        .collect()
}

pub fn stage2(segments: &[Segment], groups: &[Segment], threshold: f64) -> Vec<Segment> {
    segments
        .iter()
        .map(|s| {
            let best = groups.iter().map(|g| cell_tiou(key(s), key(g))).fold(0.0, f64::max);
            if best > threshold {
                let g = groups.iter().find(|g| cell_tiou(key(s), key(g)) == best).unwrap();
                Segment::new(g.t_s, g.t_e, s.score)
            } else {
                *s
            }
        })
        .collect()
}

/// Pooled recall with the top `an` proposals, matching on the truncated list.
pub fn recall(videos: &[(Vec<(i64, i64)>, Vec<(i64, i64)>)], an: usize, theta: f64) -> f64 {
    let mut hit = 0;
    let mut total = 0;
    for (props, gt) in videos {
        total += gt.len();
        let mut taken = vec![false; gt.len()];
        for p in props.iter().take(an) {
            let mut best: Option<(usize, f64)> = None;
            for (j, g) in gt.iter().enumerate() {
                let o = cell_tiou(*p, *g);
                if !taken[j] && o >= theta && best.is_none_or(|(_, b)| o > b) {
                    best = Some((j, o));
                }
            }
            if let Some((j, _)) = best {
                taken[j] = true;
                hit += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

pub fn average_recall(videos: &[(Vec<(i64, i64)>, Vec<(i64, i64)>)], an: usize, thresholds: &[f64]) -> f64 {
    thresholds.iter().map(|t| recall(videos, an, *t)).sum::<f64>() / thresholds.len() as f64
}

/// Explicit trapezoid sum over `an = 1..=100`, as a percentage.
pub fn auc(ar: &[f64]) -> f64 {
    let mut area = 0.0;
    for i in 0..ar.len() - 1 {
        area += 0.5 * (ar[i] + ar[i + 1]);
    }
    100.0 * area / (ar.len() - 1) as f64
}

/// Anchor class by definition: 0 positive, 1 negative, 2 ignored.
pub fn anchor_class(anchors: &[Segment], gt: &[Segment]) -> Vec<u8> {
    let iou = |a: &Segment, g: &Segment| {
        let inter = (a.t_e.min(g.t_e) - a.t_s.max(g.t_s)).max(0.0);
        inter / (a.duration() + g.duration() - inter)
    };
    let best_for_gt: Vec<f64> =
        gt.iter().map(|g| anchors.iter().map(|a| iou(a, g)).fold(0.0, f64::max)).collect();
    anchors
        .iter()
        .map(|a| {
            let overlaps: Vec<f64> = gt.iter().map(|g| iou(a, g)).collect();
            let best = overlaps.iter().cloned().fold(0.0, f64::max);
            let argmax = overlaps.iter().zip(&best_for_gt).any(|(o, b)| *b > 0.0 && (o - b).abs() < 1e-12);
            if best >= 0.7 - 1e-12 || argmax {
                0
            } else if best < 0.3 {
                1
            } else {
                2
            }
        })
        .collect()
}

/// `(start, end, middle)` flags of frame `n` by definition.
pub fn frame_flags(gt: &[Segment], n: usize, eta: f64) -> (bool, bool, bool) {
    let t = n as f64;
    let near = |b: f64, d: f64| (t - b).abs() <= d / eta;
    (
        gt.iter().any(|g| near(g.t_s, g.duration())),
        gt.iter().any(|g| near(g.t_e, g.duration())),
        gt.iter().any(|g| g.t_s <= t && t < g.t_e),
    )
}

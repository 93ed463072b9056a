//! Post-processing on hand-made inputs: NMS over segment candidates, boundary
//! refinement from start/end peaks, grouping of middle probabilities, and
//! snapping to the groups.

use mgg::tba::{nms, stage1_adjust, stage2_fuse, tag_group, TbaConfig};
use mgg::Segment;

fn bump(len: usize, at: usize, width: f64, height: f64) -> Vec<f64> {
    (0..len).map(|n| 0.05 + height * (-((n as f64 - at as f64) / width).powi(2)).exp()).collect()
}

fn main() {
    let cfg = TbaConfig::default();
    let candidates = vec![
        Segment::new(18.0, 43.0, 0.9),
        Segment::new(19.0, 44.0, 0.8),
        Segment::new(60.0, 70.0, 0.6),
    ];
    let kept = nms(&candidates, cfg.nms_tiou);
    println!("nms: {} -> {}", candidates.len(), kept.len());

    let start = bump(100, 20, 1.5, 0.9);
    let end = bump(100, 40, 1.5, 0.9);
    let refined = stage1_adjust(&kept, &start, &end, &cfg);
    let middle: Vec<f64> = (0..100).map(|n| if (20..40).contains(&n) { 0.85 } else { 0.1 }).collect();
    let groups = tag_group(&middle, &cfg.group_thresholds, cfg.gap_tolerance);
    let snapped = stage2_fuse(&refined, &groups, cfg.stage2_tiou);
    for ((a, b), c) in kept.iter().zip(&refined).zip(&snapped) {
        println!(
            "[{:>4.1}, {:>4.1}) -> stage I [{:>4.1}, {:>4.1}) -> stage II [{:>4.1}, {:>4.1})  score {:.2}",
            a.t_s, a.t_e, b.t_s, b.t_e, c.t_s, c.t_e, c.score
        );
    }
    println!("groups: {:?}", groups.iter().map(|g| (g.t_s, g.t_e)).collect::<Vec<_>>());
}

//! Anchor grid for a 64-frame sequence, label assignment against two ground
//! truth segments, and offset encoding of the positives.

use mgg::spp::{assign_labels, encode_offsets, generate_anchors, AnchorClass, PyramidConfig};
use mgg::Segment;

fn main() -> mgg::Result<()> {
    let cfg = PyramidConfig::default();
    let grid = generate_anchors(&cfg, 64)?;
    println!("level lengths {:?}, {} anchors", grid.level_lengths, grid.len());

    let gt = [Segment::span(6.0, 18.0), Segment::span(30.0, 62.0)];
    let labels = assign_labels(&grid, &gt);
    println!(
        "positive {}, negative {}, ignored {}",
        labels.count(AnchorClass::Positive),
        labels.count(AnchorClass::Negative),
        labels.count(AnchorClass::Ignored)
    );
    for (anchor, label) in grid.anchors.iter().zip(&labels.labels) {
        if let Some(g) = label.matched_gt {
            let o = encode_offsets(anchor, &g)?;
            let s = anchor.segment();
            println!(
                "  level {} [{:>5.1}, {:>5.1}) -> [{:>4.1}, {:>4.1})  t_c {:+.3}  t_l {:+.3}",
                anchor.level, s.t_s, s.t_e, g.t_s, g.t_e, o.t_c, o.t_l
            );
        }
    }
    Ok(())
}

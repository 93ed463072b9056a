//! Recall, AR@AN, AUC and duration-bucket recall on a toy two-video set.

use mgg::metrics::{EvalConfig, EvalReport, VideoEval};
use mgg::Segment;

fn main() {
    let videos = vec![
        VideoEval {
            proposals: vec![Segment::new(10.0, 30.0, 0.9), Segment::new(48.0, 101.0, 0.7), Segment::new(0.0, 5.0, 0.2)],
            gt: vec![Segment::span(11.0, 30.0), Segment::span(50.0, 100.0)],
        },
        VideoEval {
            proposals: vec![Segment::new(40.0, 60.0, 0.8), Segment::new(4.0, 14.0, 0.5)],
            gt: vec![Segment::span(5.0, 15.0)],
        },
    ];
    let report = EvalReport::compute(&videos, &EvalConfig::default());
    println!("{} ground truth instances over {} videos", report.gt_instances, report.videos);
    for (an, ar) in &report.ar_at_an {
        if *an <= 10 {
            println!("AR@{an:<3} {ar:.3}");
        }
    }
    println!("AUC {:.2}", report.auc);
    for b in &report.duration_recall {
        println!("{:<6} {}/{} recall {:.2}", b.label, b.matched, b.gt_count, b.recall);
    }
}

//! Scores ground-truth-jittered proposals and writes the report files
//! (JSON, CSV curves, SVG plots).
//!
//! Usage: `eval_report [out_dir]`.

use mgg::harness::{evaluate, format_duration_table, synth_generate, write_report, SynthConfig, VideoProposals};
use mgg::Segment;

fn main() -> mgg::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "report_out".into());
    let data = synth_generate(&SynthConfig { video_count: 20, ..SynthConfig::default() })?;
    let proposals: Vec<VideoProposals> = data
        .videos
        .iter()
        .map(|v| {
            let mut p = Vec::new();
            for (k, g) in v.annotations.iter().enumerate() {
                let shift = 0.15 * g.duration() * if k % 2 == 0 { 1.0 } else { -1.0 };
                p.push(Segment::new((g.t_s + shift).max(0.0), g.t_e + shift, 0.9 - 0.1 * k as f64));
                p.push(Segment::new(g.t_s, g.t_e, 0.3));
            }
            p.sort_by(|a, b| b.score.total_cmp(&a.score));
            VideoProposals { video_id: v.id.clone(), proposals: p }
        })
        .collect();
    let report = evaluate(&proposals, &data, &Default::default())?;
    let files = write_report(&report, out.as_ref())?;
    println!("AUC {:.2}", report.auc);
    print!("{}", format_duration_table(&report));
    println!("wrote {}", files.report.display());
    Ok(())
}

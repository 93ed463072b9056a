//! Generates a small synthetic corpus, writes it as a JSONL manifest with raw
//! f32 features, and reads it back.
//!
//! Usage: `synth_corpus [out_dir]`.

use mgg::harness::{synth_generate, Dataset, SynthConfig};

fn main() -> mgg::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synth_out".into());
    let cfg = SynthConfig { video_count: 8, ..SynthConfig::default() };
    let data = synth_generate(&cfg)?;
    let manifest = std::path::Path::new(&out).join("train.jsonl");
    data.save(&manifest)?;
    let back = Dataset::load(&manifest)?;
    assert_eq!(back, data);

    println!("{} videos, {} instances -> {}", data.len(), data.gt_count(), manifest.display());
    let v = &data.videos[0];
    println!("{}: {} frames x {} channels", v.id, v.len(), v.feature_dim());
    for seg in &v.annotations {
        println!("  [{:>5.1}, {:>5.1})", seg.t_s, seg.t_e);
    }
    // channel-mean energy, one character per 4 frames
    let energy: String = (0..v.len())
        .step_by(4)
        .map(|t| {
            let m = v.features.row(t).iter().map(|x| x.max(0.0)).sum::<f32>() / v.feature_dim() as f32;
            [' ', '.', ':', '*', '#'][((m * 6.0) as usize).min(4)]
        })
        .collect();
    println!("  |{energy}|");
    Ok(())
}

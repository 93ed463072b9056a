//! Component and boundary-adjustment ablations on a reduced corpus.
//!
//! Usage: `ablation_sweep [epochs]`.

use mgg::harness::{run_ablation, synth_generate, MggConfig};

fn main() -> mgg::Result<()> {
    let mut cfg = MggConfig::default();
    cfg.synth.video_count = 40;
    cfg.train.epochs = std::env::args().nth(1).map_or(5, |e| e.parse().expect("epochs must be an integer"));
    let train = synth_generate(&cfg.synth)?;
    let val = synth_generate(&cfg.synth.validation_split(20))?;
    let report = run_ablation(&train, &val, &cfg, false, |line| eprintln!("{line}"))?;
    print!("{}", report.to_markdown());
    Ok(())
}

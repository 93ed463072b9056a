//! Trains a small model for a few epochs, saves and reloads the checkpoint,
//! and runs inference along each proposal path.

use mgg::basenet::BaseNetConfig;
use mgg::fap::FapConfig;
use mgg::harness::{
    evaluate, infer, synth_generate, train, Checkpoint, Fingerprint, InferOptions, MggConfig, ModelConfig, Objective,
    ProposalPath,
};
use mgg::spp::SppConfig;

fn main() -> mgg::Result<()> {
    let mut cfg = MggConfig::default();
    cfg.synth.video_count = 16;
    cfg.synth.l_s = 128;
    cfg.model = ModelConfig {
        feature_dim: cfg.synth.feature_dim,
        position_dim: 16,
        basenet: BaseNetConfig { hidden: 32, kernel: 3, rank: 8 },
        spp: SppConfig { channels: 32, ..SppConfig::default() },
        fap: FapConfig { hidden: 32, kernel: 3 },
    };
    cfg.train.epochs = 5;
    let data = synth_generate(&cfg.synth)?;
    let val = synth_generate(&cfg.synth.validation_split(8))?;
    let outcome = train(&data, &cfg.model, &cfg.ablation, &cfg.train)?;
    println!("loss {:.4} -> {:.4}", outcome.report.initial.total, outcome.report.final_loss().unwrap_or(f64::NAN));

    let path = std::env::temp_dir().join("mgg_example.ckpt");
    outcome.checkpoint.save(&path)?;
    let expected = Fingerprint::new(&cfg.model, cfg.ablation.arch(), Objective::Joint, cfg.train.seed);
    let checkpoint = Checkpoint::load_expecting(&path, &expected)?;
    println!("{} parameters in {}", checkpoint.params.scalar_count(), path.display());

    for p in [ProposalPath::Full, ProposalPath::SppOnly, ProposalPath::FapOnly] {
        let props = infer(&checkpoint, &val, &cfg.tba, &InferOptions::new(p))?;
        let report = evaluate(&props, &val, &cfg.eval)?;
        println!("{p:?}: AUC {:.2}, AR@10 {:.3}", report.auc, report.ar_at_an[&10]);
    }
    Ok(())
}

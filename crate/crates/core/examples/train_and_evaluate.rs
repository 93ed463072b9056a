//! Generates the default corpus, trains the full model, and reports
//! validation metrics along the three proposal paths.
//!
//! Usage: `train_and_evaluate [epochs] [config.toml]`.

use std::time::Instant;

use mgg::harness::{
    assemble_all, evaluate, predict_dataset, synth_generate, train_with_progress, Branches, InferOptions, MggConfig,
    Predictor, ProposalPath,
};

fn main() -> mgg::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = match args.get(2) {
        Some(path) => MggConfig::load(path.as_ref())?,
        None => MggConfig::default(),
    };
    if let Some(epochs) = args.get(1) {
        cfg.train.epochs = epochs.parse().expect("epochs must be an integer");
    }
    let train = synth_generate(&cfg.synth)?;
    let val = synth_generate(&cfg.synth.validation_split(cfg.val_videos))?;

    let started = Instant::now();
    let outcome = train_with_progress(&train, &cfg.model, &cfg.ablation, &cfg.train, |e| {
        println!(
            "epoch {:>3}  loss {:.4}  spp {:.4}  fap {:.4}  [{:.0}s]",
            e.epoch,
            e.loss.total,
            e.loss.spp,
            e.loss.fap,
            started.elapsed().as_secs_f64()
        );
    })?;
    println!("initial loss {:.4}", outcome.report.initial.total);

    let predictor = Predictor::new(&outcome.checkpoint)?;
    let raw = predict_dataset(&predictor, &val, Branches::BOTH)?;
    let paths = [
        ("full", InferOptions::new(ProposalPath::Full)),
        ("stage I only", InferOptions { path: ProposalPath::Full, stage1: true, stage2: false }),
        ("SPP only", InferOptions::new(ProposalPath::SppOnly)),
        ("FAP only", InferOptions::new(ProposalPath::FapOnly)),
    ];
    for (name, opts) in paths {
        let report = evaluate(&assemble_all(&raw, &cfg.tba, &opts)?, &val, &cfg.eval)?;
        let short = report.duration_recall.iter().find(|b| b.label == "short").map_or(f64::NAN, |b| b.recall);
        let at = |theta: f64| {
            report.recall_curves.iter().find(|p| p.an == 100 && (p.tiou - theta).abs() < 1e-9).map_or(f64::NAN, |p| p.recall)
        };
        println!(
            "{name:<13} AUC {:6.2}  AR@10 {:.3}  AR@100 {:.3}  short {:.3}  R@100 tIoU .5/.7/.9 {:.3}/{:.3}/{:.3}",
            report.auc,
            report.ar_at_an[&10],
            report.ar_at_an[&100],
            short,
            at(0.5),
            at(0.7),
            at(0.9)
        );
    }
    Ok(())
}

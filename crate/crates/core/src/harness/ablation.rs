//! Component sweep: train the full model and its P/B/U variants, evaluate
//! the full model along its F and S paths, and step through the boundary
//! adjustment stages.

use serde::{Deserialize, Serialize};

use super::config::{AblationFlags, MggConfig};
use super::dataset::Dataset;
use super::evaluate::evaluate;
use super::infer::{assemble_all, predict_dataset, predict_dataset_split, InferOptions, Predictor, ProposalPath, RawPrediction};
use super::model::Branches;
use super::train::{train, train_stagewise};
use crate::error::Result;
use crate::metrics::EvalReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub description: String,
    pub params: usize,
    pub auc: f64,
    pub ar_at_10: f64,
    pub ar_at_100: f64,
    pub short_recall: Option<f64>,
}

impl AblationRow {
    pub fn from_report(variant: &str, description: &str, params: usize, report: &EvalReport) -> Self {
        AblationRow {
            variant: variant.into(),
            description: description.into(),
            params,
            auc: report.auc,
            ar_at_10: report.ar_at_an.get(&10).copied().unwrap_or(f64::NAN),
            ar_at_100: report.ar_at_an.get(&100).copied().unwrap_or(f64::NAN),
            short_recall: report.duration_recall.iter().find(|b| b.label == "short").map(|b| b.recall),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    /// Component table: P, B, U, F, S, full.
    pub components: Vec<AblationRow>,
    /// SPP alone, then with stage I, then with both stages.
    pub boundary_adjustment: Vec<AblationRow>,
    /// Jointly trained vs separately trained branches, when requested.
    pub training_mode: Vec<AblationRow>,
}

fn score(raw: &[RawPrediction], cfg: &MggConfig, opts: InferOptions, val: &Dataset) -> Result<EvalReport> {
    evaluate(&assemble_all(raw, &cfg.tba, &opts)?, val, &cfg.eval)
}

/// Runs the sweep. `progress` receives a line before each training run.
pub fn run_ablation(
    train_set: &Dataset,
    val: &Dataset,
    cfg: &MggConfig,
    stagewise: bool,
    mut progress: impl FnMut(&str),
) -> Result<AblationReport> {
    let base = AblationFlags { spp_only: false, fap_only: false, ..cfg.ablation };
    let mut report = AblationReport::default();
    let mut trained = |flags: AblationFlags, label: &str| -> Result<(Predictor, usize)> {
        progress(&format!("training {label}"));
        let outcome = train(train_set, &cfg.model, &flags, &cfg.train)?;
        let predictor = Predictor::new(&outcome.checkpoint)?;
        let params = outcome.checkpoint.params.scalar_count();
        Ok((predictor, params))
    };

    let (full, full_params) = trained(base, "MGG")?;
    let raw = predict_dataset(&full, val, Branches::BOTH)?;
    let full_report = score(&raw, cfg, InferOptions::new(ProposalPath::Full), val)?;
    let spp_report = score(&raw, cfg, InferOptions::new(ProposalPath::SppOnly), val)?;
    let fap_report = score(&raw, cfg, InferOptions::new(ProposalPath::FapOnly), val)?;

    let variants = [
        ("MGG-P", "no position embedding", AblationFlags { disable_position: true, ..base }),
        ("MGG-B", "no bilinear matching", AblationFlags { disable_bilinear: true, ..base }),
        ("MGG-U", "no lateral connections", AblationFlags { disable_lateral: true, ..base }),
    ];
    for (name, description, flags) in variants {
        let (p, n) = trained(flags, name)?;
        let r = score(&predict_dataset(&p, val, Branches::BOTH)?, cfg, InferOptions::new(ProposalPath::Full), val)?;
        report.components.push(AblationRow::from_report(name, description, n, &r));
    }
    report.components.push(AblationRow::from_report("MGG-F", "SPP and NMS only", full_params, &spp_report));
    report.components.push(AblationRow::from_report("MGG-S", "grouped FAP only", full_params, &fap_report));
    report.components.push(AblationRow::from_report("MGG", "full model", full_params, &full_report));

    let stage1 = score(&raw, cfg, InferOptions { path: ProposalPath::Full, stage1: true, stage2: false }, val)?;
    report.boundary_adjustment = vec![
        AblationRow::from_report("SPP", "no adjustment", full_params, &spp_report),
        AblationRow::from_report("SPP+I", "stage I", full_params, &stage1),
        AblationRow::from_report("SPP+I+II", "stages I and II", full_params, &full_report),
    ];

    if stagewise {
        progress("training stagewise SPP and FAP");
        let (spp, fap) = train_stagewise(train_set, &cfg.model, &base, &cfg.train)?;
        let params = spp.checkpoint.params.scalar_count() + fap.checkpoint.params.scalar_count();
        let raw = predict_dataset_split(&Predictor::new(&spp.checkpoint)?, &Predictor::new(&fap.checkpoint)?, val)?;
        let r = score(&raw, cfg, InferOptions::new(ProposalPath::Full), val)?;
        report.training_mode = vec![
            AblationRow::from_report("stagewise", "separate SPP and FAP runs", params, &r),
            AblationRow::from_report("end-to-end", "joint objective", full_params, &full_report),
        ];
    }
    Ok(report)
}

fn table(rows: &[AblationRow]) -> String {
    let mut out = format!(
        "| {:<10} | {:<26} | {:>8} | {:>6} | {:>6} | {:>7} | {:>6} |\n|{:-<12}|{:-<28}|{:-<10}|{:-<8}|{:-<8}|{:-<9}|{:-<8}|\n",
        "variant", "description", "params", "AUC", "AR@10", "AR@100", "short", "", "", "", "", "", "", ""
    );
    for r in rows {
        let short = r.short_recall.map_or("-".to_string(), |v| format!("{v:.3}"));
        out.push_str(&format!(
            "| {:<10} | {:<26} | {:>8} | {:>6.2} | {:>6.3} | {:>7.3} | {:>6} |\n",
            r.variant, r.description, r.params, r.auc, r.ar_at_10, r.ar_at_100, short
        ));
    }
    out
}

impl AblationReport {
    /// Markdown tables.
    pub fn to_markdown(&self) -> String {
        let mut out = format!("## Components\n\n{}", table(&self.components));
        out.push_str(&format!("\n## Boundary adjustment\n\n{}", table(&self.boundary_adjustment)));
        if !self.training_mode.is_empty() {
            out.push_str(&format!("\n## Training mode\n\n{}", table(&self.training_mode)));
        }
        out
    }
}

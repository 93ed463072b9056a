//! Evaluation of proposal files against a dataset and report emission.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use super::dataset::Dataset;
use super::infer::VideoProposals;
use super::plot::{LineChart, Series};
use crate::error::{MggError, Result};
use crate::metrics::{EvalConfig, EvalReport, VideoEval};

/// Pairs proposals with ground truth. Every proposal id must name a dataset
/// video; dataset videos without proposals get an empty list.
pub fn pair_with_dataset(proposals: &[VideoProposals], dataset: &Dataset) -> Result<Vec<VideoEval>> {
    let known: HashSet<&str> = dataset.videos.iter().map(|v| v.id.as_str()).collect();
    let mut by_id: HashMap<&str, &VideoProposals> = HashMap::new();
    for p in proposals {
        if !known.contains(p.video_id.as_str()) {
            return Err(MggError::Dataset(format!("proposals for unknown video {:?}", p.video_id)));
        }
        if by_id.insert(p.video_id.as_str(), p).is_some() {
            return Err(MggError::Dataset(format!("video {:?} listed twice", p.video_id)));
        }
    }
    Ok(dataset
        .videos
        .iter()
        .map(|v| VideoEval {
            proposals: by_id.get(v.id.as_str()).map(|p| p.proposals.clone()).unwrap_or_default(),
            gt: v.annotations.clone(),
        })
        .collect())
}

pub fn evaluate(proposals: &[VideoProposals], dataset: &Dataset, cfg: &EvalConfig) -> Result<EvalReport> {
    Ok(EvalReport::compute(&pair_with_dataset(proposals, dataset)?, cfg))
}

/// Paths written by [`write_report`].
#[derive(Clone, Debug)]
pub struct ReportFiles {
    pub report: PathBuf,
    pub ar_an_csv: PathBuf,
    pub recall_tiou_csv: PathBuf,
    pub duration_csv: PathBuf,
    pub ar_an_svg: PathBuf,
    pub recall_tiou_svg: PathBuf,
}

pub fn write_report(report: &EvalReport, dir: &Path) -> Result<ReportFiles> {
    fs::create_dir_all(dir)?;
    let files = ReportFiles {
        report: dir.join("report.json"),
        ar_an_csv: dir.join("ar_an.csv"),
        recall_tiou_csv: dir.join("recall_tiou.csv"),
        duration_csv: dir.join("duration_recall.csv"),
        ar_an_svg: dir.join("ar_an.svg"),
        recall_tiou_svg: dir.join("recall_tiou.svg"),
    };
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(&files.report, json)?;

    let mut w = csv::Writer::from_path(&files.ar_an_csv)?;
    w.write_record(["an", "ar"])?;
    for (k, ar) in report.ar_an_curve.iter().enumerate() {
        w.write_record([(k + 1).to_string(), ar.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&files.recall_tiou_csv)?;
    w.write_record(["an", "tiou", "recall"])?;
    for p in &report.recall_curves {
        w.write_record([p.an.to_string(), p.tiou.to_string(), p.recall.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&files.duration_csv)?;
    w.write_record(["bucket", "min", "max", "gt_count", "matched", "recall"])?;
    for b in &report.duration_recall {
        w.write_record([
            b.label.clone(),
            b.min.to_string(),
            b.max.to_string(),
            b.gt_count.to_string(),
            b.matched.to_string(),
            b.recall.to_string(),
        ])?;
    }
    w.flush()?;

    let ar_an = LineChart {
        title: format!("AR-AN (AUC {:.2})", report.auc),
        x_label: "average number of proposals".into(),
        y_label: "average recall".into(),
        x_range: (0.0, report.ar_an_curve.len() as f64),
        y_range: (0.0, 1.0),
        series: vec![Series {
            name: "AR".into(),
            points: report.ar_an_curve.iter().enumerate().map(|(k, ar)| ((k + 1) as f64, *ar)).collect(),
        }],
    };
    fs::write(&files.ar_an_svg, ar_an.to_svg())?;

    let mut ans: Vec<usize> = report.recall_curves.iter().map(|p| p.an).collect();
    ans.sort_unstable();
    ans.dedup();
    let recall_tiou = LineChart {
        title: "recall vs tIoU".into(),
        x_label: "tIoU".into(),
        y_label: "recall".into(),
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        series: ans
            .iter()
            .map(|&an| Series {
                name: format!("AN = {an}"),
                points: report.recall_curves.iter().filter(|p| p.an == an).map(|p| (p.tiou, p.recall)).collect(),
            })
            .collect(),
    };
    fs::write(&files.recall_tiou_svg, recall_tiou.to_svg())?;
    Ok(files)
}

/// Recall by ground-truth duration as an aligned text table.
pub fn format_duration_table(report: &EvalReport) -> String {
    let mut out = format!("{:<8} {:>10} {:>6} {:>8}\n", "bucket", "frames", "gt", "recall");
    for b in &report.duration_recall {
        let range = if b.max.is_finite() { format!("{}-{}", b.min, b.max) } else { format!("{}+", b.min) };
        out.push_str(&format!("{:<8} {:>10} {:>6} {:>8.4}\n", b.label, range, b.gt_count, b.recall));
    }
    out
}

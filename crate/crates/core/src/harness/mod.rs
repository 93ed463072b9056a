//! Experiment plumbing: synthetic data, persistence, training, inference,
//! evaluation and the ablation sweep.

pub mod ablation;
pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod evaluate;
pub mod infer;
pub mod model;
pub mod plot;
pub mod synth;
pub mod train;

pub use ablation::{run_ablation, AblationReport, AblationRow};
pub use checkpoint::{Checkpoint, Fingerprint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{AblationFlags, ArchFlags, MggConfig, ModelConfig, Objective, TrainConfig};
pub use dataset::{Dataset, Video};
pub use evaluate::{evaluate, format_duration_table, pair_with_dataset, write_report, ReportFiles};
pub use infer::{
    assemble, assemble_all, infer, predict_dataset, predict_dataset_split, read_proposals, write_proposals,
    InferOptions, Predictor, ProposalPath, RawPrediction, VideoProposals,
};
pub use model::{Branches, MggModel, ModelOutputs};
pub use synth::{synth_generate, DurationDistribution, SignalPattern, SynthConfig};
pub use train::{
    build_loss, prepare_sample, train, train_stagewise, train_with_progress, Adam, EpochLog, LossValues,
    TrainOutcome, TrainReport, TrainingSample,
};

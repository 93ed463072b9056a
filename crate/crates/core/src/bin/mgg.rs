use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mgg::harness::{
    format_duration_table, infer, read_proposals, run_ablation, synth_generate, train_with_progress, write_proposals,
    write_report, Checkpoint, Dataset, Fingerprint, InferOptions, MggConfig, Objective, ProposalPath,
};
use mgg::Result;

#[derive(Parser)]
#[command(name = "mgg", version, about = "Temporal action proposals on frame-level feature sequences")]
struct Cli {
    /// TOML configuration; defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the data and training seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Full,
    SppOnly,
    FapOnly,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train.jsonl and val.jsonl plus feature files.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and write a checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch losses as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Write proposals as JSON lines.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the path matching the training objective.
        #[arg(long, value_enum)]
        path: Option<PathArg>,
        #[arg(long)]
        no_stage1: bool,
        #[arg(long)]
        no_stage2: bool,
    },
    /// Score proposals and write the report, curve tables and plots.
    Eval {
        #[arg(long)]
        proposals: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the ablation variants and write a comparison table.
    Ablate {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also compare against separately trained SPP and FAP.
        #[arg(long)]
        stagewise: bool,
    },
}

fn load_config(cli: &Cli) -> Result<MggConfig> {
    let cfg = match &cli.config {
        Some(path) => MggConfig::load(path)?,
        None => MggConfig::default(),
    };
    let cfg = match cli.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Synth { out } => {
            std::fs::create_dir_all(&out)?;
            let train = synth_generate(&cfg.synth)?;
            train.save(&out.join("train.jsonl"))?;
            let val = synth_generate(&cfg.synth.validation_split(cfg.val_videos))?;
            val.save(&out.join("val.jsonl"))?;
            println!("wrote {} train and {} val videos to {}", train.len(), val.len(), out.display());
        }
        Command::Train { data, out, log } => {
            let dataset = Dataset::load(&data)?;
            let mut lines = String::new();
            let outcome = train_with_progress(&dataset, &cfg.model, &cfg.ablation, &cfg.train, |e| {
                println!("epoch {:>3}  loss {:.5}  spp {:.5}  fap {:.5}", e.epoch, e.loss.total, e.loss.spp, e.loss.fap);
                lines.push_str(&serde_json::to_string(e).expect("epoch logs serialize"));
                lines.push('\n');
            })?;
            ensure_parent(&out)?;
            outcome.checkpoint.save(&out)?;
            if let Some(path) = log {
                ensure_parent(&path)?;
                std::fs::write(path, lines)?;
            }
            println!(
                "initial loss {:.5}, final loss {:.5}; checkpoint {}",
                outcome.report.initial.total,
                outcome.report.final_loss().unwrap_or(f64::NAN),
                out.display()
            );
        }
        Command::Infer { checkpoint, data, out, path, no_stage1, no_stage2 } => {
            let objective = Objective::from_flags(&cfg.ablation);
            let expected = Fingerprint::new(&cfg.model, cfg.ablation.arch(), objective, cfg.train.seed);
            let ckpt = Checkpoint::load_expecting(&checkpoint, &expected)?;
            let dataset = Dataset::load(&data)?;
            let path = match path {
                Some(PathArg::Full) => ProposalPath::Full,
                Some(PathArg::SppOnly) => ProposalPath::SppOnly,
                Some(PathArg::FapOnly) => ProposalPath::FapOnly,
                None => ProposalPath::for_objective(objective),
            };
            let opts = InferOptions { path, stage1: !no_stage1, stage2: !no_stage2 };
            let proposals = infer(&ckpt, &dataset, &cfg.tba, &opts)?;
            ensure_parent(&out)?;
            write_proposals(&out, &proposals)?;
            let n: usize = proposals.iter().map(|p| p.proposals.len()).sum();
            println!("wrote {n} proposals for {} videos to {}", proposals.len(), out.display());
        }
        Command::Eval { proposals, data, out } => {
            let dataset = Dataset::load(&data)?;
            let report = mgg::harness::evaluate(&read_proposals(&proposals)?, &dataset, &cfg.eval)?;
            write_report(&report, &out)?;
            for (an, ar) in &report.ar_at_an {
                println!("AR@{an:<5} {ar:.4}");
            }
            println!("AUC     {:.2}\n", report.auc);
            print!("{}", format_duration_table(&report));
        }
        Command::Ablate { train, val, out, stagewise } => {
            let train = Dataset::load(&train)?;
            let val = Dataset::load(&val)?;
            let report = run_ablation(&train, &val, &cfg, stagewise, |msg| eprintln!("{msg}"))?;
            std::fs::create_dir_all(&out)?;
            let md = report.to_markdown();
            std::fs::write(out.join("ablation.md"), &md)?;
            std::fs::write(out.join("ablation.json"), serde_json::to_string_pretty(&report)? + "\n")?;
            print!("{md}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

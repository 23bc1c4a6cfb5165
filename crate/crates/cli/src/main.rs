//! `stagewin` command-line entry point.
//!
//! Success prints one JSON summary line on stdout. Failure prints a single
//! `error: <kind>: <message>` line on stderr and exits nonzero (2 for usage
//! errors, 1 otherwise).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use stagewin::eval::commands;
use stagewin::eval::{EvalSplit, RunConfig, Variant};

#[derive(Parser)]
#[command(name = "stagewin", version, about = "Staged sliding-window transformer anomaly detector")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic order-book dataset.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on the chronological train split, select the threshold on validation.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-epoch history as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Evaluate a checkpoint and write a JSON metrics report.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// train, val, test or all.
        #[arg(long, default_value = "test")]
        split: EvalSplit,
    },
    /// Score every window and write a `timestamp,probability,predicted,actual` timeline.
    Detect {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        timeline: PathBuf,
        #[arg(long, default_value = "test")]
        split: EvalSplit,
    },
    /// Train and test the four ablation variants over several seeds.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long)]
        report: PathBuf,
    },
    /// Rewrite a dataset with order-book depth column names for plotting.
    ExportDepth {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&PathBuf>) -> stagewin::Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn run(command: Command) -> stagewin::Result<serde_json::Value> {
    Ok(match command {
        Command::Synth { config, out } => {
            let cfg = load_config(config.as_ref())?;
            let episodes = commands::synth_to_file(&cfg, &out)?;
            json!({
                "command": "synth",
                "out": out,
                "ticks": cfg.synth.length,
                "episodes": episodes.len(),
                "labeled_ticks": episodes.iter().map(|e| e.len).sum::<usize>(),
            })
        }
        Command::Train {
            data,
            config,
            out,
            history,
        } => {
            let cfg = load_config(config.as_ref())?;
            let trained = commands::train_to_file(&data, &cfg, &out, history.as_deref())?;
            json!({
                "command": "train",
                "out": out,
                "train_windows": trained.data.train.len(),
                "val_windows": trained.data.val.len(),
                "epochs": trained.fit.history.len(),
                "best_epoch": trained.fit.best_epoch,
                "threshold": trained.fit.threshold.tau,
                "val_f1": trained.fit.threshold.f1,
                "threshold_degenerate": trained.fit.threshold.degenerate,
            })
        }
        Command::Eval {
            data,
            model,
            report,
            split,
        } => {
            let m = commands::eval_to_file(&data, &model, &report, split)?;
            json!({
                "command": "eval",
                "report": report,
                "accuracy": m.accuracy,
                "f1": m.f1,
                "auc_roc": m.auc_roc,
                "samples": m.samples,
            })
        }
        Command::Detect {
            data,
            model,
            timeline,
            split,
        } => {
            let rows = commands::detect_to_file(&data, &model, &timeline, split)?;
            json!({
                "command": "detect",
                "timeline": timeline,
                "rows": rows.len(),
                "flagged": rows.iter().filter(|r| r.predicted).count(),
            })
        }
        Command::Ablate {
            data,
            config,
            seeds,
            report,
        } => {
            let cfg = load_config(config.as_ref())?;
            let table = commands::ablate_to_file(&data, &cfg, seeds, &report)?;
            let failed = table.rows.iter().filter(|r| r.outcome.is_err()).count();
            let mean_auc: serde_json::Map<String, serde_json::Value> = Variant::ALL
                .iter()
                .map(|&v| (v.name().to_string(), json!(table.mean(v).map(|m| m.auc_roc))))
                .collect();
            json!({
                "command": "ablate",
                "report": report,
                "runs": table.rows.len(),
                "failed_runs": failed,
                "mean_auc_roc": mean_auc,
            })
        }
        Command::ExportDepth { data, out } => {
            commands::depth_to_file(&data, &out)?;
            json!({ "command": "export-depth", "out": out })
        }
    })
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let head: Vec<&str> = msg.lines().take_while(|l| !l.trim().is_empty()).collect();
            eprintln!("error: usage: {}", one_line(head.join(" ").trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}

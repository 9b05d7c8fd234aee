use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uda_bench::{export_embedding, gen_synthetic, load_suite, load_task, run_cell, run_suite, BenchError, Result};
use uda_core::Method;

#[derive(Parser)]
#[command(name = "uda-bench", version, about = "Run domain adaptation benchmark suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (task, method) pair of a suite and write report.json/report.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Run one cell and dump its embedding as CSV.
    ExportEmbedding {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long)]
        method: String,
        #[arg(long)]
        out: PathBuf,
        /// Keep at most this many embedding dimensions.
        #[arg(long)]
        dims: Option<usize>,
    },
    /// Write source.csv and target.csv drawn from a synthetic spec.
    GenSynthetic {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, jobs, out } => {
            let suite = load_suite(&config)?;
            let report = run_suite(&suite, jobs)?;
            let (json, csv) = report.write(&out)?;
            for row in &report.rows {
                match row.final_accuracy {
                    Some(acc) => println!("{:<24} {:<6} {:>7.2}%", row.name, row.method, 100.0 * acc),
                    None => println!("{:<24} {:<6} {}", row.name, row.method, row.error.as_deref().unwrap_or("no ground truth")),
                }
            }
            println!("wrote {} and {}", json.display(), csv.display());
            if report.failed() {
                return Err(BenchError::Runtime("one or more tasks failed".into()));
            }
            Ok(())
        }
        Command::ExportEmbedding {
            config,
            task,
            method,
            out,
            dims,
        } => {
            let suite = load_suite(&config)?;
            let task = suite.task(&task)?;
            let method: Method = method
                .parse()
                .map_err(|_| BenchError::Config {
                    key: "method".into(),
                    message: format!("unknown method '{method}'"),
                })?;
            let data = load_task(task)?;
            let (row, result) = run_cell(task, &data, method);
            let result = result.ok_or_else(|| BenchError::Runtime(row.error.unwrap_or_default()))?;
            let mut labels: Vec<usize> = data.source.source_labels()?.iter().map(|l| l + 1).collect();
            labels.extend(&row.predictions);
            export_embedding(&result, &labels, &out, dims)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::GenSynthetic { spec, seed, out } => {
            gen_synthetic(&spec, seed, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uda-bench: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

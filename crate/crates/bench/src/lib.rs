//! Experiment harness: suite configs, batch runs, reports and embedding dumps.

pub mod config;
mod error;
pub mod export;
pub mod report;
pub mod suite;

pub use config::{load_suite, parse_suite, stable_hash, task_seed, SuiteConfig, TaskInput, TaskSpec};
pub use error::{BenchError, Result};
pub use export::{export_embedding, read_embedding};
pub use report::{InputHashes, Report, ReportRow, RowStatus};
pub use suite::{load_task, run_cell, run_suite, TaskData};

use std::path::Path;

use uda_core::data::{make_synthetic_pair, save_csv};

/// Generates a synthetic pair from a spec file into `out/source.csv` and
/// `out/target.csv` (1-based labels in the final column).
pub fn gen_synthetic(spec_path: &Path, seed: u64, out: &Path) -> Result<()> {
    let spec = config::load_synthetic_spec(spec_path)?;
    let (source, target) = make_synthetic_pair::<f64>(&spec, seed)?;
    std::fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;
    save_csv(source.features(), source.evaluation_labels(), &out.join("source.csv"))?;
    save_csv(target.features(), target.evaluation_labels(), &out.join("target.csv"))?;
    Ok(())
}

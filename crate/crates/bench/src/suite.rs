//! Runs every (task, method) cell of a suite.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use uda_core::data::io::encode_rawbinary;
use uda_core::data::{load_dataset, make_synthetic_pair, FileFormat};
use uda_core::engine::run_adaptation;
use uda_core::{AdaptationResult, Dataset, Method, Role};

use crate::config::{DataFile, SuiteConfig, TaskInput, TaskSpec};
use crate::error::{BenchError, Result};
use crate::report::{InputHashes, Report, ReportRow, RowStatus};

/// Loaded inputs of one task.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub source: Dataset,
    pub target: Dataset,
    pub hashes: InputHashes,
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(BenchError::Runtime(format!(
                "{}: line {}: expected a label ≥ 1, found '{}'",
                path.display(),
                i + 1,
                l.trim()
            ))),
        })
        .collect()
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| BenchError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hash of a generated dataset: its raw binary encoding followed by the
/// labels as little-endian `u32`.
fn dataset_hash(d: &Dataset) -> String {
    let mut hasher = Sha256::new();
    hasher.update(encode_rawbinary(d.features()));
    for &l in d.evaluation_labels().unwrap_or(&[]) {
        hasher.update((l as u32).to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

fn load_side(file: &DataFile, role: Role) -> Result<(Dataset, String)> {
    let mut data = load_dataset::<f64>(&file.path, file.format, role)?;
    let mut hash = file_hash(&file.path)?;
    if let Some(labels_path) = &file.labels {
        if file.format == FileFormat::Csv && data.evaluation_labels().is_some() {
            return Err(BenchError::Runtime(format!(
                "{} already has a label column; drop the label sidecar",
                file.path.display()
            )));
        }
        let labels = read_labels(labels_path)?;
        data = Dataset::new(data.name().to_string(), role, data.features().clone(), Some(labels))?;
        hash = format!("{hash}+{}", file_hash(labels_path)?);
    }
    Ok((data, hash))
}

/// Loads or generates a task's datasets. Synthetic tasks use the task seed.
pub fn load_task(task: &TaskSpec) -> Result<TaskData> {
    match &task.input {
        TaskInput::Files { source, target } => {
            let (source, source_hash) = load_side(source, Role::Source)?;
            let (target, target_hash) = load_side(target, Role::Target)?;
            Ok(TaskData {
                source,
                target,
                hashes: InputHashes {
                    source: source_hash,
                    target: target_hash,
                },
            })
        }
        TaskInput::Synthetic(spec) => {
            let (source, target) = make_synthetic_pair::<f64>(spec, task.base.seed)?;
            let hashes = InputHashes {
                source: dataset_hash(&source),
                target: dataset_hash(&target),
            };
            Ok(TaskData { source, target, hashes })
        }
    }
}

/// Runs one cell and returns the raw result alongside its report row.
pub fn run_cell(task: &TaskSpec, data: &TaskData, method: Method) -> (ReportRow, Option<AdaptationResult<f64>>) {
    let config = task.config_for(method);
    let started = Instant::now();
    let outcome = run_adaptation(&data.source, &data.target, &config);
    let wall_clock_seconds = started.elapsed().as_secs_f64();
    let mut row = ReportRow {
        task: task.key.clone(),
        name: task.name.clone(),
        method,
        status: RowStatus::Ok,
        error: None,
        final_accuracy: None,
        initial_accuracy: None,
        converged_at: None,
        effective_k: None,
        trace: Vec::new(),
        config,
        inputs: data.hashes.clone(),
        predictions: Vec::new(),
        wall_clock_seconds,
    };
    match outcome {
        Ok(result) => {
            row.final_accuracy = result.final_accuracy;
            row.initial_accuracy = result.initial_accuracy;
            row.converged_at = result.iterations_to_converge();
            row.effective_k = Some(result.effective_k);
            row.trace = result.per_iteration.clone();
            row.predictions = result.target_predictions.iter().map(|p| p + 1).collect();
            (row, Some(result))
        }
        Err(e) => {
            log::error!("{} / {method}: {e}", task.name);
            row.status = RowStatus::Failed;
            row.error = Some(e.to_string());
            (row, None)
        }
    }
}

fn failed_rows(task: &TaskSpec, error: &BenchError) -> Vec<ReportRow> {
    log::error!("{}: {error}", task.name);
    task.methods
        .iter()
        .map(|&method| ReportRow {
            task: task.key.clone(),
            name: task.name.clone(),
            method,
            status: RowStatus::Failed,
            error: Some(error.to_string()),
            final_accuracy: None,
            initial_accuracy: None,
            converged_at: None,
            effective_k: None,
            trace: Vec::new(),
            config: task.config_for(method),
            inputs: InputHashes {
                source: String::new(),
                target: String::new(),
            },
            predictions: Vec::new(),
            wall_clock_seconds: 0.0,
        })
        .collect()
}

/// Executes every (task, method) pair on up to `jobs` threads. Failed cells
/// are reported as rows with `status = failed`; see [`Report::failed`].
pub fn run_suite(suite: &SuiteConfig, jobs: usize) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BenchError::Runtime(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        let loaded: Vec<Result<TaskData>> = suite.tasks.par_iter().map(load_task).collect();
        let cells: Vec<(usize, Method)> = suite
            .tasks
            .iter()
            .enumerate()
            .flat_map(|(i, t)| t.methods.iter().map(move |&m| (i, m)))
            .collect();
        let mut rows: Vec<Option<ReportRow>> = cells
            .par_iter()
            .map(|&(i, method)| match &loaded[i] {
                Ok(data) => Some(run_cell(&suite.tasks[i], data, method).0),
                Err(_) => None,
            })
            .collect();
        // tasks whose inputs failed to load fill their cells in order
        let mut out = Vec::with_capacity(rows.len());
        let mut next = 0;
        for (i, task) in suite.tasks.iter().enumerate() {
            match &loaded[i] {
                Ok(_) => {
                    for slot in &mut rows[next..next + task.methods.len()] {
                        out.push(slot.take().expect("cell ran"));
                    }
                }
                Err(e) => out.extend(failed_rows(task, e)),
            }
            next += task.methods.len();
        }
        out
    });
    Ok(Report {
        suite_seed: suite.seed,
        rows,
    })
}

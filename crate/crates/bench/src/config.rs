//! Suite configuration files.
//!
//! A suite is a TOML file with an optional top-level `seed` and one
//! `[task.<name>]` section per task:
//!
//! ```toml
//! seed = 7
//!
//! [task.coil1_coil2]
//! name = "COIL1→COIL2"
//! source = "COIL_1.csv"
//! target = "COIL_2.csv"
//! preset = "coil"
//! methods = ["cdda", "dgada"]
//!
//! [task.toy]
//! synthetic = "four_class"     # or synthetic_spec = "spec.toml"
//! preset = "synthetic"
//! methods = ["jda", "dgada"]
//! k = 4                        # any hyper-parameter may be overridden
//! ```
//!
//! Relative data paths are resolved against `DA_DATA_DIR` when it is set and
//! against the config file's directory otherwise. Tasks run in section-name
//! order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use uda_core::data::{FileFormat, SyntheticSpec};
use uda_core::{AdaptationConfig, KernelSpec, Method, SigmaRule};

use crate::error::{BenchError, Result};

pub const DATA_DIR_VAR: &str = "DA_DATA_DIR";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    seed: Option<u64>,
    #[serde(default)]
    task: BTreeMap<String, RawTask>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawSigma {
    Fixed(f64),
    Rule(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    name: Option<String>,
    source: Option<PathBuf>,
    target: Option<PathBuf>,
    format: Option<String>,
    source_format: Option<String>,
    target_format: Option<String>,
    source_labels: Option<PathBuf>,
    target_labels: Option<PathBuf>,
    synthetic: Option<String>,
    synthetic_spec: Option<PathBuf>,
    preset: Option<String>,
    methods: Vec<String>,
    k: Option<usize>,
    lambda: Option<f64>,
    alpha: Option<f64>,
    iterations: Option<usize>,
    kernel: Option<String>,
    sigma: Option<RawSigma>,
    knn: Option<usize>,
    standardize: Option<bool>,
    frobenius_normalize: Option<bool>,
}

/// One domain's data on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub path: PathBuf,
    pub format: FileFormat,
    /// Label sidecar (one 1-based label per line), for formats without labels.
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskInput {
    Files { source: DataFile, target: DataFile },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    /// Section name; also the input to the seed derivation.
    pub key: String,
    /// Display name, conventionally `SOURCE→TARGET`.
    pub name: String,
    pub input: TaskInput,
    pub methods: Vec<Method>,
    /// Fully resolved hyper-parameters; `method` is set per run.
    pub base: AdaptationConfig,
}

impl TaskSpec {
    pub fn config_for(&self, method: Method) -> AdaptationConfig {
        AdaptationConfig {
            method,
            ..self.base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub tasks: Vec<TaskSpec>,
}

impl SuiteConfig {
    pub fn task(&self, key: &str) -> Result<&TaskSpec> {
        self.tasks
            .iter()
            .find(|t| t.key == key || t.name == key)
            .ok_or_else(|| BenchError::config("task", format!("no task named '{key}'")))
    }
}

/// `u64` from the first eight bytes (little-endian) of SHA-256 of `name`.
pub fn stable_hash(name: &str) -> u64 {
    let digest = Sha256::digest(name.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Per-task seed: `suite_seed XOR stable_hash(task_key)`.
pub fn task_seed(suite_seed: u64, task_key: &str) -> u64 {
    suite_seed ^ stable_hash(task_key)
}

pub fn load_suite(path: &Path) -> Result<SuiteConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::config(path.display().to_string(), e.to_string()))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let data_dir = std::env::var_os(DATA_DIR_VAR).map(PathBuf::from);
    parse_suite(&text, &base_dir, data_dir.as_deref())
}

/// Parses suite text. `base_dir` resolves spec files and, without
/// `data_dir`, data files.
pub fn parse_suite(text: &str, base_dir: &Path, data_dir: Option<&Path>) -> Result<SuiteConfig> {
    let raw: RawSuite = toml::from_str(text).map_err(|e| {
        let key = e.span().map_or_else(|| "config".to_string(), |s| format!("bytes {}..{}", s.start, s.end));
        BenchError::config(key, e.message().to_string())
    })?;
    if raw.task.is_empty() {
        return Err(BenchError::config("task", "the suite defines no tasks"));
    }
    let seed = raw.seed.unwrap_or(0);
    let tasks = raw
        .task
        .into_iter()
        .map(|(key, task)| resolve_task(key, task, seed, base_dir, data_dir))
        .collect::<Result<_>>()?;
    Ok(SuiteConfig { seed, tasks })
}

fn resolve_path(path: &Path, root: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        root.join(path)
    }
}

fn parse_format(key: &str, value: Option<&str>, path: &Path) -> Result<FileFormat> {
    match value {
        Some(v) => v.parse().map_err(|_| BenchError::config(key, format!("unknown format '{v}' (csv or rawbinary)"))),
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(FileFormat::Csv),
            Some("bin" | "damx" | "raw") => Ok(FileFormat::Rawbinary),
            _ => Err(BenchError::config(key, format!("cannot infer the format of {}", path.display()))),
        },
    }
}

fn existing(key: &str, path: PathBuf) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(BenchError::config(key, format!("file not found: {}", path.display())))
    }
}

fn resolve_task(key: String, raw: RawTask, suite_seed: u64, base_dir: &Path, data_dir: Option<&Path>) -> Result<TaskSpec> {
    let prefix = format!("task.{key}");
    let field = |name: &str| format!("{prefix}.{name}");
    let data_root = data_dir.unwrap_or(base_dir);

    let input = match (&raw.synthetic, &raw.synthetic_spec, &raw.source, &raw.target) {
        (Some(builtin), None, None, None) => match builtin.as_str() {
            "four_class" => TaskInput::Synthetic(SyntheticSpec::four_class()),
            other => return Err(BenchError::config(field("synthetic"), format!("unknown built-in spec '{other}'"))),
        },
        (None, Some(spec), None, None) => {
            let path = existing(&field("synthetic_spec"), resolve_path(spec, base_dir))?;
            TaskInput::Synthetic(load_synthetic_spec(&path)?)
        }
        (None, None, Some(source), Some(target)) => {
            let side = |which: &str, path: &Path, format: &Option<String>, labels: &Option<PathBuf>| -> Result<DataFile> {
                let path = existing(&field(which), resolve_path(path, data_root))?;
                let format_key = if format.is_some() { field(&format!("{which}_format")) } else { field("format") };
                let format = parse_format(&format_key, format.as_deref().or(raw.format.as_deref()), &path)?;
                let labels = labels
                    .as_ref()
                    .map(|l| existing(&field(&format!("{which}_labels")), resolve_path(l, data_root)))
                    .transpose()?;
                Ok(DataFile { path, format, labels })
            };
            TaskInput::Files {
                source: side("source", source, &raw.source_format, &raw.source_labels)?,
                target: side("target", target, &raw.target_format, &raw.target_labels)?,
            }
        }
        (None, None, Some(_), None) => return Err(BenchError::config(field("target"), "missing target file")),
        (None, None, None, Some(_)) => return Err(BenchError::config(field("source"), "missing source file")),
        (None, None, None, None) => {
            return Err(BenchError::config(
                prefix,
                "needs either source/target files or a synthetic spec",
            ))
        }
        _ => return Err(BenchError::config(prefix, "mixes synthetic and file inputs")),
    };

    if raw.methods.is_empty() {
        return Err(BenchError::config(field("methods"), "no methods listed"));
    }
    let methods = raw
        .methods
        .iter()
        .map(|m| m.parse::<Method>().map_err(|_| BenchError::config(field("methods"), format!("unknown method '{m}'"))))
        .collect::<Result<Vec<_>>>()?;

    let mut base = match &raw.preset {
        Some(p) => AdaptationConfig::preset(p, methods[0]).map_err(|_| {
            BenchError::config(field("preset"), format!("unknown preset '{p}' (one of {})", uda_core::engine::PRESETS.join(", ")))
        })?,
        None => AdaptationConfig::default(),
    };
    if let Some(v) = raw.k {
        base.k = v;
    }
    if let Some(v) = raw.lambda {
        base.lambda = v;
    }
    if let Some(v) = raw.alpha {
        base.alpha = v;
    }
    if let Some(v) = raw.iterations {
        base.iterations = v;
    }
    if let Some(kernel) = &raw.kernel {
        base.kernel = match kernel.as_str() {
            "none" => None,
            spec => Some(
                spec.parse::<KernelSpec>()
                    .map_err(|e| BenchError::config(field("kernel"), e.to_string()))?,
            ),
        };
    }
    match &raw.sigma {
        Some(RawSigma::Fixed(s)) => base.sigma_rule = SigmaRule::Fixed(*s),
        Some(RawSigma::Rule(r)) if r == "median" => base.sigma_rule = SigmaRule::Median,
        Some(RawSigma::Rule(r)) => return Err(BenchError::config(field("sigma"), format!("expected a number or \"median\", got '{r}'"))),
        None => {}
    }
    if let Some(v) = raw.knn {
        base.knn = (v > 0).then_some(v);
    }
    if let Some(v) = raw.standardize {
        base.standardize = v;
    }
    if let Some(v) = raw.frobenius_normalize {
        base.frobenius_normalize = v;
    }
    base.seed = task_seed(suite_seed, &key);
    base.validate().map_err(|e| BenchError::config(prefix.clone(), e.to_string()))?;

    Ok(TaskSpec {
        name: raw.name.unwrap_or_else(|| key.clone()),
        key,
        input,
        methods,
        base,
    })
}

pub fn load_synthetic_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::config(path.display().to_string(), e.to_string()))?;
    toml::from_str(&text).map_err(|e| BenchError::config(path.display().to_string(), e.message().to_string()))
}

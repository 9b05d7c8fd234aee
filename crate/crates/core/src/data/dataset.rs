use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Whether a dataset plays the labeled (source) or unlabeled (target) part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Source,
    Target,
}

/// A feature matrix (features × samples) for one domain.
///
/// Source datasets always carry labels. Target datasets may carry ground truth,
/// but it is only reachable through [`DomainDataset::evaluation_labels`]; the
/// adaptation code reads source labels through
/// [`DomainDataset::source_labels`], which refuses target datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset<T: Scalar> {
    name: String,
    role: Role,
    features: DMatrix<T>,
    labels: Option<Vec<usize>>,
    num_classes: usize,
}

impl<T: Scalar> DomainDataset<T> {
    /// Labeled source dataset. `labels` are 0-based.
    pub fn source(name: impl Into<String>, features: DMatrix<T>, labels: Vec<usize>) -> Result<Self> {
        Self::new(name.into(), Role::Source, features, Some(labels))
    }

    /// Target dataset; `ground_truth` (0-based) is kept for evaluation only.
    pub fn target(
        name: impl Into<String>,
        features: DMatrix<T>,
        ground_truth: Option<Vec<usize>>,
    ) -> Result<Self> {
        Self::new(name.into(), Role::Target, features, ground_truth)
    }

    pub fn new(name: String, role: Role, features: DMatrix<T>, labels: Option<Vec<usize>>) -> Result<Self> {
        if features.ncols() == 0 || features.nrows() == 0 {
            return Err(Error::validation(format!("dataset '{name}' is empty")));
        }
        if let Some((row, col)) = first_non_finite(&features) {
            return Err(Error::validation(format!(
                "dataset '{name}': non-finite value at feature {} of sample {}",
                row + 1,
                col + 1
            )));
        }
        if role == Role::Source && labels.is_none() {
            return Err(Error::validation(format!("source dataset '{name}' has no labels")));
        }
        let num_classes = match &labels {
            Some(labels) => {
                if labels.len() != features.ncols() {
                    return Err(Error::validation(format!(
                        "dataset '{name}': {} labels for {} samples",
                        labels.len(),
                        features.ncols()
                    )));
                }
                labels.iter().max().map_or(0, |&max| max + 1)
            }
            None => 0,
        };
        Ok(DomainDataset {
            name,
            role,
            features,
            labels,
            num_classes,
        })
    }

    /// Declares the class count and checks every label against it.
    pub fn with_num_classes(mut self, num_classes: usize) -> Result<Self> {
        if let Some(labels) = &self.labels {
            if let Some(pos) = labels.iter().position(|&l| l >= num_classes) {
                return Err(Error::validation(format!(
                    "dataset '{}': label {} of sample {} is outside 1..{num_classes}",
                    self.name,
                    labels[pos] + 1,
                    pos + 1
                )));
            }
        }
        self.num_classes = num_classes;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn features(&self) -> &DMatrix<T> {
        &self.features
    }

    pub fn n_features(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.features.ncols()
    }

    /// Declared (or inferred) number of classes; 0 for an unlabeled target.
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Training labels. Only source datasets have them.
    pub fn source_labels(&self) -> Result<&[usize]> {
        match (self.role, &self.labels) {
            (Role::Source, Some(labels)) => Ok(labels),
            _ => Err(Error::validation(format!(
                "dataset '{}' is not a labeled source domain",
                self.name
            ))),
        }
    }

    /// Labels for scoring predictions. Never feed these into adaptation.
    pub fn evaluation_labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Returns a copy with transformed features and unchanged labels.
    pub fn map_features(&self, f: impl FnOnce(&DMatrix<T>) -> DMatrix<T>) -> Result<Self> {
        let features = f(&self.features);
        if features.ncols() != self.features.ncols() {
            return Err(Error::validation("feature transform changed the sample count"));
        }
        let mut out = Self::new(self.name.clone(), self.role, features, self.labels.clone())?;
        out.num_classes = self.num_classes;
        Ok(out)
    }
}

fn first_non_finite<T: Scalar>(m: &DMatrix<T>) -> Option<(usize, usize)> {
    for (col, column) in m.column_iter().enumerate() {
        if let Some(row) = column.iter().position(|v| !v.finite()) {
            return Some((row, col));
        }
    }
    None
}

/// Source and target samples packed column-wise as `[X_S, X_T]`.
///
/// Columns `0..n_source` are the source samples in order, followed by the
/// target samples. Every MMD matrix is indexed against this layout.
#[derive(Debug, Clone)]
pub struct JointData<T: Scalar> {
    features: DMatrix<T>,
    n_source: usize,
    n_target: usize,
    num_classes: usize,
}

impl<T: Scalar> JointData<T> {
    pub fn new(source: &DomainDataset<T>, target: &DomainDataset<T>) -> Result<Self> {
        if source.role() != Role::Source || target.role() != Role::Target {
            return Err(Error::validation("joint data needs one source and one target dataset"));
        }
        Self::from_matrices(source.features(), target.features(), source.num_classes())
    }

    pub fn from_matrices(source: &DMatrix<T>, target: &DMatrix<T>, num_classes: usize) -> Result<Self> {
        if source.nrows() != target.nrows() {
            return Err(Error::validation(format!(
                "feature dimensions differ: source {} vs target {}",
                source.nrows(),
                target.nrows()
            )));
        }
        let (ns, nt) = (source.ncols(), target.ncols());
        let mut features = DMatrix::zeros(source.nrows(), ns + nt);
        features.columns_mut(0, ns).copy_from(source);
        features.columns_mut(ns, nt).copy_from(target);
        Ok(JointData {
            features,
            n_source: ns,
            n_target: nt,
            num_classes,
        })
    }

    pub fn features(&self) -> &DMatrix<T> {
        &self.features
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn n_samples(&self) -> usize {
        self.n_source + self.n_target
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// Per-class membership lists for the source labels and target pseudo-labels.
///
/// Indices are joint column indices: target members are offset by `n_source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubdomainIndex {
    source: Vec<Vec<usize>>,
    target: Vec<Vec<usize>>,
    n_source: usize,
    n_target: usize,
}

impl SubdomainIndex {
    pub fn new(source_labels: &[usize], target_pseudo: &[usize], num_classes: usize) -> Result<Self> {
        let mut source = vec![Vec::new(); num_classes];
        let mut target = vec![Vec::new(); num_classes];
        for (i, &label) in source_labels.iter().enumerate() {
            source
                .get_mut(label)
                .ok_or_else(|| Error::validation(format!("source label {} outside 1..{num_classes}", label + 1)))?
                .push(i);
        }
        let ns = source_labels.len();
        for (j, &label) in target_pseudo.iter().enumerate() {
            target
                .get_mut(label)
                .ok_or_else(|| Error::validation(format!("pseudo-label {} outside 1..{num_classes}", label + 1)))?
                .push(ns + j);
        }
        Ok(SubdomainIndex {
            source,
            target,
            n_source: ns,
            n_target: target_pseudo.len(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.source.len()
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    /// Joint dimension `n_source + n_target`.
    pub fn dim(&self) -> usize {
        self.n_source + self.n_target
    }

    pub fn source_members(&self, class: usize) -> &[usize] {
        &self.source[class]
    }

    pub fn target_members(&self, class: usize) -> &[usize] {
        &self.target[class]
    }

    pub fn source_count(&self, class: usize) -> usize {
        self.source[class].len()
    }

    pub fn target_count(&self, class: usize) -> usize {
        self.target[class].len()
    }
}

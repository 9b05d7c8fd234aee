//! Affinity graphs over an embedding and closed-form label propagation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How the Gaussian bandwidth is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    /// Median pairwise Euclidean distance of the embedded samples.
    #[default]
    Median,
    Fixed(f64),
}

/// Gaussian affinity `W` (zero diagonal) with its degree vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph<T: Scalar> {
    weights: DMatrix<T>,
    degrees: DVector<T>,
    sigma: T,
}

impl<T: Scalar> AffinityGraph<T> {
    /// Wraps an explicit weight matrix. It must be square, symmetric,
    /// nonnegative, with a zero diagonal.
    pub fn from_weights(weights: DMatrix<T>, sigma: T) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::validation("affinity matrix must be square"));
        }
        for i in 0..n {
            if weights[(i, i)] != T::zero() {
                return Err(Error::validation("affinity matrix must have a zero diagonal"));
            }
            for j in 0..i {
                if weights[(i, j)] != weights[(j, i)] || weights[(i, j)] < T::zero() {
                    return Err(Error::validation("affinity matrix must be symmetric and nonnegative"));
                }
            }
        }
        let degrees = row_sums(&weights);
        Ok(AffinityGraph { weights, degrees, sigma })
    }

    pub fn weights(&self) -> &DMatrix<T> {
        &self.weights
    }

    pub fn degrees(&self) -> &DVector<T> {
        &self.degrees
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.nrows()
    }
}

fn row_sums<T: Scalar>(w: &DMatrix<T>) -> DVector<T> {
    DVector::from_iterator(w.nrows(), w.row_iter().map(|r| r.sum()))
}

/// Squared Euclidean distances between the columns of `z`.
pub(crate) fn pairwise_sq_distances<T: Scalar>(z: &DMatrix<T>) -> DMatrix<T> {
    let n = z.ncols();
    let mut d = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let v = (z.column(i) - z.column(j)).norm_squared();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

fn median<T: Scalar>(mut values: Vec<T>) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / T::lit(2.0)
    }
}

/// Builds `w_ij = exp(−‖z_i − z_j‖² / 2σ²)` over the columns of `z`.
///
/// With `knn = Some(p)` an edge survives when either endpoint is among the
/// other's `p` nearest neighbours (ties toward lower index).
pub fn build_affinity<T: Scalar>(z: &DMatrix<T>, sigma_rule: SigmaRule, knn: Option<usize>) -> Result<AffinityGraph<T>> {
    let n = z.ncols();
    if n < 2 {
        return Err(Error::validation("affinity graph needs at least two samples"));
    }
    let dist2 = pairwise_sq_distances(z);
    let sigma = match sigma_rule {
        SigmaRule::Fixed(s) if s > 0.0 => T::lit(s),
        SigmaRule::Fixed(s) => return Err(Error::validation(format!("fixed sigma must be positive, got {s}"))),
        SigmaRule::Median => {
            let mut upper = Vec::with_capacity(n * (n - 1) / 2);
            for j in 0..n {
                for i in 0..j {
                    upper.push(dist2[(i, j)].sqrt());
                }
            }
            let s = median(upper);
            if s <= T::zero() {
                return Err(Error::validation(
                    "median pairwise distance is zero; use a fixed sigma for this data",
                ));
            }
            s
        }
    };
    let scale = T::lit(-0.5) / (sigma * sigma);
    let mut w = dist2.map(|d| (d * scale).exp());
    w.fill_diagonal(T::zero());

    if let Some(p) = knn {
        if p == 0 {
            return Err(Error::validation("knn must be at least 1"));
        }
        let mut keep = vec![false; n * n];
        for i in 0..n {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| dist2[(i, a)].partial_cmp(&dist2[(i, b)]).unwrap().then(a.cmp(&b)));
            for &j in order.iter().take(p) {
                keep[i * n + j] = true;
                keep[j * n + i] = true;
            }
        }
        for i in 0..n {
            for j in 0..n {
                if !keep[i * n + j] {
                    w[(i, j)] = T::zero();
                }
            }
        }
    }
    let degrees = row_sums(&w);
    Ok(AffinityGraph { weights: w, degrees, sigma })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelStage {
    Initial,
    Propagated,
}

/// `n × C` label scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix<T: Scalar> {
    values: DMatrix<T>,
    stage: LabelStage,
}

impl<T: Scalar> LabelMatrix<T> {
    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn stage(&self) -> LabelStage {
        self.stage
    }

    pub fn from_values(values: DMatrix<T>, stage: LabelStage) -> Self {
        LabelMatrix { values, stage }
    }

    /// Row-wise argmax for rows `start..start+len`; ties go to the lowest class.
    pub fn argmax_rows(&self, start: usize, len: usize) -> Vec<usize> {
        (start..start + len)
            .map(|i| {
                let row = self.values.row(i);
                let mut best = 0;
                for c in 1..row.len() {
                    if row[c] > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

/// One-hot initial labels: source rows from the true labels, target rows from
/// the pseudo-labels.
pub fn build_initial_labels<T: Scalar>(
    source_labels: &[usize],
    target_pseudo: &[usize],
    num_classes: usize,
) -> Result<LabelMatrix<T>> {
    let n = source_labels.len() + target_pseudo.len();
    let mut values = DMatrix::zeros(n, num_classes);
    for (i, &label) in source_labels.iter().chain(target_pseudo).enumerate() {
        if label >= num_classes {
            let which = if i < source_labels.len() {
                format!("source sample {}", i + 1)
            } else {
                format!("target sample {}", i - source_labels.len() + 1)
            };
            return Err(Error::validation(format!("{which} has no label in 1..{num_classes}")));
        }
        values[(i, label)] = T::one();
    }
    Ok(LabelMatrix {
        values,
        stage: LabelStage::Initial,
    })
}

/// Solves `(D − αW) Y* = Y⁽⁰⁾`.
///
/// `D − αW` is symmetric and strictly diagonally dominant for `α < 1` on a
/// graph with positive degrees, so a Cholesky solve applies. If the
/// factorization fails, a ridge of `1e-10·mean(d)` is added once.
pub fn propagate<T: Scalar>(graph: &AffinityGraph<T>, initial: &LabelMatrix<T>, alpha: f64) -> Result<LabelMatrix<T>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::validation(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = graph.n_nodes();
    if initial.values.nrows() != n {
        return Err(Error::validation(format!(
            "label matrix has {} rows for a graph with {n} nodes",
            initial.values.nrows()
        )));
    }
    let mut system = graph.weights.scale(-T::lit(alpha));
    system.set_diagonal(&graph.degrees);

    let values = match system.clone().cholesky() {
        Some(chol) => chol.solve(&initial.values),
        None => {
            let ridge = T::lit(1e-10) * graph.degrees.mean();
            for i in 0..n {
                system[(i, i)] += ridge;
            }
            let (lo, hi) = diagonal_range(&system);
            system
                .cholesky()
                .ok_or_else(|| {
                    Error::numerical(format!(
                        "propagation system is singular after ridge {:.3e} (diagonal range {:.3e}..{:.3e})",
                        ridge.as_f64(),
                        lo,
                        hi
                    ))
                })?
                .solve(&initial.values)
        }
    };
    if values.iter().any(|v| !v.finite()) {
        return Err(Error::numerical("propagated labels are not finite"));
    }
    Ok(LabelMatrix {
        values,
        stage: LabelStage::Propagated,
    })
}

fn diagonal_range<T: Scalar>(m: &DMatrix<T>) -> (f64, f64) {
    m.diagonal()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.as_f64()), hi.max(v.as_f64())))
}

/// `tr(Yᵀ (I − D^{-1/2} W D^{-1/2}) Y)`. Isolated nodes use `d^{-1/2} = 0`.
pub fn laplacian_energy<T: Scalar>(labels: &LabelMatrix<T>, graph: &AffinityGraph<T>) -> Result<T> {
    let y = &labels.values;
    if y.nrows() != graph.n_nodes() {
        return Err(Error::validation("label matrix and graph sizes differ"));
    }
    let inv_sqrt = graph
        .degrees
        .map(|d| if d > T::zero() { T::one() / d.sqrt() } else { T::zero() });
    let mut normalized = graph.weights.clone();
    for j in 0..normalized.ncols() {
        for i in 0..normalized.nrows() {
            normalized[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let smooth = (y.transpose() * normalized * y).trace();
    Ok(y.norm_squared() - smooth)
}

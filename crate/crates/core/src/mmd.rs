//! MMD coefficient matrices over the joint `[X_S, X_T]` column layout.
//!
//! Every matrix here is a sum of rank-one terms `e eᵀ` where `e` holds
//! `1/|P|` on the members of one sample group and `-1/|Q|` on another, so
//! `tr(Aᵀ X e eᵀ Xᵀ A) = ‖mean(AᵀX_P) − mean(AᵀX_Q)‖²`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::SubdomainIndex;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmdKind {
    Marginal,
    /// Per-class conditional term (0-based class).
    Conditional(usize),
    RepulsiveSourceToTarget,
    RepulsiveTargetToSource,
    RepulsiveTotal,
    Composite,
}

/// Symmetric `n × n` MMD coefficient matrix tagged with what it measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdMatrix<T: Scalar> {
    coefficients: DMatrix<T>,
    kind: MmdKind,
}

impl<T: Scalar> MmdMatrix<T> {
    pub fn zeros(dim: usize, kind: MmdKind) -> Self {
        MmdMatrix {
            coefficients: DMatrix::zeros(dim, dim),
            kind,
        }
    }

    pub fn coefficients(&self) -> &DMatrix<T> {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> DMatrix<T> {
        self.coefficients
    }

    pub fn kind(&self) -> MmdKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.coefficients.nrows()
    }

    /// `tr(Aᵀ X M Xᵀ A)`, the embedded squared discrepancy this matrix encodes.
    pub fn embedded_discrepancy(&self, x: &DMatrix<T>, a: &DMatrix<T>) -> T {
        let z = a.transpose() * x;
        (&z * &self.coefficients * z.transpose()).trace()
    }

    /// Adds `e eᵀ` for the group contrast vector `e`.
    fn add_contrast(&mut self, positive: &[usize], negative: &[usize]) {
        if positive.is_empty() || negative.is_empty() {
            return;
        }
        let mut e = DVector::zeros(self.dim());
        let (p, q) = (T::from_count(positive.len()), T::from_count(negative.len()));
        for &i in positive {
            e[i] = T::one() / p;
        }
        for &j in negative {
            e[j] = -T::one() / q;
        }
        self.coefficients.ger(T::one(), &e, &e, T::one());
    }
}

/// Marginal term `M₀`.
pub fn build_marginal<T: Scalar>(n_source: usize, n_target: usize) -> Result<MmdMatrix<T>> {
    if n_source == 0 || n_target == 0 {
        return Err(Error::validation("marginal MMD needs at least one source and one target sample"));
    }
    let source: Vec<usize> = (0..n_source).collect();
    let target: Vec<usize> = (n_source..n_source + n_target).collect();
    let mut m = MmdMatrix::zeros(n_source + n_target, MmdKind::Marginal);
    m.add_contrast(&source, &target);
    Ok(m)
}

/// Conditional term `M_c` for one class. Zero when either sub-domain is empty.
pub fn build_conditional<T: Scalar>(idx: &SubdomainIndex, class: usize) -> Result<MmdMatrix<T>> {
    if class >= idx.num_classes() {
        return Err(Error::validation(format!(
            "class {} outside 1..{}",
            class + 1,
            idx.num_classes()
        )));
    }
    let mut m = MmdMatrix::zeros(idx.dim(), MmdKind::Conditional(class));
    m.add_contrast(idx.source_members(class), idx.target_members(class));
    Ok(m)
}

/// All conditional terms, one per class.
pub fn build_conditionals<T: Scalar>(idx: &SubdomainIndex) -> Vec<MmdMatrix<T>> {
    (0..idx.num_classes())
        .map(|c| build_conditional(idx, c).expect("class in range"))
        .collect()
}

fn pooled_complement(groups: impl Fn(usize) -> Vec<usize>, num_classes: usize, class: usize) -> Vec<usize> {
    (0..num_classes).filter(|&r| r != class).flat_map(groups).collect()
}

/// `M_{S→T}`: each source class against the pooled target samples whose
/// pseudo-label differs.
pub fn build_repulsive_source_to_target<T: Scalar>(idx: &SubdomainIndex) -> MmdMatrix<T> {
    let mut m = MmdMatrix::zeros(idx.dim(), MmdKind::RepulsiveSourceToTarget);
    let c_count = idx.num_classes();
    for c in 0..c_count {
        let others = pooled_complement(|r| idx.target_members(r).to_vec(), c_count, c);
        m.add_contrast(idx.source_members(c), &others);
    }
    m
}

/// `M_{T→S}`: each target pseudo-class against the pooled source samples
/// with a different label.
pub fn build_repulsive_target_to_source<T: Scalar>(idx: &SubdomainIndex) -> MmdMatrix<T> {
    let mut m = MmdMatrix::zeros(idx.dim(), MmdKind::RepulsiveTargetToSource);
    let c_count = idx.num_classes();
    for c in 0..c_count {
        let others = pooled_complement(|r| idx.source_members(r).to_vec(), c_count, c);
        m.add_contrast(idx.target_members(c), &others);
    }
    m
}

/// Repulsive-force matrix `M_ĉ = M_{S→T} + M_{T→S}`.
pub fn build_repulsive<T: Scalar>(idx: &SubdomainIndex) -> Result<MmdMatrix<T>> {
    let s2t = build_repulsive_source_to_target::<T>(idx);
    let t2s = build_repulsive_target_to_source::<T>(idx);
    Ok(MmdMatrix {
        coefficients: s2t.coefficients + t2s.coefficients,
        kind: MmdKind::RepulsiveTotal,
    })
}

/// Which terms enter the composite matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositeMode {
    /// `M₀`
    Tca,
    /// `M₀ + Σ M_c`
    Jda,
    /// `M₀ + Σ M_c − M_ĉ`
    Cdda,
}

/// Builds `M_cyd` for sub-problem (a).
///
/// With `frobenius_normalize`, every conditional and the repulsive matrix are
/// divided by their own Frobenius norm before summation (ablation only).
pub fn assemble_composite<T: Scalar>(
    marginal: &MmdMatrix<T>,
    conditionals: &[MmdMatrix<T>],
    repulsive: Option<&MmdMatrix<T>>,
    mode: CompositeMode,
    frobenius_normalize: bool,
) -> Result<MmdMatrix<T>> {
    let dim = marginal.dim();
    let check = |m: &MmdMatrix<T>| {
        if m.dim() == dim {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "MMD matrix dimension {} does not match marginal dimension {dim}",
                m.dim()
            )))
        }
    };
    let scaled = |m: &MmdMatrix<T>| {
        let norm = m.coefficients.norm();
        if frobenius_normalize && norm > T::zero() {
            &m.coefficients / norm
        } else {
            m.coefficients.clone()
        }
    };

    let mut total = marginal.coefficients.clone();
    if mode != CompositeMode::Tca {
        for m in conditionals {
            check(m)?;
            total += scaled(m);
        }
    }
    if mode == CompositeMode::Cdda {
        let rep = repulsive.ok_or_else(|| Error::validation("cdda composite needs the repulsive matrix"))?;
        check(rep)?;
        total -= scaled(rep);
    }
    Ok(MmdMatrix {
        coefficients: total,
        kind: MmdKind::Composite,
    })
}

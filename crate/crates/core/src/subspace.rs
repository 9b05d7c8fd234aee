//! Projection learning: centering, PCA, kernel Gram matrices and the
//! symmetric-definite generalized eigenproblem behind every adaptation step.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::pairwise_sq_distances;
use crate::mmd::MmdMatrix;
use crate::scalar::Scalar;

/// Relative size of the ridge added to the right-hand matrix of the pencil.
/// Raised to `100 ε` for scalar types where that is larger.
pub const PENCIL_RIDGE: f64 = 1e-9;

/// `H = I − (1/n) 11ᵀ`, applied implicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CenteringMatrix {
    n: usize,
}

impl CenteringMatrix {
    pub fn new(n: usize) -> Self {
        CenteringMatrix { n }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `X H`: subtracts each row's mean.
    pub fn apply<T: Scalar>(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.ncols(), self.n, "centering dimension mismatch");
        let n = T::from_count(self.n);
        let mut out = x.clone();
        for mut row in out.row_iter_mut() {
            let mean = row.sum() / n;
            row.add_scalar_mut(-mean);
        }
        out
    }

    pub fn to_dense<T: Scalar>(&self) -> DMatrix<T> {
        let off = -T::one() / T::from_count(self.n);
        let mut h = DMatrix::from_element(self.n, self.n, off);
        for i in 0..self.n {
            h[(i, i)] += T::one();
        }
        h
    }
}

/// Kernel used to map data into a Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    /// `exp(−γ‖x − y‖²)`
    Rbf { gamma: f64 },
    /// `(xᵀy + coef)^degree`
    Polynomial { degree: u32, coef: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma > 0.0) => {
                Err(Error::validation(format!("rbf gamma must be positive, got {gamma}")))
            }
            KernelSpec::Polynomial { degree: 0, .. } => Err(Error::validation("polynomial degree must be at least 1")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Rbf { gamma } => write!(f, "rbf:{gamma}"),
            KernelSpec::Polynomial { degree, coef } => write!(f, "poly:{degree}:{coef}"),
        }
    }
}

/// Parses `linear`, `rbf:<gamma>` or `poly:<degree>[:<coef>]`.
impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("cannot parse kernel '{s}'"));
        let mut parts = s.split(':');
        let spec = match parts.next() {
            Some("linear") => KernelSpec::Linear,
            Some("rbf") => KernelSpec::Rbf {
                gamma: parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?,
            },
            Some("poly") | Some("polynomial") => KernelSpec::Polynomial {
                degree: parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?,
                coef: parts.next().map_or(Ok(1.0), |c| c.parse().map_err(|_| bad()))?,
            },
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// `K_ij = κ(x_i, x_j)` over the columns of `x`.
pub fn gram_matrix<T: Scalar>(x: &DMatrix<T>, spec: KernelSpec) -> Result<DMatrix<T>> {
    spec.validate()?;
    Ok(match spec {
        KernelSpec::Linear => x.transpose() * x,
        KernelSpec::Rbf { gamma } => {
            let g = -T::lit(gamma);
            pairwise_sq_distances(x).map(|d| (g * d).exp())
        }
        KernelSpec::Polynomial { degree, coef } => {
            let c = T::lit(coef);
            (x.transpose() * x).map(|v| (v + c).powi(degree as i32))
        }
    })
}

/// Learned projection with its embedding of the data it was fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult<T: Scalar> {
    /// `m × k` (linear) or `n × k` (kernel).
    pub adaptation: DMatrix<T>,
    /// Ascending for adaptation solves; descending (variance order) for PCA.
    pub eigenvalues: Vec<T>,
    /// `k × n`
    pub embedding: DMatrix<T>,
}

impl<T: Scalar> ProjectionResult<T> {
    pub fn dim(&self) -> usize {
        self.adaptation.ncols()
    }
}

/// Flips each column so its largest-magnitude entry (first on ties) is positive.
fn fix_signs<T: Scalar>(v: &mut DMatrix<T>) {
    for mut col in v.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if !col.is_empty() && col[best] < T::zero() {
            col.neg_mut();
        }
    }
}

fn symmetrize<T: Scalar>(m: &mut DMatrix<T>) {
    let half = T::lit(0.5);
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn eigen<T: Scalar>(m: DMatrix<T>) -> Result<SymmetricEigen<T, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m, T::default_epsilon(), 0)
        .ok_or_else(|| Error::numerical("symmetric eigensolver did not converge"))
}

/// Eigenvector column indices ordered by eigenvalue (ties by index).
fn order_by<T: Scalar>(values: &[T], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = values[a].partial_cmp(&values[b]).expect("finite eigenvalues");
        if descending { ord.reverse() } else { ord }.then(a.cmp(&b))
    });
    idx
}

/// PCA: top-`k` eigenvectors of `X H Xᵀ`, embedding `Z = AᵀX`.
pub fn pca_embed<T: Scalar>(x: &DMatrix<T>, k: usize) -> Result<ProjectionResult<T>> {
    let (m, n) = x.shape();
    if k == 0 || k > m.min(n) {
        return Err(Error::validation(format!("PCA dimension {k} outside 1..{}", m.min(n))));
    }
    let xc = CenteringMatrix::new(n).apply(x);
    let mut scatter = &xc * xc.transpose();
    symmetrize(&mut scatter);
    let eig = eigen(scatter)?;
    let order = order_by(eig.eigenvalues.as_slice(), true);
    let mut a = eig.eigenvectors.select_columns(&order[..k]);
    fix_signs(&mut a);
    let eigenvalues = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let embedding = a.transpose() * x;
    Ok(ProjectionResult {
        adaptation: a,
        eigenvalues,
        embedding,
    })
}

/// Eigenpairs of the symmetric-definite pencil `S₁ a = φ S₂ a`.
#[derive(Debug, Clone)]
pub struct PencilSolution<T: Scalar> {
    /// `k` smallest eigenvalues, ascending.
    pub eigenvalues: Vec<T>,
    /// Matching eigenvectors, normalized so `AᵀS₂A = I`.
    pub eigenvectors: DMatrix<T>,
}

/// Solves `S₁ A = S₂ A Φ` for the `k` algebraically smallest eigenpairs by
/// Cholesky reduction `S₂ = L Lᵀ` to the standard problem `L⁻¹ S₁ L⁻ᵀ`.
///
/// `S₁` must be symmetric and `S₂` symmetric positive definite.
pub fn solve_symmetric_pencil<T: Scalar>(s1: &DMatrix<T>, s2: &DMatrix<T>, k: usize) -> Result<PencilSolution<T>> {
    let d = s1.nrows();
    if s1.shape() != (d, d) || s2.shape() != (d, d) {
        return Err(Error::validation("pencil matrices must be square and of equal size"));
    }
    if k == 0 || k > d {
        return Err(Error::validation(format!("requested {k} eigenpairs from a pencil of size {d}")));
    }
    let chol = s2.clone().cholesky().ok_or_else(|| {
        let diag = s2.diagonal();
        Error::numerical(format!(
            "right-hand pencil matrix is not positive definite (diagonal range {:.3e}..{:.3e})",
            diag.min().as_f64(),
            diag.max().as_f64()
        ))
    })?;
    let l = chol.l();
    let half = l
        .solve_lower_triangular(s1)
        .ok_or_else(|| Error::numerical("triangular solve failed in pencil reduction"))?;
    let mut reduced = l
        .solve_lower_triangular(&half.transpose())
        .ok_or_else(|| Error::numerical("triangular solve failed in pencil reduction"))?;
    symmetrize(&mut reduced);
    let eig = eigen(reduced)?;
    let order = order_by(eig.eigenvalues.as_slice(), false);
    let v = eig.eigenvectors.select_columns(&order[..k]);
    let mut a = l
        .transpose()
        .solve_upper_triangular(&v)
        .ok_or_else(|| Error::numerical("back substitution failed in pencil reduction"))?;
    fix_signs(&mut a);
    Ok(PencilSolution {
        eigenvalues: order[..k].iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors: a,
    })
}

/// The two pencil matrices for data `B` (features × samples, or a Gram matrix).
///
/// Returns `(B M Bᵀ + λI, B H Bᵀ + εI)` with `ε = 1e-9·tr(BHBᵀ)/d` (see
/// [`PENCIL_RIDGE`]).
pub fn projection_pencil<T: Scalar>(b: &DMatrix<T>, m: &DMatrix<T>, lambda: f64) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let (d, n) = b.shape();
    if m.shape() != (n, n) {
        return Err(Error::validation(format!(
            "MMD matrix is {}x{} but data has {n} samples",
            m.nrows(),
            m.ncols()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::validation(format!("lambda must be nonnegative, got {lambda}")));
    }
    let mut s1 = (b * m) * b.transpose();
    symmetrize(&mut s1);
    let ridge = T::lit(lambda);
    for i in 0..d {
        s1[(i, i)] += ridge;
    }

    let bc = CenteringMatrix::new(n).apply(b);
    let mut s2 = &bc * bc.transpose();
    symmetrize(&mut s2);
    let trace = s2.trace();
    if !(trace > T::zero()) {
        return Err(Error::numerical("data has zero variance; the projection constraint is degenerate"));
    }
    let relative = T::lit(PENCIL_RIDGE).max(T::lit(100.0) * T::epsilon());
    let eps = relative * trace / T::from_count(d);
    for i in 0..d {
        s2[(i, i)] += eps;
    }
    Ok((s1, s2))
}

/// Solves `(B M Bᵀ + λI) A = (B H Bᵀ) A Φ` for the `k` smallest eigenpairs and
/// embeds `Z = AᵀB`.
pub fn solve_projection<T: Scalar>(
    b: &DMatrix<T>,
    m: &MmdMatrix<T>,
    lambda: f64,
    k: usize,
) -> Result<ProjectionResult<T>> {
    let (s1, s2) = projection_pencil(b, m.coefficients(), lambda)?;
    let sol = solve_symmetric_pencil(&s1, &s2, k)?;
    let embedding = sol.eigenvectors.transpose() * b;
    Ok(ProjectionResult {
        adaptation: sol.eigenvectors,
        eigenvalues: sol.eigenvalues,
        embedding,
    })
}

/// `Z = AᵀB`.
pub fn project<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    if a.nrows() != b.nrows() {
        return Err(Error::validation(format!(
            "projection has {} rows but data has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    Ok(a.transpose() * b)
}

//! Slow, obviously-correct reference computations for tests.
//!
//! Everything here works on plain `Vec<Vec<f64>>` with explicit loops and
//! shares no code path with `uda-core`: a cyclic Jacobi eigensolver instead of
//! tridiagonal QR, Gauss-Jordan inversion instead of Cholesky, and direct
//! mean-difference norms instead of coefficient matrices.

use nalgebra::DMatrix;

/// Row-major dense matrix.
pub type Dense = Vec<Vec<f64>>;

pub fn from_na(m: &DMatrix<f64>) -> Dense {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn to_na(m: &Dense) -> DMatrix<f64> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows, cols, |i, j| m[i][j])
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, inner, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..inner {
            let aik = a[i][k];
            for j in 0..p {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    let (n, m) = (a.len(), a[0].len());
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn frobenius(a: &Dense) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns ascending eigenvalues and the matching eigenvectors as columns.
pub fn jacobi_eigen(a: &Dense) -> (Vec<f64>, Dense) {
    let n = a.len();
    let mut a = a.clone();
    let mut v = identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    (values, vectors)
}

/// Ascending eigenvalues of the pencil `(s1, s2)` with `s2` SPD, via the
/// symmetric square root `s2^{-1/2} s1 s2^{-1/2}`.
pub fn pencil_eigenvalues(s1: &Dense, s2: &Dense) -> Vec<f64> {
    let n = s2.len();
    let (d, q) = jacobi_eigen(s2);
    assert!(d.iter().all(|&x| x > 0.0), "right-hand matrix must be SPD");
    let mut inv_sqrt = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            inv_sqrt[i][j] = (0..n).map(|k| q[i][k] * q[j][k] / d[k].sqrt()).sum();
        }
    }
    let c = matmul(&matmul(&inv_sqrt, s1), &inv_sqrt);
    jacobi_eigen(&c).0
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &Dense) -> Dense {
    let n = a.len();
    let mut m: Dense = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].abs().partial_cmp(&m[y][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        assert!(p.abs() > 1e-300, "singular matrix");
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Columns of `z` (rows = dimensions) listed in `members`, averaged.
fn column_mean(z: &Dense, members: &[usize]) -> Vec<f64> {
    let k = z.len();
    let mut mean = vec![0.0; k];
    for &j in members {
        for d in 0..k {
            mean[d] += z[d][j];
        }
    }
    for v in &mut mean {
        *v /= members.len() as f64;
    }
    mean
}

/// `‖mean(z[:, p]) − mean(z[:, q])‖²`; zero if either group is empty.
pub fn mean_gap_sq(z: &Dense, p: &[usize], q: &[usize]) -> f64 {
    if p.is_empty() || q.is_empty() {
        return 0.0;
    }
    let (a, b) = (column_mean(z, p), column_mean(z, q));
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Direct marginal discrepancy of the embedding `z` (`k × (ns+nt)`).
pub fn marginal_distance(z: &Dense, ns: usize, nt: usize) -> f64 {
    let s: Vec<usize> = (0..ns).collect();
    let t: Vec<usize> = (ns..ns + nt).collect();
    mean_gap_sq(z, &s, &t)
}

fn members(labels: &[usize], class: usize, offset: usize) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == class)
        .map(|(i, _)| i + offset)
        .collect()
}

fn members_not(labels: &[usize], class: usize, offset: usize) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != class)
        .map(|(i, _)| i + offset)
        .collect()
}

/// Direct conditional discrepancy for one class.
pub fn conditional_distance(z: &Dense, source: &[usize], target: &[usize], class: usize) -> f64 {
    let ns = source.len();
    mean_gap_sq(z, &members(source, class, 0), &members(target, class, ns))
}

/// Direct source→target repulsive distance: each source class against the
/// pooled target samples of all other (pseudo-)classes.
pub fn repulsive_s2t_distance(z: &Dense, source: &[usize], target: &[usize], classes: usize) -> f64 {
    let ns = source.len();
    (0..classes)
        .map(|c| mean_gap_sq(z, &members(source, c, 0), &members_not(target, c, ns)))
        .sum()
}

/// Direct target→source repulsive distance.
pub fn repulsive_t2s_distance(z: &Dense, source: &[usize], target: &[usize], classes: usize) -> f64 {
    let ns = source.len();
    (0..classes)
        .map(|c| mean_gap_sq(z, &members(target, c, ns), &members_not(source, c, 0)))
        .sum()
}

/// Median of the pairwise Euclidean distances between columns of `z`.
pub fn median_pairwise_distance(z: &Dense) -> f64 {
    let n = z[0].len();
    let mut d = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            d.push(z.iter().map(|row| (row[a] - row[b]).powi(2)).sum::<f64>().sqrt());
        }
    }
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let m = d.len();
    if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    }
}

/// `½ Σ_ij w_ij ‖y_i/√d_i − y_j/√d_j‖²` (rows of `y` are nodes).
pub fn laplacian_double_sum(w: &Dense, y: &Dense) -> f64 {
    let n = w.len();
    let d: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let gap: f64 = (0..y[0].len())
                .map(|c| (y[i][c] / d[i].sqrt() - y[j][c] / d[j].sqrt()).powi(2))
                .sum();
            total += w[i][j] * gap;
        }
    }
    0.5 * total
}

/// 1-NN over columns with ties to the lowest source index.
pub fn nearest_neighbour(zs: &Dense, labels: &[usize], zt: &Dense) -> Vec<usize> {
    let (ns, nt) = (zs[0].len(), zt[0].len());
    (0..nt)
        .map(|j| {
            let mut best = (f64::INFINITY, 0);
            for i in 0..ns {
                let d: f64 = zs.iter().zip(zt).map(|(a, b)| (a[i] - b[j]).powi(2)).sum();
                if d < best.0 {
                    best = (d, i);
                }
            }
            labels[best.1]
        })
        .collect()
}

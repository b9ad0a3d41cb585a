//! ZCA whitening of the N x 4 capability values and the rank transform
//! that restores the [0,1] range for the scheduler.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::metrics::registry::DIMENSIONS;

pub const DEFAULT_EPSILON: f64 = 1e-6;

type Mat4 = [[f64; DIMENSIONS]; DIMENSIONS];

/// Symmetric whitening transform fitted on a score matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiteningModel {
    pub mean: [f64; DIMENSIONS],
    /// Symmetric 4x4 matrix mapping centered rows to whitened rows.
    pub transform: Mat4,
    pub epsilon: f64,
}

/// Fits the symmetric (zero-phase) whitening transform
/// U diag(1/sqrt(lambda_reg)) U^T from the eigendecomposition of the
/// sample covariance, with eigenvalues floored at epsilon so that
/// rank-deficient directions stay bounded instead of exploding.
pub fn fit_zca(raw: &[[f64; DIMENSIONS]], epsilon: f64) -> Result<WhiteningModel> {
    if raw.len() < 5 {
        return Err(CoreError::TooFewSamples { need: 5, have: raw.len() });
    }
    if epsilon <= 0.0 {
        return Err(CoreError::InvalidConfig("epsilon must be positive".into()));
    }
    let n = raw.len() as f64;
    let mut mean = [0.0; DIMENSIONS];
    for row in raw {
        for d in 0..DIMENSIONS {
            mean[d] += row[d];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = [[0.0; DIMENSIONS]; DIMENSIONS];
    for row in raw {
        for i in 0..DIMENSIONS {
            for j in 0..DIMENSIONS {
                cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]);
            }
        }
    }
    for r in &mut cov {
        for v in r.iter_mut() {
            *v /= n - 1.0;
        }
    }
    if cov.iter().enumerate().all(|(i, r)| r[i].abs() < f64::EPSILON) {
        return Err(CoreError::RankDeficient("all columns constant".into()));
    }

    let (eigenvalues, vectors) = jacobi_eigen(&cov);
    let mut transform = [[0.0; DIMENSIONS]; DIMENSIONS];
    for i in 0..DIMENSIONS {
        for j in 0..DIMENSIONS {
            let mut sum = 0.0;
            for k in 0..DIMENSIONS {
                let lambda = eigenvalues[k].max(epsilon);
                sum += vectors[i][k] * vectors[j][k] / lambda.sqrt();
            }
            transform[i][j] = sum;
        }
    }
    // kill the last floating-point asymmetry
    for i in 0..DIMENSIONS {
        for j in (i + 1)..DIMENSIONS {
            let s = 0.5 * (transform[i][j] + transform[j][i]);
            transform[i][j] = s;
            transform[j][i] = s;
        }
    }
    Ok(WhiteningModel { mean, transform, epsilon })
}

/// Maps rows by (x - mean) * transform.
pub fn whiten(raw: &[[f64; DIMENSIONS]], model: &WhiteningModel) -> Vec<[f64; DIMENSIONS]> {
    raw.iter()
        .map(|row| {
            let mut out = [0.0; DIMENSIONS];
            for j in 0..DIMENSIONS {
                let mut sum = 0.0;
                for i in 0..DIMENSIONS {
                    sum += (row[i] - model.mean[i]) * model.transform[i][j];
                }
                out[j] = sum;
            }
            out
        })
        .collect()
}

/// Per-column mid-rank transform to [0,1]: value k of N (1-based rank)
/// maps to (2k-1)/(2N); ties share their group's mean rank. Preserves each
/// column's ordering and never emits exactly 0 or 1.
pub fn rank_rescale(rows: &[[f64; DIMENSIONS]]) -> Vec<[f64; DIMENSIONS]> {
    let n = rows.len();
    let mut out = vec![[0.0; DIMENSIONS]; n];
    for d in 0..DIMENSIONS {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            rows[a][d].partial_cmp(&rows[b][d]).expect("finite whitened values")
        });
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && rows[order[j + 1]][d] == rows[order[i]][d] {
                j += 1;
            }
            // 1-based positions i+1 ..= j+1 share the mean rank
            let rank = (i + 1 + j + 1) as f64 / 2.0;
            let value = (2.0 * rank - 1.0) / (2.0 * n as f64);
            for &idx in &order[i..=j] {
                out[idx][d] = value;
            }
            i = j + 1;
        }
    }
    out
}

/// Cyclic Jacobi eigendecomposition of a symmetric 4x4 matrix. Returns
/// (eigenvalues, eigenvectors as columns).
fn jacobi_eigen(matrix: &Mat4) -> ([f64; DIMENSIONS], Mat4) {
    let mut a = *matrix;
    let mut v = [[0.0; DIMENSIONS]; DIMENSIONS];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..DIMENSIONS {
            for j in (i + 1)..DIMENSIONS {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..DIMENSIONS {
            for q in (p + 1)..DIMENSIONS {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..DIMENSIONS {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..DIMENSIONS {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..DIMENSIONS {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut eigenvalues = [0.0; DIMENSIONS];
    for i in 0..DIMENSIONS {
        eigenvalues[i] = a[i][i];
    }
    (eigenvalues, v)
}

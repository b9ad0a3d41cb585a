//! Plot-ready report tables: the value-bin x performance-level
//! distribution and the before/after-whitening correlation matrices.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::assessment::{f_logits, PerformanceRecord};
use crate::error::{CoreError, Result};
use crate::metrics::registry::DIMENSIONS;
use crate::valuation::{pearson, ScoreMatrix, ValueView};

pub const VALUE_BINS: usize = 5;
pub const PERF_LEVELS: usize = 5;

/// Per dimension: five value bins ([0,0.2) .. [0.8,1.0]) crossed with five
/// performance levels of min-max-normalized F_logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    /// frequencies[dim][value_bin][perf_level]; each non-empty value bin's
    /// level frequencies sum to 1.
    pub frequencies: [[[f64; PERF_LEVELS]; VALUE_BINS]; DIMENSIONS],
    /// Sample count per value bin.
    pub counts: [[usize; VALUE_BINS]; DIMENSIONS],
    /// Mean F_logits per value bin (0 when empty).
    pub mean_f: [[f64; VALUE_BINS]; DIMENSIONS],
    /// Standard deviation of F_logits per value bin (population, 0 when empty).
    pub sd_f: [[f64; VALUE_BINS]; DIMENSIONS],
}

fn bin_of(value: f64) -> usize {
    debug_assert!((0.0..=1.0).contains(&value));
    ((value * VALUE_BINS as f64) as usize).min(VALUE_BINS - 1)
}

/// Bins samples by capability value and tallies the distribution of
/// normalized F_logits within each bin, plus per-bin mean and deviation.
pub fn report_distribution(
    scores: &ScoreMatrix,
    perf: &[PerformanceRecord],
    view: ValueView,
) -> Result<DistributionReport> {
    let by_id: HashMap<&str, &PerformanceRecord> =
        perf.iter().map(|r| (r.sample_id.as_str(), r)).collect();
    let mut rows: Vec<(usize, f64)> = Vec::new(); // (row index, f_logits)
    for (i, id) in scores.sample_ids().iter().enumerate() {
        if let Some(rec) = by_id.get(id.as_str()) {
            rows.push((i, f_logits(rec)?));
        }
    }
    if rows.is_empty() {
        return Err(CoreError::EmptyInput("no ids shared by scores and perf".into()));
    }
    let f_min = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let f_max = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let level_of = |f: f64| -> usize {
        if f_max == f_min {
            PERF_LEVELS / 2
        } else {
            bin_of((f - f_min) / (f_max - f_min))
        }
    };

    let values = scores.view(view)?;
    let mut report = DistributionReport {
        frequencies: [[[0.0; PERF_LEVELS]; VALUE_BINS]; DIMENSIONS],
        counts: [[0; VALUE_BINS]; DIMENSIONS],
        mean_f: [[0.0; VALUE_BINS]; DIMENSIONS],
        sd_f: [[0.0; VALUE_BINS]; DIMENSIONS],
    };
    for dim in 0..DIMENSIONS {
        let mut sums = [0.0; VALUE_BINS];
        let mut sq_sums = [0.0; VALUE_BINS];
        for &(i, f) in &rows {
            let bin = bin_of(values[i][dim]);
            report.frequencies[dim][bin][level_of(f)] += 1.0;
            report.counts[dim][bin] += 1;
            sums[bin] += f;
            sq_sums[bin] += f * f;
        }
        for bin in 0..VALUE_BINS {
            let n = report.counts[dim][bin];
            if n > 0 {
                for level in 0..PERF_LEVELS {
                    report.frequencies[dim][bin][level] /= n as f64;
                }
                let mean = sums[bin] / n as f64;
                report.mean_f[dim][bin] = mean;
                report.sd_f[dim][bin] = (sq_sums[bin] / n as f64 - mean * mean).max(0.0).sqrt();
            }
        }
    }
    Ok(report)
}

pub type CorrelationMatrix = [[f64; DIMENSIONS]; DIMENSIONS];

/// Pairwise Pearson matrices of the capability values before and after
/// whitening. Requires the whitened view.
pub fn report_correlation(
    scores: &ScoreMatrix,
) -> Result<(CorrelationMatrix, CorrelationMatrix)> {
    let whitened = scores
        .whitened()
        .ok_or_else(|| CoreError::InvalidConfig("whitened view not populated".into()))?;
    let before = correlation_matrix(scores.raw())?;
    let after = correlation_matrix(whitened)?;
    Ok((before, after))
}

fn correlation_matrix(rows: &[[f64; DIMENSIONS]]) -> Result<CorrelationMatrix> {
    let mut out = [[1.0; DIMENSIONS]; DIMENSIONS];
    for i in 0..DIMENSIONS {
        for j in (i + 1)..DIMENSIONS {
            let x: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            let y: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let (r, _) = pearson(&x, &y)?;
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    Ok(out)
}

/// Renders a correlation matrix as comma-separated lines.
pub fn matrix_to_csv(matrix: &CorrelationMatrix) -> String {
    let mut out = String::from("dim,v1,v2,v3,v4\n");
    for (i, row) in matrix.iter().enumerate() {
        out.push_str(&format!(
            "v{},{:.6},{:.6},{:.6},{:.6}\n",
            i + 1,
            row[0],
            row[1],
            row[2],
            row[3]
        ));
    }
    out
}

/// Renders the distribution report as comma-separated lines.
pub fn distribution_to_csv(report: &DistributionReport) -> String {
    let mut out = String::from(
        "dim,value_bin,count,mean_f,sd_f,level1,level2,level3,level4,level5\n",
    );
    for dim in 0..DIMENSIONS {
        for bin in 0..VALUE_BINS {
            let f = &report.frequencies[dim][bin];
            out.push_str(&format!(
                "v{},{},{},{:.6},{:.6},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
                dim + 1,
                bin,
                report.counts[dim][bin],
                report.mean_f[dim][bin],
                report.sd_f[dim][bin],
                f[0],
                f[1],
                f[2],
                f[3],
                f[4]
            ));
        }
    }
    out
}

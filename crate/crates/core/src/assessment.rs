//! The performance measurer: converts logged model outcomes into
//! confidence-scaled scores and quantifies per-dimension capability
//! levels at a training stage.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Style;
use crate::error::{CoreError, Result};
use crate::metrics::registry::DIMENSIONS;
use crate::valuation::{partial_correlation, ScoreMatrix, ValueView};

/// Confidence floor applied before taking logarithms; keeps ln positive
/// and monotone for logged values at or below 1.
pub const CONFIDENCE_FLOOR: f64 = 1.0 + 1e-6;

/// One logged model outcome. `f_logits` is always derived here; a
/// precomputed value on disk is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub sample_id: String,
    /// F1 for extractive samples, accuracy in {0,1} for multiple choice.
    pub f1: f64,
    pub style: Style,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slog: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elog: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candlog: Option<f64>,
}

impl PerformanceRecord {
    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.f1) {
            return Err(CoreError::Malformed(format!(
                "sample {}: f1 {} outside [0,1]",
                self.sample_id, self.f1
            )));
        }
        Ok(())
    }
}

/// Confidence-scaled performance: F1 * ln(slog) * ln(elog) for answer
/// extraction, F1 * ln(candlog) for multiple choice. Confidences are
/// clamped to a floor just above 1 before the logarithm.
pub fn f_logits(record: &PerformanceRecord) -> Result<f64> {
    record.check()?;
    let ln_clamped = |value: f64, field: &'static str| -> Result<f64> {
        if !value.is_finite() {
            return Err(CoreError::Malformed(format!(
                "sample {}: non-finite {field}",
                record.sample_id
            )));
        }
        let ln = value.max(CONFIDENCE_FLOOR).ln();
        if ln <= 0.0 {
            return Err(CoreError::Malformed(format!(
                "sample {}: non-positive log of {field}",
                record.sample_id
            )));
        }
        Ok(ln)
    };
    match record.style {
        Style::Extractive => {
            let slog = record.slog.ok_or(CoreError::MissingConfidence {
                field: "slog",
                style: "extractive".into(),
            })?;
            let elog = record.elog.ok_or(CoreError::MissingConfidence {
                field: "elog",
                style: "extractive".into(),
            })?;
            Ok(record.f1 * ln_clamped(slog, "slog")? * ln_clamped(elog, "elog")?)
        }
        Style::MultipleChoice => {
            let candlog = record.candlog.ok_or(CoreError::MissingConfidence {
                field: "candlog",
                style: "multiple_choice".into(),
            })?;
            Ok(record.f1 * ln_clamped(candlog, "candlog")?)
        }
    }
}

/// The model's measured state on one training stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityState {
    pub stage: u32,
    /// Capability level per dimension: weight * top-k mean F_logits.
    pub c: [f64; DIMENSIONS],
    /// Partial correlation of each dimension with F_logits.
    pub rho: [f64; DIMENSIONS],
    /// Mean F_logits over each dimension's top-k subset.
    pub topk_mean_f: [f64; DIMENSIONS],
    pub k: usize,
}

/// Ids of the k samples with the largest value in `dim` of the given
/// view; ties broken by ascending sample id so repeated calls agree.
pub fn topk_subset(
    scores: &ScoreMatrix,
    view: ValueView,
    dim: usize,
    k: usize,
) -> Result<Vec<String>> {
    let values = scores.view(view)?;
    let n = values.len();
    if k > n {
        return Err(CoreError::KTooLarge { k, n });
    }
    let ids = scores.sample_ids();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[b][dim]
            .partial_cmp(&values[a][dim])
            .expect("finite scores")
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    Ok(order[..k].iter().map(|&i| ids[i].clone()).collect())
}

/// Measures the four capability levels from dev-split scores and logged
/// performance: c_i = (|rho_i| / sum_j |rho_j|) * mean F_logits over the
/// top-k subset of dimension i. The partial correlation is computed over
/// the full dev split.
pub fn measure_capabilities(
    dev_scores: &ScoreMatrix,
    dev_perf: &[PerformanceRecord],
    k: usize,
    stage: u32,
    view: ValueView,
) -> Result<CapabilityState> {
    let by_id: HashMap<&str, &PerformanceRecord> =
        dev_perf.iter().map(|r| (r.sample_id.as_str(), r)).collect();
    let missing: Vec<String> = dev_scores
        .sample_ids()
        .iter()
        .filter(|id| !by_id.contains_key(id.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(CoreError::MissingRecords(missing));
    }

    let f_by_id: HashMap<&str, f64> = dev_scores
        .sample_ids()
        .iter()
        .map(|id| f_logits(by_id[id.as_str()]).map(|f| (id.as_str(), f)))
        .collect::<Result<_>>()?;
    let f_vec: Vec<f64> =
        dev_scores.sample_ids().iter().map(|id| f_by_id[id.as_str()]).collect();

    let values = dev_scores.view(view)?;
    let mut topk_mean_f = [0.0; DIMENSIONS];
    let mut rho = [0.0; DIMENSIONS];
    for dim in 0..DIMENSIONS {
        let top = topk_subset(dev_scores, view, dim, k)?;
        topk_mean_f[dim] =
            top.iter().map(|id| f_by_id[id.as_str()]).sum::<f64>() / k as f64;
        rho[dim] = partial_correlation(values, &f_vec, dim)?;
    }
    let abs_sum: f64 = rho.iter().map(|r| r.abs()).sum();
    if abs_sum == 0.0 {
        return Err(CoreError::DegenerateMeasurement);
    }
    let mut c = [0.0; DIMENSIONS];
    for dim in 0..DIMENSIONS {
        c[dim] = rho[dim].abs() / abs_sum * topk_mean_f[dim];
    }
    Ok(CapabilityState { stage, c, rho, topk_mean_f, k })
}

/// Loads a performance log: one record per line.
pub fn load_performance(path: &Path) -> Result<Vec<PerformanceRecord>> {
    let file = std::fs::File::open(path).map_err(|e| CoreError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PerformanceRecord = serde_json::from_str(&line).map_err(|e| {
            CoreError::Malformed(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        rec.check()?;
        records.push(rec);
    }
    Ok(records)
}

pub fn save_performance(records: &[PerformanceRecord], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| {
        CoreError::Io { path: path.display().to_string(), source: e }
    })?);
    for rec in records {
        writeln!(out, "{}", serde_json::to_string(rec).expect("record serializes"))
            .map_err(|e| CoreError::Io { path: path.display().to_string(), source: e })?;
    }
    Ok(())
}

//! Empirical-CDF normalization of raw metrics and their aggregation into
//! per-dimension capability values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::metrics::registry::{MetricRegistry, Orientation, DIMENSIONS};
use crate::metrics::MetricVector;

/// Per-metric empirical distribution fitted on the training split; applied
/// unchanged everywhere else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationModel {
    distributions: BTreeMap<String, MetricDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MetricDistribution {
    /// Raw values sorted ascending.
    sorted: Vec<f64>,
    orientation: Orientation,
}

/// Stores the sorted empirical distribution of every metric column.
pub fn fit_normalizer(
    metric_columns: &BTreeMap<String, Vec<f64>>,
    registry: &MetricRegistry,
) -> Result<NormalizationModel> {
    let mut distributions = BTreeMap::new();
    for (metric, column) in metric_columns {
        if column.is_empty() {
            return Err(CoreError::EmptyInput(format!("metric column {metric}")));
        }
        if column.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite { metric: metric.clone() });
        }
        let orientation = registry
            .get(metric)
            .map(|m| m.orientation)
            .ok_or_else(|| CoreError::UnknownMetric(metric.clone()))?;
        let mut sorted = column.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        distributions.insert(metric.clone(), MetricDistribution { sorted, orientation });
    }
    Ok(NormalizationModel { distributions })
}

impl NormalizationModel {
    pub fn has(&self, metric: &str) -> bool {
        self.distributions.contains_key(metric)
    }

    pub fn metrics(&self) -> impl Iterator<Item = &str> {
        self.distributions.keys().map(|k| k.as_str())
    }
}

/// Mid-rank empirical CDF in [0,1], oriented so that harder maps higher.
/// Raw values outside the fitted range clamp to the distribution limits,
/// so the floor is 1/(2n) and the ceiling 1 - 1/(2n).
pub fn normalize(raw: f64, metric: &str, model: &NormalizationModel) -> Result<f64> {
    let dist = model
        .distributions
        .get(metric)
        .ok_or_else(|| CoreError::UnknownMetric(metric.to_string()))?;
    let xs = &dist.sorted;
    let n = xs.len() as f64;
    let x = raw.clamp(xs[0], xs[xs.len() - 1]);
    let less = xs.partition_point(|&v| v < x) as f64;
    let leq = xs.partition_point(|&v| v <= x) as f64;
    let cdf = (less + 0.5 * (leq - less)) / n;
    Ok(match dist.orientation {
        Orientation::HigherIsHarder => cdf,
        Orientation::LowerIsHarder => 1.0 - cdf,
    })
}

/// Mean of the normalized metrics per dimension: v_i = (1/n(i)) sum of the
/// dimension's normalized metrics. Metrics flagged incomplete are dropped
/// from their dimension's mean; a dimension losing every metric is an error.
pub fn capability_values(
    vec: &MetricVector,
    model: &NormalizationModel,
    registry: &MetricRegistry,
) -> Result<[f64; DIMENSIONS]> {
    let mut sums = [0.0; DIMENSIONS];
    let mut counts = [0usize; DIMENSIONS];
    for spec in registry.metrics() {
        if let Some(raw) = vec.get(&spec.id) {
            let v = normalize(raw, &spec.id, model)?;
            sums[spec.dim_idx()] += v;
            counts[spec.dim_idx()] += 1;
        }
    }
    let mut out = [0.0; DIMENSIONS];
    for dim in 0..DIMENSIONS {
        if counts[dim] == 0 {
            return Err(CoreError::EmptyDimension(dim + 1));
        }
        out[dim] = sums[dim] / counts[dim] as f64;
    }
    Ok(out)
}

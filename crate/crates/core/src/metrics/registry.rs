//! Metric registry: which metrics exist, which capability dimension each
//! one feeds, where its value comes from, and how difficulty is oriented.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub const DIMENSIONS: usize = 4;

/// Where a metric's value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSource {
    /// Computed here from the sample text.
    Native,
    /// Ingested from precomputed feature files.
    External,
    /// Copied from a corpus annotation field.
    DatasetField,
}

/// Whether a larger raw value means a harder sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherIsHarder,
    LowerIsHarder,
}

/// Which text a native metric scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    QuestionOnly,
    QuestionPlusContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub id: String,
    /// Capability dimension, 1-based (1..=4).
    pub dimension: u8,
    pub source: MetricSource,
    pub orientation: Orientation,
    pub scope: Scope,
}

impl MetricSpec {
    /// 0-based dimension index.
    pub fn dim_idx(&self) -> usize {
        (self.dimension - 1) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRegistry {
    metrics: Vec<MetricSpec>,
    by_id: BTreeMap<String, usize>,
}

impl MetricRegistry {
    pub fn new(metrics: Vec<MetricSpec>) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for (i, m) in metrics.iter().enumerate() {
            if m.dimension == 0 || m.dimension as usize > DIMENSIONS {
                return Err(CoreError::InvalidConfig(format!(
                    "metric {}: dimension {} out of range 1..=4",
                    m.id, m.dimension
                )));
            }
            if by_id.insert(m.id.clone(), i).is_some() {
                return Err(CoreError::InvalidConfig(format!(
                    "metric {} registered twice",
                    m.id
                )));
            }
        }
        Ok(Self { metrics, by_id })
    }

    pub fn metrics(&self) -> &[MetricSpec] {
        &self.metrics
    }

    pub fn get(&self, id: &str) -> Option<&MetricSpec> {
        self.by_id.get(id).map(|&i| &self.metrics[i])
    }

    /// Metrics registered for a 0-based dimension index, in registry order.
    pub fn for_dimension(&self, dim_idx: usize) -> impl Iterator<Item = &MetricSpec> {
        self.metrics.iter().filter(move |m| m.dim_idx() == dim_idx)
    }

    /// n(i): number of metrics registered for a 0-based dimension index.
    pub fn dimension_size(&self, dim_idx: usize) -> usize {
        self.for_dimension(dim_idx).count()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut metrics = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| CoreError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let spec: MetricSpec = serde_json::from_str(&line).map_err(|e| {
                CoreError::Malformed(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
            metrics.push(spec);
        }
        Self::new(metrics)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| {
            CoreError::Io { path: path.display().to_string(), source: e }
        })?);
        for m in &self.metrics {
            writeln!(out, "{}", serde_json::to_string(m).expect("spec serializes"))
                .map_err(|e| CoreError::Io { path: path.display().to_string(), source: e })?;
        }
        Ok(())
    }
}

impl Default for MetricRegistry {
    /// The stock registry. All native metrics score question+context,
    /// which is the convention that reproduces the reference values on
    /// the golden HotpotQA samples; overlap metrics (bleu_n, bertscore,
    /// moverscore, ls_score) orient lower-is-harder.
    fn default() -> Self {
        use MetricSource::*;
        use Orientation::*;
        let spec = |id: &str, dimension: u8, source, orientation| MetricSpec {
            id: id.to_string(),
            dimension,
            source,
            orientation,
            scope: Scope::QuestionPlusContext,
        };
        Self::new(vec![
            // c1: reading words
            spec("intra1", 1, Native, HigherIsHarder),
            spec("ent1", 1, Native, HigherIsHarder),
            spec("ntopwords", 1, Native, HigherIsHarder),
            // c2: reading sentences
            spec("tree_height", 2, External, HigherIsHarder),
            spec("tree_width", 2, External, HigherIsHarder),
            spec("flesch_kincaid", 2, Native, HigherIsHarder),
            spec("ari", 2, Native, HigherIsHarder),
            // c3: understanding words
            spec("nnums", 3, Native, HigherIsHarder),
            spec("nlogicals", 3, Native, HigherIsHarder),
            // c4: understanding sentences
            spec("bleu_n", 4, Native, LowerIsHarder),
            spec("bertscore", 4, External, LowerIsHarder),
            spec("moverscore", 4, External, LowerIsHarder),
            spec("ls_score", 4, External, LowerIsHarder),
            spec("ncoreferences", 4, Native, HigherIsHarder),
            spec("njunctions", 4, Native, HigherIsHarder),
            spec("ncausals", 4, Native, HigherIsHarder),
            spec("nspatialtemporals", 4, Native, HigherIsHarder),
            spec("nfacts", 4, DatasetField, HigherIsHarder),
        ])
        .expect("default registry is well-formed")
    }
}

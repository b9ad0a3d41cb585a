//! Normalized, aggregated, decorrelated capability-specific values, and
//! the correlation statistics used to analyze them.

mod normalize;
mod stats;
mod whiten;

pub use normalize::{capability_values, fit_normalizer, normalize, NormalizationModel};
pub use stats::{partial_correlation, partial_correlation_with_controls, pearson};
pub use whiten::{fit_zca, rank_rescale, whiten, WhiteningModel, DEFAULT_EPSILON};

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::metrics::registry::DIMENSIONS;

/// Which view of the score matrix an operation reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueView {
    Raw,
    Rescaled,
}

/// N x 4 capability-specific values over a corpus: the raw CDF-mean view,
/// plus optional whitened and rank-rescaled views. Row order never changes
/// after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    sample_ids: Vec<String>,
    raw: Vec<[f64; DIMENSIONS]>,
    whitened: Option<Vec<[f64; DIMENSIONS]>>,
    rescaled: Option<Vec<[f64; DIMENSIONS]>>,
}

/// One row of the on-disk score file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub sample_id: String,
    pub raw_v: [f64; DIMENSIONS],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub whitened_v: Option<[f64; DIMENSIONS]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescaled_v: Option<[f64; DIMENSIONS]>,
}

impl ScoreMatrix {
    pub fn new(sample_ids: Vec<String>, raw: Vec<[f64; DIMENSIONS]>) -> Result<Self> {
        if sample_ids.len() != raw.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} ids vs {} rows",
                sample_ids.len(),
                raw.len()
            )));
        }
        for (id, row) in sample_ids.iter().zip(&raw) {
            for v in row {
                if !(0.0..=1.0).contains(v) {
                    return Err(CoreError::Malformed(format!(
                        "raw value {v} out of [0,1] for sample {id}"
                    )));
                }
            }
        }
        Ok(Self { sample_ids, raw, whitened: None, rescaled: None })
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn raw(&self) -> &[[f64; DIMENSIONS]] {
        &self.raw
    }

    pub fn whitened(&self) -> Option<&[[f64; DIMENSIONS]]> {
        self.whitened.as_deref()
    }

    pub fn rescaled(&self) -> Option<&[[f64; DIMENSIONS]]> {
        self.rescaled.as_deref()
    }

    pub fn set_whitened(&mut self, rows: Vec<[f64; DIMENSIONS]>) -> Result<()> {
        if rows.len() != self.len() {
            return Err(CoreError::ShapeMismatch("whitened rows".into()));
        }
        self.whitened = Some(rows);
        Ok(())
    }

    pub fn set_rescaled(&mut self, rows: Vec<[f64; DIMENSIONS]>) -> Result<()> {
        if rows.len() != self.len() {
            return Err(CoreError::ShapeMismatch("rescaled rows".into()));
        }
        self.rescaled = Some(rows);
        Ok(())
    }

    /// Values in the requested view; errors if the view is not populated.
    pub fn view(&self, view: ValueView) -> Result<&[[f64; DIMENSIONS]]> {
        match view {
            ValueView::Raw => Ok(&self.raw),
            ValueView::Rescaled => self
                .rescaled
                .as_deref()
                .ok_or_else(|| CoreError::InvalidConfig("rescaled view not populated".into())),
        }
    }

    /// Column `dim` of the raw view.
    pub fn raw_column(&self, dim: usize) -> Vec<f64> {
        self.raw.iter().map(|r| r[dim]).collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut ids = Vec::new();
        let mut raw = Vec::new();
        let mut whitened = Vec::new();
        let mut rescaled = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| CoreError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ScoreRecord = serde_json::from_str(&line).map_err(|e| {
                CoreError::Malformed(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
            ids.push(rec.sample_id);
            raw.push(rec.raw_v);
            whitened.push(rec.whitened_v);
            rescaled.push(rec.rescaled_v);
        }
        let mut matrix = Self::new(ids, raw)?;
        if whitened.iter().all(|w| w.is_some()) && !whitened.is_empty() {
            matrix.set_whitened(whitened.into_iter().map(|w| w.unwrap()).collect())?;
        }
        if rescaled.iter().all(|r| r.is_some()) && !rescaled.is_empty() {
            matrix.set_rescaled(rescaled.into_iter().map(|r| r.unwrap()).collect())?;
        }
        Ok(matrix)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| {
            CoreError::Io { path: path.display().to_string(), source: e }
        })?);
        for i in 0..self.len() {
            let rec = ScoreRecord {
                sample_id: self.sample_ids[i].clone(),
                raw_v: self.raw[i],
                whitened_v: self.whitened.as_ref().map(|w| w[i]),
                rescaled_v: self.rescaled.as_ref().map(|r| r[i]),
            };
            writeln!(out, "{}", serde_json::to_string(&rec).expect("record serializes"))
                .map_err(|e| CoreError::Io { path: path.display().to_string(), source: e })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_raw() {
        let err = ScoreMatrix::new(vec!["a".into()], vec![[1.5, 0.0, 0.0, 0.0]]);
        assert!(err.is_err());
    }

    #[test]
    fn view_errors_until_populated() {
        let m = ScoreMatrix::new(vec!["a".into()], vec![[0.1, 0.2, 0.3, 0.4]]).unwrap();
        assert!(m.view(ValueView::Rescaled).is_err());
        assert!(m.view(ValueView::Raw).is_ok());
    }

    #[test]
    fn save_load_round_trip() {
        let mut m = ScoreMatrix::new(
            vec!["a".into(), "b".into()],
            vec![[0.1, 0.2, 0.3, 0.4], [0.5, 0.6, 0.7, 0.8]],
        )
        .unwrap();
        m.set_whitened(vec![[0.0; 4], [1.0, -1.0, 0.5, 2.0]]).unwrap();
        m.set_rescaled(vec![[0.25; 4], [0.75; 4]]).unwrap();
        let mut path = std::env::temp_dir();
        path.push(format!("capcur-scores-{}.jsonl", std::process::id()));
        m.save(&path).unwrap();
        let loaded = ScoreMatrix::load(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(loaded, m);
    }
}

//! Corpus ingestion: line-delimited QA records plus externally computed
//! per-sample features, validated into an immutable in-memory model.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Extractive,
    MultipleChoice,
}

impl std::fmt::Display for Style {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Style::Extractive => write!(f, "extractive"),
            Style::MultipleChoice => write!(f, "multiple_choice"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
}

/// Answer payload; the shape must agree with the record's `style`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answers {
    /// Answer span texts for extractive questions.
    Extractive(Vec<String>),
    /// Candidate list plus the index of the correct candidate.
    MultipleChoice { candidates: Vec<String>, correct: usize },
}

/// One QA instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub question: String,
    pub context: String,
    pub style: Style,
    pub answers: Answers,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supporting_fact_count: Option<u32>,
    pub split: Split,
    /// Externally computed metric values merged onto this sample.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub features: BTreeMap<String, f64>,
}

impl Sample {
    /// Checks the per-sample invariants; returns the first violation.
    pub fn check(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(CoreError::Malformed("empty sample id".into()));
        }
        match (&self.style, &self.answers) {
            (Style::Extractive, Answers::Extractive(spans)) => {
                if spans.is_empty() {
                    return Err(CoreError::Malformed(format!(
                        "sample {}: extractive sample with no answer spans",
                        self.id
                    )));
                }
            }
            (Style::MultipleChoice, Answers::MultipleChoice { candidates, correct }) => {
                if candidates.len() < 2 {
                    return Err(CoreError::Malformed(format!(
                        "sample {}: multiple_choice sample needs >= 2 candidates",
                        self.id
                    )));
                }
                if *correct >= candidates.len() {
                    return Err(CoreError::Malformed(format!(
                        "sample {}: correct index {} out of range",
                        self.id, correct
                    )));
                }
            }
            _ => {
                return Err(CoreError::Malformed(format!(
                    "sample {}: answers shape does not match style {}",
                    self.id, self.style
                )));
            }
        }
        for (k, v) in &self.features {
            if !v.is_finite() {
                return Err(CoreError::NonFinite { metric: format!("{} ({})", k, self.id) });
            }
        }
        Ok(())
    }
}

/// Externally computed metric values for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalFeatureRecord {
    pub sample_id: String,
    pub values: BTreeMap<String, f64>,
}

/// Immutable ordered collection of samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    samples: Vec<Sample>,
    index: HashMap<String, usize>,
}

/// Outcome of a load: what was kept and what was rejected.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    pub loaded: usize,
    pub rejected: usize,
    /// (1-based line number, reason) per rejected record.
    pub rejections: Vec<(usize, String)>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    /// metric id -> sample ids missing it.
    pub missing: BTreeMap<String, Vec<String>>,
    pub invariant_violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.invariant_violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    UnifiedJsonl,
}

impl Corpus {
    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        let mut corpus = Corpus::default();
        for s in samples {
            corpus.push(s)?;
        }
        Ok(corpus)
    }

    fn push(&mut self, sample: Sample) -> Result<()> {
        sample.check()?;
        if self.index.contains_key(&sample.id) {
            return Err(CoreError::Malformed(format!("duplicate id {}", sample.id)));
        }
        self.index.insert(sample.id.clone(), self.samples.len());
        self.samples.push(sample);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples in insertion order.
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.index.get(id).map(|&i| &self.samples[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }
}

/// Loads a line-delimited corpus. Records violating the Sample invariants
/// (including duplicate ids) are skipped and reported, not fatal.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<(Corpus, LoadReport)> {
    let CorpusFormat::UnifiedJsonl = format;
    let file = std::fs::File::open(path).map_err(|e| CoreError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let reader = BufReader::new(file);
    let mut corpus = Corpus::default();
    let mut report = LoadReport::default();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<Sample, _> = serde_json::from_str(&line);
        match parsed {
            Ok(sample) => match corpus.push(sample) {
                Ok(()) => report.loaded += 1,
                Err(e) => {
                    report.rejected += 1;
                    report.rejections.push((lineno + 1, e.to_string()));
                }
            },
            Err(e) => {
                report.rejected += 1;
                report.rejections.push((lineno + 1, format!("parse error: {e}")));
            }
        }
    }
    Ok((corpus, report))
}

/// Writes the corpus back out in the same line-delimited format.
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| {
        CoreError::Io { path: path.display().to_string(), source: e }
    })?);
    for sample in corpus.samples() {
        let line = serde_json::to_string(sample)
            .map_err(|e| CoreError::Malformed(format!("serialize {}: {e}", sample.id)))?;
        writeln!(out, "{line}").map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    Ok(())
}

/// Loads feature records from a line-delimited file.
pub fn load_features(path: &Path) -> Result<Vec<ExternalFeatureRecord>> {
    let file = std::fs::File::open(path).map_err(|e| CoreError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ExternalFeatureRecord = serde_json::from_str(&line).map_err(|e| {
            CoreError::Malformed(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        records.push(rec);
    }
    Ok(records)
}

/// Merges external feature records onto corpus samples. Later records for
/// the same (sample, metric) overwrite earlier ones. Records carrying a
/// non-finite value are rejected whole and reported back.
pub fn merge_features(
    corpus: &Corpus,
    records: &[ExternalFeatureRecord],
) -> Result<(Corpus, Vec<String>)> {
    let unknown: Vec<String> = records
        .iter()
        .filter(|r| !corpus.contains(&r.sample_id))
        .map(|r| r.sample_id.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(CoreError::UnknownSampleIds(unknown));
    }
    let mut merged = corpus.clone();
    let mut rejected = Vec::new();
    for rec in records {
        if rec.values.values().any(|v| !v.is_finite()) {
            rejected.push(rec.sample_id.clone());
            continue;
        }
        let idx = merged.index[&rec.sample_id];
        for (k, v) in &rec.values {
            merged.samples[idx].features.insert(k.clone(), *v);
        }
    }
    Ok((merged, rejected))
}

/// Report-only check: which samples are missing required external metrics,
/// and any invariant violations. The corpus is never modified.
pub fn validate(corpus: &Corpus, required_metrics: &HashSet<String>) -> ValidationReport {
    let mut report = ValidationReport::default();
    for sample in corpus.samples() {
        if let Err(e) = sample.check() {
            report.invariant_violations.push(e.to_string());
        }
        for metric in required_metrics {
            if !sample.features.contains_key(metric) {
                report
                    .missing
                    .entry(metric.clone())
                    .or_default()
                    .push(sample.id.clone());
            }
        }
    }
    for ids in report.missing.values_mut() {
        ids.sort();
    }
    report
}

//! Natively computable data-property metrics and metric-vector assembly.

pub mod lexicon;
pub mod registry;
pub mod text;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::Sample;
use crate::error::{CoreError, Result};
use lexicon::Lexicon;
use registry::{MetricRegistry, MetricSource, Scope};
use text::{internal_sentence_count, tokenize, TokenSequence};

/// Per-sample raw metric values. A metric missing from `values` has its
/// completeness flag off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub sample_id: String,
    pub values: BTreeMap<String, f64>,
    pub completeness: BTreeMap<String, bool>,
}

impl MetricVector {
    pub fn get(&self, metric: &str) -> Option<f64> {
        self.values.get(metric).copied()
    }
}

/// One line of a metrics file: the vector plus the sample's split so
/// downstream normalization can fit on the train split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFileRecord {
    pub sample_id: String,
    pub split: crate::corpus::Split,
    pub values: BTreeMap<String, f64>,
    pub completeness: BTreeMap<String, bool>,
}

impl MetricFileRecord {
    pub fn new(vector: MetricVector, split: crate::corpus::Split) -> Self {
        Self {
            sample_id: vector.sample_id,
            split,
            values: vector.values,
            completeness: vector.completeness,
        }
    }

    pub fn vector(&self) -> MetricVector {
        MetricVector {
            sample_id: self.sample_id.clone(),
            values: self.values.clone(),
            completeness: self.completeness.clone(),
        }
    }
}

pub fn save_metric_records(records: &[MetricFileRecord], path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| {
        CoreError::Io { path: path.display().to_string(), source: e }
    })?);
    for rec in records {
        writeln!(out, "{}", serde_json::to_string(rec).expect("record serializes"))
            .map_err(|e| CoreError::Io { path: path.display().to_string(), source: e })?;
    }
    Ok(())
}

pub fn load_metric_records(path: &std::path::Path) -> Result<Vec<MetricFileRecord>> {
    use std::io::BufRead;
    let file = std::fs::File::open(path).map_err(|e| CoreError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut records = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MetricFileRecord = serde_json::from_str(&line).map_err(|e| {
            CoreError::Malformed(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        records.push(rec);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadabilityKind {
    FleschKincaid,
    Ari,
}

/// Ratio of distinct n-grams to total n-grams (Intra-n), in (0, 1].
pub fn ngram_diversity(seq: &TokenSequence, n: usize) -> Result<f64> {
    let grams = ngrams(&seq.tokens, n)?;
    let total = grams.len() as f64;
    let mut seen: HashMap<&[String], ()> = HashMap::new();
    for g in &grams {
        seen.insert(*g, ());
    }
    Ok(seen.len() as f64 / total)
}

/// Shannon entropy of the n-gram distribution (Ent-n), natural log.
pub fn ngram_entropy(seq: &TokenSequence, n: usize) -> Result<f64> {
    let grams = ngrams(&seq.tokens, n)?;
    let total = grams.len() as f64;
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    for g in &grams {
        *counts.entry(*g).or_insert(0) += 1;
    }
    // fixed summation order keeps the result bit-deterministic
    let mut counts: Vec<usize> = counts.into_values().collect();
    counts.sort_unstable();
    Ok(counts
        .into_iter()
        .map(|c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum())
}

fn ngrams(tokens: &[String], n: usize) -> Result<Vec<&[String]>> {
    if n == 0 {
        return Err(CoreError::UndefinedInput { op: "ngram", reason: "n must be >= 1".into() });
    }
    if tokens.len() < n {
        return Err(CoreError::UndefinedInput {
            op: "ngram",
            reason: format!("{} tokens < n = {n}", tokens.len()),
        });
    }
    Ok(tokens.windows(n).collect())
}

/// Fraction of tokens matched by the lexicon, each token counted at most
/// once; multi-word phrases match greedily left to right and claim all of
/// their tokens. The numeric pattern flag additionally matches any
/// digit-bearing token (including ordinals like "23rd").
pub fn lexicon_frequency(seq: &TokenSequence, lex: &Lexicon) -> Result<f64> {
    if seq.is_empty() {
        return Err(CoreError::UndefinedInput {
            op: "lexicon_frequency",
            reason: "empty token sequence".into(),
        });
    }
    let tokens = &seq.tokens;
    let mut matched = 0usize;
    let mut i = 0;
    while i < tokens.len() {
        if let Some(len) = lex.match_at(tokens, i) {
            matched += len;
            i += len;
        } else if lex.matches_numeric(&tokens[i]) {
            matched += 1;
            i += 1;
        } else {
            i += 1;
        }
    }
    Ok(matched as f64 / seq.word_count as f64)
}

/// US grade-level readability. Sentences are counted by internal
/// terminal-punctuation boundaries (splits), characters over letters and
/// digits only.
pub fn readability(text: &str, kind: ReadabilityKind) -> Result<f64> {
    let seq = tokenize(text);
    if seq.word_count == 0 {
        return Err(CoreError::UndefinedInput {
            op: "readability",
            reason: "no words".into(),
        });
    }
    let words = seq.word_count as f64;
    let sentences = internal_sentence_count(text) as f64;
    Ok(match kind {
        ReadabilityKind::FleschKincaid => {
            let syllables = seq.syllable_count as f64;
            0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59
        }
        ReadabilityKind::Ari => {
            let chars = seq.character_count as f64;
            4.71 * (chars / words) + 0.5 * (words / sentences) - 21.43
        }
    })
}

/// BLEU of the question against the context: geometric mean of modified
/// n-gram precisions up to `n_max` with brevity penalty; counts are
/// clipped against the context (the reference).
pub fn overlap_bleu(
    question: &TokenSequence,
    context: &TokenSequence,
    n_max: usize,
) -> Result<f64> {
    if !(1..=4).contains(&n_max) {
        return Err(CoreError::UndefinedInput {
            op: "overlap_bleu",
            reason: format!("n_max = {n_max} outside 1..=4"),
        });
    }
    if question.is_empty() || context.is_empty() {
        return Err(CoreError::UndefinedInput {
            op: "overlap_bleu",
            reason: "empty sequence".into(),
        });
    }
    let hyp_len = question.tokens.len() as f64;
    let ref_len = context.tokens.len() as f64;
    let mut log_sum = 0.0;
    for n in 1..=n_max {
        if question.tokens.len() < n || context.tokens.len() < n {
            return Ok(0.0);
        }
        let mut ref_counts: HashMap<&[String], usize> = HashMap::new();
        for g in context.tokens.windows(n) {
            *ref_counts.entry(g).or_insert(0) += 1;
        }
        let mut hyp_counts: HashMap<&[String], usize> = HashMap::new();
        for g in question.tokens.windows(n) {
            *hyp_counts.entry(g).or_insert(0) += 1;
        }
        let total: usize = hyp_counts.values().sum();
        let clipped: usize = hyp_counts
            .iter()
            .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum();
        if clipped == 0 {
            return Ok(0.0);
        }
        log_sum += (clipped as f64 / total as f64).ln();
    }
    let precision = (log_sum / n_max as f64).exp();
    let brevity = if hyp_len > ref_len { 1.0 } else { (1.0 - ref_len / hyp_len).exp() };
    Ok(precision * brevity)
}

/// Default n_max for the `bleu_n` registry metric. Questions are short,
/// so higher orders zero out too often to spread the distribution.
pub const BLEU_N_MAX: usize = 2;

/// Computes every registered metric for one sample. Native metrics are
/// computed per the registry scope; dataset-field metrics are copied from
/// annotations; external values pass through from merged features. Any
/// metric that cannot be computed is flagged incomplete, never fatal.
pub fn compute_metric_vector(sample: &Sample, registry: &MetricRegistry) -> MetricVector {
    let question = tokenize(&sample.question);
    let combined_text = join_scope(&sample.context, &sample.question);
    let combined = tokenize(&combined_text);
    let context = tokenize(&sample.context);

    let mut values = BTreeMap::new();
    let mut completeness = BTreeMap::new();
    for spec in registry.metrics() {
        let value: Option<f64> = match spec.source {
            MetricSource::External => sample.features.get(&spec.id).copied(),
            MetricSource::DatasetField => match spec.id.as_str() {
                "nfacts" => sample.supporting_fact_count.map(|n| n as f64),
                _ => sample.features.get(&spec.id).copied(),
            },
            MetricSource::Native => {
                let (scoped_text, scoped) = match spec.scope {
                    Scope::QuestionOnly => (sample.question.as_str(), &question),
                    Scope::QuestionPlusContext => (combined_text.as_str(), &combined),
                };
                native_metric(&spec.id, scoped_text, scoped, &question, &context).ok()
            }
        };
        match value {
            Some(v) if v.is_finite() => {
                values.insert(spec.id.clone(), v);
                completeness.insert(spec.id.clone(), true);
            }
            _ => {
                completeness.insert(spec.id.clone(), false);
            }
        }
    }
    MetricVector { sample_id: sample.id.clone(), values, completeness }
}

fn join_scope(context: &str, question: &str) -> String {
    if context.is_empty() {
        question.to_string()
    } else if question.is_empty() {
        context.to_string()
    } else {
        format!("{context} {question}")
    }
}

fn native_metric(
    id: &str,
    scoped_text: &str,
    scoped: &TokenSequence,
    question: &TokenSequence,
    context: &TokenSequence,
) -> Result<f64> {
    match id {
        // vocabulary diversity over number-classed tokens
        "intra1" => ngram_diversity(&scoped.number_classed(), 1),
        "intra2" => ngram_diversity(&scoped.number_classed(), 2),
        // entropy reported in bits
        "ent1" => ngram_entropy(scoped, 1).map(|h| h / std::f64::consts::LN_2),
        "ent2" => ngram_entropy(scoped, 2).map(|h| h / std::f64::consts::LN_2),
        "ntopwords" => lexicon_frequency(scoped, lexicon::function_words()),
        "flesch_kincaid" => readability(scoped_text, ReadabilityKind::FleschKincaid),
        "ari" => readability(scoped_text, ReadabilityKind::Ari),
        "nnums" => lexicon_frequency(scoped, lexicon::number_words()),
        "nlogicals" => lexicon_frequency(scoped, lexicon::logical_quantifiers()),
        "bleu_n" => overlap_bleu(question, context, BLEU_N_MAX),
        "ncoreferences" => lexicon_frequency(scoped, lexicon::pronouns()),
        "njunctions" => lexicon_frequency(scoped, lexicon::junctions()),
        "ncausals" => lexicon_frequency(scoped, lexicon::causal_markers()),
        "nspatialtemporals" => lexicon_frequency(scoped, lexicon::spatial_temporal()),
        other => Err(CoreError::UnknownMetric(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Answers, Split, Style};

    fn seq(words: &[&str]) -> TokenSequence {
        tokenize(&words.join(" "))
    }

    #[test]
    fn diversity_all_distinct() {
        assert_eq!(ngram_diversity(&seq(&["a", "b", "c"]), 1).unwrap(), 1.0);
    }

    #[test]
    fn diversity_repeats() {
        assert_eq!(ngram_diversity(&seq(&["a", "a", "a", "a"]), 1).unwrap(), 0.25);
    }

    #[test]
    fn diversity_too_short_errors() {
        assert!(ngram_diversity(&seq(&["a"]), 2).is_err());
    }

    #[test]
    fn diversity_distinct_count_is_integer() {
        // ngram_diversity * |n-grams| is a distinct count
        let s = seq(&["x", "y", "x", "z", "y", "x"]);
        let d = ngram_diversity(&s, 1).unwrap();
        let count = d * s.tokens.len() as f64;
        assert!((count - count.round()).abs() < 1e-12);
        assert_eq!(count.round() as usize, 3);
    }

    #[test]
    fn entropy_single_symbol_is_zero() {
        assert_eq!(ngram_entropy(&seq(&["a", "a", "a"]), 1).unwrap(), 0.0);
    }

    #[test]
    fn entropy_two_uniform_symbols() {
        let h = ngram_entropy(&seq(&["a", "b"]), 1).unwrap();
        assert!((h - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn entropy_bounded_by_ln_count() {
        let s = seq(&["p", "q", "r", "p", "p", "q"]);
        let h = ngram_entropy(&s, 1).unwrap();
        assert!(h <= (s.word_count as f64).ln() + 1e-12);
        // equality iff all distinct
        let distinct = seq(&["p", "q", "r", "s"]);
        let hd = ngram_entropy(&distinct, 1).unwrap();
        assert!((hd - 4.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn lexicon_frequency_direct_count() {
        let lex = Lexicon::new("spatial", &["before", "after"], false).unwrap();
        let s = seq(&["before", "the", "race"]);
        assert!((lexicon_frequency(&s, &lex).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lexicon_frequency_no_match_is_zero() {
        let lex = Lexicon::new("x", &["zebra"], false).unwrap();
        assert_eq!(lexicon_frequency(&seq(&["a", "b"]), &lex).unwrap(), 0.0);
    }

    #[test]
    fn lexicon_frequency_empty_errors() {
        let lex = Lexicon::new("x", &["a"], false).unwrap();
        assert!(lexicon_frequency(&tokenize(""), &lex).is_err());
    }

    #[test]
    fn lexicon_phrase_counts_all_tokens() {
        let lex = Lexicon::new("x", &["in front of"], false).unwrap();
        let s = seq(&["in", "front", "of", "me"]);
        assert!((lexicon_frequency(&s, &lex).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn lexicon_monotone_under_added_entries() {
        let small = Lexicon::new("s", &["alpha"], false).unwrap();
        let big = Lexicon::new("b", &["alpha", "beta"], false).unwrap();
        let s = seq(&["alpha", "beta", "gamma"]);
        assert!(
            lexicon_frequency(&s, &big).unwrap() >= lexicon_frequency(&s, &small).unwrap()
        );
    }

    #[test]
    fn numeric_pattern_matches_digits_and_ordinals() {
        let lex = lexicon::number_words();
        let s = seq(&["on", "december", "4", "2014", "near", "23rd", "street"]);
        let f = lexicon_frequency(&s, lex).unwrap();
        assert!((f - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn ari_single_word_closed_form() {
        // "cat" as one sentence: 4.71*3 + 0.5*1 - 21.43 = -6.8
        let v = readability("cat", ReadabilityKind::Ari).unwrap();
        assert!((v - (4.71 * 3.0 + 0.5 - 21.43)).abs() < 1e-12);
    }

    #[test]
    fn flesch_kincaid_closed_form() {
        // "the cat sat. a dog ran." -> 6 words, 2 sentences... sentence
        // count here is internal-boundary style: 1 split -> wait, both
        // terminals: first followed by space (internal), second trailing.
        let text = "The cat sat. A dog ran.";
        let words = 6.0;
        let sentences = 1.0; // one internal boundary
        let syllables = 6.0;
        let expect = 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59;
        let v = readability(text, ReadabilityKind::FleschKincaid).unwrap();
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn readability_empty_errors() {
        assert!(readability("", ReadabilityKind::Ari).is_err());
        assert!(readability("?!", ReadabilityKind::FleschKincaid).is_err());
    }

    #[test]
    fn bleu_identical_is_one() {
        let q = seq(&["the", "tower", "is", "tall"]);
        assert!((overlap_bleu(&q, &q, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bleu_disjoint_is_zero() {
        let q = seq(&["alpha", "beta"]);
        let c = seq(&["gamma", "delta"]);
        assert_eq!(overlap_bleu(&q, &c, 1).unwrap(), 0.0);
    }

    #[test]
    fn bleu_hand_counted_modified_precision() {
        // hyp [the, tower, is, tall] vs ref [the, tall, tower]:
        // clipped unigrams the=1, tower=1, is=0, tall=1 -> p1 = 3/4;
        // hyp longer than ref -> brevity penalty 1.
        let q = seq(&["the", "tower", "is", "tall"]);
        let c = seq(&["the", "tall", "tower"]);
        assert!((overlap_bleu(&q, &c, 1).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn bleu_brevity_penalty_applies() {
        // hyp [the, tower] vs ref [the, tower, is, tall]: p1 = 1,
        // BP = exp(1 - 4/2) = e^-1
        let q = seq(&["the", "tower"]);
        let c = seq(&["the", "tower", "is", "tall"]);
        let expect = (1.0_f64 - 2.0).exp();
        assert!((overlap_bleu(&q, &c, 1).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn bleu_empty_errors() {
        let q = tokenize("");
        let c = seq(&["a"]);
        assert!(overlap_bleu(&q, &c, 1).is_err());
    }

    fn sample_with(question: &str, context: &str, nfacts: Option<u32>) -> Sample {
        Sample {
            id: "s1".into(),
            question: question.into(),
            context: context.into(),
            style: Style::Extractive,
            answers: Answers::Extractive(vec!["x".into()]),
            supporting_fact_count: nfacts,
            split: Split::Train,
            features: BTreeMap::new(),
        }
    }

    #[test]
    fn vector_copies_dataset_field() {
        let reg = MetricRegistry::default();
        let s = sample_with("Who is tall?", "The tower is tall.", Some(2));
        let v = compute_metric_vector(&s, &reg);
        assert_eq!(v.get("nfacts"), Some(2.0));
        assert!(v.completeness["nfacts"]);
    }

    #[test]
    fn vector_missing_nfacts_incomplete() {
        let reg = MetricRegistry::default();
        let s = sample_with("Who is tall?", "The tower is tall.", None);
        let v = compute_metric_vector(&s, &reg);
        assert_eq!(v.get("nfacts"), None);
        assert!(!v.completeness["nfacts"]);
    }

    #[test]
    fn vector_external_passthrough_and_missing() {
        let reg = MetricRegistry::default();
        let mut s = sample_with("Who?", "James is here.", Some(1));
        s.features.insert("bertscore".into(), 0.862);
        let v = compute_metric_vector(&s, &reg);
        assert_eq!(v.get("bertscore"), Some(0.862));
        assert!(!v.completeness["moverscore"]);
    }

    #[test]
    fn vector_deterministic() {
        let reg = MetricRegistry::default();
        let s = sample_with("Was it the tower or the park?", "The tower is near the park.", Some(2));
        let a = compute_metric_vector(&s, &reg);
        let b = compute_metric_vector(&s, &reg);
        assert_eq!(a, b);
    }

    #[test]
    fn vector_empty_scope_flags_off() {
        let reg = MetricRegistry::default();
        let s = sample_with("", "", Some(1));
        let v = compute_metric_vector(&s, &reg);
        assert!(!v.completeness["intra1"]);
        assert!(!v.completeness["flesch_kincaid"]);
        // dataset field still present
        assert_eq!(v.get("nfacts"), Some(1.0));
    }
}

//! Synthetic-learner laboratory: closes the measure -> plan -> train loop
//! without neural training so the scheduling logic can be verified at
//! desk scale against easy-to-hard, hard-to-easy and random orderings,
//! plus active-learning label-efficiency comparisons.

mod learner;

pub use learner::{standard_normal, EvalMode, LearnerConfig, SyntheticLearner, LOGISTIC_ALPHA};

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assessment::{measure_capabilities, PerformanceRecord};
use crate::error::{CoreError, Result};
use crate::metrics::registry::{MetricRegistry, MetricSource, MetricSpec, Orientation, Scope, DIMENSIONS};
use crate::metrics::MetricVector;
use crate::scheduler::{advance, al_query, CurriculumConfig, StagePlan};
use crate::valuation::{
    capability_values, fit_normalizer, fit_zca, rank_rescale, whiten, ScoreMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Cbbc,
    EasyToHard,
    HardToEasy,
    Random,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Strategy::Cbbc => "cbbc",
            Strategy::EasyToHard => "easy_to_hard",
            Strategy::HardToEasy => "hard_to_easy",
            Strategy::Random => "random",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AlStrategy {
    #[default]
    CbbcAl,
    Random,
    Uncertainty,
}

impl std::fmt::Display for AlStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AlStrategy::CbbcAl => "cbbc_al",
            AlStrategy::Random => "random",
            AlStrategy::Uncertainty => "uncertainty",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_train: usize,
    pub n_dev: usize,
    pub strategy: Strategy,
    pub steps_per_stage: usize,
    pub seeds: Vec<u64>,
    pub curriculum: CurriculumConfig,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default)]
    pub al_strategy: AlStrategy,
    /// Fraction of the pool labeled by the end of an active-learning run.
    #[serde(default = "default_al_total")]
    pub al_total_fraction: f64,
}

fn default_al_total() -> f64 {
    0.8
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(CoreError::InvalidConfig("seeds must be non-empty".into()));
        }
        if self.n_dev < self.curriculum.k {
            return Err(CoreError::InvalidConfig(format!(
                "n_dev {} < k {}",
                self.n_dev, self.curriculum.k
            )));
        }
        if self.n_train < 8 {
            return Err(CoreError::InvalidConfig("n_train must be >= 8".into()));
        }
        if self.steps_per_stage == 0 {
            return Err(CoreError::InvalidConfig("steps_per_stage must be >= 1".into()));
        }
        self.curriculum.check()
    }

    /// Harness defaults tuned so the ordering effect is visible; see
    /// the crate README for the reasoning behind gamma.
    pub fn desk_default(strategy: Strategy, seeds: Vec<u64>) -> Self {
        Self {
            n_train: 2000,
            n_dev: 256,
            strategy,
            steps_per_stage: 2,
            seeds,
            curriculum: CurriculumConfig { gamma: 8.0, ..CurriculumConfig::default() },
            learner: LearnerConfig::default(),
            al_strategy: AlStrategy::CbbcAl,
            al_total_fraction: default_al_total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub strategy: String,
    pub seed: u64,
    /// (stage, mean dev accuracy) in stage order.
    pub accuracy_curve: Vec<(u32, f64)>,
    pub final_accuracy: f64,
    /// Cumulative labeled-sample counts per cycle (active learning only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_used: Option<Vec<usize>>,
}

/// Draws a synthetic corpus: 4-dimensional difficulty vectors with a
/// planted shared factor (pairwise correlation around 0.5), squashed to
/// (0,1). The same vectors serve as the exposed raw capability values and
/// as the latent difficulty the learner oracle sees.
pub fn synth_corpus(n: usize, seed: u64) -> Result<(ScoreMatrix, Vec<[f64; DIMENSIONS]>)> {
    if n < 8 {
        return Err(CoreError::TooFewSamples { need: 8, have: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 0.5f64;
    let mut difficulty = Vec::with_capacity(n);
    for _ in 0..n {
        let shared = standard_normal(&mut rng);
        let mut row = [0.0; DIMENSIONS];
        for v in &mut row {
            let z = w.sqrt() * shared + (1.0 - w).sqrt() * standard_normal(&mut rng);
            // logistic approximation to the normal CDF keeps values in (0,1)
            *v = 1.0 / (1.0 + (-1.702 * z).exp());
        }
        difficulty.push(row);
    }
    let ids: Vec<String> = (0..n).map(|i| format!("s{i:05}")).collect();
    let matrix = ScoreMatrix::new(ids, difficulty.clone())?;
    Ok((matrix, difficulty))
}

/// Everything a trial needs: scored matrices for both splits plus latent
/// difficulties aligned to them.
struct TrialData {
    train_scores: ScoreMatrix,
    dev_scores: ScoreMatrix,
    train_difficulty: Vec<[f64; DIMENSIONS]>,
    dev_difficulty: Vec<[f64; DIMENSIONS]>,
}

/// Builds one seeded corpus and runs it through the full valuation path:
/// per-dimension CDF normalization fitted on the train split, ZCA
/// whitening fitted on the train split, and per-split rank rescaling.
fn prepare_trial(config: &ExperimentConfig, seed: u64) -> Result<TrialData> {
    let n = config.n_train + config.n_dev;
    let (_, difficulty) = synth_corpus(n, seed)?;
    let (train_difficulty, dev_difficulty) =
        (difficulty[..config.n_train].to_vec(), difficulty[config.n_train..].to_vec());

    // pseudo-registry: one metric per dimension, so the normalization and
    // aggregation path is the same one real corpora go through
    let registry = MetricRegistry::new(
        (1..=DIMENSIONS as u8)
            .map(|d| MetricSpec {
                id: format!("d{d}"),
                dimension: d,
                source: MetricSource::External,
                orientation: Orientation::HigherIsHarder,
                scope: Scope::QuestionOnly,
            })
            .collect(),
    )?;
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for d in 0..DIMENSIONS {
        columns.insert(
            format!("d{}", d + 1),
            train_difficulty.iter().map(|row| row[d]).collect(),
        );
    }
    let normalizer = fit_normalizer(&columns, &registry)?;
    let to_matrix = |difficulties: &[[f64; DIMENSIONS]], offset: usize| -> Result<ScoreMatrix> {
        let mut rows = Vec::with_capacity(difficulties.len());
        let mut ids = Vec::with_capacity(difficulties.len());
        for (i, row) in difficulties.iter().enumerate() {
            let vector = MetricVector {
                sample_id: format!("s{:05}", offset + i),
                values: (0..DIMENSIONS)
                    .map(|d| (format!("d{}", d + 1), row[d]))
                    .collect(),
                completeness: BTreeMap::new(),
            };
            rows.push(capability_values(&vector, &normalizer, &registry)?);
            ids.push(vector.sample_id);
        }
        ScoreMatrix::new(ids, rows)
    };
    let mut train_scores = to_matrix(&train_difficulty, 0)?;
    let mut dev_scores = to_matrix(&dev_difficulty, config.n_train)?;

    let zca = fit_zca(train_scores.raw(), crate::valuation::DEFAULT_EPSILON)?;
    let train_white = whiten(train_scores.raw(), &zca);
    let dev_white = whiten(dev_scores.raw(), &zca);
    train_scores.set_rescaled(rank_rescale(&train_white))?;
    dev_scores.set_rescaled(rank_rescale(&dev_white))?;
    train_scores.set_whitened(train_white)?;
    dev_scores.set_whitened(dev_white)?;
    Ok(TrialData { train_scores, dev_scores, train_difficulty, dev_difficulty })
}

fn difficulty_by_id(data: &TrialData) -> BTreeMap<&str, &[f64; DIMENSIONS]> {
    data.train_scores
        .sample_ids()
        .iter()
        .map(|id| id.as_str())
        .zip(data.train_difficulty.iter())
        .collect()
}

/// Mean noise-free dev accuracy (soft F1).
fn dev_accuracy(learner: &SyntheticLearner, data: &TrialData) -> f64 {
    let sum: f64 =
        data.dev_difficulty.iter().map(|d| learner.expected_success(d)).sum();
    sum / data.dev_difficulty.len() as f64
}

/// Noisy dev performance records for the measurer.
fn dev_records(learner: &mut SyntheticLearner, data: &TrialData) -> Vec<PerformanceRecord> {
    data.dev_scores
        .sample_ids()
        .iter()
        .zip(&data.dev_difficulty)
        .map(|(id, d)| learner.eval(id, d, EvalMode::Soft))
        .collect()
}

/// Number of doubling stages from the warm-start size to n.
fn doubling_stage_count(n: usize, n0: usize) -> usize {
    let mut size = n0;
    let mut stages = 1;
    while size < n {
        size = (2 * size).min(n);
        stages += 1;
    }
    stages
}

fn train_on(
    learner: &mut SyntheticLearner,
    ids: &[String],
    by_id: &BTreeMap<&str, &[f64; DIMENSIONS]>,
    steps: usize,
) {
    let batch: Vec<[f64; DIMENSIONS]> =
        ids.iter().map(|id| *by_id[id.as_str()]).collect();
    for _ in 0..steps {
        learner.step(&batch);
    }
}

/// Runs one trial per seed with the configured strategy.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    config.check()?;
    config.seeds.iter().map(|&seed| run_trial(config, seed)).collect()
}

fn run_trial(config: &ExperimentConfig, seed: u64) -> Result<TrialResult> {
    let data = prepare_trial(config, seed)?;
    let by_id = difficulty_by_id(&data);
    let mut learner = SyntheticLearner::new(&config.learner, seed ^ 0x5EED_0001);
    let n = config.n_train;
    let n0 = config.curriculum.initial_size(n);
    let stage_count = doubling_stage_count(n, n0);
    let mut curve: Vec<(u32, f64)> = Vec::new();

    match config.strategy {
        Strategy::Cbbc => {
            let max_stages = stage_count + 4;
            let mut plan: Option<StagePlan> = None;
            for stage in 0..max_stages as u32 {
                let records = dev_records(&mut learner, &data);
                let state = measure_capabilities(
                    &data.dev_scores,
                    &records,
                    config.curriculum.k,
                    stage,
                    config.curriculum.value_view,
                )?;
                let next =
                    advance(&config.curriculum, &state, &data.train_scores, plan.as_ref())?;
                train_on(&mut learner, &next.sampled_ids, &by_id, config.steps_per_stage);
                curve.push((stage, dev_accuracy(&learner, &data)));
                let complete = next.complete;
                plan = Some(next);
                if complete {
                    break;
                }
            }
        }
        Strategy::EasyToHard | Strategy::HardToEasy | Strategy::Random => {
            let values = data.train_scores.view(config.curriculum.value_view)?;
            let ids = data.train_scores.sample_ids();
            let mut order: Vec<usize> = (0..n).collect();
            match config.strategy {
                Strategy::EasyToHard | Strategy::HardToEasy => {
                    order.sort_by(|&a, &b| {
                        let ma: f64 = values[a].iter().sum();
                        let mb: f64 = values[b].iter().sum();
                        ma.partial_cmp(&mb).expect("finite").then_with(|| ids[a].cmp(&ids[b]))
                    });
                    if config.strategy == Strategy::HardToEasy {
                        order.reverse();
                    }
                }
                Strategy::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0002);
                    order.shuffle(&mut rng);
                }
                Strategy::Cbbc => unreachable!(),
            }
            // equal-size stages over the fixed ordering
            let chunk = n.div_ceil(stage_count);
            for (stage, slice) in order.chunks(chunk).enumerate() {
                let batch: Vec<String> = slice.iter().map(|&i| ids[i].clone()).collect();
                train_on(&mut learner, &batch, &by_id, config.steps_per_stage);
                curve.push((stage as u32, dev_accuracy(&learner, &data)));
            }
        }
    }
    let final_accuracy = curve.last().map(|c| c.1).unwrap_or(0.0);
    Ok(TrialResult {
        strategy: config.strategy.to_string(),
        seed,
        accuracy_curve: curve,
        final_accuracy,
        labels_used: None,
    })
}

/// Active-learning comparison: cycles add `budget_fraction_per_cycle` of
/// the pool until `al_total_fraction` is labeled; the learner retrains on
/// the full labeled set each cycle.
pub fn run_al_experiment(
    config: &ExperimentConfig,
    budget_fraction_per_cycle: f64,
) -> Result<Vec<TrialResult>> {
    config.check()?;
    if !(budget_fraction_per_cycle > 0.0 && budget_fraction_per_cycle <= 1.0) {
        return Err(CoreError::InvalidConfig("budget fraction outside (0,1]".into()));
    }
    config
        .seeds
        .iter()
        .map(|&seed| run_al_trial(config, budget_fraction_per_cycle, seed))
        .collect()
}

fn run_al_trial(
    config: &ExperimentConfig,
    budget_fraction: f64,
    seed: u64,
) -> Result<TrialResult> {
    let data = prepare_trial(config, seed)?;
    let by_id = difficulty_by_id(&data);
    let mut learner = SyntheticLearner::new(&config.learner, seed ^ 0x5EED_0001);
    let n = config.n_train;
    let per_cycle = ((budget_fraction * n as f64).ceil() as usize).clamp(1, n);
    let total_allowed = ((config.al_total_fraction.min(1.0) * n as f64).ceil() as usize).min(n);

    let ids = data.train_scores.sample_ids();
    let mut labeled: BTreeSet<String> = BTreeSet::new();
    // the initial pool is strategy-independent
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0003);
    let mut shuffled: Vec<&String> = ids.iter().collect();
    shuffled.shuffle(&mut init_rng);
    let mut batch: Vec<String> = shuffled
        .into_iter()
        .take(per_cycle.min(total_allowed))
        .cloned()
        .collect();
    batch.sort();
    labeled.extend(batch.iter().cloned());

    let mut curve: Vec<(u32, f64)> = Vec::new();
    let mut labels_used: Vec<usize> = Vec::new();
    let mut cycle: u32 = 0;
    loop {
        // each cycle trains on the newly labeled batch
        train_on(&mut learner, &batch, &by_id, config.steps_per_stage);
        curve.push((cycle, dev_accuracy(&learner, &data)));
        labels_used.push(labeled.len());
        if labeled.len() >= total_allowed {
            break;
        }
        let budget = per_cycle.min(total_allowed - labeled.len());
        batch = select_for_labeling(config, &data, &mut learner, &labeled, budget, seed, cycle)?;
        batch.sort();
        labeled.extend(batch.iter().cloned());
        cycle += 1;
    }
    let final_accuracy = curve.last().map(|c| c.1).unwrap_or(0.0);
    Ok(TrialResult {
        strategy: config.al_strategy.to_string(),
        seed,
        accuracy_curve: curve,
        final_accuracy,
        labels_used: Some(labels_used),
    })
}

fn select_for_labeling(
    config: &ExperimentConfig,
    data: &TrialData,
    learner: &mut SyntheticLearner,
    labeled: &BTreeSet<String>,
    budget: usize,
    seed: u64,
    cycle: u32,
) -> Result<Vec<String>> {
    let ids = data.train_scores.sample_ids();
    let unlabeled: Vec<usize> =
        (0..ids.len()).filter(|&i| !labeled.contains(&ids[i])).collect();
    match config.al_strategy {
        AlStrategy::Random => {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0002 ^ (cycle as u64) << 32);
            let mut pool = unlabeled.clone();
            pool.shuffle(&mut rng);
            Ok(pool.into_iter().take(budget).map(|i| ids[i].clone()).collect())
        }
        AlStrategy::Uncertainty => {
            // lowest simulated confidence first
            let mut scored: Vec<(usize, f64)> = unlabeled
                .iter()
                .map(|&i| {
                    let rec = learner.eval(&ids[i], &data.train_difficulty[i], EvalMode::Soft);
                    (i, rec.slog.expect("soft mode sets slog"))
                })
                .collect();
            scored.sort_by(|a, b| {
                a.1.partial_cmp(&b.1).expect("finite").then_with(|| ids[a.0].cmp(&ids[b.0]))
            });
            Ok(scored.into_iter().take(budget).map(|(i, _)| ids[i].clone()).collect())
        }
        AlStrategy::CbbcAl => {
            let records = dev_records(learner, data);
            let state = measure_capabilities(
                &data.dev_scores,
                &records,
                config.curriculum.k,
                cycle,
                config.curriculum.value_view,
            )?;
            let pool_scores = subset_scores(&data.train_scores, &unlabeled)?;
            al_query(
                &pool_scores,
                &state,
                config.curriculum.gamma,
                budget,
                seed ^ 0x5EED_0004 ^ (cycle as u64) << 32,
                config.curriculum.value_view,
            )
        }
    }
}

/// Row subset of a score matrix, keeping whichever views are populated.
fn subset_scores(scores: &ScoreMatrix, rows: &[usize]) -> Result<ScoreMatrix> {
    let ids: Vec<String> = rows.iter().map(|&i| scores.sample_ids()[i].clone()).collect();
    let raw: Vec<[f64; DIMENSIONS]> = rows.iter().map(|&i| scores.raw()[i]).collect();
    let mut out = ScoreMatrix::new(ids, raw)?;
    if let Some(white) = scores.whitened() {
        out.set_whitened(rows.iter().map(|&i| white[i]).collect())?;
    }
    if let Some(rescaled) = scores.rescaled() {
        out.set_rescaled(rows.iter().map(|&i| rescaled[i]).collect())?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub trials: usize,
    pub mean_final: f64,
    pub sd_final: f64,
    pub mean_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub strategies: Vec<StrategySummary>,
    /// (strategy a, strategy b, fraction of shared seeds where a's final
    /// accuracy beats b's; ties count half).
    pub win_rates: Vec<(String, String, f64)>,
}

/// Per-strategy means and deviations plus pairwise win rates.
pub fn summarize(results: &[TrialResult]) -> Result<SummaryTable> {
    if results.is_empty() {
        return Err(CoreError::EmptyInput("no trial results".into()));
    }
    let mut by_strategy: BTreeMap<&str, Vec<&TrialResult>> = BTreeMap::new();
    for r in results {
        by_strategy.entry(r.strategy.as_str()).or_default().push(r);
    }
    let mut strategies = Vec::new();
    for (name, trials) in &by_strategy {
        let n = trials.len() as f64;
        let mean_final = trials.iter().map(|t| t.final_accuracy).sum::<f64>() / n;
        let var = trials
            .iter()
            .map(|t| (t.final_accuracy - mean_final).powi(2))
            .sum::<f64>()
            / n;
        let max_len = trials.iter().map(|t| t.accuracy_curve.len()).max().unwrap_or(0);
        let mut mean_curve = vec![0.0; max_len];
        for (i, entry) in mean_curve.iter_mut().enumerate() {
            let points: Vec<f64> = trials
                .iter()
                .filter_map(|t| t.accuracy_curve.get(i).map(|c| c.1))
                .collect();
            *entry = points.iter().sum::<f64>() / points.len() as f64;
        }
        strategies.push(StrategySummary {
            strategy: name.to_string(),
            trials: trials.len(),
            mean_final,
            sd_final: var.sqrt(),
            mean_curve,
        });
    }
    let mut win_rates = Vec::new();
    let names: Vec<&str> = by_strategy.keys().copied().collect();
    for &a in &names {
        for &b in &names {
            if a >= b {
                continue;
            }
            let by_seed_b: BTreeMap<u64, f64> =
                by_strategy[b].iter().map(|t| (t.seed, t.final_accuracy)).collect();
            let mut wins = 0.0;
            let mut total = 0.0;
            for t in &by_strategy[a] {
                if let Some(&fb) = by_seed_b.get(&t.seed) {
                    total += 1.0;
                    if t.final_accuracy > fb {
                        wins += 1.0;
                    } else if t.final_accuracy == fb {
                        wins += 0.5;
                    }
                }
            }
            if total > 0.0 {
                win_rates.push((a.to_string(), b.to_string(), wins / total));
            }
        }
    }
    Ok(SummaryTable { strategies, win_rates })
}

impl SummaryTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,trials,mean_final,sd_final,mean_curve\n");
        for s in &self.strategies {
            let curve: Vec<String> =
                s.mean_curve.iter().map(|v| format!("{v:.4}")).collect();
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{}\n",
                s.strategy,
                s.trials,
                s.mean_final,
                s.sd_final,
                curve.join(";")
            ));
        }
        out.push_str("a,b,win_rate\n");
        for (a, b, w) in &self.win_rates {
            out.push_str(&format!("{a},{b},{w:.4}\n"));
        }
        out
    }
}

pub fn trials_to_csv(results: &[TrialResult]) -> String {
    let mut out = String::from("strategy,seed,stage,accuracy,labels\n");
    for t in results {
        for (i, (stage, acc)) in t.accuracy_curve.iter().enumerate() {
            let labels = t
                .labels_used
                .as_ref()
                .and_then(|l| l.get(i))
                .map(|l| l.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{},{},{},{:.6},{}\n", t.strategy, t.seed, stage, acc, labels));
        }
    }
    out
}

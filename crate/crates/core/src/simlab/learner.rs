//! The synthetic learner: a latent 4-dimensional skill vector, a logistic
//! success model, and a proximity-kernel learning rule under which samples
//! near the skill boundary teach the most.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assessment::PerformanceRecord;
use crate::corpus::Style;
use crate::metrics::registry::DIMENSIONS;

/// Slope of the success logistic.
pub const LOGISTIC_ALPHA: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub initial_skill: f64,
    pub learn_rate: f64,
    pub gain_bandwidth: f64,
    pub noise_sd: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self { initial_skill: 0.05, learn_rate: 0.05, gain_bandwidth: 0.10, noise_sd: 0.05 }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticLearner {
    pub skill: [f64; DIMENSIONS],
    pub learn_rate: f64,
    pub gain_bandwidth: f64,
    pub noise_sd: f64,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// F1 is the success probability itself (extractive style).
    Soft,
    /// F1 is a Bernoulli draw (multiple-choice style).
    Bernoulli,
}

/// Box-Muller standard normal.
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl SyntheticLearner {
    pub fn new(config: &LearnerConfig, seed: u64) -> Self {
        Self {
            skill: [config.initial_skill.clamp(0.0, 1.0); DIMENSIONS],
            learn_rate: config.learn_rate,
            gain_bandwidth: config.gain_bandwidth,
            noise_sd: config.noise_sd,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Noise-free success probability on one sample.
    pub fn expected_success(&self, difficulty: &[f64; DIMENSIONS]) -> f64 {
        let margin: f64 = (0..DIMENSIONS)
            .map(|d| self.skill[d] - difficulty[d])
            .sum::<f64>()
            / DIMENSIONS as f64;
        sigmoid(LOGISTIC_ALPHA * margin)
    }

    /// One noisy evaluation. Confidence is exp(1 + p) so its logarithm is
    /// 1 + p: positive, monotone in p, and safely above the clamp floor.
    pub fn eval(
        &mut self,
        sample_id: &str,
        difficulty: &[f64; DIMENSIONS],
        mode: EvalMode,
    ) -> PerformanceRecord {
        let margin: f64 = (0..DIMENSIONS)
            .map(|d| self.skill[d] - difficulty[d])
            .sum::<f64>()
            / DIMENSIONS as f64;
        let noisy = margin + self.noise_sd * standard_normal(&mut self.rng);
        let p = sigmoid(LOGISTIC_ALPHA * noisy);
        let confidence = (1.0 + p).exp();
        match mode {
            EvalMode::Soft => PerformanceRecord {
                sample_id: sample_id.into(),
                f1: p,
                style: Style::Extractive,
                slog: Some(confidence),
                elog: Some(confidence),
                candlog: None,
            },
            EvalMode::Bernoulli => PerformanceRecord {
                sample_id: sample_id.into(),
                f1: if self.rng.gen::<f64>() < p { 1.0 } else { 0.0 },
                style: Style::MultipleChoice,
                slog: None,
                elog: None,
                candlog: Some(confidence),
            },
        }
    }

    /// Trains on a batch, sample by sample: per dimension the skill gain
    /// is learn_rate * exp(-(d - s)^2 / (2 bw^2)) * max(d - s, 0), so
    /// already-mastered and far-too-hard samples both teach nothing.
    pub fn step(&mut self, batch: &[[f64; DIMENSIONS]]) {
        let two_bw_sq = 2.0 * self.gain_bandwidth * self.gain_bandwidth;
        for difficulty in batch {
            for d in 0..DIMENSIONS {
                let gap = difficulty[d] - self.skill[d];
                let gain = self.learn_rate * (-(gap * gap) / two_bw_sq).exp() * gap.max(0.0);
                self.skill[d] = (self.skill[d] + gain).clamp(0.0, 1.0);
            }
        }
    }
}

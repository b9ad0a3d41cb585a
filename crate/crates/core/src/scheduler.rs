//! Curriculum scheduler: grows per-capability bounds, builds candidate
//! sets under them, and samples stage training sets in proportion to the
//! absolute partial correlations. Also the active-learning query variant.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assessment::CapabilityState;
use crate::error::{CoreError, Result};
use crate::metrics::registry::DIMENSIONS;
use crate::valuation::{ScoreMatrix, ValueView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumConfig {
    /// Bound growth factor, > 1.
    pub gamma: f64,
    /// Training iterations between schedule updates (consumed by the
    /// external trainer; the scheduler itself is pace-agnostic).
    pub pace_iterations: u32,
    /// Top-k size for the measurer.
    pub k: usize,
    /// Stage-0 fraction of the corpus; None picks the default that gives
    /// the doubling schedule a power-of-two runway.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_fraction: Option<f64>,
    pub seed: u64,
    pub value_view: ValueView,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            gamma: 1.5,
            pace_iterations: 1000,
            k: 32,
            initial_fraction: None,
            seed: 0,
            value_view: ValueView::Rescaled,
        }
    }
}

impl CurriculumConfig {
    pub fn check(&self) -> Result<()> {
        if self.gamma <= 1.0 {
            return Err(CoreError::InvalidConfig("gamma must be > 1".into()));
        }
        if self.pace_iterations == 0 {
            return Err(CoreError::InvalidConfig("pace_iterations must be >= 1".into()));
        }
        if let Some(f) = self.initial_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(CoreError::InvalidConfig("initial_fraction outside (0,1]".into()));
            }
        }
        Ok(())
    }

    /// Stage-0 size for a corpus of n samples: max(8k, n / 2^ceil(log2(n/256)))
    /// clamped to n, so doubling from it reaches n on a clean runway.
    pub fn initial_size(&self, n: usize) -> usize {
        if let Some(f) = self.initial_fraction {
            return ((f * n as f64).ceil() as usize).clamp(1, n);
        }
        let pow = (n as f64 / 256.0).log2().ceil();
        let runway = (n as f64 / 2f64.powf(pow)).ceil() as usize;
        runway.max(self.k * 8).min(n)
    }
}

/// One curriculum stage: bounds, per-dimension candidate sets, the
/// sampled training set, and the sampling ratios that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub stage: u32,
    pub bounds: [f64; DIMENSIONS],
    pub ratios: [f64; DIMENSIONS],
    pub target_size: usize,
    /// Sampled training ids, ascending.
    pub sampled_ids: Vec<String>,
    /// Candidate ids per dimension, ascending. Not serialized into stage
    /// manifests; reconstructible from scores and bounds.
    #[serde(skip)]
    pub candidate_ids: [Vec<String>; DIMENSIONS],
    /// True when the candidate union could not fill target_size.
    pub short: bool,
    /// True once the plan covers the whole corpus and every candidate set
    /// spans it; the curriculum is finished.
    pub complete: bool,
}

impl StagePlan {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("plan serializes");
        std::fs::write(path, json).map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CoreError::Malformed(format!("{}: {e}", path.display())))
    }
}

/// Grown capability bounds: min(gamma * c_i, 1.0) per dimension.
pub fn next_bounds(state: &CapabilityState, gamma: f64) -> [f64; DIMENSIONS] {
    let mut bounds = [0.0; DIMENSIONS];
    for d in 0..DIMENSIONS {
        bounds[d] = (gamma * state.c[d]).min(1.0);
    }
    bounds
}

/// Candidate set per dimension: ids with v_i(x) < bound_i, id-ordered.
/// Strict inequality; the rank-rescaled view never reaches exactly 1.0,
/// so a bound of 1.0 admits every sample.
pub fn build_candidates(
    train_scores: &ScoreMatrix,
    bounds: &[f64; DIMENSIONS],
    view: ValueView,
) -> Result<[Vec<String>; DIMENSIONS]> {
    let values = train_scores.view(view)?;
    let ids = train_scores.sample_ids();
    let mut out: [Vec<String>; DIMENSIONS] = Default::default();
    for (dim, list) in out.iter_mut().enumerate() {
        let mut members: Vec<&String> = ids
            .iter()
            .zip(values)
            .filter(|(_, row)| row[dim] < bounds[dim])
            .map(|(id, _)| id)
            .collect();
        members.sort();
        *list = members.into_iter().cloned().collect();
    }
    Ok(out)
}

fn ratios_from_rho(rho: &[f64; DIMENSIONS]) -> Result<[f64; DIMENSIONS]> {
    let abs_sum: f64 = rho.iter().map(|r| r.abs()).sum();
    if abs_sum == 0.0 {
        return Err(CoreError::DegenerateMeasurement);
    }
    let mut ratios = [0.0; DIMENSIONS];
    for d in 0..DIMENSIONS {
        ratios[d] = rho[d].abs() / abs_sum;
    }
    Ok(ratios)
}

/// Integer quotas for `total` by largest-remainder rounding of the weights.
fn largest_remainder_quotas(weights: &[f64; DIMENSIONS], total: usize) -> [usize; DIMENSIONS] {
    let mut quotas = [0usize; DIMENSIONS];
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(DIMENSIONS);
    let mut assigned = 0;
    for d in 0..DIMENSIONS {
        let exact = weights[d] * total as f64;
        quotas[d] = exact.floor() as usize;
        assigned += quotas[d];
        remainders.push((d, exact - exact.floor()));
    }
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
    for (d, _) in remainders.into_iter().take(total.saturating_sub(assigned)) {
        quotas[d] += 1;
    }
    quotas
}

/// Draws the next stage training set: target = min(2 * prev_size, total);
/// per-dimension quotas proportional to |rho| (largest-remainder), drawn
/// without replacement, deduplicated across dimensions, with any shortfall
/// refilled uniformly from the candidate union. Deterministic by seed.
pub fn sample_stage(
    candidates: &[Vec<String>; DIMENSIONS],
    rho: &[f64; DIMENSIONS],
    prev_size: usize,
    total: usize,
    seed: u64,
    stage: u32,
    bounds: [f64; DIMENSIONS],
) -> Result<StagePlan> {
    if prev_size == 0 {
        return Err(CoreError::InvalidConfig("prev_size must be >= 1".into()));
    }
    let ratios = ratios_from_rho(rho)?;
    let target_size = (2 * prev_size).min(total);
    let quotas = largest_remainder_quotas(&ratios, target_size);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (stage as u64).wrapping_mul(0x9E3779B97F4A7C15));
    let mut chosen: BTreeSet<String> = BTreeSet::new();
    for dim in 0..DIMENSIONS {
        let mut pool = candidates[dim].clone();
        pool.shuffle(&mut rng);
        for id in pool.into_iter().take(quotas[dim]) {
            chosen.insert(id);
        }
    }
    let union: BTreeSet<&String> = candidates.iter().flatten().collect();
    if chosen.len() < target_size {
        let mut refill: Vec<&String> =
            union.iter().filter(|id| !chosen.contains(**id)).copied().collect();
        refill.shuffle(&mut rng);
        let need = target_size - chosen.len();
        for id in refill.into_iter().take(need) {
            chosen.insert(id.clone());
        }
    }
    let short = chosen.len() < target_size;
    let sampled_ids: Vec<String> = chosen.into_iter().collect();
    Ok(StagePlan {
        stage,
        bounds,
        ratios,
        target_size,
        sampled_ids,
        candidate_ids: candidates.clone(),
        short,
        complete: false,
    })
}

/// One scheduler step: grow bounds, build candidates, sample the stage.
///
/// The first call (no previous plan) warm-starts from the lowest-mean
/// samples at the configured initial fraction. If measured capabilities
/// collapse to an empty candidate union, the same warm pool is the
/// fallback. Once the target reaches the whole corpus and every candidate
/// set spans it, the emitted plan is the terminal full-corpus plan.
pub fn advance(
    config: &CurriculumConfig,
    state: &CapabilityState,
    train_scores: &ScoreMatrix,
    prev_plan: Option<&StagePlan>,
) -> Result<StagePlan> {
    config.check()?;
    let total = train_scores.len();
    if total == 0 {
        return Err(CoreError::EmptyInput("train scores".into()));
    }
    let view = config.value_view;
    let bounds = next_bounds(state, config.gamma);

    let Some(prev) = prev_plan else {
        // warm start: lowest mean-value samples
        let n0 = config.initial_size(total);
        let ratios = ratios_from_rho(&state.rho)?;
        let mut sampled_ids = lowest_mean_ids(train_scores, view, n0)?;
        sampled_ids.sort();
        return Ok(StagePlan {
            stage: 0,
            bounds,
            ratios,
            target_size: n0,
            sampled_ids,
            candidate_ids: Default::default(),
            short: false,
            complete: false,
        });
    };

    let stage = prev.stage + 1;
    let candidates = build_candidates(train_scores, &bounds, view)?;
    let union_size = candidates.iter().flatten().collect::<BTreeSet<_>>().len();
    let prev_size = prev.sampled_ids.len().max(1);

    if union_size == 0 {
        // degenerate measurement; fall back to the initial-fraction pool
        let n0 = config.initial_size(total);
        let target_size = (2 * prev_size).min(total);
        let ratios = ratios_from_rho(&state.rho)?;
        let mut sampled_ids = lowest_mean_ids(train_scores, view, n0.min(target_size))?;
        sampled_ids.sort();
        let short = sampled_ids.len() < target_size;
        return Ok(StagePlan {
            stage,
            bounds,
            ratios,
            target_size,
            sampled_ids,
            candidate_ids: candidates,
            short,
            complete: false,
        });
    }

    let mut plan = sample_stage(
        &candidates,
        &state.rho,
        prev_size,
        total,
        config.seed,
        stage,
        bounds,
    )?;
    plan.complete =
        plan.target_size == total && candidates.iter().all(|c| c.len() == total);
    if plan.complete {
        plan.sampled_ids = {
            let mut all = train_scores.sample_ids().to_vec();
            all.sort();
            all
        };
        plan.short = false;
    }
    Ok(plan)
}

fn lowest_mean_ids(scores: &ScoreMatrix, view: ValueView, n: usize) -> Result<Vec<String>> {
    let values = scores.view(view)?;
    let ids = scores.sample_ids();
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| {
        let ma: f64 = values[a].iter().sum();
        let mb: f64 = values[b].iter().sum();
        ma.partial_cmp(&mb).expect("finite").then_with(|| ids[a].cmp(&ids[b]))
    });
    Ok(order[..n.min(ids.len())].iter().map(|&i| ids[i].clone()).collect())
}

/// Active-learning query: per dimension, rank unlabeled samples by
/// proximity |v_i - bound_i| among those with v_i below the grown bound
/// min(gamma * bound_i, 1); draw quotas proportional to |rho|, dedup,
/// refill uniformly (eligible first, then the rest of the pool).
/// Returns ids in selection order.
pub fn al_query(
    unlabeled_scores: &ScoreMatrix,
    state: &CapabilityState,
    gamma: f64,
    budget: usize,
    seed: u64,
    view: ValueView,
) -> Result<Vec<String>> {
    let pool = unlabeled_scores.len();
    if budget > pool {
        return Err(CoreError::BudgetTooLarge { budget, pool });
    }
    let values = unlabeled_scores.view(view)?;
    let ids = unlabeled_scores.sample_ids();
    let bounds = next_bounds(state, gamma);
    let ratios = ratios_from_rho(&state.rho)?;
    let quotas = largest_remainder_quotas(&ratios, budget);

    let mut selected: Vec<String> = Vec::with_capacity(budget);
    let mut chosen: BTreeSet<&str> = BTreeSet::new();
    for dim in 0..DIMENSIONS {
        let cap = (gamma * bounds[dim]).min(1.0);
        let mut eligible: Vec<usize> =
            (0..pool).filter(|&i| values[i][dim] < cap).collect();
        eligible.sort_by(|&a, &b| {
            let da = (values[a][dim] - bounds[dim]).abs();
            let db = (values[b][dim] - bounds[dim]).abs();
            da.partial_cmp(&db).expect("finite").then_with(|| ids[a].cmp(&ids[b]))
        });
        let mut taken = 0;
        for i in eligible {
            if taken == quotas[dim] {
                break;
            }
            if chosen.insert(&ids[i]) {
                selected.push(ids[i].clone());
                taken += 1;
            }
        }
    }
    if selected.len() < budget {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // refill from eligible-anywhere first, then the whole pool
        let union_eligible: Vec<&String> = {
            let mut v: Vec<&String> = (0..pool)
                .filter(|&i| {
                    !chosen.contains(ids[i].as_str())
                        && (0..DIMENSIONS)
                            .any(|d| values[i][d] < (gamma * bounds[d]).min(1.0))
                })
                .map(|i| &ids[i])
                .collect();
            v.shuffle(&mut rng);
            v
        };
        for id in union_eligible {
            if selected.len() == budget {
                break;
            }
            if chosen.insert(id) {
                selected.push(id.clone());
            }
        }
        if selected.len() < budget {
            let mut rest: Vec<&String> =
                ids.iter().filter(|id| !chosen.contains(id.as_str())).collect();
            rest.shuffle(&mut rng);
            for id in rest {
                if selected.len() == budget {
                    break;
                }
                selected.push(id.clone());
            }
        }
    }
    Ok(selected)
}

//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured values. Run with `cargo test --test acceptance`
//! (add `-- --nocapture` to see the lines for passing criteria).

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use capcur_core::assessment::{f_logits, PerformanceRecord};
use capcur_core::corpus::{Answers, Sample, Split, Style};
use capcur_core::metrics::registry::MetricRegistry;
use capcur_core::metrics::compute_metric_vector;
use capcur_core::scheduler::{advance, CurriculumConfig};
use capcur_core::simlab::{
    run_al_experiment, run_experiment, AlStrategy, ExperimentConfig, Strategy, TrialResult,
};
use capcur_core::valuation::{
    fit_zca, partial_correlation, pearson, rank_rescale, whiten, ScoreMatrix, ValueView,
    DEFAULT_EPSILON,
};
use capcur_core::assessment::CapabilityState;
use capcur_core::report::{report_distribution, VALUE_BINS};

// Two HotpotQA dev samples as printed in the reference material.
const Q1_ID: &str = "5a7322a25542991f9a20c634";
const Q1_CONTEXT: &str = "The Metropolitan Life Insurance Company Tower, colloquially known as \
the Met Life Tower, is a landmark skyscraper located on Madison Avenue near the intersection \
with East 23rd Street, across from Madison Square Park in Manhattan, New York City. Designed \
by the architectural firm of Napoleon LeBrun & Sons and built by the Hedden Construction \
Company, the tower is modeled after the Campanile in Venice, Italy. The hotel located in the \
clock tower portion of the building has the address 5 Madison Avenue, while the office \
building covering the rest of the block, occupied primarily by Credit Suisse, is referred to \
as 1 Madison Avenue. 15 Hudson Yards is a residential building currently under construction \
on Manhattan's West Side. Located in Chelsea near Hell's Kitchen Penn Station area, the \
building is a part of the Hudson Yards project, a plan to redevelop the Metropolitan \
Transportation Authority's West Side Yards. The tower started construction on December 4, 2014.";
const Q1_QUESTION: &str = "Was the Metropolitan Life Insurance Company Tower [Met Life Tower] \
or the 15 Hudson Yards building designed by the firm of Napoleon LeBrun & Sons?";

const Q2_ID: &str = "5a72bd0b5542992359bc318f";
const Q2_CONTEXT: &str = "Andrea Louise Martin (born January 15, 1947) is an American actress, \
singer, author, and comedian, best known for her work in the television series \"SCTV\". She \
has appeared in films such as \"Black Christmas\" (1974), \"Wag the Dog\" (1997), \"Hedwig \
and the Angry Inch\" (2001), \"My Big Fat Greek Wedding\" (2002), and \"My Big Fat Greek \
Wedding 2\" (2016), and lent her voice to the animated films \"Anastasia\" (1997), \"The \
Rugrats Movie\" (1998) and \" (2001). Mark S. Hoplamazian is an American businessman who is \
the President and CEO of Hyatt Hotels Corporation. He received his A.B. in economics from \
Harvard College and his M.B.A. from the University of Chicago Booth School of Business.";
const Q2_QUESTION: &str = "Who achieved more academically, Andrea Martin or Mark Hoplamazian?";

fn golden_sample(id: &str, question: &str, context: &str, nfacts: u32) -> Sample {
    Sample {
        id: id.into(),
        question: question.into(),
        context: context.into(),
        style: Style::Extractive,
        answers: Answers::Extractive(vec!["-".into()]),
        supporting_fact_count: Some(nfacts),
        split: Split::Dev,
        features: BTreeMap::new(),
    }
}

#[test]
fn criterion_1_golden_metrics() {
    let start = Instant::now();
    let registry = MetricRegistry::default();
    let q1 = compute_metric_vector(
        &golden_sample(Q1_ID, Q1_QUESTION, Q1_CONTEXT, 2),
        &registry,
    );
    let q2 = compute_metric_vector(
        &golden_sample(Q2_ID, Q2_QUESTION, Q2_CONTEXT, 3),
        &registry,
    );
    let within = |vec: &capcur_core::metrics::MetricVector, metric: &str, expect: f64, tol: f64| {
        let got = vec.get(metric).unwrap_or_else(|| panic!("{metric} missing"));
        assert!(
            (got - expect).abs() <= tol,
            "{metric}: got {got:.4}, published {expect} (tolerance {tol})"
        );
        got
    };
    let i1 = within(&q1, "intra1", 0.521, 0.05);
    let i2 = within(&q2, "intra1", 0.608, 0.05);
    let e1 = within(&q1, "ent1", 6.243, 0.3);
    let e2 = within(&q2, "ent1", 6.363, 0.3);
    let fk = within(&q1, "flesch_kincaid", 16.748, 1.0);
    let ari = within(&q1, "ari", 17.659, 1.0);
    within(&q1, "nnums", 0.039, 0.01);
    assert_eq!(q1.get("nfacts"), Some(2.0), "nfacts Q1");
    assert_eq!(q2.get("nfacts"), Some(3.0), "nfacts Q2");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "PASS criterion 1 (golden metrics): intra1 {i1:.3}/{i2:.3}, ent1 {e1:.3}/{e2:.3}, \
         fk {fk:.3}, ari {ari:.3}, nfacts 2/3 exact, in {elapsed:?}"
    );
}

fn correlated_rows(n: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let shared: f64 = rng.gen_range(-1.0..1.0);
            let mut row = [0.0; 4];
            for v in &mut row {
                *v = 0.2 + shared + 0.8 * rng.gen_range(-1.0..1.0);
            }
            row
        })
        .collect()
}

fn sample_covariance(rows: &[[f64; 4]]) -> [[f64; 4]; 4] {
    let n = rows.len() as f64;
    let mut mean = [0.0; 4];
    for r in rows {
        for d in 0..4 {
            mean[d] += r[d] / n;
        }
    }
    let mut cov = [[0.0; 4]; 4];
    for r in rows {
        for i in 0..4 {
            for j in 0..4 {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    cov
}

#[test]
fn criterion_2_whitening_identity() {
    // covariance and correlation checks across sizes and seeds
    for (n, seed) in [(50usize, 1u64), (231, 2), (1000, 3), (5000, 4)] {
        let rows = correlated_rows(n, seed);
        let model = fit_zca(&rows, DEFAULT_EPSILON).unwrap();
        let white = whiten(&rows, &model);
        let cov = sample_covariance(&white);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (cov[i][j] - expect).abs() < 1e-6,
                    "n={n}: cov[{i}][{j}] = {}",
                    cov[i][j]
                );
            }
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                let x: Vec<f64> = white.iter().map(|r| r[i]).collect();
                let y: Vec<f64> = white.iter().map(|r| r[j]).collect();
                let (r, _) = pearson(&x, &y).unwrap();
                assert!(r.abs() < 1e-6, "n={n}: off-diagonal r[{i}][{j}] = {r}");
            }
        }
    }
    // timing at N = 10,000
    let rows = correlated_rows(10_000, 9);
    let start = Instant::now();
    let model = fit_zca(&rows, DEFAULT_EPSILON).unwrap();
    let white = whiten(&rows, &model);
    let cov = sample_covariance(&white);
    let elapsed = start.elapsed();
    assert!((cov[0][0] - 1.0).abs() < 1e-6);
    assert!(elapsed.as_secs_f64() < 1.0, "N=10k took {elapsed:?}");
    println!("PASS criterion 2 (whitening): |cov - I| < 1e-6 on all sizes, N=10k in {elapsed:?}");
}

#[test]
fn criterion_3_partial_correlation_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut max_err: f64 = 0.0;
    for _ in 0..100 {
        let rows: Vec<[f64; 4]> = (0..1000)
            .map(|_| {
                let shared: f64 = rng.gen_range(-1.0..1.0);
                let mut row = [0.0; 4];
                for v in &mut row {
                    *v = shared + rng.gen_range(-1.0..1.0);
                }
                row
            })
            .collect();
        let target: Vec<f64> = rows
            .iter()
            .map(|r| 0.6 * r[0] - 0.4 * r[1] + 0.2 * r[3] + rng.gen_range(-0.5..0.5))
            .collect();
        let dim = rng.gen_range(0..4);
        let ours = partial_correlation(&rows, &target, dim).unwrap();
        let oracle = precision_matrix_partial(&rows, &target, dim);
        max_err = max_err.max((ours - oracle).abs());
        assert!((ours - oracle).abs() < 1e-10, "dim {dim}: {ours} vs {oracle}");
    }
    // degenerate no-controls case equals plain Pearson
    let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
    let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.21).cos() + 0.1 * i as f64).collect();
    let rho =
        capcur_core::valuation::partial_correlation_with_controls(&x, &y, &[]).unwrap();
    let (r, _) = pearson(&x, &y).unwrap();
    assert!((rho - r).abs() < 1e-14);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "PASS criterion 3 (partial correlation): 100 instances vs precision-matrix oracle, \
         max |err| = {max_err:.2e}, no-controls == pearson, in {elapsed:?}"
    );
}

/// Independently coded oracle: invert the covariance of [x, y, controls]
/// and read the partial correlation off the precision matrix.
fn precision_matrix_partial(rows: &[[f64; 4]], target: &[f64], dim: usize) -> f64 {
    let n = rows.len();
    let k = 5;
    let others: Vec<usize> = (0..4).filter(|&d| d != dim).collect();
    let col = |j: usize, i: usize| -> f64 {
        match j {
            0 => rows[i][dim],
            1 => target[i],
            _ => rows[i][others[j - 2]],
        }
    };
    let means: Vec<f64> =
        (0..k).map(|j| (0..n).map(|i| col(j, i)).sum::<f64>() / n as f64).collect();
    let mut cov = vec![vec![0.0; k]; k];
    for i in 0..n {
        for a in 0..k {
            for b in 0..k {
                cov[a][b] += (col(a, i) - means[a]) * (col(b, i) - means[b]);
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= (n - 1) as f64;
        }
    }
    let p = gauss_jordan_inverse(&cov);
    -p[0][1] / (p[0][0] * p[1][1]).sqrt()
}

fn gauss_jordan_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = m.len();
    let mut a = m.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for p in 0..k {
        let pivot = (p..k).max_by(|&i, &j| a[i][p].abs().total_cmp(&a[j][p].abs())).unwrap();
        a.swap(p, pivot);
        inv.swap(p, pivot);
        let f = a[p][p];
        for j in 0..k {
            a[p][j] /= f;
            inv[p][j] /= f;
        }
        for i in 0..k {
            if i != p {
                let f = a[i][p];
                for j in 0..k {
                    a[i][j] -= f * a[p][j];
                    inv[i][j] -= f * inv[p][j];
                }
            }
        }
    }
    inv
}

#[test]
fn criterion_4_f_logits_grid() {
    let confidences = [0.5, 0.9, 1.0, 1.0 + 1e-6, 1.0 + 2e-6, 1.5, std::f64::consts::E, 7.0];
    let f1s = [0.0, 0.25, 0.5, 0.75, 1.0];
    let floor = 1.0 + 1e-6;
    let mut checked = 0;
    for &f1 in &f1s {
        for &slog in &confidences {
            for &elog in &confidences {
                let rec = PerformanceRecord {
                    sample_id: "g".into(),
                    f1,
                    style: Style::Extractive,
                    slog: Some(slog),
                    elog: Some(elog),
                    candlog: None,
                };
                let got = f_logits(&rec).unwrap();
                let expect = f1 * slog.max(floor).ln() * elog.max(floor).ln();
                assert_eq!(got, expect, "f1={f1} slog={slog} elog={elog}");
                if f1 == 0.0 {
                    assert_eq!(got, 0.0);
                }
                checked += 1;
            }
            let rec = PerformanceRecord {
                sample_id: "g".into(),
                f1,
                style: Style::MultipleChoice,
                slog: None,
                elog: None,
                candlog: Some(slog),
            };
            let got = f_logits(&rec).unwrap();
            let expect = f1 * slog.max(floor).ln();
            assert_eq!(got, expect, "f1={f1} candlog={slog}");
            checked += 1;
        }
    }
    println!("PASS criterion 4 (f_logits): exact equality on {checked} grid points incl. clamp boundary");
}

#[test]
fn criterion_5_scheduler_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for run in 0..200 {
        let n = rng.gen_range(32..400);
        let rows: Vec<[f64; 4]> = (0..n)
            .map(|_| {
                let mut row = [0.0; 4];
                for v in &mut row {
                    *v = rng.gen_range(0.0..1.0);
                }
                row
            })
            .collect();
        let ids: Vec<String> = (0..n).map(|i| format!("r{run:03}s{i:04}")).collect();
        let mut scores = ScoreMatrix::new(ids, rows.clone()).unwrap();
        scores.set_rescaled(rank_rescale(&rows)).unwrap();

        let gamma = rng.gen_range(1.1..3.0);
        // half the runs force full-span bounds so doubling runs all the
        // way; the other half exercise bound-limited candidate sets
        let full_span = run % 2 == 0;
        let c_range = if full_span { (1.0 / gamma)..1.0 } else { 0.05..0.6 };
        let mut c = [0.0; 4];
        for v in &mut c {
            *v = rng.gen_range(c_range.clone());
        }
        let mut rho = [0.0f64; 4];
        for v in &mut rho {
            *v = rng.gen_range(-1.0..1.0);
        }
        if rho.iter().all(|r| r.abs() < 1e-3) {
            rho[0] = 0.5;
        }
        let state = CapabilityState { stage: 0, c, rho, topk_mean_f: [0.5; 4], k: 8 };
        let config = CurriculumConfig {
            gamma,
            initial_fraction: Some(rng.gen_range(0.05..0.3)),
            seed: rng.gen(),
            ..CurriculumConfig::default()
        };

        let mut plans = Vec::new();
        let mut plan = advance(&config, &state, &scores, None).unwrap();
        plans.push(plan.clone());
        for _ in 0..12 {
            if plan.complete {
                break;
            }
            let prev_size = plan.sampled_ids.len();
            plan = advance(&config, &state, &scores, Some(&plan)).unwrap();
            // the doubling rule, exactly
            assert_eq!(plan.target_size, (2 * prev_size).min(n), "run {run}");
            if !plan.short {
                assert_eq!(plan.sampled_ids.len(), plan.target_size, "run {run}");
            }
            // every sampled id satisfies the candidate criterion in at
            // least one dimension (refills come from the union too)
            let bounds = plan.bounds;
            let rescaled = scores.view(ValueView::Rescaled).unwrap();
            let by_id: std::collections::HashMap<&str, usize> = scores
                .sample_ids()
                .iter()
                .enumerate()
                .map(|(i, id)| (id.as_str(), i))
                .collect();
            let union_nonempty = plan.candidate_ids.iter().any(|c| !c.is_empty());
            if union_nonempty {
                for id in &plan.sampled_ids {
                    let i = by_id[id.as_str()];
                    assert!(
                        (0..4).any(|d| rescaled[i][d] < bounds[d]),
                        "run {run}: {id} outside all candidate criteria"
                    );
                }
            }
            plans.push(plan.clone());
        }
        if full_span {
            assert!(plans.last().unwrap().complete, "run {run} never completed");
        }

        // byte-identical replay of the whole chain
        let mut replay = Vec::new();
        let mut p = advance(&config, &state, &scores, None).unwrap();
        replay.push(p.clone());
        for _ in 0..12 {
            if p.complete {
                break;
            }
            p = advance(&config, &state, &scores, Some(&p)).unwrap();
            replay.push(p.clone());
        }
        let a = serde_json::to_vec(&plans).unwrap();
        let b = serde_json::to_vec(&replay).unwrap();
        assert_eq!(a, b, "run {run}: replay differs");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "PASS criterion 5 (scheduler invariants): 200 randomized runs, sizes exact, \
         criteria satisfied, replays byte-identical, in {elapsed:?}"
    );
}

fn mean_final(results: &[TrialResult]) -> f64 {
    results.iter().map(|r| r.final_accuracy).sum::<f64>() / results.len() as f64
}

#[test]
fn criterion_6_ordering_effect() {
    let start = Instant::now();
    let seeds: Vec<u64> = (0..20).collect();
    let run = |strategy| {
        let config = ExperimentConfig::desk_default(strategy, seeds.clone());
        mean_final(&run_experiment(&config).unwrap())
    };
    let cbbc = run(Strategy::Cbbc);
    let easy = run(Strategy::EasyToHard);
    let hard = run(Strategy::HardToEasy);
    let random = run(Strategy::Random);
    let elapsed = start.elapsed();
    assert!(
        easy - hard >= 0.02,
        "easy_to_hard {easy:.4} must beat hard_to_easy {hard:.4} by >= 2 points"
    );
    assert!(cbbc >= easy, "cbbc {cbbc:.4} must not trail easy_to_hard {easy:.4}");
    assert!(cbbc >= random, "cbbc {cbbc:.4} must not trail random {random:.4}");
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "PASS criterion 6 (ordering effect): cbbc {cbbc:.4} >= easy {easy:.4} > hard {hard:.4} \
         (margin {:.4}), cbbc >= random {random:.4}, in {elapsed:?}",
        easy - hard
    );
}

#[test]
fn criterion_7_label_efficiency() {
    let start = Instant::now();
    let seeds: Vec<u64> = (0..20).collect();
    let mut config = ExperimentConfig::desk_default(Strategy::Cbbc, seeds);
    config.al_strategy = AlStrategy::CbbcAl;
    let cbbc = run_al_experiment(&config, 0.05).unwrap();
    config.al_strategy = AlStrategy::Random;
    let random = run_al_experiment(&config, 0.05).unwrap();

    let mut ratios: Vec<f64> = cbbc
        .iter()
        .zip(&random)
        .map(|(c, r)| {
            assert_eq!(c.seed, r.seed);
            let target = r.final_accuracy;
            let labels_random = *r.labels_used.as_ref().unwrap().last().unwrap() as f64;
            c.accuracy_curve
                .iter()
                .zip(c.labels_used.as_ref().unwrap())
                .find(|((_, acc), _)| *acc >= target)
                .map(|(_, &labels)| labels as f64 / labels_random)
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = ratios[ratios.len() / 2];
    let elapsed = start.elapsed();
    assert!(
        median <= 0.8,
        "median label ratio {median:.3} must be <= 0.8 (ratios {ratios:?})"
    );
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "PASS criterion 7 (label efficiency): cbbc_al matches random's final accuracy with \
         median {:.1}% of its labels, in {elapsed:?}",
        median * 100.0
    );
}

#[test]
fn criterion_8_distribution_report() {
    // hand-built 10-sample fixture; bins and tallies computed by hand
    let rows = vec![
        [0.10, 0.5, 0.5, 0.5],
        [0.15, 0.5, 0.5, 0.5],
        [0.45, 0.5, 0.5, 0.5],
        [0.50, 0.5, 0.5, 0.5],
        [0.55, 0.5, 0.5, 0.5],
        [0.90, 0.5, 0.5, 0.5],
        [0.95, 0.5, 0.5, 0.5],
        [0.85, 0.5, 0.5, 0.5],
        [0.99, 0.5, 0.5, 0.5],
        [0.81, 0.5, 0.5, 0.5],
    ];
    let ids: Vec<String> = (0..10).map(|i| format!("s{i:02}")).collect();
    let scores = ScoreMatrix::new(ids.clone(), rows).unwrap();
    // f_logits = f1 * ln(slog) * ln(elog) = value with elog = e, slog = e^value
    let fs = [2.0f64, 1.9, 1.5, 1.55, 1.5, 1.0, 1.05, 1.1, 1.0, 1.15];
    let perf: Vec<PerformanceRecord> = fs
        .iter()
        .zip(&ids)
        .map(|(&f, id)| PerformanceRecord {
            sample_id: id.clone(),
            f1: 1.0,
            style: Style::Extractive,
            slog: Some(f.exp()),
            elog: Some(std::f64::consts::E),
            candlog: None,
        })
        .collect();
    let report = report_distribution(&scores, &perf, ValueView::Raw).unwrap();

    // manual tally in dimension 1: bins 0/2/4 hold 2/3/5 samples, and the
    // normalized performance levels are 4/2/0 respectively
    assert_eq!(report.counts[0], [2, 0, 3, 0, 5]);
    assert_eq!(report.frequencies[0][0][4], 1.0);
    assert_eq!(report.frequencies[0][2][2], 1.0);
    assert_eq!(report.frequencies[0][4][0], 1.0);
    // every non-empty bin's frequencies sum to 1
    for dim in 0..4 {
        for bin in 0..VALUE_BINS {
            if report.counts[dim][bin] > 0 {
                let total: f64 = report.frequencies[dim][bin].iter().sum();
                assert!((total - 1.0).abs() < 1e-12, "dim {dim} bin {bin}");
            }
        }
    }
    println!("PASS criterion 8 (distribution report): manual tally matches, frequencies sum to 1");
}

#[test]
fn criterion_9_end_to_end_determinism() {
    let start = Instant::now();
    let base = tempfile::tempdir().unwrap();
    let fixture = write_fixture(base.path());
    let run_a = pipeline_run(base.path().join("a"), &fixture);
    let run_b = pipeline_run(base.path().join("b"), &fixture);
    assert_eq!(run_a.len(), run_b.len());
    for (name, bytes_a) in &run_a {
        let bytes_b = &run_b[name];
        assert_eq!(bytes_a, bytes_b, "output {name} differs between runs");
    }
    let elapsed = start.elapsed();
    println!(
        "PASS criterion 9 (end-to-end determinism): {} pipeline outputs byte-identical, in {elapsed:?}",
        run_a.len()
    );
}

/// 64-sample deterministic corpus fixture plus features and a perf log.
fn write_fixture(dir: &std::path::Path) -> Fixture {
    use std::fmt::Write as _;
    let topics = ["the clock tower", "a river delta", "the old library", "a mountain pass",
        "the city council", "an ancient bridge", "the harbor master", "a desert trail"];
    let verbs = ["built", "described", "measured", "explored", "painted", "repaired",
        "mapped", "documented"];
    let extras = ["Records from 1885 mention the site.", "Several travelers described the route.",
        "It was repaired twice before 1900.", "The survey counted 42 arches.",
        "Nobody knows why it was abandoned.", "Its height is 73 meters.",
        "All visitors must register before entering.", "The committee met every spring."];
    let mut corpus = String::new();
    let mut features = String::new();
    let mut perf = String::new();
    for i in 0..64usize {
        let topic = topics[i % 8];
        let verb = verbs[(i / 8) % 8];
        let extra1 = extras[(i * 3) % 8];
        let extra2 = extras[(i * 5 + 1) % 8];
        let context = format!(
            "In {} the engineers {verb} {topic} near the northern road. {extra1} {extra2}",
            1870 + i
        );
        let question = format!("Who {verb} {topic} near the northern road?");
        let split = if i < 48 { "train" } else { "dev" };
        writeln!(
            corpus,
            r#"{{"id":"q{i:03}","question":{q},"context":{c},"style":"extractive","answers":["the engineers"],"supporting_fact_count":{n},"split":"{split}"}}"#,
            q = serde_json::to_string(&question).unwrap(),
            c = serde_json::to_string(&context).unwrap(),
            n = (i % 4) + 1
        )
        .unwrap();
        writeln!(
            features,
            r#"{{"sample_id":"q{i:03}","values":{{"tree_height":{th},"tree_width":{tw},"bertscore":{bs:.4},"moverscore":{ms:.4},"ls_score":{ls:.4}}}}}"#,
            th = 5 + (i * 7) % 9,
            tw = 4 + (i * 5) % 11,
            bs = 0.5 + 0.4 * ((i * 13) % 17) as f64 / 17.0,
            ms = -0.2 + 0.6 * ((i * 11) % 13) as f64 / 13.0,
            ls = 0.2 + 0.5 * ((i * 3) % 7) as f64 / 7.0
        )
        .unwrap();
        let p = 0.3 + 0.6 * ((i * 29) % 31) as f64 / 31.0;
        writeln!(
            perf,
            r#"{{"sample_id":"q{i:03}","f1":{p:.4},"style":"extractive","slog":{s:.4},"elog":{s:.4}}}"#,
            s = (1.0 + p).exp()
        )
        .unwrap();
    }
    let corpus_path = dir.join("corpus.jsonl");
    let features_path = dir.join("features.jsonl");
    let perf_path = dir.join("perf.jsonl");
    let config_path = dir.join("curriculum.json");
    std::fs::write(&corpus_path, corpus).unwrap();
    std::fs::write(&features_path, features).unwrap();
    std::fs::write(&perf_path, perf).unwrap();
    std::fs::write(
        &config_path,
        r#"{"gamma":1.5,"pace_iterations":1000,"k":8,"initial_fraction":0.125,"seed":7,"value_view":"rescaled"}"#,
    )
    .unwrap();
    Fixture { corpus_path, features_path, perf_path, config_path }
}

struct Fixture {
    corpus_path: std::path::PathBuf,
    features_path: std::path::PathBuf,
    perf_path: std::path::PathBuf,
    config_path: std::path::PathBuf,
}

/// Runs ingest -> score -> normalize -> whiten -> measure -> plan and
/// returns every output file's bytes keyed by name.
fn pipeline_run(
    dir: std::path::PathBuf,
    fixture: &Fixture,
) -> BTreeMap<String, Vec<u8>> {
    std::fs::create_dir_all(&dir).unwrap();
    let bin = env!("CARGO_BIN_EXE_capcur");
    let out = |name: &str| dir.join(name);
    let run = |args: &[&str]| {
        let status = std::process::Command::new(bin)
            .args(["--out-dir", dir.to_str().unwrap(), "--quiet"])
            .args(args)
            .status()
            .expect("binary runs");
        assert!(status.success(), "command failed: {args:?}");
    };
    run(&[
        "ingest",
        "--input", fixture.corpus_path.to_str().unwrap(),
        "--features", fixture.features_path.to_str().unwrap(),
        "--out", out("unified.jsonl").to_str().unwrap(),
    ]);
    run(&[
        "score",
        "--corpus", out("unified.jsonl").to_str().unwrap(),
        "--out", out("metrics.jsonl").to_str().unwrap(),
    ]);
    run(&[
        "normalize",
        "--metrics", out("metrics.jsonl").to_str().unwrap(),
        "--fit-split", "train",
        "--out", out("scores.jsonl").to_str().unwrap(),
    ]);
    run(&[
        "whiten",
        "--scores", out("scores.jsonl").to_str().unwrap(),
        "--out", out("scores_white.jsonl").to_str().unwrap(),
    ]);
    run(&[
        "measure",
        "--scores", out("scores_white.jsonl").to_str().unwrap(),
        "--perf", fixture.perf_path.to_str().unwrap(),
        "--k", "8",
        "--out", out("state.json").to_str().unwrap(),
    ]);
    run(&[
        "plan",
        "--config", fixture.config_path.to_str().unwrap(),
        "--scores", out("scores_white.jsonl").to_str().unwrap(),
        "--state", out("state.json").to_str().unwrap(),
        "--out", out("stage0.json").to_str().unwrap(),
    ]);
    run(&[
        "plan",
        "--config", fixture.config_path.to_str().unwrap(),
        "--scores", out("scores_white.jsonl").to_str().unwrap(),
        "--state", out("state.json").to_str().unwrap(),
        "--prev", out("stage0.json").to_str().unwrap(),
        "--out", out("stage1.json").to_str().unwrap(),
    ]);
    [
        "unified.jsonl", "metrics.jsonl", "scores.jsonl", "scores_white.jsonl",
        "state.json", "stage0.json", "stage1.json",
    ]
    .iter()
    .map(|name| (name.to_string(), std::fs::read(out(name)).unwrap()))
    .collect()
}

//! Subcommand implementations. Each handler records its inputs and
//! outputs on the run manifest and returns a validation/internal error
//! classification for the exit code.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use capcur_core::assessment::{
    f_logits, load_performance, measure_capabilities, CapabilityState,
};
use capcur_core::corpus::{self, CorpusFormat, Split};
use capcur_core::error::CoreError;
use capcur_core::metrics::registry::{MetricRegistry, MetricSource};
use capcur_core::metrics::{
    compute_metric_vector, load_metric_records, save_metric_records, MetricFileRecord,
};
use capcur_core::report::{
    distribution_to_csv, matrix_to_csv, report_correlation, report_distribution,
};
use capcur_core::scheduler::{advance, al_query, CurriculumConfig, StagePlan};
use capcur_core::simlab::{
    run_al_experiment, run_experiment, summarize, trials_to_csv, ExperimentConfig,
};
use capcur_core::valuation::{
    capability_values, fit_normalizer, fit_zca, normalize as cdf_normalize, pearson,
    rank_rescale, whiten, ScoreMatrix, ValueView,
};

use crate::cli::*;
use crate::error::CliError;
use crate::manifest::RunManifest;

/// Per-invocation context shared by every handler.
pub struct Ctx<'a> {
    pub manifest: &'a mut RunManifest,
    pub quiet: bool,
    pub seed: Option<u64>,
    pub config_dir: &'a Path,
}

macro_rules! say {
    ($ctx:expr, $($arg:tt)*) => {
        if !$ctx.quiet {
            println!($($arg)*);
        }
    };
}

type CmdResult = Result<(), CliError>;

fn write_text(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text)
        .map_err(|e| CliError::internal(format!("writing {}: {e}", path.display())))
}

fn load_registry(path: &Option<PathBuf>, ctx: &mut Ctx) -> Result<MetricRegistry, CliError> {
    match path {
        Some(p) => {
            ctx.manifest.record_input(p);
            Ok(MetricRegistry::load(p)?)
        }
        None => Ok(MetricRegistry::default()),
    }
}

pub fn ingest(args: &IngestArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.arg("input", args.input.display());
    ctx.manifest.arg("out", args.out.display());
    ctx.manifest.record_input(&args.input);
    let (corpus, report) = corpus::load_corpus(&args.input, CorpusFormat::UnifiedJsonl)?;
    let mut corpus = corpus;
    for feature_path in &args.features {
        ctx.manifest.record_input(feature_path);
        let records = corpus::load_features(feature_path)?;
        let (merged, rejected) = corpus::merge_features(&corpus, &records)?;
        corpus = merged;
        if !rejected.is_empty() {
            eprintln!(
                "warning: {} feature records rejected (non-finite values): {:?}",
                rejected.len(),
                rejected
            );
        }
    }
    corpus::save_corpus(&corpus, &args.out)?;
    ctx.manifest.record_output(&args.out);
    ctx.manifest.arg("loaded", report.loaded);
    ctx.manifest.arg("rejected", report.rejected);
    say!(ctx, "loaded {} samples, rejected {}", report.loaded, report.rejected);
    for (line, reason) in report.rejections.iter().take(20) {
        eprintln!("  line {line}: {reason}");
    }
    Ok(())
}

pub fn score(args: &ScoreArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.arg("corpus", args.corpus.display());
    ctx.manifest.arg("out", args.out.display());
    ctx.manifest.record_input(&args.corpus);
    let registry = load_registry(&args.registry, ctx)?;
    let (corpus, load_report) = corpus::load_corpus(&args.corpus, CorpusFormat::UnifiedJsonl)?;
    if load_report.rejected > 0 {
        eprintln!("warning: {} corpus records rejected on load", load_report.rejected);
    }
    let records: Vec<MetricFileRecord> = corpus
        .samples()
        .iter()
        .map(|s| MetricFileRecord::new(compute_metric_vector(s, &registry), s.split))
        .collect();
    save_metric_records(&records, &args.out)?;
    ctx.manifest.record_output(&args.out);
    say!(ctx, "scored {} samples -> {}", records.len(), args.out.display());
    Ok(())
}

fn split_of(arg: SplitArg) -> Split {
    match arg {
        SplitArg::Train => Split::Train,
        SplitArg::Dev => Split::Dev,
    }
}

pub fn normalize(args: &NormalizeArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.arg("metrics", args.metrics.display());
    ctx.manifest.arg("out", args.out.display());
    ctx.manifest.arg("fit_split", format!("{:?}", args.fit_split));
    ctx.manifest.record_input(&args.metrics);
    let registry = load_registry(&args.registry, ctx)?;
    let records = load_metric_records(&args.metrics)?;
    if records.is_empty() {
        return Err(CoreError::EmptyInput("metrics file".into()).into());
    }

    let fit_records: Vec<&MetricFileRecord> = match args.fit_split {
        FitSplitArg::All => records.iter().collect(),
        FitSplitArg::Train => records.iter().filter(|r| r.split == Split::Train).collect(),
        FitSplitArg::Dev => records.iter().filter(|r| r.split == Split::Dev).collect(),
    };
    if fit_records.is_empty() {
        return Err(CliError::validation(format!(
            "no records in the {:?} fit split",
            args.fit_split
        )));
    }
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rec in &fit_records {
        for (metric, value) in &rec.values {
            columns.entry(metric.clone()).or_default().push(*value);
        }
    }
    let model = fit_normalizer(&columns, &registry)?;

    let emit: Vec<&MetricFileRecord> = match args.only_split {
        None => records.iter().collect(),
        Some(s) => records.iter().filter(|r| r.split == split_of(s)).collect(),
    };
    let mut ids = Vec::with_capacity(emit.len());
    let mut raw = Vec::with_capacity(emit.len());
    for rec in emit {
        let v = capability_values(&rec.vector(), &model, &registry)?;
        ids.push(rec.sample_id.clone());
        raw.push(v);
    }
    let matrix = ScoreMatrix::new(ids, raw)?;
    matrix.save(&args.out)?;
    ctx.manifest.record_output(&args.out);
    say!(ctx, "normalized {} samples -> {}", matrix.len(), args.out.display());
    Ok(())
}

pub fn whiten_cmd(args: &WhitenArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.arg("scores", args.scores.display());
    ctx.manifest.arg("epsilon", args.epsilon);
    ctx.manifest.arg("out", args.out.display());
    ctx.manifest.record_input(&args.scores);
    let mut scores = ScoreMatrix::load(&args.scores)?;
    let fit_rows = match &args.fit_scores {
        Some(p) => {
            ctx.manifest.record_input(p);
            ScoreMatrix::load(p)?.raw().to_vec()
        }
        None => scores.raw().to_vec(),
    };
    let model = fit_zca(&fit_rows, args.epsilon)?;
    let white = whiten(scores.raw(), &model);
    scores.set_rescaled(rank_rescale(&white))?;
    scores.set_whitened(white)?;
    scores.save(&args.out)?;
    ctx.manifest.record_output(&args.out);
    say!(ctx, "whitened {} samples -> {}", scores.len(), args.out.display());
    Ok(())
}

pub fn correlate(args: &CorrelateArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.arg("scores", args.scores.display());
    ctx.manifest.arg("target", args.target.display());
    ctx.manifest.arg("out", args.out.display());
    ctx.manifest.record_input(&args.scores);
    ctx.manifest.record_input(&args.target);
    let scores = ScoreMatrix::load(&args.scores)?;
    let perf = load_performance(&args.target)?;
    let pairs: HashMap<&str, (f64, f64)> = perf
        .iter()
        .map(|r| f_logits(r).map(|f| (r.sample_id.as_str(), (r.f1, f))))
        .collect::<Result<_, _>>()?;
    let shared: Vec<usize> = scores
        .sample_ids()
        .iter()
        .enumerate()
        .filter(|(_, id)| pairs.contains_key(id.as_str()))
        .map(|(i, _)| i)
        .collect();
    if shared.len() < 3 {
        return Err(CliError::validation("fewer than 3 ids shared by scores and target"));
    }
    let f1_vec: Vec<f64> =
        shared.iter().map(|&i| pairs[scores.sample_ids()[i].as_str()].0).collect();
    let fl_vec: Vec<f64> =
        shared.iter().map(|&i| pairs[scores.sample_ids()[i].as_str()].1).collect();

    let mut csv = String::from("kind,id,dimension,target,r,p\n");
    for dim in 0..4 {
        let col: Vec<f64> = shared.iter().map(|&i| scores.raw()[i][dim]).collect();
        for (target_name, target) in [("f1", &f1_vec), ("f_logits", &fl_vec)] {
            let (r, p) = pearson(&col, target)?;
            csv.push_str(&format!(
                "dimension,v{},{},{target_name},{r:.6},{p:.6}\n",
                dim + 1,
                dim + 1
            ));
        }
    }

    if let Some(metrics_path) = &args.metrics {
        ctx.manifest.record_input(metrics_path);
        let registry = load_registry(&args.registry, ctx)?;
        let records = load_metric_records(metrics_path)?;
        let by_sample: HashMap<&str, &MetricFileRecord> =
            records.iter().map(|r| (r.sample_id.as_str(), r)).collect();
        let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for rec in &records {
            for (metric, value) in &rec.values {
                columns.entry(metric.clone()).or_default().push(*value);
            }
        }
        let model = fit_normalizer(&columns, &registry)?;
        for spec in registry.metrics() {
            // correlate the normalized metric against both targets over
            // samples where the metric is present
            let mut xs = Vec::new();
            let mut f1s = Vec::new();
            let mut fls = Vec::new();
            for &i in &shared {
                let id = scores.sample_ids()[i].as_str();
                if let Some(rec) = by_sample.get(id) {
                    if let Some(raw) = rec.values.get(&spec.id) {
                        xs.push(cdf_normalize(*raw, &spec.id, &model)?);
                        let (f1, fl) = pairs[id];
                        f1s.push(f1);
                        fls.push(fl);
                    }
                }
            }
            if xs.len() < 3 {
                continue;
            }
            for (target_name, target) in [("f1", &f1s), ("f_logits", &fls)] {
                match pearson(&xs, target) {
                    Ok((r, p)) => csv.push_str(&format!(
                        "metric,{},{},{target_name},{r:.6},{p:.6}\n",
                        spec.id, spec.dimension
                    )),
                    Err(CoreError::ZeroVariance(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    write_text(&args.out, &csv)?;
    ctx.manifest.record_output(&args.out);
    say!(ctx, "correlation table -> {}", args.out.display());
    Ok(())
}

pub fn measure(args: &MeasureArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.arg("scores", args.scores.display());
    ctx.manifest.arg("perf", args.perf.display());
    ctx.manifest.arg("k", args.k);
    ctx.manifest.arg("stage", args.stage);
    ctx.manifest.record_input(&args.scores);
    ctx.manifest.record_input(&args.perf);
    let scores = ScoreMatrix::load(&args.scores)?;
    let perf = load_performance(&args.perf)?;
    let view = view_of(args.view);
    let state = measure_capabilities(&scores, &perf, args.k, args.stage, view)?;
    let json = serde_json::to_string_pretty(&state)
        .map_err(|e| CliError::internal(format!("serializing state: {e}")))?;
    write_text(&args.out, &json)?;
    ctx.manifest.record_output(&args.out);
    say!(ctx, 
        "stage {} capabilities: [{:.4}, {:.4}, {:.4}, {:.4}] -> {}",
        state.stage,
        state.c[0],
        state.c[1],
        state.c[2],
        state.c[3],
        args.out.display()
    );
    Ok(())
}

fn view_of(arg: ViewArg) -> ValueView {
    match arg {
        ViewArg::Raw => ValueView::Raw,
        ViewArg::Rescaled => ValueView::Rescaled,
    }
}

fn load_state(path: &Path) -> Result<CapabilityState, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::from(CoreError::Io { path: path.display().to_string(), source: e })
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn plan(args: &PlanArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.arg("scores", args.scores.display());
    ctx.manifest.arg("state", args.state.display());
    ctx.manifest.arg("mode", format!("{:?}", args.mode));
    ctx.manifest.record_input(&args.scores);
    ctx.manifest.record_input(&args.state);
    // explicit --config wins; otherwise curriculum.json in the config
    // directory, if present; otherwise built-in defaults
    let default_config = ctx.config_dir.join("curriculum.json");
    let config_path = args
        .config
        .clone()
        .or_else(|| default_config.exists().then_some(default_config));
    let mut config = match &config_path {
        Some(p) => {
            ctx.manifest.record_input(p);
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::from(CoreError::Io { path: p.display().to_string(), source: e })
            })?;
            serde_json::from_str::<CurriculumConfig>(&text)
                .map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?
        }
        None => CurriculumConfig::default(),
    };
    if let Some(seed) = ctx.seed {
        config.seed = seed;
    }
    ctx.manifest.arg("gamma", config.gamma);
    ctx.manifest.arg("seed", config.seed);
    let scores = ScoreMatrix::load(&args.scores)?;
    let state = load_state(&args.state)?;

    match args.mode {
        PlanMode::Curriculum => {
            let prev = match &args.prev {
                Some(p) => {
                    ctx.manifest.record_input(p);
                    Some(StagePlan::load(p)?)
                }
                None => None,
            };
            let plan = advance(&config, &state, &scores, prev.as_ref())?;
            plan.save(&args.out)?;
            ctx.manifest.record_output(&args.out);
            say!(ctx, 
                "stage {}: {} of {} sampled{}{} -> {}",
                plan.stage,
                plan.sampled_ids.len(),
                plan.target_size,
                if plan.short { " (short)" } else { "" },
                if plan.complete { " (complete)" } else { "" },
                args.out.display()
            );
        }
        PlanMode::Al => {
            let budget = args.budget.ok_or_else(|| {
                CliError::validation("--budget is required with --mode al")
            })?;
            ctx.manifest.arg("budget", budget);
            let selected = al_query(
                &scores,
                &state,
                config.gamma,
                budget,
                config.seed,
                config.value_view,
            )?;
            let out = serde_json::json!({ "budget": budget, "selected_ids": selected });
            write_text(&args.out, &serde_json::to_string_pretty(&out).expect("json"))?;
            ctx.manifest.record_output(&args.out);
            say!(ctx, "selected {budget} samples -> {}", args.out.display());
        }
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.arg("config", args.config.display());
    ctx.manifest.arg("mode", format!("{:?}", args.mode));
    ctx.manifest.record_input(&args.config);
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::from(CoreError::Io { path: args.config.display().to_string(), source: e })
    })?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", args.config.display())))?;
    let results = match args.mode {
        SimulateMode::Curriculum => run_experiment(&config)?,
        SimulateMode::Al => run_al_experiment(&config, args.budget_fraction)?,
    };
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::internal(format!("creating {}: {e}", args.out.display())))?;
    let trials_path = args.out.join("trials.csv");
    write_text(&trials_path, &trials_to_csv(&results))?;
    ctx.manifest.record_output(&trials_path);
    let trials_json = args.out.join("trials.jsonl");
    let mut lines = String::new();
    for r in &results {
        lines.push_str(&serde_json::to_string(r).expect("trial serializes"));
        lines.push('\n');
    }
    write_text(&trials_json, &lines)?;
    ctx.manifest.record_output(&trials_json);
    let summary = summarize(&results)?;
    let summary_path = args.out.join("summary.csv");
    write_text(&summary_path, &summary.to_csv())?;
    ctx.manifest.record_output(&summary_path);
    for s in &summary.strategies {
        say!(ctx, 
            "{}: mean final accuracy {:.4} (sd {:.4}) over {} trials",
            s.strategy, s.mean_final, s.sd_final, s.trials
        );
    }
    Ok(())
}

pub fn report(args: &ReportArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.arg("kind", format!("{:?}", args.kind));
    ctx.manifest.arg("scores", args.scores.display());
    ctx.manifest.record_input(&args.scores);
    let scores = ScoreMatrix::load(&args.scores)?;
    match args.kind {
        ReportKind::Distribution => {
            let perf_path = args.perf.as_ref().ok_or_else(|| {
                CliError::validation("--perf is required for the distribution report")
            })?;
            ctx.manifest.record_input(perf_path);
            let perf = load_performance(perf_path)?;
            let report = report_distribution(&scores, &perf, view_of(args.view))?;
            write_text(&args.out, &distribution_to_csv(&report))?;
        }
        ReportKind::Correlation => {
            let (before, after) = report_correlation(&scores)?;
            let mut text = String::from("# pairwise correlations before whitening\n");
            text.push_str(&matrix_to_csv(&before));
            text.push_str("# pairwise correlations after whitening\n");
            text.push_str(&matrix_to_csv(&after));
            write_text(&args.out, &text)?;
        }
    }
    ctx.manifest.record_output(&args.out);
    say!(ctx, "report -> {}", args.out.display());
    Ok(())
}

/// Checks a corpus for missing required metrics without modifying it.
pub fn validate_cmd(args: &ValidateArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.arg("corpus", args.corpus.display());
    ctx.manifest.record_input(&args.corpus);
    let registry = load_registry(&args.registry, ctx)?;
    let (corpus, load_report) = corpus::load_corpus(&args.corpus, CorpusFormat::UnifiedJsonl)?;
    let required: HashSet<String> = registry
        .metrics()
        .iter()
        .filter(|m| m.source == MetricSource::External)
        .map(|m| m.id.clone())
        .collect();
    let report = corpus::validate(&corpus, &required);
    say!(ctx, 
        "{} samples loaded ({} rejected), {} metrics checked",
        corpus.len(),
        load_report.rejected,
        required.len()
    );
    if report.is_clean() {
        say!(ctx, "corpus is clean");
    } else {
        for (metric, ids) in &report.missing {
            say!(ctx, "missing {}: {} samples (first: {:?})", metric, ids.len(), ids.first());
        }
        for violation in &report.invariant_violations {
            say!(ctx, "violation: {violation}");
        }
    }
    Ok(())
}

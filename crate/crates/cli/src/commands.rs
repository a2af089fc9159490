//! Batch subcommands: ingest, stats, sample-evalset, run, augment and
//! campaign creation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use afortiori::annotation::{evaluation_set_id, write_campaign, Campaign};
use afortiori::augment::{
    augment_corpus, augmented_jsonl, diversity_report, AugmentError, AugmentationStrategy, DiversityReport,
    GenerationQuota, TopicMap,
};
use afortiori::backend::{
    Backend, GenerationProvider, OpenAiProvider, ResponseCache, RetryPolicy, RunStore, Script, ScriptedProvider,
};
use afortiori::clock::{Clock, FixedClock, SystemClock};
use afortiori::corpus::{dataset_stats, stratified_sample, to_jsonl, ArgumentRecord, EvaluationSet, SamplingParams};
use afortiori::digest::sha256_hex;
use afortiori::pipeline::{
    corpus_digest, results_jsonl, IdentificationResult, InterpretationResult, Pipeline, PipelineError,
    ResultStatus, RunManifest,
};
use afortiori::prompt_kit::{PromptAssets, PromptConfig, PromptKit};
use afortiori::Verdict;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifact::{
    file_digest, load_corpus, meta_path, must_exist, read_json, read_jsonl, read_text, usage_err, Header, Staging,
};
use crate::config::{ProviderKind, RunConfig, RunTask};
use crate::error::{fail, Classify, ExitKind};

fn short(digest: &str) -> String {
    digest[..16].to_string()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub header: Header,
    pub source: PathBuf,
    pub source_digest: String,
    pub records: usize,
    pub af: usize,
    pub naf: usize,
    pub rejects: Vec<afortiori::corpus::RejectedRow>,
    pub warnings: Vec<String>,
}

/// Parses the delimited corpus into the canonical JSON-lines file.
pub fn ingest(input: &Path, output: Option<PathBuf>) -> anyhow::Result<String> {
    must_exist(input)?;
    let output = output.unwrap_or_else(|| input.with_extension("jsonl"));
    if output == input {
        return Err(usage_err("output would overwrite the input corpus"));
    }
    let file = std::fs::File::open(input).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", input.display())))?;
    let parsed = afortiori::corpus::parse_dataset(file, afortiori::corpus::Delimiter::Auto).data()?;
    let source_digest = file_digest(input)?;
    let canonical = to_jsonl(&parsed.records);
    let meta = CorpusMeta {
        header: Header::new("corpus", &short(&sha256_hex(&canonical))),
        source: input.to_path_buf(),
        source_digest,
        records: parsed.records.len(),
        af: parsed.af_count(),
        naf: parsed.naf_count(),
        rejects: parsed.rejects.clone(),
        warnings: parsed.warnings.clone(),
    };
    let mut stage = Staging::default();
    stage.write(&output, canonical)?;
    stage.write_json(&meta_path(&output), &meta)?;
    stage.commit()?;
    Ok(format!(
        "{} records: {} AF / {} NAF ({} rejected) -> {}",
        meta.records,
        meta.af,
        meta.naf,
        meta.rejects.len(),
        output.display()
    ))
}

pub fn stats(corpus: &Path, as_json: bool) -> anyhow::Result<String> {
    let records = load_corpus(must_exist(corpus)?)?;
    let table = dataset_stats(&records);
    let af = records.iter().filter(|r| r.is_a_fortiori).count();
    if as_json {
        let mut cells = BTreeMap::new();
        for class in afortiori::SentenceType::ALL {
            for logic in afortiori::LogicCategory::ALL {
                cells.insert(format!("{}/{}", class.code(), logic.code()), table.get(class, logic));
            }
        }
        let v = json!({ "records": records.len(), "af": af, "naf": records.len() - af, "cells": cells });
        return serde_json::to_string_pretty(&v).data();
    }
    Ok(format!("{}\n{} records: {af} AF / {} NAF", table.render(), records.len(), records.len() - af))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalSetArtifact {
    pub header: Header,
    pub evaluation_set_id: String,
    pub corpus_digest: String,
    pub set: EvaluationSet,
}

pub fn sample_evalset(corpus: &Path, seed: u64, params: SamplingParams, output: &Path) -> anyhow::Result<String> {
    let records = load_corpus(must_exist(corpus)?)?;
    let set = stratified_sample(&records, seed, params).data()?;
    let cd = corpus_digest(&records);
    let config = short(&sha256_hex(
        json!({ "corpus": cd, "seed": seed, "per_class": params.per_class_quota, "per_combo": params.per_combo_target })
            .to_string(),
    ));
    let art = EvalSetArtifact {
        header: Header::new("evaluation-set", &config),
        evaluation_set_id: evaluation_set_id(&set),
        corpus_digest: cd,
        set,
    };
    let mut stage = Staging::default();
    stage.write_json(output, &art)?;
    stage.commit()?;
    Ok(format!(
        "evaluation set {} with {} items -> {}",
        art.evaluation_set_id,
        art.set.record_ids.len(),
        output.display()
    ))
}

/// Everything a run needs, resolved from the configuration.
pub struct Prepared {
    pub pipeline: Pipeline,
    pub script_digest: Option<String>,
    pub clock: Arc<dyn Clock>,
}

pub fn prepare(cfg: &RunConfig, store: Option<&Path>) -> anyhow::Result<Prepared> {
    let (provider, script_digest, clock): (Arc<dyn GenerationProvider>, _, Arc<dyn Clock>) = match cfg.provider.kind {
        ProviderKind::Mock => {
            let path = cfg
                .provider
                .script
                .as_deref()
                .ok_or_else(|| usage_err("mock provider requires a script path"))?;
            let text = read_text(must_exist(path)?)?;
            let script = Script::from_json(&text).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", path.display())))?;
            // mock runs use a fixed clock so their artifacts are byte-identical
            (Arc::new(ScriptedProvider::new(script)), Some(sha256_hex(&text)), Arc::new(FixedClock::default()))
        }
        ProviderKind::Live => {
            let p = OpenAiProvider::from_env(Duration::from_secs(cfg.provider.timeout_secs)).provider()?;
            (Arc::new(p), None, Arc::new(SystemClock))
        }
    };
    let assets = match &cfg.prompts {
        Some(dir) => PromptAssets::load_dir(must_exist(dir)?).data()?,
        None => PromptAssets::builtin(),
    };
    let kit = PromptKit::new(
        assets,
        PromptConfig {
            window: cfg.params.window,
            seed: cfg.prompt_seed,
            ..PromptConfig::default()
        },
    );
    let retry = RetryPolicy {
        timeout_secs: cfg.provider.timeout_secs,
        ..RetryPolicy::default()
    };
    let mut backend = Backend::new(provider).with_retry(retry).with_clock(clock.clone());
    if let Some(dir) = &cfg.cache_dir {
        backend = backend.with_cache(ResponseCache::open(dir).data()?);
    }
    if let Some(path) = store {
        backend = backend.with_store(RunStore::open(path).data()?);
    }
    let mut params = cfg.params.clone();
    if cfg.provider.kind == ProviderKind::Live {
        if let Some(m) = OpenAiProvider::model_from_env() {
            params.model_name = m;
        }
    }
    let pipeline = Pipeline::new(kit, backend, params).with_clock(clock.clone());
    Ok(Prepared {
        pipeline,
        script_digest,
        clock,
    })
}

/// Digest of every setting that can change a run's results. Paths,
/// cache location and concurrency are left out.
pub fn run_config_digest(cfg: &RunConfig, pipeline: &Pipeline, corpus: &str, script: Option<&str>) -> String {
    let view = json!({
        "corpus": corpus,
        "regime": cfg.regime,
        "mode": cfg.mode,
        "task": cfg.task,
        "with_examples": cfg.with_examples,
        "params": pipeline.params,
        "provider": cfg.provider.kind,
        "script": script,
        "prompts": pipeline.kit.assets.digest(),
        "prompt_seed": cfg.prompt_seed,
    });
    short(&sha256_hex(view.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunArtifact {
    pub header: Header,
    pub task: RunTask,
    pub config: RunConfig,
    pub corpus_digest: String,
    pub script_digest: Option<String>,
    pub prompt_digest: String,
    pub results_digest: String,
    pub records: usize,
    pub verdicts: BTreeMap<Verdict, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

fn identify_all(p: &Pipeline, records: &[ArgumentRecord], with_examples: bool, workers: usize) -> Vec<IdentificationResult> {
    let chunk = records.len().div_ceil(workers.max(1)).max(1);
    let mut out: Vec<IdentificationResult> = std::thread::scope(|s| {
        let handles: Vec<_> = records
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|r| p.identify(r, with_examples)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });
    out.sort_by(|a, b| a.record_id.cmp(&b.record_id));
    out
}

pub fn run(cfg: &RunConfig) -> anyhow::Result<String> {
    cfg.validate()?;
    let out_dir = cfg.output_dir.clone().ok_or_else(|| usage_err("no output directory given"))?;
    let corpus_path = cfg.corpus.as_deref().expect("validated");
    let records = load_corpus(must_exist(corpus_path)?)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", out_dir.display())))?;
    let log_path = out_dir.join("provider_log.jsonl");
    // workers append in completion order; the log is reordered before commit
    let raw_log = crate::artifact::partial_path(&log_path);
    if raw_log.exists() {
        std::fs::remove_file(&raw_log).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", raw_log.display())))?;
    }
    let prep = prepare(cfg, Some(&raw_log))?;
    let p = &prep.pipeline;
    let cd = corpus_digest(&records);
    let config_digest = run_config_digest(cfg, p, &cd, prep.script_digest.as_deref());

    let (results_text, verdicts, manifest) = match cfg.task {
        RunTask::Interpret => {
            let out = p
                .run_corpus(&records, cfg.regime()?, cfg.mode()?, cfg.concurrency)
                .map_err(|e| match e {
                    PipelineError::Empty => fail(ExitKind::Data, e.to_string()),
                    PipelineError::AllFailed(_) => fail(ExitKind::Provider, e.to_string()),
                    PipelineError::Pool(_) => fail(ExitKind::Data, e.to_string()),
                })?;
            (results_jsonl(&out.results), out.manifest.counts.verdicts.clone(), Some(out.manifest))
        }
        RunTask::Identify => {
            if records.is_empty() {
                return Err(fail(ExitKind::Data, "no records to run"));
            }
            let results = identify_all(p, &records, cfg.with_examples, cfg.concurrency);
            if let Some(e) = results.iter().all(|r| r.error.is_some()).then(|| results[0].error.clone()).flatten() {
                return Err(fail(ExitKind::Provider, format!("every record failed; first error: {e}")));
            }
            let mut verdicts: BTreeMap<Verdict, usize> = Verdict::ALL.iter().map(|v| (*v, 0)).collect();
            for r in &results {
                *verdicts.entry(r.verdict).or_default() += 1;
            }
            (crate::artifact::to_jsonl(&results), verdicts, None)
        }
    };
    let art = RunArtifact {
        header: Header::new("run", &config_digest),
        task: cfg.task,
        // the manifest lives in the output directory, so the path is not recorded
        config: RunConfig {
            output_dir: None,
            ..cfg.clone()
        },
        corpus_digest: cd,
        script_digest: prep.script_digest.clone(),
        prompt_digest: p.kit.assets.digest(),
        results_digest: sha256_hex(&results_text),
        records: records.len(),
        verdicts,
        manifest,
    };
    let mut stage = Staging::default();
    let mut log = RunStore::read(&raw_log).data()?;
    log.sort_by(|a, b| a.record_id.cmp(&b.record_id));
    stage.write(&log_path, crate::artifact::to_jsonl(&log))?;
    stage.write(&out_dir.join("results.jsonl"), &results_text)?;
    stage.write_json(&out_dir.join("manifest.json"), &art)?;
    stage.commit()?;
    let counts: Vec<String> = art.verdicts.iter().map(|(v, n)| format!("{v} {n}")).collect();
    Ok(format!(
        "run {config_digest}: {} records ({}), results digest {} -> {}",
        art.records,
        counts.join(", "),
        art.results_digest,
        out_dir.display()
    ))
}

pub fn load_run(dir: &Path) -> anyhow::Result<(RunArtifact, PathBuf)> {
    let art: RunArtifact = read_json(&must_exist(dir)?.join("manifest.json"))?;
    Ok((art, dir.join("results.jsonl")))
}

/// Analyses of `dir` joined to their records.
fn analysed(dir: &Path, corpus: Option<&Path>) -> anyhow::Result<(RunArtifact, Vec<(ArgumentRecord, InterpretationResult)>)> {
    let (art, results_path) = load_run(dir)?;
    if art.task != RunTask::Interpret {
        return Err(usage_err(format!("{} is not an interpretation run", dir.display())));
    }
    let corpus = corpus
        .map(Path::to_path_buf)
        .or_else(|| art.config.corpus.clone())
        .ok_or_else(|| usage_err("no corpus given"))?;
    let records = load_corpus(must_exist(&corpus)?)?;
    if corpus_digest(&records) != art.corpus_digest {
        return Err(fail(
            ExitKind::Data,
            format!("{} does not match the corpus of run {}", corpus.display(), art.header.config_digest),
        ));
    }
    let results: Vec<InterpretationResult> = read_jsonl(&results_path)?;
    let by_id: BTreeMap<_, _> = records.into_iter().map(|r| (r.id.clone(), r)).collect();
    let pairs = results
        .into_iter()
        .filter_map(|res| by_id.get(&res.record_id).cloned().map(|r| (r, res)))
        .collect();
    Ok((art, pairs))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AugmentMeta {
    pub header: Header,
    pub source_config_digest: String,
    pub strategy: AugmentationStrategy,
    pub plan: afortiori::augment::BatchPlan,
    pub generated: usize,
    pub flagged: usize,
    pub failures: Vec<afortiori::augment::AugmentFailure>,
    pub diversity: DiversityReport,
}

pub struct AugmentArgs {
    pub run: PathBuf,
    pub corpus: Option<PathBuf>,
    pub strategy: AugmentationStrategy,
    pub output: PathBuf,
    pub merged: Option<PathBuf>,
    pub config: RunConfig,
}

pub fn augment(a: &AugmentArgs) -> anyhow::Result<String> {
    let (source, pairs) = analysed(&a.run, a.corpus.as_deref())?;
    let items: Vec<_> = pairs
        .iter()
        .filter(|(_, r)| r.status == ResultStatus::Completed && r.verdict == Verdict::AF)
        .cloned()
        .collect();
    if items.is_empty() {
        return Err(fail(ExitKind::Data, "no completed AF analyses to augment"));
    }
    let cfg = &a.config;
    let prep = prepare(cfg, None)?;
    let topics = TopicMap::builtin();
    let quota: GenerationQuota = cfg.quota;
    let run = augment_corpus(&prep.pipeline, &topics, &items, a.strategy, &quota, cfg.concurrency).map_err(|e| match e {
        AugmentError::QuotaExceeded { .. } => fail(ExitKind::Usage, e.to_string()),
        AugmentError::Provider(_) => fail(ExitKind::Provider, e.to_string()),
        _ => fail(ExitKind::Data, e.to_string()),
    })?;
    let digest = short(&sha256_hex(
        json!({
            "source": source.header.config_digest,
            "strategy": a.strategy,
            "provider": cfg.provider.kind,
            "script": prep.script_digest,
            "params": prep.pipeline.params,
            "quota": quota,
        })
        .to_string(),
    ));
    let originals: Vec<String> = run.records.iter().map(|r| r.original_topic.clone()).collect();
    let meta = AugmentMeta {
        header: Header::new("augmentation", &digest),
        source_config_digest: source.header.config_digest.clone(),
        strategy: a.strategy,
        plan: run.plan.clone(),
        generated: run.records.len(),
        flagged: run.records.iter().filter(|r| !r.flags.is_empty()).count(),
        failures: run.failures.clone(),
        diversity: diversity_report(&originals, &run.records, &topics),
    };
    let mut stage = Staging::default();
    stage.write(&a.output, augmented_jsonl(&run.records))?;
    stage.write_json(&meta_path(&a.output), &meta)?;
    if let Some(merged) = &a.merged {
        if Some(merged.as_path()) == a.corpus.as_deref() || Some(merged) == source.config.corpus.as_ref() {
            return Err(usage_err("merged output would overwrite the input corpus"));
        }
        let mut all: Vec<ArgumentRecord> = pairs.iter().map(|(r, _)| r.clone()).collect();
        all.extend(run.records.iter().map(|r| r.to_argument_record()));
        stage.write(merged, to_jsonl(&all))?;
    }
    if run.records.is_empty() {
        // keep the partial files for inspection
        let first = run.failures.first().map(|f| f.error.clone()).unwrap_or_default();
        return Err(fail(ExitKind::Provider, format!("every generation failed; first error: {first}")));
    }
    stage.commit()?;
    Ok(format!(
        "{} generated ({} flagged, {} failed), estimated {} tokens -> {}",
        meta.generated,
        meta.flagged,
        meta.failures.len(),
        meta.plan.estimated_tokens,
        a.output.display()
    ))
}

pub struct CampaignArgs {
    pub dir: PathBuf,
    pub id: String,
    pub evalset: PathBuf,
    pub run: PathBuf,
    pub corpus: Option<PathBuf>,
    pub roster: Vec<String>,
    pub token: Option<String>,
}

pub fn campaign_create(a: &CampaignArgs) -> anyhow::Result<String> {
    let set: EvalSetArtifact = read_json(must_exist(&a.evalset)?)?;
    let (art, pairs) = analysed(&a.run, a.corpus.as_deref())?;
    let (records, results): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let mut c = Campaign::from_run(&a.id, &set.set, &art.header.config_digest, &records, &results, a.roster.clone())
        .map_err(|e| match e {
            afortiori::annotation::AnnotationError::Invalid(_) => fail(ExitKind::Usage, e.to_string()),
            _ => fail(ExitKind::Data, e.to_string()),
        })?;
    c.token = a.token.clone();
    let path = afortiori::annotation::campaign_path(&a.dir, &c.id);
    if path.exists() {
        return Err(usage_err(format!("{} already exists; campaign items are immutable", path.display())));
    }
    std::fs::create_dir_all(&a.dir).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", a.dir.display())))?;
    let path = write_campaign(&a.dir, &c).data()?;
    Ok(format!("campaign {} with {} items for {} annotators -> {}", c.id, c.items.len(), c.roster.len(), path.display()))
}

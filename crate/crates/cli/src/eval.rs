//! `eval` subcommands and the `report` printer.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use afortiori::annotation::{aggregate_campaign, campaign_path, read_campaign, read_judgments, store_path};
use afortiori::backend::{Embedder, HashedBagOfWords, OpenAiEmbedder};
use afortiori::corpus::{ArgumentRecord, RecordId};
use afortiori::evaluate::render::{
    render_confusion, render_explanation_quality, render_grammar, render_identification, render_per_class,
    render_property_quality, render_property_report, render_similarity,
};
use afortiori::evaluate::{
    compare_summaries, confusion_matrix, grammar_report, identification_metrics, paired_t_test, per_class_metrics,
    property_report, similarity_summary, span_scores, GrammarChecker, LanguageToolClient, PropertyPair,
    RecallConvention,
};
use afortiori::pipeline::{InterpretationResult, ResultStatus};
use afortiori::Verdict;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::artifact::{
    file_digest, load_corpus, load_predictions, must_exist, read_json, usage_err, Header, Predictions,
    Staging,
};
use crate::commands::load_run;
use crate::error::{fail, Classify, ExitKind};

/// One evaluation output. `header.config_digest` names the run (or runs,
/// joined by `+`) whose predictions were scored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub header: Header,
    pub metric: String,
    pub source: Value,
    pub data: Value,
    pub rendered: String,
}

impl EvalReport {
    pub fn runs(&self) -> Vec<&str> {
        self.header.config_digest.split('+').collect()
    }
}

fn pred_digest(p: &Predictions) -> anyhow::Result<String> {
    match &p.config_digest {
        Some(d) => Ok(d.clone()),
        None => Ok(format!("file:{}", &file_digest(&p.path)?[..16])),
    }
}

fn report(metric: &str, preds: &[Predictions], source: Value, data: Value, rendered: String) -> anyhow::Result<EvalReport> {
    let digests = preds.iter().map(pred_digest).collect::<anyhow::Result<Vec<_>>>()?;
    Ok(EvalReport {
        header: Header::new(&format!("eval-{metric}"), &digests.join("+")),
        metric: metric.into(),
        source,
        data,
        rendered,
    })
}

/// Writes the report when an output path is given and returns its text.
pub fn emit(r: &EvalReport, output: Option<&Path>) -> anyhow::Result<String> {
    if let Some(path) = output {
        let mut stage = Staging::default();
        stage.write_json(path, r)?;
        stage.commit()?;
    }
    Ok(r.rendered.clone())
}

fn label(p: &Predictions, i: usize, labels: &[String]) -> String {
    labels.get(i).cloned().unwrap_or_else(|| {
        p.path
            .parent()
            .and_then(|d| d.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .filter(|n| !n.is_empty())
            .unwrap_or_else(|| format!("run {}", i + 1))
    })
}

fn gold_by_id(corpus: &Path) -> anyhow::Result<(BTreeMap<RecordId, ArgumentRecord>, String)> {
    let records = load_corpus(must_exist(corpus)?)?;
    let digest = afortiori::pipeline::corpus_digest(&records);
    Ok((records.into_iter().map(|r| (r.id.clone(), r)).collect(), digest))
}

fn load_all(preds: &[PathBuf]) -> anyhow::Result<Vec<Predictions>> {
    if preds.is_empty() {
        return Err(usage_err("at least one --pred is required"));
    }
    preds.iter().map(|p| load_predictions(must_exist(p)?)).collect()
}

#[derive(Deserialize)]
struct VerdictLine {
    record_id: RecordId,
    verdict: Verdict,
}

fn typed<T: serde::de::DeserializeOwned>(p: &Predictions) -> anyhow::Result<Vec<T>> {
    p.results
        .iter()
        .enumerate()
        .map(|(i, v)| {
            T::deserialize(v).map_err(|e| fail(ExitKind::Data, format!("{}:{}: {e}", p.path.display(), i + 1)))
        })
        .collect()
}

/// Gold/pred verdict pairs; every gold record needs a prediction.
fn verdict_pairs(gold: &BTreeMap<RecordId, ArgumentRecord>, p: &Predictions) -> anyhow::Result<(Vec<Verdict>, Vec<Verdict>)> {
    let lines: Vec<VerdictLine> = typed(p)?;
    let by_id: BTreeMap<_, _> = lines.into_iter().map(|l| (l.record_id, l.verdict)).collect();
    let (mut g, mut q) = (Vec::new(), Vec::new());
    for (id, rec) in gold {
        let pred = by_id
            .get(id)
            .ok_or_else(|| fail(ExitKind::Data, format!("{}: no prediction for record {id}", p.path.display())))?;
        g.push(if rec.is_a_fortiori { Verdict::AF } else { Verdict::NAF });
        q.push(*pred);
    }
    Ok((g, q))
}

pub fn identify(gold: &Path, preds: &[PathBuf], labels: &[String]) -> anyhow::Result<EvalReport> {
    let (gold, corpus) = gold_by_id(gold)?;
    let preds = load_all(preds)?;
    let mut text = String::new();
    let mut data = Vec::new();
    let mut columns = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        let name = label(p, i, labels);
        let (g, q) = verdict_pairs(&gold, p)?;
        let m = confusion_matrix(&g, &q).data()?;
        text.push_str(&render_confusion(&name, &m));
        text.push('\n');
        let excl = identification_metrics(&m, RecallConvention::ExcludeUnknownPredictions);
        let full = identification_metrics(&m, RecallConvention::FullGold);
        data.push(json!({ "label": name, "matrix": m, "exclude_unknown": excl, "full_gold": full }));
        columns.push((name, excl, full));
    }
    let mut cols: Vec<(String, _)> = Vec::new();
    for (name, excl, full) in &columns {
        cols.push((name.clone(), excl));
        cols.push((format!("{name} (all gold)"), full));
    }
    let refs: Vec<(&str, _)> = cols.iter().map(|(n, m)| (n.as_str(), *m)).collect();
    text.push_str(&render_identification(&refs));
    report("identify", &preds, json!({ "corpus": corpus }), Value::Array(data), text)
}

fn interpretations(p: &Predictions) -> anyhow::Result<Vec<InterpretationResult>> {
    typed(p).map_err(|e| fail(ExitKind::Data, format!("{e:#} (expected interpretation results)")))
}

pub fn spans(gold: &Path, preds: &[PathBuf], labels: &[String], embedder: &str) -> anyhow::Result<EvalReport> {
    let (gold, corpus) = gold_by_id(gold)?;
    let preds = load_all(preds)?;
    let embedder: Box<dyn Embedder> = match embedder {
        "hashed" => Box::new(HashedBagOfWords::default()),
        "openai" => Box::new(OpenAiEmbedder::from_env(Duration::from_secs(60)).provider()?),
        other => return Err(usage_err(format!("unknown embedder {other:?}; expected hashed or openai"))),
    };
    let mut rows: Vec<(String, afortiori::evaluate::SimilarityStats)> = Vec::new();
    let mut data = Vec::new();
    let mut cosines: Vec<BTreeMap<RecordId, f64>> = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        let name = label(p, i, labels);
        let mut scores: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        let mut per_record = BTreeMap::new();
        let mut flagged = 0usize;
        for r in interpretations(p)? {
            let Some(g) = gold.get(&r.record_id) else { continue };
            if r.status != ResultStatus::Completed {
                continue;
            }
            for (which, gs, ps) in [("correlate", g.correlate(), &r.correlate), ("remnant", g.remnant(), &r.remnant)] {
                let Some(gs) = gs.filter(|s| !s.trim().is_empty()) else { continue };
                let s = span_scores(gs, ps.as_deref().unwrap_or(""), embedder.as_ref()).provider()?;
                flagged += usize::from(s.flag.is_some());
                scores.entry(which).or_default().push(s.cosine_similarity);
                scores.entry(if which == "correlate" { "correlate word match" } else { "remnant word match" })
                    .or_default()
                    .push(s.exact_word_match);
                if which == "correlate" {
                    per_record.insert(r.record_id.clone(), s.cosine_similarity);
                }
            }
        }
        let mut summaries = BTreeMap::new();
        for (k, v) in &scores {
            let s = similarity_summary(v).data()?;
            rows.push((format!("{name}: {k}"), s.clone()));
            summaries.insert(k.to_string(), s);
        }
        data.push(json!({ "label": name, "summaries": summaries, "flagged": flagged }));
        cosines.push(per_record);
    }
    if rows.is_empty() {
        return Err(fail(ExitKind::Data, "no completed predictions with gold spans"));
    }
    let refs: Vec<(&str, _)> = rows.iter().map(|(n, s)| (n.as_str(), s)).collect();
    let mut text = render_similarity(&refs);
    let mut test = Value::Null;
    if cosines.len() == 2 {
        let shared: Vec<&RecordId> = cosines[0].keys().filter(|k| cosines[1].contains_key(*k)).collect();
        let a: Vec<f64> = shared.iter().map(|k| cosines[0][*k]).collect();
        let b: Vec<f64> = shared.iter().map(|k| cosines[1][*k]).collect();
        if let Ok(t) = paired_t_test(&a, &b) {
            text.push_str(&format!(
                "paired t-test on correlate similarity: t = {:.4}, df = {}, p = {:.4}\n",
                t.t, t.df, t.p_two_tailed
            ));
            test = serde_json::to_value(t).data()?;
        }
    }
    let data = json!({ "runs": data, "paired_t_test": test });
    report("spans", &preds, json!({ "corpus": corpus }), data, text)
}

pub fn classes(gold: &Path, preds: &[PathBuf], labels: &[String]) -> anyhow::Result<EvalReport> {
    let (gold, corpus) = gold_by_id(gold)?;
    let preds = load_all(preds)?;
    let mut text = String::new();
    let mut data = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        let name = label(p, i, labels);
        let (mut gt, mut pt, mut gl, mut pl) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for r in interpretations(p)? {
            let Some(g) = gold.get(&r.record_id) else { continue };
            if r.status != ResultStatus::Completed || !g.is_a_fortiori {
                continue;
            }
            gt.push(g.class);
            pt.push(r.sentence_type);
            gl.push(g.logic);
            pl.push(r.logic_category);
        }
        if gt.is_empty() {
            return Err(fail(ExitKind::Data, format!("{name}: no completed AF predictions")));
        }
        let types = per_class_metrics(&gt, &pt).data()?;
        let logic = per_class_metrics(&gl, &pl).data()?;
        text.push_str(&render_per_class(&format!("{name}: sentence type"), &types));
        text.push('\n');
        text.push_str(&render_per_class(&format!("{name}: logic category"), &logic));
        text.push('\n');
        data.push(json!({ "label": name, "sentence_type": types, "logic_category": logic }));
    }
    report("classes", &preds, json!({ "corpus": corpus }), Value::Array(data), text)
}

pub fn properties(gold: &Path, preds: &[PathBuf], labels: &[String], top_k: usize) -> anyhow::Result<EvalReport> {
    let (gold, corpus) = gold_by_id(gold)?;
    let preds = load_all(preds)?;
    let mut text = String::new();
    let mut data = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        let name = label(p, i, labels);
        let pairs: Vec<PropertyPair> = interpretations(p)?
            .into_iter()
            .filter(|r| r.status == ResultStatus::Completed)
            .filter_map(|r| {
                let g = gold.get(&r.record_id).filter(|g| g.is_a_fortiori)?;
                Some(PropertyPair {
                    record_id: r.record_id.clone(),
                    sentence_type: g.class,
                    gold: g.properties().into_iter().map(str::to_string).collect(),
                    predicted: r.properties.clone(),
                })
            })
            .collect();
        let r = property_report(&pairs, top_k);
        text.push_str(&format!("{name}\n{}\n", render_property_report(&r)));
        data.push(json!({ "label": name, "report": r }));
    }
    report("properties", &preds, json!({ "corpus": corpus }), Value::Array(data), text)
}

/// Texts to check: augmented records or the explanations of a run.
fn grammar_texts(p: &Predictions, field: &str) -> anyhow::Result<Vec<String>> {
    let mut out = Vec::new();
    for v in &p.results {
        match v.get(field).and_then(Value::as_str) {
            Some(s) if !s.trim().is_empty() => out.push(s.to_string()),
            Some(_) => {}
            None => {
                return Err(fail(
                    ExitKind::Data,
                    format!("{}: line without a {field:?} field", p.path.display()),
                ))
            }
        }
    }
    Ok(out)
}

pub fn grammar(inputs: &[PathBuf], labels: &[String], field: &str, languagetool: Option<&str>) -> anyhow::Result<EvalReport> {
    let preds = load_all(inputs)?;
    let client = languagetool.map(|url| LanguageToolClient::new(url, "en-US", Duration::from_secs(30)));
    let checker: Option<&dyn GrammarChecker> = client.as_ref().map(|c| c as &dyn GrammarChecker);
    let mut text = String::new();
    let mut data = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        let name = label(p, i, labels);
        let texts = grammar_texts(p, field)?;
        let r = grammar_report(&texts, checker).provider()?;
        text.push_str(&render_grammar(&name, &r));
        data.push(json!({ "label": name, "report": r }));
    }
    report("grammar", &preds, json!({ "field": field }), Value::Array(data), text)
}

pub fn judgments(dir: &Path, campaigns: &[String]) -> anyhow::Result<EvalReport> {
    if campaigns.is_empty() || campaigns.len() > 2 {
        return Err(usage_err("give one or two --campaign ids"));
    }
    let mut aggs = Vec::new();
    let mut runs = Vec::new();
    for id in campaigns {
        let c = read_campaign(must_exist(&campaign_path(dir, id))?).data()?;
        let store = read_judgments(&store_path(dir, id)).data()?;
        runs.push(c.run_id.clone());
        aggs.push(aggregate_campaign(&c, &store));
    }
    let props: Vec<(&str, _)> = aggs.iter().map(|a| (a.campaign_id.as_str(), &a.summary.properties)).collect();
    let mut text = render_property_quality(&props);
    text.push('\n');
    let comparisons = if aggs.len() == 2 {
        compare_summaries(&aggs[0].summary, &aggs[1].summary)
    } else {
        Vec::new()
    };
    let b = aggs.get(1).unwrap_or(&aggs[0]);
    text.push_str(&render_explanation_quality(
        (&aggs[0].campaign_id, &aggs[0].summary.explanations),
        (&b.campaign_id, &b.summary.explanations),
        &comparisons,
    ));
    for a in &aggs {
        if let Some(pa) = a.summary.agreement.percent_agreement {
            text.push_str(&format!("{}: item agreement {:.4} ({})\n", a.campaign_id, pa, a.agreement_note));
        }
    }
    let data = json!({ "aggregates": aggs, "comparisons": comparisons });
    Ok(EvalReport {
        header: Header::new("eval-judgments", &runs.join("+")),
        metric: "judgments".into(),
        source: json!({ "campaigns": campaigns, "dir": dir }),
        data,
        rendered: text,
    })
}

/// Prints stored reports. With `run`, every report must have scored that run.
pub fn print_reports(evals: &[PathBuf], run: Option<&Path>) -> anyhow::Result<String> {
    if evals.is_empty() {
        return Err(usage_err("at least one --eval report is required"));
    }
    let expected = match run {
        Some(dir) => Some(load_run(dir)?.0.header.config_digest),
        None => None,
    };
    let mut out = String::new();
    for path in evals {
        let r: EvalReport = read_json(must_exist(path)?)?;
        if !r.header.kind.starts_with("eval-") {
            return Err(fail(ExitKind::Data, format!("{}: not an evaluation report", path.display())));
        }
        if let Some(d) = &expected {
            if !r.runs().contains(&d.as_str()) {
                return Err(fail(
                    ExitKind::Data,
                    format!(
                        "{}: config digest {} does not match run {d}",
                        path.display(),
                        r.header.config_digest
                    ),
                ));
            }
        }
        out.push_str(&format!("== {} ({}) ==\n{}\n", r.metric, r.header.config_digest, r.rendered));
    }
    Ok(out)
}

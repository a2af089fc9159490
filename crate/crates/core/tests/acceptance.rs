//! Acceptance gate. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use afortiori::augment::{
    augment_corpus, build_record, diversity_report, AugmentationStrategy, AugmentedRecord, ConformanceFlag,
    GenerationQuota, TopicMap,
};
use afortiori::backend::{
    cosine, parse_structured_output, EchoProvider, HashedBagOfWords, OpenAiProvider, Task,
    DEFAULT_REFUSAL_PHRASES,
};
use afortiori::corpus::{dataset_stats, parse_dataset, stratified_sample, ArgumentRecord, Delimiter, SamplingParams};
use afortiori::evaluate::render::{render_identification, render_property_quality, render_similarity};
use afortiori::evaluate::{
    confusion_matrix, exact_word_match, identification_metrics, judgment_aggregate, paired_t_test,
    similarity_summary, span_scores, ConfusionMatrix3, Criterion, JudgmentRecord, RecallConvention, Target,
};
use afortiori::pipeline::{results_jsonl, InterpretationResult};
use afortiori::prompt_kit::{estimate_tokens, Mode, PromptConfig, PromptError, PromptKit, Regime};
use afortiori::{LogicCategory, SentenceType, Verdict};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure(
        (got - want).abs() <= tol,
        format!("{name}: got {got:.6}, want {want} +/- {tol}"),
    )
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let t41 = ConfusionMatrix3::from_cells([[50, 7, 0], [660, 40, 0], [255, 18, 0]]);
    let t42 = ConfusionMatrix3::from_cells([[483, 31, 0], [308, 25, 0], [175, 8, 0]]);
    // the published matrix goes through label lists and back
    let (g, p) = t42.expand();
    ensure(confusion_matrix(&g, &p).map_err(|e| e.to_string())? == t42, "matrix round trip")?;
    let a = identification_metrics(&t41, RecallConvention::ExcludeUnknownPredictions);
    let b = identification_metrics(&t42, RecallConvention::ExcludeUnknownPredictions);
    close("accuracy 4.1", a.accuracy, 0.0874, 0.0001)?;
    close("accuracy 4.2", b.accuracy, 0.4932, 0.0001)?;
    close("precision AF 4.1", a.af.precision, 0.8772, 0.0005)?;
    close("precision AF 4.2", b.af.precision, 0.9396, 0.0005)?;
    close("precision NAF 4.1", a.naf.precision, 0.0571, 0.0005)?;
    close("precision NAF 4.2", b.naf.precision, 0.0751, 0.0005)?;
    close("recall AF 4.1", a.af.recall, 0.0705, 0.001)?;
    close("recall AF 4.2", b.af.recall, 0.6102, 0.001)?;
    close("F1 AF 4.1", a.af.f1, 0.1304, 0.002)?;
    close("F1 AF 4.2", b.af.f1, 0.7388, 0.002)?;
    let full = identification_metrics(&t41, RecallConvention::FullGold);
    close("recall NAF 4.1 full gold", full.naf.recall, 0.6154, 0.0001)?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("accuracy {:.4}/{:.4}, F1 AF {:.4}/{:.4}, {elapsed:?}", a.accuracy, b.accuracy, a.af.f1, b.af.f1))
}

fn synthetic_records() -> Result<Vec<ArgumentRecord>, String> {
    let parsed = parse_dataset(common::synthetic_tsv().as_bytes(), Delimiter::Auto).map_err(|e| e.to_string())?;
    ensure(parsed.rejects.is_empty(), format!("rejects: {:?}", parsed.rejects.first()))?;
    Ok(parsed.records)
}

fn stratified_sampler() -> Outcome {
    // published evaluation-set distribution, [logic][class]
    const EXPECTED: [[usize; 5]; 5] = [
        [5, 15, 5, 14, 0],
        [5, 0, 5, 1, 0],
        [5, 5, 5, 5, 0],
        [5, 0, 5, 0, 0],
        [0, 0, 0, 0, 20],
    ];
    let records = synthetic_records()?;
    let set = stratified_sample(&records, 7, SamplingParams::default()).map_err(|e| e.to_string())?;
    let by_id: BTreeMap<_, _> = records.iter().map(|r| (r.id.clone(), r)).collect();
    let mut grid = [[0usize; 5]; 5];
    for id in &set.record_ids {
        let r = by_id[id];
        grid[r.logic.index()][r.class.index()] += 1;
    }
    ensure(grid == EXPECTED, format!("grid {grid:?}"))?;
    let again = stratified_sample(&records, 7, SamplingParams::default()).map_err(|e| e.to_string())?;
    ensure(again == set, "same seed gave a different set")?;
    let mut reversed = records.clone();
    reversed.reverse();
    let shuffled = stratified_sample(&reversed, 7, SamplingParams::default()).map_err(|e| e.to_string())?;
    ensure(shuffled == set, "input order changed the set")?;
    Ok(format!("{} items, logic totals NS 39 NR 11 PR 20 PS 10 Undefined 20", set.record_ids.len()))
}

fn corpus_invariant() -> Outcome {
    let parsed = parse_dataset(common::synthetic_tsv().as_bytes(), Delimiter::Auto).map_err(|e| e.to_string())?;
    ensure(parsed.records.len() == 1030, format!("{} records", parsed.records.len()))?;
    ensure(
        parsed.af_count() == 966 && parsed.naf_count() == 64,
        format!("{} AF / {} NAF", parsed.af_count(), parsed.naf_count()),
    )?;
    let table = dataset_stats(&parsed.records);
    for logic in LogicCategory::ALL {
        for class in SentenceType::ALL {
            let want = common::GRID[logic.index()][class.index()];
            ensure(table.get(class, logic) == want, format!("{class}/{logic}: {} != {want}", table.get(class, logic)))?;
        }
    }
    Ok("1030 records, 966 AF / 64 NAF, grid exact".into())
}

fn end_to_end_determinism() -> Outcome {
    let records = common::fixture_records();
    let mut digests = Vec::new();
    for regime in [Regime::WithExternalInfo, Regime::WithoutExternalInfo] {
        for mode in [Mode::Gated, Mode::Forced] {
            let run = || -> Result<String, String> {
                let p = common::scripted_pipeline(common::analysis_script(&records));
                let out = p.run_corpus(&records, regime, mode, 4).map_err(|e| e.to_string())?;
                let manifest = serde_json::to_string(&out.manifest).map_err(|e| e.to_string())?;
                Ok(manifest + &results_jsonl(&out.results))
            };
            let (a, b) = (run()?, run()?);
            ensure(a == b, format!("{regime:?}/{mode:?} differs between runs"))?;
            digests.push(afortiori::digest::sha256_hex(&a)[..8].to_string());
        }
    }

    // echo provider: whatever reaches the prompt reaches the result
    let echo = common::pipeline_with(Arc::new(EchoProvider));
    let without = echo
        .run_corpus(&records, Regime::WithoutExternalInfo, Mode::Forced, 2)
        .map_err(|e| e.to_string())?;
    let with = echo
        .run_corpus(&records, Regime::WithExternalInfo, Mode::Forced, 2)
        .map_err(|e| e.to_string())?;
    let leaks = |results: &[InterpretationResult]| -> usize {
        results
            .iter()
            .map(|res| {
                let r = records.iter().find(|r| r.id == res.record_id).expect("record");
                let text = serde_json::to_string(res).expect("serialises");
                r.gold_strings()
                    .iter()
                    .filter(|g| !r.text.contains(g.as_str()) && text.contains(g.as_str()))
                    .count()
            })
            .sum()
    };
    ensure(leaks(&without.results) == 0, "gold annotation reached a without-info result")?;
    // control: the check does see leaks when gold text is offered
    ensure(leaks(&with.results) > 0, "echo check is blind: with-info results carry no gold text")?;
    Ok(format!("4 configurations stable ({}), echo isolation holds", digests.join(" ")))
}

fn brute_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() as f64 - 1.0);
    let i = pos as usize;
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let frac = pos - i as f64;
    sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
}

fn span_suite() -> Outcome {
    let e = HashedBagOfWords::default();
    let s = span_scores("find the triggerman", "find the triggerman", &e).map_err(|e| e.to_string())?;
    close("identity cosine", s.cosine_similarity, 1.0, 1e-9)?;
    close("identity exact", s.exact_word_match, 1.0, 0.0)?;
    close("disjoint exact", exact_word_match("fair", "honorable"), 0.0, 0.0)?;
    let gold = "the model could not find the triggerman";
    let pred = "the model could not find the suspect";
    close("6 of 7", exact_word_match(gold, pred), 6.0 / 7.0, 1e-4)?;
    close("6 of 7 rounded", exact_word_match(gold, pred), 0.8571, 1e-4)?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let u: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k: f64 = rng.gen_range(0.1..50.0);
        close("cos(u,u)", cosine(&u, &u).map_err(|e| e.to_string())?, 1.0, 1e-9)?;
        let scaled: Vec<f64> = u.iter().map(|x| x * k).collect();
        let c1 = cosine(&u, &v).map_err(|e| e.to_string())?;
        let c2 = cosine(&scaled, &v).map_err(|e| e.to_string())?;
        close("scale invariance", c2, c1, 1e-9)?;
        // Gram-Schmidt gives an orthogonal partner
        let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        let uu: f64 = u.iter().map(|a| a * a).sum();
        let w: Vec<f64> = v.iter().zip(&u).map(|(b, a)| b - dot / uu * a).collect();
        close("orthogonal", cosine(&u, &w).map_err(|e| e.to_string())?, 0.0, 1e-9)?;
    }

    for _ in 0..100 {
        let n = rng.gen_range(1..60);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s = similarity_summary(&xs).map_err(|e| e.to_string())?;
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            let sq: f64 = xs.iter().map(|x| x * x).sum();
            (sq - n as f64 * mean * mean) / (n as f64 - 1.0)
        } else {
            0.0
        };
        close("mean", s.mean, mean, 1e-9)?;
        close("std", s.std, var.max(0.0).sqrt(), 1e-9)?;
        close("min", s.min, sorted[0], 1e-9)?;
        close("max", s.max, sorted[n - 1], 1e-9)?;
        close("q25", s.q25, brute_quantile(&sorted, 0.25), 1e-9)?;
        close("median", s.median, brute_quantile(&sorted, 0.5), 1e-9)?;
        close("q75", s.q75, brute_quantile(&sorted, 0.75), 1e-9)?;
    }
    Ok("identity, disjoint, 6/7 = 0.8571, cosine properties, 100 summaries".into())
}

/// Two-tailed p for Student's t with 3 degrees of freedom, by Simpson's
/// rule on the density.
fn t3_two_tailed(t: f64) -> f64 {
    let c = 2.0 / (std::f64::consts::PI * 3f64.sqrt());
    let f = |x: f64| c * (1.0 + x * x / 3.0).powi(-2);
    let n = 20_000;
    let h = t.abs() / n as f64;
    let mut s = f(0.0) + f(t.abs());
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    1.0 - 2.0 * s * h / 3.0
}

fn t_test() -> Outcome {
    let z = paired_t_test(&[0.3, 0.7, 0.1], &[0.3, 0.7, 0.1]).map_err(|e| e.to_string())?;
    ensure(z.t == 0.0 && z.p_two_tailed == 1.0, format!("zero case t={} p={}", z.t, z.p_two_tailed))?;
    let a = [1.0, 0.0, 1.0, 1.0];
    let b = [0.0, 0.0, 1.0, 0.0];
    let r = paired_t_test(&a, &b).map_err(|e| e.to_string())?;
    // d = [1,0,0,1]: mean 0.5, sd sqrt(1/3)
    let t_hand = 0.5 / ((1.0f64 / 3.0).sqrt() / 2.0);
    let p_hand = t3_two_tailed(t_hand);
    close("t oracle", r.t, t_hand, 1e-9)?;
    close("p oracle", r.p_two_tailed, p_hand, 1e-6)?;
    close("t", r.t, 1.732, 0.001)?;
    close("p", r.p_two_tailed, 0.182, 0.005)?;
    ensure(r.df == 3, "df")?;
    Ok(format!("t={:.4} df={} p={:.4}", r.t, r.df, r.p_two_tailed))
}

fn augmented_reply(r: &ArgumentRecord, i: usize) -> serde_json::Value {
    let sentence = format!("The new club cannot fill {i} seats, let alone sell out the stadium.");
    json!({
        "verdict": "AF",
        "new_sentence": sentence,
        "correlate": format!("fill {i} seats"),
        "remnant": "sell out the stadium",
        "sentence_type": r.class.code(),
        "logic_category": r.logic.code(),
        "property1": "Number of/amount of",
        "property2": "Size",
        "topic": "Home improvement",
        "new_topic": "Sports",
        "short_explanation": "Filling a few seats is easier than selling out the stadium.",
        "long_explanation": "A few seats is a small number. A stadium is large. Failing the first implies failing the second.",
    })
}

fn analyses(records: &[ArgumentRecord]) -> Result<Vec<(ArgumentRecord, InterpretationResult)>, String> {
    let p = common::scripted_pipeline(common::analysis_script(records));
    Ok(records
        .iter()
        .map(|r| (r.clone(), p.interpret(r, Regime::WithoutExternalInfo, Mode::Forced)))
        .collect())
}

fn augmentation() -> Outcome {
    let records: Vec<ArgumentRecord> = common::fixture_records().into_iter().filter(|r| r.is_a_fortiori).collect();
    let items = analyses(&records)?;
    let mut script = common::analysis_script(&records);
    for (i, r) in records.iter().enumerate() {
        script = script.record(format!("augmentation:{}", r.id), augmented_reply(r, i + 2));
    }
    let p = common::scripted_pipeline(script);
    let topics = TopicMap::builtin();
    let run = augment_corpus(&p, &topics, &items, AugmentationStrategy::Novel, &GenerationQuota::default(), 3)
        .map_err(|e| e.to_string())?;
    ensure(run.failures.is_empty(), format!("failures: {:?}", run.failures))?;
    ensure(run.records.len() == records.len(), "missing outputs")?;
    for (out, (src, analysis)) in run.records.iter().zip(&items) {
        ensure(out.contains_let_alone && out.text.contains("let alone"), format!("{}: no let alone", out.id))?;
        ensure(
            out.class == analysis.sentence_type && out.logic == analysis.logic_category && out.class == src.class,
            format!("{}: labels changed", out.id),
        )?;
        ensure(out.flags.is_empty(), format!("{}: flags {:?}", out.id, out.flags))?;
    }

    // similar-semantic request that wandered from a racing game to a concert
    let mario = ArgumentRecord::new(
        "mk",
        "Mario Cart will give me so much stress already let alone being on the damn road.",
    )
    .with_span_text("Mario Cart", "being on the damn road")
    .with_labels(SentenceType::RE, LogicCategory::NS);
    let mk_items = analyses(std::slice::from_ref(&mario))?;
    let piano = json!({
        "verdict": "AF",
        "new_sentence": "Playing the piano for a concert requires a lot of practice, let alone performing in front of a large audience.",
        "correlate": "Playing the piano for a concert",
        "remnant": "performing in front of a large audience",
        "sentence_type": "RE",
        "logic_category": "NS",
        "property1": "Difficulty",
        "property2": "Pressure",
        "topic": "Mario Kart",
        "new_topic": "Piano concert",
        "short_explanation": "Practising is less demanding than performing.",
        "long_explanation": "Practice is private. Performing adds an audience.",
    });
    let parsed = parse_structured_output(&piano.to_string(), Task::Augmentation, &refusals()).map_err(|e| e.to_string())?;
    let rec = build_record(&mario, &mk_items[0].1, AugmentationStrategy::SimilarSemantic, parsed, &topics);
    ensure(rec.flags.contains(&ConformanceFlag::TopicDrift), format!("flags {:?}", rec.flags))?;

    let fixture = diversity_fixture(&topics)?;
    let originals: Vec<String> = fixture.iter().map(|a| a.original_topic.clone()).collect();
    let report = diversity_report(&originals, &fixture, &topics);
    let brute = brute_diversity(&originals, &fixture, &topics);
    ensure(
        (report.items, report.unique_raw_topics, report.unique_new_topics, report.same_topics, report.emergent_topics, report.let_alone)
            == brute,
        format!("report {report:?} vs recount {brute:?}"),
    )?;
    Ok(format!(
        "{} novel outputs conform, topic drift flagged, diversity {:?}",
        run.records.len(),
        brute
    ))
}

fn refusals() -> Vec<String> {
    DEFAULT_REFUSAL_PHRASES.iter().map(|s| s.to_string()).collect()
}

fn diversity_fixture(topics: &TopicMap) -> Result<Vec<AugmentedRecord>, String> {
    let pairs = [
        ("politics", "sports"),
        ("Politics", "Mario Kart"),
        ("piano", "politics"),
        ("economy", "zzqx"),
        ("sports", "sports"),
        ("health", "medicine"),
        ("war", "music"),
        ("technology", "gaming"),
        ("religion", "education"),
        ("crime", "law"),
        ("environment", "weather"),
        ("Economy", "finance"),
        ("travel", "food"),
        ("family", "relationships"),
        ("science", "space"),
        ("history", "history"),
        ("unknownish", "qqq"),
        ("sports", "concert"),
        ("education", "school"),
        ("media", "film"),
    ];
    let src = ArgumentRecord::new("src", "They cannot sweep the porch, let alone paint the house.")
        .with_span_text("sweep the porch", "paint the house")
        .with_labels(SentenceType::RE, LogicCategory::NS);
    let analysis = analyses(std::slice::from_ref(&src))?.remove(0).1;
    let mut out = Vec::new();
    for (i, (old, new)) in pairs.iter().enumerate() {
        let sentence = if i % 3 == 0 {
            format!("Case {i} cannot start, much less finish.")
        } else {
            format!("Case {i} cannot start, let alone finish.")
        };
        let reply = json!({
            "verdict": "AF", "new_sentence": sentence, "correlate": "start", "remnant": "finish",
            "sentence_type": "RE", "logic_category": "NS", "topic": old, "new_topic": new,
            "short_explanation": "Starting is easier than finishing.", "long_explanation": "x.",
        });
        let parsed = parse_structured_output(&reply.to_string(), Task::Augmentation, &refusals()).map_err(|e| e.to_string())?;
        let mut rec = build_record(&src, &analysis, AugmentationStrategy::Novel, parsed, topics);
        rec.id = format!("d{i}").into();
        out.push(rec);
    }
    Ok(out)
}

fn brute_diversity(originals: &[String], aug: &[AugmentedRecord], map: &TopicMap) -> (usize, usize, usize, usize, usize, usize) {
    let mut raw: Vec<String> = Vec::new();
    for o in originals {
        let k = o.trim().to_lowercase();
        if !raw.contains(&k) {
            raw.push(k);
        }
    }
    let mut orig_norm: Vec<String> = Vec::new();
    for o in originals {
        let k = map.normalize(o);
        if !orig_norm.contains(&k) {
            orig_norm.push(k);
        }
    }
    let mut new_norm: Vec<String> = Vec::new();
    let mut same = 0;
    let mut let_alone = 0;
    for a in aug {
        let k = map.normalize(&a.new_topic);
        if map.normalize(&a.original_topic) == k {
            same += 1;
        }
        if !new_norm.contains(&k) {
            new_norm.push(k);
        }
        let words: Vec<String> = a
            .text
            .split_whitespace()
            .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
            .collect();
        if words.windows(2).any(|w| w[0] == "let" && w[1] == "alone") {
            let_alone += 1;
        }
    }
    let emergent = new_norm.iter().filter(|k| !orig_norm.contains(k)).count();
    (aug.len(), raw.len(), new_norm.len(), same, emergent, let_alone)
}

/// Store shaped to the published property-quality table (with-info column).
fn table_shaped_store() -> (Vec<JudgmentRecord>, Vec<afortiori::corpus::RecordId>) {
    let items: Vec<afortiori::corpus::RecordId> = (1..=100).map(afortiori::corpus::RecordId::from).collect();
    // (novel, relevant) of the second property for items 55..=100
    let mut second: Vec<(bool, bool)> = Vec::new();
    second.extend(std::iter::repeat_n((false, false), 4));
    second.extend(std::iter::repeat_n((false, true), 24));
    second.extend(std::iter::repeat_n((true, false), 20));
    let mut plan: BTreeMap<usize, Vec<(Target, bool, bool)>> = BTreeMap::new();
    for i in 1..=54 {
        plan.insert(i, vec![(Target::Property1, true, true)]);
    }
    for (k, i) in (55..=94).enumerate() {
        let (n, r) = second[k];
        plan.insert(i, vec![(Target::Property1, true, true), (Target::Property2, n, r)]);
    }
    // the remaining eight: two items with both properties, four with one
    let rest = &second[40..];
    plan.insert(95, vec![(Target::Property1, rest[0].0, rest[0].1), (Target::Property2, rest[1].0, rest[1].1)]);
    plan.insert(96, vec![(Target::Property1, rest[2].0, rest[2].1), (Target::Property2, rest[3].0, rest[3].1)]);
    for (j, i) in (97..=100).enumerate() {
        let (n, r) = rest[4 + j];
        plan.insert(i, vec![(Target::Property1, n, r)]);
    }

    let mut store = Vec::new();
    let stamp = "1970-01-01T00:00:00Z".to_string();
    let rec = |who: &str, item: usize, target, criterion, value, version| JudgmentRecord {
        annotator: who.into(),
        item_id: item.into(),
        target,
        criterion,
        value,
        version,
        timestamp: stamp.clone(),
    };
    for (item, props) in &plan {
        for (target, n, r) in props {
            for who in ["a", "b", "c"] {
                // c dissents on every third item, outvoted by a and b
                let flip = who == "c" && item % 3 == 0;
                for (criterion, v) in [(Criterion::Novelty, *n), (Criterion::Relevance, *r)] {
                    if who == "a" && item % 5 == 0 {
                        // superseded first answer
                        store.push(rec(who, *item, *target, criterion, !v, 1));
                        store.push(rec(who, *item, *target, criterion, v, 2));
                    } else {
                        store.push(rec(who, *item, *target, criterion, v ^ flip, 1));
                    }
                }
            }
        }
    }
    (store, items)
}

fn judgment_oracle() -> Outcome {
    let (store, items) = table_shaped_store();
    let s = judgment_aggregate(&store, &items).properties;

    // recount: latest version per key, then majority per unit
    let mut latest: BTreeMap<(String, String, Target, Criterion), (u32, bool)> = BTreeMap::new();
    for r in &store {
        let k = (r.annotator.clone(), r.item_id.to_string(), r.target, r.criterion);
        let e = latest.entry(k).or_insert((0, false));
        if r.version >= e.0 {
            *e = (r.version, r.value);
        }
    }
    let mut votes: BTreeMap<(String, Target, Criterion), (usize, usize)> = BTreeMap::new();
    for ((_, item, t, c), (_, v)) in &latest {
        let e = votes.entry((item.clone(), *t, *c)).or_insert((0, 0));
        e.0 += usize::from(*v);
        e.1 += 1;
    }
    let yes = |item: &str, t, c| votes.get(&(item.to_string(), t, c)).map(|(y, n)| 2 * y > *n);
    let (mut nr, mut rel, mut nov, mut nei, mut all, mut one, mut all_nei) = (0, 0, 0, 0, 0, 0, 0);
    for item in &items {
        let id = item.to_string();
        let mut judged = 0;
        let mut good = 0;
        let mut positive = false;
        for t in [Target::Property1, Target::Property2] {
            if let (Some(n), Some(r)) = (yes(&id, t, Criterion::Novelty), yes(&id, t, Criterion::Relevance)) {
                judged += 1;
                positive |= n || r;
                match (n, r) {
                    (true, true) => {
                        nr += 1;
                        good += 1
                    }
                    (false, true) => rel += 1,
                    (true, false) => nov += 1,
                    (false, false) => nei += 1,
                }
            }
        }
        all += usize::from(judged > 0 && good == judged);
        one += usize::from(good > 0);
        all_nei += usize::from(judged > 0 && !positive);
    }
    let got = (
        s.novel_and_relevant,
        s.relevant_not_novel,
        s.novel_not_relevant,
        s.neither,
        s.sentences_all_novel_relevant,
        s.sentences_at_least_one_novel_relevant,
        s.sentences_all_neither,
    );
    ensure(got == (nr, rel, nov, nei, all, one, all_nei), format!("aggregate {got:?} vs recount {:?}", (nr, rel, nov, nei, all, one, all_nei)))?;
    ensure(got == (94, 24, 20, 4, 54, 94, 0), format!("aggregate {got:?}"))?;
    ensure(s.properties == 200 && s.sentences == 100, "denominators")?;
    Ok("94/200, 24/200, 20/200, 4/200; sentences 54/100 and 94/100".into())
}

fn live_run() -> Outcome {
    if std::env::var("AFORTIORI_LIVE").map(|v| v != "1").unwrap_or(true) {
        return Err("skip".into());
    }
    let provider = OpenAiProvider::from_env(Duration::from_secs(120)).map_err(|e| e.to_string())?;
    let p = common::pipeline_with(Arc::new(provider));
    let records: Vec<ArgumentRecord> = synthetic_records()?.into_iter().step_by(20).take(50).collect();
    ensure(records.len() >= 50, "fewer than 50 records")?;
    let ids: Vec<_> = records.iter().map(|r| p.identify(r, true)).collect();
    let gold: Vec<Verdict> = records.iter().map(|r| if r.is_a_fortiori { Verdict::AF } else { Verdict::NAF }).collect();
    let pred: Vec<Verdict> = ids.iter().map(|r| r.verdict).collect();
    let m = confusion_matrix(&gold, &pred).map_err(|e| e.to_string())?;
    let metrics = identification_metrics(&m, RecallConvention::ExcludeUnknownPredictions);
    println!("{}", render_identification(&[("live, with examples", &metrics)]));
    let run = p
        .run_corpus(&records, Regime::WithoutExternalInfo, Mode::Forced, 4)
        .map_err(|e| e.to_string())?;
    let e = HashedBagOfWords::default();
    let mut cos = Vec::new();
    for res in &run.results {
        let r = records.iter().find(|r| r.id == res.record_id).expect("record");
        if let (Some(g), Some(pc)) = (r.correlate(), res.correlate.as_deref()) {
            cos.push(span_scores(g, pc, &e).map_err(|e| e.to_string())?.cosine_similarity);
        }
    }
    let stats = similarity_summary(&cos).map_err(|e| e.to_string())?;
    println!("{}", render_similarity(&[("correlate cosine", &stats)]));
    let ids: Vec<_> = records.iter().map(|r| r.id.clone()).collect();
    let q = judgment_aggregate(&[], &ids).properties;
    println!("{}", render_property_quality(&[("live run (unjudged)", &q)]));
    Ok(format!("{} records, reports rendered", records.len()))
}

fn budget_guard() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 200,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (0usize..6000, 1usize..6000, 0usize..3000, 1000usize..12000);
    let result = runner.run(&strategy, |(role_len, input_len, reserve, window)| {
        let mut kit = PromptKit::default();
        kit.assets.bodies.insert("role".into(), "r".repeat(role_len));
        let text = "w".repeat(input_len);
        let record = ArgumentRecord::new(1, text.clone());
        // template size measured without any budget
        kit.config = PromptConfig { window: usize::MAX / 2, reserve_out: 0, seed: 13 };
        let open = kit
            .interpretation(&record, Regime::WithoutExternalInfo, Mode::Forced)
            .expect("unbounded assembly");
        let template_chars = open.rendered.chars().count() - text.chars().count();
        let need = template_chars.div_ceil(4) + input_len.div_ceil(4) + reserve;
        prop_assert_eq!(open.token_estimate, template_chars.div_ceil(4));
        prop_assert_eq!(open.input_estimate, estimate_tokens(&text));

        kit.config = PromptConfig { window, reserve_out: reserve, seed: 13 };
        match kit.interpretation(&record, Regime::WithoutExternalInfo, Mode::Forced) {
            Ok(b) => {
                prop_assert!(need <= window, "accepted {need} > {window}");
                prop_assert!(b.rendered.contains(&text), "input truncated");
                prop_assert!(b.rendered.contains(&"r".repeat(role_len)), "section truncated");
                prop_assert_eq!(b.rendered, open.rendered);
            }
            Err(PromptError::Budget { over, .. }) => {
                prop_assert!(need > window, "refused {need} <= {window}");
                prop_assert_eq!(over, need - window);
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    Ok("200 random cases, accepted iff estimate + input + reserve <= window".into())
}

fn main() {
    type Check = (&'static str, fn() -> Outcome);
    let criteria: Vec<Check> = vec![
        ("metric oracle vs published matrices", metric_oracle),
        ("stratified sampler", stratified_sampler),
        ("corpus invariant", corpus_invariant),
        ("end-to-end determinism and isolation", end_to_end_determinism),
        ("span-score property suite", span_suite),
        ("paired t-test", t_test),
        ("augmentation conformance", augmentation),
        ("judgment aggregation oracle", judgment_oracle),
        ("live run (non-reproducible results)", live_run),
        ("budget guard", budget_guard),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(e) if e == "skip" => println!("SKIP  {name}: set AFORTIORI_LIVE=1 and OPENAI_API_KEY to run"),
            Err(e) => {
                failed += 1;
                println!("FAIL  {name}: {e}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

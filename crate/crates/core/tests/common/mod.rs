//! Shared fixtures: a synthetic corpus with the published class x logic
//! distribution, scripted replies and judgment stores.
#![allow(dead_code)]

use std::sync::Arc;

use afortiori::backend::{Backend, GenerationParams, GenerationProvider, RetryPolicy, Script, ScriptedProvider};
use afortiori::clock::FixedClock;
use afortiori::corpus::ArgumentRecord;
use afortiori::pipeline::Pipeline;
use afortiori::prompt_kit::PromptKit;
use afortiori::{LogicCategory, SentenceType};
use serde_json::{json, Value};

/// Published distribution, `GRID[logic][class]`, classes RE PC QU SP Undefined.
pub const GRID: [[usize; 5]; 5] = [
    [373, 225, 20, 113, 0],
    [40, 0, 103, 1, 0],
    [33, 10, 6, 6, 0],
    [32, 0, 18, 0, 0],
    [0, 0, 0, 0, 50],
];

/// NAF rows among the RE/NS cell, on top of the 50 undefined rows.
pub const EXTRA_NAF: usize = 14;

pub const LOGIC_CODES: [&str; 5] = ["NS", "NR", "PR", "PS", "Undefined"];
pub const CLASS_CODES: [&str; 5] = ["RE", "PC", "QU", "SP", "Undefined"];

const VERBS: [(&str, &str); 4] = [
    ("repair", "rebuild"),
    ("feed", "house"),
    ("read", "translate"),
    ("walk", "run"),
];

/// One synthetic sentence with character offsets of its spans.
pub struct SyntheticRow {
    pub id: usize,
    pub text: String,
    pub correlate: String,
    pub remnant: String,
    pub naf: bool,
    pub logic: &'static str,
    pub class: &'static str,
}

pub fn synthetic_rows() -> Vec<SyntheticRow> {
    let mut rows = Vec::new();
    let mut id = 0;
    let mut naf_left = EXTRA_NAF;
    for (li, logic) in LOGIC_CODES.iter().enumerate() {
        for (ci, class) in CLASS_CODES.iter().enumerate() {
            for _ in 0..GRID[li][ci] {
                id += 1;
                let (a, b) = VERBS[id % VERBS.len()];
                let correlate = format!("{a} unit {id}");
                let remnant = format!("{b} depot {id}");
                let text = format!("Crew {id} can hardly {correlate} this week, let alone {remnant} next month.");
                let undefined = *logic == "Undefined";
                let naf = undefined || (li == 0 && ci == 0 && naf_left > 0 && {
                    naf_left -= 1;
                    true
                });
                rows.push(SyntheticRow {
                    id,
                    text,
                    correlate,
                    remnant,
                    naf,
                    logic,
                    class,
                });
            }
        }
    }
    rows
}

/// Character offsets of `needle` in `text`, computed by hand.
fn offsets(text: &str, needle: &str) -> (usize, usize) {
    let byte = text.find(needle).expect("span present");
    let start = text[..byte].chars().count();
    (start, start + needle.chars().count())
}

/// Tab-separated corpus in the thirteen-column layout plus an `id` column.
pub fn synthetic_tsv() -> String {
    let mut out = String::from(
        "id\ttext\tcor_start\tcor_end\trem_start\trem_end\tNAF\tprop1\tprop2\tlogic\tclass\tmetaphor\tadditive\tcomment\n",
    );
    for r in synthetic_rows() {
        let (cs, ce) = offsets(&r.text, &r.correlate);
        let (rs, re) = offsets(&r.text, &r.remnant);
        let naf = if r.naf { "Yes" } else { "No" };
        let (p1, p2) = if r.naf { ("", "") } else { ("Effort", "Scale") };
        out.push_str(&format!(
            "{}\t{}\t{cs}\t{ce}\t{rs}\t{re}\t{naf}\t{p1}\t{p2}\t{}\t{}\tNo\tNo\t\n",
            r.id, r.text, r.logic, r.class
        ));
    }
    out
}

/// Ten annotated records whose properties are unique tokens that occur
/// nowhere in the prompt assets.
pub fn fixture_records() -> Vec<ArgumentRecord> {
    let types = [
        (SentenceType::RE, LogicCategory::NS),
        (SentenceType::PC, LogicCategory::NS),
        (SentenceType::QU, LogicCategory::NR),
        (SentenceType::SP, LogicCategory::PR),
        (SentenceType::RE, LogicCategory::PS),
    ];
    (1..=10)
        .map(|i| {
            let text = format!("Volunteer {i} could not sweep the porch, let alone paint the whole house {i}.");
            let (class, logic) = types[i % types.len()];
            let mut r = ArgumentRecord::new(i, text)
                .with_span_text("sweep the porch", &format!("paint the whole house {i}"))
                .with_labels(class, logic)
                .with_properties(Some(&format!("qzxgoldprop{i}a")), Some(&format!("qzxgoldprop{i}b")));
            if i == 10 {
                r = r.not_a_fortiori();
            }
            r
        })
        .collect()
}

/// A well-formed interpretation reply for `r`.
pub fn analysis_reply(r: &ArgumentRecord) -> Value {
    let verdict = if r.is_a_fortiori { "AF" } else { "NAF" };
    json!({
        "verdict": verdict,
        "correlate": r.correlate(),
        "remnant": r.remnant(),
        "correlate_more_likely": true,
        "likelihood_rationale": "The first action takes less effort than the second.",
        "sentence_type": r.class.code(),
        "logic_category": r.logic.code(),
        "property1": "Effort",
        "property2": "Scale",
        "short_explanation": "Sweeping the porch takes less effort than painting the house.",
        "long_explanation": "Sweeping is a small job. Painting a house is a large one. Failing the small job implies failing the large one.",
    })
}

pub fn analysis_script(records: &[ArgumentRecord]) -> Script {
    records.iter().fold(Script::default(), |s, r| {
        s.record(format!("interpretation:{}", r.id), analysis_reply(r))
    })
}

pub fn pipeline_with(provider: Arc<dyn GenerationProvider>) -> Pipeline {
    let clock = Arc::new(FixedClock::default());
    let backend = Backend::new(provider)
        .with_retry(RetryPolicy::default().no_delay())
        .with_clock(clock.clone());
    Pipeline::new(PromptKit::default(), backend, GenerationParams::default()).with_clock(clock)
}

pub fn scripted_pipeline(script: Script) -> Pipeline {
    pipeline_with(Arc::new(ScriptedProvider::new(script)))
}

//! Fixture files for driving the binary.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use afortiori::corpus::{to_jsonl, ArgumentRecord, EvaluationSet, RecordId};
use afortiori::{LogicCategory, SentenceType};
use serde_json::{json, Value};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_afortiori"));
    c.env_remove("OPENAI_API_KEY").env_remove("AFORTIORI_CAMPAIGN_TOKEN").env_remove("LANGUAGETOOL_URL");
    c
}

pub fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn run_err(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    out
}

/// The single stderr line, parsed.
pub fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Class x logic counts of the published corpus, `[logic][class]`, with
/// classes RE PC QU SP Undefined and logic NS NR PR PS Undefined.
const GRID: [[usize; 5]; 5] = [
    [373, 225, 20, 113, 0],
    [40, 0, 103, 1, 0],
    [33, 10, 6, 6, 0],
    [32, 0, 18, 0, 0],
    [0, 0, 0, 0, 50],
];
const LOGIC: [&str; 5] = ["NS", "NR", "PR", "PS", "Undefined"];
const CLASS: [&str; 5] = ["RE", "PC", "QU", "SP", "Undefined"];

/// Comma-separated corpus with 1,030 rows, 64 of them NAF.
pub fn synthetic_csv() -> String {
    let mut out = String::from("text,cor_start,cor_end,rem_start,rem_end,NAF,prop1,prop2,logic,class,metaphor,additive,comment\n");
    let mut n = 0;
    let mut extra_naf = 14;
    for (li, logic) in LOGIC.iter().enumerate() {
        for (ci, class) in CLASS.iter().enumerate() {
            for _ in 0..GRID[li][ci] {
                n += 1;
                // "Team N cannot " is 12 + digits chars
                let prefix = format!("Team {n} cannot ");
                let cor = format!("lift box {n}");
                let mid = ", let alone ";
                let rem = format!("carry crate {n}");
                let text = format!("{prefix}{cor}{mid}{rem}.");
                let cs = prefix.chars().count();
                let ce = cs + cor.chars().count();
                let rs = ce + mid.chars().count();
                let re = rs + rem.chars().count();
                let naf = *logic == "Undefined" || (li == 0 && ci == 0 && extra_naf > 0 && {
                    extra_naf -= 1;
                    true
                });
                let (flag, p1, p2) = if naf { ("Yes", "", "") } else { ("No", "Weight", "Distance") };
                out.push_str(&format!("\"{text}\",{cs},{ce},{rs},{re},{flag},{p1},{p2},{logic},{class},No,No,\n"));
            }
        }
    }
    out
}

/// Ten annotated records, the last one NAF.
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
            let text = format!("Neighbour {i} could not water the plant, let alone tend the garden {i}.");
            let (class, logic) = types[i % types.len()];
            let mut r = ArgumentRecord::new(i, text)
                .with_span_text("water the plant", &format!("tend the garden {i}"))
                .with_labels(class, logic)
                .with_properties(Some("Effort"), Some("Scale"));
            if i == 10 {
                r = r.not_a_fortiori();
            }
            r
        })
        .collect()
}

pub fn analysis_reply(r: &ArgumentRecord) -> Value {
    json!({
        "verdict": if r.is_a_fortiori { "AF" } else { "NAF" },
        "correlate": r.correlate(),
        "remnant": r.remnant(),
        "correlate_more_likely": true,
        "likelihood_rationale": "Watering one plant is easier than tending a garden.",
        "sentence_type": r.class.code(),
        "logic_category": r.logic.code(),
        "property1": "Effort",
        "property2": "Size",
        "short_explanation": "Watering a plant takes less effort than tending a garden.",
        "long_explanation": "A plant is small. A garden is large. Failing the small task implies failing the large one.",
    })
}

/// Mock script covering interpretation and identification of the fixture.
pub fn fixture_script(records: &[ArgumentRecord]) -> Value {
    let mut by_record = serde_json::Map::new();
    for r in records {
        by_record.insert(format!("interpretation:{}", r.id), analysis_reply(r));
        let v = if r.is_a_fortiori { "AF" } else { "NAF" };
        by_record.insert(format!("identification:{}", r.id), json!({ "verdict": v }));
    }
    json!({ "by_record": by_record })
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
    pub corpus: PathBuf,
    pub script: PathBuf,
}

impl Workspace {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let records = fixture_records();
        let corpus = dir.path().join("fixture.jsonl");
        std::fs::write(&corpus, to_jsonl(&records)).unwrap();
        let script = dir.path().join("run1.json");
        std::fs::write(&script, fixture_script(&records).to_string()).unwrap();
        Workspace { dir, corpus, script }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Mock interpretation run into `name`.
    pub fn run(&self, name: &str, regime: &str, mode: &str) -> PathBuf {
        let out = self.path(name);
        run_ok(&[
            "run",
            "--provider",
            "mock",
            "--script",
            p(&self.script),
            "--corpus",
            p(&self.corpus),
            "--regime",
            regime,
            "--mode",
            mode,
            "--output",
            p(&out),
        ]);
        out
    }

    /// Evaluation set holding every fixture record.
    pub fn evalset(&self) -> PathBuf {
        let mut ids: Vec<RecordId> = fixture_records().into_iter().map(|r| r.id).collect();
        ids.sort();
        let set = EvaluationSet {
            record_ids: ids,
            seed: 1,
            per_class_quota: 2,
            per_combo_target: 1,
        };
        let art = afortiori_cli::commands::EvalSetArtifact {
            header: afortiori_cli::artifact::Header::new("evaluation-set", "fixture"),
            evaluation_set_id: afortiori::annotation::evaluation_set_id(&set),
            corpus_digest: String::new(),
            set,
        };
        let path = self.path("evalset.json");
        std::fs::write(&path, serde_json::to_string(&art).unwrap()).unwrap();
        path
    }

    /// Campaign `pilot` in `<tmp>/campaigns`, built from a forced run.
    pub fn campaign(&self, annotators: &str) -> PathBuf {
        let run = self.run("pilot-run", "without-info", "forced");
        let dir = self.path("campaigns");
        run_ok(&[
            "campaign",
            "create",
            "--dir",
            p(&dir),
            "--id",
            "pilot",
            "--evalset",
            p(&self.evalset()),
            "--run",
            p(&run),
            "--annotators",
            annotators,
        ]);
        dir
    }
}
